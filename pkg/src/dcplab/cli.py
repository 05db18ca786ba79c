"""Seeded experiment runner.

Every run is fully determined by (config, seed); reports are JSON with the
deterministic payload under "results" and timing under "meta".  Exit codes:
0 success, 1 criterion failed, 2 usage, 3 internal contract violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

import numpy as np

from . import __version__
from .dcp import DcpConfig, EstimationFailedError, solve_dcp, verify_candidate
from .geometry import (
    BallGridSpec,
    boundary_layer_fraction,
    count_vs_volume_error,
    grid_intersection_ratio,
    grid_points_in_ball,
    grover_rudolph_prepare,
    lens_ratio,
)
from .lattice import LatticeInstance, gen_unique_lattice, norm2, reduce_instance
from .matching import MatchingDesc, check_pair_density, eval_matching
from .rng import stream
from .subsetsum import (
    ExhaustiveOracle,
    MeetInMiddleOracle,
    OracleContractError,
    default_r,
    estimate_legal_fraction,
    s_of_a,
    wrap_unreliable,
)
from .svp import SvpConfig, solve_unique_svp
from .worlds import StructuralViolationError, WorldContractError, make_world

INTERNAL_ERRORS = (StructuralViolationError, WorldContractError, OracleContractError)


def _oracle_from_name(name: str, seed: int = 0):
    if name == "exhaustive":
        return ExhaustiveOracle()
    if name == "mitm":
        return MeetInMiddleOracle()
    if name.startswith("unreliable:"):
        return wrap_unreliable(ExhaustiveOracle(), float(name.split(":", 1)[1]), seed=seed)
    raise argparse.ArgumentTypeError(f"unknown oracle {name!r}")


def emit_report(args, results: dict, wall: float) -> dict:
    report = {
        "command": args.command,
        "version": __version__,
        "seed": args.seed,
        "config": {
            k: v for k, v in sorted(vars(args).items())
            if k not in ("func", "out", "csv", "config") and v is not None
        },
        "results": results,
        "meta": {"wall_time_s": round(wall, 3)},
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return report


def _map_trials(fn, n_trials: int, threads: int):
    if threads <= 1:
        return [fn(i) for i in range(n_trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n_trials)))


def cmd_gen_lattice(args) -> tuple[dict, int]:
    inst = gen_unique_lattice(
        args.n, args.gap, coeff_budget=args.coeff_budget, seed=args.seed
    )
    payload = json.loads(inst.to_json())
    if args.instance_out:
        with open(args.instance_out, "w") as fh:
            fh.write(inst.to_json() + "\n")
    return {"instance": payload}, 0


def cmd_solve_dcp(args) -> tuple[dict, int]:
    cfg = DcpConfig(samples_per_arm=args.samples, k_max=args.k_max)

    def one(trial: int):
        world = make_world(
            args.N, d=args.d, bad_prob=args.bad_prob, seed=args.seed * 1000 + trial
        )
        oracle = _oracle_from_name(args.oracle, seed=args.seed)
        rng = stream(args.seed, "dcp-trial", trial)
        try:
            res = solve_dcp(world, oracle, cfg, rng)
        except EstimationFailedError as err:
            return {"trial": trial, "ok": False, "error": str(err)}
        true_d = world.reveal_secret()
        hit = true_d in res.candidates
        verified = bool(res.candidates) and verify_candidate(
            world, oracle, res.candidates[0], cfg, rng
        )
        return {
            "trial": trial,
            "ok": hit,
            "verified": verified,
            "transcript": res.transcript(),
        }

    rows = _map_trials(one, args.trials, args.threads)
    rate = sum(r["ok"] for r in rows) / max(1, len(rows))
    results = {"trials": rows, "success_rate": rate}
    return results, 0 if rate > 0 else 1


def cmd_solve_svp(args) -> tuple[dict, int]:
    if args.instance:
        with open(args.instance) as fh:
            inst = LatticeInstance.from_json(fh.read())
    else:
        inst = gen_unique_lattice(args.n, args.gap, seed=args.seed)
    u_hint = max(abs(int(x)) for x in reduce_instance(inst).planted_u) if inst.planted_u else 1
    cfg = SvpConfig(
        p=args.p, M=args.M, cub_factor=args.cub_factor, mode=args.mode,
        u_max_hint=u_hint,
        dcp=DcpConfig(samples_per_arm=args.samples, starve_probe=1024),
    )

    def one(trial: int):
        rng = stream(args.seed, "svp-trial", trial)
        res = solve_unique_svp(inst, cfg, rng)
        row = {"trial": trial, "manifest": res.manifest()}
        if inst.planted_u is not None:
            u = inst.planted_vector()
            row["winner_is_planted"] = res.winner in (u, tuple(-x for x in u))
        return row

    rows = _map_trials(one, args.trials, args.threads)
    results = {"instance": json.loads(inst.to_json()), "trials": rows}
    if inst.planted_u is not None:
        rate = sum(r["winner_is_planted"] for r in rows) / max(1, len(rows))
        results["planted_recovery_rate"] = rate
        return results, 0 if rate > 0 else 1
    return results, 0


def cmd_subsetsum_stats(args) -> tuple[dict, int]:
    n_mod = args.N
    base_r = max(1, math.ceil(math.log2(n_mod)))
    table = []
    for r in range(base_r + 1, base_r + 7):
        est = estimate_legal_fraction(r, n_mod, args.trials, seed=args.seed + r)
        table.append({"r": r, "no_solution_fraction": est.fraction, "hw95": est.half_width_95})
    rng = stream(args.seed, "sa-sizes")
    ex = ExhaustiveOracle()
    sizes = []
    for _ in range(20):
        A = tuple(int(x) for x in rng.integers(0, n_mod, default_r(n_mod)))
        sizes.append(s_of_a(ex, A, n_mod)[1])
    mitm = MeetInMiddleOracle()
    agree = 0
    checks = 200
    for _ in range(checks):
        A = tuple(int(x) for x in rng.integers(0, n_mod, 10))
        t = int(rng.integers(0, n_mod))
        agree += ex.solve(A, t, n_mod) == mitm.solve(A, t, n_mod)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("r,no_solution_fraction,hw95\n")
            for row in table:
                fh.write(f"{row['r']},{row['no_solution_fraction']},{row['hw95']}\n")
    results = {
        "legal_fraction_table": table,
        "s_of_a_sizes": sizes,
        "oracle_agreement": {"checked": checks, "agreed": agree},
    }
    ok = all(row["no_solution_fraction"] <= 0.5 for row in table) and agree == checks
    return results, 0 if ok else 1


def cmd_matching_stats(args) -> tuple[dict, int]:
    n_mod = args.N
    violations = 0
    for q in range(1, args.qmax + 1):
        for kind in (1, 2):
            desc = MatchingDesc(kind, q, n_mod)
            for t in range(n_mod):
                ft = eval_matching(desc, t)
                if ft is None:
                    continue
                if abs(ft - t) != q or eval_matching(desc, ft) != t:
                    violations += 1
    rng = stream(args.seed, "pair-density")
    density = []
    for s in (2, 4, 8):
        worst = None
        for _ in range(args.trials):
            member = np.zeros(n_mod, dtype=bool)
            member[rng.choice(n_mod, n_mod // s + 1, replace=False)] = True
            _, count = check_pair_density(member, q=1, s=s)
            worst = count if worst is None else min(worst, count)
        density.append({"s": s, "worst_count": worst, "bound": n_mod / (32 * s**3)})
    results = {"involution_violations": violations, "pair_density": density}
    ok = violations == 0 and all(row["worst_count"] >= row["bound"] for row in density)
    return results, 0 if ok else 1


def cmd_geometry_check(args) -> tuple[dict, int]:
    rows = []
    for R in args.radii:
        spec = BallGridSpec(2, R, args.L)
        count = grid_points_in_ball(spec).shape[0]
        rel, tol = count_vs_volume_error(count, 2, R, args.L)
        for d in ((1, 0), (1, 1), (2, 0)):
            dn = math.sqrt(d[0] ** 2 + d[1] ** 2)
            if dn > 2 * R:
                continue
            grid = grid_intersection_ratio(spec, d)
            lens = lens_ratio(R, dn)
            rows.append(
                {
                    "n": 2, "R": R, "L": args.L, "d_norm": dn,
                    "grid_ratio": grid, "lens_ratio": lens,
                    "count_rel_err": rel, "count_tol": tol,
                }
            )
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("n,R,L,d_norm,grid_ratio,lens_ratio,count_rel_err,count_tol\n")
            for r in rows:
                fh.write(
                    f"{r['n']},{r['R']},{r['L']},{r['d_norm']},{r['grid_ratio']},"
                    f"{r['lens_ratio']},{r['count_rel_err']},{r['count_tol']}\n"
                )
    ok = all(
        abs(r["grid_ratio"] - r["lens_ratio"]) <= 0.02 and r["count_rel_err"] < r["count_tol"]
        for r in rows
    )
    return {"rows": rows}, 0 if ok else 1


def cmd_prepare_state(args) -> tuple[dict, int]:
    spec = BallGridSpec(args.n, args.R, args.L)
    prep = grover_rudolph_prepare(spec, target_accuracy=args.accuracy)
    layer, bound = boundary_layer_fraction(spec)
    results = {
        "qubits": prep.tree.K,
        "first_split": list(prep.first_split),
        "distance_to_target": prep.distance_to_target,
        "distance_to_grid_uniform": prep.distance_to_grid_uniform,
        "boundary_layer_fraction": layer,
        "boundary_layer_bound": bound,
    }
    ok = prep.distance_to_target <= 0.01 and tuple(prep.first_split) == (0.5, 0.5)
    return results, 0 if ok else 1


def cmd_selftest(args) -> tuple[dict, int]:
    checks = {}
    # subset-sum lemma, small
    est = estimate_legal_fraction(default_r(256), 256, 200, seed=args.seed)
    checks["legal_fraction"] = est.fraction <= 0.5
    # matching involution, small
    desc = MatchingDesc(1, 3, 256)
    checks["involution"] = all(
        eval_matching(desc, eval_matching(desc, t)) == t
        for t in range(256)
        if eval_matching(desc, t) is not None
    )
    # coset solve, small clean world
    world = make_world(256, d=171, bad_prob=0.0, seed=args.seed)
    rng = stream(args.seed, "selftest-dcp")
    res = solve_dcp(world, ExhaustiveOracle(), DcpConfig(samples_per_arm=96), rng)
    checks["dcp_small"] = 171 in res.candidates
    # geometry lens vs grid
    checks["geometry"] = (
        abs(grid_intersection_ratio(BallGridSpec(2, 4, 8), (1, 0)) - lens_ratio(4, 1)) <= 0.02
    )
    # state preparation
    prep = grover_rudolph_prepare(BallGridSpec(2, 3, 8))
    checks["prepare"] = prep.distance_to_target <= 0.01 and prep.first_split == (0.5, 0.5)
    ok = all(checks.values())
    return {"checks": checks}, 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dcplab", description=__doc__)
    ap.add_argument("--config", help="JSON file with default flag values")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=1)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("gen-lattice", help="generate a certified planted instance")
    common(p)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--gap", type=int, default=8)
    p.add_argument("--coeff-budget", type=int, default=2000)
    p.add_argument("--instance-out", help="also write the bare instance JSON here")
    p.set_defaults(func=cmd_gen_lattice)

    p = sub.add_parser("solve-dcp", help="recover the coset offset in a random world")
    common(p)
    p.add_argument("--N", type=int, default=4096)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--bad-prob", type=float, default=None)
    p.add_argument("--oracle", default="exhaustive")
    p.add_argument("--samples", type=int, default=192)
    p.add_argument("--k-max", type=int, default=16)
    p.set_defaults(func=cmd_solve_dcp)

    p = sub.add_parser("solve-svp", help="full pipeline on a planted instance")
    common(p)
    p.add_argument("--instance", help="instance JSON path")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--gap", type=int, default=64)
    p.add_argument("--mode", choices=("cube", "ball"), default="cube")
    p.add_argument("--p", type=int, default=59)
    p.add_argument("--M", type=int, default=64)
    p.add_argument("--cub-factor", type=float, default=20.0)
    p.add_argument("--samples", type=int, default=96)
    p.set_defaults(func=cmd_solve_svp)

    p = sub.add_parser("subsetsum-stats", help="legal-fraction and oracle batteries")
    common(p)
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--csv", help="CSV table output path")
    p.set_defaults(func=cmd_subsetsum_stats, trials=300)

    p = sub.add_parser("matching-stats", help="involution and pair-density batteries")
    common(p)
    p.add_argument("--N", type=int, default=1024)
    p.add_argument("--qmax", type=int, default=16)
    p.set_defaults(func=cmd_matching_stats, trials=25)

    p = sub.add_parser("geometry-check", help="grid counts vs lens ratios")
    common(p)
    p.add_argument("--radii", type=lambda s: [int(x) for x in s.split(",")], default=[2, 4, 8])
    p.add_argument("--L", type=int, default=8)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_geometry_check)

    p = sub.add_parser("prepare-state", help="amplitude-tree state preparation")
    common(p)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--R", type=int, default=3)
    p.add_argument("--L", type=int, default=8)
    p.add_argument("--accuracy", type=float, default=1e-6)
    p.set_defaults(func=cmd_prepare_state)

    p = sub.add_parser("selftest", help="quick end-to-end smoke battery")
    common(p)
    p.set_defaults(func=cmd_selftest)
    return ap


def _apply_config_file(ap: argparse.ArgumentParser, argv):
    """--config JSON supplies defaults; explicit flags still win."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = argv[idx + 1]
    with open(path) as fh:
        conf = json.load(fh)
    extra = []
    for key, val in conf.items():
        flag = "--" + key.replace("_", "-")
        if flag not in argv:
            extra.extend([flag, str(val)])
    return argv + extra


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        argv = _apply_config_file(ap, argv)
        args = ap.parse_args(argv)
    except (OSError, json.JSONDecodeError) as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    t0 = time.time()
    try:
        results, code = args.func(args)
    except INTERNAL_ERRORS as err:
        print(f"internal contract violation: {err}", file=sys.stderr)
        return 3
    emit_report(args, results, time.time() - t0)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
