"""Solver for the coset-offset problem: routine cascade and phase recovery.

Everything here sees only measurement outcomes.  Worlds are opaque: the
solver samples registers, requests collapses and qubit measurements, and
reconstructs the hidden offset d from bit statistics alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .matching import MatchingDesc
from .subsetsum import SubsetSumOracle, default_r


class PreconditionError(ValueError):
    pass


class EstimationFailedError(RuntimeError):
    """Every candidate matching starved or produced no usable signal."""


@dataclass
class DcpConfig:
    samples_per_arm: int = 512
    k_max: int = 16
    max_attempt_factor: int = 64     # attempt budget per arm = factor * quota
    starve_probe: int = 2048         # attempts before declaring a dead candidate
    starve_min_successes: int = 2
    window_div: int = 64             # base stop threshold: q_i >= 4 * window_div
    hw_z: float = 4.0                # z-score for claimed half-widths
    min_signal: float = 0.0          # extra floor on the (cos, sin) magnitude
    chunk: int = 8192


@dataclass(frozen=True)
class PhaseEstimate:
    multiplier: int     # q'
    estimate: float     # x, in [0, modulus)
    modulus: int
    half_width: float
    successes: Tuple[int, int]
    attempts: Tuple[int, int]
    magnitude: float    # length of the recovered (cos, sin) vector


@dataclass(frozen=True)
class StageRecord:
    q_i: int
    q_prime: int
    x_raw: float
    x_combined: float
    half_width: float
    successes: Tuple[int, int]
    attempts: Tuple[int, int]


@dataclass
class TwoPointOutcome:
    success: bool
    beta: Optional[int] = None
    partner: Optional[int] = None
    residual: object = None  # opaque world-side handle; solver only passes it back


@dataclass(frozen=True)
class DcpResult:
    candidates: Tuple[int, ...]
    qhat: int
    d_prime: Optional[int]
    stages: Tuple[StageRecord, ...]

    def transcript(self) -> dict:
        return {
            "qhat": self.qhat,
            "d_prime": self.d_prime,
            "stages": [
                {
                    "q_i": s.q_i,
                    "q_prime": s.q_prime,
                    "x": s.x_raw,
                    "x_combined": s.x_combined,
                    "half_width": s.half_width,
                    "successes": list(s.successes),
                    "samples": list(s.attempts),
                }
                for s in self.stages
            ],
            "d_candidates": list(self.candidates),
        }


def estimate_angle(x: float, y: float) -> float:
    """Angle phi in [0, 2 pi) from approximations x of sin(phi), y of cos(phi).

    Half-angle form: 2 atan(x / (1 + y)) for y >= 0, else the arccot branch
    2 arccot(x / (1 - y)).  For eps-accurate inputs the error is <= 8 eps.
    """
    if y >= 0:
        return (2.0 * math.atan(x / (1.0 + y))) % (2 * math.pi)
    z = x / (1.0 - y)
    return (2.0 * (math.pi / 2 - math.atan(z))) % (2 * math.pi)


def two_point_routine(world, registers, oracle: SubsetSumOracle, desc: MatchingDesc, rng) -> TwoPointOutcome:
    """One run of the pair-collapse routine on r fresh registers.

    On success the world holds the residual register; the solver learns beta
    and can compute the partner label by querying the oracle itself.
    """
    gamma, beta, residual = world.collapse_registers(registers, oracle, desc, rng)
    if gamma == 0:
        return TwoPointOutcome(success=False)
    # partner label is solver-computable: beta determines t_beta and f(t_beta)
    A = tuple(reg.a for reg in registers)
    r = len(A)
    t_beta = sum(a for i, a in enumerate(A) if (beta >> (r - 1 - i)) & 1) % world.N
    from .matching import eval_matching

    ft = eval_matching(desc, t_beta)
    partner = oracle.solve(A, ft, world.N) if ft is not None else None
    return TwoPointOutcome(success=True, beta=beta, partner=partner, residual=residual)


def routine_r1(world, oracle, desc, rng) -> Optional[int]:
    return _routine_bit(world, oracle, desc, rng, routine=1)


def routine_r2(world, oracle, desc, rng) -> Optional[int]:
    return _routine_bit(world, oracle, desc, rng, routine=2)


def _routine_bit(world, oracle, desc, rng, routine: int) -> Optional[int]:
    r = default_r(world.N)
    registers = world.sample_phase_registers(r, rng)
    outcome = two_point_routine(world, registers, oracle, desc, rng)
    if not outcome.success:
        return None
    return world.measure_residual(outcome.residual, routine, rng)


def _coord_eps(n: int, z: float) -> float:
    """z-sigma bound on the (cos, sin) coordinate estimates: the bit mean has
    sigma <= 1/(2 sqrt(n)) and the coordinate doubles it."""
    return z / math.sqrt(max(n, 1))


def routine_r3(world, oracle: SubsetSumOracle, q: int, cfg: DcpConfig, rng) -> PhaseEstimate:
    """Scan candidate matchings; first one meeting both quotas yields the
    angle estimate of (q' d / N) mod 1, scaled to x in [0, N)."""
    n_mod = world.N
    if q >= n_mod:
        raise PreconditionError("q must stay below N")
    # scan only multiples that still form a valid matching
    mult_max = min(cfg.k_max, (n_mod - 1) // q)
    quota = cfg.samples_per_arm
    budget = cfg.max_attempt_factor * quota
    for mult in range(1, mult_max + 1):
        for kind in (1, 2):
            desc = MatchingDesc(kind=kind, q=mult * q, N=n_mod)
            s1, ones1, a1 = world.collect_routine_bits(
                oracle, desc, 1, quota, budget, rng, chunk=cfg.chunk,
                starve_probe=cfg.starve_probe, starve_min=cfg.starve_min_successes,
            )
            if s1 < quota:
                continue
            s2, ones2, a2 = world.collect_routine_bits(
                oracle, desc, 2, quota, budget, rng, chunk=cfg.chunk,
                starve_probe=cfg.starve_probe, starve_min=cfg.starve_min_successes,
            )
            if s2 < quota:
                continue
            cos_est = 1.0 - 2.0 * (ones1 / s1)
            sin_est = 2.0 * (ones2 / s2) - 1.0
            rho = math.hypot(cos_est, sin_est)
            e1 = _coord_eps(s1, cfg.hw_z)
            e2 = _coord_eps(s2, cfg.hw_z)
            floor = max(cfg.min_signal, 0.6 * math.hypot(e1, e2))
            if rho < floor:
                continue  # bit means indistinguishable from fair coins
            phi = estimate_angle(sin_est / rho, cos_est / rho)
            x = (phi / (2 * math.pi)) * n_mod % n_mod
            # to first order only the component perpendicular to (cos, sin)
            # moves the angle; 1.1 covers the rho-hat fluctuation
            hw = 1.1 * (max(e1, e2) / rho) * n_mod / (2 * math.pi)
            return PhaseEstimate(
                multiplier=mult * q,
                estimate=x,
                modulus=n_mod,
                half_width=hw,
                successes=(s1, s2),
                attempts=(a1, a2),
                magnitude=rho,
            )
    raise EstimationFailedError(f"no matching produced a usable estimate at q={q}")


def solve_dcp(world, oracle: SubsetSumOracle, cfg: Optional[DcpConfig] = None, rng=None) -> DcpResult:
    """Staged cascade: estimate q_i d' mod q_i N with doubling multipliers,
    then round to recover d' = (qhat d mod N) and list the consistent d."""
    cfg = cfg or DcpConfig()
    n_mod = world.N
    est = routine_r3(world, oracle, 1, cfg, rng)
    qhat = est.multiplier
    x_i = est.estimate % n_mod
    q_i = 1
    hw_prev = est.half_width
    hw_max = est.half_width
    stages = [
        StageRecord(
            q_i=1, q_prime=qhat, x_raw=est.estimate, x_combined=x_i,
            half_width=est.half_width, successes=est.successes, attempts=est.attempts,
        )
    ]
    # stop once q_i comfortably exceeds the estimate half-widths; matchings
    # cap the reachable multiplier at the last stage
    reach_cap = max(1, (n_mod - 1) // (2 * qhat))

    def stop_threshold() -> int:
        want = max(4 * cfg.window_div, int(math.ceil(4 * hw_max)))
        return min(want, reach_cap)

    while q_i < stop_threshold():
        if len(stages) > 64:
            raise EstimationFailedError("cascade failed to terminate")
        est = routine_r3(world, oracle, 2 * q_i * qhat, cfg, rng)
        if est.multiplier % qhat:
            raise EstimationFailedError("stage multiplier not divisible by qhat")
        q_next = est.multiplier // qhat
        ratio = q_next // q_i
        if ratio * hw_prev + est.half_width >= n_mod / 2:
            raise EstimationFailedError("estimates too wide to combine safely")
        lift = round((ratio * x_i - est.estimate) / n_mod)
        x_next = (est.estimate + n_mod * lift) % (q_next * n_mod)
        stages.append(
            StageRecord(
                q_i=q_next, q_prime=est.multiplier, x_raw=est.estimate,
                x_combined=x_next, half_width=est.half_width,
                successes=est.successes, attempts=est.attempts,
            )
        )
        q_i, x_i = q_next, x_next
        hw_prev = est.half_width
        hw_max = max(hw_max, est.half_width)
    if q_i < 2.5 * hw_prev:
        raise EstimationFailedError("final multiplier too small to round safely")
    d_prime = round(x_i / q_i) % n_mod
    g = math.gcd(qhat, n_mod)
    if d_prime % g:
        return DcpResult(candidates=(), qhat=qhat, d_prime=d_prime, stages=tuple(stages))
    inv = pow(qhat // g, -1, n_mod // g)
    base = (d_prime // g * inv) % (n_mod // g)
    candidates = tuple(sorted((base + k * (n_mod // g)) % n_mod for k in range(g)))
    return DcpResult(candidates=candidates, qhat=qhat, d_prime=d_prime, stages=tuple(stages))


def verify_candidate(world, oracle, d_cand: int, cfg: DcpConfig, rng, q_check: int = 3) -> bool:
    """Statistical check: fresh R1/R2 bits at a new multiplier must match the
    phase the candidate predicts."""
    try:
        est = routine_r3(world, oracle, q_check, cfg, rng)
    except EstimationFailedError:
        return False
    predicted = (est.multiplier * d_cand) % world.N
    delta = abs(est.estimate - predicted)
    delta = min(delta, world.N - delta)
    return delta <= max(est.half_width, world.N / 32)
