"""Shortest-vector recovery through two-point registers and the coset solver.

Cube mode partitions space into randomly shifted cubes sized to a length
guess; measuring the cube label collapses a superposition over register
coefficients to (at most) one point per side, and the surviving pairs hide
the shortest vector in their coefficient difference.  Ball mode replaces the
cube label with a measured point of a ball-grid cloud around each lattice
point.  Registers are encoded into a coset world with modulus (2M)^n and the
offset recovered by the staged solver is decoded back to lattice coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .dcp import DcpConfig, EstimationFailedError, solve_dcp
from .geometry import BallGridSpec, grid_points_in_ball
from .lattice import LatticeInstance, lll_reduce, norm2
from .subsetsum import ExhaustiveOracle, SubsetSumOracle
from .worlds import LatticeDcpWorld, StructuralViolationError, WorldContractError

SAMPLER_BUDGET = 10**7


class DecodeRangeError(ValueError):
    """A difference digit landed outside (-M, M)."""


class ParamError(ValueError):
    pass


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    k = 2
    while k * k <= p:
        if p % k == 0:
            return False
        k += 1
    return True


def next_prime(n: int) -> int:
    p = max(2, n + 1)
    while not _is_prime(p):
        p += 1
    return p


@dataclass(frozen=True)
class ReductionParams:
    p: int
    m: int
    i0: int              # 1-based coordinate slot carrying the residue
    l: float             # length guess
    M: int               # coefficient range bound
    cell: float          # cube side (cube mode) or ball radius (ball mode)
    mode: str = "cube"
    grid_l: int = 16     # ball-mode grid denominator
    sampler: str = "exhaustive"

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ParamError(f"p={self.p} is not prime")
        if not 1 <= self.m <= self.p - 1:
            raise ParamError("require 1 <= m <= p-1")
        if self.cell <= 0 or self.M < 2:
            raise ParamError("cell > 0 and M >= 2 required")
        if self.mode not in ("cube", "ball"):
            raise ParamError("mode must be cube or ball")


@dataclass(frozen=True)
class TwoPointRegister:
    status: str                       # "good" | "bad"
    t: int                            # drawn t
    a_vec: Tuple[int, ...]            # drawn coefficients (permuted, slot 0 = i0)
    partner_vec: Optional[Tuple[int, ...]] = None  # the other side of a good pair
    provenance: Tuple[int, ...] = ()  # measured cell label / measured grid point
    reason: Optional[str] = None      # world-side: why a bad register is bad


def encode_coeffs(a_vec: Sequence[int], M: int) -> int:
    """Base-2M packing: a_1 + a_2 (2M) + ... + a_n (2M)^(n-1)."""
    base = 2 * M
    out = 0
    for i, a in enumerate(a_vec):
        if not 0 <= a < M:
            raise ValueError(f"coefficient {a} outside [0, {M})")
        out += int(a) * base**i
    return out


def encode_two_point_to_dcp(register: TwoPointRegister, M: int, n: int):
    """Coset-register descriptor with modulus N = (2M)^n.

    Good: (x, (x + D) mod N) with D the encoded difference.  Bad: (b, x).
    """
    N = (2 * M) ** n
    x = encode_coeffs(register.a_vec, M)
    if register.status == "good":
        x2 = encode_coeffs(register.partner_vec, M)
        if register.t == 1:
            x, x2 = x2, x
        return ("good", x, (x2 - x) % N)
    return ("bad", register.t, x)


def decode_difference(D: int, M: int, n: int) -> Tuple[int, ...]:
    """Inverse of the difference encoding on the box (-M, M)^n."""
    base = 2 * M
    N = base**n
    offset = sum(M * base**i for i in range(n))
    v = (int(D) + offset) % N
    digits = []
    for _ in range(n):
        v, dig = divmod(v, base)
        if dig == 0:
            raise DecodeRangeError("difference digit overflowed the (-M, M) box")
        digits.append(dig - M)
    return tuple(digits)


def f_embed(t: int, a_vec: Sequence[int], basis, p: int, m: int, i0: int = 1) -> Tuple[int, ...]:
    """Lattice point with the i0 coefficient mapped through a -> a p + t m."""
    coeffs = [int(a) for a in a_vec]
    coeffs[i0 - 1] = coeffs[i0 - 1] * p + t * m
    n = len(basis[0])
    out = [0] * n
    for c, row in zip(coeffs, basis):
        for j in range(n):
            out[j] += c * row[j]
    return tuple(out)


def g_cell(v: Sequence[float], cell: float, w: Sequence[float]) -> Tuple[int, ...]:
    """Componentwise floor(v_i / cell - w_i)."""
    return tuple(int(math.floor(float(x) / cell - float(wi))) for x, wi in zip(v, w))


def _permuted_basis(basis, i0: int) -> np.ndarray:
    n = len(basis)
    order = [i0 - 1] + [j for j in range(n) if j != i0 - 1]
    return np.asarray([basis[j] for j in order], dtype=np.int64)


def _unpermute(vec: Sequence[int], i0: int, n: int) -> Tuple[int, ...]:
    order = [i0 - 1] + [j for j in range(n) if j != i0 - 1]
    out = [0] * n
    for slot, j in enumerate(order):
        out[j] = int(vec[slot])
    return tuple(out)


class CubeSampler:
    """Exhaustive cube-mode sampler: enumerates every register-map point per
    draw, so multiplicity violations cannot hide.  Never reads the planted
    vector."""

    def __init__(self, instance: LatticeInstance, params: ReductionParams):
        n = instance.n
        if 2 * params.M**n > SAMPLER_BUDGET:
            raise ParamError("exhaustive cube sampler budget exceeded")
        self.n = n
        self.params = params
        self.basis = _permuted_basis(instance.basis, params.i0)
        grids = np.meshgrid(*([np.arange(params.M)] * n), indexing="ij")
        avecs = np.stack([g.ravel() for g in grids], axis=1)  # (M^n, n)
        both = np.concatenate([avecs, avecs], axis=0)
        self.ts = np.concatenate(
            [np.zeros(len(avecs), np.int64), np.ones(len(avecs), np.int64)]
        )
        self.avecs = both
        coeff = both.copy()
        coeff[:, 0] = coeff[:, 0] * params.p + self.ts * params.m
        self.points = coeff @ self.basis  # ambient lattice points

    def draw(self, rng) -> TwoPointRegister:
        k = int(rng.integers(0, len(self.points)))
        w = rng.random(self.n)
        labels = np.floor(self.points / self.params.cell - w).astype(np.int64)
        target = labels[k]
        hits = np.flatnonzero(np.all(labels == target, axis=1))
        t_hit = self.ts[hits]
        n0 = int(np.sum(t_hit == 0))
        n1 = int(np.sum(t_hit == 1))
        if n0 > 1 or n1 > 1:
            raise StructuralViolationError(
                f"cell {tuple(target)} holds {n0}+{n1} points"
            )
        if n0 == 1 and n1 == 1:
            side0 = self.avecs[hits[t_hit == 0][0]]
            side1 = self.avecs[hits[t_hit == 1][0]]
            drawn = self.avecs[k]
            partner = side1 if self.ts[k] == 0 else side0
            return TwoPointRegister(
                status="good",
                t=int(self.ts[k]),
                a_vec=tuple(int(x) for x in drawn),
                partner_vec=tuple(int(x) for x in partner),
                provenance=tuple(int(x) for x in target),
            )
        return TwoPointRegister(
            status="bad",
            t=int(self.ts[k]),
            a_vec=tuple(int(x) for x in self.avecs[k]),
            provenance=tuple(int(x) for x in target),
        )


class PlantedCubeSampler:
    """O(1) partner lookup using the planted difference; world-side tool for
    fast experiments and loss accounting, never used in acceptance runs."""

    def __init__(self, instance: LatticeInstance, params: ReductionParams, planted_perm):
        self.n = instance.n
        self.params = params
        self.basis = _permuted_basis(instance.basis, params.i0)
        u = [int(x) for x in planted_perm]
        if (u[0] - params.m) % params.p:
            self.delta = None  # residue mismatch: no pairs exist
        else:
            self.delta = tuple([(u[0] - params.m) // params.p] + u[1:])

    def draw(self, rng) -> TwoPointRegister:
        p = self.params
        t = int(rng.integers(0, 2))
        a = rng.integers(0, p.M, self.n)
        w = rng.random(self.n)
        if self.delta is None:
            return TwoPointRegister(status="bad", t=t, a_vec=tuple(map(int, a)), reason="residue")
        sign = 1 if t == 0 else -1
        partner = a + sign * np.asarray(self.delta, dtype=np.int64)
        if np.any(partner < 0) or np.any(partner >= p.M):
            return TwoPointRegister(status="bad", t=t, a_vec=tuple(map(int, a)), reason="range")
        v0 = (np.concatenate([[a[0] * p.p + t * p.m], a[1:]]) @ self.basis).astype(float)
        v1 = (
            np.concatenate([[partner[0] * p.p + (1 - t) * p.m], partner[1:]]) @ self.basis
        ).astype(float)
        lab0 = np.floor(v0 / p.cell - w).astype(np.int64)
        lab1 = np.floor(v1 / p.cell - w).astype(np.int64)
        if not np.array_equal(lab0, lab1):
            return TwoPointRegister(status="bad", t=t, a_vec=tuple(map(int, a)), reason="straddle")
        return TwoPointRegister(
            status="good",
            t=t,
            a_vec=tuple(map(int, a)),
            partner_vec=tuple(int(x) for x in partner),
            provenance=tuple(int(x) for x in lab0),
        )


class BallSampler:
    """Ball-mode sampler: measures a grid point of the radius-R cloud and
    pairs registers whose clouds share it.  Exhaustive partner search over
    the coefficient box; radius comes from params.cell."""

    def __init__(self, instance: LatticeInstance, params: ReductionParams):
        if params.mode != "ball":
            raise ParamError("BallSampler requires ball mode")
        self.n = instance.n
        self.params = params
        self.basis = _permuted_basis(instance.basis, params.i0)
        self.binv = np.linalg.inv(self.basis.astype(float))
        spec = BallGridSpec(self.n, Fraction(params.cell).limit_denominator(10**6), params.grid_l)
        self.grid = grid_points_in_ball(spec)  # scaled by grid_l
        self.grid_set = {tuple(int(x) for x in row) for row in self.grid}
        self.radius2_scaled = (Fraction(params.cell).limit_denominator(10**6) * params.grid_l) ** 2

    def _sides(self, xprime_scaled: np.ndarray):
        """All (t, a_vec) whose cloud contains the measured point."""
        p = self.params
        L = p.grid_l
        center = xprime_scaled / L
        rad = float(p.cell)
        lo_pt = center - rad
        hi_pt = center + rad
        corners = []
        for corner in range(1 << self.n):
            pt = np.where(
                [(corner >> i) & 1 for i in range(self.n)], hi_pt, lo_pt
            )
            corners.append(pt @ self.binv)
        corners = np.asarray(corners)
        cmin = np.floor(corners.min(axis=0)).astype(np.int64) - 1
        cmax = np.ceil(corners.max(axis=0)).astype(np.int64) + 1
        found = []
        for c0 in range(max(cmin[0], 0), min(cmax[0], (p.M - 1) * p.p + p.m) + 1):
            rem = c0 % p.p
            if rem == 0:
                t, a0 = 0, c0 // p.p
            elif rem == p.m:
                t, a0 = 1, (c0 - p.m) // p.p
            else:
                continue
            if not 0 <= a0 < p.M:
                continue
            for rest in np.ndindex(*[int(cmax[j] - cmin[j] + 1) for j in range(1, self.n)]):
                cs = [c0] + [int(cmin[j + 1] + rest[j]) for j in range(self.n - 1)]
                if any(not 0 <= cs[j] < p.M for j in range(1, self.n)):
                    continue
                v = np.asarray(cs, dtype=np.int64) @ self.basis
                diff = xprime_scaled - v * L
                if tuple(int(x) for x in diff) in self.grid_set:
                    avec = [a0] + cs[1:]
                    found.append((t, tuple(int(x) for x in avec)))
        return found

    def draw(self, rng) -> TwoPointRegister:
        p = self.params
        t = int(rng.integers(0, 2))
        a = tuple(int(x) for x in rng.integers(0, p.M, self.n))
        g = self.grid[int(rng.integers(0, len(self.grid)))]
        coeff = np.asarray([a[0] * p.p + t * p.m] + list(a[1:]), dtype=np.int64)
        v = coeff @ self.basis
        xprime = v * p.grid_l + g  # scaled by grid_l
        sides = self._sides(xprime)
        zeros = [av for tt, av in sides if tt == 0]
        ones = [av for tt, av in sides if tt == 1]
        if len(zeros) > 1 or len(ones) > 1:
            raise StructuralViolationError(f"measured point shared by {len(zeros)}+{len(ones)} clouds")
        if (t, a) not in sides:
            raise WorldContractError("drawn register missing from its own cloud")
        if len(zeros) == 1 and len(ones) == 1:
            partner = ones[0] if t == 0 else zeros[0]
            return TwoPointRegister(
                status="good", t=t, a_vec=a, partner_vec=partner,
                provenance=tuple(int(x) for x in xprime),
            )
        return TwoPointRegister(
            status="bad", t=t, a_vec=a, provenance=tuple(int(x) for x in xprime)
        )


def sample_register_cube(instance, params: ReductionParams, rng) -> TwoPointRegister:
    if params.sampler == "planted":
        from .lattice import reduce_instance

        red = reduce_instance(instance)
        return PlantedCubeSampler(instance, params, _unpermute_inverse(red.planted_u, params.i0)).draw(rng)
    return CubeSampler(instance, params).draw(rng)


def _unpermute_inverse(planted, i0):
    # permuted order: slot 0 = coordinate i0
    n = len(planted)
    order = [i0 - 1] + [j for j in range(n) if j != i0 - 1]
    return [planted[j] for j in order]


def sample_register_ball(instance, params: ReductionParams, rng) -> TwoPointRegister:
    return BallSampler(instance, params).draw(rng)


def cube_register_source(instance: LatticeInstance, params: ReductionParams):
    """Batch register source for a coset world (compiled path)."""
    basis = _permuted_basis(instance.basis, params.i0)
    binv = np.linalg.inv(basis.astype(float))
    n = instance.n

    def source(count: int, rng):
        u = rng.random((count, 2 * n + 1))
        status = np.empty(count, np.uint8)
        x = np.empty(count, np.int64)
        d = np.empty(count, np.int64)
        _kernels.sample_cube_batch(
            basis, binv, params.p, params.m, params.M, params.cell, u, status, x, d
        )
        return status, x, d

    return source


@dataclass
class SvpConfig:
    p: Optional[int] = None
    M: Optional[int] = None
    u_max_hint: int = 1            # coefficient-size hint used to size M
    cub_factor: Optional[float] = None  # cell = cub_factor * l
    f_param: float = 1.0
    mode: str = "cube"
    l_steps: Optional[int] = None
    max_cells: Optional[int] = None
    early_exit: bool = True        # stop once a coset-route candidate ties b1
    dcp: DcpConfig = field(default_factory=lambda: DcpConfig(samples_per_arm=128))

    def resolved(self, n: int) -> "SvpConfig":
        cub = self.cub_factor
        if cub is None:
            cub = 4.0 * n ** (0.5 + 2 * self.f_param)
        p = self.p or next_prime(int(max(n ** (2 + 2 * self.f_param), 2 * math.sqrt(n) * cub)))
        M = self.M
        if M is None:
            M = 1
            while M < 64 * max(1, self.u_max_hint):
                M *= 2
        steps = self.l_steps if self.l_steps is not None else math.ceil((n - 1) / 2) + 1
        out = SvpConfig(
            p=p, M=M, u_max_hint=self.u_max_hint, cub_factor=cub,
            f_param=self.f_param, mode=self.mode, l_steps=steps,
            max_cells=self.max_cells, early_exit=self.early_exit, dcp=self.dcp,
        )
        return out


@dataclass(frozen=True)
class CellOutcome:
    l: float
    i0: int
    m: int
    status: str                     # solved | starved | violation | decode-miss
    candidates: Tuple[Tuple[int, ...], ...] = ()
    good: int = 0
    bad: int = 0


@dataclass(frozen=True)
class SvpResult:
    winner: Optional[Tuple[int, ...]]
    winner_norm2: Optional[int]
    from_dcp: bool
    improved: bool
    cells: Tuple[CellOutcome, ...]
    dcp_candidates: Tuple[Tuple[int, ...], ...]
    b1: Tuple[int, ...]
    not_found: bool

    def manifest(self) -> dict:
        return {
            "b1": list(self.b1),
            "winner": None if self.winner is None else list(self.winner),
            "winner_norm2": self.winner_norm2,
            "from_dcp": self.from_dcp,
            "improved": self.improved,
            "not_found": self.not_found,
            "cells": [
                {
                    "l": c.l, "i0": c.i0, "m": c.m, "status": c.status,
                    "good": c.good, "bad": c.bad,
                    "candidates": [list(v) for v in c.candidates],
                }
                for c in self.cells
            ],
        }


def _m_order(p: int):
    """1, p-1, 2, p-2, ...: small signed residues first."""
    seen = []
    for k in range(1, p):
        for m in (k, p - k):
            if 1 <= m <= p - 1 and m not in seen:
                seen.append(m)
    return seen


def solve_unique_svp(
    instance: LatticeInstance,
    config: Optional[SvpConfig] = None,
    rng=None,
    oracle: Optional[SubsetSumOracle] = None,
    dcp_solver=solve_dcp,
) -> SvpResult:
    """Full pipeline: length/coordinate/residue grid, registers to coset
    worlds, staged offset recovery, decode, verify, compare.

    Emitted candidates are integer combinations of the reduced basis (lattice
    members by construction) and are kept only when their norm does not
    exceed ||b1||, so a wrong 'shortest' vector can never be returned.
    """
    cfg = (config or SvpConfig()).resolved(instance.n)
    oracle = oracle or ExhaustiveOracle()
    n = instance.n
    red = lll_reduce(instance.basis)
    b1 = red.basis[0]
    b1_norm2 = int(norm2(b1))
    l0 = math.sqrt(b1_norm2)
    reduced_instance = LatticeInstance(n=n, basis=red.basis)
    N = (2 * cfg.M) ** n

    cells: List[CellOutcome] = []
    dcp_candidates: List[Tuple[int, ...]] = []
    best_vec: Optional[Tuple[int, ...]] = None
    best_norm2 = b1_norm2
    from_dcp = False
    tried = 0

    def consider(vec: Tuple[int, ...]) -> bool:
        nonlocal best_vec, best_norm2, from_dcp
        m2 = int(norm2(vec))
        if m2 == 0 or m2 > b1_norm2:
            return False
        dcp_candidates.append(vec)
        if m2 <= best_norm2:
            best_vec = vec
            best_norm2 = m2
            from_dcp = True
        return True

    stop = False
    for k in range(cfg.l_steps):
        if stop:
            break
        l = l0 / 2**k
        cell = cfg.cub_factor * l
        for m in _m_order(cfg.p):
            if stop:
                break
            for i0 in range(1, n + 1):
                if cfg.max_cells is not None and tried >= cfg.max_cells:
                    stop = True
                    break
                tried += 1
                params = ReductionParams(
                    p=cfg.p, m=m, i0=i0, l=l, M=cfg.M, cell=cell, mode=cfg.mode
                )
                try:
                    world = LatticeDcpWorld(
                        cube_register_source(reduced_instance, params), N=N
                    )
                    result = dcp_solver(world, oracle, cfg.dcp, rng)
                except (EstimationFailedError, StructuralViolationError, WorldContractError) as err:
                    status = "violation" if isinstance(err, StructuralViolationError) else "starved"
                    cells.append(CellOutcome(l=l, i0=i0, m=m, status=status))
                    continue
                found: List[Tuple[int, ...]] = []
                for d_cand in result.candidates:
                    try:
                        delta = decode_difference(d_cand, cfg.M, n)
                    except DecodeRangeError:
                        continue
                    coeffs_perm = [params.p * delta[0] + m] + list(delta[1:])
                    coeffs = _unpermute(coeffs_perm, i0, n)
                    vec = tuple(
                        int(sum(c * red.basis[j][col] for j, c in enumerate(coeffs)))
                        for col in range(n)
                    )
                    if consider(vec):
                        found.append(vec)
                cells.append(
                    CellOutcome(
                        l=l, i0=i0, m=m,
                        status="solved" if found else "decode-miss",
                        candidates=tuple(found),
                        good=world.stats["good"], bad=world.stats["bad"],
                    )
                )
                if cfg.early_exit and found:
                    stop = True
                    break

    winner = best_vec if best_vec is not None else tuple(int(x) for x in b1)
    improved = best_vec is not None and best_norm2 < b1_norm2
    return SvpResult(
        winner=winner,
        winner_norm2=int(norm2(winner)),
        from_dcp=from_dcp,
        improved=improved,
        cells=tuple(cells),
        dcp_candidates=tuple(dcp_candidates),
        b1=tuple(int(x) for x in b1),
        not_found=not from_dcp,
    )
