"""Ball/grid geometry and amplitude-tree state preparation.

Exact enumeration of scaled-grid points in balls, closed-form circle-lens and
spherical-cap intersection ratios with the explicit cap/cylinder lower bound,
and the one-qubit-at-a-time preparation of the discretized uniform-ball state
from conditional masses, with a trace-distance certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import special

from .qsim import QState, trace_distance_pure

ENUM_BUDGET = 10**7


class BudgetError(ValueError):
    pass


class AccuracyError(RuntimeError):
    """Requested accuracy not reachable within the sampling budget."""


@dataclass(frozen=True)
class BallGridSpec:
    """Grid (1/L)Z^n intersected with the radius-R ball around the origin."""

    n: int
    R: Fraction
    L: int
    center_scaled: Tuple[int, ...] = None  # offset in units of 1/L

    def __post_init__(self):
        object.__setattr__(self, "R", Fraction(self.R))
        if self.R < 1:
            raise ValueError("require R >= 1")
        if self.center_scaled is None:
            object.__setattr__(self, "center_scaled", (0,) * self.n)

    @property
    def scaled_radius2(self) -> Fraction:
        return (self.R * self.L) ** 2


def grid_points_in_ball(spec: BallGridSpec) -> np.ndarray:
    """All scaled grid points k (coordinates k/L) inside the ball, exact test."""
    bound = int(spec.R * spec.L) + 1
    if (2 * bound + 1) ** spec.n > ENUM_BUDGET:
        raise BudgetError("grid enumeration budget exceeded")
    axis = np.arange(-bound, bound + 1, dtype=np.int64)
    grids = np.meshgrid(*([axis] * spec.n), indexing="ij")
    rel = np.stack([g.ravel() for g in grids], axis=1)
    thr = spec.scaled_radius2
    # exact: integer norms against a rational threshold
    norms = np.einsum("ij,ij->i", rel, rel)
    keep = norms * thr.denominator <= thr.numerator
    return rel[keep] + np.asarray(spec.center_scaled, dtype=np.int64)


def ball_volume(n: int, R: float) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * float(R) ** n


def count_vs_volume_error(count: int, n: int, R: float, L: int) -> Tuple[float, float]:
    """(relative error |count/(L^n vol) - 1|, tolerance 2 n^1.5 / (R L))."""
    vol = ball_volume(n, R)
    rel = abs(count / (L**n * vol) - 1.0)
    tol = 2 * n**1.5 / (float(R) * L)
    return rel, tol


def lens_ratio(R: float, delta: float) -> float:
    """Exact n=2 intersection ratio of two radius-R disks at center distance delta."""
    R = float(R)
    delta = float(delta)
    if delta >= 2 * R:
        return 0.0
    if delta == 0:
        return 1.0
    lens = 2 * R * R * math.acos(delta / (2 * R)) - (delta / 2) * math.sqrt(
        4 * R * R - delta * delta
    )
    return lens / (math.pi * R * R)


def cap_ratio(n: int, R: float, delta: float) -> float:
    """Intersection ratio of two radius-R n-balls at distance delta (two caps)."""
    if delta >= 2 * R:
        return 0.0
    a = delta / (2 * R)
    return float(special.betainc((n + 1) / 2, 0.5, 1 - a * a))


def cylinder_lower_bound(n: int, R: float, delta: float) -> float:
    """The explicit cap-minus-cylinder bound: ratio >= 1 - delta * v_{n-1}/v_n / R."""
    kappa = math.gamma(n / 2 + 1) / (math.sqrt(math.pi) * math.gamma((n + 1) / 2))
    return 1.0 - float(delta) * kappa / float(R)


def ball_intersection_ratio(
    n: int,
    R: float,
    d_vec,
    samples: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """vol(B ∩ (B + d)) / vol(B).

    Closed form (exact lens for n=2, cap form otherwise); with samples > 0 a
    Monte Carlo estimate is returned instead.
    """
    delta = math.sqrt(float(sum(float(x) ** 2 for x in d_vec)))
    if samples and rng is not None:
        dirs = rng.normal(size=(samples, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = float(R) * rng.random(samples) ** (1.0 / n)
        pts = dirs * radii[:, None]
        shifted = pts - np.asarray([float(x) for x in d_vec])
        return float(np.mean(np.einsum("ij,ij->i", shifted, shifted) <= float(R) ** 2))
    if n == 2:
        return lens_ratio(R, delta)
    return cap_ratio(n, R, delta)


def grid_intersection_ratio(spec: BallGridSpec, d_vec) -> float:
    """|grid ∩ B ∩ (B + d)| / |grid ∩ B| for an integer translation d."""
    d = np.asarray([int(x) for x in d_vec], dtype=np.int64)
    pts = grid_points_in_ball(spec)
    if pts.shape[0] == 0:
        raise ValueError("empty ball grid")
    center = np.asarray(spec.center_scaled, dtype=np.int64)
    shifted = pts - d * spec.L - center
    thr = spec.scaled_radius2
    norms = np.einsum("ij,ij->i", shifted, shifted)
    inside = norms * thr.denominator <= thr.numerator
    return float(np.count_nonzero(inside)) / pts.shape[0]


def circle_rect_area(R: float, x0: float, x1: float, y0: float, y1: float) -> float:
    """Area of the radius-R origin disk intersected with [x0,x1] x [y0,y1].

    Mirrored into a canonical orientation first so symmetric boxes produce
    bit-identical results.
    """
    R = float(R)
    if x0 >= x1 or y0 >= y1:
        return 0.0
    if x0 + x1 < 0:
        x0, x1 = -x1, -x0
    if y0 + y1 < 0:
        y0, y1 = -y1, -y0
    a, b = max(x0, -R), min(x1, R)
    if a >= b:
        return 0.0

    def hh(u):
        return math.sqrt(max(0.0, R * R - u * u))

    def int_h(u):
        # antiderivative of sqrt(R^2 - u^2)
        u = min(max(u, -R), R)
        return 0.5 * (u * hh(u) + R * R * math.asin(u / R))

    cuts = {a, b}
    for y in (y0, y1):
        if abs(y) <= R:
            c = math.sqrt(max(0.0, R * R - y * y))
            for u in (c, -c):
                if a < u < b:
                    cuts.add(u)
    xs = sorted(cuts)
    area = 0.0
    for lo, hi in zip(xs[:-1], xs[1:]):
        mid = 0.5 * (lo + hi)
        h = hh(mid)
        top_is_arc = h <= y1
        bot_is_arc = -h >= y0
        if min(y1, h) <= max(y0, -h):
            continue
        seg = 0.0
        seg += (int_h(hi) - int_h(lo)) if top_is_arc else y1 * (hi - lo)
        seg -= (-(int_h(hi) - int_h(lo))) if bot_is_arc else y0 * (hi - lo)
        area += seg
    return area


def segment_length(R: float, x0: float, x1: float) -> float:
    """n=1 ball: length of [-R, R] ∩ [x0, x1]."""
    return max(0.0, min(x1, R) - max(x0, -R))


def _box_ball_volume(n: int, R: float, box, samples: int = 0, rng=None) -> float:
    """Volume of (product of [lo_i, hi_i)) ∩ ball; exact for n <= 2."""
    if any(hi <= lo for lo, hi in box):
        return 0.0
    if n == 1:
        return segment_length(R, box[0][0], box[0][1])
    if n == 2:
        return circle_rect_area(R, box[0][0], box[0][1], box[1][0], box[1][1])
    if samples <= 0 or rng is None:
        raise AccuracyError("n >= 3 box-ball volumes need Monte Carlo samples")
    lows = np.array([lo for lo, _ in box])
    highs = np.array([hi for _, hi in box])
    pts = rng.random((samples, n)) * (highs - lows) + lows
    frac = float(np.mean(np.einsum("ij,ij->i", pts, pts) <= float(R) ** 2))
    return frac * float(np.prod(highs - lows))


@dataclass
class AmplitudeTree:
    """Conditional masses per prefix: exact s and renormalized approximations."""

    n: int
    m: int
    L: int
    K: int
    nodes: Dict[Tuple[int, ...], Tuple[float, float, float, float]] = field(
        default_factory=dict
    )  # prefix -> (s0, s1, s0~, s1~)

    def max_relative_error(self) -> float:
        worst = 0.0
        for s0, s1, t0, t1 in self.nodes.values():
            for s, t in ((s0, t0), (s1, t1)):
                if s > 0:
                    worst = max(worst, abs(t / s - 1.0))
        return worst


@dataclass(frozen=True)
class PreparedState:
    tree: AmplitudeTree
    state: QState             # the prepared |eta~>
    target_state: QState      # exact discretized target |eta'>
    grid_state: QState        # uniform superposition over grid points in the ball
    distance_to_target: float
    distance_to_grid_uniform: float
    first_split: Tuple[float, float]


def _bits_per_dim(spec: BallGridSpec) -> Tuple[int, int]:
    if spec.L & (spec.L - 1):
        raise ValueError("L must be a power of two")
    scaled_r = int(spec.R * spec.L)  # largest |k| of a grid point in the ball
    m = 0
    while 2**m * spec.L <= scaled_r:
        m += 1
    return m, m + 1 + int(math.log2(spec.L))


def _point_to_bits(k: np.ndarray, m: int, L: int, bits: int) -> Tuple[int, ...]:
    out = []
    for comp in k:
        v = int(comp) + (1 << m) * L
        out.extend((v >> (bits - 1 - j)) & 1 for j in range(bits))
    return tuple(out)


def grover_rudolph_prepare(
    spec: BallGridSpec,
    target_accuracy: float = 1e-6,
    mc_samples: int = 0,
    rng: Optional[np.random.Generator] = None,
    perturb: float = 0.0,
) -> PreparedState:
    """Build the discretized uniform-ball state one qubit at a time.

    Per-prefix masses are box∩ball volumes (exact for n <= 2, Monte Carlo
    above); conditional splits are renormalized so each pair sums to one.
    `perturb` injects a deterministic relative error per split to exercise the
    error-composition bound.  The certificate is the trace distance between
    the prepared state and the exactly computed target.
    """
    n, L, R = spec.n, spec.L, float(spec.R)
    m, bits = _bits_per_dim(spec)
    K = n * bits
    if K > 22:
        raise BudgetError(f"K={K} qubits above desk scale")
    half = float(2**m)

    def box_of(prefix):
        box = []
        idx = 0
        for dim in range(n):
            lo, hi = -half, half
            width = 2 * half
            nb = min(bits, max(0, len(prefix) - dim * bits))
            for j in range(nb):
                width /= 2
                if prefix[idx + j]:
                    lo += width
                else:
                    hi -= width
            idx += nb
            box.append((lo, hi))
        return box

    def volume(box):
        return _box_ball_volume(n, R, box, samples=mc_samples, rng=rng)

    tree = AmplitudeTree(n=n, m=m, L=L, K=K)
    amps: Dict[Tuple[int, ...], float] = {}
    target_amps: Dict[Tuple[int, ...], float] = {}
    total = volume(box_of(()))

    def descend(prefix, amp, target_amp):
        if len(prefix) == K:
            amps[prefix] = amp
            target_amps[prefix] = target_amp
            return
        v0 = volume(box_of(prefix + (0,)))
        v1 = volume(box_of(prefix + (1,)))
        tot = v0 + v1
        if tot <= 0:
            return
        s0, s1 = v0 / tot, v1 / tot
        t0, t1 = s0, s1
        if perturb:
            sign = 1.0 if (hash(prefix) & 1) else -1.0
            t0 = s0 * (1.0 + sign * perturb)
            t1 = s1 * (1.0 - sign * perturb) if s1 else 0.0
            z = t0 + t1
            t0, t1 = t0 / z, t1 / z
        tree.nodes[prefix] = (s0, s1, t0, t1)
        if v0 > 0:
            descend(prefix + (0,), amp * math.sqrt(t0), target_amp * math.sqrt(s0))
        if v1 > 0:
            descend(prefix + (1,), amp * math.sqrt(t1), target_amp * math.sqrt(s1))

    if total <= 0:
        raise ValueError("ball has no volume inside the enclosing cube")
    descend((), 1.0, 1.0)

    dims = (2,) * K
    eta_tilde = QState.from_amplitudes(dims, {k: complex(v) for k, v in amps.items()}).normalized()
    eta_prime = QState.from_amplitudes(dims, {k: complex(v) for k, v in target_amps.items()}).normalized()
    pts = grid_points_in_ball(spec)
    g_amp = 1.0 / math.sqrt(pts.shape[0])
    eta_grid = QState.from_amplitudes(
        dims, {_point_to_bits(k, m, L, bits): g_amp for k in pts}
    )
    dist_target = trace_distance_pure(eta_tilde, eta_prime)
    dist_grid = trace_distance_pure(eta_tilde, eta_grid)
    if dist_target > max(target_accuracy, tree.max_relative_error() * K + 1e-12):
        raise AccuracyError(
            f"certificate {dist_target:.3e} above requested accuracy"
        )
    root = tree.nodes[()]
    return PreparedState(
        tree=tree,
        state=eta_tilde,
        target_state=eta_prime,
        grid_state=eta_grid,
        distance_to_target=dist_target,
        distance_to_grid_uniform=dist_grid,
        first_split=(root[2], root[3]),
    )


def boundary_layer_fraction(spec: BallGridSpec) -> Tuple[float, float]:
    """(fraction of grid points within sqrt(n)/L of the sphere, 2x shell-volume bound)."""
    pts = grid_points_in_ball(spec)
    norms = np.sqrt(np.einsum("ij,ij->i", pts, pts).astype(float)) / spec.L
    R = float(spec.R)
    layer = float(np.mean(norms > R - math.sqrt(spec.n) / spec.L))
    shell = 1.0 - (1.0 - math.sqrt(spec.n) / (R * spec.L)) ** spec.n
    return layer, 2.0 * shell
