"""Integer lattices with exact rational reduction.

Gram-Schmidt and LLL run entirely over Fraction arithmetic: the reduction
inequalities are exact statements and are re-verified on every output rather
than assumed.  A brute-force enumeration oracle certifies shortest vectors and
uniqueness gaps for the planted desk-scale instances.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np


class DegenerateBasisError(ValueError):
    """Basis rows are linearly dependent."""


class PreconditionError(ValueError):
    """An operation was called outside its stated precondition."""


class GenerationError(RuntimeError):
    """Instance generation exhausted its retry/enumeration budget."""


ENUM_BUDGET = 10**7


@dataclass(frozen=True)
class GramSchmidtData:
    """Exact orthogonalization: bstar rows and lower-triangular mu."""

    bstar: tuple  # tuple of tuples of Fraction
    mu: tuple     # tuple of tuples of Fraction, mu[i][j] for j <= i, mu[i][i] == 1


@dataclass(frozen=True)
class LatticeInstance:
    n: int
    basis: tuple  # n rows of n ints
    planted_u: Optional[tuple] = None  # coefficients of the shortest vector in `basis`
    gap: Optional[Fraction] = None     # certified uniqueness factor (lower bound)

    def planted_vector(self):
        if self.planted_u is None:
            return None
        return vec_combination(self.planted_u, self.basis)

    def to_json(self) -> str:
        gap = None if self.gap is None else f"{self.gap.numerator}/{self.gap.denominator}"
        return json.dumps(
            {
                "n": self.n,
                "basis": [list(row) for row in self.basis],
                "planted_u": None if self.planted_u is None else list(self.planted_u),
                "gap": gap,
            }
        )

    @staticmethod
    def from_json(text: str) -> "LatticeInstance":
        obj = json.loads(text)
        gap = None
        if obj.get("gap") is not None:
            p, q = obj["gap"].split("/")
            gap = Fraction(int(p), int(q))
        planted = obj.get("planted_u")
        return LatticeInstance(
            n=obj["n"],
            basis=tuple(tuple(int(x) for x in row) for row in obj["basis"]),
            planted_u=None if planted is None else tuple(int(x) for x in planted),
            gap=gap,
        )


def dot(u, v) -> Fraction:
    return sum((Fraction(a) * Fraction(b) for a, b in zip(u, v)), Fraction(0))


def norm2(v) -> Fraction:
    return dot(v, v)


def vec_combination(coeffs, basis):
    """Integer combination sum_i coeffs[i] * basis[i]."""
    n = len(basis[0])
    out = [0] * n
    for c, row in zip(coeffs, basis):
        for j in range(n):
            out[j] += c * row[j]
    return tuple(out)


def gram_schmidt(basis) -> GramSchmidtData:
    """Exact Gram-Schmidt orthogonalization of independent rows."""
    rows = [tuple(Fraction(x) for x in row) for row in basis]
    n = len(rows)
    bstar: list = []
    mu: list = []
    for i in range(n):
        murow = [Fraction(0)] * n
        v = list(rows[i])
        for j in range(i):
            denom = norm2(bstar[j])
            m = dot(rows[i], bstar[j]) / denom
            murow[j] = m
            for k in range(len(v)):
                v[k] -= m * bstar[j][k]
        murow[i] = Fraction(1)
        if norm2(v) == 0:
            raise DegenerateBasisError(f"row {i} is dependent on earlier rows")
        bstar.append(tuple(v))
        mu.append(tuple(murow))
    return GramSchmidtData(bstar=tuple(bstar), mu=tuple(mu))


def is_lll_reduced(basis, strict_lovasz: bool = False) -> bool:
    """Check the reduction inequalities exactly.

    Verifies |<b_i, b*_j>| <= ||b*_j||^2 / 2 for i > j and the Gram-Schmidt
    decay ||b*_i||^2 <= 2 ||b*_{i+1}||^2 (delta = 3/4 consequence).  With
    strict_lovasz, checks the delta = 3/4 exchange condition itself.
    """
    gs = gram_schmidt(basis)
    n = len(gs.bstar)
    rows = [tuple(Fraction(x) for x in row) for row in basis]
    for i in range(n):
        for j in range(i):
            if abs(dot(rows[i], gs.bstar[j])) * 2 > norm2(gs.bstar[j]):
                return False
    for i in range(n - 1):
        if norm2(gs.bstar[i]) > 2 * norm2(gs.bstar[i + 1]):
            return False
    if strict_lovasz:
        for i in range(n - 1):
            lhs = Fraction(3, 4) * norm2(gs.bstar[i])
            rhs = norm2(gs.bstar[i + 1]) + gs.mu[i + 1][i] ** 2 * norm2(gs.bstar[i])
            if lhs > rhs:
                return False
    return True


@dataclass(frozen=True)
class LLLResult:
    basis: tuple      # reduced integer basis
    transform: tuple  # unimodular U with reduced = U @ input


def _det_int(mat) -> int:
    """Exact determinant of an integer matrix (fraction-free elimination)."""
    m = [[Fraction(x) for x in row] for row in mat]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return 0
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] * inv
            for c in range(col, n):
                m[r][c] -= f * m[col][c]
    assert det.denominator == 1
    return det.numerator


def lll_reduce(basis, delta: Fraction = Fraction(3, 4)) -> LLLResult:
    """LLL reduction with exact rationals; returns basis and its transform.

    Postconditions (checked): same lattice via unimodular transform, paper
    inequalities hold on the output.
    """
    b = [list(int(x) for x in row) for row in basis]
    n = len(b)
    gram_schmidt(b)  # raises on dependent rows
    u = [[int(i == j) for j in range(n)] for i in range(n)]

    def gs():
        return gram_schmidt(b)

    g = gs()
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            m = dot(b[k], g.bstar[j]) / norm2(g.bstar[j])
            if abs(m) * 2 > 1:
                r = round(m)  # round half to even is fine: |m - r| <= 1/2 either way
                for c in range(n):
                    b[k][c] -= r * b[j][c]
                    u[k][c] -= r * u[j][c]
                g = gs()
        if norm2(g.bstar[k]) >= (delta - g.mu[k][k - 1] ** 2) * norm2(g.bstar[k - 1]):
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            u[k], u[k - 1] = u[k - 1], u[k]
            g = gs()
            k = max(k - 1, 1)

    result = LLLResult(
        basis=tuple(tuple(row) for row in b),
        transform=tuple(tuple(row) for row in u),
    )
    assert abs(_det_int(result.transform)) == 1
    assert is_lll_reduced(result.basis, strict_lovasz=True)
    return result


def lll_lower_bound2(basis) -> Fraction:
    """min_i ||b*_i||^2, an exact lower bound on the squared shortest length."""
    gs = gram_schmidt(basis)
    return min(norm2(row) for row in gs.bstar)


def _canonical_sign(c):
    for x in c:
        if x != 0:
            return tuple(-v for v in c) if x < 0 else tuple(c)
    return tuple(c)


def shortest_vector_bruteforce(basis, coeff_bound: int):
    """Exhaustive argmin of ||sum c_i b_i|| over 0 < max|c_i| <= coeff_bound.

    Returns (coeffs, norm2).  Ties: lexicographically smallest coefficient
    vector whose first nonzero entry is positive.
    """
    n = len(basis)
    total = (2 * coeff_bound + 1) ** n
    if total > ENUM_BUDGET:
        raise GenerationError(f"enumeration budget exceeded: {total} > {ENUM_BUDGET}")
    rng_axis = np.arange(-coeff_bound, coeff_bound + 1, dtype=np.int64)
    grids = np.meshgrid(*([rng_axis] * n), indexing="ij")
    coeffs = np.stack([g.ravel() for g in grids], axis=1)  # (total, n)
    bmat = np.asarray(basis, dtype=np.int64)
    vecs = coeffs @ bmat
    norms = np.einsum("ij,ij->i", vecs, vecs)
    nonzero = np.any(coeffs != 0, axis=1)
    norms = np.where(nonzero, norms, np.iinfo(np.int64).max)
    best = int(norms.min())
    winners = coeffs[norms == best]
    cands = sorted(_canonical_sign(tuple(int(x) for x in c)) for c in winners)
    return cands[0], best


def enumerate_short_vectors(basis, coeff_bound: int, norm2_limit: int):
    """All coefficient vectors (sign-canonical, deduplicated) with squared norm <= limit."""
    n = len(basis)
    total = (2 * coeff_bound + 1) ** n
    if total > ENUM_BUDGET:
        raise GenerationError(f"enumeration budget exceeded: {total} > {ENUM_BUDGET}")
    rng_axis = np.arange(-coeff_bound, coeff_bound + 1, dtype=np.int64)
    grids = np.meshgrid(*([rng_axis] * n), indexing="ij")
    coeffs = np.stack([g.ravel() for g in grids], axis=1)
    bmat = np.asarray(basis, dtype=np.int64)
    vecs = coeffs @ bmat
    norms = np.einsum("ij,ij->i", vecs, vecs)
    keep = (norms <= norm2_limit) & np.any(coeffs != 0, axis=1)
    out = {}
    for c, m in zip(coeffs[keep], norms[keep]):
        key = _canonical_sign(tuple(int(x) for x in c))
        out[key] = int(m)
    return sorted(out.items())


def covering_coeff_bound(basis, rho2: Fraction) -> int:
    """Coefficient box guaranteed to contain every vector with ||v||^2 <= rho2.

    From the Gram-Schmidt expansion, |c_i| <= (rho / min_j ||b*_j||) (3/2)^(n-i)
    for a size-reduced basis; we use the max over i, which is crude but exact.
    """
    n = len(basis)
    low = lll_lower_bound2(basis)
    ratio2 = Fraction(rho2) / low
    bound2 = ratio2 * Fraction(3, 2) ** (2 * (n - 1))
    b = math.isqrt(int(bound2)) + 1
    return b


def _sqrt_lower_fraction(x: Fraction, scale: int = 2**20) -> Fraction:
    """Largest Fraction k/scale with (k/scale)^2 <= x."""
    num = x.numerator * scale * scale // x.denominator
    return Fraction(math.isqrt(num), scale)


def certify_gap(basis, planted_u, gap_target: Fraction):
    """Verify the planted vector is the unique shortest (up to sign) and every
    non-parallel vector is >= gap_target times longer; returns a certified
    rational lower bound on the gap, or raises GenerationError.

    Enumeration covers the ball of radius gap_target * ||u|| via an exact
    coefficient box on the LLL-reduced basis, so the certificate is complete,
    not merely sampled.
    """
    red = lll_reduce(basis)
    uvec = vec_combination(planted_u, basis)
    u2 = int(norm2(uvec))
    rho2 = Fraction(gap_target) ** 2 * u2
    bound = covering_coeff_bound(red.basis, rho2)
    if (2 * bound + 1) ** len(basis) > ENUM_BUDGET:
        raise GenerationError("gap certification would exceed the enumeration budget")
    short = enumerate_short_vectors(red.basis, bound, int(rho2) + 1)
    best_nonparallel2 = None
    for coeffs, m2 in short:
        v = vec_combination(coeffs, red.basis)
        if m2 < u2:
            raise GenerationError("planted vector is not shortest")
        parallel = all(
            v[i] * uvec[j] == v[j] * uvec[i]
            for i in range(len(v))
            for j in range(i + 1, len(v))
        )
        if not parallel:
            if best_nonparallel2 is None or m2 < best_nonparallel2:
                best_nonparallel2 = m2
    if best_nonparallel2 is None:
        # nothing non-parallel inside the ball: the target itself is certified
        return Fraction(gap_target)
    gamma = _sqrt_lower_fraction(Fraction(best_nonparallel2, u2))
    if gamma < gap_target:
        raise GenerationError(
            f"certified gap {float(gamma):.3f} below target {float(Fraction(gap_target)):.3f}"
        )
    return gamma


def gen_unique_lattice(
    n: int,
    gap_target,
    coeff_budget: int = 2000,
    seed: int = 0,
    max_tries: int = 20,
    mix_ops: Optional[int] = None,
) -> LatticeInstance:
    """Planted gamma-unique instance: diagonal-dominant start, one short row,
    random unimodular mixing, gap certified by enumeration."""
    if n < 1:
        raise PreconditionError("n >= 1 required")
    gap_target = Fraction(gap_target)
    if n == 1:
        return LatticeInstance(n=1, basis=((1,),), planted_u=(1,), gap=gap_target)
    rng = np.random.default_rng(seed)
    g_diag = int(math.ceil(gap_target)) + 1
    mix = 2 * n if mix_ops is None else mix_ops
    for _ in range(max_tries):
        b = [[g_diag * int(i == j) for j in range(n)] for i in range(n)]
        b[n - 1][n - 1] = 1
        u_inv = [[int(i == j) for j in range(n)] for i in range(n)]
        for _ in range(mix):
            i, j = rng.integers(0, n, 2)
            if i == j:
                continue
            c = int(rng.choice([-1, 1]))
            for col in range(n):
                b[i][col] += c * b[j][col]
            for row in range(n):
                u_inv[row][j] -= c * u_inv[row][i]
        planted = tuple(int(x) for x in u_inv[n - 1])
        basis = tuple(tuple(row) for row in b)
        try:
            red = lll_reduce(basis)
            if covering_coeff_bound(red.basis, gap_target**2 * norm2(
                vec_combination(planted, basis))) > coeff_budget:
                continue
            gamma = certify_gap(basis, planted, gap_target)
        except GenerationError:
            continue
        return LatticeInstance(n=n, basis=basis, planted_u=planted, gap=gamma)
    raise GenerationError(f"could not certify gap {gap_target} within {max_tries} tries")


def reduce_instance(instance: LatticeInstance) -> LatticeInstance:
    """LLL-reduce the basis and remap planted coefficients through the transform."""
    red = lll_reduce(instance.basis)
    planted = instance.planted_u
    if planted is not None:
        # v = u . B = u . U^-1 . B'; solve u' . B' = v exactly
        v = vec_combination(planted, instance.basis)
        planted = solve_coefficients(red.basis, v)
    return LatticeInstance(n=instance.n, basis=red.basis, planted_u=planted, gap=instance.gap)


def solve_coefficients(basis, vector):
    """Exact integer coefficients c with c . basis == vector (raises if none)."""
    n = len(basis)
    m = [[Fraction(basis[r][c]) for r in range(n)] for c in range(n)]  # columns = rows of basis
    rhs = [Fraction(x) for x in vector]
    # gaussian elimination on the transposed system
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise DegenerateBasisError("singular basis")
        m[col], m[piv] = m[piv], m[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv = 1 / m[col][col]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col] * inv
                for c in range(col, n):
                    m[r][c] -= f * m[col][c]
                rhs[r] -= f * rhs[col]
    coeffs = []
    for i in range(n):
        c = rhs[i] / m[i][i]
        if c.denominator != 1:
            raise ValueError("vector is not in the lattice")
        coeffs.append(c.numerator)
    return tuple(coeffs)


def check_coeff_bound(instance: LatticeInstance) -> bool:
    """|u_i| <= 2^(2n) for the planted coefficients in an LLL-reduced basis."""
    if instance.planted_u is None:
        raise PreconditionError("planted_u required")
    if not is_lll_reduced(instance.basis):
        raise PreconditionError("basis is not LLL-reduced")
    bound = 2 ** (2 * instance.n)
    return all(abs(int(c)) <= bound for c in instance.planted_u)
