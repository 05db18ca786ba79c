"""Deterministic subset-sum oracles modulo N.

Masks: a subset B of [r] is an r-bit integer with element i (1-based) on bit
(r - i), so integer order equals lexicographic order on the bit sequence
(b_1, ..., b_r) and the returned solution is always the lexicographically
smallest one.  The empty subset answers t = 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

EXHAUSTIVE_MAX_R = 24
MITM_MAX_R = 34

C_R_DEFAULT = 4


class BudgetError(ValueError):
    pass


class OracleContractError(AssertionError):
    """An oracle returned a subset that does not sum to its target."""


def default_r(n_mod: int, c_r: int = C_R_DEFAULT) -> int:
    """r = ceil(log2 N) + C_r."""
    return max(1, math.ceil(math.log2(n_mod))) + c_r if n_mod > 1 else 1 + c_r


@dataclass(frozen=True)
class SubsetSumInstance:
    A: Tuple[int, ...]
    t: int
    N: int

    def __post_init__(self):
        object.__setattr__(self, "A", tuple(int(a) % self.N for a in self.A))
        object.__setattr__(self, "t", int(self.t) % self.N)


def mask_bits(mask: int, r: int) -> Tuple[int, ...]:
    """(b_1, ..., b_r) of a mask integer."""
    return tuple((mask >> (r - i)) & 1 for i in range(1, r + 1))


def mask_indices(mask: int, r: int) -> Tuple[int, ...]:
    """Sorted 1-based element indices of a mask."""
    return tuple(i for i in range(1, r + 1) if (mask >> (r - i)) & 1)


def mask_sum(mask: int, A: Sequence[int], N: int) -> int:
    return sum(a for i, a in enumerate(A, 1) if (mask >> (len(A) - i)) & 1) % N


@lru_cache(maxsize=128)
def _doubling_sums(A: Tuple[int, ...], N: int) -> np.ndarray:
    """sums[m] = subset sum of mask m (element 1 = most significant bit)."""
    sums = np.zeros(1, dtype=np.int64)
    for a in A:
        nxt = np.empty(2 * len(sums), dtype=np.int64)
        nxt[0::2] = sums
        shifted = sums + (a % N)
        nxt[1::2] = np.where(shifted >= N, shifted - N, shifted)
        sums = nxt
    return sums


@lru_cache(maxsize=128)
def _canonical_table(A: Tuple[int, ...], N: int) -> np.ndarray:
    """canonical[t] = lexicographically smallest mask summing to t, else -1."""
    sums = _doubling_sums(A, N)
    canon = np.full(N, -1, dtype=np.int64)
    # descending mask order: the last write per target is the smallest mask
    canon[sums[::-1]] = np.arange(len(sums) - 1, -1, -1, dtype=np.int64)
    return canon


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer; the unreliable wrapper's target selector."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def splitmix64_array(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64)
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


class SubsetSumOracle:
    """Deterministic map (A, t, N) -> mask or None ('error')."""

    name = "base"

    def solve(self, A: Sequence[int], t: int, N: int) -> Optional[int]:
        raise NotImplementedError

    def answers(self, A: Sequence[int], N: int) -> np.ndarray:
        """Vector of answers for every t in Z_N; -1 where the oracle errors."""
        return np.array([
            -1 if (m := self.solve(A, t, N)) is None else m for t in range(N)
        ], dtype=np.int64)

    def kernel_spec(self, N: int):
        """(keep_probability, selector_seed) for compiled fast paths, or None."""
        return None

    def _checked(self, A, t, N, mask):
        if mask is not None and mask_sum(mask, A, N) != t % N:
            raise OracleContractError(f"mask {mask} does not sum to {t} mod {N}")
        return mask


class ExhaustiveOracle(SubsetSumOracle):
    """Full-table oracle: precomputes every subset sum of A."""

    name = "exhaustive"

    def solve(self, A, t, N):
        A = tuple(int(a) % N for a in A)
        if len(A) > EXHAUSTIVE_MAX_R:
            raise BudgetError(f"r={len(A)} too large for exhaustive strategy")
        m = int(_canonical_table(A, N)[t % N])
        return self._checked(A, t, N, None if m < 0 else m)

    def answers(self, A, N):
        A = tuple(int(a) % N for a in A)
        if len(A) > EXHAUSTIVE_MAX_R:
            raise BudgetError(f"r={len(A)} too large for exhaustive strategy")
        return _canonical_table(A, N).copy()

    def kernel_spec(self, N: int):
        return (1.0, 0)


@lru_cache(maxsize=128)
def _mitm_right_table(A_right: Tuple[int, ...], N: int):
    sums = _doubling_sums(A_right, N)
    table: dict = {}
    for m, s in enumerate(sums):
        s = int(s)
        if s not in table:
            table[s] = m
    return table


class MeetInMiddleOracle(SubsetSumOracle):
    """Split enumeration; agrees with the exhaustive oracle everywhere."""

    name = "meet-in-middle"

    def solve(self, A, t, N):
        A = tuple(int(a) % N for a in A)
        r = len(A)
        if r > MITM_MAX_R:
            raise BudgetError(f"r={r} too large for meet-in-middle strategy")
        h = r // 2
        left, right = A[:h], A[h:]
        rtab = _mitm_right_table(right, N)
        lsums = _doubling_sums(left, N)
        t = t % N
        for ml in range(len(lsums)):
            need = (t - int(lsums[ml])) % N
            mr = rtab.get(need)
            if mr is not None:
                return self._checked(A, t, N, (ml << (r - h)) | mr)
        return None


class UnreliableOracle(SubsetSumOracle):
    """Wraps a base oracle, answering only a measure-p set of targets.

    Membership is keyed on t (and the wrapper seed) only, so S(A) thins
    uniformly and the wrapped oracle stays deterministic.
    """

    name = "unreliable"

    def __init__(self, base: SubsetSumOracle, answer_fraction: float, seed: int = 0):
        if not 0 < answer_fraction <= 1:
            raise ValueError("answer_fraction must be in (0, 1]")
        self.base = base
        self.p = float(answer_fraction)
        self.seed = int(seed)

    def keeps(self, t: int) -> bool:
        h = splitmix64((int(t) << 20) ^ self.seed)
        return h < int(self.p * 2**64)

    def keep_mask(self, N: int) -> np.ndarray:
        h = splitmix64_array((np.arange(N, dtype=np.uint64) << np.uint64(20)) ^ np.uint64(self.seed))
        return h < np.uint64(int(self.p * 2**64))

    def solve(self, A, t, N):
        if not self.keeps(t % N):
            return None
        return self.base.solve(A, t, N)

    def answers(self, A, N):
        out = self.base.answers(A, N)
        out[~self.keep_mask(N)] = -1
        return out

    def kernel_spec(self, N: int):
        inner = self.base.kernel_spec(N)
        if inner is None or inner[0] != 1.0:
            return None
        return (self.p, self.seed)


def wrap_unreliable(base: SubsetSumOracle, answer_fraction: float, seed: int = 0) -> SubsetSumOracle:
    if answer_fraction == 1.0:
        return base
    return UnreliableOracle(base, answer_fraction, seed)


def s_of_a(oracle: SubsetSumOracle, A: Sequence[int], N: int):
    """S(A) = {t : oracle answers}, with its size."""
    if N > 2**20:
        raise BudgetError("N too large for exhaustive S(A)")
    ans = oracle.answers(A, N)
    targets = np.flatnonzero(ans >= 0)
    return targets, int(targets.size)


def solvable_targets(A: Sequence[int], N: int) -> np.ndarray:
    """Boolean reachability of each target (independent DP, no masks)."""
    reach = np.zeros(N, dtype=bool)
    reach[0] = True
    for a in A:
        reach |= np.roll(reach, int(a) % N)
    return reach


@dataclass(frozen=True)
class LegalFractionEstimate:
    fraction: float
    half_width_95: float
    trials: int


def estimate_legal_fraction(r: int, N: int, trials: int, seed: int) -> LegalFractionEstimate:
    """Monte Carlo fraction of (A, t) pairs with no solution."""
    rng = np.random.default_rng(seed)
    misses = 0
    for _ in range(trials):
        A = rng.integers(0, N, r)
        t = int(rng.integers(0, N))
        if not solvable_targets(A, N)[t]:
            misses += 1
    f = misses / trials
    hw = 1.96 * math.sqrt(max(f * (1 - f), 1e-12) / trials)
    return LegalFractionEstimate(fraction=f, half_width_95=hw, trials=trials)


def log_queries_csv(path, rows):
    """Append (A, t, N, answer) query logs: A joined by ';', mask as bits or ERROR."""
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        for A, t, N, mask in rows:
            m = "ERROR" if mask is None else "".join(map(str, mask_bits(mask, len(A))))
            w.writerow([";".join(str(a) for a in A), t, N, m])
