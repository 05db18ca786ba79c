"""Arithmetic q-matchings on Z_N.

Two families of partial involutions pair values exactly q apart:

  kind 1: t -> t+q when t mod 2q < q, t -> t-q when t mod 2q >= q
  kind 2: t -> t-q when t mod 2q < q, t -> t+q when t mod 2q >= q

(undefined where the partner would leave {0,...,N-1}).  A_1 holds the lower
endpoints, A_2 the upper ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class MatchingDesc:
    kind: int  # 1 or 2
    q: int
    N: int

    def __post_init__(self):
        if self.kind not in (1, 2):
            raise ValueError("kind must be 1 or 2")
        if not 0 < self.q < self.N:
            raise ValueError("require 0 < q < N")


def eval_matching(desc: MatchingDesc, t: int) -> Optional[int]:
    """f(t), or None where undefined."""
    q, n = desc.q, desc.N
    if not 0 <= t < n:
        raise ValueError("t out of range")
    low_branch = (t % (2 * q)) < q
    if desc.kind == 2:
        low_branch = not low_branch
    if low_branch:
        return t + q if t + q < n else None
    return t - q if t - q >= 0 else None


def defined_mask(desc: MatchingDesc) -> np.ndarray:
    t = np.arange(desc.N)
    return _partner_vec(desc, t) >= 0


def _partner_vec(desc: MatchingDesc, t: np.ndarray) -> np.ndarray:
    """Vector f(t) with -1 where undefined."""
    q, n = desc.q, desc.N
    low = (t % (2 * q)) < q
    if desc.kind == 2:
        low = ~low
    up = t + q
    down = t - q
    out = np.where(low, np.where(up < n, up, -1), np.where(down >= 0, down, -1))
    return out


def partition(desc: MatchingDesc) -> Tuple[np.ndarray, np.ndarray]:
    """(A_1, A_2): lower and upper endpoints of the defined pairs."""
    t = np.arange(desc.N)
    f = _partner_vec(desc, t)
    a1 = t[(f >= 0) & (f > t)]
    a2 = t[(f >= 0) & (f < t)]
    return a1, a2


def a1_mask(desc: MatchingDesc) -> np.ndarray:
    """Boolean mask of A_1(f): both endpoints in range, f(t) = t + q."""
    t = np.arange(desc.N)
    f = _partner_vec(desc, t)
    return (f >= 0) & (f > t)


def intersection_size(desc: MatchingDesc, member: np.ndarray) -> int:
    """#{t in T : f(t) in T} for T given as a boolean membership vector."""
    member = np.asarray(member, dtype=bool)
    if member.shape != (desc.N,):
        raise ValueError("membership vector must have length N")
    t = np.arange(desc.N)
    f = _partner_vec(desc, t)
    ok = (f >= 0) & member & member[np.clip(f, 0, desc.N - 1)]
    return int(np.count_nonzero(ok))


def set_to_mask(values, n: int) -> np.ndarray:
    m = np.zeros(n, dtype=bool)
    m[np.asarray(list(values), dtype=np.int64)] = True
    return m


def find_good_matching(
    s_a_mask: np.ndarray,
    q: int,
    k_max: int = 16,
    threshold: Optional[int] = None,
) -> Optional[MatchingDesc]:
    """First matching (by multiple, then kind) whose intersection with S(A)
    reaches the threshold; default threshold |S(A)| / 8."""
    s_a_mask = np.asarray(s_a_mask, dtype=bool)
    n = s_a_mask.size
    if q * k_max >= n:
        raise ValueError("require q * k_max < N")
    if threshold is None:
        threshold = max(1, int(np.count_nonzero(s_a_mask)) // 8)
    for mult in range(1, k_max + 1):
        for kind in (1, 2):
            desc = MatchingDesc(kind=kind, q=mult * q, N=n)
            if intersection_size(desc, s_a_mask) >= threshold:
                return desc
    return None


def check_pair_density(member: np.ndarray, q: int, s: int) -> Tuple[int, int]:
    """Best multiple q' in {q, 2q, ..., 4sq} by the count #{t in T : t+q' in T}.

    Preconditions |T| > N/s and q < N/(8s); the caller asserts the
    N/(32 s^3) lower bound on the returned count.
    """
    member = np.asarray(member, dtype=bool)
    n = member.size
    size = int(np.count_nonzero(member))
    if not size > n / s:
        raise ValueError("require |T| > N/s")
    if not q < n / (8 * s):
        raise ValueError("require q < N/(8s)")
    best_q, best_count = q, -1
    for k in range(1, 4 * s + 1):
        qp = k * q
        if qp >= n:
            break
        count = int(np.count_nonzero(member[:-qp] & member[qp:]))
        if count > best_count:
            best_q, best_count = qp, count
    return best_q, best_count
