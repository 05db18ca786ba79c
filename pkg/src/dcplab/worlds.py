"""World-side machinery for the coset-sampling algorithms.

A world owns the secret (the coset offset d, or the planted lattice data that
induces it), evolves register states, and answers measurement requests.
Solver code interacts with worlds only through sampling and measurement
methods; it never reads the secret.  Tests and the harness may call
reveal_secret() to audit results after the fact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import _kernels
from .matching import MatchingDesc, a1_mask, eval_matching
from .qsim import QState, apply_label_fn, e2pi, hadamard, marginal, measure, phase_i
from .subsetsum import SubsetSumOracle, default_r


class StructuralViolationError(AssertionError):
    """A register sampler found a cell with more than one point per side."""


class WorldContractError(AssertionError):
    """World-side invariant broke (e.g. inconsistent pair differences)."""


@dataclass(frozen=True)
class PhaseRegister:
    """Post-Fourier register: public outcome a, world-held corruption data."""

    a: int
    _bad: bool = False
    _b: int = 0


@dataclass(frozen=True)
class PairEntry:
    t: int            # A_1-side target
    mask_low: int     # canonical mask of t ("beta", the reported label)
    mask_high: int    # canonical mask of t + q (the partner label)
    w_low: int        # endpoint masks consistent with the bad-register bits
    w_high: int


@dataclass(frozen=True)
class CollapseTable:
    """Exact outcome distribution of the two-point routine on fixed registers."""

    N: int
    r: int
    q: int
    s: int
    entries: Tuple[PairEntry, ...]
    mass: int

    @property
    def p_success(self) -> float:
        return self.mass / 2 ** (self.r - self.s)


@dataclass(frozen=True)
class Residual:
    """World-held post-measurement register: one or two basis labels with the
    hidden relative phase."""

    r: int
    beta: int
    partner: int
    state: QState  # dims (2**r,), support subset of {beta, partner}
    two_sided: bool


def _to_one_qubit_perm(beta: int, partner: int) -> dict:
    """Label permutation sending beta -> 0 and partner -> 1.

    The remaining displaced labels are matched up canonically so the map is a
    bijection even when beta or partner already lies in {0, 1}.
    """
    mapping = {beta: 0, partner: 1}
    nodes = {beta, partner, 0, 1}
    free_sources = sorted(nodes - {beta, partner})
    free_targets = sorted(nodes - {0, 1})
    mapping.update(zip(free_sources, free_targets))
    return mapping


def mask_matches_bits(mask: int, r: int, bad_flags, bad_bits) -> bool:
    for i in range(r):
        if bad_flags[i] and ((mask >> (r - 1 - i)) & 1) != int(bad_bits[i]):
            return False
    return True


def two_point_collapse(
    A, bad_flags, bad_bits, N: int, desc: MatchingDesc, oracle: SubsetSumOracle
) -> CollapseTable:
    """Set-based collapse: enumerate the pair structure of the routine exactly."""
    r = len(A)
    ans = oracle.answers(A, N)
    q = desc.q
    a1 = a1_mask(desc)
    s = int(sum(bool(x) for x in bad_flags))
    entries: List[PairEntry] = []
    mass = 0
    for t in np.flatnonzero(a1):
        t = int(t)
        c1 = int(ans[t])
        c2 = int(ans[t + q])
        if c1 < 0 or c2 < 0:
            continue
        w_low = int(mask_matches_bits(c1, r, bad_flags, bad_bits))
        w_high = int(mask_matches_bits(c2, r, bad_flags, bad_bits))
        if w_low + w_high == 0:
            continue
        entries.append(PairEntry(t=t, mask_low=c1, mask_high=c2, w_low=w_low, w_high=w_high))
        mass += w_low + w_high
    return CollapseTable(N=N, r=r, q=q, s=s, entries=tuple(entries), mass=mass)


def residual_for_entry(entry: PairEntry, r: int, q: int, N: int, d: int) -> Residual:
    """The post-(beta, gamma=1) register state for one pair, exact phases."""
    norm = 1.0 / math.sqrt(entry.w_low + entry.w_high)
    amps = {}
    if entry.w_low:
        amps[(entry.mask_low,)] = norm * e2pi((entry.t * d % N) / N)
    if entry.w_high:
        amps[(entry.mask_high,)] = norm * e2pi(((entry.t + q) * d % N) / N)
    state = QState.from_amplitudes((2**r,), amps)
    return Residual(
        r=r,
        beta=entry.mask_low,
        partner=entry.mask_high,
        state=state,
        two_sided=entry.w_low + entry.w_high == 2,
    )


def two_point_collapse_dense(
    A, bad_flags, bad_bits, d: int, N: int, desc: MatchingDesc, oracle: SubsetSumOracle
) -> QState:
    """Literal simulation: tensor the r post-Fourier qubits, adjoin the
    (beta, gamma) ancillas by the routine's reversible label map."""
    r = len(A)
    state = None
    for i in range(r):
        if bad_flags[i]:
            qubit = QState.basis_state((2,), (int(bad_bits[i]),))
        else:
            qubit = QState.from_amplitudes(
                (2,),
                {(0,): 1 / math.sqrt(2), (1,): e2pi((A[i] * d % N) / N) / math.sqrt(2)},
            )
        state = qubit if state is None else state.tensor(qubit)
    ans = oracle.answers(A, N)
    a1 = a1_mask(desc)

    def route(label):
        mask = 0
        t = 0
        for i in range(r):
            if label[i]:
                mask |= 1 << (r - 1 - i)
                t += A[i]
        t %= N
        ft = eval_matching(desc, t)
        if int(ans[t]) != mask or ft is None or int(ans[ft]) < 0:
            return (0, 0)
        if a1[t]:
            return (mask, 1)
        return (int(ans[ft]), 1)

    from .qsim import extend_with_fn

    return extend_with_fn(state, (2**r, 2), route)


def dense_outcome_table(joint: QState, r: int):
    """(p_success, {beta: (prob, conditional residual amplitudes over alpha)})."""
    beta_gamma = marginal(joint, (r, r + 1))
    p_success = sum(p for (b, g), p in beta_gamma.items() if g == 1)
    table: Dict[int, Tuple[float, Dict[int, complex]]] = {}
    for (b, g), p in beta_gamma.items():
        if g != 1:
            continue
        amps: Dict[int, complex] = {}
        for label, amp in joint.amps.items():
            if label[r] == b and label[r + 1] == 1:
                mask = 0
                for i in range(r):
                    if label[i]:
                        mask |= 1 << (r - 1 - i)
                amps[mask] = amp
        table[b] = (p, amps)
    return p_success, table


class DcpWorldBase:
    """Shared solver-facing surface: register sampling plus collapse services."""

    N: int

    def _register_batch(self, count: int, r: int, rng) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        raise NotImplementedError

    def _secret_d(self) -> int:
        raise NotImplementedError

    def reveal_secret(self) -> int:
        """For harness/audit use only; solver code must never call this."""
        return self._secret_d()

    # -- single-shot path (exact, any N) ------------------------------------

    def sample_phase_register(self, rng) -> PhaseRegister:
        a, bad, b = self._register_batch(1, 1, rng)
        return PhaseRegister(a=int(a[0, 0]), _bad=bool(bad[0, 0]), _b=int(b[0, 0]))

    def sample_phase_registers(self, r: int, rng) -> List[PhaseRegister]:
        a, bad, b = self._register_batch(1, r, rng)
        return [
            PhaseRegister(a=int(a[0, i]), _bad=bool(bad[0, i]), _b=int(b[0, i]))
            for i in range(r)
        ]

    def collapse_registers(self, registers, oracle, desc: MatchingDesc, rng):
        """Run the routine's collapse on given registers.

        Returns (gamma, beta, residual_handle); residual stays world-side.
        """
        A = tuple(reg.a for reg in registers)
        bad_flags = tuple(reg._bad for reg in registers)
        bad_bits = tuple(reg._b for reg in registers)
        table = two_point_collapse(A, bad_flags, bad_bits, self.N, desc, oracle)
        if rng.random() >= table.p_success:
            return 0, None, None
        weights = np.array([e.w_low + e.w_high for e in table.entries], dtype=float)
        idx = int(rng.choice(len(table.entries), p=weights / weights.sum()))
        entry = table.entries[idx]
        residual = residual_for_entry(entry, table.r, table.q, self.N, self._secret_d())
        return 1, entry.mask_low, residual

    def measure_residual(self, residual: Residual, routine: int, rng) -> int:
        """Map the two labels to one qubit, apply H (routine 2: S then H), measure."""
        perm = _to_one_qubit_perm(residual.beta, residual.partner)
        mapped = apply_label_fn(residual.state, lambda lab: (perm.get(lab[0], lab[0]),))
        qubit = QState.from_amplitudes(
            (2,), {(lab[0],): amp for lab, amp in mapped.amps.items()}
        )
        if routine == 2:
            qubit = phase_i(qubit, 0)
        qubit = hadamard(qubit, 0)
        return int(measure(qubit, (0,), rng).outcome[0])

    # -- batch path (kernel) -------------------------------------------------

    def _phase_trig(self, q: int) -> Tuple[float, float]:
        phi = 2 * math.pi * ((q * self._secret_d()) % self.N) / self.N
        return math.cos(phi), math.sin(phi)

    def kernel_ready(self, oracle: SubsetSumOracle) -> bool:
        return (
            self.N >= 64
            and self.N % 64 == 0
            and oracle.kernel_spec(self.N) is not None
        )

    def collect_routine_bits(
        self,
        oracle: SubsetSumOracle,
        desc: MatchingDesc,
        routine: int,
        quota: int,
        max_attempts: int,
        rng,
        chunk: int = 8192,
        starve_probe: int = 0,
        starve_min: int = 1,
    ):
        """Run the routine until `quota` successes or the attempt budget ends.

        Returns (successes, ones, attempts).  With starve_probe > 0, bails out
        early when the first probe window shows almost no successes.
        """
        r = default_r(self.N)
        if self.kernel_ready(oracle):
            return self._collect_kernel(
                oracle, desc, routine, quota, max_attempts, rng, r, chunk,
                starve_probe, starve_min,
            )
        succ = ones = used = 0
        while succ < quota and used < max_attempts:
            regs = self.sample_phase_registers(r, rng)
            used += 1
            gamma, _, residual = self.collapse_registers(regs, oracle, desc, rng)
            if gamma == 0:
                continue
            bit = self.measure_residual(residual, routine, rng)
            succ += 1
            ones += bit
            if starve_probe and used == starve_probe and succ < starve_min:
                break
        return succ, ones, used

    def _collect_kernel(
        self, oracle, desc, routine, quota, max_attempts, rng, r, chunk,
        starve_probe, starve_min,
    ):
        n = self.N
        p_keep, seed = oracle.kernel_spec(n)
        if p_keep == 1.0:
            keep = np.ones(n, dtype=bool)
        else:
            keep = oracle.keep_mask(n)
        keep_w = _kernels.bits_to_words(keep)
        a1_w = _kernels.bits_to_words(a1_mask(desc))
        cosv, sinv = self._phase_trig(desc.q)
        succ = ones = used = 0
        while succ < quota and used < max_attempts:
            k = min(chunk, max_attempts - used)
            a, bad, b = self._register_batch(k, r, rng)
            u = rng.random((k, 3))
            got, one, rows = _kernels.run_routine_bits(
                n, r, desc.q, routine, cosv, sinv,
                a, bad, b, u, a1_w, keep_w, quota - succ,
            )
            succ += int(got)
            ones += int(one)
            used += int(rows)
            if starve_probe and used >= starve_probe and succ < starve_min:
                break
        return succ, ones, used


class DcpWorld(DcpWorldBase):
    """Random-offset world: registers |0,x> + |1,(x+d) mod N| with corruption."""

    def __init__(self, N: int, d: Optional[int] = None, bad_prob: Optional[float] = None, seed: int = 0):
        if N < 2:
            raise ValueError("N >= 2 required")
        if bad_prob is None:
            bad_prob = 1.0 / math.log2(N)
        if not 0 <= bad_prob < 1:
            raise ValueError("bad_prob must lie in [0, 1)")
        self.N = int(N)
        self.bad_prob = float(bad_prob)
        init = np.random.default_rng(seed)
        self._d = int(init.integers(0, N)) if d is None else int(d) % N

    def _secret_d(self) -> int:
        return self._d

    def _register_batch(self, count, r, rng):
        a = rng.integers(0, self.N, (count, r), dtype=np.int64)
        bad = rng.random((count, r)) < self.bad_prob
        b = rng.integers(0, 2, (count, r), dtype=np.uint8)
        return a, np.ascontiguousarray(bad), b


def make_world(N: int, d: Optional[int] = None, bad_prob: Optional[float] = None, seed: int = 0) -> DcpWorld:
    return DcpWorld(N=N, d=d, bad_prob=bad_prob, seed=seed)


class LatticeDcpWorld(DcpWorldBase):
    """Coset world fed by cube-mode two-point registers from a lattice.

    The hidden offset is the encoded pair difference; it is derived from the
    sampler's own pair structure (never from the planted vector) and asserted
    constant across every good register.
    """

    def __init__(self, register_source, N: int, buffer_size: int = 1 << 15):
        self.N = int(N)
        self._source = register_source  # callable(count, rng) -> (status, x, d)
        self._buffer_size = buffer_size
        self._d_value: Optional[int] = None
        self._bad_flags = np.empty(0, dtype=bool)
        self._bad_bits = np.empty(0, dtype=np.uint8)
        self.stats = {"good": 0, "bad": 0}

    def _secret_d(self) -> int:
        return 0 if self._d_value is None else self._d_value

    def _refill(self, rng, need: int):
        count = max(self._buffer_size, need)
        status, _, d_or_b = self._source(count, rng)
        if np.any(status >= 2):
            raise StructuralViolationError(
                f"{int(np.sum(status >= 2))} structural violations in {count} draws"
            )
        good = status == 1
        if np.any(good):
            ds = np.unique(d_or_b[good])
            if ds.size != 1:
                raise WorldContractError(f"inconsistent pair differences: {ds[:8]}")
            d_new = int(ds[0])
            if self._d_value is None:
                self._d_value = d_new
            elif self._d_value != d_new:
                raise WorldContractError("pair difference changed between batches")
        self.stats["good"] += int(np.sum(good))
        self.stats["bad"] += int(np.sum(~good))
        bad = ~good
        self._bad_flags = np.concatenate([self._bad_flags, bad])
        self._bad_bits = np.concatenate(
            [self._bad_bits, np.where(bad, d_or_b, 0).astype(np.uint8)]
        )

    def _register_batch(self, count, r, rng):
        need = count * r
        while self._bad_flags.size < need:
            self._refill(rng, need - self._bad_flags.size)
        bad = self._bad_flags[:need].reshape(count, r).copy()
        bits = self._bad_bits[:need].reshape(count, r).copy()
        self._bad_flags = self._bad_flags[need:]
        self._bad_bits = self._bad_bits[need:]
        a = rng.integers(0, self.N, (count, r), dtype=np.int64)
        return a, np.ascontiguousarray(bad), bits
