"""Exact simulation of small pure quantum states.

States are amplitude maps over mixed-radix labels, e.g. dims (2, N) for a
qubit next to a mod-N register.  Everything the coset-sampling algorithms
need lives here: the Fourier transform mod N, Born-rule measurement,
reversible label permutations, single-qubit gates, and trace distance.
Amplitudes are stored sparsely; the states of interest are 2-sparse until a
transform spreads them.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Sequence, Tuple

NORM_TOL = 1e-12

Label = Tuple[int, ...]


class NonReversibleError(ValueError):
    """Label function collided on the support: not a bijection."""


class NormalizationError(ValueError):
    pass


def e2pi(x: float) -> complex:
    """e(x) = exp(2 pi i x)."""
    return cmath.exp(2j * math.pi * x)


@dataclass(frozen=True)
class QState:
    dims: Tuple[int, ...]
    amps: Dict[Label, complex]

    @staticmethod
    def from_amplitudes(dims: Sequence[int], amps: Dict[Label, complex]) -> "QState":
        dims = tuple(int(d) for d in dims)
        clean = {}
        for label, a in amps.items():
            label = tuple(int(x) for x in label)
            if len(label) != len(dims) or any(
                not 0 <= v < d for v, d in zip(label, dims)
            ):
                raise ValueError(f"label {label} outside dims {dims}")
            if a != 0:
                clean[label] = complex(a)
        return QState(dims=dims, amps=clean)

    @staticmethod
    def basis_state(dims: Sequence[int], label: Sequence[int]) -> "QState":
        return QState.from_amplitudes(dims, {tuple(label): 1.0})

    def norm2(self) -> float:
        return sum(abs(a) ** 2 for a in self.amps.values())

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm2() - 1.0) <= tol

    def normalized(self) -> "QState":
        n = math.sqrt(self.norm2())
        if n == 0:
            raise NormalizationError("zero state")
        return QState(self.dims, {k: v / n for k, v in self.amps.items()})

    def inner(self, other: "QState") -> complex:
        if self.dims != other.dims:
            raise ValueError("dimension mismatch")
        return sum(
            self.amps[k].conjugate() * other.amps[k]
            for k in (self.amps.keys() & other.amps.keys())
        )

    def tensor(self, other: "QState") -> "QState":
        amps = {
            k1 + k2: a1 * a2
            for k1, a1 in self.amps.items()
            for k2, a2 in other.amps.items()
        }
        return QState(self.dims + other.dims, amps)

    def to_json_records(self) -> str:
        """Debug dump: JSON array of (label, re, im), sorted by label."""
        rec = [
            [list(k), v.real, v.imag] for k, v in sorted(self.amps.items())
        ]
        return json.dumps(rec)


@dataclass(frozen=True)
class MeasurementRecord:
    components: Tuple[int, ...]
    outcome: Label
    probability: float
    collapsed: QState


def uniform_superposition(dims: Sequence[int]) -> QState:
    total = math.prod(dims)
    amp = 1.0 / math.sqrt(total)
    labels: Iterable[Label] = _all_labels(tuple(dims))
    return QState(tuple(dims), {lab: amp for lab in labels})


def _all_labels(dims: Tuple[int, ...]):
    if not dims:
        yield ()
        return
    for rest in _all_labels(dims[1:]):
        for v in range(dims[0]):
            yield (v,) + rest


def fourier_mod(state: QState, component: int, inverse: bool = False) -> QState:
    """Fourier transform on one component: amp'(i) = sum_x e(ix/N) amp(x) / sqrt(N).

    Forward sign convention is e(+ix/N); inverse undoes it.
    """
    n = state.dims[component]
    sign = -1.0 if inverse else 1.0
    root = 1.0 / math.sqrt(n)
    # cache the n-th roots once
    table = [e2pi(sign * k / n) for k in range(n)]
    out: Dict[Label, complex] = {}
    for label, a in state.amps.items():
        x = label[component]
        pre = label[:component]
        post = label[component + 1:]
        for i in range(n):
            nl = pre + (i,) + post
            out[nl] = out.get(nl, 0j) + a * table[(i * x) % n] * root
    return QState(state.dims, {k: v for k, v in out.items() if abs(v) > 1e-15})


def marginal(state: QState, components: Sequence[int]) -> Dict[Label, float]:
    """Exact outcome distribution of measuring the given components."""
    comps = tuple(components)
    probs: Dict[Label, float] = {}
    for label, a in state.amps.items():
        key = tuple(label[c] for c in comps)
        probs[key] = probs.get(key, 0.0) + abs(a) ** 2
    return probs


def conditional(state: QState, components: Sequence[int], outcome: Sequence[int]) -> QState:
    """Renormalized post-measurement state for a given outcome."""
    comps = tuple(components)
    out = tuple(outcome)
    amps = {
        label: a
        for label, a in state.amps.items()
        if tuple(label[c] for c in comps) == out
    }
    if not amps:
        raise ValueError("outcome has zero probability")
    return QState(state.dims, amps).normalized()


def measure(state: QState, components: Sequence[int], rng) -> MeasurementRecord:
    """Born-rule measurement of the given components, drawn from rng."""
    probs = marginal(state, components)
    outcomes = sorted(probs.keys())
    weights = [probs[o] for o in outcomes]
    idx = int(rng.choice(len(outcomes), p=[w / sum(weights) for w in weights]))
    out = outcomes[idx]
    return MeasurementRecord(
        components=tuple(components),
        outcome=out,
        probability=probs[out],
        collapsed=conditional(state, components, out),
    )


def apply_label_fn(state: QState, fn: Callable[[Label], Label]) -> QState:
    """Permute basis labels by a bijection (checked on the support)."""
    out: Dict[Label, complex] = {}
    for label, a in state.amps.items():
        nl = tuple(fn(label))
        if len(nl) != len(state.dims) or any(
            not 0 <= v < d for v, d in zip(nl, state.dims)
        ):
            raise ValueError(f"image label {nl} outside dims")
        if nl in out:
            raise NonReversibleError(f"collision at {nl}")
        out[nl] = a
    return QState(state.dims, out)


def extend_with_fn(state: QState, new_dims: Sequence[int], fn: Callable[[Label], Label]) -> QState:
    """Adjoin ancilla components computed from the existing label.

    fn(label) -> ancilla label tuple.  Always reversible (input kept).
    """
    nd = tuple(int(d) for d in new_dims)
    out: Dict[Label, complex] = {}
    for label, a in state.amps.items():
        anc = tuple(fn(label))
        if len(anc) != len(nd) or any(not 0 <= v < d for v, d in zip(anc, nd)):
            raise ValueError(f"ancilla label {anc} outside dims {nd}")
        out[label + anc] = a
    return QState(state.dims + nd, out)


def _apply_qubit_gate(state: QState, component: int, mat) -> QState:
    if state.dims[component] != 2:
        raise ValueError("target component is not a qubit")
    out: Dict[Label, complex] = {}
    for label, a in state.amps.items():
        b = label[component]
        pre, post = label[:component], label[component + 1:]
        for nb in (0, 1):
            coef = mat[nb][b]
            if coef == 0:
                continue
            nl = pre + (nb,) + post
            out[nl] = out.get(nl, 0j) + coef * a
    return QState(state.dims, {k: v for k, v in out.items() if abs(v) > 1e-15})


def hadamard(state: QState, component: int) -> QState:
    s = 1.0 / math.sqrt(2)
    return _apply_qubit_gate(state, component, [[s, s], [s, -s]])


def phase_i(state: QState, component: int) -> QState:
    """diag(1, i) on a qubit."""
    return _apply_qubit_gate(state, component, [[1, 0], [0, 1j]])


def trace_distance_pure(psi1: QState, psi2: QState) -> float:
    """sqrt(1 - |<psi1|psi2>|^2); also checked against the l2-distance bound."""
    for s in (psi1, psi2):
        if not s.is_normalized(tol=1e-9):
            raise NormalizationError("trace distance needs normalized states")
    ip = abs(psi1.inner(psi2))
    val = math.sqrt(max(0.0, 1.0 - ip * ip))
    keys = psi1.amps.keys() | psi2.amps.keys()
    l2 = math.sqrt(
        sum(abs(psi1.amps.get(k, 0) - psi2.amps.get(k, 0)) ** 2 for k in keys)
    )
    # sqrt(1 - ip^2) amplifies float error near ip = 1, hence the slack
    assert val <= l2 + 1e-5
    return val
