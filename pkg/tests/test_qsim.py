import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcplab.qsim import (
    MeasurementRecord,
    NonReversibleError,
    NormalizationError,
    QState,
    apply_label_fn,
    conditional,
    e2pi,
    extend_with_fn,
    fourier_mod,
    hadamard,
    marginal,
    measure,
    phase_i,
    trace_distance_pure,
    uniform_superposition,
)


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def test_fourier_n2_uniform():
    st0 = QState.basis_state([2], [0])
    out = fourier_mod(st0, 0)
    assert close(out.amps[(0,)], 1 / math.sqrt(2))
    assert close(out.amps[(1,)], 1 / math.sqrt(2))


def test_fourier_n4_phases():
    out = fourier_mod(QState.basis_state([4], [1]), 0)
    expect = [0.5, 0.5j, -0.5, -0.5j]
    for i in range(4):
        assert close(out.amps[(i,)], expect[i])


def test_fourier_coset_marginal_uniform():
    # |0,3> + |1,5> on dims (2,8): after the mod-8 transform of the second
    # component the marginal over that component is exactly uniform.
    n = 8
    psi = QState.from_amplitudes(
        [2, n], {(0, 3): 1 / math.sqrt(2), (1, 5): 1 / math.sqrt(2)}
    )
    out = fourier_mod(psi, 1)
    probs = marginal(out, [1])
    for i in range(n):
        assert close(probs[(i,)], 1 / n, tol=1e-10)


def test_fourier_single_component_two_term():
    # A single-register two-term state does NOT give a uniform marginal:
    # P(i) = |e(3i/8)+e(5i/8)|^2 / 16 = cos^2(pi i / 4) / 4.
    n = 8
    psi = QState.from_amplitudes([n], {(3,): 1 / math.sqrt(2), (5,): 1 / math.sqrt(2)})
    out = fourier_mod(psi, 0)
    probs = marginal(out, [0])
    for i in range(n):
        assert close(probs.get((i,), 0.0), math.cos(math.pi * i / 4) ** 2 / 4, tol=1e-10)


def test_fourier_involution():
    rng = np.random.default_rng(0)
    for n in (3, 8, 16):
        amps = {}
        for x in range(n):
            amps[(x,)] = complex(rng.normal(), rng.normal())
        psi = QState.from_amplitudes([n], amps).normalized()
        back = fourier_mod(fourier_mod(psi, 0), 0, inverse=True)
        for k in range(n):
            assert close(back.amps.get((k,), 0j), psi.amps.get((k,), 0j), tol=1e-10)


def test_fourier_unitary():
    psi = QState.from_amplitudes([5], {(0,): 0.6, (3,): 0.8j})
    out = fourier_mod(psi, 0)
    assert close(out.norm2(), 1.0)


def test_measure_two_outcomes():
    rng = np.random.default_rng(1)
    psi = QState.from_amplitudes(
        [2, 8], {(0, 2): 1 / math.sqrt(2), (1, 5): 1 / math.sqrt(2)}
    )
    seen = set()
    for _ in range(50):
        rec = measure(psi, [1], rng)
        assert rec.outcome in {(2,), (5,)}
        assert close(rec.probability, 0.5)
        seen.add(rec.outcome)
    assert seen == {(2,), (5,)}


def test_measure_deterministic_state():
    rng = np.random.default_rng(2)
    psi = QState.basis_state([2, 4], [1, 3])
    rec = measure(psi, [0, 1], rng)
    assert rec.outcome == (1, 3)
    assert close(rec.probability, 1.0)
    assert rec.collapsed.amps == psi.amps


def test_measure_born_frequencies():
    # empirical frequencies over 10^4 seeded trials within 4 sigma
    rng = np.random.default_rng(3)
    psi = QState.from_amplitudes([4], {(0,): 0.5, (1,): 0.5, (2,): math.sqrt(0.5)})
    n = 10_000
    counts = {k: 0 for k in ((0,), (1,), (2,))}
    for _ in range(n):
        counts[measure(psi, [0], rng).outcome] += 1
    for out, p in ((0, 0.25), (1, 0.25), (2, 0.5)):
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(counts[(out,)] / n - p) <= 4 * sigma


def test_coset_fourier_measure_residual_phase():
    # full simulation of |0,x> + |1,x+d>: conditioned on any Fourier outcome a,
    # the qubit is |0> + e(ad/N)|1> up to a global phase.
    n, x, d = 16, 5, 3
    psi = QState.from_amplitudes(
        [2, n], {(0, x): 1 / math.sqrt(2), (1, (x + d) % n): 1 / math.sqrt(2)}
    )
    out = fourier_mod(psi, 1)
    for a in range(n):
        cond = conditional(out, [1], (a,))
        amp0 = cond.amps[(0, a)]
        amp1 = cond.amps[(1, a)]
        assert close(amp1 / amp0, e2pi(a * d / n), tol=1e-10)


def test_apply_label_fn_transposition():
    phi = 0.37
    psi = QState.from_amplitudes(
        [16], {(5,): 1 / math.sqrt(2), (9,): e2pi(phi) / math.sqrt(2)}
    )
    a, b = 5, 9
    swap = {a: 0, 0: a, b: 1, 1: b}
    out = apply_label_fn(psi, lambda lab: (swap.get(lab[0], lab[0]),))
    assert close(out.amps[(0,)], 1 / math.sqrt(2))
    assert close(out.amps[(1,)], e2pi(phi) / math.sqrt(2))


def test_apply_label_fn_identity_and_collision():
    psi = QState.from_amplitudes([4], {(0,): 0.6, (1,): 0.8})
    same = apply_label_fn(psi, lambda lab: lab)
    assert same.amps == psi.amps
    with pytest.raises(NonReversibleError):
        apply_label_fn(psi, lambda lab: (2,))


def test_hadamard_phase_probabilities():
    # |0> + e(phi)|1> -> after H, P(1) = 1/2 - cos(2 pi phi)/2
    for phi, want in ((0.0, 0.0), (1 / 3, 0.75)):
        psi = QState.from_amplitudes(
            [2], {(0,): 1 / math.sqrt(2), (1,): e2pi(phi) / math.sqrt(2)}
        )
        out = hadamard(psi, 0)
        p1 = marginal(out, [0]).get((1,), 0.0)
        assert close(p1, want, tol=1e-12)


def test_phase_i_then_hadamard():
    # R2 path: P(1) = 1/2 + sin(2 pi phi)/2; phi = 1/4 gives certainty
    phi = 0.25
    psi = QState.from_amplitudes(
        [2], {(0,): 1 / math.sqrt(2), (1,): e2pi(phi) / math.sqrt(2)}
    )
    out = hadamard(phase_i(psi, 0), 0)
    assert close(marginal(out, [0])[(1,)], 1.0)


def test_trace_distance_basic():
    a = QState.basis_state([2], [0])
    b = QState.basis_state([2], [1])
    assert close(trace_distance_pure(a, a), 0.0)
    assert close(trace_distance_pure(a, b), 1.0)
    plus = QState.from_amplitudes([2], {(0,): 1 / math.sqrt(2), (1,): 1 / math.sqrt(2)})
    assert close(trace_distance_pure(a, plus), 1 / math.sqrt(2), tol=1e-12)


def test_trace_distance_unnormalized_rejected():
    a = QState.from_amplitudes([2], {(0,): 0.5})
    b = QState.basis_state([2], [0])
    with pytest.raises(NormalizationError):
        trace_distance_pure(a, b)


@st.composite
def random_qubit(draw):
    t = draw(st.floats(0, math.pi))
    p = draw(st.floats(0, 2 * math.pi))
    return QState.from_amplitudes(
        [2], {(0,): math.cos(t / 2), (1,): cmath.exp(1j * p) * math.sin(t / 2)}
    )


@given(st.lists(st.tuples(random_qubit(), random_qubit()), min_size=1, max_size=4))
@settings(max_examples=50, deadline=None)
def test_trace_distance_tensor_subadditive(pairs):
    lhs1 = pairs[0][0]
    lhs2 = pairs[0][1]
    for a, b in pairs[1:]:
        lhs1 = lhs1.tensor(a)
        lhs2 = lhs2.tensor(b)
    d_tensor = trace_distance_pure(lhs1.normalized(), lhs2.normalized())
    d_sum = sum(trace_distance_pure(a.normalized(), b.normalized()) for a, b in pairs)
    assert d_tensor <= d_sum + 1e-10


def test_unitarity_preserved():
    rng = np.random.default_rng(5)
    amps = {(i, j): complex(rng.normal(), rng.normal()) for i in range(2) for j in range(6)}
    psi = QState.from_amplitudes([2, 6], amps).normalized()
    for op in (
        lambda s: fourier_mod(s, 1),
        lambda s: hadamard(s, 0),
        lambda s: phase_i(s, 0),
        lambda s: apply_label_fn(s, lambda lab: (lab[0], (lab[1] + 2) % 6)),
    ):
        assert close(op(psi).norm2(), 1.0, tol=1e-12)


def test_extend_with_fn():
    psi = uniform_superposition([4])
    ext = extend_with_fn(psi, [2], lambda lab: (lab[0] % 2,))
    assert ext.dims == (4, 2)
    assert close(ext.amps[(3, 1)], 0.5)


def test_json_records():
    psi = QState.from_amplitudes([2], {(1,): 1.0})
    assert psi.to_json_records() == "[[[1], 1.0, 0.0]]"
