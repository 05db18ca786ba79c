from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcplab.lattice import (
    DegenerateBasisError,
    GenerationError,
    LatticeInstance,
    PreconditionError,
    check_coeff_bound,
    certify_gap,
    dot,
    gen_unique_lattice,
    gram_schmidt,
    is_lll_reduced,
    lll_lower_bound2,
    lll_reduce,
    norm2,
    reduce_instance,
    shortest_vector_bruteforce,
    solve_coefficients,
    vec_combination,
)


def test_gram_schmidt_identity():
    gs = gram_schmidt([(1, 0), (0, 1)])
    assert gs.bstar == ((1, 0), (0, 1))
    assert gs.mu[1][0] == 0


def test_gram_schmidt_projection():
    gs = gram_schmidt([(2, 0), (1, 2)])
    assert gs.bstar[1] == (Fraction(0), Fraction(2))
    assert gs.mu[1][0] == Fraction(1, 2)


def test_gram_schmidt_degenerate():
    with pytest.raises(DegenerateBasisError):
        gram_schmidt([(1, 1), (2, 2)])


@st.composite
def small_bases(draw):
    n = draw(st.integers(2, 4))
    rows = draw(
        st.lists(
            st.lists(st.integers(-9, 9), min_size=n, max_size=n),
            min_size=n,
            max_size=n,
        )
    )
    return rows


@given(small_bases())
@settings(max_examples=80, deadline=None)
def test_gram_schmidt_reconstruction(rows):
    try:
        gs = gram_schmidt(rows)
    except DegenerateBasisError:
        return
    n = len(rows)
    for i in range(n):
        recon = [Fraction(0)] * n
        for j in range(i + 1):
            for k in range(n):
                recon[k] += gs.mu[i][j] * gs.bstar[j][k]
        assert tuple(recon) == tuple(Fraction(x) for x in rows[i])
    # pairwise orthogonality, exact
    for i in range(n):
        for j in range(i):
            assert dot(gs.bstar[i], gs.bstar[j]) == 0


def test_lll_identity_unchanged():
    res = lll_reduce([(1, 0), (0, 1)])
    assert res.basis == ((1, 0), (0, 1))


def test_lll_size_reduction_step():
    res = lll_reduce([(1, 0), (4, 1)])
    vecs = {tuple(abs(x) for x in row) for row in res.basis}
    assert vecs == {(1, 0), (0, 1)}


def test_lll_swaps_to_short_vector():
    res = lll_reduce([(5, 0), (0, 1)])
    assert tuple(abs(x) for x in res.basis[0]) == (0, 1)


@given(small_bases())
@settings(max_examples=60, deadline=None)
def test_lll_postconditions_random(rows):
    try:
        res = lll_reduce(rows)
    except DegenerateBasisError:
        return
    assert is_lll_reduced(res.basis, strict_lovasz=True)
    # transform actually maps input to output
    recon = [
        vec_combination(res.transform[i], rows) for i in range(len(rows))
    ]
    assert tuple(recon) == res.basis


def test_bruteforce_examples():
    c, m2 = shortest_vector_bruteforce([(5, 0), (0, 1)], 6)
    assert c == (0, 1) and m2 == 1
    c, m2 = shortest_vector_bruteforce([(1, 0, 0), (0, 1, 0), (0, 0, 1)], 2)
    assert c == (0, 0, 1) and m2 == 1
    c, m2 = shortest_vector_bruteforce([(2, 0), (1, 2)], 4)
    assert c == (1, 0) and m2 == 4


def test_bruteforce_budget():
    with pytest.raises(GenerationError):
        shortest_vector_bruteforce([(1, 0), (0, 1)], 10**6)


def test_lll_within_factor_of_bruteforce():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(2, 4))
        rows = rng.integers(-8, 9, (n, n)).tolist()
        try:
            res = lll_reduce(rows)
        except DegenerateBasisError:
            continue
        _, best2 = shortest_vector_bruteforce(res.basis, 8)
        b1_2 = int(norm2(res.basis[0]))
        assert b1_2 <= 2 ** (n - 1) * best2
        assert lll_lower_bound2(res.basis) <= best2


def test_gen_unique_lattice_n2():
    inst = gen_unique_lattice(2, 8, seed=3)
    assert inst.gap >= 8
    uvec = inst.planted_vector()
    red = reduce_instance(inst)
    c, m2 = shortest_vector_bruteforce(red.basis, 20)
    assert m2 == int(norm2(uvec))
    assert check_coeff_bound(red)


def test_gen_unique_lattice_n1():
    inst = gen_unique_lattice(1, 5, seed=0)
    assert inst.basis == ((1,),) and inst.planted_u == (1,)


def test_gen_unique_lattice_budget_failure():
    with pytest.raises(GenerationError):
        gen_unique_lattice(2, 10**6, coeff_budget=50, seed=0, max_tries=3)


def test_gen_seeds_vary_and_certify():
    for seed in range(5):
        inst = gen_unique_lattice(2, 10, seed=seed)
        gamma = certify_gap(inst.basis, inst.planted_u, 10)
        assert gamma >= 10


def test_check_coeff_bound_guard():
    # adversarial non-reduced basis must be rejected, not silently accepted
    inst = LatticeInstance(n=2, basis=((1, 0), (40, 1)), planted_u=(0, 1))
    with pytest.raises(PreconditionError):
        check_coeff_bound(inst)


def test_check_coeff_bound_identity():
    inst = LatticeInstance(n=2, basis=((1, 0), (0, 1)), planted_u=(0, 1))
    assert check_coeff_bound(inst)


def test_solve_coefficients_roundtrip():
    basis = ((3, 1), (1, 2))
    v = vec_combination((2, -3), basis)
    assert solve_coefficients(basis, v) == (2, -3)
    with pytest.raises(ValueError):
        solve_coefficients(basis, (1, 0))


def test_instance_json_roundtrip():
    inst = gen_unique_lattice(2, 8, seed=1)
    back = LatticeInstance.from_json(inst.to_json())
    assert back == inst
