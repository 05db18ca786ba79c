import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcplab.matching import (
    MatchingDesc,
    a1_mask,
    check_pair_density,
    defined_mask,
    eval_matching,
    find_good_matching,
    intersection_size,
    partition,
    set_to_mask,
)


def test_eval_examples():
    assert eval_matching(MatchingDesc(1, 2, 16), 1) == 3
    assert eval_matching(MatchingDesc(1, 2, 16), 3) == 1
    assert eval_matching(MatchingDesc(2, 2, 16), 1) is None


def test_partition_example():
    a1, a2 = partition(MatchingDesc(1, 1, 4))
    assert list(a1) == [0, 2]
    assert list(a2) == [1, 3]


def test_partition_sizes_match():
    for kind in (1, 2):
        for q in (1, 3, 5):
            a1, a2 = partition(MatchingDesc(kind, q, 64))
            assert len(a1) == len(a2)


def test_empty_domain_when_q_too_big():
    with pytest.raises(ValueError):
        MatchingDesc(1, 8, 8)


@given(st.integers(1, 40), st.integers(2, 400), st.sampled_from([1, 2]))
@settings(max_examples=120, deadline=None)
def test_involution_and_step(q, n, kind):
    if q >= n:
        return
    desc = MatchingDesc(kind, q, n)
    for t in range(n):
        ft = eval_matching(desc, t)
        if ft is None:
            continue
        assert 0 <= ft < n
        assert abs(ft - t) == q
        assert ft != t
        assert eval_matching(desc, ft) == t


def test_domain_tiling():
    # A_1 of kinds 1 and 2 are disjoint and exactly tile {t : t + q < N}
    for n in (64, 256, 4096):
        for q in (1, 2, 7, 16):
            m1 = a1_mask(MatchingDesc(1, q, n))
            m2 = a1_mask(MatchingDesc(2, q, n))
            assert not np.any(m1 & m2)
            both = np.zeros(n, dtype=bool)
            both[: n - q] = True
            assert np.array_equal(m1 | m2, both)


def test_intersection_examples():
    n = 8
    full = np.ones(n, dtype=bool)
    desc = MatchingDesc(1, 1, n)
    assert intersection_size(desc, full) == int(np.count_nonzero(defined_mask(desc)))
    evens = set_to_mask(range(0, n, 2), n)
    assert intersection_size(desc, evens) == 0
    t_set = set_to_mask({0, 1, 4, 5}, n)
    assert intersection_size(desc, t_set) == 4


def test_intersection_even():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = 128
        member = rng.random(n) < 0.4
        q = int(rng.integers(1, 20))
        kind = int(rng.integers(1, 3))
        assert intersection_size(MatchingDesc(kind, q, n), member) % 2 == 0


def test_find_good_matching_full_set():
    full = np.ones(64, dtype=bool)
    desc = find_good_matching(full, q=1)
    assert desc == MatchingDesc(1, 1, 64)


def test_find_good_matching_structured():
    n = 64
    member = np.array([(t % 4) < 2 for t in range(n)])
    desc = find_good_matching(member, q=1, k_max=8)
    assert desc is not None
    assert intersection_size(desc, member) >= int(np.count_nonzero(member)) // 8


def test_find_good_matching_threshold_unreachable():
    full = np.ones(64, dtype=bool)
    assert find_good_matching(full, q=1, threshold=65) is None


def test_find_good_matching_precondition():
    with pytest.raises(ValueError):
        find_good_matching(np.ones(64, dtype=bool), q=8, k_max=8)


def test_pair_density_full_set():
    full = np.ones(64, dtype=bool)
    qp, count = check_pair_density(full, q=1, s=2)
    assert qp == 1 and count == 63


def test_pair_density_progression():
    n = 243
    member = set_to_mask(set(range(0, n, 3)) | {1}, n)
    qp, count = check_pair_density(member, q=1, s=3)
    assert qp % 3 == 0 or count >= n / (32 * 27)
    assert count >= n / (32 * 27)


def test_pair_density_random_half():
    rng = np.random.default_rng(9)
    n, s = 1024, 2
    for _ in range(25):
        member = np.zeros(n, dtype=bool)
        member[rng.choice(n, n // 2 + 1, replace=False)] = True
        _, count = check_pair_density(member, q=1, s=s)
        assert count >= n / (32 * s**3)


def test_pair_density_preconditions():
    n = 64
    small = set_to_mask(range(10), n)
    with pytest.raises(ValueError):
        check_pair_density(small, q=1, s=2)
    full = np.ones(n, dtype=bool)
    with pytest.raises(ValueError):
        check_pair_density(full, q=10, s=2)
