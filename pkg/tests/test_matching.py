import numpy as np
import pytest

from rpmatch.core import Matching, ValuationProfile, validate_unit_range
from rpmatch.generate import sample_uniform_profile
from rpmatch.harness import substream
from rpmatch.matching import (
    TooLargeError,
    brute_force_opt,
    max_weight_matching,
    permutation_table,
)

A3 = validate_unit_range([[1, 0.6, 0], [1, 0.2, 0], [0.5, 1, 0]])


def test_identity_pattern():
    p = validate_unit_range([[1, 0], [0, 1]])
    m, sw = max_weight_matching(p)
    assert sw == 2.0
    assert np.array_equal(m.assignment, [0, 1])
    _, sw_bf = brute_force_opt(p)
    assert sw_bf == 2.0


def test_worked_three_by_three():
    _, sw = max_weight_matching(A3)
    _, sw_bf = brute_force_opt(A3)
    assert sw == pytest.approx(2.0, abs=1e-12)
    assert sw_bf == pytest.approx(2.0, abs=1e-12)


def test_identical_rows_every_matching_equal():
    row = [1.0, 0.7, 0.3, 0.0]
    p = validate_unit_range([row, row, row, row])
    _, sw = max_weight_matching(p)
    assert sw == pytest.approx(sum(row), abs=1e-12)


def test_agrees_with_brute_force_on_seeded_corpus():
    for n in range(3, 9):
        for k in range(40):
            p = sample_uniform_profile(n, substream(101, f"match-{n}", k))
            _, sw = max_weight_matching(p)
            _, sw_bf = brute_force_opt(p)
            assert sw == pytest.approx(sw_bf, abs=1e-9)


def test_dominates_random_permutations():
    rng = substream(5, "perm-check", 0)
    for k in range(10):
        p = sample_uniform_profile(7, substream(5, "perm-inst", k))
        _, sw = max_weight_matching(p)
        for _ in range(100):
            perm = rng.permutation(7)
            assert sw >= Matching(perm).welfare(p) - 1e-9


def test_monotone_in_single_entry():
    for k in range(10):
        p = sample_uniform_profile(6, substream(31, "mono", k))
        _, sw = max_weight_matching(p)
        a = p.values.copy()
        free = np.argwhere((a != 0.0) & (a != 1.0))
        i, j = free[k % len(free)]
        a[i, j] = min(1.0, a[i, j] + 0.25)
        _, sw_up = max_weight_matching(ValuationProfile(a))
        assert sw_up >= sw - 1e-12


def test_optimum_within_unit_range_bounds():
    for k in range(20):
        p = sample_uniform_profile(8, substream(13, "range", k))
        _, sw = max_weight_matching(p)
        assert 1.0 - 1e-9 <= sw <= 8.0 + 1e-9
        assert sw >= p.values.sum() / 8 - 1e-9


def test_brute_force_size_guard():
    p = sample_uniform_profile(10, substream(1, "big", 0))
    with pytest.raises(TooLargeError):
        brute_force_opt(p)


def test_permutation_table_cached_and_complete():
    t = permutation_table(4)
    assert t.shape == (24, 4)
    assert len({tuple(r) for r in t.tolist()}) == 24
    assert permutation_table(4) is t
