"""Optimal social welfare: maximum-weight perfect matching of agents to items.

The production solver delegates to scipy's Jonker-Volgenant implementation
(O(n^3)); ``brute_force_opt`` is the exhaustive oracle used to cross-check it
on small instances.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Matching, ValuationProfile

#: Largest n accepted by the exhaustive oracle (9! = 362,880 permutations).
BRUTE_FORCE_MAX_N = 9

_PERM_TABLES: dict[int, np.ndarray] = {}


class TooLargeError(ValueError):
    pass


def max_weight_matching(profile: ValuationProfile) -> tuple[Matching, float]:
    """Perfect matching maximizing total value, and the optimum welfare.

    For unit-range profiles the optimum lies in [1, n]: every agent has some
    item of value 1, and assigning those greedily to distinct items already
    collects at least 1.
    """
    rows, cols = linear_sum_assignment(profile.values, maximize=True)
    assignment = np.empty(profile.n, dtype=np.int64)
    assignment[rows] = cols
    m = Matching(assignment)
    return m, m.welfare(profile)


def permutation_table(n: int) -> np.ndarray:
    """All n! permutations of 0..n-1 as an (n!, n) int8 array (cached)."""
    if n not in _PERM_TABLES:
        table = np.fromiter(
            itertools.chain.from_iterable(itertools.permutations(range(n))),
            dtype=np.int8,
        ).reshape(-1, n)
        table.setflags(write=False)
        _PERM_TABLES[n] = table
    return _PERM_TABLES[n]


def brute_force_opt(profile: ValuationProfile) -> tuple[Matching, float]:
    """Exhaustive maximum over all n! assignments; oracle for small n."""
    n = profile.n
    if n > BRUTE_FORCE_MAX_N:
        raise TooLargeError(f"brute force supports n <= {BRUTE_FORCE_MAX_N}, got {n}")
    perms = permutation_table(n)
    welfare = profile.values[np.arange(n)[None, :], perms].sum(axis=1)
    best = int(welfare.argmax())
    m = Matching(perms[best].astype(np.int64))
    return m, float(welfare[best])
