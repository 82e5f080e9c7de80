"""Serial dictatorship and the random priority mechanism.

Random priority runs serial dictatorship under a uniformly random agent
ordering.  Exact expected allocations are computed without touching all n!
orderings: conditioning on who picks first gives a recursion over pairs
(remaining agents, remaining items), and counting ordering prefixes per pair
recovers the exact per-(agent, item) ordering counts.  The result is
identical to full enumeration (``random_priority_enumerated`` keeps the
enumeration as a cross-check oracle) at a cost of C(2n, n) states instead of
n! orderings.

Tie rule everywhere: an agent facing equal-valued available items takes the
lowest item index.  Ties have probability zero under the continuous
generators; the rule only pins down hand-built degenerate profiles.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import (
    Allocation,
    Matching,
    NotAPermutationError,
    ValuationProfile,
    social_welfare,
)

#: Default largest n for which exact random priority is computed.
N_EXACT = 10


class TooLargeForExactError(ValueError):
    def __init__(self, n: int, n_exact: int):
        self.n, self.n_exact = n, n_exact
        super().__init__(f"exact random priority limited to n <= {n_exact}, got n={n}")


class InvalidSampleCountError(ValueError):
    pass


@dataclass(frozen=True)
class RpMode:
    """How random-priority welfare is computed: exact or sampled(m)."""

    kind: str
    samples: int | None = None

    def __post_init__(self):
        if self.kind == "exact":
            if self.samples is not None:
                raise ValueError("exact mode takes no sample count")
        elif self.kind == "sampled":
            if self.samples is None or self.samples < 2:
                raise InvalidSampleCountError(
                    f"sampled mode needs m >= 2, got {self.samples}"
                )
        else:
            raise ValueError(f"unknown rp mode {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "RpMode":
        """Parse "exact" or "sampled:M"."""
        if text == "exact":
            return cls("exact")
        if text.startswith("sampled:"):
            return cls("sampled", int(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse rp mode {text!r}")

    def __str__(self):
        return self.kind if self.kind == "exact" else f"sampled:{self.samples}"


def serial_dictatorship(profile: ValuationProfile, ordering) -> Matching:
    """Run serial dictatorship: agents pick in the given order.

    ``ordering`` is a permutation of 0..n-1; ordering[t] is the agent picking
    t-th.  Each agent takes its highest-valued still-available item.
    """
    n = profile.n
    order = np.asarray(ordering, dtype=np.int64)
    if order.shape != (n,) or (np.sort(order) != np.arange(n)).any():
        raise NotAPermutationError(f"ordering must be a permutation of 0..{n - 1}")
    a = profile.values
    assignment = np.empty(n, dtype=np.int64)
    available = np.ones(n, dtype=bool)
    for agent in order:
        masked = np.where(available, a[agent], -1.0)
        item = int(masked.argmax())  # argmax takes the lowest index on ties
        assignment[agent] = item
        available[item] = False
    return Matching(assignment)


# ---------------------------------------------------------------------------
# exact random priority via the (remaining agents, remaining items) recursion


_LEVELS_CACHE: dict[int, dict] = {}


def _subset_levels(n: int) -> dict:
    """Bitmask bookkeeping shared by all instances of one size (cached)."""
    if n in _LEVELS_CACHE:
        return _LEVELS_CACHE[n]
    masks_by_k: list[list[int]] = [[] for _ in range(n + 1)]
    for m in range(1 << n):
        masks_by_k[bin(m).count("1")].append(m)
    masks = [np.asarray(v, dtype=np.int64) for v in masks_by_k]
    index_of = np.zeros(1 << n, dtype=np.int64)
    for k in range(n + 1):
        index_of[masks[k]] = np.arange(len(masks[k]))
    offsets = np.zeros(n + 2, dtype=np.int64)
    for k in range(n + 1):
        offsets[k + 1] = offsets[k] + len(masks[k])
    member_rows = {}
    for k in range(1, n + 1):
        for i in range(n):
            has = (masks[k] & (1 << i)) != 0
            member_rows[(k, i)] = (
                np.nonzero(has)[0],
                index_of[masks[k][has] & ~(1 << i)],
            )
    _LEVELS_CACHE[n] = {
        "masks": masks,
        "index_of": index_of,
        "all_masks": np.concatenate(masks),
        "offsets": offsets,
        "member_rows": member_rows,
    }
    return _LEVELS_CACHE[n]


def _pick_table(a: np.ndarray) -> np.ndarray:
    """pick[i, mask] = item agent i takes from the available-set ``mask``."""
    n = a.shape[0]
    mask_has = ((np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    pick = np.zeros((n, 1 << n), dtype=np.int8)
    for i in range(n):
        order = np.argsort(-a[i], kind="stable")  # descending value, ties by index
        for j in order[::-1]:
            pick[i][mask_has[:, j]] = j
    return pick


@njit(cache=True)
def _expected_welfare_kernel(n, a, pick, all_masks, offsets, index_of):
    max_count = 0
    for k in range(n + 1):
        c = offsets[k + 1] - offsets[k]
        if c > max_count:
            max_count = c
    prev = np.zeros((max_count, max_count))
    cur = np.zeros((max_count, max_count))
    for k in range(1, n + 1):
        count = offsets[k + 1] - offsets[k]
        for qi in range(count):
            qmask = all_masks[offsets[k] + qi]
            for ti in range(count):
                tmask = all_masks[offsets[k] + ti]
                total = 0.0
                for i in range(n):
                    if (qmask >> i) & 1:
                        j = pick[i, tmask]
                        total += a[i, j] + prev[
                            index_of[qmask & ~(1 << i)],
                            index_of[tmask & ~(1 << np.int64(j))],
                        ]
                cur[qi, ti] = total / k
        prev, cur = cur, prev
    return prev[0, 0]


def rp_exact_welfare(profile: ValuationProfile, n_exact: int = N_EXACT) -> float:
    """Exact expected serial-dictatorship welfare over all orderings."""
    n = profile.n
    if n > n_exact:
        raise TooLargeForExactError(n, n_exact)
    levels = _subset_levels(n)
    pick = _pick_table(profile.values)
    return float(
        _expected_welfare_kernel(
            n,
            profile.values,
            pick,
            levels["all_masks"],
            levels["offsets"],
            levels["index_of"],
        )
    )


def random_priority_exact(
    profile: ValuationProfile, n_exact: int = N_EXACT
) -> tuple[Allocation, float]:
    """Exact random-priority allocation and its welfare.

    Accumulates, per (agent, item), the exact integer number of orderings in
    which the agent receives the item, and divides by n! once at the end.
    All counts stay below 2^53 for any practical n, so the float arithmetic
    is exact.
    """
    n = profile.n
    if n > n_exact:
        raise TooLargeForExactError(n, n_exact)
    levels = _subset_levels(n)
    masks = levels["masks"]
    index_of = levels["index_of"]
    pick = _pick_table(profile.values)
    fact = [float(math.factorial(t)) for t in range(n + 1)]

    counts = np.ones((1, 1))  # orderings reaching (all agents, all items): 1 prefix
    ordering_counts = np.zeros((n, n))
    for k in range(n, 0, -1):
        mk = masks[k]
        size_next = len(masks[k - 1])
        nxt = np.zeros((size_next, size_next))
        for i in range(n):
            rows, rows_after = levels["member_rows"][(k, i)]
            picked = pick[i, mk].astype(np.int64)
            cols_after = index_of[mk & ~(np.int64(1) << picked)]
            block = counts[rows, :]
            np.add.at(ordering_counts[i], picked, block.sum(axis=0) * fact[k - 1])
            np.add.at(nxt, (rows_after[:, None], cols_after[None, :]), block)
        counts = nxt
    allocation = Allocation(ordering_counts / fact[n])
    return allocation, social_welfare(profile, allocation)


def random_priority_enumerated(profile: ValuationProfile) -> tuple[Allocation, float]:
    """Reference implementation: explicit sweep over all n! orderings.

    Exponential; kept as the independent oracle for the recursion-based path.
    """
    n = profile.n
    if n > 9:
        raise TooLargeForExactError(n, 9)
    a = profile.values
    counts = np.zeros((n, n), dtype=np.int64)
    for perm in itertools.permutations(range(n)):
        available = np.ones(n, dtype=bool)
        for agent in perm:
            masked = np.where(available, a[agent], -1.0)
            item = int(masked.argmax())
            counts[agent, item] += 1
            available[item] = False
    allocation = Allocation(counts / float(math.factorial(n)))
    return allocation, social_welfare(profile, allocation)


# ---------------------------------------------------------------------------
# sampled random priority


def sample_orderings(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw m uniform orderings by Fisher-Yates shuffles, vectorized.

    Stream consumption order (fixed for reproducibility): one block of m
    integers per shuffle position i = n-1, n-2, ..., 1, each uniform on
    [0, i].  Column t of the draw matrix therefore belongs to position
    n-1-t.
    """
    perms = np.tile(np.arange(n, dtype=np.int64), (m, 1))
    rows = np.arange(m)
    for i in range(n - 1, 0, -1):
        j = rng.integers(0, i + 1, size=m)
        tmp = perms[rows, j].copy()
        perms[rows, j] = perms[:, i]
        perms[:, i] = tmp
    return perms


@njit(cache=True)
def _sd_welfare_kernel(a, pref, perms):
    m, n = perms.shape
    out = np.empty(m)
    taken = np.zeros(n, dtype=np.bool_)
    for s in range(m):
        for j in range(n):
            taken[j] = False
        w = 0.0
        for t in range(n):
            agent = perms[s, t]
            for r in range(n):
                item = pref[agent, r]
                if not taken[item]:
                    taken[item] = True
                    w += a[agent, item]
                    break
        out[s] = w
    return out


def sd_welfare_per_ordering(profile: ValuationProfile, perms: np.ndarray) -> np.ndarray:
    """Serial-dictatorship welfare for each ordering in ``perms`` (m x n)."""
    pref = np.argsort(-profile.values, axis=1, kind="stable").astype(np.int64)
    return _sd_welfare_kernel(profile.values, pref, np.ascontiguousarray(perms))


def random_priority_sampled(
    profile: ValuationProfile, m: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte Carlo random-priority welfare over m sampled orderings.

    Returns (mean, standard error); unbiased for the exact expected welfare.
    """
    if m < 2:
        raise InvalidSampleCountError(f"need m >= 2 orderings, got {m}")
    perms = sample_orderings(profile.n, m, rng)
    welfare = sd_welfare_per_ordering(profile, perms)
    mean = float(welfare.mean())
    stderr = float(welfare.std(ddof=1) / math.sqrt(m))
    return mean, stderr


def rp_welfare(
    profile: ValuationProfile,
    mode: RpMode,
    rng: np.random.Generator | None = None,
    n_exact: int = N_EXACT,
) -> tuple[float, float]:
    """Unified random-priority welfare entry point: (welfare, stderr)."""
    if mode.kind == "exact":
        return rp_exact_welfare(profile, n_exact=n_exact), 0.0
    if rng is None:
        raise ValueError("sampled mode requires a random generator")
    return random_priority_sampled(profile, mode.samples, rng)


def uniform_dominance_gap(profile: ValuationProfile, allocation: Allocation) -> float:
    """Slack of per-agent stochastic dominance over the uniform lottery.

    For each agent, items are sorted by decreasing value and the partial sums
    of the allocation row are compared with k/n.  Returns the minimum of
    (partial sum - k/n); exact random priority keeps this >= 0 up to float
    tolerance, because an agent picking t-th receives one of its top-t
    available items.
    """
    n = profile.n
    worst = np.inf
    for i in range(n):
        order = np.argsort(-profile.values[i], kind="stable")
        partial = np.cumsum(allocation.probs[i][order])
        worst = min(worst, float((partial - np.arange(1, n + 1) / n).min()))
    return worst
