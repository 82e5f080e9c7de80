"""Valuation profiles, allocations, welfare accounting, and entrywise norms.

A valuation profile is an n x n matrix of values in [0, 1] where every row
attains 1 at its best item and 0 at its worst (unit-range normalization).
An allocation is a doubly stochastic matrix of assignment probabilities.
All types here are immutable after construction and safe to share across
workers; every operation is a pure function.

Indexing is 0-based throughout the API.  Error messages and reports use
1-based agent/item numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

#: Slack allowed on unit-range constraints when validating external data.
UNIT_RANGE_TOL = 1e-12

#: Slack allowed on row/column sums of allocations.
DOUBLY_STOCHASTIC_TOL = 1e-9


class ProfileError(ValueError):
    """A matrix does not satisfy the unit-range profile invariants."""


class NotSquareError(ProfileError):
    pass


class EntryOutOfRangeError(ProfileError):
    def __init__(self, i: int, j: int, value: float):
        self.i, self.j, self.value = i, j, value
        super().__init__(f"entry ({i + 1},{j + 1}) = {value!r} outside [0,1]")


class RowMissingOneError(ProfileError):
    def __init__(self, i: int):
        self.i = i
        super().__init__(f"row {i + 1} has no entry equal to 1")


class RowMissingZeroError(ProfileError):
    def __init__(self, i: int):
        self.i = i
        super().__init__(f"row {i + 1} has no entry equal to 0")


class AllocationError(ValueError):
    """A matrix is not doubly stochastic within tolerance."""


class DimensionMismatchError(ValueError):
    pass


class IndexOutOfRangeError(IndexError):
    pass


class NotAPermutationError(ValueError):
    pass


class InvalidPError(ValueError):
    pass


def _as_matrix(values) -> np.ndarray:
    a = np.asarray(values, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquareError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 2:
        raise NotSquareError(f"need at least 2 agents, got n={a.shape[0]}")
    return a


@dataclass(frozen=True, eq=False)
class ValuationProfile:
    """Unit-range valuation matrix: values[i, j] is agent i's value for item j.

    Construction checks the invariants exactly (each row must contain a 1 and
    a 0 and all entries must lie in [0, 1]).  Use :func:`validate_unit_range`
    for matrices from external sources, which tolerates rounding up to
    ``UNIT_RANGE_TOL`` and snaps the row extremes.
    """

    values: np.ndarray

    def __post_init__(self):
        a = _as_matrix(self.values)
        bad = np.argwhere((a < 0.0) | (a > 1.0))
        if bad.size:
            i, j = map(int, bad[0])
            raise EntryOutOfRangeError(i, j, float(a[i, j]))
        for i in range(a.shape[0]):
            if a[i].max() != 1.0:
                raise RowMissingOneError(i)
            if a[i].min() != 0.0:
                raise RowMissingZeroError(i)
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "values", a)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __repr__(self):
        return f"ValuationProfile(n={self.n})"


def validate_unit_range(values) -> ValuationProfile:
    """Build a profile from raw data, tolerating rounding of external origin.

    Entries may stray from [0, 1] and the row extremes from {0, 1} by at most
    ``UNIT_RANGE_TOL``; offending values are snapped exactly so that a profile
    written to CSV and read back never fails validation.
    """
    a = _as_matrix(values).copy()
    bad = np.argwhere((a < -UNIT_RANGE_TOL) | (a > 1.0 + UNIT_RANGE_TOL))
    if bad.size:
        i, j = map(int, bad[0])
        raise EntryOutOfRangeError(i, j, float(a[i, j]))
    np.clip(a, 0.0, 1.0, out=a)
    for i in range(a.shape[0]):
        mx, mn = a[i].max(), a[i].min()
        if mx < 1.0 - UNIT_RANGE_TOL:
            raise RowMissingOneError(i)
        if mn > UNIT_RANGE_TOL:
            raise RowMissingZeroError(i)
        a[i, a[i] >= 1.0 - UNIT_RANGE_TOL] = 1.0
        a[i, a[i] <= UNIT_RANGE_TOL] = 0.0
    return ValuationProfile(a)


@dataclass(frozen=True, eq=False)
class Allocation:
    """Doubly stochastic matrix: probs[i, j] = P(agent i receives item j)."""

    probs: np.ndarray

    def __post_init__(self):
        x = _as_matrix(self.probs)
        if (x < -DOUBLY_STOCHASTIC_TOL).any() or (x > 1.0 + DOUBLY_STOCHASTIC_TOL).any():
            raise AllocationError("allocation entries must lie in [0,1]")
        rows = x.sum(axis=1)
        cols = x.sum(axis=0)
        if np.abs(rows - 1.0).max() > DOUBLY_STOCHASTIC_TOL:
            i = int(np.abs(rows - 1.0).argmax())
            raise AllocationError(f"row {i + 1} sums to {rows[i]!r}, expected 1")
        if np.abs(cols - 1.0).max() > DOUBLY_STOCHASTIC_TOL:
            j = int(np.abs(cols - 1.0).argmax())
            raise AllocationError(f"column {j + 1} sums to {cols[j]!r}, expected 1")
        x = x.copy()
        x.setflags(write=False)
        object.__setattr__(self, "probs", x)

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    def __repr__(self):
        return f"Allocation(n={self.n})"


@dataclass(frozen=True, eq=False)
class Matching:
    """Perfect matching: agent i receives item assignment[i] (0-based)."""

    assignment: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.assignment, dtype=np.int64)
        n = p.shape[0]
        if p.ndim != 1 or n < 1:
            raise NotAPermutationError("assignment must be a 1-d index array")
        if (np.sort(p) != np.arange(n)).any():
            raise NotAPermutationError(f"{p.tolist()} is not a permutation of 0..{n - 1}")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "assignment", p)

    @property
    def n(self) -> int:
        return self.assignment.shape[0]

    def as_allocation(self) -> Allocation:
        """The permutation matrix of this matching, as a (degenerate) allocation."""
        x = np.zeros((self.n, self.n))
        x[np.arange(self.n), self.assignment] = 1.0
        return Allocation(x)

    def welfare(self, profile: ValuationProfile) -> float:
        if profile.n != self.n:
            raise DimensionMismatchError(f"profile n={profile.n}, matching n={self.n}")
        return float(profile.values[np.arange(self.n), self.assignment].sum())


def fixed_entries(profile: ValuationProfile) -> frozenset[tuple[int, int]]:
    """All (agent, item) positions whose value is exactly 0 or exactly 1.

    For a generic profile (one 0 and one 1 per row) this set has 2n elements;
    degenerate profiles with repeated extremes yield more.
    """
    a = profile.values
    idx = np.argwhere((a == 0.0) | (a == 1.0))
    return frozenset((int(i), int(j)) for i, j in idx)


def matrix_norm(profile: ValuationProfile, kind: str = "frobenius", p: float | None = None) -> float:
    """Entrywise norm of the profile viewed as a vector of n^2 values.

    kind is one of "frobenius", "max", or "p" (with the exponent given
    separately).  Unit-range profiles always have norm >= 1: some entry
    equals 1, so every entrywise norm is at least 1 while the max norm is
    exactly 1.
    """
    a = profile.values
    if kind == "frobenius":
        return float(np.sqrt((a * a).sum()))
    if kind == "max":
        return float(np.abs(a).max())
    if kind == "p":
        if p is None or not math.isfinite(p) or p < 1.0:
            raise InvalidPError(f"p-norm requires p >= 1, got {p!r}")
        return float((np.abs(a) ** p).sum() ** (1.0 / p))
    raise InvalidPError(f"unknown norm kind {kind!r}")


def social_welfare(profile: ValuationProfile, allocation: Allocation) -> float:
    """Sum over agents of expected value received: sum_ij a_ij * x_ij."""
    if profile.n != allocation.n:
        raise DimensionMismatchError(
            f"profile n={profile.n}, allocation n={allocation.n}"
        )
    return float((profile.values * allocation.probs).sum())


def agent_utility(profile: ValuationProfile, allocation: Allocation, i: int) -> float:
    """Expected value received by agent i (0-based): sum_j a_ij * x_ij."""
    if profile.n != allocation.n:
        raise DimensionMismatchError(
            f"profile n={profile.n}, allocation n={allocation.n}"
        )
    if not 0 <= i < profile.n:
        raise IndexOutOfRangeError(f"agent index {i} outside 0..{profile.n - 1}")
    return float(profile.values[i] @ allocation.probs[i])


def write_profile_csv(profile: ValuationProfile, path) -> None:
    """Write a profile as CSV, one agent per row, 17 significant digits.

    The format round-trips exactly through :func:`read_profile_csv`.
    """
    lines = [f"# n={profile.n}"]
    for row in profile.values:
        lines.append(",".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_profile_csv(path) -> ValuationProfile:
    """Read a profile written by :func:`write_profile_csv` (header optional)."""
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([float(tok) for tok in line.split(",")])
    return validate_unit_range(np.asarray(rows, dtype=float))
