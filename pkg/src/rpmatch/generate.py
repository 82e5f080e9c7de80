"""Instance generators and the range-preserving Gaussian perturbation.

Three sources of profiles:

* ``sample_uniform_profile`` - i.i.d. model: each row gets a 1 and a 0 at a
  uniformly random ordered pair of positions, remaining entries uniform on
  (0, 1).
* ``hard_instance`` - a structured family on which random priority loses a
  sqrt(n) factor: all agents rank items identically and all values sit next
  to 1 or next to 0, so the good items go to whoever is drawn early.
* ``perturb`` - adds truncated Gaussian noise of scale sigma * ||A|| to every
  non-extreme entry, keeping 0/1 entries fixed and all values inside [0, 1].

Generators are pure given the random stream; callers that parallelize must
hand each task its own substream (see the harness seeding contract).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .core import ValuationProfile, matrix_norm


class InvalidSizeError(ValueError):
    pass


class InvalidParamsError(ValueError):
    pass


@dataclass(frozen=True)
class PerturbationSpec:
    """Size and norm convention of the perturbation.

    The per-entry noise scale is ``sigma * ||A||`` where the norm is chosen
    by ``norm_kind`` ("frobenius", "max", or "p" with exponent ``p``).
    """

    sigma: float
    norm_kind: str = "frobenius"
    p: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidParamsError(f"sigma must be positive, got {self.sigma!r}")

    def entry_scale(self, profile: ValuationProfile) -> float:
        """Standard deviation of the per-entry Gaussian noise for this profile."""
        return self.sigma * matrix_norm(profile, self.norm_kind, self.p)


@dataclass(frozen=True)
class HardFamilyParams:
    """Size and value-separation parameter of the hard family."""

    n: int
    eps: float = 1e-6

    def __post_init__(self):
        if self.n < 2:
            raise InvalidParamsError(f"need n >= 2, got {self.n}")
        k = math.isqrt(self.n - 1) + 1  # ceil(sqrt(n))
        if not (0 < self.eps <= 1.0 / k):
            raise InvalidParamsError(
                f"eps must lie in (0, 1/ceil(sqrt(n))] = (0, {1.0 / k:.6g}], got {self.eps}"
            )


def sample_uniform_profile(n: int, rng: np.random.Generator) -> ValuationProfile:
    """Sample a unit-range profile with i.i.d. uniform free entries.

    Stream consumption order: first an n x n block of uniforms (row-major),
    then per row one integer for the position of the 1 and one integer
    selecting the position of the 0 among the remaining n-1 slots.
    """
    if n < 2:
        raise InvalidSizeError(f"need n >= 2, got {n}")
    values = rng.random((n, n))
    j_one = rng.integers(0, n, size=n)
    j_zero = (j_one + 1 + rng.integers(0, n - 1, size=n)) % n
    rows = np.arange(n)
    values[rows, j_one] = 1.0
    values[rows, j_zero] = 0.0
    return ValuationProfile(values)


def hard_instance(params: HardFamilyParams) -> ValuationProfile:
    """Build the structured family with unanimous preference order.

    With k = ceil(sqrt(n)): every agent values item 0 at 1 and item n-1 at 0.
    The first k agents ("flexible") also value items 1..k-1 near 1
    (1 - j*eps at column j); everyone's remaining middle columns carry the
    tiny decreasing values eps*(n-1-j)/n.  Every row is strictly decreasing,
    so all agents share one preference order and serial dictatorship assigns
    item t to whoever picks t-th.
    """
    n, eps = params.n, params.eps
    k = math.isqrt(n - 1) + 1
    a = np.zeros((n, n))
    a[:, 0] = 1.0
    cols = np.arange(1, n - 1)
    a[:, 1 : n - 1] = eps * (n - 1 - cols)[None, :] / n
    for j in range(1, min(k, n - 1)):  # min() keeps column n-1 at 0 when k = n
        a[:k, j] = 1.0 - j * eps
    return ValuationProfile(a)


def perturb(
    profile: ValuationProfile,
    spec: PerturbationSpec,
    rng: np.random.Generator,
) -> ValuationProfile:
    """Perturb all non-extreme entries with range-preserving Gaussian noise.

    Entries equal to 0 or 1 are returned untouched.  Every other entry a
    receives noise drawn from N(0, s^2) truncated to [-a, 1-a] with
    s = sigma * ||A||, sampled by inverse CDF: a single uniform per entry is
    mapped through the Gaussian quantile restricted to the truncation
    interval.  This costs one draw per entry regardless of sigma, so the
    stream layout is reproducible: uniforms are consumed for free entries in
    row-major order.
    """
    a = profile.values
    scale = spec.entry_scale(profile)
    free = (a != 0.0) & (a != 1.0)
    base = a[free]
    lo = ndtr(-base / scale)
    hi = ndtr((1.0 - base) / scale)
    u = rng.random(base.shape[0])
    z = ndtri(lo + u * (hi - lo))
    noise = np.clip(scale * z, -base, 1.0 - base)
    out = a.copy()
    out[free] = np.clip(base + noise, 0.0, 1.0)
    return ValuationProfile(out)


__all__ = [
    "PerturbationSpec",
    "HardFamilyParams",
    "InvalidSizeError",
    "InvalidParamsError",
    "sample_uniform_profile",
    "hard_instance",
    "perturb",
]
