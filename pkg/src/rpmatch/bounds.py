"""Closed-form distributional bounds for random-priority welfare and ratios.

Everything here is analytic: the Irwin-Hall CDF (sums of i.i.d. uniforms),
tail bounds on random-priority welfare under the i.i.d. uniform model, lower
bounds on the Gaussian mass retained by the range-preserving perturbation,
and the finite-n approximation-ratio bounds those pieces combine into.  The
harness compares these values against seeded Monte Carlo estimates.

All bounds are evaluated in log-space first; the raw value is exponentiated
from the log and may under- or overflow a double, in which case ``log_value``
stays authoritative.  Probability bounds larger than 1 are reported unclamped
with ``valid=False``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
from scipy.special import ndtr

from .core import ValuationProfile
from .generate import PerturbationSpec

#: Largest m for which the Irwin-Hall CDF uses exact high-precision summation.
IRWIN_HALL_EXACT_MAX_M = 64

#: Decimal digits used for the alternating-sum evaluation (cancellation eats
#: roughly m/ln(10) digits, ~28 at m=64).
_IRWIN_HALL_DPS = 60

_LN_2PI = math.log(2.0 * math.pi)
_LN_2E = math.log(2.0) + 1.0


class InvalidMError(ValueError):
    pass


class InvalidNError(ValueError):
    pass


class InvalidCError(ValueError):
    pass


class TooFewSamplesError(ValueError):
    pass


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound: value, log-value, and whether it is in force.

    ``valid`` is False when a precondition of the underlying inequality fails
    or when a probability bound exceeds 1 (reported unclamped).
    """

    name: str
    params: dict = field(default_factory=dict)
    value: float = math.nan
    log_value: float | None = None
    valid: bool = True

    def to_dict(self) -> dict:
        value = self.value
        if value is not None and not math.isfinite(value):
            value = None  # overflowed a double; log_value is authoritative
        return {
            "name": self.name,
            "params": self.params,
            "value": value,
            "log_value": self.log_value,
            "valid": self.valid,
        }


def _exp(log: float) -> float:
    try:
        return math.exp(log)
    except OverflowError:
        return math.inf


def irwin_hall_cdf(x: float, m: int) -> float:
    """P(sum of m i.i.d. U(0,1) variables <= x).

    Exact alternating-sum evaluation in 60-digit arithmetic for m <= 64;
    beyond that the normal approximation N(m/2, m/12) is used (error
    O(1/sqrt(m)), acceptable for the tail comparisons this library makes at
    large m).
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidMError(f"need a positive integer m, got {m!r}")
    if x <= 0.0:
        return 0.0
    if x >= m:
        return 1.0
    if m > IRWIN_HALL_EXACT_MAX_M:
        return float(ndtr((x - m / 2.0) / math.sqrt(m / 12.0)))
    with mp.workdps(_IRWIN_HALL_DPS):
        xm = mp.mpf(x)
        total = mp.mpf(0)
        for k in range(int(mp.floor(xm)) + 1):
            term = mp.binomial(m, k) * (xm - k) ** m
            total += -term if k % 2 else term
        out = float(total / mp.factorial(m))
    return min(max(out, 0.0), 1.0)


def row_sum_cdf(x: float, n: int) -> float:
    """P(row sum of a unit-range row <= x) under i.i.d. uniform free entries.

    A unit-range row is 1 + 0 + (n-2 uniforms), so this is the Irwin-Hall
    CDF shifted by the forced 1.  For n = 2 the row sum is exactly 1.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidNError(f"need integer n >= 2, got {n!r}")
    if n == 2:
        return 0.0 if x < 1.0 else 1.0
    return irwin_hall_cdf(x - 1.0, int(n) - 2)


def default_tail_exponent(n: int) -> float:
    """The exponent c with n^(1-c) = 2e * n^(2/(n-2)).

    This is the choice under which the welfare tail bound decays while n^c
    stays below n/2.  It only lands inside (0, 1) for n >= 12 or so; smaller
    n make the resulting bound report itself invalid.
    """
    if n < 3:
        raise InvalidNError(f"need n >= 3, got {n}")
    return 1.0 - _LN_2E / math.log(n) - 2.0 / (n - 2)


def welfare_tail_bound(n: int, c: float) -> BoundReport:
    """Upper bound on P(random-priority welfare <= n^c), i.i.d. uniform model.

    Value: (e^2 / sqrt(2 pi)) * sqrt(n) * (2e / n^(1-c))^(n-2).  In force
    only for 0 < c < 1 together with the side condition
    (e^2 / sqrt(2 pi n)) * (2e / n^(1-c))^(n-2) < 1; ``valid`` is also
    cleared when the value exceeds 1.
    """
    if n < 3:
        raise InvalidNError(f"need n >= 3, got {n}")
    if not math.isfinite(c) or c >= 1.0:
        raise InvalidCError(f"need c < 1, got {c!r}")
    log_core = (n - 2) * (_LN_2E - (1.0 - c) * math.log(n))
    log_value = 2.0 - 0.5 * _LN_2PI + 0.5 * math.log(n) + log_core
    side_log = log_value - math.log(n)
    valid = 0.0 < c < 1.0 and side_log < 0.0 and log_value <= 0.0
    return BoundReport(
        name="welfare_tail",
        params={"n": n, "c": c, "threshold": n**c, "side_log": side_log},
        value=_exp(log_value),
        log_value=log_value,
        valid=valid,
    )


def low_welfare_fraction_bound(n: int, c: float) -> BoundReport:
    """Upper bound on the fraction of a profile class with welfare <= n^c.

    Within the class of profiles sharing one 0/1 pattern, the fraction whose
    random-priority welfare is at most n^c is bounded by
    (e^(2n) / (sqrt(2 pi) n)) * (2e / n^(1-c))^(n(n-2)).  The value is
    astronomically small or large at modest n; use ``log_value``.
    """
    if n < 3:
        raise InvalidNError(f"need n >= 3, got {n}")
    if not math.isfinite(c) or c >= 1.0:
        raise InvalidCError(f"need c < 1, got {c!r}")
    log_value = (
        2.0 * n
        - math.log(math.sqrt(2.0 * math.pi) * n)
        + n * (n - 2) * (_LN_2E - (1.0 - c) * math.log(n))
    )
    valid = 0.0 < c < 1.0 and log_value <= 0.0
    return BoundReport(
        name="low_welfare_fraction",
        params={"n": n, "c": c},
        value=_exp(log_value),
        log_value=log_value,
        valid=valid,
    )


def gauss_mass_lower_bound(n: int, entry_scale: float) -> BoundReport:
    """Lower bound on the Gaussian mass kept inside the profile box.

    Bounds the unnormalized integral of exp(-|G|^2 / (2 s^2)) over
    perturbations G of the n(n-2) free entries that keep all values in
    [0, 1], where s = sigma * ||A||.  Two regimes share the boundary value
    exp(-n(n-2)/2) at s = 1:

    * s <= 1:  (e^(-1/2) * s)^(n(n-2))
    * s >  1:  exp(-n(n-2) / (2 s^2))
    """
    if n < 2:
        raise InvalidNError(f"need n >= 2, got {n}")
    if not (math.isfinite(entry_scale) and entry_scale > 0):
        raise ValueError(f"entry_scale must be positive, got {entry_scale!r}")
    exponent = n * (n - 2)
    if entry_scale <= 1.0:
        branch = "scale<=1"
        log_value = exponent * (math.log(entry_scale) - 0.5)
    else:
        branch = "scale>1"
        log_value = -exponent / (2.0 * entry_scale**2)
    return BoundReport(
        name="gauss_mass_lower",
        params={"n": n, "entry_scale": entry_scale, "branch": branch},
        value=_exp(log_value),
        log_value=log_value,
        valid=True,
    )


def gauss_mass_in_range(
    profile: ValuationProfile,
    spec: PerturbationSpec,
    samples: int | None = None,
    rng: np.random.Generator | None = None,
) -> BoundReport:
    """Exact Gaussian in-range mass of a perturbation, per-entry product.

    Each free entry a contributes s * sqrt(2 pi) * P(a + s*Z in [0, 1]) with
    Z standard normal; extreme entries contribute 1.  The product is computed
    analytically in log-space and machine-checked against
    :func:`gauss_mass_lower_bound` (tolerance 1e-6 in the log).  Passing
    ``samples`` adds a per-entry Monte Carlo estimate of the same quantity to
    the report for cross-checking.
    """
    a = profile.values
    scale = spec.entry_scale(profile)
    free = (a != 0.0) & (a != 1.0)
    base = a[free]
    accept = ndtr((1.0 - base) / scale) - ndtr(-base / scale)
    log_mass = float(
        np.log(accept).sum() + base.size * (math.log(scale) + 0.5 * _LN_2PI)
    )
    lower = gauss_mass_lower_bound(profile.n, scale)
    if log_mass < lower.log_value - 1e-6:
        raise RuntimeError(
            f"in-range mass {log_mass} fell below its lower bound "
            f"{lower.log_value}; this should be impossible"
        )
    params = {
        "sigma": spec.sigma,
        "norm_kind": spec.norm_kind,
        "entry_scale": scale,
        "n_free": int(base.size),
        "lower_log": lower.log_value,
    }
    if samples:
        if rng is None:
            raise ValueError("Monte Carlo cross-check needs a random generator")
        z = rng.standard_normal((int(samples), base.size)) * scale
        frac = ((z >= -base) & (z <= 1.0 - base)).mean(axis=0)
        params["mc_log"] = float(
            np.log(frac).sum() + base.size * (math.log(scale) + 0.5 * _LN_2PI)
        )
        params["mc_samples"] = int(samples)
    return BoundReport(
        name="gauss_mass_in_range",
        params=params,
        value=_exp(log_mass),
        log_value=log_mass,
        valid=True,
    )


def average_ratio_bound() -> float:
    """Upper bound on the expected OPT/RP ratio under i.i.d. uniform values."""
    return 1.0 + math.e


def smoothed_ratio_bound(
    n: int, sigma: float, sigma_norm: float, c_wc: float = 1.0
) -> BoundReport:
    """Finite-n upper bound on the expected perturbed OPT/RP ratio.

    ``sigma_norm`` is sigma * ||A|| for the base profile; ``c_wc`` is the
    constant in the c_wc * sqrt(n) worst-case ceiling (calibrated empirically
    against the hard family; no analytic value is available).  Branches:

    * 1/sigma >= sqrt(n): the worst-case ceiling c_wc * sqrt(n) is tighter.
    * sigma_norm <= 1:  2 e^(3/2) e^(2/(n-2)) / sigma + c_wc sqrt(n) / (sqrt(2 pi) n)
    * sigma_norm  > 1:  2 e^(3/2) e^(2/(n-2))        + c_wc sqrt(n) / (sqrt(2 pi) n)

    For fixed sigma the n-dependent factors vanish as n grows, leaving a
    ceiling polynomial in 1/sigma only.
    """
    if n < 3:
        raise InvalidNError(f"need n >= 3, got {n}")
    if not (sigma > 0 and sigma_norm > 0):
        raise ValueError("sigma and sigma_norm must be positive")
    tail = c_wc * math.sqrt(n) / (math.sqrt(2.0 * math.pi) * n)
    lead = 2.0 * math.exp(1.5) * math.exp(2.0 / (n - 2))
    if 1.0 / sigma >= math.sqrt(n):
        branch, value = "worst-case", c_wc * math.sqrt(n)
    elif sigma_norm <= 1.0:
        branch, value = "small-noise", lead / sigma + tail
    else:
        branch, value = "large-noise", lead + tail
    return BoundReport(
        name="smoothed_ratio",
        params={
            "n": n,
            "sigma": sigma,
            "sigma_norm": sigma_norm,
            "c_wc": c_wc,
            "branch": branch,
        },
        value=value,
        log_value=math.log(value),
        valid=True,
    )


@dataclass(frozen=True)
class HalfWelfareResult:
    """Empirical check that P(welfare >= n/2) >= 1/2."""

    empirical_prob: float
    passes: bool
    stderr: float
    n_samples: int


def half_welfare_check(welfare_samples, n: int) -> HalfWelfareResult:
    """Check P(random-priority welfare >= n/2) >= 1/2 on welfare samples.

    Passes when the empirical probability clears 0.5 minus three binomial
    standard errors.  Requires at least 1000 samples.
    """
    samples = np.asarray(welfare_samples, dtype=float)
    if samples.ndim != 1 or samples.size < 1000:
        raise TooFewSamplesError(
            f"need >= 1000 welfare samples, got {samples.size}"
        )
    p = float((samples >= n / 2.0).mean())
    stderr = math.sqrt(max(p * (1.0 - p), 0.0) / samples.size)
    return HalfWelfareResult(p, p >= 0.5 - 3.0 * stderr, stderr, int(samples.size))
