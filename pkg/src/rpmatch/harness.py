"""Ratio estimators, the experiment runner, and deterministic seeding.

Two ratio metrics are estimated side by side from the same instance stream:
the mean of per-instance OPT/RP ratios ("average"), and the ratio of mean
welfares ("bayesian").  A third estimator measures the expected ratio under
range-preserving perturbations of one base profile ("smoothed"), and a sweep
over the hard family fits the growth exponent of the unperturbed ratio.

Seeding contract
----------------
Every random draw comes from a substream fully determined by
``(master_seed, tag, index)``: the triple seeds a Philox counter-based
generator through numpy's SeedSequence, with the tag hashed to 64 bits by
SHA-256.  Instance k of any estimator uses tags ("instance", k) for profile
generation and ("rp", k) for ordering sampling, so results are a pure
function of (config, seed): partitioning work across processes can never
reorder draws, and the average/bayesian estimators see identical instances.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    BoundReport,
    average_ratio_bound,
    default_tail_exponent,
    gauss_mass_lower_bound,
    low_welfare_fraction_bound,
    smoothed_ratio_bound,
    welfare_tail_bound,
)
from .core import (
    ValuationProfile,
    matrix_norm,
    read_profile_csv,
    write_profile_csv,
)
from .generate import (
    HardFamilyParams,
    PerturbationSpec,
    hard_instance,
    perturb,
    sample_uniform_profile,
)
from .matching import max_weight_matching
from .mechanisms import N_EXACT, RpMode, rp_welfare

#: Identifier of the generator family and stream-splitting rule, recorded in
#: every report for reproducibility.
RNG_ID = "philox4x64/seedseq[seed,sha256(tag):64,index]/v1"


class ConfigInvalidError(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"config field {field_name!r}: {message}")


class IoError(OSError):
    def __init__(self, path, cause):
        self.path = str(path)
        super().__init__(f"cannot write {path}: {cause}")


class EmptyCandidatesError(ValueError):
    pass


class SizesTooFewError(ValueError):
    pass


def _tag64(tag: str) -> int:
    return int.from_bytes(hashlib.sha256(tag.encode()).digest()[:8], "little")


def substream(seed: int, tag: str, index: int) -> np.random.Generator:
    """Independent generator for task ``index`` of stream ``tag``."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), _tag64(tag), int(index)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class RatioEstimate:
    """Monte Carlo estimate of an expected OPT/RP ratio."""

    mean: float
    stderr: float
    ci95: tuple[float, float]
    samples: int
    seed: int
    rp_mode: str

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "ci95": list(self.ci95),
            "samples": self.samples,
            "seed": self.seed,
            "rp_mode": self.rp_mode,
        }


@dataclass(frozen=True)
class BayesianRatio:
    """Ratio of expected welfares, with both component estimates."""

    ratio: float
    opt_mean: float
    opt_stderr: float
    rp_mean: float
    rp_stderr: float
    samples: int
    seed: int
    rp_mode: str

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class WorstFamilyRow:
    n: int
    ratio: float
    sw_opt: float
    sw_rp: float
    sw_rp_stderr: float


@dataclass(frozen=True)
class WorstFamilyResult:
    """Unperturbed hard-family ratios per size and the fitted growth slope."""

    rows: tuple[WorstFamilyRow, ...]
    slope: float

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "rows": [dataclasses.asdict(r) for r in self.rows],
        }


@dataclass(frozen=True)
class SearchResult:
    """Outcome of a candidate sweep for the highest perturbed ratio."""

    best_label: str
    best_index: int
    best: RatioEstimate
    per_candidate: tuple[tuple[str, RatioEstimate], ...]


def _ratio_stats(sw_opt, sw_rp, sw_rp_se):
    """Mean/stderr of per-instance ratios, folding in denominator noise.

    The across-instance sample variance is combined with the per-instance
    delta-method variance ratio^2 * (se/rp)^2 of the plug-in estimator.
    """
    ratios = sw_opt / sw_rp
    k = ratios.size
    mean = float(ratios.mean())
    var_across = float(ratios.var(ddof=1)) / k if k > 1 else 0.0
    delta = float(((ratios * sw_rp_se / sw_rp) ** 2).mean()) / k
    stderr = math.sqrt(var_across + delta)
    return ratios, mean, stderr


def _one_instance_row(n: int, index: int, rp_mode: RpMode, seed: int):
    profile = sample_uniform_profile(n, substream(seed, "instance", index))
    _, sw_opt = max_weight_matching(profile)
    rng = substream(seed, "rp", index) if rp_mode.kind == "sampled" else None
    sw_rp, se = rp_welfare(profile, rp_mode, rng)
    return sw_opt, sw_rp, se


def _instance_chunk(n: int, start: int, stop: int, rp_mode_text: str, seed: int):
    mode = RpMode.parse(rp_mode_text)
    out = np.empty((stop - start, 3))
    for k in range(start, stop):
        out[k - start] = _one_instance_row(n, k, mode, seed)
    return out


def _perturbation_chunk(
    values, start: int, stop: int, sigma: float, norm_kind: str,
    p, rp_mode_text: str, seed: int,
):
    profile = ValuationProfile(np.asarray(values))
    spec = PerturbationSpec(sigma, norm_kind, p)
    mode = RpMode.parse(rp_mode_text)
    out = np.empty((stop - start, 3))
    for k in range(start, stop):
        perturbed = perturb(profile, spec, substream(seed, "perturb", k))
        _, sw_opt = max_weight_matching(perturbed)
        rng = substream(seed, "perturb-rp", k) if mode.kind == "sampled" else None
        sw_rp, se = rp_welfare(perturbed, mode, rng)
        out[k - start] = (sw_opt, sw_rp, se)
    return out


def _run_chunked(fn, total: int, workers: int, args: tuple) -> np.ndarray:
    """Split indices 0..total into per-worker chunks; results are identical
    for any worker count because every index is a pure function of the seed."""
    workers = max(1, min(int(workers), total))
    edges = np.linspace(0, total, workers + 1, dtype=int)
    chunks = [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    if workers == 1:
        parts = [fn(args[0], a, b, *args[1:]) for a, b in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(fn, args[0], a, b, *args[1:]) for a, b in chunks]
            parts = [f.result() for f in futures]
    return np.concatenate(parts, axis=0)


def paired_instance_rows(
    n: int, instances: int, rp_mode: RpMode, seed: int, workers: int = 1
) -> np.ndarray:
    """(instances, 3) array of (sw_opt, sw_rp, sw_rp_stderr) per instance.

    The shared sampling route of the average and bayesian estimators: both
    consume exactly this stream for a given seed.
    """
    if instances < 2:
        raise ValueError(f"need >= 2 instances, got {instances}")
    return _run_chunked(_instance_chunk, instances, workers, (n, str(rp_mode), seed))


def estimate_average_ratio(
    n: int, instances: int, rp_mode: RpMode, seed: int, workers: int = 1
) -> RatioEstimate:
    """Mean per-instance OPT/RP ratio over i.i.d. uniform instances."""
    rows = paired_instance_rows(n, instances, rp_mode, seed, workers)
    _, mean, stderr = _ratio_stats(rows[:, 0], rows[:, 1], rows[:, 2])
    return RatioEstimate(
        mean, stderr, (mean - 1.96 * stderr, mean + 1.96 * stderr),
        instances, seed, str(rp_mode),
    )


def estimate_bayesian_ratio(
    n: int, instances: int, rp_mode: RpMode, seed: int, workers: int = 1
) -> BayesianRatio:
    """Ratio of mean welfares over the same instance stream as the average."""
    rows = paired_instance_rows(n, instances, rp_mode, seed, workers)
    sw_opt, sw_rp, se = rows[:, 0], rows[:, 1], rows[:, 2]
    k = instances
    opt_mean = float(sw_opt.mean())
    rp_mean = float(sw_rp.mean())
    rp_var = float(sw_rp.var(ddof=1)) / k + float((se**2).mean()) / k
    return BayesianRatio(
        ratio=opt_mean / rp_mean,
        opt_mean=opt_mean,
        opt_stderr=math.sqrt(float(sw_opt.var(ddof=1)) / k),
        rp_mean=rp_mean,
        rp_stderr=math.sqrt(rp_var),
        samples=k,
        seed=seed,
        rp_mode=str(rp_mode),
    )


def perturbation_rows(
    profile: ValuationProfile,
    sigma: float,
    norm_kind: str,
    perturbations: int,
    rp_mode: RpMode,
    seed: int,
    p: float | None = None,
    workers: int = 1,
) -> np.ndarray:
    if perturbations < 2:
        raise ValueError(f"need >= 2 perturbations, got {perturbations}")
    return _run_chunked(
        _perturbation_chunk,
        perturbations,
        workers,
        (np.asarray(profile.values), sigma, norm_kind, p, str(rp_mode), seed),
    )


def estimate_smoothed_ratio(
    profile: ValuationProfile,
    sigma: float,
    norm_kind: str,
    perturbations: int,
    rp_mode: RpMode,
    seed: int,
    p: float | None = None,
    workers: int = 1,
) -> RatioEstimate:
    """Expected OPT/RP ratio under perturbations of one base profile."""
    rows = perturbation_rows(
        profile, sigma, norm_kind, perturbations, rp_mode, seed, p, workers
    )
    _, mean, stderr = _ratio_stats(rows[:, 0], rows[:, 1], rows[:, 2])
    return RatioEstimate(
        mean, stderr, (mean - 1.96 * stderr, mean + 1.96 * stderr),
        perturbations, seed, str(rp_mode),
    )


def default_candidates(
    n: int, instances: int, eps: float, seed: int
) -> list[tuple[str, ValuationProfile]]:
    """Hard-family instance plus ``instances`` uniform profiles."""
    out = [("hard", hard_instance(HardFamilyParams(n, eps)))]
    for k in range(instances):
        out.append(
            (f"uniform-{k:03d}", sample_uniform_profile(n, substream(seed, "candidate", k)))
        )
    return out


def smoothed_ratio_search(
    candidates: list[tuple[str, ValuationProfile]],
    sigma: float,
    norm_kind: str,
    perturbations: int,
    rp_mode: RpMode,
    seed: int,
    p: float | None = None,
    workers: int = 1,
) -> SearchResult:
    """Estimate the perturbed ratio of every candidate; return the largest.

    Any finite candidate list only lower-bounds the true supremum over base
    profiles, so results are labeled a candidate-max.  All candidates share
    one derived seed (common random numbers), which makes duplicates give
    identical estimates; ties keep the first index.
    """
    if not candidates:
        raise EmptyCandidatesError("candidate list is empty")
    per: list[tuple[str, RatioEstimate]] = []
    best_idx = 0
    for idx, (label, profile) in enumerate(candidates):
        est = estimate_smoothed_ratio(
            profile, sigma, norm_kind, perturbations, rp_mode, seed, p, workers
        )
        per.append((label, est))
        if est.mean > per[best_idx][1].mean:
            best_idx = idx
    return SearchResult(per[best_idx][0], best_idx, per[best_idx][1], tuple(per))


def worst_family_sweep(
    sizes, eps: float, rp_mode: RpMode, seed: int
) -> WorstFamilyResult:
    """Unperturbed OPT/RP ratio of the hard family per size, plus log-log slope."""
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2:
        raise SizesTooFewError(f"need >= 2 sizes for a slope, got {sizes}")
    if sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise SizesTooFewError(f"sizes must be strictly ascending, got {sizes}")
    rows = []
    for idx, n in enumerate(sizes):
        profile = hard_instance(HardFamilyParams(n, eps))
        _, sw_opt = max_weight_matching(profile)
        rng = substream(seed, "worst-rp", idx) if rp_mode.kind == "sampled" else None
        sw_rp, se = rp_welfare(profile, rp_mode, rng)
        rows.append(WorstFamilyRow(n, sw_opt / sw_rp, sw_opt, sw_rp, se))
    slope = float(
        np.polyfit(np.log([r.n for r in rows]), np.log([r.ratio for r in rows]), 1)[0]
    )
    return WorstFamilyResult(tuple(rows), slope)


# ---------------------------------------------------------------------------
# experiment runner


_KINDS = ("average", "smoothed", "bayesian", "worstfamily", "bounds")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment run.

    ``n`` is a single size, or a list of sizes for kind="worstfamily".
    ``instances`` counts sampled profiles (and uniform candidates for
    smoothed searches); ``perturbations`` counts perturbation draws per base
    profile.  ``input`` optionally points at a profile CSV used as the
    smoothed base instead of the hard family.
    """

    kind: str
    n: int | list[int] | None = None
    instances: int | None = None  # default: 10^4 for exact RP sizes, else 10^3
    perturbations: int = 500
    sigma: float | None = None
    norm_kind: str = "frobenius"
    p: float | None = None
    eps: float = 1e-6
    rp_mode: str = "exact"
    seed: int = 0
    out_dir: str = "."
    input: str | None = None
    c: float | None = None
    c_wc: float = 1.0
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigInvalidError(key, "unknown field")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> None:
        if self.kind not in _KINDS:
            raise ConfigInvalidError("kind", f"must be one of {_KINDS}")
        if self.kind == "worstfamily":
            if not isinstance(self.n, (list, tuple)) or len(self.n) < 2:
                raise ConfigInvalidError("n", "worstfamily needs a list of >= 2 sizes")
        elif self.kind == "smoothed" and self.input is not None:
            pass  # size comes from the input file
        else:
            if not isinstance(self.n, (int, np.integer)) or self.n < 2:
                raise ConfigInvalidError("n", f"need an integer size >= 2, got {self.n!r}")
        if (
            self.kind in ("average", "bayesian")
            and self.instances is not None
            and self.instances < 2
        ):
            raise ConfigInvalidError("instances", "need >= 2")
        if self.kind == "smoothed":
            if self.sigma is None or not self.sigma > 0:
                raise ConfigInvalidError("sigma", "smoothed runs need sigma > 0")
            if self.perturbations < 2:
                raise ConfigInvalidError("perturbations", "need >= 2")
        if self.norm_kind not in ("frobenius", "max", "p"):
            raise ConfigInvalidError("norm_kind", f"unknown norm {self.norm_kind!r}")
        if self.norm_kind == "p" and (self.p is None or self.p < 1):
            raise ConfigInvalidError("p", "p-norm needs p >= 1")
        if self.workers < 1:
            raise ConfigInvalidError("workers", "need >= 1")
        try:
            RpMode.parse(self.rp_mode)
        except ValueError as exc:
            raise ConfigInvalidError("rp_mode", str(exc)) from exc


def _fmt(x: float) -> str:
    return repr(float(x))


def _samples_csv_text(rows) -> str:
    lines = ["instance_id,sw_opt,sw_rp,sw_rp_stderr,ratio"]
    for ident, sw_opt, sw_rp, se in rows:
        lines.append(
            f"{ident},{_fmt(sw_opt)},{_fmt(sw_rp)},{_fmt(se)},{_fmt(sw_opt / sw_rp)}"
        )
    return "\n".join(lines) + "\n"


def _bound_dicts(reports) -> list[dict]:
    return [r.to_dict() for r in reports]


def run_experiment(config: ExperimentConfig) -> dict:
    """Run one experiment and write report.json plus samples.csv.

    Outputs are a pure function of the config: rerunning (with any worker
    count) reproduces samples.csv byte for byte.  ``wall_time_s`` is the only
    nondeterministic report field and is excluded from ``content_sha256``.

    samples.csv rows are per instance (average/bayesian), per perturbation
    (smoothed), or per size with instance_id = n (worstfamily); the bounds
    kind writes the header only.  When ``instances`` is omitted the exact-RP
    convention applies: 10^4 instances for sizes the exact mechanism covers,
    10^3 otherwise.  Sampled rp modes should keep m >= 1000 so the plug-in
    ratio bias O(1/m) stays below the reported standard errors; per-row
    sw_rp_stderr lets downstream analysis reweight.
    """
    config.validate()
    t0 = time.perf_counter()
    mode = RpMode.parse(config.rp_mode)
    estimates: list[dict] = []
    bound_reports: list[BoundReport] = []
    csv_rows: list[tuple] = []

    if config.kind in ("average", "bayesian"):
        instances = config.instances
        if instances is None:
            exact_sized = mode.kind == "exact" and config.n <= N_EXACT
            instances = 10**4 if exact_sized else 10**3
        rows = paired_instance_rows(
            config.n, instances, mode, config.seed, config.workers
        )
        csv_rows = [(k, r[0], r[1], r[2]) for k, r in enumerate(rows)]
        _, mean, stderr = _ratio_stats(rows[:, 0], rows[:, 1], rows[:, 2])
        avg = RatioEstimate(
            mean, stderr, (mean - 1.96 * stderr, mean + 1.96 * stderr),
            instances, config.seed, config.rp_mode,
        )
        estimates.append({"name": "average_ratio", **avg.to_dict()})
        if config.kind == "bayesian":
            bay = estimate_bayesian_ratio(
                config.n, instances, mode, config.seed, config.workers
            )
            estimates.append({"name": "bayesian_ratio", **bay.to_dict()})
        bound_reports.append(
            BoundReport(
                "average_ratio_ceiling",
                params={},
                value=average_ratio_bound(),
                log_value=math.log(average_ratio_bound()),
            )
        )

    elif config.kind == "smoothed":
        if config.input:
            profile = read_profile_csv(config.input)
        else:
            profile = hard_instance(HardFamilyParams(config.n, config.eps))
        n = profile.n
        rows = perturbation_rows(
            profile, config.sigma, config.norm_kind, config.perturbations,
            mode, config.seed, config.p, config.workers,
        )
        csv_rows = [(k, r[0], r[1], r[2]) for k, r in enumerate(rows)]
        _, mean, stderr = _ratio_stats(rows[:, 0], rows[:, 1], rows[:, 2])
        est = RatioEstimate(
            mean, stderr, (mean - 1.96 * stderr, mean + 1.96 * stderr),
            config.perturbations, config.seed, config.rp_mode,
        )
        estimates.append({"name": "smoothed_ratio_candidate", **est.to_dict()})
        _, base_opt = max_weight_matching(profile)
        base_rp, base_se = rp_welfare(
            profile, mode, substream(config.seed, "base-rp", 0)
        )
        estimates.append(
            {
                "name": "unperturbed_ratio",
                "mean": base_opt / base_rp,
                "stderr": base_opt / base_rp**2 * base_se,
                "samples": 1,
                "seed": config.seed,
                "rp_mode": config.rp_mode,
            }
        )
        norm_value = matrix_norm(profile, config.norm_kind, config.p)
        bound_reports.append(
            smoothed_ratio_bound(n, config.sigma, config.sigma * norm_value, config.c_wc)
        )
        bound_reports.append(gauss_mass_lower_bound(n, config.sigma * norm_value))

    elif config.kind == "worstfamily":
        result = worst_family_sweep(config.n, config.eps, mode, config.seed)
        csv_rows = [(r.n, r.sw_opt, r.sw_rp, r.sw_rp_stderr) for r in result.rows]
        estimates.append({"name": "hard_family_growth", **result.to_dict()})

    elif config.kind == "bounds":
        n = int(config.n)
        c = config.c if config.c is not None else default_tail_exponent(n)
        bound_reports.append(welfare_tail_bound(n, c))
        bound_reports.append(low_welfare_fraction_bound(n, c))
        bound_reports.append(
            BoundReport(
                "average_ratio_ceiling",
                params={},
                value=average_ratio_bound(),
                log_value=math.log(average_ratio_bound()),
            )
        )
        # the two Gaussian-mass branches must agree where they meet
        at_boundary = gauss_mass_lower_bound(n, 1.0)
        bound_reports.append(
            BoundReport(
                "gauss_mass_branch_boundary",
                params={
                    "entry_scale": 1.0,
                    "log_small_scale": n * (n - 2) * (math.log(1.0) - 0.5),
                    "log_large_scale": -n * (n - 2) / 2.0,
                },
                value=at_boundary.value,
                log_value=at_boundary.log_value,
            )
        )
        if config.sigma:
            bound_reports.append(
                smoothed_ratio_bound(n, config.sigma, config.sigma, config.c_wc)
            )

    csv_text = _samples_csv_text(csv_rows)
    cfg_dict = config.to_dict()
    if cfg_dict.get("instances") is None and config.kind in ("average", "bayesian"):
        cfg_dict["instances"] = instances  # record the resolved default
    body = {
        "config": cfg_dict,
        "seed": config.seed,
        "rng_id": RNG_ID,
        "estimates": estimates,
        "bounds": _bound_dicts(bound_reports),
        "versions": {"rpmatch": __version__, "numpy": np.__version__},
    }
    canonical = json.dumps(body, sort_keys=True, indent=2)
    body["content_sha256"] = hashlib.sha256(
        canonical.encode() + csv_text.encode()
    ).hexdigest()
    body["wall_time_s"] = time.perf_counter() - t0

    out_dir = Path(config.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "samples.csv").write_text(csv_text, encoding="utf-8")
        (out_dir / "report.json").write_text(
            json.dumps(body, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IoError(out_dir, exc) from exc
    return body


def generate_profile_file(
    kind: str, n: int, eps: float, seed: int, out_path
) -> ValuationProfile:
    """Back end of the ``gen`` command: build a profile and write it as CSV."""
    if kind == "uniform":
        profile = sample_uniform_profile(n, substream(seed, "gen", 0))
    elif kind == "hard":
        profile = hard_instance(HardFamilyParams(n, eps))
    else:
        raise ConfigInvalidError("kind", f"unknown generator {kind!r}")
    try:
        write_profile_csv(profile, out_path)
    except OSError as exc:
        raise IoError(out_path, exc) from exc
    return profile
