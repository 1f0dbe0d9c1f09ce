"""Maximum-likelihood correction of classifier hit rates into CCP estimates.

A classifier with known recall and false positive rate turns a true
corrective rate ``pr`` into an expected hit rate
``hr = (recall - fpr) * pr + fpr``; inverting gives the most likely
``pr = (hr - fpr) / (recall - fpr)``. The inversion only lands in [0, 1]
when the observed hit rate lies inside [fpr, recall]; estimates outside
that domain are reported as diagnostics, never clamped.

Bootstrap operations quantify how sensitive the estimate is to resampling
of the labeled corpus and to re-measuring the classifier performance.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .classifier import LabeledCommit, TermModel, classify_message
from .errors import ConfigError, InputError


@dataclass(frozen=True)
class ModelPerformance:
    """Recall / false-positive-rate pair characterizing a classifier."""

    recall: float
    fpr: float

    def __post_init__(self):
        if not 0.0 <= self.fpr < self.recall <= 1.0:
            raise ConfigError(
                f"model performance requires 0 <= fpr < recall <= 1, "
                f"got recall={self.recall}, fpr={self.fpr}"
            )


DEFAULT_PERFORMANCE = ModelPerformance(recall=0.84, fpr=0.042)


class EstimateStatus(str, Enum):
    VALID = "Valid"
    BELOW_ZERO = "BelowZero"
    ABOVE_ONE = "AboveOne"


@dataclass(frozen=True)
class CcpEstimate:
    """A hit count, the raw MLE value, and its validity status."""

    n: int
    k: int
    ccp_raw: float
    status: EstimateStatus

    @property
    def hit_rate(self) -> float:
        return self.k / self.n

    @property
    def valid(self) -> bool:
        return self.status is EstimateStatus.VALID

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "hit_rate": self.hit_rate,
            "ccp_raw": self.ccp_raw,
            "status": self.status.value,
        }


def expected_hit_rate(pr: float, perf: ModelPerformance) -> float:
    """Hit rate a classifier with the given performance produces at true rate pr."""
    if not 0.0 <= pr <= 1.0:
        raise ValueError(f"pr must be a probability, got {pr}")
    return (perf.recall - perf.fpr) * pr + perf.fpr


def ccp_from_hit_rate(hr: float, perf: ModelPerformance) -> tuple[float, EstimateStatus]:
    """Invert the hit rate into the most likely CCP, with validity status."""
    ccp = (hr - perf.fpr) / (perf.recall - perf.fpr)
    if hr < perf.fpr:
        status = EstimateStatus.BELOW_ZERO
    elif hr > perf.recall:
        status = EstimateStatus.ABOVE_ONE
    else:
        status = EstimateStatus.VALID
    return ccp, status


def estimate_ccp(k: int, n: int, perf: ModelPerformance = DEFAULT_PERFORMANCE) -> CcpEstimate:
    """Maximum-likelihood CCP estimate from k classifier hits out of n commits."""
    if n <= 0:
        raise InputError("estimate_ccp requires n > 0")
    if not 0 <= k <= n:
        raise ValueError(f"hit count k={k} outside [0, {n}]")
    ccp, status = ccp_from_hit_rate(k / n, perf)
    return CcpEstimate(n=n, k=k, ccp_raw=ccp, status=status)


def valid_hit_rate_domain(perf: ModelPerformance) -> tuple[float, float]:
    """Closed hit-rate interval on which the estimate is a probability."""
    return perf.fpr, perf.recall


# ---------------------------------------------------------------------------
# Performance measurement and config

def fit_performance(labels: np.ndarray, hits: np.ndarray) -> ModelPerformance:
    """Measure (recall, fpr) from parallel boolean label/hit arrays."""
    labels = np.asarray(labels, dtype=bool)
    hits = np.asarray(hits, dtype=bool)
    positives = int(labels.sum())
    negatives = int((~labels).sum())
    if positives == 0 or negatives == 0:
        raise InputError("performance measurement requires both positives and negatives")
    recall = float((labels & hits).sum() / positives)
    fpr = float((~labels & hits).sum() / negatives)
    return ModelPerformance(recall=recall, fpr=fpr)


def _corpus_arrays(corpus: list[LabeledCommit], model: TermModel) -> tuple[np.ndarray, np.ndarray]:
    labels = np.array([c.label for c in corpus], dtype=bool)
    hits = np.array([classify_message(c.message, model).corrective for c in corpus], dtype=bool)
    return labels, hits


def load_performance_config(path: str | Path) -> tuple[ModelPerformance, str]:
    """Load a ``recall= / fpr= / model_id=`` key-value config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read performance config {path}: {exc}") from exc
    values: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"malformed performance config line: {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    try:
        perf = ModelPerformance(recall=float(values["recall"]), fpr=float(values["fpr"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"performance config {path} needs numeric 'recall' and 'fpr'") from exc
    return perf, values.get("model_id", "")


def load_default_performance() -> tuple[ModelPerformance, str]:
    with resources.as_file(resources.files("ccp_miner.data").joinpath("performance.cfg")) as p:
        return load_performance_config(p)


# ---------------------------------------------------------------------------
# Bootstrap validation

@dataclass(frozen=True)
class BootstrapReport:
    iterations: int
    seed: int
    coverage: float
    mean_difference: float
    interval_low: float
    interval_high: float

    def __post_init__(self):
        if not self.interval_low <= self.mean_difference <= self.interval_high:
            raise ValueError("bootstrap interval must bracket the mean difference")

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "seed": self.seed,
            "coverage": self.coverage,
            "mean_difference": self.mean_difference,
            "interval_low": self.interval_low,
            "interval_high": self.interval_high,
        }


def _central_interval(values: np.ndarray, coverage: float) -> tuple[float, float]:
    # Empirical quantiles, nearest-rank (lower): trim (1-coverage)/2 per tail.
    tail = (1.0 - coverage) / 2.0
    low, high = np.percentile(values, [100.0 * tail, 100.0 * (1.0 - tail)], method="lower")
    return float(low), float(high)


def bootstrap_difference_distribution(
    corpus: list[LabeledCommit],
    model: TermModel,
    perf: ModelPerformance | None = None,
    iterations: int = 10_000,
    coverage: float = 0.95,
    seed: int = 0,
) -> BootstrapReport:
    """Distribution of (CCP estimate - true rate) under corpus resampling.

    Each iteration resamples the corpus with replacement, computes the
    resample's true positive rate and the MLE estimate of its hit rate, and
    records the difference. When ``perf`` is None the classifier performance
    is measured once on the full corpus, so the report isolates sampling
    noise from any mismatch between shipped constants and the corpus.
    """
    if not corpus:
        raise InputError("bootstrap requires a non-empty corpus")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not 0.0 < coverage < 1.0:
        raise ValueError("coverage must be in (0, 1)")
    labels, hits = _corpus_arrays(corpus, model)
    if perf is None:
        perf = fit_performance(labels, hits)
    n = len(corpus)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(iterations, n))
    truth = labels[idx].mean(axis=1)
    hr = hits[idx].mean(axis=1)
    estimates = (hr - perf.fpr) / (perf.recall - perf.fpr)
    diffs = estimates - truth
    low, high = _central_interval(diffs, coverage)
    return BootstrapReport(
        iterations=iterations,
        seed=seed,
        coverage=coverage,
        mean_difference=float(diffs.mean()),
        interval_low=low,
        interval_high=high,
    )


@dataclass(frozen=True)
class SegmentSensitivity:
    low: float
    high: float
    max_abs_difference: float
    p95_abs_difference: float

    def as_dict(self) -> dict:
        return {
            "segment": [self.low, self.high],
            "max_abs_difference": self.max_abs_difference,
            "p95_abs_difference": self.p95_abs_difference,
        }


@dataclass(frozen=True)
class SensitivityReport:
    iterations: int
    seed: int
    redraws: int
    segments: tuple[SegmentSensitivity, ...]

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "seed": self.seed,
            "redraws": self.redraws,
            "segments": [s.as_dict() for s in self.segments],
        }


DEFAULT_SENSITIVITY_SEGMENTS = ((0.0, 1.0), (0.042, 0.84), (0.06, 0.39))


def estimator_sensitivity(
    corpus: list[LabeledCommit],
    model: TermModel,
    iterations: int = 10_000,
    eval_segments: tuple[tuple[float, float], ...] = DEFAULT_SENSITIVITY_SEGMENTS,
    seed: int = 0,
) -> SensitivityReport:
    """Sensitivity of the estimator to re-measured classifier performance.

    Per iteration, draw two resamples of the corpus, measure (recall, fpr)
    on each, and build the two linear estimators. Their difference is linear
    in the hit rate, so its extremes over a segment are at the endpoints;
    report the max and p95 of the max absolute difference per segment.
    Degenerate resamples (no positives, no negatives, or recall <= fpr) are
    redrawn and counted.
    """
    if not corpus:
        raise InputError("estimator_sensitivity requires a non-empty corpus")
    for low, high in eval_segments:
        if not (0.0 <= low <= high <= 1.0):
            raise ValueError(f"eval segment [{low}, {high}] outside [0, 1]")
    labels, hits = _corpus_arrays(corpus, model)
    n = len(corpus)
    rng = np.random.default_rng(seed)

    def draw(count: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw `count` (recall, fpr) pairs from valid resamples."""
        recall = np.empty(count)
        fpr = np.empty(count)
        pending = np.arange(count)
        redraws = 0
        while pending.size:
            idx = rng.integers(0, n, size=(pending.size, n))
            lab = labels[idx]
            hit = hits[idx]
            pos = lab.sum(axis=1)
            neg = n - pos
            with np.errstate(divide="ignore", invalid="ignore"):
                r = (lab & hit).sum(axis=1) / pos
                f = (~lab & hit).sum(axis=1) / neg
            ok = (pos > 0) & (neg > 0) & (r > f)
            recall[pending[ok]] = r[ok]
            fpr[pending[ok]] = f[ok]
            redraws += int((~ok).sum())
            pending = pending[~ok]
        draw.redraws += redraws  # type: ignore[attr-defined]
        return recall, fpr

    draw.redraws = 0  # type: ignore[attr-defined]
    recall_a, fpr_a = draw(iterations)
    recall_b, fpr_b = draw(iterations)

    segments = []
    for low, high in eval_segments:
        points = np.array([low, high])
        est_a = (points[:, None] - fpr_a) / (recall_a - fpr_a)
        est_b = (points[:, None] - fpr_b) / (recall_b - fpr_b)
        max_diff = np.abs(est_a - est_b).max(axis=0)
        segments.append(
            SegmentSensitivity(
                low=low,
                high=high,
                max_abs_difference=float(max_diff.max()),
                p95_abs_difference=float(np.percentile(max_diff, 95, method="lower")),
            )
        )
    return SensitivityReport(
        iterations=iterations,
        seed=seed,
        redraws=draw.redraws,  # type: ignore[attr-defined]
        segments=tuple(segments),
    )


# ---------------------------------------------------------------------------
# Quality scale

@dataclass(frozen=True)
class DistributionTable:
    """CCP thresholds per percentile; higher percentile means better quality."""

    rows: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if not self.rows:
            raise ConfigError("distribution table is empty")
        percentiles = [p for p, _ in self.rows]
        thresholds = [t for _, t in self.rows]
        if percentiles != sorted(percentiles) or len(set(percentiles)) != len(percentiles):
            raise ConfigError("distribution table percentiles must be strictly ascending")
        if any(a <= b for a, b in zip(thresholds, thresholds[1:])):
            raise ConfigError("distribution table thresholds must be strictly decreasing")


@dataclass(frozen=True)
class PercentileBand:
    """The percentile interval bracketing an estimate, best to worst."""

    lower: int  # percentile floor; 0 means below the table's worst threshold
    upper: int
    label: str

    def as_dict(self) -> dict:
        return {"lower_percentile": self.lower, "upper_percentile": self.upper, "label": self.label}


def load_distribution_table(path: str | Path) -> DistributionTable:
    """Load a ``percentile,ccp`` CSV sorted ascending by percentile."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            rows = tuple((int(r["percentile"]), float(r["ccp"])) for r in reader)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot load distribution table {path}: {exc}") from exc
    return DistributionTable(rows=rows)


def load_default_distribution_table() -> DistributionTable:
    with resources.as_file(resources.files("ccp_miner.data").joinpath("ccp_distribution.csv")) as p:
        return load_distribution_table(p)


def rank_on_scale(ccp: float, table: DistributionTable) -> PercentileBand:
    """Band a CCP value on the quality scale.

    The project beats percentile p when its CCP is at most the p threshold;
    the band is the bracket between the best beaten percentile and the next
    listed one. Values between listed percentiles are banded, never
    interpolated.
    """
    if not 0.0 <= ccp <= 1.0:
        raise ValueError(f"ccp must be a probability, got {ccp}")
    best = None
    for percentile, threshold in table.rows:
        if ccp <= threshold:
            best = percentile
    if best is None:
        worst = table.rows[0][0]
        return PercentileBand(lower=0, upper=worst, label=f"bottom {worst}%")
    percentiles = [p for p, _ in table.rows]
    if best == percentiles[-1]:
        return PercentileBand(lower=best, upper=100, label=f"top {100 - best}%")
    upper = percentiles[percentiles.index(best) + 1]
    return PercentileBand(lower=best, upper=upper, label=f"percentile {best}-{upper}")
