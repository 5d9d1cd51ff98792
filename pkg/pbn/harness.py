"""Experiment runner: trial loops over conditions, the three methods
(adjusted PbN, naive PbN, PN), aggregation, significance flags and tables."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import cache, lru_cache, partial
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np
import yaml
from pydantic import BaseModel, Field, model_validator
from scipy import stats

from .config import settings
from .core import LinearClassifier, PbnSplits, ProblemParams, SampleSet, accuracy, derive_seed
from .datagen import (
    Overlap,
    ProportionalBias,
    SingleComponentBias,
    SituationData,
    SituationSpec,
    dump_splits,
    make_situation,
    negative_means,
)
from .density import SigmaField, kde_sigma_field, weights_from_sigma
from .exceptions import ExperimentAbortedError, InvalidParameterError, PbnError
from .risk import Weighting, pbn_risk, pn_risk
from .selection import SYNTHETIC_K_GRID, WIRELESS_K_GRID, KGrid, PhiPrior, PhiSource, estimate_phi, perturb_phi, select_k
from .training import SgdConfig, train_risk
from .wireless_io import BenchmarkSpec, binarize, make_benchmark_split, parse_wireless

logger = logging.getLogger(__name__)


class ExperimentId(str, Enum):
    SITUATION1 = "situation1"
    SITUATION2 = "situation2"
    SITUATION3 = "situation3"
    SITUATION4 = "situation4"
    PHI_SENSITIVITY_LARGE = "phi_sensitivity_large"
    PHI_SENSITIVITY_SMALL = "phi_sensitivity_small"
    WIRELESS = "wireless"


class Method(str, Enum):
    ADJUSTED_PBN = "adjusted_pbn"
    NAIVE_PBN = "naive_pbn"
    PN = "pn"


class SigmaMode(str, Enum):
    ANALYTIC = "analytic"
    KDE = "kde"


class OutputFormat(str, Enum):
    CSV = "csv"
    MARKDOWN = "markdown"


METHOD_LABELS = {Method.ADJUSTED_PBN: "A.PbN", Method.NAIVE_PBN: "N.PbN", Method.PN: "PN"}
PHI_FACTORS = (0.5, 0.7, 1.3, 1.5)
PROPORTIONAL_BIASES = (
    (0.25, 0.25, 0.25, 0.25),
    (0.40, 0.10, 0.35, 0.15),
    (0.15, 0.40, 0.10, 0.35),
    (0.35, 0.15, 0.40, 0.10),
)
PHI_SENSITIVITY_OF = {
    ExperimentId.SITUATION1: ExperimentId.PHI_SENSITIVITY_LARGE,
    ExperimentId.SITUATION2: ExperimentId.PHI_SENSITIVITY_SMALL,
    ExperimentId.PHI_SENSITIVITY_LARGE: ExperimentId.PHI_SENSITIVITY_LARGE,
    ExperimentId.PHI_SENSITIVITY_SMALL: ExperimentId.PHI_SENSITIVITY_SMALL,
}


class ExperimentConfig(BaseModel):
    experiment: ExperimentId
    n_trials: Optional[int] = None
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0)
    methods: tuple[Method, ...] = tuple(Method)
    k_grid: Optional[KGrid] = None
    sgd: SgdConfig = Field(default_factory=SgdConfig)
    rho: Optional[float] = None
    phi: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    phi_factors: tuple[float, ...] = PHI_FACTORS
    sigma_mode: Optional[SigmaMode] = None
    bandwidth: float = Field(default_factory=lambda: settings.BANDWIDTH, gt=0)
    clip_floor: float = Field(default_factory=lambda: settings.CLIP_FLOOR, gt=0, lt=1)
    weighting: Weighting = Weighting.MARGIN
    data_path: Optional[Path] = Field(default_factory=lambda: settings.WIRELESS_DATA_PATH)
    standardize: bool = True
    output_format: OutputFormat = OutputFormat.CSV
    workers: int = Field(default_factory=lambda: settings.WORKERS, ge=1)
    max_failure_fraction: float = Field(default_factory=lambda: settings.MAX_FAILURE_FRACTION, ge=0, le=1)
    dump_dir: Optional[Path] = None

    @model_validator(mode="after")
    def fill_defaults(self):
        if self.n_trials is None:
            self.n_trials = 100 if self.experiment is ExperimentId.WIRELESS else 10
        if self.n_trials < 2:
            raise ValueError("at least 2 trials are needed for a standard deviation")
        if self.k_grid is None:
            self.k_grid = WIRELESS_K_GRID if self.experiment is ExperimentId.WIRELESS else SYNTHETIC_K_GRID
        if self.sigma_mode is None:
            self.sigma_mode = SigmaMode.KDE if self.experiment is ExperimentId.WIRELESS else SigmaMode.ANALYTIC
        if self.experiment is ExperimentId.WIRELESS and self.sigma_mode is SigmaMode.ANALYTIC:
            raise ValueError("the wireless benchmark has no analytic densities; use sigma_mode=kde")
        if any(c <= 0 for c in self.phi_factors):
            raise ValueError("phi factors must be positive")
        if not self.methods:
            raise ValueError("at least one method is required")
        return self

    @classmethod
    def from_yaml(cls, path: Union[str, Path], **overrides) -> "ExperimentConfig":
        with open(path) as handle:
            data = yaml.safe_load(handle) or {}
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.model_validate(data)

    @property
    def is_phi_sensitivity(self) -> bool:
        return self.experiment in (ExperimentId.PHI_SENSITIVITY_LARGE, ExperimentId.PHI_SENSITIVITY_SMALL)

    def columns(self) -> list[str]:
        if self.is_phi_sensitivity:
            return [factor_column(c) for c in sorted({1.0, *self.phi_factors})]
        return [m.value for m in self.methods]


class MethodSummary(BaseModel):
    mean: float = Field(ge=0, le=100)
    std: float = Field(ge=0)
    bold: bool = False


class SummaryRow(BaseModel):
    condition: str
    methods: dict[str, MethodSummary]
    phi_mean: float
    phi_std: float
    accuracies: dict[str, list[float]] = Field(default_factory=dict, exclude=True)


@dataclass(frozen=True)
class Condition:
    label: str
    situation: Optional[SituationSpec] = None
    benchmark: Optional[BenchmarkSpec] = None


@dataclass(frozen=True)
class TrialResult:
    condition: int
    trial: int
    accuracies: dict[str, float] = field(default_factory=dict)
    phi_hat: float = float("nan")
    k_star: dict[str, float] = field(default_factory=dict)
    error: Optional[str] = None


@dataclass(frozen=True)
class TrialFit:
    splits: PbnSplits
    params: ProblemParams
    classifiers: dict[str, LinearClassifier]
    phi_hat: float
    k_star: dict[str, float]


def factor_column(c: float) -> str:
    return f"c={c:g}"


def _mean_label(mean: np.ndarray) -> str:
    return "[" + ", ".join(f"{v:.1f}" for v in mean) + "]"


def conditions_for(experiment: ExperimentId) -> list[Condition]:
    experiment = ExperimentId(experiment)
    if experiment is ExperimentId.WIRELESS:
        labels = {"room1_only": "Room 1", "room3_only": "Room 3", "room4_only": "Room 4", "random": "random"}
        return [Condition(label, benchmark=BenchmarkSpec(bias_mode=mode)) for mode, label in labels.items()]
    if experiment in (ExperimentId.SITUATION1, ExperimentId.PHI_SENSITIVITY_LARGE):
        overlap, proportional = Overlap.LARGE, False
    elif experiment in (ExperimentId.SITUATION2, ExperimentId.PHI_SENSITIVITY_SMALL):
        overlap, proportional = Overlap.SMALL, False
    else:
        overlap, proportional = (Overlap.LARGE if experiment is ExperimentId.SITUATION3 else Overlap.SMALL), True
    if proportional:
        return [
            Condition(
                "[" + ", ".join(f"{p:.2f}" for p in probs) + "]",
                situation=SituationSpec(overlap=overlap, bias=ProportionalBias(probs=probs)),
            )
            for probs in PROPORTIONAL_BIASES
        ]
    means = negative_means(overlap)
    return [
        Condition(_mean_label(means[j]), situation=SituationSpec(overlap=overlap, bias=SingleComponentBias(index=j + 1)))
        for j in range(len(means))
    ]


@lru_cache(maxsize=4)
def _wireless_samples(path: str) -> SampleSet:
    return binarize(parse_wireless(path))


def _trial_data(config: ExperimentConfig, condition: Condition, seed: int):
    if condition.situation is not None:
        situation = make_situation(condition.situation, seed, rho=config.rho)
        return situation.splits, situation.params, situation
    if config.data_path is None:
        raise InvalidParameterError("the wireless benchmark needs a data path")
    samples = _wireless_samples(str(config.data_path))
    splits, params = make_benchmark_split(samples, condition.benchmark, seed, rho=config.rho, scale_features=config.standardize)
    return splits, params, None


def _sigma_values(
    config: ExperimentConfig,
    situation: Optional[SituationData],
    X_P: np.ndarray,
    X_bN: np.ndarray,
    params: ProblemParams,
) -> np.ndarray:
    """σ̃ on X_P ∪ X_bN, computed once per training set and frozen."""
    if config.sigma_mode is SigmaMode.ANALYTIC:
        if situation is None:
            raise InvalidParameterError("analytic sigma needs the generating densities")
        field_ = SigmaField(situation.p_positive, situation.p_biased_negative, params, clip_floor=config.clip_floor)
    else:
        field_ = kde_sigma_field(X_P, X_bN, params, config.bandwidth, config.clip_floor)
    sigma, _ = field_.evaluate(np.vstack([X_P, X_bN]))
    return sigma


def fit_trial(config: ExperimentConfig, condition_index: int, trial: int) -> TrialFit:
    """Generate one trial's data and fit every requested method on it."""
    condition = conditions_for(config.experiment)[condition_index]

    def seed_for(purpose: str) -> int:
        return derive_seed(config.seed, condition_index, trial, purpose)

    def sgd_for(purpose: str) -> SgdConfig:
        return config.sgd.model_copy(update={"seed": seed_for(purpose)})

    splits, params, situation = _trial_data(config, condition, seed_for("data"))
    if config.dump_dir is not None:
        dump_splits(splits, config.dump_dir / config.experiment.value / f"condition{condition_index}_trial{trial}")
    phi_hat = estimate_phi(splits.fnr_est, sgd_for("phi"))
    phi = PhiPrior(phi=config.phi, source=PhiSource.GIVEN) if config.phi is not None else phi_hat

    X_bN = splits.train_bN.X
    # the baselines add the validation P but keep the problem's π and ρ, set from the training split
    combined_P = np.vstack([splits.train_P.X, splits.valid_P.X])
    classifiers: dict[str, LinearClassifier] = {}
    k_star: dict[str, float] = {}
    methods = (Method.ADJUSTED_PBN,) if config.is_phi_sensitivity else config.methods

    if Method.PN in methods:
        classifiers[Method.PN.value] = train_risk(pn_risk(combined_P, X_bN, params.pi), sgd_for(Method.PN.value))

    if Method.NAIVE_PBN in methods:
        sigma = _sigma_values(config, situation, combined_P, X_bN, params)
        risk = pbn_risk(combined_P, X_bN, weights_from_sigma(sigma, 1.0, config.clip_floor), params, config.weighting)
        classifiers[Method.NAIVE_PBN.value] = train_risk(risk, sgd_for(Method.NAIVE_PBN.value))

    if Method.ADJUSTED_PBN in methods:
        X_P = splits.train_P.X
        sigma = _sigma_values(config, situation, X_P, X_bN, params)
        adjusted_sgd = sgd_for(Method.ADJUSTED_PBN.value)

        @cache
        def train_fn(k: float) -> LinearClassifier:
            weights = weights_from_sigma(sigma, k, config.clip_floor)
            return train_risk(pbn_risk(X_P, X_bN, weights, params, config.weighting), adjusted_sgd)

        if config.is_phi_sensitivity:
            for c in sorted({1.0, *config.phi_factors}):
                chosen = select_k(config.k_grid, train_fn, splits.valid_P, perturb_phi(phi, c))
                classifiers[factor_column(c)] = chosen.classifier
                k_star[factor_column(c)] = chosen.k_star
        else:
            chosen = select_k(config.k_grid, train_fn, splits.valid_P, phi)
            classifiers[Method.ADJUSTED_PBN.value] = chosen.classifier
            k_star[Method.ADJUSTED_PBN.value] = chosen.k_star

    return TrialFit(splits, params, classifiers, phi_hat.phi, k_star)


def run_trial(config: ExperimentConfig, condition_index: int, trial: int) -> TrialResult:
    try:
        fit = fit_trial(config, condition_index, trial)
    except PbnError as exc:
        return TrialResult(condition_index, trial, error=str(exc))
    accuracies = {name: accuracy(clf, fit.splits.test) for name, clf in fit.classifiers.items()}
    logger.debug("condition %d trial %d: %s (phi_hat=%.4f, k*=%s)", condition_index, trial, accuracies, fit.phi_hat, fit.k_star)
    return TrialResult(condition_index, trial, accuracies, fit.phi_hat, fit.k_star)


def run_trials(config: ExperimentConfig) -> list[TrialResult]:
    if config.experiment is ExperimentId.WIRELESS:
        if config.data_path is None:
            raise InvalidParameterError("the wireless benchmark needs --data or PBN_WIRELESS_DATA_PATH")
        # parsed once here so an unreadable file aborts the run instead of every trial
        _wireless_samples(str(config.data_path))
    tasks = [(ci, t) for ci in range(len(conditions_for(config.experiment))) for t in range(config.n_trials)]
    logger.info("running %s: %d conditions x %d trials", config.experiment.value, len(tasks) // config.n_trials, config.n_trials)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(partial(run_trial, config), *zip(*tasks)))
    else:
        results = [run_trial(config, ci, t) for ci, t in tasks]
    results.sort(key=lambda r: (r.condition, r.trial))

    failed = [r for r in results if r.error is not None]
    for r in failed:
        logger.warning("condition %d trial %d failed: %s", r.condition, r.trial, r.error)
    if len(failed) > config.max_failure_fraction * len(results):
        raise ExperimentAbortedError(f"{len(failed)} of {len(results)} trials failed")
    return results


def welch_t_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    """Two-sided Welch (unequal variance) t-test p-value."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise InvalidParameterError("the t-test needs at least two values per sample")
    if np.var(a) == 0 and np.var(b) == 0:
        return 1.0 if a.mean() == b.mean() else 0.0
    return float(stats.ttest_ind(a, b, equal_var=False).pvalue)


def significance_flags(
    accuracies: Mapping[str, Sequence[float]],
    alpha: float = 0.05,
    reference: Optional[str] = None,
) -> dict[str, bool]:
    """Flag the best column (or ``reference``) and every column the t-test cannot tell apart from it."""
    if reference is None:
        reference = max(accuracies, key=lambda name: np.mean(accuracies[name]))
    return {
        name: name == reference or welch_t_test(values, accuracies[reference]) >= alpha
        for name, values in accuracies.items()
    }


def aggregate(config: ExperimentConfig, results: Sequence[TrialResult]) -> list[SummaryRow]:
    rows = []
    columns = config.columns()
    reference = factor_column(1.0) if config.is_phi_sensitivity else None
    for ci, condition in enumerate(conditions_for(config.experiment)):
        done = [r for r in results if r.condition == ci and r.error is None]
        if len(done) < 2:
            raise ExperimentAbortedError(f"condition {condition.label} has fewer than 2 successful trials")
        accuracies = {name: [100.0 * r.accuracies[name] for r in done] for name in columns}
        flags = significance_flags(accuracies, reference=reference)
        phi = 100.0 * np.array([r.phi_hat for r in done])
        rows.append(
            SummaryRow(
                condition=condition.label,
                methods={
                    name: MethodSummary(mean=float(np.mean(v)), std=float(np.std(v, ddof=1)), bold=flags[name])
                    for name, v in accuracies.items()
                },
                phi_mean=float(phi.mean()),
                phi_std=float(phi.std(ddof=1)),
                accuracies=accuracies,
            )
        )
        logger.info("%s: %s", condition.label, {n: round(m.mean, 2) for n, m in rows[-1].methods.items()})
    return rows


def run_experiment(config: ExperimentConfig) -> list[SummaryRow]:
    return aggregate(config, run_trials(config))


def phi_sensitivity(config: ExperimentConfig, c_values: Sequence[float] = PHI_FACTORS) -> list[SummaryRow]:
    """Adjusted PbN with φ̂ multiplied by each c, flagged against c = 1."""
    if config.experiment not in PHI_SENSITIVITY_OF:
        raise InvalidParameterError(f"no phi sensitivity protocol for {config.experiment.value}")
    update = {"experiment": PHI_SENSITIVITY_OF[config.experiment], "phi_factors": tuple(c_values)}
    return run_experiment(ExperimentConfig.model_validate({**config.model_dump(), **update}))


def column_label(name: str) -> str:
    try:
        return METHOD_LABELS[Method(name)]
    except ValueError:
        return name


def emit_table(rows: Sequence[SummaryRow], fmt: Union[OutputFormat, str] = OutputFormat.CSV) -> str:
    if not rows:
        raise InvalidParameterError("no rows to emit")
    columns = list(rows[0].methods)
    if OutputFormat(fmt) is OutputFormat.CSV:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        header = ["condition"]
        for name in columns:
            header += [f"{name}_mean", f"{name}_std", f"{name}_bold"]
        writer.writerow(header + ["phi_mean", "phi_std"])
        for row in rows:
            line = [row.condition]
            for name in columns:
                m = row.methods[name]
                line += [f"{m.mean:.2f}", f"{m.std:.2f}", int(m.bold)]
            writer.writerow(line + [f"{row.phi_mean:.2f}", f"{row.phi_std:.2f}"])
        return out.getvalue()

    def cell(m: MethodSummary) -> str:
        text = f"{m.mean:.2f} ± {m.std:.2f}"
        return f"**{text}**" if m.bold else text

    table = [["condition"] + [column_label(n) for n in columns] + ["phi_hat"]]
    for row in rows:
        table.append([row.condition] + [cell(row.methods[n]) for n in columns] + [f"{row.phi_mean:.2f} ± {row.phi_std:.2f}"])
    widths = [max(len(r[j]) for r in table) for j in range(len(table[0]))]
    lines = ["| " + " | ".join(v.ljust(w) for v, w in zip(r, widths)) + " |" for r in table]
    lines.insert(1, "|" + "|".join("-" * (w + 2) for w in widths) + "|")
    return "\n".join(lines) + "\n"


def export_boundaries(config: ExperimentConfig, condition: int = 0, trial: int = 0) -> str:
    """Boundary coefficients (a1, a2, β) per method and the 2-d samples of one trial, as CSV."""
    if config.experiment is ExperimentId.WIRELESS:
        raise InvalidParameterError("decision boundaries are exported for the 2-d synthetic situations only")
    fit = fit_trial(config, condition, trial)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["kind", "group", "c1", "c2", "c3"])
    for name, clf in fit.classifiers.items():
        writer.writerow(["boundary", name, *(f"{v:.10g}" for v in clf.theta)])
    groups = {
        "P": fit.splits.train_P.X,
        "bN": fit.splits.train_bN.X,
        "N_unobserved": fit.splits.test.negatives().X,
    }
    for group, X in groups.items():
        for x in X:
            writer.writerow(["sample", group, f"{x[0]:.10g}", f"{x[1]:.10g}", ""])
    return out.getvalue()
