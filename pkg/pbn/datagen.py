"""Synthetic Situations 1-4: P from N(0, I), N from a four-component isotropic
Gaussian mixture on the diagonal, bN from one component or a reweighting of
all four."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .core import NEGATIVE, OBSERVED, POSITIVE, UNOBSERVED, PbnSplits, ProblemParams, SampleSet, derive_seed
from .density import GaussianComponent, MixtureDensity
from .exceptions import InvalidParameterError

logger = logging.getLogger(__name__)

DIM = 2
N_COMPONENTS = 4


class Overlap(str, Enum):
    LARGE = "large"
    SMALL = "small"


# nearer means give the larger class overlap
_NEGATIVE_OFFSETS = {
    Overlap.LARGE: (1.0, 1.5, 2.0, 2.5),
    Overlap.SMALL: (2.0, 3.0, 4.0, 5.0),
}


class SingleComponentBias(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: Literal["single_component"] = "single_component"
    index: int = Field(ge=1, le=N_COMPONENTS)

    def probabilities(self) -> np.ndarray:
        p = np.zeros(N_COMPONENTS)
        p[self.index - 1] = 1.0
        return p


class ProportionalBias(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: Literal["proportional"] = "proportional"
    probs: tuple[float, float, float, float]

    @field_validator("probs")
    @classmethod
    def check_probs(cls, value):
        if any(p < 0 for p in value) or abs(sum(value) - 1.0) > 1e-9:
            raise ValueError("bias probabilities must be nonnegative and sum to 1")
        return value

    def probabilities(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)


BiasMode = Annotated[Union[SingleComponentBias, ProportionalBias], Field(discriminator="mode")]


class SituationSizes(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_P: int = 500
    n_bN: int = 100
    n_valid: int = 500
    n_test_P: int = 500
    n_test_N: int = 500
    n_fnr_P: int = 500
    n_fnr_N: int = 500


class SituationSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    overlap: Overlap
    bias: BiasMode
    sizes: SituationSizes = SituationSizes()


@dataclass(frozen=True)
class SituationData:
    splits: PbnSplits
    params: ProblemParams
    p_positive: MixtureDensity
    p_biased_negative: MixtureDensity
    p_negative: MixtureDensity


POSITIVE_COMPONENT = GaussianComponent(np.zeros(DIM), 1.0)


def negative_means(overlap: Union[Overlap, str]) -> np.ndarray:
    return np.array([[m, m] for m in _NEGATIVE_OFFSETS[Overlap(overlap)]])


def _check_n(n: int) -> None:
    if n <= 0:
        raise InvalidParameterError(f"sample count must be positive, got {n}")


def sample_positive(n: int, seed: int) -> SampleSet:
    _check_n(n)
    rng = np.random.default_rng(seed)
    X = POSITIVE_COMPONENT.sample(n, rng)
    return SampleSet(X, np.full(n, POSITIVE), np.full(n, OBSERVED))


def _sample_mixture(n: int, means: np.ndarray, probs: np.ndarray, rng: np.random.Generator):
    components = rng.choice(len(means), size=n, p=probs)
    X = means[components] + rng.standard_normal((n, means.shape[1]))
    return X, components + 1


def sample_negative(n: int, means: np.ndarray, seed: int) -> SampleSet:
    """Unobserved negatives (s = -1) from the uniform mixture over ``means``."""
    _check_n(n)
    rng = np.random.default_rng(seed)
    means = np.asarray(means, dtype=float)
    X, source = _sample_mixture(n, means, np.full(len(means), 1.0 / len(means)), rng)
    return SampleSet(X, np.full(n, NEGATIVE), np.full(n, UNOBSERVED), source)


def sample_biased_negative(n: int, means: np.ndarray, bias: BiasMode, seed: int) -> SampleSet:
    """Observed negatives (s = +1) drawn with the bias mode's component probabilities."""
    _check_n(n)
    rng = np.random.default_rng(seed)
    X, source = _sample_mixture(n, np.asarray(means, dtype=float), bias.probabilities(), rng)
    return SampleSet(X, np.full(n, NEGATIVE), np.full(n, OBSERVED), source)


def biased_negative_density(means: np.ndarray, bias: BiasMode) -> MixtureDensity:
    probs = bias.probabilities()
    keep = np.flatnonzero(probs > 0)
    comps = tuple(GaussianComponent(means[j], 1.0) for j in keep)
    return MixtureDensity(comps, probs[keep] / probs[keep].sum())


def default_rho(pi: float, n_bN: int, n_P: int) -> float:
    """ρ matched to the observed P:bN ratio, π · n_bN / n_P."""
    return pi * n_bN / n_P


def make_situation(spec: SituationSpec, seed: int, rho: Optional[float] = None) -> SituationData:
    sizes = spec.sizes
    means = negative_means(spec.overlap)

    def sub(name: str) -> int:
        return derive_seed(seed, name)

    test = SampleSet.concat(
        sample_positive(sizes.n_test_P, sub("test_P")),
        sample_negative(sizes.n_test_N, means, sub("test_N")),
    )
    fnr_est = SampleSet.concat(
        sample_positive(sizes.n_fnr_P, sub("fnr_P")),
        sample_negative(sizes.n_fnr_N, means, sub("fnr_N")),
    )
    splits = PbnSplits(
        train_P=sample_positive(sizes.n_P, sub("train_P")),
        train_bN=sample_biased_negative(sizes.n_bN, means, spec.bias, sub("train_bN")),
        valid_P=sample_positive(sizes.n_valid, sub("valid_P")),
        test=test,
        fnr_est=fnr_est,
    )
    pi = sizes.n_test_P / (sizes.n_test_P + sizes.n_test_N)
    params = ProblemParams(pi=pi, rho=default_rho(pi, sizes.n_bN, sizes.n_P) if rho is None else rho)
    return SituationData(
        splits=splits,
        params=params,
        p_positive=MixtureDensity.single(POSITIVE_COMPONENT),
        p_biased_negative=biased_negative_density(means, spec.bias),
        p_negative=MixtureDensity.uniform(means),
    )


def dump_samples(samples: SampleSet, path: Union[str, Path]) -> None:
    """One tab-separated row per sample: features..., y, s, source."""
    source = samples.source if samples.source is not None else np.zeros(len(samples), dtype=int)
    table = np.column_stack([samples.X, samples.y, samples.s, source])
    fmt = ["%.17g"] * samples.dim + ["%d", "%d", "%d"]
    header = "\t".join([f"x{j + 1}" for j in range(samples.dim)] + ["y", "s", "source"])
    np.savetxt(path, table, fmt=fmt, delimiter="\t", header=header, comments="")


def load_samples(path: Union[str, Path]) -> SampleSet:
    table = np.loadtxt(path, delimiter="\t", skiprows=1, ndmin=2)
    return SampleSet(X=table[:, :-3], y=table[:, -3], s=table[:, -2], source=table[:, -1])


SPLIT_NAMES = ("train_P", "train_bN", "valid_P", "test", "fnr_est")


def dump_splits(splits: PbnSplits, directory: Union[str, Path]) -> list[Path]:
    """Write every split of one trial as ``<split>.tsv`` under ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in SPLIT_NAMES:
        path = directory / f"{name}.tsv"
        dump_samples(getattr(splits, name), path)
        paths.append(path)
    logger.debug("dumped %d splits to %s", len(paths), directory)
    return paths
