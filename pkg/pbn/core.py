"""Shared domain types: samples, dataset splits, problem parameters and the
linear classifier g(x) = aᵀx + β."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, model_validator

from .exceptions import DimensionMismatchError, EmptyDatasetError, InvalidParameterError

POSITIVE = 1
NEGATIVE = -1
OBSERVED = 1
UNOBSERVED = -1
_UINT64 = (1 << 64) - 1


def as_feature_vector(values: ArrayLike) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatchError(f"feature vector must be 1-d, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError("feature vector has non-finite entries")
    return x


def as_feature_matrix(values: ArrayLike, dim: Optional[int] = None) -> np.ndarray:
    X = np.asarray(values, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1) if X.size else X.reshape(0, dim or 0)
    if X.ndim != 2:
        raise DimensionMismatchError(f"feature matrix must be 2-d, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise InvalidParameterError("feature matrix has non-finite entries")
    return X


def derive_seed(*keys: Union[int, str]) -> int:
    """Deterministic 63-bit seed from a sequence of integer or string keys.

    Negative integers are taken modulo 2**64.
    """
    entropy = [zlib.crc32(k.encode()) if isinstance(k, str) else int(k) & _UINT64 for k in keys]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


@dataclass(frozen=True)
class Sample:
    x: np.ndarray
    y: int
    s: int

    def __post_init__(self):
        object.__setattr__(self, "x", as_feature_vector(self.x))
        if self.y not in (POSITIVE, NEGATIVE):
            raise InvalidParameterError(f"label must be +1 or -1, got {self.y}")
        if self.s not in (OBSERVED, UNOBSERVED):
            raise InvalidParameterError(f"observation flag must be +1 or -1, got {self.s}")


@dataclass(frozen=True)
class SampleSet:
    """Column-oriented list of samples.

    ``source`` is optional integer metadata per sample: the mixture component
    (1-based) for synthetic data, the room number for the wireless data.
    """

    X: np.ndarray
    y: np.ndarray
    s: np.ndarray
    source: Optional[np.ndarray] = None

    def __post_init__(self):
        X = as_feature_matrix(self.X)
        y = np.asarray(self.y, dtype=int).reshape(-1)
        s = np.asarray(self.s, dtype=int).reshape(-1)
        if not (len(X) == len(y) == len(s)):
            raise DimensionMismatchError("X, y and s must have the same length")
        if not np.all(np.isin(y, (POSITIVE, NEGATIVE))):
            raise InvalidParameterError("labels must be +1 or -1")
        if not np.all(np.isin(s, (OBSERVED, UNOBSERVED))):
            raise InvalidParameterError("observation flags must be +1 or -1")
        if np.any((y == POSITIVE) & (s == UNOBSERVED)):
            raise InvalidParameterError("positive samples are always observed")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "s", s)
        if self.source is not None:
            source = np.asarray(self.source, dtype=int).reshape(-1)
            if len(source) != len(y):
                raise DimensionMismatchError("source metadata must match the sample count")
            object.__setattr__(self, "source", source)

    @classmethod
    def from_samples(cls, samples: Sequence[Sample]) -> "SampleSet":
        if not samples:
            raise EmptyDatasetError("cannot build a sample set from no samples")
        return cls(
            X=np.stack([smp.x for smp in samples]),
            y=np.array([smp.y for smp in samples]),
            s=np.array([smp.s for smp in samples]),
        )

    @classmethod
    def concat(cls, *parts: "SampleSet") -> "SampleSet":
        sources = [p.source for p in parts]
        return cls(
            X=np.vstack([p.X for p in parts]),
            y=np.concatenate([p.y for p in parts]),
            s=np.concatenate([p.s for p in parts]),
            source=None if any(src is None for src in sources) else np.concatenate(sources),
        )

    def __len__(self) -> int:
        return len(self.y)

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield Sample(self.X[i], int(self.y[i]), int(self.s[i]))

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def take(self, index: ArrayLike) -> "SampleSet":
        index = np.asarray(index, dtype=int)
        return SampleSet(
            X=self.X[index],
            y=self.y[index],
            s=self.s[index],
            source=None if self.source is None else self.source[index],
        )

    def positives(self) -> "SampleSet":
        return self.take(np.flatnonzero(self.y == POSITIVE))

    def negatives(self) -> "SampleSet":
        return self.take(np.flatnonzero(self.y == NEGATIVE))

    def with_observation(self, s: int) -> "SampleSet":
        return SampleSet(self.X, self.y, np.full(len(self), s), self.source)

    def with_features(self, X: np.ndarray) -> "SampleSet":
        return SampleSet(X, self.y, self.s, self.source)


class ProblemParams(BaseModel):
    """Class prior π = p(y=+1) and observed-negative mass ρ = p(y=-1, s=+1)."""

    model_config = ConfigDict(frozen=True)

    pi: float
    rho: float

    @model_validator(mode="after")
    def check_ranges(self):
        if not 0.0 < self.pi < 1.0:
            raise ValueError(f"class prior must lie in (0, 1), got {self.pi}")
        if not 0.0 < self.rho <= 1.0 - self.pi + 1e-12:
            raise ValueError(f"rho must lie in (0, 1 - pi], got {self.rho}")
        return self

    @property
    def observed_mass(self) -> float:
        return self.pi + self.rho


@dataclass(frozen=True)
class PbnSplits:
    train_P: SampleSet
    train_bN: SampleSet
    valid_P: SampleSet
    test: SampleSet
    fnr_est: SampleSet

    def __post_init__(self):
        if np.any(self.train_P.y != POSITIVE) or np.any(self.valid_P.y != POSITIVE):
            raise InvalidParameterError("training and validation P sets must be positive")
        if np.any(self.train_bN.y != NEGATIVE) or np.any(self.train_bN.s != OBSERVED):
            raise InvalidParameterError("biased negatives must have y=-1 and s=+1")
        for name in ("test", "fnr_est"):
            labels = set(np.unique(getattr(self, name).y).tolist())
            if labels != {POSITIVE, NEGATIVE}:
                raise InvalidParameterError(f"{name} split must contain both labels")

    @property
    def observed(self) -> SampleSet:
        """X_{s=+1}: training P followed by training bN."""
        return SampleSet.concat(self.train_P, self.train_bN)

    def sizes(self) -> tuple[int, int, int, int, int]:
        return (len(self.train_P), len(self.train_bN), len(self.valid_P), len(self.test), len(self.fnr_est))


@dataclass(frozen=True)
class LinearClassifier:
    a: np.ndarray
    beta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a", as_feature_vector(self.a))
        if not np.isfinite(self.beta):
            raise InvalidParameterError("bias must be finite")
        object.__setattr__(self, "beta", float(self.beta))

    @classmethod
    def zeros(cls, dim: int) -> "LinearClassifier":
        return cls(np.zeros(dim), 0.0)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def theta(self) -> np.ndarray:
        """Parameters stacked as (a, β)."""
        return np.append(self.a, self.beta)

    @classmethod
    def from_theta(cls, theta: ArrayLike) -> "LinearClassifier":
        theta = np.asarray(theta, dtype=float)
        return cls(theta[:-1].copy(), float(theta[-1]))

    def margins(self, X: ArrayLike) -> np.ndarray:
        X = as_feature_matrix(X, self.dim)
        return X @ self.a + self.beta

    def flip(self) -> "LinearClassifier":
        return LinearClassifier(-self.a, -self.beta)

    def scaled(self, c: float) -> "LinearClassifier":
        return LinearClassifier(c * self.a, c * self.beta)


def margin(clf: LinearClassifier, x: ArrayLike) -> float:
    x = as_feature_vector(x)
    if x.shape[0] != clf.dim:
        raise DimensionMismatchError(f"feature dimension {x.shape[0]} != classifier dimension {clf.dim}")
    return float(x @ clf.a + clf.beta)


def classify(clf: LinearClassifier, x: ArrayLike) -> int:
    # zero margin resolves to +1
    return POSITIVE if margin(clf, x) >= 0.0 else NEGATIVE


def predict(clf: LinearClassifier, X: ArrayLike) -> np.ndarray:
    return np.where(clf.margins(X) >= 0.0, POSITIVE, NEGATIVE)


def accuracy(clf: LinearClassifier, samples: Union[SampleSet, Sequence[Sample]]) -> float:
    if not isinstance(samples, SampleSet):
        samples = SampleSet.from_samples(list(samples))
    if len(samples) == 0:
        raise EmptyDatasetError("accuracy needs at least one sample")
    return float(np.mean(predict(clf, samples.X) == samples.y))
