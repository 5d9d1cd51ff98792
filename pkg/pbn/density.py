"""Densities (isotropic Gaussian mixtures and Gaussian-kernel KDE) and the
skewed observation posterior σ̃ built from them.

All models work in the log domain so that far-away points underflow to
log-density -inf instead of producing 0/0 ratios.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .core import ProblemParams, as_feature_matrix, as_feature_vector
from .exceptions import DimensionMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)

DEFAULT_CLIP_FLOOR = 0.01
DEFAULT_BANDWIDTH = 0.1


class DensityModel(Protocol):
    dim: int

    def log_pdf(self, X: np.ndarray) -> np.ndarray: ...


def _points(model: DensityModel, x: ArrayLike) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    X = as_feature_matrix(arr.reshape(1, -1) if single else arr)
    if X.shape[1] != model.dim:
        raise DimensionMismatchError(f"point dimension {X.shape[1]} != density dimension {model.dim}")
    return X, single


def _evaluate(model: DensityModel, x: ArrayLike) -> Union[float, np.ndarray]:
    X, single = _points(model, x)
    values = np.exp(model.log_pdf(X))
    return float(values[0]) if single else values


@dataclass(frozen=True)
class GaussianComponent:
    mean: np.ndarray
    variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mean", as_feature_vector(self.mean))
        if not self.variance > 0:
            raise InvalidParameterError(f"variance must be positive, got {self.variance}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def log_pdf(self, X: np.ndarray) -> np.ndarray:
        sq = np.sum((X - self.mean) ** 2, axis=1)
        return -0.5 * self.dim * math.log(2 * math.pi * self.variance) - sq / (2 * self.variance)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.mean + math.sqrt(self.variance) * rng.standard_normal((n, self.dim))


@dataclass(frozen=True)
class MixtureDensity:
    components: tuple[GaussianComponent, ...]
    weights: np.ndarray

    def __post_init__(self):
        components = tuple(self.components)
        weights = np.asarray(self.weights, dtype=float)
        if not components or len(components) != len(weights):
            raise InvalidParameterError("a mixture needs one weight per component")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidParameterError("mixture weights must be nonnegative and sum to 1")
        if len({c.dim for c in components}) != 1:
            raise DimensionMismatchError("mixture components must share a dimension")
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, means: Sequence[ArrayLike], variance: float = 1.0) -> "MixtureDensity":
        comps = tuple(GaussianComponent(np.asarray(m, dtype=float), variance) for m in means)
        return cls(comps, np.full(len(comps), 1.0 / len(comps)))

    @classmethod
    def single(cls, component: GaussianComponent) -> "MixtureDensity":
        return cls((component,), np.ones(1))

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def log_pdf(self, X: np.ndarray) -> np.ndarray:
        terms = np.column_stack([c.log_pdf(X) for c in self.components])
        return logsumexp(terms, b=self.weights, axis=1)


@dataclass(frozen=True)
class KdeDensity:
    support: np.ndarray
    bandwidth: float = DEFAULT_BANDWIDTH

    def __post_init__(self):
        support = as_feature_matrix(self.support)
        if len(support) == 0:
            raise InvalidParameterError("KDE support must be non-empty")
        if not self.bandwidth > 0:
            raise InvalidParameterError(f"bandwidth must be positive, got {self.bandwidth}")
        object.__setattr__(self, "support", support)

    @property
    def dim(self) -> int:
        return self.support.shape[1]

    def log_pdf(self, X: np.ndarray) -> np.ndarray:
        h2 = self.bandwidth ** 2
        sq = cdist(X, self.support, "sqeuclidean")
        norm = math.log(len(self.support)) + 0.5 * self.dim * math.log(2 * math.pi * h2)
        return logsumexp(-sq / (2 * h2), axis=1) - norm


def gaussian_pdf(x: ArrayLike, component: GaussianComponent) -> Union[float, np.ndarray]:
    return _evaluate(component, x)


def mixture_pdf(x: ArrayLike, mixture: MixtureDensity) -> Union[float, np.ndarray]:
    return _evaluate(mixture, x)


def kde_pdf(x: ArrayLike, kde: KdeDensity) -> Union[float, np.ndarray]:
    return _evaluate(kde, x)


@dataclass(frozen=True)
class SigmaField:
    """Densities needed for σ̃ = p(s=+1) p(x|s=+1) / p_bias(x).

    Without ``p_observed`` the analytic form
    (π p_P + ρ p_bN) / (π p_P + (1-π) p_bN) is used; with it (the KDE path)
    the ratio (π+ρ) p̂(x|s=+1) / p̂_bias(x) is evaluated directly and capped at 1.
    """

    p_positive: DensityModel
    p_biased_negative: DensityModel
    params: ProblemParams
    p_observed: Optional[DensityModel] = None
    clip_floor: float = DEFAULT_CLIP_FLOOR

    def __post_init__(self):
        if not 0.0 < self.clip_floor < 1.0:
            raise InvalidParameterError(f"clip floor must lie in (0, 1), got {self.clip_floor}")

    @property
    def dim(self) -> int:
        return self.p_positive.dim

    def evaluate(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """σ̃ at every row of X and the mask of degenerate rows (p_bias = 0)."""
        pi, rho = self.params.pi, self.params.rho
        log_p = math.log(pi) + self.p_positive.log_pdf(X)
        log_bn = self.p_biased_negative.log_pdf(X)
        log_bias = np.logaddexp(log_p, math.log(1.0 - pi) + log_bn)
        if self.p_observed is None:
            log_num = np.logaddexp(log_p, math.log(rho) + log_bn)
        else:
            log_num = math.log(pi + rho) + self.p_observed.log_pdf(X)
        degenerate = np.isneginf(log_bias)
        with np.errstate(invalid="ignore"):
            sigma = np.exp(np.where(degenerate, 0.0, log_num - log_bias))
        sigma = np.minimum(sigma, 1.0)
        sigma[degenerate] = self.clip_floor
        if degenerate.any():
            logger.warning("p_bias underflowed at %d point(s); sigma set to %.3g", degenerate.sum(), self.clip_floor)
        return sigma, degenerate


def sigma_tilde(field: SigmaField, x: ArrayLike) -> Union[float, np.ndarray]:
    X, single = _points(field, x)
    sigma, _ = field.evaluate(X)
    return float(sigma[0]) if single else sigma


def weights_from_sigma(sigma: ArrayLike, k: float, clip_floor: Optional[float] = DEFAULT_CLIP_FLOOR) -> np.ndarray:
    """(1 - t) / t with t = clamp(σ^k, floor, 1); ``clip_floor=None`` disables the clamp."""
    if not k > 0:
        raise InvalidParameterError(f"k must be positive, got {k}")
    t = np.asarray(sigma, dtype=float) ** k
    if clip_floor is not None:
        t = np.clip(t, clip_floor, 1.0)
    elif np.any(t <= 0):
        raise InvalidParameterError("unclipped sigma must be positive")
    return (1.0 - t) / t


def sigma_weight(field: SigmaField, x: ArrayLike, k: float) -> Union[float, np.ndarray]:
    sigma = sigma_tilde(field, x)
    weights = weights_from_sigma(sigma, k, field.clip_floor)
    return float(weights) if np.ndim(weights) == 0 else weights


def kde_sigma_field(
    positives: ArrayLike,
    biased_negatives: ArrayLike,
    params: ProblemParams,
    bandwidth: float = DEFAULT_BANDWIDTH,
    clip_floor: float = DEFAULT_CLIP_FLOOR,
) -> SigmaField:
    """KDE models for p(x|y=+1), p(x|y=-1,s=+1) and p(x|s=+1) fit on P, bN and their union."""
    X_P = as_feature_matrix(positives)
    X_bN = as_feature_matrix(biased_negatives, X_P.shape[1])
    return SigmaField(
        p_positive=KdeDensity(X_P, bandwidth),
        p_biased_negative=KdeDensity(X_bN, bandwidth),
        params=params,
        p_observed=KdeDensity(np.vstack([X_P, X_bN]), bandwidth),
        clip_floor=clip_floor,
    )
