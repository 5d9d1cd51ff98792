"""Empirical risk estimators (PN, Pconf, PbN) and their exact gradients.

Every estimator is a weighted sum of per-set means,

    R(g) = Σ_t coef_t · mean_i[ u_ti · ℓ(v_ti · g(x_ti)) ],

held by ``EmpiricalRisk``. ``u`` is a per-sample loss weight and ``v`` a
per-sample margin scale. The weighted third term of the PbN risk and the
second term of the Pconf risk come in two readings (see ``Weighting``).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike

from .core import LinearClassifier, ProblemParams, as_feature_matrix
from .density import DEFAULT_CLIP_FLOOR, SigmaField, weights_from_sigma
from .exceptions import DimensionMismatchError, EmptyDatasetError, InvalidParameterError
from .losses import logistic_loss, logistic_loss_grad


class RiskKind(str, Enum):
    PN = "pn"
    PCONF = "pconf"
    PBN = "pbn"


class Weighting(str, Enum):
    """LOSS: w(x)·ℓ(-g(x)), the form under which the risk identities are exact.
    MARGIN: ℓ(-w(x)·g(x)), the scaled-margin reading of R(w·g)."""

    LOSS = "loss"
    MARGIN = "margin"


@dataclass(frozen=True)
class RiskTerm:
    coef: float
    X: np.ndarray
    loss_weight: np.ndarray
    margin_scale: np.ndarray

    def __post_init__(self):
        X = as_feature_matrix(self.X)
        if len(X) == 0:
            raise EmptyDatasetError("risk terms need at least one sample")
        u = np.broadcast_to(np.asarray(self.loss_weight, dtype=float), (len(X),)).copy()
        v = np.broadcast_to(np.asarray(self.margin_scale, dtype=float), (len(X),)).copy()
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "loss_weight", u)
        object.__setattr__(self, "margin_scale", v)

    def __len__(self) -> int:
        return len(self.X)

    def take(self, index: np.ndarray) -> "RiskTerm":
        return RiskTerm(self.coef, self.X[index], self.loss_weight[index], self.margin_scale[index])

    def canonical(self) -> "RiskTerm":
        # rows sorted lexicographically so results do not depend on input order
        keys = [self.margin_scale, self.loss_weight] + [self.X[:, j] for j in reversed(range(self.X.shape[1]))]
        return self.take(np.lexsort(keys))

    def value(self, clf: LinearClassifier) -> float:
        z = self.margin_scale * clf.margins(self.X)
        return self.coef * float(np.mean(self.loss_weight * logistic_loss(z)))

    def gradient(self, clf: LinearClassifier) -> np.ndarray:
        z = self.margin_scale * clf.margins(self.X)
        dz = self.loss_weight * self.margin_scale * logistic_loss_grad(z)
        grad_a = self.X.T @ dz / len(self)
        return self.coef * np.append(grad_a, np.mean(dz))


@dataclass(frozen=True)
class EmpiricalRisk:
    terms: tuple[RiskTerm, ...]

    def __post_init__(self):
        if not self.terms:
            raise EmptyDatasetError("a risk needs at least one term")
        if len({t.X.shape[1] for t in self.terms}) != 1:
            raise DimensionMismatchError("risk terms must share a feature dimension")
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def dim(self) -> int:
        return self.terms[0].X.shape[1]

    def value(self, clf: LinearClassifier) -> float:
        return float(sum(t.value(clf) for t in self.terms))

    def gradient_theta(self, clf: LinearClassifier) -> np.ndarray:
        return np.sum([t.gradient(clf) for t in self.terms], axis=0)

    def gradient(self, clf: LinearClassifier) -> tuple[np.ndarray, float]:
        theta = self.gradient_theta(clf)
        return theta[:-1], float(theta[-1])

    def canonical(self) -> "EmpiricalRisk":
        return EmpiricalRisk(tuple(t.canonical() for t in self.terms))


def _weighted_term(coef: float, X: np.ndarray, weights: np.ndarray, weighting: Weighting) -> RiskTerm:
    if Weighting(weighting) is Weighting.LOSS:
        return RiskTerm(coef, X, weights, -1.0)
    return RiskTerm(coef, X, 1.0, -weights)


def pn_risk(X_P: ArrayLike, X_N: ArrayLike, pi: float) -> EmpiricalRisk:
    X_P = as_feature_matrix(X_P)
    X_N = as_feature_matrix(X_N, X_P.shape[1])
    return EmpiricalRisk((RiskTerm(pi, X_P, 1.0, 1.0), RiskTerm(1.0 - pi, X_N, 1.0, -1.0)))


def confidence_weights(r: ArrayLike) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(r > 1):
        raise InvalidParameterError("confidences must lie in (0, 1]")
    return (1.0 - r) / r


def pconf_risk(X_P: ArrayLike, r: ArrayLike, pi: float, weighting: Weighting = Weighting.LOSS) -> EmpiricalRisk:
    X_P = as_feature_matrix(X_P)
    r = np.asarray(r, dtype=float).reshape(-1)
    if len(r) != len(X_P):
        raise DimensionMismatchError("one confidence per positive sample is required")
    weights = confidence_weights(r)
    return EmpiricalRisk((RiskTerm(pi, X_P, 1.0, 1.0), _weighted_term(pi, X_P, weights, weighting)))


def pbn_risk(
    X_P: ArrayLike,
    X_bN: ArrayLike,
    weights: ArrayLike,
    params: ProblemParams,
    weighting: Weighting = Weighting.LOSS,
) -> EmpiricalRisk:
    """PbN risk with third-term weights given for X_{s=+1} = X_P followed by X_bN."""
    X_P = as_feature_matrix(X_P)
    X_bN = as_feature_matrix(X_bN, X_P.shape[1])
    X_obs = np.vstack([X_P, X_bN])
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if len(weights) != len(X_obs):
        raise DimensionMismatchError("one weight per observed sample is required")
    return EmpiricalRisk(
        (
            RiskTerm(params.pi, X_P, 1.0, 1.0),
            RiskTerm(params.rho, X_bN, 1.0, -1.0),
            _weighted_term(params.observed_mass, X_obs, weights, weighting),
        )
    )


def observed_weights(
    X_P: ArrayLike,
    X_bN: ArrayLike,
    sigma: Union[SigmaField, ArrayLike],
    k: float,
    clip_floor: Optional[float] = DEFAULT_CLIP_FLOOR,
) -> np.ndarray:
    """Weights (1-σ̃^k)/σ̃^k on X_P ∪ X_bN from a field or precomputed σ̃ values."""
    if isinstance(sigma, SigmaField):
        X_obs = np.vstack([as_feature_matrix(X_P), as_feature_matrix(X_bN)])
        values, _ = sigma.evaluate(X_obs)
        return weights_from_sigma(values, k, sigma.clip_floor)
    return weights_from_sigma(sigma, k, clip_floor)


def empirical_pn_risk(clf: LinearClassifier, X_P: ArrayLike, X_N: ArrayLike, pi: float) -> float:
    return pn_risk(X_P, X_N, pi).value(clf)


def empirical_pconf_risk(
    clf: LinearClassifier, X_P: ArrayLike, r_list: ArrayLike, pi: float, weighting: Weighting = Weighting.LOSS
) -> float:
    return pconf_risk(X_P, r_list, pi, weighting).value(clf)


def empirical_pbn_risk(
    clf: LinearClassifier,
    X_P: ArrayLike,
    X_bN: ArrayLike,
    sigma: Union[SigmaField, ArrayLike],
    params: ProblemParams,
    k: float = 1.0,
    weighting: Weighting = Weighting.LOSS,
    clip_floor: Optional[float] = DEFAULT_CLIP_FLOOR,
) -> float:
    """k = 1 is the naive PbN risk, any other k the adjusted one."""
    weights = observed_weights(X_P, X_bN, sigma, k, clip_floor)
    return pbn_risk(X_P, X_bN, weights, params, weighting).value(clf)


@dataclass(frozen=True)
class RiskData:
    """``negatives`` holds X_N for the PN risk and X_bN for the PbN risk; Pconf uses none."""

    positives: np.ndarray
    negatives: Optional[np.ndarray] = None


@dataclass(frozen=True)
class RiskSpec:
    kind: RiskKind
    params: ProblemParams
    k: float = 1.0
    confidences: Optional[np.ndarray] = None
    sigma: Union[SigmaField, np.ndarray, None] = None
    clip_floor: Optional[float] = DEFAULT_CLIP_FLOOR
    weighting: Weighting = Weighting.LOSS

    def __post_init__(self):
        object.__setattr__(self, "kind", RiskKind(self.kind))
        object.__setattr__(self, "weighting", Weighting(self.weighting))
        if not self.k > 0:
            raise InvalidParameterError(f"k must be positive, got {self.k}")
        if self.kind is RiskKind.PCONF and self.confidences is None:
            raise InvalidParameterError("the Pconf risk needs per-sample confidences")
        if self.kind is RiskKind.PBN and self.sigma is None:
            raise InvalidParameterError("the PbN risk needs a sigma field or sigma values")

    def with_k(self, k: float) -> "RiskSpec":
        return replace(self, k=k)


def build_risk(spec: RiskSpec, data: RiskData) -> EmpiricalRisk:
    if spec.kind is RiskKind.PCONF:
        return pconf_risk(data.positives, spec.confidences, spec.params.pi, spec.weighting)
    if data.negatives is None:
        raise EmptyDatasetError(f"the {spec.kind.value} risk needs negative samples")
    if spec.kind is RiskKind.PN:
        return pn_risk(data.positives, data.negatives, spec.params.pi)
    weights = observed_weights(data.positives, data.negatives, spec.sigma, spec.k, spec.clip_floor)
    return pbn_risk(data.positives, data.negatives, weights, spec.params, spec.weighting)


def risk_value(spec: RiskSpec, clf: LinearClassifier, data: RiskData) -> float:
    return build_risk(spec, data).value(clf)


def risk_gradient(spec: RiskSpec, clf: LinearClassifier, data: RiskData) -> tuple[np.ndarray, float]:
    return build_risk(spec, data).gradient(clf)
