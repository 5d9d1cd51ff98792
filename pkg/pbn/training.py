"""Mini-batch stochastic gradient descent on an empirical risk."""

from __future__ import annotations

import logging
import math
from typing import Literal, Union

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, NonNegativeInt, PositiveFloat, PositiveInt

from .config import settings
from .core import POSITIVE, LinearClassifier, SampleSet, as_feature_matrix
from .exceptions import EmptyDatasetError, InvalidParameterError, TrainingDivergedError
from .losses import zero_one_loss
from .risk import EmpiricalRisk, RiskData, RiskSpec, build_risk

logger = logging.getLogger(__name__)


class SgdConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    learning_rate: NonNegativeFloat = Field(default_factory=lambda: settings.LEARNING_RATE)
    epochs: PositiveInt = Field(default_factory=lambda: settings.EPOCHS)
    batch_size: PositiveInt = Field(default_factory=lambda: settings.BATCH_SIZE)
    seed: NonNegativeInt = 0
    init: Literal["zeros", "gaussian"] = "zeros"
    init_scale: PositiveFloat = 0.01


def initial_classifier(dim: int, config: SgdConfig, rng: np.random.Generator) -> LinearClassifier:
    if config.init == "zeros":
        return LinearClassifier.zeros(dim)
    return LinearClassifier.from_theta(config.init_scale * rng.standard_normal(dim + 1))


def _batch_indices(size: int, n_batches: int, rng: np.random.Generator) -> list[np.ndarray]:
    # every batch gets at least one row of every term, so each batch stays stratified
    reps = math.ceil(n_batches / size)
    order = np.concatenate([rng.permutation(size) for _ in range(reps)])
    return np.array_split(order[: max(size, n_batches)], n_batches)


def train_risk(risk: EmpiricalRisk, config: SgdConfig) -> LinearClassifier:
    """Minimize ``risk`` over (a, β) with class-stratified mini-batches.

    Each term is a per-class mean, so every mini-batch draws a slice of every
    term and averages within that slice. Rows are sorted before shuffling, so
    the result depends on the seed and not on the input order.
    """
    risk = risk.canonical()
    rng = np.random.default_rng(config.seed)
    clf = initial_classifier(risk.dim, config, rng)
    theta = clf.theta
    n_batches = max(1, math.ceil(max(len(t) for t in risk.terms) / config.batch_size))

    for epoch in range(config.epochs):
        slices = [_batch_indices(len(t), n_batches, rng) for t in risk.terms]
        for b in range(n_batches):
            batch = EmpiricalRisk(tuple(t.take(s[b]) for t, s in zip(risk.terms, slices)))
            grad = batch.gradient_theta(LinearClassifier.from_theta(theta))
            theta = theta - config.learning_rate * grad
            if not np.all(np.isfinite(theta)):
                raise TrainingDivergedError(f"parameters became non-finite in epoch {epoch}")
        value = risk.value(LinearClassifier.from_theta(theta))
        if not math.isfinite(value):
            raise TrainingDivergedError(f"risk became non-finite in epoch {epoch}")

    clf = LinearClassifier.from_theta(theta)
    logger.debug("trained %d epochs x %d batches, final risk %.6f", config.epochs, n_batches, risk.value(clf))
    return clf


def train(spec: RiskSpec, data: RiskData, config: SgdConfig) -> LinearClassifier:
    return train_risk(build_risk(spec, data), config)


def evaluate_fnr(clf: LinearClassifier, positives: Union[SampleSet, ArrayLike]) -> float:
    """Mean 0-1 loss of the margins over a positive set."""
    if isinstance(positives, SampleSet):
        if np.any(positives.y != POSITIVE):
            raise InvalidParameterError("false negative rate needs positive samples only")
        X = positives.X
    else:
        X = as_feature_matrix(positives, clf.dim)
    if len(X) == 0:
        raise EmptyDatasetError("false negative rate needs at least one positive")
    return float(np.mean(zero_one_loss(clf.margins(X))))
