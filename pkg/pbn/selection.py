"""Choice of the skew-correction exponent k and the false-negative-rate prior φ."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from .core import NEGATIVE, POSITIVE, LinearClassifier, SampleSet
from .exceptions import InvalidParameterError, PbnError, SelectionError
from .risk import pn_risk
from .training import SgdConfig, evaluate_fnr, train_risk

logger = logging.getLogger(__name__)


class KGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    candidates: tuple[float, ...]

    @field_validator("candidates")
    @classmethod
    def check_candidates(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value:
            raise ValueError("k grid must not be empty")
        if any(k <= 0 for k in value):
            raise ValueError("k candidates must be positive")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("k candidates must be strictly ascending")
        return value


SYNTHETIC_K_GRID = KGrid(candidates=(0.3, 0.5, 0.7, 1.0, 1.5, 2.0, 4.0))
WIRELESS_K_GRID = KGrid(candidates=(0.5, 0.7, 0.9, 1.0, 1.2, 1.5, 2.0))


class PhiSource(str, Enum):
    GIVEN = "given"
    ESTIMATED = "estimated"
    PERTURBED = "perturbed"


class PhiPrior(BaseModel):
    model_config = ConfigDict(frozen=True)

    phi: float
    source: PhiSource = PhiSource.GIVEN
    factor: Optional[float] = None

    @field_validator("phi")
    @classmethod
    def check_phi(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"false negative rate must lie in [0, 1], got {value}")
        return value


@dataclass(frozen=True)
class KSelection:
    k_star: float
    classifier: LinearClassifier
    errors: dict[float, float] = field(default_factory=dict)
    fnr: dict[float, float] = field(default_factory=dict)


def select_k(
    grid: KGrid,
    train_fn: Callable[[float], LinearClassifier],
    valid_P: SampleSet,
    phi: PhiPrior,
) -> KSelection:
    """k* = argmin_k (FNR(g_k) on valid_P - φ)²; ties go to the smaller k."""
    if len(valid_P) == 0:
        raise SelectionError("k selection needs validation positives")
    classifiers: dict[float, LinearClassifier] = {}
    errors: dict[float, float] = {}
    fnr: dict[float, float] = {}
    for k in grid.candidates:
        try:
            clf = train_fn(k)
        except PbnError as exc:
            logger.warning("skipping k=%g: %s", k, exc)
            continue
        classifiers[k] = clf
        fnr[k] = evaluate_fnr(clf, valid_P)
        errors[k] = (fnr[k] - phi.phi) ** 2

    if not classifiers:
        raise SelectionError("training failed for every k candidate")
    k_star = min(errors, key=lambda k: (errors[k], k))
    logger.debug("k*=%g (fnr=%.4f, phi=%.4f)", k_star, fnr[k_star], phi.phi)
    return KSelection(k_star, classifiers[k_star], errors, fnr)


def estimate_phi(fnr_dataset: SampleSet, config: SgdConfig) -> PhiPrior:
    """In-sample FNR of a PN classifier trained on the FNR-estimation split."""
    labels = set(np.unique(fnr_dataset.y).tolist())
    if labels != {POSITIVE, NEGATIVE}:
        raise InvalidParameterError("FNR estimation needs both positive and negative samples")
    positives = fnr_dataset.positives()
    negatives = fnr_dataset.negatives()
    pi = len(positives) / len(fnr_dataset)
    clf = train_risk(pn_risk(positives.X, negatives.X, pi), config)
    return PhiPrior(phi=evaluate_fnr(clf, positives), source=PhiSource.ESTIMATED)


def perturb_phi(phi: PhiPrior, c: float) -> PhiPrior:
    if not c > 0:
        raise InvalidParameterError(f"perturbation factor must be positive, got {c}")
    return PhiPrior(phi=min(c * phi.phi, 1.0), source=PhiSource.PERTURBED, factor=c)
