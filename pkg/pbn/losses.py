"""Surrogate and 0-1 losses used by the risk estimators.

Every function accepts a scalar or an array and returns the same shape
(a float for scalar input).
"""

from typing import Union

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import expit

from .exceptions import InvalidParameterError

LossValue = float
Real = Union[float, np.ndarray]


def _finite(z: ArrayLike) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise InvalidParameterError("loss argument must be finite")
    return z


def _unwrap(value: np.ndarray) -> Real:
    return float(value) if value.ndim == 0 else value


def logistic_loss(z: ArrayLike) -> Real:
    """log(1 + e^{-z}) in the overflow-free form max(-z, 0) + log(1 + e^{-|z|})."""
    z = _finite(z)
    return _unwrap(np.maximum(-z, 0.0) + np.log1p(np.exp(-np.abs(z))))


def logistic_loss_grad(z: ArrayLike) -> Real:
    """d/dz log(1 + e^{-z}) = -1 / (1 + e^{z})."""
    z = _finite(z)
    return _unwrap(-expit(-z))


def zero_one_loss(z: ArrayLike) -> Real:
    # (1 - sign(z)) / 2 with sign(0) = 0
    z = np.asarray(z, dtype=float)
    return _unwrap((1.0 - np.sign(z)) / 2.0)
