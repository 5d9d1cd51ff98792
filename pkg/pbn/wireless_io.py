"""UCI Wireless Indoor Localization data: parsing, binarization (room 2 is
positive), standardization and PbN split construction."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from .core import NEGATIVE, OBSERVED, POSITIVE, UNOBSERVED, PbnSplits, ProblemParams, SampleSet
from .datagen import default_rho
from .exceptions import DataFileError, InsufficientSamplesError, WirelessParseError

logger = logging.getLogger(__name__)

N_SIGNALS = 7
ROOMS = (1, 2, 3, 4)
POSITIVE_ROOM = 2


@dataclass(frozen=True)
class WirelessRecord:
    signals: tuple[int, ...]
    room: int


class BenchmarkSizes(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_P: int = 200
    n_bN: int = 100
    n_valid: int = 100
    n_test_P: int = 100
    n_test_N: int = 300
    n_fnr_P: int = 100
    n_fnr_N: int = 300


class BenchmarkSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    bias_mode: Literal["room1_only", "room3_only", "room4_only", "random"]
    sizes: BenchmarkSizes = BenchmarkSizes()

    def bias_rooms(self) -> tuple[int, ...]:
        if self.bias_mode == "random":
            return tuple(r for r in ROOMS if r != POSITIVE_ROOM)
        return (int(self.bias_mode[4]),)


def parse_wireless(path: Union[str, Path]) -> list[WirelessRecord]:
    """Read whitespace-delimited rows of 7 integer signal strengths and a room number."""
    records = []
    try:
        handle = open(path)
    except OSError as exc:
        raise DataFileError(f"cannot read wireless data {path}: {exc.strerror or exc}") from exc
    with handle:
        for line_number, line in enumerate(handle, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != N_SIGNALS + 1:
                raise WirelessParseError(line_number, f"expected {N_SIGNALS + 1} fields, got {len(fields)}")
            try:
                values = [int(f) for f in fields]
            except ValueError:
                raise WirelessParseError(line_number, f"non-numeric field in {line.strip()!r}") from None
            room = values[-1]
            if room not in ROOMS:
                raise WirelessParseError(line_number, f"room {room} is not one of {ROOMS}")
            records.append(WirelessRecord(tuple(values[:-1]), room))
    if not records:
        raise WirelessParseError(0, f"{path} contains no records")
    logger.info("parsed %d wireless records from %s", len(records), path)
    return records


def binarize(records: Sequence[WirelessRecord]) -> SampleSet:
    """y = +1 for room 2; negatives start unobserved; the room is kept as ``source``."""
    rooms = np.array([r.room for r in records])
    y = np.where(rooms == POSITIVE_ROOM, POSITIVE, NEGATIVE)
    s = np.where(y == POSITIVE, OBSERVED, UNOBSERVED)
    X = np.array([r.signals for r in records], dtype=float)
    return SampleSet(X, y, s, rooms)


@dataclass(frozen=True)
class FeatureScaler:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "FeatureScaler":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        constant = std == 0
        if constant.any():
            logger.warning("features %s have zero variance; centering only", np.flatnonzero(constant).tolist())
        return cls(mean, np.where(constant, 1.0, std))

    @classmethod
    def identity(cls, dim: int) -> "FeatureScaler":
        return cls(np.zeros(dim), np.ones(dim))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale


def standardize(train_stats: FeatureScaler, samples: SampleSet) -> SampleSet:
    return samples.with_features(train_stats.transform(samples.X))


def make_benchmark_split(
    samples: SampleSet,
    spec: BenchmarkSpec,
    seed: int,
    rho: Optional[float] = None,
    scale_features: bool = True,
) -> tuple[PbnSplits, ProblemParams]:
    """Random disjoint splits; bN comes from the bias mode's room(s), other negatives from any room."""
    sizes = spec.sizes
    rng = np.random.default_rng(seed)
    pos_idx = rng.permutation(np.flatnonzero(samples.y == POSITIVE))
    neg_idx = np.flatnonzero(samples.y == NEGATIVE)

    n_pos = sizes.n_P + sizes.n_valid + sizes.n_test_P + sizes.n_fnr_P
    if len(pos_idx) < n_pos:
        raise InsufficientSamplesError(f"need {n_pos} positives, have {len(pos_idx)}")
    bias_pool = neg_idx[np.isin(samples.source[neg_idx], spec.bias_rooms())]
    if len(bias_pool) < sizes.n_bN:
        raise InsufficientSamplesError(f"need {sizes.n_bN} negatives from rooms {spec.bias_rooms()}, have {len(bias_pool)}")
    bn_idx = rng.choice(bias_pool, size=sizes.n_bN, replace=False)
    rest = rng.permutation(np.setdiff1d(neg_idx, bn_idx))
    if len(rest) < sizes.n_test_N + sizes.n_fnr_N:
        raise InsufficientSamplesError("not enough negatives left for the test and FNR splits")

    cuts = np.cumsum([sizes.n_P, sizes.n_valid, sizes.n_test_P, sizes.n_fnr_P])
    train_p, valid_p, test_p, fnr_p = np.split(pos_idx[: cuts[-1]], cuts[:-1])
    test_n, fnr_n = rest[: sizes.n_test_N], rest[sizes.n_test_N : sizes.n_test_N + sizes.n_fnr_N]

    train_P = samples.take(train_p)
    train_bN = samples.take(bn_idx).with_observation(OBSERVED)
    scaler = FeatureScaler.fit(np.vstack([train_P.X, train_bN.X])) if scale_features else FeatureScaler.identity(samples.dim)

    splits = PbnSplits(
        train_P=standardize(scaler, train_P),
        train_bN=standardize(scaler, train_bN),
        valid_P=standardize(scaler, samples.take(valid_p)),
        test=standardize(scaler, samples.take(np.concatenate([test_p, test_n]))),
        fnr_est=standardize(scaler, samples.take(np.concatenate([fnr_p, fnr_n]))),
    )
    pi = sizes.n_test_P / (sizes.n_test_P + sizes.n_test_N)
    params = ProblemParams(pi=pi, rho=default_rho(pi, sizes.n_bN, sizes.n_P) if rho is None else rho)
    return splits, params
