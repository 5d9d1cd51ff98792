"""Exact risks on finite-support joints over (x, y, s).

Everything is an exhaustive sum over atoms (``math.fsum``); no sampling and
no σ clipping. ``verify_decomposition`` checks that the PbN risk equals the
PN risk, ``verify_pconf`` does the same for the Pconf risk.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .core import NEGATIVE, OBSERVED, POSITIVE, UNOBSERVED, LinearClassifier, as_feature_vector
from .exceptions import OracleError
from .losses import logistic_loss
from .risk import Weighting


@dataclass(frozen=True)
class Atom:
    x: tuple[float, ...]
    y: int
    s: int
    p: float


def _key(x: ArrayLike) -> tuple[float, ...]:
    return tuple(float(v) for v in as_feature_vector(x))


@dataclass(frozen=True)
class DiscreteJoint:
    atoms: tuple[Atom, ...]

    def __post_init__(self):
        atoms = tuple(Atom(_key(a.x), int(a.y), int(a.s), float(a.p)) for a in self.atoms)
        if not atoms:
            raise OracleError("a joint needs at least one atom")
        if any(a.p < 0 for a in atoms):
            raise OracleError("atom probabilities must be nonnegative")
        if abs(math.fsum(a.p for a in atoms) - 1.0) > 1e-12:
            raise OracleError("atom probabilities must sum to 1")
        for a in atoms:
            if a.y not in (POSITIVE, NEGATIVE) or a.s not in (OBSERVED, UNOBSERVED):
                raise OracleError(f"atom {a} has an invalid label or flag")
            if a.y == POSITIVE and a.s == UNOBSERVED and a.p > 0:
                raise OracleError(f"atom {a} puts mass on an unobserved positive")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_rows(cls, rows: Sequence[tuple[ArrayLike, int, int, float]]) -> "DiscreteJoint":
        return cls(tuple(Atom(_key(x), y, s, p) for x, y, s, p in rows))

    @property
    def pi(self) -> float:
        return math.fsum(a.p for a in self.atoms if a.y == POSITIVE)

    @property
    def rho(self) -> float:
        return math.fsum(a.p for a in self.atoms if a.y == NEGATIVE and a.s == OBSERVED)

    def support(self) -> list[tuple[float, ...]]:
        return list(dict.fromkeys(a.x for a in self.atoms))

    def marginals(self) -> dict[tuple[float, ...], dict[str, float]]:
        """Per point x: total mass, observed mass and positive mass."""
        acc: dict[tuple[float, ...], dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
        for a in self.atoms:
            acc[a.x]["p"].append(a.p)
            if a.s == OBSERVED:
                acc[a.x]["observed"].append(a.p)
            if a.y == POSITIVE:
                acc[a.x]["positive"].append(a.p)
        return {x: {k: math.fsum(v[k]) for k in ("p", "observed", "positive")} for x, v in acc.items()}


def _margin(clf: LinearClassifier, x: tuple[float, ...]) -> float:
    return float(np.dot(clf.a, x) + clf.beta)


def _weighted(weight: float, m: float, weighting: Weighting) -> float:
    if Weighting(weighting) is Weighting.LOSS:
        return weight * logistic_loss(-m)
    return logistic_loss(-weight * m)


def exact_pn_risk(joint: DiscreteJoint, clf: LinearClassifier) -> float:
    """π E_P[ℓ(g)] + (1-π) E_N[ℓ(-g)] = Σ_atoms p · ℓ(y g(x))."""
    return math.fsum(a.p * logistic_loss(a.y * _margin(clf, a.x)) for a in joint.atoms)


def exact_sigma(joint: DiscreteJoint, x: ArrayLike) -> float:
    key = _key(x)
    marginals = joint.marginals()
    if key not in marginals or marginals[key]["p"] <= 0:
        raise OracleError(f"{key} is not in the support of the joint")
    return marginals[key]["observed"] / marginals[key]["p"]


def exact_pbn_risk(joint: DiscreteJoint, clf: LinearClassifier, weighting: Weighting = Weighting.LOSS) -> float:
    """π E_P[ℓ(g)] + ρ E_bN[ℓ(-g)] + (π+ρ) E_{s=+1}[(1-σ)/σ-weighted ℓ(-g)]."""
    marginals = joint.marginals()
    for x, m in marginals.items():
        if m["p"] > 0 and m["observed"] <= 0:
            raise OracleError(f"sigma vanishes at {x}; the PbN risk is undefined there")
    terms = []
    for a in joint.atoms:
        g = _margin(clf, a.x)
        if a.y == POSITIVE:
            terms.append(a.p * logistic_loss(g))
        elif a.s == OBSERVED:
            terms.append(a.p * logistic_loss(-g))
        if a.s == OBSERVED and a.p > 0:
            sigma = marginals[a.x]["observed"] / marginals[a.x]["p"]
            terms.append(a.p * _weighted((1.0 - sigma) / sigma, g, weighting))
    return math.fsum(terms)


def verify_decomposition(joint: DiscreteJoint, clf: LinearClassifier) -> float:
    return abs(exact_pn_risk(joint, clf) - exact_pbn_risk(joint, clf))


def exact_pconf_risk(joint: DiscreteJoint, clf: LinearClassifier, weighting: Weighting = Weighting.LOSS) -> float:
    """π (E_P[ℓ(g)] + E_P[(1-r)/r-weighted ℓ(-g)]) with r = p(y=+1|x)."""
    marginals = joint.marginals()
    terms = []
    for a in joint.atoms:
        if a.y != POSITIVE or a.p <= 0:
            continue
        r = marginals[a.x]["positive"] / marginals[a.x]["p"]
        g = _margin(clf, a.x)
        terms.append(a.p * logistic_loss(g))
        terms.append(a.p * _weighted((1.0 - r) / r, g, weighting))
    return math.fsum(terms)


def verify_pconf(joint: DiscreteJoint, clf: LinearClassifier) -> float:
    marginals = joint.marginals()
    for x, m in marginals.items():
        if m["p"] > 0 and m["positive"] <= 0:
            raise OracleError(f"confidence vanishes at {x}; the Pconf risk cannot see it")
    return abs(exact_pn_risk(joint, clf) - exact_pconf_risk(joint, clf))
