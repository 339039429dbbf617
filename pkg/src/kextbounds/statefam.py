"""k-extendibility thresholds and unextendible divergences for isotropic and Werner states."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .numerics import binary_divergence


class Family(str, Enum):
    ISOTROPIC = "isotropic"
    WERNER = "werner"


@dataclass(frozen=True)
class StateFamilyPoint:
    """An isotropic state (``param`` = weight t on the maximally entangled
    state) or a Werner state (``param`` = antisymmetric weight p)."""

    family: Family
    d: int
    param: float

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        _check_dim(self.d)
        if math.isnan(self.param) or not 0.0 <= self.param <= 1.0:
            raise ValueError(f"param must lie in [0, 1], got {self.param!r}")


def _check_dim(d):
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")


def _check_k(k):
    if int(k) != k or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k!r}")


def extendibility_threshold(family, d: int, k: int) -> float:
    """Largest parameter value for which the state is k-extendible.

    Isotropic: (1/d)(1 + (d-1)/k). Werner: (1/2)(1 + (d-1)/k), clamped to 1.
    """
    family = Family(family)
    _check_dim(d)
    _check_k(k)
    if family is Family.ISOTROPIC:
        return (1.0 + (d - 1) / k) / d
    return min(1.0, 0.5 * ((d - 1) / k + 1.0))


def is_k_extendible(point: StateFamilyPoint, k: int) -> bool:
    return point.param <= extendibility_threshold(point.family, point.d, k)


def unextendible_divergence(point: StateFamilyPoint, kind: str, k: int,
                            alpha: float | None = None) -> float:
    """k-unextendible relative entropy (``kind="kl"``) or Renyi divergence.

    Zero inside the extendible region; otherwise the binary divergence from
    the parameter to the threshold, which is the closest extendible member.
    """
    if str(kind).lower() == "max":
        raise ValueError("use unextendible_max_divergence_isotropic for D_max")
    threshold = extendibility_threshold(point.family, point.d, k)
    if point.param <= threshold:
        return 0.0
    return binary_divergence(kind, point.param, threshold, alpha=alpha)


def unextendible_max_divergence_isotropic(t: float, d: int, k: int) -> float:
    """min over q in [0, threshold] of log2 max(t/q, (1-t)/(1-q))."""
    if math.isnan(t) or not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t!r}")
    threshold = extendibility_threshold(Family.ISOTROPIC, d, k)
    if t <= threshold:
        return 0.0
    # threshold >= 1/d > 0, and (1-t)/(1-threshold) < 1 <= t/threshold here
    return math.log2(t / threshold)
