"""Cliff's delta with Hess magnitude bands."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from enum import Enum

from ..errors import StatsError

THRESHOLDS = (0.147, 0.33, 0.474)


class Magnitude(str, Enum):
    NEGLIGIBLE = "NEGLIGIBLE"
    SMALL = "SMALL"
    MEDIUM = "MEDIUM"
    LARGE = "LARGE"

    @property
    def symbol(self) -> str:
        return self.value[0]


def magnitude(d: float) -> Magnitude:
    a = abs(d)
    if a < THRESHOLDS[0]:
        return Magnitude.NEGLIGIBLE
    if a < THRESHOLDS[1]:
        return Magnitude.SMALL
    if a < THRESHOLDS[2]:
        return Magnitude.MEDIUM
    return Magnitude.LARGE


@dataclass(frozen=True)
class EffectSize:
    """Positive ``d`` means the first group tends to be larger."""
    d: float
    magnitude: Magnitude

    def to_dict(self) -> dict:
        return {"d": self.d, "magnitude": self.magnitude.value}


def cliffs_delta(a, b) -> EffectSize:
    """O((m + n) log n) via binary search in the sorted second group."""
    a = [float(x) for x in a]
    sb = sorted(float(x) for x in b)
    if not a or not sb:
        raise StatsError("both groups must be nonempty")
    n = len(sb)
    more = less = 0
    for x in a:
        less += n - bisect_right(sb, x)
        more += bisect_left(sb, x)
    d = (more - less) / (len(a) * n)
    return EffectSize(d, magnitude(d))


def cliffs_delta_brute(a, b) -> float:
    gt = sum(1 for x in a for y in b if x > y)
    lt = sum(1 for x in a for y in b if x < y)
    return (gt - lt) / (len(a) * len(b))
