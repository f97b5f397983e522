"""Free-space LoS links: distances, channel gains and Shannon rates."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import Location

MIN_DISTANCE = 1.0  # beta0 is referenced to 1 m


class ZeroDistanceError(ValueError):
    pass


@dataclass(frozen=True)
class LinkBudget:
    distance: float
    gain: float

    def rate(self, p: float, B: float, sigma2: float) -> float:
        return rate(p, self.gain, B, sigma2)

    @classmethod
    def between(cls, a: Location, b: Location, beta0: float) -> "LinkBudget":
        d = distance(a, b)
        return cls(d, channel_gain(d, beta0))


def distance(a: Location, b: Location) -> float:
    d = math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)
    if d == 0.0:
        raise ZeroDistanceError(f"coincident endpoints {a}")
    return d


def horizontal_distance(a: Location, b: Location) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def channel_gain(d: float, beta0: float) -> float:
    if d <= 0:
        raise ZeroDistanceError("distance must be positive")
    d = max(d, MIN_DISTANCE)
    return beta0 / (d * d)


def rate(p: float, gain: float, B: float, sigma2: float) -> float:
    """Shannon rate B*log2(1 + p*g/sigma2) in bit/s."""
    if p < 0:
        raise ValueError("transmit power must be >= 0")
    return B * math.log2(1.0 + p * gain / sigma2)


def uav_bs_gain(fhp: Location, bs: Location, beta0: float) -> float:
    # same inverse-square LoS law as the MTU links
    return channel_gain(distance(fhp, bs), beta0)
