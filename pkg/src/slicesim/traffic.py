"""Stochastic packet arrival and size generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# log-normal mu per size class (bits); sigma_ln is shared
SIZE_CLASS_MU = {
    "small": math.log(2000.0),
    "medium": math.log(12000.0),
    "large": math.log(60000.0),
}
DEFAULT_SIGMA_LN = 0.5


@dataclass
class UserTrafficProfile:
    arrival_rate_per_slot: float
    size_class: str = "medium"
    mu_ln: float | None = None
    sigma_ln: float = DEFAULT_SIGMA_LN

    def __post_init__(self):
        if self.arrival_rate_per_slot < 0:
            raise ValueError("arrival_rate_per_slot must be >= 0")
        if self.mu_ln is None:
            if self.size_class not in SIZE_CLASS_MU:
                raise ValueError(f"unknown size_class {self.size_class!r}")
            self.mu_ln = SIZE_CLASS_MU[self.size_class]


@dataclass
class LoadPattern:
    kind: str = "constant"  # constant | ramp-up-down
    peak_multiplier: float = 1.0
    period_slots: int = 100

    def __post_init__(self):
        if self.kind not in ("constant", "ramp-up-down"):
            raise ValueError(f"unknown load pattern kind {self.kind!r}")
        if self.peak_multiplier < 1.0:
            raise ValueError("peak_multiplier must be >= 1")
        if self.period_slots < 2:
            raise ValueError("period_slots must be >= 2")


@dataclass
class Packet:
    id: int
    user_id: int
    arrival_tti: int
    size_bits: int
    remaining_bits: int
    deadline_tti: int = 0
    delivered_tti: int | None = None

    @property
    def delay_ttis(self) -> int | None:
        if self.delivered_tti is None:
            return None
        return self.delivered_tti - self.arrival_tti + 1


def pattern_multiplier(pattern: LoadPattern, slot_index: int) -> float:
    """Triangular wave from 1 up to peak and back over period_slots."""
    if slot_index < 0:
        raise ValueError("slot_index must be >= 0")
    if pattern.kind == "constant":
        return 1.0
    phase = (slot_index % pattern.period_slots) / pattern.period_slots
    tri = 1.0 - abs(2.0 * phase - 1.0)  # 0 at cycle start, 1 at midpoint
    return 1.0 + (pattern.peak_multiplier - 1.0) * tri


class PacketIdAllocator:
    def __init__(self):
        self._next = 0

    def take(self) -> int:
        i = self._next
        self._next += 1
        return i


def sample_arrivals(
    profile: UserTrafficProfile,
    pattern: LoadPattern,
    slot_index: int,
    tti_range: tuple[int, int],
    rng: np.random.Generator,
    user_id: int = 0,
    ids: PacketIdAllocator | None = None,
) -> list[Packet]:
    """Poisson arrivals for one slicing slot, placed uniformly over its TTIs."""
    t_start, t_end = tti_range
    if t_start >= t_end:
        raise ValueError("tti_range must be non-empty")
    ids = ids if ids is not None else PacketIdAllocator()
    mean = profile.arrival_rate_per_slot * pattern_multiplier(pattern, slot_index)
    if mean <= 0:
        return []
    n = rng.poisson(mean)
    if n == 0:
        return []
    ttis = np.sort(rng.integers(t_start, t_end, size=n))
    sizes = np.maximum(
        1, np.rint(rng.lognormal(profile.mu_ln, profile.sigma_ln, size=n))
    ).astype(int)
    return [
        Packet(id=ids.take(), user_id=user_id, arrival_tti=int(t),
               size_bits=int(s), remaining_bits=int(s))
        for t, s in zip(ttis, sizes)
    ]
