"""Per-user fading channel, SNR and per-PRB capacity.

The small-scale process is a first-order Gauss-Markov (AR(1)) complex
fading coefficient; the gain is held constant within one TTI.  The AR
coefficient is chosen so that the lag-dt autocorrelation of the *power*
|h|^2 equals rho = exp(-2 (pi f_d dt)^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

# 3GPP 4-bit CQI efficiency ladder (bits/s/Hz), thresholds evenly spaced
# over [-6.7, 22.7] dB.
DEFAULT_CQI_EFFICIENCIES = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770,
    1.1758, 1.4766, 1.9141, 2.4063, 2.7305,
    3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
]
DEFAULT_CQI_THRESHOLDS_DB = [-6.7 + i * 2.1 for i in range(15)]


@dataclass
class RadioConfig:
    tx_power_watts: float = 1.0
    noise_watts: float = 0.1
    prb_bandwidth_hz: float = 180e3
    tti_seconds: float = 0.001

    def __post_init__(self):
        for name in ("tx_power_watts", "noise_watts", "prb_bandwidth_hz", "tti_seconds"):
            if getattr(self, name) <= 0:
                raise ValueError(f"RadioConfig.{name} must be > 0")


@dataclass
class CqiTable:
    thresholds_db: list[float] = field(default_factory=lambda: list(DEFAULT_CQI_THRESHOLDS_DB))
    efficiencies_bps_hz: list[float] = field(default_factory=lambda: list(DEFAULT_CQI_EFFICIENCIES))

    def __post_init__(self):
        t = np.asarray(self.thresholds_db, dtype=float)
        e = np.asarray(self.efficiencies_bps_hz, dtype=float)
        if len(t) != len(e):
            raise ValueError("CQI thresholds and efficiencies must have equal length")
        if len(t) == 0:
            raise ValueError("CQI table must be non-empty")
        if np.any(np.diff(t) <= 0):
            raise ValueError("CQI thresholds must be strictly ascending")
        if np.any(np.diff(e) < 0):
            raise ValueError("CQI efficiencies must be non-decreasing")
        self._thresholds = t
        self._efficiencies = e


@dataclass
class ChannelState:
    doppler_hz: float
    large_scale_db: float = 0.0
    small_scale_complex: complex = 1.0 + 0.0j

    @property
    def gain_linear(self) -> float:
        return 10.0 ** (self.large_scale_db / 10.0) * abs(self.small_scale_complex) ** 2


def advance_channel(state: ChannelState, dt: float, rng: np.random.Generator) -> ChannelState:
    """One Gauss-Markov step over a lag of dt seconds."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if state.doppler_hz == 0.0:
        return state
    rho = math.exp(-2.0 * (math.pi * state.doppler_hz * dt) ** 2)
    a = math.sqrt(rho)  # |h|^2 autocorrelation at lag dt is a^2 = rho
    noise = (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2.0)
    h = a * state.small_scale_complex + math.sqrt(1.0 - rho) * noise
    return replace(state, small_scale_complex=h)


def snr(cfg: RadioConfig, state: ChannelState) -> float:
    return cfg.tx_power_watts * state.gain_linear / cfg.noise_watts


def map_snr_to_efficiency(table: CqiTable, snr_linear: float) -> float:
    """Step-function lookup: efficiency of the highest threshold <= snr (dB)."""
    if snr_linear <= 0:
        return 0.0
    snr_db = 10.0 * math.log10(snr_linear)
    # absorb dB <-> linear round-trip error at threshold boundaries
    idx = np.searchsorted(table._thresholds, snr_db + 1e-9, side="right") - 1
    if idx < 0:
        return 0.0
    return float(table._efficiencies[idx])


def prb_capacity(cfg: RadioConfig, efficiency: float) -> int:
    """Bits deliverable by one PRB in one TTI, floored to an integer."""
    if efficiency < 0:
        raise ValueError("efficiency must be >= 0")
    return int(cfg.prb_bandwidth_hz * cfg.tti_seconds * efficiency)
