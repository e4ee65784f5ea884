"""Two-timescale slice environment.

One slicing slot = H TTIs.  The agent fixes a PRB grant for the whole
slot; inside the slot an earliest-deadline-first scheduler serves queued
packets TTI by TTI against time-varying per-user capacities.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelState, CqiTable, RadioConfig
from .traffic import LoadPattern, Packet, PacketIdAllocator, UserTrafficProfile, sample_arrivals

log = logging.getLogger(__name__)

FEATURES_PER_SLOT = 7
EWMA_DECAY = 0.01
DROP_HORIZON_MULT = 4


@dataclass
class QosSpec:
    d_max_ttis: int
    epsilon: float

    def __post_init__(self):
        if self.d_max_ttis < 1:
            raise ValueError("d_max_ttis must be >= 1")
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError("epsilon must be in (0, 1)")


@dataclass
class SlotMetrics:
    n_prbs: int = 0
    arrivals: int = 0
    completed: int = 0
    satisfied: int = 0
    p_sat: float = 0.0
    mean_delay_ttis: float = 0.0
    std_delay_ttis: float = 0.0
    mean_snr_db: float = 0.0
    std_snr_db: float = 0.0
    mean_demand_capacity_ratio: float = 0.0
    prbs_used_prev: int = 0
    ewma_arrivals: float = 0.0
    # per-TTI average PRB consumption of this slot (fixed-policy calibration)
    prbs_used: float = 0.0
    queue_len: int = 0


def schedule_tti(
    queue: list[Packet],
    n_prbs: int,
    per_user_capacity: dict[int, int],
) -> dict[int, int]:
    """Serve queued packets in EDF order within a budget of n_prbs.

    Decrements each served packet's remaining_bits in place and returns a
    map packet-id -> PRBs allocated this TTI.  Packets whose user has zero
    capacity this TTI are skipped.
    """
    if n_prbs < 0:
        raise ValueError("n_prbs must be >= 0")
    alloc: dict[int, int] = {}
    budget = n_prbs
    order = sorted(queue, key=lambda p: (p.deadline_tti, p.arrival_tti, p.id))
    for pkt in order:
        if budget <= 0:
            break
        cap = per_user_capacity.get(pkt.user_id, 0)
        if cap <= 0:
            continue
        need = -(-pkt.remaining_bits // cap)  # ceil division
        take = min(need, budget)
        if take <= 0:
            continue
        pkt.remaining_bits = max(0, pkt.remaining_bits - cap * take)
        alloc[pkt.id] = take
        budget -= take
    return alloc


def make_observation(
    history: "deque[SlotMetrics] | list[SlotMetrics]",
    h: int,
    norms: dict | None = None,
    d_max_ttis: int = 1,
    prb_max: int = 1,
) -> np.ndarray:
    """Concatenate 7 normalized features per historical slot, oldest first.

    Missing history (before slot h) is zero-padded at the front.
    """
    if h < 1:
        raise ValueError("history window must be >= 1")
    norms = norms or {}
    delay_scale = norms.get("delay", float(d_max_ttis))
    snr_mean_scale = norms.get("snr_mean", 30.0)
    snr_std_scale = norms.get("snr_std", 10.0)
    ratio_scale = norms.get("demand_ratio", 1.0)
    prb_scale = norms.get("prb", float(prb_max))

    feats = np.zeros(FEATURES_PER_SLOT * h)
    recent = list(history)[-h:]
    offset = h - len(recent)
    for i, m in enumerate(recent):
        j = (offset + i) * FEATURES_PER_SLOT
        feats[j:j + FEATURES_PER_SLOT] = [
            m.p_sat,
            m.mean_delay_ttis / delay_scale,
            m.std_delay_ttis / delay_scale,
            m.mean_snr_db / snr_mean_scale,
            m.std_snr_db / snr_std_scale,
            m.mean_demand_capacity_ratio / ratio_scale,
            m.prbs_used_prev / prb_scale,
        ]
    return feats


@dataclass
class UserState:
    channel: ChannelState
    profile: UserTrafficProfile


class SliceEnv:
    """One MVNO slice in one cell."""

    def __init__(
        self,
        qos: QosSpec,
        users: list[UserState],
        radio: RadioConfig,
        cqi: CqiTable,
        load_pattern: LoadPattern,
        h_ttis_per_slot: int,
        h_history: int = 3,
        prb_min: int = 0,
        prb_max: int = 150,
        seed: int | np.random.SeedSequence = 0,
        overload_limit: int = 10_000,
        feature_norms: dict | None = None,
    ):
        if h_ttis_per_slot < 1:
            raise ValueError("h_ttis_per_slot must be >= 1")
        if not (0 <= prb_min <= prb_max):
            raise ValueError("need 0 <= prb_min <= prb_max")
        self.qos = qos
        self.users = users
        self.radio = radio
        self.cqi = cqi
        self.load_pattern = load_pattern
        self.H = h_ttis_per_slot
        self.h_history = h_history
        self.prb_min = prb_min
        self.prb_max = prb_max
        self.overload_limit = overload_limit
        self.feature_norms = feature_norms

        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        ch_ss, tr_ss = ss.spawn(2)
        self.rng_channel = np.random.Generator(np.random.PCG64(ch_ss))
        self.rng_traffic = np.random.Generator(np.random.PCG64(tr_ss))

        self.queue: list[Packet] = []
        self.slot_index = 0
        self.current_prbs = prb_min
        self.history: deque[SlotMetrics] = deque(maxlen=h_history)
        self._ids = PacketIdAllocator()
        self._ewma_arrivals: float | None = None
        self._prbs_used_prev = 0

        # vectorized channel bookkeeping
        n = len(users)
        self._h = np.array([u.channel.small_scale_complex for u in users], dtype=complex)
        fd = np.array([u.channel.doppler_hz for u in users])
        rho = np.exp(-2.0 * (np.pi * fd * radio.tti_seconds) ** 2)
        self._ar_a = np.sqrt(rho)
        self._ar_s = np.sqrt(1.0 - rho)
        self._snr_offset_db = np.array([
            10.0 * math.log10(radio.tx_power_watts / radio.noise_watts) + u.channel.large_scale_db
            for u in users
        ])
        self._cqi_thresholds = np.asarray(cqi.thresholds_db, dtype=float)
        self._cqi_bits = np.floor(
            radio.prb_bandwidth_hz * radio.tti_seconds * np.asarray(cqi.efficiencies_bps_hz)
        ).astype(int)

    @property
    def observation_size(self) -> int:
        return FEATURES_PER_SLOT * self.h_history

    def observe(self) -> np.ndarray:
        return make_observation(
            self.history, self.h_history, self.feature_norms,
            d_max_ttis=self.qos.d_max_ttis, prb_max=self.prb_max,
        )

    def _advance_channels(self) -> np.ndarray:
        """One AR(1) step for all users; returns per-user SNR in dB."""
        n = len(self._h)
        noise = (self.rng_channel.standard_normal(n)
                 + 1j * self.rng_channel.standard_normal(n)) / math.sqrt(2.0)
        self._h = self._ar_a * self._h + self._ar_s * noise
        power = np.abs(self._h) ** 2
        with np.errstate(divide="ignore"):
            return self._snr_offset_db + 10.0 * np.log10(power)

    def _capacities(self, snr_db: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._cqi_thresholds, snr_db, side="right") - 1
        caps = np.where(idx >= 0, self._cqi_bits[np.maximum(idx, 0)], 0)
        return caps

    def step(self, n_prbs: int) -> tuple[np.ndarray, SlotMetrics]:
        if not (self.prb_min <= n_prbs <= self.prb_max):
            raise ValueError(f"n_prbs {n_prbs} outside [{self.prb_min}, {self.prb_max}]")
        self.current_prbs = n_prbs
        H = self.H
        t0 = self.slot_index * H
        d_max = self.qos.d_max_ttis
        drop_age = DROP_HORIZON_MULT * d_max

        # sample the whole slot's arrivals up front, bucketed by TTI
        incoming: dict[int, list[Packet]] = {}
        n_arrivals = 0
        for uid, user in enumerate(self.users):
            pkts = sample_arrivals(
                user.profile, self.load_pattern, self.slot_index,
                (t0, t0 + H), self.rng_traffic, user_id=uid, ids=self._ids,
            )
            n_arrivals += len(pkts)
            for p in pkts:
                p.deadline_tti = p.arrival_tti + d_max - 1
                incoming.setdefault(p.arrival_tti, []).append(p)

        delays: list[int] = []
        satisfied = 0
        completed = 0
        demand_sizes: list[int] = []
        snr_samples = np.empty((H, len(self.users)))
        cap_sum = 0.0
        cap_count = 0
        prbs_used_total = 0

        for t in range(t0, t0 + H):
            snr_db = self._advance_channels()
            snr_samples[t - t0] = snr_db
            caps_arr = self._capacities(snr_db)
            cap_sum += caps_arr.sum()
            cap_count += len(caps_arr)

            if t in incoming:
                self.queue.extend(incoming[t])

            # drop stale packets: they complete unsatisfied at the horizon
            if self.queue:
                kept = []
                for p in self.queue:
                    age = t - p.arrival_tti + 1
                    if age > drop_age:
                        completed += 1
                        delays.append(age)
                        demand_sizes.append(p.size_bits)
                    else:
                        kept.append(p)
                self.queue = kept

            if self.queue and n_prbs > 0:
                caps = {uid: int(c) for uid, c in enumerate(caps_arr)}
                alloc = schedule_tti(self.queue, n_prbs, caps)
                prbs_used_total += sum(alloc.values())
                if alloc:
                    kept = []
                    for p in self.queue:
                        if p.remaining_bits <= 0:
                            p.delivered_tti = t
                            d = p.delay_ttis
                            completed += 1
                            delays.append(d)
                            demand_sizes.append(p.size_bits)
                            if d <= d_max:
                                satisfied += 1
                        else:
                            kept.append(p)
                    self.queue = kept

        if len(self.queue) > self.overload_limit:
            log.warning(
                "slice queue overload: %d packets at slot %d (limit %d)",
                len(self.queue), self.slot_index, self.overload_limit,
            )

        if self._ewma_arrivals is None:
            self._ewma_arrivals = float(n_arrivals)
        else:
            self._ewma_arrivals += EWMA_DECAY * (n_arrivals - self._ewma_arrivals)

        mean_cap = cap_sum / cap_count if cap_count else 0.0
        delays_arr = np.asarray(delays, dtype=float)
        metrics = SlotMetrics(
            n_prbs=n_prbs,
            arrivals=n_arrivals,
            completed=completed,
            satisfied=satisfied,
            p_sat=satisfied / completed if completed > 0 else 0.0,
            mean_delay_ttis=float(delays_arr.mean()) if completed else 0.0,
            std_delay_ttis=float(delays_arr.std()) if completed else 0.0,
            mean_snr_db=float(snr_samples.mean()),
            std_snr_db=float(snr_samples.std()),
            mean_demand_capacity_ratio=(
                float(np.mean(demand_sizes)) / mean_cap if demand_sizes and mean_cap > 0 else 0.0
            ),
            prbs_used_prev=self._prbs_used_prev,
            ewma_arrivals=self._ewma_arrivals,
            prbs_used=prbs_used_total / H,
            queue_len=len(self.queue),
        )
        self._prbs_used_prev = int(round(prbs_used_total / H))
        self.slot_index += 1
        self.history.append(metrics)
        return self.observe(), metrics
