import math

import numpy as np
import pytest

from slicesim.channel import (
    ChannelState, CqiTable, RadioConfig, advance_channel,
    map_snr_to_efficiency, prb_capacity, snr,
)


def test_snr_identity():
    cfg = RadioConfig(tx_power_watts=1.0, noise_watts=1.0)
    st = ChannelState(doppler_hz=0.0)  # |h|^2 = 1, large-scale 0 dB
    assert snr(cfg, st) == pytest.approx(1.0)


def test_snr_zero_gain_limit():
    cfg = RadioConfig()
    st = ChannelState(doppler_hz=0.0, small_scale_complex=0.0)
    assert snr(cfg, st) == 0.0


def test_snr_arithmetic():
    cfg = RadioConfig(tx_power_watts=2.0, noise_watts=0.1)
    st = ChannelState(doppler_hz=0.0, large_scale_db=10.0 * math.log10(0.5))
    assert snr(cfg, st) == pytest.approx(10.0)


def test_zero_doppler_freeze():
    rng = np.random.default_rng(0)
    st = ChannelState(doppler_hz=0.0, small_scale_complex=0.3 + 0.4j)
    out = advance_channel(st, 0.001, rng)
    assert out.small_scale_complex == st.small_scale_complex
    assert out.gain_linear == st.gain_linear


def test_advance_requires_positive_dt():
    st = ChannelState(doppler_hz=10.0)
    with pytest.raises(ValueError):
        advance_channel(st, 0.0, np.random.default_rng(0))


def _power_series(f_d, dt, steps, seed=1):
    rng = np.random.default_rng(seed)
    st = ChannelState(doppler_hz=f_d)
    # burn in so the process is stationary
    for _ in range(200):
        st = advance_channel(st, dt, rng)
    p = np.empty(steps)
    for i in range(steps):
        st = advance_channel(st, dt, rng)
        p[i] = abs(st.small_scale_complex) ** 2
    return p


def _lag_autocorr(x, lag=1):
    x = x - x.mean()
    return float(np.dot(x[:-lag], x[lag:]) / np.dot(x, x))


def test_power_autocorrelation_matches_ar_coefficient():
    # 50 Hz Doppler at 1 ms: |h|^2 lag-1 autocorr ~= exp(-2 (pi 0.05)^2)
    p = _power_series(50.0, 0.001, 1_000_000)
    target = math.exp(-2.0 * (math.pi * 0.05) ** 2)
    assert _lag_autocorr(p, 1) == pytest.approx(target, abs=0.01)


def test_coherence_scales_with_doppler():
    def coherence_lag(f_d):
        p = _power_series(f_d, 0.001, 300_000)
        for lag in range(1, 5000):
            if _lag_autocorr(p, lag) < 0.5:
                return lag
        return 5000

    assert coherence_lag(5.0) >= 9 * coherence_lag(50.0)


def test_unit_mean_power():
    # power decorrelates over ~1/(1 - rho) TTIs, so slower Doppler needs a
    # longer series for the sample mean to settle near the unit target
    for f_d, steps in ((20.0, 400_000), (50.0, 100_000)):
        p = _power_series(f_d, 0.001, steps, seed=int(f_d))
        assert 0.93 <= p.mean() <= 1.07


def test_cqi_lookup_floor_boundary_ceiling():
    table = CqiTable()
    below = 10 ** ((table.thresholds_db[0] - 1.0) / 10)
    assert map_snr_to_efficiency(table, below) == 0.0
    for i, th in enumerate(table.thresholds_db):
        assert map_snr_to_efficiency(table, 10 ** (th / 10)) == table.efficiencies_bps_hz[i]
    assert map_snr_to_efficiency(table, 1e12) == table.efficiencies_bps_hz[-1]


def test_cqi_idempotent_requantization():
    table = CqiTable()
    for snr_db in np.linspace(-10, 30, 100):
        eff = map_snr_to_efficiency(table, 10 ** (snr_db / 10))
        if eff == 0.0:
            continue
        level = table.efficiencies_bps_hz.index(eff)
        again = map_snr_to_efficiency(table, 10 ** (table.thresholds_db[level] / 10))
        assert again == eff


def test_cqi_validation():
    with pytest.raises(ValueError):
        CqiTable(thresholds_db=[0.0, 0.0], efficiencies_bps_hz=[1.0, 2.0])
    with pytest.raises(ValueError):
        CqiTable(thresholds_db=[0.0, 1.0], efficiencies_bps_hz=[2.0, 1.0])
    with pytest.raises(ValueError):
        CqiTable(thresholds_db=[0.0], efficiencies_bps_hz=[1.0, 2.0])


def test_prb_capacity_arithmetic():
    cfg = RadioConfig(prb_bandwidth_hz=180_000.0, tti_seconds=0.001)
    assert prb_capacity(cfg, 2.0) == 360
    assert prb_capacity(cfg, 0.0) == 0
    assert prb_capacity(cfg, 5.5547) == 999  # floor of 999.846


def test_capacity_monotone_in_snr():
    cfg = RadioConfig()
    table = CqiTable()
    snrs = np.logspace(-2, 4, 200)
    caps = [prb_capacity(cfg, map_snr_to_efficiency(table, s)) for s in snrs]
    assert all(a <= b for a, b in zip(caps, caps[1:]))


def test_radio_config_validation():
    with pytest.raises(ValueError):
        RadioConfig(tx_power_watts=0.0)
    with pytest.raises(ValueError):
        RadioConfig(noise_watts=-1.0)
