import hashlib
import json

import numpy as np
import pytest

from slicerplots import PlotError, PlotSpec, moving_average, render
from slicerplots.cli import main

SCHEMA = "slicesim-csv-1"

TRAINING_HEADER = ("schema_version,slot,n_prbs,arrivals,completed,satisfied,"
                   "p_sat,mean_delay_ms,std_delay_ms,mean_snr_db,reward,"
                   "epsilon,d_max_ms,seed")


def _training_csv(tmp_path, name="training.csv", slots=50, schema=SCHEMA):
    tmp_path.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(0)
    lines = [TRAINING_HEADER]
    for t in range(slots):
        p = min(1.0, t / slots + float(rng.uniform(0, 0.1)))
        lines.append(f"{schema},{t},{40 + t % 5},{t % 7},{t % 7},{t % 5},"
                     f"{p:.6f},2.5,0.5,12.0,{-1.0 + p:.6f},0.1,5.0,1")
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


def _sweep_csv(tmp_path):
    lines = ["schema_version,n_prbs,p_sat,mean_delay_ms,lln_reward,shaped_reward"]
    for n in range(1, 61):
        p = min(0.95, max(0.0, (n - 10) * 0.05))
        lln = -abs(n - 30) / 10.0
        shaped = -abs(n - 30) / 8.0 - 0.1
        lines.append(f"{SCHEMA},{n},{p:.6f},2.0,{lln:.6f},{shaped:.6f}")
    path = tmp_path / "reward_sweep.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def _comparison_csv(tmp_path):
    lines = ["schema_version,policy,mean_prbs,p_sat,mean_delay_ms,std_delay_ms,mean_reward"]
    for name, prbs, p in [("pda_drl", 45, 0.99), ("md_drl", 30, 0.8),
                          ("heuristic", 38, 0.93), ("fixed_av", 22, 0.6),
                          ("fixed_max", 90, 1.0)]:
        lines.append(f"{SCHEMA},{name},{prbs},{p},2.0,0.5,-1.0")
    path = tmp_path / "comparison.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def _personalization_json(tmp_path):
    study = {
        "n_envs": 3,
        "local": {"per_env": [-2.0, -3.0, -2.5], "mean": -2.5},
        "methods": {
            "fedavg": {"per_env": [-3.0, -3.5, -3.2], "mean": -3.23},
            "reward": {"per_env": [-2.1, -3.1, -2.4], "mean": -2.53},
        },
    }
    path = tmp_path / "personalization_report.json"
    path.write_text(json.dumps(study))
    return path


def test_moving_average_window_one_is_identity():
    x = np.random.default_rng(1).normal(size=40)
    np.testing.assert_array_equal(moving_average(x, 1), x)


def test_moving_average_smooths():
    x = np.array([0.0, 1.0, 0.0, 1.0, 0.0, 1.0])
    out = moving_average(x, 2)
    np.testing.assert_allclose(out, [0.0, 0.5, 0.5, 0.5, 0.5, 0.5])
    assert out.shape == x.shape


def test_spec_validation(tmp_path):
    path = _training_csv(tmp_path)
    with pytest.raises(PlotError):
        PlotSpec(kind="pie", inputs=[path], out=tmp_path / "x.png")
    with pytest.raises(PlotError):
        PlotSpec(kind="convergence", inputs=[path], out=tmp_path / "x.png", window=0)
    with pytest.raises(PlotError):
        PlotSpec(kind="convergence", inputs=[tmp_path / "nope.csv"],
                 out=tmp_path / "x.png")
    with pytest.raises(PlotError):
        PlotSpec(kind="convergence", inputs=[], out=tmp_path / "x.png")


def test_empty_input_is_an_error_and_no_image(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(TRAINING_HEADER + "\n")
    out = tmp_path / "fig.png"
    with pytest.raises(PlotError, match="empty"):
        render(PlotSpec(kind="convergence", inputs=[path], out=out))
    assert not out.exists()


def test_unknown_schema_rejected(tmp_path):
    path = _training_csv(tmp_path, schema="slicesim-csv-99")
    with pytest.raises(PlotError, match="schema"):
        render(PlotSpec(kind="convergence", inputs=[path], out=tmp_path / "f.png"))


def test_all_kinds_render(tmp_path):
    jobs = [
        ("convergence", [_training_csv(tmp_path)]),
        ("sweep", [_sweep_csv(tmp_path)]),
        ("comparison", [_comparison_csv(tmp_path)]),
        ("personalization", [_personalization_json(tmp_path)]),
    ]
    for kind, inputs in jobs:
        out = tmp_path / f"{kind}.png"
        render(PlotSpec(kind=kind, inputs=inputs, out=out, window=5))
        assert out.exists() and out.stat().st_size > 0


def test_render_is_read_only_and_deterministic(tmp_path):
    path = _sweep_csv(tmp_path)
    before = hashlib.sha256(path.read_bytes()).hexdigest()
    out1 = tmp_path / "a.png"
    out2 = tmp_path / "b.png"
    render(PlotSpec(kind="sweep", inputs=[path], out=out1))
    render(PlotSpec(kind="sweep", inputs=[path], out=out2))
    assert hashlib.sha256(path.read_bytes()).hexdigest() == before
    assert out1.read_bytes() == out2.read_bytes()


def test_convergence_multiple_inputs(tmp_path):
    a = _training_csv(tmp_path / "run_a", slots=30)
    b = _training_csv(tmp_path / "run_b", slots=30)
    out = tmp_path / "overlay.png"
    render(PlotSpec(kind="convergence", inputs=[a, b], out=out, window=3))
    assert out.exists()


def test_cli(tmp_path, capsys):
    path = _sweep_csv(tmp_path)
    out = tmp_path / "fig.png"
    assert main(["--kind", "sweep", "--in", str(path), "--out", str(out)]) == 0
    assert out.exists()
    assert main(["--kind", "sweep", "--in", str(tmp_path / "missing.csv"),
                 "--out", str(out)]) == 2
    assert "plot error" in capsys.readouterr().err


def test_cli_window_flag(tmp_path):
    path = _training_csv(tmp_path)
    out = tmp_path / "conv.png"
    assert main(["--kind", "convergence", "--in", str(path),
                 "--out", str(out), "--window", "1"]) == 0
    assert out.exists()
