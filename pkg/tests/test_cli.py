import json

from slicesim.cli import main
from slicesim.scenarios import desk_config

_TINY_USERS = [
    {"rate": 4, "size_class": "small", "sigma_ln": 0.3,
     "doppler_hz": 30, "large_scale_db": 8.0},
]


def _tiny_cfg_file(tmp_path, **kw):
    raw = desk_config(steps=8, slot_ttis=20, users=_TINY_USERS,
                      out_dir=str(tmp_path / "out"), **kw)
    raw["env"]["prb_max"] = 20
    raw["env"]["start_prbs"] = 5
    raw["agent"].update({"hidden": [8], "episode_len_slots": 4,
                         "deltas": [-1, 0, 1]})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return path


def test_validate_config(tmp_path, capsys):
    path = _tiny_cfg_file(tmp_path)
    assert main(["validate-config", "--config", str(path)]) == 0
    assert "OK" in capsys.readouterr().out

    bad = json.loads(path.read_text())
    bad["qos"]["epsilon"] = 2.0
    path.write_text(json.dumps(bad))
    assert main(["validate-config", "--config", str(path)]) == 2
    assert "qos.epsilon" in capsys.readouterr().err


def test_train_subcommand(tmp_path, capsys):
    path = _tiny_cfg_file(tmp_path)
    assert main(["train", "--config", str(path)]) == 0
    assert (tmp_path / "out" / "training.csv").exists()


def test_train_seed_and_out_overrides(tmp_path):
    path = _tiny_cfg_file(tmp_path)
    out = tmp_path / "elsewhere"
    assert main(["train", "--config", str(path), "--seed", "9",
                 "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 9


def test_gen_suite(tmp_path, capsys):
    out = tmp_path / "suite"
    assert main(["gen-suite", "--master-seed", "3", "--suite-size", "4",
                 "--out", str(out)]) == 0
    files = sorted(out.glob("env*.json"))
    assert len(files) == 4
    # each emitted config must be loadable as-is
    for f in files:
        assert main(["validate-config", "--config", str(f)]) == 0


def test_sweep_exit_code_reflects_certification(tmp_path, capsys):
    # a single light user saturates immediately: no knee shape, so the
    # certification fails and the CLI signals it via the exit code
    path = _tiny_cfg_file(tmp_path)
    code = main(["sweep", "--config", str(path)])
    out = capsys.readouterr().out
    assert "reward shape certification" in out
    assert code in (0, 1)
    assert (tmp_path / "out" / "reward_shape_report.json").exists()
    report = json.loads((tmp_path / "out" / "reward_shape_report.json").read_text())
    assert code == (0 if report["pass"] else 1)


def test_paper_profile_flag(tmp_path):
    path = _tiny_cfg_file(tmp_path)
    assert main(["train", "--config", str(path), "--profile", "paper",
                 "--out", str(tmp_path / "paper")]) == 0
    saved = json.loads((tmp_path / "paper" / "config.json").read_text())
    assert saved["env"]["slot_ttis"] == 1000
