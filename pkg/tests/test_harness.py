import dataclasses
import json

import numpy as np
import pytest

from headctl.errors import ConfigError
from headctl.harness import (ExperimentConfig, Waypoint, capture_dataset, emit_plot_data, overshoot, preset,
                             rise_time, run_experiment)
from headctl.harness.cli import main
from headctl.harness.runner import TELEMETRY_COLUMNS, read_csv
from headctl.plant import PlantParams, true_f

# poses where the minimum-norm ideal inputs stay inside [0, 1], so clipping never acts
FEASIBLE_START = (29.0, 7.0, 32.5)
FEASIBLE_TARGET = (30.0, 7.0, 35.0)


def short(**kw):
    base = dict(duration=5.0, settle=2.0)
    base.update(kw)
    return preset(base.pop("kind", "track3dof"), **base)


def ideal_oracle(rate):
    return preset("track3dof", f_hat="oracle", gain_preset="ideal", settle=0.0, duration=30.0, control_rate=rate,
                  start=FEASIBLE_START, waypoints=[Waypoint(0.0, *FEASIBLE_TARGET)],
                  plant=dataclasses.replace(PlantParams(), w_max=0.0))


def error_norm(tel):
    i = TELEMETRY_COLUMNS.index("e_z")
    return np.linalg.norm(tel[:, i:i + 3], axis=1)


# config --------------------------------------------------------------------------------

def test_config_roundtrip(tmp_path):
    cfg = preset("roll_only", seed=7, sensing="vision", clutter=2)
    cfg.save(tmp_path / "c.json")
    back = ExperimentConfig.load(tmp_path / "c.json")
    assert back.to_dict() == cfg.to_dict()
    assert back.waypoints[0].phi == 45.0 and back.waypoints[0].z == cfg.start[0]


@pytest.mark.parametrize("bad", [
    {"kind": "nope"}, {"sensing": "lidar"}, {"f_hat": "magic"}, {"control_rate": 0.0}, {"control_rate": 30.0},
    {"waypoints": [{"time": 5, "z": 0, "theta": 0, "phi": 0}, {"time": 1, "z": 0, "theta": 0, "phi": 0}]},
    {"duration": -1.0}, {"unknown_field": 1},
])
def test_config_rejects_invalid(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**ExperimentConfig().to_dict(), **bad})


def test_reference_schedule():
    cfg = preset("track3dof", waypoints=[Waypoint(0, 1, 2, 3), Waypoint(10, 4, 5, 6)])
    assert np.array_equal(cfg.reference_at(-1.0), cfg.start)
    assert np.array_equal(cfg.reference_at(0.0), [1, 2, 3])
    assert np.array_equal(cfg.reference_at(10.0), [4, 5, 6])


# helpers -----------------------------------------------------------------------------------

def test_rise_time_and_overshoot():
    t = np.arange(0, 10.01, 0.1)
    y = np.clip(t / 10.0, 0, 1)
    assert rise_time(t, y, 0.0, 1.0) == pytest.approx(8.0)
    assert np.isnan(rise_time(t, 0.5 * y, 0.0, 1.0))
    assert overshoot([0, 0.5, 1.2, 1.0], 0.0, 1.0) == pytest.approx(0.2)
    assert overshoot([10, 8, 7, 8], 10.0, 8.0) == pytest.approx(0.5)
    assert overshoot([0, 0.5], 0.0, 1.0) == 0.0


# runs --------------------------------------------------------------------------------------

def test_telemetry_shape_and_time():
    summary, tel = run_experiment(short(), write=False)
    assert tel.shape == (51, len(TELEMETRY_COLUMNS))
    assert np.all(np.diff(tel[:, 0]) > 0)
    assert summary.ticks == 51
    u = tel[:, TELEMETRY_COLUMNS.index("u0"):TELEMETRY_COLUMNS.index("u0") + 6]
    assert u.min() >= 0.0 and u.max() <= 1.0


def test_run_is_byte_reproducible(tmp_path):
    out = tmp_path / "run"
    names = ("telemetry.csv", "summary.json", "config.json")
    run_experiment(short(out=str(out), seed=3))
    first = {n: (out / n).read_bytes() for n in names}
    run_experiment(short(out=str(out), seed=3))
    for n in names:
        assert (out / n).read_bytes() == first[n], n


def test_network_and_zero_modes_differ():
    _, net = run_experiment(short(), write=False)
    _, zero = run_experiment(short(f_hat="zero"), write=False)
    i = TELEMETRY_COLUMNS.index("fhat0")
    assert not zero[:, i:i + 6].any()
    assert net[:, i:i + 6].any()


def test_ideal_gains_error_scales_with_control_period():
    # the matched loop gives e' = A_m e; sampling with a held input adds O(dt) forcing
    e10 = error_norm(run_experiment(ideal_oracle(10.0), write=False)[1])
    e100 = error_norm(run_experiment(ideal_oracle(100.0), write=False)[1])
    assert e10.max() < 0.05
    assert 5.0 < e10.max() / e100.max() < 20.0


@pytest.mark.xfail(strict=True, reason="sampled loop: held input keeps forcing e while the reference moves")
def test_ideal_gains_error_decays_monotonically_after_one_second():
    cfg = ideal_oracle(10.0)
    _, tel = run_experiment(cfg, write=False)
    assert tel[:, TELEMETRY_COLUMNS.index("saturation_fraction")].max() == 0.0
    e = error_norm(tel)[tel[:, 0] >= 1.0]
    assert np.all(np.diff(e) <= 1e-12)


# capture and plot data -----------------------------------------------------------------------

def test_capture_rows_and_replay(tmp_path):
    cfg = preset("excitation_capture", excitation_duration=300.0, out=str(tmp_path))
    rows = capture_dataset(cfg)
    assert rows.shape == (3000, 16)
    pp = cfg.plant
    for row in rows[::97]:
        assert np.array_equal(row[10:16], true_f(pp, row[7:10]))
    header, back = read_csv(tmp_path / "dataset.csv")
    assert back.tobytes() == rows.tobytes() and header[0] == "t"
    other = capture_dataset(preset("excitation_capture", excitation_duration=10.0, seed=1), write=False)
    assert not np.array_equal(other[:, 1:7], rows[:100, 1:7])


def test_plot_data_roundtrip(tmp_path):
    run_experiment(short(out=str(tmp_path)))
    header, tel = read_csv(tmp_path / "telemetry.csv")
    paths = emit_plot_data(tmp_path / "telemetry.csv", tmp_path / "plots")
    assert [p.name for p in paths] == ["z.csv", "pitch.csv", "roll.csv"]
    for p, a in zip(paths, ("z", "pitch", "roll")):
        h, d = read_csv(p)
        assert h == ["t", "y", "y_m", "r"] and len(d) == len(tel)
        assert np.array_equal(d[:, 1], tel[:, header.index(f"y_{a}")])


# CLI -----------------------------------------------------------------------------------

def test_cli_run_and_errors(tmp_path, capsys):
    cfg = short(out=str(tmp_path / "run"))
    cfg.save(tmp_path / "c.json")
    assert main(["run", "--config", str(tmp_path / "c.json"), "--seed", "2"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["ticks"] == 51
    assert (tmp_path / "run" / "telemetry.csv").exists()
    assert main(["plotdata", str(tmp_path / "run" / "telemetry.csv")]) == 0
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    assert "headctl: error:" in capsys.readouterr().err
    (tmp_path / "bad.json").write_text('{"kind": "track3dof", "control_rate": -1}')
    assert main(["run", "--config", str(tmp_path / "bad.json")]) == 1
    with pytest.raises(SystemExit):
        main(["fly"])


def test_cli_vision_and_capture(tmp_path, capsys):
    assert main(["vision", "--pose", "10", "1", "40", "--out", str(tmp_path / "v")]) == 0
    res = json.loads(capsys.readouterr().out)
    assert np.max(np.abs(res["error"])) < 0.5
    assert main(["vision", "--cloud", str(tmp_path / "v" / "scene.xyz"), "--out", str(tmp_path / "v2")]) == 0
    again = json.loads(capsys.readouterr().out)
    assert again["measured"] == res["measured"]
    assert main(["capture", "--duration", "5", "--out", str(tmp_path / "cap")]) == 0
    assert read_csv(tmp_path / "cap" / "dataset.csv")[1].shape == (50, 16)


def test_cli_batch(tmp_path, capsys):
    cfg = short(out=str(tmp_path / "b"))
    cfg.save(tmp_path / "c.json")
    assert main(["run", "--config", str(tmp_path / "c.json"), "--batch", "1,2", "--workers", "2"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert len(res) == 2
    single, _ = run_experiment(short(seed=1, out=str(tmp_path / "s")))
    assert (tmp_path / "b" / "seed_1" / "telemetry.csv").read_bytes() == (tmp_path / "s" / "telemetry.csv").read_bytes()
