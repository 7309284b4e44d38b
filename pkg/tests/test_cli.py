import json
import math
from pathlib import Path

import numpy as np
import pytest

from nftrack.cli import main

BASE = {
    "schema_version": 1,
    "seed": 99,
    "surfaces": [
        {"id": 0, "a": [-2.0, 4.0], "b": [6.0, 4.0], "reflect": {"model": "constant", "beta": 0.8}},
        {"id": 1, "a": [3.0, -1.0], "b": [3.0, 2.0], "reflect": {"model": "fresnel", "eps_r": 5.0}},
    ],
    "array": {"n_elements": 8, "spacing": 0.02, "origin": [0.0, 0.0], "orientation_deg": 0.0},
    "ofdm": {"fc": 7.5e9, "bandwidth": 1.0e8, "delta_f": 1.2e5, "m_subcarriers": 4},
    "signal": {"tx_power_dbm": 23.0, "noise_figure_db": 7.0, "temperature_k": 290.0},
    "tracker": {"v_max": 10.0, "delta_t": 0.05, "margin": 0.5, "grid_spacing": 0.1},
    "trajectory": {"waypoints": [[0.0, 2.0], [1.5, 2.5], [0.5, 3.0]], "speed": 8.0},
}


def write_scenario(tmp_path, mutate=None, name="scene.json"):
    data = json.loads(json.dumps(BASE))
    if mutate:
        mutate(data)
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def read_csv(path):
    lines = Path(path).read_text().strip().split("\n")
    assert lines[0].startswith("# schema_version=")
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return header, rows


class TestScenarioErrors:
    def test_unknown_top_level_key(self, tmp_path, capsys):
        p = write_scenario(tmp_path, lambda d: d.update(extra_knob=1))
        assert main(["track", p, "--out", str(tmp_path / "o.csv")]) == 2
        assert "extra_knob" in capsys.readouterr().err

    def test_unknown_nested_key(self, tmp_path, capsys):
        p = write_scenario(tmp_path, lambda d: d["tracker"].update(momentum=0.9))
        assert main(["track", p, "--out", str(tmp_path / "o.csv")]) == 2
        assert "momentum" in capsys.readouterr().err

    def test_missing_key(self, tmp_path, capsys):
        def drop(d):
            del d["ofdm"]["fc"]
        p = write_scenario(tmp_path, drop)
        assert main(["track", p, "--out", str(tmp_path / "o.csv")]) == 2
        assert "fc" in capsys.readouterr().err

    def test_bad_reflect_model(self, tmp_path, capsys):
        p = write_scenario(tmp_path, lambda d: d["surfaces"][0]["reflect"].update(model="mirror"))
        assert main(["track", p, "--out", str(tmp_path / "o.csv")]) == 2
        assert "mirror" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path, capsys):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        assert main(["track", str(p), "--out", str(tmp_path / "o.csv")]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["track", str(tmp_path / "absent.json"), "--out", str(tmp_path / "o.csv")]) == 2

    def test_infeasible_grid_exit_3(self, tmp_path, capsys):
        p = write_scenario(tmp_path, lambda d: d["tracker"].update(grid_spacing=2.0))
        assert main(["track", p, "--out", str(tmp_path / "o.csv")]) == 3

    def test_speed_above_vmax_rejected(self, tmp_path, capsys):
        p = write_scenario(tmp_path, lambda d: d["trajectory"].update(speed=12.0))
        assert main(["track", p, "--out", str(tmp_path / "o.csv")]) == 2

    def test_wrong_schema_version(self, tmp_path):
        p = write_scenario(tmp_path, lambda d: d.update(schema_version=9))
        assert main(["track", p, "--out", str(tmp_path / "o.csv")]) == 2


class TestTrackCommand:
    def test_csv_schema_and_roundtrip(self, tmp_path):
        p = write_scenario(tmp_path)
        out = tmp_path / "track.csv"
        assert main(["track", p, "--eta", "1", "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == ["step", "truth_x", "truth_y", "est_x", "est_y",
                          "error_m", "objective", "blind", "elapsed_s"]
        assert len(rows) >= 2
        for row in rows:
            err = float(row[5])
            dx = float(row[1]) - float(row[3])
            dy = float(row[2]) - float(row[4])
            # 9-significant-digit formatting round-trips to ~1e-9 relative
            assert math.hypot(dx, dy) == pytest.approx(err, abs=2e-8)
            assert row[7] in ("0", "1")

    def test_deterministic_bytes_with_zero_elapsed(self, tmp_path):
        p = write_scenario(tmp_path)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["track", p, "--seed", "5", "--zero-elapsed", "--out", str(out1)]) == 0
        assert main(["track", p, "--seed", "5", "--zero-elapsed", "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_zero_noise_on_lattice_exact(self, tmp_path):
        def lattice(d):
            d["trajectory"]["waypoints"] = [[0.0, 2.0], [0.0, 4.0]]
            d["trajectory"]["speed"] = 8.0
            d["tracker"]["grid_spacing"] = 0.05
        p = write_scenario(tmp_path, lattice)
        out = tmp_path / "zn.csv"
        assert main(["track", p, "--zero-noise", "--out", str(out)]) == 0
        _, rows = read_csv(out)
        # straight vertical walk in 0.4 m = 8 grid-cell hops stays exact up
        # to the float drift of waypoint resampling at the snapped end point
        for row in rows:
            assert float(row[5]) <= 1e-12

    def test_model_flag(self, tmp_path):
        p = write_scenario(tmp_path)
        assert main(["track", p, "--model", "ff", "--out", str(tmp_path / "ff.csv")]) == 0


class TestRmseMapCommand:
    def test_schema_and_zero_noise(self, tmp_path):
        p = write_scenario(tmp_path)
        out = tmp_path / "map.csv"
        code = main(["rmse-map", p, "--eta", "1", "--trials", "2", "--cell", "2.0",
                     "--zero-noise", "--out", str(out)])
        assert code == 0
        header, rows = read_csv(out)
        assert header == ["x", "y", "rmse_m", "trackable"]
        seen_untrackable = False
        for row in rows:
            if row[3] == "0":
                assert row[2] == ""
                seen_untrackable = False or seen_untrackable
            else:
                assert float(row[2]) == 0.0  # zero noise, truth on the lattice

    def test_eta_zero_runs(self, tmp_path):
        p = write_scenario(tmp_path)
        out = tmp_path / "map0.csv"
        assert main(["rmse-map", p, "--eta", "0", "--trials", "2", "--cell", "2.0",
                     "--out", str(out)]) == 0

    def test_bad_eta_rejected(self, tmp_path):
        p = write_scenario(tmp_path)
        assert main(["rmse-map", p, "--eta", "1.5", "--trials", "1",
                     "--out", str(tmp_path / "x.csv")]) == 2


class TestSweepCommand:
    def test_schema_rows(self, tmp_path):
        p = write_scenario(tmp_path)
        out = tmp_path / "sweep.csv"
        assert main(["sweep-eta", p, "--draws", "2", "--cell", "3.0",
                     "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == ["eta", "model", "rmse_m", "n_draws"]
        etas = sorted({float(r[0]) for r in rows})
        assert etas == [0.0, 0.5, 1.0]  # two surfaces
        assert {r[1] for r in rows} == {"nf", "ff"}
        assert all(r[3] == "2" for r in rows)

    def test_single_model_selection(self, tmp_path):
        p = write_scenario(tmp_path)
        out = tmp_path / "sweep_nf.csv"
        assert main(["sweep-eta", p, "--draws", "1", "--models", "nf", "--cell", "3.0",
                     "--out", str(out)]) == 0
        _, rows = read_csv(out)
        assert {r[1] for r in rows} == {"nf"}

    def test_bad_model_rejected(self, tmp_path):
        p = write_scenario(tmp_path)
        assert main(["sweep-eta", p, "--models", "nf,xx",
                     "--out", str(tmp_path / "x.csv")]) == 2


class TestBenchCommand:
    def test_report_fields(self, tmp_path, capsys):
        p = write_scenario(tmp_path)
        assert main(["bench", p]) == 0
        out = capsys.readouterr().out
        assert "mean step time" in out
        assert "grid points" in out

    def test_grid_density_scaling(self, tmp_path, capsys):
        p1 = write_scenario(tmp_path, name="a.json")
        p2 = write_scenario(tmp_path, lambda d: d["tracker"].update(grid_spacing=0.05),
                            name="b.json")
        main(["bench", p1])
        n1 = int([l for l in capsys.readouterr().out.splitlines() if "grid points" in l][0].split()[-1])
        main(["bench", p2])
        n2 = int([l for l in capsys.readouterr().out.splitlines() if "grid points" in l][0].split()[-1])
        # halving the spacing quadruples the lattice density
        assert n2 == pytest.approx(4 * n1, rel=0.05)


class TestThreadsFlag:
    def test_thread_count_invariance(self, tmp_path):
        p = write_scenario(tmp_path)
        out1, out2 = tmp_path / "t1.csv", tmp_path / "t2.csv"
        assert main(["--threads", "1", "track", p, "--zero-elapsed", "--out", str(out1)]) == 0
        assert main(["--threads", "2", "track", p, "--zero-elapsed", "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_env_var_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NF_TRACKER_THREADS", "1")
        p = write_scenario(tmp_path)
        assert main(["track", p, "--out", str(tmp_path / "env.csv")]) == 0
