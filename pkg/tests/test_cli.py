import json

import numpy as np
import pytest

from skinforge.cli import main

BASE_CONFIG = {
    "frequency_ghz": 26.0,
    "pitch_mm": 3.7,
    "table": "surrogate",
    "p": 8,
    "q": 8,
    "seed": 0,
    "output_dir": "out",
    "figures": False,
}


def write_config(tmp_path, name="config.json", **extra):
    doc = dict(BASE_CONFIG)
    doc.update(extra)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def run(argv):
    return main([str(a) for a in argv])


class TestExitCodes:
    def test_unknown_config_key(self, tmp_path):
        cfg = write_config(tmp_path, pizza=1)
        assert run(["synthesize", "--config", cfg]) == 2

    def test_receiver_in_wrong_halfspace(self, tmp_path):
        cfg = write_config(tmp_path, receiver={"theta_deg": 60.0})
        assert run(["synthesize", "--config", cfg,
                    "--out", tmp_path / "o"]) == 2

    def test_ring_exceeds_pitch(self, tmp_path):
        cfg = write_config(tmp_path,
                           feasibility={"d1_min_mm": 0.9, "d1_max_mm": 2.0})
        assert run(["synthesize", "--config", cfg]) == 2

    def test_missing_table_file(self, tmp_path):
        cfg = write_config(tmp_path, table="missing.csv")
        assert run(["atom", "--config", cfg, "--out", tmp_path / "o"]) == 3

    def test_malformed_table_reports_line(self, tmp_path, capsys):
        bad = tmp_path / "table.csv"
        bad.write_text("d1_m,mag_te,phase_te_deg,mag_tm,phase_tm_deg\n"
                       "0.0009,0.9,110,0.9,110\n0.0016,x,0,0.9,0\n")
        cfg = write_config(tmp_path, table="table.csv")
        assert run(["atom", "--config", cfg, "--out", tmp_path / "o"]) == 3
        assert "line 3" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert run(["atom", "--config", tmp_path / "nope.json"]) == 3

    def test_bad_layout_file(self, tmp_path):
        cfg = write_config(tmp_path)
        layout = tmp_path / "layout.json"
        layout.write_text("{}")
        assert run(["pattern", "--config", cfg, "--layout", layout,
                    "--out", tmp_path / "o"]) == 3

    def test_success(self, tmp_path):
        cfg = write_config(tmp_path)
        assert run(["synthesize", "--config", cfg,
                    "--out", tmp_path / "o"]) == 0


class TestBundledConfig:
    def test_benchmark_resolves_from_package(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert run(["synthesize", "--config", "benchmark.json", "--p", "6",
                    "--q", "6", "--out", "o", "--no-figures"]) == 0
        doc = json.loads((tmp_path / "o" / "layout.json").read_text())
        assert doc["p"] == 6
        assert doc["spec"]["receiver"]["theta_deg"] == 180.0

    def test_disk_config_wins_over_bundled(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        write_config(tmp_path, "benchmark.json", p=4, q=4)
        assert run(["synthesize", "--config", "benchmark.json",
                    "--out", "o"]) == 0
        doc = json.loads((tmp_path / "o" / "layout.json").read_text())
        assert doc["p"] == 4


class TestOverrides:
    def test_receiver_flag(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "o"
        assert run(["synthesize", "--config", cfg, "--rx-theta-deg", "160",
                    "--rx-phi-deg", "10", "--out", out]) == 0
        doc = json.loads((out / "layout.json").read_text())
        assert doc["spec"]["receiver"]["theta_deg"] == 160.0
        assert doc["spec"]["receiver"]["phi_deg"] == 10.0

    def test_method_flag(self, tmp_path):
        cfg = write_config(tmp_path, p=3, q=3,
                           optimizer={"swarm_size": 8, "max_iterations": 5,
                                      "stall_iterations": 5})
        out = tmp_path / "o"
        assert run(["synthesize", "--config", cfg, "--method", "pso",
                    "--out", out]) == 0
        assert (out / "convergence.csv").exists()
        doc = json.loads((out / "layout.json").read_text())
        assert doc["spec"]["method"] == "pso"
        assert doc["seed"] == 0


class TestDeterminism:
    def _synth(self, tmp_path, out, method):
        cfg = write_config(tmp_path, p=4, q=4, method=method,
                           receiver={"theta_deg": 160.0},
                           optimizer={"swarm_size": 10, "max_iterations": 20,
                                      "stall_iterations": 20})
        assert run(["synthesize", "--config", cfg, "--out", out]) == 0

    @pytest.mark.parametrize("method", ["percell", "pso"])
    def test_layout_bytes_identical(self, tmp_path, method):
        self._synth(tmp_path, tmp_path / "a", method)
        self._synth(tmp_path, tmp_path / "b", method)
        a = (tmp_path / "a" / "layout.json").read_bytes()
        b = (tmp_path / "b" / "layout.json").read_bytes()
        assert a == b
        if method == "pso":
            assert (tmp_path / "a" / "convergence.csv").read_bytes() == \
                (tmp_path / "b" / "convergence.csv").read_bytes()

    def test_pattern_bytes_identical(self, tmp_path):
        cfg = write_config(tmp_path)
        for out in ("a", "b"):
            assert run(["pattern", "--config", cfg, "--baseline", "glass",
                        "--samples", "181", "--out", tmp_path / out]) == 0
        assert (tmp_path / "a" / "pattern.csv").read_bytes() == \
            (tmp_path / "b" / "pattern.csv").read_bytes()

    def test_sweep_bytes_identical(self, tmp_path):
        cfg = write_config(tmp_path, p=6, q=6)
        for out in ("a", "b"):
            assert run(["sweep", "--config", cfg, "--kind", "angle",
                        "--angles", "180,160", "--out", tmp_path / out]) == 0
        assert (tmp_path / "a" / "angle_sweep.csv").read_bytes() == \
            (tmp_path / "b" / "angle_sweep.csv").read_bytes()


class TestAtomCommand:
    def test_outputs(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "o"
        assert run(["atom", "--config", cfg, "--out", out]) == 0
        metrics = json.loads((out / "atom_metrics.json").read_text())
        assert metrics["phase_coverage_te_deg"] == pytest.approx(220.0, abs=0.5)
        assert metrics["min_magnitude_te_db"] == pytest.approx(-7.7, abs=0.05)
        assert metrics["mesh_fill_factor"] == pytest.approx(0.1176, abs=5e-4)
        lines = (out / "atom_response.csv").read_text().splitlines()
        assert lines[0] == "d1_m,mag_te,phase_te_deg,mag_tm,phase_tm_deg"
        tlines = (out / "transparency_vs_d1.csv").read_text().splitlines()
        assert tlines[0] == "d1_m,transmittance"
        trans = np.array([float(l.split(",")[1]) for l in tlines[1:]])
        assert trans.min() > 0.80


class TestPatternCommand:
    def test_ems_vs_baselines(self, tmp_path):
        cfg = write_config(tmp_path, p=10, q=10)
        synth_out = tmp_path / "s"
        assert run(["synthesize", "--config", cfg, "--out", synth_out]) == 0
        peaks = {}
        for name, extra in [("ems", ["--layout", synth_out / "layout.json"]),
                            ("glass", ["--baseline", "glass"]),
                            ("empty", ["--baseline", "empty"])]:
            out = tmp_path / name
            assert run(["pattern", "--config", cfg, *extra, "--out", out]) == 0
            peaks[name] = json.loads((out / "metrics.json").read_text())[
                "peak_power_db"]
        assert peaks["glass"] < peaks["ems"] < peaks["empty"]

    def test_uv_cut(self, tmp_path):
        cfg = write_config(tmp_path, p=10, q=10,
                           receiver={"theta_deg": 140.0, "phi_deg": 30.0})
        synth_out = tmp_path / "s"
        assert run(["synthesize", "--config", cfg, "--out", synth_out]) == 0
        out = tmp_path / "uv"
        assert run(["pattern", "--config", cfg, "--layout",
                    synth_out / "layout.json", "--cut", "uv", "--samples",
                    "61", "--out", out]) == 0
        doc = json.loads((out / "metrics.json").read_text())
        assert doc["peak_u"] == pytest.approx(0.5567, abs=0.04)
        assert doc["peak_v"] == pytest.approx(0.3214, abs=0.04)

    def test_layout_pitch_mismatch(self, tmp_path):
        cfg = write_config(tmp_path)
        synth_out = tmp_path / "s"
        assert run(["synthesize", "--config", cfg, "--out", synth_out]) == 0
        cfg2 = write_config(tmp_path, "config2.json", pitch_mm=4.0)
        assert run(["pattern", "--config", cfg2, "--layout",
                    synth_out / "layout.json", "--out", tmp_path / "o"]) == 3


class TestFigures:
    def test_rendered_by_default(self, tmp_path):
        cfg = write_config(tmp_path, figures=True)
        out = tmp_path / "o"
        assert run(["synthesize", "--config", cfg, "--out", out]) == 0
        assert (out / "layout.png").exists()
        pat = tmp_path / "p"
        assert run(["pattern", "--config", cfg, "--baseline", "empty",
                    "--samples", "181", "--out", pat]) == 0
        assert (pat / "pattern.png").exists()

    def test_no_figures_flag(self, tmp_path):
        cfg = write_config(tmp_path, figures=True)
        out = tmp_path / "o"
        assert run(["synthesize", "--config", cfg, "--no-figures",
                    "--out", out]) == 0
        assert not (out / "layout.png").exists()


class TestSweepCommand:
    def test_aperture_rows_in_order(self, tmp_path):
        cfg = write_config(tmp_path, receiver={"theta_deg": 140.0})
        out = tmp_path / "o"
        assert run(["sweep", "--config", cfg, "--kind", "aperture",
                    "--sizes", "8,6,10", "--out", out]) == 0
        rows = (out / "aperture_sweep.csv").read_text().splitlines()
        assert rows[0] == "p,xi_db,xi_glass_db,xi_empty_db"
        assert [r.split(",")[0] for r in rows[1:]] == ["8", "6", "10"]

    def test_angle_sweep_selfreference(self, tmp_path):
        cfg = write_config(tmp_path, p=6, q=6)
        out = tmp_path / "o"
        assert run(["sweep", "--config", cfg, "--kind", "angle",
                    "--angles", "180,150", "--threads", "2",
                    "--out", out]) == 0
        rows = (out / "angle_sweep.csv").read_text().splitlines()
        first = rows[1].split(",")
        assert float(first[0]) == 180.0
        assert float(first[2]) == 0.0
