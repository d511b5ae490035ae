"""End-to-end command-line runs: configs in, CSV plus sidecar out, exit codes."""

import json
import math

import numpy as np
import pytest

from relclock import cli

from conftest import read_csv, write_config

ROOT2 = 0.7071067811865476


def run_cli(tmp_path, command, doc, name="out.csv", extra=()):
    cfg = write_config(tmp_path / f"{name}.config.json", doc)
    out = tmp_path / name
    rc = cli.main([command, "--config", cfg, "--out", str(out), *extra])
    return rc, out


def sidecar(out_path):
    side = out_path.with_suffix(".json")
    return json.loads(side.read_text())


def unitary_doc(**over):
    doc = {
        "clock": {"d": 8},
        "system": {"levels": [0.0, 3.0]},
        "coupling": {"g": 0.02},
        "grid": {"t_max": 1.0, "dt": 0.1},
        "method": "unitary",
        "state": {"psi0": [ROOT2, ROOT2]},
    }
    doc.update(over)
    return doc


class TestClockBench:
    def test_scaling_table(self, tmp_path):
        rc, out = run_cli(
            tmp_path, "clock-bench", {"d_values": [8, 16, 32, 64]}
        )
        assert rc == 0
        header, rows = read_csv(str(out))
        assert header == ["d", "sigma", "eps_evol", "eps_prime", "eps_comm", "bound"]
        assert len(rows) == 4
        assert [int(r[0]) for r in rows] == [8, 16, 32, 64]
        eps_prime = [r[3] for r in rows]
        assert all(a > b for a, b in zip(eps_prime, eps_prime[1:]))
        # d=8 row sits well above the float64 floor
        assert rows[0][2] == pytest.approx(0.0016264842860318227, rel=1e-9)
        assert rows[0][3] == pytest.approx(0.004458997066352416, rel=1e-9)
        assert rows[0][4] == pytest.approx(0.029224206299877615, rel=1e-9)
        assert rows[0][5] == pytest.approx(0.02621956786329315, rel=1e-9)

    def test_small_errors_come_from_the_high_precision_path(self, tmp_path):
        # at d=64 every error is under the 1e-12 float64 switch, so the
        # cells must carry the extended-precision values, not rounding noise
        rc, out = run_cli(tmp_path, "clock-bench", {"d_values": [64]})
        assert rc == 0
        _, rows = read_csv(str(out))
        assert rows[0][2] == pytest.approx(7.550119963888683e-23, rel=1e-12)
        assert rows[0][3] == pytest.approx(2.427438557690777e-22, rel=1e-12)
        assert rows[0][4] == pytest.approx(1.3114303055333146e-20, rel=1e-12)
        assert rows[0][5] == pytest.approx(3.0376719031789743e-21, rel=1e-9)

    def test_numeric_eval_time_equals_the_half_tick_default(self, tmp_path):
        rc_a, out_a = run_cli(
            tmp_path, "clock-bench", {"d_values": [8]}, name="a.csv"
        )
        # half a tick at d=8, omega=1 is pi/8 of physical time
        rc_b, out_b = run_cli(
            tmp_path, "clock-bench",
            {"d_values": [8], "eval_time": math.pi / 8}, name="b.csv",
        )
        assert rc_a == rc_b == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_empty_dimension_list_is_a_config_error(self, tmp_path):
        rc, _ = run_cli(tmp_path, "clock-bench", {"d_values": []})
        assert rc == 2

    def test_underflowing_window_is_a_numerical_error(self, tmp_path):
        rc, _ = run_cli(
            tmp_path, "clock-bench", {"d_values": [8], "sigma": 0.01}
        )
        assert rc == 3

    def test_sidecar_echoes_the_request(self, tmp_path):
        rc, out = run_cli(tmp_path, "clock-bench", {"d_values": [8, 16]})
        assert rc == 0
        doc = sidecar(out)
        assert doc["config"]["d_values"] == [8, 16]
        assert doc["config"]["sigma"] == "sqrt_d"
        assert doc["rows"] == 2


class TestEvolve:
    def test_repeat_runs_are_byte_identical(self, tmp_path):
        rc_a, out_a = run_cli(tmp_path, "evolve", unitary_doc(), name="a.csv")
        rc_b, out_b = run_cli(tmp_path, "evolve", unitary_doc(), name="b.csv")
        assert rc_a == rc_b == 0
        assert out_a.read_bytes() == out_b.read_bytes()
        assert out_a.with_suffix(".json").read_bytes() == out_b.with_suffix(
            ".json"
        ).read_bytes()

    def test_unitary_run_reports_unit_purity(self, tmp_path):
        rc, out = run_cli(tmp_path, "evolve", unitary_doc())
        assert rc == 0
        doc = sidecar(out)
        assert doc["summary"]["final_purity"] == pytest.approx(1.0, abs=1e-12)
        assert doc["summary"]["max_trace_defect"] <= 1e-12
        assert doc["summary"]["points"] == 11

    def test_oracle_of_a_degenerate_system_is_flat(self, tmp_path):
        doc = {
            "clock": {"d": 8, "sigma": 2.0},
            "system": {"levels": [0.0, 0.0]},
            "coupling": {"g": 0.0},
            "grid": {"t_max": 4.0, "dt": 0.5},
            "method": "oracle",
            "state": {
                "global": {"type": "history", "psi0": [ROOT2, ROOT2]}
            },
        }
        rc, out = run_cli(tmp_path, "evolve", doc)
        assert rc == 0
        header, rows = read_csv(str(out))
        re00 = header.index("re_rho_00")
        for row in rows:
            assert row[re00] == pytest.approx(0.5, abs=1e-12)
            assert row[header.index("oracle_norm")] > 0.01
        assert sidecar(out)["summary"]["min_oracle_norm"] > 0.01

    def test_unknown_key_is_a_config_error(self, tmp_path):
        rc, _ = run_cli(
            tmp_path, "evolve", unitary_doc(extra_knob=1)
        )
        assert rc == 2

    def test_vanishing_conditioned_norm_exits_4(self, tmp_path):
        doc = {
            "clock": {"d": 64, "sigma": 8.0},
            "system": {"levels": [0.0]},
            "coupling": {"g": 0.0},
            "grid": {"t_max": 1.0, "dt": 0.5},
            "method": "oracle",
            "state": {
                "global": {"type": "stationary", "coefficients": [1.0]}
            },
        }
        rc, _ = run_cli(tmp_path, "evolve", doc)
        assert rc == 4

    def test_state_file_round_trip(self, tmp_path):
        from relclock import ClockModel, SystemModel, history_state, save_state

        clock = ClockModel(d=8, omega=1.0)
        sys = SystemModel.from_energies([0.0, -1.0])
        hist = history_state(
            sys, clock, np.array([1.0, 1.0]) / math.sqrt(2)
        )
        spath = tmp_path / "seed.json"
        save_state(hist, str(spath))
        doc = {
            "clock": {"d": 8},
            "system": {"levels": [0.0, -1.0]},
            "coupling": {"g": 0.0},
            "grid": {"t_max": 1.0, "dt": 0.5},
            "method": "oracle",
            "state": {"global": {"type": "file", "path": str(spath)}},
        }
        rc, out = run_cli(tmp_path, "evolve", doc)
        assert rc == 0
        # same file against a clock of the wrong dimension must refuse
        doc_bad = json.loads(json.dumps(doc))
        doc_bad["clock"]["d"] = 16
        rc_bad, _ = run_cli(tmp_path, "evolve", doc_bad, name="bad.csv")
        assert rc_bad == 2

    def test_echoed_config_reproduces_the_run(self, tmp_path):
        rc, out = run_cli(tmp_path, "evolve", unitary_doc(), name="a.csv")
        assert rc == 0
        echo = sidecar(out)["config"]
        rc2, out2 = run_cli(tmp_path, "evolve", echo, name="echo.csv")
        assert rc2 == 0
        assert out.read_bytes() == out2.read_bytes()


class TestCompare:
    def test_identical_runs(self, tmp_path):
        doc = {"run_a": unitary_doc(), "run_b": unitary_doc()}
        rc, out = run_cli(tmp_path, "compare", doc)
        assert rc == 0
        header, rows = read_csv(str(out))
        assert header == ["tau", "trace_distance", "fidelity"]
        for row in rows:
            assert row[1] <= 1e-12
            assert row[2] == pytest.approx(1.0, abs=1e-9)
        summary = sidecar(out)["summary"]
        assert summary["max_trace_distance"] <= 1e-12
        assert summary["min_fidelity"] >= 1 - 1e-9

    def test_integrator_branches_differ_by_truncation_only(self, tmp_path):
        run_a = unitary_doc()
        run_b = unitary_doc(integrator={"method": "rk4"})
        rc, out = run_cli(tmp_path, "compare", {"run_a": run_a, "run_b": run_b})
        assert rc == 0
        summary = sidecar(out)["summary"]
        assert 0 < summary["max_trace_distance"] <= 1e-4

    def test_grid_mismatch_is_a_config_error(self, tmp_path):
        run_b = unitary_doc(grid={"t_max": 1.0, "dt": 0.2})
        rc, _ = run_cli(
            tmp_path, "compare", {"run_a": unitary_doc(), "run_b": run_b}
        )
        assert rc == 2


class TestSweep:
    def sweep_g_doc(self):
        return {
            "axis": "g",
            "values": [0.02, 0.01],
            "reference": "oracle",
            "run": {
                "clock": {"d": 16, "omega": 2 * math.pi / 16},
                "system": {"dressed_levels": [7, 9]},
                "coupling": {"g": 0.01},
                "grid": {"t_max": 2.0, "dt": 0.1},
                "method": "unitary",
                "state": {
                    "global": {
                        "type": "stationary", "coefficients": [1.0, 1.0],
                    }
                },
            },
        }

    def test_coupling_axis_shows_quadratic_decay(self, tmp_path):
        # halving g quarters the gap to the exact conditioning run
        rc, out = run_cli(tmp_path, "sweep", self.sweep_g_doc())
        assert rc == 0
        header, rows = read_csv(str(out))
        assert header == ["axis", "value", "err", "ratio"]
        assert rows[0][2] == pytest.approx(0.010336479349407339, rel=1e-6)
        assert rows[1][2] == pytest.approx(0.0023633320925430016, rel=1e-6)
        assert math.isnan(rows[0][3])
        assert rows[1][3] == pytest.approx(4.373688903908989, rel=1e-6)
        assert rows[1][3] >= 2.0

    def test_step_axis_shows_fourth_order_decay(self, tmp_path):
        doc = {
            "axis": "dt",
            "values": [0.01, 0.005],
            "reference": "closed-form",
            "run": unitary_doc(grid={"t_max": 2.0, "dt": 0.1}),
        }
        rc, out = run_cli(tmp_path, "sweep", doc)
        assert rc == 0
        _, rows = read_csv(str(out))
        assert 8.0 <= rows[1][3] <= 32.0

    def test_plain_sweep_reports_diagnostics(self, tmp_path):
        doc = {
            "axis": "d",
            "values": [8, 16],
            "run": unitary_doc(),
        }
        rc, out = run_cli(tmp_path, "sweep", doc)
        assert rc == 0
        header, rows = read_csv(str(out))
        assert header == [
            "axis", "value", "final_purity", "max_trace_defect",
            "max_herm_defect",
        ]
        for row in rows:
            assert row[2] == pytest.approx(1.0, abs=1e-12)

    def test_unknown_axis_is_a_config_error(self, tmp_path):
        doc = {"axis": "omega", "values": [1.0], "run": unitary_doc()}
        rc, _ = run_cli(tmp_path, "sweep", doc)
        assert rc == 2

    def test_dimension_axis_requires_integers(self, tmp_path):
        doc = {"axis": "d", "values": [8.5], "run": unitary_doc()}
        rc, _ = run_cli(tmp_path, "sweep", doc)
        assert rc == 2

    def test_parallel_jobs_give_identical_output(self, tmp_path):
        rc_a, out_a = run_cli(
            tmp_path, "sweep", self.sweep_g_doc(), name="serial.csv"
        )
        rc_b, out_b = run_cli(
            tmp_path, "sweep", self.sweep_g_doc(), name="parallel.csv",
            extra=("--jobs", "2"),
        )
        assert rc_a == rc_b == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_oracle_reference_rejects_pure_runs(self, tmp_path):
        doc = {
            "axis": "g",
            "values": [0.01],
            "reference": "oracle",
            "run": unitary_doc(
                method="pure", state={"psi0": [ROOT2, ROOT2]}
            ),
        }
        rc, _ = run_cli(tmp_path, "sweep", doc)
        assert rc == 2
