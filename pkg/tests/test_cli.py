import json
import subprocess
import sys

import pytest

from lscdsim import cli
from lscdsim.sweep import CSV_HEADER

FAST = {"reps": 200, "cycle_reps": 2000, "w_grid_size": 9}


@pytest.fixture
def config(tmp_path):
    def make(**kw):
        p = tmp_path / f"cfg{len(list(tmp_path.iterdir()))}.json"
        p.write_text(json.dumps(kw))
        return str(p)

    return make


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestConfig:
    def test_defaults(self):
        cfg = cli.load_config({})
        assert (cfg.tau, cfg.e_sense, cfg.e_move, cfg.e_budget, cfg.r_a) == (3, 1.0, 4.0, 3.0, 500.0)
        assert cfg.model_a.to_spec() == {"family": "gaussian", "mu0": 0.0, "mu1": 2.0, "sigma": 1.0}

    @pytest.mark.parametrize("data,path", [
        ({"gamma_a": 0}, "gamma_a"),
        ({"gamma_b": -2.0}, "gamma_b"),
        ({"n_a": 0}, "n_a"),
        ({"tau": 1.5}, "tau"),
        ({"seed": -1}, "seed"),
        ({"seed": 2**64}, "seed"),
        ({"model_b": {"family": "gaussian", "mu0": 0, "mu1": 2}}, "model_b"),
        ({"model_a": {"family": "gaussian", "mu0": 1, "mu1": 1, "sigma": 1}}, "model_a"),
        ({"model_a": {"family": "gaussian", "mu0": 0, "mu1": 2, "sigma": 1, "extra": 1}}, "model_a"),
        ({"gamma": 4}, "gamma"),
    ])
    def test_errors_name_the_field(self, data, path):
        with pytest.raises(cli.ConfigError) as exc:
            cli.load_config(data)
        assert exc.value.path == path
        assert path in str(exc.value)

    def test_infinite_budget(self):
        assert cli.load_config({"e_budget": None}).e_budget == float("inf")


class TestSimulate:
    def test_deterministic(self, capsys, config):
        cfg = config(gamma_a=3.0, gamma_b=3.0)
        a = run(capsys, "simulate", "--config", cfg, "--scenario", "never,never", "--seed", "7")
        b = run(capsys, "simulate", "--config", cfg, "--scenario", "never,never", "--seed", "7")
        assert a[0] == 0 and a == b
        assert json.loads(a[1])["alarm_time"] is not None

    def test_change_reports_delay(self, capsys):
        code, out, _ = run(capsys, "simulate", "--scenario", "0,never", "--start", "A")
        d = json.loads(out)
        assert code == 0
        assert d["detection_delay"] is not None or "notice" in d

    def test_horizon_notice(self, capsys, config):
        code, out, _ = run(capsys, "simulate", "--config", config(gamma_a=8.0, gamma_b=8.0, horizon=10))
        d = json.loads(out)
        assert code == 0 and d["censored"] and "notice" in d

    def test_bad_gamma_exits_2(self, capsys, config):
        code, _, err = run(capsys, "simulate", "--config", config(gamma_a=-1))
        assert code == 2 and "gamma_a" in err

    def test_bad_json_exits_2(self, capsys, tmp_path):
        p = tmp_path / "x.json"
        p.write_text("{not json")
        assert run(capsys, "simulate", "--config", str(p))[0] == 2

    def test_bad_scenario_exits_2(self, capsys):
        code, _, err = run(capsys, "simulate", "--scenario", "1,2")
        assert code == 2 and "scenario" in err

    def test_trace(self, capsys, tmp_path):
        out = tmp_path / "trace.csv"
        code, _, _ = run(capsys, "simulate", "--reps", "5", "--trace", "--out", str(out))
        lines = out.read_text().splitlines()
        assert code == 0 and lines[0] == "run_id,alarm_time,alarm_location,delay,energy,false_alarm"
        assert len(lines) == 6

    def test_seed_changes_output(self, capsys):
        a = run(capsys, "simulate", "--seed", "1")[1]
        b = run(capsys, "simulate", "--seed", "2")[1]
        assert a != b


class TestEstimate:
    def test_fields_and_determinism(self, capsys, config):
        cfg = config(gamma_a=3.0, gamma_b=3.0, **FAST)
        code, out, _ = run(capsys, "estimate", "--config", cfg)
        assert code == 0
        d = json.loads(out)
        for key in ("arl_a", "arl_b", "energy_rate"):
            assert {"mean", "se", "reps", "ci_lo", "ci_hi"} <= set(d[key])
        assert d["wadd_a"]["value"] > 0 and d["feasible"] in {"Feasible", "EnergyViolation", "ArlViolation", "BothViolation"}
        assert run(capsys, "estimate", "--config", cfg)[1] == out

    def test_csv_table(self, capsys, config):
        code, out, _ = run(capsys, "estimate", "--config", config(gamma_a=3.0, gamma_b=3.0, **FAST), "--format", "csv")
        assert code == 0 and out.splitlines()[0] == "quantity,location,mean,se,reps,seed"

    def test_censoring_exits_3(self, capsys, config):
        code, _, err = run(capsys, "estimate", "--config", config(gamma_a=8.0, gamma_b=8.0, horizon=100, **FAST))
        assert code == 3 and "CensoringError" in err


class TestBounds:
    def test_symmetric_value(self, capsys, config):
        code, out, _ = run(capsys, "bounds", "--config", config(gamma_a=5, gamma_b=5, n_a=1, n_b=1, tau=0))
        rows = {tuple(l.split(",")[:2]): l.split(",")[2] for l in out.splitlines()[1:]}
        assert code == 0 and rows[("A", "arl_lower")].startswith("148.413")
        assert float(rows[("A", "arl_lower")]) <= float(rows[("A", "arl_upper")])
        assert any(k[0] == "flag" for k in rows)

    def test_json(self, capsys):
        code, out, _ = run(capsys, "bounds", "--format", "json")
        d = json.loads(out)
        assert code == 0 and d["A"]["flags"] and d["B"]["arl_lower"] <= d["B"]["arl_upper"]

    def test_unequal_switch_counts_exit_3(self, capsys, config):
        assert run(capsys, "bounds", "--config", config(n_a=1, n_b=3))[0] == 3


class TestSweepAndReport:
    GRID = "gamma=3:4:1;n=1,3"

    def test_sweep_outputs(self, capsys, config, tmp_path):
        cfg = config(**FAST)
        out = tmp_path / "s.csv"
        code, _, _ = run(capsys, "sweep", "--config", cfg, "--grid", self.GRID, "--out", str(out))
        lines = out.read_text().splitlines()
        assert code == 0 and lines[0] == CSV_HEADER and len(lines) == 1 + 8
        summary = json.loads(out.with_suffix(".summary.json").read_text())
        assert summary["records"] == 8
        assert (summary["best_feasible"] is not None) == (summary["counts"]["Feasible"] > 0)

        out2 = tmp_path / "s2.csv"
        run(capsys, "sweep", "--config", cfg, "--grid", self.GRID, "--out", str(out2), "--threads", "4")
        assert out2.read_bytes() == out.read_bytes()

        code, rep, _ = run(capsys, "report", "--input", str(out))
        d = json.loads(rep)
        assert code == 0 and len(d["feasibility"]) == 8
        assert set(d) >= {"wadd_a_vs_gamma_a", "wadd_a_vs_gamma_b", "energy_vs_n"}

    def test_vacuous_constraints_feasible(self, capsys, config):
        cfg = config(r_a=0, r_b=0, e_budget=None, **FAST)
        code, out, err = run(capsys, "sweep", "--config", cfg, "--grid", "gamma=3;n=3")
        assert code == 0 and out.strip().endswith(",Feasible")
        assert json.loads(err)["best_feasible"]["class"] == "Feasible"

    def test_bad_grid_exits_2(self, capsys):
        code, _, err = run(capsys, "sweep", "--grid", "gamma=1")
        assert code == 2 and "grid" in err

    def test_report_rejects_foreign_csv(self, capsys, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("a,b\n1,2\n")
        assert run(capsys, "report", "--input", str(p))[0] == 3


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "lscdsim.cli", "bounds"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("location,quantity,value")
