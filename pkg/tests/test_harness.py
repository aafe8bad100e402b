import csv
import dataclasses
import io
import json

import numpy as np
import pytest

from robust_irs.harness.cli import main
from robust_irs.harness.config import (SWEEP_PARAMS, ConfigError, ExperimentConfig, apply_overrides,
                                       from_dict, load_config)
from robust_irs.harness.experiment import (SchemeResult, TrialRecord, aggregate, run_sweep,
                                           run_trial, trial_seed)
from robust_irs.harness.export import COLUMNS, ExportError, export, to_csv, to_json

SMALL = ["system.N=8", "experiment.trials=3"]


def small(*extra):
    return load_config(overrides=SMALL + list(extra))


def _strip(rec):
    return dataclasses.replace(rec, wall_time=0.0)


class TestConfig:
    def test_defaults(self):
        cfg = load_config()
        assert (cfg.P_dbm, cfg.sigma2_dbm, cfg.c0_db, cfg.M, cfg.N) == (26, -80, -30, 4, 20)
        assert (cfg.alpha_au, cfg.alpha_ai, cfg.alpha_iu) == (3.6, 2.2, 2.2)
        assert cfg.beta_ai_db == 3 and cfg.beta_au_db is None and cfg.beta_iu_db is None
        assert cfg.n_pilots == 21 and cfg.trials == 50

    def test_overrides(self):
        cfg = small("training.N_r=12", "rician_db.beta_iu_db=inf", "reflection.q_a=null")
        assert cfg.N == 8 and cfg.n_pilots == 12 and cfg.q_a is None
        assert cfg.beta_iu_db == float("inf")

    def test_file_and_override_precedence(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("system:\n  N: 12\n  K: 2\n")
        cfg = load_config(path, ["system.K=3"])
        assert cfg.N == 12 and cfg.K == 3 and cfg.M == 4

    @pytest.mark.parametrize("override", [
        "system.N=7",            # not a multiple of irs_ny
        "training.N_r=5",        # fewer pilots than N + 1
        "experiment.trials=0",
        "system.bogus=1",
        "nosection.K=1",
        "sweep.param=sigma2_dbm",
        "reflection.q_theta=-1",
        "training.T0=5",
        "solver_su.bogus=1",
        "solver_mu.c=1.5",
    ])
    def test_invalid(self, override):
        with pytest.raises(ConfigError):
            small(override)

    def test_su_needs_single_user(self):
        with pytest.raises(ConfigError):
            small("system.K=2", "experiment.solver=su")

    def test_bad_override_syntax(self):
        with pytest.raises(ConfigError):
            apply_overrides({}, ["system.N"])
        with pytest.raises(ConfigError):
            apply_overrides({}, ["N=3"])

    def test_invalid_sweep_value(self):
        with pytest.raises(ConfigError, match="sweep value"):
            small("sweep.param=N", "sweep.values=[8, 9]")

    def test_whitelist(self):
        for name in SWEEP_PARAMS:
            assert name in {f.name for f in dataclasses.fields(ExperimentConfig)}

    def test_file_errors(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("system: [1, 2\n")
        with pytest.raises(ConfigError):
            load_config(bad)
        with pytest.raises(OSError):
            load_config(tmp_path / "missing.yaml")
        with pytest.raises(ConfigError):
            from_dict([1, 2])

    def test_sweep_point(self):
        cfg = small("sweep.param=p_u_dbm", "sweep.values=[6, 18]")
        pt = cfg.at(18)
        assert pt.p_u_dbm == 18 and pt.sweep_param is None


class TestTrial:
    def test_seed_derivation(self):
        seeds = {trial_seed(0, s, t) for s in range(3) for t in range(50)}
        assert len(seeds) == 150
        assert all(0 <= s < 2 ** 63 for s in seeds)
        assert trial_seed(7, 1, 2) == trial_seed(7, 1, 2)

    def test_same_seed_identical(self):
        cfg = small("system.K=2")
        assert _strip(run_trial(cfg, 99)) == _strip(run_trial(cfg, 99))

    def test_record_invariants(self):
        rec = run_trial(small(), 5)
        assert set(rec.schemes) == {"proposed", "nonrobust", "no_irs"}
        for res in rec.schemes.values():
            assert res.sum_rate >= 0 and all(r >= 0 for r in res.user_rates)
            assert 0 <= res.eop <= 100
        assert rec.schemes["no_irs"].eop == 100

    @pytest.mark.parametrize("K", [1, 2])
    def test_vanishing_error_limit(self, K):
        cfg = small("training.p_u_dbm=60", f"system.K={K}", "baselines.no_irs=false")
        for seed in range(3):
            rec = run_trial(cfg, seed)
            assert rec.nmse < 1e-4
            rob, non = rec.schemes["proposed"].sum_rate, rec.schemes["nonrobust"].sum_rate
            assert abs(rob - non) <= 0.01 * max(rob, non)

    def test_training_overhead_factor(self):
        raw = run_trial(small(), 11)
        framed = run_trial(small("training.T0=45"), 11)
        factor = (45 - 9) / 45
        for name, res in raw.schemes.items():
            assert framed.schemes[name].sum_rate == res.sum_rate * factor
            assert framed.schemes[name].user_rates == [r * factor for r in res.user_rates]

    def test_random_bcd_single_user_only(self):
        rec = run_trial(small("baselines.random_bcd=true"), 3)
        assert "random_bcd" in rec.schemes
        rec = run_trial(small("baselines.random_bcd=true", "system.K=2"), 3)
        assert "random_bcd" not in rec.schemes

    def test_paired_estimates(self):
        # estimation-only and full trials draw the same channels and training noise
        a = run_trial(small(), 21, schemes=())
        b = run_trial(small(), 21)
        assert a.nmse == b.nmse and a.schemes == {}


def _record(value, rate, nmse=0.1):
    res = SchemeResult(sum_rate=rate, user_rates=[rate], eop=25.0, iterations=4, converged=True)
    return TrialRecord(seed=0, sweep_value=value, nmse=nmse, schemes={"proposed": res})


class TestAggregate:
    def test_constant_metric(self):
        rows = aggregate([_record(None, 0.1) for _ in range(7)])
        by = {(r["scheme"], r["metric"]): r for r in rows}
        assert by["proposed", "sum_rate"]["mean"] == 0.1 and by["proposed", "sum_rate"]["std"] == 0.0
        assert by["proposed", "eop"]["mean"] == 25.0
        assert by["estimation", "nmse"]["n_trials"] == 7

    def test_mean_and_sample_std(self):
        rows = aggregate([_record(1, x) for x in (1.0, 2.0, 4.0)], "N")
        r = next(r for r in rows if r["metric"] == "sum_rate")
        assert r["mean"] == pytest.approx(7 / 3)
        assert r["std"] == pytest.approx(np.std([1, 2, 4], ddof=1))
        assert r["sweep_param"] == "N" and r["sweep_value"] == 1

    def test_single_trial_std_zero(self):
        rows = run_sweep(small("experiment.trials=1"))
        assert all(r["std"] == 0.0 and r["n_trials"] == 1 for r in rows)

    def test_empty_sweep_single_point(self):
        rows = run_sweep(small("experiment.trials=2"), schemes=())
        assert len(rows) == 1
        assert rows[0]["sweep_value"] is None and rows[0]["sweep_param"] == "" and rows[0]["n_trials"] == 2

    def test_grouping_order(self):
        recs = [_record(v, 1.0) for v in (18, 6, 18, 6)]
        assert [r["sweep_value"] for r in aggregate(recs) if r["metric"] == "nmse"] == [18, 6]

    def test_nmse_decreases_with_training_power(self):
        cfg = load_config(overrides=["sweep.param=p_u_dbm", "sweep.values=[6, 12, 18]",
                                     "experiment.trials=20"])
        rows = run_sweep(cfg, schemes=())
        means = [r["mean"] for r in rows]
        assert means[0] > means[1] > means[2]


class TestExport:
    ROWS = [
        {"sweep_param": "p_u_dbm", "sweep_value": 6, "scheme": "proposed", "metric": "sum_rate",
         "mean": 0.1, "std": float("nan"), "n_trials": 3},
        {"sweep_param": "p_u_dbm", "sweep_value": 12, "scheme": "estimation", "metric": "nmse",
         "mean": np.float64(1 / 3), "std": 0.0, "n_trials": 3},
    ]

    def test_header_only(self):
        assert to_csv([]) == ",".join(COLUMNS) + "\n"

    def test_shortest_round_trip(self):
        lines = to_csv(self.ROWS).splitlines()
        assert lines[1] == "p_u_dbm,6,proposed,sum_rate,0.1,,3"
        assert float(lines[2].split(",")[4]) == 1 / 3

    def test_row_counts_match(self):
        records = json.loads(to_json(self.ROWS))["records"]
        parsed = list(csv.DictReader(io.StringIO(to_csv(self.ROWS))))
        assert len(records) == len(parsed) == 2
        assert records[0]["std"] is None and records[1]["mean"] == 1 / 3
        assert json.loads(to_json(self.ROWS))["columns"] == list(COLUMNS)

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_idempotent(self, tmp_path, fmt):
        p = tmp_path / f"out.{fmt}"
        export(self.ROWS, p, fmt)
        first = p.read_bytes()
        export(self.ROWS, p, fmt)
        assert p.read_bytes() == first
        assert export(self.ROWS, "-", fmt).encode() == first

    def test_unwritable_path(self, tmp_path):
        target = tmp_path / "no" / "such" / "dir.csv"
        with pytest.raises(ExportError, match=str(target)):
            export(self.ROWS, target)

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            export(self.ROWS, "-", "xml")


class TestCli:
    ARGS = ["--set", "system.N=8", "--set", "experiment.trials=2"]

    def test_sweep_to_file(self, tmp_path):
        out = tmp_path / "r.csv"
        assert main(["sweep", *self.ARGS, "--out", str(out)]) == 0
        rows = list(csv.DictReader(out.open()))
        assert {r["scheme"] for r in rows} == {"estimation", "proposed", "nonrobust", "no_irs"}

    def test_stdout_json(self, capsys):
        assert main(["estimate", *self.ARGS, "--format", "json", "--seed", "4"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert [r["metric"] for r in data["records"]] == ["nmse"]

    def test_solve_commands(self, capsys):
        assert main(["solve-mu", *self.ARGS, "--set", "system.K=2", "--set", "baselines.no_irs=false",
                     "--set", "baselines.nonrobust=false"]) == 0
        assert "proposed" in capsys.readouterr().out
        assert main(["solve-su", *self.ARGS, "--set", "system.K=2"]) == 2

    def test_config_error(self, capsys):
        assert main(["sweep", "--set", "system.N=7"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_io_errors(self, tmp_path, capsys):
        assert main(["estimate", "--config", str(tmp_path / "missing.yaml")]) == 3
        bad = tmp_path / "nodir" / "x.csv"
        assert main(["estimate", *self.ARGS, "--out", str(bad)]) == 3
        assert str(bad) in capsys.readouterr().err

    def test_workers_do_not_change_output(self, capsys):
        main(["sweep", *self.ARGS, "--set", "system.K=2"])
        serial = capsys.readouterr().out
        main(["sweep", *self.ARGS, "--set", "system.K=2", "--set", "experiment.workers=2"])
        assert capsys.readouterr().out == serial
