import csv
import json
import subprocess
import sys

import pytest

from qbattery.cli import load_config, ConfigError, main

GOLDEN_HEADERS = {
    "records.csv": "L,seed,realization,k,delta_e,general_bound,theorem1,corollary_klocal,"
                   "decomposition_bound,commutator_norm,p_max,raw_half_norm,c_applied,nominal_bound,"
                   "t_at_max,violations",
    "stats.csv": "L,n,failures,p_max_mean,p_max_std,p_max_max,commutator_norm_mean,commutator_norm_std,"
                 "commutator_norm_max,raw_half_norm_mean,raw_half_norm_std,raw_half_norm_max",
    "hist.csv": "L,bin_lo,count",
    "figure.csv": "L,p_max_max,commutator_norm_max,bound",
    "fit.csv": "alpha,residual_norm,analytic_constant,loglog_slope",
    "scaling.csv": "L,n,mean,std,ansatz_fit,analytic_estimate",
    "verify.csv": "check,n,worst,tolerance,status",
    "quench.csv": "kind,t,energy,power",
}


def write_cfg(tmp_path, name="cfg.json", **fields):
    path = tmp_path / name
    path.write_text(json.dumps({"schema_version": 1, **fields}))
    return str(path)


def run(tmp_path, *args):
    out = tmp_path / "out"
    return main([*args, "--out", str(out)]), out


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def check_headers(out):
    for f in out.glob("*.csv"):
        assert f.read_text().splitlines()[0] == GOLDEN_HEADERS[f.name], f.name


class TestConfig:
    def test_defaults_need_seed(self):
        with pytest.raises(ConfigError):
            load_config("figure1a")
        assert load_config("figure1a", seed=3)["seed"] == 3

    def test_deterministic_command_needs_no_seed(self):
        assert load_config("figure1b")["L_values"] == [4, 5, 6, 7, 8, 9, 10]

    def test_unknown_field(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown"):
            load_config("scaling", write_cfg(tmp_path, seed=1, realizationz=3))

    def test_schema_version(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{"seed": 1}')
        with pytest.raises(ConfigError, match="schema_version"):
            load_config("scaling", p)

    def test_seed_flag_overrides(self, tmp_path):
        assert load_config("histogram", write_cfg(tmp_path, seed=1), seed=9)["seed"] == 9

    @pytest.mark.parametrize("bad", [-1, 2**64, 1.5, True])
    def test_seed_range(self, bad):
        with pytest.raises(ConfigError):
            load_config("histogram", seed=bad)


class TestExitCodes:
    def test_usage_errors(self, tmp_path, capsys):
        assert main(["figure1a", "--out", str(tmp_path)]) == 2
        assert main(["verify", "--seed", "1", "--config", write_cfg(tmp_path, instances=0),
                     "--out", str(tmp_path)]) == 2
        assert main(["verify", "--seed", "1", "--workers", "0", "--out", str(tmp_path)]) == 2
        assert main(["histogram", "--seed", "1", "--config", write_cfg(tmp_path, L_values=[6, 4]),
                     "--out", str(tmp_path)]) == 2
        assert main(["histogram", "--seed", "1", "--config", write_cfg(tmp_path, realizations=0),
                     "--out", str(tmp_path)]) == 2
        assert main(["quench", "--config", write_cfg(tmp_path, driving={"variant": "sy_random"}),
                     "--out", str(tmp_path)]) == 2

    def test_argparse_usage(self):
        with pytest.raises(SystemExit) as e:
            main(["nonsense"])
        assert e.value.code == 2

    def test_verify_passes(self, tmp_path):
        code, out = run(tmp_path, "verify", "--seed", "5", "--config", write_cfg(tmp_path, instances=30))
        assert code == 0
        assert all(r["status"] == "pass" for r in rows(out / "verify.csv"))
        assert not (out / "violations.json").exists()
        check_headers(out)

    def test_verify_fault_dumps_instances(self, tmp_path):
        cfg = write_cfg(tmp_path, instances=5, saturation=False,
                        ensemble={"L_values": [4], "realizations": 2, "n_steps": 200},
                        inject_fault={"scale_driving": 1.25})
        code, out = run(tmp_path, "verify", "--seed", "5", "--config", cfg)
        assert code == 1
        dump = json.loads((out / "violations.json").read_text())
        assert len(dump) == 2 and dump[0]["driving_scale"] == 1.25
        assert dump[0]["seed"] == 5 and "realization" in dump[0]


class TestCommands:
    def test_figure1a_small(self, tmp_path):
        cfg = write_cfg(tmp_path, L_values=[4, 5], realizations=5, n_steps=300)
        code, out = run(tmp_path, "figure1a", "--seed", "2", "--config", cfg, "--svg")
        assert code == 0
        fig = rows(out / "figure.csv")
        assert [float(r["bound"]) for r in fig] == [4.0, 4.0]
        assert all(float(r["p_max_max"]) <= 4 for r in fig)
        assert (out / "figure.svg").read_text().startswith("<svg")
        assert "kernel backend" in (out / "run.log").read_text()
        check_headers(out)

    def test_figure1b_small(self, tmp_path):
        cfg = write_cfg(tmp_path, L_values=[4, 5, 6], n_steps=300)
        code, out = run(tmp_path, "figure1b", "--config", cfg)
        assert code == 0
        fig = rows(out / "figure.csv")
        assert float(fig[0]["bound"]) == pytest.approx(16 / 3)
        assert len(rows(out / "records.csv")) == 3

    def test_histogram_counts(self, tmp_path):
        cfg = write_cfg(tmp_path, L_values=[4, 5], realizations=30)
        code, out = run(tmp_path, "histogram", "--seed", "3", "--config", cfg)
        assert code == 0
        h = rows(out / "hist.csv")
        for L in ("4", "5"):
            assert sum(int(r["count"]) for r in h if r["L"] == L) == 30
        check_headers(out)

    def test_scaling_small(self, tmp_path):
        cfg = write_cfg(tmp_path, L_values=[3, 4, 5], realizations={"3": 5, "4": 5, "5": 4})
        code, out = run(tmp_path, "scaling", "--seed", "1", "--config", cfg)
        assert code == 0
        assert [r["n"] for r in rows(out / "scaling.csv")] == ["5", "5", "4"]
        assert "downscaled" in (out / "run.log").read_text()
        check_headers(out)

    def test_quench_default(self, tmp_path):
        code, out = run(tmp_path, "quench", "--svg")
        assert code == 0
        last = rows(out / "quench.csv")[-1]
        assert last["kind"] == "max" and float(last["power"]) == pytest.approx(4.0, abs=1e-9)
        assert (out / "quench.svg").exists()

    def test_quench_explicit_driving(self, tmp_path):
        cfg = write_cfg(tmp_path, battery={"num_sites": 1, "field_strength": 1.0},
                        driving={"variant": "single_qubit_parallel", "amplitude": 1.0})
        code, out = run(tmp_path, "quench", "--config", cfg)
        assert code == 0
        assert float(rows(out / "quench.csv")[-1]["power"]) == pytest.approx(2.0, abs=1e-9)


class TestDeterminism:
    def _artifacts(self, out):
        return {f.name: f.read_bytes() for f in sorted(out.glob("*.csv"))}

    def test_figure1a_workers(self, tmp_path):
        cfg = write_cfg(tmp_path, L_values=[4, 5], realizations=6, n_steps=200)
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert main(["figure1a", "--seed", "8", "--config", cfg, "--out", str(a)]) == 0
        assert main(["figure1a", "--seed", "8", "--config", cfg, "--out", str(b), "--workers", "2"]) == 0
        assert self._artifacts(a) == self._artifacts(b)
        c = tmp_path / "c"
        main(["figure1a", "--seed", "9", "--config", cfg, "--out", str(c)])
        assert self._artifacts(a)["records.csv"] != self._artifacts(c)["records.csv"]

    def test_scaling_workers(self, tmp_path):
        cfg = write_cfg(tmp_path, L_values=[3, 4, 5], realizations=4)
        a, b = tmp_path / "a", tmp_path / "b"
        main(["scaling", "--seed", "4", "--config", cfg, "--out", str(a)])
        main(["scaling", "--seed", "4", "--config", cfg, "--out", str(b), "--workers", "3"])
        assert self._artifacts(a) == self._artifacts(b)


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "qbattery.cli", "quench", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert "p_max = 4.0000000000" in r.stdout
