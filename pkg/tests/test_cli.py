import numpy as np
import pytest

from locband.cli import build_parser, cmd_verify, main
from locband.densities import make_peak_triangular, sample


@pytest.fixture()
def data_file(tmp_path):
    draws = sample(make_peak_triangular(), 2048, seed=31)
    path = tmp_path / "data.txt"
    path.write_text("\n".join(f"{x:.17g}" for x in draws) + "\n")
    return str(path)


def run_cli(*argv):
    return main(list(argv))


class TestBandCommand:
    def test_writes_band_csv(self, data_file, tmp_path):
        out = tmp_path / "band.csv"
        rc = run_cli("band", "--input", data_file, "--out", str(out), "--seed", "1")
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("k,t_lo,t_hi,center")
        # one row per cell: mesh count for n~=1024 at the shipped defaults
        meta = (tmp_path / "band.csv.meta").read_text()
        assert "alpha=0.1" in meta
        from locband.calibration import PlanParams, derive_plan
        from locband.kernels import make_rectangular

        plan = derive_plan(PlanParams(n=2048), make_rectangular())
        assert len(lines) == 1 + plan.mesh_count

    def test_deterministic_bytes(self, data_file, tmp_path):
        out1, out2 = tmp_path / "b1.csv", tmp_path / "b2.csv"
        assert run_cli("band", "--input", data_file, "--out", str(out1)) == 0
        assert run_cli("band", "--input", data_file, "--out", str(out2)) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_alpha_monotone(self, data_file, tmp_path):
        outs = {}
        for alpha in ("0.01", "0.1"):
            out = tmp_path / f"band{alpha}.csv"
            assert run_cli("band", "--input", data_file, "--alpha", alpha, "--out", str(out)) == 0
            rows = [line.split(",") for line in out.read_text().strip().split("\n")[1:]]
            outs[alpha] = np.array([(float(r[5]) - float(r[4])) / 2.0 for r in rows])
        assert np.all(outs["0.01"] >= outs["0.1"])

    def test_parse_failure_exit_2(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("1.0\noops\n")
        assert run_cli("band", "--input", str(bad)) == 2

    def test_theory_mode_degenerate_exit_3(self, data_file):
        assert run_cli("band", "--input", data_file, "--mode", "theory") == 3

    def test_missing_input_exit_2(self):
        assert run_cli("band") == 2


class TestSimulateCommand:
    def test_gumbel_kind(self, tmp_path):
        out = tmp_path / "gum.csv"
        rc = run_cli("simulate", "gumbel", "--n", "64", "--reps", "200", "--seed", "3",
                     "--out", str(out))
        assert rc == 0
        meta = (tmp_path / "gum.csv.meta").read_text()
        assert "summary.ks=" in meta

    def test_coverage_single_rep(self, tmp_path):
        out = tmp_path / "cov.csv"
        rc = run_cli("simulate", "coverage", "--n", "512", "--reps", "1", "--seed", "3",
                     "--density", "peak", "--out", str(out))
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 2  # header + one record

    def test_invalid_kind_exit_2(self):
        assert run_cli("simulate", "nope", "--n", "256") == 2

    def test_unknown_density_exit_2(self):
        assert run_cli("simulate", "coverage", "--density", "wat:1") == 2


class TestVerifyCommand:
    def test_suite_filter(self, capsys, tmp_path):
        out = tmp_path / "a3.csv"
        rc = run_cli("verify", "--suite", "a3", "--out", str(out))
        assert rc == 0
        rows = out.read_text().strip().split("\n")[1:]
        assert rows and all(row.startswith("a3,") for row in rows)

    def test_unknown_suite_exit_2(self):
        assert run_cli("verify", "--suite", "a9") == 2

    def test_default_run_all_pass_exit_0(self, tmp_path):
        out = tmp_path / "verify.csv"
        assert run_cli("verify", "--out", str(out)) == 0
        meta = (tmp_path / "verify.csv.meta").read_text()
        assert "summary.all_passed=true" in meta

    def test_broken_kernel_exit_1(self, capsys):
        from test_harness import broken_order_kernel

        args = build_parser().parse_args(["verify", "--suite", "bias_upper"])
        rc = cmd_verify(args, kernel=broken_order_kernel())
        assert rc == 1
        assert "bias_upper" in capsys.readouterr().err


class TestCurvesCommand:
    def test_schema_and_adaptivity(self, tmp_path):
        out = tmp_path / "curves.csv"
        rc = run_cli("curves", "--density", "peak", "--n", str(2 ** 14), "--seed", "5",
                     "--out", str(out))
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        header = lines[0].split(",")
        assert header == ["k", "t", "truth", "local_center", "local_lo", "local_hi",
                          "global_lo", "global_hi"]
        # local band strictly inside the global reference near the smooth probe
        rows = [line.split(",") for line in lines[1:]]
        ts = np.array([float(r[1]) for r in rows])
        k = int(np.argmin(np.abs(ts - 0.9)))
        local_lo, local_hi = float(rows[k][4]), float(rows[k][5])
        global_lo, global_hi = float(rows[k][6]), float(rows[k][7])
        assert global_lo < local_lo and local_hi < global_hi
        # and narrower at the smooth probe than at the kink probe
        kk = int(np.argmin(np.abs(ts - 0.5)))
        kink_width = float(rows[kk][5]) - float(rows[kk][4])
        assert local_hi - local_lo < kink_width

    def test_unknown_density_exit_2(self):
        assert run_cli("curves", "--density", "unknown") == 2


class TestConfigAndEnv:
    def test_config_file(self, tmp_path, data_file):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("alpha=0.2\nseed=17\n")
        out = tmp_path / "band.csv"
        rc = run_cli("band", "--config", str(cfg), "--input", data_file, "--out", str(out))
        assert rc == 0
        assert "alpha=0.2" in (tmp_path / "band.csv.meta").read_text()

    def test_unknown_config_key_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("alphaa=0.2\n")
        rc = run_cli("band", "--config", str(cfg), "--input", "whatever")
        assert rc == 2
        assert "alphaa" in capsys.readouterr().err

    def test_env_seed_and_flag_priority(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LOCBAND_SEED", "999")
        out = tmp_path / "gum.csv"
        rc = run_cli("simulate", "gumbel", "--n", "64", "--reps", "20", "--out", str(out))
        assert rc == 0
        assert "seed=999" in (tmp_path / "gum.csv.meta").read_text()
        rc = run_cli("simulate", "gumbel", "--n", "64", "--reps", "20", "--seed", "5",
                     "--out", str(out))
        assert rc == 0
        assert "seed=5" in (tmp_path / "gum.csv.meta").read_text()

    def test_stdout_mode(self, data_file, capsys):
        rc = run_cli("band", "--input", data_file)
        assert rc == 0
        captured = capsys.readouterr()
        assert captured.out.startswith("k,t_lo")
        assert "alpha=" in captured.err  # metadata goes to stderr
