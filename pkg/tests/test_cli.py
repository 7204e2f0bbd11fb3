import json
import os

import numpy as np
import pytest

from stargraph.cli import main, parse_grid, parse_int_range
from stargraph.graphon import constant_graphon


@pytest.fixture
def graphon_file(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"c": [0.5, 0.5], "g": [[0.8, 0.3], [0.3, 0.55]]}))
    return str(path)


class TestParsers:
    def test_int_range(self):
        assert parse_int_range("2..5") == [2, 3, 4, 5]
        assert parse_int_range("2,7") == [2, 7]
        assert parse_int_range("3") == [3]

    def test_grid(self):
        eps, sig = parse_grid("0.3:0.5:3,0.01:0.02:2")
        assert list(eps) == pytest.approx([0.3, 0.4, 0.5])
        assert list(sig) == pytest.approx([0.01, 0.02])

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            parse_grid("nope")


class TestDensities:
    def test_basic(self, graphon_file, capsys):
        assert main(["densities", graphon_file]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["t1"] == pytest.approx(0.4875)

    def test_all(self, graphon_file, capsys):
        assert main(["densities", graphon_file, "--all", "--k", "2,4"]) == 0
        out = json.loads(capsys.readouterr().out)
        for key in ("t1", "t2", "t3", "t4", "t3chain", "t4cycle", "tQ", "entropy"):
            assert key in out

    def test_er_half(self, tmp_path, capsys):
        path = tmp_path / "er.json"
        path.write_text(constant_graphon(0.5).to_json())
        assert main(["densities", str(path)]) == 0
        assert json.loads(capsys.readouterr().out)["t1"] == pytest.approx(0.5)

    def test_missing_file(self, capsys):
        assert main(["densities", "/nonexistent.json"]) == 2


class TestCriticalPoint:
    def test_value(self, capsys):
        assert main(["critical-point"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert 0.285 <= out["tau2_c"] <= 0.289
        assert 0.035 <= out["sigma2_c"] <= 0.039


class TestCrossing:
    def test_stdout(self, capsys):
        assert main(["crossing", "--k", "2..3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "k,eps0"
        assert float(lines[1].split(",")[1]) == pytest.approx(0.5, abs=1e-9)
        assert float(lines[2].split(",")[1]) == pytest.approx(0.75, abs=1e-9)

    def test_csv_and_plot(self, tmp_path, capsys):
        out = str(tmp_path / "cross.csv")
        assert main(["crossing", "--k", "2..4", "--out", out, "--plot"]) == 0
        assert os.path.exists(out)
        assert os.path.exists(str(tmp_path / "cross.svg"))
        assert os.path.exists(out + ".manifest.json")


class TestBoundary:
    def test_csv(self, tmp_path):
        out = str(tmp_path / "b.csv")
        assert main(["boundary", "--k", "2", "--samples", "20", "--out", out]) == 0
        lines = open(out).read().splitlines()
        assert lines[0] == "eps,tau_lower,tau_upper,branch"
        assert len(lines) == 21


class TestVerifyStep4:
    def test_pass(self, capsys):
        assert main(["verify-step4", "--k", "2..4", "--grid", "2000"]) == 0
        assert "all pass" in capsys.readouterr().out


class TestSample:
    def test_edge_list_and_determinism(self, graphon_file, tmp_path):
        out1 = str(tmp_path / "e1.txt")
        out2 = str(tmp_path / "e2.txt")
        assert main(["sample", "--graphon", graphon_file, "--n", "50",
                     "--seed", "7", "--out", out1]) == 0
        assert main(["sample", "--graphon", graphon_file, "--n", "50",
                     "--seed", "7", "--out", out2]) == 0
        b1, b2 = open(out1, "rb").read(), open(out2, "rb").read()
        assert b1 == b2
        u, v = b1.split()[:2]
        assert int(u) < 50 and int(v) < 50


class TestOptimize:
    def test_er_point(self, capsys):
        rc = main(["optimize", "--constraints", "t1=0.4,t2=0.16",
                   "--kmax", "2", "--restarts", "4", "--seed", "0"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["podality"] == 1
        assert out["entropy"] == pytest.approx(
            constant_graphon(0.4).shannon_entropy(), abs=1e-8)

    def test_infeasible_exit_code(self, capsys):
        rc = main(["optimize", "--constraints", "t1=0.5,t2=0.4",
                   "--kmax", "2", "--restarts", "2"])
        assert rc == 3
        err = capsys.readouterr().err
        assert json.loads(err)["error"] == "infeasible"

    def test_usage_error(self):
        assert main(["optimize", "--constraints", "nonsense"]) == 2


class TestTacoCheck:
    def test_small_fuzz(self, capsys):
        rc = main(["taco-check", "--fuzz", "300", "--jacobian-grid", "20",
                   "--seed", "1"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["pass"]
        assert out["min_cs_inequality"] >= -1e-12


class TestTaco:
    def test_cloud_and_envelope(self, tmp_path):
        out = str(tmp_path / "taco.csv")
        assert main(["taco", "--resolution", "60", "--out", out]) == 0
        assert os.path.exists(out)
        assert os.path.exists(str(tmp_path / "taco_envelope.csv"))
        header = open(out).readline().strip()
        assert header == "t1,t2,t3,u,sigma2,family_id"


class TestSweep:
    def test_tiny_grid(self, tmp_path):
        out = str(tmp_path / "s.csv")
        rc = main(["sweep", "--model", "2star", "--grid", "0.5:0.5:1,0.01:0.02:2",
                   "--out", out, "--restarts", "4", "--kmax", "2", "--plot"])
        assert rc == 0
        lines = open(out).read().splitlines()
        assert lines[0] == "eps,sigma2,tau2,entropy,c1,podality,el_residual"
        assert len(lines) == 3
        assert os.path.exists(str(tmp_path / "s.svg"))
        manifest = json.loads(open(out + ".manifest.json").read())
        assert len(manifest["outputs"]) == 2
        assert manifest["versions"]["stargraph"]

    def test_unknown_model(self, tmp_path):
        rc = main(["sweep", "--model", "3star", "--grid", "0.5:0.5:1,0.01:0.02:1",
                   "--out", str(tmp_path / "x.csv")])
        assert rc == 2


class TestScanDerivative:
    def test_small_scan(self, tmp_path, capsys):
        out = str(tmp_path / "scan.csv")
        rc = main(["scan-derivative", "--tau2", "0.27", "--window", "0.491:0.509",
                   "--h", "3e-3", "--out", out, "--restarts", "4", "--kmax", "2"])
        assert rc == 0
        verdict = json.loads(capsys.readouterr().out)
        assert "jump_detected" in verdict
        lines = open(out).read().splitlines()
        assert lines[0] == "eps_mid,ds_deps"

    def test_seventeen_digit_floats(self):
        from stargraph.cli import fmt
        assert fmt(1 / 3) == "0.33333333333333331"
        assert float(fmt(np.pi)) == np.pi


class TestConfigFile:
    def test_config_used_and_overridden(self, tmp_path, capsys):
        conf = tmp_path / "conf.txt"
        conf.write_text("restarts = 4\nkmax = 2\nseed = 3\n")
        rc = main(["optimize", "--constraints", "t1=0.4,t2=0.16",
                   "--config", str(conf)])
        assert rc == 0

    def test_bad_config(self, tmp_path):
        conf = tmp_path / "conf.txt"
        conf.write_text("bogus_key = 2\n")
        rc = main(["optimize", "--constraints", "t1=0.4,t2=0.16",
                   "--config", str(conf)])
        assert rc == 2


class TestReproducibility:
    def test_boundary_byte_identical(self, tmp_path):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        main(["boundary", "--k", "3", "--samples", "50", "--out", a])
        main(["boundary", "--k", "3", "--samples", "50", "--out", b])
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_optimize_deterministic(self, capsys):
        main(["optimize", "--constraints", "t1=0.45,t2=0.21",
              "--kmax", "2", "--restarts", "4", "--seed", "11"])
        first = capsys.readouterr().out
        main(["optimize", "--constraints", "t1=0.45,t2=0.21",
              "--kmax", "2", "--restarts", "4", "--seed", "11"])
        second = capsys.readouterr().out
        assert first == second
