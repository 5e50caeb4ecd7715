import json
import math

import numpy as np
import pytest

from matprod.cli import compare_sv, main, parse_factor
from matprod.ensembles import laguerre
from matprod.errors import ParseError, SemanticError
from matprod.sampling import product_chain_batch, read_csv


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_density_sv_example(capsys):
    code, out, _ = run_cli(capsys, "density-sv", "--expr", "laguerre(nu=0)", "--n", "1",
                           "--points", "1")
    assert code == 0
    header, row = out.strip().splitlines()
    assert header == "a_1,value"
    assert float(row.split(",")[1]) == pytest.approx(math.exp(-1), rel=1e-11)


def test_density_json_format(capsys):
    code, out, _ = run_cli(capsys, "density-sv", "--expr", "laguerre(nu=0)", "--n", "2",
                           "--points", "1,2;0.5,3", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["header"] == ["a_1", "a_2", "value"]
    assert len(data["rows"]) == 2


def test_interp_scan_example(capsys):
    code, out, _ = run_cli(capsys, "interp-scan", "--n", "2", "--p", "0.5", "--q", "0")
    assert code == 0
    data = json.loads(out)
    assert data["verdict"] == "negative_found"
    assert len(data["witness"]) == 2 and data["value"] < 0


def test_lyapunov_example(capsys):
    code, out, _ = run_cli(capsys, "lyapunov", "--expr", "ginibre-chain", "--n", "2", "--M", "200",
                           "--runs", "5000", "--seed", "7")
    assert code == 0
    data = json.loads(out)
    assert np.allclose(data["m_symbolic"], [0.211392, -0.288608], atol=1e-6)
    assert np.allclose(data["m_empirical"], [0.2114, -0.2886], atol=0.01)
    sig = np.array(data["sigma_empirical"])
    assert np.array_equal(sig, sig.T)


def test_kernel_and_spherical_commands(capsys):
    code, out, _ = run_cli(capsys, "kernel-sv", "--expr", "laguerre(nu=0)", "--n", "2",
                           "--points", "1")
    assert code == 0
    assert float(out.splitlines()[1].split(",")[2]) == pytest.approx(math.exp(-1), rel=1e-11)
    code, out, _ = run_cli(capsys, "kernel-ev", "--expr", "laguerre(nu=0)", "--n", "2",
                           "--points", "1", "--format", "json")
    assert code == 0
    assert json.loads(out)["rows"][0][4] == pytest.approx(2 / (math.pi * math.e), rel=1e-11)
    code, out, _ = run_cli(capsys, "spherical-check", "--expr", "laguerre(nu=0)", "--n", "2",
                           "--s", "1.5+1j,2.5")
    assert code == 0
    assert json.loads(out)["rel_err"] < 1e-6


@pytest.mark.parametrize("argv, code", [
    (["density-sv", "--expr", "laguerre(nu=", "--n", "1", "--points", "1"], 2),
    (["density-sv", "--expr", "laguerre(nu=0)", "--n", "2", "--points", "1"], 2),
    (["density-sv", "--n", "1", "--points", "1"], 2),
    (["sample", "--n", "2", "--factor", "truncated(N=3)", "--seed", "1"], 2),
    (["compare-sv", "--expr", "laguerre(nu=0)", "--n", "2", "--input", "/nonexistent.csv"], 2),
    (["density-sv", "--expr", "laguerre(nu=0)", "--n", "1"], 2),
    (["spherical-check", "--expr", "laguerre(nu=0)", "--n", "1", "--s=-2"], 3),
])
def test_exit_codes(capsys, argv, code):
    assert main(argv) == code
    assert capsys.readouterr().err


def test_parse_factor():
    spec, ens = parse_factor("truncated(N=6)", 2)
    assert spec.n == 2 and ens.n == 2
    assert parse_factor("haar", 3)[1] is None
    with pytest.raises(SemanticError):
        parse_factor("truncated(N=3)", 2)
    with pytest.raises(ParseError):
        parse_factor("wishart", 2)
    with pytest.raises(ParseError):
        parse_factor("truncated(M=6)", 2)


def test_sample_is_byte_identical(tmp_path, capsys):
    argv = ["sample", "--n", "2", "--factor", "ginibre", "--factor", "truncated(N=5)",
            "--M", "3", "--runs", "400", "--seed", "21"]
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert main(argv + ["--out", str(c), "--workers", "3"]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_lyapunov_output_is_deterministic(capsys):
    argv = ["lyapunov", "--expr", "truncated(N=5)", "--n", "2", "--M", "20", "--runs", "300",
            "--seed", "3"]
    _, first, _ = run_cli(capsys, *argv)
    _, second, _ = run_cli(capsys, *argv)
    assert first == second


def test_workers_environment(tmp_path, monkeypatch):
    argv = ["sample", "--n", "2", "--runs", "300", "--seed", "4"]
    monkeypatch.setenv("MATPROD_WORKERS", "2")
    assert main(argv + ["--out", str(tmp_path / "a.csv")]) == 0
    monkeypatch.setenv("MATPROD_WORKERS", "1")
    assert main(argv + ["--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_sample_compare_roundtrip(tmp_path, capsys):
    path = tmp_path / "dump.csv"
    assert main(["sample", "--n", "2", "--factor", "ginibre", "--runs", "2000", "--seed", "5",
                 "--out", str(path)]) == 0
    code, out, _ = run_cli(capsys, "compare-sv", "--expr", "laguerre(nu=0)", "--n", "2",
                           "--input", str(path))
    assert code == 0
    ks_cli = json.loads(out)["ks"]
    sample = product_chain_batch([parse_factor("ginibre", 2)[0]], 2000, seed=5)
    ks_mem = compare_sv(sample, laguerre(2, 0))
    assert ks_cli == pytest.approx(ks_mem, abs=1e-12)
    assert len(read_csv(path)) == 2000
    assert ks_mem < 0.05
