import os
import subprocess
import sys

import numpy as np
import pytest

from swlab import io
from swlab.cli import main, read_contacts
from swlab.config import parse_beta_spec, parse_config_text, resolve_a, resolve_beta
from swlab.errors import ConfigurationError


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def test_config_parsing():
    cfg = parse_config_text("# comment\nN = 256   # trailing\na = auto:N^-0.75\nbeta = critical+0.5/sqrtN\n")
    assert cfg.N == 256
    assert resolve_a(cfg.a, cfg.N) == pytest.approx(256 ** -0.75)
    assert resolve_beta(cfg.beta, -0.04, 256) == pytest.approx(-0.04 + 0.5 / 16)
    assert parse_beta_spec("1.25") == ("literal", 1.25)
    assert parse_beta_spec("critical-0.2") == ("critical", (-0.2, False))
    for bad in ("N == 3", "N = 3\nN = 4", "colour = red", "N = 2.5", "beta = supercritical",
                "a = auto:M^2", "grid = 0", "just words"):
        with pytest.raises(ConfigurationError):
            parse_config_text(bad)


def test_kernel_csv(tmp_path):
    out = tmp_path / "k.csv"
    assert main(["kernel", "--a", "0.05", "--grid", "4", "--nmax", "16", "--out", str(out)]) == 0
    d = io.read_columns(out)
    assert _read(out).splitlines()[0] == "n,x,y,f_n_a,f_n_closed_form,ratio"
    # grid midpoints plus the strip corners 0 and a
    assert len(d["n"]) == 16 * 6 * 6
    assert {0.0, 0.05} <= set(d["x"])
    assert np.all((d["ratio"] > 0) & (d["ratio"] <= 1 + 1e-6))
    assert os.path.exists(tmp_path / "k.manifest.txt")
    # 12 significant digits
    val = _read(out).splitlines()[1].split(",")[3]
    assert len(val.replace(".", "").replace("-", "").lstrip("0").split("e")[0]) <= 12


def test_betac_and_partition(tmp_path):
    o1 = tmp_path / "b.csv"
    assert main(["betac", "--a", "0.1,0.2", "--grid", "8", "--nmax", "512", "--out", str(o1)]) == 0
    d = io.read_columns(o1)
    assert list(d["a"]) == [0.1, 0.2] and np.all(d["log_a_plus_gap"] > 0)
    o2 = tmp_path / "p.csv"
    assert main(["partition", "--pinning", "smooth", "--a", "0.1", "--N", "64", "--grid", "8",
                 "--ladder-samples", "2000", "--out", str(o2)]) == 0
    d = io.read_columns(o2)
    assert np.all(d["lower_sandwich"] <= d["Zc"] * (1 + 1e-9))
    assert np.all(d["Zc"] <= d["upper_sandwich"] * (1 + 1e-9))


def test_manifest_rerun_identical(tmp_path, monkeypatch):
    o1 = tmp_path / "c1.csv"
    args = ["sample-contacts", "--pinning", "smooth", "--a", "auto:N^-0.75", "--N", "128", "--grid", "8",
            "--samples", "300", "--seed", "5", "--out", str(o1)]
    assert main(args) == 0
    o2 = tmp_path / "c2.csv"
    assert main(["sample-contacts", "--config", str(tmp_path / "c1.manifest.txt"), "--out", str(o2)]) == 0
    assert _read(o1) == _read(o2)
    monkeypatch.setenv("SWLAB_THREADS", "3")
    o3 = tmp_path / "c3.csv"
    assert main(args[:-1] + [str(o3)]) == 0
    assert _read(o1) == _read(o3)
    B = read_contacts(str(o1), "f", 128 ** -0.75)
    assert len(B) == 300 and B.N == 128


def test_sample_paths_and_stats(tmp_path):
    d = tmp_path / "run"
    assert main(["sample-paths", "--pinning", "constant", "--beta", "critical", "--a", "auto:N^-0.75",
                 "--N", "256", "--grid", "8", "--samples", "400", "--seed", "2", "--out", str(d)]) == 0
    for f in ("contacts.csv", "functionals.csv", "manifest.txt"):
        assert (d / f).exists()
    rep = tmp_path / "r.csv"
    assert main(["stats", "--in", str(d), "--suite", "all", "--out", str(rep)]) == 0
    lines = _read(rep).splitlines()
    assert lines[0] == "test,N,M,statistic,threshold,pass"
    names = [l.split(",")[0] for l in lines[1:]]
    assert "last_zero_arcsine" in names and "gamma_tightness_trend" in names
    assert main(["stats", "--in", str(d), "--suite", "nonsense", "--out", str(rep)]) == 2


@pytest.mark.parametrize("text", ["N = = 3", "pinning = spiky", "seed = x", "unknown_key = 1"])
def test_malformed_config_exit_2(tmp_path, text):
    p = tmp_path / "bad.cfg"
    p.write_text(text + "\n")
    assert main(["kernel", "--config", str(p), "--a", "0.1"]) == 2


def test_usage_and_env_errors(tmp_path, monkeypatch):
    assert main(["kernel", "--grid", "many"]) == 2
    assert main(["nope"]) == 2
    assert main(["kernel", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["partition", "--a", "0.1"]) == 2  # N missing
    monkeypatch.setenv("SWLAB_THREADS", "zero")
    assert main(["kernel", "--a", "0.1", "--nmax", "4", "--out", str(tmp_path / "k.csv")]) == 2


def test_verify_detects_off_critical(tmp_path):
    cfg = tmp_path / "v.cfg"
    cfg.write_text("beta = critical+0.3\nscaling_N = 512\nscaling_M = 2000\n")
    out = tmp_path / "report.csv"
    assert main(["verify", "--suite", "scaling", "--config", str(cfg), "--out", str(out)]) != 0
    assert _read(out).splitlines()[0] == "test,N,M,statistic,threshold,pass"


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "swlab.cli", "betac", "--a", "0.2", "--nmax", "256",
                        "--grid", "4", "--out", str(tmp_path / "b.csv")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "swlab.cli", "kernel", "--grid", "x"], capture_output=True)
    assert r.returncode == 2
