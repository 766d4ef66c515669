import io
import json
import subprocess
import sys

import pytest

from cpinterface.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_unknown_flag_lists_valid_ones():
    code, _, err = run("simulate", "--lamda", "2")
    assert code == 1
    assert "--lamda" in err and "--lambda" in err and "--guard" in err


def test_missing_subcommand_and_bad_values():
    assert run()[0] == 1
    assert run("simulate", "--seed", "-3")[0] == 1
    assert run("interface", "--replicas", "0", "--T", "2")[0] == 1
    assert run("percolate", "--i", "5", "--height", "3")[0] == 1
    assert run("simulate", "--discard-contaminated", "--abort-contaminated")[0] == 1


def test_percolate_full_density(tmp_path):
    code, out, _ = run("percolate", "--p", "1", "--i", "2", "--height", "4",
                       "--fields", "20", "--out", str(tmp_path))
    assert code == 0
    assert "Gamma(2) frequency 1.0000" in out
    summ = json.loads((tmp_path / "summary.json").read_text())
    assert summ["count"] == 20 and summ["beta"] == 0.5


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"p": 0.0, "fields": 7, "height": 3, "i": 1}))
    code, out, _ = run("percolate", "--config", str(cfg), "--fields", "9")
    assert code == 0
    assert '"fields": 9' in out and '"p": 0.0' in out
    assert "over 9 fields" in out and "frequency 0.0000" in out
    assert "# config hash" in out
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run("percolate", "--config", str(cfg))[0] == 1


def test_simulate_dump_and_load_events(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    code, out1, _ = run("simulate", "--T", "4", "--seed", "9", "--dump-events",
                        "--out", str(a))
    assert code == 0
    code, out2, _ = run("simulate", "--T", "4", "--load-events", str(a / "events.txt"),
                        "--out", str(b))
    assert code == 0
    assert (a / "interface.csv").read_text() == (b / "interface.csv").read_text()
    assert run("simulate", "--T", "4", "--dump-events")[0] == 1


def test_interface_abort_exit_code(tmp_path):
    code, _, err = run("interface", "--T", "10", "--guard", "3", "--replicas", "5",
                       "--abort-contaminated", "--threads", "1")
    assert code == 2 and "contamination" in err


def test_interface_and_plot(tmp_path):
    code, out, _ = run("interface", "--T", "4", "--replicas", "40", "--gamma", "0.5",
                       "--threads", "1", "--out", str(tmp_path))
    assert code == 0 and "alpha=" in out
    code, out, _ = run("plot", "--input", str(tmp_path))
    assert code == 0
    for stem in ("tails", "speed", "overshoot", "slow_escape"):
        assert (tmp_path / f"{stem}.svg").read_text().startswith("<svg")
        assert (tmp_path / f"{stem}.dat").exists()
    assert run("plot", "--input", str(tmp_path / "missing"))[0] == 1


def test_blocks_writes_fields(tmp_path):
    code, out, _ = run("blocks", "--lambda", "16", "--K", "2", "--N", "5", "--width", "3",
                       "--height", "2", "--fields", "2", "--guard", "20", "--out",
                       str(tmp_path))
    assert code == 0
    assert (tmp_path / "blocks_0.csv").exists() and (tmp_path / "blocks_1.csv").exists()
    assert json.loads((tmp_path / "summary.json").read_text())["fields"] == 2


def test_verify_clean_build_exits_zero(tmp_path):
    code, out, _ = run("verify", "--suite", "oracle", "--cases", "30", "--out", str(tmp_path))
    assert code == 0 and "violations 0" in out
    assert json.loads((tmp_path / "verify.json").read_text())["oracle"]["ok"]


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "cpinterface", "percolate", "--p", "0.5",
                        "--height", "2", "--i", "1", "--fields", "5"],
                       capture_output=True, text=True)
    assert p.returncode == 0 and "Gamma(1)" in p.stdout
