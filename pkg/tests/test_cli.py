import argparse
import json
import subprocess
import sys

import pytest

from cplab.cli import build_parser, main
from cplab.dist import rademacher
from cplab.literals import format_distribution, parse_distribution


@pytest.fixture
def laws(tmp_path):
    (tmp_path / "rad.dist").write_text(format_distribution(rademacher()))
    (tmp_path / "zero.dist").write_text("dim 1\n0 1\n")
    (tmp_path / "one.dist").write_text("dim 1\n1 1\n")
    (tmp_path / "skew.dist").write_text("dim 1\n0 0.5\n1 0.5\n")
    return tmp_path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def subcommands(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices
    return {}


def test_help_inventory():
    top = subcommands(build_parser())
    assert sorted(top) == ["dist", "experiment", "report", "rho"]
    assert sorted(subcommands(top["dist"])) == ["classcheck", "convolve", "cp", "power"]
    for name in ("rho", "experiment", "report"):
        flags = {o for a in top[name]._actions for o in a.option_strings}
        assert {"--seed", "--out", "--tol", "--threads", "--quick"} <= flags
    help_text = top["experiment"].format_help()
    for exp in ("thm1", "thm2", "thm3", "thm4", "thm5", "highdim", "all"):
        assert exp in help_text


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "cplab.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "experiment" in out.stdout


def test_dist_cp(laws, capsys):
    code, out, _ = run(["dist", "cp", "1.0", "1e-10", laws / "one.dist"], capsys)
    assert code == 0
    body = "".join(ln + "\n" for ln in out.splitlines() if not ln.startswith("#"))
    F = parse_distribution(body)
    assert F.mass_at([0.0]) == pytest.approx(0.36787944117144233, abs=1e-10)
    assert "# cp alpha=1.0" in out


def test_dist_power_zero_and_out(laws, capsys):
    code, out, _ = run(["dist", "power", "0", laws / "rad.dist", "--out", laws / "o"], capsys)
    assert code == 0
    assert parse_distribution((laws / "o" / "power.dist").read_text()).as_dict() == {(0.0,): 1.0}


def test_dist_convolve(laws, capsys):
    code, out, _ = run(["dist", "convolve", laws / "rad.dist", laws / "rad.dist"], capsys)
    assert code == 0 and "-2.0 0.25" in out and "0.0 0.5" in out


def test_classcheck(laws, capsys):
    code, out, _ = run(["dist", "classcheck", laws / "rad.dist"], capsys)
    assert code == 0 and "symmetric=True" in out and "alpha_lower_bound=0.0" in out
    code, out, _ = run(["dist", "classcheck", laws / "skew.dist"], capsys)
    assert "symmetric=False" in out


def test_rho(laws, capsys):
    code, out, _ = run(["rho", laws / "zero.dist", laws / "one.dist"], capsys)
    assert code == 0 and out.startswith("value 1.0\nmode exact")
    code, out, _ = run(["rho", laws / "rad.dist", laws / "zero.dist"], capsys)
    assert out.startswith("value 0.5") and "1.0 -1.0" in out
    code, out, _ = run(["rho", laws / "rad.dist", laws / "zero.dist", "--metric", "search",
                        "--m", "2"], capsys)
    assert code == 0 and "lower bound" in out


def test_rho_fixed_directions_needs_file(laws, capsys):
    code, _, err = run(["rho", laws / "rad.dist", laws / "zero.dist",
                        "--metric", "fixed-directions"], capsys)
    assert code == 2 and "--directions" in err
    (laws / "dirs.poly").write_text("m 1\n1 inf\n")
    code, out, _ = run(["rho", laws / "rad.dist", laws / "zero.dist", "--metric",
                        "fixed-directions", "--directions", laws / "dirs.poly"], capsys)
    assert code == 0 and out.startswith("value 0.5")


def test_bad_inputs_exit_2(laws, capsys):
    (laws / "bad.dist").write_text("dim 1\n0 0.3\n")
    assert run(["dist", "power", "2", laws / "bad.dist"], capsys)[0] == 2
    assert run(["dist", "power", "2", laws / "missing.dist"], capsys)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["experiment", "thm9"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["rho", "a", "b", "--seed", "-1"])
    assert exc.value.code == 2


def test_missing_config_writes_nothing(tmp_path, capsys):
    code, _, err = run(["experiment", "thm1", tmp_path / "nope.json", "--out",
                        tmp_path / "r"], capsys)
    assert code == 2 and "nope.json" in err
    assert not (tmp_path / "r").exists()


def test_config_and_report(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("NO_COLOR", "1")
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_grid": [8, 16, 32, 64]}))
    code, out, _ = run(["experiment", "thm1", cfg, "--out", tmp_path / "r"], capsys)
    assert code == 0 and out.strip() == "thm1: pass"
    assert "\033[" not in out
    assert (tmp_path / "r" / "thm1" / "Fn_vs_eNF.csv").exists()
    code, out, _ = run(["report", tmp_path / "r" / "thm1"], capsys)
    assert code == 0 and "slope" in out and out.rstrip().endswith("verdict: pass")


def test_config_error_exit(tmp_path, capsys):
    (tmp_path / "skew.dist").write_text("dim 1\n0 0.5\n1 0.5\n")
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"F": "skew.dist"}))
    code, out, _ = run(["experiment", "thm1", cfg, "--quick", "--out", tmp_path / "r"], capsys)
    assert code == 2 and "config-error" in out


def test_resource_limit_exit_3(tmp_path, capsys):
    lines = ["dim 4"] + [f"{i} {i % 7} {i % 5} {i % 3} 0.025" for i in range(40)]
    (tmp_path / "big.dist").write_text("\n".join(lines) + "\n")
    code, _, err = run(["rho", tmp_path / "big.dist", tmp_path / "big.dist"], capsys)
    assert code == 3 and "resource limit" in err
