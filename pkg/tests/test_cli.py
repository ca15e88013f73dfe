"""
Test the command-line surface end to end.

Validates:
1. Configuration errors exit with code 1 and name the problem
2. Solver failures exit with code 2
3. Flag overrides reach the right config section
4. Brinkman with M = 0 reproduces the Stokes output file byte for byte
5. Every run leaves config.json and run.log behind; repeated runs give identical files
"""

import json

import pytest

from brinkhom.cli import load_run_config
from brinkhom.core.exceptions import ConfigurationError
from brinkhom.main import build_parser, main, overrides_from_args

HOLE_FREE_BALL = """
[geometry]
outer = "ball"

[solver]
eps = 0.9
"""


def write_config(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_missing_config_file(tmp_path, capsys):
    """Exit 1 and the missing path on stderr."""
    missing = tmp_path / "absent.toml"
    code = main(["cell", "--config", str(missing), "--out", str(tmp_path / "out")])
    assert code == 1
    assert str(missing) in capsys.readouterr().err


def test_unknown_key_is_rejected(tmp_path, capsys):
    config = write_config(tmp_path / "run.toml", "[geometry]\nbogus = 1\n")
    code = main(["solve", "--config", config, "--out", str(tmp_path / "out")])
    assert code == 1
    assert "geometry.bogus" in capsys.readouterr().err


def test_mach_scaling_is_checked(tmp_path, capsys):
    """Compressible mode with beta <= 3 (gamma + 1) is a configuration error."""
    config = write_config(tmp_path / "run.toml", "[compressible]\nbeta = 12.0\n")
    code = main(["solve", "--config", config, "--mode", "compressible", "--out", str(tmp_path / "out")])
    assert code == 1
    assert "beta" in capsys.readouterr().err


def test_unparseable_toml(tmp_path):
    config = write_config(tmp_path / "run.toml", "[solver\n")
    with pytest.raises(ConfigurationError):
        load_run_config(config)


def test_converge_needs_two_eps(tmp_path, capsys):
    code = main(["converge", "--eps", "0.5", "--out", str(tmp_path / "out")])
    assert code == 1
    assert "at least 2" in capsys.readouterr().err


def test_increasing_eps_list_is_rejected(tmp_path):
    assert main(["resistance", "--eps", "0.1,0.2", "--out", str(tmp_path / "out")]) == 1


def test_unresolved_cell_problem_exits_with_solver_error(tmp_path, capsys):
    """h = 1 puts fewer than four cells across the obstacle."""
    out = tmp_path / "out"
    code = main(["cell", "--R", "10", "--h", "1", "--out", str(out)])
    assert code == 2
    assert "cells" in capsys.readouterr().err
    assert (out / "run.log").is_file()


def test_usage_errors(capsys):
    """argparse errors map to 1, --help to 0."""
    assert main(["unknown"]) == 1
    assert main(["solve", "--quiet", "--verbose"]) == 1
    assert main(["solve", "--eps", "a,b"]) == 1
    assert main(["--help"]) == 0
    capsys.readouterr()


def test_eps_flag_routes_to_the_command_section():
    parser = build_parser()
    solve = overrides_from_args(parser.parse_args(["solve", "--eps", "0.3,0.2", "--M", "zero"]))
    assert solve["solver"] == {"eps": 0.3, "M": "zero"}
    sweep = overrides_from_args(parser.parse_args(["bogovskii", "--eps", "0.5,0.35", "--quiet"]))
    assert sweep["bogovskii"] == {"eps": [0.5, 0.35]}
    assert sweep["verbosity"] == "quiet"
    cell = overrides_from_args(parser.parse_args(["cell", "--shape", "scaled_ball", "--R", "12"]))
    assert cell["geometry"] == {"shape": "scaled_ball"}
    assert cell["cell"] == {"R": 12.0}


def test_flags_override_the_config_file(tmp_path):
    config = write_config(tmp_path / "run.toml", HOLE_FREE_BALL)
    resolved = load_run_config(config, {"solver": {"mode": "brinkman"}, "out": "elsewhere"})
    assert resolved.solver.mode == "brinkman"
    assert resolved.solver.eps == 0.9
    assert resolved.geometry.outer == "ball"
    assert resolved.out == "elsewhere"


def test_zero_resistance_brinkman_matches_stokes(tmp_path):
    """No interior cell and M = 0: solution.csv is identical in both modes."""
    config = write_config(tmp_path / "run.toml", HOLE_FREE_BALL)
    stokes, brinkman = tmp_path / "stokes", tmp_path / "brinkman"
    assert main(["solve", "--config", config, "--mode", "stokes", "--out", str(stokes)]) == 0
    assert main(
        ["solve", "--config", config, "--mode", "brinkman", "--M", "zero", "--out", str(brinkman)]
    ) == 0
    assert (stokes / "solution.csv").read_bytes() == (brinkman / "solution.csv").read_bytes()

    for out in (stokes, brinkman):
        assert (out / "config.json").is_file()
        assert "solve finished with exit code 0" in (out / "run.log").read_text(encoding="utf-8")
    report = json.loads((brinkman / "report.json").read_text(encoding="utf-8"))
    assert report["mode"] == "brinkman"
    assert report["energy"]["passed"] is True
    saved = json.loads((stokes / "config.json").read_text(encoding="utf-8"))
    assert saved["solver"]["eps"] == 0.9


def test_resistance_runs_are_reproducible(tmp_path):
    """Two runs with the same configuration write byte-identical CSV files."""
    first, second = tmp_path / "first", tmp_path / "second"
    for out in (first, second):
        assert main(["resistance", "--eps", "0.2,0.1", "--out", str(out)]) == 0
    assert (first / "resistance.csv").read_bytes() == (second / "resistance.csv").read_bytes()
    header = (first / "resistance.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "epsilon,variant,i,k,value"
    report = json.loads((first / "report.json").read_text(encoding="utf-8"))
    assert report["resistance"]["eps_list"] == [0.2, 0.1]
