import json
import re

import pytest
from click.testing import CliRunner

from dnls_lab import main
from dnls_lab.exceptions import GateFailure, NonFinite
from dnls_lab.runner import _format_result


@pytest.fixture
def runner():
    return CliRunner()


def test_experiments_command(runner):
    result = runner.invoke(main, ["experiments"])
    assert result.exit_code == 0
    assert "stability:" in result.output
    assert "stencil-info:" in result.output


def test_stencil_info_command(runner, tmp_path):
    result = runner.invoke(main, ["--out", str(tmp_path), "stencil-info", "--max-order", "2"])
    assert result.exit_code == 0, result.output
    assert re.search(r"^Status: +success$", result.output, re.MULTILINE)
    assert "  • n=1: order 2" in result.output
    stencils = json.loads((tmp_path / "stencils.json").read_text())["stencils"]
    assert len(stencils) == 2


def test_bad_xi_is_rejected(runner):
    result = runner.invoke(main, ["solve", "--xi", "1.0"])
    assert result.exit_code == 2
    assert "expected 'xi1,xi2'" in result.output


def test_configuration_error(runner, tmp_path):
    """Test that an invalid speed is reported as a configuration error before any compute."""
    result = runner.invoke(main, ["--out", str(tmp_path), "solve", "--xi", "0.1,2"])
    assert result.exit_code == 2
    assert "Configuration error" in result.output
    assert not (tmp_path / "manifest.json").exists()


def test_domain_too_small(runner, tmp_path):
    result = runner.invoke(main, ["--out", str(tmp_path), "solve", "--xi", "1,0", "--h", "0.4", "--L", "12.8"])
    assert result.exit_code == 2
    assert "too short" in result.output


def test_overrides_reach_the_config(runner, tmp_path, mocker):
    """Test that CLI flags are merged into the resolved configuration."""
    run = mocker.patch("dnls_lab.run_experiment", new=mocker.AsyncMock(return_value={"status": "success"}))
    config_file = tmp_path / "run.yaml"
    config_file.write_text("h: [0.2]\nevolution:\n  save_every: 7\n")
    result = runner.invoke(
        main,
        ["--config", str(config_file), "--seed", "11", "stability", "--xi", "1,0.5", "--xi", "2,0", "--t-final", "3", "--scheme", "rk4", "--no-gate"],
    )
    assert result.exit_code == 0, result.output
    config = run.call_args.args[0]
    assert config.experiment == "stability"
    assert config.xi == [(1.0, 0.5), (2.0, 0.0)]
    assert config.h == [0.2]
    assert config.seed == 11
    assert config.gate is False
    assert config.evolution.t_final == 3.0
    assert config.evolution.scheme == "rk4"
    assert config.evolution.save_every == 7


@pytest.mark.parametrize("error,code", [(NonFinite("blew up"), 3), (GateFailure("missed"), 4)])
def test_failure_exit_codes(runner, tmp_path, mocker, error, code):
    mocker.patch("dnls_lab.run_experiment", new=mocker.AsyncMock(side_effect=error))
    result = runner.invoke(main, ["--out", str(tmp_path), "stability"])
    assert result.exit_code == code
    assert "Experiment failed" in result.output


def test_format_result_aligns_values():
    text = _format_result({"status": "success", "max_delta": 0.000123456789, "experiment": "stability", "points": ["a", "b"]})
    assert text.splitlines() == [
        "Status:     success",
        "Max delta:  0.000123457",
        "Experiment: stability",
        "Points:",
        "  • a",
        "  • b",
    ]
    assert _format_result({"fit": {"slope": 2.0000001, "n": 3}}) == "Fit: slope=2, n=3"
    assert _format_result(1.5) == "1.5"
