import json
import logging
from unittest.mock import patch

import pytest

from src.errors import InvalidParameterError
from src.experiments.report import ExperimentReport
from src.main import SEED_MAX, build_parser, load_experiment_config, main, run_experiment


@pytest.fixture
def kappa_config(tmp_path):
    """Fixture writing a config keyed by experiment name"""
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"kappa": {"qs": [1.0, 4.0], "colour": "blue"}, "xi": {"q": 2.0}}))
    return path

## Tests for the argument parser

def test_parser_defaults():
    args = build_parser().parse_args(["kappa"])
    assert args.seed == 0
    assert args.config is None
    assert str(args.out) == "results"

def test_parser_accepts_full_seed_range():
    assert build_parser().parse_args(["verify", "--seed", str(SEED_MAX)]).seed == SEED_MAX

def test_parser_rejects_negative_seed():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["verify", "--seed", "-1"])

def test_parser_rejects_unknown_experiment():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["teleport"])

## Tests for load_experiment_config

def test_load_config_keyed(kappa_config, caplog):
    """Unknown keys are dropped with a warning"""
    with caplog.at_level(logging.WARNING):
        params = load_experiment_config(kappa_config, "kappa")
    assert params == {"qs": [1.0, 4.0]}
    assert "colour" in caplog.text

def test_load_config_flat(tmp_path):
    path = tmp_path / "flat.json"
    path.write_text(json.dumps({"q": 1.5, "seed": 3}))
    assert load_experiment_config(path, "xi") == {"q": 1.5}

def test_load_config_none():
    assert load_experiment_config(None, "kappa") == {}

def test_load_config_rejects_list(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")
    with pytest.raises(ValueError):
        load_experiment_config(path, "kappa")

## Tests for run_experiment

def test_run_experiment_records_errors():
    """A domain error inside an experiment ends up in the report"""
    def broken(seed, **kw):
        raise InvalidParameterError("bad q")

    with patch.dict("src.main.EXPERIMENTS", {"kappa": broken}):
        report = run_experiment("kappa", {}, 5)
    assert isinstance(report, ExperimentReport)
    assert report.errors == ["bad q"]
    assert not report.passed

## Tests for main

@patch("src.main.setup_logging")
def test_main_kappa_writes_reports(mock_logging, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["kappa", "--out", str(out), "--seed", "12"]) == 0
    assert (out / "kappa.csv").exists()
    data = json.loads((out / "kappa.json").read_text())
    assert data["seed"] == 12
    assert "kappa: PASS" in capsys.readouterr().out
    mock_logging.assert_called_once()

@patch("src.main.setup_logging")
def test_main_bad_config_path(mock_logging, tmp_path):
    assert main(["kappa", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2

@patch("src.main.setup_logging")
@patch("src.main.validate_configuration", return_value=False)
def test_main_halts_on_invalid_configuration(mock_validate, mock_logging, tmp_path):
    assert main(["kappa", "--out", str(tmp_path)]) == 2

@patch("src.main.setup_logging")
def test_main_failing_report_exits_one(mock_logging, tmp_path):
    def failing(seed, **kw):
        report = ExperimentReport("kappa", {}, seed)
        report.check("always_wrong", 1.0, False, 0.0)
        return report.finish()

    with patch.dict("src.main.EXPERIMENTS", {"kappa": failing}):
        assert main(["kappa", "--out", str(tmp_path)]) == 1
