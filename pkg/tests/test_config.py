import logging
from unittest.mock import patch

import pytest

from src.config import BASE_DIR, Config, _env_float, _env_int

## Tests for Config defaults

def test_config_display(capsys):
    """Print the current configuration and check it validates."""
    logging.disable(logging.CRITICAL)
    print("fklab Configuration Test")
    print("========================")
    print(f"Project base directory: {BASE_DIR}")
    print(f"Enumeration limit: {Config.ENUMERATION_LIMIT}")
    print(f"Chains x batches: {Config.N_CHAINS} x {Config.N_BATCHES}")
    is_valid, problems = Config.validate()
    print("\nConfiguration validation:", "✓ Passed" if is_valid else "✗ Failed")
    logging.disable(logging.NOTSET)

    captured = capsys.readouterr()
    assert "fklab Configuration Test" in captured.out
    assert "Project base directory:" in captured.out
    assert "✓ Passed" in captured.out, f"Configuration validation failed: {problems}"

def test_log_file_inside_log_dir():
    """The log file lives in the log directory."""
    assert Config.LOG_FILE.parent == Config.LOG_DIR

## Tests for Config.validate

def test_validate_rejects_bad_enumeration_limit():
    """Limits above 30 edges are refused."""
    with patch.object(Config, "ENUMERATION_LIMIT", 40):
        ok, problems = Config.validate()
    assert not ok
    assert any("ENUMERATION_LIMIT" in p for p in problems)

def test_validate_rejects_inverted_tolerances():
    with patch.object(Config, "EXACT_TOL", 1e-6), patch.object(Config, "CONTOUR_TOL", 1e-10):
        ok, problems = Config.validate()
    assert not ok
    assert any("tolerances" in p for p in problems)

def test_validate_rejects_unknown_log_level():
    with patch.object(Config, "LOG_LEVEL", "CHATTY"):
        ok, _ = Config.validate()
    assert not ok

## Tests for environment parsing

def test_env_int_reads_value(monkeypatch):
    monkeypatch.setenv("FKLAB_TEST_INT", "7")
    assert _env_int("FKLAB_TEST_INT", 3) == 7

def test_env_int_falls_back_on_garbage(monkeypatch, caplog):
    """Non-integer values are ignored with a warning."""
    monkeypatch.setenv("FKLAB_TEST_INT", "seven")
    with caplog.at_level(logging.WARNING):
        assert _env_int("FKLAB_TEST_INT", 3) == 3
    assert "FKLAB_TEST_INT" in caplog.text

def test_env_float_missing(monkeypatch):
    monkeypatch.delenv("FKLAB_TEST_FLOAT", raising=False)
    assert _env_float("FKLAB_TEST_FLOAT", 0.5) == pytest.approx(0.5)
