import argparse
import inspect
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)

try:
    from src.config import Config
    from src.errors import FKLabError
    from src.experiments import EXPERIMENTS
    from src.experiments.report import ExperimentReport
except ImportError as e:
    # Log error before exiting
    logger.critical(f"Error importing critical modules: {e}. Ensure numpy, scipy and numba are installed and PYTHONPATH is set correctly.", exc_info=True)
    sys.exit(1)

SEED_MAX = 2 ** 64 - 1


def validate_configuration() -> bool:
    """Validates the numeric settings loaded from the environment."""
    logger.info("Validating configuration...")
    ok, problems = Config.validate()
    if not ok:
        for problem in problems:
            logger.error(f"Invalid configuration: {problem}")
        return False
    logger.info("Configuration validated successfully.")
    return True


def setup_logging():
    """Configures logging to console and file."""
    log_formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    log_level = getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    # Console Handler
    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(log_formatter)
    # Avoid adding handlers multiple times if main() runs twice in one process
    if not any(type(h) is logging.StreamHandler for h in root_logger.handlers):
        root_logger.addHandler(stream_handler)

    log_dir = Config.LOG_DIR
    if not os.path.exists(log_dir):
        try:
            log_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error(f"Error creating log directory {log_dir}: {e}. File logging disabled.")
            return
    log_file_path = Config.LOG_FILE
    if not any(isinstance(h, logging.FileHandler) and h.baseFilename == str(log_file_path) for h in root_logger.handlers):
        file_handler = logging.FileHandler(log_file_path)
        file_handler.setFormatter(log_formatter)
        root_logger.addHandler(file_handler)

    logger.info(f"Logging configured (Console & File: {log_file_path})")


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value <= SEED_MAX:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fklab", description="FK percolation: observables, identities and experiments.")
    parser.add_argument("experiment", choices=sorted(EXPERIMENTS), help="experiment to run")
    parser.add_argument("--config", type=Path, default=None, help="JSON file with experiment parameters")
    parser.add_argument("--seed", type=_seed, default=0, help="master seed (unsigned 64-bit)")
    parser.add_argument("--out", type=Path, default=Path("results"), help="output directory for CSV and JSON")
    return parser


def load_experiment_config(path: Optional[Path], experiment: str) -> Dict[str, Any]:
    """Parameters for one experiment; keys the experiment does not take are dropped with a warning.

    A config may be flat or keyed by experiment name.
    """
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    if isinstance(data.get(experiment), dict):
        data = data[experiment]
    accepted = {name for name, prm in inspect.signature(EXPERIMENTS[experiment]).parameters.items()
                if prm.kind is not inspect.Parameter.VAR_KEYWORD}
    params = {}
    for key, value in data.items():
        if key in EXPERIMENTS and isinstance(value, dict):
            continue
        if key not in accepted or key == "seed":
            logger.warning(f"Ignoring unknown key '{key}' for experiment {experiment}.")
            continue
        params[key] = value
    return params


def run_experiment(experiment: str, params: Dict[str, Any], seed: int) -> ExperimentReport:
    """Runs one experiment; errors become part of the report instead of escaping."""
    logger.info(f"Running experiment '{experiment}' (seed {seed}) with {params}")
    try:
        return EXPERIMENTS[experiment](seed=seed, **params)
    except FKLabError as e:
        logger.error(f"Experiment {experiment} failed: {e}", exc_info=True)
        report = ExperimentReport(experiment, params, seed)
        report.errors.append(str(e))
        return report.finish()


def write_outputs(report: ExperimentReport, out_dir: Path) -> List[Path]:
    paths = [report.write_csv(out_dir), report.write_json(out_dir)]
    for path in paths:
        logger.info(f"Wrote {path}")
    return paths


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging()
    logger.info("fklab started.")

    if not validate_configuration():
        logger.error("Halting due to configuration validation errors.")
        return 2

    # --- 1. Load parameters ---
    try:
        params = load_experiment_config(args.config, args.experiment)
    except (OSError, ValueError) as e:
        logger.error(f"Could not read config {args.config}: {e}", exc_info=True)
        return 2

    # --- 2. Run ---
    report = run_experiment(args.experiment, params, args.seed)

    # --- 3. Write reports ---
    try:
        write_outputs(report, args.out)
    except OSError as e:
        logger.error(f"Could not write reports to {args.out}: {e}", exc_info=True)
        return 1

    status = "PASS" if report.passed else "FAIL"
    print(f"{args.experiment}: {status} ({len(report.rows)} rows, {len(report.failures)} failing assertions, "
          f"{len(report.errors)} errors) -> {args.out}")
    logger.info("fklab finished.")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
