"""
Predicted SLE parameter of the exploration path.
"""

import logging
import math
from typing import Iterable

from src.errors import InvalidParameterError
from src.experiments.report import ExperimentReport
from src.parafermion import spin

logger = logging.getLogger(__name__)


def predicted_kappa(q: float) -> float:
    """4 pi / arccos(-sqrt(q) / 2) for 0 <= q <= 4."""
    if not 0.0 <= q <= 4.0:
        raise InvalidParameterError(f"the prediction covers 0 <= q <= 4, got q={q}")
    return 4.0 * math.pi / math.acos(max(-1.0, -math.sqrt(q) / 2.0))


def run_kappa(qs: Iterable[float] = (0.0, 0.5, 1.0, 2.0, 3.0, 4.0), seed: int = 0, **_ignored) -> ExperimentReport:
    """Report-only table of kappa(q) and the spin sigma(q)."""
    params = {"qs": list(qs)}
    report = ExperimentReport("kappa", params, seed)
    for q in params["qs"]:
        try:
            report.record("kappa", predicted_kappa(q), q=q)
            report.record("sigma", spin(q).sigma, q=q)
        except InvalidParameterError as e:
            logger.warning(f"Skipping q={q}: {e}")
            report.record("kappa", float("nan"), q=q, note=str(e))
    return report.finish()
