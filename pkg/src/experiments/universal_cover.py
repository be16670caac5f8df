"""
Boundary identity on truncated universal covers, exactly on the smallest ones and by Monte Carlo.
"""

import logging
import math
from typing import Iterable, Optional

import numpy as np

from src.config import Config
from src.engines import estimate
from src.errors import FKLabError
from src.experiments.correlation_length import TwoPoint
from src.experiments.report import ExperimentReport
from src.fk_model import MeasureSpec, critical_point
from src.lattice_geometry import build_universal_cover
from src.parafermion import boundary_identity

logger = logging.getLogger(__name__)


def level_decay_bound(p: float, n: int, level: int) -> float:
    """[1 - (1 - p)^n]^|x3|: every level change crosses a cut of n edges."""
    return (1.0 - (1.0 - p) ** n) ** abs(level)


def identity_tolerance(stderr: float) -> float:
    """Acceptance band of a Monte Carlo identity residual on the truncated cover, where it holds exactly."""
    return 3.0 * stderr + Config.EXACT_TOL


def _identity(report: ExperimentReport, q: float, n: int, T: int, n_samples: int, seed: int, mc: dict):
    cover = build_universal_cover(n, T)
    p = critical_point(q)
    res = boundary_identity(cover, q, mode="monte-carlo", n_samples=n_samples, seed=seed, **mc)
    tol = identity_tolerance(res.stderr)
    report.check("cover_boundary_identity", res.lhs, res.residual <= tol, tol, q=q, p=p, n=f"{n}/T{T}",
                 stderr=res.stderr)
    report.record("cover_truncation_bound", res.truncation_bound, q=q, p=p, n=f"{n}/T{T}")
    if q < 4.0:
        report.check("cover_real_part", res.real_part, abs(res.real_part) <= tol, tol, q=q, p=p,
                     n=f"{n}/T{T}", stderr=res.stderr, exploratory=True)
    return res


def _exact_identity(report: ExperimentReport, q: float, n: int, T: int) -> None:
    res = boundary_identity(build_universal_cover(n, T), q)
    tol = Config.CONTOUR_TOL
    report.check("cover_boundary_identity_exact", res.lhs, res.residual <= tol, tol, q=q, p=critical_point(q),
                 n=f"{n}/T{T}")


def _decay(report: ExperimentReport, q: float, n: int, T: int, n_samples: int, seed: int, mc: dict) -> None:
    cover = build_universal_cover(n, T)
    p = critical_point(q)
    origin = cover.site((0, 0, 0))
    levels = [k for k in range(-T, T + 1) if k != 0]
    probes = [cover.site((0, 0, k)) for k in levels]
    est = estimate(cover, MeasureSpec(p, q), TwoPoint(cover, origin, probes), n_samples, seed=seed,
                   sampler="heat_bath", **mc)
    mean, se = np.atleast_1d(est.mean), np.atleast_1d(est.stderr)
    for k, phi, s in zip(levels, mean, se):
        bound = level_decay_bound(p, n, k)
        report.check("cover_level_decay", phi, phi <= bound + 3.0 * s, bound, q=q, p=p, n=f"{n}/x3={k}", stderr=s)


def run_universal_cover(qs: Iterable[float] = (2.0, 3.5, 4.0), n: int = 1, T: int = 3,
                        exact_Ts: Iterable[int] = (1,), n_samples: int = 4000,
                        n_chains: Optional[int] = None, burn_in: Optional[int] = None,
                        workers: Optional[int] = None, seed: int = 0, **_ignored) -> ExperimentReport:
    """Exact identity on small covers, Monte Carlo residual at T and T+1, and the level decay bound, per q."""
    params = {"qs": list(qs), "n": n, "T": T, "exact_Ts": list(exact_Ts), "n_samples": n_samples,
              "n_chains": n_chains, "burn_in": burn_in, "workers": workers}
    report = ExperimentReport("cover", params, seed)
    mc = {"n_chains": n_chains, "burn_in": burn_in, "workers": workers}
    for k, q in enumerate(params["qs"]):
        logger.info(f"--- cover: q={q:g}, n={n}, T={T} ---")
        try:
            for t in params["exact_Ts"]:
                _exact_identity(report, q, n, t)
            first = _identity(report, q, n, T, n_samples, seed + 8 * k, mc)
            second = _identity(report, q, n, T + 1, n_samples, seed + 8 * k + 1, mc)
            diff = abs(first.lhs - second.lhs)
            tol = identity_tolerance(math.hypot(first.stderr, second.stderr)) + Config.EXACT_TOL
            report.check("cover_truncation_sensitivity", diff, diff <= tol, tol, q=q, p=critical_point(q),
                         n=f"{n}/T{T}-T{T + 1}", stderr=math.hypot(first.stderr, second.stderr))
            _decay(report, q, n, T, n_samples, seed + 8 * k + 2, mc)
        except FKLabError as e:
            logger.error(f"Universal cover run at q={q} failed: {e}", exc_info=True)
            report.errors.append(f"q={q}: {e}")
    return report.finish()
