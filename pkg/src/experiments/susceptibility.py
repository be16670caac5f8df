"""
Partial susceptibilities at criticality.

S(R) = sum over |x| <= R of phi(0 <-> x) on a free box of half-size 2R. The
shell averages of phi are fitted by a power law and by an exponential; the
power law should win for 1 <= q <= 3.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from src.engines import estimate
from src.errors import FKLabError, InvalidParameterError
from src.experiments.report import ExperimentReport
from src.fk_model import EdgeConfiguration, MeasureSpec, cluster_labels, critical_point
from src.lattice_geometry import Graph, build_box

logger = logging.getLogger(__name__)


class ShellCounts:
    """Number of sites joined to the source in each distance shell, then the running totals."""

    def __init__(self, graph: Graph, source: int, shell: np.ndarray, n_shells: int):
        self.edges = graph.edges
        self.root = graph.root
        self.source = int(source)
        self.shell = np.asarray(shell, dtype=np.int64)
        self.n_shells = n_shells

    def __call__(self, config: EdgeConfiguration) -> np.ndarray:
        labels = cluster_labels(config.bits, self.edges, self.root)
        hit = (labels == labels[self.source]) & (self.shell > 0)
        counts = np.bincount(self.shell[hit], minlength=self.n_shells + 1)[1:].astype(np.float64)
        return np.concatenate([counts, np.cumsum(counts)])


def shells(graph: Graph, radius: int) -> np.ndarray:
    """Shell index ceil(|x|) of every site, 0 at the origin and beyond the radius."""
    r = np.hypot(graph.coords[:, 0], graph.coords[:, 1])
    idx = np.ceil(r - 1e-9).astype(np.int64)
    idx[idx > radius] = 0
    return idx


@dataclass
class DecayModels:
    alpha: float
    alpha_stderr: float
    rss_power: float
    rss_exponential: float
    log_growth: float
    log_growth_stderr: float

    @property
    def prefers_power_law(self) -> bool:
        return self.rss_power <= self.rss_exponential


def fit_decay_models(radii: np.ndarray, phi: np.ndarray, partial_sums: np.ndarray) -> DecayModels:
    """Power law log phi = c - alpha log r against exponential log phi = c - r / xi; S(R) against log R."""
    keep = phi > 0
    if keep.sum() < 3:
        raise InvalidParameterError("need at least three positive shell averages to fit decay models")
    r, y = radii[keep].astype(np.float64), np.log(phi[keep])
    power = stats.linregress(np.log(r), y)
    expo = stats.linregress(r, y)
    rss_power = float(np.sum((y - (power.intercept + power.slope * np.log(r))) ** 2))
    rss_exp = float(np.sum((y - (expo.intercept + expo.slope * r)) ** 2))
    growth = stats.linregress(np.log(radii.astype(np.float64)), partial_sums)
    return DecayModels(-float(power.slope), float(power.stderr), rss_power, rss_exp,
                       float(growth.slope), float(growth.stderr))


def run_susceptibility(q: float = 1.0, R: int = 16, n_samples: int = 4000, n_chains: Optional[int] = None,
                       burn_in: Optional[int] = None, workers: Optional[int] = None, seed: int = 0,
                       **_ignored) -> ExperimentReport:
    """S(R) at p_c for R = 1..R, its logarithmic growth and the power-law lower-bound fit."""
    params = {"q": q, "R": R, "n_samples": n_samples, "n_chains": n_chains, "burn_in": burn_in,
              "workers": workers, "box_half_size": 2 * R}
    report = ExperimentReport("chi", params, seed)
    if not 1.0 <= q <= 4.0:
        report.errors.append(f"q must lie in [1, 4], got {q}")
        return report.finish()
    pc = critical_point(q)
    try:
        box = build_box(2 * R)
        origin = box.site((0, 0))
        shell = shells(box, R)
        sizes = np.bincount(shell, minlength=R + 1)[1:]
        est = estimate(box, MeasureSpec(pc, q, "free"), ShellCounts(box, origin, shell, R), n_samples,
                       seed=seed, n_chains=n_chains, burn_in=burn_in, workers=workers)
    except FKLabError as e:
        logger.error(f"Susceptibility run failed: {e}", exc_info=True)
        report.errors.append(str(e))
        return report.finish()

    mean, se = np.asarray(est.mean), np.asarray(est.stderr)
    phi = mean[:R] / sizes
    phi_se = se[:R] / sizes
    partial = 1.0 + mean[R:]
    partial_se = se[R:]
    radii = np.arange(1, R + 1)
    for r in radii:
        report.record("shell_connectivity", phi[r - 1], q=q, p=pc, n=int(r), stderr=phi_se[r - 1])
        report.record("partial_susceptibility", partial[r - 1], q=q, p=pc, n=int(r), stderr=partial_se[r - 1])
    for r in radii[1:]:
        inc = partial[r - 1] - partial[r - 2]
        report.check("partial_sum_increasing", inc, inc > 0.0, 0.0, q=q, p=pc, n=int(r))

    exploratory = q > 3.0
    try:
        models = fit_decay_models(radii, phi, partial)
    except FKLabError as e:
        logger.error(f"Decay fits failed: {e}", exc_info=True)
        report.errors.append(str(e))
        return report.finish()
    report.record("alpha_hat", models.alpha, q=q, p=pc, n=R, stderr=models.alpha_stderr)
    report.check("power_law_lower_bound", models.alpha, math.isfinite(models.alpha) and models.alpha > 0.0, 0.0,
                 q=q, p=pc, n=R, stderr=models.alpha_stderr)
    report.record("rss_power_law", models.rss_power, q=q, p=pc, n=R)
    report.record("rss_exponential", models.rss_exponential, q=q, p=pc, n=R)
    report.check("power_law_preferred", models.rss_power - models.rss_exponential, models.prefers_power_law, 0.0,
                 q=q, p=pc, n=R, exploratory=exploratory)
    threshold = 3.0 * models.log_growth_stderr
    report.check("logarithmic_growth", models.log_growth, models.log_growth > threshold, threshold,
                 q=q, p=pc, n=R, stderr=models.log_growth_stderr, exploratory=exploratory)
    return report.finish()
