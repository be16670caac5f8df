"""
Correlation length below criticality.

phi^0(0 <-> (n, 0)) is estimated on a free box of half-size 2 n_max, a proxy
that lower-bounds the infinite-volume free measure by comparison between
boundary conditions. xi(p) is fitted from log phi against n.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from src.config import Config
from src.engines import ExactDistribution, Estimate, configurations, estimate
from src.errors import FKLabError, InvalidParameterError
from src.experiments.report import ExperimentReport
from src.fk_model import EdgeConfiguration, MeasureSpec, cluster_labels, comparison_gap, critical_point, fkg_gap
from src.lattice_geometry import Graph, build_box, build_rectangle

logger = logging.getLogger(__name__)


class TwoPoint:
    """Vector of 1{source <-> x} over a list of target sites."""

    def __init__(self, graph: Graph, source: int, targets: Sequence[int]):
        self.edges = graph.edges
        self.root = graph.root
        self.source = int(source)
        self.targets = np.asarray(targets, dtype=np.int64)

    def __call__(self, config: EdgeConfiguration) -> np.ndarray:
        labels = cluster_labels(config.bits, self.edges, self.root)
        return (labels[self.targets] == labels[self.source]).astype(np.float64)


@dataclass
class DecayFit:
    xi: float
    xi_stderr: float
    slope: float
    intercept: float
    r_value: float
    n_points: int


def fit_correlation_length(ns: Sequence[int], phi: Sequence[float]) -> DecayFit:
    """Least-squares fit of log phi(n) = a - n / xi over the strictly positive estimates."""
    ns = np.asarray(ns, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    keep = phi > 0
    if keep.sum() < 3:
        raise InvalidParameterError("need at least three positive connectivities to fit a decay rate")
    res = stats.linregress(ns[keep], np.log(phi[keep]))
    if res.slope >= 0:
        return DecayFit(math.inf, math.inf, float(res.slope), float(res.intercept), float(res.rvalue), int(keep.sum()))
    xi = -1.0 / res.slope
    return DecayFit(xi, res.stderr / res.slope ** 2, float(res.slope), float(res.intercept), float(res.rvalue),
                    int(keep.sum()))


def axis_connectivities(q: float, p: float, n_max: int, n_samples: int, seed: int, **mc) -> Estimate:
    """phi^0(0 <-> (n, 0)) for n = 1..n_max on the free box of half-size 2 n_max."""
    box = build_box(2 * n_max)
    origin = box.site((0, 0))
    targets = [box.site((n, 0)) for n in range(1, n_max + 1)]
    spec = MeasureSpec(p, q, "free")
    return estimate(box, spec, TwoPoint(box, origin, targets), n_samples, seed=seed, **mc)


def _supermultiplicativity(report: ExperimentReport, q: float, p: float, est: Estimate) -> None:
    phi = np.atleast_1d(est.mean)
    se = np.atleast_1d(est.stderr)
    n_max = phi.shape[0]
    for n in range(1, n_max):
        for m in range(n, n_max - n + 1):
            lhs = phi[n + m - 1]
            rhs = phi[n - 1] * phi[m - 1]
            combined = math.sqrt(se[n + m - 1] ** 2 + (phi[m - 1] * se[n - 1]) ** 2 + (phi[n - 1] * se[m - 1]) ** 2)
            report.check("supermultiplicativity", lhs - rhs, lhs >= rhs - 3.0 * combined, 3.0 * combined,
                         q=q, p=p, n=f"{n}+{m}", stderr=combined)


def _exact_fkg(report: ExperimentReport, qs: Sequence[float], ps: Sequence[float]) -> None:
    """Exact supermultiplicativity and the free-proxy comparison on 2x2 boxes."""
    tol = Config.EXACT_TOL
    rect = build_rectangle(2, 2)
    s, m, t = rect.site((0, 1)), rect.site((1, 1)), rect.site((2, 1))
    box = build_box(1)
    o, x = box.site((0, 0)), box.site((1, 0))
    for q in qs:
        for p in ps:
            dist = ExactDistribution(rect, MeasureSpec(p, q, "free"))
            probe = TwoPoint(rect, s, [m, t])
            hits = np.array([probe(c) for c in configurations(dist.n_edges)])
            mid = TwoPoint(rect, m, [t])
            second = np.array([mid(c)[0] for c in configurations(dist.n_edges)], dtype=bool)
            first, through = hits[:, 0].astype(bool), hits[:, 1].astype(bool)
            gap = float(dist.probabilities[through].sum()) - float(dist.probabilities[first].sum()) * \
                float(dist.probabilities[second].sum())
            report.check("exact_supermultiplicativity", gap, gap >= -tol, tol, q=q, p=p, n="rect2x2")
            corr = fkg_gap(dist.probabilities, first, second, q)
            report.check("exact_fkg", corr, corr >= -tol, tol, q=q, p=p, n="rect2x2")

            free = ExactDistribution(box, MeasureSpec(p, q, "free"))
            wired = ExactDistribution(box, MeasureSpec(p, q, "wired"))
            probe = TwoPoint(box, o, [x])
            event = np.array([probe(c)[0] for c in configurations(free.n_edges)], dtype=bool)
            cmp_gap = comparison_gap(wired.probabilities, free.probabilities, event, q)
            report.check("free_proxy_lower_bound", cmp_gap, cmp_gap >= -tol, tol, q=q, p=p, n="box1")


def run_correlation_length(q: float = 1.0, ps: Iterable[float] = (0.35, 0.42, 0.48), n_max: int = 8,
                           n_samples: int = 4000, n_chains: Optional[int] = None, burn_in: Optional[int] = None,
                           workers: Optional[int] = None, exact_qs: Iterable[float] = (1.0, 2.0),
                           seed: int = 0, **_ignored) -> ExperimentReport:
    """Fitted xi(p) along a grid below p_c, its monotonicity and supermultiplicativity."""
    ps = sorted(float(p) for p in ps)
    params = {"q": q, "ps": ps, "n_max": n_max, "n_samples": n_samples, "n_chains": n_chains,
              "burn_in": burn_in, "workers": workers, "exact_qs": list(exact_qs), "box_half_size": 2 * n_max}
    report = ExperimentReport("xi", params, seed)
    pc = critical_point(q)
    if any(p >= pc for p in ps):
        report.errors.append(f"p grid must lie strictly below p_c(q) = {pc:.6f}")
        return report.finish()
    mc = {"n_chains": n_chains, "burn_in": burn_in, "workers": workers}
    fits: List[Tuple[float, DecayFit]] = []
    for k, p in enumerate(ps):
        logger.info(f"--- xi: q={q:g}, p={p:g} ---")
        try:
            est = axis_connectivities(q, p, n_max, n_samples, seed + k, **mc)
            phi = np.atleast_1d(est.mean)
            for n in range(1, n_max + 1):
                report.record("two_point", phi[n - 1], q=q, p=p, n=n, stderr=float(np.atleast_1d(est.stderr)[n - 1]))
            fit = fit_correlation_length(range(1, n_max + 1), phi)
            report.record("xi_hat", fit.xi, q=q, p=p, n=n_max, stderr=fit.xi_stderr,
                          note=f"fit over {fit.n_points} points, r={fit.r_value:.4f}")
            fits.append((p, fit))
            _supermultiplicativity(report, q, p, est)
        except FKLabError as e:
            logger.error(f"Correlation length at p={p} failed: {e}", exc_info=True)
            report.errors.append(f"p={p}: {e}")
    for (p0, f0), (p1, f1) in zip(fits, fits[1:]):
        sep = f1.xi - f0.xi
        combined = math.hypot(f0.xi_stderr, f1.xi_stderr)
        report.check("xi_increasing", sep, sep > combined, combined, q=q, p=p1, n=n_max, stderr=combined,
                     note=f"against p={p0:g}")
    try:
        _exact_fkg(report, params["exact_qs"], (0.3, 0.5))
    except FKLabError as e:
        logger.error(f"Exact FKG checks failed: {e}", exc_info=True)
        report.errors.append(f"exact: {e}")
    return report.finish()
