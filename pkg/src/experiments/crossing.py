"""
Crossing probabilities at the self-dual point.

The vertical crossing of [0, n] x [0, n+1] is computed under the three
conventions for the wired sides. Under "distinct" and "inner_joined" the
graph is its own planar dual up to the convention, so the two probabilities
sum to one exactly; they coincide with 1/2 only at q = 1.
"""

import logging
import math
from typing import Iterable, Optional, Sequence

import numpy as np

from src.config import Config
from src.engines import ExactDistribution, estimate
from src.errors import FKLabError
from src.experiments.report import ExperimentReport
from src.fk_model import EdgeConfiguration, MeasureSpec, cluster_labels, critical_point
from src.lattice_geometry import CROSSING_CONVENTIONS, Graph, build_crossing_rectangle, build_half_strip_rectangle

logger = logging.getLogger(__name__)


class CrossingEvent:
    """1{some source site is joined to some target site}, optionally ignoring the boundary wiring."""

    def __init__(self, graph: Graph, sources: Sequence[int], targets: Sequence[int], through_boundary: bool = False):
        self.edges = graph.edges
        self.root = graph.root if through_boundary else np.arange(graph.n_sites, dtype=np.int64)
        self.sources = np.asarray(sources, dtype=np.int64)
        self.targets = np.asarray(targets, dtype=np.int64)

    def __call__(self, config: EdgeConfiguration) -> float:
        labels = cluster_labels(config.bits, self.edges, self.root)
        return 1.0 if np.intersect1d(labels[self.sources], labels[self.targets]).size else 0.0


def vertical_crossing(domain: Graph) -> CrossingEvent:
    """Open path from the bottom row to the top row using open edges only."""
    ys = domain.coords[:, 1]
    bottom = np.flatnonzero(ys == ys.min())
    top = np.flatnonzero(ys == ys.max())
    return CrossingEvent(domain, bottom, top)


def half_strip_event(domain) -> CrossingEvent:
    """The origin (4n, 0) joined to the top or sides of [-ceil(n/16), ceil(n/16)] x [0, ceil(n/4)] around it."""
    n = int(domain.params["scale"])
    half = math.ceil(n / 16)
    rise = math.ceil(n / 4)
    cx = 4 * n
    origin = domain.site((cx, 0))
    targets = [domain.site((x, rise)) for x in range(cx - half, cx + half + 1)]
    for y in range(0, rise):
        targets += [domain.site((cx - half, y)), domain.site((cx + half, y))]
    return CrossingEvent(domain, [origin], targets, through_boundary=True)


def half_strip_bound(n: int) -> float:
    return 1.0 / (16.0 * n ** 3)


def _exact_crossings(report: ExperimentReport, ns: Sequence[int], qs: Sequence[float]) -> None:
    tol = Config.EXACT_TOL
    for n in ns:
        for q in qs:
            pc = critical_point(q)
            probs = {}
            for convention in CROSSING_CONVENTIONS:
                domain = build_crossing_rectangle(n, convention=convention)
                event = vertical_crossing(domain)
                probs[convention] = ExactDistribution(domain, MeasureSpec(pc, q)).probability(lambda c: event(c) > 0)
                report.record(f"crossing_exact_{convention}", probs[convention], q=q, p=pc, n=n)
            total = probs["distinct"] + probs["inner_joined"]
            report.check("crossing_dual_sum", total, abs(total - 1.0) < tol, tol, q=q, p=pc, n=n)
            half = abs(probs["distinct"] - 0.5) < tol
            report.check("crossing_exact_half", probs["distinct"], half, tol, q=q, p=pc, n=n,
                         exploratory=q != 1.0,
                         note="" if q == 1.0 else "distinct wired sides; equals 1/2 only at q=1")
            if q >= 1.0:
                report.check("crossing_joined_at_least_half", probs["joined"], probs["joined"] >= 0.5 - tol, tol,
                             q=q, p=pc, n=n)


def _mc_crossings(report: ExperimentReport, n: int, square_n: int, qs: Sequence[float], n_samples: int,
                  seed: int, mc: dict) -> None:
    for k, q in enumerate(qs):
        pc = critical_point(q)
        spec = MeasureSpec(pc, q)
        est = {}
        for j, convention in enumerate(("distinct", "inner_joined")):
            domain = build_crossing_rectangle(n, convention=convention)
            est[convention] = estimate(domain, spec, vertical_crossing(domain), n_samples,
                                       seed=seed + 16 * k + j, **mc)
        d, ij = est["distinct"], est["inner_joined"]
        z = 3.0 * math.hypot(d.stderr, ij.stderr)
        total = d.mean + ij.mean
        report.check("crossing_mc_dual_sum", total, abs(total - 1.0) <= z, z, q=q, p=pc, n=n,
                     stderr=math.hypot(d.stderr, ij.stderr))
        report.check("crossing_mc_half", d.mean, abs(d.mean - 0.5) <= 3.0 * d.stderr, 3.0 * d.stderr,
                     q=q, p=pc, n=n, stderr=d.stderr, exploratory=q != 1.0)

        square = build_crossing_rectangle(square_n, height=square_n, convention="joined")
        sq = estimate(square, spec, vertical_crossing(square), n_samples, seed=seed + 16 * k + 2, **mc)
        report.check("square_crossing_at_least_half", sq.mean, sq.mean >= 0.5 - 3.0 * sq.stderr, 3.0 * sq.stderr,
                     q=q, p=pc, n=square_n, stderr=sq.stderr)


def _half_strip(report: ExperimentReport, n: int, q: float, n_samples: int, seed: int, mc: dict) -> None:
    pc = critical_point(q)
    domain = build_half_strip_rectangle(n)
    est = estimate(domain, MeasureSpec(pc, q), half_strip_event(domain), n_samples, seed=seed + 1000, **mc)
    bound = half_strip_bound(n)
    report.check("half_strip_lower_bound", est.mean, est.mean >= bound, bound, q=q, p=pc, n=n, stderr=est.stderr)


def run_crossing(n: int = 8, mode: str = "both", qs: Iterable[float] = (1.0, 2.0),
                 exact_ns: Iterable[int] = (1, 2), exact_qs: Iterable[float] = (1.0, 1.5, 2.0, 3.0, 4.0),
                 square_n: Optional[int] = None, half_strip_n: int = 4, half_strip_q: float = 1.5, n_samples: int = 4000,
                 n_chains: Optional[int] = None, burn_in: Optional[int] = None, workers: Optional[int] = None,
                 seed: int = 0, **_ignored) -> ExperimentReport:
    """Self-dual crossing checks: exact for small n, Monte Carlo for n (mode 'exact', 'monte-carlo' or 'both')."""
    square_n = n if square_n is None else square_n
    params = {"n": n, "mode": mode, "qs": list(qs), "exact_ns": list(exact_ns), "exact_qs": list(exact_qs),
              "square_n": square_n, "half_strip_n": half_strip_n, "half_strip_q": half_strip_q, "n_samples": n_samples,
              "n_chains": n_chains, "burn_in": burn_in, "workers": workers}
    report = ExperimentReport("crossing", params, seed)
    mc = {"n_chains": n_chains, "burn_in": burn_in, "workers": workers}
    steps = []
    if mode in ("exact", "both"):
        steps.append(("exact", lambda: _exact_crossings(report, params["exact_ns"], params["exact_qs"])))
    if mode in ("monte-carlo", "both"):
        steps.append(("monte-carlo", lambda: _mc_crossings(report, n, square_n, params["qs"], n_samples, seed, mc)))
        steps.append(("half-strip", lambda: _half_strip(report, half_strip_n, half_strip_q, n_samples, seed, mc)))
    if not steps:
        report.errors.append(f"unknown mode {mode!r}")
    for name, step in steps:
        logger.info(f"--- crossing: {name} ---")
        try:
            step()
        except FKLabError as e:
            logger.error(f"Crossing step '{name}' failed: {e}", exc_info=True)
            report.errors.append(f"{name}: {e}")
    return report.finish()
