"""
Exact verification of the discrete identities at enumerable sizes.

Families: local relation (and its power off criticality), the q=4 G relation,
the proof-table oracle, the boundary phase law, contour sums and the boundary
identity with its coefficient bounds, the one-step martingale property,
duality, and sampler validity against enumeration.
"""

import cmath
import logging
import math
from typing import Iterable, Sequence

import numpy as np

from src.config import Config
from src.engines import ExactDistribution, empirical_distribution, sample_masks, total_variation
from src.errors import FKLabError
from src.experiments.report import ExperimentReport
from src.fk_model import MeasureSpec, critical_point, dual_measure_spec, dual_parameters
from src.lattice_geometry import (build_box, build_dobrushin, build_rectangle, build_slit_domain)
from src.parafermion import (boundary_identity, boundary_law_residual, contour_sum, contribution_table_check,
                             delta_bound, martingale_check, max_local_residual, observable_field, origin_term,
                             q4_relation_residual, slit_deltas, spin)

logger = logging.getLogger(__name__)

DEFAULT_QS = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5)
DEFAULT_OFF_CRITICAL = (0.45, 0.65)
DEFAULT_DOMAINS = ((2, 2), (3, 2), (3, 3))
OFF_CRITICAL_FLOOR = 1e-6


def _domain_label(domain) -> str:
    params = domain.params
    if domain.kind == "dobrushin":
        return f"dobrushin{params['width']}x{params['height']}"
    return f"{domain.kind}{params.get('n', '')}"


def _local_relations(report: ExperimentReport, domains, qs: Sequence[float], off_critical: Sequence[float]) -> None:
    tol = Config.EXACT_TOL
    for q in qs:
        pc = critical_point(q)
        for domain in domains:
            res = max_local_residual(observable_field(domain, MeasureSpec(pc, q)))
            report.check("local_relation", res, res < tol, tol, q=q, p=pc, n=_domain_label(domain))
    for p in off_critical:
        for domain in domains:
            res = max_local_residual(observable_field(domain, MeasureSpec(p, 2.0)))
            report.check("local_relation_off_critical", res, res > OFF_CRITICAL_FLOOR, OFF_CRITICAL_FLOOR,
                         q=2.0, p=p, n=_domain_label(domain), note="off-critical nonzero expected")


def _q4_relations(report: ExperimentReport, domains, ps: Sequence[float]) -> None:
    tol = Config.EXACT_TOL
    for domain in domains:
        for p in ps:
            spec = MeasureSpec(p, 4.0)
            f_res = max_local_residual(observable_field(domain, spec))
            report.check("q4_F_relation", f_res, f_res < tol, tol, q=4.0, p=p, n=_domain_label(domain))
            g_field = observable_field(domain, spec, kind="G")
            g_res = max(abs(q4_relation_residual(g_field, v)) for v in range(domain.n_edges))
            if abs(p - 2.0 / 3.0) < 1e-12:
                report.check("q4_G_relation", g_res, g_res < tol, tol, q=4.0, p=p, n=_domain_label(domain))
            else:
                report.check("q4_G_relation_off_critical", g_res, g_res > OFF_CRITICAL_FLOOR, OFF_CRITICAL_FLOOR,
                             q=4.0, p=p, n=_domain_label(domain))


def _proof_table(report: ExperimentReport, qs: Sequence[float]) -> None:
    domain = build_dobrushin(2, 2)
    for q in qs:
        pc = critical_point(q)
        spec = MeasureSpec(pc, q)
        ok = all(contribution_table_check(domain, spec, v) for v in range(domain.n_edges))
        report.check("proof_table", 0.0 if ok else 1.0, ok, Config.EXACT_TOL, q=q, p=pc, n="dobrushin2x2")


def _boundary_law(report: ExperimentReport, qs: Sequence[float]) -> None:
    tol = Config.EXACT_TOL
    for domain in (build_dobrushin(2, 2), build_slit_domain(1)):
        for q in qs:
            pc = critical_point(q)
            res = boundary_law_residual(domain, MeasureSpec(pc, q))
            report.check("boundary_law", res, res < tol, tol, q=q, p=pc, n=_domain_label(domain))


def _contour_and_boundary_identity(report: ExperimentReport, qs: Sequence[float], slit_n: int) -> None:
    tol = Config.CONTOUR_TOL
    small = build_slit_domain(1)
    for q in qs:
        pc = critical_point(q)
        fld = observable_field(small, MeasureSpec(pc, q))
        total = abs(contour_sum(fld, range(small.n_edges)))
        report.check("contour_sum", total, total < tol, tol, q=q, p=pc, n="slit1")
    off = observable_field(small, MeasureSpec(0.45, 2.0))
    total = abs(contour_sum(off, range(small.n_edges)))
    report.check("contour_sum_off_critical", total, total > OFF_CRITICAL_FLOOR, OFF_CRITICAL_FLOOR,
                 q=2.0, p=0.45, n="slit1", note="off-critical nonzero expected")

    slit = build_slit_domain(slit_n)
    label = f"slit{slit_n}"
    for q in qs:
        res = boundary_identity(slit, q)
        report.check("boundary_identity", res.lhs, res.residual < tol, tol, q=q, p=critical_point(q), n=label)
        report.check("boundary_identity_complex", res.complex_residual, res.complex_residual < tol, tol,
                     q=q, p=critical_point(q), n=label)
        report.check("boundary_identity_real_part", res.real_part, abs(res.real_part) < tol, tol,
                     q=q, p=critical_point(q), n=label)
        sigma = spin(q).sigma
        bound = delta_bound(sigma)
        slit_values = [d.delta for d in slit_deltas(slit, sigma)]
        worst = max((abs(d) for d in slit_values), default=0.0)
        report.check("delta_modulus_bound", worst, worst <= bound + 1e-12, bound, q=q, n=label)
        if 1.0 <= q <= 3.0:
            top = max(slit_values, default=0.0)
            report.check("delta_nonpositive_on_slit", top, top <= 1e-12, 0.0, q=q, n=label)


def _origin_term_identity(report: ExperimentReport) -> None:
    worst = 0.0
    for sigma in np.linspace(0.01, 0.99, 99):
        a = (sigma - 1.0) * 3.0 * math.pi / 4.0
        worst = max(worst, abs(origin_term(sigma, 3) - (-2j * math.sin(a) * cmath.exp(1j * a))))
    report.check("origin_term_identity", worst, worst < 1e-14, 1e-14)


def _martingale(report: ExperimentReport, qs: Sequence[float]) -> None:
    tol = Config.CONTOUR_TOL
    domain = build_dobrushin(2, 2)
    for q in qs:
        dev = martingale_check(domain, q)
        report.check("martingale", dev, dev < tol, tol, q=q, p=critical_point(q), n="dobrushin2x2")


def _duality(report: ExperimentReport, qs: Sequence[float]) -> None:
    box = build_box(1)
    full = (1 << box.n_edges) - 1
    masks = np.arange(1 << box.n_edges)
    for q in qs:
        pc = critical_point(q)
        for p in (0.3, pc, 0.7):
            spec = MeasureSpec(p, q, "free")
            primal = ExactDistribution(box, spec)
            dual_dist = ExactDistribution(*dual_measure_spec(box, spec))
            gap = float(np.max(np.abs(primal.probabilities - dual_dist.probabilities[full ^ masks])))
            report.check("duality_distribution", gap, gap < Config.EXACT_TOL, Config.EXACT_TOL, q=q, p=p, n="box1")
    grid = np.linspace(0.1, 4.0, 40)
    worst = max(abs(dual_parameters(critical_point(q), q)[0] - critical_point(q)) for q in grid)
    report.check("self_dual_point", worst, worst < 1e-14, 1e-14)


def _samplers(report: ExperimentReport, qs: Sequence[float], sweeps: int, seed: int) -> None:
    tol = 0.02
    for domain in (build_rectangle(1, 1), build_dobrushin(2, 1)):
        for q in qs:
            for p in (0.3, critical_point(q), 0.7):
                spec = MeasureSpec(p, q)
                exact = ExactDistribution(domain, spec).probabilities
                samplers = ("heat_bath",) if q < 1.0 else ("heat_bath", "chayes_machta")
                for sampler in samplers:
                    masks = sample_masks(domain, spec, sweeps, seed=seed, sampler=sampler)
                    tv = total_variation(empirical_distribution(masks, domain.n_edges), exact)
                    report.check(f"sampler_tv_{sampler}", tv, tv <= tol, tol, q=q, p=p, n=_domain_label(domain))
    spec = MeasureSpec(critical_point(2.0), 2.0)
    domain = build_dobrushin(2, 1)
    first = sample_masks(domain, spec, 1000, seed=seed)
    second = sample_masks(domain, spec, 1000, seed=seed)
    same = bool(np.array_equal(first, second))
    report.check("sampler_replay", 0.0 if same else 1.0, same, 0.0, q=2.0, n=_domain_label(domain))


def run_verify_identities(qs: Iterable[float] = DEFAULT_QS, ps: Iterable[float] = DEFAULT_OFF_CRITICAL,
                          domain_sizes: Iterable[Sequence[int]] = DEFAULT_DOMAINS, slit_n: int = 2,
                          q4_ps: Iterable[float] = (2.0 / 3.0, 0.5), boundary_qs: Iterable[float] = (1.0, 2.0, 3.0),
                          contour_qs: Iterable[float] = (1.0, 2.0, 2.9), table_qs: Iterable[float] = (1.5, 2.0, 3.0),
                          martingale_qs: Iterable[float] = (1.0, 2.0),
                          sampler_qs: Iterable[float] = (0.5, 1.0, 2.0, 3.0, 4.0),
                          sampler_sweeps: int = 1_000_000, seed: int = 0, **_ignored) -> ExperimentReport:
    """Run every identity family; each family failing with an error is recorded, not raised."""
    params = {"qs": list(qs), "ps": list(ps), "domain_sizes": [list(s) for s in domain_sizes], "slit_n": slit_n,
              "q4_ps": list(q4_ps), "boundary_qs": list(boundary_qs), "contour_qs": list(contour_qs),
              "table_qs": list(table_qs), "martingale_qs": list(martingale_qs), "sampler_qs": list(sampler_qs),
              "sampler_sweeps": sampler_sweeps}
    report = ExperimentReport("verify", params, seed)
    domains = [build_dobrushin(w, h) for w, h in params["domain_sizes"]]
    families = [
        ("local relations", lambda: _local_relations(report, domains, params["qs"], params["ps"])),
        ("q=4 relations", lambda: _q4_relations(report, domains, params["q4_ps"])),
        ("proof table", lambda: _proof_table(report, params["table_qs"])),
        ("boundary law", lambda: _boundary_law(report, params["boundary_qs"])),
        ("contour identities", lambda: _contour_and_boundary_identity(report, params["contour_qs"], slit_n)),
        ("origin term", lambda: _origin_term_identity(report)),
        ("martingale", lambda: _martingale(report, params["martingale_qs"])),
        ("duality", lambda: _duality(report, params["boundary_qs"])),
        ("samplers", lambda: _samplers(report, params["sampler_qs"], sampler_sweeps, seed)),
    ]
    for name, family in families:
        logger.info(f"--- verify: {name} ---")
        try:
            family()
        except FKLabError as e:
            logger.error(f"Verification family '{name}' failed: {e}", exc_info=True)
            report.errors.append(f"{name}: {e}")
    return report.finish()
