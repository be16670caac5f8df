import csv
import inspect
import json
import math
from unittest.mock import patch

import numpy as np
import pytest
from scipy import special

from src.engines import Estimate, ExactDistribution
from src.errors import InvalidParameterError
from src.experiments import EXPERIMENTS
from src.experiments.correlation_length import TwoPoint, fit_correlation_length
from src.experiments.crossing import half_strip_bound, half_strip_event, vertical_crossing
from src.experiments.kappa import predicted_kappa, run_kappa
from src.experiments.report import CSV_COLUMNS, ExperimentReport
from src.experiments.scaling import StripMap, complex_sn, scaling_domain
from src.experiments.susceptibility import ShellCounts, fit_decay_models, shells
from src.experiments.universal_cover import identity_tolerance, level_decay_bound, run_universal_cover
from src.experiments.verify import _samplers, run_verify_identities
from src.fk_model import EdgeConfiguration, MeasureSpec, critical_point
from src.lattice_geometry import build_box, build_crossing_rectangle, build_half_strip_rectangle
from src.parafermion import BoundaryIdentityResult

## Tests for the experiment registry

def test_registry_names():
    assert set(EXPERIMENTS) == {"verify", "crossing", "xi", "chi", "cover", "kappa", "scaling"}

## Tests for ExperimentReport

def test_report_verdict_ignores_exploratory_rows():
    report = ExperimentReport("demo", {"q": 2.0}, seed=3)
    report.check("must_hold", 0.0, True, 1e-12, q=2.0)
    report.check("may_fail", 1.0, False, 1e-12, q=2.0, exploratory=True)
    report.record("just_a_number", 42.0)
    assert report.passed
    assert report.failures == []

def test_report_fails_on_error():
    report = ExperimentReport("demo", {}, seed=0)
    report.errors.append("boom")
    assert not report.passed

def test_report_files(tmp_path):
    """CSV has the fixed schema, JSON embeds parameters and seed"""
    report = ExperimentReport("demo", {"n": 4}, seed=17)
    report.check("value_small", 0.5, False, 0.1, q=1.0, p=0.5, n=4)
    report.finish()
    csv_path = report.write_csv(tmp_path)
    json_path = report.write_json(tmp_path)
    with csv_path.open() as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1][CSV_COLUMNS.index("pass")] == "false"
    data = json.loads(json_path.read_text())
    assert data["seed"] == 17
    assert data["parameters"] == {"n": 4}
    assert data["passed"] is False

## Tests for kappa

@pytest.mark.parametrize("q, kappa", [(0.0, 8.0), (1.0, 6.0), (2.0, 16.0 / 3.0), (4.0, 4.0)])
def test_predicted_kappa(q, kappa):
    assert predicted_kappa(q) == pytest.approx(kappa, abs=1e-12)

def test_predicted_kappa_out_of_range():
    with pytest.raises(InvalidParameterError):
        predicted_kappa(4.5)

def test_run_kappa_records_table():
    report = run_kappa(qs=(1.0, 2.0, 5.0))
    kappas = [r for r in report.rows if r.quantity == "kappa"]
    assert [r.q for r in kappas] == [1.0, 2.0, 5.0]
    assert math.isnan(kappas[-1].value)
    assert report.passed

## Tests for crossing events

def test_crossing_probabilities_are_dual():
    """Distinct and inner-joined conventions are each other's dual events"""
    q = 2.0
    spec = MeasureSpec(critical_point(q), q)
    probs = {}
    for convention in ("distinct", "inner_joined"):
        dom = build_crossing_rectangle(1, convention=convention)
        event = vertical_crossing(dom)
        probs[convention] = ExactDistribution(dom, spec).probability(lambda c: event(c) > 0)
    assert probs["distinct"] + probs["inner_joined"] == pytest.approx(1.0, abs=1e-12)

def test_crossing_half_for_percolation():
    dom = build_crossing_rectangle(2, convention="distinct")
    event = vertical_crossing(dom)
    prob = ExactDistribution(dom, MeasureSpec(0.5, 1.0)).probability(lambda c: event(c) > 0)
    assert prob == pytest.approx(0.5, abs=1e-12)

def test_vertical_crossing_extremes():
    dom = build_crossing_rectangle(2)
    event = vertical_crossing(dom)
    assert event(EdgeConfiguration.all_open(dom.n_edges)) == 1.0
    assert event(EdgeConfiguration.all_closed(dom.n_edges)) == 0.0

def test_half_strip_event_uses_wiring():
    """With the sides wired, an open column from the origin reaches the target set"""
    dom = build_half_strip_rectangle(1)
    event = half_strip_event(dom)
    assert event(EdgeConfiguration.all_open(dom.n_edges)) == 1.0
    assert event(EdgeConfiguration.all_closed(dom.n_edges)) == 0.0

def test_half_strip_bound():
    assert half_strip_bound(2) == pytest.approx(1.0 / 128.0)

## Tests for correlation length fits

def test_fit_correlation_length_recovers_xi():
    ns = np.arange(1, 9)
    fit = fit_correlation_length(ns, 2.0 * np.exp(-ns / 3.0))
    assert fit.xi == pytest.approx(3.0, rel=1e-10)
    assert fit.n_points == 8

def test_fit_correlation_length_needs_points():
    with pytest.raises(InvalidParameterError):
        fit_correlation_length([1, 2, 3], [0.5, 0.0, 0.0])

def test_two_point_indicator():
    box = build_box(1)
    f = TwoPoint(box, box.site((0, 0)), [box.site((1, 0)), box.site((1, 1))])
    assert np.array_equal(f(EdgeConfiguration.all_open(box.n_edges)), [1.0, 1.0])
    assert np.array_equal(f(EdgeConfiguration.all_closed(box.n_edges)), [0.0, 0.0])

## Tests for susceptibility helpers

def test_shell_indices():
    box = build_box(2)
    idx = shells(box, 2)
    assert idx[box.site((0, 0))] == 0
    assert idx[box.site((1, 0))] == 1
    assert idx[box.site((1, 1))] == 2
    assert idx[box.site((2, 2))] == 0

def test_shell_counts_all_open():
    box = build_box(2)
    counts = ShellCounts(box, box.site((0, 0)), shells(box, 2), 2)
    assert np.array_equal(counts(EdgeConfiguration.all_open(box.n_edges)), [4.0, 8.0, 4.0, 12.0])

def test_fit_decay_models_prefers_power_law():
    radii = np.arange(1, 17)
    phi = radii ** -0.25
    models = fit_decay_models(radii, phi, np.cumsum(phi * radii))
    assert models.alpha == pytest.approx(0.25, rel=1e-10)
    assert models.prefers_power_law

## Tests for the cover and scaling helpers

def test_level_decay_bound():
    assert level_decay_bound(0.5, 2, 0) == 1.0
    assert level_decay_bound(0.5, 2, -2) == pytest.approx(0.75 ** 2)

def test_complex_sn_on_real_axis():
    assert complex_sn(complex(0.3, 0.0), 0.4) == pytest.approx(special.ellipj(0.3, 0.4)[0])

def test_strip_map_geometry():
    """The centre of the square lands on the midline of the strip, the bottom side on Im w = 0"""
    strip = StripMap(4.0, 4.0)
    assert strip(2.0, 2.0) == pytest.approx(0.5j, abs=1e-9)
    assert strip(1.0, 0.0).imag == pytest.approx(0.0, abs=1e-12)
    assert abs(strip.derivative(2.0, 2.0)) > 0

def test_scaling_domain_needs_even_side():
    with pytest.raises(InvalidParameterError):
        scaling_domain(5)
    dom = scaling_domain(4)
    assert dom.a == dom.site((4, 2)) and dom.b == dom.site((0, 2))

## Tests for the universal cover acceptance

def _cover_result(lhs, stderr, truncation_bound=1.86):
    return BoundaryIdentityResult(lhs=lhs, residual=abs(lhs - 1.0), complex_lhs=complex(0.0, lhs),
                                  complex_residual=abs(lhs - 1.0), real_part=0.0, stderr=stderr,
                                  truncation_bound=truncation_bound, mode="monte-carlo")

def _run_cover(result):
    quiet = Estimate(np.zeros(2), np.zeros(2), 100, np.full(2, 100.0))
    with patch("src.experiments.universal_cover.boundary_identity", return_value=result), \
            patch("src.experiments.universal_cover.estimate", return_value=quiet):
        return run_universal_cover(qs=(2.0,), n=1, T=1, exact_Ts=(), n_samples=10)

def test_cover_identity_far_from_one_fails():
    """A large truncation bound does not widen the acceptance band"""
    report = _run_cover(_cover_result(0.0, 0.05))
    rows = [r for r in report.rows if r.quantity == "cover_boundary_identity"]
    assert rows and not any(r.passed for r in rows)
    assert not report.passed
    bounds = [r for r in report.rows if r.quantity == "cover_truncation_bound"]
    assert bounds and all(r.passed is None for r in bounds)
    assert bounds[0].value == pytest.approx(1.86)

def test_cover_identity_within_noise_passes():
    report = _run_cover(_cover_result(1.01, 0.01))
    rows = [r for r in report.rows if r.quantity == "cover_boundary_identity"]
    assert rows and all(r.passed for r in rows)
    assert report.passed

def test_identity_tolerance():
    assert identity_tolerance(0.0) == pytest.approx(1e-12)
    assert identity_tolerance(0.1) == pytest.approx(0.3, rel=1e-9)

## Tests for the sampler family of verify

def test_verify_sampler_defaults():
    params = inspect.signature(run_verify_identities).parameters
    assert params["sampler_sweeps"].default == 1_000_000
    assert 0.5 in params["sampler_qs"].default

def test_sampler_family_below_q1_uses_heat_bath_only():
    report = ExperimentReport("verify", {}, seed=0)
    _samplers(report, [0.5], 2000, seed=0)
    names = {r.quantity for r in report.rows}
    assert "sampler_tv_heat_bath" in names
    assert "sampler_tv_chayes_machta" not in names
    assert report.errors == []
