import numpy as np
import pytest

from src.engines import (ChainState, ExactDistribution, ExactEnumerator, chayes_machta_sweep, configurations,
                         empirical_distribution, enumerate_expectation, estimate, heat_bath_step, pick_sampler,
                         sample_masks, spawn_rngs, total_variation, transfer_connectivities, transfer_connectivity)
from src.errors import InvalidParameterError, TooLargeError, UnsupportedError
from src.fk_model import MeasureSpec, cluster_count, critical_point, weight
from src.lattice_geometry import build_box, build_dobrushin, build_rectangle
from src.parafermion import Connectivity


@pytest.fixture
def plaquette():
    return build_rectangle(1, 1)


class OpenCount:
    """Picklable functional counting open edges"""

    def __call__(self, config):
        return float(config.n_open)


class Constant:
    """Picklable functional ignoring the configuration"""

    def __call__(self, config):
        return 0.1

## Tests for exact enumeration

def test_configurations_in_mask_order():
    masks = [c.to_mask() for c in configurations(3)]
    assert masks == list(range(8))

def test_probabilities_sum_to_one(plaquette):
    dist = ExactDistribution(plaquette, MeasureSpec(0.3, 2.5))
    assert dist.probabilities.sum() == pytest.approx(1.0, abs=1e-14)

def test_partition_function_matches_weights(plaquette):
    spec = MeasureSpec(0.3, 2.5)
    z = sum(weight(c, plaquette, spec) for c in configurations(plaquette.n_edges))
    assert ExactDistribution(plaquette, spec).Z == pytest.approx(z, rel=1e-13)

def test_bernoulli_marginals_at_q1():
    """q = 1 is independent percolation"""
    dist = ExactDistribution(build_rectangle(2, 1), MeasureSpec(0.37, 1.0))
    assert np.allclose(dist.edge_marginals(), 0.37, atol=1e-14)

def test_enumerate_expectation(plaquette):
    spec = MeasureSpec(0.5, 1.0)
    assert enumerate_expectation(plaquette, spec, lambda c: c.n_open) == pytest.approx(2.0)

def test_enumeration_limit():
    with pytest.raises(TooLargeError):
        ExactDistribution(build_box(3), MeasureSpec(0.5, 2.0))

def test_enumerator_observables_on_marked_domain():
    dom = build_dobrushin(2, 1)
    res = ExactEnumerator(dom, MeasureSpec(0.5, 2.0), sigma=0.5, source=dom.b).run()
    assert res.F is not None and res.on_path is not None
    assert res.on_path[dom.e_a] == pytest.approx(1.0)
    assert res.connectivity[dom.b] == pytest.approx(1.0)

def test_enumerator_threads_agree():
    """Chunked reduction gives the same numbers as a single pass"""
    dom = build_dobrushin(2, 2)
    spec = MeasureSpec(critical_point(2.0), 2.0)
    one = ExactEnumerator(dom, spec, sigma=0.5, workers=1).run()
    four = ExactEnumerator(dom, spec, sigma=0.5, workers=4).run()
    assert one.Z == pytest.approx(four.Z, rel=1e-15)
    assert np.allclose(one.F, four.F, rtol=0.0, atol=1e-15)
    assert np.allclose(one.on_path, four.on_path, rtol=0.0, atol=1e-15)

## Tests for the frontier transfer

def test_transfer_matches_enumeration():
    box = build_box(1)
    spec = MeasureSpec(0.45, 2.0, "free")
    src = box.site((0, 0))
    conn = ExactEnumerator(box, spec, source=src).run().connectivity
    via_transfer = transfer_connectivities(box, spec, src)
    assert np.allclose(conn, via_transfer, atol=1e-12)

def test_transfer_partition_function(plaquette):
    spec = MeasureSpec(0.3, 2.5)
    z, _ = transfer_connectivity(plaquette, spec, 0, 1)
    assert z == pytest.approx(ExactDistribution(plaquette, spec).Z, rel=1e-12)

def test_transfer_source_to_itself(plaquette):
    assert transfer_connectivity(plaquette, MeasureSpec(0.3, 2.0), 2, 2)[1] == pytest.approx(1.0)

## Tests for the samplers

def test_spawn_rngs_are_reproducible():
    a = [g.random() for g in spawn_rngs(11, 3)]
    b = [g.random() for g in spawn_rngs(11, 3)]
    assert a == b
    assert len(set(a)) == 3

def test_chayes_machta_requires_q_at_least_one(plaquette):
    with pytest.raises(UnsupportedError):
        pick_sampler(plaquette, MeasureSpec(0.5, 0.5), "chayes_machta")
    state = ChainState.start(plaquette, spawn_rngs(0, 1)[0])
    with pytest.raises(UnsupportedError):
        chayes_machta_sweep(state, MeasureSpec(0.5, 0.5))

def test_pick_sampler_rejects_unknown(plaquette):
    with pytest.raises(InvalidParameterError):
        pick_sampler(plaquette, MeasureSpec(0.5, 2.0), "metropolis")

def test_heat_bath_step_rejects_bad_edge(plaquette):
    state = ChainState.start(plaquette, spawn_rngs(0, 1)[0])
    with pytest.raises(InvalidParameterError):
        heat_bath_step(state, MeasureSpec(0.5, 2.0), 9)

def test_heat_bath_keeps_wired_classes():
    """Frozen edges never enter the chain state"""
    dom = build_dobrushin(2, 1)
    state = ChainState.start(dom, spawn_rngs(3, 1)[0])
    assert state.bits.shape == (dom.n_edges,)
    heat_bath_step(state, MeasureSpec(0.5, 2.0), 0)
    assert state.steps == 1
    assert cluster_count(state.configuration, dom) >= 1

@pytest.mark.parametrize("sampler", ["heat_bath", "chayes_machta"])
def test_sampler_total_variation(plaquette, sampler):
    spec = MeasureSpec(critical_point(2.0), 2.0)
    masks = sample_masks(plaquette, spec, 40000, seed=5, sampler=sampler, burn_in=100)
    exact = ExactDistribution(plaquette, spec).probabilities
    assert total_variation(empirical_distribution(masks, plaquette.n_edges), exact) < 0.03

def test_heat_bath_below_q1(plaquette):
    """q < 1 has no cluster dynamics; single-edge updates still reach the FK law"""
    spec = MeasureSpec(critical_point(0.5), 0.5)
    masks = sample_masks(plaquette, spec, 40000, seed=11, sampler="heat_bath", burn_in=100)
    exact = ExactDistribution(plaquette, spec).probabilities
    assert total_variation(empirical_distribution(masks, plaquette.n_edges), exact) < 0.03

def test_sample_masks_replay(plaquette):
    spec = MeasureSpec(0.4, 1.5)
    first = sample_masks(plaquette, spec, 500, seed=9, burn_in=10)
    second = sample_masks(plaquette, spec, 500, seed=9, burn_in=10)
    assert np.array_equal(first, second)

def test_total_variation_extremes():
    assert total_variation([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)
    assert total_variation([0.5, 0.5], [0.5, 0.5]) == 0.0

## Tests for estimate

def test_estimate_reproducible(plaquette):
    spec = MeasureSpec(0.5, 2.0)
    a = estimate(plaquette, spec, OpenCount(), 300, n_chains=2, seed=4, burn_in=20, workers=1)
    b = estimate(plaquette, spec, OpenCount(), 300, n_chains=2, seed=4, burn_in=20, workers=1)
    assert a.mean == b.mean and a.stderr == b.stderr
    assert a.n_samples == 600

def test_estimate_close_to_exact(plaquette):
    spec = MeasureSpec(0.5, 2.0)
    exact = ExactDistribution(plaquette, spec).expectation(lambda c: float(c.n_open))
    est = estimate(plaquette, spec, OpenCount(), 5000, n_chains=2, seed=1, burn_in=50, workers=1)
    assert abs(est.mean - exact) < 5 * est.stderr + 0.02

def test_estimate_vector_functional(plaquette):
    spec = MeasureSpec(0.5, 2.0, "free")
    est = estimate(plaquette, spec, Connectivity(plaquette, 0), 200, n_chains=2, seed=2, burn_in=10, workers=1)
    assert est.mean.shape == (plaquette.n_sites,)
    assert est.mean[0] == pytest.approx(1.0)

def test_estimate_constant_functional(plaquette):
    """A constant has zero error and full effective sample size"""
    est = estimate(plaquette, MeasureSpec(0.5, 2.0), Constant(), 300, n_chains=2, seed=6, burn_in=10, workers=1)
    assert est.mean == pytest.approx(0.1)
    assert est.stderr == 0.0
    assert est.ess == 600
    assert not np.isnan(est.ess)

def test_estimate_rejects_empty_schedule(plaquette):
    with pytest.raises(InvalidParameterError):
        estimate(plaquette, MeasureSpec(0.5, 2.0), OpenCount(), 0)
