import numpy as np
import pytest

from src.engines import configurations
from src.errors import InvalidParameterError, NotOnPathError, UnsupportedDomainError
from src.fk_model import EdgeConfiguration, MeasureSpec, weight
from src.lattice_geometry import build_box, build_dobrushin, build_slit_domain
from src.loop_rep import (Path, Winding, boundary_windings, configuration_from_loops, exploration_path, loop_weight,
                          loops_of, path_from_sequence, to_polylines, turn_table, winding_along, windings_to_end)


@pytest.fixture
def dobrushin_2x1():
    """Fixture providing the 2x1 Dobrushin rectangle (7 random edges)"""
    return build_dobrushin(2, 1)

## Tests for Winding and Path

def test_winding_arithmetic():
    w = Winding(3) + Winding(-1)
    assert w == Winding(2)
    assert w.radians == pytest.approx(np.pi)

def test_winding_along_open_path():
    path = Path((10, 11, 12, 13), (1, 1, -1))
    assert winding_along(path, 10, 13) == Winding(1)
    assert winding_along(path, 13, 10) == Winding(-1)
    assert winding_along(path, 11, 11) == Winding(0)

def test_winding_along_closed_loop():
    """Going once around returns the turning number"""
    loop = Path((0, 1, 2, 3), (1, 1, 1, 1), closed=True)
    assert winding_along(loop, 2, 2) == Winding(4)
    assert winding_along(loop, 3, 1) == Winding(2)

def test_position_of_missing_edge():
    with pytest.raises(NotOnPathError):
        Path((1, 2), (1,)).position(7)

def test_windings_to_end_anchor():
    path = Path((5, 6, 7), (1, -1))
    assert windings_to_end(path) == {7: 0, 6: -1, 5: 0}

## Tests for exploration_path and loops_of

def test_exploration_path_runs_from_e_a_to_e_b(dobrushin_2x1):
    for config in configurations(dobrushin_2x1.n_edges):
        gamma = exploration_path(config, dobrushin_2x1)
        assert gamma.edges[0] == dobrushin_2x1.e_a
        assert gamma.edges[-1] == dobrushin_2x1.e_b
        assert len(gamma.turns) == len(gamma.edges) - 1

def test_exploration_path_needs_marks():
    box = build_box(1)
    with pytest.raises(UnsupportedDomainError):
        exploration_path(EdgeConfiguration.all_open(box.n_edges), box)

def test_loops_partition_the_medial_edges(dobrushin_2x1):
    """Every medial edge lies on exactly one loop or on gamma"""
    medial = set(np.flatnonzero(dobrushin_2x1.medial_mask).tolist())
    for config in configurations(dobrushin_2x1.n_edges):
        lc = loops_of(config, dobrushin_2x1)
        used = list(lc.exploration_path.edges)
        for loop in lc.loops:
            used.extend(loop.edges)
        assert len(used) == len(set(used))
        assert set(used) == medial

def test_closed_loops_make_one_full_turn(dobrushin_2x1):
    for config in configurations(dobrushin_2x1.n_edges):
        for loop in loops_of(config, dobrushin_2x1).loops:
            assert abs(sum(loop.turns)) == 4

def test_loops_round_trip():
    """configuration_from_loops inverts loops_of on every configuration"""
    dom = build_dobrushin(2, 2)
    for config in configurations(dom.n_edges):
        assert configuration_from_loops(loops_of(config, dom), dom) == config

def test_loop_weight_proportional_to_fk_weight(dobrushin_2x1):
    """x^o sqrt(q)^loops differs from p^o (1-p)^c q^k by a configuration-free constant"""
    spec = MeasureSpec(0.4, 2.0)
    ratios = [weight(c, dobrushin_2x1, spec) / loop_weight(c, dobrushin_2x1, spec.p, spec.q)
              for c in configurations(dobrushin_2x1.n_edges)]
    assert np.allclose(ratios, ratios[0], rtol=1e-12)

def test_loop_weight_rejects_p_one(dobrushin_2x1):
    with pytest.raises(InvalidParameterError):
        loop_weight(EdgeConfiguration.all_open(dobrushin_2x1.n_edges), dobrushin_2x1, 1.0, 2.0)

## Tests for boundary windings and the turn table

def test_boundary_windings_on_slit():
    """Three quarter turns separate e_a from e_b around the slit tip"""
    slit = build_slit_domain(1)
    w = boundary_windings(slit)
    assert w[slit.e_b] == 0
    assert w[slit.e_a] == 3

def test_turn_table_turns():
    table = turn_table()
    assert len(table) == 4
    for (entry, is_open), (exit_port, turn) in table.items():
        assert turn == (-1 if is_open else 1)
        assert exit_port not in ("NW", "SE")

def test_path_from_sequence_matches_exploration(dobrushin_2x1):
    gamma = exploration_path(EdgeConfiguration.all_closed(dobrushin_2x1.n_edges), dobrushin_2x1)
    again = path_from_sequence(dobrushin_2x1, gamma.edges)
    assert again.turns == gamma.turns

def test_polylines_close_loops(dobrushin_2x1):
    lc = loops_of(EdgeConfiguration.all_closed(dobrushin_2x1.n_edges), dobrushin_2x1)
    lines = to_polylines(lc, dobrushin_2x1)
    assert len(lines["exploration_path"]) == 1
    assert len(lines["loops"]) == lc.loop_count
    for line in lines["loops"]:
        assert line[0] == line[-1]
