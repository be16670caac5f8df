import numpy as np
import pytest

from src.errors import InvalidParameterError, UnsupportedDomainError
from src.lattice_geometry import (FROZEN, STUB, boundary_walk, build_box, build_crossing_rectangle, build_dobrushin,
                                  build_half_strip_rectangle, build_rectangle, build_slit_domain,
                                  build_universal_cover, corner_id, domain_from_descriptor, dual_graph, medial_graph,
                                  slit_sites, successor)


@pytest.fixture
def dobrushin_2x2():
    """Fixture providing the 2x2 Dobrushin square with the bottom side wired"""
    return build_dobrushin(2, 2)


@pytest.fixture
def slit_1():
    return build_slit_domain(1)

## Tests for builders

def test_box_counts():
    """[-n, n]^2 has (2n+1)^2 sites and 2 (2n+1) 2n edges"""
    box = build_box(2)
    assert box.n_sites == 25
    assert box.n_edges == 40
    assert len(box.boundary) == 16
    assert np.array_equal(box.root, np.arange(25))

def test_box_rejects_zero():
    with pytest.raises(InvalidParameterError):
        build_box(0)

def test_rectangle_counts():
    rect = build_rectangle(2, 1)
    assert rect.n_sites == 6
    assert rect.n_edges == 7

def test_dobrushin_freezes_wired_arc(dobrushin_2x2):
    """Edges between consecutive wired sites are frozen, not random"""
    assert dobrushin_2x2.n_edges == 10
    assert np.count_nonzero(dobrushin_2x2.half_edges == FROZEN) == 4
    bottom = [dobrushin_2x2.site((x, 0)) for x in range(3)]
    assert len(set(dobrushin_2x2.root[bottom])) == 1
    assert dobrushin_2x2.is_dobrushin

def test_dobrushin_rejects_off_boundary_marks():
    with pytest.raises(InvalidParameterError):
        build_dobrushin(2, 2, a=(1, 1))

def test_slit_domain_removes_positive_axis(slit_1):
    """The slit removes (k, 0) for k > 0 and reduces the wired arc to the origin"""
    assert slit_1.n_sites == 8
    assert slit_1.n_edges == 9
    assert (1, 0) not in slit_1.index
    assert slit_1.a == slit_1.b == slit_1.site((0, 0))

def test_slit_sites_include_origin():
    slit = build_slit_domain(2)
    sites = {tuple(int(c) for c in slit.coords[s]) for s in slit_sites(slit)}
    assert (0, 0) in sites
    assert (1, 1) in sites and (1, -1) in sites
    assert all(max(abs(x), abs(y)) < 2 for x, y in sites)

def test_slit_sites_need_slit(dobrushin_2x2):
    with pytest.raises(UnsupportedDomainError):
        slit_sites(dobrushin_2x2)

def test_universal_cover_levels():
    """Each level is a full box; levels are joined only across the cut"""
    cover = build_universal_cover(1, 1)
    assert cover.n_sites == 27
    assert cover.virtual_e_b
    assert cover.e_b == 4 * cover.n_sites
    fam = cover.edge_family
    assert np.count_nonzero(fam == 2) == 2
    assert not cover.is_planar

def test_crossing_rectangle_conventions():
    distinct = build_crossing_rectangle(2, convention="distinct")
    joined = build_crossing_rectangle(2, convention="joined")
    inner = build_crossing_rectangle(2, convention="inner_joined")
    assert distinct.n_edges == joined.n_edges == inner.n_edges == 13
    assert len(distinct.classes()) == 2
    assert len(joined.classes()) == 1
    assert len(inner.classes()) == 1
    corner = inner.site((0, 0))
    assert inner.root[corner] == corner

def test_crossing_rectangle_rejects_unknown_convention():
    with pytest.raises(InvalidParameterError):
        build_crossing_rectangle(2, convention="sideways")

def test_half_strip_rectangle_wires_three_sides():
    dom = build_half_strip_rectangle(1)
    assert dom.params["scale"] == 1
    top = dom.site((4, 1))
    left = dom.site((0, 1))
    assert dom.root[top] == dom.root[left]
    assert dom.root[dom.site((4, 0))] == dom.site((4, 0))

## Tests for successor and medial structure

def test_successor_turns(dobrushin_2x2):
    """Crossing an open edge turns right, bouncing off a closed one turns left"""
    s = dobrushin_2x2.site((1, 1))
    c = corner_id(s, 0)
    open_next, open_turn = successor(dobrushin_2x2, c, lambda h: True)
    closed_next, closed_turn = successor(dobrushin_2x2, c, lambda h: False)
    assert (open_turn, closed_turn) == (-1, 1)
    assert closed_next == corner_id(s, 1)
    assert open_next // 4 == dobrushin_2x2.site((1, 2))

def test_medial_ports_are_distinct(dobrushin_2x2):
    mg = medial_graph(dobrushin_2x2)
    for v in range(dobrushin_2x2.n_edges):
        ports = mg.port(v).as_tuple()
        assert len(set(ports)) == 4
        ins, outs = mg.incident(v)
        assert len(ins) == 2 and len(outs) == 2

def test_medial_midpoints_are_quarter_offsets(dobrushin_2x2):
    mg = medial_graph(dobrushin_2x2)
    s = dobrushin_2x2.site((1, 1))
    assert tuple(mg.midpoints[corner_id(s, 0)]) == (1.25, 1.25)

## Tests for dual_graph

def test_dual_of_box_has_outer_vertex():
    """Euler: faces + 1 outer vertex, dual edges indexed like primal ones"""
    box = build_box(1)
    dual = dual_graph(box)
    assert dual.n_sites == 5
    assert dual.n_edges == box.n_edges
    assert box.n_sites - box.n_edges + (dual.n_sites - 1) == 1

def test_dual_of_cover_is_refused():
    with pytest.raises(UnsupportedDomainError):
        dual_graph(build_universal_cover(1, 1))

## Tests for boundary_walk and descriptors

def test_boundary_walk_covers_free_arc(dobrushin_2x2):
    visits = boundary_walk(dobrushin_2x2)
    sites = [v.site for v in visits]
    assert sites[0] == dobrushin_2x2.a
    assert set(dobrushin_2x2.free_arc) <= set(sites)

def test_descriptor_round_trip():
    dom = build_dobrushin(3, 2, a=(3, 1), b=(0, 1))
    again = domain_from_descriptor(dom.to_descriptor())
    assert again.n_edges == dom.n_edges
    assert np.array_equal(again.root, dom.root)
    assert again.e_a == dom.e_a and again.e_b == dom.e_b

def test_descriptor_unknown_kind():
    with pytest.raises(InvalidParameterError):
        domain_from_descriptor({"kind": "torus"})

def test_stub_marks_missing_neighbours():
    box = build_box(1)
    corner = box.site((-1, -1))
    assert box.half_edges[corner, 2] == STUB and box.half_edges[corner, 3] == STUB
