"""
Loop representation of FK configurations on the medial graph.

At every medial vertex a loop turns by a quarter turn, away from the open
primal edge or the open dual edge. Windings are kept as integer numbers of
quarter turns, counterclockwise positive.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.errors import InvalidParameterError, NotOnPathError, UnsupportedDomainError
from src.fk_model import EdgeConfiguration
from src.lattice_geometry import LatticeDomain, medial_graph, successor

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class Winding:
    """Signed rotation in quarter turns."""

    quarter_turns: int

    @property
    def radians(self) -> float:
        return self.quarter_turns * math.pi / 2.0

    def __add__(self, other: "Winding") -> "Winding":
        return Winding(self.quarter_turns + other.quarter_turns)


@dataclass(frozen=True)
class Path:
    """Consecutive medial edges and the turn taken after each but the last.

    For a closed loop `turns` has one more entry: the turn back into the
    first edge.
    """

    edges: Tuple[int, ...]
    turns: Tuple[int, ...]
    closed: bool = False

    def position(self, edge: int) -> int:
        try:
            return self.edges.index(edge)
        except ValueError:
            raise NotOnPathError(f"medial edge {edge} is not on the path") from None

    def __contains__(self, edge: int) -> bool:
        return edge in self.edges

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class LoopConfiguration:
    """Loops plus the exploration path; together they use every medial edge once."""

    loops: Tuple[Path, ...]
    exploration_path: Path
    loop_count: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "loop_count", len(self.loops))

    def successor_map(self) -> Dict[int, int]:
        succ = {}
        for loop in self.loops:
            for i, e in enumerate(loop.edges):
                succ[e] = loop.edges[(i + 1) % len(loop.edges)]
        path = self.exploration_path.edges
        for i in range(len(path) - 1):
            succ[path[i]] = path[i + 1]
        return succ


def _is_open_fn(config: EdgeConfiguration):
    bits = config.bits
    return lambda h: bool(bits[h])


def exploration_path(config: EdgeConfiguration, domain: LatticeDomain) -> Path:
    """The interface gamma from e_a to e_b."""
    if not domain.is_dobrushin:
        raise UnsupportedDomainError(f"the {domain.kind} domain has no marked points")
    config.check(domain)
    is_open = _is_open_fn(config)
    edges, turns = [domain.e_a], []
    cur = domain.e_a
    limit = domain.n_corners + 1
    while True:
        nxt, turn = successor(domain, cur, is_open)
        turns.append(turn)
        if domain.virtual_e_b and nxt == domain.e_a:
            edges.append(domain.e_b)
            break
        edges.append(nxt)
        if nxt == domain.e_b:
            break
        cur = nxt
        if len(edges) > limit:
            raise InvalidParameterError("exploration path did not reach e_b")
    return Path(tuple(edges), tuple(turns))


def loops_of(config: EdgeConfiguration, domain: LatticeDomain) -> LoopConfiguration:
    """Decompose the medial edges of a marked domain into gamma and closed loops."""
    gamma = exploration_path(config, domain)
    is_open = _is_open_fn(config)
    used = np.zeros(domain.n_corners, dtype=bool)
    used[list(gamma.edges)] = True
    used[~domain.medial_mask] = True
    loops = []
    for start in range(4 * domain.n_sites):
        if used[start]:
            continue
        edges, turns = [], []
        cur = start
        while True:
            used[cur] = True
            edges.append(cur)
            nxt, turn = successor(domain, cur, is_open)
            turns.append(turn)
            if nxt == start:
                break
            cur = nxt
        loops.append(Path(tuple(edges), tuple(turns), closed=True))
    return LoopConfiguration(tuple(loops), gamma)


def configuration_from_loops(loop_config: LoopConfiguration, domain: LatticeDomain) -> EdgeConfiguration:
    """Inverse of loops_of: edge (s, t) is open iff the corner entering its midpoint from s crosses to t."""
    succ = loop_config.successor_map()
    if domain.virtual_e_b:
        # the virtual half of the split corner continues like the corner itself
        path = loop_config.exploration_path.edges
        succ[domain.e_a] = path[1] if len(path) > 1 else domain.e_b
    bits = np.zeros(domain.n_edges, dtype=np.uint8)
    for i, (s, t) in enumerate(domain.edges):
        d = int(domain.edge_dirs[i])
        entering = 4 * int(s) + (d + 3) % 4
        bits[i] = 1 if succ.get(entering) == 4 * int(t) + (d + 2) % 4 else 0
    return EdgeConfiguration(bits)


def winding_along(path: Path, e_from: int, e_to: int) -> Winding:
    """Signed quarter turns from the midpoint of e_from to the midpoint of e_to along the path.

    On a closed loop with e_from == e_to this is the full turning number.
    """
    i = path.position(e_from)
    j = path.position(e_to)
    if path.closed:
        if i == j:
            return Winding(sum(path.turns))
        if j > i:
            return Winding(sum(path.turns[i:j]))
        return Winding(sum(path.turns[i:]) + sum(path.turns[:j]))
    if j >= i:
        return Winding(sum(path.turns[i:j]))
    return Winding(-sum(path.turns[j:i]))


def windings_to_end(path: Path) -> Dict[int, int]:
    """W(e, last edge) in quarter turns for every edge of an open path."""
    out = {}
    acc = 0
    out[path.edges[-1]] = 0
    for k in range(len(path.edges) - 2, -1, -1):
        acc += path.turns[k]
        out[path.edges[k]] = acc
    return out


def loop_weight(config: EdgeConfiguration, domain: LatticeDomain, p: float, q: float) -> float:
    """x^o sqrt(q)^l with x = p / (sqrt(q) (1 - p))."""
    if not (0.0 <= p < 1.0) or not q > 0.0:
        raise InvalidParameterError(f"loop weights need 0 <= p < 1 and q > 0, got p={p}, q={q}")
    loops = loops_of(config, domain)
    rq = math.sqrt(q)
    x = p / (rq * (1.0 - p))
    return (x ** config.n_open) * (rq ** loops.loop_count)


@lru_cache(maxsize=64)
def boundary_windings(domain: LatticeDomain) -> Dict[int, int]:
    """W(e, e_b) for every exterior medial edge; configuration independent.

    Read off the exploration path of the all-open configuration, which hugs
    every exterior corner.
    """
    gamma = exploration_path(EdgeConfiguration.all_open(domain.n_edges), domain)
    w = windings_to_end(gamma)
    out = {}
    for e, value in w.items():
        if e < 4 * domain.n_sites and domain.is_exterior(e):
            out[e] = value
    out[domain.e_a] = w[domain.e_a]
    out[domain.e_b] = 0
    return out


def to_polylines(loop_config: LoopConfiguration, domain: LatticeDomain) -> Dict[str, List[List[List[float]]]]:
    """JSON-ready polylines through medial-edge midpoints."""
    mg = medial_graph(domain)

    def line(path: Path) -> List[List[float]]:
        pts = [[float(x) for x in mg.midpoints[e]] for e in path.edges]
        if path.closed and pts:
            pts.append(pts[0])
        return pts

    return {"exploration_path": [line(loop_config.exploration_path)],
            "loops": [line(loop) for loop in loop_config.loops]}


def turn_table() -> Dict[Tuple[str, bool], Tuple[str, int]]:
    """Exit port and turn for each entry port and bond state at a medial vertex.

    Keys are (entry port, primal edge open); NW and SE are the entries.
    """
    return {
        ("NW", True): ("SW", -1),
        ("NW", False): ("NE", 1),
        ("SE", True): ("NE", -1),
        ("SE", False): ("SW", 1),
    }


def port_successor(domain: LatticeDomain, vertex: int, entry: str, is_open: bool) -> Tuple[int, int]:
    """(exit medial edge, turn) at an interior vertex, read from the turn table."""
    mg = medial_graph(domain)
    ports = dict(zip(("NW", "NE", "SW", "SE"), mg.port(vertex).as_tuple()))
    exit_port, turn = turn_table()[(entry, is_open)]
    return ports[exit_port], turn


def path_from_sequence(domain: LatticeDomain, edges: Sequence[int], closed: bool = False) -> Path:
    """Build a Path from consecutive corners, deriving the turns from the geometry."""
    n4 = 4 * domain.n_sites

    def real(e: int) -> int:
        return domain.e_a if (domain.virtual_e_b and e == n4) else e

    turns = []
    seq = list(edges) + ([edges[0]] if closed else [])
    for c, c_next in zip(seq, seq[1:]):
        rc, rn = real(c), real(c_next)
        turns.append(1 if rc // 4 == rn // 4 else -1)
    return Path(tuple(edges), tuple(turns), closed)
