"""
Primal, dual and medial graphs for square-lattice domains.

Sites carry a neighbour table in the directions E, N, W, S. Each half-edge
(site, direction) is either a random primal edge (its id), a STUB (nothing on
the other side) or FROZEN (an always-open edge along a wired arc, excluded
from the random edges).

Medial edges are the corners of primal sites: corner c(s, d) = 4*s + d runs
counterclockwise around s from the midpoint of half-edge (s, d) to the midpoint
of half-edge (s, d+1). Its heading is d + 1.5 quarter turns. Interior medial
vertices are the midpoints of random edges.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import InvalidParameterError, UnsupportedDomainError

logger = logging.getLogger(__name__)

E, N, W, S = 0, 1, 2, 3
STEPS = ((1, 0), (0, 1), (-1, 0), (0, -1))
DIRECTION_NAMES = ("E", "N", "W", "S")

STUB = -1
FROZEN = -2

Coord = Tuple[int, ...]


def corner_id(site: int, direction: int) -> int:
    return 4 * site + direction


def corner_site(corner: int) -> int:
    return corner // 4


def corner_direction(corner: int) -> int:
    return corner % 4


@dataclass(frozen=True, eq=False, kw_only=True)
class Graph:
    """A finite graph with a boundary partition.

    `root[s]` is the representative of the boundary class of site s; free
    sites are their own representative. Graphs are immutable after
    construction and may be shared between threads and processes.
    """

    n_sites: int
    edges: np.ndarray
    root: np.ndarray
    boundary: np.ndarray
    kind: str = "graph"
    coords: Optional[np.ndarray] = None

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def classes(self) -> List[np.ndarray]:
        """Non-singleton classes of the boundary partition."""
        out = []
        for r in np.unique(self.root):
            members = np.flatnonzero(self.root == r)
            if members.size > 1:
                out.append(members)
        return out

    def with_partition(self, root: np.ndarray, kind: Optional[str] = None) -> "Graph":
        root = np.asarray(root, dtype=np.int64)
        if root.shape != (self.n_sites,):
            raise InvalidParameterError(f"partition must have one entry per site ({self.n_sites}), got {root.shape}")
        return replace(self, root=root, kind=kind or self.kind)

    @cached_property
    def adjacency(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR incidence: (offsets, neighbour sites, edge ids)."""
        degree = np.zeros(self.n_sites + 1, dtype=np.int64)
        np.add.at(degree, self.edges[:, 0] + 1, 1)
        np.add.at(degree, self.edges[:, 1] + 1, 1)
        offsets = np.cumsum(degree)
        nbr = np.empty(2 * self.n_edges, dtype=np.int64)
        eid = np.empty(2 * self.n_edges, dtype=np.int64)
        fill = offsets[:-1].copy()
        for i, (u, v) in enumerate(self.edges):
            nbr[fill[u]], eid[fill[u]] = v, i
            fill[u] += 1
            nbr[fill[v]], eid[fill[v]] = u, i
            fill[v] += 1
        return offsets, nbr, eid

    @cached_property
    def class_members(self) -> Tuple[np.ndarray, np.ndarray]:
        """CSR of boundary classes indexed by representative: (offsets, members)."""
        order = np.argsort(self.root, kind="stable")
        counts = np.bincount(self.root, minlength=self.n_sites)
        offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        return offsets, order.astype(np.int64)


@dataclass(frozen=True, eq=False)
class MedialVertexPorts:
    """The four medial edges at an interior medial vertex (a random primal edge)."""

    vertex: int
    nw: int
    ne: int
    sw: int
    se: int

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.nw, self.ne, self.sw, self.se)


@dataclass(frozen=True, eq=False, kw_only=True)
class LatticeDomain(Graph):
    """A square-lattice domain, optionally marked as a Dobrushin domain.

    For Dobrushin-type domains `a`, `b` are site indices, `wired_arc` runs
    counterclockwise from b to a and `free_arc` from a to b. `e_a`/`e_b` are
    corner ids; on the universal cover `e_b` is the virtual id 4*n_sites.
    `ext_strand` lists the deterministic corners outside the wired arc that
    do not belong to the domain's medial graph.
    """

    neighbors: np.ndarray
    half_edges: np.ndarray
    edge_dirs: np.ndarray
    index: Dict[Coord, int] = field(default_factory=dict)
    params: Dict[str, object] = field(default_factory=dict)
    a: Optional[int] = None
    b: Optional[int] = None
    e_a: Optional[int] = None
    e_b: Optional[int] = None
    virtual_e_b: bool = False
    wired_arc: Tuple[int, ...] = ()
    free_arc: Tuple[int, ...] = ()
    ext_strand: Tuple[int, ...] = ()
    side_tags: Dict[int, str] = field(default_factory=dict)

    @property
    def is_dobrushin(self) -> bool:
        return self.e_a is not None and self.e_b is not None

    @property
    def is_planar(self) -> bool:
        return self.coords is not None and self.coords.shape[1] == 2

    @property
    def n_corners(self) -> int:
        return 4 * self.n_sites + (1 if self.virtual_e_b else 0)

    def site(self, coord: Sequence[int]) -> int:
        key = tuple(int(c) for c in coord)
        if key not in self.index:
            raise InvalidParameterError(f"site {key} is not in the {self.kind} domain")
        return self.index[key]

    def edge_between(self, u: int, v: int) -> int:
        for d in range(4):
            if self.neighbors[u, d] == v:
                return int(self.half_edges[u, d])
        raise InvalidParameterError(f"sites {u} and {v} are not adjacent")

    def is_exterior(self, corner: int) -> bool:
        s, d = divmod(corner, 4)
        return self.half_edges[s, d] == STUB or self.half_edges[s, (d + 1) % 4] == STUB

    def exterior_runs(self, s: int) -> List[List[int]]:
        """Maximal counterclockwise runs of exterior corners around site s."""
        flags = [self.is_exterior(corner_id(s, d)) for d in range(4)]
        if all(flags):
            # isolated site: one full turn starting after the first stub
            start = next(d for d in range(4) if self.half_edges[s, d] == STUB)
            return [[corner_id(s, (start + k) % 4) for k in range(4)]]
        runs = []
        for d0 in range(4):
            if flags[d0] and not flags[(d0 - 1) % 4]:
                run, d = [], d0
                while flags[d]:
                    run.append(corner_id(s, d))
                    d = (d + 1) % 4
                runs.append(run)
        return runs

    @cached_property
    def medial_mask(self) -> np.ndarray:
        """True for corners that are medial edges of the domain."""
        mask = np.ones(self.n_corners, dtype=bool)
        if self.ext_strand:
            mask[list(self.ext_strand)] = False
        return mask

    def to_descriptor(self) -> Dict[str, object]:
        """JSON-serializable descriptor accepted by `domain_from_descriptor`."""
        return {"kind": self.kind, **self.params}


class UniversalCoverGraph(LatticeDomain):
    """Truncated spiral-staircase cover U_n with levels |x3| <= T."""

    @property
    def n(self) -> int:
        return int(self.params["n"])

    @property
    def T(self) -> int:
        return int(self.params["T"])

    @cached_property
    def edge_family(self) -> np.ndarray:
        """0: x2-edges, 1: x1-edges on one level, 2: cut-crossing edges."""
        fam = np.empty(self.n_edges, dtype=np.int64)
        for i, (u, v) in enumerate(self.edges):
            cu, cv = self.coords[u], self.coords[v]
            if cu[0] == cv[0]:
                fam[i] = 0
            elif cu[2] == cv[2]:
                fam[i] = 1
            else:
                fam[i] = 2
        return fam


def successor(domain: LatticeDomain, corner: int, is_open: Callable[[int], bool]) -> Tuple[int, int]:
    """Next corner along the loop through `corner` and the turn taken (+1 or -1).

    `is_open(edge_id)` reports the state of random edges; frozen edges are
    open and stubs closed.
    """
    s, d = divmod(corner, 4)
    d1 = (d + 1) % 4
    h = int(domain.half_edges[s, d1])
    crossing = h == FROZEN or (h >= 0 and is_open(h))
    if crossing:
        t = int(domain.neighbors[s, d1])
        return corner_id(t, (d1 + 2) % 4), -1
    return corner_id(s, d1), 1


# --- Builders ---

def _assemble(coords: List[Coord],
              neighbor: Callable[[Coord, int], Optional[Coord]],
              frozen_pairs: Optional[set] = None,
              root: Optional[np.ndarray] = None,
              kind: str = "box",
              params: Optional[Dict[str, object]] = None,
              cls=LatticeDomain,
              **markings) -> LatticeDomain:
    index = {c: i for i, c in enumerate(coords)}
    n_sites = len(coords)
    neighbors = np.full((n_sites, 4), -1, dtype=np.int64)
    for i, c in enumerate(coords):
        for d in range(4):
            t = neighbor(c, d)
            if t is not None and t in index:
                neighbors[i, d] = index[t]

    frozen_pairs = frozen_pairs or set()
    half_edges = np.full((n_sites, 4), STUB, dtype=np.int64)
    edges, dirs = [], []
    for i in range(n_sites):
        for d in (E, N, W, S):
            t = neighbors[i, d]
            if t < 0 or half_edges[i, d] != STUB:
                continue
            if frozenset((i, int(t))) in frozen_pairs:
                half_edges[i, d] = FROZEN
                half_edges[t, (d + 2) % 4] = FROZEN
                continue
            half_edges[i, d] = len(edges)
            half_edges[t, (d + 2) % 4] = len(edges)
            edges.append((i, int(t)))
            dirs.append(d)

    boundary = np.flatnonzero((half_edges == STUB).any(axis=1)).astype(np.int64)
    if root is None:
        root = np.arange(n_sites, dtype=np.int64)
    return cls(
        n_sites=n_sites,
        edges=np.asarray(edges, dtype=np.int64).reshape(-1, 2),
        root=np.asarray(root, dtype=np.int64),
        boundary=boundary,
        kind=kind,
        coords=np.asarray(coords, dtype=np.int64),
        neighbors=neighbors,
        half_edges=half_edges,
        edge_dirs=np.asarray(dirs, dtype=np.int64),
        index=index,
        params=params or {},
        **markings,
    )


def _planar_neighbor(c: Coord, d: int) -> Coord:
    dx, dy = STEPS[d]
    return (c[0] + dx, c[1] + dy)


def _rectangle_coords(x0: int, y0: int, width: int, height: int) -> List[Coord]:
    return [(x, y) for y in range(y0, y0 + height + 1) for x in range(x0, x0 + width + 1)]


def _rectangle_cycle(x0: int, y0: int, width: int, height: int) -> List[Coord]:
    """Boundary sites of a rectangle in counterclockwise order from the bottom-left corner."""
    x1, y1 = x0 + width, y0 + height
    cycle = [(x, y0) for x in range(x0, x1 + 1)]
    cycle += [(x1, y) for y in range(y0 + 1, y1 + 1)]
    cycle += [(x, y1) for x in range(x1 - 1, x0 - 1, -1)]
    cycle += [(x0, y) for y in range(y1 - 1, y0, -1)]
    return cycle


def _mark(domain: LatticeDomain, a: int, b: int, wired: Sequence[int], free: Sequence[int]) -> LatticeDomain:
    """Attach e_a, e_b and the external strand to a domain with arcs."""
    runs_b = domain.exterior_runs(b)
    runs_a = domain.exterior_runs(a)
    if len(runs_a) != 1 or len(runs_b) != 1:
        raise InvalidParameterError("marked sites must have a single exterior run of corners")
    e_b = runs_b[0][0]
    e_a = runs_a[0][-1]

    strand = []
    cur, _ = successor(domain, e_b, lambda _h: False)
    guard = 0
    while cur != e_a:
        strand.append(cur)
        if domain.half_edges[cur // 4, (cur % 4 + 1) % 4] >= 0:
            raise InvalidParameterError("wired arc does not close a deterministic external strand")
        cur, _ = successor(domain, cur, lambda _h: False)
        guard += 1
        if guard > domain.n_corners:
            raise InvalidParameterError("external strand walk did not reach e_a")
    return replace(domain, a=a, b=b, e_a=e_a, e_b=e_b, wired_arc=tuple(wired),
                   free_arc=tuple(free), ext_strand=tuple(strand))


def build_box(n: int) -> LatticeDomain:
    """The box [-n, n]^2 with free boundary conditions."""
    if n < 1:
        raise InvalidParameterError(f"box size must be >= 1, got {n}")
    coords = _rectangle_coords(-n, -n, 2 * n, 2 * n)
    domain = _assemble(coords, _planar_neighbor, kind="box", params={"n": n})
    logger.info(f"Built box n={n}: {domain.n_sites} sites, {domain.n_edges} edges")
    return domain


def build_rectangle(width: int, height: int) -> LatticeDomain:
    """The rectangle [0, width] x [0, height] with free boundary conditions."""
    if width < 1 or height < 1:
        raise InvalidParameterError(f"rectangle sides must be >= 1, got {width}x{height}")
    coords = _rectangle_coords(0, 0, width, height)
    return _assemble(coords, _planar_neighbor, kind="rectangle",
                     params={"width": width, "height": height})


def build_dobrushin(width: int, height: int,
                    a: Optional[Coord] = None, b: Optional[Coord] = None) -> LatticeDomain:
    """Dobrushin rectangle [0, width] x [0, height].

    The wired arc runs counterclockwise along the boundary from b to a and
    forms one partition class; the edges between consecutive wired sites are
    frozen open. Defaults: b = (0, 0), a = (width, 0), i.e. the bottom side
    is wired.
    """
    if width < 1 or height < 1:
        raise InvalidParameterError(f"rectangle sides must be >= 1, got {width}x{height}")
    cycle = _rectangle_cycle(0, 0, width, height)
    b = tuple(b) if b is not None else (0, 0)
    a = tuple(a) if a is not None else (width, 0)
    if a not in cycle or b not in cycle:
        raise InvalidParameterError(f"marked points {a}, {b} must lie on the rectangle boundary")
    ib = cycle.index(b)
    ia = cycle.index(a)
    rot = cycle[ib:] + cycle[:ib]
    k = (ia - ib) % len(cycle)
    wired = rot[:k + 1]
    free = rot[k:] + [rot[0]]
    if len(free) < 3:
        raise InvalidParameterError("the free arc must contain at least one site besides a and b")

    coords = _rectangle_coords(0, 0, width, height)
    index = {c: i for i, c in enumerate(coords)}
    root = np.arange(len(coords), dtype=np.int64)
    for c in wired:
        root[index[c]] = index[b]
    frozen_ids = {frozenset((index[u], index[v])) for u, v in zip(wired, wired[1:])}
    domain = _assemble(coords, _planar_neighbor, frozen_pairs=frozen_ids, root=root, kind="dobrushin",
                       params={"width": width, "height": height, "a": list(a), "b": list(b)})
    domain = _mark(domain, index[a], index[b], [index[c] for c in wired], [index[c] for c in free])
    logger.info(f"Built Dobrushin rectangle {width}x{height}: {domain.n_edges} random edges, "
                f"wired arc of {len(wired)} sites")
    return domain


def build_slit_domain(n: int) -> LatticeDomain:
    """The slit box [-n, n]^2 minus {(k, 0): k > 0}, wired arc reduced to the origin."""
    if n < 1:
        raise InvalidParameterError(f"slit domain size must be >= 1, got {n}")
    coords = [c for c in _rectangle_coords(-n, -n, 2 * n, 2 * n) if not (c[1] == 0 and c[0] > 0)]
    domain = _assemble(coords, _planar_neighbor, kind="slit", params={"n": n})
    origin = domain.site((0, 0))
    tags = {origin: "tip"}
    for k in range(1, n + 1):
        tags[domain.site((k, 1))] = "upper"
        tags[domain.site((k, -1))] = "lower"
    free = [int(s) for s in domain.boundary if s != origin]
    domain = replace(domain, side_tags=tags)
    domain = _mark(domain, origin, origin, [origin], free)
    logger.info(f"Built slit domain n={n}: {domain.n_sites} sites, {domain.n_edges} edges, "
                f"{len(domain.boundary)} boundary sites")
    return domain


def slit_sites(domain: LatticeDomain) -> List[int]:
    """The part of the boundary created by the slit, origin included."""
    if domain.kind != "slit":
        raise UnsupportedDomainError(f"slit sites are only defined on the slit domain, not {domain.kind}")
    n = int(domain.params["n"])
    return [int(s) for s in domain.boundary
            if max(abs(int(domain.coords[s][0])), abs(int(domain.coords[s][1]))) < n]


def _cover_neighbor(n: int, T: int) -> Callable[[Coord, int], Optional[Coord]]:
    def neighbor(c: Coord, d: int) -> Optional[Coord]:
        x1, x2, x3 = c
        if d == E and x1 == 0 and x2 < 0:
            t = (1, x2, x3 + 1)
        elif d == W and x1 == 1 and x2 < 0:
            t = (0, x2, x3 - 1)
        else:
            dx, dy = STEPS[d]
            t = (x1 + dx, x2 + dy, x3)
        if max(abs(t[0]), abs(t[1])) > n or abs(t[2]) > T:
            return None
        return t
    return neighbor


def build_universal_cover(n: int, T: int) -> UniversalCoverGraph:
    """U_n truncated at |x3| <= T.

    e_a and e_b are the two halves of the corner of the origin facing the
    puncture: e_a keeps the corner id c(0, S), e_b gets the virtual id
    4*n_sites.
    """
    if n < 1 or T < 1:
        raise InvalidParameterError(f"universal cover needs n >= 1 and T >= 1, got n={n}, T={T}")
    coords = [(x1, x2, x3) for x3 in range(-T, T + 1)
              for x2 in range(-n, n + 1) for x1 in range(-n, n + 1)]
    domain = _assemble(coords, _cover_neighbor(n, T), kind="cover", params={"n": n, "T": T},
                       cls=UniversalCoverGraph)
    origin = domain.site((0, 0, 0))
    free = [int(s) for s in domain.boundary]
    domain = replace(domain, a=origin, b=origin, e_a=corner_id(origin, S),
                     e_b=4 * domain.n_sites, virtual_e_b=True,
                     wired_arc=(origin,), free_arc=tuple(free))
    logger.info(f"Built universal cover n={n}, T={T}: {domain.n_sites} sites, {domain.n_edges} edges")
    return domain


CROSSING_CONVENTIONS = ("distinct", "joined", "inner_joined")


def build_crossing_rectangle(n: int, height: Optional[int] = None, convention: str = "distinct") -> LatticeDomain:
    """Rectangle [0, n] x [0, height] for vertical crossings, wired on the left and right.

    Horizontal edges of the top and bottom rows are left out, which makes the
    graph with height n+1 isomorphic to its planar dual rotated by a quarter
    turn. Conventions for the wired sides:

    * "distinct": each full side column is its own class;
    * "joined": both full columns form one class;
    * "inner_joined": rows 1..height-1 of both columns form one class, the
      four corners stay free. This is the planar dual partner of "distinct".
    """
    height = n + 1 if height is None else height
    if n < 1 or height < 2:
        raise InvalidParameterError(f"crossing rectangle needs n >= 1 and height >= 2, got {n}x{height}")
    if convention not in CROSSING_CONVENTIONS:
        raise InvalidParameterError(f"unknown crossing convention {convention!r}")
    coords = _rectangle_coords(0, 0, n, height)

    def neighbor(c: Coord, d: int) -> Optional[Coord]:
        if d in (E, W) and c[1] in (0, height):
            return None
        return _planar_neighbor(c, d)

    index = {c: i for i, c in enumerate(coords)}
    root = np.arange(len(coords), dtype=np.int64)
    if convention == "distinct":
        for y in range(height + 1):
            root[index[(0, y)]] = index[(0, 0)]
            root[index[(n, y)]] = index[(n, 0)]
    elif convention == "joined":
        for y in range(height + 1):
            root[index[(0, y)]] = index[(0, 0)]
            root[index[(n, y)]] = index[(0, 0)]
    else:
        for y in range(1, height):
            root[index[(0, y)]] = index[(0, 1)]
            root[index[(n, y)]] = index[(0, 1)]
    return _assemble(coords, neighbor, root=root, kind="crossing",
                     params={"n": n, "height": height, "convention": convention})


def build_half_strip_rectangle(n: int) -> LatticeDomain:
    """R(4n, n) = [-4n, 4n] x [0, n] wired on its top, left and right sides, free on the bottom."""
    if n < 1:
        raise InvalidParameterError(f"rectangle scale must be >= 1, got {n}")
    width = 8 * n
    domain = build_dobrushin(width, n, a=(0, 0), b=(width, 0))
    return replace(domain, kind="dobrushin", params={**domain.params, "scale": n})


# --- Dual and medial structure ---

def dual_graph(domain: LatticeDomain) -> Graph:
    """Bounded faces plus one outer vertex; dual edge i crosses primal edge i.

    Frozen primal edges have no dual edge. The dual carries a free partition:
    the single outer vertex already plays the role of the wired dual boundary.
    """
    if not domain.is_planar:
        raise UnsupportedDomainError(f"the {domain.kind} domain has no planar dual")
    index = domain.index
    faces: Dict[Coord, int] = {}
    for (x, y) in index:
        corners = [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)]
        if not all(c in index for c in corners):
            continue
        ids = [index[c] for c in corners]
        sides = [domain.half_edges[ids[0], E], domain.half_edges[ids[1], N],
                 domain.half_edges[ids[2], W], domain.half_edges[ids[3], S]]
        if all(h != STUB for h in sides):
            faces[(x, y)] = len(faces)
    outer = len(faces)
    dual_edges = np.empty((domain.n_edges, 2), dtype=np.int64)
    for i, (u, _v) in enumerate(domain.edges):
        x, y = (int(c) for c in domain.coords[u])
        if domain.edge_dirs[i] == E:
            sides = ((x, y), (x, y - 1))
        else:
            sides = ((x - 1, y), (x, y))
        dual_edges[i] = [faces.get(f, outer) for f in sides]
    face_coords = np.zeros((outer + 1, 2), dtype=np.int64)
    for c, f in faces.items():
        face_coords[f] = c
    n_dual = outer + 1
    logger.info(f"Dual graph of {domain.kind}: {len(faces)} bounded faces plus outer vertex")
    return Graph(n_sites=n_dual, edges=dual_edges, root=np.arange(n_dual, dtype=np.int64),
                 boundary=np.asarray([outer], dtype=np.int64), kind="dual", coords=face_coords)


@dataclass(frozen=True, eq=False)
class MedialGraph:
    """Oriented medial graph of a lattice domain.

    Vertex ids: random edge i is medial vertex i; the midpoint of any other
    half-edge (s, d) is vertex n_edges + 4*s + d (frozen edges use their
    lower-index side).
    """

    tail: np.ndarray
    head: np.ndarray
    heading: np.ndarray
    midpoints: np.ndarray
    valid: np.ndarray
    ports: np.ndarray
    n_edges: int

    def port(self, vertex: int) -> MedialVertexPorts:
        nw, ne, sw, se = (int(x) for x in self.ports[vertex])
        return MedialVertexPorts(vertex, nw, ne, sw, se)

    def incident(self, vertex: int) -> Tuple[List[int], List[int]]:
        """(incoming, outgoing) medial edges at a vertex."""
        ins = [int(e) for e in np.flatnonzero((self.head == vertex) & self.valid)]
        outs = [int(e) for e in np.flatnonzero((self.tail == vertex) & self.valid)]
        return ins, outs


def _half_edge_vertex(domain: LatticeDomain, s: int, d: int) -> int:
    h = int(domain.half_edges[s, d])
    if h >= 0:
        return h
    if h == FROZEN:
        t = int(domain.neighbors[s, d])
        if t < s:
            s, d = t, (d + 2) % 4
    return domain.n_edges + 4 * s + d


def medial_graph(domain: LatticeDomain) -> MedialGraph:
    """Oriented medial graph with port assignments for every interior vertex."""
    nc = domain.n_corners
    tail = np.full(nc, -1, dtype=np.int64)
    head = np.full(nc, -1, dtype=np.int64)
    heading = np.zeros(nc, dtype=np.float64)
    mid = np.zeros((nc, 2), dtype=np.float64)
    for s in range(domain.n_sites):
        xy = domain.coords[s][:2].astype(np.float64)
        for d in range(4):
            c = corner_id(s, d)
            tail[c] = _half_edge_vertex(domain, s, d)
            head[c] = _half_edge_vertex(domain, s, (d + 1) % 4)
            heading[c] = d + 1.5
            step_a = np.asarray(STEPS[d], dtype=np.float64)
            step_b = np.asarray(STEPS[(d + 1) % 4], dtype=np.float64)
            mid[c] = xy + 0.25 * (step_a + step_b)
    if domain.virtual_e_b:
        ea = domain.e_a
        tail[domain.e_b] = tail[ea]
        tail[ea] = -1
        head[domain.e_b] = -1
        heading[domain.e_b] = heading[ea]
        mid[domain.e_b] = mid[ea]

    ports = np.empty((domain.n_edges, 4), dtype=np.int64)
    for i, (s, t) in enumerate(domain.edges):
        d = int(domain.edge_dirs[i])
        nw = corner_id(int(t), (d + 1) % 4)
        se = corner_id(int(s), (d + 3) % 4)
        sw = corner_id(int(s), d)
        ne = corner_id(int(t), (d + 2) % 4)
        if domain.virtual_e_b and sw == domain.e_a:
            sw = domain.e_b
        if domain.virtual_e_b and ne == domain.e_a:
            ne = domain.e_b
        ports[i] = (nw, ne, sw, se)
    return MedialGraph(tail=tail, head=head, heading=heading, midpoints=mid,
                       valid=domain.medial_mask.copy(), ports=ports, n_edges=domain.n_edges)


# --- Boundary walk ---

@dataclass(frozen=True)
class BoundaryVisit:
    site: int
    corners: Tuple[int, ...]
    side: Optional[str] = None


def boundary_walk(domain: LatticeDomain) -> List[BoundaryVisit]:
    """Exterior corners in counterclockwise contour order, grouped into site visits.

    The order is the one followed by the exploration path of the all-open
    configuration, which hugs every exterior corner.
    """
    if not domain.is_dobrushin:
        raise UnsupportedDomainError("boundary walks need a marked domain")
    visits: List[BoundaryVisit] = []
    cur = domain.e_a
    seen = 0
    while True:
        s = cur // 4 if cur < 4 * domain.n_sites else domain.a
        if cur < 4 * domain.n_sites and domain.is_exterior(cur) and domain.medial_mask[cur]:
            if visits and visits[-1].site == s:
                last = visits[-1]
                visits[-1] = BoundaryVisit(s, last.corners + (cur,), last.side)
            else:
                visits.append(BoundaryVisit(s, (cur,), _side_of(domain, s, cur)))
        if cur == domain.e_b or (domain.virtual_e_b and seen and cur == domain.e_a):
            break
        cur, _ = successor(domain, cur, lambda _h: True)
        seen += 1
        if seen > domain.n_corners:
            raise InvalidParameterError("boundary walk did not terminate")
    return visits


def _side_of(domain: LatticeDomain, s: int, corner: int) -> Optional[str]:
    tag = domain.side_tags.get(s)
    if tag is None:
        return None
    d = corner % 4
    touches = {d, (d + 1) % 4}
    if tag == "upper" and S in touches and domain.half_edges[s, S] == STUB:
        return "upper"
    if tag == "lower" and N in touches and domain.half_edges[s, N] == STUB:
        return "lower"
    if tag == "tip":
        return "tip"
    return None


def domain_from_descriptor(descriptor: Dict[str, object]) -> LatticeDomain:
    """Inverse of `LatticeDomain.to_descriptor`."""
    kind = descriptor.get("kind")
    try:
        if kind == "box":
            return build_box(int(descriptor["n"]))
        if kind == "rectangle":
            return build_rectangle(int(descriptor["width"]), int(descriptor["height"]))
        if kind == "dobrushin":
            a = descriptor.get("a")
            b = descriptor.get("b")
            return build_dobrushin(int(descriptor["width"]), int(descriptor["height"]),
                                   tuple(a) if a is not None else None, tuple(b) if b is not None else None)
        if kind == "slit":
            return build_slit_domain(int(descriptor["n"]))
        if kind == "cover":
            return build_universal_cover(int(descriptor["n"]), int(descriptor["T"]))
        if kind == "crossing":
            return build_crossing_rectangle(int(descriptor["n"]), int(descriptor["height"]),
                                            str(descriptor.get("convention", "distinct")))
    except KeyError as e:
        raise InvalidParameterError(f"domain descriptor {descriptor} is missing {e}") from e
    raise InvalidParameterError(f"unknown domain kind {kind!r}")
