"""
FK (random-cluster) configurations, weights and duality.

A configuration assigns one open/closed bit to every random edge of a graph.
Its weight is p^o (1-p)^c q^k, where k counts the connected components of the
open edges once every boundary class of the partition has been contracted.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from numba import njit

from src.config import Config
from src.errors import InvalidParameterError, UnsupportedDomainError, UnsupportedError
from src.lattice_geometry import Graph, LatticeDomain, dual_graph

logger = logging.getLogger(__name__)

BC_CHOICES = ("free", "wired", "dobrushin", "domain")


# --- Union-Find (numba-accelerated) ---

@njit(cache=True)
def _uf_find(parent, x):
    """Find root with path compression."""
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


@njit(cache=True)
def _uf_union(parent, rank, a, b):
    """Union by rank; returns True when two classes were merged."""
    ra = _uf_find(parent, a)
    rb = _uf_find(parent, b)
    if ra == rb:
        return False
    if rank[ra] < rank[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    if rank[ra] == rank[rb]:
        rank[ra] += 1
    return True


@njit(cache=True)
def _init_parent(root):
    """Parent array with every boundary class already merged."""
    n = root.shape[0]
    parent = np.arange(n)
    rank = np.zeros(n, dtype=np.int64)
    for s in range(n):
        _uf_union(parent, rank, s, root[s])
    return parent, rank


@njit(cache=True)
def count_clusters(bits, edges, root):
    """k(omega, xi) for a 0/1 edge array."""
    parent, rank = _init_parent(root)
    k = 0
    for s in range(root.shape[0]):
        if _uf_find(parent, s) == s:
            k += 1
    for i in range(edges.shape[0]):
        if bits[i] and _uf_union(parent, rank, edges[i, 0], edges[i, 1]):
            k -= 1
    return k


@njit(cache=True)
def cluster_labels(bits, edges, root):
    """Representative site of the cluster of every site under omega and the partition."""
    parent, rank = _init_parent(root)
    for i in range(edges.shape[0]):
        if bits[i]:
            _uf_union(parent, rank, edges[i, 0], edges[i, 1])
    labels = np.empty(root.shape[0], dtype=np.int64)
    for s in range(root.shape[0]):
        labels[s] = _uf_find(parent, s)
    return labels


@njit(cache=True)
def mask_to_bits(mask, n_edges, out):
    for i in range(n_edges):
        out[i] = (mask >> i) & 1
    return out


# --- Domain types ---

class EdgeConfiguration:
    """One open/closed bit per random edge, indexed by edge id."""

    __slots__ = ("bits",)

    def __init__(self, bits):
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or np.any(arr > 1):
            raise InvalidParameterError("configuration bits must be a flat 0/1 array")
        self.bits = arr
        self.bits.setflags(write=False)

    @classmethod
    def from_mask(cls, mask: int, n_edges: int) -> "EdgeConfiguration":
        return cls([(mask >> i) & 1 for i in range(n_edges)])

    @classmethod
    def all_open(cls, n_edges: int) -> "EdgeConfiguration":
        return cls(np.ones(n_edges, dtype=np.uint8))

    @classmethod
    def all_closed(cls, n_edges: int) -> "EdgeConfiguration":
        return cls(np.zeros(n_edges, dtype=np.uint8))

    def to_mask(self) -> int:
        return int(sum(int(b) << i for i, b in enumerate(self.bits)))

    def __len__(self) -> int:
        return int(self.bits.shape[0])

    def is_open(self, edge: int) -> bool:
        return bool(self.bits[edge])

    @property
    def n_open(self) -> int:
        return int(self.bits.sum())

    @property
    def n_closed(self) -> int:
        return len(self) - self.n_open

    def complement(self) -> "EdgeConfiguration":
        return EdgeConfiguration(1 - self.bits)

    def check(self, graph: Graph) -> None:
        if len(self) != graph.n_edges:
            raise InvalidParameterError(f"configuration has {len(self)} bits but the graph has {graph.n_edges} edges")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, EdgeConfiguration) and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())

    def __repr__(self) -> str:
        return f"EdgeConfiguration({''.join(str(int(b)) for b in self.bits)})"


@dataclass(frozen=True, eq=False)
class BoundaryPartition:
    """Partition of the sites into pre-wired classes, as a representative per site."""

    root: np.ndarray
    name: str = "custom"

    @classmethod
    def free(cls, graph: Graph) -> "BoundaryPartition":
        return cls(np.arange(graph.n_sites, dtype=np.int64), "free")

    @classmethod
    def wired(cls, graph: Graph) -> "BoundaryPartition":
        root = np.arange(graph.n_sites, dtype=np.int64)
        if graph.boundary.size:
            root[graph.boundary] = graph.boundary[0]
        return cls(root, "wired")

    @classmethod
    def of(cls, graph: Graph) -> "BoundaryPartition":
        """The partition a graph was built with (Dobrushin arcs, crossing sides)."""
        return cls(np.asarray(graph.root, dtype=np.int64), "dobrushin")

    def __post_init__(self):
        root = np.asarray(self.root, dtype=np.int64)
        if root.ndim != 1 or np.any(root < 0) or np.any(root >= root.shape[0]):
            raise InvalidParameterError("partition representatives must be site indices")
        if np.any(root[root] != root):
            raise InvalidParameterError("partition representatives must represent themselves")
        object.__setattr__(self, "root", root)

    def dominates(self, other: "BoundaryPartition") -> bool:
        """True when every class of `other` lies inside a class of this partition."""
        return all(self.root[s] == self.root[other.root[s]] for s in range(self.root.shape[0]))


@dataclass(frozen=True)
class MeasureSpec:
    """(p, q, bc) identifying a finite-volume FK measure."""

    p: float
    q: float
    bc: str = "domain"

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0) or math.isnan(self.p):
            raise InvalidParameterError(f"p must lie in [0, 1], got {self.p}")
        if not self.q > 0:
            raise InvalidParameterError(f"q must be positive, got {self.q}")
        if self.bc not in BC_CHOICES:
            raise InvalidParameterError(f"bc must be one of {BC_CHOICES}, got {self.bc!r}")

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "MeasureSpec":
        try:
            p = data["p"]
            q = float(data["q"])
        except KeyError as e:
            raise InvalidParameterError(f"measure spec is missing {e}") from e
        if p in ("pc", "critical"):
            p = critical_point(q)
        return cls(float(p), q, str(data.get("bc", "domain")))

    def to_dict(self) -> Dict[str, object]:
        return {"p": self.p, "q": self.q, "bc": self.bc}

    def partition(self, graph: Graph) -> BoundaryPartition:
        if self.bc == "free":
            return BoundaryPartition.free(graph)
        if self.bc == "wired":
            return BoundaryPartition.wired(graph)
        return BoundaryPartition.of(graph)


def resolve(graph: Graph, spec: MeasureSpec) -> Graph:
    """The graph carrying the partition selected by `spec.bc`."""
    if spec.bc in ("dobrushin", "domain"):
        return graph
    return graph.with_partition(spec.partition(graph).root)


# --- Operations ---

def cluster_count(config: EdgeConfiguration, graph: Graph,
                  bc: Optional[BoundaryPartition] = None) -> int:
    """Number of connected components of omega together with the wirings of bc."""
    config.check(graph)
    root = graph.root if bc is None else bc.root
    return int(count_clusters(config.bits, graph.edges, root))


def cluster_count_bfs(config: EdgeConfiguration, graph: Graph,
                      bc: Optional[BoundaryPartition] = None) -> int:
    """Breadth-first recount of cluster_count, kept as an independent oracle."""
    root = graph.root if bc is None else bc.root
    adj = [[] for _ in range(graph.n_sites)]
    for i, (u, v) in enumerate(graph.edges):
        if config.bits[i]:
            adj[u].append(int(v))
            adj[v].append(int(u))
    members: Dict[int, list] = {}
    for s in range(graph.n_sites):
        members.setdefault(int(root[s]), []).append(s)
    seen = [False] * graph.n_sites
    k = 0
    for start in range(graph.n_sites):
        if seen[start]:
            continue
        k += 1
        queue = deque([start])
        seen[start] = True
        while queue:
            s = queue.popleft()
            for t in adj[s] + members[int(root[s])]:
                if not seen[t]:
                    seen[t] = True
                    queue.append(t)
    return k


def weight(config: EdgeConfiguration, graph: Graph, spec: MeasureSpec) -> float:
    """Unnormalized weight p^o (1-p)^c q^k."""
    g = resolve(graph, spec)
    config.check(g)
    if g.n_edges > Config.LOG_SPACE_THRESHOLD:
        lw = log_weight(config, g, spec)
        return 0.0 if lw == -math.inf else math.exp(lw)
    k = cluster_count(config, g)
    return (spec.p ** config.n_open) * ((1.0 - spec.p) ** config.n_closed) * (spec.q ** k)


def log_weight(config: EdgeConfiguration, graph: Graph, spec: MeasureSpec) -> float:
    """Logarithm of `weight`; -inf when the weight vanishes."""
    g = resolve(graph, spec)
    o, c = config.n_open, config.n_closed
    if (o and spec.p == 0.0) or (c and spec.p == 1.0):
        return -math.inf
    k = cluster_count(config, g)
    out = k * math.log(spec.q)
    if o:
        out += o * math.log(spec.p)
    if c:
        out += c * math.log1p(-spec.p)
    return out


def critical_point(q: float) -> float:
    """Self-dual point sqrt(q) / (1 + sqrt(q))."""
    if not q > 0:
        raise InvalidParameterError(f"q must be positive, got {q}")
    r = math.sqrt(q)
    return r / (1.0 + r)


def dual_parameters(p: float, q: float):
    """(p*, q) with p* p / ((1-p*)(1-p)) = q."""
    if not q > 0:
        raise InvalidParameterError(f"q must be positive, got {q}")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"p must lie in [0, 1], got {p}")
    if p == 0.0:
        return 1.0, q
    if p == 1.0:
        return 0.0, q
    ratio = q * (1.0 - p) / p
    return ratio / (1.0 + ratio), q


def dual_configuration(config: EdgeConfiguration, domain: Graph) -> EdgeConfiguration:
    """Dual edge i is open iff primal edge i is closed."""
    if isinstance(domain, LatticeDomain) and not domain.is_planar:
        raise UnsupportedDomainError(f"the {domain.kind} domain has no planar dual")
    config.check(domain)
    return config.complement()


def dual_measure_spec(domain: LatticeDomain, spec: MeasureSpec) -> Tuple[Graph, MeasureSpec]:
    """The dual graph and (p*, q) measure that the dual of a free-bc configuration follows.

    The outer dual vertex carries the wiring, so the dual graph keeps a free partition.
    """
    if spec.bc != "free" and domain.classes():
        raise UnsupportedError("only the free primal measure has a dual on the single-outer-vertex graph")
    p_star, q = dual_parameters(spec.p, spec.q)
    return dual_graph(domain), MeasureSpec(p_star, q, "free")


# --- Monotonicity helpers (used with exact probability vectors) ---

def _require_fkg(q: float) -> None:
    if q < 1:
        raise UnsupportedError(f"FKG-based checks need q >= 1, got q={q}")


def is_increasing(indicator: np.ndarray, n_edges: int) -> bool:
    """True when the indicator over configuration masks is monotone in every bit."""
    indicator = np.asarray(indicator, dtype=bool)
    masks = np.arange(indicator.shape[0])
    for i in range(n_edges):
        low = masks[(masks >> i) & 1 == 0]
        if np.any(indicator[low] & ~indicator[low | (1 << i)]):
            return False
    return True


def fkg_gap(probs: np.ndarray, event_a: np.ndarray, event_b: np.ndarray, q: float) -> float:
    """phi(A and B) - phi(A) phi(B); non-negative for increasing events when q >= 1."""
    _require_fkg(q)
    a = np.asarray(event_a, dtype=bool)
    b = np.asarray(event_b, dtype=bool)
    return float(probs[a & b].sum() - probs[a].sum() * probs[b].sum())


def comparison_gap(probs_high: np.ndarray, probs_low: np.ndarray, event: np.ndarray, q: float) -> float:
    """phi^xi(A) - phi^psi(A) for xi >= psi; non-negative for increasing A when q >= 1."""
    _require_fkg(q)
    a = np.asarray(event, dtype=bool)
    return float(probs_high[a].sum() - probs_low[a].sum())

