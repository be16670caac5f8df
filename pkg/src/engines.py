"""
Exact and Monte Carlo engines for FK measures.

Exact mode sums the weights of all 2^|E| configurations (numba kernels,
streamed so that no per-configuration table is kept) or, for connectivities
on domains beyond the enumeration limit, runs a frontier transfer over
connectivity partitions. Monte Carlo mode runs independent seeded chains of
single-edge heat-bath or Chayes-Machta cluster updates and reports batch-mean
error bars.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from numba import njit

from src.config import Config
from src.errors import InvalidParameterError, TooLargeError, UnsupportedError
from src.fk_model import EdgeConfiguration, MeasureSpec, cluster_labels, count_clusters, resolve
from src.lattice_geometry import FROZEN, Graph, LatticeDomain

logger = logging.getLogger(__name__)

SAMPLERS = ("auto", "heat_bath", "chayes_machta")

Functional = Callable[[EdgeConfiguration], Union[float, complex, np.ndarray]]


def _check_size(graph: Graph, limit: Optional[int] = None) -> None:
    limit = Config.ENUMERATION_LIMIT if limit is None else limit
    if graph.n_edges > limit:
        raise TooLargeError(f"{graph.n_edges} random edges exceed the enumeration limit of {limit}")


def _power_tables(n_edges: int, n_sites: int, spec: MeasureSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    pw_p = np.array([spec.p ** i for i in range(n_edges + 1)], dtype=np.float64)
    pw_1p = np.array([(1.0 - spec.p) ** i for i in range(n_edges + 1)], dtype=np.float64)
    pw_q = np.array([spec.q ** i for i in range(n_sites + 1)], dtype=np.float64)
    return pw_p, pw_1p, pw_q


def configurations(n_edges: int) -> Iterator[EdgeConfiguration]:
    """All configurations in mask order."""
    shifts = np.arange(n_edges, dtype=np.int64)
    for mask in range(1 << n_edges):
        yield EdgeConfiguration((mask >> shifts) & 1)


# --- Exact enumeration kernels ---

@njit(cache=True, nogil=True)
def _weights_kernel(start, stop, edges, root, pw_p, pw_1p, pw_q, out, bits):
    n_edges = edges.shape[0]
    for mask in range(start, stop):
        o = 0
        for i in range(n_edges):
            b = (mask >> i) & 1
            bits[i] = b
            o += b
        k = count_clusters(bits, edges, root)
        out[mask - start] = pw_p[o] * pw_1p[n_edges - o] * pw_q[k]


@njit(cache=True, nogil=True)
def _walk_gamma(bits, half_edges, neighbors, e_a, e_b, virtual, path, cum):
    """Corners of the exploration path and running turn sums; returns its length."""
    path[0] = e_a
    cum[0] = 0
    length = 1
    cur = e_a
    while length < path.shape[0]:
        s = cur // 4
        d1 = (cur % 4 + 1) % 4
        h = half_edges[s, d1]
        if h == FROZEN or (h >= 0 and bits[h] == 1):
            nxt = 4 * neighbors[s, d1] + (d1 + 2) % 4
            turn = -1
        else:
            nxt = 4 * s + d1
            turn = 1
        cum[length] = cum[length - 1] + turn
        if virtual and nxt == e_a:
            path[length] = e_b
            length += 1
            break
        path[length] = nxt
        length += 1
        if nxt == e_b:
            break
        cur = nxt
    return length


@njit(cache=True, nogil=True)
def _accumulate(acc, comp, i, x):
    """Neumaier-compensated acc[i] += x."""
    s = acc[i]
    t = s + x
    if abs(s) >= abs(x):
        comp[i] += (s - t) + x
    else:
        comp[i] += (x - t) + s
    acc[i] = t


@njit(cache=True, nogil=True)
def _observables_kernel(start, stop, edges, root, half_edges, neighbors, e_a, e_b, virtual, marked,
                        sigma, pw_p, pw_1p, pw_q, source, acc, comp, path, cum, bits):
    """Slots of acc: Z, Re F, Im F, Re G, Im G, P(e in gamma) per corner, then connectivity per site."""
    n_edges = edges.shape[0]
    n_sites = root.shape[0]
    nc = path.shape[0] - 1
    off_f, off_g, off_on, off_conn = 1, 1 + 2 * nc, 1 + 4 * nc, 1 + 5 * nc
    quarter = math.pi / 2.0
    for mask in range(start, stop):
        o = 0
        for i in range(n_edges):
            b = (mask >> i) & 1
            bits[i] = b
            o += b
        labels = cluster_labels(bits, edges, root)
        k = 0
        for s in range(n_sites):
            if labels[s] == s:
                k += 1
        w = pw_p[o] * pw_1p[n_edges - o] * pw_q[k]
        if w == 0.0:
            continue
        _accumulate(acc, comp, 0, w)
        if source >= 0:
            ls = labels[source]
            for x in range(n_sites):
                if labels[x] == ls:
                    _accumulate(acc, comp, off_conn + x, w)
        if marked:
            length = _walk_gamma(bits, half_edges, neighbors, e_a, e_b, virtual, path, cum)
            total = cum[length - 1]
            for j in range(length):
                e = path[j]
                ang = (total - cum[j]) * quarter
                _accumulate(acc, comp, off_f + e, w * math.cos(sigma * ang))
                _accumulate(acc, comp, off_f + nc + e, w * math.sin(sigma * ang))
                _accumulate(acc, comp, off_g + e, w * ang * math.cos(ang))
                _accumulate(acc, comp, off_g + nc + e, w * ang * math.sin(ang))
                _accumulate(acc, comp, off_on + e, w)


def _chunks(total: int, parts: int) -> List[Tuple[int, int]]:
    parts = max(1, min(parts, total))
    bounds = np.linspace(0, total, parts + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


@dataclass
class ExactResult:
    """Normalized exact observables of one (domain, measure) pair."""

    Z: float
    F: Optional[np.ndarray] = None
    G: Optional[np.ndarray] = None
    on_path: Optional[np.ndarray] = None
    connectivity: Optional[np.ndarray] = None


class ExactEnumerator:
    """Streams all configurations once and accumulates the requested observables.

    F(e) = E[exp(i sigma W(e, e_b)) 1{e in gamma}], G(e) = E[W exp(iW) 1{e in gamma}]
    and P(e in gamma) are collected on marked domains; connectivity to `source`
    on any graph.
    """

    def __init__(self, domain: Graph, spec: MeasureSpec, sigma: Optional[float] = None,
                 source: Optional[int] = None, limit: Optional[int] = None, workers: Optional[int] = None):
        self.graph = resolve(domain, spec)
        self.domain = domain
        self.spec = spec
        self.sigma = sigma
        self.source = source
        self.workers = Config.WORKERS if workers is None else workers
        _check_size(self.graph, limit)

    def run(self) -> ExactResult:
        g = self.graph
        marked = isinstance(self.domain, LatticeDomain) and self.domain.is_dobrushin and self.sigma is not None
        nc = self.domain.n_corners if marked else 1
        pw_p, pw_1p, pw_q = _power_tables(g.n_edges, g.n_sites, self.spec)
        if marked:
            half_edges, neighbors = self.domain.half_edges, self.domain.neighbors
            e_a, e_b, virtual = self.domain.e_a, self.domain.e_b, self.domain.virtual_e_b
        else:
            half_edges = neighbors = np.zeros((1, 4), dtype=np.int64)
            e_a = e_b = 0
            virtual = False
        source = -1 if self.source is None else int(self.source)
        sigma = 0.0 if self.sigma is None else float(self.sigma)

        n_slots = 1 + 5 * nc + g.n_sites

        def work(bounds):
            start, stop = bounds
            acc = np.zeros(n_slots, dtype=np.float64)
            comp = np.zeros(n_slots, dtype=np.float64)
            path = np.zeros(nc + 1, dtype=np.int64)
            cum = np.zeros(nc + 1, dtype=np.int64)
            bits = np.zeros(g.n_edges, dtype=np.uint8)
            _observables_kernel(start, stop, g.edges, g.root, half_edges, neighbors, e_a, e_b, virtual,
                                marked, sigma, pw_p, pw_1p, pw_q, source, acc, comp, path, cum, bits)
            return acc, comp

        chunks = _chunks(1 << g.n_edges, self.workers)
        if len(chunks) == 1:
            parts = [work(chunks[0])]
        else:
            with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
                parts = list(pool.map(work, chunks))
        # compensated chunk sums, merged with fsum
        stacked = np.vstack([a for part in parts for a in part])
        totals = np.array([math.fsum(stacked[:, j]) for j in range(n_slots)])
        Z = totals[0]
        if not Z > 0:
            raise InvalidParameterError(f"partition function vanishes for {self.spec}")
        F = (totals[1:1 + nc] + 1j * totals[1 + nc:1 + 2 * nc]) / Z
        G = (totals[1 + 2 * nc:1 + 3 * nc] + 1j * totals[1 + 3 * nc:1 + 4 * nc]) / Z
        on_path = totals[1 + 4 * nc:1 + 5 * nc] / Z
        conn = totals[1 + 5 * nc:] / Z
        logger.info(f"Enumerated {1 << g.n_edges} configurations on {g.kind} (p={self.spec.p:.6g}, q={self.spec.q:g})")
        return ExactResult(
            Z=float(Z),
            F=F if marked else None,
            G=G if marked else None,
            on_path=on_path if marked else None,
            connectivity=conn if source >= 0 else None,
        )


class ExactDistribution:
    """The FK measure of a small graph as an explicit probability vector over masks."""

    def __init__(self, domain: Graph, spec: MeasureSpec, limit: Optional[int] = None):
        self.domain = domain
        self.spec = spec
        self.graph = resolve(domain, spec)
        _check_size(self.graph, limit)
        n = 1 << self.graph.n_edges
        pw_p, pw_1p, pw_q = _power_tables(self.graph.n_edges, self.graph.n_sites, spec)
        weights = np.empty(n, dtype=np.float64)
        _weights_kernel(0, n, self.graph.edges, self.graph.root, pw_p, pw_1p, pw_q, weights,
                        np.zeros(self.graph.n_edges, dtype=np.uint8))
        self.Z = float(weights.sum())
        if not self.Z > 0:
            raise InvalidParameterError(f"partition function vanishes for {spec}")
        self.probabilities = weights / self.Z

    @property
    def n_edges(self) -> int:
        return self.graph.n_edges

    def expectation(self, f: Functional):
        total = 0.0
        for mask, config in enumerate(configurations(self.n_edges)):
            prob = self.probabilities[mask]
            if prob:
                total = total + prob * f(config)
        return total

    def indicator(self, event: Callable[[EdgeConfiguration], bool]) -> np.ndarray:
        return np.fromiter((bool(event(c)) for c in configurations(self.n_edges)), dtype=bool,
                           count=1 << self.n_edges)

    def probability(self, event: Callable[[EdgeConfiguration], bool]) -> float:
        return float(self.probabilities[self.indicator(event)].sum())

    def edge_marginals(self) -> np.ndarray:
        masks = np.arange(1 << self.n_edges, dtype=np.int64)
        return np.array([self.probabilities[(masks >> i) & 1 == 1].sum() for i in range(self.n_edges)])


def enumerate_expectation(domain: Graph, spec: MeasureSpec, f: Functional, limit: Optional[int] = None):
    """Sum of f(omega) weight(omega) / Z over every configuration."""
    return ExactDistribution(domain, spec, limit).expectation(f)


# --- Frontier transfer ---

def _transfer_order(graph: Graph) -> np.ndarray:
    if graph.coords is None:
        return np.arange(graph.n_edges)
    coords = graph.coords
    key = [tuple(int(v) for v in np.minimum(coords[u], coords[v])) + (int(i),)
           for i, (u, v) in enumerate(graph.edges)]
    return np.array([k[-1] for k in sorted(key)], dtype=np.int64)


def _canonical(labels: Dict[int, int]) -> Tuple[Tuple[Tuple[int, int], ...], Dict[int, int]]:
    relabel: Dict[int, int] = {}
    out = []
    for v in sorted(labels):
        lab = labels[v]
        if lab not in relabel:
            relabel[lab] = len(relabel)
        out.append((v, relabel[lab]))
    return tuple(out), relabel


def transfer_connectivity(domain: Graph, spec: MeasureSpec, source: int, target: int) -> Tuple[float, float]:
    """(Z, phi(source <-> target)) by a frontier transfer over connectivity partitions.

    Boundary classes are contracted first; the state holds the partition of
    the active vertices plus the blocks that contain the source and the
    target.
    """
    g = resolve(domain, spec)
    p, q = spec.p, spec.q
    root = np.asarray(g.root)
    src, tgt = int(root[source]), int(root[target])
    order = _transfer_order(g)
    edges = [(int(root[u]), int(root[v])) for u, v in g.edges[order]]
    last: Dict[int, int] = {}
    first: Dict[int, int] = {}
    for i, (u, v) in enumerate(edges):
        for x in (u, v):
            first.setdefault(x, i)
            last[x] = i
    vertices = set(int(r) for r in np.unique(root))
    isolated = len(vertices - set(first))

    # state: (frontier labels, source block, target block, joined) -> weight
    states: Dict[tuple, float] = {((), -1, -1, src == tgt): 1.0}
    for i, (u, v) in enumerate(edges):
        nxt: Dict[tuple, float] = {}
        retiring = [x for x in {u, v} if last[x] == i]
        for (frontier, sb, tb, joined), w in states.items():
            labels = dict(frontier)
            fresh = max(labels.values(), default=-1) + 1
            for x in (u, v):
                if x not in labels:
                    labels[x] = fresh
                    if x == src:
                        sb = fresh
                    if x == tgt:
                        tb = fresh
                    fresh += 1
            for is_open, bw in ((False, 1.0 - p), (True, p)):
                if bw == 0.0:
                    continue
                lab = dict(labels)
                s2, t2, j2 = sb, tb, joined
                if is_open and lab[u] != lab[v]:
                    old, new = lab[v], lab[u]
                    lab = {x: (new if l == old else l) for x, l in lab.items()}
                    s2 = new if s2 == old else s2
                    t2 = new if t2 == old else t2
                if s2 >= 0 and s2 == t2:
                    j2 = True
                weight = w * bw
                for x in retiring:
                    block = lab.pop(x)
                    if block not in lab.values():
                        weight *= q
                        s2 = -1 if s2 == block else s2
                        t2 = -1 if t2 == block else t2
                if j2:
                    s2 = t2 = -1
                key_labels, relabel = _canonical(lab)
                key = (key_labels, relabel.get(s2, -1), relabel.get(t2, -1), j2)
                nxt[key] = nxt.get(key, 0.0) + weight
        states = nxt
    scale = q ** isolated
    Z = sum(states.values()) * scale
    joined = sum(w for (_f, _s, _t, j), w in states.items() if j) * scale
    return Z, joined / Z


def transfer_connectivities(domain: Graph, spec: MeasureSpec, source: int,
                            targets: Optional[Iterable[int]] = None) -> np.ndarray:
    """phi(source <-> x) for every x in targets (all sites by default); NaN elsewhere."""
    targets = range(domain.n_sites) if targets is None else targets
    out = np.full(domain.n_sites, np.nan)
    for x in targets:
        out[x] = transfer_connectivity(domain, spec, source, x)[1]
    logger.info(f"Transfer connectivities on {domain.kind}: {int(np.isfinite(out).sum())} targets")
    return out


# --- Monte Carlo ---

@njit(cache=True, nogil=True)
def _connected_off_edge(bits, u, v, skip, offsets, nbr, eid, cls_off, cls_mem, root, mark, cmark, queue, stamp):
    """BFS from u to v over open edges other than `skip`, jumping inside boundary classes."""
    head = 0
    tail = 1
    queue[0] = u
    mark[u] = stamp
    while head < tail:
        s = queue[head]
        head += 1
        if s == v:
            return True
        r = root[s]
        if cmark[r] != stamp:
            cmark[r] = stamp
            for k in range(cls_off[r], cls_off[r + 1]):
                t = cls_mem[k]
                if mark[t] != stamp:
                    mark[t] = stamp
                    queue[tail] = t
                    tail += 1
        for k in range(offsets[s], offsets[s + 1]):
            e = eid[k]
            if e == skip or bits[e] == 0:
                continue
            t = nbr[k]
            if mark[t] != stamp:
                mark[t] = stamp
                queue[tail] = t
                tail += 1
    return False


@njit(cache=True, nogil=True)
def _heat_bath_edges(bits, order, edges, p, q, uniforms, offsets, nbr, eid, cls_off, cls_mem, root,
                     mark, cmark, queue, stamp):
    p_free = p / (p + (1.0 - p) * q) if p > 0.0 else 0.0
    for j in range(order.shape[0]):
        i = order[j]
        stamp += 1
        u = edges[i, 0]
        v = edges[i, 1]
        if root[u] == root[v] or _connected_off_edge(bits, u, v, i, offsets, nbr, eid, cls_off, cls_mem,
                                                    root, mark, cmark, queue, stamp):
            prob = p
        else:
            prob = p_free
        bits[i] = 1 if uniforms[j] < prob else 0
    return stamp


@njit(cache=True, nogil=True)
def _chayes_machta(bits, edges, root, p, inv_q, u_sites, u_edges):
    labels = cluster_labels(bits, edges, root)
    active = np.zeros(root.shape[0], dtype=np.bool_)
    for s in range(root.shape[0]):
        if labels[s] == s:
            active[s] = u_sites[s] < inv_q
    for i in range(edges.shape[0]):
        if active[labels[edges[i, 0]]] and active[labels[edges[i, 1]]]:
            bits[i] = 1 if u_edges[i] < p else 0


@dataclass
class ChainState:
    """One Markov chain: its configuration, its random stream and how far it has run."""

    graph: Graph
    bits: np.ndarray
    rng: np.random.Generator
    chain_id: int = 0
    steps: int = 0
    _stamp: int = field(default=0, repr=False)
    _buffers: Optional[tuple] = field(default=None, repr=False)

    @classmethod
    def start(cls, graph: Graph, rng: np.random.Generator, chain_id: int = 0) -> "ChainState":
        bits = (rng.random(graph.n_edges) < 0.5).astype(np.uint8)
        return cls(graph, bits, rng, chain_id)

    @property
    def configuration(self) -> EdgeConfiguration:
        return EdgeConfiguration(self.bits.copy())

    def buffers(self) -> tuple:
        if self._buffers is None:
            n = self.graph.n_sites
            self._buffers = (np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64),
                             np.zeros(n, dtype=np.int64))
        return self._buffers


def _heat_bath(state: ChainState, spec: MeasureSpec, order: np.ndarray) -> ChainState:
    g = state.graph
    offsets, nbr, eid = g.adjacency
    cls_off, cls_mem = g.class_members
    mark, cmark, queue = state.buffers()
    uniforms = state.rng.random(order.shape[0])
    state._stamp = _heat_bath_edges(state.bits, order, g.edges, spec.p, spec.q, uniforms, offsets, nbr, eid,
                                     cls_off, cls_mem, g.root, mark, cmark, queue, state._stamp)
    state.steps += 1
    return state


def heat_bath_step(state: ChainState, spec: MeasureSpec, edge: int) -> ChainState:
    """Resample one edge from its conditional law given the others."""
    if not 0 <= edge < state.graph.n_edges:
        raise InvalidParameterError(f"edge {edge} is not in the graph")
    return _heat_bath(state, spec, np.array([edge], dtype=np.int64))


def heat_bath_sweep(state: ChainState, spec: MeasureSpec) -> ChainState:
    """Heat-bath update of every edge in index order."""
    return _heat_bath(state, spec, np.arange(state.graph.n_edges, dtype=np.int64))


def chayes_machta_sweep(state: ChainState, spec: MeasureSpec) -> ChainState:
    """One Chayes-Machta move with a single active colour (q >= 1)."""
    if spec.q < 1:
        raise UnsupportedError(f"Chayes-Machta dynamics need q >= 1, got q={spec.q}")
    g = state.graph
    u_sites = state.rng.random(g.n_sites)
    u_edges = state.rng.random(g.n_edges)
    _chayes_machta(state.bits, g.edges, g.root, spec.p, 1.0 / spec.q, u_sites, u_edges)
    state.steps += 1
    return state


def pick_sampler(domain: Graph, spec: MeasureSpec, sampler: str = "auto") -> Callable[[ChainState, MeasureSpec], ChainState]:
    if sampler not in SAMPLERS:
        raise InvalidParameterError(f"sampler must be one of {SAMPLERS}, got {sampler!r}")
    if sampler == "chayes_machta":
        if spec.q < 1:
            raise UnsupportedError(f"Chayes-Machta dynamics need q >= 1, got q={spec.q}")
        return chayes_machta_sweep
    if sampler == "heat_bath" or spec.q < 1 or getattr(domain, "kind", "") == "cover":
        return heat_bath_sweep
    return chayes_machta_sweep


def spawn_rngs(seed: int, n_chains: int) -> List[np.random.Generator]:
    """Independent PCG64 streams for each chain, derived from one master seed."""
    return [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(n_chains)]


@dataclass
class Estimate:
    """Monte Carlo mean with a batch-means standard error; arrays for vector functionals."""

    mean: Union[float, complex, np.ndarray]
    stderr: Union[float, np.ndarray]
    n_samples: int
    ess: Union[float, np.ndarray]


@dataclass(frozen=True)
class _ChainJob:
    domain: Graph
    spec: MeasureSpec
    f: Functional
    n_samples: int
    burn_in: int
    sampler: str
    seed_seq: np.random.SeedSequence
    chain_id: int


def _run_chain(job: _ChainJob) -> np.ndarray:
    graph = resolve(job.domain, job.spec)
    sweep = pick_sampler(job.domain, job.spec, job.sampler)
    state = ChainState.start(graph, np.random.default_rng(job.seed_seq), job.chain_id)
    for _ in range(job.burn_in):
        sweep(state, job.spec)
    values = []
    for _ in range(job.n_samples):
        sweep(state, job.spec)
        values.append(np.asarray(job.f(state.configuration)))
    return np.stack(values)


def _batch_means(chains: Sequence[np.ndarray], n_batches: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    samples = np.concatenate(chains)
    n = samples.shape[0]
    means = []
    for values in chains:
        for batch in np.array_split(values, min(n_batches, values.shape[0])):
            means.append(batch.mean(axis=0))
    means = np.stack(means)
    mean = samples.mean(axis=0)
    k = means.shape[0]
    if k > 1:
        dev = np.abs(means - means.mean(axis=0)) ** 2
        stderr = np.sqrt(dev.sum(axis=0) / (k - 1) / k)
    else:
        stderr = np.zeros_like(np.abs(mean))
    # constant functionals have zero error
    stderr = np.where(np.all(samples == samples[0], axis=0), 0.0, stderr)
    var =(np.abs(samples - mean) ** 2).mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ess = np.where(stderr > 0, var / np.where(stderr > 0, stderr, 1.0) ** 2, n)
    ess = np.minimum(ess, n)
    return mean, stderr, ess, n


def estimate(domain: Graph, spec: MeasureSpec, f: Functional, n_samples: int,
             n_chains: Optional[int] = None, seed: int = 0, sampler: str = "auto",
             burn_in: Optional[int] = None, n_batches: Optional[int] = None,
             workers: Optional[int] = None) -> Estimate:
    """Average f over n_samples sweeps of each of n_chains chains after burn-in.

    Deterministic given (seed, n_chains, schedule); chain results are reduced
    in chain order whatever the number of worker processes.
    """
    n_chains = Config.N_CHAINS if n_chains is None else n_chains
    burn_in = Config.BURN_IN if burn_in is None else burn_in
    n_batches = Config.N_BATCHES if n_batches is None else n_batches
    workers = Config.WORKERS if workers is None else workers
    if n_samples < 1 or n_chains < 1:
        raise InvalidParameterError(f"need n_samples >= 1 and n_chains >= 1, got {n_samples}, {n_chains}")
    pick_sampler(domain, spec, sampler)
    children = np.random.SeedSequence(seed).spawn(n_chains)
    jobs = [_ChainJob(domain, spec, f, n_samples, burn_in, sampler, child, i) for i, child in enumerate(children)]
    if workers > 1 and n_chains > 1:
        with Pool(processes=min(workers, n_chains)) as pool:
            chains = pool.map(_run_chain, jobs)
    else:
        chains = [_run_chain(job) for job in jobs]
    mean, stderr, ess, n = _batch_means(chains, n_batches)
    if np.ndim(mean) == 0:
        mean = mean.item()
        stderr = float(stderr)
        ess = float(ess)
    logger.info(f"Estimated over {n_chains} chains x {n_samples} sweeps on {domain.kind} "
                f"(p={spec.p:.6g}, q={spec.q:g}, burn-in {burn_in})")
    return Estimate(mean, stderr, n, ess)


def sample_masks(domain: Graph, spec: MeasureSpec, n_sweeps: int, seed: int = 0, sampler: str = "auto",
                 burn_in: Optional[int] = None) -> np.ndarray:
    """Configuration masks visited by one chain, one per sweep after burn-in."""
    if domain.n_edges > 62:
        raise TooLargeError("configuration masks need at most 62 edges")
    burn_in = Config.BURN_IN if burn_in is None else burn_in
    graph = resolve(domain, spec)
    sweep = pick_sampler(domain, spec, sampler)
    state = ChainState.start(graph, spawn_rngs(seed, 1)[0])
    for _ in range(burn_in):
        sweep(state, spec)
    weights = np.left_shift(np.int64(1), np.arange(graph.n_edges, dtype=np.int64))
    out = np.empty(n_sweeps, dtype=np.int64)
    for t in range(n_sweeps):
        sweep(state, spec)
        out[t] = int(state.bits.astype(np.int64) @ weights)
    return out


def empirical_distribution(masks: np.ndarray, n_edges: int) -> np.ndarray:
    """Visit frequencies of every configuration mask."""
    counts = np.bincount(np.asarray(masks, dtype=np.int64), minlength=1 << n_edges)
    return counts / max(1, counts.sum())


def total_variation(first: np.ndarray, second: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(first) - np.asarray(second)).sum())
