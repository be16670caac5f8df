"""
Parafermionic observables of the FK model and the identities they satisfy.

F(e) = E[exp(i sigma W(e, e_b)) 1{e in gamma}] with sin(sigma pi / 2) = sqrt(q) / 2.
At q = 4 the spin degenerates to 1 and G(e) = E[W exp(iW) 1{e in gamma}] takes
over. Windings are integer quarter turns until an exponent is evaluated.
"""

import csv
import cmath
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path as FilePath
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from src.config import Config
from src.engines import (Estimate, ExactEnumerator, configurations, estimate, transfer_connectivities)
from src.errors import (ComplexSpinUnsupportedError, ExcludedSiteError, InvalidParameterError,
                        UndefinedVertexError, UnsupportedDomainError, WrongObservableError)
from src.fk_model import EdgeConfiguration, MeasureSpec, cluster_labels, critical_point, resolve, weight
from src.lattice_geometry import FROZEN, STUB, LatticeDomain, medial_graph, slit_sites
from src.loop_rep import Winding, boundary_windings, exploration_path, windings_to_end

logger = logging.getLogger(__name__)

QUARTER = math.pi / 2.0
SLIT_REFERENCE_WINDING = 3
PORTS = ("NW", "NE", "SW", "SE")


# --- Spin ---

@dataclass(frozen=True)
class Spin:
    q: float
    sigma: float


def spin(q: float) -> Spin:
    """sigma in [0, 1] with sin(sigma pi / 2) = sqrt(q) / 2."""
    if not 0.0 <= q <= 4.0:
        raise ComplexSpinUnsupportedError(f"the spin is real only for 0 <= q <= 4, got q={q}")
    half = min(1.0, math.sqrt(q) / 2.0)
    sigma = 2.0 / math.pi * math.asin(half)
    alt = 1.0 - 2.0 / math.pi * math.acos(half)
    if abs(sigma - alt) > 1e-12:
        raise InvalidParameterError(f"spin formulas disagree at q={q}: {sigma} vs {alt}")
    return Spin(q, sigma)


# --- Fields ---

@dataclass
class ObservableField:
    """Complex values on the medial edges (corner ids) of a marked domain."""

    domain: LatticeDomain
    values: np.ndarray
    mode: str = "exact"
    stderr: Optional[np.ndarray] = None
    kind: str = "F"
    sigma: float = 0.0
    spec: Optional[MeasureSpec] = None
    ess: Optional[np.ndarray] = None

    def __getitem__(self, edge: int) -> complex:
        return complex(self.values[edge])

    def to_csv(self, path: Union[str, FilePath]) -> FilePath:
        """Edge id, midpoint, real and imaginary parts, standard error."""
        path = FilePath(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        mg = medial_graph(self.domain)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["edge", "x", "y", "re", "im", "stderr"])
            for e in np.flatnonzero(mg.valid):
                se = "" if self.stderr is None else f"{self.stderr[e]:.6g}"
                writer.writerow([int(e), mg.midpoints[e][0], mg.midpoints[e][1],
                                 f"{self.values[e].real:.15g}", f"{self.values[e].imag:.15g}", se])
        logger.info(f"Wrote {self.kind} field ({self.mode}) to {path}")
        return path


class PathFunctional:
    """Per-configuration summand of F (or G) on every medial edge; picklable for worker pools."""

    def __init__(self, domain: LatticeDomain, sigma: float, kind: str = "F"):
        self.domain = domain
        self.sigma = sigma
        self.kind = kind

    def __call__(self, config: EdgeConfiguration) -> np.ndarray:
        out = np.zeros(self.domain.n_corners, dtype=np.complex128)
        for e, w in windings_to_end(exploration_path(config, self.domain)).items():
            ang = w * QUARTER
            out[e] = ang * cmath.exp(1j * ang) if self.kind == "G" else cmath.exp(1j * self.sigma * ang)
        return out


def _require_marked(domain: LatticeDomain) -> None:
    if not isinstance(domain, LatticeDomain) or not domain.is_dobrushin:
        raise UnsupportedDomainError("parafermionic observables need a domain with marked points")


def observable_field(domain: LatticeDomain, spec: MeasureSpec, mode: str = "exact", kind: str = "F",
                     n_samples: int = 2000, seed: int = 0, **mc) -> ObservableField:
    """The whole F (or G) field, exactly or by Monte Carlo."""
    _require_marked(domain)
    if kind == "G":
        if spec.q != 4.0:
            raise WrongObservableError(f"G is the q=4 observable, got q={spec.q}")
        sigma = 1.0
    else:
        sigma = spin(spec.q).sigma
    if mode == "exact":
        result = ExactEnumerator(domain, spec, sigma=sigma).run()
        values = result.G if kind == "G" else result.F
        return ObservableField(domain, values, "exact", None, kind, sigma, spec)
    if mode != "monte-carlo":
        raise InvalidParameterError(f"mode must be 'exact' or 'monte-carlo', got {mode!r}")
    est = estimate(domain, spec, PathFunctional(domain, sigma, kind), n_samples, seed=seed, **mc)
    return ObservableField(domain, np.asarray(est.mean), "monte-carlo", np.asarray(est.stderr), kind, sigma, spec,
                          ess=np.asarray(est.ess))


def observable_F(domain: LatticeDomain, spec: MeasureSpec, edge: int, mode: str = "exact",
                 **kwargs) -> Union[complex, Estimate]:
    """F at one medial edge; an Estimate in Monte Carlo mode."""
    fld = observable_field(domain, spec, mode, "F", **kwargs)
    if mode == "exact":
        return fld[edge]
    n = kwargs.get("n_samples", 2000) * kwargs.get("n_chains", Config.N_CHAINS)
    return Estimate(fld[edge], float(fld.stderr[edge]), n, float(fld.ess[edge]))


def observable_G(domain: LatticeDomain, spec: MeasureSpec, edge: int, mode: str = "exact", **kwargs) -> complex:
    """G at one medial edge (q = 4 only)."""
    return observable_field(domain, spec, mode, "G", **kwargs)[edge]


def _ports(fld: ObservableField, v: int):
    if not 0 <= v < fld.domain.n_edges:
        raise UndefinedVertexError(f"medial vertex {v} is not the midpoint of a random edge")
    return medial_graph(fld.domain).port(v)


def vertex_observable(fld: ObservableField, v: int) -> complex:
    """F(v) = half the sum of F over the four medial edges at v."""
    ports = _ports(fld, v)
    return 0.5 * sum(fld[e] for e in ports.as_tuple())


def local_relation_residual(fld: ObservableField, v: int) -> complex:
    """F(NW) - F(SE) - i [F(NE) - F(SW)]."""
    pt = _ports(fld, v)
    return fld[pt.nw] - fld[pt.se] - 1j * (fld[pt.ne] - fld[pt.sw])


def q4_relation_residual(fld: ObservableField, v: int) -> complex:
    if fld.kind != "G":
        raise WrongObservableError("the q=4 relation is stated for the G observable")
    return local_relation_residual(fld, v)


def max_local_residual(fld: ObservableField, vertices: Optional[Iterable[int]] = None) -> float:
    vertices = range(fld.domain.n_edges) if vertices is None else vertices
    return max((abs(local_relation_residual(fld, v)) for v in vertices), default=0.0)


# --- Proof-table oracle ---

# Contributions of the configuration in which gamma visits v twice, relative to
# the entry contribution of its partner, keyed by (entry port, partner open at v).
# Values are exponents of exp(i sigma pi / 2) per port.
PROOF_TABLE = {
    ("NW", True): {"NW": 0, "SE": 2, "NE": -1, "SW": 1},
    ("NW", False): {"NW": 0, "SE": -2, "NE": -1, "SW": 1},
    ("SE", True): {"SE": 0, "NW": 2, "SW": -1, "NE": 1},
    ("SE", False): {"SE": 0, "NW": -2, "SW": -1, "NE": 1},
}


def _contributions(config: EdgeConfiguration, domain: LatticeDomain, spec: MeasureSpec, sigma: float,
                   ports: Dict[str, int]) -> Tuple[float, Dict[str, complex], Dict[str, int]]:
    w = weight(config, domain, spec)
    windings = windings_to_end(exploration_path(config, domain))
    contrib, wind = {}, {}
    for name, e in ports.items():
        if e in windings:
            wind[name] = windings[e]
            contrib[name] = w * cmath.exp(1j * sigma * windings[e] * QUARTER)
        else:
            contrib[name] = 0j
    return w, contrib, wind


def contribution_table_check(domain: LatticeDomain, spec: MeasureSpec, v: int, tol: Optional[float] = None) -> bool:
    """Check every pair (omega, omega with v flipped) against the local proof table.

    Pairs where gamma avoids v must contribute nothing. Otherwise the partner
    visited twice must carry weight x^(+-1)/sqrt(q) times the other and the
    phases of the table; at p_c the pair sums satisfy the local relation.
    """
    _require_marked(domain)
    tol = Config.EXACT_TOL if tol is None else tol
    sigma = spin(spec.q).sigma
    rq = math.sqrt(spec.q)
    if abs(cmath.exp(0.5j * sigma * math.pi) - cmath.exp(-0.5j * sigma * math.pi) - 1j * rq) > 1e-14:
        logger.error(f"Spin identity fails at q={spec.q}")
        return False
    pt = medial_graph(domain).port(v)
    ports = dict(zip(PORTS, pt.as_tuple()))
    x = spec.p / (rq * (1.0 - spec.p))
    critical = abs(spec.p - critical_point(spec.q)) < 1e-12
    ok = True
    n = domain.n_edges
    for config in configurations(n):
        if config.bits[v]:
            continue
        flipped_bits = config.bits.copy()
        flipped_bits[v] = 1
        partner = EdgeConfiguration(flipped_bits)
        w0, c0, wind0 = _contributions(config, domain, spec, sigma, ports)
        w1, c1, wind1 = _contributions(partner, domain, spec, sigma, ports)
        scale = max(w0, w1, 1e-300)
        if not wind0 and not wind1:
            continue
        if not wind0 or not wind1:
            logger.error(f"Only one configuration of the pair at v={v} visits it: {config}")
            ok = False
            continue
        once, twice = (0, 1) if len(wind0) == 2 else (1, 0)
        c_once, c_twice = (c0, c1) if once == 0 else (c1, c0)
        w_once, w_twice = (w0, w1) if once == 0 else (w1, w0)
        wind_once = wind0 if once == 0 else wind1
        if len(wind0 if twice == 0 else wind1) != 4 or len(wind_once) != 2:
            logger.error(f"Unexpected visit pattern at v={v}: {config}")
            ok = False
            continue
        entry = "NW" if "NW" in wind_once else "SE"
        once_open = once == 1
        expected_ratio = (x if not once_open else 1.0 / x) / rq
        if abs(w_twice / w_once - expected_ratio) > tol * max(1.0, expected_ratio):
            logger.error(f"Weight ratio {w_twice / w_once} != {expected_ratio} at v={v}")
            ok = False
        ref = c_once[entry] / w_once
        for name, k in PROOF_TABLE[(entry, once_open)].items():
            want = ref * cmath.exp(0.5j * sigma * math.pi * k)
            if abs(c_twice[name] / w_twice - want) > tol:
                logger.error(f"Proof-table phase mismatch at {name}, v={v}: {config}")
                ok = False
        if critical:
            lhs = c0["NW"] + c1["NW"] - c0["SE"] - c1["SE"]
            rhs = 1j * (c0["NE"] + c1["NE"] - c0["SW"] - c1["SW"])
            if abs(lhs - rhs) > tol * scale:
                logger.error(f"Pair relation fails at v={v}: |lhs - rhs| = {abs(lhs - rhs):.3e}")
                ok = False
    return ok


# --- Contour sums and boundary coefficients ---

def _heading_phase(mg, e_b: int, e: int) -> complex:
    diff = int(round(mg.heading[e_b] - mg.heading[e])) % 4
    return (-1j) ** diff


def contour_sum(fld: ObservableField, V: Iterable[int]) -> complex:
    """Sum over medial edges leaving V minus entering V of exp(-iW(e, e_b)) F(e).

    W(e, e_b) is fixed modulo 2 pi by the headings of e and e_b.
    """
    V = set(int(v) for v in V)
    if any(not 0 <= v < fld.domain.n_edges for v in V):
        raise UndefinedVertexError("contour sums run over interior medial vertices only")
    mg = medial_graph(fld.domain)
    e_b = fld.domain.e_b
    total = 0j
    for e in np.flatnonzero(mg.valid):
        t_in = int(mg.tail[e]) in V
        h_in = int(mg.head[e]) in V
        if t_in == h_in:
            continue
        term = _heading_phase(mg, e_b, int(e)) * fld[int(e)]
        total += term if t_in else -term
    return total


@dataclass(frozen=True)
class DeltaCoefficient:
    x: int
    delta: float
    w_in: Winding
    w_out: Winding


def _as_quarter_turns(w: Union[Winding, int]) -> int:
    return w.quarter_turns if isinstance(w, Winding) else int(w)


def delta_coefficient(x: int, sigma: float, w_in: Union[Winding, int], w_out: Union[Winding, int],
                      w_ref: Union[Winding, int] = SLIT_REFERENCE_WINDING, origin: Optional[int] = None,
                      domain: Optional[LatticeDomain] = None) -> DeltaCoefficient:
    """Closed-form boundary coefficient of a site entered once and left once by the contour.

    delta = cos[(s-1)((W_out+W_in)/2 - W_ref/2)] sin[(s-1)(W_out-W_in)/2] / sin[(s-1) W_ref/2].
    The origin is the marked site of `domain` unless given explicitly.
    """
    if origin is None:
        if domain is None:
            raise InvalidParameterError("delta_coefficient needs the domain or its origin site")
        origin = domain.a
    if x == origin:
        raise ExcludedSiteError("the marked site carries the constant of the identity")
    if sigma >= 1.0:
        raise WrongObservableError("the coefficient degenerates at sigma = 1; use the G observable")
    wi, wo, wr = (_as_quarter_turns(w) * QUARTER for w in (w_in, w_out, w_ref))
    s1 = sigma - 1.0
    delta = math.cos(s1 * ((wo + wi) / 2.0 - wr / 2.0)) * math.sin(s1 * (wo - wi) / 2.0) / math.sin(s1 * wr / 2.0)
    return DeltaCoefficient(x, delta, Winding(_as_quarter_turns(w_in)), Winding(_as_quarter_turns(w_out)))


def delta_bound(sigma: float, w_ref: int = SLIT_REFERENCE_WINDING) -> float:
    """Modulus bound 1 / |sin[(1 - sigma) W_ref / 2]|."""
    return 1.0 / abs(math.sin((1.0 - sigma) * w_ref * QUARTER / 2.0))


@dataclass
class BoundaryTerms:
    """Per boundary site: entering and leaving windings and the complex coefficient c_x."""

    sites: List[int]
    w_in: Dict[int, List[int]]
    w_out: Dict[int, List[int]]
    coefficients: Dict[int, complex]
    w_ref: int


def boundary_terms(domain: LatticeDomain, sigma: float) -> BoundaryTerms:
    """c_x with sum_x c_x phi(0 <-> x) = i, from the contour sum over every interior vertex.

    At sigma = 1 the coefficients are the real limits (W_out - W_in summed) / W_ref.
    """
    _require_marked(domain)
    mg = medial_graph(domain)
    windings = boundary_windings(domain)
    w_ref = windings[domain.e_a]
    n_edges = domain.n_edges
    w_in: Dict[int, List[int]] = {}
    w_out: Dict[int, List[int]] = {}
    for e in np.flatnonzero(mg.valid):
        e = int(e)
        if e >= 4 * domain.n_sites or e in (domain.e_a, domain.e_b):
            continue
        t_in = 0 <= mg.tail[e] < n_edges
        h_in = 0 <= mg.head[e] < n_edges
        if t_in == h_in:
            continue
        x = e // 4
        (w_out if t_in else w_in).setdefault(x, []).append(windings[e])
    sites = sorted(set(w_in) | set(w_out))
    coeffs = {}
    for x in sites:
        outs, ins = w_out.get(x, []), w_in.get(x, [])
        if sigma >= 1.0:
            coeffs[x] = complex((sum(outs) - sum(ins)) / w_ref)
        else:
            s1 = sigma - 1.0
            theta = s1 * w_ref * QUARTER
            num = sum(cmath.exp(1j * s1 * w * QUARTER) for w in outs) - sum(cmath.exp(1j * s1 * w * QUARTER) for w in ins)
            coeffs[x] = num / (2.0 * math.sin(theta / 2.0) * cmath.exp(0.5j * theta))
    return BoundaryTerms(sites, w_in, w_out, coeffs, w_ref)


def slit_boundary(domain: LatticeDomain) -> List[int]:
    """Sites along the slit strictly inside the box, the origin excluded."""
    return [s for s in slit_sites(domain) if s != domain.a]


def slit_deltas(domain: LatticeDomain, sigma: float) -> List[DeltaCoefficient]:
    """Closed-form coefficients of the slit sites."""
    terms = boundary_terms(domain, sigma)
    out = []
    for x in slit_boundary(domain):
        (wi,), (wo,) = terms.w_in[x], terms.w_out[x]
        out.append(delta_coefficient(x, sigma, wi, wo, terms.w_ref, domain=domain))
    return out


def origin_term(sigma: float, w_ref: int) -> complex:
    """Contribution 1 - exp(i(sigma-1) W_ref) of the marked site."""
    return 1.0 - cmath.exp(1j * (sigma - 1.0) * w_ref * QUARTER)


class LinearConnectivity:
    """sum_x c_x 1{source <-> x}; picklable for worker pools."""

    def __init__(self, graph, source: int, coefficients: Dict[int, complex]):
        self.graph = graph
        self.source = source
        self.sites = np.array(list(coefficients), dtype=np.int64)
        self.coeffs = np.array([coefficients[x] for x in coefficients], dtype=np.complex128)

    def __call__(self, config: EdgeConfiguration) -> complex:
        labels = cluster_labels(config.bits, self.graph.edges, self.graph.root)
        hit = labels[self.sites] == labels[self.source]
        return complex(self.coeffs[hit].sum())


class Connectivity:
    """Vector of 1{source <-> x} over all sites."""

    def __init__(self, graph, source: int):
        self.graph = graph
        self.source = source

    def __call__(self, config: EdgeConfiguration) -> np.ndarray:
        labels = cluster_labels(config.bits, self.graph.edges, self.graph.root)
        return (labels == labels[self.source]).astype(np.float64)


@dataclass
class BoundaryIdentityResult:
    lhs: float
    residual: float
    complex_lhs: complex
    complex_residual: float
    real_part: float
    stderr: float = 0.0
    truncation_bound: float = 0.0
    mode: str = "exact"
    deltas: Dict[int, float] = field(default_factory=dict)


def exact_connectivities(domain: LatticeDomain, spec: MeasureSpec, source: int,
                         targets: Iterable[int]) -> Dict[int, float]:
    """phi(source <-> x), by enumeration when small enough, else by frontier transfer."""
    targets = list(targets)
    g = resolve(domain, spec)
    if g.n_edges <= Config.ENUMERATION_LIMIT:
        conn = ExactEnumerator(domain, spec, source=source).run().connectivity
    else:
        conn = transfer_connectivities(domain, spec, source, targets)
    return {x: float(conn[x]) for x in targets}


def cover_truncation_bound(domain: LatticeDomain, p: float, terms: BoundaryTerms) -> float:
    """Sum over the cut levels of |c_x| [1 - (1-p)^n]^|x3|."""
    n = int(domain.params["n"])
    T = int(domain.params["T"])
    rate = 1.0 - (1.0 - p) ** n
    return sum(abs(c) * rate ** T for x, c in terms.coefficients.items() if abs(int(domain.coords[x][2])) == T)


def boundary_identity(domain: LatticeDomain, q: float, mode: str = "exact", p: Optional[float] = None,
                      n_samples: int = 2000, seed: int = 0, **mc) -> BoundaryIdentityResult:
    """sum_x delta_x phi(0 <-> x) = 1 on slit domains and truncated covers.

    The complex precursor sum_x c_x phi(0 <-> x) = i and its real part are
    evaluated alongside. At q = 4 the coefficients come from the G contour
    identity.
    """
    _require_marked(domain)
    if domain.kind not in ("slit", "cover"):
        raise UnsupportedDomainError(f"the boundary identity is stated on slit domains and covers, not {domain.kind}")
    sigma = spin(q).sigma
    p = critical_point(q) if p is None else p
    spec = MeasureSpec(p, q)
    terms = boundary_terms(domain, sigma)
    target = 1.0 if sigma >= 1.0 else 1j
    stderr = 0.0
    if mode == "exact":
        phi = exact_connectivities(domain, spec, domain.a, terms.sites)
        total = sum(terms.coefficients[x] * phi[x] for x in terms.sites)
    elif mode == "monte-carlo":
        graph = resolve(domain, spec)
        if domain.kind == "cover":
            mc.setdefault("sampler", "heat_bath")
        est = estimate(domain, spec, LinearConnectivity(graph, domain.a, terms.coefficients), n_samples,
                       seed=seed, **mc)
        total = complex(est.mean)
        stderr = float(est.stderr)
    else:
        raise InvalidParameterError(f"mode must be 'exact' or 'monte-carlo', got {mode!r}")
    lhs = total.real if sigma >= 1.0 else total.imag
    real_part = total.imag if sigma >= 1.0 else total.real
    bound = cover_truncation_bound(domain, p, terms) if domain.kind == "cover" else 0.0
    result = BoundaryIdentityResult(
        lhs=float(lhs), residual=abs(lhs - 1.0), complex_lhs=total, complex_residual=abs(total - target),
        real_part=float(real_part), stderr=stderr, truncation_bound=bound, mode=mode,
        deltas={x: (c.real if sigma >= 1.0 else c.imag) for x, c in terms.coefficients.items()})
    logger.info(f"Boundary identity on {domain.kind} (q={q:g}, {mode}): lhs={lhs:.12g}, residual={result.residual:.3e}")
    return result


# --- Boundary law and martingale ---

def boundary_law_residual(domain: LatticeDomain, spec: MeasureSpec) -> float:
    """max over exterior medial edges of |F(e) - exp(i sigma W(e, e_b)) phi(x <-> wired arc)|."""
    _require_marked(domain)
    sigma = spin(spec.q).sigma
    result = ExactEnumerator(domain, spec, sigma=sigma, source=domain.b).run()
    windings = boundary_windings(domain)
    worst = 0.0
    for e, w in windings.items():
        if e >= 4 * domain.n_sites or not domain.medial_mask[e]:
            continue
        x = e // 4
        expected = cmath.exp(1j * sigma * w * QUARTER) * result.connectivity[x]
        worst = max(worst, abs(result.F[e] - expected))
    return worst


def _first_step_domains(domain: LatticeDomain) -> Tuple[int, LatticeDomain, LatticeDomain]:
    """The random edge met first by gamma and the two domains left after exploring it."""
    s, d = divmod(domain.e_a, 4)
    d1 = (d + 1) % 4
    edge = int(domain.half_edges[s, d1])
    if edge < 0:
        raise UnsupportedDomainError("the first exploration step is deterministic here")
    t = int(domain.neighbors[s, d1])
    keep = np.arange(domain.n_edges) != edge
    remap = np.cumsum(keep) - 1
    edges = domain.edges[keep]
    dirs = domain.edge_dirs[keep]

    def branch(frozen: bool) -> LatticeDomain:
        half = domain.half_edges.copy()
        rnd = half >= 0
        half[rnd] = remap[half[rnd]]
        half[s, d1] = FROZEN if frozen else STUB
        half[t, (d1 + 2) % 4] = FROZEN if frozen else STUB
        root = domain.root.copy()
        e_a = 4 * t + (d1 + 2) % 4 if frozen else 4 * s + d1
        if frozen:
            old, new = root[t], root[s]
            root[root == old] = new
        return replace(domain, edges=edges, edge_dirs=dirs, half_edges=half, root=root, e_a=e_a,
                       ext_strand=(), kind=domain.kind)

    return edge, branch(True), branch(False)


def martingale_check(domain: LatticeDomain, q: float, p: Optional[float] = None) -> float:
    """max_z |F(z) - E[F after one exploration step](z)| over medial edges other than e_a."""
    _require_marked(domain)
    p = critical_point(q) if p is None else p
    spec = MeasureSpec(p, q)
    sigma = spin(q).sigma
    edge, opened, closed = _first_step_domains(domain)
    full = ExactEnumerator(domain, spec, sigma=sigma).run()
    res_open = ExactEnumerator(opened, spec, sigma=sigma).run()
    res_closed = ExactEnumerator(closed, spec, sigma=sigma).run()
    z_open = p * res_open.Z
    z_closed = (1.0 - p) * res_closed.Z
    p_open = z_open / (z_open + z_closed)
    mixed = p_open * res_open.F + (1.0 - p_open) * res_closed.F
    mask = np.ones(domain.n_corners, dtype=bool)
    mask[domain.e_a] = False
    worst = float(np.max(np.abs(full.F - mixed)[mask]))
    logger.info(f"Martingale step over edge {edge} (q={q:g}): P(open)={p_open:.6f}, max deviation {worst:.3e}")
    return worst
