"""
Exploratory comparison of the rescaled observable with the strip map.

The square [0, n]^2 with a and b at the midpoints of the right and left
sides is mapped onto the strip {0 < Im w < 1}: a rectangle of aspect ratio
K'/K = 2 goes to the upper half-plane by the Jacobi sn function, a Moebius
map sends b to 0 and a to infinity, and log / pi opens the half-plane into
the strip.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize, special, stats

from src.errors import FKLabError, InvalidParameterError
from src.experiments.report import ExperimentReport
from src.fk_model import MeasureSpec, critical_point
from src.lattice_geometry import LatticeDomain, build_dobrushin, medial_graph
from src.loop_rep import boundary_windings
from src.parafermion import QUARTER, observable_field, spin

logger = logging.getLogger(__name__)


def _parameter_for_ratio(ratio: float) -> float:
    """m with K(1 - m) / K(m) = ratio."""
    return optimize.brentq(lambda m: special.ellipk(1.0 - m) / special.ellipk(m) - ratio, 1e-12, 1.0 - 1e-12,
                           xtol=1e-15)


def complex_sn(z: complex, m: float) -> complex:
    """sn(x + iy | m) from real-argument values via the addition formula."""
    sn, cn, dn, _ = special.ellipj(z.real, m)
    sn1, cn1, dn1, _ = special.ellipj(z.imag, 1.0 - m)
    den = cn1 ** 2 + m * sn ** 2 * sn1 ** 2
    return complex(sn * dn1, cn * dn * sn1 * cn1) / den


@dataclass
class StripMap:
    """Conformal map of [0, width] x [0, height] onto the unit strip with b -> -inf and a -> +inf."""

    width: float
    height: float

    def __post_init__(self):
        self.m = _parameter_for_ratio(2.0 * self.height / self.width)
        self.K = float(special.ellipk(self.m))
        self.Kp = float(special.ellipk(1.0 - self.m))
        self.w_a = complex_sn(complex(self.K, self.Kp / 2.0), self.m)
        self.w_b = complex_sn(complex(-self.K, self.Kp / 2.0), self.m)

    def _rect(self, x: float, y: float) -> complex:
        return complex(2.0 * self.K * x / self.width - self.K, self.Kp * y / self.height)

    def __call__(self, x: float, y: float) -> complex:
        w = complex_sn(self._rect(x, y), self.m)
        return cmath.log((w - self.w_b) / (self.w_a - w)) / math.pi

    def derivative(self, x: float, y: float, h: float = 1e-6) -> complex:
        """d/dz by central differences in the lattice coordinates."""
        return (self(x + h, y) - self(x - h, y)) / (2.0 * h)


def scaling_domain(n: int) -> LatticeDomain:
    if n < 2 or n % 2:
        raise InvalidParameterError(f"the square needs an even side >= 2, got {n}")
    return build_dobrushin(n, n, a=(n, n // 2), b=(0, n // 2))


def boundary_phase_deviation(fld) -> float:
    """max |arg F(e) - sigma W(e, e_b)| over exterior medial edges visited by gamma."""
    worst = 0.0
    for e, w in boundary_windings(fld.domain).items():
        value = fld[e]
        if abs(value) < 1e-12:
            continue
        worst = max(worst, abs(cmath.phase(value * cmath.exp(-1j * fld.sigma * w * QUARTER))))
    return worst


def run_scaling_comparison(q: float = 2.0, n: int = 8, n_samples: int = 4000, n_chains: Optional[int] = None,
                           burn_in: Optional[int] = None, workers: Optional[int] = None, seed: int = 0,
                           **_ignored) -> ExperimentReport:
    """|F| / (2/n)^sigma against |phi'|^sigma on interior medial edges; descriptive only."""
    params = {"q": q, "n": n, "n_samples": n_samples, "n_chains": n_chains, "burn_in": burn_in, "workers": workers}
    report = ExperimentReport("scaling", params, seed)
    pc = critical_point(q)
    try:
        domain = scaling_domain(n)
        sigma = spin(q).sigma
        fld = observable_field(domain, MeasureSpec(pc, q), mode="monte-carlo", n_samples=n_samples, seed=seed,
                               n_chains=n_chains, burn_in=burn_in, workers=workers)
    except FKLabError as e:
        logger.error(f"Scaling comparison failed: {e}", exc_info=True)
        report.errors.append(str(e))
        return report.finish()

    deviation = boundary_phase_deviation(fld)
    report.check("boundary_phase_match", deviation, deviation < 1e-9, 1e-9, q=q, p=pc, n=n)

    mg = medial_graph(domain)
    strip = StripMap(float(n), float(n))
    scale = (2.0 / n) ** sigma
    observed, predicted, offsets = [], [], []
    for e in np.flatnonzero(mg.valid):
        e = int(e)
        if e >= 4 * domain.n_sites or domain.is_exterior(e) or abs(fld[e]) == 0.0:
            continue
        x, y = (float(c) for c in mg.midpoints[e])
        d = strip.derivative(x, y)
        observed.append(abs(fld[e]) / scale)
        predicted.append(abs(d) ** sigma)
        offsets.append(cmath.phase(fld[e]) - sigma * cmath.phase(d))
    if len(observed) < 3:
        report.errors.append("too few interior medial edges with a nonzero estimate")
        return report.finish()
    r, _ = stats.pearsonr(observed, predicted)
    report.record("modulus_correlation", r, q=q, p=pc, n=n, note=f"{len(observed)} interior medial edges")
    ratio = np.asarray(observed) / np.asarray(predicted)
    report.record("modulus_ratio_mean", float(ratio.mean()), q=q, p=pc, n=n, stderr=float(ratio.std(ddof=1)))
    resultant = abs(np.mean(np.exp(1j * np.asarray(offsets))))
    report.record("phase_offset_concentration", float(resultant), q=q, p=pc, n=n,
                  note="mean resultant length of arg F - sigma arg phi'")
    return report.finish()
