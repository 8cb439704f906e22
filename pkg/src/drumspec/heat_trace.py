"""Heat-trace evaluation and the theoretical coefficients of its expansion.

The trace h(t) = sum(exp(-lambda_k t)) is evaluated from a finite spectrum
with an explicit truncation tail bound.  The constant coefficient of the
short-time expansion is computed from geometry along two independent routes
(curvature integral + per-corner defects vs. Euler characteristic + corner
angles) that must agree to machine accuracy; a disagreement signals a bug in
the geometry layer, not a numerical tolerance issue.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import ConsistencyError, EmptySpectrumError, NumericError
from .geometry import detect_corners

PI = math.pi

DEFAULT_TAIL_SAFETY = 2.0

# Agreement required between the two a0 computation routes.
A0_ROUTE_TOL = 1e-10


def corner_term(theta):
    """Purely local trace contribution of a corner with opening angle theta.

    Positive for convex corners (theta < pi), zero at a straight junction,
    negative for reflex corners.
    """
    if not 0.0 < theta < 2.0 * PI:
        raise ValueError(
            f"corner angle {theta!r} outside (0, 2*pi): cusps and slits "
            "are unsupported")
    return (PI ** 2 - theta ** 2) / (24.0 * PI * theta)


def corner_term_with_turn(theta):
    """(pi^2 + theta^2) / (24 pi theta): corner defect plus the turn
    theta/(12 pi) it removes from the curvature integral."""
    if not 0.0 < theta < 2.0 * PI:
        raise ValueError(f"corner angle {theta!r} outside (0, 2*pi)")
    return (PI ** 2 + theta ** 2) / (24.0 * PI * theta)


@dataclass
class TheoreticalCoefficients:
    """Expansion coefficients computed directly from geometry."""

    a_minus1: float
    a_minus_half: float
    a0: float
    curvature_term: float          # (1/12 pi) * integral of k over smooth part
    corner_thetas: list = field(default_factory=list)
    corner_terms: list = field(default_factory=list)
    chi: int = 1

    @property
    def n_corners(self):
        return len(self.corner_thetas)


def theoretical_coefficients(domain, angle_tol=1e-6):
    """a_{-1}, a_{-1/2} from area/perimeter; a0 via two independent routes.

    Route 1 integrates the geodesic curvature of the smooth boundary and adds
    each corner's local defect.  Route 2 uses only the Euler characteristic
    and the corner angles (valid for curved edges as well, since the
    curvature integral always equals sum(theta_j) + pi(2 chi - n)).
    """
    corners = detect_corners(domain, angle_tol)
    thetas = [c.theta for c in corners]
    terms = [corner_term(t) for t in thetas]
    curv = domain.curvature_integral()
    chi = domain.chi

    a0_curvature = curv / (12.0 * PI) + sum(terms)
    a0_euler = chi / 6.0 + sum(corner_term_with_turn(t) - 1.0 / 12.0 for t in thetas)
    if abs(a0_curvature - a0_euler) > A0_ROUTE_TOL:
        raise ConsistencyError(
            f"a0 routes disagree: curvature route {a0_curvature!r} vs "
            f"Euler route {a0_euler!r} (domain {domain.label!r}); "
            "geometry invariants are broken")

    return TheoreticalCoefficients(
        a_minus1=domain.area() / (4.0 * PI),
        a_minus_half=-domain.perimeter() / (8.0 * math.sqrt(PI)),
        a0=a0_euler,
        curvature_term=curv / (12.0 * PI),
        corner_thetas=thetas,
        corner_terms=terms,
        chi=chi,
    )


@dataclass
class TraceSamples:
    """Partial heat-trace sums on a t-grid with truncation tail bounds."""

    grid: np.ndarray
    values: np.ndarray
    tail_bounds: np.ndarray
    cutoff: float
    safety_factor: float
    flagged: np.ndarray  # tail bound exceeds 10% of the partial sum

    def __len__(self):
        return len(self.grid)


def evaluate_trace(spectrum, grid, area_hint=None,
                   safety_factor=DEFAULT_TAIL_SAFETY):
    """Partial sums sum(exp(-lambda t)) over the spectrum, per grid point.

    The truncation tail is estimated from the Weyl eigenvalue density:
    integral over (cutoff, inf) of exp(-lambda t) |Omega|/(4 pi) d lambda
    = |Omega| exp(-cutoff t) / (4 pi t), inflated by ``safety_factor``
    because the density estimate is asymptotic, not rigorous.  The area
    comes from ``area_hint``, the spectrum's own hint, or the Weyl estimate
    4 pi K / cutoff.  Grid points whose bound exceeds 10% of the partial sum
    are flagged, not rejected.

    Summation is in ascending eigenvalue order with exact (fsum)
    accumulation, so results are independent of any internal chunking.
    """
    t = np.asarray(grid, dtype=float)
    if t.size == 0 or np.any(t <= 0):
        raise ValueError("grid must be non-empty and positive")
    if np.any(np.diff(t) <= 0):
        raise ValueError("grid must be strictly ascending")
    lam = spectrum.eigenvalues
    if lam.size == 0:
        raise EmptySpectrumError("cannot evaluate the trace of an empty spectrum")

    if area_hint is None:
        area_hint = spectrum.area_hint
    if area_hint is None:
        area_hint = 4.0 * PI * len(lam) / spectrum.cutoff

    terms = np.exp(-np.outer(lam, t))
    values = np.array([math.fsum(terms[:, j]) for j in range(t.size)])
    tails = safety_factor * area_hint * np.exp(-spectrum.cutoff * t) / (4.0 * PI * t)
    # Positive by definition; keep it so when exp underflows at huge cutoff*t.
    tails = np.maximum(tails, np.finfo(float).tiny)
    flagged = tails > 0.1 * values
    return TraceSamples(grid=t, values=values, tail_bounds=tails,
                        cutoff=spectrum.cutoff, safety_factor=safety_factor,
                        flagged=flagged)


def wedge_trace(area, side_length, theta, t):
    """Heat trace of a finite wedge of opening angle theta.

    area and side_length are the wedge's area and the total length of its
    two straight sides.  The exponentially small remainder O(e^{-c/t}) is
    omitted; callers needing an error bar may use the conservative bound
    exp(-diam^2 / (16 t)) with diam the wedge diameter.
    """
    if not 0.0 < theta < 2.0 * PI:
        raise ValueError(f"wedge opening angle {theta!r} outside (0, 2*pi)")
    if t <= 0:
        raise ValueError("t must be positive")
    return (area / (4.0 * PI * t)
            - side_length / (8.0 * math.sqrt(PI * t))
            + corner_term(theta))


def halfplane_boundary_correction(t, length):
    """Boundary term -L/(8 sqrt(pi t)) of the Dirichlet half-plane trace.

    Also re-derives the constant by quadrature of the image-charge diagonal
    -exp(-x^2/t)/(4 pi t) over x in (0, inf) per unit boundary length, and
    fails loudly if the two disagree: this is a structural self-test of the
    boundary-term normalization.
    """
    if t <= 0 or length <= 0:
        raise ValueError("t and length must be positive")
    closed_form = -length / (8.0 * math.sqrt(PI * t))
    per_unit, _ = quad(lambda x: -math.exp(-x * x / t) / (4.0 * PI * t),
                       0.0, np.inf, epsabs=1e-14, epsrel=1e-12)
    if abs(per_unit * length - closed_form) > 1e-8 * abs(closed_form):
        raise NumericError(
            f"half-plane boundary quadrature {per_unit * length!r} does not "
            f"match the closed form {closed_form!r}")
    return closed_form


# ---------------------------------------------------------------------------
# Trace sample files: 't,h,tail_bound' rows under a '# cutoff=...' header.


def write_trace(samples, path):
    lines = [f"# cutoff={samples.cutoff:.17g} safety_factor={samples.safety_factor:.17g}"]
    lines.append("t,h,tail_bound")
    for t, h, b in zip(samples.grid, samples.values, samples.tail_bounds):
        lines.append(f"{t:.17g},{h:.17g},{b:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace(path):
    cutoff = None
    safety = DEFAULT_TAIL_SAFETY
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    key, _, val = token.partition("=")
                    if key == "cutoff":
                        cutoff = float(val)
                    elif key == "safety_factor":
                        safety = float(val)
                continue
            if line.startswith("t,"):
                continue
            rows.append([float(x) for x in line.split(",")])
    if cutoff is None or not rows:
        raise ValueError(f"{path}: not a trace sample file")
    arr = np.array(rows)
    return TraceSamples(grid=arr[:, 0], values=arr[:, 1], tail_bounds=arr[:, 2],
                        cutoff=cutoff, safety_factor=safety,
                        flagged=arr[:, 2] > 0.1 * arr[:, 1])
