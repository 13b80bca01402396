"""Spectrum classification and residual diagnostics.

Computed spectra are matched against the exact reference to label each
level genuine, instilled-spurious (the interleaved unphysical values), or
coincidence-spurious (a kappa > 0 copy of the opposite series' lowest
state). Residual operations reconstruct spinor components from Hermite
coefficients and evaluate the strong-form equations; these take the raw
eigenvalue lambda, not the binding.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .assembly import SCHEME_LINEAR, assemble
from .discretization import Mesh, build_exponential_mesh, hermite_interpolate, quadrature_for
from .eigensolver import Spectrum, solve
from .errors import CoefficientSingularityError, DegeneratePencilError
from .physics import (
    OperatorParams,
    PotentialModel,
    ReferenceLevel,
    potential_derivative,
    potential_value,
    reference_spectrum,
)

#: Default relative matching tolerances: linear-basis genuine levels are only
#: ~1e-4 accurate, the Hermite schemes far better.
DEFAULT_MATCH_TOL = 1e-3
DEFAULT_MATCH_TOL_HERMITE = 1e-5


def match_tol_for(scheme: str) -> float:
    return DEFAULT_MATCH_TOL if scheme == SCHEME_LINEAR else DEFAULT_MATCH_TOL_HERMITE


class Label(Enum):
    GENUINE = "genuine"
    INSTILLED = "instilled-spurious"
    COINCIDENCE = "coincidence-spurious"


@dataclass(frozen=True)
class ClassifiedLevel:
    binding: float
    label: Label
    reference: ReferenceLevel | None = None
    rel_error: float | None = None


@dataclass(frozen=True)
class ClassifiedSpectrum:
    entries: tuple[ClassifiedLevel, ...]

    def count(self, label: Label) -> int:
        return sum(1 for e in self.entries if e.label is label)

    @property
    def genuine(self) -> tuple[ClassifiedLevel, ...]:
        return tuple(e for e in self.entries if e.label is Label.GENUINE)


def _rel(x: float, ref: float) -> float:
    return abs(x - ref) / abs(ref)


def classify(computed, reference: list[ReferenceLevel],
             opposite_kappa_ground: float | None = None,
             match_tol: float = DEFAULT_MATCH_TOL) -> ClassifiedSpectrum:
    """Label computed bindings against the reference spectrum.

    Matching is greedy and in order: each computed value either consumes the
    next unmatched reference level (within ``match_tol`` relative) or is
    spurious. Unmatched values close to ``opposite_kappa_ground`` (pass it
    for kappa > 0 runs only) are the coincidence phenomenon; every other
    unmatched value is an instilled spurious level.
    """
    computed = [float(x) for x in computed]
    if any(b < a for a, b in zip(computed, computed[1:])):
        raise ValueError("computed bindings must be sorted ascending")
    ref_bindings = [r.binding for r in reference]
    if any(b < a for a, b in zip(ref_bindings, ref_bindings[1:])):
        raise ValueError("reference levels must be sorted ascending")
    if not (0.0 < match_tol < 0.1):
        raise ValueError(f"match_tol must lie in (0, 0.1), got {match_tol}")

    entries = []
    ri = 0
    for c in computed:
        # references strictly below c can no longer match anything later
        while ri < len(reference) and ref_bindings[ri] < c and _rel(c, ref_bindings[ri]) > match_tol:
            ri += 1
        if ri < len(reference) and _rel(c, ref_bindings[ri]) <= match_tol:
            entries.append(ClassifiedLevel(binding=c, label=Label.GENUINE,
                                           reference=reference[ri],
                                           rel_error=_rel(c, ref_bindings[ri])))
            ri += 1
        elif opposite_kappa_ground is not None and _rel(c, opposite_kappa_ground) <= match_tol:
            entries.append(ClassifiedLevel(binding=c, label=Label.COINCIDENCE,
                                           rel_error=_rel(c, opposite_kappa_ground)))
        else:
            entries.append(ClassifiedLevel(binding=c, label=Label.INSTILLED))
    return ClassifiedSpectrum(entries=tuple(entries))


def truncate_to_genuine(classified: ClassifiedSpectrum, count: int) -> ClassifiedSpectrum:
    """Keep entries up to and including the count-th genuine level."""
    entries = []
    genuine = 0
    for e in classified.entries:
        entries.append(e)
        if e.label is Label.GENUINE:
            genuine += 1
            if genuine == count:
                break
    return ClassifiedSpectrum(entries=tuple(entries))


@dataclass(frozen=True)
class CoincidenceReport:
    """Pairing of the kappa > 0 spectrum against the kappa < 0 one."""

    present: bool
    first_pos: float
    first_neg: float
    first_rel_diff: float
    pairs: tuple[tuple[float, float, float], ...]


def coincidence_report(spec_pos: Spectrum, spec_neg: Spectrum,
                       tol: float = 1e-6) -> CoincidenceReport:
    """Check whether the lowest kappa > 0 level copies the kappa < 0 ground state.

    Higher levels coincide physically (same |kappa|, n_r >= 1), so the pairing
    table aligns index-by-index when the unphysical copy is present and with
    an offset of one when it has been removed.
    """
    if spec_pos.params.kappa <= 0 or spec_neg.params.kappa >= 0:
        raise ValueError("expected spectra for kappa > 0 and kappa < 0, in that order")
    if (abs(spec_pos.params.kappa) != abs(spec_neg.params.kappa)
            or spec_pos.params.Z != spec_neg.params.Z
            or spec_pos.scheme != spec_neg.scheme):
        raise ValueError("coincidence report requires matching Z, |kappa| and scheme")
    pos, neg = spec_pos.bindings, spec_neg.bindings
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("empty bound spectrum")
    first_rel = _rel(pos[0], neg[0])
    present = first_rel <= tol
    start, offset = (1, 0) if present else (0, 1)
    pairs = tuple(
        (float(pos[i]), float(neg[i + offset]), _rel(pos[i], neg[i + offset]))
        for i in range(start, len(pos))
        if i + offset < len(neg)
    )
    return CoincidenceReport(present=present, first_pos=float(pos[0]),
                             first_neg=float(neg[0]), first_rel_diff=first_rel,
                             pairs=pairs)


# --- strong-form residual diagnostics ---------------------------------------


def second_order_coefficients(params: OperatorParams, potential: PotentialModel,
                              lam: float, x, component: str = "f"):
    """Coefficients (p1, p2) of u'' + p1 u' + p2 u = 0 for one decoupled component."""
    x = np.asarray(x, dtype=float)
    V = potential_value(potential, x)
    dV = potential_derivative(potential, x)
    mc2, c, k = params.rest_energy, params.c, params.kappa
    wp = mc2 + V - lam
    wm = -mc2 + V - lam
    if component == "f":
        denom = wm
        p1 = -dV / denom
        p2 = wp * wm / c**2 - (k**2 + k) / x**2 - k * dV / (x * denom)
    elif component == "g":
        denom = wp
        p1 = -dV / denom
        p2 = wp * wm / c**2 - (k**2 - k) / x**2 + k * dV / (x * denom)
    else:
        raise ValueError(f"component must be 'f' or 'g', got {component!r}")
    scale = mc2 + abs(lam)
    if np.min(np.abs(denom)) < 1e-10 * scale:
        raise CoefficientSingularityError(
            f"w{'-' if component == 'f' else '+'}(x) - lambda vanishes at a quadrature point"
        )
    return p1, p2


def second_order_residual(params: OperatorParams, potential: PotentialModel, mesh: Mesh,
                          lam: float, values, slopes, component: str = "f") -> float:
    """Discrete L2 norm of u'' + p1 u' + p2 u over all quadrature points.

    ``values`` and ``slopes`` are the nodal coefficients of the Hermite
    expansion of the chosen component. Interior-length arrays (n, or n+1
    slopes when the lower slope dof was free) get zero boundary dofs, the
    solver's convention; length n+2 arrays carry explicit boundary data,
    for externally sampled functions. Genuine eigenpairs drive this
    residual to zero under refinement, instilled spurious pairs do not.
    """
    n = mesh.interior_count
    values = np.asarray(values, dtype=float)
    slopes = np.asarray(slopes, dtype=float)
    full_values = np.zeros(n + 2)
    if len(values) == n + 2:
        full_values[:] = values
    else:
        full_values[1:n + 1] = values
    full_slopes = np.zeros(n + 2)
    if len(slopes) == n + 2:
        full_slopes[:] = slopes
    elif len(slopes) == n + 1:
        full_slopes[0:n + 1] = slopes
    else:
        full_slopes[1:n + 1] = slopes
    total = 0.0
    for e in range(1, mesh.element_count + 1):
        rule = quadrature_for(mesh, e)
        xq = rule.points
        p1, p2 = second_order_coefficients(params, potential, lam, xq, component)
        u = hermite_interpolate(mesh, full_values, full_slopes, xq, order=0)
        du = hermite_interpolate(mesh, full_values, full_slopes, xq, order=1)
        d2u = hermite_interpolate(mesh, full_values, full_slopes, xq, order=2)
        r = d2u + p1 * du + p2 * u
        total += float(np.dot(rule.weights, r**2))
    return float(np.sqrt(total))


def supg_residuals(params: OperatorParams, potential: PotentialModel, lam: float,
                   f, df, g, dg):
    """Residual functionals of the two first-order equations, as callables.

    re1(x) = (w+ - lam) f - c g' + (c kappa / x) g
    re2(x) = (w- - lam) g + c f' + (c kappa / x) f
    Both vanish identically on an exact eigenpair.
    """
    mc2, c, k = params.rest_energy, params.c, params.kappa

    def re1(x):
        x = np.asarray(x, dtype=float)
        V = potential_value(potential, x)
        return (mc2 + V - lam) * np.asarray(f(x)) - c * np.asarray(dg(x)) \
            + (c * k / x) * np.asarray(g(x))

    def re2(x):
        x = np.asarray(x, dtype=float)
        V = potential_value(potential, x)
        return (-mc2 + V - lam) * np.asarray(g(x)) + c * np.asarray(df(x)) \
            + (c * k / x) * np.asarray(f(x))

    return re1, re2


def nodal_propagation(params: OperatorParams, potential: PotentialModel,
                      x_j: float, h_j: float, h_j1: float,
                      zeta_j: float, xi_j: float, lam: float):
    """First-order nodal propagation to the two neighbouring nodes.

    Backward/forward difference approximations of the derivatives in the
    coupled first-order system give (zeta_{j-1}, xi_{j-1}, zeta_{j+1},
    xi_{j+1}) from the values at x_j, with O(h) accuracy.
    """
    if x_j <= 0:
        raise ValueError("x_j must be positive")
    c, k, mc2 = params.c, params.kappa, params.rest_energy
    V = potential_value(potential, x_j)
    zeta_m = (1.0 + h_j * k / x_j) * zeta_j + (h_j / c) * (-mc2 + V - lam) * xi_j
    xi_m = (1.0 - h_j * k / x_j) * xi_j + (h_j / c) * (lam - mc2 - V) * zeta_j
    zeta_p = (1.0 - h_j1 * k / x_j) * zeta_j + (h_j1 / c) * (lam + mc2 - V) * xi_j
    xi_p = (1.0 + h_j1 * k / x_j) * xi_j + (h_j1 / c) * (mc2 + V - lam) * zeta_j
    return zeta_m, xi_m, zeta_p, xi_p


# --- stability-parameter verification ----------------------------------------

RHO = -9.0 / 70.0


def tau_rule_residual(h_j: float, h_j1: float, tau: float) -> float:
    """Defect of the leading-order optimality condition for tau.

    (1/4) * grad^2 * tau^2 - (81/4900) * h_{j+1}^2 with
    grad = (h_{j+1} + h_j)/(h_{j+1} - h_j); zero exactly at the
    (9/35) h_{j+1} / grad stabilization value.
    """
    if h_j1 == h_j:
        raise ValueError("requires h_{j+1} != h_j")
    grad = (h_j1 + h_j) / (h_j1 - h_j)
    return 0.25 * grad**2 * tau**2 - (81.0 / 4900.0) * h_j1**2


def tau_limit_lambda(h_j: float, h_j1: float, tau: float, c: float):
    """Positive root of the reduced limit pencil on one element pair.

    Builds the 2x2 determinant coefficients
      a = -((6c/5)/(h_{j+1} h_j) + (c^3/2) grad) tau + rho c^2
      b = (6c^2/5) tau/h_{j+1} - (9 c^3/70) h_{j+1}
      d = -(6/5) tau/h_{j+1}
    and returns sqrt((a^2 - b^2)/(rho^2 - d^2)), as a complex number when
    the radicand is negative (the approximation has left its validity
    range, which is how an unstabilized coarse element behaves at large c).
    """
    if h_j1 == h_j:
        raise ValueError("requires h_{j+1} != h_j")
    grad = (h_j1 + h_j) / (h_j1 - h_j)
    a = -((6.0 * c / 5.0) / (h_j1 * h_j) + 0.5 * c**3 * grad) * tau + RHO * c**2
    b = (6.0 * c**2 / 5.0) * tau / h_j1 - (9.0 * c**3 / 70.0) * h_j1
    d = -(6.0 / 5.0) * tau / h_j1
    denom = RHO**2 - d**2
    if abs(denom) < 1e-14 * RHO**2:
        raise DegeneratePencilError("rho^2 - d_j^2 vanishes: reduced pencil is degenerate")
    radicand = (a**2 - b**2) / denom
    if radicand >= 0.0:
        return float(np.sqrt(radicand))
    return complex(0.0, float(np.sqrt(-radicand)))


# --- convergence study --------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceStudy:
    scheme: str
    n_values: tuple[int, ...]
    errors: np.ndarray  # shape (len(n_values), levels); NaN where unmatched
    orders: np.ndarray  # per-level fitted order; NaN where not fittable

    def __post_init__(self):
        self.errors.setflags(write=False)
        self.orders.setflags(write=False)


def genuine_errors(classified: ClassifiedSpectrum, reference: list[ReferenceLevel]) -> np.ndarray:
    """Relative error per reference level (NaN where no genuine match)."""
    out = np.full(len(reference), np.nan)
    for e in classified.entries:
        if e.label is Label.GENUINE:
            idx = next(i for i, r in enumerate(reference) if r.n_r == e.reference.n_r)
            out[idx] = e.rel_error
    return out


def convergence_study(scheme: str, params: OperatorParams, potential: PotentialModel,
                      n_values, levels: int, *, a: float, b: float, gamma: float,
                      match_tol: float | None = None,
                      reality_tol: float = 1e-8,
                      free_lower_slope: bool = False) -> ConvergenceStudy:
    """Solve on a refinement sequence, classify, and fit per-level orders."""
    n_values = tuple(int(n) for n in n_values)
    if any(n2 <= n1 for n1, n2 in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly increasing")
    if match_tol is None:
        match_tol = match_tol_for(scheme)
    reference = reference_spectrum(params, levels)
    errors = np.full((len(n_values), levels), np.nan)
    for i, n in enumerate(n_values):
        mesh = build_exponential_mesh(a, b, n, gamma)
        system = assemble(scheme, params, mesh, potential, free_lower_slope=free_lower_slope)
        spectrum = solve(system, reality_tol=reality_tol)
        classified = classify(spectrum.bindings, reference, match_tol=match_tol)
        errors[i] = genuine_errors(classified, reference)
    orders = np.full(levels, np.nan)
    log_h = np.log(1.0 / (np.array(n_values, dtype=float) + 1.0))
    for lvl in range(levels):
        col = errors[:, lvl]
        ok = np.isfinite(col) & (col > 0)
        if ok.sum() >= 2:
            orders[lvl] = np.polyfit(log_h[ok], np.log(col[ok]), 1)[0]
    return ConvergenceStudy(scheme=scheme, n_values=n_values, errors=errors, orders=orders)
