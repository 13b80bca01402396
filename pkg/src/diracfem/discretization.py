"""One-dimensional discretization layer.

Provides the exponentially graded mesh, the continuous piecewise-linear
(hat) and cubic Hermite basis families with their derivatives, and the
fixed 4-point Gauss-Legendre quadrature used for all element integrals.

All types are immutable after construction and all evaluations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import PhysicsError

# 4-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree <= 7.
_GAUSS_POINTS, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(4)


class BasisKind(Enum):
    LINEAR_HAT = "linear-hat"
    CUBIC_HERMITE = "cubic-hermite"


@dataclass(frozen=True)
class Mesh:
    """Partition a = x_0 < x_1 < ... < x_{n+1} = b of the radial domain.

    Attributes
    ----------
    a, b : float
        Domain endpoints (atomic units), 0 < a < b.
    interior_count : int
        Number n of interior nodes.
    gamma : float
        Exponential grading strength (larger clusters nodes near a).
    nodes : ndarray, shape (n+2,)
        All nodes including both endpoints.
    """

    a: float
    b: float
    interior_count: int
    gamma: float
    nodes: np.ndarray

    def __post_init__(self):
        self.nodes.setflags(write=False)

    @property
    def h(self) -> np.ndarray:
        """Element sizes, ``h[e-1] = x_e - x_{e-1}`` for elements e = 1..n+1."""
        return np.diff(self.nodes)

    @property
    def element_count(self) -> int:
        return self.interior_count + 1


def build_exponential_mesh(a: float, b: float, n: int, gamma: float) -> Mesh:
    """Mesh with interior nodes clustered exponentially toward the lower endpoint.

    Node formula: ``x_i = a + (b - a) * (exp(gamma*i/(n+1)) - 1) / (exp(gamma) - 1)``
    for i = 0..n+1, so the endpoints are hit exactly and element sizes grow
    monotonically away from a.
    """
    if not (0.0 < a < b):
        raise PhysicsError(f"invalid domain: need 0 < a < b, got a={a}, b={b}")
    if n < 1:
        raise PhysicsError(f"invalid interior node count: need n >= 1, got {n}")
    if gamma <= 0.0:
        raise PhysicsError(f"invalid mesh grading: need gamma > 0, got {gamma}")
    i = np.arange(n + 2, dtype=float)
    nodes = a + (b - a) * np.expm1(gamma * i / (n + 1)) / np.expm1(gamma)
    nodes[0] = a
    nodes[-1] = b
    return Mesh(a=a, b=b, interior_count=n, gamma=gamma, nodes=nodes)


@dataclass(frozen=True)
class BasisFamily:
    """A nodal basis family over a mesh.

    Linear hats carry one degree of freedom per interior node; cubic Hermite
    carries two (function value and first derivative). Every basis function
    is supported on at most the two elements adjacent to its node.
    """

    kind: BasisKind
    mesh: Mesh

    @property
    def dof_count(self) -> int:
        n = self.mesh.interior_count
        return n if self.kind is BasisKind.LINEAR_HAT else 2 * n


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre points and weights mapped onto one element."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.points)))


def quadrature_for(mesh: Mesh, element: int) -> QuadratureRule:
    """4-point rule on element ``[x_{element-1}, x_element]`` (1-based index)."""
    if not (1 <= element <= mesh.element_count):
        raise IndexError(f"element index {element} out of range 1..{mesh.element_count}")
    xl = mesh.nodes[element - 1]
    xr = mesh.nodes[element]
    mid, half = 0.5 * (xl + xr), 0.5 * (xr - xl)
    return QuadratureRule(points=mid + half * _GAUSS_POINTS, weights=half * _GAUSS_WEIGHTS)


# --- element-local shape functions ----------------------------------------
#
# On an element of size h with local coordinate s in [0, h] measured from the
# left node, the nonzero basis pieces are, in local order:
#   hats:     (left hat, right hat)
#   Hermite:  (left value, left slope, right value, right slope)
# The Hermite pieces match the per-node formulas used throughout: the "left"
# pair is the right-element branch of the functions at node x_{e-1}, the
# "right" pair the left-element branch at node x_e.


def hat_local(h: float, s, order: int):
    """Hat-function pieces on one element; returns (left, right) arrays."""
    s = np.asarray(s, dtype=float)
    if order == 0:
        return 1.0 - s / h, s / h
    if order == 1:
        shape = np.broadcast(s).shape
        return np.full(shape, -1.0 / h), np.full(shape, 1.0 / h)
    raise ValueError(f"unsupported derivative order {order} for linear hats")


def hermite_local(h: float, s, order: int):
    """Cubic Hermite pieces on one element.

    Returns (left value, left slope, right value, right slope) evaluated at
    local offsets s from the left node; ``order`` in {0, 1, 2}.
    """
    s = np.asarray(s, dtype=float)
    if order == 0:
        lv = 1.0 - s**2 / h**2 + 2.0 * s**2 * (s - h) / h**3
        ls = s - s**2 / h + s**2 * (s - h) / h**2
        rv = s**2 / h**2 - 2.0 * s**2 * (s - h) / h**3
        rs = s**2 * (s - h) / h**2
    elif order == 1:
        lv = -2.0 * s / h**2 + (6.0 * s**2 - 4.0 * h * s) / h**3
        ls = 1.0 - 2.0 * s / h + (3.0 * s**2 - 2.0 * h * s) / h**2
        rv = 2.0 * s / h**2 - (6.0 * s**2 - 4.0 * h * s) / h**3
        rs = (3.0 * s**2 - 2.0 * h * s) / h**2
    elif order == 2:
        lv = -2.0 / h**2 + (12.0 * s - 4.0 * h) / h**3
        ls = -2.0 / h + (6.0 * s - 2.0 * h) / h**2
        rv = 2.0 / h**2 - (12.0 * s - 4.0 * h) / h**3
        rs = (6.0 * s - 2.0 * h) / h**2
    else:
        raise ValueError(f"unsupported derivative order {order} for cubic Hermite")
    return lv, ls, rv, rs


def _node_branches(mesh: Mesh, j: int, x):
    """Masks selecting the two support elements of node j.

    Points exactly on a node belong to the element on their left, so values
    at x_j come from I_j and at x_{j+1} from I_{j+1}; everything outside
    [x_{j-1}, x_{j+1}] evaluates to exactly zero.
    """
    nodes = mesh.nodes
    x = np.asarray(x, dtype=float)
    left = (x > nodes[j - 1]) & (x <= nodes[j]) if j >= 1 else np.zeros(x.shape, bool)
    if j + 1 <= mesh.interior_count + 1:
        right = (x > nodes[j]) & (x <= nodes[j + 1])
    else:
        right = np.zeros(x.shape, bool)
    return x, left, right


def eval_hat(basis: BasisFamily, j: int, x, order: int = 0):
    """Evaluate hat function j (interior node index, 1..n) or its derivative."""
    if basis.kind is not BasisKind.LINEAR_HAT:
        raise ValueError("eval_hat requires a LINEAR_HAT basis")
    if order not in (0, 1):
        raise ValueError(f"unsupported derivative order {order} for linear hats")
    _check_node(basis.mesh, j)
    x, left, right = _node_branches(basis.mesh, j, x)
    nodes, h = basis.mesh.nodes, basis.mesh.h
    out = np.zeros(x.shape, dtype=float)
    if left.any():
        out[left] = hat_local(h[j - 1], x[left] - nodes[j - 1], order)[1]
    if right.any():
        out[right] = hat_local(h[j], x[right] - nodes[j], order)[0]
    return out if out.shape else float(out)


def eval_hermite(basis: BasisFamily, j: int, part: str, x, order: int = 0):
    """Evaluate Hermite function of node j or its first derivative.

    ``part`` selects the value-interpolating ("value") or the
    slope-interpolating ("slope") member of the pair at node j.
    """
    if basis.kind is not BasisKind.CUBIC_HERMITE:
        raise ValueError("eval_hermite requires a CUBIC_HERMITE basis")
    if order not in (0, 1):
        raise ValueError(f"unsupported derivative order {order} for eval_hermite")
    if part not in ("value", "slope"):
        raise ValueError(f"part must be 'value' or 'slope', got {part!r}")
    _check_node(basis.mesh, j, allow_boundary=True)
    x, left, right = _node_branches(basis.mesh, j, x)
    nodes, h = basis.mesh.nodes, basis.mesh.h
    sel = 2 if part == "value" else 3  # right-node pieces of the left element
    out = np.zeros(x.shape, dtype=float)
    if left.any():
        out[left] = hermite_local(h[j - 1], x[left] - nodes[j - 1], order)[sel]
    if right.any():
        out[right] = hermite_local(h[j], x[right] - nodes[j], order)[sel - 2]
    return out if out.shape else float(out)


def _check_node(mesh: Mesh, j: int, allow_boundary: bool = False):
    lo, hi = (0, mesh.interior_count + 1) if allow_boundary else (1, mesh.interior_count)
    if not (lo <= j <= hi):
        raise IndexError(f"node index {j} out of range {lo}..{hi}")


# --- Hermite interpolation diagnostics -------------------------------------


def hermite_interpolate(mesh: Mesh, values, slopes, x, order: int = 0):
    """Evaluate the Hermite interpolant with given nodal values and slopes.

    ``values`` and ``slopes`` cover all nodes 0..n+1; supports order 0..2
    (the interpolant is piecewise cubic, so the second derivative exists
    inside every element).
    """
    values = np.asarray(values, dtype=float)
    slopes = np.asarray(slopes, dtype=float)
    x = np.asarray(x, dtype=float)
    nodes, h = mesh.nodes, mesh.h
    e = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, mesh.element_count - 1)
    s = x - nodes[e]
    out = np.zeros(x.shape, dtype=float)
    for k in np.unique(e):
        m = e == k
        lv, ls, rv, rs = hermite_local(h[k], s[m], order)
        out[m] = values[k] * lv + slopes[k] * ls + values[k + 1] * rv + slopes[k + 1] * rs
    return out if out.shape else float(out)


def hermite_interpolation_max_error(f, df, a: float, b: float, n_elements: int,
                                    samples_per_element: int = 24) -> float:
    """Max-norm error of the Hermite interpolant of f on a uniform mesh."""
    nodes = np.linspace(a, b, n_elements + 1)
    mesh = Mesh(a=a, b=b, interior_count=n_elements - 1, gamma=0.0, nodes=nodes)
    values = np.array([f(x) for x in nodes])
    slopes = np.array([df(x) for x in nodes])
    t = np.linspace(0.0, 1.0, samples_per_element, endpoint=False)[1:]
    xs = (nodes[:-1, None] + np.diff(nodes)[:, None] * t[None, :]).ravel()
    exact = np.array([f(x) for x in xs])
    return float(np.max(np.abs(hermite_interpolate(mesh, values, slopes, xs) - exact)))


def hermite_interpolation_error_order(f, df, a: float, b: float, mesh_sizes) -> float:
    """Observed convergence order of the max-norm Hermite interpolation error.

    Fits the slope of log(error) against log(h) over uniform meshes with the
    given target element sizes. Functions reproduced exactly (degree <= 3)
    yield errors at rounding level; the fit then returns ``inf``.
    """
    mesh_sizes = list(mesh_sizes)
    if len(mesh_sizes) < 3:
        raise ValueError("degenerate fit: need at least 3 mesh sizes")
    hs, errs = [], []
    for h in mesh_sizes:
        n_elem = max(1, round((b - a) / h))
        hs.append((b - a) / n_elem)
        errs.append(hermite_interpolation_max_error(f, df, a, b, n_elem))
    hs, errs = np.array(hs), np.array(errs)
    if np.all(errs < 1e-14):
        return float("inf")
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
