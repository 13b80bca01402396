"""Element integrals and assembly of the three generalized eigensystems.

All block matrices have entries of the form

    integral over the domain of  (trial)^(s) * (test)^(r) * x^(-t) * q(x) dx

with q either 1 or the nuclear potential V, evaluated element by element
with the fixed 4-point Gauss rule. The stabilized scheme additionally
weights selected blocks by the per-element parameter tau.

Degree-of-freedom layout (boundary dofs eliminated):
  linear:   [f values at nodes 1..n | g values at nodes 1..n]
  Hermite:  [f values 1..n | f slopes 1..n | g values 1..n | g slopes 1..n]
With the free lower slope option the slope lists start at node 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import (
    BasisFamily,
    BasisKind,
    Mesh,
    hat_local,
    hermite_local,
    quadrature_for,
)
from .physics import OperatorParams, PotentialModel, potential_value

SCHEME_LINEAR = "linear-galerkin"
SCHEME_HERMITE = "hermite-galerkin"
SCHEME_SUPG = "hermite-supg"
SCHEMES = (SCHEME_LINEAR, SCHEME_HERMITE, SCHEME_SUPG)


@dataclass(frozen=True)
class BlockMatrixSpec:
    """Indices (r, s, t, q) identifying one block-matrix integrand.

    r and s are the derivative orders on the test and trial function, t the
    power of 1/x, and q selects the extra weight ("one" or "V").
    """

    r: int
    s: int
    t: int
    q: str = "one"

    def __post_init__(self):
        if self.r not in (0, 1) or self.s not in (0, 1) or self.t not in (0, 1):
            raise ValueError(f"r, s, t must be 0 or 1, got {(self.r, self.s, self.t)}")
        if self.q not in ("one", "V"):
            raise ValueError(f"q must be 'one' or 'V', got {self.q!r}")


@dataclass(frozen=True)
class StabilizationProfile:
    """Per-element stabilization parameter tau, length n+1.

    Element e (1-based) carries tau[e-1]; the first element, having no left
    neighbour, carries zero. Uniform neighbouring elements give tau = 0 and
    |tau| < h_e always (the 9/35 factor times a ratio below 1).
    """

    tau: np.ndarray

    def __post_init__(self):
        self.tau.setflags(write=False)


def compute_tau(mesh: Mesh) -> StabilizationProfile:
    """tau_j = (9/35) * h_{j+1} * (h_{j+1} - h_j) / (h_{j+1} + h_j) per element."""
    h = mesh.h
    tau = np.zeros(mesh.element_count)
    tau[1:] = (9.0 / 35.0) * h[1:] * (h[1:] - h[:-1]) / (h[1:] + h[:-1])
    return StabilizationProfile(tau=tau)


@dataclass(frozen=True)
class AssembledSystem:
    """One generalized eigenproblem lhs*X = lambda*rhs*X with its provenance."""

    scheme: str
    lhs: np.ndarray
    rhs: np.ndarray
    dof_blocks: tuple[tuple[str, int], ...]
    params: OperatorParams
    mesh: Mesh
    potential: PotentialModel
    tau: StabilizationProfile | None = None

    def __post_init__(self):
        self.lhs.setflags(write=False)
        self.rhs.setflags(write=False)

    @property
    def size(self) -> int:
        return self.lhs.shape[0]

    @property
    def dof_layout(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.dof_blocks)

    def block_slice(self, name: str) -> slice:
        start = 0
        for label, width in self.dof_blocks:
            if label == name:
                return slice(start, start + width)
            start += width
        raise KeyError(name)


def dump_matrix(matrix: np.ndarray, path) -> None:
    """Write (row, col, value) triplets of the nonzero entries, for external checks."""
    with open(path, "w") as fh:
        rows, cols = np.nonzero(matrix)
        for i, j in zip(rows, cols):
            fh.write(f"{i} {j} {float(matrix[i, j])!r}\n")


# --- dof maps ---------------------------------------------------------------


def _value_dof(n: int, node: int) -> int:
    return node - 1 if 1 <= node <= n else -1


def _slope_dof(n: int, node: int, free_lower: bool) -> int:
    if free_lower:
        return node if 0 <= node <= n else -1
    return node - 1 if 1 <= node <= n else -1


def _hermite_layout(n: int, free_lower: bool) -> tuple[int, int]:
    """(value dof count, slope dof count) of one spinor component."""
    return n, n + 1 if free_lower else n


# --- element-loop block assembly --------------------------------------------


def _weight_at(spec: BlockMatrixSpec, potential: PotentialModel, x: np.ndarray) -> np.ndarray:
    w = np.ones_like(x)
    if spec.t:
        w = w / x
    if spec.q == "V":
        w = w * potential_value(potential, x)
    return w


def _assemble_block(spec: BlockMatrixSpec, basis: BasisFamily, potential: PotentialModel,
                    tau: StabilizationProfile | None = None,
                    free_lower_slope: bool = False) -> np.ndarray:
    """Dense block matrix over the active dofs of one spinor component."""
    mesh = basis.mesh
    n = mesh.interior_count
    hermite = basis.kind is BasisKind.CUBIC_HERMITE
    if hermite:
        nv, ns = _hermite_layout(n, free_lower_slope)
        size = nv + ns
    else:
        size = n
    out = np.zeros((size, size))
    for e in range(1, mesh.element_count + 1):
        rule = quadrature_for(mesh, e)
        xq = rule.points
        w = rule.weights * _weight_at(spec, potential, xq)
        if tau is not None:
            w = w * tau.tau[e - 1]
        h = mesh.h[e - 1]
        s = xq - mesh.nodes[e - 1]
        if hermite:
            test = np.stack(hermite_local(h, s, spec.r))
            trial = np.stack(hermite_local(h, s, spec.s))
            vl, vr = _value_dof(n, e - 1), _value_dof(n, e)
            sl = _slope_dof(n, e - 1, free_lower_slope)
            sr = _slope_dof(n, e, free_lower_slope)
            dofs = [vl, nv + sl if sl >= 0 else -1, vr, nv + sr if sr >= 0 else -1]
        else:
            test = np.stack(hat_local(h, s, spec.r))
            trial = np.stack(hat_local(h, s, spec.s))
            dofs = [_value_dof(n, e - 1), _value_dof(n, e)]
        local = np.einsum("q,aq,bq->ab", w, test, trial)
        for a, da in enumerate(dofs):
            if da < 0:
                continue
            for b, db in enumerate(dofs):
                if db >= 0:
                    out[da, db] += local[a, b]
    return out


def element_integral(spec: BlockMatrixSpec, basis: BasisFamily, potential: PotentialModel,
                     test_dof: int, trial_dof: int) -> float:
    """Single block-matrix entry; 0 without quadrature when supports are disjoint.

    Dof indices follow the component layout: 0..n-1 are nodal values at
    interior nodes 1..n and, for Hermite, n..2n-1 the nodal slopes.
    """
    mesh = basis.mesh
    n = mesh.interior_count
    hermite = basis.kind is BasisKind.CUBIC_HERMITE
    for dof in (test_dof, trial_dof):
        if not (0 <= dof < basis.dof_count):
            raise IndexError(f"dof index {dof} out of range 0..{basis.dof_count - 1}")

    def node_part(dof):
        if hermite and dof >= n:
            return dof - n + 1, 3  # slope piece index in hermite_local order
        return dof + 1, 2

    t_node, t_sel = node_part(test_dof)
    s_node, s_sel = node_part(trial_dof)
    if abs(t_node - s_node) >= 2:
        return 0.0
    elements = {e for e in (t_node, t_node + 1) if 1 <= e <= mesh.element_count}
    elements &= {e for e in (s_node, s_node + 1) if 1 <= e <= mesh.element_count}
    total = 0.0
    for e in sorted(elements):
        rule = quadrature_for(mesh, e)
        xq = rule.points
        w = rule.weights * _weight_at(spec, potential, xq)
        h = mesh.h[e - 1]
        s = xq - mesh.nodes[e - 1]
        if hermite:
            test = hermite_local(h, s, spec.r)[t_sel if e == t_node else t_sel - 2]
            trial = hermite_local(h, s, spec.s)[s_sel if e == s_node else s_sel - 2]
        else:
            test = hat_local(h, s, spec.r)[1 if e == t_node else 0]
            trial = hat_local(h, s, spec.s)[1 if e == s_node else 0]
        total += float(np.dot(w, test * trial))
    return total


# --- closed-form element integrals (assembly oracle) ------------------------


def closed_form_element_entries(mesh: Mesh, j: int) -> dict[str, np.ndarray]:
    """Exact rows j (values) and j+n (slopes) of the four polynomial blocks.

    Returns, per matrix, a (2, 6) array over the columns
    (j-1, j, j+1, j-1+n, j+n, j+1+n). The integrands are polynomial, so
    these are the exact integrals the 4-point rule must reproduce.
    """
    if not (1 <= j <= mesh.interior_count):
        raise IndexError(f"node index {j} out of range 1..{mesh.interior_count}")
    hj = mesh.h[j - 1]
    hj1 = mesh.h[j]
    mm000 = np.array([
        [9 / 70 * hj, 13 / 35 * (hj + hj1), 9 / 70 * hj1,
         13 / 420 * hj**2, 11 / 210 * (hj1**2 - hj**2), -13 / 420 * hj1**2],
        [-13 / 420 * hj**2, 11 / 210 * (hj1**2 - hj**2), 13 / 420 * hj1**2,
         -1 / 140 * hj**3, 1 / 105 * (hj**3 + hj1**3), -1 / 140 * hj1**3],
    ])
    mm100 = np.array([
        [0.5, 0.0, -0.5, hj / 10, -(hj + hj1) / 10, hj1 / 10],
        [-hj / 10, (hj + hj1) / 10, -hj1 / 10, -hj**2 / 60, 0.0, hj1**2 / 60],
    ])
    mm110 = np.array([
        [-6 / 5 / hj, 6 / 5 * (hj + hj1) / (hj * hj1), -6 / 5 / hj1, -0.1, 0.0, 0.1],
        [0.1, 0.0, -0.1, -hj / 30, 2 / 15 * (hj + hj1), -hj1 / 30],
    ])
    mm010 = -mm100  # transpose pair: same rows with opposite sign
    return {"MM000": mm000, "MM100": mm100, "MM010": mm010, "MM110": mm110}


# --- scheme assembly ---------------------------------------------------------


def _two_by_two(a11, a12, a21, a22) -> np.ndarray:
    return np.block([[a11, a12], [a21, a22]])


def assemble_linear_galerkin(params: OperatorParams, mesh: Mesh,
                             potential: PotentialModel) -> AssembledSystem:
    """Standard Galerkin system with hat functions; symmetric 2n x 2n pencil."""
    basis = BasisFamily(kind=BasisKind.LINEAR_HAT, mesh=mesh)
    m000 = _assemble_block(BlockMatrixSpec(0, 0, 0), basis, potential)
    m010 = _assemble_block(BlockMatrixSpec(0, 1, 0), basis, potential)
    m001 = _assemble_block(BlockMatrixSpec(0, 0, 1), basis, potential)
    mv = _assemble_block(BlockMatrixSpec(0, 0, 0, "V"), basis, potential)
    c, k, mc2 = params.c, params.kappa, params.rest_energy
    lhs = _two_by_two(mc2 * m000 + mv, -c * m010 + c * k * m001,
                      c * m010 + c * k * m001, -mc2 * m000 + mv)
    rhs = _two_by_two(m000, np.zeros_like(m000), np.zeros_like(m000), m000)
    n = mesh.interior_count
    return AssembledSystem(scheme=SCHEME_LINEAR, lhs=lhs, rhs=rhs,
                           dof_blocks=(("zeta", n), ("xi", n)),
                           params=params, mesh=mesh, potential=potential)


def _hermite_blocks(params, mesh, potential, free_lower_slope):
    basis = BasisFamily(kind=BasisKind.CUBIC_HERMITE, mesh=mesh)
    kw = dict(free_lower_slope=free_lower_slope)
    return basis, {
        "000": _assemble_block(BlockMatrixSpec(0, 0, 0), basis, potential, **kw),
        "010": _assemble_block(BlockMatrixSpec(0, 1, 0), basis, potential, **kw),
        "001": _assemble_block(BlockMatrixSpec(0, 0, 1), basis, potential, **kw),
        "V000": _assemble_block(BlockMatrixSpec(0, 0, 0, "V"), basis, potential, **kw),
    }


def _hermite_dof_blocks(n: int, free_lower_slope: bool):
    nv, ns = _hermite_layout(n, free_lower_slope)
    return (("zeta", nv), ("zeta_prime", ns), ("xi", nv), ("xi_prime", ns))


def assemble_hermite_galerkin(params: OperatorParams, mesh: Mesh,
                              potential: PotentialModel,
                              free_lower_slope: bool = False) -> AssembledSystem:
    """Galerkin system in the C1 cubic Hermite space; symmetric 4n x 4n pencil.

    Boundary conditions eliminate value and slope dofs at both endpoints;
    ``free_lower_slope`` keeps the slope dof at the lower endpoint instead
    (the physically correct choice for |kappa| = 1).
    """
    _, mm = _hermite_blocks(params, mesh, potential, free_lower_slope)
    c, k, mc2 = params.c, params.kappa, params.rest_energy
    lhs = _two_by_two(mc2 * mm["000"] + mm["V000"], -c * mm["010"] + c * k * mm["001"],
                      c * mm["010"] + c * k * mm["001"], -mc2 * mm["000"] + mm["V000"])
    zero = np.zeros_like(mm["000"])
    rhs = _two_by_two(mm["000"], zero, zero, mm["000"])
    return AssembledSystem(scheme=SCHEME_HERMITE, lhs=lhs, rhs=rhs,
                           dof_blocks=_hermite_dof_blocks(mesh.interior_count, free_lower_slope),
                           params=params, mesh=mesh, potential=potential)


def assemble_supg(params: OperatorParams, mesh: Mesh, potential: PotentialModel,
                  tau: StabilizationProfile | None = None,
                  free_lower_slope: bool = False) -> AssembledSystem:
    """Petrov-Galerkin system with test functions augmented by tau * v'.

    The Galerkin blocks are perturbed by tau-weighted residual couplings;
    with tau identically zero the system coincides with the Hermite
    Galerkin one entrywise.
    """
    if tau is None:
        tau = compute_tau(mesh)
    if len(tau.tau) != mesh.element_count:
        raise ValueError("stabilization profile length does not match the mesh")
    basis, mm = _hermite_blocks(params, mesh, potential, free_lower_slope)
    kw = dict(tau=tau, free_lower_slope=free_lower_slope)
    t110 = _assemble_block(BlockMatrixSpec(1, 1, 0), basis, potential, **kw)
    t101 = _assemble_block(BlockMatrixSpec(1, 0, 1), basis, potential, **kw)
    t100 = _assemble_block(BlockMatrixSpec(1, 0, 0), basis, potential, **kw)
    tv100 = _assemble_block(BlockMatrixSpec(1, 0, 0, "V"), basis, potential, **kw)
    c, k, mc2 = params.c, params.kappa, params.rest_energy
    lhs = _two_by_two(
        mc2 * mm["000"] + mm["V000"] + c * t110 + c * k * t101,
        -c * mm["010"] + c * k * mm["001"] - mc2 * t100 + tv100,
        c * mm["010"] + c * k * mm["001"] + mc2 * t100 + tv100,
        -mc2 * mm["000"] + mm["V000"] - c * t110 + c * k * t101,
    )
    rhs = _two_by_two(mm["000"], t100, t100, mm["000"])
    return AssembledSystem(scheme=SCHEME_SUPG, lhs=lhs, rhs=rhs,
                           dof_blocks=_hermite_dof_blocks(mesh.interior_count, free_lower_slope),
                           params=params, mesh=mesh, potential=potential, tau=tau)


def assemble(scheme: str, params: OperatorParams, mesh: Mesh, potential: PotentialModel,
             free_lower_slope: bool = False) -> AssembledSystem:
    """Dispatch on the scheme name (see SCHEMES)."""
    if scheme == SCHEME_LINEAR:
        return assemble_linear_galerkin(params, mesh, potential)
    if scheme == SCHEME_HERMITE:
        return assemble_hermite_galerkin(params, mesh, potential, free_lower_slope)
    if scheme == SCHEME_SUPG:
        return assemble_supg(params, mesh, potential, free_lower_slope=free_lower_slope)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
