"""Operator parameters, nuclear potentials, and the exact reference spectrum.

All energies are in Hartree atomic units. Bound states are reported as
binding energies (eigenvalue minus the rest energy m*c^2), which is the
quantity the solver and classifier work with throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import PhysicsError

#: Speed of light in atomic units (CODATA 2010 inverse fine-structure constant).
#: Chosen because it reproduces the tabulated point-nucleus reference energies
#: for Z = 1 and Z = 12 to the last printed digit; overridable everywhere.
SPEED_OF_LIGHT = 137.035999074


@dataclass(frozen=True)
class OperatorParams:
    """Physical constants and quantum numbers of the radial operator."""

    Z: float
    kappa: int
    m: float = 1.0
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.kappa == 0:
            raise PhysicsError("kappa must be a nonzero integer")
        if self.Z < 1:
            raise PhysicsError(f"nuclear charge must satisfy Z >= 1, got {self.Z}")
        if self.Z >= self.c * abs(self.kappa):
            raise PhysicsError(
                f"supercritical charge: Z={self.Z} >= c*|kappa|={self.c * abs(self.kappa)}"
            )
        if self.m <= 0 or self.c <= 0:
            raise PhysicsError("mass and speed of light must be positive")

    @property
    def rest_energy(self) -> float:
        return self.m * self.c**2


class NucleusKind(Enum):
    POINT = "point"
    EXTENDED_UNIFORM = "extended"


@dataclass(frozen=True)
class PotentialModel:
    """Coulomb potential of a point charge or a uniformly charged sphere."""

    kind: NucleusKind
    Z: float
    R: float | None = None

    def __post_init__(self):
        if self.kind is NucleusKind.EXTENDED_UNIFORM:
            if self.R is None or self.R <= 0:
                raise PhysicsError("extended nucleus requires a positive radius R")


def point_nucleus(Z: float) -> PotentialModel:
    return PotentialModel(kind=NucleusKind.POINT, Z=Z)


def extended_nucleus(Z: float, R: float) -> PotentialModel:
    return PotentialModel(kind=NucleusKind.EXTENDED_UNIFORM, Z=Z, R=R)


def potential_value(model: PotentialModel, x):
    """V(x): -Z/x outside the nucleus, parabolic inside for the extended kind."""
    x = np.asarray(x, dtype=float)
    if model.kind is NucleusKind.POINT:
        if np.any(x <= 0.0):
            raise PhysicsError("point-nucleus potential is singular at x <= 0")
        out = -model.Z / x
    else:
        if np.any(x < 0.0):
            raise PhysicsError("potential requires x >= 0")
        R = model.R
        inside = -(model.Z / (2.0 * R)) * (3.0 - x**2 / R**2)
        with np.errstate(divide="ignore"):
            outside = np.where(x > 0, -model.Z / np.where(x > 0, x, 1.0), 0.0)
        out = np.where(x < R, inside, outside)
    return out if out.shape else float(out)


def potential_derivative(model: PotentialModel, x):
    """V'(x), needed by the second-order-form coefficients."""
    x = np.asarray(x, dtype=float)
    if model.kind is NucleusKind.POINT:
        if np.any(x <= 0.0):
            raise PhysicsError("point-nucleus potential is singular at x <= 0")
        out = model.Z / x**2
    else:
        if np.any(x < 0.0):
            raise PhysicsError("potential requires x >= 0")
        R = model.R
        with np.errstate(divide="ignore"):
            outside = np.where(x > 0, model.Z / np.where(x > 0, x, 1.0) ** 2, 0.0)
        out = np.where(x < R, model.Z * x / R**3, outside)
    return out if out.shape else float(out)


def potential_w(params: OperatorParams, model: PotentialModel, sign: int, x):
    """w_plusminus(x) = sign * m*c^2 + V(x) with sign = +1 or -1."""
    if sign not in (+1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    return sign * params.rest_energy + potential_value(model, x)


@dataclass(frozen=True)
class ReferenceLevel:
    """One exact point-nucleus bound level identified by (kappa, n_r)."""

    kappa: int
    n_r: int
    binding: float


def reference_binding(params: OperatorParams, n_r: int) -> ReferenceLevel:
    """Exact point-nucleus binding energy for radial quantum number n_r.

    binding = m*c^2 * [ (1 + (Z/c)^2 / (n_r + sqrt(kappa^2 - (Z/c)^2))^2)^(-1/2) - 1 ]

    The kappa > 0 series has no n_r = 0 member; requesting it is the
    unphysical state behind the coincidence phenomenon and is rejected.
    """
    if params.kappa > 0 and n_r < 1:
        raise PhysicsError(f"n_r must be >= 1 for kappa > 0, got n_r={n_r}")
    if params.kappa < 0 and n_r < 0:
        raise PhysicsError(f"n_r must be >= 0, got n_r={n_r}")
    zc = params.Z / params.c
    gamma = math.sqrt(params.kappa**2 - zc**2)
    # expm1/log1p form of mc^2 [(1 + u)^(-1/2) - 1]: immune to the large-c
    # cancellation between the eigenvalue and the rest energy
    u = (zc / (n_r + gamma)) ** 2
    binding = params.rest_energy * math.expm1(-0.5 * math.log1p(u))
    return ReferenceLevel(kappa=params.kappa, n_r=n_r, binding=binding)


def reference_spectrum(params: OperatorParams, count: int) -> list[ReferenceLevel]:
    """First ``count`` bound levels of the kappa series, deepest first."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    start = 0 if params.kappa < 0 else 1
    return [reference_binding(params, n_r) for n_r in range(start, start + count)]


def accumulation_point(params: OperatorParams) -> float:
    """Sole accumulation point of the eigenvalues: the rest energy m*c^2."""
    return params.rest_energy
