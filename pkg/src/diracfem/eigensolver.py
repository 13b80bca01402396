"""Dense solution of the generalized eigenproblem and bound-branch extraction.

The pencil is solved in shifted form (lhs - m*c^2*rhs, rhs): working with
binding energies mu = lambda - m*c^2 directly avoids losing ~9 digits of the
bound-state energies to cancellation against the rest energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import SCHEME_SUPG, AssembledSystem
from .errors import (
    ComplexSpectrumError,
    InsufficientLevelsError,
    SingularSystemError,
)
from .physics import OperatorParams

#: Default relative bound on acceptable imaginary parts of SUPG eigenvalues.
DEFAULT_REALITY_TOL = 1e-8


@dataclass(frozen=True)
class Spectrum:
    """All finite eigenvalues of one solve plus the bound-state branch.

    ``bindings`` holds mu = lambda - m*c^2 restricted to the bound window
    (-2mc^2, 0), ascending (deepest level first); ``raw`` holds every finite
    eigenvalue lambda. Eigenvectors are kept for the bound branch only,
    rhs-normalized with the largest f-value coefficient made positive.
    """

    scheme: str
    bindings: np.ndarray
    raw: np.ndarray
    max_imag: float
    params: OperatorParams
    dof_blocks: tuple[tuple[str, int], ...]
    eigenvectors: np.ndarray | None = None

    def __post_init__(self):
        self.bindings.setflags(write=False)
        self.raw.setflags(write=False)
        if self.eigenvectors is not None:
            self.eigenvectors.setflags(write=False)


def _fix_vector_signs(vectors: np.ndarray, rhs: np.ndarray, zeta_width: int) -> np.ndarray:
    """rhs-normalize columns and make the largest-|f value| entry positive."""
    out = np.array(vectors, dtype=float)
    for k in range(out.shape[1]):
        v = out[:, k]
        norm = float(v @ rhs @ v)
        v /= np.sqrt(abs(norm))
        lead = np.argmax(np.abs(v[:zeta_width]))
        if v[lead] < 0:
            v *= -1.0
    return out


def solve(system: AssembledSystem, reality_tol: float = DEFAULT_REALITY_TOL,
          window: tuple[float, float] | None = None) -> Spectrum:
    """Solve lhs*X = lambda*rhs*X and return the spectrum in binding form.

    Galerkin pencils are solved with the symmetric-definite driver and are
    real by construction. The stabilized (nonsymmetric) pencil is solved
    with the general QZ routine; any finite eigenvalue whose imaginary part
    exceeds ``reality_tol`` relative to its magnitude aborts the solve.

    ``window`` optionally restricts a symmetric solve to bindings inside
    (lo, hi); the windowed result must agree with the full solve.
    """
    mc2 = system.params.rest_energy
    shifted = system.lhs - mc2 * system.rhs
    zeta_width = dict(system.dof_blocks)["zeta"]

    if system.scheme == SCHEME_SUPG:
        if window is not None:
            raise ValueError("windowed solve is only available for symmetric schemes")
        mu, vecs = scipy.linalg.eig(shifted, system.rhs, right=True)
        finite = np.isfinite(mu)
        if not finite.any():
            raise SingularSystemError("no finite eigenvalues: rhs numerically singular")
        mu, vecs = mu[finite], vecs[:, finite]
        lam = mu + mc2
        max_imag = float(np.max(np.abs(lam.imag)))
        bad = np.abs(lam.imag) > reality_tol * np.abs(lam)
        if bad.any():
            worst = lam[np.argmax(np.abs(lam.imag) / np.maximum(np.abs(lam), 1e-300))]
            raise ComplexSpectrumError(
                f"{bad.sum()} eigenvalue(s) violate reality tolerance {reality_tol}"
                f" (worst: {worst})"
            )
        order = np.argsort(mu.real)
        mu, vecs = mu.real[order], vecs[:, order]
        # strip the residual complex phase before normalizing
        bound = (mu > -2.0 * mc2) & (mu < 0.0)
        bvecs = vecs[:, bound]
        real_vecs = np.empty(bvecs.shape, dtype=float)
        for k in range(bvecs.shape[1]):
            col = bvecs[:, k]
            phase = col[np.argmax(np.abs(col))]
            real_vecs[:, k] = (col * np.conj(phase / abs(phase))).real
        vectors = _fix_vector_signs(real_vecs, system.rhs, zeta_width)
    else:
        try:
            if window is None:
                mu, vecs = scipy.linalg.eigh(shifted, system.rhs)
            else:
                mu, vecs = scipy.linalg.eigh(shifted, system.rhs,
                                             subset_by_value=window, driver="gvx")
        except scipy.linalg.LinAlgError as exc:
            raise SingularSystemError(f"symmetric-definite solve failed: {exc}") from exc
        max_imag = 0.0
        bound = (mu > -2.0 * mc2) & (mu < 0.0)
        vectors = _fix_vector_signs(vecs[:, bound], system.rhs, zeta_width)

    return Spectrum(scheme=system.scheme, bindings=mu[bound], raw=mu + mc2,
                    max_imag=max_imag, params=system.params,
                    dof_blocks=system.dof_blocks, eigenvectors=vectors)


def bound_states(spectrum: Spectrum, params: OperatorParams, count: int) -> np.ndarray:
    """First ``count`` bound bindings (lambda in (-mc^2, mc^2), deepest first)."""
    mc2 = params.rest_energy
    mu = spectrum.raw - mc2
    bindings = np.sort(mu[(mu > -2.0 * mc2) & (mu < 0.0)])
    if len(bindings) < count:
        raise InsufficientLevelsError(
            f"requested {count} bound states but only {len(bindings)} found"
        )
    return bindings[:count]


def component_coefficients(spectrum: Spectrum, index: int, component: str):
    """Nodal (values, slopes) of spinor component 'f' or 'g' for bound state ``index``.

    For the linear scheme the slope array is None.
    """
    if spectrum.eigenvectors is None:
        raise ValueError("spectrum carries no eigenvectors")
    vec = spectrum.eigenvectors[:, index]
    blocks = {}
    start = 0
    for name, width in spectrum.dof_blocks:
        blocks[name] = vec[start:start + width]
        start += width
    if component == "f":
        return blocks["zeta"], blocks.get("zeta_prime")
    if component == "g":
        return blocks["xi"], blocks.get("xi_prime")
    raise ValueError(f"component must be 'f' or 'g', got {component!r}")


def eigenpair_residual(system: AssembledSystem, binding: float, vector: np.ndarray) -> float:
    """Relative residual of one eigenpair against the assembled pencil."""
    mc2 = system.params.rest_energy
    lam = binding + mc2
    r = (system.lhs - mc2 * system.rhs) @ vector - binding * (system.rhs @ vector)
    scale = (np.linalg.norm(system.lhs) + abs(lam) * np.linalg.norm(system.rhs))
    return float(np.linalg.norm(r) / (scale * np.linalg.norm(vector)))
