import numpy as np
import pytest

from diracfem.assembly import (
    SCHEME_HERMITE,
    SCHEME_LINEAR,
    SCHEME_SUPG,
    BlockMatrixSpec,
    StabilizationProfile,
    assemble,
    assemble_hermite_galerkin,
    assemble_linear_galerkin,
    assemble_supg,
    closed_form_element_entries,
    compute_tau,
    dump_matrix,
    element_integral,
    _assemble_block,
)
from diracfem.discretization import BasisFamily, BasisKind, build_exponential_mesh
from diracfem.physics import OperatorParams, point_nucleus

from conftest import random_mesh

POLY_SPECS = {
    "MM000": BlockMatrixSpec(0, 0, 0),
    "MM100": BlockMatrixSpec(1, 0, 0),
    "MM010": BlockMatrixSpec(0, 1, 0),
    "MM110": BlockMatrixSpec(1, 1, 0),
}


def table_columns(j, n):
    """0-based dof indices of the closed-form columns (j-1, j, j+1, slopes)."""
    return [j - 2, j - 1, j, j - 2 + n, j - 1 + n, j + n]


class TestClosedFormOracle:
    def test_quadrature_matches_closed_forms(self, rng):
        # polynomial integrands: the 4-point rule must be exact
        pot = point_nucleus(1.0)
        for _ in range(5):
            mesh = random_mesh(rng, n=6)
            basis = BasisFamily(BasisKind.CUBIC_HERMITE, mesh)
            n = 6
            for j in (2, 3, 5):
                entries = closed_form_element_entries(mesh, j)
                for name, spec in POLY_SPECS.items():
                    for row_i, row_dof in ((0, j - 1), (1, j - 1 + n)):
                        for col_i, col_dof in enumerate(table_columns(j, n)):
                            got = element_integral(spec, basis, pot, row_dof, col_dof)
                            want = entries[name][row_i, col_i]
                            assert got == pytest.approx(want, rel=1e-12, abs=1e-13), \
                                f"{name} row {row_i} col {col_i}"

    def test_specific_diagonal_entries(self, rng):
        mesh = random_mesh(rng, n=5)
        hj, hj1 = mesh.h[2], mesh.h[3]
        entries = closed_form_element_entries(mesh, 3)
        assert entries["MM000"][0, 1] == pytest.approx(13 / 35 * (hj + hj1), rel=1e-14)
        assert entries["MM110"][0, 1] == pytest.approx(6 / 5 * (hj1 + hj) / (hj1 * hj), rel=1e-14)
        assert entries["MM100"][0, 1] == 0.0
        assert entries["MM010"][0, 2] == 0.5
        assert entries["MM000"][1, 4] == pytest.approx((hj**3 + hj1**3) / 105, rel=1e-14)

    def test_disjoint_supports_zero_without_quadrature(self, rng):
        mesh = random_mesh(rng, n=6)
        basis = BasisFamily(BasisKind.CUBIC_HERMITE, mesh)
        pot = point_nucleus(1.0)
        assert element_integral(POLY_SPECS["MM000"], basis, pot, 0, 3) == 0.0
        assert element_integral(POLY_SPECS["MM110"], basis, pot, 1, 5) == 0.0

    def test_block_assembly_consistent_with_entrywise(self, rng):
        mesh = random_mesh(rng, n=5)
        basis = BasisFamily(BasisKind.CUBIC_HERMITE, mesh)
        pot = point_nucleus(2.0)
        for spec in (BlockMatrixSpec(0, 0, 1), BlockMatrixSpec(1, 0, 0, "V")):
            block = _assemble_block(spec, basis, pot)
            for i in (0, 3, 7):
                for j in (0, 4, 9):
                    assert block[i, j] == pytest.approx(
                        element_integral(spec, basis, pot, i, j), rel=1e-13, abs=1e-16)

    def test_linear_hat_blocks(self, rng):
        # exact hat integrals: mass diag (h_j + h_{j+1})/3, off-diag h/6
        mesh = random_mesh(rng, n=5)
        basis = BasisFamily(BasisKind.LINEAR_HAT, mesh)
        pot = point_nucleus(1.0)
        m000 = _assemble_block(BlockMatrixSpec(0, 0, 0), basis, pot)
        j = 3
        hj, hj1 = mesh.h[j - 1], mesh.h[j]
        assert m000[j - 1, j - 1] == pytest.approx((hj + hj1) / 3, rel=1e-13)
        assert m000[j - 1, j] == pytest.approx(hj1 / 6, rel=1e-13)

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            BlockMatrixSpec(2, 0, 0)
        with pytest.raises(ValueError):
            BlockMatrixSpec(0, 0, 0, "W")


class TestTau:
    def test_uniform_mesh_gives_zero(self):
        # element size 0.25 is exactly representable, so h_{j+1} == h_j holds
        # bitwise and tau vanishes identically
        from diracfem.discretization import Mesh

        nodes = 1.0 + 0.25 * np.arange(9)
        mesh = Mesh(a=1.0, b=3.0, interior_count=7, gamma=0.0, nodes=nodes)
        assert np.all(compute_tau(mesh).tau == 0.0)

    def test_direct_substitution(self):
        # h_j = 0.1, h_{j+1} = 0.3 -> 27/700
        nodes = np.array([0.5, 0.6, 0.9, 1.4])
        from diracfem.discretization import Mesh

        mesh = Mesh(a=0.5, b=1.4, interior_count=2, gamma=0.0, nodes=nodes)
        tau = compute_tau(mesh).tau
        assert tau[0] == 0.0
        assert tau[1] == pytest.approx(27.0 / 700.0, rel=1e-14)

    def test_graded_mesh_positive_increasing(self):
        mesh = build_exponential_mesh(1e-4, 10.0, 20, 5.0)
        tau = compute_tau(mesh).tau
        assert np.all(tau[1:] > 0)
        assert np.all(np.diff(tau[1:]) > 0)

    def test_bounded_by_element_size(self, rng):
        mesh = random_mesh(rng, n=10)
        tau = compute_tau(mesh).tau
        assert np.all(np.abs(tau) < mesh.h)


@pytest.fixture
def hyd_setup():
    params = OperatorParams(Z=1, kappa=-1)
    mesh = build_exponential_mesh(1e-5, 40.0, 14, 5.0)
    return params, mesh, point_nucleus(1.0)


class TestSchemes:
    def test_linear_shapes_and_symmetry(self, hyd_setup):
        params, mesh, pot = hyd_setup
        system = assemble_linear_galerkin(params, mesh, pot)
        n = mesh.interior_count
        assert system.lhs.shape == (2 * n, 2 * n)
        assert system.dof_layout == ("zeta", "xi")
        sym = np.max(np.abs(system.lhs - system.lhs.T)) / np.max(np.abs(system.lhs))
        assert sym < 1e-12
        assert np.max(np.abs(system.rhs - system.rhs.T)) < 1e-12 * np.max(np.abs(system.rhs))

    def test_m010_antisymmetric(self, hyd_setup):
        params, mesh, pot = hyd_setup
        basis = BasisFamily(BasisKind.LINEAR_HAT, mesh)
        m010 = _assemble_block(BlockMatrixSpec(0, 1, 0), basis, pot)
        assert np.max(np.abs(m010 + m010.T)) < 1e-12 * np.max(np.abs(m010))

    def test_hermite_shapes_and_symmetry(self, hyd_setup):
        params, mesh, pot = hyd_setup
        system = assemble_hermite_galerkin(params, mesh, pot)
        n = mesh.interior_count
        assert system.lhs.shape == (4 * n, 4 * n)
        assert system.dof_layout == ("zeta", "zeta_prime", "xi", "xi_prime")
        assert np.max(np.abs(system.lhs - system.lhs.T)) < 1e-12 * np.max(np.abs(system.lhs))
        assert np.max(np.abs(system.rhs - system.rhs.T)) < 1e-14 * np.max(np.abs(system.rhs))

    def test_galerkin_rhs_positive_definite(self, hyd_setup, rng):
        params, mesh, pot = hyd_setup
        for system in (assemble_linear_galerkin(params, mesh, pot),
                       assemble_hermite_galerkin(params, mesh, pot)):
            w = np.linalg.eigvalsh(system.rhs)
            assert w.min() > 0

    def test_bandwidth(self, hyd_setup):
        # adjacent-element coupling only: within one component block the
        # half-bandwidth is bounded by twice the per-node dof count
        params, mesh, pot = hyd_setup
        n = mesh.interior_count
        system = assemble_hermite_galerkin(params, mesh, pot)
        block = system.lhs[:2 * n, :2 * n]
        for i in range(2 * n):
            for j in range(2 * n):
                ni, nj = i % n, j % n
                if abs(ni - nj) >= 2:
                    assert block[i, j] == 0.0

    def test_supg_nesting_at_zero_tau(self, hyd_setup):
        params, mesh, pot = hyd_setup
        tau0 = StabilizationProfile(tau=np.zeros(mesh.element_count))
        supg = assemble_supg(params, mesh, pot, tau=tau0)
        galerkin = assemble_hermite_galerkin(params, mesh, pot)
        scale = np.max(np.abs(galerkin.lhs))
        assert np.max(np.abs(supg.lhs - galerkin.lhs)) <= 1e-14 * scale
        assert np.max(np.abs(supg.rhs - galerkin.rhs)) <= 1e-14

    def test_supg_lhs_nonsymmetric(self, hyd_setup):
        params, mesh, pot = hyd_setup
        system = assemble_supg(params, mesh, pot)
        assert np.max(np.abs(system.lhs - system.lhs.T)) > 0
        assert system.tau is not None

    def test_supg_rejects_mismatched_tau(self, hyd_setup):
        params, mesh, pot = hyd_setup
        with pytest.raises(ValueError):
            assemble_supg(params, mesh, pot, tau=StabilizationProfile(tau=np.zeros(3)))

    def test_free_lower_slope_layout(self, hyd_setup):
        params, mesh, pot = hyd_setup
        n = mesh.interior_count
        system = assemble_hermite_galerkin(params, mesh, pot, free_lower_slope=True)
        assert system.lhs.shape == (2 * (2 * n + 1), 2 * (2 * n + 1))
        assert dict(system.dof_blocks)["zeta_prime"] == n + 1
        assert np.max(np.abs(system.lhs - system.lhs.T)) < 1e-12 * np.max(np.abs(system.lhs))

    def test_dispatch(self, hyd_setup):
        params, mesh, pot = hyd_setup
        for scheme in (SCHEME_LINEAR, SCHEME_HERMITE, SCHEME_SUPG):
            assert assemble(scheme, params, mesh, pot).scheme == scheme
        with pytest.raises(ValueError):
            assemble("spectral", params, mesh, pot)

    def test_dump_matrix_roundtrip(self, hyd_setup, tmp_path):
        params, mesh, pot = hyd_setup
        system = assemble_linear_galerkin(params, mesh, pot)
        path = tmp_path / "lhs.txt"
        dump_matrix(system.lhs, path)
        rebuilt = np.zeros_like(system.lhs)
        for line in path.read_text().splitlines():
            i, j, v = line.split()
            rebuilt[int(i), int(j)] = float(v)
        np.testing.assert_array_equal(rebuilt, system.lhs)
