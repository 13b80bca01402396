import math

import numpy as np
import pytest

from diracfem.discretization import (
    BasisFamily,
    BasisKind,
    build_exponential_mesh,
    eval_hat,
    eval_hermite,
    hermite_interpolation_error_order,
    hermite_interpolation_max_error,
    quadrature_for,
)
from diracfem.errors import PhysicsError

from conftest import random_mesh


class TestMesh:
    def test_uniform_limit_midpoint(self):
        # gamma -> 0+ recovers the uniform mesh: single interior node at (a+b)/2
        mesh = build_exponential_mesh(1.0, math.e, 1, 1e-9)
        assert mesh.nodes[1] == pytest.approx((1.0 + math.e) / 2, abs=1e-9)

    def test_element_sizes_strictly_increasing(self):
        mesh = build_exponential_mesh(1e-5, 50.0, 3, 6.0)
        assert mesh.element_count == 4
        assert np.all(np.diff(mesh.h) > 0)

    def test_node_formula_frozen_value(self):
        # x_50 for (a=1e-5, b=50, n=100, gamma=6), cross-checked with a
        # 40-digit evaluation of the closed-form node formula
        mesh = build_exponential_mesh(1e-5, 50.0, 100, 6.0)
        assert mesh.nodes[50] == pytest.approx(2.2982683173250775, abs=1e-15)

    def test_endpoints_exact(self):
        mesh = build_exponential_mesh(1e-5, 60.0, 37, 5.5)
        assert mesh.nodes[0] == 1e-5
        assert mesh.nodes[-1] == 60.0
        assert np.all(np.diff(mesh.nodes) > 0)

    def test_invalid_domain(self):
        with pytest.raises(PhysicsError):
            build_exponential_mesh(0.0, 1.0, 5, 6.0)
        with pytest.raises(PhysicsError):
            build_exponential_mesh(2.0, 1.0, 5, 6.0)
        with pytest.raises(PhysicsError):
            build_exponential_mesh(1e-5, 1.0, 0, 6.0)
        with pytest.raises(PhysicsError):
            build_exponential_mesh(1e-5, 1.0, 5, -1.0)


class TestQuadrature:
    def test_degree_seven_exact(self):
        from diracfem.discretization import Mesh

        unit = Mesh(a=0.0, b=1.0, interior_count=0, gamma=0.0, nodes=np.array([0.0, 1.0]))
        rule = quadrature_for(unit, 1)
        assert rule.integrate(lambda x: x**7) == pytest.approx(1.0 / 8.0, abs=1e-15)

    def test_weights_sum_to_element_length(self):
        mesh = build_exponential_mesh(1e-5, 50.0, 10, 6.0)
        for e in (1, 5, 11):
            rule = quadrature_for(mesh, e)
            assert np.all(rule.weights > 0)
            assert rule.weights.sum() == pytest.approx(mesh.h[e - 1], rel=1e-14)

    def test_reference_abscissae_match_independent_rootfinder(self):
        # roots of the degree-4 Legendre polynomial (35x^4 - 30x^2 + 3)/8,
        # found independently with numpy's companion-matrix root solver
        roots = np.sort(np.roots([35.0 / 8.0, 0.0, -30.0 / 8.0, 0.0, 3.0 / 8.0]))
        from diracfem.discretization import Mesh

        unit = Mesh(a=-1.0, b=1.0, interior_count=0, gamma=0.0, nodes=np.array([-1.0, 1.0]))
        rule = quadrature_for(unit, 1)
        np.testing.assert_allclose(np.sort(rule.points), roots, atol=1e-12)
        assert abs(rule.points[1]) == pytest.approx(0.3399810435848563, abs=1e-12)
        assert abs(rule.points[0]) == pytest.approx(0.8611363115940526, abs=1e-12)

    def test_out_of_range_element(self):
        mesh = build_exponential_mesh(1e-5, 50.0, 4, 6.0)
        with pytest.raises(IndexError):
            quadrature_for(mesh, 0)
        with pytest.raises(IndexError):
            quadrature_for(mesh, 6)


class TestHatBasis:
    @pytest.fixture
    def basis(self, rng):
        return BasisFamily(BasisKind.LINEAR_HAT, random_mesh(rng))

    def test_nodal_interpolation(self, basis):
        nodes = basis.mesh.nodes
        for j in (1, 3, 6):
            assert eval_hat(basis, j, nodes[j], 0) == 1.0
            assert eval_hat(basis, j, nodes[j - 1], 0) == 0.0
            assert eval_hat(basis, j, nodes[j + 1], 0) == 0.0

    def test_rising_slope(self, basis):
        mesh = basis.mesh
        j = 3
        x = 0.5 * (mesh.nodes[j - 1] + mesh.nodes[j])
        assert eval_hat(basis, j, x, 1) == pytest.approx(1.0 / mesh.h[j - 1], rel=1e-14)

    def test_compact_support_exact_zero(self, basis):
        mesh = basis.mesh
        j = 2
        outside = [mesh.nodes[0], mesh.nodes[j + 1] + 0.1, mesh.nodes[-1]]
        for x in outside:
            assert eval_hat(basis, j, x, 0) == 0.0
            assert eval_hat(basis, j, x, 1) == 0.0

    def test_partition_of_unity(self, basis):
        mesh = basis.mesh
        xs = np.linspace(mesh.nodes[1], mesh.nodes[-2], 101)
        total = sum(eval_hat(basis, j, xs, 0) for j in range(1, mesh.interior_count + 1))
        np.testing.assert_allclose(total, 1.0, atol=1e-12)

    def test_unsupported_order(self, basis):
        with pytest.raises(ValueError):
            eval_hat(basis, 1, 1.0, 2)


class TestHermiteBasis:
    @pytest.fixture
    def basis(self, rng):
        return BasisFamily(BasisKind.CUBIC_HERMITE, random_mesh(rng))

    def test_dof_count(self, basis):
        assert basis.dof_count == 2 * basis.mesh.interior_count

    def test_nodal_properties(self, basis):
        # value function: 1 at its node with zero derivative; slope function:
        # 0 at its node with unit derivative; both vanish at other nodes
        nodes = basis.mesh.nodes
        for j in (1, 4, 6):
            assert eval_hermite(basis, j, "value", nodes[j], 0) == pytest.approx(1.0, abs=1e-14)
            assert eval_hermite(basis, j, "value", nodes[j], 1) == pytest.approx(0.0, abs=1e-12)
            assert eval_hermite(basis, j, "slope", nodes[j], 0) == pytest.approx(0.0, abs=1e-14)
            assert eval_hermite(basis, j, "slope", nodes[j], 1) == pytest.approx(1.0, rel=1e-13)
            for i in (j - 1, j + 1):
                assert eval_hermite(basis, j, "value", nodes[i], 0) == pytest.approx(0.0, abs=1e-13)
                assert eval_hermite(basis, j, "slope", nodes[i], 0) == pytest.approx(0.0, abs=1e-13)

    def test_value_at_midpoint_uniform(self):
        # phi_{j,1} at the midpoint of the right element equals 1/2 on a
        # uniform mesh (direct evaluation of the right-element branch)
        from conftest import uniform_mesh

        basis = BasisFamily(BasisKind.CUBIC_HERMITE, uniform_mesh(0.0, 5.0, 4))
        mesh = basis.mesh
        j = 2
        mid = 0.5 * (mesh.nodes[j] + mesh.nodes[j + 1])
        assert eval_hermite(basis, j, "value", mid, 0) == pytest.approx(0.5, abs=1e-14)

    def test_c1_continuity_across_node(self, basis):
        mesh = basis.mesh
        eps = 1e-9
        for j in (2, 5):
            for part in ("value", "slope"):
                for order in (0, 1):
                    left = eval_hermite(basis, j, part, mesh.nodes[j] - eps, order)
                    right = eval_hermite(basis, j, part, mesh.nodes[j] + eps, order)
                    assert left == pytest.approx(right, abs=1e-6)

    def test_compact_support_exact_zero(self, basis):
        mesh = basis.mesh
        j = 3
        for x in (mesh.nodes[j - 1] - 0.05, mesh.nodes[j + 1] + 0.05):
            for part in ("value", "slope"):
                assert eval_hermite(basis, j, part, x, 0) == 0.0
                assert eval_hermite(basis, j, part, x, 1) == 0.0

    def test_partition_of_unity_value_functions(self, rng):
        mesh = random_mesh(rng, n=8)
        basis = BasisFamily(BasisKind.CUBIC_HERMITE, mesh)
        xs = np.linspace(mesh.nodes[1], mesh.nodes[-2], 137)
        total = sum(eval_hermite(basis, j, "value", xs, 0)
                    for j in range(1, mesh.interior_count + 1))
        np.testing.assert_allclose(total, 1.0, atol=1e-12)

    def test_unsupported_order(self, basis):
        with pytest.raises(ValueError):
            eval_hermite(basis, 1, "value", 1.0, 2)

    def test_bad_part(self, basis):
        with pytest.raises(ValueError):
            eval_hermite(basis, 1, "curvature", 1.0, 0)


class TestHermiteInterpolation:
    def test_constant_reproduced(self):
        err = hermite_interpolation_max_error(lambda x: 3.7, lambda x: 0.0, 0.0, 2.0, 13)
        assert err < 1e-14

    def test_cubic_reproduced(self):
        f = lambda x: 2 * x**3 - x**2 + 0.5 * x - 4
        df = lambda x: 6 * x**2 - 2 * x + 0.5
        err = hermite_interpolation_max_error(f, df, -1.0, 2.0, 9)
        assert err < 1e-12

    def test_sin_fourth_order(self):
        # four halvings starting from h = pi/4
        sizes = [math.pi / 4 / 2**k for k in range(5)]
        order = hermite_interpolation_error_order(math.sin, math.cos, 0.0, math.pi, sizes)
        assert order >= 3.8

    def test_degenerate_fit(self):
        with pytest.raises(ValueError):
            hermite_interpolation_error_order(math.sin, math.cos, 0.0, 1.0, [0.1, 0.05])
