"""
Tests for the conditioned Poisson table model and its lattice basis.

Run with: pytest tests/services/cond_dist/test_model.py
"""
import numpy as np
import pytest

from services.cond_dist.model import basis_constants, build_table_model, kappa_of_basis, minor_basis
from services.errors import ParameterError


class TestMinorBasis:
    """Tests for the minor moves V^(ij)"""

    def test_shape_and_margins(self):
        """(k-1)^2 moves with zero margins"""
        basis = minor_basis(4)
        assert basis.shape == (9, 16)
        tables = basis.reshape(-1, 4, 4)
        assert not np.any(tables.sum(axis=1))
        assert not np.any(tables.sum(axis=2))

    def test_first_move(self):
        """V^(00) for k = 3"""
        expected = np.array([[1, 0, -1], [0, 0, 0], [-1, 0, 1]]).ravel()
        assert np.array_equal(minor_basis(3)[0], expected)

    def test_constants_k3(self):
        """The Gram matrix (I+J) x (I+J) has singular values 1 and 3"""
        c1, c2 = basis_constants(minor_basis(3))
        assert c1 == pytest.approx(1.0)
        assert c2 == pytest.approx(6.0)


class TestBuildModel:
    """Tests for build_table_model"""

    def test_k3_n27(self, model_k3_n27):
        """q = 9, s = 4, nu = 27 and lambda_ij = 3"""
        assert model_k3_n27.q == 9
        assert model_k3_n27.s == 4
        assert model_k3_n27.nu == pytest.approx(27.0)
        assert model_k3_n27.B == 9
        assert np.allclose(model_k3_n27.lam, 3.0)
        assert model_k3_n27.lambda_integral
        assert model_k3_n27.standard_basis
        assert model_k3_n27.rank() == 4

    def test_fractional_lambda(self):
        """k^2 not dividing n is allowed but flagged"""
        model = build_table_model(3, 12)
        assert not model.lambda_integral
        assert model.lam[0] == pytest.approx(12 / 9)

    def test_n_must_be_multiple_of_k(self):
        """n = 28 is not a multiple of 3"""
        with pytest.raises(ParameterError, match="multiple"):
            build_table_model(3, 28)

    def test_basis_must_have_zero_margins(self):
        """A vector with nonzero margins is rejected"""
        basis = minor_basis(3).copy()
        basis[0, 0] += 1
        with pytest.raises(ParameterError, match="zero row and column sums"):
            build_table_model(3, 9, basis)

    def test_basis_must_be_independent(self):
        """Repeated moves are rejected"""
        basis = minor_basis(3).copy()
        basis[1] = basis[0]
        with pytest.raises(ParameterError, match="independent"):
            build_table_model(3, 9, basis)


class TestKappa:
    """Tests for the lattice point count of the base box"""

    def test_standard_basis(self, model_k3_n27):
        """The minor moves generate Z^q n L, so kappa = 1"""
        assert kappa_of_basis(model_k3_n27) == 1

    def test_doubled_move(self):
        """Doubling one move gives an index-2 sublattice, kappa = 2"""
        basis = minor_basis(3).copy()
        basis[0] *= 2
        model = build_table_model(3, 27, basis)
        assert not model.standard_basis
        assert kappa_of_basis(model) == 2
