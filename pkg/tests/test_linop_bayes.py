"""Linear operators, power iteration, and Gaussian posterior algebra."""

import numpy as np
import pytest

from conftest import from_np, to_np
from invnets.bayes import (
    COVARIANCE_CAP,
    GaussPriors,
    inverse_factorizations,
    map_estimate,
    posterior_covariance,
)
from invnets.errors import (
    CapacityError,
    ParameterError,
    ShapeError,
    SingularOperatorError,
)
from invnets.linop import (
    LinearOp,
    conv1d_matrix,
    conv_op_from_first_column,
    power_iteration,
)
from invnets.tensor import Tensor


def random_conv_op(rng, shape=(8, 8), kshape=(3, 3)):
    ker = from_np(rng.standard_normal(kshape))
    return LinearOp.from_kernel(ker, shape)


class TestLinearOp:
    def test_adjoint_twice_is_original(self, rng_np):
        op = random_conv_op(rng_np)
        x = from_np(rng_np.standard_normal((8, 8)))
        again = op.adjoint().adjoint()
        assert np.array_equal(to_np(op.apply(x)), to_np(again.apply(x)))

    def test_adjoint_matches_materialized_transpose(self, rng_np):
        op = random_conv_op(rng_np, (4, 8), (3, 5))
        dense = to_np(op.materialize())
        x = rng_np.standard_normal(32)
        got = to_np(op.apply_adjoint(from_np(x.reshape(4, 8)))).ravel()
        assert np.max(np.abs(got - dense.T @ x)) < 1e-12

    def test_conv1d_matrix_is_circulant(self):
        ker = Tensor.from_nested([1.0, 2.0, 4.0])
        mat = to_np(conv1d_matrix(ker, 5))
        x = np.array([1.0, 0, 0, 0, 0])
        # center-aligned: weight 2 on the impulse, 1 behind, 4 ahead
        assert (mat @ x).tolist() == [2.0, 4.0, 0.0, 0.0, 1.0]
        for j in range(5):
            assert np.array_equal(np.roll(mat[:, 0], j), mat[:, j])

    def test_conv_op_from_first_column_round_trip(self, rng_np):
        op = random_conv_op(rng_np, (4, 4), (3, 3))
        col = op.apply(Tensor((4, 4), [1.0] + [0.0] * 15))
        rebuilt = conv_op_from_first_column(col)
        x = from_np(rng_np.standard_normal((4, 4)))
        assert np.max(np.abs(to_np(rebuilt.apply(x)) - to_np(op.apply(x)))) < 1e-12


class TestPowerIteration:
    def test_diagonal(self):
        h = LinearOp.from_matrix(from_np(np.diag([1.0, 2.0, 3.0])))
        assert abs(power_iteration(h) - 9.0) < 1e-6

    def test_identity(self):
        assert abs(power_iteration(LinearOp.from_matrix(Tensor.eye(4))) - 1.0) < 1e-12

    def test_zero_operator(self):
        assert power_iteration(LinearOp.from_matrix(Tensor.zeros((3, 3)))) == 0.0

    def test_against_dense_eigensolver_oracle(self, rng_np):
        a = rng_np.standard_normal((6, 6))
        h = LinearOp.from_matrix(from_np(a))
        want = np.linalg.eigvalsh(a.T @ a).max()
        assert abs(power_iteration(h, iters=2000, tol=1e-14) - want) < 1e-6 * want


class TestGaussPriors:
    def test_lambda_ratio(self):
        pr = GaussPriors(ve=0.3, vf=1.5)
        assert abs(pr.lam - 0.2) < 1e-15

    def test_positive_variances_required(self):
        with pytest.raises(ParameterError):
            GaussPriors(ve=0.0, vf=1.0)


class TestMapEstimate:
    def test_identity_operator_halves(self):
        g = Tensor.from_nested([2.0, -4.0])
        f = map_estimate(LinearOp.from_matrix(Tensor.eye(2)), g, GaussPriors(1.0, 1.0))
        assert np.max(np.abs(to_np(f) - [1.0, -2.0])) < 1e-12

    def test_orthonormal_lam_zero_is_adjoint(self, rng_np):
        q, _ = np.linalg.qr(rng_np.standard_normal((5, 5)))
        g = rng_np.standard_normal(5)
        f = map_estimate(LinearOp.from_matrix(from_np(q)), from_np(g), 0.0)
        assert np.max(np.abs(to_np(f) - q.T @ g)) < 1e-10

    def test_against_dense_solve_oracle(self, rng_np):
        h = rng_np.standard_normal((8, 8))
        g = rng_np.standard_normal(8)
        lam = 0.1
        f = map_estimate(LinearOp.from_matrix(from_np(h)), from_np(g), lam)
        want = np.linalg.solve(h.T @ h + lam * np.eye(8), h.T @ g)
        assert np.max(np.abs(to_np(f) - want)) < 1e-8

    def test_singular_at_lam_zero(self):
        h = LinearOp.from_matrix(Tensor.zeros((3, 3)))
        with pytest.raises(SingularOperatorError):
            map_estimate(h, Tensor.zeros((3,)), 0.0)

    def test_conv_matches_materialized_circulant(self, rng_np):
        op = random_conv_op(rng_np, (8, 8), (3, 3))
        g = rng_np.standard_normal((8, 8))
        lam = 0.25
        fast = to_np(map_estimate(op, from_np(g), lam)).ravel()
        dense = to_np(op.materialize())
        want = np.linalg.solve(dense.T @ dense + lam * np.eye(64), dense.T @ g.ravel())
        assert np.max(np.abs(fast - want)) < 1e-9

    def test_shrinks_toward_zero_as_lam_grows(self, rng_np):
        h = LinearOp.from_matrix(from_np(rng_np.standard_normal((6, 6))))
        g = from_np(rng_np.standard_normal(6))
        norms = [
            np.linalg.norm(to_np(map_estimate(h, g, lam)))
            for lam in (1.0, 10.0, 100.0, 1000.0)
        ]
        assert all(norms[i + 1] < norms[i] for i in range(len(norms) - 1))


class TestPosteriorCovariance:
    def test_identity(self):
        cov = posterior_covariance(
            LinearOp.from_matrix(Tensor.eye(3)), GaussPriors(1.0, 1.0)
        )
        assert np.max(np.abs(to_np(cov) - np.eye(3) / 2)) < 1e-12

    def test_linear_in_noise_variance(self, rng_np):
        h = LinearOp.from_matrix(from_np(rng_np.standard_normal((5, 4))))
        base = to_np(posterior_covariance(h, GaussPriors(1.0, 2.0)))
        # doubling ve at fixed lam doubles the covariance entrywise
        doubled = to_np(posterior_covariance(h, GaussPriors(2.0, 4.0)))
        assert np.max(np.abs(doubled - 2.0 * base)) < 1e-12

    def test_diag_example(self):
        h = LinearOp.from_matrix(from_np(np.diag([1.0, 2.0])))
        cov = to_np(posterior_covariance(h, GaussPriors(1.0, 1.0)))
        assert np.max(np.abs(cov - np.diag([0.5, 0.2]))) < 1e-12

    def test_symmetry_and_positive_definite(self, rng_np):
        h = LinearOp.from_matrix(from_np(rng_np.standard_normal((7, 6))))
        cov = to_np(posterior_covariance(h, GaussPriors(0.5, 2.0)))
        assert np.max(np.abs(cov - cov.T)) < 1e-12
        assert np.linalg.eigvalsh(cov).min() > 0

    def test_capacity_cap(self):
        big = LinearOp("matrix", None, (COVARIANCE_CAP + 1,), (4,))
        with pytest.raises(CapacityError) as err:
            posterior_covariance(big, GaussPriors(1.0, 1.0))
        assert "MCMC" in str(err.value)


class TestInverseFactorizations:
    def test_identity_all_half(self):
        fac = inverse_factorizations(LinearOp.from_matrix(Tensor.eye(3)), 1.0)
        g = Tensor.from_nested([2.0, 0.0, -2.0])
        for name in ("A", "B", "C"):
            assert np.max(np.abs(to_np(fac[name].apply(g)) - to_np(g) / 2)) < 1e-12

    def test_scalar_push_through(self):
        h = LinearOp.from_matrix(Tensor.from_nested([[3.0]]))
        lam = 0.7
        fac = inverse_factorizations(h, lam)
        g = Tensor.from_nested([2.0])
        want = 3.0 * 2.0 / (9.0 + lam)
        assert abs(fac["A"].apply(g).data[0] - want) < 1e-12
        assert abs(fac["B"].apply(h.apply_adjoint(g)).data[0] - want) < 1e-12
        assert abs(h.apply_adjoint(fac["C"].apply(g)).data[0] - want) < 1e-12

    def test_wide_operator_triple_agreement(self, rng_np):
        h = from_np(rng_np.standard_normal((6, 4)))
        op = LinearOp.from_matrix(h)
        fac = inverse_factorizations(op, 0.5)
        g = from_np(rng_np.standard_normal(6))
        a = to_np(fac["A"].apply(g))
        b = to_np(fac["B"].apply(op.apply_adjoint(g)))
        c = to_np(op.apply_adjoint(fac["C"].apply(g)))
        assert np.max(np.abs(a - b)) < 1e-9
        assert np.max(np.abs(a - c)) < 1e-9

    def test_push_through_property_many(self, rng_np):
        for _ in range(200):
            m = int(rng_np.integers(2, 7))
            n = int(rng_np.integers(2, 7))
            lam = float(rng_np.uniform(0.05, 5.0))
            h = rng_np.standard_normal((m, n))
            op = LinearOp.from_matrix(from_np(h))
            fac = inverse_factorizations(op, lam)
            g = rng_np.standard_normal(m)
            a = to_np(fac["A"].apply(from_np(g)))
            b = to_np(fac["B"].apply(op.apply_adjoint(from_np(g))))
            c = to_np(op.apply_adjoint(fac["C"].apply(from_np(g))))
            scale = max(np.linalg.norm(a), 1e-12)
            assert np.linalg.norm(a - b) / scale < 1e-9
            assert np.linalg.norm(a - c) / scale < 1e-9

    def test_lam_zero_rejected(self):
        with pytest.raises(ParameterError):
            inverse_factorizations(LinearOp.from_matrix(Tensor.eye(2)), 0.0)

    def test_conv_factorizations_agree(self, rng_np):
        op = random_conv_op(rng_np, (8, 8), (3, 3))
        fac = inverse_factorizations(op, 0.3)
        g = from_np(rng_np.standard_normal((8, 8)))
        a = to_np(fac["A"].apply(g))
        b = to_np(fac["B"].apply(op.apply_adjoint(g)))
        c = to_np(op.apply_adjoint(fac["C"].apply(g)))
        assert np.max(np.abs(a - b)) < 1e-9
        assert np.max(np.abs(a - c)) < 1e-9
        # and match the dense-solve oracle
        dense = to_np(op.materialize())
        want = np.linalg.solve(
            dense.T @ dense + 0.3 * np.eye(64), dense.T @ to_np(g).ravel()
        )
        assert np.max(np.abs(a.ravel() - want)) < 1e-9
