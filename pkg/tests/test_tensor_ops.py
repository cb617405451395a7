import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cosserat_fv.tensor_ops import (
    asym,
    asym_adjoint,
    asym_adjoint_vector,
    compliance,
    compliance_factor,
    displacement_rotation_coupling,
    frobenius,
    rot_dim,
    rotation_flux_coupling,
    stiffness,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


class TestAsym:
    def test_2d_skew_unit(self):
        assert asym(np.array([[0.0, -1.0], [1.0, 0.0]]))[0] == 2.0

    def test_3d_symmetric_input(self):
        np.testing.assert_array_equal(asym(np.eye(3)), [0, 0, 0])

    def test_3d_single_entry(self):
        s = np.zeros((3, 3))
        s[0, 1] = 1.0
        np.testing.assert_array_equal(asym(s), [0, 0, -1])

    def test_adjoint_examples(self):
        np.testing.assert_array_equal(asym_adjoint(np.array([1.0, 0, 0]), 3),
                                      [[0, 0, 0], [0, 0, -1], [0, 1, 0]])
        np.testing.assert_array_equal(asym_adjoint(np.array([1.0]), 2), [[0, -1], [1, 0]])

    @pytest.mark.parametrize("d", [2, 3])
    def test_adjoint_pairing_bulk(self, d, rng):
        r = rng.standard_normal((10_000, rot_dim(d)))
        s = rng.standard_normal((10_000, d, d))
        lhs = frobenius(asym_adjoint(r, d), s)
        rhs = np.einsum("nk,nk->n", r, asym(s))
        assert np.abs(lhs - rhs).max() <= 1e-12

    @pytest.mark.parametrize("d", [2, 3])
    def test_double_asym_is_twice_identity(self, d):
        basis = np.eye(rot_dim(d))
        np.testing.assert_array_equal(asym(asym_adjoint(basis, d)), 2 * basis)

    @settings(max_examples=100, deadline=None)
    @given(arrays(float, (3,), elements=finite))
    def test_adjoint_is_skew(self, r):
        m = asym_adjoint(r, 3)
        np.testing.assert_array_equal(m, -m.T)

    def test_bad_dimension(self):
        with pytest.raises(ValueError):
            rot_dim(4)
        with pytest.raises(ValueError):
            asym_adjoint(np.zeros(3), 2)


class TestCouplings:
    def test_flux_coupling_matches_adjoint(self, rng):
        n = rng.standard_normal((20, 2))
        r = rng.standard_normal((20, 1))
        got = np.einsum("kdr,kr->kd", rotation_flux_coupling(n), r)
        want = np.einsum("kab,kb->ka", asym_adjoint(r, 2), n)
        np.testing.assert_allclose(got, want, atol=1e-15)

    def test_displacement_coupling_2d(self):
        c = displacement_rotation_coupling(np.array([1.0, 0.0]))
        # (S* u) n with S* u = (-u_2, u_1) and n = e_1 gives -u_2
        np.testing.assert_array_equal(c, [[0.0, -1.0]])

    def test_vector_adjoint_3d_is_skew_matrix(self):
        np.testing.assert_array_equal(asym_adjoint_vector(np.array([1.0, 2, 3])),
                                      asym_adjoint(np.array([1.0, 2, 3]), 3))


class TestCompliance:
    def test_identity_3d(self):
        np.testing.assert_allclose(compliance(np.eye(3), 1.0, 1.0), np.eye(3) / 5, atol=1e-15)

    def test_zero_lambda(self, rng):
        s = rng.standard_normal((5, 2, 2))
        np.testing.assert_allclose(compliance(s, 2.0, 0.0), s / 4.0, atol=1e-15)

    def test_incompressible_limit_kills_trace(self):
        a = compliance(np.eye(2), 1.0, np.inf)
        np.testing.assert_allclose(a, 0.0, atol=1e-15)

    def test_factor_finite_at_infinite_lambda(self):
        assert compliance_factor(1.0, 0.0, 2) == 0.5
        assert compliance_factor(1.0, 1.0, 2) == 0.25

    @pytest.mark.parametrize("d", [2, 3])
    @pytest.mark.parametrize("lam", [0.0, 1.0, 1e2])
    def test_round_trip_moderate_lambda(self, d, lam, rng):
        tau = rng.standard_normal((10_000, d, d))
        mu = rng.uniform(0.5, 2.0, 10_000)
        lam = np.full(10_000, lam)
        assert np.abs(compliance(stiffness(tau, mu, lam), mu, lam) - tau).max() <= 1e-12

    @pytest.mark.parametrize("lam", [1e4, 1e6, 1e8])
    def test_round_trip_error_is_bounded_by_rounding_of_stiffness(self, lam, rng):
        # stiffness(tau) has entries ~ lam |tau|; its own rounding sets the floor
        tau = rng.standard_normal((10_000, 2, 2))
        mu = np.ones(10_000)
        lam = np.full(10_000, lam)
        err = np.abs(compliance(stiffness(tau, mu, lam), mu, lam) - tau).max()
        assert err <= 64 * np.finfo(float).eps * lam[0]

    @settings(max_examples=100, deadline=None)
    @given(arrays(float, (2, 2), elements=finite), st.floats(0.1, 10), st.floats(0.0, 100))
    def test_compliance_is_linear_inverse(self, s, mu, lam):
        t = compliance(s, mu, lam)
        np.testing.assert_allclose(stiffness(t, np.float64(mu), np.float64(lam)), s, atol=1e-9 * (1 + abs(s).max()))
