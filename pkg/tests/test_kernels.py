import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fkheat.errors import DomainError, TableLookupError
from fkheat.kernels import (
    CovarianceQ,
    HurstParams,
    check_h1_h2,
    holder_norm,
    q_eval,
    q_hat,
    q_hat_matrix,
    rh_cov,
    rh_cov_matrix,
    v_kernel,
    v_kernel_bound,
)

# Frozen expected values, each computed from the stated independent oracle
# (plain arithmetic on the defining formulas).
RH_COV_2_3_025 = 0.5 * (2.0**0.5 + 3.0**0.5 - 1.0)  # = 1.0731321849709863
V_LIMIT_R10_H03 = 2.0 * 0.3 * (0.6 - 1.0) * 10.0 ** (0.6 - 2.0)  # alpha_h * r^{2H-2}
V_BOUND_R1_H025 = 2.0**2.5 * 0.25 * 0.5  # = 0.7071067811865476


class TestHurstParams:
    def test_alpha_h_negative(self):
        hp = HurstParams(0.3)
        assert hp.alpha_h == pytest.approx(2 * 0.3 * (0.6 - 1.0))
        assert hp.alpha_h < 0.0
        assert hp.abs_alpha_h == -hp.alpha_h

    @pytest.mark.parametrize("bad", [0.0, 0.5, 0.7, -0.1, 1.0])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(DomainError):
            HurstParams(bad)


class TestRhCov:
    def test_diagonal_at_one(self):
        assert rh_cov(1.0, 1.0, HurstParams(0.3)) == pytest.approx(1.0, abs=1e-15)

    def test_direct_arithmetic(self):
        assert rh_cov(2.0, 3.0, HurstParams(0.25)) == pytest.approx(
            RH_COV_2_3_025, rel=1e-14
        )

    def test_zero_time_cancels(self):
        assert rh_cov(1.0, 0.0, HurstParams(0.3)) == 0.0

    def test_symmetry_and_diagonal(self):
        rng = np.random.default_rng(7)
        t, s = rng.uniform(-3, 3, size=(2, 50))
        np.testing.assert_allclose(
            rh_cov(t, s, 0.35), rh_cov(s, t, 0.35), rtol=0, atol=0
        )
        np.testing.assert_allclose(
            rh_cov(t, t, 0.35), np.abs(t) ** 0.7, rtol=1e-14
        )

    @pytest.mark.parametrize("H", [0.1, 0.25, 0.4, 0.5, 0.75])
    def test_is_positive_semidefinite(self, H):
        times = np.concatenate([np.linspace(-2, 3, 21), [0.013, 2.7]])
        M = rh_cov_matrix(times, times, H)
        w = np.linalg.eigvalsh(M)
        assert w.min() >= -1e-8 * np.trace(M)


class TestVKernel:
    def test_collapsed_symmetric_case(self):
        # r=0, eps=delta: numerator 2|2 eps|^{2H}, denominator 4 eps^2.
        assert v_kernel(0.0, 0.5, 0.5, HurstParams(0.25)) == pytest.approx(2.0)
        for eps, H in [(0.1, 0.3), (0.02, 0.45), (1.3, 0.1)]:
            expect = 2.0 ** (2 * H - 1) * eps ** (2 * H - 2)
            assert v_kernel(0.0, eps, eps, H) == pytest.approx(expect, rel=1e-12)

    def test_converges_to_singular_kernel(self):
        got = v_kernel(10.0, 1e-4, 1e-4, HurstParams(0.3))
        assert got == pytest.approx(V_LIMIT_R10_H03, rel=1e-3)

    @given(
        r=st.floats(-50, 50),
        eps=st.floats(1e-6, 10),
        delta=st.floats(1e-6, 10),
        H=st.floats(0.05, 0.95),
    )
    @settings(max_examples=200)
    def test_even_in_r(self, r, eps, delta, H):
        assert v_kernel(r, eps, delta, H) == v_kernel(-r, eps, delta, H)

    def test_kink_points_evaluate(self):
        # r exactly at +-(eps-delta) and +-(eps+delta): |0|^{2H} = 0 directly.
        eps, delta = 0.3, 0.1
        for r in (eps - delta, eps + delta, delta - eps, -eps - delta):
            v = v_kernel(r, eps, delta, 0.3)
            assert np.isfinite(v)

    def test_rejects_nonpositive_widths(self):
        with pytest.raises(DomainError):
            v_kernel(1.0, 0.0, 0.1, 0.3)


class TestVKernelBound:
    def test_constant_plugged_in(self):
        assert v_kernel_bound(1.0, HurstParams(0.25)) == pytest.approx(
            V_BOUND_R1_H025, rel=1e-14
        )

    def test_vanishes_at_infinity(self):
        assert v_kernel_bound(1e12, 0.3) < 1e-10

    def test_rejects_nonpositive_r(self):
        with pytest.raises(DomainError):
            v_kernel_bound(0.0, 0.3)

    def test_dominates_v_kernel_sweep(self):
        # Exhaustive random sweep over the admissible cone r >= 4 eps >= 4 delta.
        rng = np.random.default_rng(2024)
        for _ in range(200):
            r = rng.uniform(0.01, 20.0)
            eps = rng.uniform(0.0, r / 4.0) * rng.uniform(0.1, 1.0) + 1e-9
            delta = rng.uniform(1e-9, eps)
            H = rng.uniform(0.02, 0.48)
            assert abs(v_kernel(r, eps, delta, H)) <= v_kernel_bound(r, H) * (1 + 1e-12)

    @given(
        r=st.floats(0.01, 100),
        fe=st.floats(1e-6, 1.0),
        fd=st.floats(1e-6, 1.0),
        H=st.floats(0.02, 0.48),
    )
    @settings(max_examples=300)
    def test_dominates_v_kernel_property(self, r, fe, fd, H):
        eps = 0.25 * r * fe
        delta = eps * fd
        assert abs(v_kernel(r, eps, delta, H)) <= v_kernel_bound(r, H) * (1 + 1e-12)


class TestQEval:
    def test_fbm_spatial_diagonal(self):
        Q = CovarianceQ.fbm_spatial(0.5)
        assert q_eval(Q, 2.0, 2.0) == pytest.approx(2.0)

    def test_fbm_spatial_opposite_signs(self):
        Q = CovarianceQ.fbm_spatial(0.5)
        assert q_eval(Q, 1.0, -1.0) == pytest.approx(0.0, abs=1e-15)

    def test_constant(self):
        Q = CovarianceQ.constant(3.0)
        assert q_eval(Q, -7.3, 12.0) == 3.0

    def test_tabulated_roundtrip_and_miss(self):
        sites = np.array([0.0, 1.0, 2.5])
        table = CovarianceQ.fbm_spatial(0.5).matrix(sites, sites)
        Q = CovarianceQ.tabulated(sites, table)
        assert q_eval(Q, 1.0, 2.5) == pytest.approx(table[1, 2])
        with pytest.raises(TableLookupError):
            q_eval(Q, 0.4, 1.0)

    def test_fbm_spatial_rejects_vectors(self):
        Q = CovarianceQ.fbm_spatial(0.5)
        with pytest.raises(DomainError):
            Q.matrix(np.zeros((3, 2)), np.zeros((3, 2)))


class TestQHat:
    def test_constant_q_vanishes(self):
        Q = CovarianceQ.constant(4.2)
        assert q_hat(Q, 0.3, 1.7, -2.0, 5.0) == 0.0

    def test_variance_form_nonnegative(self):
        Q = CovarianceQ.fbm_spatial(0.35)
        rng = np.random.default_rng(5)
        for _ in range(50):
            a, b = rng.normal(size=2) * 3
            assert q_hat(Q, a, b, a, b) >= -1e-14

    def test_worked_example(self):
        Q = CovarianceQ.fbm_spatial(0.5)
        # Q(1,2) = (1 + 2 - 1)/2 = 1, other three terms vanish.
        assert q_hat(Q, 1.0, 0.0, 2.0, 0.0) == pytest.approx(0.5)

    def test_swap_antisymmetry(self):
        Q = CovarianceQ.fbm_spatial(0.3)
        pu, pv, su, sv = 0.4, -1.2, 2.0, 0.9
        base = q_hat(Q, pu, pv, su, sv)
        assert q_hat(Q, pv, pu, sv, su) == pytest.approx(base, rel=1e-12)
        assert q_hat(Q, pv, pu, su, sv) == pytest.approx(-base, rel=1e-12)
        assert q_hat(Q, pu, pv, sv, su) == pytest.approx(-base, rel=1e-12)

    @given(
        pu=st.floats(-5, 5), pv=st.floats(-5, 5),
        su=st.floats(-5, 5), sv=st.floats(-5, 5),
        theta=st.floats(0.1, 0.9),
    )
    @settings(max_examples=200)
    def test_rectangle_bound(self, pu, pv, su, sv, theta):
        Q = CovarianceQ.fbm_spatial(theta)
        bound = 0.5 * Q.C0 * abs(pu - pv) ** Q.alpha * abs(su - sv) ** Q.alpha
        assert abs(q_hat(Q, pu, pv, su, sv)) <= bound + 1e-12

    def test_matrix_matches_scalar(self):
        Q = CovarianceQ.fbm_spatial(0.4)
        pts_a = np.array([0.0, 0.5, -1.0])
        pts_b = np.array([1.0, 2.0, -0.3])
        M = q_hat_matrix(Q, pts_a, pts_b)
        for i in range(3):
            for j in range(3):
                assert M[i, j] == pytest.approx(
                    q_hat(Q, pts_a[i], pts_a[j], pts_b[i], pts_b[j]), abs=1e-14
                )


class TestHolderNorm:
    def test_linear_path(self):
        t = np.linspace(0, 1, 33)
        assert holder_norm((t, t), 1.0) == pytest.approx(1.0)

    def test_constant_path(self):
        t = np.linspace(0, 1, 17)
        assert holder_norm((t, np.ones_like(t)), 0.5) == 0.0

    def test_sqrt_path(self):
        # sup of (sqrt(t_j) - sqrt(t_i)) / sqrt(t_j - t_i) is attained at i = 0.
        t = np.linspace(0, 1, 101)
        assert holder_norm((t, np.sqrt(t)), 0.5) == pytest.approx(1.0, rel=1e-12)

    def test_requires_two_points(self):
        with pytest.raises(DomainError):
            holder_norm((np.array([0.0]), np.array([1.0])), 0.5)

    def test_vector_valued(self):
        t = np.linspace(0, 2, 65)
        vals = np.stack([t, 2 * t], axis=-1)
        assert holder_norm((t, vals), 1.0) == pytest.approx(np.sqrt(5.0), rel=1e-12)


class TestCheckH1H2:
    def _pairs(self, n=1000, seed=11):
        rng = np.random.default_rng(seed)
        xs = rng.uniform(-5, 5, n)
        ys = rng.uniform(-5, 5, n)
        return xs, ys

    def test_fbm_spatial_fits_declared_constants(self):
        Q = CovarianceQ.fbm_spatial(0.35)
        rep = check_h1_h2(Q, self._pairs())
        assert rep.ok
        assert rep.fitted_C0_increment <= 1.0 + 1e-9
        assert rep.fitted_alpha == pytest.approx(0.35, abs=1e-6)

    def test_constant_q_has_zero_increment_constant(self):
        Q = CovarianceQ.constant(2.0)
        rep = check_h1_h2(Q, self._pairs(200))
        assert rep.ok
        assert rep.fitted_C0 == 0.0

    def test_growth_probe_worked_example(self):
        Q = CovarianceQ.fbm_spatial(0.5)
        rep = check_h1_h2(Q, self._pairs(100), M_values=(4.0,))
        # Minimum of Q over [4,16]^2 is Q(4,4) = 4, so C2 = 4 / 4^{2*0.5} = 1.
        assert rep.c2_by_M[4.0] == pytest.approx(1.0)
        assert rep.ok

    def test_equivalence_of_increment_and_rectangle_forms(self):
        Q = CovarianceQ.fbm_spatial(0.5)
        rep = check_h1_h2(Q, self._pairs(1000))
        assert rep.fitted_C0_rectangle <= 2.0 * rep.fitted_C0_increment + 1e-9
        assert rep.fitted_C0_increment <= 2.0 * rep.fitted_C0_rectangle + 1e-9

    def test_violations_reported_not_raised(self):
        # Declare a deliberately too-small C0: the audit must report, not raise.
        Q = CovarianceQ.fbm_spatial(0.5, C0=0.1)
        rep = check_h1_h2(Q, self._pairs(200))
        assert not rep.ok
        assert any(v["kind"] == "increment" for v in rep.violations)
