"""Predicted eigenvalue moments against independent oracles."""

import numpy as np
import pytest

from rpsbm import (
    DiracLaw,
    RpsbmModel,
    SbmParams,
    UniformProductLaw,
    build_theory_matrices,
    eigenfunction_values,
    expected_eigenvalue,
    first_order_check,
    limiting_covariance,
    predict_eig_law_moments,
    sample_sbm,
    spectrum,
)
from rpsbm.theory import (
    covariance_block_integral,
    expected_spectrum,
    kernel_operator_eigenvalues,
)


def random_params(gen, c=None, eps_regime=False):
    c = int(gen.integers(1, 6)) if c is None else c
    s = gen.uniform(0.5, 2.0, size=c)
    s = s / s.sum()
    p = np.sort(gen.uniform(0.2, 0.95, size=c))[::-1]
    if eps_regime:
        q = float(gen.uniform(0.0, 0.1)) * p.min()
    else:
        q = float(gen.uniform(0.0, p.min()))
    return SbmParams(omega=0.5, s=s, p=p, q=q)


class TestTheoryMatrices:
    def test_diagonal_case(self):
        params = SbmParams(omega=1.0, s=[0.5, 0.5], p=[0.8, 0.6], q=0.0)
        tm = build_theory_matrices(params)
        np.testing.assert_allclose(tm.M, np.diag([0.4, 0.3]), atol=1e-15)
        np.testing.assert_allclose(tm.nu, [0.4, 0.3], atol=1e-14)

    def test_single_community(self):
        tm = build_theory_matrices(SbmParams(omega=1.0, s=[1.0], p=[0.7], q=0.0))
        np.testing.assert_allclose(tm.nu, [0.7], atol=1e-15)

    def test_coupled_two_block_closed_form(self):
        # eigenvalues of [[0.4, 0.05], [0.05, 0.3]] in closed form
        tm = build_theory_matrices(
            SbmParams(omega=1.0, s=[0.5, 0.5], p=[0.8, 0.6], q=0.1))
        mid, rad = 0.35, np.sqrt(0.05**2 + 0.05**2)
        np.testing.assert_allclose(tm.nu, [mid + rad, mid - rad], atol=1e-12)
        np.testing.assert_allclose(np.round(tm.nu, 4), [0.4207, 0.2793])

    def test_invariants_on_random_params(self):
        gen = np.random.default_rng(10)
        for _ in range(50):
            tm = build_theory_matrices(random_params(gen))
            np.testing.assert_allclose(tm.M, tm.M.T, atol=1e-14)
            np.testing.assert_allclose(tm.V.T @ tm.V, np.eye(tm.c), atol=1e-10)
            np.testing.assert_allclose(tm.M @ tm.V, tm.V @ np.diag(tm.nu),
                                       atol=1e-10)
            assert np.all(np.diff(tm.nu) <= 1e-14)


class TestEigenfunctions:
    def test_diagonal_two_block(self):
        tm = build_theory_matrices(
            SbmParams(omega=1.0, s=[0.5, 0.5], p=[0.8, 0.6], q=0.0))
        r = eigenfunction_values(tm)
        np.testing.assert_allclose(r[0], [np.sqrt(2.0), 0.0], atol=1e-12)

    def test_single_block_is_unit(self):
        tm = build_theory_matrices(SbmParams(omega=1.0, s=[1.0], p=[0.7], q=0.0))
        np.testing.assert_allclose(eigenfunction_values(tm), [[1.0]], atol=1e-14)

    def test_orthonormality_under_s_weights(self):
        gen = np.random.default_rng(11)
        for _ in range(20):
            params = random_params(gen)
            tm = build_theory_matrices(params)
            r = eigenfunction_values(tm)
            gram = (r * params.s) @ r.T
            np.testing.assert_allclose(gram, np.eye(params.c), atol=1e-10)

    def test_operator_eigenvalues_match_matrix(self):
        # midpoint-discretized kernel operator converges to nu
        params = SbmParams(omega=1.0, s=[1 / 3, 1 / 3, 1 / 3],
                           p=[0.9, 0.7, 0.5], q=0.05)
        tm = build_theory_matrices(params)
        err512 = np.max(np.abs(kernel_operator_eigenvalues(params, 512) - tm.nu))
        err1024 = np.max(np.abs(kernel_operator_eigenvalues(params, 1024) - tm.nu))
        assert err512 < 1e-3
        assert err1024 <= err512


class TestLimitingCovariance:
    def test_single_community(self):
        cov = limiting_covariance(SbmParams(omega=1.0, s=[1.0], p=[0.75], q=0.0))
        np.testing.assert_allclose(cov, [[1.5]], atol=1e-14)

    def test_decoupled_blocks(self):
        cov = limiting_covariance(
            SbmParams(omega=1.0, s=[0.5, 0.5], p=[0.8, 0.6], q=0.0))
        np.testing.assert_allclose(cov, np.diag([1.6, 1.2]), atol=1e-14)

    def test_matches_block_integral_oracle(self):
        gen = np.random.default_rng(12)
        for _ in range(200):
            params = random_params(gen)
            a = limiting_covariance(params)
            b = covariance_block_integral(params)
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)

    def test_symmetric_psd(self):
        gen = np.random.default_rng(13)
        for _ in range(30):
            cov = limiting_covariance(random_params(gen))
            np.testing.assert_allclose(cov, cov.T, atol=1e-12)
            assert np.linalg.eigvalsh(cov).min() > -1e-10


class TestExpectedEigenvalue:
    def test_er_closed_form(self):
        # single community: prediction is exactly n*omega*p + 1
        for n, omega, p in ((500, 0.1, 0.5), (1000, 2 / np.sqrt(1000), 0.75)):
            params = SbmParams(omega=omega, s=[1.0], p=[p], q=0.0)
            got = expected_eigenvalue(params, n, 1)
            assert got == pytest.approx(n * omega * p + 1.0, abs=1e-9)

    def test_frozen_er_value(self):
        params = SbmParams(omega=2 / np.sqrt(1000), s=[1.0], p=[0.75], q=0.0)
        got = expected_eigenvalue(params, 1000, 1)
        assert round(got, 4) == 48.4342

    def test_decoupled_leading_term(self):
        params = SbmParams(omega=0.3, s=[0.5, 0.5], p=[0.8, 0.6], q=0.0)
        n = 1000
        for i in (1, 2):
            lead = n * 0.3 * 0.5 * params.p[i - 1]
            got = expected_eigenvalue(params, n, i)
            assert got == pytest.approx(lead + 1.0, abs=1e-9)

    def test_refuses_indefinite(self):
        params = SbmParams(omega=0.5, s=[0.5, 0.5], p=[0.1, 0.1], q=0.9)
        with pytest.raises(ValueError):
            expected_eigenvalue(params, 100, 2)

    def test_correction_flag(self):
        params = SbmParams(omega=0.3, s=[0.5, 0.5], p=[0.8, 0.6], q=0.03)
        with_corr = expected_eigenvalue(params, 1000, 1, include_correction=True)
        without = expected_eigenvalue(params, 1000, 1, include_correction=False)
        assert abs(with_corr - without) < 5.0
        assert with_corr != without


class TestFirstOrder:
    def test_exact_at_zero_coupling(self):
        params = SbmParams(omega=0.3, s=[0.5, 0.5], p=[0.8, 0.6], q=0.0)
        rep = first_order_check(params, 1000, include_correction=False)
        np.testing.assert_allclose(rep["mean_error"], 0.0, atol=1e-12)
        np.testing.assert_allclose(rep["cov_error"], 0.0, atol=1e-12)

    def test_covariance_error_quadratic_in_eps(self):
        # acceptance criterion: log-log slope 2 +/- 0.3 over eps halvings
        p = np.array([0.8, 0.6])
        s = np.array([0.5, 0.5])
        eps_grid = np.array([0.1, 0.05, 0.025])
        errs = []
        for eps in eps_grid:
            params = SbmParams(omega=0.3, s=s, p=p, q=float(eps * p.min()))
            rep = first_order_check(params, 1000)
            errs.append(rep["cov_error"].max())
        slope = np.polyfit(np.log(eps_grid), np.log(errs), 1)[0]
        assert 1.7 <= slope <= 2.3


class TestPredictedLaw:
    def test_dirac_law_is_exact(self):
        p_star = np.array([0.8, 0.6])
        model = RpsbmModel(omega=0.3, law=DiracLaw(p_star), epsilon=0.0,
                           s=np.array([0.5, 0.5]))
        out = predict_eig_law_moments(model, 1000, draws=1)
        params = SbmParams(omega=0.3, s=[0.5, 0.5], p=p_star, q=0.0)
        np.testing.assert_allclose(out.mean, expected_spectrum(params, 1000),
                                   atol=1e-12)
        np.testing.assert_allclose(out.cov, 0.3 * limiting_covariance(params),
                                   atol=1e-12)

    def test_zero_width_uniform_equals_dirac(self):
        s = np.array([0.5, 0.5])
        center = np.array([0.8, 0.6])
        dirac = RpsbmModel(omega=0.3, law=DiracLaw(center), epsilon=0.02, s=s)
        uni = RpsbmModel(omega=0.3, law=UniformProductLaw(center, [0.0, 0.0]),
                         epsilon=0.02, s=s)
        a = predict_eig_law_moments(dirac, 500, draws=1)
        b = predict_eig_law_moments(uni, 500, draws=64)
        np.testing.assert_allclose(a.mean, b.mean, atol=1e-12)
        np.testing.assert_allclose(a.cov, b.cov, atol=1e-12)

    def test_uniform_variance_identity(self):
        # decoupled blocks: Var(lambda_i) = (n omega s_i)^2 w_i^2/12 + 2 omega c_i
        n, omega = 1000, 0.3
        s = np.array([0.5, 0.5])
        center = np.array([0.8, 0.6])
        width = np.array([0.1, 0.05])
        model = RpsbmModel(omega=omega, law=UniformProductLaw(center, width),
                           epsilon=0.0, s=s)
        out = predict_eig_law_moments(model, n, draws=6000, seed=1)
        expect = (n * omega * s) ** 2 * width**2 / 12 + omega * 2 * center
        np.testing.assert_allclose(np.diag(out.cov), expect, rtol=0.06)

    def test_cov_psd_and_mean_sorted(self):
        model = RpsbmModel(
            omega=0.3, law=UniformProductLaw([0.9, 0.7, 0.5], [0.1, 0.1, 0.1]),
            epsilon=0.05, s=np.array([0.4, 0.3, 0.3]))
        out = predict_eig_law_moments(model, 800, draws=300, seed=2)
        assert np.linalg.eigvalsh(out.cov).min() > -1e-10
        assert np.all(np.diff(out.mean) <= 0)


@pytest.mark.slow
class TestMonteCarloAgreement:
    def test_mean_and_variance_of_sampled_eigenvalues(self):
        n, reps = 1000, 200
        omega = 10 / np.sqrt(n)
        params = SbmParams(omega=omega, s=[0.5, 0.5], p=[0.8, 0.6], q=0.02)
        lams = np.empty((reps, 2))
        for k in range(reps):
            g = sample_sbm(params, n, seed=42, graph_index=k)
            lams[k] = spectrum(g, 2).values
        cov_z = limiting_covariance(params)
        for i in range(2):
            pred = expected_eigenvalue(params, n, i + 1)
            se = np.sqrt(omega * cov_z[i, i] / reps)
            tol = 3 * se + 0.01 * abs(pred)
            assert abs(lams[:, i].mean() - pred) < tol
            emp_var = lams[:, i].var(ddof=1) / omega
            assert abs(emp_var - cov_z[i, i]) < 0.25 * cov_z[i, i]
