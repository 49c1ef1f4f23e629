import numpy as np
import pytest

from iquad.adapt import (RECOVERY_INFLATION, AdaptationError, AMIGHVariant, am_igh, m_pigh,
                         moment_match)
from iquad.igh import igh_estimate, igh_weights, weighted_set
from iquad.proposals import EvalCounter, GaussianProposal
from iquad.targets import TargetDensity, make_gaussian_mixture_5, make_gaussian_target

S_T = np.array([[1.0, 0.3], [0.3, 0.5]])
MU_T = np.array([1.0, -1.0])


def _hermgauss_moments(mu_t, var_t, sd_q, alpha):
    """Weighted mean of an N(mu_t, var_t) target under an N(0, sd_q**2) Hermite grid."""
    t, w = np.polynomial.hermite.hermgauss(alpha)
    x = np.sqrt(2.0) * sd_q * t
    log_w = -(x - mu_t) ** 2 / (2 * var_t) + x**2 / (2 * sd_q**2)
    wb = w * np.exp(log_w - log_w.max())
    wb /= wb.sum()
    m = wb @ x
    return m, wb @ (x - m) ** 2


def _far_init():
    return MU_T + 5 * np.sqrt(np.diag(S_T)), 9 * S_T


class TestMomentMatch:
    def test_uniform_weights_return_grid_gaussian(self):
        sigma = np.array([[2.0, -0.4], [-0.4, 1.0]])
        q = GaussianProposal([0.5, 3.0], sigma)
        ps = q.points(4)
        ws = weighted_set(ps.points, ps.quad_weights, np.zeros(ps.size), np.zeros(ps.size), ps.size)
        mu, sig = moment_match(ws)
        np.testing.assert_allclose(mu, [0.5, 3.0], atol=1e-8)
        np.testing.assert_allclose(sig, sigma, atol=1e-8)

    def test_single_weight_triggers_jitter(self):
        q = GaussianProposal([0.0, 0.0], np.eye(2))
        ps = q.points(3)
        log_w = np.full(ps.size, -np.inf)
        log_w[4] = 0.0
        ws = weighted_set(ps.points, ps.quad_weights, log_w, np.zeros(ps.size), ps.size)
        with pytest.raises(AdaptationError):
            moment_match(ws)

    @pytest.mark.parametrize("sd_q,alpha", [(3.0, 9), (3.0, 40), (1.5, 9)])
    def test_matches_independent_rule(self, sd_q, alpha):
        t = make_gaussian_target(2.0, np.sqrt(0.5))
        q = GaussianProposal([0.0], sd_q**2)
        mu, sig = moment_match(igh_weights(q.points(alpha), t, q))
        m_ref, v_ref = _hermgauss_moments(2.0, 0.5, sd_q, alpha)
        assert mu[0] == pytest.approx(m_ref, rel=1e-10)
        assert sig[0, 0] == pytest.approx(v_ref, rel=1e-8)

    def test_fine_grid_recovers_mean(self):
        t = make_gaussian_target(2.0, np.sqrt(0.5))
        q = GaussianProposal([0.0], 9.0)
        mu, _ = moment_match(igh_weights(q.points(40), t, q))
        assert abs(mu[0] - 2.0) < 0.05

    @pytest.mark.xfail(strict=True, reason="nine nodes on N(0, 9) put only two nodes near the "
                                           "target mass; the matched mean is 2.90")
    def test_coarse_grid_recovers_mean(self):
        t = make_gaussian_target(2.0, np.sqrt(0.5))
        q = GaussianProposal([0.0], 9.0)
        mu, _ = moment_match(igh_weights(q.points(9), t, q))
        assert abs(mu[0] - 2.0) < 0.05


class TestAmIgh:
    def test_temporal_dm_far_init(self):
        mu0, s0 = _far_init()
        tr = am_igh(make_gaussian_target(MU_T, S_T), mu0, s0, 5, 10, "temporal_dm")
        assert np.max(np.abs(tr.final.mu - MU_T)) < 0.01

    def test_last_far_init_converges_slowly(self):
        mu0, s0 = _far_init()
        tr = am_igh(make_gaussian_target(MU_T, S_T), mu0, s0, 5, 30, "last")
        err = [np.max(np.abs(r.mu - MU_T)) for r in tr.records[1:]]
        assert np.all(np.diff(err) < 0)
        assert err[-1] < 0.1

    @pytest.mark.xfail(strict=True, reason="pooled moment matching keeps the biased first block; "
                                           "its influence decays like 1/t")
    def test_last_far_init_ten_iterations(self):
        mu0, s0 = _far_init()
        tr = am_igh(make_gaussian_target(MU_T, S_T), mu0, s0, 5, 10, "last")
        assert np.max(np.abs(tr.final.mu - MU_T)) < 0.01

    @pytest.mark.parametrize("variant", ["last", "temporal_dm"])
    def test_single_iteration_is_igh(self, variant):
        t = make_gaussian_mixture_5()
        q = GaussianProposal([1.0, 2.0], 30 * np.eye(2))
        tr = am_igh(t, q.mu, q.sigma, 6, 1, variant, log_z=0.0)
        ref = igh_estimate(igh_weights(q.points(6), t, q), None, 0.0)
        np.testing.assert_allclose(tr.final.estimates.self_normalized, ref.self_normalized,
                                   rtol=1e-13)
        np.testing.assert_allclose(tr.final.estimates.unnormalized, ref.unnormalized, rtol=1e-13)
        assert tr.final.estimates.z_hat == pytest.approx(ref.z_hat, rel=1e-13)

    @pytest.mark.parametrize("variant", ["last", "temporal_dm"])
    def test_fixed_point(self, variant):
        tr = am_igh(make_gaussian_target(MU_T, S_T), MU_T, S_T, 4, 6, variant)
        for r in tr.records:
            np.testing.assert_allclose(r.mu, MU_T, atol=1e-8)
            np.testing.assert_allclose(r.sigma, S_T, atol=1e-8)

    def test_budget_last(self):
        c = EvalCounter()
        am_igh(make_gaussian_mixture_5(), [0, 0], 50 * np.eye(2), 4, 7, "last", counter=c)
        n, T = 16, 7
        assert c.target == n * T
        assert c.proposal == n * T
        assert c.weight == n * T

    def test_budget_temporal_dm(self):
        c = EvalCounter()
        tr = am_igh(make_gaussian_mixture_5(), [0, 0], 50 * np.eye(2), 4, 7, "temporal_dm",
                    counter=c)
        n, T = 16, 7
        assert c.target == n * T
        assert c.weight == n * T * (T + 1) // 2
        assert [r.weight_evals for r in tr.records] == [n * t * (t + 1) // 2
                                                         for t in range(1, T + 1)]
        assert [r.target_evals for r in tr.records] == [n * t for t in range(1, T + 1)]

    @pytest.mark.parametrize("variant", ["last", "temporal_dm"])
    def test_scale_invariance(self, variant):
        t = make_gaussian_mixture_5()
        a = am_igh(t, [0, 0], 50 * np.eye(2), 4, 5, variant)
        b = am_igh(t.rescaled(1e-3), [0, 0], 50 * np.eye(2), 4, 5, variant)
        for ra, rb in zip(a.records, b.records):
            np.testing.assert_allclose(rb.estimates.self_normalized, ra.estimates.self_normalized,
                                       rtol=1e-9)
            assert rb.estimates.z_hat == pytest.approx(1e-3 * ra.estimates.z_hat, rel=1e-9)

    def test_recovery_inflates(self):
        t = TargetDensity(1, lambda x: np.where(x[:, 0] > 50, 0.0, -np.inf))
        tr = am_igh(t, [0.0], 1.0, 3, 3)
        assert tr.records[0].estimates is None
        assert tr.records[1].recovered
        assert tr.records[1].sigma[0, 0] == pytest.approx(RECOVERY_INFLATION)

    def test_thinned_runs(self):
        tr = am_igh(make_gaussian_target(MU_T, S_T), *_far_init(), 5, 10, "temporal_dm",
                    n_prime=12, rng=np.random.default_rng(0))
        assert tr.final.target_evals == 120
        assert np.max(np.abs(tr.final.mu - MU_T)) < 0.5

    def test_thinning_needs_rng(self):
        with pytest.raises(ValueError):
            am_igh(make_gaussian_target(MU_T, S_T), MU_T, S_T, 3, 2, n_prime=4)

    def test_variant_enum(self):
        assert AMIGHVariant("temporal_dm") is AMIGHVariant.TEMPORAL_DM
        with pytest.raises(ValueError):
            am_igh(make_gaussian_target(MU_T, S_T), MU_T, S_T, 3, 2, "mixture")


def _uniform_inits(seed, M=25, var=25.0):
    rng = np.random.default_rng(seed)
    return [(rng.uniform(-4, 4, size=2), var * np.eye(2)) for _ in range(M)]


class TestMPigh:
    def test_single_kernel_first_iteration_is_igh(self):
        t = make_gaussian_mixture_5()
        q = GaussianProposal([1.0, 1.0], 40 * np.eye(2))
        tr = m_pigh(t, [(q.mu, q.sigma)], 5, 1)
        ref = igh_estimate(igh_weights(q.points(5), t, q))
        np.testing.assert_allclose(tr.final.estimates.self_normalized, ref.self_normalized,
                                   rtol=1e-13)

    def test_identical_kernels_stay_identical(self):
        inits = [([1.0, 2.0], 30 * np.eye(2))] * 4
        tr = m_pigh(make_gaussian_mixture_5(), inits, 4, 6)
        for r in tr.records:
            np.testing.assert_allclose(r.mu, np.repeat(r.mu[:1], 4, axis=0), rtol=1e-12)
            np.testing.assert_allclose(r.sigma, np.repeat(r.sigma[:1], 4, axis=0), rtol=1e-12)

    def test_kernel_count_preserved_and_budget(self):
        c = EvalCounter()
        tr = m_pigh(make_gaussian_mixture_5(), _uniform_inits(0, M=6), 3, 4, counter=c)
        assert all(r.mu.shape == (6, 2) for r in tr.records)
        assert c.target == 6 * 9 * 4
        assert c.proposal == 6 * 6 * 9 * 4
        assert c.weight == 6 * 9 * 4

    def test_z_mse_short_run(self):
        t = make_gaussian_mixture_5()
        err = [(m_pigh(t, _uniform_inits(s), 5, 5).final.estimates_iter.z_hat - 1.0) ** 2
               for s in range(100)]
        assert np.mean(err) < 0.2

    def test_starved_kernel_kept(self):
        t = make_gaussian_target([0.0, 0.0], np.eye(2))
        inits = [([0.0, 0.0], np.eye(2)), ([400.0, 400.0], np.eye(2))]
        tr = m_pigh(t, inits, 3, 3)
        np.testing.assert_allclose(tr.final.mu[1], [400.0, 400.0])
