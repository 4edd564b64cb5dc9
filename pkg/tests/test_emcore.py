import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from infogeom.datasets import gpa_dataset
from infogeom.emcore import (
    BoltzmannFamily,
    SaturatedFamily,
    e_projection,
    e_step,
    evidence_decomposition,
    kl_data_to_model,
    linearity_equivalence_check,
    binary_linearization,
    loglik,
    m_projection,
    m_step,
    random_init,
    recover_hidden_parameter,
    run_em,
    run_em_geometric,
)
from infogeom.errors import ComponentCollapse, UnsupportedModel
from infogeom.infogeo import GaussianFamily, entropy, kl_divergence
from infogeom.models import (
    DiscreteDistribution,
    GaussianMixture,
    JointExponentialFamily,
    conditional_of_exponential_family,
    gmm_joint_family,
    mle_gaussian,
)
from infogeom.rng import make_rng

TRUTH = GaussianMixture.from_params([0.5, 0.5], [3.7, 2.8], [0.5, 0.15])


@pytest.fixture(scope="module")
def gpa():
    return gpa_dataset(20, seed=42)


def legacy_gpa():
    """Data from numpy's legacy global generator, seeded as in the published listing."""
    np.random.seed(42)
    m = np.clip(np.random.normal(3.7, 0.5, size=20), 0.0, 4.0)
    s = np.clip(np.random.normal(2.8, 0.15, size=20), 0.0, 4.0)
    x = np.concatenate((m, s))
    np.random.shuffle(x)
    return x


def legacy_init():
    np.random.seed(0)
    mu_m, s_m, mu_s, s_s = (np.random.uniform(0, 4), np.random.uniform(0, 1), np.random.uniform(0, 4), np.random.uniform(0, 1))
    return GaussianMixture.from_params([0.5, 0.5], [mu_m, mu_s], [s_m, s_s])


# ---------------------------------------------------------------------------
# published run reproduced bit-for-bit on legacy-generator data


def test_published_digits_with_previous_centering():
    st_ = run_em(legacy_gpa(), legacy_init(), tol=1e-4, variance_center="previous")
    mus, sig = st_.mixture.mus, st_.mixture.sigmas
    assert_allclose([mus[0], mus[1], sig[0], sig[1]], [3.62348312056804, 2.755661038565841, 0.3287611585104422, 0.12819709371241142], rtol=1e-12)
    assert st_.iteration == 32


def test_published_data_updated_centering_within_tolerance():
    st_ = run_em(legacy_gpa(), legacy_init(), tol=1e-4)
    p = st_.mixture
    assert_allclose([p.mus[0], p.mus[1], p.sigmas[0], p.sigmas[1]], [3.62350217, 2.75566615, 0.32874577, 0.12820144], atol=1e-8)
    assert np.all(np.abs(np.array([*p.mus, *p.sigmas]) - [3.7, 2.8, 0.5, 0.15]) < 0.2)


# ---------------------------------------------------------------------------
# E step


def test_e_step_identical_components():
    mix = GaussianMixture.from_params([0.5, 0.5], [1.0, 1.0], [0.3, 0.3])
    r, _ = e_step([0.0, 1.0, 5.0], mix)
    assert_allclose(r, 0.5)


def test_e_step_well_separated(gpa):
    r, ll = e_step([3.7, 3.8, 3.65], TRUTH)
    assert np.all(r[:, 0] > 0.99)
    assert ll == pytest.approx(loglik([3.7, 3.8, 3.65], TRUTH))


def test_e_step_single_component():
    mix = GaussianMixture.from_params([1.0], [0.0], [1.0])
    r, _ = e_step(np.linspace(-3, 3, 9), mix)
    assert np.array_equal(r, np.ones((9, 1)))


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=20))
def test_responsibility_rows_sum_to_one(xs):
    r, _ = e_step(xs, TRUTH)
    assert_allclose(r.sum(axis=1), 1.0, atol=1e-12)


# ---------------------------------------------------------------------------
# M step


def test_m_step_hard_assignments_give_mle():
    x = np.array([0.0, 1.0, 2.0, 10.0, 12.0, 11.0, 13.0])
    r = np.zeros((7, 2))
    r[:3, 0] = 1
    r[3:, 1] = 1
    mix = m_step(x, r)
    for comp, idx in zip(mix.components, (slice(0, 3), slice(3, 7))):
        ref = mle_gaussian(x[idx])
        assert comp.mu == pytest.approx(ref.mu) and comp.sigma == pytest.approx(ref.sigma)


def test_m_step_uniform_responsibilities():
    x = np.array([1.0, 4.0, 2.0, 8.0])
    mix = m_step(x, np.full((4, 2), 0.5))
    ref = mle_gaussian(x)
    for c in mix.components:
        assert c.mu == pytest.approx(ref.mu) and c.sigma == pytest.approx(ref.sigma)


def test_m_step_weight_flag():
    x = np.array([0.0, 1.0, 5.0, 6.0])
    r = np.array([[0.9, 0.1], [0.8, 0.2], [0.3, 0.7], [0.2, 0.8]])
    assert_allclose(m_step(x, r).weights, [0.5, 0.5])
    assert_allclose(m_step(x, r, weights=[0.3, 0.7]).weights, [0.3, 0.7])
    assert_allclose(m_step(x, r, weights_update=True).weights, [0.55, 0.45])


def test_m_step_variance_collapse():
    with pytest.raises(ComponentCollapse) as exc:
        m_step([2.0, 2.0, 5.0, 7.0], np.array([[1, 0], [1, 0], [0, 1], [0, 1]], dtype=float))
    assert exc.value.component == 0


def test_m_step_empty_component():
    with pytest.raises(ComponentCollapse) as exc:
        m_step([1.0, 2.0, 3.0], np.array([[1, 0], [1, 0], [1, 0]], dtype=float))
    assert exc.value.component == 1


# ---------------------------------------------------------------------------
# run_em


def test_loglik_monotone_random_inits(gpa):
    for seed in range(100):
        try:
            st_ = run_em(gpa, random_init(gpa, 2, seed), tol=1e-6)
        except ComponentCollapse as exc:
            trace = np.array(exc.state.loglik_trace)
        else:
            trace = np.array(st_.loglik_trace)
        assert np.all(np.diff(trace) >= -1e-10)


def test_loglik_monotone_with_weight_updates():
    x = TRUTH.sample(300, seed=8)
    st_ = run_em(x, random_init(x, 3, 7), tol=1e-8, weights_update=True)
    assert np.all(np.diff(st_.loglik_trace) >= -1e-10)
    assert sum(st_.mixture.weights) == pytest.approx(1.0, abs=1e-12)


def test_init_at_truth_converges_fast():
    x = TRUTH.sample(400, seed=3)
    st_ = run_em(x, TRUTH)
    assert st_.converged and st_.iteration < 60
    # one more EM sweep moves nothing beyond tol
    r, _ = e_step(x, st_.mixture)
    again = m_step(x, r)
    assert np.max(np.abs(again.params() - st_.mixture.params())) < 1e-4


def test_single_component_is_mle():
    x = np.array([0.5, 1.5, 2.0, 4.0, 3.3])
    init = GaussianMixture.from_params([1.0], [0.0], [1.0])
    st_ = run_em(x, init, max_iter=1)
    ref = mle_gaussian(x)
    assert st_.mixture.mus[0] == pytest.approx(ref.mu)
    assert st_.mixture.sigmas[0] == pytest.approx(ref.sigma)


def test_run_em_collapse_carries_state():
    x = np.array([0.0, 0.0, 0.0, 10.0, 10.5, 11.0])
    init = GaussianMixture.from_params([0.5, 0.5], [0.0, 10.5], [1e-3, 1.0])
    with pytest.raises(ComponentCollapse) as exc:
        run_em(x, init)
    assert exc.value.state.iteration >= 0
    assert len(exc.value.state.loglik_trace) >= 1


def test_max_iter_respected(gpa):
    st_ = run_em(gpa, random_init(gpa, 2, 0), tol=0.0, max_iter=5)
    assert st_.iteration == 5 and not st_.converged
    assert len(st_.loglik_trace) == 6


# ---------------------------------------------------------------------------
# evidence decomposition


def test_elbo_exact_posterior(gpa):
    r, ll = e_step(gpa, TRUTH)
    l, elbo, kl = evidence_decomposition(gpa, TRUTH, r)
    assert l == pytest.approx(ll)
    assert kl == pytest.approx(0.0, abs=1e-12)
    assert elbo == pytest.approx(ll, abs=1e-10)


def test_elbo_uniform_q(gpa):
    l, elbo, kl = evidence_decomposition(gpa, TRUTH, np.full((gpa.size, 2), 0.5))
    assert kl > 0
    assert abs(l - elbo - kl) < 1e-10


def test_elbo_identity_arbitrary_q(gpa):
    rng = make_rng(12)
    for _ in range(50):
        q = rng.dirichlet([0.5, 0.5], size=gpa.size)
        l, elbo, kl = evidence_decomposition(gpa, TRUTH, q)
        assert abs(l - (elbo + kl)) < 1e-10
        assert elbo <= l + 1e-12


# ---------------------------------------------------------------------------
# projections


def test_m_projection_saturated():
    p = DiscreteDistribution((0, 1, 2), [0.2, 0.5, 0.3])
    proj = m_projection(p, SaturatedFamily())
    assert proj.kl == 0.0 and proj.member is p


def test_m_projection_boltzmann_mean_and_minimality():
    p = DiscreteDistribution((0, 1, 2), [0.5, 0.3, 0.2])
    proj = m_projection(p, BoltzmannFamily([lambda x: x]))
    assert proj.member.mean() == pytest.approx(0.7, abs=1e-9)
    # grid over lambda: the projection attains the smallest KL
    best = min(
        kl_divergence(p, np.exp(-lam * np.arange(3)) / np.exp(-lam * np.arange(3)).sum())
        for lam in np.arange(-3, 3, 1e-3)
    )
    assert proj.kl <= best + 1e-12


def test_m_projection_gaussian_is_mle():
    x = TRUTH.sample(300, seed=2)
    proj = m_projection(DiscreteDistribution.empirical(x), GaussianFamily())
    ref = mle_gaussian(x)
    assert proj.member.mu == pytest.approx(ref.mu) and proj.member.sigma == pytest.approx(ref.sigma)


def test_m_projection_unsupported():
    with pytest.raises(UnsupportedModel):
        m_projection(DiscreteDistribution.uniform([0, 1]), object())


def test_e_projection_matches_e_step(gpa):
    p_hat = DiscreteDistribution.empirical(gpa)
    ep = e_projection(gmm_joint_family(TRUTH), p_hat)
    r, _ = e_step(np.array(ep.support), TRUTH)
    assert_allclose(ep.conditionals, r, atol=1e-12)


def test_e_projection_uses_model_conditionals(gpa):
    mix = random_init(gpa, 2, 4)
    model = gmm_joint_family(mix)
    ep = e_projection(model, DiscreteDistribution.empirical(gpa))
    for i, x in enumerate(ep.support):
        cond = conditional_of_exponential_family(model, x)
        assert_allclose(ep.conditionals[i], cond.probs(), atol=1e-12)
        assert ep.log_normalizers[i] == pytest.approx(cond.log_partition_value(), abs=1e-12)


def test_e_projection_rejects_hidden_base_measure():
    joint = JointExponentialFamily(
        base_measure=lambda x, z: 1.0 + z,
        visible_stat=lambda x: np.zeros(0),
        hidden_stat=lambda x, z: np.array([z]),
        theta_visible=[],
        theta_hidden=[0.1],
        hidden_support=(0, 1),
        log_partition=0.0,
    )
    with pytest.raises(UnsupportedModel):
        e_projection(joint, DiscreteDistribution.uniform([0.0, 1.0]))


def test_e_projection_of_model_marginal_is_model_joint():
    joint = JointExponentialFamily(
        base_measure=lambda x: 1.0,
        visible_stat=lambda x: np.array([x]),
        hidden_stat=lambda x, z: np.array([z, z * x]),
        theta_visible=[0.3],
        theta_hidden=[-0.2, 0.8],
        hidden_support=(0, 1),
        visible_support=(0.0, 1.0, 2.0),
    )
    ep = e_projection(joint, joint.marginal_visible())
    assert_allclose(ep.joint, joint.joint_table(), atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_e_projection_keeps_hidden_parameter(seed, gpa):
    init = random_init(gpa, 2, seed)
    model = gmm_joint_family(init)
    ep = e_projection(model, DiscreteDistribution.empirical(gpa))
    assert np.max(np.abs(ep.theta_hidden - model.theta_hidden)) < 1e-12
    theta, D = recover_hidden_parameter(ep)
    assert np.max(np.abs(D @ (theta - model.theta_hidden))) < 1e-9


def test_e_projection_idempotent(gpa):
    p_hat = DiscreteDistribution.empirical(gpa)
    first = e_projection(gmm_joint_family(TRUTH), p_hat)
    second = e_projection(first.as_model(), p_hat)
    assert_allclose(second.joint, first.joint, atol=1e-12)
    assert np.max(np.abs(second.theta_hidden - first.theta_hidden)) < 1e-12


# ---------------------------------------------------------------------------
# geometric em


@pytest.mark.parametrize("seed", [0, 1, 5, 9])
def test_geometric_matches_classic(seed, gpa):
    init = random_init(gpa, 2, seed)
    try:
        classic = run_em(gpa, init)
    except ComponentCollapse:
        pytest.skip("init collapses under both algorithms")
    geo = run_em_geometric(gpa, init)
    assert geo.iterations == classic.iteration
    assert_allclose(geo.mixture.params(), classic.mixture.params(), atol=1e-8)
    for a, b in zip(geo.trajectory, classic.trajectory):
        assert_allclose(a.theta, b, atol=1e-8)


def test_geometric_with_weight_updates():
    x = TRUTH.sample(200, seed=1)
    init = random_init(x, 2, 4)
    classic = run_em(x, init, weights_update=True)
    geo = run_em_geometric(x, init, weights_update=True)
    assert_allclose(geo.mixture.params(), classic.mixture.params(), atol=1e-6)


def test_geometric_kl_trace(gpa):
    init = random_init(gpa, 2, 3)
    geo = run_em_geometric(gpa, init)
    classic = run_em(gpa, init)
    kl = geo.kl_trace
    assert np.all(np.diff(kl) <= 1e-10)
    # KL(q || p) = -H(p_hat) - loglik / n; clipped ties make H(p_hat) < log n
    offset = kl + np.array(classic.loglik_trace) / gpa.size
    assert_allclose(offset, -entropy(DiscreteDistribution.empirical(gpa)), atol=1e-10)
    assert -offset[0] < math.log(gpa.size)


def test_geometric_fixed_point():
    x = TRUTH.sample(400, seed=3)
    conv = run_em(x, TRUTH, tol=1e-10).mixture
    geo = run_em_geometric(x, conv, tol=1e-6)
    assert geo.iterations == 1 and geo.converged


# ---------------------------------------------------------------------------
# linearity of the conditional expectation


def test_linearity_affine():
    r = make_rng(4).normal(size=(500, 2))
    B = np.array([[1.0, 2.0], [-0.5, 3.0]])
    rep = linearity_equivalence_check(lambda v: 0.7 + B @ v, r)
    assert rep.equivalent and rep.gap < 1e-10


def test_linearity_binary():
    y = make_rng(5).integers(0, 2, size=1000).astype(float)
    f = lambda v: np.exp(3 * v) - v**3
    s = binary_linearization(f)
    assert_allclose([s(0.0), s(1.0)], [f(0.0), f(1.0)])
    assert linearity_equivalence_check(s, y).gap < 1e-10


def test_linearity_square_gap_is_variance():
    r = make_rng(6).normal(2.0, 1.5, size=2000)
    rep = linearity_equivalence_check(lambda v: v * v, r)
    assert rep.gap == pytest.approx(np.var(r), rel=1e-10)
    assert not rep.equivalent
