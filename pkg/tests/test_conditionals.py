"""Every full conditional against an independent brute-force density oracle.

The shape tests compare differences of the brute-force log joint (scipy
densities, dense kernels) against differences of the closed-form
conditional's log density over a grid or a point cloud; agreement within
1e-6 on the log scale is relative agreement of the densities to the same
order.
"""

import numpy as np
import pytest
from scipy.stats import beta as beta_dist
from scipy.stats import dirichlet as dirichlet_dist
from scipy.stats import invgamma, invwishart, multivariate_normal, norm

from spatnet.core import Hyperparameters, kernel_matrix, upper_triangle
from spatnet.gibbs import (
    cond_decay,
    cond_gamma_y,
    cond_gamma_z,
    cond_incl_prob,
    cond_mu_y,
    cond_mu_z,
    cond_node_active,
    cond_node_latent,
    cond_rank_sign,
    cond_rank_sign_probs,
    cond_slab_cov,
    cond_tau_y2,
    cond_tau_z2,
)

from conftest import make_data, make_state
from oracles import (
    log_joint,
    node_active_oracle_dense,
    node_latent_oracle,
)

LOG_TOL = 1e-6


@pytest.fixture(scope="module")
def instance():
    data, _, _ = make_data(n=3, v=4, q=2, seed=21, decay=0.3)
    hyper = Hyperparameters(
        rank=2,
        decay_grid=np.array([0.15, 0.3, 0.8]),
        iterations=4,
        burnin=2,
        kernel_jitter=0.0,
        var_shape=2.5,
        var_rate=1.5,
        slab_df=5.0,
        incl_a=1.5,
        incl_b=2.0,
    ).validate()
    state = make_state(data, hyper, seed=13)
    kernels = [kernel_matrix(data.coords, d, 0.0) for d in hyper.decay_grid]
    kernel = kernels[1]
    return data, hyper, state.with_(decay=float(hyper.decay_grid[1])), kernels, kernel


def log_joint_diffs(data, hyper, state, field, values, prior_var=None):
    base = log_joint(data, state, hyper, prior_var)
    return np.array(
        [log_joint(data, state.with_(**{field: v}), hyper, prior_var) - base for v in values]
    )


# ---------------------------------------------------------------------------
# Gaussian scalar conditionals
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("prior_var", [None, 1.0])
def test_mu_y_matches_brute_force(instance, prior_var):
    data, hyper, state, _, _ = instance
    mean, var = cond_mu_y(data, state, prior_var)
    grid = mean + np.sqrt(var) * np.linspace(-4, 4, 21)
    brute = log_joint_diffs(data, hyper, state, "mu_y", grid, prior_var)
    closed = norm.logpdf(grid, mean, np.sqrt(var)) - norm.logpdf(
        state.mu_y, mean, np.sqrt(var)
    )
    assert np.allclose(brute, closed, atol=LOG_TOL)


@pytest.mark.parametrize("prior_var", [None, 1.0])
def test_mu_z_matches_brute_force(instance, prior_var):
    data, hyper, state, _, kernel = instance
    mean, var = cond_mu_z(data, state, kernel, prior_var)
    grid = mean + np.sqrt(var) * np.linspace(-4, 4, 21)
    brute = log_joint_diffs(data, hyper, state, "mu_z", grid, prior_var)
    closed = norm.logpdf(grid, mean, np.sqrt(var)) - norm.logpdf(
        state.mu_z, mean, np.sqrt(var)
    )
    assert np.allclose(brute, closed, atol=LOG_TOL)


@pytest.mark.parametrize("prior_var", [None, 1.0])
def test_gamma_y_matches_brute_force(instance, prior_var):
    data, hyper, state, _, _ = instance
    mean, cov = cond_gamma_y(data, state, prior_var)
    gen = np.random.default_rng(3)
    points = mean + gen.standard_normal((12, 2)) @ np.linalg.cholesky(cov).T
    brute = log_joint_diffs(data, hyper, state, "gamma_y", points, prior_var)
    mvn = multivariate_normal(mean=mean, cov=cov)
    closed = mvn.logpdf(points) - mvn.logpdf(state.gamma_y)
    assert np.allclose(brute, closed, atol=LOG_TOL)


@pytest.mark.parametrize("prior_var", [None, 1.0])
def test_gamma_z_matches_brute_force(instance, prior_var):
    data, hyper, state, _, kernel = instance
    mean, cov = cond_gamma_z(data, state, kernel, prior_var)
    gen = np.random.default_rng(4)
    points = mean + gen.standard_normal((12, 2)) @ np.linalg.cholesky(cov).T
    brute = log_joint_diffs(data, hyper, state, "gamma_z", points, prior_var)
    mvn = multivariate_normal(mean=mean, cov=cov)
    closed = mvn.logpdf(points) - mvn.logpdf(state.gamma_z)
    assert np.allclose(brute, closed, atol=LOG_TOL)


# ---------------------------------------------------------------------------
# Variance conditionals
# ---------------------------------------------------------------------------


def test_tau_y2_matches_brute_force(instance):
    data, hyper, state, _, _ = instance
    shape, rate = cond_tau_y2(data, state, hyper)
    grid = rate / shape * np.exp(np.linspace(-1.5, 1.5, 15))
    brute = log_joint_diffs(data, hyper, state, "tau_y2", grid)
    closed = invgamma.logpdf(grid, shape, scale=rate) - invgamma.logpdf(
        state.tau_y2, shape, scale=rate
    )
    assert np.allclose(brute, closed, atol=LOG_TOL)


def test_tau_z2_matches_brute_force(instance):
    data, hyper, state, _, kernel = instance
    shape, rate = cond_tau_z2(data, state, hyper, kernel)
    grid = rate / shape * np.exp(np.linspace(-1.5, 1.5, 15))
    brute = log_joint_diffs(data, hyper, state, "tau_z2", grid)
    closed = invgamma.logpdf(grid, shape, scale=rate) - invgamma.logpdf(
        state.tau_z2, shape, scale=rate
    )
    assert np.allclose(brute, closed, atol=LOG_TOL)


# ---------------------------------------------------------------------------
# Inclusion probability, slab covariance, sign probabilities
# ---------------------------------------------------------------------------


def test_incl_prob_matches_brute_force(instance):
    data, hyper, state, _, _ = instance
    a_post, b_post = cond_incl_prob(state, hyper)
    grid = np.linspace(0.05, 0.95, 19)
    brute = log_joint_diffs(data, hyper, state, "incl_prob", grid)
    closed = beta_dist.logpdf(grid, a_post, b_post) - beta_dist.logpdf(
        state.incl_prob, a_post, b_post
    )
    assert np.allclose(brute, closed, atol=LOG_TOL)


def test_slab_cov_matches_brute_force(instance):
    data, hyper, state, _, _ = instance
    df, scale = cond_slab_cov(state, hyper)
    gen = np.random.default_rng(6)
    points = []
    for _ in range(8):
        half = gen.standard_normal((3, 3)) * 0.5
        points.append(half @ half.T + 0.5 * np.eye(3))
    brute = log_joint_diffs(data, hyper, state, "slab_cov", points)
    closed = np.array(
        [
            invwishart.logpdf(p, df, scale) - invwishart.logpdf(state.slab_cov, df, scale)
            for p in points
        ]
    )
    assert np.allclose(brute, closed, atol=LOG_TOL)


def test_rank_sign_probs_matches_brute_force(instance):
    data, hyper, state, _, _ = instance
    gen = np.random.default_rng(7)
    for r in range(hyper.rank):
        conc = cond_rank_sign_probs(r, state, hyper)
        points = gen.dirichlet(np.ones(3), size=8) * 0.98 + 0.02 / 3
        probs = state.rank_sign_probs.copy()
        diffs = []
        base = log_joint(data, state, hyper)
        for p in points:
            probs[r] = p
            diffs.append(
                log_joint(data, state.with_(rank_sign_probs=probs.copy()), hyper) - base
            )
        closed = dirichlet_dist.logpdf(points.T, conc) - dirichlet_dist.logpdf(
            state.rank_sign_probs[r], conc
        )
        assert np.allclose(diffs, closed, atol=LOG_TOL)


def test_rank_sign_probs_increments_exactly_one_component(instance):
    data, hyper, state, _, _ = instance
    for r in range(hyper.rank):
        for sign in (-1, 0, 1):
            signs = state.rank_signs.copy()
            signs[r] = sign
            conc = cond_rank_sign_probs(r, state.with_(rank_signs=signs), hyper)
            prior = np.array([(r + 1) ** hyper.shrink_exp, 1.0, 1.0])
            assert np.sum(conc - prior) == 1.0


def test_rank_sign_probs_arithmetic():
    hyper = Hyperparameters(rank=3, shrink_exp=2.0, decay_grid=np.array([0.5]))
    data, _, _ = make_data(n=2, v=3, q=0, seed=1)
    state = make_state(data, hyper, seed=1)
    signs = state.rank_signs.copy()
    signs[0], signs[2] = 0, 1
    state = state.with_(rank_signs=signs)
    assert np.array_equal(cond_rank_sign_probs(0, state, hyper), [2.0, 1.0, 1.0])
    assert np.array_equal(cond_rank_sign_probs(2, state, hyper), [9.0, 2.0, 1.0])


# ---------------------------------------------------------------------------
# Rank sign conditional
# ---------------------------------------------------------------------------


def test_rank_sign_matches_brute_force(instance):
    data, hyper, state, _, _ = instance
    for r in range(hyper.rank):
        triple = cond_rank_sign(r, data, state)
        logs = []
        for c in (0, 1, -1):
            signs = state.rank_signs.copy()
            signs[r] = c
            logs.append(log_joint(data, state.with_(rank_signs=signs), hyper))
        logs = np.asarray(logs)
        brute = np.exp(logs - logs.max())
        brute /= brute.sum()
        assert np.allclose(triple, brute, rtol=1e-6, atol=1e-12)


def test_rank_sign_zero_factors_returns_prior(instance):
    data, hyper, state, _, _ = instance
    latents = state.latents.copy()
    latents[:, 1] = 0.0  # kill factor dimension 0
    triple = cond_rank_sign(0, data, state.with_(latents=latents))
    assert np.allclose(triple, state.rank_sign_probs[0], atol=1e-12)


def test_rank_sign_point_mass_prior(instance):
    data, hyper, state, _, _ = instance
    probs = state.rank_sign_probs.copy()
    probs[1] = [1.0, 0.0, 0.0]
    triple = cond_rank_sign(1, data, state.with_(rank_sign_probs=probs))
    assert np.array_equal(triple, [1.0, 0.0, 0.0])


def test_rank_sign_invariant_to_common_loglik_shift(instance):
    # scaling the noise variance rescales all candidate log-likelihoods by
    # the same constant only through the shared quadratic term; adding a
    # common shift must not change the probabilities, which is what the
    # log-space normalization guarantees
    data, hyper, state, _, _ = instance
    triple = cond_rank_sign(0, data, state)
    assert triple.sum() == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# Node latent and inclusion conditionals
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("whiten", [False, True])
def test_node_latent_matches_quadratic_oracle(instance, whiten):
    data, hyper, state, _, kernel = instance
    for v in range(data.n_nodes):
        mean, cov = cond_node_latent(v, data, state, kernel, whiten=whiten)
        omean, ocov = node_latent_oracle(v, data, state, hyper, whiten)
        assert np.allclose(mean, omean, atol=1e-7)
        assert np.allclose(cov, ocov, atol=1e-7)


def test_node_latent_no_information_returns_prior(instance):
    data, hyper, state, _, kernel = instance
    flat = data.predictor * 0.0
    from spatnet.core import Dataset

    quiet = Dataset(
        data.networks, data.attributes, flat, data.auxiliaries, data.coords
    ).validate()
    for whiten in (False, True):
        mean, cov = cond_node_latent(1, quiet, state, kernel, whiten=whiten)
        assert np.allclose(mean, 0.0, atol=1e-12)
        assert np.allclose(cov, state.slab_cov, atol=1e-10)


def test_node_latent_zero_signs_block_structure(instance):
    # with all rank signs zero the edge rows carry no information: the
    # factor block reverts to the prior conditional given the attribute row
    data, hyper, state, _, kernel = instance
    state0 = state.with_(rank_signs=np.zeros(hyper.rank, dtype=np.int64))
    mean, cov = cond_node_latent(0, data, state0, kernel, whiten=False)
    x = data.predictor
    sxx = float(x @ x)
    zres = data.attributes[:, 0] - state0.mu_z - data.auxiliaries @ state0.gamma_z
    prec = np.linalg.inv(state0.slab_cov)
    prec[0, 0] += sxx / state0.tau_z2
    lin = np.zeros(3)
    lin[0] = float(x @ zres) / state0.tau_z2
    expect_cov = np.linalg.inv(prec)
    assert np.allclose(cov, expect_cov, atol=1e-10)
    assert np.allclose(mean, expect_cov @ lin, atol=1e-10)


@pytest.mark.parametrize("whiten", [False, True])
def test_node_active_matches_dense_oracle(instance, whiten):
    data, hyper, state, _, kernel = instance
    for v in range(data.n_nodes):
        prob = cond_node_active(v, data, state, kernel, whiten=whiten)
        oracle = node_active_oracle_dense(v, data, state, whiten)
        assert prob == pytest.approx(oracle, abs=1e-8)


def test_node_active_degenerate_inclusion(instance):
    data, hyper, state, _, kernel = instance
    assert cond_node_active(0, data, state.with_(incl_prob=1e-300), kernel) < 1e-250
    lo = state.with_(incl_prob=np.nextafter(0.0, 1.0))
    hi = state.with_(incl_prob=np.nextafter(1.0, 0.0))
    assert cond_node_active(0, data, lo, kernel) == pytest.approx(0.0, abs=1e-12)
    assert cond_node_active(0, data, hi, kernel) == pytest.approx(1.0, abs=1e-12)


def test_node_active_uninformative_data_returns_incl_prob(instance):
    data, hyper, state, _, kernel = instance
    from spatnet.core import Dataset

    quiet = Dataset(
        data.networks, data.attributes, data.predictor * 0.0, data.auxiliaries, data.coords
    ).validate()
    for whiten in (False, True):
        prob = cond_node_active(2, quiet, state, kernel, whiten=whiten)
        assert prob == pytest.approx(state.incl_prob, abs=1e-12)


def test_node_conditionals_small_dense_case():
    # n=2, V=3, rank=1 explicit stacked-Gaussian oracle
    data, _, _ = make_data(n=2, v=3, q=1, seed=33, decay=0.4)
    hyper = Hyperparameters(
        rank=1, decay_grid=np.array([0.4]), iterations=2, burnin=1, kernel_jitter=0.0
    )
    state = make_state(data, hyper, seed=17).with_(decay=0.4)
    kernel = kernel_matrix(data.coords, 0.4, 0.0)
    for v in range(3):
        for whiten in (False, True):
            prob = cond_node_active(v, data, state, kernel, whiten=whiten)
            assert prob == pytest.approx(
                node_active_oracle_dense(v, data, state, whiten), abs=1e-8
            )
            mean, cov = cond_node_latent(v, data, state, kernel, whiten=whiten)
            omean, ocov = node_latent_oracle(v, data, state, hyper, whiten)
            assert np.allclose(mean, omean, atol=1e-8)
            assert np.allclose(cov, ocov, atol=1e-8)


# ---------------------------------------------------------------------------
# Decay conditional
# ---------------------------------------------------------------------------


def test_decay_matches_brute_force(instance):
    data, hyper, state, kernels, _ = instance
    probs = cond_decay(data, state, kernels)
    logs = np.array(
        [
            log_joint(data, state.with_(decay=float(d)), hyper)
            for d in hyper.decay_grid
        ]
    )
    brute = np.exp(logs - logs.max())
    brute /= brute.sum()
    assert np.allclose(probs, brute, rtol=1e-6, atol=1e-12)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_decay_single_grid_point(instance):
    data, hyper, state, kernels, _ = instance
    assert np.array_equal(cond_decay(data, state, kernels[:1]), [1.0])


# ---------------------------------------------------------------------------
# Spec arithmetic examples
# ---------------------------------------------------------------------------


def test_mu_y_zero_residual_example():
    # n=2, V=3 (h=3), everything zero, tau_y2=1 -> (0, 1/6)
    data, _, _ = make_data(n=2, v=3, q=0, seed=2)
    nets = np.zeros_like(data.networks)
    from spatnet.core import Dataset

    zero = Dataset(nets, data.attributes, data.predictor, data.auxiliaries, data.coords)
    hyper = Hyperparameters(rank=2, decay_grid=np.array([0.5]))
    state = make_state(zero, hyper, seed=3).with_(
        tau_y2=1.0,
        latents=np.zeros((3, 3)),
        active=np.ones(3, dtype=np.int64),
        gamma_y=np.zeros(0),
        gamma_z=np.zeros(0),
    )
    mean, var = cond_mu_y(zero, state)
    assert mean == pytest.approx(0.0, abs=1e-15)
    assert var == pytest.approx(1.0 / 6.0)


def test_mu_y_single_edge_example():
    # n=1, V=2 (h=1), y(1,2)=2, everything else zero -> (2, 1)
    from spatnet.core import Dataset

    nets = np.array([[[0.0, 2.0], [2.0, 0.0]]])
    data = Dataset(
        networks=nets,
        attributes=np.zeros((1, 2)),
        predictor=np.array([0.7]),
        auxiliaries=np.zeros((1, 0)),
        coords=np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
    ).validate()
    hyper = Hyperparameters(rank=1, decay_grid=np.array([0.5]))
    state = make_state(data, hyper, seed=4).with_(
        tau_y2=1.0,
        latents=np.zeros((2, 2)),
        active=np.ones(2, dtype=np.int64),
        gamma_y=np.zeros(0),
        gamma_z=np.zeros(0),
    )
    mean, var = cond_mu_y(data, state)
    assert mean == pytest.approx(2.0)
    assert var == pytest.approx(1.0)


def test_mu_y_translation_equivariance(instance):
    data, hyper, state, _, _ = instance
    from spatnet.core import Dataset

    mean0, _ = cond_mu_y(data, state)
    shifted = Dataset(
        data.networks + 3.5 * (1 - np.eye(data.n_nodes)),
        data.attributes,
        data.predictor,
        data.auxiliaries,
        data.coords,
    ).validate()
    mean1, _ = cond_mu_y(shifted, state)
    assert mean1 - mean0 == pytest.approx(3.5, abs=1e-10)


def test_mu_z_identity_kernel_reduction(instance):
    # with the identity kernel the GLS intercept is the plain average of
    # attribute residuals, the attribute analogue of the network intercept
    data, hyper, state, _, _ = instance
    from spatnet.core import identity_kernel

    kern = identity_kernel(data.n_nodes)
    mean, var = cond_mu_z(data, state, kern)
    resid = (
        data.attributes
        - np.outer(data.predictor, state.attr_coef)
        - (data.auxiliaries @ state.gamma_z)[:, None]
    )
    assert mean == pytest.approx(resid.mean(), abs=1e-12)
    assert var == pytest.approx(state.tau_z2 / resid.size, abs=1e-15)


def test_mu_z_zero_residuals(instance):
    data, hyper, state, _, kernel = instance
    from spatnet.core import Dataset

    attrs = (
        state.mu_z * 0.0
        + np.outer(data.predictor, state.attr_coef)
        + (data.auxiliaries @ state.gamma_z)[:, None]
    )
    exact = Dataset(data.networks, attrs, data.predictor, data.auxiliaries, data.coords)
    mean, _ = cond_mu_z(exact, state, kernel)
    assert mean == pytest.approx(0.0, abs=1e-12)


def test_gamma_y_constant_auxiliary_variance():
    # q=1 with w_i = 1 for all subjects: covariance = tau_y2 / (h n)
    from spatnet.core import Dataset

    data, _, _ = make_data(n=4, v=3, q=1, seed=5)
    ones = Dataset(
        data.networks, data.attributes, data.predictor, np.ones((4, 1)), data.coords
    ).validate()
    hyper = Hyperparameters(rank=2, decay_grid=np.array([0.5]))
    state = make_state(ones, hyper, seed=5)
    _, cov = cond_gamma_y(ones, state)
    assert cov[0, 0] == pytest.approx(state.tau_y2 / (3 * 4))


def test_gamma_y_orthogonal_residuals_zero_mean(instance):
    data, hyper, state, _, _ = instance
    from spatnet.core import Dataset, symmetric_from_upper

    edge = upper_triangle(state.edge_coef())
    nets = symmetric_from_upper(
        state.mu_y + np.outer(data.predictor, edge), data.n_nodes
    )
    exact = Dataset(nets, data.attributes, data.predictor, data.auxiliaries, data.coords)
    mean, _ = cond_gamma_y(exact, state)
    assert np.allclose(mean, 0.0, atol=1e-10)


def test_gamma_singular_gram_rejected():
    from spatnet.core import Dataset, ValidationError

    data, _, _ = make_data(n=3, v=3, q=2, seed=6)
    collinear = np.column_stack([data.auxiliaries[:, 0], data.auxiliaries[:, 0]])
    bad = Dataset(
        data.networks, data.attributes, data.predictor, collinear, data.coords
    ).validate()
    hyper = Hyperparameters(rank=2, decay_grid=np.array([0.5]))
    state = make_state(bad, hyper, seed=6)
    with pytest.raises(ValidationError, match="more subjects or"):
        cond_gamma_y(bad, state)


def test_tau_zero_residuals_prior_refresh(instance):
    data, hyper, state, _, kernel = instance
    from spatnet.core import Dataset, symmetric_from_upper

    edge = upper_triangle(state.edge_coef())
    nets = symmetric_from_upper(
        state.mu_y
        + np.outer(data.predictor, edge)
        + (data.auxiliaries @ state.gamma_y)[:, None],
        data.n_nodes,
    )
    attrs = (
        state.mu_z
        + np.outer(data.predictor, state.attr_coef)
        + (data.auxiliaries @ state.gamma_z)[:, None]
    )
    exact = Dataset(nets, attrs, data.predictor, data.auxiliaries, data.coords)
    shape_y, rate_y = cond_tau_y2(exact, state, hyper)
    assert shape_y == hyper.var_shape + 3 * 6 / 2
    assert rate_y == pytest.approx(hyper.var_rate, abs=1e-12)
    shape_z, rate_z = cond_tau_z2(exact, state, hyper, kernel)
    assert shape_z == hyper.var_shape + 3 * 4 / 2
    assert rate_z == pytest.approx(hyper.var_rate, abs=1e-12)


def test_tau_z2_identity_kernel_is_sum_of_squares(instance):
    data, hyper, state, _, _ = instance
    from spatnet.core import attribute_residuals, identity_kernel

    _, rate = cond_tau_z2(data, state, hyper, identity_kernel(data.n_nodes))
    resid = attribute_residuals(data, state)
    assert rate == pytest.approx(hyper.var_rate + 0.5 * np.sum(resid**2))


def test_incl_prob_arithmetic():
    data, _, _ = make_data(n=2, v=3, q=0, seed=7)
    hyper = Hyperparameters(rank=2, decay_grid=np.array([0.5]), incl_a=1.0, incl_b=1.0)
    state = make_state(data, hyper, seed=7)
    all_off = state.with_(
        active=np.zeros(3, dtype=np.int64), latents=np.zeros_like(state.latents)
    )
    assert cond_incl_prob(all_off, hyper) == (1.0, 4.0)
    all_on = state.with_(active=np.ones(3, dtype=np.int64))
    assert cond_incl_prob(all_on, hyper) == (4.0, 1.0)
    # V=20 with 7 active and unit Beta prior -> (8, 14)
    wide, _, _ = make_data(n=2, v=20, q=0, seed=8)
    state20 = make_state(wide, hyper, seed=8)
    active = np.zeros(20, dtype=np.int64)
    active[:7] = 1
    latents = state20.latents.copy()
    latents[active == 0] = 0.0
    assert cond_incl_prob(state20.with_(active=active, latents=latents), hyper) == (8.0, 14.0)


def test_slab_cov_cases(instance):
    data, hyper, state, _, _ = instance
    empty = state.with_(
        active=np.zeros(data.n_nodes, dtype=np.int64),
        latents=np.zeros_like(state.latents),
    )
    df, scale = cond_slab_cov(empty, hyper)
    assert df == hyper.slab_df
    assert np.array_equal(scale, hyper.slab_scale)

    one = np.zeros(data.n_nodes, dtype=np.int64)
    one[2] = 1
    latents = np.zeros_like(state.latents)
    latents[2, 0] = 1.0  # unit vector along the attribute coordinate
    df, scale = cond_slab_cov(state.with_(active=one, latents=latents), hyper)
    expected = hyper.slab_scale.copy()
    expected[0, 0] += 1.0
    assert df == hyper.slab_df + 1
    assert np.array_equal(scale, expected)
    np.linalg.cholesky(scale)
