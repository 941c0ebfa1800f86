"""Gibbs sampler: closed-form full-conditional updates composed into sweeps.

Every parameter block has a deterministic conditional-parameter function
(cond_*) that is testable against brute-force density evaluation, and the
sweep draws from those conditionals in a fixed scan order. The node
latent/indicator pair is drawn jointly: the indicator from its marginal
with the latent vector integrated out (via the matrix-determinant lemma and
Woodbury identity on the small latent dimension), then the latent vector
from the slab or set to zero.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.special import expit

from .core import (
    Chain,
    ModelState,
    NumericalError,
    ValidationError,
    attribute_residuals,
    dataset_fingerprint,
    identity_kernel,
    kernel_matrix,
    network_residuals,
    symmetric_from_upper,
    upper_triangle,
)
from .rng import (
    Rng,
    bernoulli_draw,
    beta_draw,
    categorical_draw,
    dirichlet_draw,
    inv_gamma_draw,
    inv_wishart_draw,
    log_normalize,
    mvn_draw,
    normal_draw,
)

__all__ = [
    "SweepPlan",
    "cond_mu_y",
    "cond_mu_z",
    "cond_gamma_y",
    "cond_gamma_z",
    "cond_tau_y2",
    "cond_tau_z2",
    "cond_incl_prob",
    "cond_slab_cov",
    "cond_rank_sign_probs",
    "cond_rank_sign",
    "cond_node_latent",
    "cond_node_active",
    "cond_decay",
    "initial_state",
    "sweep",
    "run_chain",
]

SIGN_VALUES = (0, 1, -1)  # column order of rank_sign_probs and sign triples


# ---------------------------------------------------------------------------
# Scalar and vector conditionals
# ---------------------------------------------------------------------------


def cond_mu_y(data, state, mean_prior_var=None):
    """Gaussian conditional (mean, variance) of the network intercept."""
    n, h = data.n_subjects, data.n_edges
    edge_ut = upper_triangle(state.edge_coef())
    resid = (
        data.networks_upper
        - np.outer(data.predictor, edge_ut)
        - (data.auxiliaries @ state.gamma_y)[:, None]
    )
    precision = n * h / state.tau_y2
    linear = resid.sum() / state.tau_y2
    if mean_prior_var is not None:
        precision += 1.0 / mean_prior_var
    return linear / precision, 1.0 / precision


def cond_mu_z(data, state, kernel, mean_prior_var=None):
    """GLS conditional (mean, variance) of the attribute intercept."""
    n = data.n_subjects
    resid = (
        data.attributes
        - np.outer(data.predictor, state.attr_coef)
        - (data.auxiliaries @ state.gamma_z)[:, None]
    )
    s = kernel.one_inv_one
    precision = n * s / state.tau_z2
    linear = float((resid @ kernel.inv_one).sum()) / state.tau_z2
    if mean_prior_var is not None:
        precision += 1.0 / mean_prior_var
    return linear / precision, 1.0 / precision


def _aux_gram_chol(data, scale, mean_prior_var):
    gram = data.auxiliaries.T @ data.auxiliaries
    precision = scale * gram
    if mean_prior_var is not None:
        precision = precision + np.eye(data.n_aux) / mean_prior_var
    try:
        return cholesky(precision, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValidationError(
            "auxiliary Gram matrix is singular; collect more subjects or "
            "drop redundant auxiliary predictors"
        ) from exc


def cond_gamma_y(data, state, mean_prior_var=None):
    """Gaussian conditional (mean, covariance) of the network auxiliary coefficients."""
    h = data.n_edges
    edge_ut = upper_triangle(state.edge_coef())
    resid = data.networks_upper - state.mu_y - np.outer(data.predictor, edge_ut)
    linear = data.auxiliaries.T @ resid.sum(axis=1) / state.tau_y2
    chol = _aux_gram_chol(data, h / state.tau_y2, mean_prior_var)
    cov = cho_solve((chol, True), np.eye(data.n_aux))
    return cov @ linear, cov


def cond_gamma_z(data, state, kernel, mean_prior_var=None):
    """GLS conditional (mean, covariance) of the attribute auxiliary coefficients."""
    resid = data.attributes - state.mu_z - np.outer(data.predictor, state.attr_coef)
    weighted = resid @ kernel.inv_one
    linear = data.auxiliaries.T @ weighted / state.tau_z2
    chol = _aux_gram_chol(data, kernel.one_inv_one / state.tau_z2, mean_prior_var)
    cov = cho_solve((chol, True), np.eye(data.n_aux))
    return cov @ linear, cov


def cond_tau_y2(data, state, hyper):
    """Inverse-gamma conditional (shape, rate) of the edge noise variance."""
    resid = network_residuals(data, state)
    shape = hyper.var_shape + data.n_subjects * data.n_edges / 2.0
    rate = hyper.var_rate + 0.5 * float(np.sum(resid * resid))
    return shape, rate


def cond_tau_z2(data, state, hyper, kernel):
    """Inverse-gamma conditional (shape, rate) of the attribute spatial variance."""
    resid = attribute_residuals(data, state)
    shape = hyper.var_shape + data.n_subjects * data.n_nodes / 2.0
    rate = hyper.var_rate + 0.5 * kernel.quad_form(resid)
    return shape, rate


def cond_incl_prob(state, hyper):
    """Beta conditional (a, b) of the node inclusion probability."""
    k = int(np.sum(state.active))
    return hyper.incl_a + k, hyper.incl_b + state.active.shape[0] - k


def cond_slab_cov(state, hyper):
    """Inverse-Wishart conditional (df, scale) of the slab covariance."""
    mask = state.active == 1
    scatter = state.latents[mask].T @ state.latents[mask]
    return hyper.slab_df + int(mask.sum()), hyper.slab_scale + scatter


def cond_rank_sign_probs(r, state, hyper):
    """Dirichlet concentration triple for rank r (0-based index).

    The shrinkage concentration uses the 1-based rank position, so higher
    ranks are pulled harder toward the zero sign.
    """
    sign = int(state.rank_signs[r])
    return np.array(
        [
            (r + 1) ** hyper.shrink_exp + (sign == 0),
            1.0 + (sign == 1),
            1.0 + (sign == -1),
        ]
    )


def cond_rank_sign(r, data, state):
    """Probability triple over sign candidates (0, +1, -1) for rank r.

    The network likelihood under each candidate differs only through the
    rank-r layer of the edge coefficients, so the three candidates share
    one residual base and each costs O(n_subjects * n_edges).
    """
    x = data.predictor
    sxx = float(x @ x)
    factors = state.factors
    layer = upper_triangle(np.outer(factors[:, r], factors[:, r]))
    edge_ut = upper_triangle(state.edge_coef())
    base = edge_ut - state.rank_signs[r] * layer
    resid = (
        data.networks_upper
        - state.mu_y
        - (data.auxiliaries @ state.gamma_y)[:, None]
        - np.outer(x, base)
    )
    cross = float(x @ (resid @ layer))
    square = sxx * float(layer @ layer)
    log_weights = np.empty(3)
    with np.errstate(divide="ignore"):
        log_prior = np.log(state.rank_sign_probs[r])
    for j, c in enumerate(SIGN_VALUES):
        log_weights[j] = log_prior[j] - (c * c * square - 2.0 * c * cross) / (
            2.0 * state.tau_y2
        )
    return log_normalize(log_weights)


# ---------------------------------------------------------------------------
# Joint node latent / inclusion block
# ---------------------------------------------------------------------------


def node_information(v, data, state, kernel, whiten=False, network=True, attributes=True):
    """Precision contribution P and linear term m of the data for node v's latents.

    The stacked regression for node v has the node attribute in the first
    coordinate and the incident edges (other endpoint in increasing order)
    in the rest. With whiten=False the attribute row uses the raw residual
    and variance tau_z2; with whiten=True it uses the spatially whitened
    residual, i.e. the exact conditional under the correlated attribute
    noise.
    """
    d = state.latents.shape[1]
    x = data.predictor
    sxx = float(x @ x)
    precision = np.zeros((d, d))
    linear = np.zeros(d)
    if attributes:
        if whiten:
            resid = (
                data.attributes
                - state.mu_z
                - np.outer(x, state.attr_coef)
                - (data.auxiliaries @ state.gamma_z)[:, None]
            )
            col = kernel.inverse[:, v]
            # add back node v's own contribution: the regression target
            # excludes attr_coef[v] from the residual
            whitened = resid @ col + x * (state.attr_coef[v] * col[v])
            precision[0, 0] = sxx * kernel.inverse[v, v] / state.tau_z2
            linear[0] = float(x @ whitened) / state.tau_z2
        else:
            resid = data.attributes[:, v] - state.mu_z - data.auxiliaries @ state.gamma_z
            precision[0, 0] = sxx / state.tau_z2
            linear[0] = float(x @ resid) / state.tau_z2
    if network:
        others = np.delete(np.arange(data.n_nodes), v)
        design = state.factors[others] * state.rank_signs
        resid = (
            data.networks[:, v, others]
            - state.mu_y
            - (data.auxiliaries @ state.gamma_y)[:, None]
        )
        precision[1:, 1:] = sxx * (design.T @ design) / state.tau_y2
        linear[1:] = design.T @ (x @ resid) / state.tau_y2
    return precision, linear


def _slab_chol(state):
    try:
        return cholesky(state.slab_cov, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("slab covariance is not positive definite") from exc


def _posterior_factor(precision, slab_chol):
    d = precision.shape[0]
    slab_inv = cho_solve((slab_chol, True), np.eye(d))
    try:
        return cholesky(precision + slab_inv, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("node latent posterior precision is singular") from exc


def cond_node_latent(v, data, state, kernel, whiten=False, network=True, attributes=True):
    """Slab conditional (mean, covariance) of node v's latent vector."""
    precision, linear = node_information(
        v, data, state, kernel, whiten=whiten, network=network, attributes=attributes
    )
    factor = _posterior_factor(precision, _slab_chol(state))
    cov = cho_solve((factor, True), np.eye(precision.shape[0]))
    return cov @ linear, cov


def _active_log_bayes_factor(precision, linear, slab_chol):
    # log N(f | 0, A L A' + S_f) - log N(f | 0, S_f) reduced to the latent
    # dimension: -(1/2) log|I + L P| + (1/2) m' (P + L^-1)^-1 m
    factor = _posterior_factor(precision, slab_chol)
    logdet_slab = 2.0 * float(np.sum(np.log(np.diag(slab_chol))))
    logdet_post = 2.0 * float(np.sum(np.log(np.diag(factor))))
    half = solve_triangular(factor, linear, lower=True)
    return -0.5 * (logdet_slab + logdet_post) + 0.5 * float(half @ half)


def cond_node_active(v, data, state, kernel, whiten=False, network=True, attributes=True):
    """Posterior inclusion probability of node v, latent vector integrated out."""
    precision, linear = node_information(
        v, data, state, kernel, whiten=whiten, network=network, attributes=attributes
    )
    log_bf = _active_log_bayes_factor(precision, linear, _slab_chol(state))
    with np.errstate(divide="ignore"):
        log_odds = np.log(state.incl_prob) - np.log1p(-state.incl_prob) + log_bf
    return float(expit(log_odds))


# ---------------------------------------------------------------------------
# Kernel decay grid
# ---------------------------------------------------------------------------


def _decay_log_weights(data, state, kernels):
    resid = attribute_residuals(data, state)
    n = data.n_subjects
    return np.array(
        [
            -0.5 * (n * k.logdet + k.quad_form(resid) / state.tau_z2)
            for k in kernels
        ]
    )


def cond_decay(data, state, kernels):
    """Posterior probabilities over the decay grid given precomputed kernels."""
    return log_normalize(_decay_log_weights(data, state, kernels))


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPlan:
    """Which likelihood parts a sweep updates, in the fixed scan order.

    network=False drops every edge-likelihood block (independent attribute
    model); attributes=False drops every attribute block (independent
    network model); spatial=False pins the kernel to the identity and skips
    the decay update.
    """

    network: bool = True
    attributes: bool = True
    spatial: bool = True

    def __post_init__(self):
        if not (self.network or self.attributes):
            raise ValidationError("a sweep must include at least one likelihood")

    def blocks(self, n_aux):
        order = []
        if self.attributes and self.spatial:
            order.append("decay")
        if self.attributes:
            order.append("tau_z2")
        if self.network:
            order.append("tau_y2")
        if self.network:
            order.append("mu_y")
        if self.attributes:
            order.append("mu_z")
        if self.network and n_aux > 0:
            order.append("gamma_y")
        if self.attributes and n_aux > 0:
            order.append("gamma_z")
        order.extend(["slab_cov", "incl_prob"])
        if self.network:
            order.append("rank_signs")
        order.append("node_latents")
        if len(set(order)) != len(order):  # pragma: no cover - structural guard
            raise ValidationError("duplicate block in sweep plan")
        return tuple(order)


def _grid_index(hyper, decay):
    idx = int(np.argmin(np.abs(hyper.decay_grid - decay)))
    return idx


def sweep(data, state, hyper, kernels, rng, plan=None):
    """One full Gibbs scan; returns the updated state.

    kernels must hold one KernelMatrix per decay-grid value when the plan
    is spatial, else a single identity kernel. The scan order is: decay,
    tau_z2, tau_y2, mu_y, mu_z, gamma_y, gamma_z, slab covariance,
    inclusion probability, the per-rank (sign probs, sign) pairs, then the
    per-node (latents, indicator) pairs.
    """
    if plan is None:
        plan = SweepPlan()
    blocks = plan.blocks(data.n_aux)
    prior_var = hyper.mean_prior_var
    if plan.spatial and plan.attributes:
        kernel = kernels[_grid_index(hyper, state.decay)]
    else:
        kernel = kernels[0]

    if "decay" in blocks and len(kernels) > 1:
        idx = categorical_draw(_decay_log_weights(data, state, kernels), rng)
        kernel = kernels[idx]
        state = state.with_(decay=float(hyper.decay_grid[idx]))
    if "tau_z2" in blocks:
        shape, rate = cond_tau_z2(data, state, hyper, kernel)
        state = state.with_(tau_z2=inv_gamma_draw(shape, rate, rng))
    if "tau_y2" in blocks:
        shape, rate = cond_tau_y2(data, state, hyper)
        state = state.with_(tau_y2=inv_gamma_draw(shape, rate, rng))
    if "mu_y" in blocks:
        mean, var = cond_mu_y(data, state, prior_var)
        state = state.with_(mu_y=normal_draw(mean, np.sqrt(var), rng))
    if "mu_z" in blocks:
        mean, var = cond_mu_z(data, state, kernel, prior_var)
        state = state.with_(mu_z=normal_draw(mean, np.sqrt(var), rng))
    if "gamma_y" in blocks:
        mean, cov = cond_gamma_y(data, state, prior_var)
        state = state.with_(gamma_y=mvn_draw(mean, cholesky(cov, lower=True), rng))
    if "gamma_z" in blocks:
        mean, cov = cond_gamma_z(data, state, kernel, prior_var)
        state = state.with_(gamma_z=mvn_draw(mean, cholesky(cov, lower=True), rng))

    df, scale = cond_slab_cov(state, hyper)
    state = state.with_(slab_cov=inv_wishart_draw(df, scale, rng))
    a_post, b_post = cond_incl_prob(state, hyper)
    state = state.with_(incl_prob=beta_draw(a_post, b_post, rng))

    if "rank_signs" in blocks:
        signs = state.rank_signs.copy()
        probs = state.rank_sign_probs.copy()
        for r in range(hyper.rank):
            probs[r] = dirichlet_draw(cond_rank_sign_probs(r, state, hyper), rng)
            state = state.with_(rank_sign_probs=probs.copy())
            triple = cond_rank_sign(r, data, state)
            with np.errstate(divide="ignore"):
                idx = categorical_draw(np.log(triple), rng)
            signs[r] = SIGN_VALUES[idx]
            state = state.with_(rank_signs=signs.copy())

    slab_chol = _slab_chol(state)
    with np.errstate(divide="ignore"):
        incl_logit = np.log(state.incl_prob) - np.log1p(-state.incl_prob)
    latents = state.latents.copy()
    active = state.active.copy()
    for v in range(data.n_nodes):
        precision, linear = node_information(
            v,
            data,
            state,
            kernel,
            whiten=hyper.whiten_latents,
            network=plan.network,
            attributes=plan.attributes,
        )
        log_bf = _active_log_bayes_factor(precision, linear, slab_chol)
        prob = float(expit(incl_logit + log_bf))
        active[v] = bernoulli_draw(prob, rng)
        if active[v]:
            factor = _posterior_factor(precision, slab_chol)
            mean = cho_solve((factor, True), linear)
            shift = solve_triangular(
                factor.T, rng.gen.standard_normal(mean.shape[0]), lower=False
            )
            latents[v] = mean + shift
        else:
            latents[v] = 0.0
        state = state.with_(latents=latents.copy(), active=active.copy())
    return state


# ---------------------------------------------------------------------------
# Chain runner
# ---------------------------------------------------------------------------


def _warm_start_latents(data, rank):
    """Eigendecomposition-based starting latents and rank signs.

    Per-edge and per-node least-squares slopes on the predictor give a
    rough edge-coefficient matrix whose leading eigenpairs seed the factors
    at data scale. Positive eigenvalues are used first (with +1 signs,
    matching the inner-product structure the coefficients encode), falling
    back to the most negative ones with -1 signs if the rank is not
    exhausted. Starting the factors near zero instead lets early sign
    updates collapse needed latent dimensions before any factor has grown,
    which can trap whole rank-1 layers at zero for the rest of the run,
    and a mixed-sign start can capture a representation basin that biases
    the edge coefficients.
    """
    x = data.predictor - data.predictor.mean()
    sxx = float(x @ x)
    v = data.n_nodes
    latents = np.zeros((v, rank + 1))
    signs = np.ones(rank, dtype=np.int64)
    if sxx <= 1e-12:
        return latents, signs
    edge_slopes = x @ (data.networks_upper - data.networks_upper.mean(axis=0)) / sxx
    attr_slopes = x @ (data.attributes - data.attributes.mean(axis=0)) / sxx
    eigvals, eigvecs = np.linalg.eigh(symmetric_from_upper(edge_slopes, v))
    positive = np.argsort(-eigvals)
    positive = [i for i in positive if eigvals[i] > 0]
    negative = np.argsort(eigvals)
    negative = [i for i in negative if eigvals[i] < 0]
    chosen = (positive + negative)[: min(rank, v)]
    for r, idx in enumerate(chosen):
        signs[r] = 1 if eigvals[idx] > 0 else -1
        latents[:, 1 + r] = np.sqrt(np.abs(eigvals[idx])) * eigvecs[:, idx]
    latents[:, 0] = attr_slopes
    return latents, signs


def initial_state(data, hyper, rng, plan=None):
    """Starting point: fully active with data-scaled warm-start latents.

    Intercepts and auxiliary coefficients start at zero, noise variances
    at the sample variances of the responses, inclusion probability at
    1/2, sign probabilities at their prior means, slab covariance at its
    prior scale and decay at the grid median. Latents and rank signs come
    from a least-squares eigendecomposition warm start (lightly jittered),
    and every node starts active so selection shrinks rather than grows.
    """
    if plan is None:
        plan = SweepPlan()
    d = hyper.rank + 1
    v = data.n_nodes
    grid = hyper.decay_grid
    positions = np.arange(1, hyper.rank + 1, dtype=np.float64)
    prior_conc = np.column_stack(
        [positions**hyper.shrink_exp, np.ones(hyper.rank), np.ones(hyper.rank)]
    )
    latents, signs = _warm_start_latents(data, hyper.rank)
    # a variant must not see data its likelihood excludes
    if not plan.attributes:
        latents[:, 0] = 0.0
    if not plan.network:
        latents[:, 1:] = 0.0
        signs = np.ones(hyper.rank, dtype=np.int64)
    latents = latents + 0.01 * rng.gen.standard_normal((v, d))
    return ModelState(
        mu_y=0.0,
        mu_z=0.0,
        gamma_y=np.zeros(data.n_aux),
        gamma_z=np.zeros(data.n_aux),
        tau_y2=max(float(np.var(data.networks_upper)), 1e-8),
        tau_z2=max(float(np.var(data.attributes)), 1e-8),
        incl_prob=0.5,
        slab_cov=hyper.slab_scale.copy(),
        rank_signs=signs,
        rank_sign_probs=prior_conc / prior_conc.sum(axis=1, keepdims=True),
        active=np.ones(v, dtype=np.int64),
        latents=latents,
        decay=float(grid[grid.size // 2]),
    )


def build_kernels(data, hyper, plan):
    if plan.attributes and plan.spatial:
        return [
            kernel_matrix(data.coords, decay, hyper.kernel_jitter)
            for decay in hyper.decay_grid
        ]
    return [identity_kernel(data.n_nodes)]


def run_chain(data, hyper, rng=None, *, network=True, attributes=True, spatial=True):
    """Run the Gibbs sampler and keep the post burn-in draws.

    Parameters
    ----------
    data : Dataset
    hyper : Hyperparameters
    rng : Rng, optional
        Defaults to a fresh stream keyed by hyper.seed.
    network, attributes, spatial : bool
        Which likelihood parts to include, mapping onto the model variants:
        the full spatial joint model, the non-spatial joint model
        (spatial=False), the independent network model (attributes=False)
        and the independent attribute model (network=False).

    Returns
    -------
    Chain
    """
    data.validate()
    hyper.validate()
    plan = SweepPlan(network=network, attributes=attributes, spatial=spatial)
    if rng is None:
        rng = Rng(hyper.seed, 0)
    kernels = build_kernels(data, hyper, plan)

    start = time.perf_counter()
    state = initial_state(data, hyper, rng, plan)
    kept = hyper.n_kept
    store = {
        "mu_y": np.empty(kept),
        "mu_z": np.empty(kept),
        "gamma_y": np.empty((kept, data.n_aux)),
        "gamma_z": np.empty((kept, data.n_aux)),
        "tau_y2": np.empty(kept),
        "tau_z2": np.empty(kept),
        "incl_prob": np.empty(kept),
        "slab_cov": np.empty((kept, hyper.rank + 1, hyper.rank + 1)),
        "rank_signs": np.empty((kept, hyper.rank), dtype=np.int64),
        "rank_sign_probs": np.empty((kept, hyper.rank, 3)),
        "active": np.empty((kept, data.n_nodes), dtype=np.int64),
        "latents": np.empty((kept, data.n_nodes, hyper.rank + 1)),
        "decay": np.empty(kept),
    }
    for it in range(hyper.iterations):
        state = sweep(data, state, hyper, kernels, rng, plan)
        keep = it - hyper.burnin
        if keep >= 0:
            for name in store:
                store[name][keep] = getattr(state, name)
    return Chain(
        **store,
        hyper=hyper,
        dataset_fingerprint=dataset_fingerprint(data),
        seed=rng.seed,
        stream=rng.stream,
        variant_flags={
            "network": network,
            "attributes": attributes,
            "spatial": spatial,
            "whiten_latents": bool(hyper.whiten_latents),
        },
        wall_clock=time.perf_counter() - start,
    )
