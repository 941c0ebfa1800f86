"""Domain types and deterministic model algebra.

Everything in this module is pure: datasets, sampler states and kernel
matrices are immutable value objects, and the operations on them
(coefficient reconstruction, residuals, kernel construction) have no side
effects, so they are safe to share across threads.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

__all__ = [
    "ValidationError",
    "NumericalError",
    "Dataset",
    "Hyperparameters",
    "ModelState",
    "KernelMatrix",
    "Chain",
    "upper_triangle",
    "symmetric_from_upper",
    "beta_from_latent",
    "kernel_matrix",
    "identity_kernel",
    "network_residuals",
    "attribute_residuals",
    "dataset_fingerprint",
]


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition."""


class NumericalError(RuntimeError):
    """Raised when a linear-algebra step fails beyond recovery."""


def as_float_array(x, name, shape=None):
    """Convert to a float64 ndarray, rejecting non-finite entries."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    if shape is not None and arr.shape != tuple(shape):
        raise ValidationError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    return arr


def check_symmetric(mat, name, tol=1e-10):
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, rtol=0.0, atol=tol):
        u, v = np.unravel_index(np.argmax(np.abs(mat - mat.T)), mat.shape)
        raise ValidationError(f"{name} is not symmetric at entry ({u},{v})")


def check_spd(mat, name):
    """Check symmetry + positive definiteness; returns the lower Cholesky factor."""
    check_symmetric(mat, name, tol=1e-8)
    try:
        return cholesky(mat, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy raises its own
        raise ValidationError(f"{name} is not positive definite") from exc
    except Exception as exc:
        raise ValidationError(f"{name} is not positive definite") from exc


# ---------------------------------------------------------------------------
# Upper-triangle vectorization.
#
# The edge order is row-major over pairs (u, v) with u < v and is the single
# source of truth for every vectorized edge quantity in the package; mixing
# orders silently corrupts the sampler, hence the round-trip property test.
# ---------------------------------------------------------------------------


def upper_triangle_indices(n_nodes):
    return np.triu_indices(n_nodes, k=1)


def upper_triangle(mat):
    """Vectorize the strict upper triangle of a square matrix (row-major)."""
    mat = np.asarray(mat)
    iu = np.triu_indices(mat.shape[-1], k=1)
    return mat[..., iu[0], iu[1]]


def symmetric_from_upper(vec, n_nodes):
    """Inverse of :func:`upper_triangle` for symmetric zero-diagonal matrices."""
    vec = np.asarray(vec, dtype=np.float64)
    h = n_nodes * (n_nodes - 1) // 2
    if vec.shape[-1] != h:
        raise ValidationError(f"edge vector has length {vec.shape[-1]}, expected {h}")
    mat = np.zeros(vec.shape[:-1] + (n_nodes, n_nodes))
    iu = np.triu_indices(n_nodes, k=1)
    mat[..., iu[0], iu[1]] = vec
    mat[..., iu[1], iu[0]] = vec
    return mat


def beta_from_latent(rank_signs, latents):
    """Reconstruct the symmetric edge-coefficient matrix from node latents.

    Parameters
    ----------
    rank_signs : array-like of shape (rank,)
        Sign selectors in {-1, 0, 1}, one per latent dimension.
    latents : array-like of shape (n_nodes, rank + 1)
        Per-node latent vectors; column 0 is the attribute coefficient and
        plays no role here, columns 1..rank are the network factors.

    Returns
    -------
    ndarray of shape (n_nodes, n_nodes)
        Symmetric matrix with zero diagonal whose (u, v) entry is the sum
        over latent dimensions of sign * factor_u * factor_v.
    """
    rank_signs = np.asarray(rank_signs, dtype=np.float64)
    latents = np.asarray(latents, dtype=np.float64)
    if latents.ndim != 2 or latents.shape[1] != rank_signs.shape[0] + 1:
        raise ValidationError(
            f"latents shape {latents.shape} incompatible with "
            f"{rank_signs.shape[0]} rank signs"
        )
    factors = latents[:, 1:]
    coef = (factors * rank_signs) @ factors.T
    coef = (coef + coef.T) / 2.0  # exact symmetry despite summation order
    np.fill_diagonal(coef, 0.0)
    return coef


# ---------------------------------------------------------------------------
# Spatial kernel
# ---------------------------------------------------------------------------

_MAX_JITTER = 1e-4


@dataclass(frozen=True)
class KernelMatrix:
    """Exponential spatial correlation matrix with cached factorization."""

    sigma: np.ndarray
    chol: np.ndarray
    logdet: float
    decay: float
    jitter: float

    @cached_property
    def inverse(self):
        return cho_solve((self.chol, True), np.eye(self.sigma.shape[0]))

    @cached_property
    def inv_one(self):
        """Solve of the all-ones vector, used by GLS intercept updates."""
        return cho_solve((self.chol, True), np.ones(self.sigma.shape[0]))

    @cached_property
    def one_inv_one(self):
        return float(np.sum(self.inv_one))

    def solve(self, rhs):
        return cho_solve((self.chol, True), rhs)

    def quad_form(self, rows):
        """Sum of r Sigma^-1 r' over the rows of `rows`."""
        half = solve_triangular(self.chol, np.atleast_2d(rows).T, lower=True)
        return float(np.sum(half * half))


def kernel_matrix(coords, decay, jitter=1e-8):
    """Build exp(-decay * distance) correlation over node coordinates.

    The jitter is added to the diagonal before factorization and escalates
    tenfold on Cholesky failure, up to 1e-4, after which a NumericalError
    reports the decay value and a condition estimate.
    """
    coords = as_float_array(coords, "coords")
    if coords.ndim != 2:
        raise ValidationError("coords must be a 2-d array of points")
    if not decay > 0:
        raise ValidationError(f"decay must be positive, got {decay}")
    if jitter < 0:
        raise ValidationError(f"jitter must be non-negative, got {jitter}")
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    off = ~np.eye(len(coords), dtype=bool)
    if np.any(dist[off] == 0.0):
        raise ValidationError("coords must be pairwise distinct")
    sigma = np.exp(-decay * dist)

    current = jitter
    while True:
        try:
            chol = cholesky(sigma + current * np.eye(len(coords)), lower=True)
            break
        except np.linalg.LinAlgError:
            pass
        if current >= _MAX_JITTER:
            cond = float(np.linalg.cond(sigma))
            raise NumericalError(
                f"kernel Cholesky failed at decay={decay} even with jitter "
                f"{current:g} (condition estimate {cond:.3e})"
            )
        current = max(current, 1e-9) * 10.0
    logdet = float(2.0 * np.sum(np.log(np.diag(chol))))
    return KernelMatrix(
        sigma=sigma + current * np.eye(len(coords)),
        chol=chol,
        logdet=logdet,
        decay=float(decay),
        jitter=float(current),
    )


def identity_kernel(n_nodes):
    """Exact identity correlation, used by the non-spatial model variant."""
    eye = np.eye(n_nodes)
    return KernelMatrix(sigma=eye, chol=eye.copy(), logdet=0.0, decay=0.0, jitter=0.0)


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Multi-subject network + nodal attribute data with a scalar predictor.

    Attributes
    ----------
    networks : ndarray of shape (n_subjects, n_nodes, n_nodes)
        Symmetric zero-diagonal adjacency matrices, one per subject.
    attributes : ndarray of shape (n_subjects, n_nodes)
        Scalar attribute observed at each node for each subject.
    predictor : ndarray of shape (n_subjects,)
        The single subject-level predictor of interest.
    auxiliaries : ndarray of shape (n_subjects, n_aux)
        Nuisance subject-level covariates (may have zero columns).
    coords : ndarray of shape (n_nodes, 3)
        Spatial locations of the nodes, pairwise distinct.
    """

    networks: np.ndarray
    attributes: np.ndarray
    predictor: np.ndarray
    auxiliaries: np.ndarray
    coords: np.ndarray

    @property
    def n_subjects(self):
        return self.networks.shape[0]

    @property
    def n_nodes(self):
        return self.networks.shape[1]

    @property
    def n_aux(self):
        return self.auxiliaries.shape[1]

    @property
    def n_edges(self):
        v = self.n_nodes
        return v * (v - 1) // 2

    @cached_property
    def networks_upper(self):
        """Subjects-by-edges matrix of vectorized upper triangles."""
        return upper_triangle(self.networks)

    def validate(self):
        n, v = self.networks.shape[0], self.networks.shape[1]
        if v < 2:
            raise ValidationError("need at least 2 nodes")
        as_float_array(self.networks, "networks", (n, v, v))
        as_float_array(self.attributes, "attributes", (n, v))
        as_float_array(self.predictor, "predictor", (n,))
        as_float_array(self.auxiliaries, "auxiliaries", (n, self.auxiliaries.shape[1]))
        as_float_array(self.coords, "coords", (v, 3))
        for i, net in enumerate(self.networks):
            if not np.allclose(net, net.T, rtol=0.0, atol=1e-10):
                u, w = np.unravel_index(np.argmax(np.abs(net - net.T)), net.shape)
                raise ValidationError(
                    f"network of subject {i} is asymmetric at edge ({u},{w})"
                )
            if np.any(np.diag(net) != 0.0):
                raise ValidationError(f"network of subject {i} has nonzero diagonal")
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        if np.any(dist[~np.eye(v, dtype=bool)] == 0.0):
            raise ValidationError("coords must be pairwise distinct")
        return self

    @classmethod
    def from_arrays(cls, networks, attributes, predictor, auxiliaries=None, coords=None):
        networks = np.asarray(networks, dtype=np.float64)
        n = networks.shape[0]
        v = networks.shape[1]
        if auxiliaries is None:
            auxiliaries = np.zeros((n, 0))
        if coords is None:
            raise ValidationError("coords are required")
        data = cls(
            networks=networks,
            attributes=np.asarray(attributes, dtype=np.float64),
            predictor=np.asarray(predictor, dtype=np.float64),
            auxiliaries=np.asarray(auxiliaries, dtype=np.float64),
            coords=np.asarray(coords, dtype=np.float64),
        )
        return data.validate()


def dataset_fingerprint(data):
    """Content hash of a dataset, stable across processes."""
    digest = hashlib.sha256()
    digest.update(f"{data.n_subjects},{data.n_nodes},{data.n_aux}".encode())
    for arr in (data.networks, data.attributes, data.predictor, data.auxiliaries, data.coords):
        digest.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Prior constants and sampler settings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hyperparameters:
    """Fixed prior constants plus sampler run lengths.

    Parameters follow the model's prior structure: inverse-gamma
    (var_shape, var_rate) on both noise variances, inverse-Wishart
    (slab_df, slab_scale) on the slab covariance, Beta (incl_a, incl_b) on
    the node-inclusion probability, a Dirichlet whose first concentration
    grows like r**shrink_exp on the per-rank sign probabilities, and a
    discrete uniform prior over decay_grid for the kernel decay rate.

    mean_prior_var is None for the model's flat priors on intercepts and
    auxiliary coefficients; a positive value switches those conditionals to
    proper N(0, mean_prior_var) priors (used by joint-distribution sampler
    checks, which require proper priors).

    whiten_latents selects the spatially whitened node-latent update (the
    exact conditional under correlated attribute noise, the default);
    False uses the unwhitened attribute residual with marginal variance
    tau_z2 instead, which treats the attribute entry as independent noise.
    """

    rank: int = 4
    shrink_exp: float = 2.0
    var_shape: float = 2.0
    var_rate: float = 1.0
    slab_df: float | None = None
    slab_scale: np.ndarray | None = None
    incl_a: float = 1.0
    incl_b: float = 1.0
    decay_grid: np.ndarray = field(
        default_factory=lambda: np.linspace(0.01, 1.0, 20)
    )
    iterations: int = 500
    burnin: int = 200
    seed: int = 0
    kernel_jitter: float = 1e-8
    mean_prior_var: float | None = None
    whiten_latents: bool = True

    def __post_init__(self):
        object.__setattr__(self, "decay_grid", np.asarray(self.decay_grid, dtype=np.float64))
        if self.slab_df is None:
            object.__setattr__(self, "slab_df", float(self.rank + 2))
        if self.slab_scale is None:
            object.__setattr__(self, "slab_scale", np.eye(self.rank + 1))
        else:
            object.__setattr__(
                self, "slab_scale", np.asarray(self.slab_scale, dtype=np.float64)
            )

    @property
    def n_kept(self):
        return self.iterations - self.burnin

    def validate(self):
        if self.rank < 1:
            raise ValidationError("rank must be a positive integer")
        if not self.shrink_exp > 1:
            raise ValidationError("shrink_exp must exceed 1")
        for name in ("var_shape", "var_rate", "incl_a", "incl_b"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if not self.slab_df > self.rank:
            raise ValidationError("slab_df must exceed the rank")
        check_spd(self.slab_scale, "slab_scale")
        if self.slab_scale.shape != (self.rank + 1, self.rank + 1):
            raise ValidationError("slab_scale must be (rank+1) x (rank+1)")
        grid = self.decay_grid
        if grid.ndim != 1 or grid.size == 0:
            raise ValidationError("decay_grid must be a non-empty 1-d array")
        if not np.all(grid > 0):
            raise ValidationError("decay_grid values must be positive")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise ValidationError("decay_grid must be strictly increasing")
        if self.iterations < 1 or self.burnin < 0 or self.burnin >= self.iterations:
            raise ValidationError("need 0 <= burnin < iterations")
        if self.kernel_jitter < 0:
            raise ValidationError("kernel_jitter must be non-negative")
        if self.mean_prior_var is not None and not self.mean_prior_var > 0:
            raise ValidationError("mean_prior_var must be positive when set")
        return self


# ---------------------------------------------------------------------------
# Sampler state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelState:
    """One complete point in parameter space.

    latents holds one row per node; column 0 is the attribute coefficient
    for that node and columns 1..rank the network factors. A node with
    active == 0 has an exactly-zero latent row (the spike component).
    """

    mu_y: float
    mu_z: float
    gamma_y: np.ndarray
    gamma_z: np.ndarray
    tau_y2: float
    tau_z2: float
    incl_prob: float
    slab_cov: np.ndarray
    rank_signs: np.ndarray
    rank_sign_probs: np.ndarray
    active: np.ndarray
    latents: np.ndarray
    decay: float

    @property
    def attr_coef(self):
        return self.latents[:, 0]

    @property
    def factors(self):
        return self.latents[:, 1:]

    def edge_coef(self):
        return beta_from_latent(self.rank_signs, self.latents)

    def validate(self):
        v, d = self.latents.shape
        r = d - 1
        if not (np.isfinite(self.mu_y) and np.isfinite(self.mu_z)):
            raise ValidationError("intercepts must be finite")
        as_float_array(self.gamma_y, "gamma_y")
        as_float_array(self.gamma_z, "gamma_z")
        if not self.tau_y2 > 0 or not self.tau_z2 > 0:
            raise ValidationError("noise variances must be positive")
        if not 0.0 < self.incl_prob < 1.0:
            raise ValidationError("incl_prob must lie strictly in (0, 1)")
        check_spd(self.slab_cov, "slab_cov")
        if self.slab_cov.shape != (d, d):
            raise ValidationError("slab_cov dimension must match latents")
        if self.rank_signs.shape != (r,) or not np.all(np.isin(self.rank_signs, (-1, 0, 1))):
            raise ValidationError("rank_signs must be a length-rank vector over {-1,0,1}")
        probs = as_float_array(self.rank_sign_probs, "rank_sign_probs", (r, 3))
        if np.any(probs < 0) or not np.allclose(probs.sum(axis=1), 1.0, atol=1e-9):
            raise ValidationError("rank_sign_probs rows must lie on the simplex")
        if self.active.shape != (v,) or not np.all(np.isin(self.active, (0, 1))):
            raise ValidationError("active must be a binary vector of length n_nodes")
        as_float_array(self.latents, "latents")
        spiked = self.active == 0
        if np.any(self.latents[spiked] != 0.0):
            raise ValidationError("inactive nodes must have exactly-zero latents")
        if not self.decay > 0:
            raise ValidationError("decay must be positive")
        return self

    def with_(self, **changes):
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# Residual operators
# ---------------------------------------------------------------------------


def network_residuals(data, state):
    """Edge residuals after removing intercept, edge coefficients and auxiliaries.

    Returns an (n_subjects, n_edges) array in upper-triangle order.
    """
    edge_ut = upper_triangle(state.edge_coef())
    aux_shift = data.auxiliaries @ state.gamma_y
    return (
        data.networks_upper
        - state.mu_y
        - np.outer(data.predictor, edge_ut)
        - aux_shift[:, None]
    )


def attribute_residuals(data, state):
    """Node residuals after removing intercept, attribute coefficients and auxiliaries."""
    aux_shift = data.auxiliaries @ state.gamma_z
    return (
        data.attributes
        - state.mu_z
        - np.outer(data.predictor, state.attr_coef)
        - aux_shift[:, None]
    )


# ---------------------------------------------------------------------------
# Chain of posterior draws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chain:
    """Post burn-in draws stored columnarly, one array per parameter block.

    Each array's leading axis indexes the kept iterations. wall_clock is
    populated when the chain is produced by a run and is None after a
    reload; it is deliberately excluded from persisted artifacts so reruns
    are byte-identical.
    """

    mu_y: np.ndarray
    mu_z: np.ndarray
    gamma_y: np.ndarray
    gamma_z: np.ndarray
    tau_y2: np.ndarray
    tau_z2: np.ndarray
    incl_prob: np.ndarray
    slab_cov: np.ndarray
    rank_signs: np.ndarray
    rank_sign_probs: np.ndarray
    active: np.ndarray
    latents: np.ndarray
    decay: np.ndarray
    hyper: Hyperparameters
    dataset_fingerprint: str
    seed: int
    stream: int
    variant_flags: dict
    wall_clock: float | None = None

    ARRAY_FIELDS = (
        "mu_y",
        "mu_z",
        "gamma_y",
        "gamma_z",
        "tau_y2",
        "tau_z2",
        "incl_prob",
        "slab_cov",
        "rank_signs",
        "rank_sign_probs",
        "active",
        "latents",
        "decay",
    )

    def __len__(self):
        return self.mu_y.shape[0]

    def state(self, f):
        """Materialize the f-th stored draw as a ModelState."""
        return ModelState(
            mu_y=float(self.mu_y[f]),
            mu_z=float(self.mu_z[f]),
            gamma_y=self.gamma_y[f],
            gamma_z=self.gamma_z[f],
            tau_y2=float(self.tau_y2[f]),
            tau_z2=float(self.tau_z2[f]),
            incl_prob=float(self.incl_prob[f]),
            slab_cov=self.slab_cov[f],
            rank_signs=self.rank_signs[f],
            rank_sign_probs=self.rank_sign_probs[f],
            active=self.active[f],
            latents=self.latents[f],
            decay=float(self.decay[f]),
        )

    def states(self):
        for f in range(len(self)):
            yield self.state(f)
