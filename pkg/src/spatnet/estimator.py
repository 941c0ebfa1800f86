"""Estimator-style front end so the model composes with the wider ecosystem.

The class follows the scikit-learn contract: constructor arguments are
stored verbatim and validated in fit, fitted results live in trailing-
underscore attributes, and get_params/set_params make the estimator
cloneable by sklearn tooling without depending on it.
"""

from __future__ import annotations

import inspect

import numpy as np

from .core import Dataset, Hyperparameters, ValidationError
from .gibbs import run_chain
from .harness import VARIANTS
from .rng import Rng
from .summarize import (
    coefficient_summary,
    implied_cross_covariance,
    posterior_predict,
    spatial_correlation_curve,
)

__all__ = ["NetworkAttributeRegression"]


class NetworkAttributeRegression:
    """Joint Bayesian regression of networks and nodal attributes on a predictor.

    Fits, by Gibbs sampling, a model in which every edge of a subject's
    network and every spatially correlated nodal attribute responds
    linearly to a scalar subject-level predictor, with a joint
    spike-and-slab prior selecting the nodes that carry any association.

    Parameters
    ----------
    rank : int (default=4)
        Latent dimension of the low-rank edge-coefficient structure.
    variant : str (default="spatial-joint")
        One of "spatial-joint", "nonspatial-joint", "independent-network",
        "independent-attribute".
    iterations : int (default=500)
        Total Gibbs sweeps.
    burnin : int (default=200)
        Sweeps discarded before draws are kept.
    decay_grid : array-like or None
        Candidate kernel decay rates; defaults to 20 points on [0.01, 1].
    var_shape, var_rate : float
        Inverse-gamma prior on both noise variances.
    slab_df : float or None
        Inverse-Wishart prior degrees of freedom; defaults to rank + 2.
    slab_scale : array-like or None
        Inverse-Wishart prior scale; defaults to the identity.
    incl_a, incl_b : float
        Beta prior on the node inclusion probability.
    shrink_exp : float
        Rank-shrinkage exponent of the sign-probability prior (> 1).
    kernel_jitter : float
        Diagonal jitter added to spatial kernels before factorization.
    whiten_latents : bool (default=True)
        Use the spatially whitened node-latent update (the exact
        conditional under correlated attribute noise); False selects the
        unwhitened form that treats the attribute entry as independent.
    selection_threshold : float (default=0.5)
        Median-probability selection cutoff (strictly greater than).
    credible_level : float (default=0.95)
        Level of all reported credible intervals.
    seed : int (default=0)
        Master seed; fits are bit-reproducible given the seed.

    Attributes
    ----------
    chain_ : Chain
        Stored post burn-in draws.
    summary_ : PosteriorSummary
        Point and interval estimates.
    inclusion_probabilities_ : ndarray of shape (n_nodes,)
        Posterior probability that each node is associated with the
        predictor.
    selected_nodes_ : ndarray
        Indices passing the selection threshold.
    edge_coef_ : ndarray of shape (n_nodes, n_nodes)
        Posterior-mean edge coefficients.
    attr_coef_ : ndarray of shape (n_nodes,)
        Posterior-mean attribute coefficients.
    """

    def __init__(
        self,
        rank=4,
        variant="spatial-joint",
        iterations=500,
        burnin=200,
        decay_grid=None,
        var_shape=2.0,
        var_rate=1.0,
        slab_df=None,
        slab_scale=None,
        incl_a=1.0,
        incl_b=1.0,
        shrink_exp=2.0,
        kernel_jitter=1e-8,
        whiten_latents=True,
        selection_threshold=0.5,
        credible_level=0.95,
        seed=0,
    ):
        self.rank = rank
        self.variant = variant
        self.iterations = iterations
        self.burnin = burnin
        self.decay_grid = decay_grid
        self.var_shape = var_shape
        self.var_rate = var_rate
        self.slab_df = slab_df
        self.slab_scale = slab_scale
        self.incl_a = incl_a
        self.incl_b = incl_b
        self.shrink_exp = shrink_exp
        self.kernel_jitter = kernel_jitter
        self.whiten_latents = whiten_latents
        self.selection_threshold = selection_threshold
        self.credible_level = credible_level
        self.seed = seed

    # -- sklearn plumbing ---------------------------------------------------

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [name for name in sig.parameters if name != "self"]

    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValidationError(f"unknown parameter {name!r}")
            setattr(self, name, value)
        return self

    def _hyperparameters(self):
        kwargs = dict(
            rank=self.rank,
            shrink_exp=self.shrink_exp,
            var_shape=self.var_shape,
            var_rate=self.var_rate,
            slab_df=self.slab_df,
            slab_scale=self.slab_scale,
            incl_a=self.incl_a,
            incl_b=self.incl_b,
            iterations=self.iterations,
            burnin=self.burnin,
            seed=self.seed,
            kernel_jitter=self.kernel_jitter,
            whiten_latents=self.whiten_latents,
        )
        if self.decay_grid is not None:
            kwargs["decay_grid"] = np.asarray(self.decay_grid, dtype=np.float64)
        return Hyperparameters(**kwargs).validate()

    # -- estimation ---------------------------------------------------------

    def fit(self, data, rng=None):
        """Run the sampler on a Dataset and summarize the posterior.

        Parameters
        ----------
        data : Dataset
            Use Dataset.from_arrays to assemble one from raw arrays.
        rng : Rng, optional
            Override the default stream derived from `seed`.

        Returns
        -------
        self
        """
        if not isinstance(data, Dataset):
            raise ValidationError("fit expects a Dataset; see Dataset.from_arrays")
        if self.variant not in VARIANTS:
            raise ValidationError(
                f"unknown variant {self.variant!r}; expected one of {sorted(VARIANTS)}"
            )
        flags = VARIANTS[self.variant]
        hyper = self._hyperparameters()
        self.chain_ = run_chain(
            data,
            hyper,
            rng=rng if rng is not None else Rng(self.seed),
            network=flags.network,
            attributes=flags.attributes,
            spatial=flags.spatial,
        )
        self.summary_ = coefficient_summary(
            self.chain_, level=self.credible_level, threshold=self.selection_threshold
        )
        self.inclusion_probabilities_ = self.summary_.inclusion_probs
        self.selected_nodes_ = self.summary_.selected
        self.edge_coef_ = self.summary_.edge_mean
        self.attr_coef_ = self.summary_.attr_mean
        self.n_nodes_ = data.n_nodes
        self._train_data = data
        return self

    def _check_fitted(self):
        if not hasattr(self, "chain_"):
            raise ValidationError("estimator is not fitted; call fit first")

    def predict(self, predictor, auxiliaries=None):
        """Posterior predictive means for new subjects.

        Returns a dict with "edges" of shape (m, n_edges) in upper-triangle
        order and "attributes" of shape (m, n_nodes).
        """
        self._check_fitted()
        pred = self.predict_summary(predictor, auxiliaries)
        return {"edges": pred.edge_mean, "attributes": pred.attr_mean}

    def predict_summary(self, predictor, auxiliaries=None, rng=None):
        """Full predictive summary (means, prediction intervals, draws)."""
        self._check_fitted()
        return posterior_predict(
            self.chain_,
            predictor,
            auxiliaries,
            self._train_data,
            rng=rng,
            level=self.credible_level,
        )

    def spatial_curve(self, bins=15, decay_true=None, rng=None, per_draw=True):
        """Binned posterior-predictive spatial correlation versus distance."""
        self._check_fitted()
        return spatial_correlation_curve(
            self.chain_,
            self._train_data,
            bins=bins,
            rng=rng,
            per_draw=per_draw,
            decay_true=decay_true,
        )

    def cross_covariance(self, predictor_value):
        """Implied attribute/factor cross-covariance at a predictor value."""
        self._check_fitted()
        return implied_cross_covariance(self.chain_, predictor_value)
