"""Shared fixtures: tiny datasets and random valid sampler states."""

from __future__ import annotations

import numpy as np
import pytest

from spatnet.core import Hyperparameters, ModelState
from spatnet.rng import Rng
from spatnet.simulate import ScenarioConfig, generate_dataset, generate_truth


def make_scenario(n=3, v=4, q=2, sparsity=0.5, decay=0.3, seed=0):
    gamma = np.linspace(0.2, 0.5, q) if q else np.zeros(0)
    return ScenarioConfig(
        sparsity=sparsity,
        decay_true=decay,
        n_subjects=n,
        n_nodes=v,
        rank_true=2,
        tau_y2_true=1.0,
        tau_z2_true=2.0,
        gamma_y_true=gamma,
        gamma_z_true=gamma[::-1].copy() if q else gamma,
        seed=seed,
    )


def make_data(n=3, v=4, q=2, seed=0, decay=0.3):
    cfg = make_scenario(n=n, v=v, q=q, decay=decay, seed=seed)
    rng = Rng(seed).derive(7)
    truth = generate_truth(cfg, rng)
    return generate_dataset(cfg, truth, rng), truth, cfg


def make_state(data, hyper, seed=0, all_active=False):
    """A random valid ModelState, with both active and inactive nodes."""
    gen = np.random.default_rng(seed)
    v = data.n_nodes
    d = hyper.rank + 1
    half = gen.standard_normal((d, d)) * 0.4
    slab_cov = half @ half.T + 0.3 * np.eye(d)
    if all_active:
        active = np.ones(v, dtype=np.int64)
    else:
        active = (gen.random(v) < 0.7).astype(np.int64)
        active[0] = 1
        active[-1] = 0
    latents = gen.standard_normal((v, d)) * 0.8
    latents[active == 0] = 0.0
    probs = gen.dirichlet(np.ones(3), size=hyper.rank)
    return ModelState(
        mu_y=float(gen.standard_normal() * 0.5),
        mu_z=float(gen.standard_normal() * 0.5),
        gamma_y=gen.standard_normal(data.n_aux) * 0.3,
        gamma_z=gen.standard_normal(data.n_aux) * 0.3,
        tau_y2=float(0.5 + gen.random()),
        tau_z2=float(0.5 + gen.random()),
        incl_prob=float(0.2 + 0.6 * gen.random()),
        slab_cov=slab_cov,
        rank_signs=gen.choice([-1, 0, 1], size=hyper.rank),
        rank_sign_probs=probs,
        active=active,
        latents=latents,
        decay=float(hyper.decay_grid[len(hyper.decay_grid) // 2]),
    ).validate()


@pytest.fixture
def tiny():
    """n=3, V=4, q=2 dataset with its truth, plus matching hyperparameters."""
    data, truth, cfg = make_data()
    hyper = Hyperparameters(
        rank=2,
        decay_grid=np.array([0.1, 0.3, 0.9]),
        iterations=10,
        burnin=5,
        seed=11,
        kernel_jitter=0.0,
    ).validate()
    return data, truth, hyper


@pytest.fixture
def tiny_state(tiny):
    data, _, hyper = tiny
    return make_state(data, hyper, seed=5)
