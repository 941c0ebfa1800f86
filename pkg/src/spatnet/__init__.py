"""Joint Bayesian modeling of multi-subject networks and spatially
correlated nodal attributes, with spike-and-slab node selection."""

from .core import (
    Chain,
    Dataset,
    Hyperparameters,
    KernelMatrix,
    ModelState,
    NumericalError,
    ValidationError,
    beta_from_latent,
    kernel_matrix,
)
from .estimator import NetworkAttributeRegression
from .gibbs import run_chain, sweep
from .harness import ReplicateReport, run_scenario, scaled_mse
from .rng import Rng
from .simulate import (
    GroundTruth,
    ScenarioConfig,
    builtin_scenarios,
    generate_dataset,
    generate_truth,
)
from .summarize import (
    PosteriorSummary,
    SpatialCurve,
    coefficient_summary,
    effective_sample_size,
    inclusion_probabilities,
    posterior_predict,
    spatial_correlation_curve,
)

__version__ = "0.1.0"

__all__ = [
    "Chain",
    "Dataset",
    "GroundTruth",
    "Hyperparameters",
    "KernelMatrix",
    "ModelState",
    "NetworkAttributeRegression",
    "NumericalError",
    "PosteriorSummary",
    "ReplicateReport",
    "Rng",
    "ScenarioConfig",
    "SpatialCurve",
    "ValidationError",
    "beta_from_latent",
    "builtin_scenarios",
    "coefficient_summary",
    "effective_sample_size",
    "generate_dataset",
    "generate_truth",
    "inclusion_probabilities",
    "kernel_matrix",
    "posterior_predict",
    "run_chain",
    "run_scenario",
    "scaled_mse",
    "spatial_correlation_curve",
    "sweep",
    "__version__",
]
