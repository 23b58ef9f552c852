"""Local optimistic safe Bayesian optimization over isometric embeddings."""

__version__ = "0.1.0"

from .embedding import (
    EmbeddingMap,
    IsometryReport,
    encode,
    decode,
    fit_pca,
    identity_map,
    isometry_diagnostics,
    latent_bounds,
    load_map,
    save_map,
)
from .geometry import Box
from .gp import (
    GpDataset,
    GpPosterior,
    HyperBounds,
    KernelSpec,
    fit_hyperparameters,
    fit_posterior,
    joint_sample,
    kernel_eval,
    log_marginal_likelihood,
    posterior_cov,
    posterior_query,
)
from .optimizer import (
    Observation,
    OptimizerConfig,
    RunRecord,
    RunState,
    StepProposal,
    init_run,
    observe,
    propose,
    run,
)
from .safety import (
    SafeSet,
    SafetyConfig,
    confidence_scalar,
    identify_safe,
    violation_metrics,
)
from .trust_region import (
    BatchOutcome,
    TrustRegionConfig,
    TrustRegionState,
    initial_incumbent,
    make_local_region,
    safe_update,
)
