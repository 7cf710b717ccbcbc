"""Divergence-minimization fitting for finite mixtures of count models.

The package turns one idea into a toolbox: replace the log-likelihood in an
EM-style sweep with any member of a family of density-based divergences, and
keep the monotone-descent guarantee.  The likelihood fit comes back as the
Kullback-Leibler special case; bounded-residual choices (Hellinger, negative
exponential and friends) buy resistance to gross errors at little cost when
the model is right.

Module map:

- divergence:   generators G, residual-adjustment functions, calibration
- mixtures:     mixture specs, densities, sampling for four count/real families
- density:      empirical and kernel-smoothed targets, bandwidth rules, ISE
- engine:       the surrogate-descent fitter and its update building blocks
- selection:    sample-split information criterion for the component count
- robustness:   contamination mechanisms, bias curves, influence, breakdown
- inference:    Fisher/sandwich covariance, deviance tests, finite-step CLT
- segmentation: PGM images, phantom scenes, pixel labeling
- cli:          the `dmmix` command line
"""

from .divergence import (
    KINDS,
    DivergenceSpec,
    RafEnvelope,
    divergence,
    eval_b_weight,
    eval_generator,
    eval_raf,
    raf_envelope,
)
from .mixtures import (
    FAMILIES,
    MixtureSpec,
    canonicalize,
    component_pmf,
    family_dim,
    family_param_names,
    is_count_family,
    mixture_density,
    responsibilities,
    sample,
    support_window,
)
from .density import (
    DISCRETE_KERNELS,
    DensityEstimate,
    continuous_kde,
    discrete_kernel_pmf,
    empirical_pmf,
    epanechnikov_bandwidth,
    ise,
    kernel_moments,
    moment_bandwidth,
    smoothed_pmf,
)
from .engine import (
    OPTIMIZERS,
    PI_UPDATES,
    FitConfig,
    FitResult,
    divergence_d,
    fit,
    kmeans_init,
    m_step_component,
    matched_pi_update,
    nelmix_rate_step,
    pi_update,
    surrogate_q,
)
from .selection import (
    SelectionConfig,
    SelectionResult,
    dimension_match,
    gdic,
    gdic_row,
    majority_vote,
    param_dim,
    penalty_weight,
    split_select_estimate,
)
from .robustness import (
    MECHANISMS,
    ContaminationSpec,
    bias_curve,
    breakdown_probe,
    contaminate,
    empirical_influence,
)
from .inference import (
    InferenceReport,
    build_report,
    clt_harness,
    coord_names,
    curvature_matrix,
    m_n_rule,
    natural_coords,
    psi_gradient,
    sandwich_cov,
    score_and_fisher,
    wilks_stat,
)
from .segmentation import (
    LabelImage,
    PgmParseError,
    contaminate_image,
    default_display_values,
    label_accuracy,
    phantom,
    read_pgm,
    render_labels,
    segment,
    write_pgm,
)

__version__ = "0.1.0"

__all__ = [
    "KINDS",
    "DivergenceSpec",
    "RafEnvelope",
    "divergence",
    "eval_b_weight",
    "eval_generator",
    "eval_raf",
    "raf_envelope",
    "FAMILIES",
    "MixtureSpec",
    "canonicalize",
    "component_pmf",
    "family_dim",
    "family_param_names",
    "is_count_family",
    "mixture_density",
    "responsibilities",
    "sample",
    "support_window",
    "DISCRETE_KERNELS",
    "DensityEstimate",
    "continuous_kde",
    "discrete_kernel_pmf",
    "empirical_pmf",
    "epanechnikov_bandwidth",
    "ise",
    "kernel_moments",
    "moment_bandwidth",
    "smoothed_pmf",
    "OPTIMIZERS",
    "PI_UPDATES",
    "FitConfig",
    "FitResult",
    "divergence_d",
    "fit",
    "kmeans_init",
    "m_step_component",
    "matched_pi_update",
    "nelmix_rate_step",
    "pi_update",
    "surrogate_q",
    "SelectionConfig",
    "SelectionResult",
    "dimension_match",
    "gdic",
    "gdic_row",
    "majority_vote",
    "param_dim",
    "penalty_weight",
    "split_select_estimate",
    "MECHANISMS",
    "ContaminationSpec",
    "bias_curve",
    "breakdown_probe",
    "contaminate",
    "empirical_influence",
    "InferenceReport",
    "build_report",
    "clt_harness",
    "coord_names",
    "curvature_matrix",
    "m_n_rule",
    "natural_coords",
    "psi_gradient",
    "sandwich_cov",
    "score_and_fisher",
    "wilks_stat",
    "LabelImage",
    "PgmParseError",
    "contaminate_image",
    "default_display_values",
    "label_accuracy",
    "phantom",
    "read_pgm",
    "render_labels",
    "segment",
    "write_pgm",
    "__version__",
]
