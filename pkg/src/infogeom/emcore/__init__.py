"""EM for Gaussian mixtures, maximum entropy, and the em projection geometry."""

from .em import EMState, e_step, evidence_decomposition, loglik, m_step, random_init, run_em
from .geometry import (
    BoltzmannFamily,
    EProjection,
    GeometricEMResult,
    LinearityReport,
    MProjection,
    SaturatedFamily,
    binary_linearization,
    e_projection,
    hidden_stat_table,
    kl_data_to_model,
    linearity_equivalence_check,
    m_projection,
    m_projection_gmm,
    recover_hidden_parameter,
    run_em_geometric,
)
from .maxent import (
    GradientIdentityReport,
    MaxEntProblem,
    MaxEntSolution,
    maxent_gradient_identities,
    maxent_solve,
    power_moment,
)

__all__ = [
    "EMState",
    "e_step",
    "m_step",
    "run_em",
    "loglik",
    "evidence_decomposition",
    "random_init",
    "BoltzmannFamily",
    "SaturatedFamily",
    "MProjection",
    "EProjection",
    "GeometricEMResult",
    "LinearityReport",
    "m_projection",
    "e_projection",
    "hidden_stat_table",
    "m_projection_gmm",
    "recover_hidden_parameter",
    "kl_data_to_model",
    "run_em_geometric",
    "linearity_equivalence_check",
    "binary_linearization",
    "MaxEntProblem",
    "MaxEntSolution",
    "GradientIdentityReport",
    "maxent_solve",
    "maxent_gradient_identities",
    "power_moment",
]
