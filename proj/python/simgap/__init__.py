"""Finite-sample calibrated quantile curves of the sim-to-real gap.

The heavy lifting lives in the C++ extension; this package re-exports the
bound operations.
"""

from ._simgap import (  # noqa: F401
    SimgapError,
    __version__,
    auc_cal,
    band,
    bounded,
    calibrate_report,
    calibrated_curve,
    compute_pseudo_gaps,
    cvar_cal,
    empirical,
    empirical_quantile,
    epsilon_correction,
    evaluate_loss,
    guaranteed_coverage,
    ingest,
    ingest_text,
    kl_ball_boundary_1d,
    radius_bernoulli,
    radius_bounded,
    radius_multinomial,
    radius_w1,
    simplex,
    split_gamma_joint,
    validate_dataset,
)

__all__ = [
    "SimgapError",
    "__version__",
    "auc_cal",
    "band",
    "bounded",
    "calibrate_report",
    "calibrated_curve",
    "compute_pseudo_gaps",
    "cvar_cal",
    "empirical",
    "empirical_quantile",
    "epsilon_correction",
    "evaluate_loss",
    "guaranteed_coverage",
    "ingest",
    "ingest_text",
    "kl_ball_boundary_1d",
    "radius_bernoulli",
    "radius_bounded",
    "radius_multinomial",
    "radius_w1",
    "simplex",
    "split_gamma_joint",
    "validate_dataset",
]
