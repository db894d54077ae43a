//! GLM generators, SLQC constants and numerical certification of the
//! layer-wise quasi-convexity claims.

mod check;
mod glm;
mod kappa;
mod theorems;

pub use check::{
    check_slqc, GlmLoss, GlmObjective, Objective, SlqcParams, SlqcVerdict, MARGIN_TOLERANCE,
};
pub use glm::{
    active_error, ce_error, ce_gradient, generate_idealized_glm, generate_noisy_glm, glm_error,
    glm_subgradient, GlmInstance,
};
pub use kappa::{
    inner_layer_error_ceiling, inner_layer_min_eps, kappa_for, noisy_sample_complexity,
    KappaSetting,
};
pub use theorems::{
    certify, generate_inner_layer, per_sample_floor, theorem_margin, InnerLayerInstance,
    SuiteConfig, SuiteReport, Theorem, TheoremProblem,
};
