//! Maximum-likelihood fitting of the Lerch family and nested model selection.

mod fit;
mod optimize;
mod select;

pub use fit::{
    fit_mle, fit_mle_with_starts, log_likelihood, standard_errors, FitConstraints, FitOptions, FitWarning,
    FittedModel, ParamErrors, SampleMoments, GRAD_TOL, MIN_FIT_SIZE, SMALL_SAMPLE_SIZE,
};
pub use select::{llr_test, select_model, CandidateRecord, Decision, LlrTest, Selection, SelectionTrace};

pub use crate::sample::SpellSample;
