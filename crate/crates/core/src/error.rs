use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite {what} at y = {at}")]
    NonFinite { what: &'static str, at: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "continuation curvature {curvature} drops below u0 = {u0} at y = {at}; \
         try a smaller blend width than {blend_width}"
    )]
    Extension {
        blend_width: f64,
        at: f64,
        curvature: f64,
        u0: f64,
    },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("model violation: {0}")]
    ModelViolation(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("paths were generated from different noise streams ({0})")]
    Coupling(String),

    #[error("empty experiment: at least one trial is required")]
    EmptyExperiment,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
