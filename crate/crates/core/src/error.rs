use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("eigensolver did not converge within {iterations} QR sweeps")]
    EigenNoConvergence { iterations: usize },

    #[error("eigenpair residual {residual:e} exceeds bound {bound:e}")]
    EigenResidual { residual: f64, bound: f64 },

    #[error("leading eigenvalue {re} {im:+}i is not real")]
    NonRealLeading { re: f64, im: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("readout is undefined at zero measurement strength (gamma_m = 0)")]
    ZeroMeasurementStrength,

    #[error("outcome normalization failed at step {step}: total probability {total:e}, state {state}")]
    Normalization {
        step: usize,
        total: f64,
        state: String,
    },

    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("closed-form SCGF discriminant g = {0:e} is negative")]
    NegativeDiscriminant(f64),

    #[error("{0} is undefined (zero mean count)")]
    Undefined(&'static str),

    #[error("no transition: q_sum has no positive root when n_avg = 0")]
    NoTransition,

    #[error("Fock truncation leakage {weight:e} at N_max = {n_max}; use N_max >= {suggested}")]
    Truncation {
        weight: f64,
        n_max: usize,
        suggested: usize,
    },

    #[error("root bracketing failed: {0}")]
    Bracket(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
