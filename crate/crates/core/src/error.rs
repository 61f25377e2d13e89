use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The pin constraints cannot be satisfied: the law-of-cosines argument
    /// for unit `unit` left [-1, 1] by more than the clamping tolerance.
    #[error("infeasible assembly at unit {unit}: arccos argument {argument}")]
    InfeasibleAssembly { unit: usize, argument: f64 },

    /// A uniform chain with this aspect ratio never closes into a circle.
    #[error("no closure for alpha = {alpha}, n = {n_units}")]
    NoClosure { alpha: f64, n_units: usize },

    /// A sectioned tip evaluation failed at a given sample of a sweep.
    #[error("sweep failed at sample {index} (psi = {psi}): {source}")]
    Sweep {
        index: usize,
        psi: f64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    /// A NaN appeared in the forward pass of a recorded computation.
    #[error("NaN produced by `{op}` during forward evaluation")]
    NanPoisoned { op: &'static str },

    /// A target curve could not be processed.
    #[error("target error: {0}")]
    Target(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn target(msg: impl Into<String>) -> Self {
        Error::Target(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
