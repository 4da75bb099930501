use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shift: {0}")]
    InvalidSft(String),

    #[error("inadmissible word {0}")]
    Inadmissible(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("word too short: need coordinates {need_lo}..={need_hi}, word covers {have_lo}..={have_hi}")]
    WordTooShort {
        need_lo: i64,
        need_hi: i64,
        have_lo: i64,
        have_hi: i64,
    },

    #[error("block length {block} is smaller than required {required}")]
    BlockTooShort { block: usize, required: usize },

    #[error("invalid cylinder set: {0}")]
    InvalidSet(String),

    #[error("open-set classifier violates refinement monotonicity at depth {depth}: {detail}")]
    NonMonotoneClassifier { depth: usize, detail: String },

    #[error("alpha = {alpha} outside the domain (alpha must be below {alpha_max})")]
    OutsideDomain { alpha: f64, alpha_max: f64 },

    #[error("target set is empty")]
    EmptySet,

    #[error("equilibrium state is not unique: {0} dominant components")]
    NotUnique(usize),

    #[error("parameter S = {s} does not exceed the survivor pressure {critical}")]
    BelowCritical { s: f64, critical: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("memory bound exceeded: {cells} cells requested, limit {limit}")]
    TooLarge { cells: u64, limit: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
