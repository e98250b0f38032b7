use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Malformed input: bad index, point outside its square, negative mass.
    #[error("invalid input: {0}")]
    Structural(String),
    /// Well-formed input the operation is not defined for.
    #[error("unsupported use: {0}")]
    Usage(String),
    /// Exact oracles refuse instances above their hard size cap.
    #[error("{what}: instance size {size} exceeds the cap of {limit}")]
    Capacity {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("fairness constraints cannot be met for population {population}")]
    Infeasible { population: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! structural {
    ($($arg:tt)*) => { $crate::error::Error::Structural(alloc::format!($($arg)*)) };
}

macro_rules! usage {
    ($($arg:tt)*) => { $crate::error::Error::Usage(alloc::format!($($arg)*)) };
}

pub(crate) use structural;
pub(crate) use usage;
