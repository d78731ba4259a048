use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least 3, got {0}")]
    InvalidDimension(i64),

    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("{what} = {value} is outside the valid range {range}")]
    Range {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("{0} did not converge")]
    NonConvergence(String),

    #[error("dimension {n} has no elliptic closed form (hyperelliptic, genus {genus})")]
    UnsupportedDimension { n: u32, genus: u32 },

    #[error("no real singular solution exists for n = {0}")]
    NoSingularBranch(u32),

    #[error("operation requires the {expected} family")]
    KindMismatch { expected: &'static str },

    #[error("degenerate discriminant g2^3 - 27 g3^2 = {0}")]
    DegenerateDiscriminant(f64),

    #[error("evaluation too close to a pole at x = {0}")]
    Pole(f64),

    #[error("{0}")]
    Mismatch(String),
}

impl Error {
    pub fn range(what: &'static str, value: f64, range: impl Into<String>) -> Self {
        Error::Range {
            what,
            value,
            range: range.into(),
        }
    }

    pub fn domain(what: &'static str, value: f64, domain: impl Into<String>) -> Self {
        Error::Domain {
            what,
            value,
            domain: domain.into(),
        }
    }

    /// True for failures of an iterative numeric method (as opposed to bad input).
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence(_))
    }
}
