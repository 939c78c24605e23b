use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("structure error: {0}")]
    Structure(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// Step-size underflow or a non-finite state; `t` is the last accepted time.
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("conservation breach: {0}")]
    Conservation(String),

    #[error("degenerate gap between levels {kappa} and {ell}: |ΔE| = {gap:e}")]
    DegenerateGap { kappa: usize, ell: usize, gap: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Structure(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
