use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] lcm_spectra::Error),

    #[error("{0}")]
    Usage(String),

    #[error("i/o: {0}")]
    Io(#[from] io::Error),

    #[error("{failed} identity check(s) failed")]
    VerifyFailed { failed: usize },
}

impl CliError {
    /// 2: invalid parameters, 3: certificate unavailable, 4: numerical failure.
    pub fn exit_code(&self) -> i32 {
        use lcm_spectra::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidParams { .. }
                | E::InvalidArgument(_)
                | E::ZetaDomain(_)
                | E::PrimeBeyondCutoff { .. }
                | E::EnumerationTooLarge { .. }
                | E::NoClosedForm { .. } => 2,
                E::CertificateUnavailable { .. } => 3,
                E::Overflow(_)
                | E::NoConvergence { .. }
                | E::BelowFloor { .. }
                | E::CapExceeded { .. }
                | E::Cache(_) => 4,
            },
            CliError::Io(_) | CliError::VerifyFailed { .. } => 4,
        }
    }
}
