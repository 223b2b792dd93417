use std::fmt;

use crate::rational::RationalDof;

/// Pipeline stage an error surfaced from, used to tag end-to-end failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Plan,
    Channel,
    Allocate,
    Compression,
    Precoders,
    Assemble,
    Verify,
    Mac,
    RelayDecode,
    Broadcast,
    UserDecode,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Plan => "plan",
            Stage::Channel => "channel",
            Stage::Allocate => "allocate",
            Stage::Compression => "compression",
            Stage::Precoders => "precoders",
            Stage::Assemble => "assemble",
            Stage::Verify => "verify",
            Stage::Mac => "mac",
            Stage::RelayDecode => "relay-decode",
            Stage::Broadcast => "broadcast",
            Stage::UserDecode => "user-decode",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("configuration needs a {factor}-symbol extension: {reason}")]
    NeedsExtension { factor: u64, reason: String },

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("alignment infeasible for pair ({i},{j}): null space has dimension {found}, needs {needed}")]
    AlignmentInfeasible {
        i: usize,
        j: usize,
        found: usize,
        needed: usize,
    },

    #[error("degenerate channel realization: {0}; reseed the channel")]
    DegenerateChannel(String),

    #[error("degenerate precoder split for pair ({i},{j}): min singular value {min_sv:.3e}; reseed the channel")]
    DegenerateSplit { i: usize, j: usize, min_sv: f64 },

    #[error("alignment verification failed: residual {residual:.3e} exceeds {tol:.1e}")]
    AlignmentVerification { residual: f64, tol: f64 },

    #[error("network-coded vector not decodable: {0}")]
    Decodability(String),

    #[error("broadcast phase infeasible: {0}")]
    BroadcastInfeasible(String),

    #[error("degenerate slope fit: {0}")]
    DegenerateFit(String),

    #[error("extension factor {t} exceeds cap {cap} for target ratio {ratio}")]
    ExtensionCap { t: u64, cap: u64, ratio: RationalDof },

    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
