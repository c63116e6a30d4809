//! Exit-code classification.
//!
//! 0 success, 2 unreadable or invalid input (and I/O failures),
//! 3 invalid configuration, 4 numeric failure.

use std::fmt;

use loadlens::features::FeatureError;
use loadlens::ingest::IngestError;
use loadlens::learn::LearnError;
use loadlens::momentplane::PlaneError;
use loadlens::stats::StatsError;
use loadlens::synth::SynthError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Input,
    Config,
    Numeric,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Input => 2,
            Kind::Config => 3,
            Kind::Numeric => 4,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub fn fail(kind: Kind, error: impl Into<anyhow::Error>) -> Failure {
    Failure { kind, error: error.into() }
}

pub fn config(msg: impl fmt::Display) -> Failure {
    fail(Kind::Config, anyhow::anyhow!("{msg}"))
}

/// Library errors know which exit code they deserve.
pub trait Classify {
    fn kind(&self) -> Kind;
}

impl Classify for IngestError {
    fn kind(&self) -> Kind {
        Kind::Input
    }
}

impl Classify for StatsError {
    fn kind(&self) -> Kind {
        match self {
            StatsError::SeriesTooShort { .. } | StatsError::InvalidConfig(_) | StatsError::TooFewSamples(_) => {
                Kind::Config
            }
            StatsError::NonFinite(_) => Kind::Input,
            StatsError::DegenerateSample => Kind::Numeric,
        }
    }
}

impl Classify for PlaneError {
    fn kind(&self) -> Kind {
        Kind::Numeric
    }
}

impl Classify for FeatureError {
    fn kind(&self) -> Kind {
        match self {
            FeatureError::UnknownFeature(_) => Kind::Config,
            FeatureError::Stats(e) => e.kind(),
            _ => Kind::Input,
        }
    }
}

impl Classify for LearnError {
    fn kind(&self) -> Kind {
        match self {
            LearnError::UnknownPreset(_) | LearnError::InvalidConfig(_) => Kind::Config,
            LearnError::DegenerateDesign | LearnError::NonFiniteLoss { .. } => Kind::Numeric,
            _ => Kind::Input,
        }
    }
}

impl Classify for SynthError {
    fn kind(&self) -> Kind {
        match self {
            SynthError::Io { .. } => Kind::Input,
            _ => Kind::Config,
        }
    }
}

impl Classify for std::io::Error {
    fn kind(&self) -> Kind {
        Kind::Input
    }
}

impl Classify for serde_json::Error {
    fn kind(&self) -> Kind {
        Kind::Input
    }
}

pub trait OrFail<T> {
    /// Classifies the error and prefixes it with `context`.
    fn or_fail(self, context: impl fmt::Display) -> CmdResult<T>;
}

impl<T, E> OrFail<T> for Result<T, E>
where
    E: Classify + std::error::Error + Send + Sync + 'static,
{
    fn or_fail(self, context: impl fmt::Display) -> CmdResult<T> {
        self.map_err(|e| {
            let kind = e.kind();
            let tag = variant_name(&e);
            fail(kind, anyhow::Error::new(e).context(format!("{context} [{tag}]")))
        })
    }
}

/// Leading identifier of the `Debug` form, e.g. `SeriesTooShort`.
fn variant_name(e: &impl fmt::Debug) -> String {
    let dbg = format!("{e:?}");
    dbg.chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect()
}
