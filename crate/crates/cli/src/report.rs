use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use solenoid_core::Error as CoreError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    VerdictNegative,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => EXIT_OK,
            Status::VerdictNegative => EXIT_NEGATIVE,
            Status::Error => EXIT_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
    /// Chain entry and index of a failing tower level.
    pub level: Option<u64>,
    pub chain_index: Option<usize>,
}

fn core_kind(e: &CoreError) -> &'static str {
    match e {
        CoreError::InvalidArgument(_) => "InvalidArgument",
        CoreError::ChainDoesNotResolve { .. } => "ChainDoesNotResolve",
        CoreError::Overflow(_) => "Overflow",
        CoreError::CertificateFailure { .. } => "CertificateFailure",
        CoreError::NonzeroAverage { .. } => "NonzeroAverage",
        CoreError::ResonantMode { .. } => "ResonantMode",
        CoreError::SupportInPadding { .. } => "SupportInPadding",
        CoreError::NotContractive { .. } => "NotContractive",
        CoreError::IterationBudgetExceeded { .. } => "IterationBudgetExceeded",
        CoreError::ContractivityViolated { .. } => "ContractivityViolated",
        CoreError::DegenerateNormalization(_) => "DegenerateNormalization",
        CoreError::DenominatorNearZero(_) => "DenominatorNearZero",
        CoreError::NotPeriodic => "NotPeriodic",
        CoreError::PeriodMismatch { .. } => "PeriodMismatch",
        CoreError::Level { source, .. } => core_kind(source),
        CoreError::GridMismatch(_) => "GridMismatch",
        CoreError::Io(_) => "Io",
    }
}

impl ErrorInfo {
    pub fn from_anyhow(e: &anyhow::Error) -> Self {
        let message = format!("{e:#}");
        match e.downcast_ref::<CoreError>() {
            Some(core) => {
                let (level, chain_index) = match core {
                    CoreError::Level { index, level, .. } => (Some(*level), Some(*index)),
                    _ => (None, None),
                };
                ErrorInfo {
                    kind: core_kind(core).to_string(),
                    message,
                    level,
                    chain_index,
                }
            }
            None => ErrorInfo {
                kind: "Config".to_string(),
                message,
                level: None,
                chain_index: None,
            },
        }
    }
}

/// What a subcommand produced before it is wrapped in a report.
pub struct Outcome {
    pub config: Value,
    pub seed: Option<u64>,
    pub body: std::result::Result<Finding, ErrorInfo>,
}

pub struct Finding {
    pub result: Value,
    pub positive: bool,
    pub csv: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub version: &'static str,
    /// The only field allowed to differ between identical runs.
    pub timestamp: String,
    pub seed: Option<u64>,
    pub config: Value,
    pub status: Status,
    pub exit_code: i32,
    pub result: Option<Value>,
    pub error: Option<ErrorInfo>,
}

impl Report {
    pub fn new(command: &str, outcome: &Outcome) -> Self {
        let (status, result, error) = match &outcome.body {
            Ok(f) if f.positive => (Status::Ok, Some(f.result.clone()), None),
            Ok(f) => (Status::VerdictNegative, Some(f.result.clone()), None),
            Err(e) => (Status::Error, None, Some(e.clone())),
        };
        Report {
            schema: format!("solenoid-ab/{command}/v1"),
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            seed: outcome.seed,
            config: outcome.config.clone(),
            status,
            exit_code: status.exit_code(),
            result,
            error,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
