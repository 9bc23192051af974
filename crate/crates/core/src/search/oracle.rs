//! Accuracy oracles queried by the schedule search.
//!
//! A command oracle is an external process. The argv template may contain a
//! `{schedule}` placeholder, which is replaced by the path of a file holding
//! the candidate schedule as JSON; without a placeholder the JSON is written
//! to the process's standard input. The process must exit with status 0 and
//! print exactly one decimal number in `[0, 1]` on standard output.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::curriculum::Schedule;
use crate::error::{Error, Result};

pub const SCHEDULE_PLACEHOLDER: &str = "{schedule}";

/// Anything that can score a candidate schedule.
///
/// `bandwidths` is the per-stage crop vector the schedule was built from.
pub trait AccuracyOracle: Send + Sync {
    fn accuracy(&self, schedule: &Schedule, bandwidths: &[u32]) -> Result<f64>;
}

impl<F> AccuracyOracle for F
where
    F: Fn(&[u32]) -> f64 + Send + Sync,
{
    fn accuracy(&self, _schedule: &Schedule, bandwidths: &[u32]) -> Result<f64> {
        Ok(self(bandwidths))
    }
}

/// Comma-joined key used for tables and caches, e.g. `"160,192,224"`.
pub fn bandwidth_key(bandwidths: &[u32]) -> String {
    bandwidths.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleMode {
    Command { argv: Vec<String> },
    Table { table: BTreeMap<String, f64> },
}

/// How to obtain accuracies, plus the command timeout in seconds.
///
/// JSON: `{"mode": "command", "argv": [...], "timeout": 60.0}` or
/// `{"mode": "table", "table": {"160,192,224": 0.813}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OracleRepr", into = "OracleRepr")]
pub struct OracleSpec {
    pub mode: OracleMode,
    pub timeout: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleRepr {
    mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    argv: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<BTreeMap<String, f64>>,
    #[serde(default = "default_timeout")]
    timeout: f64,
}

impl TryFrom<OracleRepr> for OracleSpec {
    type Error = Error;

    fn try_from(r: OracleRepr) -> Result<Self> {
        let mode = match (r.mode.as_str(), r.argv, r.table) {
            ("command", Some(argv), None) => OracleMode::Command { argv },
            ("table", None, Some(table)) => OracleMode::Table { table },
            (mode, _, _) => {
                return Err(Error::Config(format!(
                    "oracle mode '{mode}' needs exactly its own field (argv for command, table for table)"
                )))
            }
        };
        let spec = OracleSpec {
            mode,
            timeout: r.timeout,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<OracleSpec> for OracleRepr {
    fn from(spec: OracleSpec) -> Self {
        let (mode, argv, table) = match spec.mode {
            OracleMode::Command { argv } => ("command", Some(argv), None),
            OracleMode::Table { table } => ("table", None, Some(table)),
        };
        OracleRepr {
            mode: mode.into(),
            argv,
            table,
            timeout: spec.timeout,
        }
    }
}

fn default_timeout() -> f64 {
    3600.0
}

impl OracleSpec {
    pub fn command<S: Into<String>>(argv: impl IntoIterator<Item = S>, timeout: Duration) -> Self {
        Self {
            mode: OracleMode::Command {
                argv: argv.into_iter().map(Into::into).collect(),
            },
            timeout: timeout.as_secs_f64(),
        }
    }

    pub fn table(entries: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Self {
        Self {
            mode: OracleMode::Table {
                table: entries.into_iter().map(|(b, acc)| (bandwidth_key(&b), acc)).collect(),
            },
            timeout: default_timeout(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            return Err(Error::Config(format!(
                "oracle timeout must be positive, got {}",
                self.timeout
            )));
        }
        if let OracleMode::Command { argv } = &self.mode {
            if argv.is_empty() {
                return Err(Error::Config("command oracle needs a program".into()));
            }
        }
        Ok(())
    }
}

impl AccuracyOracle for OracleSpec {
    fn accuracy(&self, schedule: &Schedule, bandwidths: &[u32]) -> Result<f64> {
        match &self.mode {
            OracleMode::Table { table } => {
                let key = bandwidth_key(bandwidths);
                table.get(&key).copied().ok_or_else(|| Error::Protocol {
                    message: format!("table oracle has no entry for ({key})"),
                    output: String::new(),
                })
            }
            OracleMode::Command { argv } => run_command(argv, schedule, Duration::from_secs_f64(self.timeout)),
        }
    }
}

/// Scores `schedule` with the oracle described by `spec`.
pub fn oracle_invoke(spec: &OracleSpec, schedule: &Schedule) -> Result<f64> {
    spec.validate()?;
    let bandwidths = match &spec.mode {
        OracleMode::Table { .. } => schedule.stage_bandwidths()?,
        OracleMode::Command { .. } => Vec::new(),
    };
    spec.accuracy(schedule, &bandwidths)
}

/// Parses the oracle's standard output: one decimal in `[0, 1]`, nothing else.
pub fn parse_accuracy(stdout: &str) -> Result<f64> {
    let token = stdout.trim();
    let protocol = |message: String| Error::Protocol {
        message,
        output: stdout.to_string(),
    };
    if token.is_empty() || token.split_whitespace().count() != 1 {
        return Err(protocol("expected a single decimal accuracy".into()));
    }
    if !token.chars().all(|c| c.is_ascii_digit() || c == '.') {
        return Err(protocol(format!("'{token}' is not a plain decimal")));
    }
    let value: f64 = token
        .parse()
        .map_err(|_| protocol(format!("'{token}' is not a decimal number")))?;
    if !(0.0..=1.0).contains(&value) {
        return Err(protocol(format!("accuracy {value} outside [0, 1]")));
    }
    Ok(value)
}

fn run_command(argv: &[String], schedule: &Schedule, timeout: Duration) -> Result<f64> {
    let json = serde_json::to_string_pretty(schedule)?;
    let uses_file = argv.iter().any(|a| a.contains(SCHEDULE_PLACEHOLDER));

    let schedule_file = if uses_file {
        let mut file = tempfile::Builder::new()
            .prefix("schedule-")
            .suffix(".json")
            .tempfile()?;
        file.write_all(json.as_bytes())?;
        file.flush()?;
        Some(file)
    } else {
        None
    };
    let args: Vec<String> = match &schedule_file {
        Some(file) => {
            let path = file.path().to_string_lossy();
            argv.iter().map(|a| a.replace(SCHEDULE_PLACEHOLDER, &path)).collect()
        }
        None => argv.to_vec(),
    };

    let mut child = Command::new(&args[0])
        .args(&args[1..])
        .stdin(if uses_file { Stdio::null() } else { Stdio::piped() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Protocol {
            message: format!("failed to start '{}': {e}", args[0]),
            output: String::new(),
        })?;

    if let Some(mut stdin) = child.stdin.take() {
        // a process that exits without reading its input is not an error here
        let _ = stdin.write_all(json.as_bytes());
    }

    let mut stdout_pipe = child.stdout.take().expect("stdout is piped");
    let mut stderr_pipe = child.stderr.take().expect("stderr is piped");
    let stdout_reader = thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout_pipe.read_to_string(&mut buf);
        buf
    });
    let stderr_reader = thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr_pipe.read_to_string(&mut buf);
        buf
    });

    let deadline = Instant::now() + timeout;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Err(Error::Timeout(timeout));
        }
        thread::sleep(Duration::from_millis(5));
    };
    let stdout = stdout_reader.join().unwrap_or_default();
    let stderr = stderr_reader.join().unwrap_or_default();
    drop(schedule_file);

    if !status.success() {
        return Err(Error::Protocol {
            message: format!("oracle exited with {status}"),
            output: format!("{stdout}{stderr}"),
        });
    }
    parse_accuracy(&stdout)
}
