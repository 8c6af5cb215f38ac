//! Running external SMT solvers on emitted files.
//!
//! Solvers are described in a TOML config (name, argv template with a
//! `{file}` placeholder, timeout, whether stdout carries a model). A run
//! spawns the child with stdout piped and stderr discarded, reads stdout
//! from a helper thread, and polls the child against a deadline; children
//! still alive at the deadline are killed and reported as a timeout. The
//! verdict is the first whitespace token of stdout; anything besides
//! `sat`/`unsat`/`unknown` is an error status, not a fault.

use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Deserialize;
use thiserror::Error;

/// Name of the environment variable holding extra directories (colon
/// separated) searched for solver executables before the system path.
pub const SOLVER_PATH_VAR: &str = "SOLVER_PATH";

/// How to invoke one solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverSpec {
    pub name: String,
    /// Argument vector; exactly one element contains `{file}`, replaced
    /// by the script path at run time. First element is the program.
    pub command: Vec<String>,
    pub timeout: Duration,
    /// Whether stdout carries a model after a `sat` verdict.
    pub produces_models: bool,
    /// Extra wall time a timed-out run may consume beyond `timeout`
    /// before the measurement itself counts as broken.
    pub grace: Duration,
}

pub const DEFAULT_GRACE: Duration = Duration::from_secs(1);

/// Verdict of one solver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    Error,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Sat => "sat",
            SolveStatus::Unsat => "unsat",
            SolveStatus::Unknown => "unknown",
            SolveStatus::Timeout => "timeout",
            SolveStatus::Error => "error",
        })
    }
}

/// Outcome of one solver invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverRun {
    pub solver: String,
    pub status: SolveStatus,
    pub wall_time: Duration,
    /// Stdout after the verdict line, when the run was `sat` and the
    /// solver is configured to print models.
    pub raw_model: Option<String>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("could not start `{program}`: {source}")]
    SpawnFailure {
        program: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid solver config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("solver `{solver}`: {reason}")]
    Invalid { solver: String, reason: String },
    #[error("solver config lists no solvers")]
    NoSolvers,
}

#[derive(Deserialize)]
struct ConfigFile {
    #[serde(default)]
    solver: Vec<SolverEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverEntry {
    name: String,
    command: Vec<String>,
    timeout_s: f64,
    produces_models: bool,
    grace_s: Option<f64>,
}

/// Parses a solver config:
///
/// ```toml
/// [[solver]]
/// name = "z3"
/// command = ["z3", "-model", "{file}"]
/// timeout_s = 60
/// produces_models = true
/// grace_s = 1    # optional
/// ```
pub fn load_solver_config(text: &str) -> Result<Vec<SolverSpec>, ConfigError> {
    let file: ConfigFile = toml::from_str(text)?;
    if file.solver.is_empty() {
        return Err(ConfigError::NoSolvers);
    }
    file.solver
        .into_iter()
        .map(|entry| {
            let invalid = |reason: &str| ConfigError::Invalid {
                solver: entry.name.clone(),
                reason: reason.to_string(),
            };
            if entry.command.is_empty() {
                return Err(invalid("empty command"));
            }
            let placeholders: usize =
                entry.command.iter().map(|arg| arg.matches("{file}").count()).sum();
            match placeholders {
                0 => return Err(invalid("command has no {file} placeholder")),
                1 => {}
                _ => return Err(invalid("command has more than one {file} placeholder")),
            }
            if !(entry.timeout_s.is_finite() && entry.timeout_s > 0.0) {
                return Err(invalid("timeout must be positive"));
            }
            let grace_s = entry.grace_s.unwrap_or(1.0);
            if !(grace_s.is_finite() && grace_s >= 0.0) {
                return Err(invalid("grace must be nonnegative"));
            }
            Ok(SolverSpec {
                name: entry.name,
                command: entry.command,
                timeout: Duration::from_secs_f64(entry.timeout_s),
                produces_models: entry.produces_models,
                grace: Duration::from_secs_f64(grace_s),
            })
        })
        .collect()
}

/// Resolves a program name against the `SOLVER_PATH`-style directory list;
/// names containing a path separator and names not found in the list are
/// returned unchanged for ordinary system lookup.
fn resolve_program(name: &str, solver_path: Option<&str>) -> PathBuf {
    if name.contains('/') {
        return PathBuf::from(name);
    }
    if let Some(dirs) = solver_path {
        for dir in dirs.split(':').filter(|d| !d.is_empty()) {
            let candidate = Path::new(dir).join(name);
            if candidate.is_file() {
                return candidate;
            }
        }
    }
    PathBuf::from(name)
}

const POLL_INTERVAL: Duration = Duration::from_millis(2);

/// Runs one solver on one file, enforcing the configured timeout.
pub fn run_solver(spec: &SolverSpec, file: &Path) -> Result<SolverRun, RunError> {
    let solver_path = std::env::var(SOLVER_PATH_VAR).ok();
    let program = resolve_program(&spec.command[0], solver_path.as_deref());
    let args: Vec<String> =
        spec.command[1..].iter().map(|a| a.replace("{file}", &file.to_string_lossy())).collect();

    let start = Instant::now();
    let mut child = Command::new(&program)
        .args(&args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| RunError::SpawnFailure {
            program: program.to_string_lossy().into_owned(),
            source,
        })?;

    let mut stdout_pipe = child.stdout.take().expect("stdout was piped");
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout_pipe.read_to_string(&mut buf);
        buf
    });

    let deadline = start + spec.timeout;
    let timed_out = loop {
        match child.try_wait() {
            Ok(Some(_)) => break false,
            Ok(None) if Instant::now() >= deadline => {
                // Deadline passed with the child alive: kill it. The kill
                // may race with a natural exit; either way wait() reaps it.
                let _ = child.kill();
                let _ = child.wait();
                break true;
            }
            Ok(None) => std::thread::sleep(POLL_INTERVAL),
            Err(_) => break false,
        }
    };
    let wall_time = start.elapsed();
    let stdout_text = reader.join().unwrap_or_default();

    if timed_out {
        return Ok(SolverRun {
            solver: spec.name.clone(),
            status: SolveStatus::Timeout,
            wall_time,
            raw_model: None,
        });
    }

    let status = match stdout_text.split_whitespace().next() {
        Some("sat") => SolveStatus::Sat,
        Some("unsat") => SolveStatus::Unsat,
        Some("unknown") => SolveStatus::Unknown,
        _ => SolveStatus::Error,
    };
    let raw_model = if status == SolveStatus::Sat && spec.produces_models {
        let rest = stdout_text.split_once('\n').map(|(_, rest)| rest).unwrap_or("");
        (!rest.trim().is_empty()).then(|| rest.to_string())
    } else {
        None
    };
    Ok(SolverRun { solver: spec.name.clone(), status, wall_time, raw_model })
}

/// Runs `(spec, file)` jobs over a pool of `workers` threads, preserving
/// job order in the results.
pub fn run_many(
    jobs: &[(SolverSpec, PathBuf)],
    workers: usize,
) -> Vec<Result<SolverRun, RunError>> {
    let workers = workers.max(1).min(jobs.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<SolverRun, RunError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= jobs.len() {
                    break;
                }
                let (spec, file) = &jobs[index];
                let outcome = run_solver(spec, file);
                results.lock().unwrap()[index] = Some(outcome);
            });
        }
    });
    results.into_inner().unwrap().into_iter().map(|r| r.expect("every job ran")).collect()
}
