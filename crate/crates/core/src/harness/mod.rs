//! Compile and execute extracted tests under a compiler profile, classifying
//! each into the four-way outcome taxonomy: parsing error, compile error,
//! runtime fail, pass.
//!
//! Infrastructure faults (compiler missing, spawn failure) are reported as a
//! distinct ledger entry kind and never counted into the taxonomy: they say
//! nothing about the test or the compiler under validation.

mod process;

pub use process::{run_with_timeout, ProcessOutput};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{ExtractedTest, ExtractionOutcome};
use crate::lang::Language;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("compiler executable not found: {0}")]
    CompilerNotFound(String),
    #[error("failed to spawn test binary: {0}")]
    SpawnFailure(String),
    #[error("profile is for {profile} but test is {test}")]
    LanguageMismatch { profile: Language, test: Language },
    #[error("inconsistent classification inputs: {0}")]
    InconsistentInputs(&'static str),
    #[error("compile command template must contain {{src}} and {{out}}")]
    BadCommandTemplate,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How to compile tests of one language, including the support headers
/// written next to every test source.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompilerProfile {
    pub language: Language,
    /// Command template with `{src}` and `{out}` placeholders, tokenized on
    /// whitespace (no shell).
    pub compile_command: String,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
    /// File name -> content, written into the build directory. C/C++
    /// profiles ship `acc_testsuite.h`, Fortran profiles `acc_testsuite.Fh`.
    #[serde(default)]
    pub support_headers: BTreeMap<String, String>,
}

impl CompilerProfile {
    /// The executable named by the command template.
    pub fn compiler_executable(&self) -> Option<&str> {
        self.compile_command.split_whitespace().next()
    }

    pub fn check(&self) -> Result<(), HarnessError> {
        if !self.compile_command.contains("{src}") || !self.compile_command.contains("{out}") {
            return Err(HarnessError::BadCommandTemplate);
        }
        Ok(())
    }
}

/// Execution policy for test binaries. Every test builds and runs in a fresh
/// temporary directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunPolicy {
    pub timeout_s: u64,
    #[serde(default)]
    pub working_dir_mode: WorkingDirMode,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkingDirMode {
    #[default]
    FreshTempPerTest,
}

impl Default for RunPolicy {
    fn default() -> Self {
        Self {
            timeout_s: 60,
            working_dir_mode: WorkingDirMode::FreshTempPerTest,
        }
    }
}

/// The four-way outcome taxonomy, in precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalOutcome {
    ParsingError,
    CompileError,
    RuntimeFail,
    Pass,
}

impl EvalOutcome {
    pub const ALL: [EvalOutcome; 4] = [
        EvalOutcome::ParsingError,
        EvalOutcome::CompileError,
        EvalOutcome::RuntimeFail,
        EvalOutcome::Pass,
    ];

    /// Column label used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            EvalOutcome::ParsingError => "Parsing Error",
            EvalOutcome::CompileError => "Compile Fail",
            EvalOutcome::RuntimeFail => "Runtime Fail",
            EvalOutcome::Pass => "Pass",
        }
    }

    /// Stable key used in ledgers and CSV.
    pub fn key(self) -> &'static str {
        match self {
            EvalOutcome::ParsingError => "parsing_error",
            EvalOutcome::CompileError => "compile_error",
            EvalOutcome::RuntimeFail => "runtime_fail",
            EvalOutcome::Pass => "pass",
        }
    }
}

#[derive(Debug, Clone)]
pub enum CompileResult {
    Success {
        binary: PathBuf,
        stderr: String,
        duration_ms: u64,
    },
    Failure {
        stderr: String,
        duration_ms: u64,
    },
}

impl CompileResult {
    pub fn succeeded(&self) -> bool {
        matches!(self, CompileResult::Success { .. })
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub exit_code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    pub duration_ms: u64,
    pub timed_out: bool,
}

/// Per-test evaluation record. `exit_code` is the run exit code and is
/// absent unless the test compiled and ran.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub prompt_id: String,
    pub outcome: EvalOutcome,
    pub exit_code: Option<i32>,
    pub compile_stderr: String,
    pub run_stdout: String,
    pub run_stderr: String,
    pub compile_ms: u64,
    pub run_ms: u64,
    pub timed_out: bool,
}

/// An infrastructure fault for one test: not an outcome, excluded from the
/// taxonomy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfraFault {
    pub prompt_id: String,
    pub stage: String,
    pub message: String,
}

/// One results-ledger line: either a taxonomy record or an infrastructure
/// fault.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalEntry {
    Record(EvalRecord),
    Fault(InfraFault),
}

impl EvalEntry {
    pub fn prompt_id(&self) -> &str {
        match self {
            EvalEntry::Record(r) => &r.prompt_id,
            EvalEntry::Fault(f) => &f.prompt_id,
        }
    }

    pub fn as_record(&self) -> Option<&EvalRecord> {
        match self {
            EvalEntry::Record(r) => Some(r),
            EvalEntry::Fault(_) => None,
        }
    }
}

/// Write the test source plus the profile's support headers into `dir` and
/// run the compile command there. A nonzero compiler exit is a
/// `CompileResult::Failure`; a missing compiler executable is an error.
pub fn compile(
    test: &ExtractedTest,
    profile: &CompilerProfile,
    dir: &Path,
) -> Result<CompileResult, HarnessError> {
    if profile.language != test.language {
        return Err(HarnessError::LanguageMismatch {
            profile: profile.language,
            test: test.language,
        });
    }
    profile.check()?;

    let src = dir.join(format!("test.{}", test.language.extension()));
    std::fs::write(&src, &test.code)?;
    for (name, content) in &profile.support_headers {
        std::fs::write(dir.join(name), content)?;
    }
    let out = dir.join("test_bin");

    let tokens: Vec<String> = profile
        .compile_command
        .split_whitespace()
        .map(|t| {
            t.replace("{src}", &src.to_string_lossy())
                .replace("{out}", &out.to_string_lossy())
        })
        .collect();
    let (program, args) = tokens
        .split_first()
        .ok_or(HarnessError::BadCommandTemplate)?;

    let mut command = Command::new(program);
    command.args(args).current_dir(dir).envs(&profile.env);
    let result = run_with_timeout(&mut command, None);
    let output = match result {
        Ok(output) => output,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(HarnessError::CompilerNotFound(program.clone()));
        }
        Err(e) => return Err(e.into()),
    };

    if output.exit_code == Some(0) {
        Ok(CompileResult::Success {
            binary: out,
            stderr: output.stderr,
            duration_ms: output.duration_ms,
        })
    } else {
        Ok(CompileResult::Failure {
            stderr: output.stderr,
            duration_ms: output.duration_ms,
        })
    }
}

/// Run a compiled test binary under the policy's timeout.
pub fn execute(binary: &Path, policy: &RunPolicy) -> Result<RunResult, HarnessError> {
    let mut command = Command::new(binary);
    if let Some(dir) = binary.parent() {
        command.current_dir(dir);
    }
    let output = run_with_timeout(&mut command, Some(Duration::from_secs(policy.timeout_s)))
        .map_err(|e| HarnessError::SpawnFailure(e.to_string()))?;
    Ok(RunResult {
        exit_code: output.exit_code,
        stdout: output.stdout,
        stderr: output.stderr,
        duration_ms: output.duration_ms,
        timed_out: output.timed_out,
    })
}

/// Pure classification over the stage results. `compile` must be present iff
/// extraction succeeded; `run` must be present iff compilation succeeded.
pub fn classify(
    extraction: &ExtractionOutcome,
    compile: Option<&CompileResult>,
    run: Option<&RunResult>,
) -> Result<EvalOutcome, HarnessError> {
    match extraction {
        ExtractionOutcome::ParsingError { .. } => {
            if compile.is_some() || run.is_some() {
                return Err(HarnessError::InconsistentInputs(
                    "parsing errors have no compile or run results",
                ));
            }
            Ok(EvalOutcome::ParsingError)
        }
        ExtractionOutcome::Ok { .. } => match compile {
            None => Err(HarnessError::InconsistentInputs(
                "extracted tests must have a compile result",
            )),
            Some(CompileResult::Failure { .. }) => {
                if run.is_some() {
                    return Err(HarnessError::InconsistentInputs(
                        "compile failures have no run result",
                    ));
                }
                Ok(EvalOutcome::CompileError)
            }
            Some(CompileResult::Success { .. }) => match run {
                None => Err(HarnessError::InconsistentInputs(
                    "compiled tests must have a run result",
                )),
                Some(run) => {
                    if run.timed_out || run.exit_code != Some(0) {
                        Ok(EvalOutcome::RuntimeFail)
                    } else {
                        Ok(EvalOutcome::Pass)
                    }
                }
            },
        },
    }
}

/// Evaluate a suite of extraction outcomes. Each test builds and runs in an
/// isolated fresh directory; output order equals input order regardless of
/// `workers`. Infrastructure faults become `EvalEntry::Fault` lines.
pub fn evaluate_suite(
    tests: &[ExtractionOutcome],
    profiles: &BTreeMap<Language, CompilerProfile>,
    policy: &RunPolicy,
    workers: usize,
) -> Vec<EvalEntry> {
    let workers = workers.max(1).min(tests.len().max(1));
    let slots: Vec<Mutex<Option<EvalEntry>>> = (0..tests.len()).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);

    let run_one = |outcome: &ExtractionOutcome| -> EvalEntry {
        match outcome {
            ExtractionOutcome::ParsingError { prompt_id, .. } => EvalEntry::Record(EvalRecord {
                prompt_id: prompt_id.clone(),
                outcome: EvalOutcome::ParsingError,
                exit_code: None,
                compile_stderr: String::new(),
                run_stdout: String::new(),
                run_stderr: String::new(),
                compile_ms: 0,
                run_ms: 0,
                timed_out: false,
            }),
            ExtractionOutcome::Ok { test } => evaluate_one(test, profiles, policy),
        }
    };

    if workers <= 1 {
        for (i, test) in tests.iter().enumerate() {
            *slots[i].lock().unwrap() = Some(run_one(test));
        }
    } else {
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= tests.len() {
                        break;
                    }
                    let entry = run_one(&tests[i]);
                    *slots[i].lock().unwrap() = Some(entry);
                });
            }
        });
    }

    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

fn evaluate_one(
    test: &ExtractedTest,
    profiles: &BTreeMap<Language, CompilerProfile>,
    policy: &RunPolicy,
) -> EvalEntry {
    let fault = |stage: &str, message: String| {
        EvalEntry::Fault(InfraFault {
            prompt_id: test.prompt_id.clone(),
            stage: stage.to_string(),
            message,
        })
    };

    let Some(profile) = profiles.get(&test.language) else {
        return fault(
            "compile",
            format!("no compiler profile for {}", test.language),
        );
    };
    let dir = match tempfile::TempDir::new() {
        Ok(dir) => dir,
        Err(e) => return fault("compile", format!("cannot create build directory: {e}")),
    };
    let compiled = match compile(test, profile, dir.path()) {
        Ok(result) => result,
        Err(e) => return fault("compile", e.to_string()),
    };

    match compiled {
        CompileResult::Failure {
            stderr,
            duration_ms,
        } => EvalEntry::Record(EvalRecord {
            prompt_id: test.prompt_id.clone(),
            outcome: EvalOutcome::CompileError,
            exit_code: None,
            compile_stderr: stderr,
            run_stdout: String::new(),
            run_stderr: String::new(),
            compile_ms: duration_ms,
            run_ms: 0,
            timed_out: false,
        }),
        CompileResult::Success {
            ref binary,
            ref stderr,
            duration_ms,
        } => {
            let run = match execute(binary, policy) {
                Ok(run) => run,
                Err(e) => return fault("execute", e.to_string()),
            };
            let outcome = if run.timed_out || run.exit_code != Some(0) {
                EvalOutcome::RuntimeFail
            } else {
                EvalOutcome::Pass
            };
            EvalEntry::Record(EvalRecord {
                prompt_id: test.prompt_id.clone(),
                outcome,
                exit_code: run.exit_code,
                compile_stderr: stderr.clone(),
                run_stdout: run.stdout,
                run_stderr: run.stderr,
                compile_ms: duration_ms,
                run_ms: run.duration_ms,
                timed_out: run.timed_out,
            })
        }
    }
}

/// Summary CSV: one row per test with `prompt_id, outcome, exit_code`.
/// Faults are written with outcome `fault`.
pub fn write_summary_csv(entries: &[EvalEntry], path: &Path) -> std::io::Result<()> {
    let mut out = String::from("prompt_id,outcome,exit_code\n");
    for entry in entries {
        match entry {
            EvalEntry::Record(r) => {
                let code = r.exit_code.map(|c| c.to_string()).unwrap_or_default();
                out.push_str(&format!("{},{},{}\n", r.prompt_id, r.outcome.key(), code));
            }
            EvalEntry::Fault(f) => {
                out.push_str(&format!("{},fault,\n", f.prompt_id));
            }
        }
    }
    std::fs::write(path, out)
}
