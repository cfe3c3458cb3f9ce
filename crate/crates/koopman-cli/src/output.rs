//! Report files: one pair per stage and truncation, plus a summary.

use std::fs;
use std::path::{Path, PathBuf};

use koopman::verify::VerificationReport;
use serde::Serialize;

use crate::config::Format;
use crate::error::CliError;
use crate::pipeline::RunOutcome;

#[derive(Serialize)]
struct StageSummary<'a> {
    stage: &'a str,
    truncation: Option<usize>,
    pass: bool,
    checks: usize,
    failed: Vec<&'a str>,
    expected_failures: Vec<&'a str>,
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    pass: bool,
    stages: Vec<StageSummary<'a>>,
}

fn write(path: PathBuf, text: &str) -> Result<(), CliError> {
    fs::write(&path, text).map_err(|e| CliError::Io { path, source: e })
}

fn write_report(dir: &Path, stem: &str, report: &VerificationReport, formats: &[Format]) -> Result<(), CliError> {
    for f in formats {
        match f {
            Format::Json => write(dir.join(format!("{stem}.json")), &(serde_json::to_string_pretty(report)? + "\n"))?,
            Format::Txt => write(dir.join(format!("{stem}.txt")), &report.to_table())?,
        }
    }
    Ok(())
}

pub fn write_outcome(dir: &Path, name: &str, outcome: &RunOutcome, formats: &[Format]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
    let mut stages = Vec::new();
    for s in &outcome.stages {
        write_report(dir, &s.stem(), &s.report, formats)?;
        stages.push(StageSummary {
            stage: s.stage.name(),
            truncation: s.truncation,
            pass: s.report.status(),
            checks: s.report.checks.len(),
            failed: s.report.checks.iter().filter(|c| !c.acceptable()).map(|c| c.name.as_str()).collect(),
            expected_failures: s.report.checks.iter().filter(|c| c.expected_failure.is_some()).map(|c| c.name.as_str()).collect(),
        });
    }
    let summary = Summary { name, pass: outcome.status(), stages };
    if formats.contains(&Format::Json) {
        write(dir.join("summary.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    }
    if formats.contains(&Format::Txt) {
        write(dir.join("summary.txt"), &outcome.summary().to_table())?;
    }
    Ok(())
}
