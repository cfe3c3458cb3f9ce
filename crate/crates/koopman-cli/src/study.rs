//! Convergence of one check across the truncation schedule.

use std::fmt::Write as _;

use koopman::verify::CheckRecord;
use serde::Serialize;

use crate::error::CliError;
use crate::pipeline::RunOutcome;

/// Absolute slack for defects that already sit at roundoff.
pub const ROUNDOFF_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct StudyPoint {
    pub truncation: usize,
    pub defect: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Study {
    pub check: String,
    pub points: Vec<StudyPoint>,
    /// Each defect is at most the previous one plus [`ROUNDOFF_SLACK`].
    pub nonincreasing: bool,
}

impl Study {
    /// Collect `check` (a `<stage>.<name>` or bare `<name>`) from every truncation.
    pub fn collect(outcome: &RunOutcome, check: &str) -> Result<Study, CliError> {
        let mut points = Vec::new();
        for s in &outcome.stages {
            let Some(t) = s.truncation else { continue };
            let qualified = |c: &&CheckRecord| c.name == check || format!("{}.{}", s.stage.name(), c.name) == check;
            if let Some(c) = s.report.checks.iter().find(qualified) {
                points.push(StudyPoint { truncation: t, defect: c.defect.unwrap_or(f64::NAN), pass: c.acceptable() });
            }
        }
        if points.is_empty() {
            return Err(CliError::UnknownCheck(check.to_string()));
        }
        let nonincreasing = points.windows(2).all(|w| w[1].defect <= w[0].defect + ROUNDOFF_SLACK);
        Ok(Study { check: check.to_string(), points, nonincreasing })
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:>10}  {:>12}  status\n", "truncation", "defect");
        for p in &self.points {
            let _ = writeln!(out, "{:>10}  {:>12.3e}  {}", p.truncation, p.defect, if p.pass { "pass" } else { "FAIL" });
        }
        let _ = writeln!(out, "nonincreasing: {}", self.nonincreasing);
        out
    }
}
