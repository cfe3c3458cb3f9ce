//! Line-oriented input for the `symbolic` command.
//!
//! ```text
//! n = 3
//! s[1]·s*[1] + s[2]·s*[2] + s[3]·s*[3]
//! s*[1] ; s[1,2]
//! basis: s[1] | s[2] | s[3]
//! unitary: s[1] | s[2]·s[1] | s[2]·s[2]
//! ```

use std::fmt::Write as _;

use koopman::symbolic::{module_unitary_check, parse, random_word, verify_basis, BasisVerdict, CuntzElement, ModuleMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

const BASIS_SAMPLES: usize = 100;

fn line_error(line: usize, message: impl ToString) -> CliError {
    CliError::Config { field: "symbolic".into(), line: Some(line), message: message.to_string() }
}

/// Evaluate every line; returns the printed output and whether all checks held.
pub fn evaluate(text: &str, seed: u64) -> Result<(String, bool), CliError> {
    let mut n = 2;
    let mut out = String::new();
    let mut ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let elems = |s: &str, n| -> Result<Vec<CuntzElement>, CliError> {
            s.split('|').map(|p| parse(p.trim(), n).map_err(|e| line_error(line, e))).collect()
        };
        if let Some(v) = body.strip_prefix("n").and_then(|r| r.trim_start().strip_prefix('=')) {
            n = v.trim().parse().map_err(|_| line_error(line, "alphabet size must be an integer"))?;
            if n < 2 {
                return Err(line_error(line, "alphabet size must be at least 2"));
            }
            continue;
        }
        if let Some(rest) = body.strip_prefix("basis:") {
            let basis = elems(rest, n)?;
            let xs: Vec<_> = (0..BASIS_SAMPLES).map(|_| random_word(n, 4, &mut rng)).collect();
            let verdict = verify_basis(&basis, &xs).map_err(|e| line_error(line, e))?;
            ok &= verdict.holds();
            match verdict {
                BasisVerdict::Holds => writeln!(out, "basis: holds on {BASIS_SAMPLES} samples"),
                BasisVerdict::Fails(w) => writeln!(out, "basis: fails {w:?}"),
            }
            .expect("string write");
        } else if let Some(rest) = body.strip_prefix("unitary:") {
            let row = ModuleMatrix::row(elems(rest, n)?).map_err(|e| line_error(line, e))?;
            let holds = module_unitary_check(&row).map_err(|e| line_error(line, e))?;
            ok &= holds;
            writeln!(out, "unitary: {}", if holds { "holds" } else { "fails" }).expect("string write");
        } else if body.contains(';') {
            let product = body
                .split(';')
                .map(|p| parse(p.trim(), n).map_err(|e| line_error(line, e)))
                .try_fold(CuntzElement::one(n), |acc, x| acc.try_mul(&x?).map_err(|e| line_error(line, e)))?;
            writeln!(out, "{product}").expect("string write");
        } else {
            let a = parse(body, n).map_err(|e| line_error(line, e))?;
            writeln!(out, "{a}").expect("string write");
        }
    }
    Ok((out, ok))
}
