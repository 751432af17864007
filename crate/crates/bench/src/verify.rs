//! Runs both executors over a spec and collects findings.

use std::fmt;

use allgather_core::executor::{execute, execute_concurrent, expected_state, same_contents};
use allgather_core::{AlgorithmId, ProcessGroup};
use rayon::prelude::*;

use crate::config::SweepSpec;
use crate::sweep::{build_schedule, SkipRecord};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyFinding {
    pub p: usize,
    pub algorithm: AlgorithmId,
    pub block_size: u64,
    pub reference_ok: bool,
    pub concurrent_ok: bool,
    /// Both executors ended in the same state.
    pub agree: bool,
    pub double_writes: usize,
    pub error: Option<String>,
}

impl VerifyFinding {
    pub fn is_mismatch(&self) -> bool {
        !(self.reference_ok && self.concurrent_ok && self.agree)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub findings: Vec<VerifyFinding>,
    pub skips: Vec<SkipRecord>,
    /// Double writes were provoked on purpose and are not failures.
    pub double_writes_expected: bool,
}

impl VerifyReport {
    pub fn mismatches(&self) -> usize {
        self.findings.iter().filter(|f| f.is_mismatch()).count()
    }

    pub fn double_writes(&self) -> usize {
        self.findings.iter().map(|f| f.double_writes).sum()
    }

    pub fn passed(&self) -> bool {
        self.mismatches() == 0 && (self.double_writes_expected || self.double_writes() == 0)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in self
            .findings
            .iter()
            .filter(|x| x.is_mismatch() || x.double_writes > 0)
        {
            write!(
                f,
                "p={} {} block_size={}: reference {} concurrent {} agree {} double writes {}",
                finding.p,
                finding.algorithm,
                finding.block_size,
                ok(finding.reference_ok),
                ok(finding.concurrent_ok),
                finding.agree,
                finding.double_writes
            )?;
            if let Some(e) = &finding.error {
                write!(f, " ({e})")?;
            }
            writeln!(f)?;
        }
        for skip in &self.skips {
            writeln!(
                f,
                "skipped p={} {}: {}",
                skip.p, skip.algorithm, skip.reason
            )?;
        }
        writeln!(
            f,
            "{} runs, {} mismatches, {} double writes: {}",
            self.findings.len(),
            self.mismatches(),
            self.double_writes(),
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

fn ok(flag: bool) -> &'static str {
    if flag {
        "ok"
    } else {
        "WRONG"
    }
}

/// Runs every applicable (algorithm, p) of `spec` through both executors.
///
/// Payloads use the smallest block size of the spec, capped by `verify_block_cap`.
pub fn verify_all(spec: &SweepSpec) -> Result<VerifyReport> {
    spec.validate()?;
    let block_size = spec
        .sizes
        .iter()
        .copied()
        .min()
        .unwrap_or(1)
        .min(spec.verify_block_cap);
    let mut pairs = Vec::new();
    let mut skips = Vec::new();
    for &p in &spec.procs {
        for algorithm in spec.sorted_algorithms() {
            match algorithm.check_applicable(p) {
                Ok(()) => pairs.push((p, algorithm)),
                Err(e) => skips.push(SkipRecord {
                    p,
                    algorithm,
                    reason: e.to_string(),
                }),
            }
        }
    }

    let reference: Vec<Result<_>> = pairs
        .par_iter()
        .map(|&(p, algorithm)| {
            let group = ProcessGroup::new(p, block_size as usize)?.with_seed(spec.seed);
            let schedule = build_schedule(spec, algorithm, &group)?;
            let run = execute(&schedule);
            Ok((schedule, run))
        })
        .collect();

    // The threaded executor already uses one thread per rank, so runs go one at a time.
    let mut findings = Vec::with_capacity(pairs.len());
    for (&(p, algorithm), result) in pairs.iter().zip(reference) {
        let (schedule, run) = result?;
        let expected = expected_state(&schedule);
        let concurrent = execute_concurrent(&schedule);
        let mut error = None;
        let (reference_ok, double_writes, reference_state) = match run {
            Ok((state, trace)) => (
                same_contents(&state, &expected),
                trace.double_writes,
                Some(state),
            ),
            Err(e) => {
                error = Some(format!("reference: {e}"));
                (false, 0, None)
            }
        };
        let (concurrent_ok, agree) = match concurrent {
            Ok((state, _)) => (
                same_contents(&state, &expected),
                reference_state.is_some_and(|r| same_contents(&r, &state)),
            ),
            Err(e) => {
                error.get_or_insert(format!("concurrent: {e}"));
                (false, false)
            }
        };
        findings.push(VerifyFinding {
            p,
            algorithm,
            block_size,
            reference_ok,
            concurrent_ok,
            agree,
            double_writes,
            error,
        });
    }
    Ok(VerifyReport {
        findings,
        skips,
        double_writes_expected: spec.force_no_ignore,
    })
}
