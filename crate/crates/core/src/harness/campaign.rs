//! Differential testing over many generated programs.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use super::compare::{compare_all, CompareReport, Counterexample};
use super::congruence::seq_congruence_counterexample;
use super::gen::{enumerate_streams, generate_program, GenConfig};
use crate::syntax::{Cmd, InputStream, Store, Val};

/// Longest input sequence tried when programs may read input.
pub const MAX_STREAM_LEN: usize = 3;

/// Prefix steps explored by the congruence check.
const CONGRUENCE_PREFIX: usize = 16;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FuzzSummary {
    pub seed: u64,
    pub programs: usize,
    /// Program and stream pairs.
    pub runs: usize,
    pub fuel: u64,
    /// Runs per overall verdict class.
    pub classes: BTreeMap<String, usize>,
    pub disagreements: usize,
    /// Input-free diverging sequences whose congruence was checked.
    pub congruence_checked: usize,
    pub congruence_anomalies: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl FuzzSummary {
    pub fn ok(&self) -> bool {
        self.disagreements == 0 && self.congruence_anomalies == 0
    }
}

/// The streams a campaign feeds each program.
pub fn campaign_streams(cfg: &GenConfig) -> Vec<InputStream> {
    if cfg.input {
        enumerate_streams(&[Val::Nat(0), Val::Nat(1)], MAX_STREAM_LEN)
            .into_iter()
            .map(InputStream::new)
            .collect()
    } else {
        vec![InputStream::empty()]
    }
}

struct ProgramResult {
    seed: u64,
    report: CompareReport,
    congruence: Option<Option<String>>,
}

fn run_one(cfg: &GenConfig, seed: u64, streams: &[InputStream], fuel: u64) -> ProgramResult {
    let program = generate_program(&cfg.with_seed(seed));
    let report = compare_all(&program, streams, fuel);
    let congruence = match &program {
        Cmd::Seq(c1, c2) if !program.uses_input() && report.streams.iter().any(|s| s.lasso.is_some()) => Some(
            seq_congruence_counterexample(c1, c2, &Store::new(), streams, fuel, CONGRUENCE_PREFIX).map(|a| {
                format!(
                    "congruence fails after {} steps: {} then {}",
                    a.steps, a.reached, a.outcome
                )
            }),
        ),
        _ => None,
    };
    ProgramResult {
        seed,
        report,
        congruence,
    }
}

/// Compares `n` programs generated from consecutive seeds starting at
/// `cfg.seed`. Results are merged in seed order whatever the scheduling.
pub fn fuzz_campaign(cfg: &GenConfig, n: usize, fuel: u64) -> FuzzSummary {
    let streams = campaign_streams(cfg);
    let seeds: Vec<u64> = (0..n as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    #[cfg(feature = "parallel")]
    let results: Vec<ProgramResult> = seeds.par_iter().map(|&s| run_one(cfg, s, &streams, fuel)).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<ProgramResult> = seeds.iter().map(|&s| run_one(cfg, s, &streams, fuel)).collect();

    let mut summary = FuzzSummary {
        seed: cfg.seed,
        programs: n,
        fuel,
        ..FuzzSummary::default()
    };
    for r in results {
        for s in &r.report.streams {
            summary.runs += 1;
            *summary.classes.entry(s.verdict().class().to_string()).or_default() += 1;
            if !s.agrees() {
                summary.disagreements += 1;
                summary.counterexamples.push(Counterexample {
                    seed: Some(r.seed),
                    program: r.report.program.clone(),
                    input: s.input.clone(),
                    fuel,
                    issues: s.issues.clone(),
                });
            }
        }
        if let Some(check) = r.congruence {
            summary.congruence_checked += 1;
            if let Some(issue) = check {
                summary.congruence_anomalies += 1;
                summary.counterexamples.push(Counterexample {
                    seed: Some(r.seed),
                    program: r.report.program.clone(),
                    input: Vec::new(),
                    fuel,
                    issues: vec![issue],
                });
            }
        }
    }
    summary
}

/// Writes each counterexample as `cex-<seed>-<k>.whl` under `dir`.
pub fn write_counterexamples(summary: &FuzzSummary, dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (k, cex) in summary.counterexamples.iter().enumerate() {
        let path = dir.join(format!("cex-{}-{k}.whl", cex.seed.unwrap_or_default()));
        std::fs::write(&path, cex.to_whl())?;
        written.push(path);
    }
    Ok(written)
}
