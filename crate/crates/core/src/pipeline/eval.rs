use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::TestGroup;
use crate::classifier::{classify, MlpParams};
use crate::scenario_sim::SCENARIO_COUNT;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrResult {
    pub snr_db: f64,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    /// `confusion[true - 1][predicted - 1]`.
    pub confusion: [[usize; SCENARIO_COUNT]; SCENARIO_COUNT],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_snr: Vec<SnrResult>,
    /// Unweighted mean of the per-SNR accuracies.
    pub average_accuracy: f64,
}

impl EvalReport {
    pub fn accuracy_at(&self, snr_db: f64) -> Option<f64> {
        self.per_snr.iter().find(|r| r.snr_db == snr_db).map(|r| r.accuracy)
    }
}

/// Classifies every test record with `classify`. Empty groups are skipped.
pub fn evaluate_with<F>(groups: &[TestGroup], classify: F) -> Result<EvalReport>
where
    F: Fn(&[f64]) -> Result<u8> + Sync,
{
    let mut per_snr = Vec::new();
    for g in groups {
        if g.records.is_empty() {
            log::warn!("no test records at {} dB; skipped", g.snr_db);
            continue;
        }
        let predictions = g
            .records
            .par_iter()
            .map(|r| classify(&r.feature.values))
            .collect::<Result<Vec<u8>>>()?;
        let mut confusion = [[0usize; SCENARIO_COUNT]; SCENARIO_COUNT];
        let mut correct = 0;
        for (r, &p) in g.records.iter().zip(&predictions) {
            confusion[r.label as usize - 1][p as usize - 1] += 1;
            correct += usize::from(p == r.label);
        }
        per_snr.push(SnrResult {
            snr_db: g.snr_db,
            correct,
            total: g.records.len(),
            accuracy: correct as f64 / g.records.len() as f64,
            confusion,
        });
    }
    let average_accuracy = if per_snr.is_empty() {
        0.0
    } else {
        per_snr.iter().map(|r| r.accuracy).sum::<f64>() / per_snr.len() as f64
    };
    Ok(EvalReport {
        per_snr,
        average_accuracy,
    })
}

pub fn evaluate(params: &MlpParams, groups: &[TestGroup]) -> Result<EvalReport> {
    evaluate_with(groups, |x| classify(params, x))
}

/// Comma-separated report: the accuracy table (percent, one decimal),
/// then one confusion block per SNR with true labels as rows.
pub fn report_csv(report: &EvalReport) -> String {
    let mut s = String::from("SNR / dB");
    for r in &report.per_snr {
        write!(s, ",{}", r.snr_db).unwrap();
    }
    s.push_str(",Avg\nAccuracy / %");
    for r in &report.per_snr {
        write!(s, ",{:.1}", 100.0 * r.accuracy).unwrap();
    }
    writeln!(s, ",{:.1}", 100.0 * report.average_accuracy).unwrap();
    for r in &report.per_snr {
        writeln!(s, "\nConfusion at {} dB", r.snr_db).unwrap();
        s.push_str("true\\predicted");
        for p in 1..=SCENARIO_COUNT {
            write!(s, ",{p}").unwrap();
        }
        s.push('\n');
        for (t, row) in r.confusion.iter().enumerate() {
            write!(s, "{}", t + 1).unwrap();
            for c in row {
                write!(s, ",{c}").unwrap();
            }
            s.push('\n');
        }
    }
    s
}
