//! Evaluation metrics over per-sample verdict streams.
//!
//! The verifier's predicted compliance label is the interpreter's prediction
//! when the safety classifier trusts it, and its inversion otherwise.
//! Accuracy compares that label against the model checker's verdict;
//! the compliance rate is the fraction of plans that formally satisfy their
//! specification.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty verdict stream")]
    EmptyStream,
}

/// One line of the verdict stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub plan_id: String,
    pub rule_id: String,
    /// Interpreter's compliance prediction.
    pub y: u8,
    /// Safety classifier's judgment of the interpreter.
    pub y_hat_safe: u8,
    /// Model checker's verdict.
    pub y_star: u8,
    pub p_hat: f64,
    pub complies: bool,
}

impl SampleRecord {
    /// The verifier's final compliance label.
    pub fn final_label(&self) -> u8 {
        if self.y_hat_safe == 1 {
            self.y
        } else {
            1 - self.y
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub n: usize,
    /// Fraction of samples where the verifier's final label equals the
    /// checker's verdict.
    pub verifier_accuracy: f64,
    /// Fraction where the raw interpreter prediction equals the verdict.
    pub interpreter_accuracy: f64,
    /// Fraction of plans that formally satisfy their specification.
    pub compliance_rate: f64,
}

fn group_metrics(records: &[&SampleRecord]) -> GroupMetrics {
    let n = records.len();
    let verifier = records
        .iter()
        .filter(|r| r.final_label() == r.y_star)
        .count();
    let interpreter = records.iter().filter(|r| r.y == r.y_star).count();
    let comply = records.iter().filter(|r| r.y_star == 1).count();
    GroupMetrics {
        n,
        verifier_accuracy: verifier as f64 / n as f64,
        interpreter_accuracy: interpreter as f64 / n as f64,
        compliance_rate: comply as f64 / n as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub overall: GroupMetrics,
    pub per_rule: BTreeMap<String, GroupMetrics>,
    /// Counts of `p_hat` in ten equal bins over [0, 1]; 1.0 falls in the
    /// last bin.
    pub guarantee_histogram: [usize; 10],
}

pub fn report(records: &[SampleRecord]) -> Result<MetricsReport, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyStream);
    }
    let all: Vec<&SampleRecord> = records.iter().collect();
    let overall = group_metrics(&all);
    let mut by_rule: BTreeMap<String, Vec<&SampleRecord>> = BTreeMap::new();
    for r in records {
        by_rule.entry(r.rule_id.clone()).or_default().push(r);
    }
    let per_rule = by_rule
        .into_iter()
        .map(|(k, v)| (k, group_metrics(&v)))
        .collect();
    let mut guarantee_histogram = [0usize; 10];
    for r in records {
        let bin = ((r.p_hat * 10.0).floor() as usize).min(9);
        guarantee_histogram[bin] += 1;
    }
    Ok(MetricsReport {
        overall,
        per_rule,
        guarantee_histogram,
    })
}
