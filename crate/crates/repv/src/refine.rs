//! Fine-tuning dataset construction from verification results.
//!
//! Verified plans become either supervised fine-tuning records (keep only
//! plans that comply with their rule at high confidence) or preference pairs
//! (between two candidate plans for the same task, prefer the one with the
//! higher guarantee of compliance).

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

/// Default confidence threshold for the SFT filter.
pub const DEFAULT_TAU: f64 = 0.8;

#[derive(Debug, Error, PartialEq)]
pub enum RefineError {
    #[error("task {task:?} contributed {count} candidate plans; exactly 2 are required")]
    MissingPair { task: String, count: usize },
}

/// One verified (task, rule, plan) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifiedPlan {
    /// The prompt the planner answered.
    pub task: String,
    pub rule: String,
    pub plan: String,
    pub complies: bool,
    /// Calibrated probability that the safety classification is correct.
    pub p_hat: f64,
}

impl VerifiedPlan {
    /// Guarantee of compliance: confidence that the plan complies, not
    /// merely that the verdict is right. A confidently violating plan ranks
    /// below an uncertain complying one.
    pub fn ranking_score(&self) -> f64 {
        if self.complies {
            self.p_hat
        } else {
            1.0 - self.p_hat
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftRecord {
    pub task: String,
    pub rule: String,
    pub plan: String,
    pub p_hat: f64,
    pub complies: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpoRecord {
    pub task: String,
    pub preferred: String,
    pub rejected: String,
    pub p_hat_preferred: f64,
    pub p_hat_rejected: f64,
}

/// Two candidate plans produced for the same task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskCandidates {
    pub task: String,
    pub candidates: Vec<VerifiedPlan>,
}

/// Keep exactly the complying verdicts with `p_hat >= tau`, in source order.
pub fn build_sft(verdicts: &[VerifiedPlan], tau: f64) -> Vec<SftRecord> {
    assert!(tau > 0.5 && tau <= 1.0, "tau must lie in (0.5, 1]");
    verdicts
        .iter()
        .filter(|v| v.complies && v.p_hat >= tau)
        .map(|v| SftRecord {
            task: v.task.clone(),
            rule: v.rule.clone(),
            plan: v.plan.clone(),
            p_hat: v.p_hat,
            complies: v.complies,
        })
        .collect()
}

/// Build preference pairs: per task, prefer the candidate with the higher
/// ranking score. Exact ties and textually identical candidates are dropped
/// with a diagnostic, keeping exports deterministic.
pub fn build_dpo(
    tasks: &[TaskCandidates],
) -> Result<(Vec<DpoRecord>, Vec<String>), RefineError> {
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for t in tasks {
        let [a, b] = match t.candidates.as_slice() {
            [a, b] => [a, b],
            other => {
                return Err(RefineError::MissingPair {
                    task: t.task.clone(),
                    count: other.len(),
                })
            }
        };
        let (sa, sb) = (a.ranking_score(), b.ranking_score());
        if sa == sb {
            diagnostics.push(format!(
                "task {:?}: candidates tie at ranking score {sa}; pair dropped",
                t.task
            ));
            continue;
        }
        if a.plan == b.plan {
            diagnostics.push(format!(
                "task {:?}: candidates are textually identical; pair dropped",
                t.task
            ));
            continue;
        }
        let (pref, rej) = if sa > sb { (a, b) } else { (b, a) };
        records.push(DpoRecord {
            task: t.task.clone(),
            preferred: pref.plan.clone(),
            rejected: rej.plan.clone(),
            p_hat_preferred: pref.p_hat,
            p_hat_rejected: rej.p_hat,
        });
    }
    Ok((records, diagnostics))
}

fn sft_prompt(task: &str, rule: &str) -> String {
    format!("{task}\nFollow this rule: {rule}")
}

/// One-record-per-line export in the common fine-tuning message schema.
pub fn export_sft_jsonl(records: &[SftRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let line = json!({
            "messages": [
                {"role": "user", "content": sft_prompt(&r.task, &r.rule)},
                {"role": "assistant", "content": r.plan},
            ]
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

/// One-record-per-line preference export: prompt plus preferred and
/// non-preferred completions.
pub fn export_dpo_jsonl(records: &[DpoRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let line = json!({
            "input": {"messages": [{"role": "user", "content": r.task}]},
            "preferred_output": [{"role": "assistant", "content": r.preferred}],
            "non_preferred_output": [{"role": "assistant", "content": r.rejected}],
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vp(task: &str, plan: &str, complies: bool, p_hat: f64) -> VerifiedPlan {
        VerifiedPlan {
            task: task.into(),
            rule: "Let pedestrians pass first.".into(),
            plan: plan.into(),
            complies,
            p_hat,
        }
    }

    #[test]
    fn sft_keeps_only_confident_compliers() {
        let verdicts = vec![
            vp("t1", "stop()", true, 0.95),
            vp("t2", "stop()", true, 0.7),
            vp("t3", "velocity_publisher(10, 0)", false, 0.9),
        ];
        let out = build_sft(&verdicts, 0.8);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].task, "t1");
        assert!(out.iter().all(|r| r.complies && r.p_hat >= 0.8));
    }

    #[test]
    fn tau_one_with_imperfect_confidence_is_empty() {
        let verdicts = vec![vp("t", "stop()", true, 0.999)];
        assert!(build_sft(&verdicts, 1.0).is_empty());
    }

    #[test]
    #[should_panic(expected = "tau must lie in (0.5, 1]")]
    fn tau_out_of_range_panics() {
        build_sft(&[], 0.5);
    }

    #[test]
    fn raising_tau_never_grows_the_set() {
        let verdicts: Vec<VerifiedPlan> = (0..50)
            .map(|i| vp(&format!("t{i}"), "stop()", i % 3 != 0, 0.5 + (i as f64) * 0.01))
            .collect();
        let mut prev = usize::MAX;
        for tau in [0.6, 0.7, 0.8, 0.9, 1.0] {
            let n = build_sft(&verdicts, tau).len();
            assert!(n <= prev);
            prev = n;
        }
    }

    #[test]
    fn dpo_prefers_higher_compliance_guarantee() {
        let tasks = vec![TaskCandidates {
            task: "cross the intersection".into(),
            candidates: vec![
                vp("cross the intersection", "stop()", true, 0.97),
                vp("cross the intersection", "velocity_publisher(10, 0)", true, 0.60),
            ],
        }];
        let (records, diags) = build_dpo(&tasks).unwrap();
        assert!(diags.is_empty());
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].preferred, "stop()");
        assert_eq!(records[0].p_hat_preferred, 0.97);
    }

    #[test]
    fn confident_violator_ranks_below_uncertain_complier() {
        let tasks = vec![TaskCandidates {
            task: "t".into(),
            candidates: vec![
                vp("t", "bad()", false, 0.99), // score 0.01
                vp("t", "meh()", true, 0.55),  // score 0.55
            ],
        }];
        let (records, _) = build_dpo(&tasks).unwrap();
        assert_eq!(records[0].preferred, "meh()");
    }

    #[test]
    fn ties_are_dropped_with_diagnostic() {
        let tasks = vec![TaskCandidates {
            task: "t".into(),
            candidates: vec![vp("t", "a()", true, 0.8), vp("t", "b()", true, 0.8)],
        }];
        let (records, diags) = build_dpo(&tasks).unwrap();
        assert!(records.is_empty());
        assert_eq!(diags.len(), 1);
        assert!(diags[0].contains("tie"));
    }

    #[test]
    fn wrong_candidate_count_is_missing_pair() {
        let tasks = vec![TaskCandidates {
            task: "t".into(),
            candidates: vec![vp("t", "a()", true, 0.8)],
        }];
        assert_eq!(
            build_dpo(&tasks).unwrap_err(),
            RefineError::MissingPair {
                task: "t".into(),
                count: 1
            }
        );
    }

    #[test]
    fn swapping_candidates_is_antisymmetric() {
        let a = vp("t", "a()", true, 0.9);
        let b = vp("t", "b()", false, 0.7);
        let fwd = build_dpo(&[TaskCandidates {
            task: "t".into(),
            candidates: vec![a.clone(), b.clone()],
        }])
        .unwrap()
        .0;
        let rev = build_dpo(&[TaskCandidates {
            task: "t".into(),
            candidates: vec![b, a],
        }])
        .unwrap()
        .0;
        assert_eq!(fwd, rev);
        assert_eq!(fwd[0].preferred, "a()");
    }

    #[test]
    fn exports_are_valid_jsonl_in_message_schema() {
        let sft = build_sft(&[vp("t", "stop()", true, 0.9)], 0.8);
        let text = export_sft_jsonl(&sft);
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["messages"][0]["role"], "user");
            assert_eq!(v["messages"][1]["role"], "assistant");
            assert_eq!(v["messages"][1]["content"], "stop()");
        }
        let (dpo, _) = build_dpo(&[TaskCandidates {
            task: "t".into(),
            candidates: vec![vp("t", "a()", true, 0.9), vp("t", "b()", true, 0.6)],
        }])
        .unwrap();
        let text = export_dpo_jsonl(&dpo);
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["preferred_output"][0]["content"], "a()");
        assert_eq!(v["non_preferred_output"][0]["content"], "b()");
        assert_eq!(v["input"]["messages"][0]["content"], "t");
    }

    #[test]
    fn exports_are_deterministic() {
        let sft = build_sft(&[vp("t", "stop()", true, 0.9)], 0.8);
        assert_eq!(export_sft_jsonl(&sft), export_sft_jsonl(&sft));
    }
}
