//! Distance-calibrated reliability guarantees and the final compliance
//! verdict.
//!
//! After training, each calibration sample's latent vector is compared to
//! two centroids — the means of correctly classified safe and unsafe
//! samples. For a query, the distance to its nearest centroid is converted
//! into an empirical probability that the safety classification is correct:
//! `p_hat = 1 − (1 − F_C(d'))·Pr[wrong class] / Pr[within d']`, which equals
//! one minus the fraction of opposite-class samples among all calibration
//! samples within `d'` of the centroid.

use crate::oracle::{Embedder, Interpreter, OracleError};
use crate::projector::{classify, project, LatentRecord, ProjectorParams, ProjectorError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Queries supported by fewer than this many calibration samples within
/// `d'` are flagged `low_support`.
pub const LOW_SUPPORT_THRESHOLD: usize = 5;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("degenerate calibration: no correctly classified {class} samples")]
    DegenerateCalibration { class: &'static str },
    #[error(transparent)]
    Projector(#[from] ProjectorError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CentroidClass {
    Safe,
    Unsafe,
}

/// Per-centroid calibration data: the centroid itself and the distance of
/// every calibration sample to it, tagged with whether that sample belongs
/// to the centroid's class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTable {
    pub class: CentroidClass,
    pub centroid: Vec<f64>,
    /// `(distance, same_class)` sorted ascending by distance; one entry per
    /// calibration sample.
    pub distances: Vec<(f64, bool)>,
    /// Fraction of calibration samples not in this class.
    pub prior: f64,
}

impl ClassTable {
    /// Empirical fraction of opposite-class calibration distances strictly
    /// greater than `d`. Non-increasing in `d`; 1 when no opposite-class
    /// samples exist.
    pub fn f_c(&self, d: f64) -> f64 {
        let opposite: Vec<f64> = self
            .distances
            .iter()
            .filter(|(_, same)| !same)
            .map(|(dist, _)| *dist)
            .collect();
        if opposite.is_empty() {
            return 1.0;
        }
        opposite.iter().filter(|&&dist| dist > d).count() as f64 / opposite.len() as f64
    }

    /// Number of calibration samples (any class) within `d` of the centroid.
    pub fn support(&self, d: f64) -> usize {
        self.distances.iter().filter(|(dist, _)| *dist <= d).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub safe: ClassTable,
    pub unsafe_: ClassTable,
    /// Calibration set size.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeResult {
    pub nearest_centroid: CentroidClass,
    pub d_prime: f64,
    /// Probability that the safety classification is correct; clamped to
    /// [0, 1].
    pub p_hat: f64,
    /// Calibration samples within `d_prime` of the nearest centroid.
    pub support: usize,
    pub low_support: bool,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl CalibrationTable {
    /// Build a table from `(z, y_safe, correctly_classified)` triples. The
    /// centroid of each class is the mean of its correctly classified
    /// members; every sample contributes a tagged distance to both tables.
    pub fn from_samples(
        samples: &[(Vec<f64>, u8, bool)],
    ) -> Result<CalibrationTable, CalibrationError> {
        let n = samples.len();
        let mut tables = Vec::with_capacity(2);
        for (class, label, name) in [
            (CentroidClass::Safe, 1u8, "safe"),
            (CentroidClass::Unsafe, 0u8, "unsafe"),
        ] {
            let members: Vec<&Vec<f64>> = samples
                .iter()
                .filter(|(_, y, correct)| *y == label && *correct)
                .map(|(z, _, _)| z)
                .collect();
            if members.is_empty() {
                return Err(CalibrationError::DegenerateCalibration { class: name });
            }
            let dim = members[0].len();
            let mut centroid = vec![0.0; dim];
            for z in &members {
                for (c, v) in centroid.iter_mut().zip(z.iter()) {
                    *c += v;
                }
            }
            for c in &mut centroid {
                *c /= members.len() as f64;
            }
            let mut distances: Vec<(f64, bool)> = samples
                .iter()
                .map(|(z, y, _)| (euclidean(z, &centroid), *y == label))
                .collect();
            distances.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let prior =
                samples.iter().filter(|(_, y, _)| *y != label).count() as f64 / n as f64;
            tables.push(ClassTable {
                class,
                centroid,
                distances,
                prior,
            });
        }
        let unsafe_ = tables.pop().unwrap();
        let safe = tables.pop().unwrap();
        Ok(CalibrationTable { safe, unsafe_, n })
    }

    fn table_for(&self, class: CentroidClass) -> &ClassTable {
        match class {
            CentroidClass::Safe => &self.safe,
            CentroidClass::Unsafe => &self.unsafe_,
        }
    }
}

/// Build the calibration table from labeled records: project each embedding,
/// classify it, and aggregate per class. Fails when either class has no
/// correctly classified member — such a table could not anchor its centroid.
pub fn calibrate(
    records: &[LatentRecord],
    params: &ProjectorParams,
) -> Result<CalibrationTable, CalibrationError> {
    let samples: Result<Vec<(Vec<f64>, u8, bool)>, ProjectorError> = records
        .iter()
        .map(|r| {
            let z = project(params, &r.embedding)?;
            let correct = classify(params, &z) == r.y_safe;
            Ok((z, r.y_safe, correct))
        })
        .collect();
    CalibrationTable::from_samples(&samples?)
}

/// Evaluate the distance-calibrated guarantee for a latent query. Ties
/// between centroids resolve to the unsafe side, the conservative choice.
pub fn guarantee(table: &CalibrationTable, z: &[f64]) -> GuaranteeResult {
    let d_safe = euclidean(z, &table.safe.centroid);
    let d_unsafe = euclidean(z, &table.unsafe_.centroid);
    let nearest_centroid = if d_safe < d_unsafe {
        CentroidClass::Safe
    } else {
        CentroidClass::Unsafe
    };
    let d_prime = d_safe.min(d_unsafe);
    let t = table.table_for(nearest_centroid);
    let support = t.support(d_prime);
    // Denominator floored at 1/N so an isolated query cannot divide by zero.
    let denom = (support as f64 / table.n as f64).max(1.0 / table.n as f64);
    let p_hat = 1.0 - (1.0 - t.f_c(d_prime)) * t.prior / denom;
    GuaranteeResult {
        nearest_centroid,
        d_prime,
        p_hat: p_hat.clamp(0.0, 1.0),
        support,
        low_support: support < LOW_SUPPORT_THRESHOLD,
    }
}

/// Final verdict for one (plan, rule) query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceVerdict {
    /// Interpreter's compliance prediction.
    pub y: u8,
    /// Safety classifier's judgment of that prediction.
    pub y_hat_safe: u8,
    /// True iff (y_hat_safe=1 ∧ y=1) ∨ (y_hat_safe=0 ∧ y=0): trust the
    /// interpreter when it looks reliable, invert it when it does not.
    pub complies: bool,
    pub guarantee: GuaranteeResult,
    pub rationale: String,
}

/// Eq.-style compliance decision from the two binary signals.
pub fn compliance(y: u8, y_hat_safe: u8) -> bool {
    (y_hat_safe == 1 && y == 1) || (y_hat_safe == 0 && y == 0)
}

/// Full verification of one plan against one rule: interpret, embed the plan
/// with the rationale, project, classify the interpreter's reliability, and
/// attach the calibrated guarantee.
pub fn verify(
    plan: &str,
    rule: &str,
    params: &ProjectorParams,
    table: &CalibrationTable,
    interpreter: &dyn Interpreter,
    embedder: &dyn Embedder,
) -> Result<ComplianceVerdict, CalibrationError> {
    let out = interpreter.interpret(plan, rule)?;
    let text = format!("{plan}\n{}", out.rationale);
    let embedding = embedder.embed(&text)?;
    let z = project(params, &embedding.values)?;
    let y_hat_safe = classify(params, &z);
    let g = guarantee(table, &z);
    Ok(ComplianceVerdict {
        y: out.y,
        y_hat_safe,
        complies: compliance(out.y, y_hat_safe),
        guarantee: g,
        rationale: out.rationale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2(x: f64, y: f64) -> Vec<f64> {
        vec![x, y]
    }

    #[test]
    fn singleton_means_become_centroids() {
        let table = CalibrationTable::from_samples(&[
            (z2(0.0, 0.0), 1, true),
            (z2(1.0, 0.0), 0, true),
        ])
        .unwrap();
        assert_eq!(table.safe.centroid, z2(0.0, 0.0));
        assert_eq!(table.unsafe_.centroid, z2(1.0, 0.0));
        assert_eq!(table.n, 2);
    }

    #[test]
    fn hand_set_of_six_checks_out() {
        // Safe correct at (0,0) and (2,0) → c_s = (1,0); unsafe correct at
        // (0,4) and (0,6) → c_u = (0,5). Misclassified samples still appear
        // in the distance lists and priors.
        let samples = vec![
            (z2(0.0, 0.0), 1, true),
            (z2(2.0, 0.0), 1, true),
            (z2(0.0, 4.0), 0, true),
            (z2(0.0, 6.0), 0, true),
            (z2(1.0, 1.0), 1, false),
            (z2(0.0, 5.0), 0, false),
        ];
        let table = CalibrationTable::from_samples(&samples).unwrap();
        assert_eq!(table.safe.centroid, z2(1.0, 0.0));
        assert_eq!(table.unsafe_.centroid, z2(0.0, 5.0));
        assert_eq!(table.safe.distances.len(), 6);
        // Hand-computed distances to c_s = (1,0), ascending:
        // (1,1)→1, (0,0)→1, (2,0)→1, (0,4)→√17, (0,5)→√26, (0,6)→√37.
        let ds: Vec<f64> = table.safe.distances.iter().map(|(d, _)| *d).collect();
        assert_eq!(ds[0], 1.0);
        assert_eq!(ds[2], 1.0);
        assert!((ds[3] - 17f64.sqrt()).abs() < 1e-12);
        assert!((ds[5] - 37f64.sqrt()).abs() < 1e-12);
        assert_eq!(table.safe.prior, 0.5);
        assert_eq!(table.unsafe_.prior, 0.5);
    }

    #[test]
    fn degenerate_when_a_class_has_no_correct_member() {
        let err = CalibrationTable::from_samples(&[
            (z2(0.0, 0.0), 1, true),
            (z2(1.0, 0.0), 0, false),
        ])
        .unwrap_err();
        assert!(matches!(
            err,
            CalibrationError::DegenerateCalibration { class: "unsafe" }
        ));
    }

    /// The worked example: five calibration points, query whose `d'` sweeps
    /// in 3 same-class and 1 opposite-class point → p_hat = 0.75 by both the
    /// theorem formula and direct enumeration.
    #[test]
    fn hand_guarantee_is_three_quarters() {
        let samples = vec![
            (z2(0.0, 0.0), 1, true),  // defines c_s = (0,0)
            (z2(0.5, 0.0), 1, false),
            (z2(0.9, 0.0), 1, false),
            (z2(5.0, 0.0), 1, false),
            (z2(0.0, 0.9), 0, true),  // defines c_u = (0,0.9)
        ];
        let table = CalibrationTable::from_samples(&samples).unwrap();
        let g = guarantee(&table, &z2(0.95, 0.0));
        assert_eq!(g.nearest_centroid, CentroidClass::Safe);
        assert!((g.d_prime - 0.95).abs() < 1e-12);
        assert_eq!(g.support, 4);
        assert!((g.p_hat - 0.75).abs() < 1e-12);
        assert!(g.low_support);
    }

    #[test]
    fn no_opposite_within_distance_gives_certainty() {
        let samples = vec![
            (z2(0.0, 0.0), 1, true),
            (z2(0.1, 0.0), 1, false),
            (z2(10.0, 0.0), 0, true),
        ];
        let table = CalibrationTable::from_samples(&samples).unwrap();
        let g = guarantee(&table, &z2(0.05, 0.0));
        assert_eq!(g.p_hat, 1.0);
    }

    #[test]
    fn f_c_is_non_increasing() {
        let samples: Vec<(Vec<f64>, u8, bool)> = (0..20)
            .map(|i| (z2(i as f64 * 0.37, (i % 5) as f64), (i % 2) as u8, true))
            .collect();
        let table = CalibrationTable::from_samples(&samples).unwrap();
        for t in [&table.safe, &table.unsafe_] {
            let mut prev = f64::INFINITY;
            for d in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
                let v = t.f_c(d);
                assert!(v <= prev + 1e-12);
                assert!((0.0..=1.0).contains(&v));
                prev = v;
            }
        }
    }

    #[test]
    fn support_is_monotone_in_distance() {
        let samples: Vec<(Vec<f64>, u8, bool)> = (0..10)
            .map(|i| (z2(i as f64, 0.0), (i % 2) as u8, true))
            .collect();
        let table = CalibrationTable::from_samples(&samples).unwrap();
        let mut prev = 0;
        for d in [0.0, 1.0, 3.0, 5.0, 100.0] {
            let s = table.safe.support(d);
            assert!(s >= prev);
            prev = s;
        }
        assert_eq!(prev, 10);
    }

    #[test]
    fn p_hat_always_in_unit_interval() {
        let samples = vec![
            (z2(0.0, 0.0), 1, true),
            (z2(0.01, 0.0), 0, true),
            (z2(0.02, 0.0), 0, false),
            (z2(0.03, 0.0), 0, false),
        ];
        let table = CalibrationTable::from_samples(&samples).unwrap();
        for q in [z2(0.0, 0.0), z2(0.015, 0.0), z2(-3.0, 4.0), z2(100.0, 0.0)] {
            let g = guarantee(&table, &q);
            assert!((0.0..=1.0).contains(&g.p_hat), "p_hat {} for {q:?}", g.p_hat);
        }
    }

    #[test]
    fn compliance_truth_table() {
        assert!(compliance(1, 1));
        assert!(compliance(0, 0));
        assert!(!compliance(1, 0));
        assert!(!compliance(0, 1));
    }

    #[test]
    fn guarantee_matches_enumeration_oracle() {
        // Direct route: p_hat = 1 − opposite_within / all_within (floored),
        // independently of the theorem-formula route used by `guarantee`.
        let samples: Vec<(Vec<f64>, u8, bool)> = (0..30)
            .map(|i| {
                let y = (i % 3 != 0) as u8;
                let base = if y == 1 { 0.0 } else { 4.0 };
                (z2(base + (i as f64) * 0.13, (i % 7) as f64 * 0.21), y, true)
            })
            .collect();
        let table = CalibrationTable::from_samples(&samples).unwrap();
        for q in [z2(0.2, 0.3), z2(4.1, 0.0), z2(2.0, 0.5), z2(-1.0, -1.0)] {
            let g = guarantee(&table, &q);
            let centroid = match g.nearest_centroid {
                CentroidClass::Safe => &table.safe.centroid,
                CentroidClass::Unsafe => &table.unsafe_.centroid,
            };
            let label = match g.nearest_centroid {
                CentroidClass::Safe => 1,
                CentroidClass::Unsafe => 0,
            };
            let mut all_within = 0usize;
            let mut opp_within = 0usize;
            for (z, y, _) in &samples {
                if euclidean(z, centroid) <= g.d_prime {
                    all_within += 1;
                    if *y != label {
                        opp_within += 1;
                    }
                }
            }
            let expected = 1.0 - opp_within as f64 / (all_within.max(1)) as f64;
            assert!(
                (g.p_hat - expected.clamp(0.0, 1.0)).abs() < 1e-12,
                "query {q:?}: {} vs {expected}",
                g.p_hat
            );
        }
    }
}
