//! Precision-recall curves, AUPR and thresholded classification reports.
//! OOD is the positive class throughout; a score at or above the threshold
//! predicts OOD.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// One point per distinct score, thresholds descending.
    pub points: Vec<PrPoint>,
    pub aupr: f64,
}

fn check_binary(scores: &[f64], labels: &[bool]) -> Result<usize> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let pos = labels.iter().filter(|l| **l).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::SingleClass);
    }
    Ok(pos)
}

pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Result<PrCurve> {
    let pos = check_binary(scores, labels)? as f64;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold: t,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / pos,
        });
    }
    let aupr = aupr(&points);
    Ok(PrCurve { points, aupr })
}

/// Step-wise area `sum_k (R_k - R_{k-1}) P_k` with `R_0 = 0`.
pub fn aupr(points: &[PrPoint]) -> f64 {
    let mut prev = 0.0;
    let mut area = 0.0;
    for p in points {
        area += (p.recall - prev) * p.precision;
        prev = p.recall;
    }
    area
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub support: usize,
    /// Set when no sample was predicted in this class and precision defaulted to 0.
    pub precision_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub threshold: f64,
    pub id: ClassMetrics,
    pub ood: ClassMetrics,
    pub macro_precision: f64,
    pub macro_recall: f64,
}

fn class_metrics(tp: usize, fp: usize, fn_: usize) -> ClassMetrics {
    let predicted = tp + fp;
    let support = tp + fn_;
    ClassMetrics {
        precision: if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 },
        recall: if support == 0 { 0.0 } else { tp as f64 / support as f64 },
        support,
        precision_undefined: predicted == 0,
    }
}

/// Per-class precision/recall from predicted-OOD flags.
pub fn report_from_predictions(predicted_ood: &[bool], labels: &[bool], threshold: f64) -> Result<ClassificationReport> {
    if predicted_ood.len() != labels.len() {
        return Err(Error::invalid("predictions and labels differ in length"));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (p, l) in predicted_ood.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let ood = class_metrics(tp, fp, fn_);
    let id = class_metrics(tn, fn_, fp);
    Ok(ClassificationReport {
        threshold,
        macro_precision: (id.precision + ood.precision) / 2.0,
        macro_recall: (id.recall + ood.recall) / 2.0,
        id,
        ood,
    })
}

pub fn classification_report(scores: &[f64], labels: &[bool], threshold: f64) -> Result<ClassificationReport> {
    check_binary(scores, labels)?;
    let predicted: Vec<bool> = scores.iter().map(|s| *s >= threshold).collect();
    report_from_predictions(&predicted, labels, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;
    use proptest::prelude::*;
    use rand::Rng;

    /// Exhaustive oracle: every candidate threshold, confusion counted from scratch.
    fn brute_aupr(scores: &[f64], labels: &[bool]) -> f64 {
        let mut ts: Vec<f64> = scores.to_vec();
        ts.sort_by(|a, b| b.total_cmp(a));
        ts.dedup();
        let pos = labels.iter().filter(|l| **l).count() as f64;
        let mut prev_recall = 0.0;
        let mut area = 0.0;
        for t in ts {
            let tp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && **l).count() as f64;
            let predicted = scores.iter().filter(|s| **s >= t).count() as f64;
            let recall = tp / pos;
            area += (recall - prev_recall) * (tp / predicted);
            prev_recall = recall;
        }
        area
    }

    #[test]
    fn perfect_and_constant() {
        let labels = [true, true, false, false, false];
        let c = pr_curve(&[0.9, 0.8, 0.3, 0.2, 0.1], &labels).unwrap();
        assert_eq!(c.aupr, 1.0);
        let c = pr_curve(&[0.4; 5], &labels).unwrap();
        assert!((c.aupr - 0.4).abs() < 1e-15);
        assert_eq!(c.points.len(), 1);
        assert!(matches!(pr_curve(&[0.1, 0.2], &[false, false]), Err(Error::SingleClass)));
    }

    #[test]
    fn matches_exhaustive_oracle() {
        let mut rng = stats::rng(2024);
        for _ in 0..50 {
            let n = rng.gen_range(2..=20);
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            labels[0] = true;
            labels[1] = false;
            // coarse scores force ties
            let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..6) as f64) / 5.0).collect();
            let got = pr_curve(&scores, &labels).unwrap().aupr;
            assert!((got - brute_aupr(&scores, &labels)).abs() < 1e-12);
        }
    }

    #[test]
    fn report_arithmetic() {
        // TP=9, FP=1, FN=1, TN=9
        let mut labels = vec![true; 10];
        labels.extend([false; 10]);
        let mut scores = vec![0.9; 9];
        scores.push(0.1);
        scores.push(0.8);
        scores.extend([0.2; 9]);
        let r = classification_report(&scores, &labels, 0.5).unwrap();
        assert!((r.ood.precision - 0.9).abs() < 1e-15);
        assert!((r.ood.recall - 0.9).abs() < 1e-15);
        assert!((r.macro_recall - 0.9).abs() < 1e-15);

        let r = classification_report(&[0.1, 0.2, 0.3], &[true, false, false], 0.5).unwrap();
        assert!(r.ood.precision_undefined);
        assert_eq!((r.ood.precision, r.ood.recall), (0.0, 0.0));
        assert_eq!(r.id.recall, 1.0);
        let r = classification_report(&[0.5, 0.49], &[true, false], 0.5).unwrap();
        assert_eq!(r.ood.recall, 1.0);
    }

    proptest! {
        #[test]
        fn curve_invariants(
            raw in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..40),
        ) {
            let mut scores: Vec<f64> = raw.iter().map(|r| r.0).collect();
            let mut labels: Vec<bool> = raw.iter().map(|r| r.1).collect();
            labels[0] = true;
            labels[1] = false;
            let c = pr_curve(&scores, &labels).unwrap();
            prop_assert!((0.0..=1.0).contains(&c.aupr));
            prop_assert!(c.points.windows(2).all(|w| w[0].recall <= w[1].recall));
            prop_assert!((c.points.last().unwrap().recall - 1.0).abs() < 1e-15);
            // strictly monotone transform leaves the area unchanged
            let t: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
            prop_assert!((pr_curve(&t, &labels).unwrap().aupr - c.aupr).abs() < 1e-12);
            scores.iter_mut().for_each(|s| *s = 0.0);
            let prevalence = labels.iter().filter(|l| **l).count() as f64 / labels.len() as f64;
            prop_assert!((pr_curve(&scores, &labels).unwrap().aupr - prevalence).abs() < 1e-12);
        }
    }
}
