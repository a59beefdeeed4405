//! Depth error metrics under median ground-truth scaling, and motion
//! segmentation metrics.
//!
//! Monocular reconstruction is scale-ambiguous, so predictions are rescaled
//! by `median(gt) / median(pred)` per view before computing errors.

use crate::embedding::median;
use crate::error::{Error, Result};

/// Standard depth reconstruction error metrics over one evaluation set.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DepthMetrics {
    /// Mean of `|gt - pred| / gt`.
    pub abs_rel: f64,
    /// Mean of `(gt - pred)^2 / gt`.
    pub sq_rel: f64,
    /// Root mean squared error.
    pub rmse: f64,
    /// Root mean squared error of the log depths.
    pub rmse_log: f64,
    /// Fraction with `max(pred/gt, gt/pred) < 1.25`.
    pub delta1: f64,
    /// Fraction under threshold `1.25^2`.
    pub delta2: f64,
    /// Fraction under threshold `1.25^3`.
    pub delta3: f64,
    /// Points that entered the evaluation after the depth cap.
    pub n_evaluated: usize,
    pub depth_cap: Option<f64>,
}

/// Rescale predictions so their median matches the ground-truth median.
/// Returns the scaled predictions and the scale factor.
pub fn median_scale(pred: &[f64], gt: &[f64]) -> Result<(Vec<f64>, f64)> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::Input("empty depth vectors".into()));
    }
    let med_gt = median(gt).unwrap();
    let med_pred = median(pred).unwrap();
    if !(med_pred > 0.0) || !(med_gt > 0.0) {
        return Err(Error::Degenerate(format!(
            "nonpositive median (gt {med_gt}, pred {med_pred})"
        )));
    }
    let scale = med_gt / med_pred;
    Ok((pred.iter().map(|&p| p * scale).collect(), scale))
}

/// Compute all depth metrics for already-scaled predictions. Points with
/// ground truth at or above `cap` are excluded before any computation.
pub fn depth_metrics(pred_scaled: &[f64], gt: &[f64], cap: Option<f64>) -> Result<DepthMetrics> {
    if pred_scaled.len() != gt.len() {
        return Err(Error::Dimension(format!(
            "{} predictions vs {} ground-truth depths",
            pred_scaled.len(),
            gt.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = pred_scaled
        .iter()
        .zip(gt)
        .filter(|&(_, &g)| cap.is_none_or(|c| g < c))
        .map(|(&p, &g)| (p, g))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Input("no points left after the depth cap".into()));
    }
    if let Some(&(p, g)) = pairs.iter().find(|&&(p, g)| !(p > 0.0) || !(g > 0.0)) {
        return Err(Error::Domain(format!(
            "nonpositive depth in evaluation set (pred {p}, gt {g})"
        )));
    }
    let n = pairs.len() as f64;
    let mut abs_rel = 0.0;
    let mut sq_rel = 0.0;
    let mut sq = 0.0;
    let mut sq_log = 0.0;
    let (mut d1, mut d2, mut d3) = (0usize, 0usize, 0usize);
    for &(p, g) in &pairs {
        let diff = g - p;
        abs_rel += diff.abs() / g;
        sq_rel += diff * diff / g;
        sq += diff * diff;
        let dl = g.ln() - p.ln();
        sq_log += dl * dl;
        let ratio = (p / g).max(g / p);
        if ratio < 1.25 {
            d1 += 1;
        }
        if ratio < 1.25f64.powi(2) {
            d2 += 1;
        }
        if ratio < 1.25f64.powi(3) {
            d3 += 1;
        }
    }
    Ok(DepthMetrics {
        abs_rel: abs_rel / n,
        sq_rel: sq_rel / n,
        rmse: (sq / n).sqrt(),
        rmse_log: (sq_log / n).sqrt(),
        delta1: d1 as f64 / n,
        delta2: d2 as f64 / n,
        delta3: d3 as f64 / n,
        n_evaluated: pairs.len(),
        depth_cap: cap,
    })
}

/// Median-scale then evaluate, the usual pipeline for one view.
pub fn scaled_depth_metrics(pred: &[f64], gt: &[f64], cap: Option<f64>) -> Result<DepthMetrics> {
    let (scaled, _) = median_scale(pred, gt)?;
    depth_metrics(&scaled, gt, cap)
}

/// Binary segmentation quality: overall pixel accuracy and
/// intersection-over-union of the dynamic class.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SegMetrics {
    pub accuracy: f64,
    pub iou: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

/// Confusion counts of predicted versus ground-truth dynamic labels.
/// The degenerate empty-vs-empty dynamic set has IoU 1.
pub fn seg_metrics(pred: &[bool], gt: &[bool]) -> Result<SegMetrics> {
    if pred.len() != gt.len() {
        return Err(Error::Dimension(format!(
            "{} predicted vs {} ground-truth labels",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Input("empty label vectors".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &g) in pred.iter().zip(gt) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let union = tp + fn_ + fp;
    Ok(SegMetrics {
        accuracy: (tp + tn) as f64 / pred.len() as f64,
        iou: if union == 0 {
            1.0
        } else {
            tp as f64 / union as f64
        },
        tp,
        fp,
        fn_,
        tn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn median_scale_known_factor() {
        // gt median 10, pred median 2 -> scale 5.
        let gt = vec![8.0, 10.0, 12.0];
        let pred = vec![1.0, 2.0, 30.0];
        let (scaled, s) = median_scale(&pred, &gt).unwrap();
        assert_eq!(s, 5.0);
        assert_eq!(scaled, vec![5.0, 10.0, 150.0]);
    }

    #[test]
    fn median_scale_identity() {
        let gt = vec![1.0, 2.0, 3.0, 4.0];
        let (scaled, s) = median_scale(&gt, &gt).unwrap();
        assert_eq!(s, 1.0);
        assert_eq!(scaled, gt);
    }

    #[test]
    fn median_matches_sort_oracle_even_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 2, 5, 8, 101, 100] {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..20.0)).collect();
            let mut sorted = v.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expected = if n % 2 == 1 {
                sorted[n / 2]
            } else {
                0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
            };
            let gt = vec![expected; n]; // gt median equals expected
            let (_, s) = median_scale(&v, &gt).unwrap();
            assert!((s - 1.0).abs() < 1e-12, "n={n}: scale {s}");
        }
    }

    #[test]
    fn median_scale_rejects_degenerate()
    {
        assert!(median_scale(&[], &[1.0]).is_err());
        assert!(median_scale(&[0.0], &[1.0]).is_err());
    }

    #[test]
    fn depth_metrics_hand_case() {
        // abs_rel = (0.5 + 0.25) / 2.
        let m = depth_metrics(&[1.0, 5.0], &[2.0, 4.0], None).unwrap();
        assert!((m.abs_rel - 0.375).abs() < 1e-15);
        // sq_rel = (1/2 + 1/4) / 2
        assert!((m.sq_rel - 0.375).abs() < 1e-15);
        assert!((m.rmse - (0.5f64 * (1.0 + 1.0)).sqrt()).abs() < 1e-15);
        assert_eq!(m.n_evaluated, 2);
    }

    #[test]
    fn perfect_prediction_metrics() {
        let gt = vec![1.0, 2.5, 7.0];
        let m = depth_metrics(&gt, &gt, None).unwrap();
        assert_eq!(m.abs_rel, 0.0);
        assert_eq!(m.sq_rel, 0.0);
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.rmse_log, 0.0);
        assert_eq!((m.delta1, m.delta2, m.delta3), (1.0, 1.0, 1.0));
    }

    #[test]
    fn delta_threshold_boundary() {
        // ratio 1.2 < 1.25 counts toward delta1.
        let m = depth_metrics(&[2.4], &[2.0], None).unwrap();
        assert_eq!(m.delta1, 1.0);
        // ratio 1.3 only reaches delta2.
        let m = depth_metrics(&[2.6], &[2.0], None).unwrap();
        assert_eq!(m.delta1, 0.0);
        assert_eq!(m.delta2, 1.0);
    }

    #[test]
    fn deltas_are_nondecreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let gt: Vec<f64> = (0..200).map(|_| rng.gen_range(0.5..30.0)).collect();
        let pred: Vec<f64> = gt.iter().map(|g| g * rng.gen_range(0.5..2.0)).collect();
        let m = depth_metrics(&pred, &gt, None).unwrap();
        assert!(m.delta1 <= m.delta2 && m.delta2 <= m.delta3 && m.delta3 <= 1.0);
    }

    #[test]
    fn depth_cap_excludes_far_points() {
        let gt = vec![1.0, 2.0, 60.0];
        let pred = vec![1.0, 2.0, 1.0];
        let m = depth_metrics(&pred, &gt, Some(50.0)).unwrap();
        assert_eq!(m.n_evaluated, 2);
        assert_eq!(m.abs_rel, 0.0);
        assert!(depth_metrics(&pred, &gt, Some(0.5)).is_err());
    }

    #[test]
    fn nonpositive_depths_rejected() {
        assert!(depth_metrics(&[1.0], &[-1.0], None).is_err());
        assert!(depth_metrics(&[0.0], &[1.0], None).is_err());
        assert!(depth_metrics(&[1.0, 2.0], &[1.0], None).is_err());
    }

    #[test]
    fn scale_invariance_after_median_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gt: Vec<f64> = (0..101).map(|_| rng.gen_range(1.0..20.0)).collect();
        let pred: Vec<f64> = gt.iter().map(|g| g * rng.gen_range(0.8..1.3)).collect();
        let base = scaled_depth_metrics(&pred, &gt, None).unwrap();
        for s in [1e-3, 0.4, 17.0] {
            let scaled_pred: Vec<f64> = pred.iter().map(|p| p * s).collect();
            let m = scaled_depth_metrics(&scaled_pred, &gt, None).unwrap();
            assert!((m.abs_rel - base.abs_rel).abs() <= 1e-12 * base.abs_rel.max(1e-300));
            assert_eq!(m.delta1, base.delta1);
            assert_eq!(m.delta2, base.delta2);
            assert_eq!(m.delta3, base.delta3);
        }
    }

    #[test]
    fn seg_metrics_hand_case() {
        // 4 dynamic in gt; prediction overlaps 3 and adds 1 false positive.
        let gt = vec![true, true, true, true, false, false, false, false];
        let pred = vec![true, true, true, false, true, false, false, false];
        let m = seg_metrics(&pred, &gt).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_, m.tn), (3, 1, 1, 3));
        assert!((m.iou - 0.6).abs() < 1e-15);
        assert!((m.accuracy - 0.75).abs() < 1e-15);
    }

    #[test]
    fn seg_metrics_identity_and_empty_dynamic() {
        let gt = vec![true, false, true];
        let m = seg_metrics(&gt, &gt).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.iou, 1.0);

        let none = vec![false, false];
        let m = seg_metrics(&none, &none).unwrap();
        assert_eq!(m.iou, 1.0);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn seg_metrics_match_counting_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let gt: Vec<bool> = (0..300).map(|_| rng.gen_bool(0.3)).collect();
        let pred: Vec<bool> = (0..300).map(|_| rng.gen_bool(0.4)).collect();
        let m = seg_metrics(&pred, &gt).unwrap();
        let mut counts = [0usize; 4];
        for i in 0..300 {
            match (pred[i], gt[i]) {
                (true, true) => counts[0] += 1,
                (true, false) => counts[1] += 1,
                (false, true) => counts[2] += 1,
                (false, false) => counts[3] += 1,
            }
        }
        assert_eq!((m.tp, m.fp, m.fn_, m.tn), (counts[0], counts[1], counts[2], counts[3]));
        assert_eq!(m.iou, counts[0] as f64 / (counts[0] + counts[1] + counts[2]) as f64);
        assert!(seg_metrics(&pred[..10], &gt).is_err());
    }

    #[test]
    fn accuracy_one_iff_iou_one_with_dynamic_points() {
        let gt = vec![true, false, false];
        let pred_perfect = vec![true, false, false];
        let m = seg_metrics(&pred_perfect, &gt).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.iou, 1.0);
        let pred_off = vec![false, true, false];
        let m = seg_metrics(&pred_off, &gt).unwrap();
        assert!(m.accuracy < 1.0);
        assert!(m.iou < 1.0);
    }
}
