//! Confidence scoring by sparsification.
//!
//! Pixels are ranked by decreasing confidence; for each density `rho` the
//! top `ceil(rho * n)` pixels are kept and their bad-pixel rate
//! (`|pred - gt| > tau`) recorded. The area under that curve is lower for
//! better confidence measures; a perfect ranking achieves
//! `eps + (1 - eps) ln(1 - eps)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::{MatchOutput, StereoMatcher};
use crate::raster::{ConfidenceMap, DisparityMap, RasterImage};

pub const DEFAULT_TAU: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalParams {
    pub tau: f64,
    pub densities: Vec<f64>,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            tau: DEFAULT_TAU,
            densities: density_grid(20),
        }
    }
}

/// `steps` evenly spaced densities `1/steps, 2/steps, ..., 1`.
pub fn density_grid(steps: usize) -> Vec<f64> {
    (1..=steps).map(|i| i as f64 / steps as f64).collect()
}

impl EvalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        let d = &self.densities;
        if d.is_empty()
            || d[0] <= 0.0
            || d.windows(2).any(|w| w[0] >= w[1])
            || *d.last().unwrap() != 1.0
        {
            return Err(Error::InvalidConfig(format!(
                "densities must increase strictly within (0, 1] and end at 1.0, got {d:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Bad-pixel rate over all evaluated pixels.
    pub epsilon: f64,
    pub auc: f64,
    pub optimal_auc: f64,
    /// `(density, bad-pixel rate)` samples.
    pub curve: Vec<(f64, f64)>,
    pub n_pixels: usize,
}

fn check_dims(pred: &DisparityMap, gt: &DisparityMap) -> Result<()> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::DimensionMismatch(format!(
            "prediction is {}x{}, ground truth is {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    Ok(())
}

/// 1 where `|pred - gt| <= tau`, 0 otherwise; valid where both inputs are.
pub fn ground_truth_confidence(
    pred: &DisparityMap,
    gt: &DisparityMap,
    tau: f64,
) -> Result<ConfidenceMap> {
    check_dims(pred, gt)?;
    let n = pred.len();
    let mut values = vec![0.0; n];
    let mut valid = vec![false; n];
    for i in 0..n {
        if let (Some(p), Some(g)) = (pred.get(i), gt.get(i)) {
            valid[i] = true;
            values[i] = if (p - g).abs() <= tau { 1.0 } else { 0.0 };
        }
    }
    ConfidenceMap::new(pred.width(), pred.height(), values, valid)
}

/// Subset size `ceil(rho * n)`, immune to products like `0.3 * 10`
/// landing a hair above an integer.
fn subset_size(rho: f64, n: usize) -> usize {
    let exact = rho * n as f64;
    let nearest = exact.round();
    let m = if (exact - nearest).abs() <= 1e-9 * exact.max(1.0) {
        nearest
    } else {
        exact.ceil()
    };
    (m as usize).clamp(1, n)
}

/// Sparsification over `(confidence, is_bad)` samples given in raster
/// order. Ties in confidence keep raster order.
pub fn sparsify(samples: &[(f64, bool)], params: &EvalParams) -> Result<EvalReport> {
    params.validate()?;
    let n = samples.len();
    if n == 0 {
        return Err(Error::NoValidPixels);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| samples[b].0.total_cmp(&samples[a].0));

    let mut bad_prefix = Vec::with_capacity(n + 1);
    bad_prefix.push(0usize);
    for &i in &order {
        bad_prefix.push(bad_prefix.last().unwrap() + usize::from(samples[i].1));
    }

    let curve: Vec<(f64, f64)> = params
        .densities
        .iter()
        .map(|&rho| {
            let m = subset_size(rho, n);
            (rho, bad_prefix[m] as f64 / m as f64)
        })
        .collect();

    let (rho0, e0) = curve[0];
    let mut auc = rho0 * e0;
    for w in curve.windows(2) {
        let ((r0, e0), (r1, e1)) = (w[0], w[1]);
        auc += (r1 - r0) * (e0 + e1) / 2.0;
    }
    let epsilon = bad_prefix[n] as f64 / n as f64;
    Ok(EvalReport {
        epsilon,
        auc,
        optimal_auc: optimal_auc_unchecked(epsilon),
        curve,
        n_pixels: n,
    })
}

fn collect_samples(
    conf: &ConfidenceMap,
    pred: &DisparityMap,
    gt: &DisparityMap,
    tau: f64,
    out: &mut Vec<(f64, bool)>,
) -> Result<()> {
    check_dims(pred, gt)?;
    if conf.width() != pred.width() || conf.height() != pred.height() {
        return Err(Error::DimensionMismatch(format!(
            "confidence is {}x{}, prediction is {}x{}",
            conf.width(),
            conf.height(),
            pred.width(),
            pred.height()
        )));
    }
    for i in 0..pred.len() {
        if let (Some(c), Some(p), Some(g)) = (conf.get(i), pred.get(i), gt.get(i)) {
            out.push((c, (p - g).abs() > tau));
        }
    }
    Ok(())
}

/// Sparsification of one confidence map over pixels valid in all three
/// inputs.
pub fn sparsification_auc(
    conf: &ConfidenceMap,
    pred: &DisparityMap,
    gt: &DisparityMap,
    params: &EvalParams,
) -> Result<EvalReport> {
    let mut samples = Vec::with_capacity(pred.len());
    collect_samples(conf, pred, gt, params.tau, &mut samples)?;
    sparsify(&samples, params)
}

/// Sparsification with the pixels of several images pooled into one
/// ranking.
pub fn sparsification_auc_pooled(
    items: &[(&ConfidenceMap, &DisparityMap, &DisparityMap)],
    params: &EvalParams,
) -> Result<EvalReport> {
    let mut samples = Vec::new();
    for (conf, pred, gt) in items {
        collect_samples(conf, pred, gt, params.tau, &mut samples)?;
    }
    sparsify(&samples, params)
}

fn optimal_auc_unchecked(epsilon: f64) -> f64 {
    if epsilon >= 1.0 {
        // Limit of the closed form as eps -> 1.
        return 1.0;
    }
    epsilon + (1.0 - epsilon) * (-epsilon).ln_1p()
}

/// AUC of a perfect ranking at bad-pixel rate `epsilon`:
/// `eps + (1 - eps) ln(1 - eps)`.
pub fn optimal_auc(epsilon: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidConfig(format!(
            "error rate must lie in [0, 1), got {epsilon}"
        )));
    }
    Ok(optimal_auc_unchecked(epsilon))
}

/// Minimum-cost baseline: winner cost negated and min-max normalized over
/// the valid pixels. A constant cost map gives confidence 1 everywhere.
/// Not part of the sweep method; it needs the matcher's internal costs.
pub fn baseline_msm(output: &MatchOutput) -> ConfidenceMap {
    let disp = &output.disparity;
    let costs = &output.winner_cost;
    let valid = disp.valid_mask().to_vec();
    let (lo, hi) = costs
        .iter()
        .zip(&valid)
        .filter(|(_, ok)| **ok)
        .fold((u32::MAX, 0u32), |(lo, hi), (&c, _)| (lo.min(c), hi.max(c)));
    let span = f64::from(hi.saturating_sub(lo));
    let values = costs
        .iter()
        .zip(&valid)
        .map(|(&c, &ok)| match (ok, span > 0.0) {
            (false, _) => 0.0,
            (true, false) => 1.0,
            (true, true) => f64::from(hi - c) / span,
        })
        .collect();
    ConfidenceMap::new(disp.width(), disp.height(), values, valid)
        .expect("normalized values lie in [0, 1]")
}

/// Runs the matcher and derives the minimum-cost baseline. Fails with
/// [`Error::CostsUnavailable`] for matchers that hide their costs.
pub fn msm_confidence<M: StereoMatcher + ?Sized>(
    matcher: &M,
    left: &RasterImage,
    right: &RasterImage,
) -> Result<(ConfidenceMap, DisparityMap)> {
    let out = matcher.compute_with_costs(left, right)?;
    Ok((baseline_msm(&out), out.disparity))
}

/// Seeded uniform confidence over the pixels in `valid`.
pub fn random_confidence(width: usize, height: usize, valid: &[bool], seed: u64) -> ConfidenceMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..width * height).map(|_| rng.gen::<f64>()).collect();
    ConfidenceMap::new(width, height, values, valid.to_vec()).expect("samples lie in [0, 1)")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gt_confidence_threshold_is_inclusive() {
        let pred = DisparityMap::from_values(3, 1, vec![10.0, 13.0, 13.5]).unwrap();
        let gt = DisparityMap::from_values(3, 1, vec![10.0, 10.0, 10.0]).unwrap();
        let c = ground_truth_confidence(&pred, &gt, 3.0).unwrap();
        assert_eq!(c.values(), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn gt_confidence_masks_invalid_gt() {
        let pred = DisparityMap::filled(2, 1, 5.0);
        let gt = DisparityMap::new(2, 1, vec![5.0, 5.0], vec![true, false]).unwrap();
        let c = ground_truth_confidence(&pred, &gt, 3.0).unwrap();
        assert_eq!(c.valid_mask(), &[true, false]);
        let small = DisparityMap::filled(1, 1, 5.0);
        assert!(ground_truth_confidence(&pred, &small, 3.0).is_err());
    }

    #[test]
    fn subset_sizes_use_ceiling() {
        assert_eq!(subset_size(0.3, 10), 3);
        assert_eq!(subset_size(0.05, 10), 1);
        assert_eq!(subset_size(0.15, 10), 2);
        assert_eq!(subset_size(1.0, 7), 7);
        assert_eq!(subset_size(0.5, 7), 4);
        assert_eq!(subset_size(1e-6, 3), 1);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(sparsify(&[], &EvalParams::default()), Err(Error::NoValidPixels)));
    }

    #[test]
    fn param_validation() {
        let mut p = EvalParams::default();
        assert_eq!(p.densities.len(), 20);
        assert!(p.validate().is_ok());
        p.densities = vec![0.5, 0.9];
        assert!(p.validate().is_err());
        p.densities = vec![0.5, 0.5, 1.0];
        assert!(p.validate().is_err());
        p.densities = vec![0.0, 1.0];
        assert!(p.validate().is_err());
        p = EvalParams {
            tau: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn optimal_auc_domain() {
        assert_eq!(optimal_auc(0.0).unwrap(), 0.0);
        assert!(optimal_auc(1.0).is_err());
        assert!(optimal_auc(-0.1).is_err());
        let e = 0.1f64;
        assert!((optimal_auc(e).unwrap() - (e + (1.0 - e) * (1.0 - e).ln())).abs() < 1e-15);
    }

    #[test]
    fn msm_normalization_endpoints() {
        let disp = DisparityMap::new(3, 1, vec![1.0; 3], vec![true, true, false]).unwrap();
        let out = MatchOutput {
            disparity: disp.clone(),
            winner_cost: vec![0, 40, 1000],
        };
        let c = baseline_msm(&out);
        assert_eq!(c.get(0), Some(1.0));
        assert_eq!(c.get(1), Some(0.0));
        assert_eq!(c.get(2), None);

        let flat = MatchOutput {
            disparity: disp,
            winner_cost: vec![7, 7, 7],
        };
        assert_eq!(baseline_msm(&flat).values()[..2], [1.0, 1.0]);
    }

    #[test]
    fn random_control_is_seeded() {
        let mask = vec![true; 16];
        let a = random_confidence(4, 4, &mask, 7);
        let b = random_confidence(4, 4, &mask, 7);
        let c = random_confidence(4, 4, &mask, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
