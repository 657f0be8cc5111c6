use dpsconf::eval::{
    baseline_msm, density_grid, ground_truth_confidence, optimal_auc, sparsification_auc, sparsify,
    EvalParams,
};
use dpsconf::matcher::MatchOutput;
use dpsconf::raster::{ConfidenceMap, DisparityMap};
use proptest::prelude::*;

/// Straightforward sparsification: repeatedly pick the most confident
/// remaining pixel (lowest index on ties), and at each density `i / steps`
/// count errors among the first `ceil(i * n / steps)` picks.
fn enumerate(conf: &[f64], bad: &[bool], steps: usize) -> (Vec<(f64, f64)>, f64) {
    let n = conf.len();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut picked = Vec::new();
    while !remaining.is_empty() {
        let mut best = 0;
        for j in 1..remaining.len() {
            if conf[remaining[j]] > conf[remaining[best]] {
                best = j;
            }
        }
        picked.push(remaining.remove(best));
    }
    let mut curve = Vec::new();
    for i in 1..=steps {
        let m = (i * n).div_ceil(steps);
        let errors = picked[..m].iter().filter(|&&p| bad[p]).count();
        curve.push((i as f64 / steps as f64, errors as f64 / m as f64));
    }
    let mut auc = curve[0].0 * curve[0].1;
    for i in 1..curve.len() {
        auc += (curve[i].0 - curve[i - 1].0) * (curve[i].1 + curve[i - 1].1) / 2.0;
    }
    (curve, auc)
}

fn params(steps: usize) -> EvalParams {
    EvalParams {
        tau: 3.0,
        densities: density_grid(steps),
    }
}

fn samples(conf: &[f64], bad: &[bool]) -> Vec<(f64, bool)> {
    conf.iter().copied().zip(bad.iter().copied()).collect()
}

#[test]
fn ten_pixel_hand_case() {
    // Pixels 1..=10 with decreasing confidence; pixels 9 and 10 are wrong.
    let conf: Vec<f64> = (0..10).map(|i| 1.0 - i as f64 * 0.1).collect();
    let bad: Vec<bool> = (0..10).map(|i| i >= 8).collect();
    let report = sparsify(&samples(&conf, &bad), &params(10)).unwrap();

    let mut want = vec![0.0; 8];
    want.extend([1.0 / 9.0, 2.0 / 10.0]);
    for ((rho, err), (i, w)) in report.curve.iter().zip(want.iter().enumerate()) {
        assert_eq!(*rho, (i + 1) as f64 / 10.0);
        assert_eq!(err, w);
    }
    let (curve, auc) = enumerate(&conf, &bad, 10);
    assert_eq!(report.curve, curve);
    assert_eq!(report.auc, auc);
    assert_eq!(report.epsilon, 0.2);
}

#[test]
fn hand_case_through_disparity_maps() {
    let gt = DisparityMap::filled(10, 1, 20.0);
    let pred_vals: Vec<f64> = (0..10).map(|i| if i >= 8 { 24.0 } else { 23.0 }).collect();
    let pred = DisparityMap::from_values(10, 1, pred_vals).unwrap();
    let conf = ConfidenceMap::new(10, 1, (0..10).map(|i| 1.0 - i as f64 * 0.1).collect(), vec![true; 10]).unwrap();
    let r = sparsification_auc(&conf, &pred, &gt, &params(10)).unwrap();
    assert_eq!(r.epsilon, 0.2);
    assert_eq!(r.n_pixels, 10);
    assert_eq!(r.curve[8], (0.9, 1.0 / 9.0));
}

#[test]
fn every_ordering_of_twelve_pixels() {
    // An ordering only matters through the good/bad pattern it induces, so
    // the 2^12 patterns cover all 12! orderings of every error set.
    let n = 12;
    let conf: Vec<f64> = (0..n).map(|i| (n - i) as f64).collect();
    for steps in [20, 10, 7] {
        let p = params(steps);
        for mask in 0u32..(1 << n) {
            let bad: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let report = sparsify(&samples(&conf, &bad), &p).unwrap();
            let (curve, auc) = enumerate(&conf, &bad, steps);
            assert_eq!(report.curve, curve, "pattern {mask:012b}");
            assert_eq!(report.auc, auc, "pattern {mask:012b}");
        }
    }
}

#[test]
fn permutations_of_seven_pixels_match_enumeration() {
    let bad = [true, false, false, true, false, true, false];
    let mut perm: Vec<usize> = (0..7).collect();
    let p = params(20);
    let mut count = 0;
    loop {
        let conf: Vec<f64> = perm.iter().map(|&r| r as f64 / 10.0).collect();
        let report = sparsify(&samples(&conf, &bad), &p).unwrap();
        assert_eq!(report.auc, enumerate(&conf, &bad, 20).1);
        count += 1;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    assert_eq!(count, 5040);
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[test]
fn oracle_and_anti_oracle_bound_every_ordering() {
    let n = 12;
    let p = params(20);
    for n_bad in 1..n {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let conf: Vec<f64> = (0..n).map(|i| (n - i) as f64).collect();
        for mask in (0u32..(1 << n)).filter(|m| m.count_ones() as usize == n_bad) {
            let bad: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let auc = sparsify(&samples(&conf, &bad), &p).unwrap().auc;
            lo = lo.min(auc);
            hi = hi.max(auc);
        }
        let bad: Vec<bool> = (0..n).map(|i| i < n_bad).collect();
        let good_first: Vec<f64> = bad.iter().map(|&b| if b { 0.0 } else { 1.0 }).collect();
        let bad_first: Vec<f64> = bad.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let oracle = sparsify(&samples(&good_first, &bad), &p).unwrap();
        let anti = sparsify(&samples(&bad_first, &bad), &p).unwrap();
        assert_eq!(oracle.auc, lo, "{n_bad} errors");
        assert_eq!(anti.auc, hi, "{n_bad} errors");
        let eps = n_bad as f64 / n as f64;
        assert!(optimal_auc(eps).unwrap() <= lo + 0.05 * eps);
    }
}

/// Composite Simpson rule for the area under the optimal curve.
fn quadrature(eps: f64) -> f64 {
    let a = 1.0 - eps;
    let f = |x: f64| (x - a) / x;
    let steps = 200_000;
    let h = eps / steps as f64;
    let mut sum = f(a) + f(1.0);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

#[test]
fn optimal_auc_matches_quadrature() {
    assert_eq!(optimal_auc(0.0).unwrap(), 0.0);
    for eps in [0.01, 0.05, 0.1, 0.2, 0.5, 0.9] {
        let got = optimal_auc(eps).unwrap();
        assert!((got - quadrature(eps)).abs() < 1e-10, "eps {eps}");
    }
    assert!((optimal_auc(0.1).unwrap() - (0.1 + 0.9 * 0.9f64.ln())).abs() < 1e-15);
    assert!(optimal_auc(1.0).is_err());
    assert!(optimal_auc(-0.1).is_err());
}

#[test]
fn constant_confidence_tracks_the_error_rate() {
    // With all confidences tied, the subset order is raster order.
    let n = 1000;
    let conf = vec![0.5; n];
    let bad: Vec<bool> = (0..n).map(|i| i % 5 == 2).collect();
    let report = sparsify(&samples(&conf, &bad), &EvalParams::default()).unwrap();
    for &(rho, err) in &report.curve {
        let m = (rho * n as f64).ceil();
        assert!((err - 0.2).abs() <= 1.0 / m + 1e-12, "rho {rho}: {err}");
    }
    assert_eq!(report.curve.last().unwrap().1, 0.2);
    assert!((report.auc - 0.2).abs() < 1e-3, "{}", report.auc);
    assert_eq!(report.auc, enumerate(&conf, &bad, 20).1);

    // Ten pixels, errors at raster positions 5 and 10.
    let bad: Vec<bool> = (0..10).map(|i| i == 4 || i == 9).collect();
    let report = sparsify(&samples(&[0.5; 10], &bad), &params(10)).unwrap();
    for (i, &(_, err)) in report.curve.iter().enumerate() {
        assert!((err - 0.2).abs() <= 1.0 / (i + 1) as f64 + 1e-12);
    }
    assert_eq!(report.curve[4].1, 0.2);
    assert_eq!(report.curve[9].1, 0.2);
}

#[test]
fn ground_truth_confidence_examples() {
    let gt = DisparityMap::new(4, 1, vec![5.0, 5.0, 5.0, 5.0], vec![true, true, true, false]).unwrap();
    let pred = DisparityMap::from_values(4, 1, vec![5.0, 8.0, 8.5, 5.0]).unwrap();
    let c = ground_truth_confidence(&pred, &gt, 3.0).unwrap();
    assert_eq!(c.values()[..3], [1.0, 1.0, 0.0]);
    assert_eq!(c.valid_mask(), &[true, true, true, false]);
    let same = ground_truth_confidence(&gt, &gt, 3.0).unwrap();
    assert!((0..3).all(|i| same.get(i) == Some(1.0)));
}

#[test]
fn minimum_cost_baseline_endpoints() {
    let disparity = DisparityMap::filled(3, 1, 2.0);
    let out = MatchOutput {
        disparity: disparity.clone(),
        winner_cost: vec![0, 50, 100],
    };
    assert_eq!(baseline_msm(&out).values(), &[1.0, 0.5, 0.0]);
    let flat = MatchOutput {
        disparity,
        winner_cost: vec![7, 7, 7],
    };
    assert_eq!(baseline_msm(&flat).values(), &[1.0, 1.0, 1.0]);
}

fn scored() -> impl Strategy<Value = Vec<(u16, bool)>> {
    prop::collection::vec((0u16..1000, any::<bool>()), 1..60)
}

proptest! {
    #[test]
    fn auc_depends_only_on_the_ordering(items in scored()) {
        let bad: Vec<bool> = items.iter().map(|i| i.1).collect();
        let base: Vec<f64> = items.iter().map(|i| f64::from(i.0) / 1000.0).collect();
        let p = EvalParams::default();
        let reference = sparsify(&samples(&base, &bad), &p).unwrap();
        let transforms: [fn(f64) -> f64; 3] = [|c| c.powi(3), |c| c.exp() * 7.0 - 3.0, |c| c.sqrt()];
        for t in transforms {
            let moved: Vec<f64> = base.iter().map(|&c| t(c)).collect();
            let r = sparsify(&samples(&moved, &bad), &p).unwrap();
            prop_assert_eq!(r.auc.to_bits(), reference.auc.to_bits());
        }
    }

    #[test]
    fn auc_matches_enumeration(items in scored(), steps in 1usize..25) {
        let bad: Vec<bool> = items.iter().map(|i| i.1).collect();
        let conf: Vec<f64> = items.iter().map(|i| f64::from(i.0)).collect();
        let r = sparsify(&samples(&conf, &bad), &params(steps)).unwrap();
        let (curve, auc) = enumerate(&conf, &bad, steps);
        prop_assert_eq!(r.curve, curve);
        prop_assert_eq!(r.auc, auc);
    }

    #[test]
    fn no_ranking_beats_the_optimum(items in scored()) {
        let bad: Vec<bool> = items.iter().map(|i| i.1).collect();
        let conf: Vec<f64> = items.iter().map(|i| f64::from(i.0)).collect();
        let r = sparsify(&samples(&conf, &bad), &EvalParams::default()).unwrap();
        prop_assume!(r.epsilon < 1.0);
        prop_assert!(r.optimal_auc <= r.auc + 0.05 * r.epsilon + 1e-12);
    }
}
