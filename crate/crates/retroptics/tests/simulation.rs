use std::collections::BTreeMap;

use num_complex::Complex64;
use retroptics::experiments::*;
use retroptics::fock::coherent_state;
use retroptics::Error;

#[test]
fn fig5_3_histogram_within_three_sigma() {
    let mut cfg = fig5_3_config();
    cfg.seed = 7;
    let r = monte_carlo(&cfg).unwrap();
    assert_eq!(r.histogram.len(), 16);
    for h in &r.histogram {
        let z = (h.density - h.analytic).abs() / h.stderr;
        assert!(z < 3.0, "θ = {:.3}: {} vs {} ({z:.2}σ)", h.theta, h.density, h.analytic);
    }
    assert!(r.settings.iter().all(|s| s.truncated_mass < 1e-4));
}

#[test]
fn seeded_runs_repeat() {
    let mut cfg = fig5_3_config();
    cfg.trials = 20_000;
    cfg.seed = 3;
    assert_eq!(monte_carlo(&cfg).unwrap(), monte_carlo(&cfg).unwrap());
    cfg.seed = 4;
    let other = monte_carlo(&cfg).unwrap();
    cfg.seed = 3;
    assert_ne!(monte_carlo(&cfg).unwrap(), other);
}

#[test]
fn efficiency_bias_and_correction() {
    let mut cfg = fig5_5_config();
    cfg.seed = 11;
    let biased = monte_carlo(&cfg).unwrap();
    let worst = biased.histogram.iter().map(|h| (h.analytic - h.ideal).abs()).fold(0.0, f64::max);
    assert!(worst > 0.005, "η = 0.6 should visibly bias the histogram, got {worst}");
    for h in &biased.histogram {
        assert!((h.density - h.analytic).abs() < 3.5 * h.stderr);
    }
    cfg.correct_efficiency = true;
    let fixed = monte_carlo(&cfg).unwrap();
    for h in &fixed.histogram {
        assert!((h.analytic - h.ideal).abs() < 1e-12);
        assert!((h.density - h.ideal).abs() < 3.5 * h.stderr, "θ = {:.3}: {} vs {} ± {}", h.theta, h.density, h.ideal, h.stderr);
    }
}

#[test]
fn bernoulli_round_trip() {
    let q: Vec<f64> = (0..=10).map(|n| 0.5f64.powi(n + 1)).collect();
    let p = detector_transform(&q, 0.8, TransformDirection::IdealToCounts).unwrap();
    assert!((p.iter().sum::<f64>() - q.iter().sum::<f64>()).abs() < 1e-14);
    let back = detector_transform(&p, 0.8, TransformDirection::CountsToIdeal).unwrap();
    for (a, b) in q.iter().zip(&back) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(matches!(detector_transform(&q, 1.2, TransformDirection::CountsToIdeal), Err(Error::InvalidEfficiency(_))));
}

#[test]
fn joint_round_trip() {
    let mut d = BTreeMap::new();
    d.insert(vec![0, 1, 1, 1], 0.3);
    d.insert(vec![2, 0, 1, 0], 0.5);
    d.insert(vec![0, 0, 0, 0], 0.2);
    let p = joint_detector_transform(&d, 0.7, TransformDirection::IdealToCounts, usize::MAX).unwrap();
    let back = joint_detector_transform(&p, 0.7, TransformDirection::CountsToIdeal, DEFAULT_INVERSE_NMAX).unwrap();
    for (k, v) in &back {
        assert!((v - d.get(k).copied().unwrap_or(0.0)).abs() < 1e-12, "{k:?}");
    }
}

#[test]
fn detector_efficiency_distorts_little_for_weak_signals() {
    let mut worst_weak: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..4 {
        let phi = k as f64 * std::f64::consts::PI / 8.0;
        worst_weak = worst_weak.max(efficiency_error(&coherent_state(Complex64::new(0.076f64.sqrt(), 0.0), 8), 0.9, phi).unwrap());
        for nbar in [0.05f64, 0.1, 0.2, 0.3, 0.4, 0.5] {
            worst = worst.max(efficiency_error(&coherent_state(Complex64::new(nbar.sqrt(), 0.0), 12), 0.9, phi).unwrap());
        }
    }
    println!("η = 0.9 distortion: {worst_weak:.5} at n̄ = 0.076, {worst:.5} up to n̄ = 0.5");
    assert!(worst_weak < 0.005 && worst < 0.02);
}

#[test]
fn config_round_trips_through_json() {
    let cfg = fig5_5_config();
    let s = serde_json::to_string(&cfg).unwrap();
    let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
    assert_eq!(cfg, back);
}
