//! Bernoulli loss model for photodetectors and its inverse.

use retroptics::experiments::{detector_transform, inverse_amplification, TransformDirection};

fn main() -> retroptics::Result<()> {
    // thermal distribution with mean 1, cut at 10 photons
    let q: Vec<f64> = (0..=10).map(|n| 0.5f64.powi(n + 1)).collect();
    for eta in [1.0, 0.9, 0.6] {
        let p = detector_transform(&q, eta, TransformDirection::IdealToCounts)?;
        let back = detector_transform(&p, eta, TransformDirection::CountsToIdeal)?;
        let err = q.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!(
            "η = {eta}: P(0) = {:.4}, P(1) = {:.4}, round trip error {err:.1e}, worst amplification {:.1}",
            p[0],
            p[1],
            inverse_amplification(10, eta)
        );
    }
    Ok(())
}
