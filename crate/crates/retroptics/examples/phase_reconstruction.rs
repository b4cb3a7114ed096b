//! Rebuild the canonical phase distribution of a truncated state from its
//! `2N + 2` projection probabilities and compare with the exact one.

use retroptics::fock::FockVector;
use retroptics::phase::{phase_distribution, reconstruct_distribution, sample_projections, trig_moments};

fn main() -> retroptics::Result<()> {
    let n = 3;
    let psi = FockVector::from_real(&[0.6, 0.5, -0.4, 0.3]).normalize().to_density();
    let samples = sample_projections(&psi, n);
    for (g, p) in &samples {
        println!("γ = {g:.4}: Pr = {p:.6}");
    }
    let rec = reconstruct_distribution(&samples, n, 64)?;
    let exact = phase_distribution(&psi, 64);
    let err = rec.density.iter().zip(&exact.density).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("max |P_rec − P| = {err:.2e}, ∫P = {:.12}", rec.integral());
    let m = trig_moments(&psi, 1);
    println!("⟨cos θ⟩ = {:.6}, ⟨sin θ⟩ = {:.6}", m.cos_mean, m.sin_mean);
    Ok(())
}
