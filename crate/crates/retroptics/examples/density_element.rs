//! Density-matrix elements and phase moments from beam-splitter photocounts.
//!
//! A weak coherent signal is measured with the double beam-splitter scheme
//! (phase-averaged coherent reference) and with the single beam-splitter
//! scheme (`(|0⟩ + |λ⟩)/√2` reference) at four reference phase settings.

use num_complex::Complex64;
use retroptics::experiments::{
    density_matrix_element, element_scaling, estimate_trig_moment, mixed_coherent_reference, optimal_bs1_angle,
    optimal_reference_intensity, scan, superposition_reference, ElementMode,
};
use retroptics::fock::coherent_state;
use retroptics::phase::trig_moments;

fn main() -> retroptics::Result<()> {
    let cutoff = 8;
    let rho = coherent_state(Complex64::from_polar(0.8, 0.4), cutoff).to_density().normalize();
    for lambda in 1..=2 {
        let reference = mixed_coherent_reference(optimal_reference_intensity(lambda).sqrt(), lambda, 30)?;
        let sv_reference = superposition_reference(lambda).to_density();
        let varrho = reference.get(lambda, 0);
        let mut scans = Vec::new();
        println!("λ = {lambda}");
        for n in 0..=cutoff - lambda {
            let mode = ElementMode::DoubleBs { bs1_theta: optimal_bs1_angle(n.max(1), lambda), n0: None };
            let s = scan(&rho, &reference, mode, n, lambda)?;
            let est = density_matrix_element(&s, n, mode, varrho)?;
            let sv_mode = ElementMode::SteuernagelVaccaro { n0: 0 };
            let sv = density_matrix_element(&scan(&rho, &sv_reference, sv_mode, n, lambda)?, n, sv_mode, varrho)?;
            if n < 3 {
                println!("  ρ[{n},{}] = {:.6}, double BS {:.6}, single BS {:.6}", n + lambda, rho.get(n, n + lambda), est, sv);
            }
            scans.push((s, element_scaling(mode, n, lambda, varrho)));
        }
        let (cos, sin) = estimate_trig_moment(&scans)?;
        let t = trig_moments(&rho, lambda);
        println!("  ⟨cos λθ⟩ = {cos:.6} (exact {:.6}), ⟨sin λθ⟩ = {sin:.6} (exact {:.6})", t.cos_mean, t.sin_mean);
    }
    Ok(())
}
