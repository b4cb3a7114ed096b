//! Single-shot canonical phase measurement with a 4-port DFT.
//!
//! With the ideal binomial reference every retained pattern projects onto a
//! truncated phase state; the squeezed approximation slightly overweights
//! the three-photon component.

use num_complex::Complex64;
use retroptics::experiments::squeezed_reference_spec;
use retroptics::fock::{binomial_state, coherent_state};
use retroptics::multiport::dft_matrix;
use retroptics::phase::{single_shot_pom, single_shot_probabilities, truncated_phase_state};

fn main() -> retroptics::Result<()> {
    let n = 3;
    let u = dft_matrix(n + 1);
    let binomial = binomial_state(n, n, true)?;
    let squeezed = squeezed_reference_spec().build()?;
    for (name, reference) in [("binomial", binomial), ("squeezed", squeezed)] {
        let pom = single_shot_pom(n, &reference, &u)?;
        println!("{name} reference");
        for (m, g) in pom.iter().enumerate() {
            let fid = g.normalize().expectation(&truncated_phase_state(n, m, 0.0)).re;
            let psi = g.normalize();
            let shape: Vec<String> = (0..=n).map(|k| format!("{:.4}", (psi.get(k, k).re / psi.get(0, 0).re).sqrt())).collect();
            println!("  outcome {m}: fidelity {fid:.6}, |amplitude ratios| [{}]", shape.join(", "));
        }
        let signal = coherent_state(Complex64::new(0.076f64.sqrt(), 0.0), 10).to_density();
        let p = single_shot_probabilities(&signal, &pom)?;
        println!("  weak coherent signal: {:.4?} (discarded {:.4})", p.normalized, p.discarded);
    }
    Ok(())
}
