//! Factor a target state into displaced creation operators.
//!
//! `(|0⟩ + |1⟩ + |2⟩)/√3` has two roots; rebuilding `Π (â† − β*)|0⟩` from
//! them recovers the state up to normalization.

use num_complex::Complex64;
use retroptics::engineer::characteristic_roots;
use retroptics::fock::{inner_product, FockVector};

fn main() -> retroptics::Result<()> {
    let psi = FockVector::from_real(&[1.0, 1.0, 1.0]).normalize();
    let roots = characteristic_roots(&psi)?;
    for (i, b) in roots.iter().enumerate() {
        println!("β_{} = {:.6} {:+.6}i", i + 1, b.re, b.im);
    }

    // Π (â† − β_i*) |0⟩ as a polynomial in â†, then |n⟩ amplitudes √n! c_n
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for b in &roots {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (k, a) in poly.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= a * b.conj();
        }
        poly = next;
    }
    let rebuilt = FockVector::new(poly.iter().enumerate().map(|(n, c)| c * (1..=n).map(|k| k as f64).product::<f64>().sqrt()).collect());
    let overlap = inner_product(&psi, &rebuilt.normalize()).norm();
    println!("|⟨ψ|rebuilt⟩| = {overlap:.12}");
    Ok(())
}
