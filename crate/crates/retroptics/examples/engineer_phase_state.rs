//! Reference amplitudes and success probability for the truncated phase
//! state `(|0⟩ + |1⟩ + |2⟩)/√3` with three multiports: two cascaded beam
//! splitters, the 3-port DFT, and the efficiency-optimized multiport.

use retroptics::engineer::{design, engineered_state};
use retroptics::fock::inner_product;
use retroptics::presets;

fn main() -> retroptics::Result<()> {
    for preset in [presets::simple_config(), presets::dft3(), presets::optimal3()?] {
        let t = design(&preset.psi, &preset.unitary, &preset.pattern)?;
        println!("{}", preset.name);
        println!("  |κ̄|² = {:.5e}, P_ψ = {:.5}", t.kappa_bar.norm_sqr(), t.efficiency);
        for (j, a) in t.alphas.iter().enumerate().skip(1) {
            println!("  α_{j} = {:.4} {:+.4}i", a.re, a.im);
        }
        if let Some(opt) = &preset.optimum {
            println!("  |U_i0|² = {:.5?}", opt.x);
        }
        // the reference fields really do project onto the target
        let tilde = engineered_state(&preset.unitary, &t.alphas, &t.pattern, preset.psi.cutoff())?;
        println!("  fidelity with target = {:.12}", inner_product(&preset.psi, &tilde.normalize()).norm_sqr());
    }

    println!("|0⟩ − |N+1⟩ from an (N+1)-port DFT:");
    for n in 1..=4 {
        let p = presets::zero_minus_n_plus_1(n)?;
        let t = design(&p.psi, &p.unitary, &p.pattern)?;
        println!("  N = {n}: P_ψ = {:.6}", t.efficiency);
    }
    Ok(())
}
