//! Monte Carlo photocounting for the single-shot phase measurement of a weak
//! coherent state with a squeezed reference, with ideal detectors, with
//! η = 0.6 detectors, and with η = 0.6 corrected on the counts.
//!
//! Pass a trial count as the first argument (default 200000).

use retroptics::experiments::{fig5_3_config, fig5_5_config, monte_carlo};

fn main() -> retroptics::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200_000);
    let mut corrected = fig5_5_config();
    corrected.correct_efficiency = true;
    for (name, mut cfg) in [("ideal detectors", fig5_3_config()), ("η = 0.6", fig5_5_config()), ("η = 0.6, corrected", corrected)] {
        cfg.trials = trials;
        cfg.seed = 42;
        let r = monte_carlo(&cfg)?;
        println!("{name}");
        println!("  {:>7} {:>9} {:>9} {:>9} {:>9}", "θ", "estimate", "± se", "expected", "ideal");
        for h in &r.histogram {
            println!("  {:7.4} {:9.5} {:9.5} {:9.5} {:9.5}", h.theta, h.density, h.stderr, h.analytic, h.ideal);
        }
    }
    Ok(())
}
