//! Reck decomposition of the 4-port DFT into beam splitters and output
//! phases, written as a CSV netlist, then rebuilt and compared.

use retroptics::multiport::{dft_matrix, realize, reck_decompose};

fn main() -> retroptics::Result<()> {
    let u = dft_matrix(4);
    let plan = reck_decompose(&u)?;
    for e in &plan.elements {
        println!("T{}{}: reflectivity sin θ = {:.6}, φ = {:+.6}", e.p, e.q, e.theta.sin(), e.phi);
    }
    for (n, d) in plan.output_phases.iter().enumerate() {
        println!("δ{n} = {d:+.6}");
    }
    println!("rebuild error = {:.2e}", realize(&plan)?.distance(&u));
    println!();
    plan.write_netlist(std::io::stdout())?;
    Ok(())
}
