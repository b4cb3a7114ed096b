//! The four-mode single-shot phase device built from four 50/50 beam
//! splitters and phase shifters.

use retroptics::experiments::{eight_port_layout, eight_port_matrix};

fn main() {
    let layout = eight_port_layout();
    println!("{layout:#?}");
    let built = layout.compose();
    println!("distance from the 4-port DFT, up to a global phase: {:.2e}", built.distance_up_to_phase(&eight_port_matrix()));
}
