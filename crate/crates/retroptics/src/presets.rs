//! Named scenarios used by the CLI, the examples and the acceptance tests.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::engineer::{characteristic_roots, optimize_first_column, unitary_with_first_column, DetectionPattern, FirstColumnOptimum};
use crate::error::{Error, Result};
use crate::experiments::{fig5_3_config, fig5_5_config, ExperimentConfig};
use crate::fock::FockVector;
use crate::multiport::{dft_matrix, UnitaryMatrix};

pub const DESIGN_PRESETS: [&str; 4] = ["simple-config", "dft3", "optimal3", "zero-minus-Nplus1"];
pub const SIMULATION_PRESETS: [&str; 2] = ["fig5_3", "fig5_5"];

/// Target state, multiport and detection pattern.
#[derive(Clone, Debug)]
pub struct DesignPreset {
    pub name: String,
    pub psi: FockVector,
    pub unitary: UnitaryMatrix,
    pub pattern: DetectionPattern,
    /// Present when the multiport came from the efficiency optimizer.
    pub optimum: Option<FirstColumnOptimum>,
}

/// `(|0⟩ + |1⟩ + |2⟩)/√3`.
pub fn truncated_phase_target() -> FockVector {
    FockVector::from_real(&[1.0, 1.0, 1.0]).normalize()
}

/// `(|0⟩ − |N+1⟩)/√2`.
pub fn zero_minus_target(n: usize) -> FockVector {
    let mut amps = vec![0.0; n + 2];
    amps[0] = 1.0;
    amps[n + 1] = -1.0;
    FockVector::from_real(&amps).normalize()
}

/// Two cascaded symmetric 50/50 beam splitters: the first couples modes 0
/// and 1, the second couples its output 0 with mode 2.
pub fn two_beam_splitter_unitary() -> UnitaryMatrix {
    let s = std::f64::consts::SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re / 2.0, im / 2.0);
    let m = DMatrix::from_row_slice(
        3,
        3,
        &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, s), c(0.0, s), c(s, 0.0), c(0.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(s, 0.0)],
    );
    UnitaryMatrix::new(m).expect("product of beam splitters is unitary")
}

pub fn simple_config() -> DesignPreset {
    DesignPreset {
        name: "simple-config".into(),
        psi: truncated_phase_target(),
        unitary: two_beam_splitter_unitary(),
        pattern: DetectionPattern::new(vec![0, 1, 1]),
        optimum: None,
    }
}

pub fn dft3() -> DesignPreset {
    DesignPreset {
        name: "dft3".into(),
        psi: truncated_phase_target(),
        unitary: dft_matrix(3),
        pattern: DetectionPattern::new(vec![0, 1, 1]),
        optimum: None,
    }
}

/// Multiport whose first column maximizes the success probability for `psi`
/// and `pattern` (which must have `n_0 = 0`).
pub fn optimal_design(name: &str, psi: FockVector, pattern: DetectionPattern) -> Result<DesignPreset> {
    let roots = characteristic_roots(&psi)?;
    let opt = optimize_first_column(&roots, &pattern)?;
    Ok(DesignPreset { name: name.into(), psi, unitary: unitary_with_first_column(&opt.x)?, pattern, optimum: Some(opt) })
}

pub fn optimal3() -> Result<DesignPreset> {
    optimal_design("optimal3", truncated_phase_target(), DetectionPattern::new(vec![0, 1, 1]))
}

/// `(|0⟩ − |N+1⟩)/√2` from an `(N+1)`-port DFT with one photon per detector.
pub fn zero_minus_n_plus_1(n: usize) -> Result<DesignPreset> {
    if n == 0 {
        return Err(Error::InvalidConfig("zero-minus-Nplus1 needs N ≥ 1".into()));
    }
    Ok(DesignPreset {
        name: format!("zero-minus-Nplus1 (N = {n})"),
        psi: zero_minus_target(n),
        unitary: dft_matrix(n + 1),
        pattern: DetectionPattern::new(vec![1; n + 1]),
        optimum: None,
    })
}

/// Looks up a design preset; `n` parametrizes `zero-minus-Nplus1`.
pub fn design_preset(name: &str, n: usize) -> Result<DesignPreset> {
    match name {
        "simple-config" => Ok(simple_config()),
        "dft3" => Ok(dft3()),
        "optimal3" => optimal3(),
        "zero-minus-Nplus1" => zero_minus_n_plus_1(n),
        other => Err(Error::InvalidConfig(format!("unknown design preset `{other}` (known: {})", DESIGN_PRESETS.join(", ")))),
    }
}

pub fn simulation_preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "fig5_3" => Ok(fig5_3_config()),
        "fig5_5" => Ok(fig5_5_config()),
        other => Err(Error::InvalidConfig(format!("unknown simulation preset `{other}` (known: {})", SIMULATION_PRESETS.join(", ")))),
    }
}
