//! Simulated measurement schemes.
//!
//! * Double beam splitter: signal (mode 0) meets vacuum (mode 1) at a beam
//!   splitter of angle γ; output 0 then meets a reference (mode 2) at a 50/50
//!   beam splitter. Counting `(n0, N, n2)` extracts `ρ_{N,N+λ}` for
//!   `λ = n0 + n2`, and summing over `N` gives the trig moments.
//! * Single 50/50 beam splitter with a `(|0⟩ + |λ⟩)/√2` reference.
//! * Four-mode single-shot phase measurement with photodetector efficiency
//!   and Monte Carlo photocount sampling.
//!
//! Two-mode beam splitters in the first two schemes are taken with the
//! backward mode map `â†_out → t â†_in + i r â†_other`, i.e. the device matrix
//! is the complex conjugate of [`bs_matrix`].

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    binomial, binomial_state, coherent_state, factorial, squeezed_state, DensityMatrix, FockVector, MultimodeState, Occupation,
};
use crate::multiport::{
    bs_matrix, dft_matrix, evolve_multimode, realize, retrodictive_mdo, retrodictive_state, EvolutionDirection, MultiportPlan,
    UnitaryMatrix,
};
use crate::phase::single_shot_pattern;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidEfficiency(eta));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Reference fields and devices

/// `(1/λ) Σ_j |α_j⟩⟨α_j|`, `α_j = |α| e^{2πij/λ}`. Coherences `ϱ_{nm}` vanish
/// unless `λ` divides `n − m`.
pub fn mixed_coherent_reference(alpha_mag: f64, lambda: usize, cutoff: usize) -> Result<DensityMatrix> {
    if lambda == 0 {
        return Err(Error::InvalidConfig("λ must be at least 1".into()));
    }
    let d = cutoff + 1;
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for j in 0..lambda {
        let a = coherent_state(Complex64::from_polar(alpha_mag, 2.0 * PI * j as f64 / lambda as f64), cutoff);
        m += a.to_density().entries() / c(lambda as f64, 0.0);
    }
    // Cancelled coherences leave rounding residue; zero them exactly.
    for n in 0..d {
        for k in 0..d {
            if (n as i64 - k as i64).rem_euclid(lambda as i64) != 0 {
                m[(n, k)] = c(0.0, 0.0);
            }
        }
    }
    Ok(DensityMatrix::from_entries(m))
}

/// `(|0⟩ + |λ⟩)/√2`.
pub fn superposition_reference(lambda: usize) -> FockVector {
    let mut amps = vec![c(0.0, 0.0); lambda + 1];
    amps[0] += std::f64::consts::FRAC_1_SQRT_2;
    amps[lambda] += std::f64::consts::FRAC_1_SQRT_2;
    FockVector::new(amps)
}

fn symmetric_bs(theta: f64, dim: usize, p: usize, q: usize) -> UnitaryMatrix {
    bs_matrix(theta, 0.0, dim, p, q).conjugate()
}

/// Three-mode device: beam splitter of angle `bs1_theta` on modes (0, 1),
/// then a 50/50 beam splitter on modes (0, 2).
pub fn double_bs_unitary(bs1_theta: f64) -> UnitaryMatrix {
    symmetric_bs(FRAC_PI_4, 3, 2, 0).compose(&symmetric_bs(bs1_theta, 3, 1, 0))
}

/// Two-mode 50/50 device for the single beam-splitter scheme.
pub fn single_bs_unitary() -> UnitaryMatrix {
    symmetric_bs(FRAC_PI_4, 2, 1, 0)
}

/// Reference phase settings `jπ/λ`, `j ∈ {0, ½, 1, 3/2}`.
pub fn phase_settings(lambda: usize) -> [f64; 4] {
    let l = lambda as f64;
    [0.0, 0.5 * PI / l, PI / l, 1.5 * PI / l]
}

/// `|α|² = λ/2` maximizes `|ϱ_{0λ}|` for a (mixed) coherent reference.
pub fn optimal_reference_intensity(lambda: usize) -> f64 {
    lambda as f64 / 2.0
}

/// `tan γ = √(2N/λ)` maximizes `r^{2N} t^λ`.
pub fn optimal_bs1_angle(n: usize, lambda: usize) -> f64 {
    (2.0 * n as f64 / lambda as f64).sqrt().atan()
}

// ---------------------------------------------------------------------------
// Exact probabilities

/// Probability of counts `(n0, N, n2)` for signal `rho0` and reference
/// `reference` shifted by `e^{i n̂ φ}`.
pub fn double_bs_probability(
    rho0: &DensityMatrix,
    reference: &DensityMatrix,
    bs1_theta: f64,
    pattern: [usize; 3],
    reference_phase: f64,
) -> Result<f64> {
    let vac = DensityMatrix::diagonal(&[1.0]);
    let gamma = retrodictive_mdo(&double_bs_unitary(bs1_theta), &pattern, 0, &[(1, vac), (2, reference.phase_shift(reference_phase))])?;
    Ok(rho0.overlap(&gamma).re / rho0.trace().re)
}

/// Probability of counts `(n0, n1)` at the single 50/50 beam splitter.
pub fn sv_probability(rho0: &DensityMatrix, reference: &FockVector, pattern: [usize; 2], reference_phase: f64) -> Result<f64> {
    let psi = retrodictive_state(&single_bs_unitary(), &pattern, 0, &[(1, reference.phase_shift(reference_phase))])?;
    Ok(rho0.expectation(&psi).re / rho0.trace().re)
}

/// Probabilities at the four reference phase settings for one `(N, λ)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseScan {
    pub lambda: usize,
    /// `(φ, probability)` pairs.
    pub entries: Vec<(f64, f64)>,
}

pub(crate) const SETTING_NAMES: [&str; 4] = ["0", "π/(2λ)", "π/λ", "3π/(2λ)"];

impl PhaseScan {
    fn at(&self, j: usize) -> Option<f64> {
        let target = phase_settings(self.lambda)[j];
        self.entries.iter().find(|(phi, _)| (phi - target).abs() < 1e-9).map(|(_, p)| *p)
    }

    fn require(&self, needed: &[usize]) -> Result<Vec<Option<f64>>> {
        let vals: Vec<Option<f64>> = (0..4).map(|j| self.at(j)).collect();
        let missing: Vec<String> = needed.iter().filter(|&&j| vals[j].is_none()).map(|&j| SETTING_NAMES[j].to_string()).collect();
        if !missing.is_empty() {
            return Err(Error::MissingPhaseSettings(missing));
        }
        Ok(vals)
    }
}

/// How the counted patterns are combined for one `(N, λ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum ElementMode {
    /// Pattern `(n0, N, λ − n0)`; `n0 = None` means the signed sum
    /// `Σ_{n0} (−1)^{n0} Pr(n0, N, λ − n0)`.
    DoubleBs { bs1_theta: f64, n0: Option<usize> },
    /// Pattern `(n0, N + λ − n0)` with the `(|0⟩ + |λ⟩)/√2` reference.
    SteuernagelVaccaro { n0: usize },
}

/// Exact probabilities for `mode` across the four phase settings.
pub fn scan(rho0: &DensityMatrix, reference: &DensityMatrix, mode: ElementMode, n: usize, lambda: usize) -> Result<PhaseScan> {
    let entries = phase_settings(lambda)
        .iter()
        .map(|&phi| Ok((phi, mode_probability(rho0, reference, mode, n, lambda, phi)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseScan { lambda, entries })
}

fn mode_probability(rho0: &DensityMatrix, reference: &DensityMatrix, mode: ElementMode, n: usize, lambda: usize, phi: f64) -> Result<f64> {
    match mode {
        ElementMode::DoubleBs { bs1_theta, n0: Some(n0) } => {
            if n0 > lambda {
                return Err(Error::InvalidPattern(format!("n0 = {n0} exceeds λ = {lambda}")));
            }
            double_bs_probability(rho0, reference, bs1_theta, [n0, n, lambda - n0], phi)
        }
        ElementMode::DoubleBs { bs1_theta, n0: None } => {
            (0..=lambda).map(|k| Ok(sign(k) * double_bs_probability(rho0, reference, bs1_theta, [k, n, lambda - k], phi)?)).sum()
        }
        ElementMode::SteuernagelVaccaro { n0 } => {
            if n0 > n + lambda {
                return Err(Error::InvalidPattern(format!("n0 = {n0} exceeds N + λ = {}", n + lambda)));
            }
            let gamma = retrodictive_mdo(&single_bs_unitary(), &[n0, n + lambda - n0], 0, &[(1, reference.phase_shift(phi))])?;
            Ok(rho0.overlap(&gamma).re / rho0.trace().re)
        }
    }
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Coefficient `c` in `Pr(φ) = D + 2 Re(c e^{iλφ} ρ_{N,N+λ})` for the double
/// beam splitter, given the reference coherence `ϱ_{λ,0}`:
/// `c = (it)^λ r^{2N} √C(N+λ,N) ϱ_{λ,0}`, times `(−1)^{n0} C(λ,n0)/2^λ` for
/// a single pattern.
pub fn double_bs_scaling(n: usize, lambda: usize, bs1_theta: f64, n0: Option<usize>, varrho_l0: Complex64) -> Complex64 {
    let (r, t) = bs1_theta.sin_cos();
    let base = c(0.0, t).powu(lambda as u32) * r.powi(2 * n as i32) * binomial(n + lambda, n).sqrt() * varrho_l0;
    match n0 {
        None => base,
        Some(k) => base * sign(k) * binomial(lambda, k) / 2f64.powi(lambda as i32),
    }
}

/// Retrodictive amplitudes `(z_N, z_{N+λ})` at the 50/50 beam splitter for
/// counts `(n0, n1)`, `n0 + n1 = N + λ`: the amplitude of `|N⟩|λ⟩` and of
/// `|N+λ⟩|0⟩` in the back-evolved pattern.
pub fn sv_coefficients(n0: usize, n1: usize, lambda: usize) -> (Complex64, Complex64) {
    let total = n0 + n1;
    let n = total - lambda;
    let i = c(0.0, 1.0);
    // coefficient of x^N y^λ in (x + iy)^{n0} (ix + y)^{n1}
    let mut k_sum = c(0.0, 0.0);
    for k in 0..=n0.min(lambda) {
        if lambda - k > n1 {
            continue;
        }
        let j = lambda - k;
        k_sum += i.powu(k as u32) * binomial(n0, k) * binomial(n1, j) * i.powu((n1 - j) as u32);
    }
    let d = 2f64.powf(total as f64 / 2.0) * (factorial(n0) * factorial(n1)).sqrt();
    let z_n = k_sum * (factorial(n) * factorial(lambda)).sqrt() / d;
    let z_top = i.powu(n1 as u32) * factorial(total).sqrt() / d;
    (z_n, z_top)
}

/// `c = z_{N+λ} z_N* / 2` for the single beam-splitter scheme.
pub fn sv_scaling(n: usize, lambda: usize, n0: usize) -> Complex64 {
    let (z_n, z_top) = sv_coefficients(n0, n + lambda - n0, lambda);
    z_top * z_n.conj() / 2.0
}

/// Scaling for `mode`, with `varrho_l0` the reference coherence `ϱ_{λ,0}`
/// (ignored by the single beam-splitter scheme).
pub fn element_scaling(mode: ElementMode, n: usize, lambda: usize, varrho_l0: Complex64) -> Complex64 {
    match mode {
        ElementMode::DoubleBs { bs1_theta, n0 } => double_bs_scaling(n, lambda, bs1_theta, n0, varrho_l0),
        ElementMode::SteuernagelVaccaro { n0 } => sv_scaling(n, lambda, n0),
    }
}

/// `ρ_{N,N+λ} = [(P_0 − P_1) − i(P_½ − P_{3/2})] / (4c)`.
pub fn estimate_element(scan: &PhaseScan, scaling: Complex64) -> Result<Complex64> {
    if scaling.norm() < 1e-300 {
        return Err(Error::ZeroScaling);
    }
    let v = scan.require(&[0, 1, 2, 3])?;
    let (p0, ph, p1, p3) = (v[0].unwrap_or(0.0), v[1].unwrap_or(0.0), v[2].unwrap_or(0.0), v[3].unwrap_or(0.0));
    Ok(c(p0 - p1, -(ph - p3)) / (4.0 * scaling))
}

/// Estimate of `ρ_{N,N+λ}` for `mode`; see [`element_scaling`].
pub fn density_matrix_element(scan: &PhaseScan, n: usize, mode: ElementMode, varrho_l0: Complex64) -> Result<Complex64> {
    estimate_element(scan, element_scaling(mode, n, scan.lambda, varrho_l0))
}

/// `(⟨cos λθ⟩, ⟨sin λθ⟩)` from scans for `N = 0..=N_max`, each paired with
/// its scaling: `⟨e^{−iλθ}⟩ = Σ_N ρ_{N,N+λ}`.
///
/// The cosine alone needs only the pair of settings that carries
/// `Re ρ_{N,N+λ}`: `{0, π/λ}` when `c` is real, `{π/(2λ), 3π/(2λ)}` when it
/// is imaginary.
pub fn estimate_trig_moment(scans: &[(PhaseScan, Complex64)]) -> Result<(f64, f64)> {
    let mut total = c(0.0, 0.0);
    for (s, scale) in scans {
        total += estimate_element(s, *scale)?;
    }
    Ok((total.re, -total.im))
}

/// `⟨cos λθ⟩` alone, using whichever settings it requires.
pub fn estimate_cos_moment(scans: &[(PhaseScan, Complex64)]) -> Result<f64> {
    let mut total = 0.0;
    for (s, scale) in scans {
        if scale.norm() < 1e-300 {
            return Err(Error::ZeroScaling);
        }
        // Re ρ = (A Re c + B Im c)/|c|², A = (P0 − P1)/4, B = −(P½ − P3/2)/4.
        let tol = 1e-12 * scale.norm();
        let mut needed = Vec::new();
        if scale.re.abs() > tol {
            needed.extend([0, 2]);
        }
        if scale.im.abs() > tol {
            needed.extend([1, 3]);
        }
        let v = s.require(&needed)?;
        let a = (v[0].unwrap_or(0.0) - v[2].unwrap_or(0.0)) / 4.0;
        let b = -(v[1].unwrap_or(0.0) - v[3].unwrap_or(0.0)) / 4.0;
        total += (a * scale.re + b * scale.im) / scale.norm_sqr();
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Eight-port interferometer

/// The four-mode device of the single-shot phase measurement: `U_{ij} = i^{ij}/2`.
pub fn eight_port_matrix() -> UnitaryMatrix {
    dft_matrix(4)
}

/// Optical elements that realize [`eight_port_matrix`] up to a global phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EightPortLayout {
    pub input_phases: [f64; 4],
    pub first_layer: [(usize, usize); 2],
    /// Phase on mode 0 between the layers.
    pub middle_phase: f64,
    pub second_layer: [(usize, usize); 2],
    /// Output `k` of the device is internal mode `output_order[k]`.
    pub output_order: [usize; 4],
    pub output_phases: [f64; 4],
}

/// Four 50/50 beam splitters plus phase shifters.
pub fn eight_port_layout() -> EightPortLayout {
    EightPortLayout {
        input_phases: [0.0, 0.0, -FRAC_PI_2, -FRAC_PI_2],
        first_layer: [(2, 0), (3, 1)],
        middle_phase: FRAC_PI_2,
        second_layer: [(1, 0), (3, 2)],
        output_order: [0, 2, 1, 3],
        output_phases: [0.0, 0.0, -FRAC_PI_2, -FRAC_PI_2],
    }
}

impl EightPortLayout {
    /// Product of the layout's element matrices.
    pub fn compose(&self) -> UnitaryMatrix {
        let diag = |ph: &[f64]| {
            UnitaryMatrix::new_unchecked(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                4,
                ph.iter().map(|&p| Complex64::from_polar(1.0, p)),
            )))
        };
        let layer = |pairs: &[(usize, usize); 2]| {
            bs_matrix(FRAC_PI_4, 0.0, 4, pairs[0].0, pairs[0].1).compose(&bs_matrix(FRAC_PI_4, 0.0, 4, pairs[1].0, pairs[1].1))
        };
        let mut mid = [0.0; 4];
        mid[0] = self.middle_phase;
        let perm =
            UnitaryMatrix::new_unchecked(DMatrix::from_fn(4, 4, |i, j| if self.output_order[i] == j { c(1.0, 0.0) } else { c(0.0, 0.0) }));
        diag(&self.output_phases)
            .compose(&perm)
            .compose(&layer(&self.second_layer))
            .compose(&diag(&mid))
            .compose(&layer(&self.first_layer))
            .compose(&diag(&self.input_phases))
    }
}

// ---------------------------------------------------------------------------
// Detector efficiency

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformDirection {
    IdealToCounts,
    CountsToIdeal,
}

/// Default truncation of the inverse transform.
pub const DEFAULT_INVERSE_NMAX: usize = 12;

/// Single-detector Bernoulli transform.
///
/// Forward: `P(m) = Σ_{n≥m} Q(n) C(n,m) η^m (1−η)^{n−m}`.
/// Inverse: `Q(n) = Σ_{m≥n} P(m) C(m,n) (η−1)^{m−n} η^{−m}`, kept for
/// `n ≤ n_max`.
pub fn detector_transform(dist: &[f64], eta: f64, direction: TransformDirection) -> Result<Vec<f64>> {
    check_eta(eta)?;
    let total: f64 = dist.iter().sum();
    if total > 1.0 + 1e-10 {
        return Err(Error::InvalidConfig(format!("distribution sums to {total} > 1")));
    }
    let len = dist.len();
    Ok(match direction {
        TransformDirection::IdealToCounts => (0..len).map(|m| (m..len).map(|n| dist[n] * bernoulli_weight(n, m, eta)).sum()).collect(),
        TransformDirection::CountsToIdeal => {
            (0..len.min(DEFAULT_INVERSE_NMAX + 1)).map(|n| (n..len).map(|m| dist[m] * inverse_weight(m, n, eta)).sum()).collect()
        }
    })
}

/// Largest factor `η^{−m}` applied by the inverse transform; large values
/// signal an ill-conditioned correction.
pub fn inverse_amplification(max_count: usize, eta: f64) -> f64 {
    eta.powi(-(max_count as i32))
}

fn bernoulli_weight(n: usize, m: usize, eta: f64) -> f64 {
    binomial(n, m) * eta.powi(m as i32) * (1.0 - eta).powi((n - m) as i32)
}

fn inverse_weight(m: usize, n: usize, eta: f64) -> f64 {
    binomial(m, n) * (eta - 1.0).powi((m - n) as i32) * eta.powi(-(m as i32))
}

/// Distribution over multi-detector count patterns.
pub type PatternProbabilities = BTreeMap<Occupation, f64>;

fn sub_patterns(m: &[usize], cap: usize) -> Vec<Occupation> {
    let mut out = vec![Vec::new()];
    for &mi in m {
        let mut next = Vec::new();
        for prefix in &out {
            for n in 0..=mi.min(cap) {
                let mut p = prefix.clone();
                p.push(n);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Independent Bernoulli transform on every detector.
pub fn joint_detector_transform(
    dist: &PatternProbabilities,
    eta: f64,
    direction: TransformDirection,
    n_max: usize,
) -> Result<PatternProbabilities> {
    check_eta(eta)?;
    let mut out = PatternProbabilities::new();
    for (pattern, &p) in dist {
        if p == 0.0 {
            continue;
        }
        match direction {
            TransformDirection::IdealToCounts => {
                for m in sub_patterns(pattern, usize::MAX) {
                    let w: f64 = pattern.iter().zip(&m).map(|(&n, &mi)| bernoulli_weight(n, mi, eta)).product();
                    *out.entry(m).or_default() += p * w;
                }
            }
            TransformDirection::CountsToIdeal => {
                for n in sub_patterns(pattern, n_max) {
                    let w: f64 = pattern.iter().zip(&n).map(|(&m, &ni)| inverse_weight(m, ni, eta)).product();
                    *out.entry(n).or_default() += p * w;
                }
            }
        }
    }
    Ok(out)
}

/// Weight of observed pattern `observed` in the inverse transform at `target`.
fn inverse_weights_at(target: &[usize], observed: &[usize], eta: f64) -> f64 {
    if target.iter().zip(observed).any(|(t, o)| t > o) {
        return 0.0;
    }
    target.iter().zip(observed).map(|(&n, &m)| inverse_weight(m, n, eta)).product()
}

// ---------------------------------------------------------------------------
// Multimode photocount experiments

/// State fed into one input mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSpec {
    Vacuum,
    Number {
        n: usize,
    },
    Coherent {
        re: f64,
        im: f64,
        cutoff: usize,
    },
    /// Squeezed state `|α, t⟩`, then `e^{i n̂ phase}`.
    Squeezed {
        alpha: [f64; 2],
        t: [f64; 2],
        cutoff: usize,
        #[serde(default)]
        phase: f64,
    },
    Binomial {
        degree: usize,
        #[serde(default)]
        alternating: bool,
    },
    Amplitudes {
        state: FockVector,
    },
}

impl InputSpec {
    pub fn build(&self) -> Result<FockVector> {
        Ok(match self {
            InputSpec::Vacuum => FockVector::number(0, 0),
            InputSpec::Number { n } => FockVector::number(*n, *n),
            InputSpec::Coherent { re, im, cutoff } => coherent_state(c(*re, *im), *cutoff),
            InputSpec::Squeezed { alpha, t, cutoff, phase } => {
                squeezed_state(c(alpha[0], alpha[1]), c(t[0], t[1]), *cutoff)?.phase_shift(*phase)
            }
            InputSpec::Binomial { degree, alternating } => binomial_state(*degree, *degree, *alternating)?,
            InputSpec::Amplitudes { state } => state.clone(),
        })
    }
}

/// The linear device of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeviceSpec {
    Dft { dim: usize },
    EightPort,
    Matrix { unitary: UnitaryMatrix },
    Plan { plan: MultiportPlan },
}

impl DeviceSpec {
    pub fn build(&self) -> Result<UnitaryMatrix> {
        match self {
            DeviceSpec::Dft { dim } => Ok(dft_matrix(*dim)),
            DeviceSpec::EightPort => Ok(eight_port_matrix()),
            DeviceSpec::Matrix { unitary } => Ok(unitary.clone()),
            DeviceSpec::Plan { plan } => realize(plan),
        }
    }
}

/// A photocounting experiment repeated at several reference phase settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub device: DeviceSpec,
    pub inputs: Vec<InputSpec>,
    pub signal_mode: usize,
    pub reference_mode: usize,
    /// Phase shifts `e^{i n̂ φ}` applied to the reference, one run per entry.
    pub phase_settings: Vec<f64>,
    #[serde(default = "one")]
    pub detector_efficiency: f64,
    /// Undo detector efficiency on the sampled counts.
    #[serde(default)]
    pub correct_efficiency: bool,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<UnitaryMatrix> {
        check_eta(self.detector_efficiency)?;
        let u = self.device.build()?;
        if self.inputs.len() != u.dim() {
            return Err(Error::InvalidConfig(format!("{} input states for a {}-mode device", self.inputs.len(), u.dim())));
        }
        if self.signal_mode >= u.dim() || self.reference_mode >= u.dim() || self.signal_mode == self.reference_mode {
            return Err(Error::InvalidConfig("signal and reference need distinct modes inside the device".into()));
        }
        if self.phase_settings.is_empty() {
            return Err(Error::InvalidConfig("at least one phase setting is required".into()));
        }
        Ok(u)
    }
}

/// One sampled (or unsampled) pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub pattern: Occupation,
    pub count: u64,
    pub probability: f64,
}

/// Exact output-pattern distribution for product inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    pub probabilities: PatternProbabilities,
    /// Input norm lost to state cutoffs.
    pub truncated_mass: f64,
}

/// Forward-evolves the product of `inputs` and reads off pattern probabilities.
pub fn output_distribution(u: &UnitaryMatrix, inputs: &[FockVector]) -> Result<OutputDistribution> {
    let state = MultimodeState::product(inputs);
    let truncated_mass = 1.0 - state.norm_sqr();
    let out = evolve_multimode(u, &state, EvolutionDirection::Forward)?;
    let probabilities = out.terms().iter().map(|(k, a)| (k.clone(), a.norm_sqr())).filter(|(_, p)| *p > 0.0).collect();
    Ok(OutputDistribution { probabilities, truncated_mass })
}

/// Draws `trials` patterns by inverse CDF over the normalized distribution.
pub fn sample_patterns(dist: &PatternProbabilities, trials: u64, rng: &mut impl Rng) -> BTreeMap<Occupation, u64> {
    let mut counts = BTreeMap::new();
    if trials == 0 || dist.is_empty() {
        return counts;
    }
    let keys: Vec<&Occupation> = dist.keys().collect();
    let mut cdf = Vec::with_capacity(keys.len());
    let mut acc = 0.0;
    for p in dist.values() {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    for _ in 0..trials {
        let u: f64 = rng.random::<f64>() * total;
        let k = cdf.partition_point(|&x| x <= u).min(keys.len() - 1);
        *counts.entry(keys[k].clone()).or_insert(0) += 1;
    }
    counts
}

/// Results at one phase setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingResult {
    pub phase: f64,
    pub trials: u64,
    /// Ideal-detector distribution (normalized).
    pub ideal: PatternProbabilities,
    /// Distribution seen through the detectors (normalized).
    pub detected: PatternProbabilities,
    pub truncated_mass: f64,
    pub records: Vec<CountRecord>,
}

/// One angle of the single-shot phase histogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub theta: f64,
    /// Estimated `P(θ)` from counts (after efficiency correction if requested).
    pub density: f64,
    pub stderr: f64,
    /// Exact value the estimate should converge to.
    pub analytic: f64,
    /// Exact value for ideal detectors.
    pub ideal: f64,
    /// Canonical `P(θ)` of the signal.
    pub canonical: f64,
    pub count: u64,
    pub retained: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub settings: Vec<SettingResult>,
    pub histogram: Vec<HistogramRow>,
}

fn normalize(dist: &PatternProbabilities) -> PatternProbabilities {
    let total: f64 = dist.values().sum();
    dist.iter().map(|(k, v)| (k.clone(), v / total)).collect()
}

/// Runs every phase setting: exact distributions, detector model, sampling,
/// and the single-shot phase histogram over angles `θ_m + φ`.
///
/// Setting `k` uses the generator `ChaCha8(seed + k)` and `trials / K` runs
/// (the first `trials mod K` settings take one extra).
pub fn monte_carlo(cfg: &ExperimentConfig) -> Result<SimulationResult> {
    let u = cfg.validate()?;
    let dim = u.dim();
    let n = dim - 1;
    let base: Vec<FockVector> = cfg.inputs.iter().map(InputSpec::build).collect::<Result<_>>()?;
    let signal = base[cfg.signal_mode].clone();
    let canonical_rho = signal.normalize().to_density();
    let eta = cfg.detector_efficiency;
    let k_settings = cfg.phase_settings.len() as u64;
    let mut settings = Vec::new();
    let mut histogram = Vec::new();
    for (k, &phi) in cfg.phase_settings.iter().enumerate() {
        let mut inputs = base.clone();
        inputs[cfg.reference_mode] = inputs[cfg.reference_mode].phase_shift(phi);
        let exact = output_distribution(&u, &inputs)?;
        let ideal = normalize(&exact.probabilities);
        let detected = if eta < 1.0 {
            normalize(&joint_detector_transform(&ideal, eta, TransformDirection::IdealToCounts, usize::MAX)?)
        } else {
            ideal.clone()
        };
        let trials = cfg.trials / k_settings + u64::from((k as u64) < cfg.trials % k_settings);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(k as u64));
        let counts = sample_patterns(&detected, trials, &mut rng);
        let records = counts
            .iter()
            .map(|(p, &cnt)| CountRecord { pattern: p.clone(), count: cnt, probability: detected.get(p).copied().unwrap_or(0.0) })
            .collect();

        let patterns: Vec<Occupation> = (0..=n).map(|m| single_shot_pattern(n, m)).collect();
        let corrected = cfg.correct_efficiency && eta < 1.0;
        let analytic_src = if corrected { &ideal } else { &detected };
        let analytic = retained_normalized(analytic_src, &patterns);
        let ideal_norm = retained_normalized(&ideal, &patterns);
        let (est, se) = histogram_estimate(&counts, trials, &patterns, if corrected { Some(eta) } else { None });
        let retained: u64 = patterns.iter().map(|p| counts.get(p).copied().unwrap_or(0)).sum();
        let scale = (n + 1) as f64 / (2.0 * PI);
        for (m, pattern) in patterns.iter().enumerate() {
            let theta = (2.0 * PI * m as f64 / (n + 1) as f64 + phi).rem_euclid(2.0 * PI);
            histogram.push(HistogramRow {
                theta,
                density: est[m] * scale,
                stderr: se[m] * scale,
                analytic: analytic[m] * scale,
                ideal: ideal_norm[m] * scale,
                canonical: canonical_density(&canonical_rho, theta),
                count: counts.get(pattern).copied().unwrap_or(0),
                retained,
            });
        }
        settings.push(SettingResult { phase: phi, trials, ideal, detected, truncated_mass: exact.truncated_mass, records });
    }
    histogram.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    Ok(SimulationResult { settings, histogram })
}

fn canonical_density(rho: &DensityMatrix, theta: f64) -> f64 {
    let d = rho.dim();
    let v = FockVector::new((0..d).map(|n| Complex64::from_polar(1.0, n as f64 * theta)).collect());
    rho.expectation(&v).re / (2.0 * PI)
}

/// Probabilities of `patterns`, renormalized among themselves.
pub fn retained_normalized(dist: &PatternProbabilities, patterns: &[Occupation]) -> Vec<f64> {
    let raw: Vec<f64> = patterns.iter().map(|p| dist.get(p).copied().unwrap_or(0.0)).collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return vec![0.0; raw.len()];
    }
    raw.iter().map(|p| p / total).collect()
}

/// Renormalized retained-pattern estimates with multinomial standard errors.
///
/// Without correction each estimate is `k_m / Σ k`. With correction the
/// retained ideal probabilities are `Q_m = Σ_k w_{mk} P̂_k` from the inverse
/// Bernoulli weights, and errors follow from the multinomial covariance of
/// `P̂` through the ratio `Q_m / Σ Q`.
fn histogram_estimate(counts: &BTreeMap<Occupation, u64>, trials: u64, patterns: &[Occupation], eta: Option<f64>) -> (Vec<f64>, Vec<f64>) {
    let r = patterns.len();
    if trials == 0 {
        return (vec![0.0; r], vec![0.0; r]);
    }
    let nt = trials as f64;
    let observed: Vec<(&Occupation, f64)> = counts.iter().map(|(k, &v)| (k, v as f64 / nt)).collect();
    let weight = |m: usize, obs: &Occupation| -> f64 {
        match eta {
            None => f64::from(u8::from(obs == &patterns[m])),
            Some(e) => inverse_weights_at(&patterns[m], obs, e),
        }
    };
    let w: Vec<Vec<f64>> = (0..r).map(|m| observed.iter().map(|(o, _)| weight(m, o)).collect()).collect();
    let q: Vec<f64> = (0..r).map(|m| w[m].iter().zip(&observed).map(|(wk, (_, p))| wk * p).sum()).collect();
    let s: f64 = q.iter().sum();
    if s <= 0.0 {
        return (vec![0.0; r], vec![0.0; r]);
    }
    let est: Vec<f64> = q.iter().map(|v| v / s).collect();
    let cov = |a: usize, b: usize| -> f64 {
        let e: f64 = observed.iter().enumerate().map(|(k, (_, p))| w[a][k] * w[b][k] * p).sum();
        (e - q[a] * q[b]) / nt
    };
    let se = (0..r)
        .map(|m| {
            let g: Vec<f64> = (0..r).map(|l| (f64::from(u8::from(l == m)) - est[m]) / s).collect();
            let mut var = 0.0;
            for a in 0..r {
                for b in 0..r {
                    var += g[a] * g[b] * cov(a, b);
                }
            }
            var.max(0.0).sqrt()
        })
        .collect();
    (est, se)
}

/// Writes `pattern,count,analytic_prob` for every setting, with the phase in
/// the first column.
pub fn write_counts_csv<W: Write>(result: &SimulationResult, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["phase", "pattern", "count", "analytic_prob"])?;
    for s in &result.settings {
        let mut rows: BTreeMap<&Occupation, (u64, f64)> = s.records.iter().map(|r| (&r.pattern, (r.count, r.probability))).collect();
        for pattern in retained_patterns(s) {
            rows.entry(pattern).or_insert((0, s.detected.get(pattern).copied().unwrap_or(0.0)));
        }
        for (p, (cnt, prob)) in rows {
            wtr.write_record([format!("{:.12}", s.phase), pattern_label(p), cnt.to_string(), format!("{prob:.15e}")])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

fn retained_patterns(s: &SettingResult) -> Vec<&Occupation> {
    s.detected.keys().filter(|k| k.iter().filter(|&&v| v == 0).count() == 1 && k.iter().all(|&v| v <= 1)).collect()
}

/// `n0-n1-…` label used in CSV files.
pub fn pattern_label(p: &[usize]) -> String {
    p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("-")
}

pub fn parse_pattern_label(s: &str) -> Result<Occupation> {
    s.split('-').map(|v| v.trim().parse::<usize>().map_err(|_| Error::InvalidPattern(format!("bad pattern label `{s}`")))).collect()
}

/// Writes `theta_bin,density,stderr,analytic,ideal,canonical,count,retained`.
pub fn write_histogram_csv<W: Write>(result: &SimulationResult, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["theta_bin", "density", "stderr", "analytic", "ideal", "canonical", "count", "retained"])?;
    for h in &result.histogram {
        wtr.write_record([
            format!("{:.12}", h.theta),
            format!("{:.10e}", h.density),
            format!("{:.10e}", h.stderr),
            format!("{:.10e}", h.analytic),
            format!("{:.10e}", h.ideal),
            format!("{:.10e}", h.canonical),
            h.count.to_string(),
            h.retained.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Normalized retained probabilities for the `N = 3` single-shot scheme with
/// a binomial reference, ideal versus seen through detectors of efficiency
/// `eta`; returns the largest absolute difference.
pub fn efficiency_error(signal: &FockVector, eta: f64, reference_phase: f64) -> Result<f64> {
    let n = 3;
    let reference = binomial_state(n, n, true)?.phase_shift(reference_phase);
    let inputs = vec![signal.clone(), reference, FockVector::number(0, 0), FockVector::number(0, 0)];
    let ideal = normalize(&output_distribution(&eight_port_matrix(), &inputs)?.probabilities);
    let seen = joint_detector_transform(&ideal, eta, TransformDirection::IdealToCounts, usize::MAX)?;
    let patterns: Vec<Occupation> = (0..=n).map(|m| single_shot_pattern(n, m)).collect();
    let a = retained_normalized(&ideal, &patterns);
    let b = retained_normalized(&seen, &patterns);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------
// Presets

/// Squeezed approximation to the degree-3 binomial reference, phase-shifted
/// by π so that single-shot outcome `m` sits at `θ_m`.
pub fn squeezed_reference_spec() -> InputSpec {
    InputSpec::Squeezed { alpha: [(2.0 + 2f64.sqrt()) / 3.0, 0.0], t: [0.5, 0.0], cutoff: 12, phase: PI }
}

/// Weak coherent signal (`n̄ = 0.076`) measured with the squeezed reference at
/// sixteen angles (four outcomes times four reference shifts `kπ/8`).
pub fn fig5_3_config() -> ExperimentConfig {
    ExperimentConfig {
        device: DeviceSpec::EightPort,
        inputs: vec![
            InputSpec::Coherent { re: 0.076f64.sqrt(), im: 0.0, cutoff: 4 },
            squeezed_reference_spec(),
            InputSpec::Vacuum,
            InputSpec::Vacuum,
        ],
        signal_mode: 0,
        reference_mode: 1,
        phase_settings: (0..4).map(|k| k as f64 * PI / 8.0).collect(),
        detector_efficiency: 1.0,
        correct_efficiency: false,
        trials: 1_000_000,
        seed: 0,
    }
}

/// As [`fig5_3_config`] with detectors of efficiency 0.6, uncorrected.
pub fn fig5_5_config() -> ExperimentConfig {
    ExperimentConfig { detector_efficiency: 0.6, ..fig5_3_config() }
}
