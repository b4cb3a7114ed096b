//! Estimators driven by recorded measurement tables, with standard errors.
//!
//! Rows either carry exact probabilities (zero error) or `count` out of
//! `trials`. Rows sharing a phase setting and trial count are treated as one
//! multinomial run, so the variance of a linear estimate `Σ c_r P̂_r` is
//! `[Σ c_r² P_r − (Σ c_r P_r)²]/T` per run.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    element_scaling, parse_pattern_label, pattern_label, phase_settings, scan, ElementMode, PhaseScan, SETTING_NAMES,
};
use crate::fock::{DensityMatrix, Occupation};
use crate::phase::{reconstruct_distribution, PhaseDistribution};

/// Probability of one projection in a phase-reconstruction run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub gamma: f64,
    #[serde(default)]
    pub probability: Option<f64>,
    #[serde(default)]
    pub count: Option<u64>,
    #[serde(default)]
    pub trials: Option<u64>,
}

impl ProjectionRecord {
    fn estimate(&self) -> Result<(f64, f64)> {
        observed(self.probability, self.count, self.trials)
    }
}

/// `(P̂, T)`, with `T = ∞` for exact rows.
fn observed(probability: Option<f64>, count: Option<u64>, trials: Option<u64>) -> Result<(f64, f64)> {
    match (count, trials, probability) {
        (Some(k), Some(t), _) if t > 0 => Ok((k as f64 / t as f64, t as f64)),
        (_, _, Some(p)) => Ok((p, f64::INFINITY)),
        _ => Err(Error::InvalidSamples("each row needs `probability` or `count` with positive `trials`".into())),
    }
}

/// Reconstructed `P(θ)` with a standard error at every grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedPhase {
    pub distribution: PhaseDistribution,
    pub stderr: Vec<f64>,
}

/// Rebuilds `P(θ)` from `2N+2` projection records sorted by angle.
pub fn reconstruct_from_records(records: &[ProjectionRecord], grid_size: usize) -> Result<ReconstructedPhase> {
    if records.len() < 2 || !records.len().is_multiple_of(2) {
        return Err(Error::InvalidSamples(format!("{} rows; need 2N+2", records.len())));
    }
    let n = records.len() / 2 - 1;
    let mut rows: Vec<(f64, f64, f64)> = records.iter().map(|r| r.estimate().map(|(p, t)| (r.gamma, p, t))).collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let samples: Vec<(f64, f64)> = rows.iter().map(|(g, p, _)| (*g, *p)).collect();
    let distribution = reconstruct_distribution(&samples, n, grid_size)?;
    // P(θ) = Σ_m K(θ − γ_m) Pr_m with K(x) = (1/4π) Σ_{|q|≤N} e^{iqx}; settings are independent runs.
    let kernel = |x: f64| (1.0 + 2.0 * (1..=n).map(|q| (q as f64 * x).cos()).sum::<f64>()) / (4.0 * PI);
    let stderr = distribution
        .grid
        .iter()
        .map(|&theta| {
            rows.iter().map(|(g, p, t)| if t.is_finite() { kernel(theta - g).powi(2) * p * (1.0 - p) / t } else { 0.0 }).sum::<f64>().sqrt()
        })
        .collect();
    Ok(ReconstructedPhase { distribution, stderr })
}

/// Exact projection records `|⟨θ_0 + γ_m|ψ⟩|²` for a state within cutoff `n`.
pub fn exact_projection_records(rho: &DensityMatrix, n: usize) -> Vec<ProjectionRecord> {
    crate::phase::sample_projections(rho, n)
        .into_iter()
        .map(|(gamma, p)| ProjectionRecord { gamma, probability: Some(p), count: None, trials: None })
        .collect()
}

/// One pattern probability at one phase setting of an element scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub lambda: usize,
    pub n: usize,
    pub phase: f64,
    /// Detector counts as `n0-n1[-n2]`.
    pub pattern: String,
    #[serde(default)]
    pub probability: Option<f64>,
    #[serde(default)]
    pub count: Option<u64>,
    #[serde(default)]
    pub trials: Option<u64>,
}

/// Reference coherence `ϱ_{λ,0}` of the double beam-splitter scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceCoherence {
    Value {
        re: f64,
        im: f64,
    },
    /// Phase-averaged coherent reference of amplitude `|α|`:
    /// `ϱ_{λ,0} = e^{−|α|²} |α|^λ / √λ!`.
    MixedCoherent {
        alpha_mag: f64,
    },
}

impl ReferenceCoherence {
    pub fn for_lambda(&self, lambda: usize) -> Complex64 {
        match *self {
            ReferenceCoherence::Value { re, im } => Complex64::new(re, im),
            ReferenceCoherence::MixedCoherent { alpha_mag } => {
                let ln = -alpha_mag * alpha_mag + lambda as f64 * alpha_mag.ln() - 0.5 * crate::fock::ln_factorial(lambda);
                Complex64::new(ln.exp(), 0.0)
            }
        }
    }
}

/// Scheme parameters for [`estimate_elements`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementAnalysis {
    pub mode: ElementMode,
    /// Unused by the single beam-splitter scheme.
    pub reference: ReferenceCoherence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementEstimate {
    pub n: usize,
    pub lambda: usize,
    pub value: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub lambda: usize,
    pub cos_mean: f64,
    pub sin_mean: f64,
    pub cos_stderr: f64,
    pub sin_stderr: f64,
}

/// Pattern weight for `(N, λ)` under `mode`, or `None` if the row does not
/// contribute.
fn pattern_weight(mode: ElementMode, n: usize, lambda: usize, pattern: &[usize]) -> Option<f64> {
    match (mode, pattern) {
        (ElementMode::DoubleBs { n0, .. }, &[a, b, c]) if b == n && a + c == lambda => match n0 {
            Some(k) if k == a => Some(1.0),
            Some(_) => None,
            None => Some(if a % 2 == 0 { 1.0 } else { -1.0 }),
        },
        (ElementMode::SteuernagelVaccaro { n0 }, &[a, b]) if a == n0 && a + b == n + lambda => Some(1.0),
        _ => None,
    }
}

/// Row index and weight of each record, keyed by `(N, λ)`.
type Coefficients = BTreeMap<(usize, usize), Vec<(usize, Complex64)>>;

/// Linear coefficients `c_r` with `ρ̂_{N,N+λ} = Σ_r c_r P̂_r`, per `N`.
fn element_coefficients(records: &[ScanRecord], cfg: &ElementAnalysis) -> Result<Coefficients> {
    let parsed: Vec<Occupation> = records.iter().map(|r| parse_pattern_label(&r.pattern)).collect::<Result<_>>()?;
    let mut keys: Vec<(usize, usize)> = records.iter().map(|r| (r.n, r.lambda)).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut out = BTreeMap::new();
    for (n, lambda) in keys {
        if lambda == 0 {
            return Err(Error::InvalidSamples("λ must be at least 1".into()));
        }
        let settings = phase_settings(lambda);
        let scale = element_scaling(cfg.mode, n, lambda, cfg.reference.for_lambda(lambda));
        if scale.norm() < 1e-300 {
            return Err(Error::ZeroScaling);
        }
        // (P0 − P1) − i(P½ − P3/2), all over 4c
        let setting_weight = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0)];
        let mut seen = [false; 4];
        let mut coeffs = Vec::new();
        for (idx, r) in records.iter().enumerate() {
            if r.n != n || r.lambda != lambda {
                continue;
            }
            let Some(j) = settings.iter().position(|s| (s - r.phase).abs() < 1e-9) else { continue };
            if let Some(w) = pattern_weight(cfg.mode, n, lambda, &parsed[idx]) {
                seen[j] = true;
                coeffs.push((idx, setting_weight[j] * w / (4.0 * scale)));
            }
        }
        let missing: Vec<String> = (0..4).filter(|&j| !seen[j]).map(|j| SETTING_NAMES[j].to_string()).collect();
        if !missing.is_empty() {
            return Err(Error::MissingPhaseSettings(missing));
        }
        out.insert((n, lambda), coeffs);
    }
    Ok(out)
}

/// Standard error of `Σ c_r P̂_r` for real coefficients.
fn linear_stderr(records: &[ScanRecord], coeffs: &[(usize, f64)]) -> Result<f64> {
    let mut groups: BTreeMap<(u64, u64), (f64, f64, f64)> = BTreeMap::new();
    for &(idx, c) in coeffs {
        let r = &records[idx];
        let (p, t) = observed(r.probability, r.count, r.trials)?;
        if !t.is_finite() {
            continue;
        }
        let e = groups.entry((r.phase.to_bits(), t as u64)).or_insert((0.0, 0.0, t));
        e.0 += c * c * p;
        e.1 += c * p;
    }
    Ok(groups.values().map(|(sq, lin, t)| (sq - lin * lin) / t).sum::<f64>().max(0.0).sqrt())
}

fn combine(records: &[ScanRecord], coeffs: &[(usize, Complex64)]) -> Result<(Complex64, f64, f64)> {
    let mut value = Complex64::new(0.0, 0.0);
    for &(idx, c) in coeffs {
        let r = &records[idx];
        value += c * observed(r.probability, r.count, r.trials)?.0;
    }
    let re: Vec<(usize, f64)> = coeffs.iter().map(|&(i, c)| (i, c.re)).collect();
    let im: Vec<(usize, f64)> = coeffs.iter().map(|&(i, c)| (i, c.im)).collect();
    Ok((value, linear_stderr(records, &re)?, linear_stderr(records, &im)?))
}

/// `ρ_{N,N+λ}` for every `(N, λ)` present in the table.
pub fn estimate_elements(records: &[ScanRecord], cfg: &ElementAnalysis) -> Result<Vec<ElementEstimate>> {
    element_coefficients(records, cfg)?
        .into_iter()
        .map(|((n, lambda), coeffs)| {
            let (value, stderr_re, stderr_im) = combine(records, &coeffs)?;
            Ok(ElementEstimate { n, lambda, value, stderr_re, stderr_im })
        })
        .collect()
}

/// `⟨cos λθ⟩ = Re Σ_N ρ_{N,N+λ}` and `⟨sin λθ⟩ = −Im Σ_N ρ_{N,N+λ}` for every
/// `λ` in the table.
pub fn estimate_moments(records: &[ScanRecord], cfg: &ElementAnalysis) -> Result<Vec<MomentEstimate>> {
    let mut by_lambda: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
    for ((_, lambda), coeffs) in element_coefficients(records, cfg)? {
        by_lambda.entry(lambda).or_default().extend(coeffs);
    }
    by_lambda
        .into_iter()
        .map(|(lambda, coeffs)| {
            let (v, se_re, se_im) = combine(records, &coeffs)?;
            Ok(MomentEstimate { lambda, cos_mean: v.re, sin_mean: -v.im, cos_stderr: se_re, sin_stderr: se_im })
        })
        .collect()
}

/// Exact scan rows for `N = 0..=n_max` at order `λ`, covering every pattern
/// the estimator for `mode` reads.
pub fn exact_scan_records(
    rho: &DensityMatrix,
    reference: &DensityMatrix,
    mode: ElementMode,
    lambda: usize,
    n_max: usize,
) -> Result<Vec<ScanRecord>> {
    let mut rows = Vec::new();
    for n in 0..=n_max {
        let patterns: Vec<(ElementMode, Occupation)> = match mode {
            ElementMode::DoubleBs { bs1_theta, n0: Some(k) } => {
                vec![(ElementMode::DoubleBs { bs1_theta, n0: Some(k) }, vec![k, n, lambda - k])]
            }
            ElementMode::DoubleBs { bs1_theta, n0: None } => {
                (0..=lambda).map(|k| (ElementMode::DoubleBs { bs1_theta, n0: Some(k) }, vec![k, n, lambda - k])).collect()
            }
            ElementMode::SteuernagelVaccaro { n0 } => vec![(mode, vec![n0, n + lambda - n0])],
        };
        for (single, pattern) in patterns {
            let PhaseScan { entries, .. } = scan(rho, reference, single, n, lambda)?;
            for (phase, p) in entries {
                rows.push(ScanRecord {
                    lambda,
                    n,
                    phase,
                    pattern: pattern_label(&pattern),
                    probability: Some(p),
                    count: None,
                    trials: None,
                });
            }
        }
    }
    Ok(rows)
}

pub fn read_csv<T: for<'de> Deserialize<'de>, R: Read>(r: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(r).deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// `theta,density,stderr`.
pub fn write_reconstruction_csv<W: Write>(rec: &ReconstructedPhase, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["theta", "density", "stderr"])?;
    for ((t, p), s) in rec.distribution.grid.iter().zip(&rec.distribution.density).zip(&rec.stderr) {
        wtr.write_record([format!("{t:.12}"), format!("{p:.15e}"), format!("{s:.6e}")])?;
    }
    wtr.flush()?;
    Ok(())
}
