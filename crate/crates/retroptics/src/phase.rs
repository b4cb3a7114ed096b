//! Canonical phase: distributions, moments, truncated phase states, Fourier
//! reconstruction from sampled projections, and the single-shot phase
//! measurement built from a DFT multiport.
//!
//! Phase states are `|θ⟩ = (2π)^{-1/2} Σ e^{inθ}|n⟩`, so
//! `P(θ) = (1/2π) Σ_q α_q e^{iqθ}` with `α_q = Σ_n ρ_{n,n+q} = ⟨e^{−iqθ}⟩`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockVector};
use crate::multiport::{dft_matrix, retrodictive_state, UnitaryMatrix};

/// Default number of grid points on `[0, 2π)`.
pub const DEFAULT_GRID: usize = 512;

/// `P(θ)` on a uniform grid over `[0, 2π)` with its Fourier coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDistribution {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// `α_q` for `q = 0, 1, …`; negative orders are `α_{−q} = α_q*`.
    pub fourier: Vec<Complex64>,
}

impl PhaseDistribution {
    fn from_fourier(fourier: Vec<Complex64>, grid_size: usize) -> Self {
        let grid: Vec<f64> = (0..grid_size).map(|k| 2.0 * PI * k as f64 / grid_size as f64).collect();
        let density = grid.iter().map(|&t| density_at(&fourier, t)).collect();
        Self { grid, density, fourier }
    }

    /// `α_q` for any integer order; zero beyond the stored range.
    pub fn alpha(&self, q: i64) -> Complex64 {
        let a = self.fourier.get(q.unsigned_abs() as usize).copied().unwrap_or_default();
        if q < 0 {
            a.conj()
        } else {
            a
        }
    }

    /// `P(θ)` at an arbitrary angle, from the Fourier series.
    pub fn density_at(&self, theta: f64) -> f64 {
        density_at(&self.fourier, theta)
    }

    /// Trapezoidal integral over the periodic grid.
    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * 2.0 * PI / self.grid.len() as f64
    }

    /// CSV with columns `theta,density`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["theta", "density"])?;
        for (t, p) in self.grid.iter().zip(&self.density) {
            wtr.write_record([format!("{t:.12}"), format!("{p:.15e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn density_at(fourier: &[Complex64], theta: f64) -> f64 {
    let mut p = fourier.first().map(|a| a.re).unwrap_or(0.0);
    for (q, a) in fourier.iter().enumerate().skip(1) {
        p += 2.0 * (a * Complex64::from_polar(1.0, q as f64 * theta)).re;
    }
    p / (2.0 * PI)
}

/// `α_q = Σ_n ρ_{n,n+q}` for `q = 0..=q_max`.
pub fn exponential_moments(rho: &DensityMatrix, q_max: usize) -> Vec<Complex64> {
    let d = rho.dim();
    (0..=q_max).map(|q| (0..d.saturating_sub(q)).map(|n| rho.get(n, n + q)).sum()).collect()
}

/// `P(θ) = ⟨θ|ρ|θ⟩` on `grid_size` points.
pub fn phase_distribution(rho: &DensityMatrix, grid_size: usize) -> PhaseDistribution {
    PhaseDistribution::from_fourier(exponential_moments(rho, rho.cutoff()), grid_size)
}

/// `(N+1)^{−1/2} Σ_n e^{in(θ_m + offset)} |n⟩`, `θ_m = 2πm/(N+1)`.
pub fn truncated_phase_state(n: usize, m: usize, offset: f64) -> FockVector {
    let theta = 2.0 * PI * m as f64 / (n + 1) as f64 + offset;
    let norm = 1.0 / ((n + 1) as f64).sqrt();
    FockVector::new((0..=n).map(|k| Complex64::from_polar(norm, k as f64 * theta)).collect())
}

/// Means and variances of `cos λθ` and `sin λθ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigMoments {
    pub cos_mean: f64,
    pub sin_mean: f64,
    pub cos_var: f64,
    pub sin_var: f64,
}

/// `⟨cos λθ⟩ = Re α_λ`, `⟨sin λθ⟩ = −Im α_λ`, with variances from
/// `⟨cos² λθ⟩ = ½[1 + ⟨cos 2λθ⟩]` and `⟨sin² λθ⟩ = ½[1 − ⟨cos 2λθ⟩]`.
pub fn trig_moments(rho: &DensityMatrix, lambda: usize) -> TrigMoments {
    let alphas = exponential_moments(rho, 2 * lambda);
    let tr = alphas[0].re;
    let (a1, a2) = (alphas[lambda] / tr, alphas[2 * lambda].re / tr);
    TrigMoments { cos_mean: a1.re, sin_mean: -a1.im, cos_var: 0.5 * (1.0 + a2) - a1.re * a1.re, sin_var: 0.5 * (1.0 - a2) - a1.im * a1.im }
}

/// Sample angles `γ_m = 2πm/(2N+2)`, `m = 0..2N+2`.
pub fn sample_angles(n: usize) -> Vec<f64> {
    (0..2 * n + 2).map(|m| 2.0 * PI * m as f64 / (2 * n + 2) as f64).collect()
}

/// Projection probabilities `|⟨θ_0 + γ_m|ψ⟩|²` onto the truncated phase
/// state shifted to each sample angle, i.e. `2π P(γ_m)/(N+1)` for states
/// within the cutoff `N`.
pub fn sample_projections(rho: &DensityMatrix, n: usize) -> Vec<(f64, f64)> {
    sample_angles(n).into_iter().map(|g| (g, rho.expectation(&truncated_phase_state(n, 0, g)).re)).collect()
}

/// Rebuilds `P(θ)` from the `2N+2` projection probabilities:
/// `α_q = ½ Σ_m e^{−iqγ_m} Pr(γ_m)` for `|q| ≤ N`.
pub fn reconstruct_distribution(samples: &[(f64, f64)], n: usize, grid_size: usize) -> Result<PhaseDistribution> {
    let expected = sample_angles(n);
    if samples.len() != expected.len() {
        return Err(Error::InvalidSamples(format!("{} samples, need 2N+2 = {}", samples.len(), expected.len())));
    }
    for (k, ((g, _), e)) in samples.iter().zip(&expected).enumerate() {
        if (g - e).abs() > 1e-9 {
            return Err(Error::InvalidSamples(format!("sample {k} at angle {g}, expected {e}")));
        }
    }
    let fourier =
        (0..=n).map(|q| 0.5 * samples.iter().map(|(g, p)| Complex64::from_polar(*p, -(q as f64) * g)).sum::<Complex64>()).collect();
    Ok(PhaseDistribution::from_fourier(fourier, grid_size))
}

/// Detection pattern for single-shot outcome `m`: no photon in output `m`,
/// one in every other output.
pub fn single_shot_pattern(n: usize, m: usize) -> Vec<usize> {
    (0..=n).map(|k| usize::from(k != m)).collect()
}

/// Unnormalized measurement operators for the `N+1` single-shot outcomes.
///
/// The signal enters input 0 and the reference input 1 of the DFT multiport;
/// inputs `2..=N` are vacuum. Only reference coefficients `b_0 … b_N` matter.
/// With the alternating-sign binomial reference of degree `N`,
/// `b_n ∝ (−1)ⁿ C(N,n)^{1/2}`, outcome `m` projects onto `|θ_m⟩`
/// (see [`truncated_phase_state`]) up to a common factor. The all-positive
/// binomial state is the same reference phase-shifted by π.
pub fn single_shot_pom(n: usize, reference: &FockVector, u: &UnitaryMatrix) -> Result<Vec<DensityMatrix>> {
    if n == 0 {
        return Err(Error::InvalidConfig("single-shot measurement needs N ≥ 1".into()));
    }
    if u.dim() != n + 1 || u.distance_up_to_phase(&dft_matrix(n + 1)) > 1e-9 {
        return Err(Error::NotDft);
    }
    let mut inputs = vec![(1, reference.with_cutoff(n))];
    inputs.extend((2..=n).map(|k| (k, FockVector::number(0, 0))));
    (0..=n).map(|m| retrodictive_state(u, &single_shot_pattern(n, m), 0, &inputs).map(|s| s.to_density())).collect()
}

/// Outcome probabilities of the single-shot scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleShotProbabilities {
    /// Joint probability of each retained pattern.
    pub raw: Vec<f64>,
    /// Renormalized over the retained patterns.
    pub normalized: Vec<f64>,
    /// Fraction of runs ending in any other pattern.
    pub discarded: f64,
}

/// `Pr(m) = Tr[ρ Γ_m]`, renormalized over the retained outcomes.
pub fn single_shot_probabilities(rho: &DensityMatrix, pom: &[DensityMatrix]) -> Result<SingleShotProbabilities> {
    let raw: Vec<f64> = pom.iter().map(|g| rho.overlap(g).re / rho.trace().re).collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbabilityCondition);
    }
    Ok(SingleShotProbabilities { normalized: raw.iter().map(|p| p / total).collect(), discarded: 1.0 - total, raw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{binomial_state, coherent_state};

    #[test]
    fn number_states_are_phase_uniform() {
        for n in 0..4 {
            let d = phase_distribution(&FockVector::number(n, 4).to_density(), 64);
            assert!(d.density.iter().all(|p| (p - 1.0 / (2.0 * PI)).abs() < 1e-14));
        }
    }

    #[test]
    fn truncated_states_for_three_photons() {
        let t0 = truncated_phase_state(3, 0, 0.0);
        assert!(t0.amps().iter().all(|a| (a - Complex64::new(0.5, 0.0)).norm() < 1e-15));
        let t1 = truncated_phase_state(3, 1, 0.0);
        let want = [(0.5, 0.0), (0.0, 0.5), (-0.5, 0.0), (0.0, -0.5)];
        for (a, (re, im)) in t1.amps().iter().zip(want) {
            assert!((a - Complex64::new(re, im)).norm() < 1e-15);
        }
    }

    #[test]
    fn coherent_distribution_normalized() {
        let rho = coherent_state(Complex64::new(0.5f64.sqrt(), 0.0), 30).to_density();
        let d = phase_distribution(&rho, DEFAULT_GRID);
        assert!((d.integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn binomial_reference_projects_onto_phase_states() {
        let n = 3;
        let pom = single_shot_pom(n, &binomial_state(n, n, true).unwrap(), &dft_matrix(n + 1)).unwrap();
        for (m, g) in pom.iter().enumerate() {
            let f = g.normalize().expectation(&truncated_phase_state(n, m, 0.0)).re;
            assert!((f - 1.0).abs() < 1e-10, "outcome {m} fidelity {f}");
        }
    }
}
