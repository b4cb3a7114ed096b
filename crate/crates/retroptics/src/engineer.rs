//! Retrodictive state engineering with a multiport, coherent references and
//! photon counting.
//!
//! A target `|ψ⟩ = Σ ψ_n |n⟩` of photon degree `N` factors as
//! `κ Π_i (â† − β_i*) |0⟩`, where `β_i*` are the roots of
//! `Σ ψ_n xⁿ/√n!`. Counting `n_i` photons in output `i` of a multiport `U`
//! fed with coherent states `|α_j⟩` in inputs `j ≥ 1` leaves input 0 with the
//! retrodictive state `κ̄ Π_i (â† − β_i*)^{n_i} |0⟩`, where
//! `β_i = −Σ_j U_{ij} α_j / U_{i0}` and `Σ_i |U_{i0}|² β_i = 0`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{factorial, ln_factorial, FockVector};
use crate::multiport::UnitaryMatrix;

const ROOT_RESIDUAL: f64 = 1e-8;
const COLUMN_ZERO: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Photocounts `n_0 … n_N`, one per multiport output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DetectionPattern {
    counts: Vec<usize>,
}

impl DetectionPattern {
    pub fn new(counts: Vec<usize>) -> Self {
        Self { counts }
    }

    /// `(0, 1, …, 1)` over `dim` outputs.
    pub fn canonical(dim: usize) -> Self {
        Self { counts: (0..dim).map(|i| usize::from(i > 0)).collect() }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn modes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Full design record for one target, multiport and pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineeredTarget {
    pub psi: FockVector,
    /// One value per output mode; `betas[0]` is fixed by the first-column constraint.
    pub betas: Vec<Complex64>,
    /// One value per input mode; `alphas[0]` is always zero.
    pub alphas: Vec<Complex64>,
    pub kappa_bar: Complex64,
    pub efficiency: f64,
    pub pattern: DetectionPattern,
}

/// Coefficients of `Σ ψ_n xⁿ/√n!`, lowest order first.
fn characteristic_coefficients(psi: &FockVector) -> Vec<Complex64> {
    psi.amps().iter().enumerate().map(|(n, a)| a / factorial(n).sqrt()).collect()
}

fn eval_poly(coef: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = c(0.0, 0.0);
    let mut dp = c(0.0, 0.0);
    for &a in coef.iter().rev() {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// Roots `β_i` of the target, i.e. the conjugates of the zeros of
/// `Σ ψ_n xⁿ/√n!`, with multiplicity.
///
/// Zeros come from the companion-matrix eigenvalues followed by a Newton
/// polish, and each one is accepted on its substitution residual
/// (below 1e-8 for the normalized target). Roots are ordered by argument in
/// `[0, 2π)`, then by magnitude.
pub fn characteristic_roots(psi: &FockVector) -> Result<Vec<Complex64>> {
    let norm = psi.norm_sqr().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroTarget);
    }
    let degree = psi.degree(1e-14 * norm).ok_or(Error::ZeroTarget)?;
    if degree == 0 {
        return Err(Error::ZeroPhotonTarget);
    }
    let coef: Vec<Complex64> = characteristic_coefficients(&psi.scale(c(1.0 / norm, 0.0)))[..=degree].to_vec();
    let lead = coef[degree];
    let monic: Vec<Complex64> = coef.iter().map(|a| a / lead).collect();
    let mut comp = DMatrix::<Complex64>::zeros(degree, degree);
    for i in 1..degree {
        comp[(i, i - 1)] = c(1.0, 0.0);
    }
    for i in 0..degree {
        comp[(i, degree - 1)] = -monic[i];
    }
    let eig = nalgebra::Schur::try_new(comp, 1e-15, 10_000)
        .and_then(|s| s.eigenvalues())
        .ok_or_else(|| Error::Internal("companion eigenvalue iteration did not converge".into()))?;
    let mut roots = Vec::with_capacity(degree);
    for mut x in eig.iter().copied() {
        for _ in 0..8 {
            let (p, dp) = eval_poly(&monic, x);
            if dp.norm() < 1e-300 || p.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            let nx = x - step;
            if eval_poly(&monic, nx).0.norm() >= p.norm() {
                break;
            }
            x = nx;
        }
        let (res, _) = eval_poly(&coef, x);
        let scale: f64 = coef.iter().enumerate().map(|(k, a)| a.norm() * x.norm().powi(k as i32)).sum();
        if res.norm() > ROOT_RESIDUAL && res.norm() > 1e-12 * scale {
            return Err(Error::Internal(format!("root {x} has substitution residual {:.3e}", res.norm())));
        }
        roots.push(x.conj());
    }
    roots.sort_by(|a, b| root_key(*a).partial_cmp(&root_key(*b)).unwrap_or(std::cmp::Ordering::Equal));
    Ok(roots)
}

fn root_key(z: Complex64) -> (f64, f64) {
    let mut arg = if z.norm() < 1e-14 { 0.0 } else { z.arg().rem_euclid(2.0 * PI) };
    if arg > 2.0 * PI - 1e-9 {
        arg = 0.0;
    }
    ((arg * 1e9).round() / 1e9, z.norm())
}

/// Coefficients (lowest order first) of `Π (x − β_i*)^{m_i}`.
fn factored_polynomial(factors: &[(Complex64, usize)]) -> Vec<Complex64> {
    let mut poly = vec![c(1.0, 0.0)];
    for &(beta, m) in factors {
        for _ in 0..m {
            let mut next = vec![c(0.0, 0.0); poly.len() + 1];
            for (k, &a) in poly.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * beta.conj();
            }
            poly = next;
        }
    }
    poly
}

fn polynomial_to_amps(poly: &[Complex64], cutoff: usize) -> FockVector {
    FockVector::new((0..=cutoff).map(|n| poly.get(n).copied().unwrap_or_default() * factorial(n).sqrt()).collect())
}

/// `‖Π (â† − β_i*)^{m_i} |0⟩‖²`.
fn factored_norm_sqr(factors: &[(Complex64, usize)]) -> f64 {
    let poly = factored_polynomial(factors);
    polynomial_to_amps(&poly, poly.len() - 1).norm_sqr()
}

fn first_column(u: &UnitaryMatrix) -> Vec<Complex64> {
    (0..u.dim()).map(|i| u.get(i, 0)).collect()
}

/// Solves the constraint `Σ_i |U_{i0}|² β_i = 0` for `β_0` and inverts
/// `β_i = −Σ_j U_{ij} α_j / U_{i0}` to `α_j = −Σ_i U*_{ij} U_{i0} β_i`.
///
/// `betas` holds `β_1 … β_N`. Returns `(alphas, β_0)` with `alphas` indexed by
/// input mode, `alphas[0] = 0`.
pub fn amplitudes_from_roots(betas: &[Complex64], u: &UnitaryMatrix) -> Result<(Vec<Complex64>, Complex64)> {
    let d = u.dim();
    if betas.len() + 1 != d {
        return Err(Error::DimensionMismatch(format!("{} roots for a {d}-mode multiport", betas.len())));
    }
    let col = first_column(u);
    if let Some((row, z)) = col.iter().enumerate().find(|(_, z)| z.norm() < COLUMN_ZERO) {
        return Err(Error::Unreachable { row, magnitude: z.norm() });
    }
    let s: Complex64 = betas.iter().enumerate().map(|(k, b)| col[k + 1].norm_sqr() * b).sum();
    let beta0 = -s / col[0].norm_sqr();
    let mut full = Vec::with_capacity(d);
    full.push(beta0);
    full.extend_from_slice(betas);
    let alphas = alphas_for_betas(&full, u)?;
    Ok((alphas, beta0))
}

/// `α_j = −Σ_i U*_{ij} U_{i0} β_i` for a full per-mode `β` list. Fails if the
/// implied `α_0` is not zero, i.e. the constraint on `β` is violated.
fn alphas_for_betas(betas: &[Complex64], u: &UnitaryMatrix) -> Result<Vec<Complex64>> {
    let d = u.dim();
    let mut alphas: Vec<Complex64> =
        (0..d).map(|j| -(0..d).map(|i| u.get(i, j).conj() * u.get(i, 0) * betas[i]).sum::<Complex64>()).collect();
    let scale = betas.iter().map(|b| b.norm()).fold(1.0, f64::max);
    if alphas[0].norm() > 1e-10 * scale {
        return Err(Error::InvalidPattern(format!("roots violate Σ|U_i0|²β_i = 0 (residual {:.3e})", alphas[0].norm())));
    }
    alphas[0] = c(0.0, 0.0);
    Ok(alphas)
}

/// `β_i = −Σ_{j≥1} U_{ij} α_j / U_{i0}`.
pub fn betas_from_amplitudes(alphas: &[Complex64], u: &UnitaryMatrix) -> Result<Vec<Complex64>> {
    let d = u.dim();
    if alphas.len() != d {
        return Err(Error::DimensionMismatch(format!("{} amplitudes for a {d}-mode multiport", alphas.len())));
    }
    (0..d)
        .map(|i| {
            let u0 = u.get(i, 0);
            if u0.norm() < COLUMN_ZERO {
                return Err(Error::Unreachable { row: i, magnitude: u0.norm() });
            }
            Ok(-(1..d).map(|j| u.get(i, j) * alphas[j]).sum::<Complex64>() / u0)
        })
        .collect()
}

fn check_pattern(pattern: &DetectionPattern, dim: usize) -> Result<()> {
    if pattern.modes() != dim {
        return Err(Error::InvalidPattern(format!("{} counts for a {dim}-mode multiport", pattern.modes())));
    }
    Ok(())
}

/// `κ̄ = e^{−Σ_j |α_j|²/2} Π_i (U*_{i0})^{n_i}/√(n_i!)` and
/// `P_ψ = |κ̄|² ‖Π (â† − β_i*)^{n_i}|0⟩‖²`, the probability of the pattern
/// relative to the signal's overlap with the normalized target.
///
/// `betas` is indexed by output mode and must satisfy the first-column
/// constraint.
pub fn kappa_and_efficiency(betas: &[Complex64], u: &UnitaryMatrix, pattern: &DetectionPattern) -> Result<(Complex64, f64)> {
    let d = u.dim();
    check_pattern(pattern, d)?;
    if betas.len() != d {
        return Err(Error::DimensionMismatch(format!("{} roots for a {d}-mode multiport", betas.len())));
    }
    let alphas = alphas_for_betas(betas, u)?;
    let alpha_sq: f64 = alphas.iter().map(|a| a.norm_sqr()).sum();
    let mut kappa = c((-alpha_sq / 2.0).exp(), 0.0);
    for (i, &n) in pattern.counts().iter().enumerate() {
        kappa *= u.get(i, 0).conj().powu(n as u32) / factorial(n).sqrt();
    }
    let factors: Vec<(Complex64, usize)> = betas.iter().copied().zip(pattern.counts().iter().copied()).collect();
    Ok((kappa, kappa.norm_sqr() * factored_norm_sqr(&factors)))
}

/// Unnormalized retrodictive state of input 0,
/// `e^{−Σ|α_j|²/2} Π_i (U*_{i0} â† + Σ_{j≥1} U*_{ij} α_j*)^{n_i} |0⟩ / √(n_i!)`,
/// which equals `κ̄ Π_i (â† − β_i*)^{n_i}|0⟩` whenever every `U_{i0}` is nonzero.
pub fn engineered_state(u: &UnitaryMatrix, alphas: &[Complex64], pattern: &DetectionPattern, cutoff: usize) -> Result<FockVector> {
    let d = u.dim();
    check_pattern(pattern, d)?;
    if alphas.len() != d {
        return Err(Error::DimensionMismatch(format!("{} amplitudes for a {d}-mode multiport", alphas.len())));
    }
    if cutoff < pattern.total() {
        return Err(Error::InvalidConfig(format!("cutoff {cutoff} below detected photon total {}", pattern.total())));
    }
    let alpha_sq: f64 = alphas[1..].iter().map(|a| a.norm_sqr()).sum();
    let mut poly = vec![c((-alpha_sq / 2.0).exp(), 0.0)];
    for (i, &n) in pattern.counts().iter().enumerate() {
        let lin = u.get(i, 0).conj();
        let cst: Complex64 = (1..d).map(|j| u.get(i, j).conj() * alphas[j].conj()).sum();
        for _ in 0..n {
            let mut next = vec![c(0.0, 0.0); poly.len() + 1];
            for (k, &a) in poly.iter().enumerate() {
                next[k + 1] += a * lin;
                next[k] += a * cst;
            }
            poly = next;
        }
        let f = factorial(n).sqrt();
        poly.iter_mut().for_each(|a| *a /= f);
    }
    Ok(polynomial_to_amps(&poly, cutoff))
}

/// Assigns roots to output modes for a pattern.
///
/// Modes `1…N` are served in order, each taking `n_i` equal roots (the next
/// available cluster in root order); the remainder must be `n_0` equal roots
/// for mode 0. When `n_0 = 0`, `β_0` follows from the first-column constraint.
/// Modes `i ≥ 1` with `n_i = 0` get `β_i = 0`.
pub fn assign_roots(roots: &[Complex64], pattern: &DetectionPattern, u: &UnitaryMatrix) -> Result<Vec<Complex64>> {
    let d = u.dim();
    check_pattern(pattern, d)?;
    if pattern.total() != roots.len() {
        return Err(Error::InvalidPattern(format!(
            "pattern detects {} photons but the target has degree {}",
            pattern.total(),
            roots.len()
        )));
    }
    let col = first_column(u);
    let counts = pattern.counts();
    let mut used = vec![false; roots.len()];
    let mut betas = vec![c(0.0, 0.0); d];
    let order: Vec<usize> = (1..d).chain(std::iter::once(0)).collect();
    for &i in &order {
        let n = counts[i];
        if n == 0 {
            continue;
        }
        if col[i].norm() < COLUMN_ZERO {
            return Err(Error::Unreachable { row: i, magnitude: col[i].norm() });
        }
        let cluster = take_cluster(roots, &mut used, n)
            .ok_or_else(|| Error::InvalidPattern(format!("no root of multiplicity {n} left for output {i}")))?;
        betas[i] = cluster;
    }
    if counts[0] == 0 {
        if col[0].norm() < COLUMN_ZERO {
            return Err(Error::Unreachable { row: 0, magnitude: col[0].norm() });
        }
        let s: Complex64 = (1..d).map(|i| col[i].norm_sqr() * betas[i]).sum();
        betas[0] = -s / col[0].norm_sqr();
    }
    Ok(betas)
}

fn take_cluster(roots: &[Complex64], used: &mut [bool], n: usize) -> Option<Complex64> {
    for start in 0..roots.len() {
        if used[start] {
            continue;
        }
        let r = roots[start];
        let tol = 1e-4 * r.norm().max(1.0);
        let members: Vec<usize> = (0..roots.len()).filter(|&k| !used[k] && (roots[k] - r).norm() < tol).take(n).collect();
        if members.len() == n {
            let mean = members.iter().map(|&k| roots[k]).sum::<Complex64>() / n as f64;
            members.iter().for_each(|&k| used[k] = true);
            return Some(mean);
        }
    }
    None
}

/// Designs the coherent references for `psi` with multiport `u` and a pattern.
pub fn design(psi: &FockVector, u: &UnitaryMatrix, pattern: &DetectionPattern) -> Result<EngineeredTarget> {
    let roots = characteristic_roots(psi)?;
    let betas = assign_roots(&roots, pattern, u)?;
    design_with_roots(psi, betas, u, pattern)
}

/// Like [`design`] with an explicit root for every output mode.
pub fn design_with_roots(
    psi: &FockVector,
    betas: Vec<Complex64>,
    u: &UnitaryMatrix,
    pattern: &DetectionPattern,
) -> Result<EngineeredTarget> {
    let alphas = alphas_for_betas(&betas, u)?;
    let (kappa_bar, efficiency) = kappa_and_efficiency(&betas, u, pattern)?;
    Ok(EngineeredTarget { psi: psi.clone(), betas, alphas, kappa_bar, efficiency, pattern: pattern.clone() })
}

/// Result of optimizing `|U_{i0}|²` for fixed roots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstColumnOptimum {
    /// `|U_{i0}|²`, summing to one.
    pub x: Vec<f64>,
    pub efficiency: f64,
    /// `max_i |∂f/∂x_i − λ|` at the returned point.
    pub kkt_residual: f64,
}

struct Objective<'a> {
    betas: &'a [Complex64],
    counts: &'a [usize],
}

impl Objective<'_> {
    fn s(&self, x: &[f64]) -> Complex64 {
        self.betas.iter().zip(&x[1..]).map(|(b, xi)| b * *xi).sum()
    }

    /// `ln|κ̄|²` up to the constant `−Σ ln n_i!`.
    fn value(&self, x: &[f64]) -> f64 {
        let s = self.s(x);
        let mut f = -s.norm_sqr() / x[0];
        for (k, b) in self.betas.iter().enumerate() {
            f += self.counts[k + 1] as f64 * x[k + 1].ln() - x[k + 1] * b.norm_sqr();
        }
        f
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let s = self.s(x);
        let mut g = vec![s.norm_sqr() / (x[0] * x[0])];
        for (k, b) in self.betas.iter().enumerate() {
            g.push(self.counts[k + 1] as f64 / x[k + 1] - b.norm_sqr() - 2.0 * (s.conj() * b).re / x[0]);
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let s = self.s(x);
        let x0 = x[0];
        DMatrix::from_fn(n, n, |i, j| match (i, j) {
            (0, 0) => -2.0 * s.norm_sqr() / (x0 * x0 * x0),
            (0, k) | (k, 0) => 2.0 * (s.conj() * self.betas[k - 1]).re / (x0 * x0),
            (i, j) => {
                let cross = -2.0 * (self.betas[j - 1].conj() * self.betas[i - 1]).re / x0;
                if i == j {
                    cross - self.counts[i] as f64 / (x[i] * x[i])
                } else {
                    cross
                }
            }
        })
    }

    fn kkt(&self, x: &[f64]) -> f64 {
        let g = self.gradient(x);
        let lambda: f64 = g.iter().zip(x).map(|(g, x)| g * x).sum();
        g.iter().map(|g| (g - lambda).abs()).fold(0.0, f64::max)
    }
}

/// Stationary point of the symmetric case `β_2 = β_1*`, pattern `(0, 1, 1)`:
/// the root in `(0, 1/2)` of
/// `(1−2x)² − |β|² x (1−2x)² − 4x² (Re β)² (1−x) = 0`, giving `x_1 = x_2 = x`.
pub fn conjugate_pair_optimum(beta: Complex64) -> f64 {
    let (b2, re2) = (beta.norm_sqr(), beta.re * beta.re);
    let g = |x: f64| {
        let y = 1.0 - 2.0 * x;
        y * y - b2 * x * y * y - 4.0 * x * x * re2 * (1.0 - x)
    };
    // g(0) = 1 > 0 and g(1/2) < 0 unless Re β = 0, where the root is 1/2.
    let (mut lo, mut hi) = (0.0, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximizes `|κ̄|²` over `x_i = |U_{i0}|²` on the simplex for fixed
/// `β_1 … β_N` and a pattern with `n_0 = 0` and `n_i ≥ 1` otherwise.
///
/// The objective `Σ n_i ln x_i − Σ_{i≥1} x_i|β_i|² − |Σ_{i≥1} x_i β_i|²/x_0`
/// is concave, so exponentiated-gradient ascent followed by a Newton polish
/// on the Lagrange conditions reaches the unique optimum. The conjugate-pair
/// case starts from its closed-form stationary point.
pub fn optimize_first_column(betas: &[Complex64], pattern: &DetectionPattern) -> Result<FirstColumnOptimum> {
    let d = betas.len() + 1;
    let counts = pattern.counts();
    if counts.len() != d {
        return Err(Error::InvalidPattern(format!("{} counts for {} roots", counts.len(), betas.len())));
    }
    if counts[0] != 0 || counts[1..].contains(&0) {
        return Err(Error::InvalidPattern("optimization needs n_0 = 0 and n_i ≥ 1 for i ≥ 1".into()));
    }
    let obj = Objective { betas, counts };
    let conjugate_pair = d == 3 && counts == [0, 1, 1] && (betas[0] - betas[1].conj()).norm() < 1e-12 * betas[0].norm().max(1.0);
    let mut x = if conjugate_pair {
        let xp = conjugate_pair_optimum(betas[0]);
        vec![1.0 - 2.0 * xp, xp, xp]
    } else {
        vec![1.0 / d as f64; d]
    };
    if !conjugate_pair {
        let mut eta = 0.1;
        for _ in 0..2000 {
            let g = obj.gradient(&x);
            let f0 = obj.value(&x);
            let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            loop {
                let step = eta / gmax;
                let mut y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi * (step * gi).exp()).collect();
                let z: f64 = y.iter().sum();
                y.iter_mut().for_each(|v| *v /= z);
                if obj.value(&y) >= f0 {
                    x = y;
                    eta = (eta * 1.5).min(1.0);
                    break;
                }
                eta *= 0.5;
                if eta < 1e-12 {
                    break;
                }
            }
            if obj.kkt(&x) < 1e-6 || eta < 1e-12 {
                break;
            }
        }
    }
    newton_polish(&obj, &mut x);
    let kkt_residual = obj.kkt(&x);
    if x[0] < 1e-9 {
        return Err(Error::Optimizer(format!("optimum on the boundary: |U_00|² = {:.3e}", x[0])));
    }
    if kkt_residual.is_nan() || kkt_residual >= 1e-8 {
        return Err(Error::Optimizer(format!("KKT residual {kkt_residual:.3e} after polish")));
    }
    let efficiency = optimum_efficiency(&obj, &x);
    Ok(FirstColumnOptimum { x, efficiency, kkt_residual })
}

fn newton_polish(obj: &Objective, x: &mut [f64]) {
    let n = x.len();
    for _ in 0..100 {
        let r0 = obj.kkt(x);
        if r0 < 1e-13 {
            return;
        }
        let g = obj.gradient(x);
        let h = obj.hessian(x);
        let mut kkt = DMatrix::<f64>::zeros(n + 1, n + 1);
        kkt.view_mut((0, 0), (n, n)).copy_from(&h);
        for i in 0..n {
            kkt[(i, n)] = 1.0;
            kkt[(n, i)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(n + 1);
        for i in 0..n {
            rhs[i] = -g[i];
        }
        rhs[n] = 1.0 - x.iter().sum::<f64>();
        let Some(sol) = kkt.lu().solve(&rhs) else { return };
        let mut t = 1.0;
        loop {
            let y: Vec<f64> = (0..n).map(|i| x[i] + t * sol[i]).collect();
            if y.iter().all(|&v| v > 0.0) && obj.kkt(&y) < r0 {
                x.copy_from_slice(&y);
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return;
            }
        }
    }
}

fn optimum_efficiency(obj: &Objective, x: &[f64]) -> f64 {
    let ln_fact: f64 = obj.counts.iter().map(|&n| ln_factorial(n)).sum();
    let s = obj.s(x);
    let mut factors = vec![(-s / x[0], obj.counts[0])];
    factors.extend(obj.betas.iter().copied().zip(obj.counts[1..].iter().copied()));
    (obj.value(x) - ln_fact).exp() * factored_norm_sqr(&factors)
}

/// Efficiency at an arbitrary feasible first column, for comparison with
/// [`optimize_first_column`].
pub fn efficiency_at(betas: &[Complex64], pattern: &DetectionPattern, x: &[f64]) -> f64 {
    optimum_efficiency(&Objective { betas, counts: pattern.counts() }, x)
}

/// Real orthogonal multiport (a Householder reflection) whose first column
/// is `√x`.
pub fn unitary_with_first_column(x: &[f64]) -> Result<UnitaryMatrix> {
    let total: f64 = x.iter().sum();
    if x.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig("first-column weights must be non-negative and sum to one".into()));
    }
    let d = x.len();
    let v: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
    if (v[0] - 1.0).abs() < 1e-15 {
        return Ok(UnitaryMatrix::identity(d));
    }
    let mut w = v.clone();
    w[0] -= 1.0;
    let wn: f64 = w.iter().map(|a| a * a).sum();
    let m = DMatrix::from_fn(d, d, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        c(id - 2.0 * w[i] * w[j] / wn, 0.0)
    });
    UnitaryMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiport::dft_matrix;

    #[test]
    fn roots_of_three_term_phase_state() {
        let psi = FockVector::from_real(&[1.0, 1.0, 1.0]);
        let r = characteristic_roots(&psi).unwrap();
        let b1 = c(-std::f64::consts::FRAC_1_SQRT_2, (2f64.sqrt() - 0.5).sqrt());
        assert!((r[0] - b1).norm() < 1e-12);
        assert!((r[1] - b1.conj()).norm() < 1e-12);
    }

    #[test]
    fn zero_photon_and_zero_targets() {
        assert!(matches!(characteristic_roots(&FockVector::from_real(&[1.0, 0.0])), Err(Error::ZeroPhotonTarget)));
        assert!(matches!(characteristic_roots(&FockVector::zeros(3)), Err(Error::ZeroTarget)));
    }

    #[test]
    fn number_state_needs_zero_amplitudes() {
        let u = dft_matrix(3);
        let (alphas, b0) = amplitudes_from_roots(&[c(0.0, 0.0), c(0.0, 0.0)], &u).unwrap();
        assert!(alphas.iter().all(|a| a.norm() < 1e-15));
        assert!(b0.norm() < 1e-15);
    }

    #[test]
    fn pair_cubic_matches_scaled_form() {
        let b = c(-std::f64::consts::FRAC_1_SQRT_2, (2f64.sqrt() - 0.5).sqrt());
        let x = conjugate_pair_optimum(b);
        let r2 = 2f64.sqrt();
        let cubic = (4.0 * r2 - 2.0) * x.powi(3) - (4.0 * r2 + 2.0) * x * x + (4.0 + r2) * x - 1.0;
        assert!(cubic.abs() < 1e-12);
        assert!((x - 0.28205).abs() < 1e-5);
        assert!((1.0 - 2.0 * x - 0.43591).abs() < 1e-5);
    }

    #[test]
    fn householder_first_column() {
        let x = [0.5, 0.3, 0.2];
        let u = unitary_with_first_column(&x).unwrap();
        for (i, xi) in x.iter().enumerate() {
            assert!((u.get(i, 0).norm_sqr() - xi).abs() < 1e-14);
        }
    }
}
