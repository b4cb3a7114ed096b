//! Single-mode and multimode Fock-space states.
//!
//! Amplitudes are stored over the photon-number basis up to an explicit cutoff.
//! Anything that truncates a formally infinite state reports the discarded tail
//! mass so callers can decide whether the cutoff is adequate.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

/// ln(n!) for small n, exact enough for amplitude prefactors.
pub(crate) fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Pure single-mode state `Σ amps[n] |n⟩`, n = 0..=cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    amps: Vec<Complex64>,
    normalized: bool,
}

impl FockVector {
    /// Wraps raw amplitudes. An empty slice is promoted to the vacuum-free
    /// zero vector of cutoff 0.
    pub fn new(amps: Vec<Complex64>) -> Self {
        let amps = if amps.is_empty() { vec![Complex64::new(0.0, 0.0)] } else { amps };
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        Self { normalized: (norm - 1.0).abs() < NORM_TOL, amps }
    }

    pub fn from_real(amps: &[f64]) -> Self {
        Self::new(amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn zeros(cutoff: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); cutoff + 1])
    }

    /// Number state `|n⟩` embedded at the given cutoff (which must reach n).
    pub fn number(n: usize, cutoff: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); cutoff.max(n) + 1];
        amps[n] = Complex64::new(1.0, 0.0);
        Self::new(amps)
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn cutoff(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Amplitude of `|n⟩`; zero above the cutoff.
    pub fn get(&self, n: usize) -> Complex64 {
        self.amps.get(n).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Highest index with a non-negligible amplitude, `None` for the zero vector.
    pub fn degree(&self, tol: f64) -> Option<usize> {
        self.amps.iter().rposition(|a| a.norm() > tol)
    }

    pub fn normalize(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return self.clone();
        }
        Self::new(self.amps.iter().map(|a| a / n).collect())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.amps.iter().map(|a| a * s).collect())
    }

    /// Applies `exp(i n̂ φ)`.
    pub fn phase_shift(&self, phi: f64) -> Self {
        Self::new(self.amps.iter().enumerate().map(|(n, a)| a * Complex64::from_polar(1.0, n as f64 * phi)).collect())
    }

    /// Zero-pads or truncates to a new cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        Self::new((0..=cutoff).map(|n| self.get(n)).collect())
    }

    pub fn to_density(&self) -> DensityMatrix {
        let d = self.amps.len();
        DensityMatrix::from_entries(DMatrix::from_fn(d, d, |i, j| self.amps[i] * self.amps[j].conj()))
    }
}

#[derive(Serialize, Deserialize)]
struct FockVectorRepr {
    cutoff: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for FockVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FockVectorRepr { cutoff: self.cutoff(), re: self.amps.iter().map(|a| a.re).collect(), im: self.amps.iter().map(|a| a.im).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FockVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FockVectorRepr::deserialize(d)?;
        if r.re.len() != r.cutoff + 1 || (!r.im.is_empty() && r.im.len() != r.re.len()) {
            return Err(serde::de::Error::custom("re/im length must equal cutoff + 1"));
        }
        let im = if r.im.is_empty() { vec![0.0; r.re.len()] } else { r.im };
        Ok(FockVector::new(r.re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect()))
    }
}

/// `Σ conj(a_n) b_n`, zero-padding the shorter vector.
pub fn inner_product(a: &FockVector, b: &FockVector) -> Complex64 {
    a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum()
}

/// Coherent state amplitudes `exp(-|α|²/2) αⁿ/√n!` up to `cutoff`.
pub fn coherent_state(alpha: Complex64, cutoff: usize) -> FockVector {
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut a = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..=cutoff {
        if n > 0 {
            a = a * alpha / (n as f64).sqrt();
        }
        amps.push(a);
    }
    FockVector::new(amps)
}

/// Poisson mass of a coherent state above `cutoff`, summed directly so tiny
/// tails keep their relative precision.
pub fn coherent_tail_mass(alpha: Complex64, cutoff: usize) -> f64 {
    let mean = alpha.norm_sqr();
    if mean == 0.0 {
        return 0.0;
    }
    let mut n = cutoff + 1;
    let mut term = (-mean + n as f64 * mean.ln() - ln_factorial(n)).exp();
    let mut tail = 0.0;
    while term > 1e-300 && (term > tail * 1e-17 || (n as f64) < mean) {
        tail += term;
        n += 1;
        term *= mean / n as f64;
    }
    tail
}

/// Binomial state `2^{-N/2} (±1)ⁿ C(N,n)^{1/2}`; alternating signs on request.
pub fn binomial_state(degree: usize, cutoff: usize, alternating: bool) -> Result<FockVector> {
    if cutoff < degree {
        return Err(Error::CutoffBelowDegree { cutoff, degree });
    }
    let pref = 2f64.powf(-(degree as f64) / 2.0);
    let amps = (0..=cutoff)
        .map(|n| {
            if n > degree {
                return Complex64::new(0.0, 0.0);
            }
            let sign = if alternating && n % 2 == 1 { -1.0 } else { 1.0 };
            Complex64::new(sign * pref * binomial(degree, n).sqrt(), 0.0)
        })
        .collect();
    Ok(FockVector::new(amps))
}

/// Physicists' Hermite polynomial `H_n(z)` by the three-term recurrence.
pub fn hermite(n: usize, z: Complex64) -> Complex64 {
    let mut h0 = Complex64::new(1.0, 0.0);
    if n == 0 {
        return h0;
    }
    let mut h1 = 2.0 * z;
    for k in 1..n {
        let h2 = 2.0 * z * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Squeezed coherent state with coherent amplitude `alpha` and complex
/// squeeze parameter `t = e^{iφ} tanh|ζ|`.
///
/// The coefficients are `(cosh|ζ|)^{-1/2} exp{-[|α|² + t α*²]/2}
/// (t/2)^{n/2} H_n[(α + tα*)/√(2t)] / √n!`. The product `(t/2)^{n/2} H_n(·)`
/// obeys `h_{n+1} = w h_n - n t h_{n-1}` with `w = α + tα*`, which stays
/// finite as t → 0, so that form is what gets evaluated.
pub fn squeezed_state(alpha: Complex64, t: Complex64, cutoff: usize) -> Result<FockVector> {
    let tn = t.norm();
    if tn >= 1.0 {
        return Err(Error::UnphysicalSqueezing(tn));
    }
    // cosh|ζ| = 1/√(1 - tanh²|ζ|)
    let cosh = 1.0 / (1.0 - tn * tn).sqrt();
    let pref = cosh.powf(-0.5) * (-(alpha.norm_sqr() + t * alpha.conj() * alpha.conj()) / 2.0).exp();
    let w = alpha + t * alpha.conj();
    let mut amps = Vec::with_capacity(cutoff + 1);
    let (mut h_prev, mut h) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    let mut inv_sqrt_fact = 1.0;
    for n in 0..=cutoff {
        if n > 0 {
            let next = w * h - (n as f64 - 1.0) * t * h_prev;
            h_prev = h;
            h = next;
            inv_sqrt_fact /= (n as f64).sqrt();
        }
        amps.push(pref * h * inv_sqrt_fact);
    }
    Ok(FockVector::new(amps))
}

/// Single-mode (or flattened multimode) density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Wraps a square matrix.
    ///
    /// # Panics
    /// Panics if `entries` is not square.
    pub fn from_entries(entries: DMatrix<Complex64>) -> Self {
        assert_eq!(entries.nrows(), entries.ncols(), "density matrix must be square");
        Self { entries }
    }

    pub fn zeros(cutoff: usize) -> Self {
        Self::from_entries(DMatrix::zeros(cutoff + 1, cutoff + 1))
    }

    /// Diagonal operator from a photon-number distribution.
    pub fn diagonal(probs: &[f64]) -> Self {
        let d = probs.len().max(1);
        let mut m = DMatrix::zeros(d, d);
        for (n, &p) in probs.iter().enumerate() {
            m[(n, n)] = Complex64::new(p, 0.0);
        }
        Self::from_entries(m)
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cutoff(&self) -> usize {
        self.dim() - 1
    }

    /// `ρ_{n,m}`, zero outside the stored block.
    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        if n < self.dim() && m < self.dim() {
            self.entries[(n, m)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm() <= tol))
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.entries)
    }

    pub fn normalize(&self) -> Self {
        let tr = self.trace().re;
        if tr == 0.0 {
            return self.clone();
        }
        Self::from_entries(self.entries.map(|x| x / tr))
    }

    /// `e^{i n̂ φ} ρ e^{-i n̂ φ}`, i.e. `ρ_{n,m} → e^{i(n-m)φ} ρ_{n,m}`.
    pub fn phase_shift(&self, phi: f64) -> Self {
        let d = self.dim();
        Self::from_entries(DMatrix::from_fn(d, d, |n, m| self.entries[(n, m)] * Complex64::from_polar(1.0, (n as f64 - m as f64) * phi)))
    }

    /// Zero-pads or truncates to a new cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        Self::from_entries(DMatrix::from_fn(cutoff + 1, cutoff + 1, |n, m| self.get(n, m)))
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &FockVector) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..self.dim().min(psi.amps.len()) {
            for m in 0..self.dim().min(psi.amps.len()) {
                acc += psi.amps[n].conj() * self.entries[(n, m)] * psi.amps[m];
            }
        }
        acc
    }

    /// `Tr[ρ A]` with `A` zero-padded or truncated to match.
    pub fn overlap(&self, other: &DensityMatrix) -> Complex64 {
        let d = self.dim().min(other.dim());
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..d {
            for m in 0..d {
                acc += self.entries[(n, m)] * other.entries[(m, n)];
            }
        }
        acc
    }
}

pub(crate) fn min_hermitian_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

#[derive(Serialize, Deserialize)]
struct DensityRepr {
    cutoff: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = self.entries[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        DensityRepr { cutoff: d - 1, entries }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = DensityRepr::deserialize(d)?;
        let dim = r.cutoff + 1;
        if r.entries.len() != dim * dim {
            return Err(serde::de::Error::custom("entries must hold (cutoff+1)^2 complex pairs"));
        }
        Ok(DensityMatrix::from_entries(DMatrix::from_fn(dim, dim, |i, j| {
            let [re, im] = r.entries[i * dim + j];
            Complex64::new(re, im)
        })))
    }
}

/// Occupation-number tuple `(n_0, …, n_N)`.
pub type Occupation = Vec<usize>;

/// Sparse pure state over `modes` bosonic modes.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MultimodeState {
    modes: usize,
    total_photon_cap: usize,
    terms: BTreeMap<Occupation, Complex64>,
}

impl MultimodeState {
    pub fn new(modes: usize, total_photon_cap: usize) -> Self {
        Self { modes, total_photon_cap, terms: BTreeMap::new() }
    }

    pub fn vacuum(modes: usize) -> Self {
        Self::occupation(&vec![0; modes])
    }

    /// Product number state `|n_0⟩…|n_N⟩`.
    pub fn occupation(counts: &[usize]) -> Self {
        let mut s = Self::new(counts.len(), counts.iter().sum());
        s.terms.insert(counts.to_vec(), Complex64::new(1.0, 0.0));
        s
    }

    /// Tensor product of single-mode states.
    pub fn product(states: &[FockVector]) -> Self {
        let cap = states.iter().map(|s| s.cutoff()).sum();
        let mut out = Self::new(states.len(), cap);
        out.terms.insert(Vec::new(), Complex64::new(1.0, 0.0));
        for s in states {
            let mut next = BTreeMap::new();
            for (occ, a) in &out.terms {
                for (n, b) in s.amps().iter().enumerate() {
                    if b.norm_sqr() == 0.0 {
                        continue;
                    }
                    let mut o = occ.clone();
                    o.push(n);
                    next.insert(o, a * b);
                }
            }
            out.terms = next;
        }
        out
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn total_photon_cap(&self) -> usize {
        self.total_photon_cap
    }

    pub fn terms(&self) -> &BTreeMap<Occupation, Complex64> {
        &self.terms
    }

    pub fn amplitude(&self, occ: &[usize]) -> Complex64 {
        self.terms.get(occ).copied().unwrap_or_default()
    }

    /// Adds `amp` to the coefficient of `occ`.
    pub fn add(&mut self, occ: Occupation, amp: Complex64) -> Result<()> {
        if occ.len() != self.modes {
            return Err(Error::DimensionMismatch(format!("occupation of length {} in a {}-mode state", occ.len(), self.modes)));
        }
        let total: usize = occ.iter().sum();
        if total > self.total_photon_cap {
            self.total_photon_cap = total;
        }
        *self.terms.entry(occ).or_default() += amp;
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for a in out.terms.values_mut() {
            *a *= s;
        }
        out
    }

    /// Probability of each total photon number.
    pub fn photon_number_distribution(&self) -> Vec<f64> {
        let mut dist = vec![0.0; self.total_photon_cap + 1];
        for (occ, a) in &self.terms {
            dist[occ.iter().sum::<usize>()] += a.norm_sqr();
        }
        dist
    }

    /// Drops terms with `|amp| <= tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut out = self.clone();
        out.terms.retain(|_, a| a.norm() > tol);
        out
    }
}

/// Reduced operator on the `keep` modes of a pure multimode state.
///
/// With several kept modes the basis is the mixed-radix flattening of their
/// occupations, each running over `0..=total_photon_cap`, first listed mode
/// most significant.
pub fn partial_trace(state: &MultimodeState, keep: &[usize]) -> Result<DensityMatrix> {
    partial_trace_mixed(&[(1.0, state.clone())], keep)
}

/// Reduced operator of an ensemble `Σ_k p_k |s_k⟩⟨s_k|`.
pub fn partial_trace_mixed(ensemble: &[(f64, MultimodeState)], keep: &[usize]) -> Result<DensityMatrix> {
    let modes = ensemble.first().map(|(_, s)| s.modes).unwrap_or(0);
    if keep.is_empty() || keep.iter().any(|&k| k >= modes) {
        return Err(Error::DimensionMismatch(format!("keep set {keep:?} invalid for {modes} modes")));
    }
    if ensemble.iter().any(|(_, s)| s.modes != modes) {
        return Err(Error::DimensionMismatch("ensemble members differ in mode count".into()));
    }
    let cap = ensemble.iter().map(|(_, s)| s.total_photon_cap).max().unwrap_or(0);
    let radix = cap + 1;
    let dim = radix.pow(keep.len() as u32);
    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    for (p, state) in ensemble {
        let mut groups: BTreeMap<Vec<usize>, Vec<(usize, Complex64)>> = BTreeMap::new();
        for (occ, a) in &state.terms {
            let idx = keep.iter().fold(0, |acc, &k| acc * radix + occ[k]);
            let rest: Vec<usize> = (0..modes).filter(|m| !keep.contains(m)).map(|m| occ[m]).collect();
            groups.entry(rest).or_default().push((idx, *a));
        }
        for members in groups.values() {
            for &(i, a) in members {
                for &(j, b) in members {
                    rho[(i, j)] += a * b.conj() * *p;
                }
            }
        }
    }
    Ok(DensityMatrix::from_entries(rho))
}
