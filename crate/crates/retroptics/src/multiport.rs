//! Linear-optical multiports: beam-splitter elements, triangular
//! factorization, the DFT multiport and exact multimode evolution.
//!
//! Convention: `U[(m, n)]` has row = output mode, column = input mode.
//! Forward evolution maps an input creation operator `a†_n → Σ_m U_{mn} a†_m`;
//! backward evolution maps an output creation operator `a†_m → Σ_n U*_{mn} a†_n`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fock::{factorial, DensityMatrix, FockVector, MultimodeState, Occupation};

/// Largest total photon number the exact expansion accepts.
pub const MAX_EXACT_PHOTONS: usize = 16;

const UNITARY_TOL: f64 = 1e-9;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Wraps an angle to (-π, π].
pub fn wrap_phase(a: f64) -> f64 {
    let mut w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI + 1e-15 {
        w = PI;
    }
    w
}

/// Square unitary matrix acting on mode operators.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    entries: DMatrix<Complex64>,
}

impl UnitaryMatrix {
    /// Checks `U†U = 1` to within 1e-9 (max-abs).
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch("unitary must be square".into()));
        }
        let err = unitarity_error(&entries);
        if err > UNITARY_TOL {
            return Err(Error::NotUnitary(err));
        }
        Ok(Self { entries })
    }

    pub(crate) fn new_unchecked(entries: DMatrix<Complex64>) -> Self {
        Self { entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: DMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: self.entries.adjoint() }
    }

    /// Elementwise complex conjugate.
    pub fn conjugate(&self) -> Self {
        Self { entries: self.entries.map(|z| z.conj()) }
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &UnitaryMatrix) -> Self {
        Self { entries: &self.entries * &rhs.entries }
    }

    /// Max-abs elementwise distance.
    pub fn distance(&self, other: &UnitaryMatrix) -> f64 {
        (&self.entries - &other.entries).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Distance after removing the best global phase taken from the largest entry.
    pub fn distance_up_to_phase(&self, other: &UnitaryMatrix) -> f64 {
        let (k, _) = other.entries.iter().enumerate().fold((0, 0.0), |best, (k, z)| if z.norm() > best.1 { (k, z.norm()) } else { best });
        let (a, b) = (self.entries.as_slice()[k], other.entries.as_slice()[k]);
        if a.norm() == 0.0 {
            return self.distance(other);
        }
        let phase = b / a * (a.norm() / b.norm());
        (self.entries.map(|z| z * phase) - &other.entries).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn unitarity_error(m: &DMatrix<Complex64>) -> f64 {
    let d = m.nrows();
    let p = m.adjoint() * m;
    let mut err: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((p[(i, j)] - c(target, 0.0)).norm());
        }
    }
    err
}

#[derive(Serialize, Deserialize)]
struct UnitaryRepr {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for UnitaryMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = self.entries[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        UnitaryRepr { dim: d, entries }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitaryMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = UnitaryRepr::deserialize(d)?;
        if r.entries.len() != r.dim * r.dim {
            return Err(serde::de::Error::custom("entries must hold dim^2 complex pairs"));
        }
        let m = DMatrix::from_fn(r.dim, r.dim, |i, j| {
            let [re, im] = r.entries[i * r.dim + j];
            c(re, im)
        });
        UnitaryMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Beam splitter with reflectance `sin θ` and an input phase `φ` on mode `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BSElement {
    pub p: usize,
    pub q: usize,
    pub theta: f64,
    pub phi: f64,
}

impl BSElement {
    fn validate(&self, dim: usize) -> Result<()> {
        if self.p <= self.q || self.p >= dim {
            return Err(Error::InvalidConfig(format!("element modes (p={}, q={}) need q < p < {dim}", self.p, self.q)));
        }
        if !(-1e-12..=FRAC_PI_2 + 1e-12).contains(&self.theta) {
            return Err(Error::InvalidConfig(format!("theta {} outside [0, π/2]", self.theta)));
        }
        Ok(())
    }
}

/// Ordered beam-splitter network followed by output phase shifters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiportPlan {
    pub dim: usize,
    pub elements: Vec<BSElement>,
    #[serde(rename = "delta")]
    pub output_phases: Vec<f64>,
}

impl MultiportPlan {
    pub fn validate(&self) -> Result<()> {
        if self.output_phases.len() != self.dim {
            return Err(Error::InvalidConfig(format!("{} output phases for dimension {}", self.output_phases.len(), self.dim)));
        }
        self.elements.iter().try_for_each(|e| e.validate(self.dim))
    }

    /// Writes the plan as CSV: one row per beam splitter, then one per output phase.
    pub fn write_netlist<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["kind", "p", "q", "theta", "phi"])?;
        for e in &self.elements {
            wtr.write_record([
                "beam_splitter".to_string(),
                e.p.to_string(),
                e.q.to_string(),
                format!("{:.15}", e.theta),
                format!("{:.15}", e.phi),
            ])?;
        }
        for (n, d) in self.output_phases.iter().enumerate() {
            wtr.write_record(["output_phase".to_string(), n.to_string(), String::new(), String::new(), format!("{d:.15}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Identity with the 2×2 block `[[e^{iφ}cosθ, i sinθ], [i e^{iφ} sinθ, cosθ]]`
/// on modes `(q, p)`, `q < p`.
///
/// # Panics
/// Panics unless `q < p < dim`.
pub fn bs_matrix(theta: f64, phi: f64, dim: usize, p: usize, q: usize) -> UnitaryMatrix {
    assert!(q < p && p < dim, "beam splitter modes need q < p < dim");
    let mut m = DMatrix::identity(dim, dim);
    let (s, co) = theta.sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    m[(q, q)] = e * co;
    m[(q, p)] = c(0.0, s);
    m[(p, q)] = e * c(0.0, s);
    m[(p, p)] = c(co, 0.0);
    UnitaryMatrix::new_unchecked(m)
}

/// `Ω_{n,m} = ωⁿᵐ/√dim` with `ω = e^{2πi/dim}`.
pub fn dft_matrix(dim: usize) -> UnitaryMatrix {
    let norm = 1.0 / (dim as f64).sqrt();
    UnitaryMatrix::new_unchecked(DMatrix::from_fn(dim, dim, |n, m| {
        Complex64::from_polar(norm, 2.0 * PI * ((n * m) % dim) as f64 / dim as f64)
    }))
}

/// `D · Π elements`, in plan order.
pub fn realize(plan: &MultiportPlan) -> Result<UnitaryMatrix> {
    plan.validate()?;
    let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        plan.dim,
        plan.output_phases.iter().map(|&d| Complex64::from_polar(1.0, d)),
    ));
    for e in &plan.elements {
        m *= bs_matrix(e.theta, e.phi, plan.dim, e.p, e.q).entries;
    }
    Ok(UnitaryMatrix::new_unchecked(m))
}

/// Triangular factorization `U = D · R(2) ⋯ R(dim)`, `R(m+1) = T_{m,0} T_{m,1} ⋯ T_{m,m-1}`.
///
/// Rows are eliminated bottom-up. For the current block's last row `v` the
/// element parameters follow from `sinθ_j = |v_j| / Π_{k<j} cosθ_k`,
/// `δ = arg v_m` and `φ_j = arg v_j − δ − π/2`. Zero-magnitude entries resolve
/// to `θ = φ = 0`. Every one of the `dim(dim−1)/2` elements is kept, even
/// when `θ = 0`.
pub fn reck_decompose(u: &UnitaryMatrix) -> Result<MultiportPlan> {
    let err = unitarity_error(&u.entries);
    if err > UNITARY_TOL {
        return Err(Error::NotUnitary(err));
    }
    let d = u.dim();
    let mut w = u.entries.clone();
    let mut rows: Vec<Vec<BSElement>> = Vec::new();
    let mut delta = vec![0.0; d];
    const ZERO: f64 = 1e-14;
    for m in (1..d).rev() {
        let v: Vec<Complex64> = (0..=m).map(|j| w[(m, j)]).collect();
        let dl = if v[m].norm() > ZERO { v[m].arg() } else { 0.0 };
        let mut row = Vec::with_capacity(m);
        let mut cos_prod = 1.0;
        for (j, vj) in v.iter().enumerate().take(m) {
            let s = if cos_prod > ZERO { (vj.norm() / cos_prod).min(1.0) } else { 0.0 };
            let theta = s.asin();
            let phi = if vj.norm() > ZERO && s > 0.0 { wrap_phase(vj.arg() - dl - FRAC_PI_2) } else { 0.0 };
            row.push(BSElement { p: m, q: j, theta, phi });
            cos_prod *= theta.cos();
        }
        delta[m] = wrap_phase(dl);
        let mut r = DMatrix::<Complex64>::identity(d, d);
        for e in &row {
            r *= bs_matrix(e.theta, e.phi, d, e.p, e.q).entries;
        }
        w *= r.adjoint();
        rows.push(row);
    }
    delta[0] = wrap_phase(w[(0, 0)].arg());
    let elements = rows.into_iter().rev().flatten().collect();
    Ok(MultiportPlan { dim: d, elements, output_phases: delta })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionDirection {
    Forward,
    Backward,
}

/// Exact evolution of a multimode state through `u`.
///
/// Each occupation tuple is rewritten as a product of creation operators,
/// each operator is replaced by its linear image, and the product is expanded
/// term by term. Total photon number is conserved.
pub fn evolve_multimode(u: &UnitaryMatrix, state: &MultimodeState, direction: EvolutionDirection) -> Result<MultimodeState> {
    let d = u.dim();
    if state.modes() != d {
        return Err(Error::DimensionMismatch(format!("{}-mode state through a {d}-mode device", state.modes())));
    }
    let max_photons = state.terms().keys().map(|o| o.iter().sum::<usize>()).max().unwrap_or(0);
    if max_photons > MAX_EXACT_PHOTONS {
        return Err(Error::PhotonCapExceeded { cap: max_photons, limit: MAX_EXACT_PHOTONS });
    }
    // Column i of `v` is the image of a†_i.
    let v = match direction {
        EvolutionDirection::Forward => u.entries.clone(),
        EvolutionDirection::Backward => u.entries.adjoint(),
    };
    let images: Vec<Vec<(usize, Complex64)>> =
        (0..d).map(|i| (0..d).map(|m| (m, v[(m, i)])).filter(|(_, z)| z.norm() > 0.0).collect()).collect();
    let mut out = MultimodeState::new(d, state.total_photon_cap());
    for (occ, amp) in state.terms() {
        if amp.norm() == 0.0 {
            continue;
        }
        let mut poly: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        poly.insert(vec![0; d], c(1.0, 0.0));
        let mut norm_in = 1.0;
        for (i, &n) in occ.iter().enumerate() {
            norm_in *= factorial(n);
            for _ in 0..n {
                let mut next: BTreeMap<Occupation, Complex64> = BTreeMap::new();
                for (mono, coef) in &poly {
                    for &(m, z) in &images[i] {
                        let mut k = mono.clone();
                        k[m] += 1;
                        *next.entry(k).or_default() += coef * z;
                    }
                }
                poly = next;
            }
        }
        let pref = amp / norm_in.sqrt();
        for (mono, coef) in poly {
            let norm_out: f64 = mono.iter().map(|&k| factorial(k)).product();
            out.add(mono, pref * coef * norm_out.sqrt())?;
        }
    }
    Ok(out)
}

/// Backward-evolves the detection pattern `|n_0 … n_N⟩` and projects every
/// input mode except `keep` onto the given pure input state, returning the
/// unnormalized retrodictive state of mode `keep`.
///
/// With `X = S†|pattern⟩`, the result is `ψ̃_n = Σ X(…n…) Π_j conj(in_j[occ_j])`,
/// so the pattern probability for a signal `|ψ⟩` is `|⟨ψ̃|ψ⟩|²`.
pub fn retrodictive_state(u: &UnitaryMatrix, pattern: &[usize], keep: usize, inputs: &[(usize, FockVector)]) -> Result<FockVector> {
    let x = backward_pattern(u, pattern, keep, inputs.iter().map(|(m, _)| *m))?;
    let total: usize = pattern.iter().sum();
    let mut out = vec![c(0.0, 0.0); total + 1];
    for (occ, a) in x.terms() {
        let mut w = *a;
        for (m, s) in inputs {
            w *= s.get(occ[*m]).conj();
            if w.norm() == 0.0 {
                break;
            }
        }
        out[occ[keep]] += w;
    }
    Ok(FockVector::new(out))
}

/// Mixed-input counterpart of [`retrodictive_state`]:
/// `Γ_{mn} = Σ_{a,b} X(m,a) conj(X(n,b)) Π_j ϱ_j[b_j, a_j]`, so that the
/// pattern probability is `Tr[ρ Γ]`.
pub fn retrodictive_mdo(u: &UnitaryMatrix, pattern: &[usize], keep: usize, inputs: &[(usize, DensityMatrix)]) -> Result<DensityMatrix> {
    let x = backward_pattern(u, pattern, keep, inputs.iter().map(|(m, _)| *m))?;
    let total: usize = pattern.iter().sum();
    let terms: Vec<(&Occupation, &Complex64)> = x.terms().iter().collect();
    let mut gamma = DMatrix::<Complex64>::zeros(total + 1, total + 1);
    for (oa, xa) in &terms {
        for (ob, xb) in &terms {
            let mut w = **xa * xb.conj();
            for (m, rho) in inputs {
                w *= rho.get(ob[*m], oa[*m]);
                if w.norm() == 0.0 {
                    break;
                }
            }
            gamma[(oa[keep], ob[keep])] += w;
        }
    }
    Ok(DensityMatrix::from_entries(gamma))
}

fn backward_pattern(u: &UnitaryMatrix, pattern: &[usize], keep: usize, projected: impl Iterator<Item = usize>) -> Result<MultimodeState> {
    let d = u.dim();
    if pattern.len() != d {
        return Err(Error::InvalidPattern(format!("pattern of length {} for a {d}-mode device", pattern.len())));
    }
    if keep >= d {
        return Err(Error::DimensionMismatch(format!("kept mode {keep} out of range")));
    }
    let mut covered = vec![false; d];
    covered[keep] = true;
    for m in projected {
        if m >= d || covered[m] {
            return Err(Error::DimensionMismatch(format!("input mode {m} repeated or out of range")));
        }
        covered[m] = true;
    }
    if covered.iter().any(|c| !c) {
        return Err(Error::DimensionMismatch("every input mode other than the kept one needs a state".into()));
    }
    evolve_multimode(u, &MultimodeState::occupation(pattern), EvolutionDirection::Backward)
}

/// `(i r â†)^N t^{n̂} / √N!` on the given cutoff, with `t = cos θ`, `r = sin θ`.
///
/// This is `⟨0|₁ S† |N⟩₁` for a beam splitter whose backward mode transform is
/// `[[t, ir], [ir, t]]`: the retrodictive effect of counting `N` photons in one
/// output while the matching input is vacuum.
pub fn conditional_bs_backaction(n: usize, theta: f64, cutoff: usize) -> DMatrix<Complex64> {
    let (r, t) = theta.sin_cos();
    let ir_n = c(0.0, r).powu(n as u32);
    let mut m = DMatrix::zeros(cutoff + 1, cutoff + 1);
    for k in 0..=cutoff {
        if k + n > cutoff {
            break;
        }
        let t_k = if k == 0 { 1.0 } else { t.powi(k as i32) };
        // (a†)^N |k⟩ = √((k+N)!/k!) |k+N⟩
        let raise = (factorial(k + n) / factorial(k)).sqrt();
        m[(k + n, k)] = ir_n * t_k * raise / factorial(n).sqrt();
    }
    m
}
