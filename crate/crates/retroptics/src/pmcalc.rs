//! Symmetric preparation/measurement probability calculus.
//!
//! A preparation device is a set of non-negative operators `Λ_i` and a
//! measurement device a set `Γ_j`. Both are kept unnormalized: overall
//! constants cancel, so division happens only when a probability is read out.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::min_hermitian_eigenvalue;

pub type Operator = DMatrix<Complex64>;

const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Preparation,
    Measurement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Probability of the measurement outcome given the preparation event.
    Predictive,
    /// Probability of the preparation event given the measurement outcome.
    Retrodictive,
}

/// Labelled set of device operators.
#[derive(Clone, Debug)]
pub struct DeviceOperatorSet {
    role: Role,
    dimension: usize,
    ops: Vec<(String, Operator)>,
}

impl DeviceOperatorSet {
    pub fn new(role: Role, dimension: usize) -> Self {
        Self { role, dimension, ops: Vec::new() }
    }

    /// Builder-style insertion; fails on a dimension mismatch.
    pub fn with(mut self, label: impl Into<String>, op: Operator) -> Result<Self> {
        self.push(label, op)?;
        Ok(self)
    }

    pub fn push(&mut self, label: impl Into<String>, op: Operator) -> Result<()> {
        if op.nrows() != self.dimension || op.ncols() != self.dimension {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, set dimension is {}",
                op.nrows(),
                op.ncols(),
                self.dimension
            )));
        }
        self.ops.push((label.into(), op));
        Ok(())
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.ops.iter().map(|(l, _)| l.as_str())
    }

    pub fn get(&self, label: &str) -> Result<&Operator> {
        self.ops.iter().find(|(l, _)| l == label).map(|(_, op)| op).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// `Λ = Σ Λ_i` (or `Γ = Σ Γ_j`).
    pub fn total(&self) -> Operator {
        self.ops.iter().fold(Operator::zeros(self.dimension, self.dimension), |acc, (_, op)| acc + op)
    }

    /// Checks that every operator is non-negative and the sum is nonzero.
    pub fn validate(&self) -> Result<()> {
        for (label, op) in &self.ops {
            let min_eig = min_hermitian_eigenvalue(op);
            if min_eig < -PSD_TOL {
                return Err(Error::NotNonNegative { label: label.clone(), min_eig });
            }
        }
        if self.total().iter().all(|z| z.norm() == 0.0) {
            return Err(Error::InvalidConfig("operator set sums to zero".into()));
        }
        Ok(())
    }

    /// Conjugates every operator: `U A U†`.
    pub fn sandwich(&self, u: &Operator) -> Self {
        Self { role: self.role, dimension: self.dimension, ops: self.ops.iter().map(|(l, op)| (l.clone(), u * op * u.adjoint())).collect() }
    }
}

fn tr_prod(a: &Operator, b: &Operator) -> f64 {
    (a * b).trace().re
}

fn check_pair(prep: &DeviceOperatorSet, meas: &DeviceOperatorSet) -> Result<()> {
    if prep.role != Role::Preparation || meas.role != Role::Measurement {
        return Err(Error::InvalidConfig("expected (preparation, measurement) sets".into()));
    }
    if prep.dimension != meas.dimension {
        return Err(Error::DimensionMismatch(format!(
            "preparation dimension {} vs measurement dimension {}",
            prep.dimension, meas.dimension
        )));
    }
    Ok(())
}

/// `Tr[Λ_i Γ_j] / Tr[Λ Γ]`.
pub fn joint_probability(prep: &DeviceOperatorSet, meas: &DeviceOperatorSet, i: &str, j: &str) -> Result<f64> {
    check_pair(prep, meas)?;
    let denom = tr_prod(&prep.total(), &meas.total());
    if denom.abs() < 1e-300 {
        return Err(Error::DegenerateDevicePair);
    }
    Ok(tr_prod(prep.get(i)?, meas.get(j)?) / denom)
}

/// Predictive: `Pr(j|i) = Tr[Λ_i Γ_j]/Tr[Λ_i Γ]` with `given = i`, `query = j`.
/// Retrodictive: `Pr(i|j) = Tr[Λ_i Γ_j]/Tr[Λ Γ_j]` with `given = j`, `query = i`.
pub fn conditional_probability(
    prep: &DeviceOperatorSet,
    meas: &DeviceOperatorSet,
    direction: Direction,
    given: &str,
    query: &str,
) -> Result<f64> {
    check_pair(prep, meas)?;
    let (num, denom) = match direction {
        Direction::Predictive => {
            let li = prep.get(given)?;
            (tr_prod(li, meas.get(query)?), tr_prod(li, &meas.total()))
        }
        Direction::Retrodictive => {
            let gj = meas.get(given)?;
            (tr_prod(prep.get(query)?, gj), tr_prod(&prep.total(), gj))
        }
    };
    if denom.abs() < 1e-300 {
        return Err(Error::ZeroProbabilityCondition);
    }
    Ok(num / denom)
}

/// Which factor of `H_a ⊗ H_b` survives a reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Contracts a two-subsystem operator with an operator on the other factor.
///
/// Keeping `B` gives `Tr_a[J (P ⊗ 1_b)]`; keeping `A` gives `Tr_b[J (1_a ⊗ P)]`.
/// Composite indices are `i_a * d_b + i_b`. The result is unnormalized.
pub fn reduce_composite(joint_op: &Operator, partner_op: &Operator, dims: (usize, usize), keep: Subsystem) -> Result<Operator> {
    let (da, db) = dims;
    if joint_op.nrows() != da * db || joint_op.ncols() != da * db {
        return Err(Error::DimensionMismatch(format!("joint operator is {}x{}, expected {}", joint_op.nrows(), joint_op.ncols(), da * db)));
    }
    let partner_dim = if keep == Subsystem::B { da } else { db };
    if partner_op.nrows() != partner_dim || partner_op.ncols() != partner_dim {
        return Err(Error::DimensionMismatch(format!(
            "partner operator is {}x{}, expected {partner_dim}",
            partner_op.nrows(),
            partner_op.ncols()
        )));
    }
    let idx = |a: usize, b: usize| a * db + b;
    Ok(match keep {
        Subsystem::B => Operator::from_fn(db, db, |b1, b2| {
            let mut acc = Complex64::new(0.0, 0.0);
            for a1 in 0..da {
                for a2 in 0..da {
                    acc += joint_op[(idx(a1, b1), idx(a2, b2))] * partner_op[(a2, a1)];
                }
            }
            acc
        }),
        Subsystem::A => Operator::from_fn(da, da, |a1, a2| {
            let mut acc = Complex64::new(0.0, 0.0);
            for b1 in 0..db {
                for b2 in 0..db {
                    acc += joint_op[(idx(a1, b1), idx(a2, b2))] * partner_op[(b2, b1)];
                }
            }
            acc
        }),
    })
}

/// Conditional preparation operator for subsystem `b` after outcome `j` on
/// `a`: `Tr_a[Λ^{ab}_i Γ^a_j] / Tr_ab[Λ^{ab} Γ^a]`. Its trace is the a-priori
/// probability of the joint event `(i, j)`.
pub fn conditioned_preparation(
    joint_prep_i: &Operator,
    joint_prep_total: &Operator,
    meas_a_j: &Operator,
    meas_a_total: &Operator,
    dims: (usize, usize),
) -> Result<Operator> {
    let num = reduce_composite(joint_prep_i, meas_a_j, dims, Subsystem::B)?;
    let denom = reduce_composite(joint_prep_total, meas_a_total, dims, Subsystem::B)?.trace().re;
    if denom.abs() < 1e-300 {
        return Err(Error::DegenerateDevicePair);
    }
    Ok(num / Complex64::new(denom, 0.0))
}

/// Conditional measurement operator for subsystem `b` after preparing `a` in
/// `Λ^a_j` and recording the joint outcome `k`:
/// `Tr_a[Λ^a_j Γ^{ab}_k] / Tr_ab[Λ^a Γ^{ab}]`.
pub fn conditioned_measurement(
    prep_a_j: &Operator,
    prep_a_total: &Operator,
    joint_meas_k: &Operator,
    joint_meas_total: &Operator,
    dims: (usize, usize),
) -> Result<Operator> {
    let num = reduce_composite(joint_meas_k, prep_a_j, dims, Subsystem::B)?;
    let denom = reduce_composite(joint_meas_total, prep_a_total, dims, Subsystem::B)?.trace().re;
    if denom.abs() < 1e-300 {
        return Err(Error::DegenerateDevicePair);
    }
    Ok(num / Complex64::new(denom, 0.0))
}

/// Kronecker product `A ⊗ B` in the `i_a * d_b + i_b` ordering.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    a.kronecker(b)
}

/// Projector `|v⟩⟨v|`.
pub fn projector(v: &[Complex64]) -> Operator {
    Operator::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_sets_give_uniform_joint() {
        let id = Operator::identity(2, 2);
        let prep = DeviceOperatorSet::new(Role::Preparation, 2).with("a", id.clone()).unwrap().with("b", id.clone()).unwrap();
        let meas = DeviceOperatorSet::new(Role::Measurement, 2).with("x", id.clone()).unwrap().with("y", id).unwrap();
        for i in ["a", "b"] {
            for j in ["x", "y"] {
                assert!((joint_probability(&prep, &meas, i, j).unwrap() - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spin_half_retrodiction() {
        let up = projector(&[c(1.0), c(0.0)]);
        let down = projector(&[c(0.0), c(1.0)]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = projector(&[c(s), c(s * 0.6)]);
        let minus = Operator::identity(2, 2) - &plus;
        let prep = DeviceOperatorSet::new(Role::Preparation, 2).with("up", up.clone()).unwrap().with("down", down).unwrap();
        let meas = DeviceOperatorSet::new(Role::Measurement, 2).with("plus", plus.clone()).unwrap().with("minus", minus).unwrap();
        let p = conditional_probability(&prep, &meas, Direction::Retrodictive, "plus", "up").unwrap();
        let expect = (&up * &plus).trace().re / plus.trace().re;
        assert!((p - expect).abs() < 1e-14);
    }

    #[test]
    fn product_reduction_factorizes() {
        let a = projector(&[c(0.6), Complex64::new(0.0, 0.8)]);
        let b = Operator::from_fn(3, 3, |i, j| c((i + 2 * j) as f64 + 1.0));
        let p = projector(&[c(0.5), c(0.5)]) * c(2.0);
        let r = reduce_composite(&kron(&a, &b), &p, (2, 3), Subsystem::B).unwrap();
        let expect = &b * (&a * &p).trace();
        assert!((r - expect).norm() < 1e-13);
    }
}
