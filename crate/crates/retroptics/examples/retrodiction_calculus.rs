//! Predictive and retrodictive conditional probabilities for a qubit
//! prepared in a Z eigenstate and measured along a tilted axis.

use num_complex::Complex64;
use retroptics::pmcalc::{conditional_probability, joint_probability, projector, DeviceOperatorSet, Direction, Operator, Role};

fn main() -> retroptics::Result<()> {
    let c = |x: f64| Complex64::new(x, 0.0);
    let (s, t) = (0.3f64.cos(), 0.3f64.sin());
    let plus = projector(&[c(s), c(t)]);
    let minus = Operator::identity(2, 2) - &plus;
    // A biased source: "up" prepared three times as often as "down".
    let prep = DeviceOperatorSet::new(Role::Preparation, 2)
        .with("up", projector(&[c(1.0), c(0.0)]) * c(0.75))?
        .with("down", projector(&[c(0.0), c(1.0)]) * c(0.25))?;
    let meas = DeviceOperatorSet::new(Role::Measurement, 2).with("+", plus)?.with("-", minus)?;
    prep.validate()?;
    meas.validate()?;
    for i in ["up", "down"] {
        for j in ["+", "-"] {
            println!(
                "P({i}, {j}) = {:.4}   P({j} | {i}) = {:.4}   P({i} | {j}) = {:.4}",
                joint_probability(&prep, &meas, i, j)?,
                conditional_probability(&prep, &meas, Direction::Predictive, i, j)?,
                conditional_probability(&prep, &meas, Direction::Retrodictive, j, i)?,
            );
        }
    }
    Ok(())
}
