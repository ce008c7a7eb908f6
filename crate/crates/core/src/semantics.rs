//! Direct evaluation of product formulas on points of the unit cube.
//!
//! Strong conjunction multiplies, implication divides (truncated at 1), meet
//! and join take pointwise minimum and maximum. This evaluator recurses over
//! the AST and serves as the ground-truth oracle for the cell-wise engine.

use crate::syntax::Formula;
use crate::value::Rat;
use num_traits::{One, Zero};

/// Evaluates a formula at a point with exact rational coordinates in [0,1].
///
/// Panics if the point is shorter than the largest variable index requires.
pub fn eval_formula(f: &Formula, point: &[Rat]) -> Rat {
    match f {
        Formula::Bot => Rat::zero(),
        Formula::Top => Rat::one(),
        Formula::Var(i) => point[*i].clone(),
        Formula::Conj(a, b) => eval_formula(a, point) * eval_formula(b, point),
        Formula::Impl(a, b) => {
            let x = eval_formula(a, point);
            let y = eval_formula(b, point);
            if x <= y {
                Rat::one()
            } else {
                y / x
            }
        }
        Formula::Meet(a, b) => eval_formula(a, point).min(eval_formula(b, point)),
        Formula::Join(a, b) => eval_formula(a, point).max(eval_formula(b, point)),
    }
}

/// Evaluates a formula at a point with `f64` coordinates in [0,1].
pub fn eval_formula_f64(f: &Formula, point: &[f64]) -> f64 {
    match f {
        Formula::Bot => 0.0,
        Formula::Top => 1.0,
        Formula::Var(i) => point[*i],
        Formula::Conj(a, b) => eval_formula_f64(a, point) * eval_formula_f64(b, point),
        Formula::Impl(a, b) => {
            let x = eval_formula_f64(a, point);
            let y = eval_formula_f64(b, point);
            if x <= y {
                1.0
            } else {
                y / x
            }
        }
        Formula::Meet(a, b) => eval_formula_f64(a, point).min(eval_formula_f64(b, point)),
        Formula::Join(a, b) => eval_formula_f64(a, point).max(eval_formula_f64(b, point)),
    }
}
