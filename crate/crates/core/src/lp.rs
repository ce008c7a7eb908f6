//! Exact rational linear feasibility over nonnegative variables.
//!
//! Systems are conjunctions of rows `a . x <= b` with `x >= 0` implicit.
//! Small systems are decided by Fourier-Motzkin elimination; larger ones,
//! and every call that needs a witness point, run a phase-1 simplex with
//! Bland's rule. All arithmetic is arbitrary-precision rational, so answers
//! are exact.

use crate::value::Rat;
use num_traits::{One, Signed, Zero};

/// Variable count above which feasibility switches from Fourier-Motzkin
/// elimination to the simplex.
const FM_MAX_VARS: usize = 4;

/// A conjunction of linear constraints `a . x <= b` over `x >= 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearSystem {
    nvars: usize,
    rows: Vec<(Vec<Rat>, Rat)>,
}

impl LinearSystem {
    pub fn new(nvars: usize) -> LinearSystem {
        LinearSystem {
            nvars,
            rows: Vec::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// Adds `coeffs . x <= bound`.
    pub fn add_le(&mut self, coeffs: Vec<Rat>, bound: Rat) {
        assert_eq!(coeffs.len(), self.nvars, "constraint arity mismatch");
        self.rows.push((coeffs, bound));
    }

    /// Adds `coeffs . x >= bound`.
    pub fn add_ge(&mut self, coeffs: Vec<Rat>, bound: Rat) {
        let neg: Vec<Rat> = coeffs.into_iter().map(|c| -c).collect();
        self.add_le(neg, -bound);
    }

    /// Adds `coeffs . x = bound`.
    pub fn add_eq(&mut self, coeffs: Vec<Rat>, bound: Rat) {
        self.add_le(coeffs.clone(), bound.clone());
        self.add_ge(coeffs, bound);
    }

    /// Decides feasibility, using Fourier-Motzkin in low dimension and the
    /// simplex otherwise.
    pub fn is_feasible(&self) -> bool {
        if self.nvars <= FM_MAX_VARS {
            fourier_motzkin(self)
        } else {
            simplex_point(self).is_some()
        }
    }

    /// Finds a feasible point, if one exists.
    pub fn find_point(&self) -> Option<Vec<Rat>> {
        simplex_point(self)
    }
}

/// Scales a row so its first nonzero coefficient has magnitude 1, for
/// duplicate detection.
fn normalize_row(row: &mut (Vec<Rat>, Rat)) {
    if let Some(pivot) = row.0.iter().find(|c| !c.is_zero()).cloned() {
        let scale = pivot.abs();
        for c in row.0.iter_mut() {
            *c /= &scale;
        }
        row.1 /= &scale;
    }
}

/// Drops constant and duplicate rows; `None` signals a contradiction.
fn prune_rows(rows: Vec<(Vec<Rat>, Rat)>) -> Option<Vec<(Vec<Rat>, Rat)>> {
    let mut pruned: Vec<(Vec<Rat>, Rat)> = Vec::new();
    for row in rows {
        if row.0.iter().all(|c| c.is_zero()) {
            if row.1.is_negative() {
                return None;
            }
        } else if !pruned.contains(&row) {
            pruned.push(row);
        }
    }
    Some(pruned)
}

fn fourier_motzkin(system: &LinearSystem) -> bool {
    // Nonnegativity becomes explicit rows so elimination sees it.
    let mut rows: Vec<(Vec<Rat>, Rat)> = system.rows.clone();
    for row in rows.iter_mut() {
        normalize_row(row);
    }
    for j in 0..system.nvars {
        let mut coeffs = vec![Rat::zero(); system.nvars];
        coeffs[j] = -Rat::one();
        rows.push((coeffs, Rat::zero()));
    }
    let Some(mut rows) = prune_rows(rows) else {
        return false;
    };

    for var in 0..system.nvars {
        let mut kept: Vec<(Vec<Rat>, Rat)> = Vec::new();
        let mut lower: Vec<(Vec<Rat>, Rat)> = Vec::new();
        let mut upper: Vec<(Vec<Rat>, Rat)> = Vec::new();
        for row in rows {
            let c = &row.0[var];
            if c.is_zero() {
                kept.push(row);
            } else if c.is_positive() {
                upper.push(row);
            } else {
                lower.push(row);
            }
        }
        for up in &upper {
            for lo in &lower {
                // Scale so the eliminated coefficients cancel; both factors
                // are positive, preserving the inequality direction.
                let a = up.0[var].clone();
                let b = -lo.0[var].clone();
                let coeffs: Vec<Rat> = up
                    .0
                    .iter()
                    .zip(&lo.0)
                    .map(|(u, l)| u * &b + l * &a)
                    .collect();
                let bound = &up.1 * &b + &lo.1 * &a;
                let mut row = (coeffs, bound);
                normalize_row(&mut row);
                kept.push(row);
            }
        }
        match prune_rows(kept) {
            None => return false,
            Some(next) => rows = next,
        }
        if rows.is_empty() {
            return true;
        }
    }
    true
}

/// Phase-1 simplex: feasibility of `A x <= b, x >= 0` with an explicit
/// witness point.
fn simplex_point(system: &LinearSystem) -> Option<Vec<Rat>> {
    let nvars = system.nvars;
    let m = system.rows.len();
    if m == 0 {
        return Some(vec![Rat::zero(); nvars]);
    }

    let flipped: Vec<bool> = system.rows.iter().map(|(_, b)| b.is_negative()).collect();
    let n_art = flipped.iter().filter(|&&f| f).count();
    let ncols = nvars + m + n_art;

    let mut tableau: Vec<Vec<Rat>> = vec![vec![Rat::zero(); ncols]; m];
    let mut rhs: Vec<Rat> = Vec::with_capacity(m);
    let mut basic: Vec<usize> = Vec::with_capacity(m);

    let mut art_next = nvars + m;
    for (i, (coeffs, bound)) in system.rows.iter().enumerate() {
        let flip = flipped[i];
        for (j, c) in coeffs.iter().enumerate() {
            tableau[i][j] = if flip { -c } else { c.clone() };
        }
        // Slack for satisfied rows, surplus plus artificial for flipped ones.
        tableau[i][nvars + i] = if flip { -Rat::one() } else { Rat::one() };
        if flip {
            tableau[i][art_next] = Rat::one();
            basic.push(art_next);
            art_next += 1;
        } else {
            basic.push(nvars + i);
        }
        rhs.push(bound.abs());
    }

    // Reduced costs for minimizing the sum of artificials.
    let mut reduced: Vec<Rat> = vec![Rat::zero(); ncols];
    reduced[nvars + m..].fill(Rat::one());
    let mut objective = Rat::zero();
    for i in 0..m {
        if flipped[i] {
            for j in 0..ncols {
                let delta = tableau[i][j].clone();
                reduced[j] -= delta;
            }
            objective += &rhs[i];
        }
    }

    loop {
        let entering = (0..ncols).find(|&j| reduced[j].is_negative());
        let Some(e) = entering else { break };

        let mut leave: Option<usize> = None;
        let mut best: Option<Rat> = None;
        for i in 0..m {
            if tableau[i][e].is_positive() {
                let ratio = &rhs[i] / &tableau[i][e];
                let better = match &best {
                    None => true,
                    Some(current) => {
                        ratio < *current || (ratio == *current && basic[i] < basic[leave.unwrap()])
                    }
                };
                if better {
                    best = Some(ratio);
                    leave = Some(i);
                }
            }
        }
        let l = leave.expect("phase-1 objective is bounded, a pivot row must exist");

        let pivot = tableau[l][e].clone();
        for cell in &mut tableau[l] {
            *cell /= &pivot;
        }
        rhs[l] /= &pivot;
        let pivot_row = std::mem::take(&mut tableau[l]);
        let pivot_rhs = rhs[l].clone();
        for (i, row) in tableau.iter_mut().enumerate() {
            if i == l || row[e].is_zero() {
                continue;
            }
            let factor = row[e].clone();
            for (cell, p) in row.iter_mut().zip(&pivot_row) {
                let delta = &factor * p;
                *cell -= delta;
            }
            let delta = &factor * &pivot_rhs;
            rhs[i] -= delta;
        }
        tableau[l] = pivot_row;
        if !reduced[e].is_zero() {
            let factor = reduced[e].clone();
            for (cost, p) in reduced.iter_mut().zip(&tableau[l]) {
                let delta = &factor * p;
                *cost -= delta;
            }
            // The entering variable takes value rhs[l], moving the objective
            // by its (negative) reduced cost times that amount.
            let delta = &factor * &rhs[l];
            objective += delta;
        }
        basic[l] = e;
    }

    if !objective.is_zero() {
        return None;
    }
    let mut point = vec![Rat::zero(); nvars];
    for (i, &b) in basic.iter().enumerate() {
        if b < nvars {
            point[b] = rhs[i].clone();
        }
    }
    Some(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::{rat, rat_int};

    fn system(nvars: usize, rows: &[(&[i64], i64)]) -> LinearSystem {
        let mut sys = LinearSystem::new(nvars);
        for (coeffs, bound) in rows {
            sys.add_le(coeffs.iter().map(|&c| rat_int(c)).collect(), rat_int(*bound));
        }
        sys
    }

    fn check_point(sys: &LinearSystem, point: &[Rat]) {
        for (coeffs, bound) in &sys.rows {
            let lhs: Rat = coeffs.iter().zip(point).map(|(c, x)| c * x).sum();
            assert!(lhs <= *bound, "violated row in witness check");
        }
        assert!(point.iter().all(|x| !x.is_negative()));
    }

    #[test]
    fn trivial_systems() {
        assert!(system(2, &[]).is_feasible());
        assert!(system(0, &[(&[], 1)]).is_feasible());
        assert!(!system(0, &[(&[], -1)]).is_feasible());
    }

    #[test]
    fn simple_feasible_and_infeasible() {
        // x + y <= 1, x >= 1/2 is feasible; adding y >= 1 is not.
        let mut sys = LinearSystem::new(2);
        sys.add_le(vec![rat_int(1), rat_int(1)], rat_int(1));
        sys.add_ge(vec![rat_int(1), rat_int(0)], rat(1, 2));
        assert!(sys.is_feasible());
        let point = sys.find_point().unwrap();
        check_point(&sys, &point);

        sys.add_ge(vec![rat_int(0), rat_int(1)], rat_int(1));
        assert!(!sys.is_feasible());
        assert!(sys.find_point().is_none());
    }

    #[test]
    fn equality_rows_pin_solutions() {
        let mut sys = LinearSystem::new(3);
        sys.add_eq(vec![rat_int(1), rat_int(1), rat_int(1)], rat_int(1));
        sys.add_ge(vec![rat_int(1), rat_int(0), rat_int(0)], rat(1, 3));
        sys.add_le(vec![rat_int(0), rat_int(0), rat_int(1)], rat(1, 4));
        let point = sys.find_point().unwrap();
        check_point(&sys, &point);
        let total: Rat = point.iter().sum();
        assert_eq!(total, rat_int(1));
    }

    #[test]
    fn negative_bounds_need_artificials() {
        // x - y <= -2 with x, y >= 0 forces y >= 2.
        let mut sys = LinearSystem::new(2);
        sys.add_le(vec![rat_int(1), rat_int(-1)], rat_int(-2));
        let point = sys.find_point().unwrap();
        check_point(&sys, &point);
    }

    #[test]
    fn fm_and_simplex_agree_on_random_systems() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let nvars = rng.gen_range(1..=4);
            let nrows = rng.gen_range(1..=6);
            let mut sys = LinearSystem::new(nvars);
            for _ in 0..nrows {
                let coeffs: Vec<Rat> =
                    (0..nvars).map(|_| rat_int(rng.gen_range(-3..=3))).collect();
                sys.add_le(coeffs, rat_int(rng.gen_range(-2..=2)));
            }
            let fm = fourier_motzkin(&sys);
            let sx = simplex_point(&sys);
            assert_eq!(fm, sx.is_some(), "solver disagreement on {sys:?}");
            if let Some(point) = sx {
                check_point(&sys, &point);
            }
        }
    }

    #[test]
    fn homogeneous_cone_refutation() {
        // In log coordinates v = -u >= 0: u <= 0 and u <= -1 is feasible,
        // while u <= -1 and -u <= -1 is not.
        let mut sys = LinearSystem::new(1);
        sys.add_le(vec![rat_int(-1)], rat_int(-1));
        assert!(sys.is_feasible());
        sys.add_le(vec![rat_int(1)], rat_int(-1));
        assert!(!sys.is_feasible());
    }
}
