//! Cell-wise piecewise-monomial representation of product formulas.
//!
//! Restricted to one cell, a formula either vanishes identically or is a
//! strictly positive min-max combination of monomials in the positive
//! coordinates. Writing `u_j = log t_j <= 0` per positive coordinate turns
//! monomials into homogeneous integer linear forms, strong conjunction into
//! addition, meet and join into min and max, and implication into
//! `min(0, g - f)`. Tautology then reduces to exact linear feasibility over
//! the cone `u <= 0`: by homogeneity, a min-branch can dip below 0 somewhere
//! iff the system `{u <= 0, L <= -1 for all its forms}` is feasible.

use crate::cells::{atom_formula, cell_of_point, enumerate_cells, CellIndex};
use crate::lp::LinearSystem;
use crate::syntax::Formula;
use crate::value::{rat_pow, Rat};
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// A homogeneous integer linear form over the positive coordinates of a
/// cell, in log space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinForm {
    coeffs: Vec<BigInt>,
}

impl LinForm {
    fn zero(nvars: usize) -> LinForm {
        LinForm {
            coeffs: vec![BigInt::zero(); nvars],
        }
    }

    fn unit(nvars: usize, var: usize) -> LinForm {
        let mut coeffs = vec![BigInt::zero(); nvars];
        coeffs[var] = BigInt::one();
        LinForm { coeffs }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    fn add(&self, other: &LinForm) -> LinForm {
        LinForm {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    fn neg(&self) -> LinForm {
        LinForm {
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    /// Whether `self >= other` everywhere on the cone `u <= 0`, which for
    /// homogeneous forms is a coefficient-wise comparison.
    fn dominates(&self, other: &LinForm) -> bool {
        self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| a <= b)
    }

    /// Whether the form is nonnegative everywhere on the cone.
    fn nonnegative_on_cone(&self) -> bool {
        self.coeffs.iter().all(|c| *c <= BigInt::zero())
    }

    /// The monomial value of the form at positive coordinates `t`.
    fn eval(&self, t: &[Rat]) -> Rat {
        let mut acc = Rat::one();
        for (c, x) in self.coeffs.iter().zip(t) {
            if !c.is_zero() {
                acc *= rat_pow(x, c);
            }
        }
        acc
    }
}

/// Minimum over branches of the maximum over each branch's forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinMaxTerm {
    nvars: usize,
    branches: Vec<Vec<LinForm>>,
}

/// Number of min-branches above which the exact LP branch-domination test
/// joins the cheap coefficient test during pruning.
const LP_PRUNE_THRESHOLD: usize = 6;

impl MinMaxTerm {
    fn constant_one(nvars: usize) -> MinMaxTerm {
        MinMaxTerm {
            nvars,
            branches: vec![vec![LinForm::zero(nvars)]],
        }
    }

    fn variable(nvars: usize, var: usize) -> MinMaxTerm {
        MinMaxTerm {
            nvars,
            branches: vec![vec![LinForm::unit(nvars, var)]],
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn branches(&self) -> &[Vec<LinForm>] {
        &self.branches
    }

    /// The represented value at positive coordinates `t`, as a monomial
    /// min-max; exponentials are monotone, so log-space order transfers.
    pub fn eval(&self, t: &[Rat]) -> Rat {
        self.branches
            .iter()
            .map(|branch| {
                branch
                    .iter()
                    .map(|form| form.eval(t))
                    .max()
                    .expect("branches are never empty")
            })
            .min()
            .expect("terms have at least one branch")
    }

    fn add(&self, other: &MinMaxTerm) -> MinMaxTerm {
        let mut branches = Vec::with_capacity(self.branches.len() * other.branches.len());
        for a in &self.branches {
            for b in &other.branches {
                let mut forms = Vec::with_capacity(a.len() * b.len());
                for fa in a {
                    for fb in b {
                        let sum = fa.add(fb);
                        if !forms.contains(&sum) {
                            forms.push(sum);
                        }
                    }
                }
                branches.push(forms);
            }
        }
        MinMaxTerm {
            nvars: self.nvars,
            branches,
        }
        .pruned()
    }

    fn min_with(&self, other: &MinMaxTerm) -> MinMaxTerm {
        let mut branches = self.branches.clone();
        branches.extend(other.branches.iter().cloned());
        MinMaxTerm {
            nvars: self.nvars,
            branches,
        }
        .pruned()
    }

    fn max_with(&self, other: &MinMaxTerm) -> MinMaxTerm {
        let mut branches = Vec::with_capacity(self.branches.len() * other.branches.len());
        for a in &self.branches {
            for b in &other.branches {
                let mut forms = a.clone();
                for form in b {
                    if !forms.contains(form) {
                        forms.push(form.clone());
                    }
                }
                branches.push(forms);
            }
        }
        MinMaxTerm {
            nvars: self.nvars,
            branches,
        }
        .pruned()
    }

    /// Negation turns min-max into max-min; distributing over choice
    /// functions restores min-max form.
    fn neg(&self) -> MinMaxTerm {
        let negated: Vec<Vec<LinForm>> = self
            .branches
            .iter()
            .map(|branch| branch.iter().map(LinForm::neg).collect())
            .collect();
        let mut branches: Vec<Vec<LinForm>> = vec![Vec::new()];
        for group in &negated {
            let mut next = Vec::with_capacity(branches.len() * group.len());
            for partial in &branches {
                for form in group {
                    let mut extended = partial.clone();
                    if !extended.contains(form) {
                        extended.push(form.clone());
                    }
                    if !next.contains(&extended) {
                        next.push(extended);
                    }
                }
            }
            branches = next;
        }
        MinMaxTerm {
            nvars: self.nvars,
            branches,
        }
        .pruned()
    }

    fn min_with_zero(&self) -> MinMaxTerm {
        let mut branches = self.branches.clone();
        branches.push(vec![LinForm::zero(self.nvars)]);
        MinMaxTerm {
            nvars: self.nvars,
            branches,
        }
        .pruned()
    }

    fn pruned(mut self) -> MinMaxTerm {
        for branch in self.branches.iter_mut() {
            prune_forms(branch);
            branch.sort();
        }
        prune_branches(&mut self.branches, self.nvars);
        self
    }

    /// Whether the term is 0 everywhere on the cone: every branch maximum
    /// must be nonnegative, which by homogeneity means each branch's
    /// refutation system `{u <= 0, all forms <= -1}` is infeasible.
    pub fn is_identically_zero_on_cone(&self) -> bool {
        self.branches
            .iter()
            .all(|branch| !branch_refutable(branch, self.nvars))
    }

    /// Whether `self <= other` everywhere on the cone `u <= 0`.
    ///
    /// Checked one target branch at a time: a violation of
    /// `min-max(self) <= max(T)` picks one exceeding form per branch of
    /// `self`, so the choices are enumerated with infeasible prefixes
    /// pruned; by homogeneity a strict gap can be scaled up to 1.
    pub fn le_on_cone(&self, other: &MinMaxTerm) -> bool {
        assert_eq!(self.nvars, other.nvars, "cone dimension mismatch");
        other.branches.iter().all(|target| {
            let cheap = self.branches.iter().any(|branch| {
                branch
                    .iter()
                    .all(|form| target.iter().any(|t| t.dominates(form)))
            });
            cheap || !exceeds_somewhere(&self.branches, target, self.nvars)
        })
    }
}

/// Whether some cone point keeps every branch maximum strictly above the
/// target branch maximum.
fn exceeds_somewhere(branches: &[Vec<LinForm>], target: &[LinForm], nvars: usize) -> bool {
    fn extend(
        branches: &[Vec<LinForm>],
        target: &[LinForm],
        level: usize,
        system: &LinearSystem,
    ) -> bool {
        if level == branches.len() {
            return true;
        }
        for form in &branches[level] {
            let mut deeper = system.clone();
            for t in target {
                // `form(u) - t(u) >= 1` in v = -u >= 0 coordinates.
                let coeffs: Vec<Rat> = form
                    .coeffs
                    .iter()
                    .zip(&t.coeffs)
                    .map(|(cf, ct)| Rat::from_integer(ct - cf))
                    .collect();
                deeper.add_ge(coeffs, Rat::one());
            }
            if deeper.is_feasible() && extend(branches, target, level + 1, &deeper) {
                return true;
            }
        }
        false
    }
    extend(branches, target, 0, &LinearSystem::new(nvars))
}

/// Whether some cone point pushes every form of the branch below zero.
fn branch_refutable(branch: &[LinForm], nvars: usize) -> bool {
    if branch.iter().any(LinForm::nonnegative_on_cone) {
        return false;
    }
    let mut system = LinearSystem::new(nvars);
    for form in branch {
        // In v = -u >= 0 coordinates, `form(u) <= -1` reads `-form(v) <= -1`.
        let coeffs: Vec<Rat> = form.coeffs.iter().map(|c| -Rat::from_integer(c.clone())).collect();
        system.add_le(coeffs, -Rat::one());
    }
    system.is_feasible()
}

fn prune_forms(forms: &mut Vec<LinForm>) {
    let mut unique: Vec<LinForm> = Vec::with_capacity(forms.len());
    for form in forms.drain(..) {
        if !unique.contains(&form) {
            unique.push(form);
        }
    }
    let kept: Vec<LinForm> = unique
        .iter()
        .filter(|f| !unique.iter().any(|other| *other != **f && other.dominates(f)))
        .cloned()
        .collect();
    *forms = kept;
}

/// Whether `max over a <= max over b` everywhere on the cone, by the cheap
/// coefficient test alone or with the exact LP test.
fn branch_le(a: &[LinForm], b: &[LinForm], nvars: usize, use_lp: bool) -> bool {
    let cheap = a
        .iter()
        .all(|fa| b.iter().any(|fb| fb.dominates(fa)));
    if cheap || !use_lp {
        return cheap;
    }
    // Exact: no cone point lets some form of `a` exceed all forms of `b`.
    a.iter().all(|fa| {
        let mut system = LinearSystem::new(nvars);
        for fb in b {
            // `fb(u) - fa(u) <= -1` in v = -u >= 0 coordinates.
            let coeffs: Vec<Rat> = fa
                .coeffs
                .iter()
                .zip(&fb.coeffs)
                .map(|(ca, cb)| Rat::from_integer(ca - cb))
                .collect();
            system.add_le(coeffs, -Rat::one());
        }
        !system.is_feasible()
    })
}

fn prune_branches(branches: &mut Vec<Vec<LinForm>>, nvars: usize) {
    let mut unique: Vec<Vec<LinForm>> = Vec::with_capacity(branches.len());
    for branch in branches.drain(..) {
        if !unique.contains(&branch) {
            unique.push(branch);
        }
    }
    let use_lp = unique.len() > LP_PRUNE_THRESHOLD;
    let n = unique.len();
    let mut le = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                le[i][j] = branch_le(&unique[i], &unique[j], nvars, use_lp);
            }
        }
    }
    let kept: Vec<Vec<LinForm>> = (0..n)
        .filter(|&i| {
            !(0..n).any(|j| {
                j != i && le[j][i] && (!le[i][j] || j < i)
            })
        })
        .map(|i| unique[i].clone())
        .collect();
    *branches = kept;
}

/// A formula restricted to one cell: identically zero, or a strictly
/// positive piecewise monomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CellFunc {
    Zero,
    Pwl(MinMaxTerm),
}

impl CellFunc {
    pub fn is_zero(&self) -> bool {
        matches!(self, CellFunc::Zero)
    }
}

/// A formula as a family of cell restrictions, indexed by cell rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellwiseFunc {
    arity: usize,
    cells: Vec<CellFunc>,
}

impl CellwiseFunc {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn cell(&self, cell: &CellIndex) -> &CellFunc {
        assert_eq!(cell.arity(), self.arity, "cell arity mismatch");
        &self.cells[cell.rank()]
    }

    pub fn cells(&self) -> &[CellFunc] {
        &self.cells
    }

    /// Whether the formula vanishes on every cell.
    pub fn is_identically_zero(&self) -> bool {
        self.cells.iter().all(CellFunc::is_zero)
    }
}

/// Lowers a formula on a single cell.
pub fn lower_on_cell(f: &Formula, cell: &CellIndex) -> CellFunc {
    let positive = cell.positive_coords();
    let nvars = positive.len();
    let local: Vec<Option<usize>> = {
        let mut map = vec![None; cell.arity()];
        for (j, &i) in positive.iter().enumerate() {
            map[i] = Some(j);
        }
        map
    };
    lower_rec(f, nvars, &local)
}

fn lower_rec(f: &Formula, nvars: usize, local: &[Option<usize>]) -> CellFunc {
    match f {
        Formula::Bot => CellFunc::Zero,
        Formula::Top => CellFunc::Pwl(MinMaxTerm::constant_one(nvars)),
        Formula::Var(i) => match local[*i] {
            None => CellFunc::Zero,
            Some(j) => CellFunc::Pwl(MinMaxTerm::variable(nvars, j)),
        },
        Formula::Conj(a, b) => match (lower_rec(a, nvars, local), lower_rec(b, nvars, local)) {
            (CellFunc::Zero, _) | (_, CellFunc::Zero) => CellFunc::Zero,
            (CellFunc::Pwl(ta), CellFunc::Pwl(tb)) => CellFunc::Pwl(ta.add(&tb)),
        },
        Formula::Meet(a, b) => match (lower_rec(a, nvars, local), lower_rec(b, nvars, local)) {
            (CellFunc::Zero, _) | (_, CellFunc::Zero) => CellFunc::Zero,
            (CellFunc::Pwl(ta), CellFunc::Pwl(tb)) => CellFunc::Pwl(ta.min_with(&tb)),
        },
        Formula::Join(a, b) => match (lower_rec(a, nvars, local), lower_rec(b, nvars, local)) {
            (CellFunc::Zero, other) | (other, CellFunc::Zero) => other,
            (CellFunc::Pwl(ta), CellFunc::Pwl(tb)) => CellFunc::Pwl(ta.max_with(&tb)),
        },
        Formula::Impl(a, b) => match (lower_rec(a, nvars, local), lower_rec(b, nvars, local)) {
            (CellFunc::Zero, _) => CellFunc::Pwl(MinMaxTerm::constant_one(nvars)),
            (CellFunc::Pwl(_), CellFunc::Zero) => CellFunc::Zero,
            (CellFunc::Pwl(ta), CellFunc::Pwl(tb)) => {
                CellFunc::Pwl(tb.add(&ta.neg()).min_with_zero())
            }
        },
    }
}

/// Lowers a formula on every cell of the cube.
pub fn lower(f: &Formula, arity: usize) -> CellwiseFunc {
    assert!(f.fits_arity(arity), "formula uses variables beyond arity");
    let cells = enumerate_cells(arity)
        .iter()
        .map(|cell| lower_on_cell(f, cell))
        .collect();
    CellwiseFunc { arity, cells }
}

/// Evaluates a lowered formula at a point, exactly.
pub fn eval_cellwise(f: &CellwiseFunc, point: &[Rat]) -> Rat {
    assert_eq!(point.len(), f.arity, "point arity mismatch");
    let cell = cell_of_point(point);
    match &f.cells[cell.rank()] {
        CellFunc::Zero => Rat::zero(),
        CellFunc::Pwl(term) => {
            let positive: Vec<Rat> = point.iter().filter(|t| !t.is_zero()).cloned().collect();
            term.eval(&positive)
        }
    }
}

/// Decides whether a formula is identically 1 on the cube.
pub fn is_tautology(f: &Formula, arity: usize) -> bool {
    assert!(f.fits_arity(arity), "formula uses variables beyond arity");
    enumerate_cells(arity).iter().all(|cell| {
        match lower_on_cell(f, cell) {
            CellFunc::Zero => false,
            CellFunc::Pwl(term) => term.is_identically_zero_on_cone(),
        }
    })
}

/// Whether `f <= g` pointwise on the cube.
pub fn implies(f: &Formula, g: &Formula, arity: usize) -> bool {
    cellwise_le(&lower(f, arity), &lower(g, arity))
}

/// Whether `f <= g` pointwise, both already lowered; cheaper than lowering
/// the implication when the operands are reused across comparisons.
pub fn cellwise_le(f: &CellwiseFunc, g: &CellwiseFunc) -> bool {
    assert_eq!(f.arity, g.arity, "arity mismatch");
    f.cells.iter().zip(&g.cells).all(|(cf, cg)| match (cf, cg) {
        (CellFunc::Zero, _) => true,
        (CellFunc::Pwl(_), CellFunc::Zero) => false,
        (CellFunc::Pwl(tf), CellFunc::Pwl(tg)) => tf.le_on_cone(tg),
    })
}

/// Whether `f` and `g` agree pointwise on the cube.
pub fn is_equivalent(f: &Formula, g: &Formula, arity: usize) -> bool {
    implies(f, g, arity) && implies(g, f, arity)
}

/// Whether `f` is equivalent to an element of the Boolean skeleton.
pub fn is_boolean(f: &Formula, arity: usize) -> bool {
    is_equivalent(&Formula::nneg(f.clone()), f, arity)
}

/// A formal rational combination of formulas.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearCombination {
    pub terms: Vec<(Rat, Formula)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(Rat, Formula)>) -> LinearCombination {
        LinearCombination { terms }
    }

    /// Concatenation; normalize afterwards to merge matching terms.
    pub fn plus(&self, other: &LinearCombination) -> LinearCombination {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        LinearCombination { terms }
    }
}

/// Merges terms whose formulas agree on the given cell, dropping zero
/// coefficients and terms that vanish there. Term order follows first
/// occurrence.
pub fn normalize_combination(c: &LinearCombination, cell: &CellIndex) -> LinearCombination {
    let arity = cell.arity();
    let atom = atom_formula(cell);
    let mut merged: Vec<(Rat, Formula)> = Vec::new();
    for (weight, formula) in &c.terms {
        assert!(formula.fits_arity(arity), "combination arity mismatch");
        let restricted = Formula::meet(formula.clone(), atom.clone());
        let existing = merged.iter_mut().find(|(_, other)| {
            is_equivalent(
                &Formula::meet(other.clone(), atom.clone()),
                &restricted,
                arity,
            )
        });
        match existing {
            Some((w, _)) => *w += weight,
            None => merged.push((weight.clone(), formula.clone())),
        }
    }
    let terms = merged
        .into_iter()
        .filter(|(w, f)| !w.is_zero() && !lower_on_cell(f, cell).is_zero())
        .collect();
    LinearCombination { terms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::eval_formula;
    use crate::syntax::{parse_formula, random_formula};
    use crate::value::{rat, rat_int};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn parse(text: &str, arity: usize) -> Formula {
        parse_formula(text, arity).unwrap()
    }

    #[test]
    fn lowers_negation_to_indicator() {
        let f = lower(&parse("~x0", 1), 1);
        assert_eq!(f.cell(&CellIndex::parse("2").unwrap()), &CellFunc::Zero);
        match f.cell(&CellIndex::parse("1").unwrap()) {
            CellFunc::Pwl(term) => {
                assert_eq!(term.branches().len(), 1);
                assert_eq!(term.branches()[0], vec![LinForm::zero(0)]);
            }
            CellFunc::Zero => panic!("~x0 is 1 at the origin"),
        }
    }

    #[test]
    fn residuation_prunes_to_single_monomial()  {
        let f = lower(&parse("x0 -> x0 * x0", 1), 1);
        match f.cell(&CellIndex::parse("2").unwrap()) {
            CellFunc::Pwl(term) => {
                assert_eq!(term.branches().len(), 1);
                assert_eq!(term.branches()[0], vec![LinForm::unit(1, 0)]);
            }
            CellFunc::Zero => panic!("positive cell should be positive"),
        }
    }

    #[test]
    fn structural_zero_detection() {
        assert!(lower(&parse("x0 & ~x0", 1), 1).is_identically_zero());
        assert!(!lower(&parse("x0 | ~x0", 1), 1).is_identically_zero());
    }

    #[test]
    fn tautology_basics() {
        assert!(is_tautology(&parse("x0 -> x0", 1), 1));
        assert!(is_tautology(&parse("1", 0), 0));
        assert!(!is_tautology(&parse("x0", 1), 1));
        assert!(!is_tautology(&parse("x0 -> x0 * x0", 1), 1));
        assert!(is_tautology(&parse("x0 * x1 -> x1 * x0", 2), 2));
    }

    #[test]
    fn prelinearity_and_divisibility() {
        assert!(is_tautology(&parse("(x0 -> x1) | (x1 -> x0)", 2), 2));
        assert!(is_equivalent(
            &parse("x0 * (x0 -> x1)", 2),
            &parse("x0 & x1", 2),
            2
        ));
    }

    #[test]
    fn product_axioms() {
        assert!(is_equivalent(&parse("x0 & ~x0", 1), &parse("0", 1), 1));
        assert!(is_tautology(
            &parse("~~x2 -> ((x0 * x2 -> x1 * x2) -> (x0 -> x1))", 3),
            3
        ));
    }

    #[test]
    fn equivalence_of_negations() {
        assert!(is_equivalent(&parse("~(x0 * x0)", 1), &parse("~x0", 1), 1));
        assert!(!is_equivalent(&parse("x0 * x0", 1), &parse("x0", 1), 1));
    }

    #[test]
    fn atoms_are_boolean() {
        for cell in enumerate_cells(2) {
            assert!(is_boolean(&atom_formula(&cell), 2));
        }
        assert!(!is_boolean(&parse("x0", 1), 1));
    }

    #[test]
    fn eval_cellwise_agrees_with_direct_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..250 {
            let arity = rng.gen_range(1..=3);
            let formula = random_formula(&mut rng, arity, 5);
            let lowered = lower(&formula, arity);
            for _ in 0..20 {
                let point: Vec<Rat> = (0..arity)
                    .map(|_| {
                        let den = rng.gen_range(1..=12);
                        let num = rng.gen_range(0..=den);
                        rat(num, den)
                    })
                    .collect();
                let direct = eval_formula(&formula, &point);
                let cellwise = eval_cellwise(&lowered, &point);
                assert_eq!(direct, cellwise, "disagreement on {formula:?} at {point:?}");
            }
        }
    }

    #[test]
    fn lowered_terms_never_exceed_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let arity = rng.gen_range(1..=3);
            let formula = random_formula(&mut rng, arity, 5);
            let lowered = lower(&formula, arity);
            for _ in 0..10 {
                let point: Vec<Rat> = (0..arity)
                    .map(|_| {
                        let den = rng.gen_range(2..=9);
                        rat(rng.gen_range(1..=den), den)
                    })
                    .collect();
                let value = eval_cellwise(&lowered, &point);
                assert!(value <= rat_int(1) && value >= rat_int(0));
            }
        }
    }

    #[test]
    fn tautology_matches_grid_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..120 {
            let arity = rng.gen_range(1..=2);
            let formula = random_formula(&mut rng, arity, 4);
            let decided = is_tautology(&formula, arity);
            let mut sampled_true = true;
            let steps = 6;
            let mut point = vec![Rat::zero(); arity];
            let total = (steps + 1usize).pow(arity as u32);
            for code in 0..total {
                let mut c = code;
                for item in point.iter_mut() {
                    *item = rat((c % (steps + 1)) as i64, steps as i64);
                    c /= steps + 1;
                }
                if !eval_formula(&formula, &point).is_one() {
                    sampled_true = false;
                    break;
                }
            }
            if decided {
                assert!(sampled_true, "decided tautology fails on grid: {formula:?}");
            }
            if !sampled_true {
                assert!(!decided);
            }
        }
    }

    #[test]
    fn normalize_merges_cell_equivalent_terms() {
        let cell = CellIndex::parse("2").unwrap();
        // On the positive cell, ~~x0 and 1 coincide.
        let c = LinearCombination::new(vec![
            (rat(1, 2), parse("~~x0", 1)),
            (rat(1, 3), parse("1", 1)),
            (rat(1, 4), parse("x0", 1)),
        ]);
        let normalized = normalize_combination(&c, &cell);
        assert_eq!(normalized.terms.len(), 2);
        assert_eq!(normalized.terms[0].0, rat(5, 6));
        assert_eq!(normalized.terms[1], (rat(1, 4), parse("x0", 1)));
    }

    #[test]
    fn normalize_drops_vanishing_and_cancelled_terms() {
        let cell = CellIndex::parse("2").unwrap();
        let c = LinearCombination::new(vec![
            (rat(1, 2), parse("~x0", 1)),
            (rat(1, 1), parse("x0", 1)),
            (rat(-1, 1), parse("x0 & ~~x0", 1)),
        ]);
        let normalized = normalize_combination(&c, &cell);
        assert!(normalized.terms.is_empty());
    }
}
