//! The two-tiered probability logic: Łukasiewicz-Δ connectives over
//! probability atoms `P(f)`, where `f` ranges over product-logic events.
//!
//! `eval_modal` interprets a modal formula against a state using the
//! standard truth functions (`!a` is `1-a`, `a => b` is `min(1, 1-a+b)`,
//! `D(a)` is 1 exactly when `a` is). `axiom_instances` generates the four
//! axiom schemes with their side conditions decided by the exact
//! tautology and implication checkers, and `check_soundness` confirms
//! instances evaluate to 1 on a given state.
//!
//! `sat_search` looks for a finitely supported mixture satisfying a set
//! of premises at value 1 (and, when a target is given, pushing the
//! target below 1). The search samples rational support points, fixes
//! each `D(.)` subformula to 0 or 1, and compiles the Δ-resolved formulas
//! to min-max combinations of affine functions of the atomic values
//! `σ(f_i) = Σ_j w_j f_i(t_j)`, so every constraint set becomes an exact
//! rational LP over the mixture weights. Strict conditions (`D` forced to
//! 0, targets below 1) are approximated by a slack `δ`, and every
//! candidate witness is re-verified by exact evaluation before it is
//! returned, so SAT answers are sound while NO_WITNESS_FOUND is only
//! budget-relative.

use crate::cells::{enumerate_cells, interior_point};
use crate::lp::LinearSystem;
use crate::pwl::{implies, is_tautology};
use crate::semantics::eval_formula;
use crate::states::{random_point, MixtureState, State};
use crate::syntax::{parse_modal, print_modal, Formula, ModalFormula};
use crate::value::{rat, rat_from_str, rat_to_string, Rat, Value};
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Value of a modal formula under a state, exact on exact backends.
pub fn eval_modal(state: &State, formula: &ModalFormula) -> Value {
    assert!(
        formula.max_var().is_none_or(|v| v < state.arity()),
        "modal formula does not fit state arity {}",
        state.arity()
    );
    eval_inner(state, formula)
}

fn eval_inner(state: &State, formula: &ModalFormula) -> Value {
    match formula {
        ModalFormula::Zero => Value::zero(),
        ModalFormula::One => Value::one(),
        ModalFormula::Atom(f) => state.eval(f),
        ModalFormula::LNeg(a) => lneg_value(&eval_inner(state, a)),
        ModalFormula::LImpl(a, b) => {
            let x = eval_inner(state, a);
            let y = eval_inner(state, b);
            cap_at_one(&(&lneg_value(&x) + &y))
        }
        ModalFormula::Delta(a) => {
            let x = eval_inner(state, a);
            let bit = x.is_one();
            match x {
                Value::Exact(_) => {
                    if bit {
                        Value::one()
                    } else {
                        Value::zero()
                    }
                }
                Value::Approx(_) => Value::Approx(if bit { 1.0 } else { 0.0 }),
            }
        }
    }
}

fn lneg_value(v: &Value) -> Value {
    &Value::one() - v
}

fn cap_at_one(v: &Value) -> Value {
    if v.cmp_value(&Value::one()) == std::cmp::Ordering::Greater {
        match v {
            Value::Exact(_) => Value::one(),
            Value::Approx(_) => Value::Approx(1.0),
        }
    } else {
        v.clone()
    }
}

/// Instances of the four axiom schemes for a pair of events, with the
/// side conditions of the third and fourth schemes decided exactly.
///
/// The two normalization instances assert full mass on truth and none on
/// falsehood; the second is `!P(~1)`, the Łukasiewicz complement of the
/// zero event's mass.
pub fn axiom_instances(
    phi: &Formula,
    psi: &Formula,
    arity: usize,
) -> Vec<(&'static str, ModalFormula)> {
    let mut out = Vec::new();
    out.push(("P1", ModalFormula::atom(Formula::Top)));
    out.push((
        "P1",
        ModalFormula::lneg(ModalFormula::atom(Formula::neg(Formula::Top))),
    ));
    let join = ModalFormula::atom(Formula::join(phi.clone(), psi.clone()));
    let meet = ModalFormula::atom(Formula::meet(phi.clone(), psi.clone()));
    out.push((
        "P2",
        ModalFormula::lequiv(
            join,
            ModalFormula::oplus(
                ModalFormula::atom(phi.clone()),
                ModalFormula::ominus(ModalFormula::atom(psi.clone()), meet),
            ),
        ),
    ));
    if implies(phi, psi, arity) {
        out.push((
            "P3",
            ModalFormula::limp(
                ModalFormula::atom(phi.clone()),
                ModalFormula::atom(psi.clone()),
            ),
        ));
    }
    if !is_tautology(&Formula::neg(phi.clone()), arity) {
        out.push((
            "P4",
            ModalFormula::limp(
                ModalFormula::delta(ModalFormula::lneg(ModalFormula::atom(phi.clone()))),
                ModalFormula::lneg(ModalFormula::atom(Formula::nneg(phi.clone()))),
            ),
        ));
    }
    out
}

#[derive(Clone, Debug)]
pub struct SoundnessViolation {
    pub axiom: &'static str,
    pub instance: ModalFormula,
    pub value: Value,
}

#[derive(Clone, Debug)]
pub struct SoundnessReport {
    pub checked: usize,
    pub violations: Vec<SoundnessViolation>,
}

impl SoundnessReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates axiom instances on a state; each must be 1 within `tol`.
pub fn check_soundness(
    state: &State,
    instances: &[(&'static str, ModalFormula)],
    tol: &Rat,
) -> SoundnessReport {
    let mut violations = Vec::new();
    for (axiom, instance) in instances {
        let value = eval_modal(state, instance);
        if !value.within(&Value::one(), tol) {
            violations.push(SoundnessViolation {
                axiom,
                instance: instance.clone(),
                value,
            });
        }
    }
    SoundnessReport {
        checked: instances.len(),
        violations,
    }
}

/// Budget for the countermodel search: support points per LP, total pool
/// size, the slack replacing strict inequalities, and the sampling seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchBudget {
    /// Mixture support size per LP; defaults to `2k + 2` for `k` events.
    pub support: Option<usize>,
    /// Candidate support points sampled overall.
    pub samples: usize,
    /// Slack for strict conditions; witnesses are re-verified exactly.
    pub delta: Rat,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            support: None,
            samples: 200,
            delta: rat(1, 100),
            seed: 0,
        }
    }
}

/// A satisfiability problem: find a state giving every premise value 1
/// and, when a target is present, giving the target a value below 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemRepr", into = "ProblemRepr")]
pub struct SatProblem {
    pub arity: usize,
    pub gamma: Vec<ModalFormula>,
    pub target: Option<ModalFormula>,
    pub budget: SearchBudget,
}

impl SatProblem {
    pub fn new(arity: usize, gamma: Vec<ModalFormula>, target: Option<ModalFormula>) -> Self {
        SatProblem {
            arity,
            gamma,
            target,
            budget: SearchBudget::default(),
        }
    }

    /// Distinct atomic events across premises and target, in order.
    pub fn events(&self) -> Vec<Formula> {
        let mut out: Vec<Formula> = Vec::new();
        for formula in self.gamma.iter().chain(self.target.iter()) {
            for payload in formula.atom_payloads() {
                if !out.contains(payload) {
                    out.push(payload.clone());
                }
            }
        }
        out
    }

    /// Distinct `D(.)` subformulas across premises and target, innermost
    /// first within each formula.
    pub fn delta_nodes(&self) -> Vec<ModalFormula> {
        let mut out: Vec<ModalFormula> = Vec::new();
        for formula in self.gamma.iter().chain(self.target.iter()) {
            for node in formula.delta_subformulas() {
                if !out.contains(node) {
                    out.push(node.clone());
                }
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct ProblemRepr {
    arity: usize,
    #[serde(default)]
    gamma: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    budget: Option<BudgetRepr>,
}

#[derive(Serialize, Deserialize)]
struct BudgetRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl TryFrom<ProblemRepr> for SatProblem {
    type Error = String;

    fn try_from(repr: ProblemRepr) -> Result<SatProblem, String> {
        let gamma = repr
            .gamma
            .iter()
            .map(|text| parse_modal(text, repr.arity).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        let target = repr
            .target
            .as_deref()
            .map(|text| parse_modal(text, repr.arity).map_err(|e| e.to_string()))
            .transpose()?;
        let defaults = SearchBudget::default();
        let budget = match repr.budget {
            None => defaults,
            Some(b) => SearchBudget {
                support: b.support,
                samples: b.samples.unwrap_or(defaults.samples),
                delta: match b.delta.as_deref() {
                    None => defaults.delta,
                    Some(text) => {
                        let delta = rat_from_str(text)?;
                        if !delta.is_positive() || delta >= Rat::one() {
                            return Err(format!("slack {text} outside (0,1)"));
                        }
                        delta
                    }
                },
                seed: b.seed.unwrap_or(defaults.seed),
            },
        };
        Ok(SatProblem {
            arity: repr.arity,
            gamma,
            target,
            budget,
        })
    }
}

impl From<SatProblem> for ProblemRepr {
    fn from(problem: SatProblem) -> ProblemRepr {
        ProblemRepr {
            arity: problem.arity,
            gamma: problem.gamma.iter().map(print_modal).collect(),
            target: problem.target.as_ref().map(print_modal),
            budget: Some(BudgetRepr {
                support: problem.budget.support,
                samples: Some(problem.budget.samples),
                delta: Some(rat_to_string(&problem.budget.delta)),
                seed: Some(problem.budget.seed),
            }),
        }
    }
}

/// Work done by a search: `lp_calls` counts one per sampled support and
/// Δ-pattern, so a completed search has `supports_tried × delta_patterns`
/// of them; patterns abandoned for size are tallied separately.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SearchDiagnostics {
    pub supports_tried: usize,
    pub delta_patterns: usize,
    pub lp_calls: usize,
    pub skipped_patterns: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A verified witness: the mixture plus the exact value of every premise
/// and of the target.
#[derive(Clone, Debug)]
pub struct SatWitness {
    pub state: MixtureState,
    pub trace: Vec<(ModalFormula, Value)>,
    pub diagnostics: SearchDiagnostics,
}

#[derive(Clone, Debug)]
pub enum SatOutcome {
    Sat(SatWitness),
    NoWitnessFound(SearchDiagnostics),
}

#[derive(Clone, Debug)]
pub enum EntailOutcome {
    HoldsOnBudget(SearchDiagnostics),
    Countermodel(SatWitness),
}

/// An affine function of the atomic values with rational coefficients.
#[derive(Clone, Debug, PartialEq)]
struct AffForm {
    constant: Rat,
    coeffs: Vec<Rat>,
}

impl AffForm {
    fn constant(c: Rat, nvars: usize) -> AffForm {
        AffForm {
            constant: c,
            coeffs: vec![Rat::zero(); nvars],
        }
    }

    fn variable(index: usize, nvars: usize) -> AffForm {
        let mut coeffs = vec![Rat::zero(); nvars];
        coeffs[index] = Rat::one();
        AffForm {
            constant: Rat::zero(),
            coeffs,
        }
    }

    fn one_minus(&self) -> AffForm {
        AffForm {
            constant: Rat::one() - &self.constant,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    fn add(&self, other: &AffForm) -> AffForm {
        AffForm {
            constant: &self.constant + &other.constant,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Whether `self >= other` everywhere on the unit box.
    fn dominates(&self, other: &AffForm) -> bool {
        let mut slack = &self.constant - &other.constant;
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            let d = a - b;
            if d.is_negative() {
                slack += d;
            }
        }
        !slack.is_negative()
    }

    #[cfg(test)]
    fn eval(&self, point: &[Rat]) -> Rat {
        let mut total = self.constant.clone();
        for (c, x) in self.coeffs.iter().zip(point) {
            total += c * x;
        }
        total
    }

    fn sort_key(&self) -> (Rat, Vec<Rat>) {
        (self.constant.clone(), self.coeffs.clone())
    }
}

/// Minimum over branches of the maximum over affine forms: the exact
/// value of a Δ-resolved modal formula on the unit box of atomic values.
#[derive(Clone, Debug)]
struct MinMax {
    branches: Vec<Vec<AffForm>>,
}

impl MinMax {
    fn constant(c: Rat, nvars: usize) -> MinMax {
        MinMax {
            branches: vec![vec![AffForm::constant(c, nvars)]],
        }
    }

    fn variable(index: usize, nvars: usize) -> MinMax {
        MinMax {
            branches: vec![vec![AffForm::variable(index, nvars)]],
        }
    }

    /// `1 - self`: the max-of-min complement redistributed into
    /// min-of-max form by picking one form per branch. Partial picks are
    /// pruned as they grow; a dominated prefix only yields dominated
    /// completions, so this keeps the enumeration from exploding.
    fn negate(&self) -> MinMax {
        let mut acc = MinMax {
            branches: vec![Vec::new()],
        };
        for old in &self.branches {
            let mut next = Vec::with_capacity(acc.branches.len() * old.len());
            for prefix in &acc.branches {
                for form in old {
                    let mut picked = prefix.clone();
                    picked.push(form.one_minus());
                    next.push(picked);
                }
            }
            acc = MinMax { branches: next }.pruned();
        }
        acc
    }

    fn add(&self, other: &MinMax) -> MinMax {
        let mut branches = Vec::with_capacity(self.branches.len() * other.branches.len());
        for a in &self.branches {
            for b in &other.branches {
                let mut forms = Vec::with_capacity(a.len() * b.len());
                for x in a {
                    for y in b {
                        forms.push(x.add(y));
                    }
                }
                branches.push(forms);
            }
        }
        MinMax { branches }.pruned()
    }

    fn min_with_one(mut self) -> MinMax {
        self.branches
            .push(vec![AffForm::constant(Rat::one(), self.nvars())]);
        self.pruned()
    }

    fn nvars(&self) -> usize {
        self.branches[0][0].coeffs.len()
    }

    #[cfg(test)]
    fn eval(&self, point: &[Rat]) -> Rat {
        self.branches
            .iter()
            .map(|b| b.iter().map(|form| form.eval(point)).max().expect("nonempty"))
            .min()
            .expect("nonempty")
    }

    /// Drops forms and branches that cannot decide the value anywhere on
    /// the unit box.
    fn pruned(mut self) -> MinMax {
        for branch in &mut self.branches {
            branch.sort_by_key(AffForm::sort_key);
            branch.dedup();
            let snapshot = branch.clone();
            branch.retain(|form| {
                !snapshot
                    .iter()
                    .any(|other| other != form && other.dominates(form))
            });
        }
        self.branches.sort_by_key(|b| {
            b.iter()
                .map(AffForm::sort_key)
                .collect::<Vec<_>>()
        });
        self.branches.dedup();
        let covers = |hi: &[AffForm], lo: &[AffForm]| {
            lo.iter()
                .all(|l| hi.iter().any(|h| h.dominates(l)))
        };
        let snapshot = self.branches.clone();
        let kept = snapshot
            .iter()
            .enumerate()
            .filter(|(i, branch)| {
                !snapshot.iter().enumerate().any(|(j, other)| {
                    if *i == j || !covers(branch, other) {
                        return false;
                    }
                    !(covers(other, branch) && j > *i)
                })
            })
            .map(|(_, branch)| branch.clone())
            .collect();
        MinMax { branches: kept }
    }
}

/// Compiles a modal formula into its min-max form, with every `D(.)`
/// node replaced by the pattern's bit for it.
fn compile(
    formula: &ModalFormula,
    events: &[Formula],
    deltas: &[ModalFormula],
    pattern: usize,
) -> MinMax {
    let nvars = events.len();
    match formula {
        ModalFormula::Zero => MinMax::constant(Rat::zero(), nvars),
        ModalFormula::One => MinMax::constant(Rat::one(), nvars),
        ModalFormula::Atom(f) => {
            let index = events
                .iter()
                .position(|e| e == f)
                .expect("event extracted from the problem");
            MinMax::variable(index, nvars)
        }
        ModalFormula::LNeg(a) => compile(a, events, deltas, pattern).negate(),
        ModalFormula::LImpl(a, b) => compile(a, events, deltas, pattern)
            .negate()
            .add(&compile(b, events, deltas, pattern))
            .min_with_one(),
        ModalFormula::Delta(_) => {
            let index = deltas
                .iter()
                .position(|d| d == formula)
                .expect("delta node extracted from the problem");
            let bit = (pattern >> index) & 1 == 1;
            MinMax::constant(if bit { Rat::one() } else { Rat::zero() }, nvars)
        }
    }
}

/// A compiled value requirement: reach 1, or stay at least `delta` below.
enum Requirement {
    AtLeastOne(MinMax),
    BelowOne(MinMax),
}

/// Affine constraint on the mixture weights.
#[derive(Clone)]
enum Row {
    Ge(Vec<Rat>, Rat),
    Le(Vec<Rat>, Rat),
}

/// Requirements for one Δ-pattern: the premises and target plus the
/// pattern's own consistency conditions on each `D(.)` payload.
fn pattern_requirements(problem: &SatProblem, events: &[Formula], deltas: &[ModalFormula], pattern: usize) -> Vec<Requirement> {
    let mut out = Vec::new();
    for (index, node) in deltas.iter().enumerate() {
        let ModalFormula::Delta(payload) = node else {
            unreachable!("delta_nodes yields only D(.) nodes");
        };
        let compiled = compile(payload, events, deltas, pattern);
        if (pattern >> index) & 1 == 1 {
            out.push(Requirement::AtLeastOne(compiled));
        } else {
            out.push(Requirement::BelowOne(compiled));
        }
    }
    for premise in &problem.gamma {
        out.push(Requirement::AtLeastOne(compile(
            premise, events, deltas, pattern,
        )));
    }
    if let Some(target) = &problem.target {
        out.push(Requirement::BelowOne(compile(target, events, deltas, pattern)));
    }
    out
}

/// Rewrites an affine form over atomic values into one over the weights
/// of a fixed support, using the event values at the support points.
fn substitute(form: &AffForm, event_values: &[Vec<Rat>], support_size: usize) -> (Vec<Rat>, Rat) {
    let mut coeffs = vec![Rat::zero(); support_size];
    for (c, values) in form.coeffs.iter().zip(event_values) {
        if c.is_zero() {
            continue;
        }
        for (j, v) in values.iter().enumerate() {
            coeffs[j] += c * v;
        }
    }
    (coeffs, form.constant.clone())
}

/// Disjunctive clauses over weight constraints: each requirement becomes
/// clauses whose alternatives are conjunctions of rows, and a feasible
/// point must pick one alternative per clause.
fn requirement_clauses(
    requirement: &Requirement,
    event_values: &[Vec<Rat>],
    support_size: usize,
    delta: &Rat,
) -> Vec<Vec<Vec<Row>>> {
    match requirement {
        Requirement::AtLeastOne(mm) => mm
            .branches
            .iter()
            .map(|branch| {
                branch
                    .iter()
                    .map(|form| {
                        let (coeffs, constant) = substitute(form, event_values, support_size);
                        vec![Row::Ge(coeffs, Rat::one() - constant)]
                    })
                    .collect()
            })
            .collect(),
        Requirement::BelowOne(mm) => {
            let bound = Rat::one() - delta;
            vec![mm
                .branches
                .iter()
                .map(|branch| {
                    branch
                        .iter()
                        .map(|form| {
                            let (coeffs, constant) = substitute(form, event_values, support_size);
                            Row::Le(coeffs, &bound - &constant)
                        })
                        .collect()
                })
                .collect()]
        }
    }
}

const COMBO_CAP: u64 = 1 << 14;

/// Searches the alternative combinations of the clauses for a feasible
/// weight vector on the simplex.
fn solve_clauses(clauses: &[Vec<Vec<Row>>], support_size: usize) -> Option<Vec<Rat>> {
    fn recurse(
        clauses: &[Vec<Vec<Row>>],
        picked: &mut Vec<Row>,
        support_size: usize,
    ) -> Option<Vec<Rat>> {
        let Some((clause, rest)) = clauses.split_first() else {
            let mut system = LinearSystem::new(support_size);
            system.add_eq(vec![Rat::one(); support_size], Rat::one());
            for row in picked.iter() {
                match row {
                    Row::Ge(coeffs, bound) => system.add_ge(coeffs.clone(), bound.clone()),
                    Row::Le(coeffs, bound) => system.add_le(coeffs.clone(), bound.clone()),
                }
            }
            return system.find_point();
        };
        for alternative in clause {
            let before = picked.len();
            picked.extend(alternative.iter().cloned());
            if let Some(point) = recurse(rest, picked, support_size) {
                return Some(point);
            }
            picked.truncate(before);
        }
        None
    }
    recurse(clauses, &mut Vec::new(), support_size)
}

/// Candidate support points: cell interiors, a coarse grid, then seeded
/// random rational points until the pool reaches `size`.
fn support_pool(arity: usize, size: usize, seed: u64) -> Vec<Vec<Rat>> {
    let mut pool: Vec<Vec<Rat>> = Vec::new();
    let push = |pool: &mut Vec<Vec<Rat>>, point: Vec<Rat>| {
        if !pool.contains(&point) {
            pool.push(point);
        }
    };
    if arity <= 6 {
        for cell in enumerate_cells(arity) {
            push(&mut pool, interior_point(&cell));
        }
    }
    if arity == 1 {
        for (num, den) in [(1, 1), (1, 4), (1, 3), (2, 3), (3, 4)] {
            push(&mut pool, vec![rat(num, den)]);
        }
    } else if arity <= 4 {
        let levels = [Rat::zero(), rat(1, 2), Rat::one()];
        let mut stack = vec![Vec::new()];
        for _ in 0..arity {
            let mut next = Vec::new();
            for prefix in &stack {
                for level in &levels {
                    let mut point = prefix.clone();
                    point.push(level.clone());
                    next.push(point);
                }
            }
            stack = next;
        }
        for point in stack {
            push(&mut pool, point);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..size.saturating_mul(50) {
        if pool.len() >= size {
            break;
        }
        push(&mut pool, random_point(&mut rng, arity));
    }
    pool.truncate(size.max(1));
    pool
}

fn verify_witness(
    problem: &SatProblem,
    points: &[Vec<Rat>],
    weights: &[Rat],
    diagnostics: SearchDiagnostics,
) -> Option<SatWitness> {
    let mut support = Vec::new();
    let mut mass = Vec::new();
    for (point, weight) in points.iter().zip(weights) {
        if weight.is_positive() {
            support.push(point.clone());
            mass.push(weight.clone());
        }
    }
    let mixture = MixtureState::new(support, mass).ok()?;
    let state = State::Mixture(mixture.clone());
    let mut trace = Vec::new();
    for premise in &problem.gamma {
        let value = eval_modal(&state, premise);
        let holds = value.is_one();
        trace.push((premise.clone(), value));
        if !holds {
            return None;
        }
    }
    if let Some(target) = &problem.target {
        let value = eval_modal(&state, target);
        let below = match value.as_exact() {
            Some(r) => r < &Rat::one(),
            None => value.to_f64() < 1.0,
        };
        trace.push((target.clone(), value));
        if !below {
            return None;
        }
    }
    Some(SatWitness {
        state: mixture,
        trace,
        diagnostics,
    })
}

/// Searches for a mixture witness. Sound for SAT (witnesses re-verify
/// exactly); a miss is only `NoWitnessFound`, never a refutation.
pub fn sat_search(problem: &SatProblem) -> SatOutcome {
    let arity = problem.arity;
    for formula in problem.gamma.iter().chain(problem.target.iter()) {
        assert!(
            formula.max_var().is_none_or(|v| v < arity),
            "problem formula does not fit arity {arity}"
        );
    }
    let events = problem.events();
    let deltas = problem.delta_nodes();
    let mut diagnostics = SearchDiagnostics::default();
    if deltas.len() >= 16 {
        diagnostics.note = Some(format!(
            "{} distinct D(.) subformulas exceed the pattern budget",
            deltas.len()
        ));
        return SatOutcome::NoWitnessFound(diagnostics);
    }
    let patterns = 1usize << deltas.len();
    diagnostics.delta_patterns = patterns;
    let support_size = problem
        .budget
        .support
        .unwrap_or(2 * events.len() + 2)
        .max(1);
    let pool = support_pool(arity, problem.budget.samples.max(support_size), problem.budget.seed);
    let compiled: Vec<Vec<Requirement>> = (0..patterns)
        .map(|pattern| pattern_requirements(problem, &events, &deltas, pattern))
        .collect();
    for chunk in pool.chunks(support_size) {
        diagnostics.supports_tried += 1;
        let event_values: Vec<Vec<Rat>> = events
            .iter()
            .map(|event| chunk.iter().map(|point| eval_formula(event, point)).collect())
            .collect();
        for (pattern, requirements) in compiled.iter().enumerate() {
            diagnostics.lp_calls += 1;
            let mut clauses = Vec::new();
            for requirement in requirements {
                clauses.extend(requirement_clauses(
                    requirement,
                    &event_values,
                    chunk.len(),
                    &problem.budget.delta,
                ));
            }
            let combos = clauses
                .iter()
                .try_fold(1u64, |acc, clause| {
                    acc.checked_mul(clause.len() as u64)
                        .filter(|&c| c <= COMBO_CAP)
                })
                .is_none();
            if combos {
                diagnostics.skipped_patterns += 1;
                diagnostics.note = Some(format!(
                    "pattern {pattern} exceeded {COMBO_CAP} clause combinations"
                ));
                continue;
            }
            if let Some(weights) = solve_clauses(&clauses, chunk.len()) {
                if let Some(witness) =
                    verify_witness(problem, chunk, &weights, diagnostics.clone())
                {
                    return SatOutcome::Sat(witness);
                }
            }
        }
    }
    SatOutcome::NoWitnessFound(diagnostics)
}

/// Budget-relative entailment: a verified countermodel refutes, and a
/// fruitless search only reports that the claim held on this budget.
pub fn entails(problem: &SatProblem) -> EntailOutcome {
    assert!(problem.target.is_some(), "entailment needs a target");
    match sat_search(problem) {
        SatOutcome::Sat(witness) => EntailOutcome::Countermodel(witness),
        SatOutcome::NoWitnessFound(diagnostics) => EntailOutcome::HoldsOnBudget(diagnostics),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::DiracState;
    use crate::syntax::random_modal;
    use crate::value::rat_int;
    use rand::Rng;

    fn dirac(coords: Vec<Rat>) -> State {
        State::Dirac(DiracState::new(coords))
    }

    fn mixture(points: Vec<Vec<Rat>>, weights: Vec<Rat>) -> State {
        State::Mixture(MixtureState::new(points, weights).unwrap())
    }

    #[test]
    fn evaluates_the_truth_functions() {
        let state = mixture(
            vec![vec![rat_int(0)], vec![rat(1, 2)]],
            vec![rat(2, 5), rat(3, 5)],
        );
        let sum = parse_modal("P(~x0) (+) P(~~x0)", 1).unwrap();
        assert_eq!(eval_modal(&state, &sum), Value::one());
        let crisp = parse_modal("D(P(x0))", 1).unwrap();
        assert_eq!(eval_modal(&dirac(vec![rat(3, 10)]), &crisp), Value::zero());
        let top = parse_modal("P(1)", 1).unwrap();
        assert_eq!(eval_modal(&state, &top), Value::one());
    }

    #[test]
    fn desugared_connectives_match_their_truth_functions() {
        let x0 = ModalFormula::atom(Formula::var(0));
        let x1 = ModalFormula::atom(Formula::var(1));
        for i in 0..=10u32 {
            for j in 0..=10u32 {
                let x = rat(i as i64, 10);
                let y = rat(j as i64, 10);
                let state = dirac(vec![x.clone(), y.clone()]);
                let plus = eval_modal(&state, &ModalFormula::oplus(x0.clone(), x1.clone()));
                assert_eq!(
                    plus,
                    Value::Exact((&x + &y).min(Rat::one())),
                    "oplus at ({x}, {y})"
                );
                let minus = eval_modal(&state, &ModalFormula::ominus(x0.clone(), x1.clone()));
                assert_eq!(minus, Value::Exact((&x - &y).max(Rat::zero())));
                let equiv = eval_modal(&state, &ModalFormula::lequiv(x0.clone(), x1.clone()));
                let expected = Rat::one() - (&x - &y).abs();
                assert_eq!(equiv, Value::Exact(expected));
            }
        }
    }

    #[test]
    fn axiom_instances_respect_side_conditions() {
        let x = Formula::var(0);
        let square = Formula::pow(Formula::var(0), 2);
        let names = |instances: &[(&'static str, ModalFormula)]| {
            instances.iter().map(|(n, _)| *n).collect::<Vec<_>>()
        };
        let forward = axiom_instances(&square, &x, 1);
        assert_eq!(names(&forward), vec!["P1", "P1", "P2", "P3", "P4"]);
        let backward = axiom_instances(&x, &square, 1);
        assert_eq!(names(&backward), vec!["P1", "P1", "P2", "P4"]);
        let contradiction = Formula::meet(Formula::var(0), Formula::neg(Formula::var(0)));
        let degenerate = axiom_instances(&contradiction, &x, 1);
        assert!(!names(&degenerate).contains(&"P4"));
    }

    #[test]
    fn axioms_hold_on_random_mixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let state = State::Mixture(crate::states::random_mixture(&mut rng, 2, 4));
            for _ in 0..10 {
                let phi = crate::syntax::random_formula(&mut rng, 2, 3);
                let psi = crate::syntax::random_formula(&mut rng, 2, 3);
                let instances = axiom_instances(&phi, &psi, 2);
                let report = check_soundness(&state, &instances, &Rat::zero());
                assert!(
                    report.passed(),
                    "{:?} on {:?}",
                    report
                        .violations
                        .iter()
                        .map(|v| (v.axiom, print_modal(&v.instance), v.value.clone()))
                        .collect::<Vec<_>>(),
                    state
                );
            }
        }
    }

    #[test]
    fn corrupted_state_fails_normalization() {
        let short = State::Mixture(MixtureState::new_unchecked(
            vec![vec![rat(1, 2)]],
            vec![rat(9, 10)],
        ));
        let instances = axiom_instances(&Formula::var(0), &Formula::var(0), 1);
        let report = check_soundness(&short, &instances, &Rat::zero());
        assert!(report.violations.iter().any(|v| v.axiom == "P1"));
    }

    #[test]
    fn problem_files_round_trip() {
        let text = r#"{"arity":1,"gamma":["D(P(~x0))"],"target":"P(x0)","budget":{"support":6,"samples":200,"delta":"1/100","seed":7}}"#;
        let problem: SatProblem = serde_json::from_str(text).unwrap();
        assert_eq!(problem.arity, 1);
        assert_eq!(problem.gamma.len(), 1);
        assert!(problem.target.is_some());
        assert_eq!(problem.budget.support, Some(6));
        assert_eq!(problem.budget.delta, rat(1, 100));
        let serialized = serde_json::to_string(&problem).unwrap();
        let reparsed: SatProblem = serde_json::from_str(&serialized).unwrap();
        assert_eq!(reparsed, problem);

        let bare: SatProblem = serde_json::from_str(r#"{"arity":1,"gamma":["P(x0)"]}"#).unwrap();
        assert_eq!(bare.budget, SearchBudget::default());
    }

    #[test]
    fn compiled_forms_agree_with_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut checked = 0;
        while checked < 60 {
            let formula = random_modal(&mut rng, 2, 4);
            if !formula.delta_subformulas().is_empty() {
                continue;
            }
            checked += 1;
            let events: Vec<Formula> =
                formula.atom_payloads().into_iter().cloned().collect();
            let compiled = compile(&formula, &events, &[], 0);
            for _ in 0..8 {
                let point = vec![rat(rng.gen_range(0..=6), 6), rat(rng.gen_range(0..=6), 6)];
                let atomic: Vec<Rat> =
                    events.iter().map(|e| eval_formula(e, &point)).collect();
                let direct = eval_modal(&dirac(point.clone()), &formula);
                assert_eq!(
                    direct,
                    Value::Exact(compiled.eval(&atomic)),
                    "{} at {point:?}",
                    print_modal(&formula)
                );
            }
        }
    }

    #[test]
    fn finds_the_fixed_point_witness() {
        let problem: SatProblem =
            serde_json::from_str(r#"{"arity":1,"gamma":["P(x0) <=> !P(x0)"]}"#).unwrap();
        let SatOutcome::Sat(witness) = sat_search(&problem) else {
            panic!("expected a witness");
        };
        let state = State::Mixture(witness.state.clone());
        assert_eq!(state.eval(&Formula::var(0)), Value::Exact(rat(1, 2)));
        assert!(witness.trace.iter().all(|(_, v)| v.is_one()));
    }

    #[test]
    fn finds_a_crisp_negation_witness() {
        let problem: SatProblem =
            serde_json::from_str(r#"{"arity":1,"gamma":["D(P(~x0))"]}"#).unwrap();
        let SatOutcome::Sat(witness) = sat_search(&problem) else {
            panic!("expected a witness");
        };
        let state = State::Mixture(witness.state.clone());
        assert_eq!(
            state.eval(&Formula::neg(Formula::var(0))),
            Value::one()
        );
    }

    #[test]
    fn zero_propagation_has_no_witness() {
        let problem: SatProblem =
            serde_json::from_str(r#"{"arity":1,"gamma":["D(!P(x0))","D(P(~~x0))"]}"#).unwrap();
        let SatOutcome::NoWitnessFound(diagnostics) = sat_search(&problem) else {
            panic!("expected no witness");
        };
        assert_eq!(diagnostics.delta_patterns, 4);
        assert_eq!(diagnostics.skipped_patterns, 0);
        assert_eq!(
            diagnostics.lp_calls,
            diagnostics.supports_tried * diagnostics.delta_patterns
        );
        assert!(diagnostics.supports_tried > 0);
    }

    #[test]
    fn entailment_examples() {
        let p2: SatProblem = serde_json::from_str(
            r#"{"arity":1,"gamma":[],"target":"P(x0 | ~x0) <=> P(x0) (+) (P(~x0) (-) P(x0 & ~x0))"}"#,
        )
        .unwrap();
        assert!(matches!(entails(&p2), EntailOutcome::HoldsOnBudget(_)));

        let sum: SatProblem =
            serde_json::from_str(r#"{"arity":1,"gamma":[],"target":"P(x0) (+) P(~x0)"}"#).unwrap();
        let EntailOutcome::Countermodel(witness) = entails(&sum) else {
            panic!("expected a countermodel");
        };
        let (_, value) = witness.trace.last().unwrap();
        assert!(value.as_exact().unwrap() < &Rat::one());

        let powers: SatProblem =
            serde_json::from_str(r#"{"arity":1,"gamma":["D(P(x0))"],"target":"P(x0^2)"}"#).unwrap();
        assert!(matches!(entails(&powers), EntailOutcome::HoldsOnBudget(_)));
    }

    #[test]
    fn witnesses_reverify_exactly() {
        let problems = [
            r#"{"arity":1,"gamma":["P(x0) <=> !P(x0)"]}"#,
            r#"{"arity":1,"gamma":["D(P(~x0))"]}"#,
            r#"{"arity":2,"gamma":["P(x0) => P(x1)","D(P(~~x1))"]}"#,
        ];
        for text in problems {
            let problem: SatProblem = serde_json::from_str(text).unwrap();
            let SatOutcome::Sat(witness) = sat_search(&problem) else {
                panic!("expected a witness for {text}");
            };
            let state = State::Mixture(witness.state.clone());
            for premise in &problem.gamma {
                assert_eq!(eval_modal(&state, premise), Value::one());
            }
        }
    }
}
