//! The one-variable free algebra and its duality between states and
//! spectral mass distributions.
//!
//! Every one-variable formula is equivalent to exactly one of `0`, `1`,
//! `x^n`, `~x`, `~~x`, or `x^n | ~x`, captured here as a canonical pair: the
//! crisp value at 0 and the behaviour on `(0,1]` (identically zero, or the
//! monomial `t^e`). States of the one-variable algebra correspond to mass
//! distributions over the spectrum, a chain `<~~x> >= <x> >= <x^2> >= ...`
//! plus an isolated point `<~x>` and a limit point below the chain that
//! carries the mass surviving past every power (so that the point
//! evaluation at 1 has a distribution too). Masses are stored as an
//! explicit finite prefix plus exact geometric tails.

use crate::cells::CellIndex;
use crate::pwl::{lower_on_cell, CellFunc};
use crate::states::State;
use crate::syntax::Formula;
use crate::value::{rat_pow, rat_to_f64, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Behaviour of a one-variable formula on the positive half-open interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PosPart {
    /// Identically zero on `(0,1]`.
    ZeroOnPos,
    /// The monomial `t^e`; `Pow(0)` is the constant 1.
    Pow(u64),
}

/// Canonical form of a one-variable formula: its crisp value at 0 and its
/// monomial behaviour on `(0,1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fp1Canon {
    pub at_zero: bool,
    pub pos: PosPart,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Fp1Error {
    #[error("formula uses variables beyond arity 1")]
    WrongArity,
    #[error("invalid spectral distribution: {0}")]
    InvalidDist(String),
    #[error("state has arity {0}, expected 1")]
    WrongStateArity(usize),
}

/// Computes the canonical form of a one-variable formula.
pub fn canonicalize(f: &Formula) -> Result<Fp1Canon, Fp1Error> {
    if !f.fits_arity(1) {
        return Err(Fp1Error::WrongArity);
    }
    let at_zero = !lower_on_cell(f, &CellIndex::new(vec![1])).is_zero();
    let pos = match lower_on_cell(f, &CellIndex::new(vec![2])) {
        CellFunc::Zero => PosPart::ZeroOnPos,
        CellFunc::Pwl(term) => {
            // One-variable min-max terms collapse to a single monomial under
            // pruning: the max keeps the least exponent, the min the largest.
            assert_eq!(term.branches().len(), 1, "unpruned one-variable term");
            assert_eq!(term.branches()[0].len(), 1, "unpruned one-variable term");
            let coeff = &term.branches()[0][0].coeffs()[0];
            assert!(!coeff.is_negative(), "positive formulas stay within [0,1]");
            PosPart::Pow(coeff.to_u64().expect("exponent fits in u64"))
        }
    };
    Ok(Fp1Canon { at_zero, pos })
}

impl Fp1Canon {
    pub const ZERO: Fp1Canon = Fp1Canon {
        at_zero: false,
        pos: PosPart::ZeroOnPos,
    };
    pub const ONE: Fp1Canon = Fp1Canon {
        at_zero: true,
        pos: PosPart::Pow(0),
    };

    /// A formula in canonical syntactic shape with this canonical form.
    pub fn to_formula(self) -> Formula {
        let x = Formula::Var(0);
        match (self.at_zero, self.pos) {
            (false, PosPart::ZeroOnPos) => Formula::Bot,
            (true, PosPart::ZeroOnPos) => Formula::neg(x),
            (true, PosPart::Pow(0)) => Formula::Top,
            (false, PosPart::Pow(0)) => Formula::nneg(x),
            (false, PosPart::Pow(e)) => Formula::pow(x, e as u32),
            (true, PosPart::Pow(e)) => {
                Formula::join(Formula::pow(x.clone(), e as u32), Formula::neg(x))
            }
        }
    }

    /// Evaluates the canonical form at a point of `[0,1]`.
    pub fn eval(self, t: &Rat) -> Rat {
        if t.is_zero() {
            return if self.at_zero { Rat::one() } else { Rat::zero() };
        }
        match self.pos {
            PosPart::ZeroOnPos => Rat::zero(),
            PosPart::Pow(e) => rat_pow(t, &BigInt::from(e)),
        }
    }
}

/// Strong conjunction on canonical forms: exponents add.
pub fn canon_conj(a: Fp1Canon, b: Fp1Canon) -> Fp1Canon {
    let pos = match (a.pos, b.pos) {
        (PosPart::ZeroOnPos, _) | (_, PosPart::ZeroOnPos) => PosPart::ZeroOnPos,
        (PosPart::Pow(x), PosPart::Pow(y)) => PosPart::Pow(x + y),
    };
    Fp1Canon {
        at_zero: a.at_zero && b.at_zero,
        pos,
    }
}

/// Meet on canonical forms: the larger exponent is the smaller monomial.
pub fn canon_meet(a: Fp1Canon, b: Fp1Canon) -> Fp1Canon {
    let pos = match (a.pos, b.pos) {
        (PosPart::ZeroOnPos, _) | (_, PosPart::ZeroOnPos) => PosPart::ZeroOnPos,
        (PosPart::Pow(x), PosPart::Pow(y)) => PosPart::Pow(x.max(y)),
    };
    Fp1Canon {
        at_zero: a.at_zero && b.at_zero,
        pos,
    }
}

/// Join on canonical forms: the smaller exponent is the larger monomial.
pub fn canon_join(a: Fp1Canon, b: Fp1Canon) -> Fp1Canon {
    let pos = match (a.pos, b.pos) {
        (PosPart::ZeroOnPos, other) | (other, PosPart::ZeroOnPos) => other,
        (PosPart::Pow(x), PosPart::Pow(y)) => PosPart::Pow(x.min(y)),
    };
    Fp1Canon {
        at_zero: a.at_zero || b.at_zero,
        pos,
    }
}

/// Residuated implication on canonical forms.
pub fn canon_imp(a: Fp1Canon, b: Fp1Canon) -> Fp1Canon {
    let pos = match (a.pos, b.pos) {
        (PosPart::ZeroOnPos, _) => PosPart::Pow(0),
        (PosPart::Pow(_), PosPart::ZeroOnPos) => PosPart::ZeroOnPos,
        (PosPart::Pow(x), PosPart::Pow(y)) => PosPart::Pow(y.saturating_sub(x)),
    };
    Fp1Canon {
        at_zero: !a.at_zero || b.at_zero,
        pos,
    }
}

/// Negation on canonical forms.
pub fn canon_neg(a: Fp1Canon) -> Fp1Canon {
    canon_imp(a, Fp1Canon::ZERO)
}

/// Double negation on canonical forms.
pub fn canon_nneg(a: Fp1Canon) -> Fp1Canon {
    canon_neg(canon_neg(a))
}

fn zero_rat() -> Rat {
    Rat::zero()
}

/// One exact geometric component of the chain masses: contributes
/// `c * r^n` to the mass at `<x^n>` for every `n` past the prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeomTail {
    #[serde(with = "crate::value::rat_string")]
    pub c: Rat,
    #[serde(with = "crate::value::rat_string")]
    pub r: Rat,
}

/// A mass distribution over the one-variable spectrum.
///
/// `neg` sits at the isolated point `<~x>`, `nn` at the top of the chain
/// `<~~x>`, `prefix[i]` at `<x^(i+1)>`, the geometric tails cover every
/// deeper chain point, and `limit` sits at the point below the whole chain,
/// carrying the mass that survives every power.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDist {
    #[serde(default = "zero_rat", with = "crate::value::rat_string")]
    pub neg: Rat,
    #[serde(default = "zero_rat", with = "crate::value::rat_string")]
    pub nn: Rat,
    #[serde(default, with = "crate::value::rat_string_vec")]
    pub prefix: Vec<Rat>,
    #[serde(default)]
    pub tails: Vec<GeomTail>,
    #[serde(default = "zero_rat", with = "crate::value::rat_string")]
    pub limit: Rat,
}

impl SpectrumDist {
    /// The mass at the chain point `<x^n>`, `n >= 1`.
    pub fn chain_mass(&self, n: usize) -> Rat {
        assert!(n >= 1, "chain points start at <x^1>");
        if n <= self.prefix.len() {
            self.prefix[n - 1].clone()
        } else {
            self.tails
                .iter()
                .map(|t| &t.c * rat_pow(&t.r, &BigInt::from(n)))
                .sum()
        }
    }

    /// The total chain mass at `<x^m>` for all `m >= n`, excluding the
    /// limit point.
    pub fn chain_mass_from(&self, n: usize) -> Rat {
        assert!(n >= 1);
        let mut total = Rat::zero();
        for m in n..=self.prefix.len() {
            total += &self.prefix[m - 1];
        }
        let start = n.max(self.prefix.len() + 1);
        for tail in &self.tails {
            // Sum of c * r^m for m >= start.
            total += &tail.c * rat_pow(&tail.r, &BigInt::from(start)) / (Rat::one() - &tail.r);
        }
        total
    }

    /// Total mass over the whole spectrum.
    pub fn total_mass(&self) -> Rat {
        &self.neg + &self.nn + self.chain_mass_from(1) + &self.limit
    }

    /// Whether the zero set of the chain masses (including `<~~x>`) is
    /// upward closed: reading from `<~~x>` downwards, zeros may only form
    /// an initial segment.
    pub fn condition_d(&self) -> bool {
        let mut top_down: Vec<bool> = Vec::with_capacity(self.prefix.len() + 1);
        top_down.push(self.nn.is_zero());
        for mass in &self.prefix {
            top_down.push(mass.is_zero());
        }
        if self.tails.is_empty() {
            // Everything past the prefix is zero, so the whole chain must be.
            top_down.iter().all(|&z| z)
        } else {
            // Positive masses continue for every deeper power, so zeros may
            // not reappear after the first positive entry.
            let mut seen_positive = false;
            for &is_zero in &top_down {
                if is_zero && seen_positive {
                    return false;
                }
                if !is_zero {
                    seen_positive = true;
                }
            }
            true
        }
    }

    /// Checks nonnegativity, tail well-formedness, unit total mass, and the
    /// upward-closed zero set.
    pub fn validate(&self) -> Result<(), Fp1Error> {
        let nonneg = !self.neg.is_negative()
            && !self.nn.is_negative()
            && !self.limit.is_negative()
            && self.prefix.iter().all(|m| !m.is_negative());
        if !nonneg {
            return Err(Fp1Error::InvalidDist("negative mass".into()));
        }
        for tail in &self.tails {
            if !tail.c.is_positive() {
                return Err(Fp1Error::InvalidDist("tail coefficient must be positive".into()));
            }
            if !tail.r.is_positive() || tail.r >= Rat::one() {
                return Err(Fp1Error::InvalidDist("tail ratio must be in (0,1)".into()));
            }
        }
        let total = self.total_mass();
        if !total.is_one() {
            return Err(Fp1Error::InvalidDist(format!("total mass is {total}, not 1")));
        }
        if !self.condition_d() {
            return Err(Fp1Error::InvalidDist(
                "zero set of chain masses is not upward closed".into(),
            ));
        }
        Ok(())
    }

    /// Evaluates the induced state at a canonical form: the mass of the
    /// down-set of spectrum points whose defining element dominates it.
    pub fn eval_canon(&self, canon: Fp1Canon) -> Rat {
        let mut value = Rat::zero();
        if canon.at_zero {
            value += &self.neg;
        }
        match canon.pos {
            PosPart::ZeroOnPos => {}
            PosPart::Pow(0) => {
                value += &self.nn;
                value += self.chain_mass_from(1);
                value += &self.limit;
            }
            PosPart::Pow(e) => {
                value += self.chain_mass_from(e as usize);
                value += &self.limit;
            }
        }
        value
    }

    /// Evaluates the induced state at a one-variable formula.
    pub fn eval_formula(&self, f: &Formula) -> Result<Rat, Fp1Error> {
        Ok(self.eval_canon(canonicalize(f)?))
    }
}

/// Wraps a validated distribution as a state of the one-variable algebra.
pub fn state_from_dist(dist: SpectrumDist) -> Result<State, Fp1Error> {
    dist.validate()?;
    Ok(State::Spectrum(dist))
}

/// Wraps a distribution without validating it; useful for studying maps
/// that deliberately break the state axioms.
pub fn state_from_dist_unchecked(dist: SpectrumDist) -> State {
    State::Spectrum(dist)
}

/// Approximate spectral masses read off a sampled state: the chain prefix
/// up to a horizon, with everything deeper reported as one unresolved lump.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumApprox {
    pub neg: f64,
    pub nn: f64,
    pub prefix: Vec<f64>,
    pub unresolved: f64,
}

/// The spectral distribution of an arity-1 state.
#[derive(Clone, Debug)]
pub enum DistOutcome {
    Exact(SpectrumDist),
    Approx(SpectrumApprox),
}

/// Reads the spectral mass distribution off a state. Discrete and spectral
/// backends produce the exact distribution; sampled backends estimate chain
/// masses up to `horizon` and report the remainder as unresolved.
pub fn dist_from_state(state: &State, horizon: usize) -> Result<DistOutcome, Fp1Error> {
    if state.arity() != 1 {
        return Err(Fp1Error::WrongStateArity(state.arity()));
    }
    match state {
        State::Dirac(d) => Ok(DistOutcome::Exact(dist_of_points(std::slice::from_ref(
            &(d.point()[0].clone(), Rat::one()),
        )))),
        State::Mixture(m) => {
            let weighted: Vec<(Rat, Rat)> = m
                .points()
                .iter()
                .zip(m.weights())
                .map(|(p, w)| (p[0].clone(), w.clone()))
                .collect();
            Ok(DistOutcome::Exact(dist_of_points(&weighted)))
        }
        State::Spectrum(d) => {
            // Reconstruct the readable masses by actual state evaluation;
            // the tail structure and limit mass are carried over.
            let x = Formula::Var(0);
            let neg = d.eval_formula(&Formula::neg(x.clone()))?;
            let nn = d.eval_formula(&Formula::nneg(x.clone()))? - d.eval_formula(&x)?;
            let mut prefix = Vec::with_capacity(d.prefix.len());
            for n in 1..=d.prefix.len() {
                let here = d.eval_formula(&Formula::pow(x.clone(), n as u32))?;
                let next = d.eval_formula(&Formula::pow(x.clone(), n as u32 + 1))?;
                prefix.push(here - next);
            }
            Ok(DistOutcome::Exact(SpectrumDist {
                neg,
                nn,
                prefix,
                tails: d.tails.clone(),
                limit: d.limit.clone(),
            }))
        }
        State::Sampler(_) => {
            let x = Formula::Var(0);
            let at = |f: &Formula| state.eval(f).to_f64();
            let neg = at(&Formula::neg(x.clone()));
            let nn = at(&Formula::nneg(x.clone())) - at(&x);
            let mut powers: Vec<f64> = Vec::with_capacity(horizon + 1);
            for n in 1..=horizon + 1 {
                powers.push(at(&Formula::pow(x.clone(), n as u32)));
            }
            let prefix: Vec<f64> = (0..horizon).map(|i| powers[i] - powers[i + 1]).collect();
            Ok(DistOutcome::Approx(SpectrumApprox {
                neg,
                nn,
                prefix,
                unresolved: powers[horizon],
            }))
        }
    }
}

/// Exact distribution of a finitely-supported state on `[0,1]`: mass at 0
/// goes to `<~x>`, mass at 1 to the limit point, and each interior atom `t`
/// spreads geometrically over the chain with ratio `t`.
fn dist_of_points(weighted: &[(Rat, Rat)]) -> SpectrumDist {
    let mut neg = Rat::zero();
    let mut nn = Rat::zero();
    let mut limit = Rat::zero();
    let mut tails: Vec<GeomTail> = Vec::new();
    for (t, w) in weighted {
        if t.is_zero() {
            neg += w;
        } else {
            nn += w * (Rat::one() - t);
            if t.is_one() {
                limit += w;
            } else {
                match tails.iter_mut().find(|tail| tail.r == *t) {
                    Some(tail) => tail.c += w * (Rat::one() - t),
                    None => tails.push(GeomTail {
                        c: w * (Rat::one() - t),
                        r: t.clone(),
                    }),
                }
            }
        }
    }
    tails.retain(|tail| !tail.c.is_zero());
    tails.sort_by(|a, b| a.r.cmp(&b.r));
    SpectrumDist {
        neg,
        nn,
        prefix: Vec::new(),
        tails,
        limit,
    }
}

/// Draws a random spectral distribution. With `valid` it satisfies every
/// invariant; otherwise the chain dies while positive mass remains above
/// the break, so the induced functional genuinely violates the fourth
/// state axiom (the mass at some `<x^n>` vanishes while `<~~x>` keeps
/// positive mass).
pub fn random_dist<R: Rng>(rng: &mut R, valid: bool) -> SpectrumDist {
    fn small_rat<R: Rng>(rng: &mut R) -> Rat {
        Rat::new(BigInt::from(rng.gen_range(1..=6)), BigInt::from(rng.gen_range(7..=12)))
    }
    if !valid {
        // No tails and no limit mass, but something positive in the finite
        // chain part; normalizing preserves the broken pattern.
        let prefix_len = rng.gen_range(0..=3usize);
        let neg = if rng.gen_bool(0.5) { small_rat(rng) } else { Rat::zero() };
        let nn = if rng.gen_bool(0.5) { small_rat(rng) } else { Rat::zero() };
        let mut prefix: Vec<Rat> = (0..prefix_len)
            .map(|_| if rng.gen_bool(0.7) { small_rat(rng) } else { Rat::zero() })
            .collect();
        if nn.is_zero() && prefix.iter().all(Zero::is_zero) {
            if prefix.is_empty() {
                prefix.push(Rat::one());
            } else {
                prefix[0] = Rat::one();
            }
        }
        let mut d = SpectrumDist {
            neg,
            nn,
            prefix,
            tails: vec![],
            limit: Rat::zero(),
        };
        let total = d.total_mass();
        d.neg /= &total;
        d.nn /= &total;
        for mass in d.prefix.iter_mut() {
            *mass /= &total;
        }
        return d;
    }
    let mut d = if rng.gen_range(0..5) == 0 {
        // Mass on the crisp points only.
        let neg = if rng.gen_bool(0.5) { small_rat(rng) } else { Rat::zero() };
        SpectrumDist {
            neg: neg.clone(),
            nn: Rat::zero(),
            prefix: vec![],
            tails: vec![],
            limit: Rat::one(),
        }
    } else {
        let prefix_len = rng.gen_range(0..=5usize);
        // Zeros may only prefix the chain read from the top.
        let zeros_top = rng.gen_range(0..=prefix_len.min(2) + 1).min(prefix_len + 1);
        let nn = if zeros_top == 0 { small_rat(rng) } else { Rat::zero() };
        let prefix: Vec<Rat> = (0..prefix_len)
            .map(|i| {
                if i + 1 < zeros_top {
                    Rat::zero()
                } else {
                    small_rat(rng)
                }
            })
            .collect();
        let tails: Vec<GeomTail> = (0..rng.gen_range(1..=3))
            .map(|_| GeomTail {
                c: small_rat(rng),
                r: Rat::new(BigInt::from(rng.gen_range(1..=3)), BigInt::from(rng.gen_range(4..=6))),
            })
            .collect();
        let neg = if rng.gen_bool(0.5) { small_rat(rng) } else { Rat::zero() };
        let limit = if rng.gen_bool(0.5) { small_rat(rng) } else { Rat::zero() };
        SpectrumDist {
            neg,
            nn,
            prefix,
            tails,
            limit,
        }
    };
    let total = d.total_mass();
    d.neg /= &total;
    d.nn /= &total;
    for mass in d.prefix.iter_mut() {
        *mass /= &total;
    }
    for tail in d.tails.iter_mut() {
        tail.c /= &total;
    }
    d.limit /= &total;
    d
}

/// Reports how far the mass pattern of an approximate reading is from the
/// nearest valid pattern; a convenience for sampled states.
pub fn approx_total(approx: &SpectrumApprox) -> f64 {
    approx.neg + approx.nn + approx.prefix.iter().sum::<f64>() + approx.unresolved
}

pub fn rat_vec_to_f64(values: &[Rat]) -> Vec<f64> {
    values.iter().map(rat_to_f64).collect()
}
