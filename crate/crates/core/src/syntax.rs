//! Formula syntax for the product language and the two-tiered modal
//! probability language on top of it.
//!
//! Product connectives: strong conjunction `*`, lattice meet `&`, lattice
//! join `|`, residuated implication `->`, constants `0` and `1`, variables
//! `x0`, `x1`, ... Negation `~f` abbreviates `f -> 0` and `f^k` the k-fold
//! strong conjunction; both are desugared at parse time.
//!
//! Modal formulas place atoms `P(f)` (probability of a product formula)
//! under Lukasiewicz connectives `!`, `=>`, `(+)`, `(-)`, `<=>` and the
//! crispness operator `D(.)`. `(+)`, `(-)` and `<=>` are desugared to the
//! `!`/`=>` primitives.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A product-logic formula over variables `x0..x{n-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    Bot,
    Top,
    Var(usize),
    /// Strong conjunction, interpreted as multiplication.
    Conj(Box<Formula>, Box<Formula>),
    /// Residuated implication.
    Impl(Box<Formula>, Box<Formula>),
    /// Lattice meet (pointwise minimum).
    Meet(Box<Formula>, Box<Formula>),
    /// Lattice join (pointwise maximum).
    Join(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn var(i: usize) -> Formula {
        Formula::Var(i)
    }

    pub fn conj(a: Formula, b: Formula) -> Formula {
        Formula::Conj(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Impl(Box::new(a), Box::new(b))
    }

    pub fn meet(a: Formula, b: Formula) -> Formula {
        Formula::Meet(Box::new(a), Box::new(b))
    }

    pub fn join(a: Formula, b: Formula) -> Formula {
        Formula::Join(Box::new(a), Box::new(b))
    }

    /// Negation `~a`, desugared to `a -> 0`.
    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Formula) -> Formula {
        Formula::imp(a, Formula::Bot)
    }

    /// Double negation `~~a`.
    pub fn nneg(a: Formula) -> Formula {
        Formula::neg(Formula::neg(a))
    }

    /// `a^k`, the k-fold strong conjunction folded to the left; `k >= 1`.
    pub fn pow(a: Formula, k: u32) -> Formula {
        assert!(k >= 1, "power exponent must be at least 1");
        let mut acc = a.clone();
        for _ in 1..k {
            acc = Formula::conj(acc, a.clone());
        }
        acc
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Formula::Bot | Formula::Top => None,
            Formula::Var(i) => Some(*i),
            Formula::Conj(a, b) | Formula::Impl(a, b) | Formula::Meet(a, b) | Formula::Join(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    /// Checks that every variable index is below `arity`.
    pub fn fits_arity(&self, arity: usize) -> bool {
        self.max_var().is_none_or(|m| m < arity)
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Bot | Formula::Top | Formula::Var(_) => 1,
            Formula::Conj(a, b) | Formula::Impl(a, b) | Formula::Meet(a, b) | Formula::Join(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }
}

/// A modal formula: Lukasiewicz connectives over probability atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModalFormula {
    Zero,
    One,
    /// Probability atom `P(f)` over a product formula.
    Atom(Formula),
    /// Lukasiewicz negation `!a`, interpreted as `1 - a`.
    LNeg(Box<ModalFormula>),
    /// Lukasiewicz implication `a => b`, interpreted as `min(1, 1 - a + b)`.
    LImpl(Box<ModalFormula>, Box<ModalFormula>),
    /// Crispness `D(a)`: value 1 when `a` is 1 and 0 otherwise.
    Delta(Box<ModalFormula>),
}

impl ModalFormula {
    pub fn atom(f: Formula) -> ModalFormula {
        ModalFormula::Atom(f)
    }

    pub fn lneg(a: ModalFormula) -> ModalFormula {
        ModalFormula::LNeg(Box::new(a))
    }

    pub fn limp(a: ModalFormula, b: ModalFormula) -> ModalFormula {
        ModalFormula::LImpl(Box::new(a), Box::new(b))
    }

    pub fn delta(a: ModalFormula) -> ModalFormula {
        ModalFormula::Delta(Box::new(a))
    }

    /// Truncated sum `a (+) b`, desugared to `!a => b`.
    pub fn oplus(a: ModalFormula, b: ModalFormula) -> ModalFormula {
        ModalFormula::limp(ModalFormula::lneg(a), b)
    }

    /// Truncated difference `a (-) b`, desugared to `!(a => b)`.
    pub fn ominus(a: ModalFormula, b: ModalFormula) -> ModalFormula {
        ModalFormula::lneg(ModalFormula::limp(a, b))
    }

    /// Biconditional `a <=> b`, the strong conjunction of both implications.
    pub fn lequiv(a: ModalFormula, b: ModalFormula) -> ModalFormula {
        let fwd = ModalFormula::limp(a.clone(), b.clone());
        let bwd = ModalFormula::limp(b, a);
        ModalFormula::lneg(ModalFormula::limp(fwd, ModalFormula::lneg(bwd)))
    }

    /// Distinct probability-atom payloads in first-occurrence order.
    pub fn atom_payloads(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Formula>) {
        match self {
            ModalFormula::Zero | ModalFormula::One => {}
            ModalFormula::Atom(f) => {
                if !out.contains(&f) {
                    out.push(f);
                }
            }
            ModalFormula::LNeg(a) | ModalFormula::Delta(a) => a.collect_atoms(out),
            ModalFormula::LImpl(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Distinct `D(.)` subformulas in first-occurrence order.
    pub fn delta_subformulas(&self) -> Vec<&ModalFormula> {
        let mut out = Vec::new();
        self.collect_deltas(&mut out);
        out
    }

    fn collect_deltas<'a>(&'a self, out: &mut Vec<&'a ModalFormula>) {
        match self {
            ModalFormula::Zero | ModalFormula::One | ModalFormula::Atom(_) => {}
            ModalFormula::LNeg(a) => a.collect_deltas(out),
            ModalFormula::LImpl(a, b) => {
                a.collect_deltas(out);
                b.collect_deltas(out);
            }
            ModalFormula::Delta(a) => {
                a.collect_deltas(out);
                if !out.contains(&self) {
                    out.push(self);
                }
            }
        }
    }

    /// Largest product-variable index used in any atom, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            ModalFormula::Zero | ModalFormula::One => None,
            ModalFormula::Atom(f) => f.max_var(),
            ModalFormula::LNeg(a) | ModalFormula::Delta(a) => a.max_var(),
            ModalFormula::LImpl(a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }
}

/// Parse failure with a character position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("variable x{index} out of range for arity {arity}")]
    Arity { index: usize, arity: usize },
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    arity: usize,
}

impl Parser {
    fn new(text: &str, arity: usize) -> Self {
        Parser {
            chars: text.chars().collect(),
            pos: 0,
            arity,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn parse_nat(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err("expected a number");
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<usize>()
            .map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("number {text} too large"),
            })
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        if self.pos < self.chars.len() {
            self.err(format!("unexpected '{}'", self.chars[self.pos]))
        } else {
            Ok(())
        }
    }

    // Product grammar, loosest binding first: ->, |, &, *, then ~ and ^.

    fn product_impl(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.product_join()?;
        if self.peek() == Some('-') && self.peek_at(1) == Some('>') {
            self.pos += 2;
            let rhs = self.product_impl()?;
            Ok(Formula::imp(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn product_join(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.product_meet()?;
        while self.peek() == Some('|') {
            self.pos += 1;
            acc = Formula::join(acc, self.product_meet()?);
        }
        Ok(acc)
    }

    fn product_meet(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.product_conj()?;
        while self.peek() == Some('&') {
            self.pos += 1;
            acc = Formula::meet(acc, self.product_conj()?);
        }
        Ok(acc)
    }

    fn product_conj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.product_unary()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            acc = Formula::conj(acc, self.product_unary()?);
        }
        Ok(acc)
    }

    fn product_unary(&mut self) -> Result<Formula, ParseError> {
        if self.peek() == Some('~') {
            self.pos += 1;
            return Ok(Formula::neg(self.product_unary()?));
        }
        self.product_postfix()
    }

    fn product_postfix(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.product_atom()?;
        while self.peek() == Some('^') {
            self.pos += 1;
            let k = self.parse_nat()?;
            if k == 0 {
                return self.err("power exponent must be at least 1");
            }
            acc = Formula::pow(acc, k as u32);
        }
        Ok(acc)
    }

    fn product_atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some('0') => {
                self.pos += 1;
                Ok(Formula::Bot)
            }
            Some('1') => {
                self.pos += 1;
                Ok(Formula::Top)
            }
            Some('x') => {
                self.pos += 1;
                let index = self.parse_nat()?;
                if index >= self.arity {
                    Err(ParseError::Arity {
                        index,
                        arity: self.arity,
                    })
                } else {
                    Ok(Formula::Var(index))
                }
            }
            Some('(') => {
                self.pos += 1;
                let inner = self.product_impl()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(c) => self.err(format!("unexpected '{c}'")),
            None => self.err("unexpected end of input"),
        }
    }

    // Modal grammar, loosest binding first: <=>, =>, (+)/(-), then !, D, P.

    fn modal_equiv(&mut self) -> Result<ModalFormula, ParseError> {
        let mut acc = self.modal_impl()?;
        loop {
            self.skip_ws();
            if self.chars[self.pos..].starts_with(&['<', '=', '>']) {
                self.pos += 3;
                acc = ModalFormula::lequiv(acc, self.modal_impl()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn modal_impl(&mut self) -> Result<ModalFormula, ParseError> {
        let lhs = self.modal_sum()?;
        self.skip_ws();
        if self.chars[self.pos..].starts_with(&['=', '>']) {
            self.pos += 2;
            let rhs = self.modal_impl()?;
            Ok(ModalFormula::limp(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn modal_sum(&mut self) -> Result<ModalFormula, ParseError> {
        let mut acc = self.modal_unary()?;
        loop {
            self.skip_ws();
            if self.chars[self.pos..].starts_with(&['(', '+', ')']) {
                self.pos += 3;
                acc = ModalFormula::oplus(acc, self.modal_unary()?);
            } else if self.chars[self.pos..].starts_with(&['(', '-', ')']) {
                self.pos += 3;
                acc = ModalFormula::ominus(acc, self.modal_unary()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn modal_unary(&mut self) -> Result<ModalFormula, ParseError> {
        match self.peek() {
            Some('!') => {
                self.pos += 1;
                Ok(ModalFormula::lneg(self.modal_unary()?))
            }
            Some('D') => {
                self.pos += 1;
                self.expect('(')?;
                let inner = self.modal_equiv()?;
                self.expect(')')?;
                Ok(ModalFormula::delta(inner))
            }
            Some('P') => {
                self.pos += 1;
                self.expect('(')?;
                let inner = self.product_impl()?;
                self.expect(')')?;
                Ok(ModalFormula::atom(inner))
            }
            Some('0') => {
                self.pos += 1;
                Ok(ModalFormula::Zero)
            }
            Some('1') => {
                self.pos += 1;
                Ok(ModalFormula::One)
            }
            Some('(') => {
                // A bare '(' here must open a group: '(+)' and '(-)' never
                // start a formula.
                self.pos += 1;
                let inner = self.modal_equiv()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(c) => self.err(format!("unexpected '{c}'")),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses a product formula, desugaring `~` and `^k`.
pub fn parse_formula(text: &str, arity: usize) -> Result<Formula, ParseError> {
    let mut parser = Parser::new(text, arity);
    let formula = parser.product_impl()?;
    parser.finish()?;
    Ok(formula)
}

/// Parses a modal formula, desugaring `(+)`, `(-)` and `<=>`.
pub fn parse_modal(text: &str, arity: usize) -> Result<ModalFormula, ParseError> {
    let mut parser = Parser::new(text, arity);
    let formula = parser.modal_equiv()?;
    parser.finish()?;
    Ok(formula)
}

// Precedence levels used by the printers; larger binds tighter.
const PREC_IMPL: u8 = 0;
const PREC_JOIN: u8 = 1;
const PREC_MEET: u8 = 2;
const PREC_CONJ: u8 = 3;
const PREC_UNARY: u8 = 4;
const PREC_ATOM: u8 = 6;

/// Views a formula as `base^k` when it is a left fold of equal conjuncts.
fn as_power(f: &Formula) -> (&Formula, u32) {
    match f {
        Formula::Conj(l, r) => {
            let (base, k) = as_power(l);
            if base == r.as_ref() {
                (base, k + 1)
            } else {
                (f, 1)
            }
        }
        _ => (f, 1),
    }
}

fn fmt_formula(f: &Formula, min_prec: u8, out: &mut String) {
    // Resugar negation and powers before structural dispatch.
    if let Formula::Impl(a, b) = f {
        if **b == Formula::Bot {
            if min_prec > PREC_UNARY {
                out.push('(');
                fmt_formula(f, 0, out);
                out.push(')');
            } else {
                out.push('~');
                fmt_formula(a, PREC_UNARY, out);
            }
            return;
        }
    }
    let (base, k) = as_power(f);
    if k >= 2 {
        if min_prec > PREC_UNARY {
            out.push('(');
            fmt_formula(f, 0, out);
            out.push(')');
        } else {
            fmt_formula(base, PREC_ATOM, out);
            out.push('^');
            out.push_str(&k.to_string());
        }
        return;
    }
    match f {
        Formula::Bot => out.push('0'),
        Formula::Top => out.push('1'),
        Formula::Var(i) => {
            out.push('x');
            out.push_str(&i.to_string());
        }
        Formula::Conj(a, b) => fmt_binary(a, " * ", b, PREC_CONJ, false, min_prec, out),
        Formula::Meet(a, b) => fmt_binary(a, " & ", b, PREC_MEET, false, min_prec, out),
        Formula::Join(a, b) => fmt_binary(a, " | ", b, PREC_JOIN, false, min_prec, out),
        Formula::Impl(a, b) => fmt_binary(a, " -> ", b, PREC_IMPL, true, min_prec, out),
    }
}

fn fmt_binary(
    a: &Formula,
    op: &str,
    b: &Formula,
    prec: u8,
    right_assoc: bool,
    min_prec: u8,
    out: &mut String,
) {
    let needs_parens = min_prec > prec;
    if needs_parens {
        out.push('(');
    }
    let (lp, rp) = if right_assoc {
        (prec + 1, prec)
    } else {
        (prec, prec + 1)
    };
    fmt_formula(a, lp, out);
    out.push_str(op);
    fmt_formula(b, rp, out);
    if needs_parens {
        out.push(')');
    }
}

/// Prints a product formula with minimal parentheses; round-trips through
/// `parse_formula`.
pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    fmt_formula(f, 0, &mut out);
    out
}

const MPREC_IMPL: u8 = 0;
const MPREC_SUM: u8 = 1;
const MPREC_UNARY: u8 = 2;

fn fmt_modal(f: &ModalFormula, min_prec: u8, out: &mut String) {
    match f {
        ModalFormula::Zero => out.push('0'),
        ModalFormula::One => out.push('1'),
        ModalFormula::Atom(p) => {
            out.push_str("P(");
            out.push_str(&print_formula(p));
            out.push(')');
        }
        ModalFormula::Delta(a) => {
            out.push_str("D(");
            fmt_modal(a, 0, out);
            out.push(')');
        }
        ModalFormula::LNeg(a) => {
            if min_prec > MPREC_UNARY {
                out.push('(');
                fmt_modal(f, 0, out);
                out.push(')');
            } else {
                out.push('!');
                fmt_modal(a, MPREC_UNARY, out);
            }
        }
        ModalFormula::LImpl(a, b) => {
            let needs_parens = min_prec > MPREC_IMPL;
            if needs_parens {
                out.push('(');
            }
            fmt_modal(a, MPREC_SUM, out);
            out.push_str(" => ");
            fmt_modal(b, MPREC_IMPL, out);
            if needs_parens {
                out.push(')');
            }
        }
    }
}

/// Prints a modal formula using only the primitive connectives; round-trips
/// through `parse_modal`.
pub fn print_modal(f: &ModalFormula) -> String {
    let mut out = String::new();
    fmt_modal(f, 0, &mut out);
    out
}

/// Draws a random product formula of the given depth budget.
pub fn random_formula<R: Rng>(rng: &mut R, arity: usize, max_depth: u32) -> Formula {
    if max_depth == 0 || rng.gen_range(0..10) == 0 {
        return match rng.gen_range(0..6) {
            0 => Formula::Bot,
            1 => Formula::Top,
            _ if arity > 0 => Formula::Var(rng.gen_range(0..arity)),
            _ => Formula::Top,
        };
    }
    let a = random_formula(rng, arity, max_depth - 1);
    match rng.gen_range(0..6) {
        0 => Formula::conj(a, random_formula(rng, arity, max_depth - 1)),
        1 => Formula::meet(a, random_formula(rng, arity, max_depth - 1)),
        2 => Formula::join(a, random_formula(rng, arity, max_depth - 1)),
        3 => Formula::imp(a, random_formula(rng, arity, max_depth - 1)),
        4 => Formula::neg(a),
        _ => Formula::pow(a, rng.gen_range(2..=3)),
    }
}

/// Draws a random modal formula whose atoms use the given arity.
pub fn random_modal<R: Rng>(rng: &mut R, arity: usize, max_depth: u32) -> ModalFormula {
    if max_depth == 0 || rng.gen_range(0..8) == 0 {
        return match rng.gen_range(0..5) {
            0 => ModalFormula::Zero,
            1 => ModalFormula::One,
            _ => ModalFormula::atom(random_formula(rng, arity, 2)),
        };
    }
    let a = random_modal(rng, arity, max_depth - 1);
    match rng.gen_range(0..6) {
        0 => ModalFormula::lneg(a),
        1 => ModalFormula::limp(a, random_modal(rng, arity, max_depth - 1)),
        2 => ModalFormula::delta(a),
        3 => ModalFormula::oplus(a, random_modal(rng, arity, max_depth - 1)),
        4 => ModalFormula::ominus(a, random_modal(rng, arity, max_depth - 1)),
        _ => ModalFormula::lequiv(a, random_modal(rng, arity, max_depth - 1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_and_desugars_negation() {
        let f = parse_formula("~~x0", 1).unwrap();
        let expected = Formula::nneg(Formula::Var(0));
        assert_eq!(f, expected);
    }

    #[test]
    fn parses_powers_as_left_folds() {
        let f = parse_formula("x0^3", 1).unwrap();
        let x = Formula::Var(0);
        assert_eq!(
            f,
            Formula::conj(Formula::conj(x.clone(), x.clone()), x.clone())
        );
    }

    #[test]
    fn rejects_zero_power() {
        assert!(parse_formula("x0^0", 1).is_err());
    }

    #[test]
    fn implication_is_right_associative() {
        let f = parse_formula("x0 -> x1 -> x2", 3).unwrap();
        let expected = Formula::imp(
            Formula::Var(0),
            Formula::imp(Formula::Var(1), Formula::Var(2)),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn precedence_orders_connectives() {
        let f = parse_formula("x0 * x1 & x2 | x0 -> x1", 3).unwrap();
        let expected = Formula::imp(
            Formula::join(
                Formula::meet(Formula::conj(Formula::Var(0), Formula::Var(1)), Formula::Var(2)),
                Formula::Var(0),
            ),
            Formula::Var(1),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn rejects_out_of_range_variables() {
        assert_eq!(
            parse_formula("x3", 3),
            Err(ParseError::Arity { index: 3, arity: 3 })
        );
    }

    #[test]
    fn prints_with_minimal_parentheses() {
        let f = Formula::meet(Formula::Var(0), Formula::Var(1));
        assert_eq!(print_formula(&f), "x0 & x1");
        let g = parse_formula("(x0 | x1) & x2", 3).unwrap();
        assert_eq!(print_formula(&g), "(x0 | x1) & x2");
        let h = parse_formula("~(x0 & x1)^2", 2).unwrap();
        assert_eq!(print_formula(&h), "~(x0 & x1)^2");
    }

    #[test]
    fn modal_parses_sugar() {
        let f = parse_modal("P(x0) (+) P(x1)", 2).unwrap();
        let expected = ModalFormula::oplus(
            ModalFormula::atom(Formula::Var(0)),
            ModalFormula::atom(Formula::Var(1)),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn modal_equivalence_example() {
        let f = parse_modal("P(x0) <=> !P(x0)", 1).unwrap();
        let a = ModalFormula::atom(Formula::Var(0));
        assert_eq!(f, ModalFormula::lequiv(a.clone(), ModalFormula::lneg(a)));
    }

    #[test]
    fn modal_sum_groups_to_the_left() {
        let f = parse_modal("P(x0) (-) P(x1) (+) P(x0)", 2).unwrap();
        let a = ModalFormula::atom(Formula::Var(0));
        let b = ModalFormula::atom(Formula::Var(1));
        assert_eq!(
            f,
            ModalFormula::oplus(ModalFormula::ominus(a.clone(), b), a)
        );
    }

    #[test]
    fn collects_atoms_and_deltas_in_order() {
        let f = parse_modal("D(P(x0)) => P(x1) (+) P(x0)", 2).unwrap();
        let payloads = f.atom_payloads();
        assert_eq!(payloads, vec![&Formula::Var(0), &Formula::Var(1)]);
        assert_eq!(f.delta_subformulas().len(), 1);
    }

    #[test]
    fn print_parse_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let f = random_formula(&mut rng, 3, 5);
            let text = print_formula(&f);
            let back = parse_formula(&text, 3).unwrap_or_else(|e| {
                panic!("failed to reparse {text:?}: {e}");
            });
            assert_eq!(back, f, "round trip failed for {text}");
        }
    }

    #[test]
    fn modal_print_parse_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let f = random_modal(&mut rng, 2, 4);
            let text = print_modal(&f);
            let back = parse_modal(&text, 2).unwrap_or_else(|e| {
                panic!("failed to reparse {text:?}: {e}");
            });
            assert_eq!(back, f, "round trip failed for {text}");
        }
    }
}
