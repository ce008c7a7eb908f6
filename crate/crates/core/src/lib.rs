//! Exact semantics, states, and probability logic over free product algebras.
//!
//! The crate models functions of the free algebra of product logic as
//! cell-wise piecewise monomials, decides tautology and equivalence exactly,
//! evaluates probabilistic states over formulas with discrete and sampled
//! backends, realizes the one-variable duality between states and spectral
//! mass distributions, and checks and searches the two-tiered modal
//! probability logic on top.

pub mod cells;
pub mod fp1;
pub mod lp;
pub mod modal;
pub mod pwl;
pub mod semantics;
pub mod states;
pub mod syntax;
pub mod value;

pub use cells::{atom_formula, cell_of_point, enumerate_cells, interior_point, in_slice, CellIndex};
pub use fp1::{
    canon_conj, canon_imp, canon_join, canon_meet, canon_neg, canon_nneg, canonicalize,
    dist_from_state, random_dist, state_from_dist, state_from_dist_unchecked, DistOutcome,
    Fp1Canon, Fp1Error, GeomTail, PosPart, SpectrumApprox, SpectrumDist,
};
pub use modal::{
    axiom_instances, check_soundness, entails, eval_modal, sat_search, EntailOutcome, SatOutcome,
    SatProblem, SatWitness, SearchBudget, SearchDiagnostics, SoundnessReport, SoundnessViolation,
};
pub use pwl::{
    cellwise_le, eval_cellwise, implies, is_boolean, is_equivalent, is_tautology, lower,
    lower_on_cell, normalize_combination, CellFunc, CellwiseFunc, LinearCombination, MinMaxTerm,
};
pub use semantics::{eval_formula, eval_formula_f64};
pub use states::{
    cell_decomposition_eval, check_s4_prime, check_state_axioms, check_state_axioms_with_pairs,
    derived_identities, implication_pairs, random_mixture, random_point, tau_epsilon,
    AxiomCounts, AxiomViolation, CellDecomposition, DerivedReport, DiracState, Evaluation,
    IdentityCheck, MixComponent, MixPart, MixtureState, SamplerLaw, SamplerState, State,
    StateAxiom, StateAxiomReport, StateError,
};
pub use syntax::{
    parse_formula, parse_modal, print_formula, print_modal, Formula, ModalFormula, ParseError,
};
pub use value::{Rat, Value};
