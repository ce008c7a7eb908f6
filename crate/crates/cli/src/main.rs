//! Batch command surface over the library: parsing, cell geometry, the
//! exact decision procedures, state evaluation, the one-variable duality,
//! and the modal layer. Inputs and outputs are UTF-8 JSON with rationals
//! as `p/q` strings; identical invocations produce byte-identical output.

use clap::{Args, Parser, Subcommand};
use prodstates::syntax::random_formula;
use prodstates::value::{rat, rat_from_str, rat_to_string, Rat};
use prodstates::{
    atom_formula, axiom_instances, cell_of_point, check_s4_prime, check_soundness,
    check_state_axioms, dist_from_state, enumerate_cells, entails, eval_formula, eval_modal,
    is_equivalent, is_tautology, parse_formula, parse_modal, print_formula, print_modal,
    sat_search, state_from_dist, DistOutcome, EntailOutcome, Formula, SatOutcome, SatProblem,
    SatWitness, SpectrumApprox, SpectrumDist, State, Value,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "prodstates",
    version,
    about = "Exact states and probability logic over free product algebras"
)]
struct Cli {
    /// Pretty-print the JSON envelope.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and print its desugared form.
    Parse(ParseArgs),
    /// List the cells of the unit cube with their atoms, or locate a point.
    Cells(CellsArgs),
    /// Evaluate a formula at a rational point, exactly.
    Eval(EvalArgs),
    /// Decide whether a formula is identically 1.
    Taut(FormulaArgs),
    /// Decide whether two formulas agree everywhere.
    Equiv(PairArgs),
    /// Evaluate a state on a formula.
    StateEval(StateFormulaArgs),
    /// Check the state axioms on a seeded random formula suite.
    StateCheck(StateCheckArgs),
    /// Read the spectral distribution off an arity-1 state.
    Fp1ToDist(Fp1ToDistArgs),
    /// Build the state defined by a spectral distribution.
    Fp1FromDist(Fp1FromDistArgs),
    /// Evaluate a modal formula under a state.
    ModalEval(StateFormulaArgs),
    /// Instantiate the modal axiom schemes for a pair of events.
    ModalAxioms(ModalAxiomsArgs),
    /// Search for a state satisfying a modal problem.
    ModalSat(ProblemArgs),
    /// Check a modal entailment within the problem's budget.
    ModalEntails(ProblemArgs),
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long)]
    arity: usize,
    /// Parse the modal language instead of the event language.
    #[arg(long)]
    modal: bool,
    formula: String,
}

#[derive(Args)]
struct CellsArgs {
    #[arg(long)]
    arity: usize,
    /// Comma-separated rational coordinates; prints the containing cell.
    #[arg(long)]
    point: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    arity: usize,
    /// Comma-separated rational coordinates in [0,1].
    #[arg(long)]
    point: String,
    formula: String,
}

#[derive(Args)]
struct FormulaArgs {
    #[arg(long)]
    arity: usize,
    formula: String,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    arity: usize,
    left: String,
    right: String,
}

#[derive(Args)]
struct StateFormulaArgs {
    /// State file (JSON).
    #[arg(long)]
    state: PathBuf,
    formula: String,
}

#[derive(Args)]
struct StateCheckArgs {
    /// State file (JSON), taken as written so broken inputs can be examined.
    #[arg(long)]
    state: PathBuf,
    /// Violation tolerance; leave at 0 for exact backends.
    #[arg(long, default_value = "0")]
    tol: String,
    /// Seed for the random formula suite.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of suite formulas.
    #[arg(long, default_value_t = 60)]
    count: usize,
    /// Maximum formula depth.
    #[arg(long, default_value_t = 5)]
    depth: u32,
}

#[derive(Args)]
struct Fp1ToDistArgs {
    /// State file (JSON); the state must have arity 1.
    #[arg(long)]
    state: PathBuf,
    /// Chain depth resolved for sampled states.
    #[arg(long, default_value_t = 10)]
    horizon: usize,
}

#[derive(Args)]
struct Fp1FromDistArgs {
    /// Spectral distribution file (JSON).
    #[arg(long)]
    dist: PathBuf,
}

#[derive(Args)]
struct ModalAxiomsArgs {
    #[arg(long)]
    arity: usize,
    /// State file (JSON); when given, every instance is checked to be 1.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Soundness tolerance; leave at 0 for exact backends.
    #[arg(long, default_value = "0")]
    tol: String,
    phi: String,
    psi: String,
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem file (JSON).
    #[arg(long)]
    problem: PathBuf,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl Failure {
    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Domain(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Domain(_) => 1,
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Output = (serde_json::Value, Vec<String>);

#[derive(Serialize)]
struct Envelope {
    ok: bool,
    result: serde_json::Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    diagnostics: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pretty = cli.json;
    match run(cli.command) {
        Ok((result, diagnostics)) => {
            let envelope = Envelope {
                ok: true,
                result,
                diagnostics,
            };
            println!("{}", render(&envelope, pretty));
            ExitCode::SUCCESS
        }
        Err(failure) => {
            let envelope = json!({"ok": false, "error": failure.message()});
            println!("{}", render(&envelope, pretty));
            ExitCode::from(failure.exit_code())
        }
    }
}

fn render<T: Serialize>(value: &T, pretty: bool) -> String {
    if pretty {
        serde_json::to_string_pretty(value).expect("output serializes")
    } else {
        serde_json::to_string(value).expect("output serializes")
    }
}

fn run(command: Command) -> Result<Output, Failure> {
    match command {
        Command::Parse(args) => run_parse(args),
        Command::Cells(args) => run_cells(args),
        Command::Eval(args) => run_eval(args),
        Command::Taut(args) => {
            let f = parse_event(&args.formula, args.arity)?;
            Ok((json!(is_tautology(&f, args.arity)), Vec::new()))
        }
        Command::Equiv(args) => {
            let f = parse_event(&args.left, args.arity)?;
            let g = parse_event(&args.right, args.arity)?;
            Ok((json!(is_equivalent(&f, &g, args.arity)), Vec::new()))
        }
        Command::StateEval(args) => run_state_eval(args),
        Command::StateCheck(args) => run_state_check(args),
        Command::Fp1ToDist(args) => run_fp1_to_dist(args),
        Command::Fp1FromDist(args) => run_fp1_from_dist(args),
        Command::ModalEval(args) => run_modal_eval(args),
        Command::ModalAxioms(args) => run_modal_axioms(args),
        Command::ModalSat(args) => {
            let problem = load_problem(&args.problem)?;
            Ok((sat_json(sat_search(&problem))?, Vec::new()))
        }
        Command::ModalEntails(args) => run_modal_entails(args),
    }
}

fn run_parse(args: ParseArgs) -> Result<Output, Failure> {
    let printed = if args.modal {
        let phi = parse_modal(&args.formula, args.arity).map_err(|e| Failure::Domain(e.to_string()))?;
        print_modal(&phi)
    } else {
        print_formula(&parse_event(&args.formula, args.arity)?)
    };
    Ok((json!(printed), Vec::new()))
}

fn run_cells(args: CellsArgs) -> Result<Output, Failure> {
    match args.point {
        Some(text) => {
            let point = parse_point(&text, args.arity)?;
            Ok((json!(cell_of_point(&point).to_string()), Vec::new()))
        }
        None => {
            let rows: Vec<serde_json::Value> = enumerate_cells(args.arity)
                .iter()
                .map(|cell| {
                    json!({
                        "cell": cell.to_string(),
                        "atom": print_formula(&atom_formula(cell)),
                    })
                })
                .collect();
            Ok((json!(rows), Vec::new()))
        }
    }
}

fn run_eval(args: EvalArgs) -> Result<Output, Failure> {
    let f = parse_event(&args.formula, args.arity)?;
    let point = parse_point(&args.point, args.arity)?;
    Ok((json!(rat_to_string(&eval_formula(&f, &point))), Vec::new()))
}

fn run_state_eval(args: StateFormulaArgs) -> Result<Output, Failure> {
    let state = load_state(&args.state)?;
    let f = parse_event(&args.formula, state.arity())?;
    let evaluation = state.evaluate(&f);
    let mut diagnostics = Vec::new();
    if !state.is_exact() {
        diagnostics.push(format!("std_error={}", approx12(evaluation.std_error)));
    }
    Ok((json!(fmt_value(&evaluation.value)), diagnostics))
}

fn run_state_check(args: StateCheckArgs) -> Result<Output, Failure> {
    let state: State = read_json_file(&args.state, "--state")?;
    let tol = parse_tol(&args.tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let formulas: Vec<Formula> = (0..args.count)
        .map(|_| random_formula(&mut rng, state.arity(), args.depth))
        .collect();
    let axioms = check_state_axioms(&state, &formulas, &tol);
    let prime = check_s4_prime(&state, &formulas, &tol);
    let mut checked = axioms.checked;
    checked.s4_prime = prime.checked.s4_prime;
    let mut violations = axioms.violations;
    violations.extend(prime.violations);
    let result = json!({
        "passed": violations.is_empty(),
        "checked": serde_json::to_value(checked)?,
        "violations": serde_json::to_value(violations)?,
    });
    Ok((result, Vec::new()))
}

fn run_fp1_to_dist(args: Fp1ToDistArgs) -> Result<Output, Failure> {
    let state = load_state(&args.state)?;
    let outcome =
        dist_from_state(&state, args.horizon).map_err(|e| Failure::Domain(e.to_string()))?;
    match outcome {
        DistOutcome::Exact(dist) => Ok((serde_json::to_value(&dist)?, Vec::new())),
        DistOutcome::Approx(approx) => Ok((
            approx_json(&approx),
            vec!["sampled state: chain masses beyond the horizon are unresolved".into()],
        )),
    }
}

fn run_fp1_from_dist(args: Fp1FromDistArgs) -> Result<Output, Failure> {
    let dist: SpectrumDist = read_json_file(&args.dist, "--dist")?;
    let state = state_from_dist(dist)
        .map_err(|e| Failure::Domain(format!("{}: {e}", args.dist.display())))?;
    Ok((serde_json::to_value(&state)?, Vec::new()))
}

fn run_modal_eval(args: StateFormulaArgs) -> Result<Output, Failure> {
    let state = load_state(&args.state)?;
    let phi =
        parse_modal(&args.formula, state.arity()).map_err(|e| Failure::Domain(e.to_string()))?;
    let value = eval_modal(&state, &phi);
    let mut diagnostics = Vec::new();
    if !state.is_exact() {
        diagnostics.push("sampled state: the value is a Monte-Carlo estimate".into());
    }
    Ok((json!(fmt_value(&value)), diagnostics))
}

fn run_modal_axioms(args: ModalAxiomsArgs) -> Result<Output, Failure> {
    let phi = parse_event(&args.phi, args.arity)?;
    let psi = parse_event(&args.psi, args.arity)?;
    let instances = axiom_instances(&phi, &psi, args.arity);
    let rows: Vec<serde_json::Value> = instances
        .iter()
        .map(|(axiom, instance)| json!({"axiom": axiom, "formula": print_modal(instance)}))
        .collect();
    match args.state {
        None => Ok((json!({ "instances": rows }), Vec::new())),
        Some(path) => {
            let state = load_state(&path)?;
            if state.arity() != args.arity {
                return Err(Failure::Domain(format!(
                    "state arity {} does not match --arity {}",
                    state.arity(),
                    args.arity
                )));
            }
            let tol = parse_tol(&args.tol)?;
            let report = check_soundness(&state, &instances, &tol);
            let diagnostics = report
                .violations
                .iter()
                .map(|v| {
                    format!(
                        "{} instance {} evaluates to {}",
                        v.axiom,
                        print_modal(&v.instance),
                        fmt_value(&v.value)
                    )
                })
                .collect();
            Ok((
                json!({"instances": rows, "sound": report.passed()}),
                diagnostics,
            ))
        }
    }
}

fn run_modal_entails(args: ProblemArgs) -> Result<Output, Failure> {
    let problem = load_problem(&args.problem)?;
    if problem.target.is_none() {
        return Err(Failure::Domain(format!(
            "{}: entailment needs a target",
            args.problem.display()
        )));
    }
    let result = match entails(&problem) {
        EntailOutcome::HoldsOnBudget(diagnostics) => json!({
            "outcome": "holds-on-budget",
            "search": serde_json::to_value(&diagnostics)?,
        }),
        EntailOutcome::Countermodel(witness) => json!({
            "outcome": "countermodel",
            "witness": witness_json(&witness)?,
            "search": serde_json::to_value(&witness.diagnostics)?,
        }),
    };
    Ok((result, Vec::new()))
}

fn sat_json(outcome: SatOutcome) -> Result<serde_json::Value, Failure> {
    Ok(match outcome {
        SatOutcome::Sat(witness) => json!({
            "outcome": "sat",
            "witness": witness_json(&witness)?,
            "search": serde_json::to_value(&witness.diagnostics)?,
        }),
        SatOutcome::NoWitnessFound(diagnostics) => json!({
            "outcome": "no-witness-found",
            "search": serde_json::to_value(&diagnostics)?,
        }),
    })
}

fn witness_json(witness: &SatWitness) -> Result<serde_json::Value, Failure> {
    let trace: Vec<serde_json::Value> = witness
        .trace
        .iter()
        .map(|(phi, value)| json!([print_modal(phi), fmt_value(value)]))
        .collect();
    Ok(json!({
        "state": serde_json::to_value(State::Mixture(witness.state.clone()))?,
        "trace": trace,
    }))
}

fn approx_json(approx: &SpectrumApprox) -> serde_json::Value {
    json!({
        "neg": approx12(approx.neg),
        "nn": approx12(approx.nn),
        "prefix": approx.prefix.iter().map(|&x| approx12(x)).collect::<Vec<_>>(),
        "unresolved": approx12(approx.unresolved),
    })
}

fn parse_event(text: &str, arity: usize) -> Result<Formula, Failure> {
    parse_formula(text, arity).map_err(|e| Failure::Domain(e.to_string()))
}

fn parse_point(text: &str, arity: usize) -> Result<Vec<Rat>, Failure> {
    let coords = text
        .split(',')
        .map(|c| rat_from_str(c).map_err(|e| Failure::Usage(format!("--point: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if coords.len() != arity {
        return Err(Failure::Usage(format!(
            "--point has {} coordinates but --arity is {arity}",
            coords.len()
        )));
    }
    for coord in &coords {
        if *coord < rat(0, 1) || *coord > rat(1, 1) {
            return Err(Failure::Domain(format!(
                "coordinate {} outside [0,1]",
                rat_to_string(coord)
            )));
        }
    }
    Ok(coords)
}

fn parse_tol(text: &str) -> Result<Rat, Failure> {
    let tol = rat_from_str(text).map_err(|e| Failure::Usage(format!("--tol: {e}")))?;
    if tol < rat(0, 1) {
        return Err(Failure::Usage("--tol: tolerance is negative".into()));
    }
    Ok(tol)
}

fn read_json_file<T: serde::de::DeserializeOwned>(path: &Path, flag: &str) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{flag} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn load_state(path: &Path) -> Result<State, Failure> {
    let state: State = read_json_file(path, "--state")?;
    state
        .validate()
        .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
    Ok(state)
}

fn load_problem(path: &Path) -> Result<SatProblem, Failure> {
    read_json_file(path, "--problem")
}

fn fmt_value(value: &Value) -> String {
    match value {
        Value::Exact(r) => rat_to_string(r),
        Value::Approx(x) => approx12(*x),
    }
}

/// Twelve significant digits: plain decimal within a readable magnitude
/// range, scientific outside it.
fn approx12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-4..12).contains(&magnitude) {
        let decimals = (11 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}
