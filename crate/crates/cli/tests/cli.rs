use prodstates::value::rat;
use prodstates::{eval_formula, is_tautology, parse_formula, MixtureState, State};
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn run(args: &[&str]) -> (String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_prodstates"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8(out.stdout).expect("stdout is UTF-8"),
        out.status.code().expect("no signal"),
    )
}

fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).expect("file writes");
    path
}

const MIXTURE: &str = r#"{"type":"mixture","points":[["0"],["1/2"]],"weights":["2/5","3/5"]}"#;

#[test]
fn decides_the_cancellation_tautology() {
    let (stdout, code) = run(&[
        "taut",
        "--arity",
        "3",
        "~~x0 -> ((x1*x0 -> x2*x0) -> (x1 -> x2))",
    ]);
    assert_eq!(stdout, "{\"ok\":true,\"result\":true}\n");
    assert_eq!(code, 0);
}

#[test]
fn evaluates_a_mixture_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let state = write_file(dir.path(), "mix.json", MIXTURE);
    let (stdout, code) = run(&["state-eval", "--state", state.to_str().unwrap(), "x0"]);
    assert_eq!(stdout, "{\"ok\":true,\"result\":\"3/10\"}\n");
    assert_eq!(code, 0);
}

#[test]
fn reads_the_dirac_half_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let state = write_file(dir.path(), "dirac_half.json", r#"{"type":"dirac","point":["1/2"]}"#);
    let (stdout, code) = run(&[
        "fp1-to-dist",
        "--state",
        state.to_str().unwrap(),
        "--horizon",
        "10",
    ]);
    assert_eq!(
        stdout,
        "{\"ok\":true,\"result\":{\"neg\":\"0\",\"nn\":\"1/2\",\"prefix\":[],\
         \"tails\":[{\"c\":\"1/2\",\"r\":\"1/2\"}],\"limit\":\"0\"}}\n"
    );
    assert_eq!(code, 0);
}

#[test]
fn matches_direct_library_calls() {
    let dir = tempfile::tempdir().unwrap();
    let state_path = write_file(dir.path(), "mix.json", MIXTURE);
    let state = State::Mixture(
        MixtureState::new(
            vec![vec![rat(0, 1)], vec![rat(1, 2)]],
            vec![rat(2, 5), rat(3, 5)],
        )
        .unwrap(),
    );
    for text in ["x0^2", "x0 -> x0^2", "~x0 | ~~x0", "x0 & ~x0"] {
        let (stdout, code) = run(&["state-eval", "--state", state_path.to_str().unwrap(), text]);
        assert_eq!(code, 0, "state-eval failed on {text}");
        let envelope: Value = serde_json::from_str(&stdout).unwrap();
        let f = parse_formula(text, 1).unwrap();
        let direct = state.eval(&f);
        assert_eq!(envelope["result"].as_str().unwrap(), direct.to_string());

        let (stdout, _) = run(&["taut", "--arity", "1", text]);
        let envelope: Value = serde_json::from_str(&stdout).unwrap();
        assert_eq!(envelope["result"].as_bool().unwrap(), is_tautology(&f, 1));
    }
    let point = vec![rat(1, 2), rat(1, 3)];
    let f = parse_formula("x0 -> x1", 2).unwrap();
    let (stdout, _) = run(&["eval", "--arity", "2", "--point", "1/2,1/3", "x0 -> x1"]);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(
        envelope["result"].as_str().unwrap(),
        eval_formula(&f, &point).to_string()
    );
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_file(
        dir.path(),
        "problem.json",
        r#"{"arity":1,"gamma":["P(x0) <=> !P(x0)"]}"#,
    );
    let sampler = write_file(
        dir.path(),
        "sampler.json",
        r#"{"type":"sampler","law":"uniform","n":20000,"seed":42}"#,
    );
    let sat_args = ["modal-sat", "--problem", problem.to_str().unwrap()];
    let eval_args = ["state-eval", "--state", sampler.to_str().unwrap(), "x0^2"];
    assert_eq!(run(&sat_args), run(&sat_args));
    assert_eq!(run(&eval_args), run(&eval_args));
}

#[test]
fn distinguishes_usage_and_domain_errors() {
    let dir = tempfile::tempdir().unwrap();

    let (stdout, code) = run(&["state-eval", "--state", "/no/such/file.json", "x0"]);
    assert_eq!(code, 2);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(envelope["ok"], Value::Bool(false));
    assert!(envelope["error"].as_str().unwrap().contains("--state"));

    let bad_dist = write_file(
        dir.path(),
        "bad.json",
        r#"{"neg":"1/2","nn":"0","prefix":["1/4"],"tails":[],"limit":"0"}"#,
    );
    let (stdout, code) = run(&["fp1-from-dist", "--dist", bad_dist.to_str().unwrap()]);
    assert_eq!(code, 1);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(envelope["ok"], Value::Bool(false));
    assert!(envelope["error"].as_str().unwrap().contains("mass"));

    let (stdout, code) = run(&["taut", "--arity", "1", "x0 ->"]);
    assert_eq!(code, 1);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    assert!(envelope["error"].as_str().unwrap().contains("position"));

    let (_, code) = run(&["eval", "--arity", "2", "--point", "1/2", "x0"]);
    assert_eq!(code, 2);

    let (_, code) = run(&["taut", "--no-such-flag"]);
    assert_eq!(code, 2);
}

#[test]
fn round_trips_a_distribution_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let mix = write_file(dir.path(), "mix.json", MIXTURE);

    let (stdout, code) = run(&["fp1-to-dist", "--state", mix.to_str().unwrap()]);
    assert_eq!(code, 0);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    let dist = write_file(dir.path(), "dist.json", &envelope["result"].to_string());

    let (stdout, code) = run(&["fp1-from-dist", "--dist", dist.to_str().unwrap()]);
    assert_eq!(code, 0);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    let spectrum = write_file(dir.path(), "spectrum.json", &envelope["result"].to_string());

    for text in ["x0", "x0^3", "~x0", "~~x0"] {
        let (direct, _) = run(&["state-eval", "--state", mix.to_str().unwrap(), text]);
        let (via_dist, _) = run(&["state-eval", "--state", spectrum.to_str().unwrap(), text]);
        assert_eq!(direct, via_dist, "disagreement on {text}");
    }
}

#[test]
fn reports_axiom_violations_of_a_broken_state() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_file(dir.path(), "good.json", MIXTURE);
    let bad = write_file(
        dir.path(),
        "bad.json",
        r#"{"type":"mixture","points":[["0"],["1/2"]],"weights":["2/3","2/3"]}"#,
    );

    let (stdout, code) = run(&["state-check", "--state", good.to_str().unwrap()]);
    assert_eq!(code, 0);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(envelope["result"]["passed"], Value::Bool(true));

    let (stdout, code) = run(&["state-check", "--state", bad.to_str().unwrap()]);
    assert_eq!(code, 0);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(envelope["result"]["passed"], Value::Bool(false));
    let violations = envelope["result"]["violations"].as_array().unwrap();
    assert!(violations.iter().any(|v| v["axiom"] == "S1"));
}

#[test]
fn searches_and_verifies_modal_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let fixed_point = write_file(
        dir.path(),
        "fixed_point.json",
        r#"{"arity":1,"gamma":["P(x0) <=> !P(x0)"]}"#,
    );
    let (stdout, code) = run(&["modal-sat", "--problem", fixed_point.to_str().unwrap()]);
    assert_eq!(code, 0);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(envelope["result"]["outcome"], "sat");
    let witness_state = write_file(
        dir.path(),
        "witness.json",
        &envelope["result"]["witness"]["state"].to_string(),
    );
    let (stdout, _) = run(&["state-eval", "--state", witness_state.to_str().unwrap(), "x0"]);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(envelope["result"], "1/2");

    let blocked = write_file(
        dir.path(),
        "blocked.json",
        r#"{"arity":1,"gamma":["D(!P(x0))","D(P(~~x0))"]}"#,
    );
    let (stdout, code) = run(&["modal-sat", "--problem", blocked.to_str().unwrap()]);
    assert_eq!(code, 0);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(envelope["result"]["outcome"], "no-witness-found");

    let refutable = write_file(
        dir.path(),
        "refutable.json",
        r#"{"arity":1,"gamma":["D(P(~x0))"],"target":"P(x0)"}"#,
    );
    let (stdout, code) = run(&["modal-entails", "--problem", refutable.to_str().unwrap()]);
    assert_eq!(code, 0);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(envelope["result"]["outcome"], "countermodel");

    let holding = write_file(
        dir.path(),
        "holding.json",
        r#"{"arity":1,"gamma":["D(P(~x0))"],"target":"P(~x0)"}"#,
    );
    let (stdout, code) = run(&["modal-entails", "--problem", holding.to_str().unwrap()]);
    assert_eq!(code, 0);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(envelope["result"]["outcome"], "holds-on-budget");
}

#[test]
fn checks_axiom_instances_against_a_state() {
    let dir = tempfile::tempdir().unwrap();
    let mix = write_file(dir.path(), "mix.json", MIXTURE);
    let (stdout, code) = run(&[
        "modal-axioms",
        "--arity",
        "1",
        "--state",
        mix.to_str().unwrap(),
        "x0^2",
        "x0",
    ]);
    assert_eq!(code, 0);
    let envelope: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(envelope["result"]["sound"], Value::Bool(true));
    let instances = envelope["result"]["instances"].as_array().unwrap();
    let axioms: Vec<&str> = instances
        .iter()
        .map(|row| row["axiom"].as_str().unwrap())
        .collect();
    assert_eq!(axioms, ["P1", "P1", "P2", "P3", "P4"]);
}

#[test]
fn pretty_envelope_parses_to_the_same_value() {
    let compact = run(&["cells", "--arity", "2"]);
    let pretty = run(&["cells", "--arity", "2", "--json"]);
    assert_eq!(compact.1, 0);
    assert_eq!(pretty.1, 0);
    assert!(pretty.0.lines().count() > 1);
    let a: Value = serde_json::from_str(&compact.0).unwrap();
    let b: Value = serde_json::from_str(&pretty.0).unwrap();
    assert_eq!(a, b);
}
