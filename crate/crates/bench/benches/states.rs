use criterion::{criterion_group, criterion_main, Criterion};
use prodstates::syntax::random_formula;
use prodstates::value::rat;
use prodstates::{
    check_state_axioms, parse_modal, random_dist, random_mixture, sat_search, state_from_dist,
    Formula, SamplerLaw, SamplerState, SatProblem, State,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn bench_state_eval(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBE57);
    let mut group = c.benchmark_group("state_eval");

    let mixture = State::Mixture(random_mixture(&mut rng, 2, 5));
    let formula = random_formula(&mut rng, 2, 6);
    group.bench_function("mixture_depth6_arity2", |b| {
        b.iter(|| mixture.eval(black_box(&formula)))
    });

    let spectral = state_from_dist(random_dist(&mut rng, true)).expect("valid distribution");
    let deep_power = Formula::pow(Formula::var(0), 25);
    group.bench_function("spectral_power25", |b| {
        b.iter(|| spectral.eval(black_box(&deep_power)))
    });

    let sampler = State::Sampler(SamplerState::new(SamplerLaw::Uniform, 10_000, 7, None));
    let square = Formula::pow(Formula::var(0), 2);
    group.bench_function("sampler_10k_square", |b| {
        b.iter(|| sampler.eval(black_box(&square)))
    });
    group.finish();
}

fn bench_axiom_suite(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBE58);
    let state = State::Mixture(random_mixture(&mut rng, 2, 4));
    let formulas: Vec<Formula> = (0..30).map(|_| random_formula(&mut rng, 2, 4)).collect();
    let zero = rat(0, 1);
    let mut group = c.benchmark_group("axiom_suite");
    group.sample_size(10);
    group.bench_function("mixture_30_formulas_arity2", |b| {
        b.iter(|| check_state_axioms(black_box(&state), black_box(&formulas), &zero))
    });
    group.finish();
}

fn bench_modal_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("modal_search");
    let fixed_point = SatProblem::new(
        1,
        vec![parse_modal("P(x0) <=> !P(x0)", 1).unwrap()],
        None,
    );
    group.bench_function("fixed_point_witness", |b| {
        b.iter(|| sat_search(black_box(&fixed_point)))
    });
    let blocked = SatProblem::new(
        1,
        vec![
            parse_modal("D(!P(x0))", 1).unwrap(),
            parse_modal("D(P(~~x0))", 1).unwrap(),
        ],
        None,
    );
    group.sample_size(10);
    group.bench_function("exhausted_budget", |b| {
        b.iter(|| sat_search(black_box(&blocked)))
    });
    group.finish();
}

criterion_group!(benches, bench_state_eval, bench_axiom_suite, bench_modal_search);
criterion_main!(benches);
