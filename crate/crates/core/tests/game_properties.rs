//! Properties of the code-versus-jammer game across modules.

use proptest::prelude::*;
use rand::Rng;

use fqavc::channels::{fixtures, QuantumChannel};
use fqavc::game::{self, Code, QuantumCode};
use fqavc::linalg::{self, c, CMat};
use fqavc::qstate::DensityMatrix;
use fqavc::random;

fn random_channel(d_a: usize, d_e: usize, d_b: usize, rng: &mut random::SeededRng) -> QuantumChannel {
    let kraus = random::kraus_set(d_b, d_a * d_e, 3, rng);
    QuantumChannel::from_kraus(d_a, d_e, &kraus).unwrap()
}

fn random_state(d: usize, rng: &mut random::SeededRng) -> DensityMatrix {
    DensityMatrix::new(random::ginibre_state(d, d, rng)).unwrap()
}

fn random_code(chan: &QuantumChannel, m: usize, rng: &mut random::SeededRng) -> Code {
    let enc = (0..m).map(|_| random_state(chan.d_in_a(), rng)).collect();
    let outs: Vec<CMat> = (0..m).map(|_| random::ginibre_state(chan.d_out(), chan.d_out(), rng)).collect();
    Code::new(enc, game::best_decoder(&outs).unwrap()).unwrap()
}

#[test]
fn double_oracle_matches_exact_classical_value() {
    let table = fixtures::jammer_selected_bsc(&[0.05, 0.25]);
    let exact = game::classical_game_value(&table, 2, 1).unwrap();
    let res = game::double_oracle(&table.to_quantum(), 2, 1, 1e-8, 20).unwrap();
    assert!((res.value - exact.value).abs() <= 1e-6, "{} vs {}", res.value, exact.value);
    assert!(res.converged);
}

#[test]
fn double_oracle_round_trace_is_ordered() {
    let mut rng = random::seeded(11);
    let chan = random_channel(2, 2, 2, &mut rng);
    let res = game::double_oracle(&chan, 2, 1, 1e-4, 8).unwrap();
    for r in &res.rounds {
        assert!(r.inf_sup >= res.sup_inf_value - 1e-10, "{r:?}");
        assert!(r.inf_sup >= r.pool_value - 1e-10, "{r:?}");
    }
    assert!(res.inf_sup_value >= res.sup_inf_value - 1e-10);
    assert!((res.code_mixture.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((res.jammer_mixture.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn double_oracle_is_deterministic() {
    let chan = fixtures::controlled_identity_dephasing();
    let a = game::double_oracle(&chan, 3, 1, 1e-4, 5).unwrap();
    let b = game::double_oracle(&chan, 3, 1, 1e-4, 5).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn worst_case_error_dominates_sampled_jammers() {
    let mut rng = random::seeded(12);
    let chan = random_channel(2, 2, 2, &mut rng);
    let code = random_code(&chan, 2, &mut rng);
    let (worst, state) = game::worst_case_error(&code, &chan).unwrap();
    assert!((game::error_probability(&code, &chan, &state).unwrap() - worst).abs() < 1e-12);
    for _ in 0..1000 {
        let sigma = DensityMatrix::new(random::ginibre_state(2, rng.random_range(1..=2), &mut rng)).unwrap();
        assert!(game::error_probability(&code, &chan, &sigma).unwrap() <= worst + 1e-12);
    }
}

#[test]
fn error_is_affine_in_code_mixtures() {
    let mut rng = random::seeded(13);
    let chan = random_channel(2, 2, 2, &mut rng);
    let (c1, c2) = (random_code(&chan, 2, &mut rng), random_code(&chan, 2, &mut rng));
    let t1 = game::error_operator(&c1, &chan).unwrap().matrix;
    let t2 = game::error_operator(&c2, &chan).unwrap().matrix;
    for _ in 0..50 {
        let w: f64 = rng.random();
        let sigma = random_state(2, &mut rng);
        let mixed_op = &t1 * c(w, 0.0) + &t2 * c(1.0 - w, 0.0);
        let mixed_err = w * game::error_probability(&c1, &chan, &sigma).unwrap()
            + (1.0 - w) * game::error_probability(&c2, &chan, &sigma).unwrap();
        assert!((linalg::real_pairing(&mixed_op, sigma.matrix()) - mixed_err).abs() < 1e-12);
    }
}

#[test]
fn fidelity_is_affine_in_jammer_and_encoder() {
    let mut rng = random::seeded(14);
    let chan = random_channel(2, 2, 2, &mut rng);
    let decoder = random_channel(2, 1, 2, &mut rng);
    let (e1, e2) = (random_channel(2, 1, 2, &mut rng), random_channel(2, 1, 2, &mut rng));
    for _ in 0..50 {
        let w: f64 = rng.random();
        let (s1, s2) = (random_state(2, &mut rng), random_state(2, &mut rng));
        let code = QuantumCode::new(e1.clone(), decoder.clone()).unwrap();
        let f = |s: &DensityMatrix| game::entanglement_fidelity(&code, &chan, s).unwrap();
        let lhs = f(&s1.mix(&s2, w).unwrap());
        assert!((lhs - (w * f(&s1) + (1.0 - w) * f(&s2))).abs() < 1e-12);

        let mixed_choi = e1.choi() * c(w, 0.0) + e2.choi() * c(1.0 - w, 0.0);
        let mixed = QuantumChannel::from_choi(2, 1, 2, mixed_choi).unwrap();
        let g = |e: &QuantumChannel| {
            game::entanglement_fidelity(&QuantumCode::new(e.clone(), decoder.clone()).unwrap(), &chan, &s1).unwrap()
        };
        assert!((g(&mixed) - (w * g(&e1) + (1.0 - w) * g(&e2))).abs() < 1e-12);
        let op = game::fidelity_operator(&code, &chan).unwrap();
        assert!((linalg::real_pairing(&op, s1.matrix()) - f(&s1)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn error_probability_is_a_probability(seed in any::<u64>(), m in 2usize..5) {
        let mut rng = random::seeded(seed);
        let chan = random_channel(2, 2, 3, &mut rng);
        let code = random_code(&chan, m, &mut rng);
        let sigma = random_state(2, &mut rng);
        let e = game::error_probability(&code, &chan, &sigma).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&e));
    }

    #[test]
    fn classical_gap_closes(seed in any::<u64>(), nx in 2usize..4, ne in 1usize..4) {
        let mut rng = random::seeded(seed);
        let probs: Vec<f64> = (0..nx * ne).map(|_| rng.random()).collect();
        let table = fqavc::channels::ClassicalTable::from_fn(nx, ne, 2, |x, e| {
            let p = probs[x * ne + e];
            vec![p, 1.0 - p]
        }).unwrap();
        let res = game::classical_game_value(&table, 2, 1).unwrap();
        prop_assert!(res.gap.abs() <= 1e-8);
        prop_assert!((-1e-12..=0.5 + 1e-12).contains(&res.value));
    }

    #[test]
    fn decoder_never_worse_than_guessing(seed in any::<u64>(), m in 2usize..5) {
        let mut rng = random::seeded(seed);
        let outs: Vec<CMat> = (0..m).map(|_| random::ginibre_state(3, 2, &mut rng)).collect();
        let dec = game::best_decoder(&outs).unwrap();
        let success: f64 = outs.iter().zip(&dec).map(|(o, d)| linalg::real_pairing(o, d)).sum::<f64>() / m as f64;
        prop_assert!(success >= 1.0 / m as f64 - 1e-12);
    }
}
