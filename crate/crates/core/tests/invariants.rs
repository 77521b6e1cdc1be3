use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rqbc_core::attacks::{cheat_detection_prob, per_channel_flag_prob, Strategy as Attack};
use rqbc_core::measurement::{outcome_dist, support_povm, PovmFamily, QuantumInput};
use rqbc_core::oracle::{detect_prob_flat_closed_form, parity_exhaustive};
use rqbc_core::protocol::{
    draw_channel_bits, guess_success, ident_prob_collective, ident_prob_individual, parity, storage_security,
    CommitConfig, Simulation,
};
use rqbc_core::spectra::{disjoint_pair, make_amplitude, overlap, sample, GridPlan, Shape};
use rqbc_core::window::{build_window, detect_prob};
use rqbc_core::Execution;

fn shape() -> impl proptest::strategy::Strategy<Value = Shape> {
    prop_oneof![Just(Shape::Rectangular), Just(Shape::TruncatedGaussian), Just(Shape::RaisedCosine)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn overlaps_bounded_by_one(s in shape(), d1 in 0.0..6.0f64, d2 in 0.0..6.0f64, k in 8.0..9.0f64) {
        let a = make_amplitude(s, k, 1.0, d1).unwrap();
        let b = make_amplitude(s, k + 0.3, 1.0, d2).unwrap();
        let grid = Arc::new(GridPlan::with_density(128).build(&[a.support(), b.support()], 0.0).unwrap());
        let o = overlap(&sample(&a, &grid).unwrap(), &sample(&b, &grid).unwrap()).unwrap();
        prop_assert!(o.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn detection_is_a_probability(s in shape(), delta in 0.2..3.0f64, td in 0.0..200.0f64, tau0 in 0.0..5.0f64) {
        let a = make_amplitude(s, 4.0 * delta, delta, tau0).unwrap();
        let t = td / delta;
        let grid = Arc::new(GridPlan::with_density(128).build(&[a.support()], t).unwrap());
        let p = detect_prob(&build_window(&grid, t).unwrap(), &sample(&a, &grid).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn flat_spectrum_depends_only_on_product(delta in 0.1..5.0f64, td in 0.01..50.0f64) {
        let a = make_amplitude(Shape::Rectangular, 3.0 * delta, delta, 0.0).unwrap();
        let t = td / delta;
        let grid = Arc::new(GridPlan::with_density(128).build(&[a.support()], t).unwrap());
        let p = detect_prob(&build_window(&grid, t).unwrap(), &sample(&a, &grid).unwrap()).unwrap();
        prop_assert!((p - detect_prob_flat_closed_form(1.0, td)).abs() < 1e-10);
    }

    #[test]
    fn outcome_distributions_sum_to_one(s in shape(), t in 0.0..30.0f64, mix in 0.0..1.0f64) {
        let (a, b) = disjoint_pair(6.0, 4.0, 1.0, s).unwrap();
        let grid = Arc::new(GridPlan::with_density(96).build(&[a.support(), b.support()], t).unwrap());
        let povm = support_povm(&grid, a.support(), b.support(), t).unwrap();
        let (sa, sb) = (sample(&a, &grid).unwrap(), sample(&b, &grid).unwrap());
        let rho = rqbc_core::measurement::DensityMatrix::mixture(&[(mix, &sa), (1.0 - mix, &sb)]).unwrap();
        let d = outcome_dist(&povm, &QuantumInput::Mixed(rho)).unwrap();
        prop_assert!((d.p1 + d.p2 + d.p_perp - 1.0).abs() < 1e-12);
    }

    #[test]
    fn channel_bits_carry_the_parity(n in 1usize..40, bit in 0u8..2, seed in any::<u64>()) {
        let bits = draw_channel_bits(n, bit, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(bits.len(), n);
        prop_assert_eq!(parity(&bits), bit);
    }

    #[test]
    fn formula_orderings(p in 0.0..=1.0f64, n in 1usize..30) {
        let ind = ident_prob_individual(p, n).unwrap();
        let coll = ident_prob_collective(p, n).unwrap();
        let guess = guess_success(p, n).unwrap();
        prop_assert!(coll >= ind);
        prop_assert!((0.5..=1.0).contains(&guess));
        prop_assert!((0.0..=1.0).contains(&storage_security(p, n).unwrap()));
        if n <= 12 {
            let t = parity_exhaustive(n, p).unwrap();
            prop_assert!((t.all_detected - ind).abs() < 1e-12);
            prop_assert!((t.guess_success - guess).abs() < 1e-12);
        }
    }

    #[test]
    fn detection_grows_with_channels(q in 0.001..1.0f64, n in 1usize..50) {
        prop_assert!(cheat_detection_prob(q, n + 1).unwrap() >= cheat_detection_prob(q, n).unwrap());
    }
}

fn config(family: PovmFamily, seed: u64) -> CommitConfig {
    let (a, b) = disjoint_pair(12.0, 10.0, 1.0, Shape::Rectangular).unwrap();
    let mut c = CommitConfig::new(8, a, b, 30.0, 1.0);
    c.family = family;
    c.seed = seed;
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn identical_seeds_give_identical_transcripts(seed in any::<u64>()) {
        let c = config(PovmFamily::State, seed);
        let a = Simulation::new(&c, &Attack::Mixed).unwrap().run_many(16, Execution::Parallel);
        let b = Simulation::new(&c, &Attack::Mixed).unwrap().run_many(16, Execution::Sequential);
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn honest_support_runs_never_abort(seed in any::<u64>()) {
        let stats = Simulation::new(&config(PovmFamily::Support, seed), &Attack::Honest)
            .unwrap()
            .summarize(500, Execution::Parallel);
        prop_assert_eq!(stats.aborted, 0);
    }
}

#[test]
fn support_family_is_blind_to_the_delay_flag() {
    let c = config(PovmFamily::Support, 0);
    for tau0 in [0.5, 3.0, 9.0] {
        let q = per_channel_flag_prob(&c, &Attack::Delayed { tau0 }, PovmFamily::Support, 30.0).unwrap();
        assert_eq!(q, 0.0);
    }
}

#[test]
fn state_family_catches_short_delays() {
    let c = config(PovmFamily::State, 0);
    let honest = per_channel_flag_prob(&c, &Attack::Honest, PovmFamily::State, 30.0).unwrap();
    let mut last = honest;
    for i in 1..=8 {
        let tau0 = std::f64::consts::PI * i as f64 / 4.0;
        let q = per_channel_flag_prob(&c, &Attack::Delayed { tau0 }, PovmFamily::State, 30.0).unwrap();
        assert!(q > honest, "tau0 = {tau0}: q = {q}, honest {honest}");
        assert!(q >= last, "not monotone at tau0 = {tau0}");
        last = q;
    }
}

#[test]
fn wrong_state_is_caught() {
    let c = config(PovmFamily::Support, 0);
    let other = make_amplitude(Shape::Rectangular, 10.0, 1.0, 0.0).unwrap();
    let q = per_channel_flag_prob(&c, &Attack::WrongState { amplitude: other }, PovmFamily::Support, 30.0).unwrap();
    // always psi2: wrong on every channel claimed as 0
    assert!((q - 0.5 * detect_prob_flat_closed_form(1.0, 30.0)).abs() < 1e-9, "q = {q}");
}
