use proptest::prelude::*;
use revud_core::channelgame::Channel;
use revud_core::random;
use revud_core::stategame::Ensemble;
use revud_core::validate::{channel_checks, divergence_checks, failures, qre_checks, state_game_checks};
use revud_core::DensityMatrix;

fn random_ensemble(seed: u64, k: usize, d: usize) -> Ensemble {
    let mut rng = random::rng(seed);
    let states = (0..k).map(|_| random::density_matrix(&mut rng, d, d)).collect();
    let priors = random::priors(&mut rng, k, 0.1);
    Ensemble::new(states, priors).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn divergence_relations_hold(seed in any::<u64>(), d in 2usize..=3) {
        let mut rng = random::rng(seed);
        let rho = random::full_rank_state(&mut rng, d);
        let sigma = random::full_rank_state(&mut rng, d);
        let checks = divergence_checks(&rho, &sigma, &mut rng).unwrap();
        prop_assert!(failures(&checks).is_empty(), "{:?}", failures(&checks));
    }

    #[test]
    fn divergence_relations_hold_for_low_rank_first_argument(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let rho = random::density_matrix(&mut rng, 3, 1);
        let sigma = random::full_rank_state(&mut rng, 3);
        let checks = divergence_checks(&rho, &sigma, &mut rng).unwrap();
        prop_assert!(failures(&checks).is_empty(), "{:?}", failures(&checks));
    }

    #[test]
    fn state_game_relations_hold(seed in any::<u64>(), k in 2usize..=4, d in 2usize..=4, e in 0usize..3) {
        let eta = [0.0, 0.3, 0.7][e];
        let ens = random_ensemble(seed, k, d);
        let checks = state_game_checks(&ens, eta).unwrap();
        prop_assert!(failures(&checks).is_empty(), "{:?}", failures(&checks));
    }

    #[test]
    fn state_game_relations_hold_for_low_rank_states(seed in any::<u64>(), k in 2usize..=3, d in 2usize..=3) {
        let mut rng = random::rng(seed);
        let states = (0..k).map(|_| random::density_matrix(&mut rng, d, 1 + (seed as usize) % (d - 1))).collect();
        let ens = Ensemble::uniform(states).unwrap();
        let checks = state_game_checks(&ens, 0.3).unwrap();
        prop_assert!(failures(&checks).is_empty(), "{:?}", failures(&checks));
    }

    #[test]
    fn qre_relations_hold(seed in any::<u64>(), k in 2usize..=3, d in 2usize..=3, pure in any::<bool>()) {
        let mut rng = random::rng(seed);
        let rank = if pure { 1 } else { d };
        let states: Vec<DensityMatrix> = (0..k).map(|_| random::density_matrix(&mut rng, d, rank)).collect();
        let checks = qre_checks(&states, 5, &mut rng).unwrap();
        prop_assert!(failures(&checks).is_empty(), "{:?}", failures(&checks));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn channel_relations_hold(seed in any::<u64>(), k in 2usize..=3) {
        let mut rng = random::rng(seed);
        let channels: Vec<Channel> = (0..k).map(|_| random::channel(&mut rng, 2, 2, 2)).collect();
        let priors = random::priors(&mut rng, k, 0.1);
        let checks = channel_checks(&channels, &priors, 0.0, &[1, 2], 4, 20, &mut rng).unwrap();
        prop_assert!(failures(&checks).is_empty(), "{:?}", failures(&checks));
    }
}

#[test]
fn named_channel_families_hold() {
    let mut rng = random::rng(4);
    let families = [
        vec![Channel::identity(2), Channel::bit_flip(0.25).unwrap()],
        vec![Channel::depolarizing(0.2).unwrap(), Channel::depolarizing(0.5).unwrap()],
        vec![Channel::identity(2), Channel::depolarizing(0.5).unwrap(), Channel::bit_flip(0.1).unwrap()],
    ];
    for chans in &families {
        let priors = vec![1.0 / chans.len() as f64; chans.len()];
        let checks = channel_checks(chans, &priors, 0.2, &[1, 2, 3], 5, 20, &mut rng).unwrap();
        assert!(failures(&checks).is_empty(), "{:?}", failures(&checks));
    }
}
