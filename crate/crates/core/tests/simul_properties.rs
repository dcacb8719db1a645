//! Cross-cutting properties of environments, the runner, and the policies:
//! obliviousness of outcome generation, exact regret accounting, the
//! epsilon-pair model directions, conditional unbiasedness of the
//! importance-weighted estimator, and long-horizon stability.

mod support;

use num_traits::Zero;
use pm_core::games::{chain, examples, rational_to_f64, Game, Rational};
use pm_core::policies::{AppleTree, DeltaSpec, Feedback, Policy, PolicySpec};
use pm_core::simul::{derive_seed, generate_outcomes, run, EnvKind, EnvTemplate};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn three_chain_game() -> Game {
    Game::from_ints(
        &[[0, 3], [1, 0], [2, -1]],
        &[["a", "a"], ["u", "v"], ["b", "b"]],
    )
    .expect("valid three-action game")
}

proptest! {
    #[test]
    // With delta = 1/sqrt(T) the exploration floor gamma/2 >= 1/sqrt(T) first
    // holds at T = 5, so shorter horizons are outside AppleTree's range.
    fn outcomes_ignore_the_policy(master in any::<u64>(), t in 5u64..200, rho in 0.0f64..1.0) {
        let game = examples::apple_tasting();
        let env = EnvTemplate::Iid { rho }
            .resolve(&game, t, derive_seed(master, t, 0, 0))
            .unwrap();
        let pol_seed = derive_seed(master, t, 0, 1);
        let a = run(&game, &PolicySpec::AppleTree, DeltaSpec::Auto, &env, t, pol_seed).unwrap();
        let b = run(&game, &PolicySpec::Uniform, DeltaSpec::Auto, &env, t, pol_seed).unwrap();
        let c = run(
            &game,
            &PolicySpec::Constant { action: 0 },
            DeltaSpec::Auto,
            &env,
            t,
            pol_seed,
        )
        .unwrap();
        let direct = generate_outcomes(&env, t).unwrap();
        prop_assert_eq!(&a.outcomes, &direct);
        prop_assert_eq!(&b.outcomes, &direct);
        prop_assert_eq!(&c.outcomes, &direct);
    }

    #[test]
    fn cumulative_regret_recomputes_exactly_from_the_trajectory(
        seed in any::<u64>(),
        t in 1u64..150,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let game = support::random_game(&mut rng);
        let env = EnvTemplate::Iid { rho: 0.37 }.resolve(&game, t, seed ^ 1).unwrap();
        let rec = run(&game, &PolicySpec::Uniform, DeltaSpec::Auto, &env, t, seed ^ 2).unwrap();
        prop_assert_eq!(rec.actions.len(), t as usize);
        let n = game.n_actions();
        let mut learner = Rational::zero();
        let mut per_action = vec![Rational::zero(); n];
        for s in 0..t as usize {
            let a = rec.actions[s] as usize;
            let o = rec.outcomes[s] as usize;
            prop_assert!(a < n);
            prop_assert!(o < 2);
            let step_loss = game.loss(a, o).clone();
            prop_assert_eq!(rec.losses[s], rational_to_f64(&step_loss));
            learner += &step_loss;
            for (i, acc) in per_action.iter_mut().enumerate() {
                *acc += game.loss(i, o);
            }
            let best = per_action.iter().min().unwrap();
            let exact = &learner - best;
            prop_assert!((rec.cum_regret[s] - rational_to_f64(&exact)).abs() <= 1e-9);
        }
        prop_assert_eq!(rec.final_regret, *rec.cum_regret.last().unwrap());
    }
}

#[test]
fn epsilon_pair_models_make_the_advertised_chain_action_optimal() {
    let game = examples::apple_tasting();
    let ch = chain(&game);
    for (t, model) in [(1024u64, 1u8), (1024, 2), (1 << 16, 1), (1 << 16, 2)] {
        let template = EnvTemplate::EpsilonPair {
            hard: false,
            model,
            scale: 0.3,
        };
        let env = template.resolve(&game, t, 7).unwrap();
        let EnvKind::EpsilonPair {
            rho_star, epsilon, model: m,
        } = &env.kind
        else {
            panic!("expected an epsilon pair kind")
        };
        assert_eq!(*m, model);
        let p = if model == 1 {
            rho_star - epsilon
        } else {
            rho_star + epsilon
        };
        // Model 1 sits below the boundary, favouring the earlier chain
        // action; model 2 sits above it.
        let target = if model == 1 { ch.actions[0] } else { ch.actions[1] };
        for i in 0..game.n_actions() {
            if i != target {
                assert!(
                    game.expected_loss(target, &p) < game.expected_loss(i, &p),
                    "action {target} should beat {i} under model {model}"
                );
            }
        }
    }
}

#[test]
fn hard_epsilon_pair_scales_as_inverse_cube_root() {
    let game = examples::label_efficient();
    let template = EnvTemplate::EpsilonPair {
        hard: true,
        model: 1,
        scale: 0.3,
    };
    let env = template.resolve(&game, 1_000_000, 3).unwrap();
    let EnvKind::EpsilonPair { rho_star, epsilon, .. } = &env.kind else {
        panic!("expected an epsilon pair kind")
    };
    assert_eq!(rho_star, &Rational::new(1.into(), 2.into()));
    assert!((rational_to_f64(epsilon) - 0.003).abs() < 1e-9);
}

#[test]
fn importance_weighted_increment_is_conditionally_unbiased() {
    // Fix a 40-round history (same seed for every replicate), then measure
    // the round-41 increment of the root estimator with a fresh generator
    // per replicate. With outcome 2 at the measured round the increment
    // 1{feedback says 2}/p has conditional mean exactly 1.
    let game = three_chain_game();
    let t_total = 64;
    let prefix_len = 40usize;
    let prefix_outcomes: Vec<u8> = (0..prefix_len).map(|s| (s % 3 == 0) as u8).collect();
    let replicates = 20_000u64;
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for rep in 0..replicates {
        let mut policy = AppleTree::new(&game, t_total, 0.1).unwrap();
        let mut prefix_rng = ChaCha8Rng::seed_from_u64(999);
        for &o in &prefix_outcomes {
            let a = policy.choose(&mut prefix_rng);
            let fb = if game.is_revealing(a) {
                Feedback::Reveal(o as usize)
            } else {
                Feedback::Hidden
            };
            policy.observe(fb);
        }
        let rho_prev = policy.root_estimate().expect("three actions give an internal root");
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(4242, 0, rep, 0));
        let a = policy.choose(&mut rng);
        let fb = if game.is_revealing(a) {
            Feedback::Reveal(1)
        } else {
            Feedback::Hidden
        };
        policy.observe(fb);
        let rho_next = policy.root_estimate().expect("internal root persists");
        let step = (prefix_len + 1) as f64;
        let est = step * rho_next - (step - 1.0) * rho_prev;
        sum += est;
        sum_sq += est * est;
    }
    let n = replicates as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    let se = (var / n).sqrt();
    assert!(
        (mean - 1.0).abs() <= 3.0 * se,
        "estimator mean {mean} deviates from 1 by more than 3 standard errors ({se})"
    );
}

#[test]
fn appletree_survives_long_horizons() {
    for game in [examples::apple_tasting(), three_chain_game()] {
        let t = 1u64 << 17;
        let env = EnvTemplate::Iid { rho: 0.5 }.resolve(&game, t, 11).unwrap();
        let rec = run(&game, &PolicySpec::AppleTree, DeltaSpec::Auto, &env, t, 12).unwrap();
        assert_eq!(rec.actions.len(), t as usize);
        assert!(rec.final_regret.is_finite());
        assert!(rec.cum_regret.iter().all(|r| r.is_finite()));
    }
}
