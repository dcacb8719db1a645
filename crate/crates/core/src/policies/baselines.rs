//! Baseline policies used as comparison points in sweeps.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, RngCore};

use crate::games::{chain, rational_to_f64, Game};

use super::{Feedback, Policy, PolicyError};

/// Explore-then-commit on a fixed schedule: with probability
/// `min(1, c * T^(-1/3))` play a designated revealing action, otherwise play
/// the chain action that is optimal for the current frequency estimate.
pub struct ForcedExploration {
    /// Original-game indices of the chain actions, in chain order.
    chain_actions: Vec<usize>,
    /// Per chain action, its loss pair as f64.
    chain_loss: Vec<[f64; 2]>,
    /// Per chain action, whether it reveals the outcome.
    chain_revealing: Vec<bool>,
    explore_action: usize,
    gamma: f64,
    /// Importance-weighted count of observed outcome-2 rounds.
    weighted_hits: f64,
    rounds: u64,
    /// Whether the pending round was an exploration round, and its reveal
    /// probability.
    pending: Option<(bool, f64)>,
}

impl ForcedExploration {
    pub fn new(game: &Game, t_horizon: u64, c: f64) -> Result<Self, PolicyError> {
        if t_horizon == 0 {
            return Err(PolicyError::BadHorizon);
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(PolicyError::BadSpec(format!(
                "forced exploration scale must be positive, got {c}"
            )));
        }
        let explore_action = (0..game.n_actions())
            .find(|&i| game.is_revealing(i))
            .ok_or(PolicyError::NoRevealingAction)?;
        let ch = chain(game);
        let chain_loss = ch
            .actions
            .iter()
            .map(|&i| {
                [
                    rational_to_f64(game.loss(i, 0)),
                    rational_to_f64(game.loss(i, 1)),
                ]
            })
            .collect();
        let chain_revealing = ch.actions.iter().map(|&i| game.is_revealing(i)).collect();
        let gamma = (c * (t_horizon as f64).powf(-1.0 / 3.0)).min(1.0);
        Ok(ForcedExploration {
            chain_actions: ch.actions,
            chain_loss,
            chain_revealing,
            explore_action,
            gamma,
            weighted_hits: 0.0,
            rounds: 0,
            pending: None,
        })
    }

    /// Current estimate of the outcome-2 frequency.
    pub fn estimate(&self) -> f64 {
        if self.rounds == 0 {
            0.0
        } else {
            self.weighted_hits / self.rounds as f64
        }
    }

    /// Chain position whose action is optimal at frequency `rho`, lowest
    /// position on ties.
    fn exploit_position(&self, rho: f64) -> usize {
        let mut best = 0;
        let mut best_value = f64::INFINITY;
        for (pos, loss) in self.chain_loss.iter().enumerate() {
            let value = (1.0 - rho) * loss[0] + rho * loss[1];
            if value < best_value {
                best_value = value;
                best = pos;
            }
        }
        best
    }
}

impl Policy for ForcedExploration {
    fn choose(&mut self, rng: &mut dyn RngCore) -> usize {
        assert!(self.pending.is_none(), "choose called twice without observe");
        let exploit_pos = self.exploit_position(self.estimate());
        let exploit_reveals = self.chain_revealing[exploit_pos];
        let reveal_prob = self.gamma + (1.0 - self.gamma) * f64::from(u8::from(exploit_reveals));
        let explore = rng.gen::<f64>() < self.gamma;
        self.pending = Some((explore, reveal_prob));
        if explore {
            self.explore_action
        } else {
            self.chain_actions[exploit_pos]
        }
    }

    fn observe(&mut self, feedback: Feedback) {
        let (explore, _) = self
            .pending
            .take()
            .expect("observe called without a pending choose");
        self.rounds += 1;
        // Only exploration rounds feed the estimator; dividing the indicator
        // by the exploration probability keeps it unbiased.
        if explore && feedback == Feedback::Reveal(1) {
            self.weighted_hits += 1.0 / self.gamma;
        }
    }

    fn reveal_prob(&self) -> f64 {
        self.pending.expect("no round is pending").1
    }
}

/// Plays one fixed action every round.
pub struct ConstantPolicy {
    action: usize,
    reveal: bool,
}

impl ConstantPolicy {
    pub fn new(game: &Game, action: usize) -> Result<Self, PolicyError> {
        if action >= game.n_actions() {
            return Err(PolicyError::BadAction {
                given: action + 1,
                n: game.n_actions(),
            });
        }
        Ok(ConstantPolicy {
            action,
            reveal: game.is_revealing(action),
        })
    }
}

impl Policy for ConstantPolicy {
    fn choose(&mut self, _rng: &mut dyn RngCore) -> usize {
        self.action
    }

    fn observe(&mut self, _feedback: Feedback) {}

    fn reveal_prob(&self) -> f64 {
        if self.reveal {
            1.0
        } else {
            0.0
        }
    }
}

/// Plays a uniformly random action every round.
pub struct UniformPolicy {
    n: usize,
    reveal_prob: f64,
}

impl UniformPolicy {
    pub fn new(game: &Game) -> Result<Self, PolicyError> {
        let n = game.n_actions();
        let revealing = (0..n).filter(|&i| game.is_revealing(i)).count();
        Ok(UniformPolicy {
            n,
            reveal_prob: revealing as f64 / n as f64,
        })
    }
}

impl Policy for UniformPolicy {
    fn choose(&mut self, rng: &mut dyn RngCore) -> usize {
        rng.gen_range(0..self.n)
    }

    fn observe(&mut self, _feedback: Feedback) {}

    fn reveal_prob(&self) -> f64 {
        self.reveal_prob
    }
}

/// Exponentially weighted averaging over all actions; valid only when every
/// action reveals the outcome.
pub struct EwaPolicy {
    loss: Vec<[f64; 2]>,
    w: Vec<f64>,
    eta: f64,
}

impl EwaPolicy {
    pub fn new(game: &Game, t_horizon: u64) -> Result<Self, PolicyError> {
        if t_horizon == 0 {
            return Err(PolicyError::BadHorizon);
        }
        if let Some(i) = (0..game.n_actions()).find(|&i| !game.is_revealing(i)) {
            return Err(PolicyError::NotFullInformation { action: i + 1 });
        }
        let n = game.n_actions();
        let loss = (0..n)
            .map(|i| {
                [
                    rational_to_f64(game.loss(i, 0)),
                    rational_to_f64(game.loss(i, 1)),
                ]
            })
            .collect();
        Ok(EwaPolicy {
            loss,
            w: vec![1.0 / n as f64; n],
            eta: (8.0 * (n as f64).ln() / t_horizon as f64).sqrt(),
        })
    }
}

impl Policy for EwaPolicy {
    fn choose(&mut self, rng: &mut dyn RngCore) -> usize {
        WeightedIndex::new(&self.w)
            .expect("weights stay positive")
            .sample(rng)
    }

    fn observe(&mut self, feedback: Feedback) {
        let h = match feedback {
            Feedback::Reveal(h) => h,
            Feedback::Hidden => panic!("full-information policy got hidden feedback"),
        };
        for (w, loss) in self.w.iter_mut().zip(&self.loss) {
            *w *= (-self.eta * loss[h]).exp();
        }
        let sum: f64 = self.w.iter().sum();
        for w in &mut self.w {
            *w /= sum;
        }
    }

    fn reveal_prob(&self) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::games::examples;

    use super::*;

    #[test]
    fn forced_exploration_estimates_frequency() {
        let game = examples::apple_tasting();
        let t = 20_000u64;
        let mut policy = ForcedExploration::new(&game, t, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let rho = 0.3;
        let mut outcome_rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..t {
            let action = policy.choose(&mut rng);
            let outcome = usize::from(outcome_rng.gen::<f64>() < rho);
            let fb = if game.is_revealing(action) {
                Feedback::Reveal(outcome)
            } else {
                Feedback::Hidden
            };
            policy.observe(fb);
        }
        // gamma = T^(-1/3) ~ 0.037 here, so the estimate is noisy but close.
        assert!((policy.estimate() - rho).abs() < 0.1);
    }

    #[test]
    fn forced_exploration_reveal_prob_tracks_exploit_choice() {
        let game = examples::apple_tasting();
        let mut policy = ForcedExploration::new(&game, 1000, 2.0).unwrap();
        let gamma = (2.0 * 1000.0f64.powf(-1.0 / 3.0)).min(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // With estimate 0 the exploit action is taste (loss 0 on outcome 1),
        // which is revealing, so the reveal probability is 1.
        policy.choose(&mut rng);
        assert_eq!(policy.reveal_prob(), 1.0);
        policy.observe(Feedback::Reveal(1));
        // Push the estimate high so the exploit action flips to sale, which
        // does not reveal; the reveal probability drops to gamma.
        policy.weighted_hits = policy.rounds as f64;
        policy.choose(&mut rng);
        assert!((policy.reveal_prob() - gamma).abs() < 1e-15);
    }

    #[test]
    fn forced_exploration_needs_a_revealing_action() {
        let game = examples::hopeless();
        assert!(matches!(
            ForcedExploration::new(&game, 100, 1.0),
            Err(PolicyError::NoRevealingAction)
        ));
    }

    #[test]
    fn forced_exploration_breaks_ties_toward_lower_chain_position() {
        let game = examples::apple_tasting();
        let policy = ForcedExploration::new(&game, 100, 1.0).unwrap();
        // The boundary frequency 1/2 makes both chain actions optimal; the
        // first chain position (taste) wins the tie.
        assert_eq!(policy.exploit_position(0.5), 0);
    }

    #[test]
    fn constant_policy_reports_reveal_status() {
        let game = examples::apple_tasting();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut sale = ConstantPolicy::new(&game, 0).unwrap();
        assert_eq!(sale.choose(&mut rng), 0);
        assert_eq!(sale.reveal_prob(), 0.0);
        let mut taste = ConstantPolicy::new(&game, 1).unwrap();
        assert_eq!(taste.choose(&mut rng), 1);
        assert_eq!(taste.reveal_prob(), 1.0);
        assert!(matches!(
            ConstantPolicy::new(&game, 2),
            Err(PolicyError::BadAction { given: 3, n: 2 })
        ));
    }

    #[test]
    fn uniform_policy_covers_all_actions() {
        let game = examples::label_efficient();
        let mut policy = UniformPolicy::new(&game).unwrap();
        // One of three actions reveals.
        assert!((policy.reveal_prob() - 1.0 / 3.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut seen = [false; 3];
        for _ in 0..100 {
            seen[policy.choose(&mut rng)] = true;
            policy.observe(Feedback::Hidden);
        }
        assert_eq!(seen, [true; 3]);
    }

    #[test]
    fn ewa_requires_full_information() {
        let game = examples::apple_tasting();
        assert!(matches!(
            EwaPolicy::new(&game, 100),
            Err(PolicyError::NotFullInformation { action: 1 })
        ));
    }

    #[test]
    fn ewa_concentrates_on_the_better_action() {
        let game = Game::from_ints(&[[0, 1], [1, 0]], &[["a", "b"], ["c", "d"]]).unwrap();
        let mut policy = EwaPolicy::new(&game, 1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            policy.choose(&mut rng);
            policy.observe(Feedback::Reveal(0));
        }
        // The first action has loss 0 on the outcome shown every round.
        assert!(policy.w[0] > 0.99);
    }
}
