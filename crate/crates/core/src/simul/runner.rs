//! The single-run loop and its regret bookkeeping.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::games::Game;
use crate::policies::{DeltaSpec, Feedback, Policy, PolicySpec};

use super::{generate_outcomes, Environment, SimError};

/// Compensated accumulator. Both the learner's loss and every action's
/// hypothetical loss go through this same code path, so two trackers fed
/// identical values stay bitwise equal and the regret of a constant-optimal
/// policy comes out as exactly zero.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// Full trajectory of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Chosen action per step, 0-based.
    pub actions: Vec<u32>,
    /// Outcome per step, 0-based.
    pub outcomes: Vec<u8>,
    /// Learner loss per step.
    pub losses: Vec<f64>,
    /// Regret against the best constant action over the prefix.
    pub cum_regret: Vec<f64>,
    pub final_regret: f64,
    /// Root-level restarts reported by the policy.
    pub reset_count: u64,
    /// How often each action was played.
    pub play_counts: Vec<u64>,
}

impl RunRecord {
    pub fn t_horizon(&self) -> u64 {
        self.actions.len() as u64
    }

    /// Writes the trajectory as CSV with 1-based step, action and outcome
    /// columns.
    pub fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "t,action,outcome,loss,cum_regret")?;
        for t in 0..self.actions.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                t + 1,
                self.actions[t] + 1,
                self.outcomes[t] + 1,
                self.losses[t],
                self.cum_regret[t]
            )?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Plays an already-built policy against a pre-generated outcome sequence.
///
/// Feedback is normalized per round: a revealing action sees the outcome,
/// any other action sees nothing. Losses and regret always come from the
/// game's own loss matrix, regardless of any internal reparametrization the
/// policy applies.
pub fn run_prepared(
    game: &Game,
    policy: &mut dyn Policy,
    outcomes: &[u8],
    policy_seed: u64,
) -> RunRecord {
    let n = game.n_actions();
    let loss = game.loss_f64();
    let steps = outcomes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(policy_seed);
    let mut learner = KahanSum::default();
    let mut per_action = vec![KahanSum::default(); n];
    let mut actions = Vec::with_capacity(steps);
    let mut losses = Vec::with_capacity(steps);
    let mut cum_regret = Vec::with_capacity(steps);
    let mut play_counts = vec![0u64; n];
    for &outcome in outcomes {
        let o = outcome as usize;
        let a = policy.choose(&mut rng);
        debug_assert!(a < n, "policy chose action {a} in a {n}-action game");
        let l = loss[a][o];
        learner.add(l);
        for (i, acc) in per_action.iter_mut().enumerate() {
            acc.add(loss[i][o]);
        }
        let best = per_action
            .iter()
            .map(KahanSum::value)
            .fold(f64::INFINITY, f64::min);
        actions.push(a as u32);
        losses.push(l);
        cum_regret.push(learner.value() - best);
        play_counts[a] += 1;
        let fb = if game.is_revealing(a) {
            Feedback::Reveal(o)
        } else {
            Feedback::Hidden
        };
        policy.observe(fb);
    }
    let final_regret = cum_regret.last().copied().unwrap_or(0.0);
    RunRecord {
        actions,
        outcomes: outcomes.to_vec(),
        losses,
        cum_regret,
        final_regret,
        reset_count: policy.reset_count(),
        play_counts,
    }
}

/// Builds the policy, generates the environment's outcome sequence, and
/// plays one run of the given horizon.
pub fn run(
    game: &Game,
    policy: &PolicySpec,
    delta: DeltaSpec,
    env: &Environment,
    t_horizon: u64,
    policy_seed: u64,
) -> Result<RunRecord, SimError> {
    let outcomes = generate_outcomes(env, t_horizon)?;
    let mut built = policy.build(game, t_horizon, delta.resolve(t_horizon))?;
    Ok(run_prepared(game, built.as_mut(), &outcomes, policy_seed))
}
