//! The AppleTree policy for easy games.
//!
//! The chain of non-dominated actions is split recursively into halves that
//! share one action, giving a binary tree whose leaves are neighbouring
//! action pairs. Each leaf runs a two-action expert algorithm: exponentially
//! weighted averaging when both actions are revealing, otherwise an
//! importance-weighted variant that explores the revealing action with
//! probability at least gamma/2. Each internal node tracks an unbiased
//! estimate of the outcome-2 frequency and hands play to the child whose
//! side of its boundary band the estimate falls on, resetting the subtree it
//! switches to so that stale weights cannot linger.

use rand::{Rng, RngCore};

use crate::games::{chain, classify, rational_to_f64, Chain, Game, GameClass, Rational};

use super::{class_display, Feedback, Policy, PolicyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LeafKind {
    /// Both actions revealing: plain exponentially weighted averaging.
    FullInfo,
    /// Only the first action (after normalization) is revealing.
    OneArmed,
}

#[derive(Debug, Clone)]
struct Leaf {
    kind: LeafKind,
    /// Original-game indices; for `OneArmed` the revealing action is first.
    actions: [usize; 2],
    /// Local 2x2 loss matrix. For `OneArmed` the second row is subtracted
    /// from both rows, so row 1 holds the loss differences and row 2 is zero.
    loss: [[f64; 2]; 2],
    w: [f64; 2],
    beta: f64,
    gamma: f64,
    eta: f64,
    /// Which local arm the pending round played (0 or 1).
    pending_arm: Option<usize>,
}

#[derive(Debug, Clone)]
struct Internal {
    /// Index (0 or 1) of the currently preferred child.
    preferred: usize,
    /// Running importance-weighted estimate of the outcome-2 frequency.
    rho_hat: f64,
    /// Local round counter, starting at 1.
    step: u64,
    /// Shrunken boundary band; leave below `rho1`, enter above `rho2`.
    rho1: f64,
    rho2: f64,
    children: Box<[Node; 2]>,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(Leaf),
    Internal(Internal),
}

/// Shrunken root boundary band of a game whose chain has at least three
/// actions: the middle third of the gap between the two boundaries flanking
/// the shared split action.
pub fn root_band(ch: &Chain) -> Option<(Rational, Rational)> {
    if ch.len() < 3 {
        return None;
    }
    let split = ch.len().div_ceil(2);
    Some(band_at(ch, split))
}

/// Boundary band around 1-based chain position `split`.
fn band_at(ch: &Chain, split: usize) -> (Rational, Rational) {
    let r1 = &ch.boundaries[split - 2];
    let r2 = &ch.boundaries[split - 1];
    let three = Rational::from_integer(3.into());
    let two = Rational::from_integer(2.into());
    let lo = (&two * r1 + r2) / &three;
    let hi = (r1 + &two * r2) / &three;
    (lo, hi)
}

#[derive(Debug, Clone)]
pub struct AppleTree {
    root: Node,
    /// Lower bound 1/sqrt(T) that every reveal probability must respect.
    reveal_floor: f64,
    /// Reveal probability of the round awaiting feedback.
    pending: Option<f64>,
    resets: u64,
}

impl AppleTree {
    /// Builds the tree for an easy game with horizon `t_horizon` and
    /// confidence `delta`.
    pub fn new(game: &Game, t_horizon: u64, delta: f64) -> Result<Self, PolicyError> {
        if t_horizon == 0 {
            return Err(PolicyError::BadHorizon);
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(PolicyError::BadDelta(delta));
        }
        let class = classify(game);
        if class != GameClass::Easy {
            return Err(PolicyError::NotEasy(class_display(&class)));
        }
        let ch = chain(game);
        debug_assert!(ch.len() >= 2, "easy games have at least two chain actions");
        let root = build(game, &ch, 0, ch.len() - 1, t_horizon, delta)?;
        Ok(AppleTree {
            root,
            reveal_floor: 1.0 / (t_horizon as f64).sqrt(),
            pending: None,
            resets: 0,
        })
    }

    /// Estimate of the outcome-2 frequency held at the root, if the root is
    /// an internal node (chains of length 2 collapse to a single leaf).
    pub fn root_estimate(&self) -> Option<f64> {
        match &self.root {
            Node::Internal(n) => Some(n.rho_hat),
            Node::Leaf(_) => None,
        }
    }

    /// The root's shrunken boundary band, if the root is internal.
    pub fn root_bandwidth(&self) -> Option<(f64, f64)> {
        match &self.root {
            Node::Internal(n) => Some((n.rho1, n.rho2)),
            Node::Leaf(_) => None,
        }
    }
}

/// Builds the subtree for chain positions `lo..=hi` (inclusive).
fn build(
    game: &Game,
    ch: &Chain,
    lo: usize,
    hi: usize,
    t_horizon: u64,
    delta: f64,
) -> Result<Node, PolicyError> {
    let k = hi - lo + 1;
    if k == 2 {
        return Ok(Node::Leaf(build_leaf(
            game,
            ch.actions[lo],
            ch.actions[hi],
            t_horizon,
            delta,
        )));
    }
    // 1-based position of the shared action within this segment.
    let split = lo + k.div_ceil(2);
    let r1 = &ch.boundaries[split - 2];
    let r2 = &ch.boundaries[split - 1];
    assert!(r1 < r2, "chain boundaries of a purified game are strictly increasing");
    let three = Rational::from_integer(3.into());
    let two = Rational::from_integer(2.into());
    let rho1 = rational_to_f64(&((&two * r1 + r2) / &three));
    let rho2 = rational_to_f64(&((r1 + &two * r2) / &three));
    if !(rho1 < rho2) {
        return Err(PolicyError::BandCollapsed);
    }
    let child_delta = delta / (4.0 * t_horizon as f64);
    let left = build(game, ch, lo, split - 1, t_horizon, child_delta)?;
    let right = build(game, ch, split - 1, hi, t_horizon, child_delta)?;
    Ok(Node::Internal(Internal {
        preferred: 0,
        rho_hat: 0.0,
        step: 1,
        rho1,
        rho2,
        children: Box::new([left, right]),
    }))
}

/// The tuning constants a leaf derives from its horizon and confidence
/// level: exploration bonus beta, mixing weight gamma, and the learning
/// rates for the two leaf variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafParameters {
    pub beta: f64,
    pub gamma: f64,
    pub eta_one_armed: f64,
    pub eta_full_info: f64,
}

pub fn leaf_parameters(t_horizon: u64, delta: f64) -> LeafParameters {
    let t = t_horizon as f64;
    let beta = ((2.0 / delta).ln() / (2.0 * t)).sqrt();
    let gamma = 8.0 * beta / (3.0 + beta);
    LeafParameters {
        beta,
        gamma,
        eta_one_armed: gamma / 4.0,
        eta_full_info: (8.0 * std::f64::consts::LN_2 / t).sqrt(),
    }
}

fn build_leaf(game: &Game, first: usize, second: usize, t_horizon: u64, delta: f64) -> Leaf {
    let (a, b) = if game.is_revealing(first) || !game.is_revealing(second) {
        (first, second)
    } else {
        (second, first)
    };
    assert!(
        game.is_revealing(a),
        "separation guarantees a revealing action in every neighbouring pair"
    );
    let kind = if game.is_revealing(b) {
        LeafKind::FullInfo
    } else {
        LeafKind::OneArmed
    };
    let params = leaf_parameters(t_horizon, delta);
    let beta = params.beta;
    let gamma = params.gamma;
    let eta = match kind {
        LeafKind::FullInfo => params.eta_full_info,
        LeafKind::OneArmed => params.eta_one_armed,
    };
    let loss = match kind {
        LeafKind::FullInfo => [
            [
                rational_to_f64(game.loss(a, 0)),
                rational_to_f64(game.loss(a, 1)),
            ],
            [
                rational_to_f64(game.loss(b, 0)),
                rational_to_f64(game.loss(b, 1)),
            ],
        ],
        LeafKind::OneArmed => [
            [
                rational_to_f64(&(game.loss(a, 0) - game.loss(b, 0))),
                rational_to_f64(&(game.loss(a, 1) - game.loss(b, 1))),
            ],
            [0.0, 0.0],
        ],
    };
    Leaf {
        kind,
        actions: [a, b],
        loss,
        w: [0.5, 0.5],
        beta,
        gamma,
        eta,
        pending_arm: None,
    }
}

impl Leaf {
    fn choose(&mut self, rng: &mut dyn RngCore) -> (usize, f64) {
        let (arm, reveal_prob) = match self.kind {
            LeafKind::FullInfo => {
                let q = self.w[0] / (self.w[0] + self.w[1]);
                let arm = if rng.gen::<f64>() < q { 0 } else { 1 };
                // Both actions reveal the outcome, so the estimator upstream
                // divides by 1, not by the sampling probability.
                (arm, 1.0)
            }
            LeafKind::OneArmed => {
                let p = (1.0 - self.gamma) * self.w[0] / (self.w[0] + self.w[1])
                    + self.gamma / 2.0;
                let arm = if rng.gen::<f64>() < p { 0 } else { 1 };
                (arm, p)
            }
        };
        self.pending_arm = Some(arm);
        (self.actions[arm], reveal_prob)
    }

    fn observe(&mut self, feedback: Feedback, reveal_prob: f64) {
        let arm = self
            .pending_arm
            .take()
            .expect("leaf observed without a pending round");
        match (self.kind, arm, feedback) {
            (LeafKind::FullInfo, _, Feedback::Reveal(h)) => {
                self.w[0] *= (-self.eta * self.loss[0][h]).exp();
                self.w[1] *= (-self.eta * self.loss[1][h]).exp();
                self.normalize();
            }
            (LeafKind::OneArmed, 0, Feedback::Reveal(h)) => {
                let l1 = (self.loss[0][h] + self.beta) / reveal_prob;
                self.w[0] *= (-self.eta * l1).exp();
                self.normalize();
            }
            (LeafKind::OneArmed, 1, Feedback::Hidden) => {
                // The hidden arm has zero local loss, so its estimate is the
                // bias term alone, importance-weighted by this arm's own
                // probability. Each arm's estimate then has expectation equal
                // to its local loss plus beta, and the shared bias cancels in
                // the weight ratio.
                let l2 = self.beta / (1.0 - reveal_prob);
                self.w[1] *= (-self.eta * l2).exp();
                self.normalize();
            }
            (kind, arm, fb) => {
                panic!("inconsistent feedback {fb:?} for {kind:?} leaf arm {arm}")
            }
        }
    }

    /// Rescales the weights to sum to one. The algorithm only ever uses
    /// weight ratios, and without rescaling both weights drift towards zero
    /// over long horizons.
    fn normalize(&mut self) {
        let sum = self.w[0] + self.w[1];
        self.w[0] /= sum;
        self.w[1] /= sum;
        debug_assert!(self.w[0] > 0.0 && self.w[1] > 0.0 && sum.is_finite());
    }

    fn reset(&mut self) {
        self.w = [0.5, 0.5];
        self.pending_arm = None;
    }
}

fn choose_rec(node: &mut Node, rng: &mut dyn RngCore) -> (usize, f64) {
    match node {
        Node::Leaf(leaf) => leaf.choose(rng),
        Node::Internal(n) => choose_rec(&mut n.children[n.preferred], rng),
    }
}

/// Delivers feedback along the pending path; returns whether this node
/// switched its preferred child.
fn observe_rec(node: &mut Node, feedback: Feedback, reveal_prob: f64) -> bool {
    match node {
        Node::Leaf(leaf) => {
            leaf.observe(feedback, reveal_prob);
            false
        }
        Node::Internal(n) => {
            observe_rec(&mut n.children[n.preferred], feedback, reveal_prob);
            let t = n.step as f64;
            let estimate = match feedback {
                Feedback::Reveal(1) => 1.0 / reveal_prob,
                _ => 0.0,
            };
            n.rho_hat = (1.0 - 1.0 / t) * n.rho_hat + estimate / t;
            let mut switched = false;
            if n.preferred == 1 && n.rho_hat < n.rho1 {
                reset(&mut n.children[0]);
                n.preferred = 0;
                switched = true;
            } else if n.preferred == 0 && n.rho_hat > n.rho2 {
                reset(&mut n.children[1]);
                n.preferred = 1;
                switched = true;
            }
            n.step += 1;
            switched
        }
    }
}

fn reset(node: &mut Node) {
    match node {
        Node::Leaf(leaf) => leaf.reset(),
        Node::Internal(n) => {
            n.preferred = 0;
            n.rho_hat = 0.0;
            n.step = 1;
            reset(&mut n.children[0]);
        }
    }
}

impl Policy for AppleTree {
    fn choose(&mut self, rng: &mut dyn RngCore) -> usize {
        assert!(self.pending.is_none(), "choose called twice without observe");
        let (action, reveal_prob) = choose_rec(&mut self.root, rng);
        assert!(
            reveal_prob >= self.reveal_floor,
            "reveal probability {reveal_prob} fell below the 1/sqrt(T) floor"
        );
        self.pending = Some(reveal_prob);
        action
    }

    fn observe(&mut self, feedback: Feedback) {
        let reveal_prob = self
            .pending
            .take()
            .expect("observe called without a pending choose");
        if observe_rec(&mut self.root, feedback, reveal_prob) {
            self.resets += 1;
        }
    }

    fn reveal_prob(&self) -> f64 {
        self.pending.expect("no round is pending")
    }

    fn reset_count(&self) -> u64 {
        self.resets
    }
}
