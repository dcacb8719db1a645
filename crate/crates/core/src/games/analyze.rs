//! Per-action structural analysis: domination, degeneracy, duplicates.
//!
//! With two outcomes the expected loss of action i under outcome-2 frequency
//! rho is the line f_i(rho) = (1-rho) l_{i,1} + rho l_{i,2}. Viewing each
//! action as the point (l_{i,1}, l_{i,2}), an action is non-dominated exactly
//! when its point is a vertex of the lower-left convex hull of the distinct
//! loss points: those are the points that are the unique minimiser of f at
//! some frequency. Points strictly inside a hull edge, or above the hull,
//! are dominated; a dominated action is additionally degenerate when it still
//! ties the minimum somewhere, which can only happen at a pairwise tie
//! frequency or at the endpoints 0 and 1.

use num_traits::{One, Zero};

use super::{Game, GameError, Rational};

/// Structural flags for every action of a game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionAnalysis {
    /// Action's feedback symbols differ, so its feedback identifies the outcome.
    pub revealing: Vec<bool>,
    /// Some mixture of other actions (with different loss vectors) is never worse.
    pub dominated: Vec<bool>,
    /// Dominated, yet still achieves the minimal expected loss at some frequency.
    pub degenerate: Vec<bool>,
    /// For a duplicate action, the representative that purification keeps.
    pub duplicate_of: Vec<Option<usize>>,
}

/// Group of actions sharing one loss vector.
pub(crate) struct LossGroup {
    pub point: [Rational; 2],
    pub members: Vec<usize>,
    pub representative: usize,
}

pub(crate) struct Structure {
    pub groups: Vec<LossGroup>,
    /// Index of each action's group in `groups`.
    pub group_of: Vec<usize>,
    /// Groups whose point is a vertex of the lower-left hull, by ascending l_{i,1}.
    pub hull_groups: Vec<usize>,
}

/// Groups the actions by loss vector and computes the lower-left hull.
///
/// The representative of a group is its first revealing member when one
/// exists, otherwise its first member; purification keeps representatives.
pub(crate) fn structure(game: &Game) -> Structure {
    let n = game.n_actions();
    let mut groups: Vec<LossGroup> = Vec::new();
    let mut group_of = vec![0usize; n];
    for i in 0..n {
        let point = game.loss_row(i);
        match groups.iter().position(|g| g.point == *point) {
            Some(gi) => {
                groups[gi].members.push(i);
                group_of[i] = gi;
            }
            None => {
                group_of[i] = groups.len();
                groups.push(LossGroup {
                    point: point.clone(),
                    members: vec![i],
                    representative: i,
                });
            }
        }
    }
    for g in &mut groups {
        g.representative = g
            .members
            .iter()
            .copied()
            .find(|&i| game.is_revealing(i))
            .unwrap_or(g.members[0]);
    }

    // Pareto step: a point weakly below-left of another dominates it outright.
    let mut minimal: Vec<usize> = Vec::new();
    'outer: for gi in 0..groups.len() {
        for gj in 0..groups.len() {
            if gi != gj
                && groups[gj].point[0] <= groups[gi].point[0]
                && groups[gj].point[1] <= groups[gi].point[1]
            {
                continue 'outer;
            }
        }
        minimal.push(gi);
    }
    // Minimal points form an antichain: l_1 strictly increases while l_2
    // strictly decreases, which is exactly the sweep order the hull needs.
    minimal.sort_by(|&a, &b| groups[a].point[0].cmp(&groups[b].point[0]));

    let cross = |o: &[Rational; 2], a: &[Rational; 2], b: &[Rational; 2]| -> Rational {
        (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
    };
    let mut hull: Vec<usize> = Vec::new();
    for &gi in &minimal {
        while hull.len() >= 2 {
            let o = &groups[hull[hull.len() - 2]].point;
            let a = &groups[hull[hull.len() - 1]].point;
            let b = &groups[gi].point;
            // A non-positive cross product means the middle point sits on or
            // above the segment, so it is not a vertex.
            if cross(o, a, b) <= Rational::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(gi);
    }

    Structure {
        groups,
        group_of,
        hull_groups: hull,
    }
}

/// Frequencies where two distinct loss lines cross inside (0, 1), plus both
/// endpoints. Every change in the pointwise order of expected losses happens
/// at one of these.
pub(crate) fn breakpoint_frequencies(groups: &[LossGroup]) -> Vec<Rational> {
    let mut freqs = vec![Rational::zero(), Rational::one()];
    for i in 0..groups.len() {
        for j in (i + 1)..groups.len() {
            let dx = &groups[i].point[0] - &groups[j].point[0];
            let dy = &groups[i].point[1] - &groups[j].point[1];
            let denom = &dx - &dy;
            if denom.is_zero() {
                continue;
            }
            let rho = dx / denom;
            if rho > Rational::zero() && rho < Rational::one() {
                freqs.push(rho);
            }
        }
    }
    freqs.sort();
    freqs.dedup();
    freqs
}

fn line_at(point: &[Rational; 2], rho: &Rational) -> Rational {
    let one = Rational::one();
    (&one - rho) * &point[0] + rho * &point[1]
}

/// Computes the revealing/dominated/degenerate/duplicate flags for a game.
pub fn analyze(game: &Game) -> ActionAnalysis {
    let n = game.n_actions();
    let st = structure(game);

    let revealing = (0..n).map(|i| game.is_revealing(i)).collect();

    let mut group_dominated = vec![true; st.groups.len()];
    for &gi in &st.hull_groups {
        group_dominated[gi] = false;
    }

    // A dominated group is degenerate when its line touches the lower envelope
    // at some breakpoint frequency (including the endpoints).
    let freqs = breakpoint_frequencies(&st.groups);
    let mut group_degenerate = vec![false; st.groups.len()];
    for rho in &freqs {
        let values: Vec<Rational> = st.groups.iter().map(|g| line_at(&g.point, rho)).collect();
        let min = values.iter().min().expect("game has at least one action");
        for gi in 0..st.groups.len() {
            if group_dominated[gi] && &values[gi] == min {
                group_degenerate[gi] = true;
            }
        }
    }

    let dominated = (0..n).map(|i| group_dominated[st.group_of[i]]).collect();
    let degenerate = (0..n).map(|i| group_degenerate[st.group_of[i]]).collect();
    let duplicate_of = (0..n)
        .map(|i| {
            let g = &st.groups[st.group_of[i]];
            (g.members.len() > 1 && g.representative != i).then_some(g.representative)
        })
        .collect();

    ActionAnalysis {
        revealing,
        dominated,
        degenerate,
        duplicate_of,
    }
}

/// How purification mapped the original actions onto the purified game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PurifyMap {
    /// Original indices of the kept actions, in purified order.
    pub surviving: Vec<usize>,
    /// Original action -> purified index of its surviving representative,
    /// `None` for removed (dominated) actions.
    pub to_purified: Vec<Option<usize>>,
}

/// Removes dominated actions, then collapses duplicate loss vectors onto one
/// representative each (a revealing member when the group has one).
///
/// Purification is idempotent. Easy, trivial, and hopeless games keep
/// their class, but removal is not class-preserving in general: a hard
/// game whose only revealing actions are dominated turns hopeless, and a
/// degenerate game loses its degenerate actions. The classifier therefore
/// always inspects the original game.
pub fn purify(game: &Game) -> (Game, PurifyMap) {
    let st = structure(game);
    let mut keep: Vec<usize> = st
        .hull_groups
        .iter()
        .map(|&gi| st.groups[gi].representative)
        .collect();
    keep.sort_unstable();

    let purified = game
        .restrict(&keep)
        .expect("restriction of a valid game is valid");

    let mut group_dominated = vec![true; st.groups.len()];
    for &gi in &st.hull_groups {
        group_dominated[gi] = false;
    }
    let to_purified = (0..game.n_actions())
        .map(|i| {
            let gi = st.group_of[i];
            if group_dominated[gi] {
                None
            } else {
                let rep = st.groups[gi].representative;
                Some(keep.iter().position(|&k| k == rep).expect("representative kept"))
            }
        })
        .collect();

    (
        purified,
        PurifyMap {
            surviving: keep,
            to_purified,
        },
    )
}

/// Removes exactly the degenerate non-revealing actions, keeping everything
/// else (including other dominated actions) in place.
///
/// This narrower reduction preserves the minimax regret only when the game
/// has no degenerate revealing action, so it refuses degenerate games.
pub fn remove_degenerate_nonrevealing(game: &Game) -> Result<(Game, PurifyMap), GameError> {
    let analysis = analyze(game);
    if let Some(action) = (0..game.n_actions())
        .find(|&i| analysis.degenerate[i] && analysis.revealing[i])
    {
        return Err(GameError::DegenerateGame { action: action + 1 });
    }
    let keep: Vec<usize> = (0..game.n_actions())
        .filter(|&i| !(analysis.degenerate[i] && !analysis.revealing[i]))
        .collect();
    let reduced = game
        .restrict(&keep)
        .expect("restriction of a valid game is valid");
    let to_purified = (0..game.n_actions())
        .map(|i| keep.iter().position(|&k| k == i))
        .collect();
    Ok((
        reduced,
        PurifyMap {
            surviving: keep,
            to_purified,
        },
    ))
}
