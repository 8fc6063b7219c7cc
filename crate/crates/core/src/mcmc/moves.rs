//! Tree-structure proposals (GROW, PRUNE, CHANGE, SWAP) and their
//! transition and prior ratios.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::forest::prior::{root_cell, ProposalProbs, TreePrior};
use crate::forest::{NodeId, SplitRule, Tree};
use crate::scalar::{self, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Grow,
    Prune,
    Change,
    Swap,
}

impl MoveKind {
    pub const ALL: [MoveKind; 4] = [MoveKind::Grow, MoveKind::Prune, MoveKind::Change, MoveKind::Swap];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MoveKind::Grow => "grow",
            MoveKind::Prune => "prune",
            MoveKind::Change => "change",
            MoveKind::Swap => "swap",
        }
    }

    fn prob<F: Real>(self, probs: &ProposalProbs<F>) -> F {
        probs.as_array()[self.index()]
    }
}

/// A fully specified structure move.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Move<F> {
    Grow { leaf: NodeId, rule: SplitRule<F> },
    Prune { node: NodeId },
    Change { node: NodeId, rule: SplitRule<F> },
    Swap { parent: NodeId, child: NodeId },
}

impl<F> Move<F> {
    pub fn kind(&self) -> MoveKind {
        match self {
            Move::Grow { .. } => MoveKind::Grow,
            Move::Prune { .. } => MoveKind::Prune,
            Move::Change { .. } => MoveKind::Change,
            Move::Swap { .. } => MoveKind::Swap,
        }
    }

    /// Root of the only subtree the move modifies.
    pub fn anchor(&self) -> NodeId {
        match *self {
            Move::Grow { leaf, .. } => leaf,
            Move::Prune { node } | Move::Change { node, .. } => node,
            Move::Swap { parent, .. } => parent,
        }
    }
}

/// Proposed tree with the log proposal densities in both directions and the
/// log prior ratio `log π(T') - log π(T)`. New leaves carry value 0.
#[derive(Clone, Debug)]
pub struct Proposal<F> {
    pub mv: Move<F>,
    pub tree: Tree<F>,
    pub log_q_forward: F,
    pub log_q_reverse: F,
    pub log_prior_ratio: F,
}

impl<F: Real> Proposal<F> {
    /// `log q(T | T') - log q(T' | T)`.
    pub fn log_transition_ratio(&self) -> F {
        self.log_q_reverse - self.log_q_forward
    }

    /// Log MH ratio without the likelihood. NaN when both densities vanish.
    pub fn log_ratio_without_likelihood(&self) -> F {
        self.log_prior_ratio + self.log_transition_ratio()
    }
}

/// Leaves whose cell admits at least one split.
pub fn growable_leaves<F: Real>(tree: &Tree<F>, prior: &TreePrior<'_, F>) -> Vec<NodeId> {
    let p = prior.p();
    tree.leaves()
        .into_iter()
        .filter(|&id| prior.splittable(&tree.cell(id, p)))
        .collect()
}

fn ln<F: Real>(x: F) -> F {
    x.ln()
}

fn count_ln<F: Real>(n: usize) -> F {
    F::lit(n as f64).ln()
}

/// Log prior ratio restricted to the subtree rooted at `anchor`, the only part
/// of the tree the move touches.
fn subtree_prior_ratio<F: Real>(prior: &TreePrior<'_, F>, old: &Tree<F>, new: &Tree<F>, anchor: NodeId) -> F {
    let mut cell = old.cell(anchor, prior.p());
    let lp_new = prior.log_subtree(new, anchor, &mut cell);
    let lp_old = prior.log_subtree(old, anchor, &mut cell);
    if lp_new == F::neg_infinity() {
        return F::neg_infinity();
    }
    lp_new - lp_old
}

/// Applies `mv` to `tree` and evaluates both proposal densities and the prior
/// ratio. Returns `None` if the move does not fit the tree (wrong node type,
/// rule not drawable in the node's cell).
pub fn evaluate_move<F: Real>(
    tree: &Tree<F>,
    mv: Move<F>,
    prior: &TreePrior<'_, F>,
    probs: &ProposalProbs<F>,
) -> Option<Proposal<F>> {
    let p = prior.p();
    let zero = F::zero();
    let (new, fwd, rev) = match mv {
        Move::Grow { leaf, rule } => {
            if !tree.is_leaf(leaf) {
                return None;
            }
            let growable = growable_leaves(tree, prior);
            if !growable.contains(&leaf) {
                return None;
            }
            let rule_lp = prior.rule_log_prob(&tree.cell(leaf, p), &rule);
            if rule_lp == F::neg_infinity() {
                return None;
            }
            let mut new = tree.clone();
            new.split_leaf(leaf, rule, zero, zero);
            let fwd = ln(MoveKind::Grow.prob(probs)) - count_ln(growable.len()) + rule_lp;
            let rev = ln(MoveKind::Prune.prob(probs)) - count_ln::<F>(new.prunable_nodes().len());
            (new, fwd, rev)
        }
        Move::Prune { node } => {
            let prunable = tree.prunable_nodes();
            if !prunable.contains(&node) {
                return None;
            }
            let rule = tree.rule(node).unwrap();
            let mut new = tree.clone();
            new.collapse(node, zero);
            let fwd = ln(MoveKind::Prune.prob(probs)) - count_ln(prunable.len());
            let growable_after = growable_leaves(&new, prior);
            let rev = ln(MoveKind::Grow.prob(probs)) - count_ln(growable_after.len())
                + prior.rule_log_prob(&new.cell(node, p), &rule);
            (new, fwd, rev)
        }
        Move::Change { node, rule } => {
            let old_rule = tree.rule(node)?;
            let cell = tree.cell(node, p);
            let new_lp = prior.rule_log_prob(&cell, &rule);
            if new_lp == F::neg_infinity() {
                return None;
            }
            let pick = ln(MoveKind::Change.prob(probs)) - count_ln(tree.internal_nodes().len());
            let mut new = tree.clone();
            new.set_rule(node, rule);
            (new, pick + new_lp, pick + prior.rule_log_prob(&cell, &old_rule))
        }
        Move::Swap { parent, child } => {
            let pairs = tree.swappable_pairs();
            if !pairs.contains(&(parent, child)) {
                return None;
            }
            let parent_rule = tree.rule(parent).unwrap();
            let child_rule = tree.rule(child).unwrap();
            let mut new = tree.clone();
            new.set_rule(parent, child_rule);
            new.set_rule(child, parent_rule);
            let (l, r) = tree.children(parent).unwrap();
            let sibling = if l == child { r } else { l };
            if tree.rule(sibling) == Some(child_rule) {
                new.set_rule(sibling, parent_rule);
            }
            let pick = ln(MoveKind::Swap.prob(probs)) - count_ln(pairs.len());
            (new, pick, pick)
        }
    };
    let log_prior_ratio = subtree_prior_ratio(prior, tree, &new, mv.anchor());
    Some(Proposal {
        mv,
        tree: new,
        log_q_forward: fwd,
        log_q_reverse: rev,
        log_prior_ratio,
    })
}

/// Samples a move of the given kind; `None` when no such move exists.
pub fn sample_move<F: Real, R: Rng + ?Sized>(
    kind: MoveKind,
    tree: &Tree<F>,
    prior: &TreePrior<'_, F>,
    rng: &mut R,
) -> Option<Move<F>> {
    let p = prior.p();
    match kind {
        MoveKind::Grow => {
            let growable = growable_leaves(tree, prior);
            if growable.is_empty() {
                return None;
            }
            let leaf = growable[rng.random_range(0..growable.len())];
            let rule = prior.sample_rule(&tree.cell(leaf, p), rng)?;
            Some(Move::Grow { leaf, rule })
        }
        MoveKind::Prune => {
            let prunable = tree.prunable_nodes();
            if prunable.is_empty() {
                return None;
            }
            Some(Move::Prune {
                node: prunable[rng.random_range(0..prunable.len())],
            })
        }
        MoveKind::Change => {
            let internal = tree.internal_nodes();
            if internal.is_empty() {
                return None;
            }
            let node = internal[rng.random_range(0..internal.len())];
            let rule = prior.sample_rule(&tree.cell(node, p), rng)?;
            Some(Move::Change { node, rule })
        }
        MoveKind::Swap => {
            let pairs = tree.swappable_pairs();
            if pairs.is_empty() {
                return None;
            }
            let (parent, child) = pairs[rng.random_range(0..pairs.len())];
            Some(Move::Swap { parent, child })
        }
    }
}

/// Draws a move kind, then a move of that kind. The kind is returned even when
/// the move is infeasible so that attempts can be counted.
pub fn propose<F: Real, R: Rng + ?Sized>(
    tree: &Tree<F>,
    prior: &TreePrior<'_, F>,
    probs: &ProposalProbs<F>,
    rng: &mut R,
) -> (MoveKind, Option<Proposal<F>>) {
    let kind = MoveKind::ALL[scalar::categorical(rng, &probs.as_array())];
    let proposal = sample_move(kind, tree, prior, rng).and_then(|mv| evaluate_move(tree, mv, prior, probs));
    (kind, proposal)
}

/// Metropolis-Hastings accept/reject on a log ratio. NaN rejects.
pub fn mh_accept<F: Real, R: Rng + ?Sized>(log_ratio: F, rng: &mut R) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    if log_ratio >= F::zero() {
        return true;
    }
    rng.random::<f64>() < log_ratio.as_f64().exp()
}

/// Log prior of a whole tree under `prior`; handy for tests.
pub fn tree_log_prior<F: Real>(tree: &Tree<F>, prior: &TreePrior<'_, F>) -> F {
    let mut cell = root_cell(prior.p());
    prior.log_subtree(tree, Tree::<F>::ROOT, &mut cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::prior::{SplitAxisProbs, StructurePrior};
    use crate::forest::SplitGrid;
    use crate::rng::stream;

    fn setup() -> (StructurePrior<f64>, SplitGrid<f64>, SplitAxisProbs<f64>) {
        (
            StructurePrior::Original { alpha: 0.95, beta: 2.0 },
            SplitGrid::from_thresholds(vec![vec![0.2, 0.5, 0.8], vec![0.4, 0.6]]),
            SplitAxisProbs(vec![0.7, 0.3]),
        )
    }

    #[test]
    fn prune_on_root_only_is_infeasible() {
        let (st, grid, s) = setup();
        let tp = TreePrior { structure: &st, grid: &grid, s: &s };
        let t = Tree::leaf(0.0);
        let mut rng = stream(0);
        assert!(sample_move(MoveKind::Prune, &t, &tp, &mut rng).is_none());
        assert!(sample_move(MoveKind::Swap, &t, &tp, &mut rng).is_none());
        assert!(sample_move(MoveKind::Change, &t, &tp, &mut rng).is_none());
    }

    #[test]
    fn grow_then_prune_balances_exactly() {
        let (st, grid, s) = setup();
        let tp = TreePrior { structure: &st, grid: &grid, s: &s };
        let probs = ProposalProbs::default();
        let t = Tree::leaf(0.0);
        for (feature, thresholds) in [(0usize, vec![0.2, 0.5, 0.8]), (1, vec![0.4, 0.6])] {
            for threshold in thresholds {
                let grow = evaluate_move(&t, Move::Grow { leaf: 0, rule: SplitRule { feature, threshold } }, &tp, &probs)
                    .unwrap();
                let prune = evaluate_move(&grow.tree, Move::Prune { node: 0 }, &tp, &probs).unwrap();
                let total = grow.log_ratio_without_likelihood() + prune.log_ratio_without_likelihood();
                assert!(total.abs() < 1e-10, "{total}");
                assert!((grow.log_q_forward - prune.log_q_reverse).abs() < 1e-12);
                assert!((grow.log_q_reverse - prune.log_q_forward).abs() < 1e-12);
                assert_eq!(prune.tree.compact(), t);
            }
        }
    }

    #[test]
    fn single_candidate_grow_probability() {
        let st = StructurePrior::DepthGeometric { alpha: 0.45 };
        let grid = SplitGrid::<f64>::from_thresholds(vec![vec![0.3], vec![0.6]]);
        let s = SplitAxisProbs(vec![0.25, 0.75]);
        let tp = TreePrior { structure: &st, grid: &grid, s: &s };
        let probs = ProposalProbs::default();
        let t = Tree::leaf(0.0);
        for (j, thr) in [(0usize, 0.3), (1, 0.6)] {
            let g = evaluate_move(&t, Move::Grow { leaf: 0, rule: SplitRule { feature: j, threshold: thr } }, &tp, &probs)
                .unwrap();
            assert!((g.log_q_forward.exp() - 0.25 * s.0[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_change_has_zero_ratio() {
        let (st, grid, s) = setup();
        let tp = TreePrior { structure: &st, grid: &grid, s: &s };
        let probs = ProposalProbs::default();
        let mut t = Tree::leaf(0.0);
        let rule = SplitRule { feature: 0, threshold: 0.5 };
        t.split_leaf(0, rule, 0.0, 0.0);
        let c = evaluate_move(&t, Move::Change { node: 0, rule }, &tp, &probs).unwrap();
        assert_eq!(c.log_ratio_without_likelihood(), 0.0);
    }

    #[test]
    fn swap_ratio_matches_full_prior_difference() {
        let (st, grid, s) = setup();
        let tp = TreePrior { structure: &st, grid: &grid, s: &s };
        let probs = ProposalProbs::default();
        let mut t = Tree::leaf(0.0);
        let (l, _) = t.split_leaf(0, SplitRule { feature: 0, threshold: 0.5 }, 0.0, 0.0);
        t.split_leaf(l, SplitRule { feature: 1, threshold: 0.4 }, 0.0, 0.0);
        let sw = evaluate_move(&t, Move::Swap { parent: 0, child: l }, &tp, &probs).unwrap();
        let full = tree_log_prior(&sw.tree, &tp) - tree_log_prior(&t, &tp);
        assert!((sw.log_prior_ratio - full).abs() < 1e-12);
        assert_eq!(sw.log_transition_ratio(), 0.0);
    }

    #[test]
    fn mh_accept_edge_cases() {
        let mut rng = stream(9);
        assert!(mh_accept(f64::INFINITY, &mut rng));
        assert!(!mh_accept(f64::NEG_INFINITY, &mut rng));
        assert!(!mh_accept(f64::NAN, &mut rng));
        assert!(mh_accept(0.0, &mut rng));
    }
}
