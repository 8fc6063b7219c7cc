use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::SplitGrid;
use super::tree::{NodeId, SplitRule, Tree};
use crate::error::{Error, Result};
use crate::scalar::{self, Real};

/// Probability that a node at a given depth splits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructurePrior<F> {
    /// `alpha^depth`, with `0 < alpha < 1/2`.
    DepthGeometric { alpha: F },
    /// `alpha * (1 + depth)^(-beta)`.
    Original { alpha: F, beta: F },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitAxisPrior<F> {
    Uniform,
    /// `s ~ Dir(zeta / p^xi, ..., zeta / p^xi)`.
    DirichletSparse { zeta: F, xi: F },
}

/// Probabilities of the four structure moves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalProbs<F> {
    pub grow: F,
    pub prune: F,
    pub change: F,
    pub swap: F,
}

impl<F: Real> Default for ProposalProbs<F> {
    fn default() -> Self {
        ProposalProbs {
            grow: F::lit(0.25),
            prune: F::lit(0.25),
            change: F::lit(0.4),
            swap: F::lit(0.1),
        }
    }
}

impl<F: Real> ProposalProbs<F> {
    pub fn as_array(&self) -> [F; 4] {
        [self.grow, self.prune, self.change, self.swap]
    }
}

/// Hyperparameters of the sum-of-trees prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig<F> {
    /// Number of trees.
    pub m: usize,
    pub structure: StructurePrior<F>,
    /// Leaf shrinkage.
    pub kappa: F,
    /// Cap on split-grid size per feature.
    pub n_max: usize,
    /// Noise prior degrees of freedom.
    pub nu: F,
    /// Noise prior calibration quantile.
    pub q: F,
    pub split_axis: SplitAxisPrior<F>,
    pub proposals: ProposalProbs<F>,
}

impl<F: Real> Default for PriorConfig<F> {
    fn default() -> Self {
        PriorConfig {
            m: 100,
            structure: StructurePrior::DepthGeometric { alpha: F::lit(0.45) },
            kappa: F::lit(2.0),
            n_max: 100,
            nu: F::lit(3.0),
            q: F::lit(0.9),
            split_axis: SplitAxisPrior::Uniform,
            proposals: ProposalProbs::default(),
        }
    }
}

impl<F: Real> PriorConfig<F> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.m == 0 {
            return bad("tree count must be at least 1");
        }
        match self.structure {
            StructurePrior::DepthGeometric { alpha } => {
                if !(alpha > F::zero() && alpha < F::lit(0.5)) {
                    return bad("depth-geometric alpha must lie in (0, 1/2)");
                }
            }
            StructurePrior::Original { alpha, beta } => {
                if !(alpha > F::zero() && alpha < F::one()) || !(beta >= F::zero()) {
                    return bad("original prior needs alpha in (0,1) and beta >= 0");
                }
            }
        }
        if !(self.kappa > F::zero()) {
            return bad("kappa must be positive");
        }
        if self.n_max == 0 {
            return bad("n_max must be at least 1");
        }
        if !(self.nu > F::zero()) || !(self.q > F::zero() && self.q < F::one()) {
            return bad("noise prior needs nu > 0 and q in (0,1)");
        }
        if let SplitAxisPrior::DirichletSparse { zeta, xi } = self.split_axis {
            if !(zeta > F::zero()) || !(xi >= F::zero()) {
                return bad("Dirichlet split prior needs zeta > 0 and xi >= 0");
            }
        }
        let probs = self.proposals.as_array();
        let total: F = probs.iter().copied().sum();
        if probs.iter().any(|p| *p < F::zero()) || (total - F::one()).abs() > F::lit(1e-6) {
            return bad("proposal probabilities must be non-negative and sum to 1");
        }
        Ok(())
    }

    pub fn leaf_sd(&self) -> F {
        leaf_prior_sd(self.kappa, self.m)
    }

    /// Dirichlet concentration per axis, if the sparse prior is active.
    pub fn dirichlet_alpha(&self, p: usize) -> Option<F> {
        match self.split_axis {
            SplitAxisPrior::Uniform => None,
            SplitAxisPrior::DirichletSparse { zeta, xi } => Some(zeta / F::lit(p as f64).powf(xi)),
        }
    }
}

/// Prior split probability of a node at `depth`.
pub fn split_prob<F: Real>(depth: u32, prior: &StructurePrior<F>) -> F {
    match *prior {
        StructurePrior::DepthGeometric { alpha } => alpha.powi(depth as i32),
        StructurePrior::Original { alpha, beta } => alpha * (F::one() + F::lit(depth as f64)).powf(-beta),
    }
}

/// Leaf prior standard deviation `0.5 / (kappa * sqrt(m))`.
pub fn leaf_prior_sd<F: Real>(kappa: F, m: usize) -> F {
    F::lit(0.5) / (kappa * F::lit(m as f64).sqrt())
}

/// Split-axis probability vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitAxisProbs<F>(pub Vec<F>);

impl<F: Real> SplitAxisProbs<F> {
    pub fn uniform(p: usize) -> Self {
        SplitAxisProbs(vec![F::one() / F::lit(p as f64); p])
    }

    /// Draws from the configured prior (uniform is deterministic).
    pub fn from_prior<R: Rng + ?Sized>(prior: &PriorConfig<F>, p: usize, rng: &mut R) -> Self {
        match prior.dirichlet_alpha(p) {
            None => Self::uniform(p),
            Some(a) => SplitAxisProbs(scalar::dirichlet(rng, &vec![a; p])),
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.0
    }
}

/// Everything needed to evaluate or sample the tree-structure prior.
#[derive(Clone, Copy, Debug)]
pub struct TreePrior<'a, F> {
    pub structure: &'a StructurePrior<F>,
    pub grid: &'a SplitGrid<F>,
    pub s: &'a SplitAxisProbs<F>,
}

pub type Cell<F> = Vec<(F, F)>;

pub fn root_cell<F: Real>(p: usize) -> Cell<F> {
    vec![(F::neg_infinity(), F::infinity()); p]
}

impl<'a, F: Real> TreePrior<'a, F> {
    pub fn p(&self) -> usize {
        self.grid.n_features()
    }

    /// Total split-axis mass over axes with at least one interior threshold.
    pub fn valid_mass(&self, cell: &[(F, F)]) -> F {
        let mut total = F::zero();
        for (j, &(lo, hi)) in cell.iter().enumerate() {
            let sj = self.s.0[j];
            if sj > F::zero() && self.grid.has_interior(j, lo, hi) {
                total += sj;
            }
        }
        total
    }

    /// A node can split if some axis with positive mass has an interior threshold.
    pub fn splittable(&self, cell: &[(F, F)]) -> bool {
        cell.iter()
            .enumerate()
            .any(|(j, &(lo, hi))| self.s.0[j] > F::zero() && self.grid.has_interior(j, lo, hi))
    }

    /// Log probability of drawing `rule` at a node with this cell: axis from the
    /// renormalized valid mass, threshold uniform over the interior thresholds.
    pub fn rule_log_prob(&self, cell: &[(F, F)], rule: &SplitRule<F>) -> F {
        let (lo, hi) = cell[rule.feature];
        let sj = self.s.0[rule.feature];
        let interior = self.grid.interior(rule.feature, lo, hi);
        if sj <= F::zero() || !(rule.threshold > lo && rule.threshold < hi) || interior.is_empty() {
            return F::neg_infinity();
        }
        let mass = self.valid_mass(cell);
        (sj / mass).ln() - F::lit(interior.len() as f64).ln()
    }

    pub fn sample_rule<R: Rng + ?Sized>(&self, cell: &[(F, F)], rng: &mut R) -> Option<SplitRule<F>> {
        let weights: Vec<F> = cell
            .iter()
            .enumerate()
            .map(|(j, &(lo, hi))| {
                if !self.grid.has_interior(j, lo, hi) {
                    F::zero()
                } else {
                    self.s.0[j].max(F::zero())
                }
            })
            .collect();
        if weights.iter().all(|w| *w <= F::zero()) {
            return None;
        }
        let feature = scalar::categorical(rng, &weights);
        let (lo, hi) = cell[feature];
        let interior = self.grid.interior(feature, lo, hi);
        let threshold = interior[rng.random_range(0..interior.len())];
        Some(SplitRule { feature, threshold })
    }

    /// Log prior of the subtree rooted at `node`, given that node's cell.
    pub fn log_subtree(&self, tree: &Tree<F>, node: NodeId, cell: &mut Cell<F>) -> F {
        let depth = tree.depth_of(node);
        match tree.rule(node) {
            None => {
                if self.splittable(cell) {
                    (F::one() - split_prob(depth, self.structure)).ln()
                } else {
                    F::zero()
                }
            }
            Some(rule) => {
                let rule_lp = self.rule_log_prob(cell, &rule);
                if rule_lp == F::neg_infinity() {
                    return rule_lp;
                }
                let (l, r) = tree.children(node).unwrap();
                let saved = cell[rule.feature];
                cell[rule.feature].1 = saved.1.min(rule.threshold);
                let left = self.log_subtree(tree, l, cell);
                cell[rule.feature] = (saved.0.max(rule.threshold), saved.1);
                let right = self.log_subtree(tree, r, cell);
                cell[rule.feature] = saved;
                split_prob(depth, self.structure).ln() + rule_lp + left + right
            }
        }
    }

    /// Log prior of a whole tree structure (leaf values excluded).
    pub fn log_tree(&self, tree: &Tree<F>) -> F {
        let mut cell = root_cell(self.p());
        self.log_subtree(tree, Tree::<F>::ROOT, &mut cell)
    }

    /// Galton-Watson draw; leaf values i.i.d. `N(0, leaf_sd^2)`.
    pub fn sample_tree<R: Rng + ?Sized>(&self, leaf_sd: F, rng: &mut R) -> Tree<F> {
        let mut tree = Tree::leaf(scalar::normal(rng, F::zero(), leaf_sd));
        let mut stack: Vec<(NodeId, Cell<F>)> = vec![(Tree::<F>::ROOT, root_cell(self.p()))];
        while let Some((node, cell)) = stack.pop() {
            let depth = tree.depth_of(node);
            let p_split = split_prob(depth, self.structure);
            if !self.splittable(&cell) || rng.random::<f64>() >= p_split.as_f64() {
                continue;
            }
            let rule = self.sample_rule(&cell, rng).expect("splittable cell has a rule");
            let lv = scalar::normal(rng, F::zero(), leaf_sd);
            let rv = scalar::normal(rng, F::zero(), leaf_sd);
            let (l, r) = tree.split_leaf(node, rule, lv, rv);
            let mut right_cell = cell.clone();
            right_cell[rule.feature].0 = right_cell[rule.feature].0.max(rule.threshold);
            let mut left_cell = cell;
            left_cell[rule.feature].1 = left_cell[rule.feature].1.min(rule.threshold);
            stack.push((r, right_cell));
            stack.push((l, left_cell));
        }
        tree
    }
}

/// Draws one tree from the prior.
pub fn sample_tree_from_prior<F: Real, R: Rng + ?Sized>(
    prior: &PriorConfig<F>,
    grid: &SplitGrid<F>,
    s: &SplitAxisProbs<F>,
    rng: &mut R,
) -> Tree<F> {
    TreePrior {
        structure: &prior.structure,
        grid,
        s,
    }
    .sample_tree(prior.leaf_sd(), rng)
}
