//! One Metropolis-within-Gibbs chain over a sum-of-trees model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::likelihood::{gibbs_leaf_draw, gibbs_sigma_update, gibbs_split_axis_update, leaf_partition_term};
use super::moves::{mh_accept, propose, MoveKind};
use crate::forest::prior::{sample_tree_from_prior, PriorConfig, SplitAxisProbs, TreePrior};
use crate::forest::{Forest, NodeId, SplitGrid, Tree};
use crate::scalar::{self, Real};

/// Attempted and accepted structure moves by kind. Infeasible proposals count
/// as attempted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCounters {
    pub attempted: [u64; 4],
    pub accepted: [u64; 4],
}

impl MoveCounters {
    pub fn add(&mut self, other: &MoveCounters) {
        for k in 0..4 {
            self.attempted[k] += other.attempted[k];
            self.accepted[k] += other.accepted[k];
        }
    }

    pub fn rate(&self, kind: MoveKind) -> Option<f64> {
        let a = self.attempted[kind.index()];
        (a > 0).then(|| self.accepted[kind.index()] as f64 / a as f64)
    }

    pub fn overall_rate(&self) -> Option<f64> {
        let a: u64 = self.attempted.iter().sum();
        (a > 0).then(|| self.accepted.iter().sum::<u64>() as f64 / a as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainSettings<F> {
    /// Scale λ of the noise prior `InvGamma(ν/2, νλ/2)` on the scaled axis.
    pub lambda: F,
    /// Hold σ² at this value (scaled axis) and skip its Gibbs step.
    pub fixed_sigma2: Option<F>,
    /// Proposals leaving a new leaf with fewer rows are rejected.
    pub min_leaf_obs: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainState<F> {
    pub forest: Forest<F>,
    pub sigma2: F,
    pub s: SplitAxisProbs<F>,
}

impl<F: Real> ChainState<F> {
    /// Independent draw of every component from the prior.
    pub fn from_prior<R: Rng + ?Sized>(
        prior: &PriorConfig<F>,
        grid: &SplitGrid<F>,
        settings: &ChainSettings<F>,
        rng: &mut R,
    ) -> Self {
        let p = grid.n_features();
        let s = SplitAxisProbs::from_prior(prior, p, rng);
        let trees = (0..prior.m)
            .map(|_| sample_tree_from_prior(prior, grid, &s, rng))
            .collect();
        let two = F::lit(2.0);
        let sigma2 = settings
            .fixed_sigma2
            .unwrap_or_else(|| scalar::inv_gamma(rng, prior.nu / two, prior.nu * settings.lambda / two));
        ChainState {
            forest: Forest::new(trees),
            sigma2,
            s,
        }
    }
}

/// Chain bound to a dataset. Covariates are column-major; `y` is on the
/// scaled axis.
pub struct Chain<'a, F> {
    cols: &'a [Vec<F>],
    y: &'a [F],
    grid: &'a SplitGrid<F>,
    prior: &'a PriorConfig<F>,
    settings: ChainSettings<F>,
    sigma_mu2: F,
    state: ChainState<F>,
    leaf_of: Vec<Vec<NodeId>>,
    fit: Vec<F>,
    counters: MoveCounters,
    resid: Vec<F>,
    vals: Vec<F>,
    leaf_n: Vec<u32>,
    leaf_s: Vec<F>,
    new_n: Vec<u32>,
    new_s: Vec<F>,
    rows: Vec<u32>,
    cand: Vec<NodeId>,
    mask: Vec<bool>,
}

impl<'a, F: Real> Chain<'a, F> {
    pub fn new(
        cols: &'a [Vec<F>],
        y: &'a [F],
        grid: &'a SplitGrid<F>,
        prior: &'a PriorConfig<F>,
        settings: ChainSettings<F>,
        state: ChainState<F>,
    ) -> Self {
        let n = y.len();
        assert!(cols.iter().all(|c| c.len() == n), "covariate columns must match the response length");
        assert_eq!(cols.len(), grid.n_features());
        let mut chain = Chain {
            cols,
            y,
            grid,
            prior,
            settings,
            sigma_mu2: prior.leaf_sd() * prior.leaf_sd(),
            state,
            leaf_of: Vec::new(),
            fit: vec![F::zero(); n],
            counters: MoveCounters::default(),
            resid: vec![F::zero(); n],
            vals: Vec::new(),
            leaf_n: Vec::new(),
            leaf_s: Vec::new(),
            new_n: Vec::new(),
            new_s: Vec::new(),
            rows: Vec::new(),
            cand: Vec::new(),
            mask: Vec::new(),
        };
        if let Some(s2) = settings.fixed_sigma2 {
            chain.state.sigma2 = s2;
        }
        chain.leaf_of = chain
            .state
            .forest
            .trees
            .iter()
            .map(|t| (0..n).map(|i| t.route_from(Tree::<F>::ROOT, |j| cols[j][i])).collect())
            .collect();
        chain.fit = chain.recomputed_fit();
        chain
    }

    pub fn from_prior<R: Rng + ?Sized>(
        cols: &'a [Vec<F>],
        y: &'a [F],
        grid: &'a SplitGrid<F>,
        prior: &'a PriorConfig<F>,
        settings: ChainSettings<F>,
        rng: &mut R,
    ) -> Self {
        let state = ChainState::from_prior(prior, grid, &settings, rng);
        Self::new(cols, y, grid, prior, settings, state)
    }

    pub fn state(&self) -> &ChainState<F> {
        &self.state
    }

    pub fn into_state(self) -> ChainState<F> {
        self.state
    }

    pub fn counters(&self) -> &MoveCounters {
        &self.counters
    }

    fn recomputed_fit(&self) -> Vec<F> {
        let mut fit = vec![F::zero(); self.y.len()];
        for (t, leaf_of) in self.state.forest.trees.iter().zip(&self.leaf_of) {
            for (f, &l) in fit.iter_mut().zip(leaf_of) {
                *f += t.value(l);
            }
        }
        fit
    }

    /// Largest gap between the maintained fit and a from-scratch recomputation,
    /// including a check that every cached leaf assignment matches routing.
    pub fn cache_error(&self) -> F {
        for (t, leaf_of) in self.state.forest.trees.iter().zip(&self.leaf_of) {
            for (i, &l) in leaf_of.iter().enumerate() {
                if t.route_from(Tree::<F>::ROOT, |j| self.cols[j][i]) != l {
                    return F::infinity();
                }
            }
        }
        self.recomputed_fit()
            .iter()
            .zip(&self.fit)
            .map(|(a, b)| (*a - *b).abs())
            .fold(F::zero(), F::max)
    }

    /// One full sweep: every tree in index order, then σ², then s.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for j in 0..self.state.forest.len() {
            self.step_tree(j, rng);
        }
        if self.settings.fixed_sigma2.is_none() {
            let sse: F = self.y.iter().zip(&self.fit).map(|(&y, &f)| (y - f) * (y - f)).sum();
            self.state.sigma2 = gibbs_sigma_update(self.y.len(), sse, self.prior.nu, self.settings.lambda, rng);
        }
        if let Some(alpha) = self.prior.dirichlet_alpha(self.grid.n_features()) {
            let mut counts = vec![0usize; self.grid.n_features()];
            for t in &self.state.forest.trees {
                for f in t.split_features() {
                    counts[f] += 1;
                }
            }
            self.state.s = SplitAxisProbs(gibbs_split_axis_update(&counts, alpha, rng));
        }
    }

    /// MH structure step for tree `j` followed by conjugate leaf redraws.
    pub fn step_tree<R: Rng + ?Sized>(&mut self, j: usize, rng: &mut R) {
        let sigma2 = self.state.sigma2;
        let sigma_mu2 = self.sigma_mu2;
        let tree = &self.state.forest.trees[j];
        let leaf_of = &mut self.leaf_of[j];
        let cap = tree.capacity();

        self.vals.clear();
        self.vals.resize(cap, F::zero());
        for id in tree.leaves() {
            self.vals[id as usize] = tree.value(id);
        }
        self.leaf_n.clear();
        self.leaf_n.resize(cap, 0);
        self.leaf_s.clear();
        self.leaf_s.resize(cap, F::zero());
        for (((r, &y), &f), &l) in self.resid.iter_mut().zip(self.y).zip(&self.fit).zip(leaf_of.iter()) {
            let l = l as usize;
            *r = y - f + self.vals[l];
            self.leaf_n[l] += 1;
            self.leaf_s[l] += *r;
        }

        let tree_prior = TreePrior {
            structure: &self.prior.structure,
            grid: self.grid,
            s: &self.state.s,
        };
        let (kind, proposal) = propose(tree, &tree_prior, &self.prior.proposals, rng);
        self.counters.attempted[kind.index()] += 1;

        let mut replacement = None;
        if let Some(prop) = proposal {
            let base = prop.log_ratio_without_likelihood();
            if !(base.is_nan() || base == F::neg_infinity()) {
                let anchor = prop.mv.anchor();
                let old_sub = tree.subtree(anchor);
                self.mask.clear();
                self.mask.resize(cap, false);
                let mut old_term = F::zero();
                for &id in &old_sub {
                    self.mask[id as usize] = true;
                    if tree.is_leaf(id) {
                        old_term += leaf_partition_term(self.leaf_n[id as usize], self.leaf_s[id as usize], sigma2, sigma_mu2);
                    }
                }
                let new_tree = &prop.tree;
                let new_cap = new_tree.capacity();
                self.new_n.clear();
                self.new_n.resize(new_cap, 0);
                self.new_s.clear();
                self.new_s.resize(new_cap, F::zero());
                self.rows.clear();
                self.cand.clear();
                let cols = self.cols;
                for (i, &l) in leaf_of.iter().enumerate() {
                    if self.mask[l as usize] {
                        let nl = new_tree.route_from(anchor, |f| cols[f][i]);
                        self.rows.push(i as u32);
                        self.cand.push(nl);
                        self.new_n[nl as usize] += 1;
                        self.new_s[nl as usize] += self.resid[i];
                    }
                }
                let new_sub = new_tree.subtree(anchor);
                let mut new_term = F::zero();
                let mut too_small = false;
                for &id in &new_sub {
                    if new_tree.is_leaf(id) {
                        let cnt = self.new_n[id as usize];
                        if kind != MoveKind::Prune && cnt < self.settings.min_leaf_obs {
                            too_small = true;
                        }
                        new_term += leaf_partition_term(cnt, self.new_s[id as usize], sigma2, sigma_mu2);
                    }
                }
                if !too_small && mh_accept(base + new_term - old_term, rng) {
                    self.counters.accepted[kind.index()] += 1;
                    for (&i, &nl) in self.rows.iter().zip(&self.cand) {
                        leaf_of[i as usize] = nl;
                    }
                    for &id in &old_sub {
                        self.leaf_n[id as usize] = 0;
                        self.leaf_s[id as usize] = F::zero();
                    }
                    self.leaf_n.resize(new_cap.max(cap), 0);
                    self.leaf_s.resize(new_cap.max(cap), F::zero());
                    for &id in &new_sub {
                        self.leaf_n[id as usize] = self.new_n[id as usize];
                        self.leaf_s[id as usize] = self.new_s[id as usize];
                    }
                    replacement = Some(prop.tree);
                }
            }
        }
        if let Some(t) = replacement {
            self.state.forest.trees[j] = t;
        }

        let tree = &mut self.state.forest.trees[j];
        self.vals.clear();
        self.vals.resize(tree.capacity(), F::zero());
        for id in tree.leaves() {
            let v = gibbs_leaf_draw(self.leaf_n[id as usize], self.leaf_s[id as usize], sigma2, sigma_mu2, rng);
            tree.set_value(id, v);
            self.vals[id as usize] = v;
        }
        for (((f, &y), &r), &l) in self.fit.iter_mut().zip(self.y).zip(&self.resid).zip(&self.leaf_of[j]) {
            *f = y - r + self.vals[l as usize];
        }
    }
}
