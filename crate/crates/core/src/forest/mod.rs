//! Sum-of-trees model, its prior, and split grids.

pub mod grid;
pub mod prior;
pub mod serialize;
pub mod tree;

pub use grid::SplitGrid;
pub use prior::{
    leaf_prior_sd, sample_tree_from_prior, split_prob, PriorConfig, ProposalProbs, SplitAxisPrior, SplitAxisProbs,
    StructurePrior, TreePrior,
};
pub use tree::{Forest, Node, NodeId, NodeKind, SplitRule, Tree};
