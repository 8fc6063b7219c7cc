//! Line-oriented text format for trees and forests.
//!
//! ```text
//! # node_id parent_id side kind feature threshold leaf_value
//! tree 0
//! 0 - root split 3 0.42 -
//! 1 0 left leaf - - -0.013
//! 2 0 right leaf - - 0.021
//! tree 1
//! 0 - root leaf - - 0.0
//! ```
//!
//! Fields are separated by single spaces; `-` marks an absent field. Nodes are
//! listed in pre-order with dense ids, so a child's id always exceeds its parent's.

use std::fmt::Write as _;
use std::str::FromStr;

use super::tree::{Forest, Node, NodeKind, SplitRule, Tree, NO_PARENT};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const HEADER: &str = "# node_id parent_id side kind feature threshold leaf_value";

pub fn write_tree<F: Real>(tree: &Tree<F>, out: &mut String) {
    let t = tree.compact();
    for id in 0..t.capacity() as u32 {
        let node = t.node(id);
        let (parent, side) = match t.parent(id) {
            None => ("-".to_string(), "root"),
            Some(p) => {
                let (l, _) = t.children(p).unwrap();
                (p.to_string(), if l == id { "left" } else { "right" })
            }
        };
        match node.kind {
            NodeKind::Leaf { value } => {
                writeln!(out, "{id} {parent} {side} leaf - - {value}").unwrap();
            }
            NodeKind::Split { rule, .. } => {
                writeln!(out, "{id} {parent} {side} split {} {} -", rule.feature, rule.threshold).unwrap();
            }
        }
    }
}

pub fn forest_to_string<F: Real>(forest: &Forest<F>) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for (i, tree) in forest.trees.iter().enumerate() {
        writeln!(out, "tree {i}").unwrap();
        write_tree(tree, &mut out);
    }
    out
}

fn field<T: FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::Format(format!("line {line}: bad {what} {tok:?}")))
}

struct Pending<F> {
    parent: Option<u32>,
    side_left: bool,
    rule: Option<SplitRule<F>>,
    value: F,
}

fn assemble<F: Real>(pending: Vec<Pending<F>>, line: usize) -> Result<Tree<F>> {
    let n = pending.len();
    let mut children: Vec<(Option<u32>, Option<u32>)> = vec![(None, None); n];
    for (id, p) in pending.iter().enumerate() {
        if let Some(parent) = p.parent {
            let slot = children
                .get_mut(parent as usize)
                .ok_or_else(|| Error::Format(format!("tree ending line {line}: parent {parent} missing")))?;
            let c = if p.side_left { &mut slot.0 } else { &mut slot.1 };
            if c.replace(id as u32).is_some() {
                return Err(Error::Format(format!("tree ending line {line}: duplicate child of {parent}")));
            }
        }
    }
    let mut depth = vec![0u32; n];
    let mut nodes = Vec::with_capacity(n);
    for (id, p) in pending.into_iter().enumerate() {
        if let Some(parent) = p.parent {
            if parent as usize >= id {
                return Err(Error::Format(format!("tree ending line {line}: node {id} precedes its parent")));
            }
            depth[id] = depth[parent as usize] + 1;
        }
        let kind = match p.rule {
            None => NodeKind::Leaf { value: p.value },
            Some(rule) => match children[id] {
                (Some(left), Some(right)) => NodeKind::Split { rule, left, right },
                _ => return Err(Error::Format(format!("tree ending line {line}: split {id} lacks children"))),
            },
        };
        nodes.push(Node {
            parent: p.parent.unwrap_or(NO_PARENT),
            depth: depth[id],
            kind,
        });
    }
    Tree::from_nodes(nodes).map_err(|e| Error::Format(format!("tree ending line {line}: {e}")))
}

pub fn forest_from_str<F: Real + FromStr>(text: &str) -> Result<Forest<F>> {
    let mut trees = Vec::new();
    let mut current: Option<Vec<Pending<F>>> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks[0] == "tree" {
            if let Some(p) = current.take() {
                trees.push(assemble(p, line)?);
            }
            current = Some(Vec::new());
            continue;
        }
        let nodes = current
            .as_mut()
            .ok_or_else(|| Error::Format(format!("line {line}: node before any tree line")))?;
        if toks.len() != 7 {
            return Err(Error::Format(format!("line {line}: expected 7 fields, got {}", toks.len())));
        }
        let id: usize = field(toks[0], line, "node id")?;
        if id != nodes.len() {
            return Err(Error::Format(format!("line {line}: node ids must be dense and ordered")));
        }
        let parent = if toks[1] == "-" { None } else { Some(field(toks[1], line, "parent id")?) };
        let side_left = match (toks[2], parent.is_some()) {
            ("root", false) => false,
            ("left", true) => true,
            ("right", true) => false,
            _ => return Err(Error::Format(format!("line {line}: side {:?} inconsistent with parent", toks[2]))),
        };
        let (rule, value) = match toks[3] {
            "leaf" => (None, field(toks[6], line, "leaf value")?),
            "split" => (
                Some(SplitRule {
                    feature: field(toks[4], line, "feature")?,
                    threshold: field(toks[5], line, "threshold")?,
                }),
                F::zero(),
            ),
            other => return Err(Error::Format(format!("line {line}: unknown node kind {other:?}"))),
        };
        nodes.push(Pending { parent, side_left, rule, value });
    }
    if let Some(p) = current.take() {
        trees.push(assemble(p, last_line)?);
    }
    Ok(Forest::new(trees))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::grid::SplitGrid;
    use crate::forest::prior::{sample_tree_from_prior, PriorConfig, SplitAxisProbs, StructurePrior};
    use crate::rng::stream;

    #[test]
    fn stump_layout() {
        let mut t = Tree::leaf(0.0f64);
        t.split_leaf(0, SplitRule { feature: 1, threshold: 0.5 }, -1.0, 1.0);
        let s = forest_to_string(&Forest::new(vec![t]));
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], HEADER);
        assert_eq!(lines[1], "tree 0");
        assert_eq!(lines[2], "0 - root split 1 0.5 -");
        assert_eq!(lines[3], "1 0 left leaf - - -1");
        assert_eq!(lines[4], "2 0 right leaf - - 1");
    }

    #[test]
    fn round_trip_prior_forest() {
        let grid = SplitGrid::from_thresholds(vec![vec![0.1, 0.3, 0.77], vec![0.25, 0.5], vec![0.9]]);
        let prior = PriorConfig {
            structure: StructurePrior::Original { alpha: 0.95, beta: 1.0 },
            ..PriorConfig::default()
        };
        let s = SplitAxisProbs::uniform(3);
        let mut rng = stream(3);
        let forest = Forest::new((0..20).map(|_| sample_tree_from_prior(&prior, &grid, &s, &mut rng)).collect());
        let text = forest_to_string(&forest);
        let back: Forest<f64> = forest_from_str(&text).unwrap();
        assert_eq!(back, forest.compact());
        for x in [[0.0, 0.0, 0.0], [0.3, 0.6, 1.0], [0.2, 0.25, 0.95]] {
            assert_eq!(back.predict(&x), forest.predict(&x));
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(forest_from_str::<f64>("0 - root leaf - - 1").is_err());
        assert!(forest_from_str::<f64>("tree 0\n0 - root split 0 0.5 -").is_err());
        assert!(forest_from_str::<f64>("tree 0\n0 - root leaf - - x").is_err());
    }
}
