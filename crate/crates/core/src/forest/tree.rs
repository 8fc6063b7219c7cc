use crate::scalar::Real;

pub type NodeId = u32;

/// Sentinel parent id of the root.
pub const NO_PARENT: NodeId = NodeId::MAX;

/// Axis-aligned split: a point goes left iff `x[feature] <= threshold`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRule<F> {
    pub feature: usize,
    pub threshold: F,
}

impl<F: Real> SplitRule<F> {
    #[inline]
    pub fn goes_left(&self, value: F) -> bool {
        value <= self.threshold
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind<F> {
    Leaf {
        value: F,
    },
    Split {
        rule: SplitRule<F>,
        left: NodeId,
        right: NodeId,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node<F> {
    pub parent: NodeId,
    pub depth: u32,
    pub kind: NodeKind<F>,
}

/// Binary regression tree stored as an arena. The root is always node 0.
///
/// Collapsed subtrees leave free slots that are reused by later splits; use
/// [`Tree::compact`] for a dense copy.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree<F> {
    nodes: Vec<Node<F>>,
    free: Vec<NodeId>,
}

impl<F: Real> Tree<F> {
    pub const ROOT: NodeId = 0;

    /// Root-only tree with the given leaf value.
    pub fn leaf(value: F) -> Self {
        Tree {
            nodes: vec![Node {
                parent: NO_PARENT,
                depth: 0,
                kind: NodeKind::Leaf { value },
            }],
            free: Vec::new(),
        }
    }

    #[inline]
    pub fn node(&self, id: NodeId) -> &Node<F> {
        &self.nodes[id as usize]
    }

    /// Size of the arena, including free slots. Node ids are below this bound.
    #[inline]
    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_leaf(&self, id: NodeId) -> bool {
        matches!(self.nodes[id as usize].kind, NodeKind::Leaf { .. })
    }

    #[inline]
    pub fn depth_of(&self, id: NodeId) -> u32 {
        self.nodes[id as usize].depth
    }

    #[inline]
    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        let p = self.nodes[id as usize].parent;
        (p != NO_PARENT).then_some(p)
    }

    pub fn children(&self, id: NodeId) -> Option<(NodeId, NodeId)> {
        match self.nodes[id as usize].kind {
            NodeKind::Split { left, right, .. } => Some((left, right)),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn rule(&self, id: NodeId) -> Option<SplitRule<F>> {
        match self.nodes[id as usize].kind {
            NodeKind::Split { rule, .. } => Some(rule),
            NodeKind::Leaf { .. } => None,
        }
    }

    /// Leaf value; panics on internal nodes.
    #[inline]
    pub fn value(&self, id: NodeId) -> F {
        match self.nodes[id as usize].kind {
            NodeKind::Leaf { value } => value,
            NodeKind::Split { .. } => panic!("node {id} is not a leaf"),
        }
    }

    pub fn set_value(&mut self, id: NodeId, v: F) {
        match &mut self.nodes[id as usize].kind {
            NodeKind::Leaf { value } => *value = v,
            NodeKind::Split { .. } => panic!("node {id} is not a leaf"),
        }
    }

    pub fn set_rule(&mut self, id: NodeId, new_rule: SplitRule<F>) {
        match &mut self.nodes[id as usize].kind {
            NodeKind::Split { rule, .. } => *rule = new_rule,
            NodeKind::Leaf { .. } => panic!("node {id} is a leaf"),
        }
    }

    fn alloc(&mut self, node: Node<F>) -> NodeId {
        if let Some(id) = self.free.pop() {
            self.nodes[id as usize] = node;
            id
        } else {
            self.nodes.push(node);
            (self.nodes.len() - 1) as NodeId
        }
    }

    /// Turns leaf `id` into a split with two fresh leaves. Returns `(left, right)`.
    pub fn split_leaf(&mut self, id: NodeId, rule: SplitRule<F>, left_value: F, right_value: F) -> (NodeId, NodeId) {
        assert!(self.is_leaf(id), "split_leaf on internal node {id}");
        let depth = self.depth_of(id) + 1;
        let left = self.alloc(Node {
            parent: id,
            depth,
            kind: NodeKind::Leaf { value: left_value },
        });
        let right = self.alloc(Node {
            parent: id,
            depth,
            kind: NodeKind::Leaf { value: right_value },
        });
        self.nodes[id as usize].kind = NodeKind::Split { rule, left, right };
        (left, right)
    }

    /// Collapses an internal node whose children are both leaves into a leaf.
    pub fn collapse(&mut self, id: NodeId, value: F) {
        let (l, r) = self.children(id).expect("collapse on a leaf");
        assert!(self.is_leaf(l) && self.is_leaf(r), "collapse needs two leaf children");
        self.nodes[id as usize].kind = NodeKind::Leaf { value };
        self.free.push(r);
        self.free.push(l);
    }

    /// Live node ids in depth-first (pre-order, left first) order.
    pub fn preorder(&self) -> Vec<NodeId> {
        self.subtree(Self::ROOT)
    }

    /// Node ids of the subtree rooted at `root`, in pre-order.
    pub fn subtree(&self, root: NodeId) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Some((l, r)) = self.children(id) {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder().into_iter().filter(|&id| self.is_leaf(id)).collect()
    }

    pub fn internal_nodes(&self) -> Vec<NodeId> {
        self.preorder().into_iter().filter(|&id| !self.is_leaf(id)).collect()
    }

    /// Internal nodes whose two children are leaves.
    pub fn prunable_nodes(&self) -> Vec<NodeId> {
        self.internal_nodes()
            .into_iter()
            .filter(|&id| {
                let (l, r) = self.children(id).unwrap();
                self.is_leaf(l) && self.is_leaf(r)
            })
            .collect()
    }

    /// `(parent, child)` pairs where both are internal nodes.
    pub fn swappable_pairs(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for id in self.internal_nodes() {
            let (l, r) = self.children(id).unwrap();
            for c in [l, r] {
                if !self.is_leaf(c) {
                    out.push((id, c));
                }
            }
        }
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    pub fn max_depth(&self) -> u32 {
        self.preorder().into_iter().map(|id| self.depth_of(id)).max().unwrap_or(0)
    }

    /// Leaf reached from `start` by a point whose `j`-th coordinate is `value(j)`.
    #[inline]
    pub fn route_from(&self, start: NodeId, value: impl Fn(usize) -> F) -> NodeId {
        let mut id = start;
        loop {
            match &self.nodes[id as usize].kind {
                NodeKind::Leaf { .. } => return id,
                NodeKind::Split { rule, left, right } => {
                    id = if rule.goes_left(value(rule.feature)) { *left } else { *right };
                }
            }
        }
    }

    #[inline]
    pub fn route(&self, x: &[F]) -> NodeId {
        self.route_from(Self::ROOT, |j| x[j])
    }

    #[inline]
    pub fn predict(&self, x: &[F]) -> F {
        self.value(self.route(x))
    }

    /// True if `node` lies in the subtree rooted at `ancestor` (inclusive).
    pub fn in_subtree(&self, node: NodeId, ancestor: NodeId) -> bool {
        let mut id = node;
        loop {
            if id == ancestor {
                return true;
            }
            match self.parent(id) {
                Some(p) => id = p,
                None => return false,
            }
        }
    }

    /// Per-feature half-open cell `(lo, hi]` of node `id` implied by its ancestors.
    pub fn cell(&self, id: NodeId, p: usize) -> Vec<(F, F)> {
        let mut bounds = vec![(F::neg_infinity(), F::infinity()); p];
        let mut child = id;
        while let Some(parent) = self.parent(child) {
            let (l, _) = self.children(parent).unwrap();
            let rule = self.rule(parent).unwrap();
            let b = &mut bounds[rule.feature];
            if child == l {
                b.1 = b.1.min(rule.threshold);
            } else {
                b.0 = b.0.max(rule.threshold);
            }
            child = parent;
        }
        bounds
    }

    /// Dense copy with nodes renumbered in pre-order.
    pub fn compact(&self) -> Tree<F> {
        let order = self.preorder();
        let mut map = vec![NO_PARENT; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            map[old as usize] = new as NodeId;
        }
        let nodes = order
            .iter()
            .map(|&old| {
                let n = &self.nodes[old as usize];
                Node {
                    parent: if n.parent == NO_PARENT { NO_PARENT } else { map[n.parent as usize] },
                    depth: n.depth,
                    kind: match n.kind {
                        NodeKind::Leaf { value } => NodeKind::Leaf { value },
                        NodeKind::Split { rule, left, right } => NodeKind::Split {
                            rule,
                            left: map[left as usize],
                            right: map[right as usize],
                        },
                    },
                }
            })
            .collect();
        Tree { nodes, free: Vec::new() }
    }

    /// Builds a tree from dense nodes; validates parent/child links and depths.
    pub fn from_nodes(nodes: Vec<Node<F>>) -> Result<Tree<F>, String> {
        if nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        if nodes[0].parent != NO_PARENT || nodes[0].depth != 0 {
            return Err("node 0 must be the root".into());
        }
        let mut seen = vec![false; nodes.len()];
        seen[0] = true;
        for (id, n) in nodes.iter().enumerate() {
            if let NodeKind::Split { left, right, .. } = n.kind {
                for c in [left, right] {
                    let child = nodes.get(c as usize).ok_or(format!("node {id}: child {c} missing"))?;
                    if child.parent as usize != id || child.depth != n.depth + 1 {
                        return Err(format!("node {c}: inconsistent parent/depth"));
                    }
                    if std::mem::replace(&mut seen[c as usize], true) {
                        return Err(format!("node {c} has two parents"));
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err("unreachable node".into());
        }
        Ok(Tree { nodes, free: Vec::new() })
    }

    /// Feature index of every split rule in the tree.
    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.preorder().into_iter().filter_map(|id| self.rule(id).map(|r| r.feature))
    }
}

/// Sum-of-trees model.
#[derive(Clone, Debug, PartialEq)]
pub struct Forest<F> {
    pub trees: Vec<Tree<F>>,
}

impl<F: Real> Forest<F> {
    pub fn new(trees: Vec<Tree<F>>) -> Self {
        Forest { trees }
    }

    /// `m` root-only trees with leaf value zero.
    pub fn zeros(m: usize) -> Self {
        Forest {
            trees: vec![Tree::leaf(F::zero()); m],
        }
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn predict(&self, x: &[F]) -> F {
        self.trees.iter().map(|t| t.predict(x)).sum()
    }

    pub fn compact(&self) -> Forest<F> {
        Forest {
            trees: self.trees.iter().map(Tree::compact).collect(),
        }
    }

    pub fn internal_node_count(&self) -> usize {
        self.trees.iter().map(|t| t.internal_nodes().len()).sum()
    }
}
