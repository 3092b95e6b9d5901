//! Dewey codes, ordered labeled trees and minimum connecting trees.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// Ordinal path from the root to a node. The root is the empty path and
/// child `i` of `d` is `d` extended with `i`.
///
/// Lexicographic order of the steps is document (preorder) order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dewey(Vec<u32>);

impl Dewey {
    pub fn root() -> Self {
        Dewey(Vec::new())
    }

    pub fn new(steps: Vec<u32>) -> Self {
        Dewey(steps)
    }

    pub fn steps(&self) -> &[u32] {
        &self.0
    }

    /// Number of steps, which is the depth; `is_root` covers emptiness.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, step: u32) -> Dewey {
        let mut steps = Vec::with_capacity(self.0.len() + 1);
        steps.extend_from_slice(&self.0);
        steps.push(step);
        Dewey(steps)
    }

    pub fn parent(&self) -> Option<Dewey> {
        if self.0.is_empty() {
            None
        } else {
            Some(Dewey(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn last_step(&self) -> Option<u32> {
        self.0.last().copied()
    }

    /// Compares two codes in postorder: descendants before their ancestors,
    /// unrelated nodes in document order.
    pub fn cmp_postorder(&self, other: &Dewey) -> Ordering {
        let common = self
            .0
            .iter()
            .zip(&other.0)
            .take_while(|(a, b)| a == b)
            .count();
        match (self.0.get(common), other.0.get(common)) {
            (Some(a), Some(b)) => a.cmp(b),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        }
    }
}

impl From<Vec<u32>> for Dewey {
    fn from(steps: Vec<u32>) -> Self {
        Dewey(steps)
    }
}

impl From<&[u32]> for Dewey {
    fn from(steps: &[u32]) -> Self {
        Dewey(steps.to_vec())
    }
}

impl fmt::Display for Dewey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (i, step) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{step}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid dewey code {0:?}")]
pub struct DeweyParseError(pub String);

impl FromStr for Dewey {
    type Err = DeweyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "ε" || s.is_empty() {
            return Ok(Dewey::root());
        }
        s.split('.')
            .map(|part| part.parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map(Dewey)
            .map_err(|_| DeweyParseError(s.to_string()))
    }
}

/// Longest common prefix of the two codes.
pub fn lca(a: &Dewey, b: &Dewey) -> Dewey {
    let common = a.0.iter().zip(&b.0).take_while(|(x, y)| x == y).count();
    Dewey(a.0[..common].to_vec())
}

/// True iff `a` is a (possibly empty or full) prefix of `b`.
pub fn is_ancestor_or_self(a: &Dewey, b: &Dewey) -> bool {
    b.0.starts_with(&a.0)
}

/// Root and edge count of the minimum subtree connecting `nodes`.
///
/// Returns `None` for an empty set.
pub fn mct_size<'a, I>(nodes: I) -> Option<(Dewey, usize)>
where
    I: IntoIterator<Item = &'a Dewey>,
{
    let nodes: Vec<&Dewey> = nodes.into_iter().collect();
    let first = *nodes.first()?;
    let root = nodes[1..].iter().fold(first.clone(), |acc, n| lca(&acc, n));
    let depth = root.len();
    // Every node strictly below the root on some root-to-member path
    // contributes exactly its incoming edge.
    let mut below: BTreeSet<&[u32]> = BTreeSet::new();
    for n in &nodes {
        for len in depth + 1..=n.len() {
            below.insert(&n.0[..len]);
        }
    }
    Some((root, below.len()))
}

/// Index of a node in preorder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub dewey: Dewey,
    pub label: String,
    pub value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("node {0} has an empty label")]
    EmptyLabel(Dewey),
    #[error("node {0} is out of preorder or its parent is missing")]
    BadOrder(Dewey),
    #[error("tree has no root")]
    Empty,
}

/// Ordered labeled tree stored in preorder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataTree {
    nodes: Vec<Node>,
    parent: Vec<Option<NodeId>>,
    subtree_end: Vec<u32>,
    depth: usize,
}

impl DataTree {
    /// Builds a tree from nodes given in preorder. Every non-root node's
    /// parent must precede it.
    pub fn from_preorder(nodes: Vec<Node>) -> Result<Self, TreeError> {
        if nodes.is_empty() {
            return Err(TreeError::Empty);
        }
        if !nodes[0].dewey.is_root() {
            return Err(TreeError::BadOrder(nodes[0].dewey.clone()));
        }
        let mut parent = Vec::with_capacity(nodes.len());
        let mut subtree_end = vec![0u32; nodes.len()];
        // Open ancestors of the current node.
        let mut open: Vec<usize> = Vec::new();
        let mut depth = 0;
        for (i, node) in nodes.iter().enumerate() {
            if node.label.is_empty() {
                return Err(TreeError::EmptyLabel(node.dewey.clone()));
            }
            if i > 0 && nodes[i - 1].dewey >= node.dewey {
                return Err(TreeError::BadOrder(node.dewey.clone()));
            }
            while let Some(&top) = open.last() {
                if is_ancestor_or_self(&nodes[top].dewey, &node.dewey) {
                    break;
                }
                subtree_end[top] = i as u32;
                open.pop();
            }
            match open.last() {
                None if i == 0 => parent.push(None),
                Some(&p) if nodes[p].dewey.len() + 1 == node.dewey.len() => {
                    parent.push(Some(NodeId(p as u32)))
                }
                _ => return Err(TreeError::BadOrder(node.dewey.clone())),
            }
            depth = depth.max(node.dewey.len() + 1);
            open.push(i);
        }
        for top in open {
            subtree_end[top] = nodes.len() as u32;
        }
        Ok(DataTree {
            nodes,
            parent,
            subtree_end,
            depth,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Maximum Dewey length plus one.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parent[id.index()]
    }

    pub fn dewey(&self, id: NodeId) -> &Dewey {
        &self.nodes[id.index()].dewey
    }

    pub fn node_depth(&self, id: NodeId) -> usize {
        self.nodes[id.index()].dewey.len()
    }

    /// O(1) ancestry test using preorder intervals.
    pub fn is_ancestor_or_self(&self, a: NodeId, b: NodeId) -> bool {
        a.0 <= b.0 && b.0 < self.subtree_end[a.index()]
    }

    pub fn find(&self, dewey: &Dewey) -> Option<NodeId> {
        self.nodes
            .binary_search_by(|n| n.dewey.cmp(dewey))
            .ok()
            .map(|i| NodeId(i as u32))
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// Labels from the root down to `id`, joined by `/`.
    pub fn label_path(&self, id: NodeId) -> String {
        let mut labels = Vec::new();
        let mut cur = Some(id);
        while let Some(n) = cur {
            labels.push(self.nodes[n.index()].label.as_str());
            cur = self.parent(n);
        }
        labels.reverse();
        labels.join("/")
    }
}

/// Incremental preorder construction of a [`DataTree`].
#[derive(Debug, Default)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
    // (dewey of the open node, number of children so far)
    stack: Vec<(Dewey, u32)>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens a node as the next child of the current node (or as the root).
    pub fn open(&mut self, label: impl Into<String>, value: Option<String>) -> &mut Self {
        let dewey = match self.stack.last_mut() {
            Some((d, next)) => {
                let child = d.child(*next);
                *next += 1;
                child
            }
            None => {
                assert!(self.nodes.is_empty(), "a tree has a single root");
                Dewey::root()
            }
        };
        self.nodes.push(Node {
            dewey: dewey.clone(),
            label: label.into(),
            value,
        });
        self.stack.push((dewey, 0));
        self
    }

    pub fn close(&mut self) -> &mut Self {
        self.stack.pop().expect("close without open");
        self
    }

    pub fn leaf(&mut self, label: impl Into<String>, value: Option<String>) -> &mut Self {
        self.open(label, value).close()
    }

    pub fn build(self) -> Result<DataTree, TreeError> {
        DataTree::from_preorder(self.nodes)
    }
}
