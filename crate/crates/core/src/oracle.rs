//! Reference semantics by exhaustive enumeration, and the flat SLCA/ELCA
//! baselines.
//!
//! Nothing here shares code with the stack engine: instances come from
//! tokenizing the tree directly and sizes from Dewey path unions.

use std::collections::{BTreeMap, BTreeSet};

use crate::ingest::{node_tokens, InvertedIndex};
use crate::query::QueryAst;
use crate::tree_model::{is_ancestor_or_self, lca, mct_size, DataTree, Dewey, NodeId};

/// Upper bound on the number of candidate assignments the oracle will try.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("{candidates} candidate assignments exceed the enumeration limit of {limit}")]
    TooManyCandidates { candidates: u128, limit: u128 },
}

/// Occurrence id to instance node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Embedding {
    pub assignment: Vec<NodeId>,
}

impl Embedding {
    pub fn deweys<'t>(&self, tree: &'t DataTree) -> Vec<&'t Dewey> {
        self.assignment.iter().map(|&n| tree.dewey(n)).collect()
    }

    /// MCT root and edge count.
    pub fn mct(&self, tree: &DataTree) -> (Dewey, usize) {
        mct_size(self.deweys(tree)).expect("queries are non-empty")
    }
}

struct Search<'a> {
    tree: &'a DataTree,
    candidates: Vec<Vec<(NodeId, u32)>>,
    keyword_of: Vec<usize>,
    // (term occurrences, external occurrence), checked once the largest
    // occurrence id involved is assigned
    checks: Vec<Vec<(Vec<usize>, usize)>>,
}

impl<'a> Search<'a> {
    fn new(ast: &QueryAst, tree: &'a DataTree) -> Result<Self, OracleError> {
        let search = Search::build(ast, tree);
        let product = search
            .candidates
            .iter()
            .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
            .unwrap_or(u128::MAX);
        if product > ENUMERATION_LIMIT {
            return Err(OracleError::TooManyCandidates {
                candidates: product,
                limit: ENUMERATION_LIMIT,
            });
        }
        Ok(search)
    }

    fn build(ast: &QueryAst, tree: &'a DataTree) -> Self {
        let n = ast.len();
        let mut keyword_of = Vec::with_capacity(n);
        let mut names: Vec<&str> = Vec::new();
        for o in ast.occurrences() {
            let k = names
                .iter()
                .position(|&s| s == o.keyword)
                .unwrap_or_else(|| {
                    names.push(&o.keyword);
                    names.len() - 1
                });
            keyword_of.push(k);
        }
        let mut per_keyword: Vec<Vec<(NodeId, u32)>> = vec![Vec::new(); names.len()];
        for id in tree.ids() {
            let tokens = node_tokens(tree.node(id));
            for (k, name) in names.iter().enumerate() {
                if let Some(&c) = tokens.get(*name) {
                    per_keyword[k].push((id, c));
                }
            }
        }
        let candidates: Vec<Vec<(NodeId, u32)>> =
            keyword_of.iter().map(|&k| per_keyword[k].clone()).collect();

        let mut checks = vec![Vec::new(); n];
        for t in ast.proper_terms() {
            let mask = ast.occurrence_mask(t.id);
            let inside: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let last_inside = *inside.last().expect("terms are non-empty");
            for k in (0..n).filter(|i| mask >> i & 1 == 0) {
                checks[k.max(last_inside)].push((inside.clone(), k));
            }
        }
        Search {
            tree,
            candidates,
            keyword_of,
            checks,
        }
    }

    fn run(&self, f: &mut impl FnMut(&[NodeId])) {
        let mut assignment = Vec::with_capacity(self.candidates.len());
        self.step(&mut assignment, f);
    }

    fn step(&self, assignment: &mut Vec<NodeId>, f: &mut impl FnMut(&[NodeId])) {
        let i = assignment.len();
        if i == self.candidates.len() {
            f(assignment);
            return;
        }
        for &(node, count) in &self.candidates[i] {
            let same = (0..i)
                .filter(|&j| assignment[j] == node && self.keyword_of[j] == self.keyword_of[i])
                .count() as u32;
            if same + 1 > count {
                continue;
            }
            assignment.push(node);
            if self.checks[i]
                .iter()
                .all(|(inside, k)| self.black_box(assignment, inside, *k))
            {
                self.step(assignment, f);
            }
            assignment.pop();
        }
    }

    // External occurrence k may not sit inside the subtree rooted at the
    // term's LCA, unless the whole term maps to a single node.
    fn black_box(&self, assignment: &[NodeId], inside: &[usize], k: usize) -> bool {
        let first = assignment[inside[0]];
        if inside.iter().all(|&i| assignment[i] == first) {
            return true;
        }
        let l = inside
            .iter()
            .skip(1)
            .fold(self.tree.dewey(first).clone(), |acc, &i| {
                lca(&acc, self.tree.dewey(assignment[i]))
            });
        !is_ancestor_or_self(&l, self.tree.dewey(assignment[k]))
    }
}

/// Every assignment satisfying the multiplicity and black-box conditions.
pub fn enumerate_embeddings(
    ast: &QueryAst,
    tree: &DataTree,
) -> Result<Vec<Embedding>, OracleError> {
    let search = Search::new(ast, tree)?;
    let mut out = Vec::new();
    search.run(&mut |a| {
        out.push(Embedding {
            assignment: a.to_vec(),
        })
    });
    Ok(out)
}

/// True iff `assignment` (indexed by occurrence id) is an embedding.
pub fn is_embedding(ast: &QueryAst, tree: &DataTree, assignment: &[NodeId]) -> bool {
    let search = Search::build(ast, tree);
    if assignment.len() != ast.len() {
        return false;
    }
    let mut prefix = Vec::new();
    for (i, &node) in assignment.iter().enumerate() {
        let Some(&(_, count)) = search.candidates[i].iter().find(|c| c.0 == node) else {
            return false;
        };
        let same = (0..i)
            .filter(|&j| prefix[j] == node && search.keyword_of[j] == search.keyword_of[i])
            .count() as u32;
        if same + 1 > count {
            return false;
        }
        prefix.push(node);
        if !search.checks[i]
            .iter()
            .all(|(inside, k)| search.black_box(&prefix, inside, *k))
        {
            return false;
        }
    }
    true
}

/// Result nodes with their minimal MCT size over all embeddings.
pub fn oracle_answer(
    ast: &QueryAst,
    tree: &DataTree,
) -> Result<BTreeMap<Dewey, usize>, OracleError> {
    let search = Search::new(ast, tree)?;
    let mut best: BTreeMap<Dewey, usize> = BTreeMap::new();
    search.run(&mut |a| {
        let (root, size) = mct_size(a.iter().map(|&n| tree.dewey(n))).expect("non-empty");
        best.entry(root)
            .and_modify(|s| *s = (*s).min(size))
            .or_insert(size);
    });
    Ok(best)
}

// Subtree keyword presence for the flat baselines.
struct Coverage<'a> {
    tree: &'a DataTree,
    // per keyword, per node: the node itself is an instance
    at: Vec<Vec<bool>>,
    // per keyword, per node: some instance lies in the subtree
    below: Vec<Vec<bool>>,
}

impl<'a> Coverage<'a> {
    fn new(keywords: &[&str], idx: &'a InvertedIndex) -> Self {
        let tree = idx.tree();
        let n = tree.len();
        let mut at = vec![vec![false; n]; keywords.len()];
        let mut below = vec![vec![false; n]; keywords.len()];
        for (k, kw) in keywords.iter().enumerate() {
            for p in idx.postings(kw) {
                at[k][p.node.index()] = true;
                let mut cur = Some(p.node);
                while let Some(v) = cur {
                    if below[k][v.index()] {
                        break;
                    }
                    below[k][v.index()] = true;
                    cur = tree.parent(v);
                }
            }
        }
        Coverage { tree, at, below }
    }

    fn is_ca(&self, v: NodeId) -> bool {
        self.below.iter().all(|b| b[v.index()])
    }

    fn children(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let depth = self.tree.node_depth(v);
        self.tree
            .ids()
            .skip(v.index() + 1)
            .take_while(move |&u| self.tree.is_ancestor_or_self(v, u))
            .filter(move |&u| self.tree.node_depth(u) == depth + 1)
    }

    fn proper_descendants(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.tree
            .ids()
            .skip(v.index() + 1)
            .take_while(move |&u| self.tree.is_ancestor_or_self(v, u))
    }
}

fn distinct<'k>(keywords: &[&'k str]) -> Vec<&'k str> {
    let set: BTreeSet<&str> = keywords.iter().copied().collect();
    set.into_iter().collect()
}

/// Nodes that are the LCA of at least one tuple of instances, one instance
/// per keyword.
pub fn all_lcas(keywords: &[&str], idx: &InvertedIndex) -> BTreeSet<Dewey> {
    let keywords = distinct(keywords);
    if keywords.is_empty() {
        return BTreeSet::new();
    }
    let cov = Coverage::new(&keywords, idx);
    let tree = idx.tree();
    tree.ids()
        .filter(|&v| cov.is_ca(v))
        .filter(|&v| {
            if cov.at.iter().any(|a| a[v.index()]) {
                return true;
            }
            if keywords.len() == 1 {
                return false;
            }
            // every tuple stays inside one child iff a single child holds
            // all instances below v of every keyword
            !cov.children(v).any(|c| {
                (0..keywords.len()).all(|k| {
                    cov.proper_descendants(v)
                        .filter(|&u| cov.at[k][u.index()])
                        .all(|u| tree.is_ancestor_or_self(c, u))
                })
            })
        })
        .map(|v| tree.dewey(v).clone())
        .collect()
}

/// LCAs with no LCA among their proper descendants.
pub fn slca(keywords: &[&str], idx: &InvertedIndex) -> BTreeSet<Dewey> {
    let keywords = distinct(keywords);
    if keywords.is_empty() {
        return BTreeSet::new();
    }
    let cov = Coverage::new(&keywords, idx);
    let tree = idx.tree();
    tree.ids()
        .filter(|&v| cov.is_ca(v) && !cov.proper_descendants(v).any(|u| cov.is_ca(u)))
        .map(|v| tree.dewey(v).clone())
        .collect()
}

/// Nodes holding an instance of every keyword outside the subtrees of their
/// proper descendants that contain all keywords.
pub fn elca(keywords: &[&str], idx: &InvertedIndex) -> BTreeSet<Dewey> {
    let keywords = distinct(keywords);
    if keywords.is_empty() {
        return BTreeSet::new();
    }
    let cov = Coverage::new(&keywords, idx);
    let tree = idx.tree();
    tree.ids()
        .filter(|&v| cov.is_ca(v))
        .filter(|&v| {
            let blockers: Vec<NodeId> = cov
                .proper_descendants(v)
                .filter(|&u| cov.is_ca(u))
                .collect();
            (0..keywords.len()).all(|k| {
                std::iter::once(v)
                    .chain(cov.proper_descendants(v))
                    .any(|u| {
                        cov.at[k][u.index()]
                            && !blockers.iter().any(|&b| tree.is_ancestor_or_self(b, u))
                    })
            })
        })
        .map(|v| tree.dewey(v).clone())
        .collect()
}
