//! Stack-lattice evaluation of cohesive queries.
//!
//! Keyword instances stream in preorder. Every lattice stack keeps one row per
//! node of the current root path. A row holds, per column, the candidate
//! partial LCAs of that column's occurrence block rooted in the row's subtree.
//! Popping a row combines pairs of columns into coarser blocks (routed to
//! coarser stacks at the same node) and lifts each column's best candidate
//! one edge up into the parent row.
//!
//! A slot keeps a Pareto set rather than a single minimum: a smaller entry is
//! useless when its provenance collides with every partner, so larger entries
//! with other provenances must survive.

use std::collections::{BTreeMap, HashMap};

use crate::ingest::InvertedIndex;
use crate::lattice::{build_lattice, Lattice};
use crate::query::QueryAst;
use crate::tree_model::{DataTree, Dewey, NodeId};

/// One ranked answer: an LCA node and its minimal MCT edge count.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ResultEntry {
    pub node: Dewey,
    pub id: NodeId,
    pub size: usize,
}

/// Instrumentation counters of one evaluation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalStats {
    /// Distinct instance nodes streamed.
    pub instances: usize,
    /// Sum of posting-list lengths over the query's distinct keywords.
    pub postings: usize,
    /// Entries pushed into stacks, injections included.
    pub push_count: u64,
    /// Rows popped.
    pub pop_count: u64,
    pub stack_count: usize,
    /// Query keywords absent from the index.
    pub missing_keywords: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub results: Vec<ResultEntry>,
    pub stats: EvalStats,
}

// Candidate partial LCA for one column at one row.
#[derive(Clone, Debug)]
struct Entry {
    size: u32,
    // children of the row's node through which images arrive, sorted
    prov: Vec<u32>,
    // occurrences imaged at the row's node itself
    selfs: u64,
    // a whole proper term whose LCA is this node; no external block may join
    // it here
    closed: bool,
}

impl Entry {
    fn dominates(&self, other: &Entry) -> bool {
        self.size <= other.size
            && self.selfs & !other.selfs == 0
            && (!self.closed || other.closed)
            && is_subset(&self.prov, &other.prov)
    }

    fn is_lifted(&self) -> bool {
        self.selfs == 0 && self.prov.len() == 1
    }
}

fn is_subset(a: &[u32], b: &[u32]) -> bool {
    let mut j = 0;
    for x in a {
        while j < b.len() && b[j] < *x {
            j += 1;
        }
        if j == b.len() || b[j] != *x {
            return false;
        }
    }
    true
}

fn disjoint_union(a: &[u32], b: &[u32]) -> Option<Vec<u32>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => return None,
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some(out)
}

struct Row {
    node: NodeId,
    slots: Vec<Vec<Entry>>,
}

struct Pending {
    node: NodeId,
    stack: usize,
    column: usize,
    entry: Entry,
}

struct Run<'a> {
    tree: &'a DataTree,
    lattice: &'a Lattice,
    // most lifted entries a slot keeps; the largest term cardinality
    lift_cap: usize,
    keyword_masks: Vec<u64>,
    counts: HashMap<(NodeId, usize), u32>,
    stacks: Vec<Vec<Row>>,
    by_level: Vec<Vec<usize>>,
    pending: Vec<Vec<Pending>>,
    results: Vec<ResultEntry>,
    stats: EvalStats,
}

impl<'a> Run<'a> {
    fn slot_insert(slot: &mut Vec<Entry>, entry: Entry, lift_cap: usize) {
        if slot.iter().any(|e| e.dominates(&entry)) {
            return;
        }
        slot.retain(|e| !entry.dominates(e));
        let lifted = entry.is_lifted();
        slot.push(entry);
        if lifted && slot.iter().filter(|e| e.is_lifted()).count() > lift_cap {
            let worst = slot
                .iter()
                .enumerate()
                .filter(|(_, e)| e.is_lifted())
                .max_by_key(|(i, e)| (e.size, *i))
                .map(|(i, _)| i)
                .expect("non-empty");
            slot.remove(worst);
        }
    }

    fn push(&mut self, stack: usize, node: NodeId, column: usize, entry: Entry) {
        self.stats.push_count += 1;
        while let Some(top) = self.stacks[stack].last() {
            if self.tree.is_ancestor_or_self(top.node, node) {
                break;
            }
            self.pop(stack);
        }
        let columns = self.lattice.stacks()[stack].columns();
        let top = self.stacks[stack].last().map(|r| r.node);
        if top != Some(node) {
            let mut path = vec![node];
            let mut cur = self.tree.parent(node);
            while let Some(p) = cur {
                if Some(p) == top {
                    break;
                }
                path.push(p);
                cur = self.tree.parent(p);
            }
            for n in path.into_iter().rev() {
                self.stacks[stack].push(Row {
                    node: n,
                    slots: vec![Vec::new(); columns],
                });
            }
        }
        let row = self.stacks[stack].last_mut().expect("row exists");
        Self::slot_insert(&mut row.slots[column], entry, self.lift_cap);
    }

    fn multiplicity_ok(&self, node: NodeId, selfs: u64) -> bool {
        self.keyword_masks.iter().enumerate().all(|(k, &mask)| {
            let m = (selfs & mask).count_ones();
            m < 2 || self.counts.get(&(node, k)).copied().unwrap_or(0) >= m
        })
    }

    fn pop(&mut self, stack: usize) {
        let row = self.stacks[stack].pop().expect("pop on empty stack");
        self.stats.pop_count += 1;
        let lattice = self.lattice;
        if stack == lattice.sink() {
            if let Some(best) = row.slots[0].iter().map(|e| e.size).min() {
                self.results.push(ResultEntry {
                    node: self.tree.dewey(row.node).clone(),
                    id: row.node,
                    size: best as usize,
                });
            }
            return;
        }

        for plan in &lattice.stacks()[stack].merges {
            for e1 in &row.slots[plan.left] {
                if e1.closed {
                    continue;
                }
                for e2 in &row.slots[plan.right] {
                    if e2.closed {
                        continue;
                    }
                    let Some(prov) = disjoint_union(&e1.prov, &e2.prov) else {
                        continue;
                    };
                    let selfs = e1.selfs | e2.selfs;
                    if !self.multiplicity_ok(row.node, selfs) {
                        continue;
                    }
                    let entry = Entry {
                        size: e1.size + e2.size,
                        closed: plan.closes_term && !prov.is_empty(),
                        prov,
                        selfs,
                    };
                    for &(target, column) in &plan.targets {
                        let level = lattice.stacks()[target].level;
                        self.pending[level].push(Pending {
                            node: row.node,
                            stack: target,
                            column,
                            entry: entry.clone(),
                        });
                    }
                }
            }
        }

        if let Some(parent) = self.stacks[stack].last_mut() {
            for (column, slot) in row.slots.iter().enumerate() {
                if let Some(best) = slot.iter().map(|e| e.size).min() {
                    let lifted = Entry {
                        size: best + 1,
                        prov: vec![row.node.0],
                        selfs: 0,
                        closed: false,
                    };
                    Self::slot_insert(&mut parent.slots[column], lifted, self.lift_cap);
                }
            }
        }
    }

    // Finishes every row that is not on the root path of `next`, one level
    // at a time so that combined blocks reach coarser stacks before those
    // stacks pop the same node.
    fn advance(&mut self, next: Option<NodeId>) {
        for level in 0..self.by_level.len() {
            let mut batch = std::mem::take(&mut self.pending[level]);
            // all pending nodes lie on one root path; deepest first
            batch.sort_by_key(|p| std::cmp::Reverse(self.tree.node_depth(p.node)));
            for p in batch {
                self.push(p.stack, p.node, p.column, p.entry);
            }
            for i in 0..self.by_level[level].len() {
                let stack = self.by_level[level][i];
                while let Some(top) = self.stacks[stack].last() {
                    if next.is_some_and(|x| self.tree.is_ancestor_or_self(top.node, x)) {
                        break;
                    }
                    self.pop(stack);
                }
            }
        }
    }

    fn inject(&mut self, node: NodeId, occurrences: u64) {
        for occ in 0..self.lattice.universe() {
            if occurrences >> occ & 1 == 0 {
                continue;
            }
            for &(stack, column) in self.lattice.singleton_slots(occ) {
                let entry = Entry {
                    size: 0,
                    prov: Vec::new(),
                    selfs: 1 << occ,
                    closed: false,
                };
                self.push(stack, node, column, entry);
            }
        }
    }
}

/// Ranked answer of `ast` over `idx`.
pub fn evaluate(ast: &QueryAst, idx: &InvertedIndex) -> Vec<ResultEntry> {
    evaluate_detailed(ast, idx).results
}

/// Ranked answer together with instrumentation counters.
pub fn evaluate_detailed(ast: &QueryAst, idx: &InvertedIndex) -> Evaluation {
    let lattice = build_lattice(ast);
    evaluate_with_lattice(ast, &lattice, idx)
}

pub fn evaluate_with_lattice(ast: &QueryAst, lattice: &Lattice, idx: &InvertedIndex) -> Evaluation {
    let keywords = ast.distinct_keywords();
    let mut stats = EvalStats {
        stack_count: lattice.len(),
        missing_keywords: keywords
            .iter()
            .filter(|k| !idx.contains(k))
            .map(|k| k.to_string())
            .collect(),
        ..EvalStats::default()
    };
    if !stats.missing_keywords.is_empty() {
        return Evaluation {
            results: Vec::new(),
            stats,
        };
    }

    let keyword_masks: Vec<u64> = keywords
        .iter()
        .map(|k| {
            ast.occurrences()
                .iter()
                .filter(|o| o.keyword == *k)
                .fold(0u64, |m, o| m | 1 << o.id.0)
        })
        .collect();

    // merged preorder stream: node -> (keyword index, count)
    let mut stream: BTreeMap<NodeId, Vec<(usize, u32)>> = BTreeMap::new();
    for (k, kw) in keywords.iter().enumerate() {
        for p in idx.postings(kw) {
            stats.postings += 1;
            stream.entry(p.node).or_default().push((k, p.count));
        }
    }

    let mut by_level = vec![Vec::new(); lattice.max_level() + 1];
    for (i, s) in lattice.stacks().iter().enumerate() {
        by_level[s.level].push(i);
    }
    let mut run = Run {
        tree: idx.tree(),
        lattice,
        lift_cap: ast.stats().max_cardinality.max(1),
        keyword_masks,
        counts: HashMap::new(),
        stacks: (0..lattice.len()).map(|_| Vec::new()).collect(),
        pending: (0..by_level.len()).map(|_| Vec::new()).collect(),
        by_level,
        results: Vec::new(),
        stats,
    };

    for (node, hits) in stream {
        run.stats.instances += 1;
        run.advance(Some(node));
        let mut occurrences = 0u64;
        for (k, count) in hits {
            run.counts.insert((node, k), count);
            occurrences |= run.keyword_masks[k];
        }
        run.inject(node, occurrences);
    }
    run.advance(None);

    Evaluation {
        results: rank(run.results),
        stats: run.stats,
    }
}

/// Ascending by size, ties in document order; one entry per node, the
/// smallest.
pub fn rank(mut results: Vec<ResultEntry>) -> Vec<ResultEntry> {
    results.sort_by(|a, b| a.node.cmp(&b.node).then(a.size.cmp(&b.size)));
    results.dedup_by(|later, first| later.node == first.node);
    results.sort_by(|a, b| a.size.cmp(&b.size).then_with(|| a.node.cmp(&b.node)));
    results
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_index, parse_document};
    use crate::oracle::oracle_answer;
    use crate::query::parse_query;

    fn run(q: &str, xml: &str) -> Vec<(String, usize)> {
        let idx = build_index(parse_document(xml).unwrap());
        evaluate(&parse_query(q).unwrap(), &idx)
            .into_iter()
            .map(|r| (r.node.to_string(), r.size))
            .collect()
    }

    fn agrees_with_oracle(q: &str, xml: &str) {
        let tree = parse_document(xml).unwrap();
        let ast = parse_query(q).unwrap();
        let want: Vec<(String, usize)> = oracle_answer(&ast, &tree)
            .unwrap()
            .into_iter()
            .map(|(d, s)| (d.to_string(), s))
            .collect();
        let mut got = run(q, xml);
        got.sort();
        let mut want = want;
        want.sort();
        assert_eq!(got, want, "{q} on {xml}");
    }

    fn owned(v: &[(&str, usize)]) -> Vec<(String, usize)> {
        v.iter().map(|(d, s)| (d.to_string(), *s)).collect()
    }

    #[test]
    fn two_leaf_tree() {
        assert_eq!(
            run("(a b)", "<r><x><a/><b/></x><a/></r>"),
            owned(&[("0", 2), ("ε", 3)])
        );
    }

    #[test]
    fn term_below_result() {
        assert_eq!(
            run("((a b) c)", "<r><x><a/><b/></x><c/></r>"),
            owned(&[("ε", 4)])
        );
    }

    #[test]
    fn single_keyword() {
        assert_eq!(
            run("(xml)", "<r><p>xml</p><q><xml/></q></r>"),
            owned(&[("0", 0), ("1.0", 0)])
        );
    }

    #[test]
    fn missing_keyword_is_empty() {
        let idx = build_index(parse_document("<r><a/></r>").unwrap());
        let ev = evaluate_detailed(&parse_query("(a zzz)").unwrap(), &idx);
        assert!(ev.results.is_empty());
        assert_eq!(ev.stats.missing_keywords, ["zzz"]);
    }

    #[test]
    fn external_instance_inside_term_subtree() {
        agrees_with_oracle("(a (b c))", "<r><a/><y><b/><a/><m><c/></m></y></r>");
    }

    #[test]
    fn cohesion_forces_larger_mct() {
        let xml = "<r><p><a/><c/></p><b/><q><s><a/><b/></s></q></r>";
        assert_eq!(run("((a b) c)", xml), owned(&[("ε", 6)]));
        assert_eq!(run("(a b c)", xml), owned(&[("ε", 4)]));
    }

    #[test]
    fn repeated_keywords() {
        assert_eq!(run("(a a)", "<r><p>a</p></r>"), owned(&[]));
        assert_eq!(run("(a a)", "<r><p>a a</p></r>"), owned(&[("0", 0)]));
        agrees_with_oracle("(a a)", "<r><p>a</p><q>a a</q></r>");
        agrees_with_oracle("(x (a a))", "<r><x/><p>a a</p><a/></r>");
        agrees_with_oracle("((a b) (a c))", "<r><p>a b c</p><q><a/><b/></q><c/></r>");
    }

    #[test]
    fn single_node_term() {
        agrees_with_oracle("((a b) c)", "<r><p>a b<c/></p></r>");
        agrees_with_oracle("(c (a b))", "<r><p>a b c</p></r>");
    }

    #[test]
    fn nested_example_queries() {
        let xml = "<bib><article><title>XML query</title><author>John Smith</author></article>\
                   <article><title>XML</title><author>John</author><title>query</title><author>Smith</author></article></bib>";
        agrees_with_oracle("(XML Query (John Smith))", xml);
        agrees_with_oracle("((XML Query) (John Smith))", xml);
        agrees_with_oracle("(XML Query John Smith)", xml);
    }

    #[test]
    fn rank_orders_and_dedups() {
        let e = |d: &str, s: usize| ResultEntry {
            node: d.parse().unwrap(),
            id: NodeId(0),
            size: s,
        };
        assert_eq!(rank(vec![e("2", 3), e("11", 6)]), [e("2", 3), e("11", 6)]);
        assert_eq!(rank(vec![e("1", 2), e("0", 2)]), [e("0", 2), e("1", 2)]);
        assert_eq!(rank(vec![e("0", 5), e("0", 3)]), [e("0", 3)]);
    }

    #[test]
    fn counters() {
        let idx = build_index(parse_document("<r><x><a/><b/></x><a/></r>").unwrap());
        let ev = evaluate_detailed(&parse_query("(a b)").unwrap(), &idx);
        assert_eq!(ev.stats.instances, 3);
        assert_eq!(ev.stats.postings, 3);
        assert_eq!(ev.stats.stack_count, 2);
        // three injections and two combined entries reaching the sink
        assert_eq!(ev.stats.push_count, 5);
    }
}
