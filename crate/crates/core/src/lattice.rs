//! Lattice of keyword-occurrence partitions.
//!
//! Each stack of the evaluation corresponds to a partition of the query's
//! keyword occurrences. Blocks are bitmasks over occurrence ids. The lattice
//! is assembled from one component sublattice per term: the partitions of
//! that term's items (its direct keywords and its child terms taken as
//! units). A nested term's completed block is not a stack of its own
//! component; it feeds the stacks of the enclosing term where it is an item.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::query::{Child, QueryAst, TermId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("bell number requested for n = {0}; supported range is 0..=20")]
    BellOutOfRange(usize),
}

/// Bell numbers via `B(n+1) = sum_i C(n, i) B(i)`, `B(0) = 1`.
pub fn bell(n: usize) -> Result<u64, LatticeError> {
    if n > 20 {
        return Err(LatticeError::BellOutOfRange(n));
    }
    let mut b = vec![1u64];
    for m in 0..n {
        let mut binom = 1u64;
        let mut next = 0u64;
        for (i, bi) in b.iter().enumerate() {
            next += binom * bi;
            binom = binom * (m - i) as u64 / (i as u64 + 1);
        }
        b.push(next);
    }
    Ok(b[n])
}

/// Set partition of occurrence ids, blocks ordered by smallest member.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    blocks: Vec<u64>,
}

impl Partition {
    pub fn new(mut blocks: Vec<u64>) -> Self {
        debug_assert!(blocks.iter().all(|&b| b != 0));
        blocks.sort_by_key(|b| b.trailing_zeros());
        Partition { blocks }
    }

    pub fn singletons(universe: usize) -> Self {
        Partition::new((0..universe).map(|i| 1u64 << i).collect())
    }

    pub fn blocks(&self) -> &[u64] {
        &self.blocks
    }

    pub fn universe_mask(&self) -> u64 {
        self.blocks.iter().fold(0, |a, b| a | b)
    }

    /// Number of occurrences minus number of blocks.
    pub fn coarseness(&self) -> usize {
        self.universe_mask().count_ones() as usize - self.blocks.len()
    }

    pub fn column_of(&self, block: u64) -> Option<usize> {
        self.blocks.iter().position(|&b| b == block)
    }

    fn merged(&self, a: u64, b: u64) -> Partition {
        let mut blocks: Vec<u64> = self
            .blocks
            .iter()
            .copied()
            .filter(|&x| x != a && x != b)
            .collect();
        blocks.push(a | b);
        Partition::new(blocks)
    }
}

/// Items of one term: a singleton mask per direct keyword and the whole
/// occurrence mask of each child term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlSet {
    pub term: TermId,
    pub items: Vec<u64>,
}

impl ControlSet {
    pub fn mask(&self) -> u64 {
        self.items.iter().fold(0, |a, b| a | b)
    }

    /// True iff `block` is a non-empty union of whole items.
    pub fn is_union(&self, block: u64) -> bool {
        block != 0
            && block & !self.mask() == 0
            && self.items.iter().all(|&i| i & block == 0 || i & block == i)
    }

    fn item_count(&self, block: u64) -> usize {
        self.items.iter().filter(|&&i| i & block == i).count()
    }
}

pub fn construct_control_sets(ast: &QueryAst) -> Vec<ControlSet> {
    ast.terms()
        .iter()
        .map(|t| ControlSet {
            term: t.id,
            items: t.children.iter().map(|c| ast.child_mask(*c)).collect(),
        })
        .collect()
}

/// The admissibility rules derived from a query's control sets.
#[derive(Clone, Debug)]
pub struct Cohesion {
    sets: Vec<ControlSet>,
}

impl Cohesion {
    pub fn new(ast: &QueryAst) -> Self {
        Cohesion {
            sets: construct_control_sets(ast),
        }
    }

    pub fn control_sets(&self) -> &[ControlSet] {
        &self.sets
    }

    /// The term within which `a` and `b` may be combined, if any.
    pub fn combining_term(&self, a: u64, b: u64) -> Option<TermId> {
        if a & b != 0 {
            return None;
        }
        self.sets
            .iter()
            .find(|cs| cs.is_union(a) && cs.is_union(b))
            .map(|cs| cs.term)
    }

    /// True iff `block` is every occurrence of a term other than the outer one.
    pub fn completes_proper_term(&self, block: u64) -> bool {
        self.sets.iter().skip(1).any(|cs| cs.mask() == block)
    }

    /// Partition obtained by merging blocks `a` and `b`, or `None` when the
    /// merged block would violate a cohesiveness relationship.
    pub fn merge_targets(&self, p: &Partition, a: u64, b: u64) -> Option<Partition> {
        if p.column_of(a).is_none() || p.column_of(b).is_none() {
            return None;
        }
        self.combining_term(a, b).map(|_| p.merged(a, b))
    }

    /// Terms in which `p` has a block joining some but not all items.
    fn partial_terms(&self, p: &Partition) -> usize {
        self.sets
            .iter()
            .filter(|cs| {
                p.blocks()
                    .iter()
                    .any(|&b| cs.is_union(b) && cs.item_count(b) >= 2 && b != cs.mask())
            })
            .count()
    }
}

/// A combination performed when a row of the stack is popped: columns
/// `left` and `right` form `block`, delivered to every `(stack, column)`
/// target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergePlan {
    pub left: usize,
    pub right: usize,
    pub block: u64,
    pub closes_term: bool,
    pub targets: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeStack {
    pub partition: Partition,
    pub level: usize,
    pub merges: Vec<MergePlan>,
}

impl LatticeStack {
    pub fn columns(&self) -> usize {
        self.partition.blocks().len()
    }
}

#[derive(Clone, Debug)]
pub struct Lattice {
    universe: usize,
    stacks: Vec<LatticeStack>,
    source: usize,
    sink: usize,
    singleton_slots: Vec<Vec<(usize, usize)>>,
    cohesion: Cohesion,
    labels: Vec<String>,
}

pub fn build_lattice(ast: &QueryAst) -> Lattice {
    Lattice::build(ast)
}

impl Lattice {
    pub fn build(ast: &QueryAst) -> Lattice {
        let universe = ast.len();
        let cohesion = Cohesion::new(ast);
        let source = Partition::singletons(universe);

        let mut seeds = vec![source.clone()];
        for t in ast.terms() {
            if !t.children.iter().any(|c| matches!(c, Child::Term(_))) {
                continue;
            }
            let inside = ast.occurrence_mask(t.id);
            let mut blocks: Vec<u64> = t.children.iter().map(|c| ast.child_mask(*c)).collect();
            blocks.extend((0..universe).map(|i| 1u64 << i).filter(|b| b & inside == 0));
            seeds.push(Partition::new(blocks));
        }

        let mut seen: HashSet<Partition> = HashSet::new();
        let mut queue: VecDeque<Partition> = VecDeque::new();
        for s in seeds {
            if seen.insert(s.clone()) {
                queue.push_back(s);
            }
        }
        while let Some(p) = queue.pop_front() {
            let blocks = p.blocks().to_vec();
            for (i, &a) in blocks.iter().enumerate() {
                for &b in &blocks[i + 1..] {
                    if cohesion.combining_term(a, b).is_none()
                        || cohesion.completes_proper_term(a | b)
                    {
                        continue;
                    }
                    let next = p.merged(a, b);
                    if cohesion.partial_terms(&next) > 1 || seen.contains(&next) {
                        continue;
                    }
                    seen.insert(next.clone());
                    queue.push_back(next);
                }
            }
        }

        let mut partitions: Vec<Partition> = seen.into_iter().collect();
        partitions.sort_by(|a, b| a.coarseness().cmp(&b.coarseness()).then_with(|| a.cmp(b)));

        // Drop partitions that cannot be reached from the source or cannot
        // reach the sink under the routing rules, until stable.
        loop {
            let plans = plan_merges(&partitions, &cohesion);
            let keep = connected(&partitions, &plans, universe);
            if keep.iter().all(|&k| k) {
                let stacks: Vec<LatticeStack> = partitions
                    .into_iter()
                    .zip(plans)
                    .map(|(partition, merges)| LatticeStack {
                        level: partition.coarseness(),
                        partition,
                        merges,
                    })
                    .collect();
                let sink = stacks
                    .iter()
                    .position(|s| s.columns() == 1)
                    .expect("sink exists");
                let mut singleton_slots = vec![Vec::new(); universe];
                for (si, s) in stacks.iter().enumerate() {
                    for (col, &b) in s.partition.blocks().iter().enumerate() {
                        if b.count_ones() == 1 {
                            singleton_slots[b.trailing_zeros() as usize].push((si, col));
                        }
                    }
                }
                let labels = occurrence_labels(ast);
                return Lattice {
                    universe,
                    stacks,
                    source: 0,
                    sink,
                    singleton_slots,
                    cohesion,
                    labels,
                };
            }
            partitions = partitions
                .into_iter()
                .zip(keep)
                .filter(|(_, k)| *k)
                .map(|(p, _)| p)
                .collect();
        }
    }

    pub fn len(&self) -> usize {
        self.stacks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stacks.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn stacks(&self) -> &[LatticeStack] {
        &self.stacks
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn cohesion(&self) -> &Cohesion {
        &self.cohesion
    }

    pub fn max_level(&self) -> usize {
        self.stacks.iter().map(|s| s.level).max().unwrap_or(0)
    }

    /// Stacks (and columns) holding the singleton block of an occurrence.
    pub fn singleton_slots(&self, occurrence: usize) -> &[(usize, usize)] {
        &self.singleton_slots[occurrence]
    }

    pub fn successors(&self, stack: usize) -> BTreeSet<usize> {
        self.stacks[stack]
            .merges
            .iter()
            .flat_map(|m| m.targets.iter().map(|t| t.0))
            .collect()
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.max_level() + 1];
        for s in &self.stacks {
            sizes[s.level] += 1;
        }
        sizes
    }

    pub fn find(&self, p: &Partition) -> Option<usize> {
        self.stacks.iter().position(|s| &s.partition == p)
    }

    /// Number of distinct partitions of each term's items that the lattice
    /// exhibits, the completed term included.
    pub fn component_sizes(&self) -> Vec<(TermId, usize)> {
        self.cohesion
            .control_sets()
            .iter()
            .map(|cs| {
                let t = cs.mask();
                let mut seen: HashSet<Vec<u64>> = HashSet::new();
                if cs.term.0 != 0 {
                    seen.insert(vec![t]);
                }
                'stack: for s in &self.stacks {
                    let mut proj = Vec::new();
                    for &b in s.partition.blocks() {
                        if b & t == 0 {
                            continue;
                        }
                        if b & t == t {
                            proj = vec![t];
                            break;
                        }
                        if !cs.is_union(b) {
                            continue 'stack;
                        }
                        proj.push(b);
                    }
                    seen.insert(proj);
                }
                (cs.term, seen.len())
            })
            .collect()
    }

    pub fn render_block(&self, block: u64) -> String {
        (0..self.universe)
            .filter(|i| block >> i & 1 == 1)
            .map(|i| self.labels[i].as_str())
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn render_partition(&self, p: &Partition) -> String {
        let blocks: Vec<String> = p.blocks().iter().map(|&b| self.render_block(b)).collect();
        format!("[{}]", blocks.join(", "))
    }

    /// Level-grouped listing, one partition per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for level in 0..=self.max_level() {
            let _ = writeln!(out, "level {level}:");
            for s in self.stacks.iter().filter(|s| s.level == level) {
                let _ = writeln!(out, "  {}", self.render_partition(&s.partition));
            }
        }
        out
    }
}

fn occurrence_labels(ast: &QueryAst) -> Vec<String> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for o in ast.occurrences() {
        *counts.entry(o.keyword.as_str()).or_default() += 1;
    }
    let mut nth: HashMap<&str, usize> = HashMap::new();
    ast.occurrences()
        .iter()
        .map(|o| {
            let k = o.keyword.as_str();
            if counts[k] > 1 {
                let n = nth.entry(k).or_default();
                *n += 1;
                format!("{k}#{n}")
            } else {
                k.to_string()
            }
        })
        .collect()
}

// Merge plans route a combined block to every coarser stack that holds it as
// a column.
fn plan_merges(partitions: &[Partition], cohesion: &Cohesion) -> Vec<Vec<MergePlan>> {
    let mut holders: HashMap<u64, Vec<(usize, usize)>> = HashMap::new();
    for (si, p) in partitions.iter().enumerate() {
        for (col, &b) in p.blocks().iter().enumerate() {
            holders.entry(b).or_default().push((si, col));
        }
    }
    partitions
        .iter()
        .map(|p| {
            let level = p.coarseness();
            let blocks = p.blocks();
            let mut plans = Vec::new();
            for (i, &a) in blocks.iter().enumerate() {
                for (j, &b) in blocks.iter().enumerate().skip(i + 1) {
                    if cohesion.combining_term(a, b).is_none() {
                        continue;
                    }
                    let targets: Vec<(usize, usize)> = holders
                        .get(&(a | b))
                        .into_iter()
                        .flatten()
                        .copied()
                        .filter(|&(si, _)| partitions[si].coarseness() > level)
                        .collect();
                    if targets.is_empty() {
                        continue;
                    }
                    plans.push(MergePlan {
                        left: i,
                        right: j,
                        block: a | b,
                        closes_term: cohesion.completes_proper_term(a | b),
                        targets,
                    });
                }
            }
            plans
        })
        .collect()
}

fn connected(partitions: &[Partition], plans: &[Vec<MergePlan>], universe: usize) -> Vec<bool> {
    let n = partitions.len();
    let succ: Vec<Vec<usize>> = plans
        .iter()
        .map(|ps| {
            ps.iter()
                .flat_map(|m| m.targets.iter().map(|t| t.0))
                .collect()
        })
        .collect();
    let mut pred = vec![Vec::new(); n];
    for (i, ss) in succ.iter().enumerate() {
        for &s in ss {
            pred[s].push(i);
        }
    }
    let source = partitions
        .iter()
        .position(|p| p.blocks().len() == universe)
        .expect("source");
    let sink = partitions
        .iter()
        .position(|p| p.blocks().len() == 1)
        .expect("sink");
    let reach = |start: usize, adj: &Vec<Vec<usize>>| {
        let mut seen = vec![false; n];
        let mut todo = vec![start];
        seen[start] = true;
        while let Some(x) = todo.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    todo.push(y);
                }
            }
        }
        seen
    };
    let fwd = reach(source, &succ);
    let bwd = reach(sink, &pred);
    fwd.iter().zip(&bwd).map(|(a, b)| *a && *b).collect()
}
