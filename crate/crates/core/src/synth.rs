//! Seeded synthetic documents and queries.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::query::{parse_query, QueryError};
use crate::tree_model::{DataTree, TreeBuilder};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("pattern needs {needed} keywords but only {available} are available")]
    NotEnoughKeywords { needed: usize, available: usize },
    #[error("pattern is not a valid query: {0}")]
    Pattern(#[from] QueryError),
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of small random trees.
#[derive(Clone, Debug)]
pub struct TreeParams {
    pub max_nodes: usize,
    /// Maximum number of nodes on a root-to-leaf path.
    pub max_depth: usize,
    pub labels: Vec<String>,
    pub words: Vec<String>,
    pub value_probability: f64,
    pub max_value_words: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|w| w.to_string()).collect();
        TreeParams {
            max_nodes: 60,
            max_depth: 6,
            labels: s(&["a", "b", "c", "d", "e", "n", "m", "p", "q", "r"]),
            words: s(&["a", "b", "c", "d", "e"]),
            value_probability: 0.4,
            max_value_words: 3,
        }
    }
}

/// Uniform random attachment, capped by depth.
pub fn random_tree(rng: &mut impl Rng, params: &TreeParams) -> DataTree {
    let n = rng.random_range(1..=params.max_nodes.max(1));
    let mut depth = vec![1usize];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    for i in 1..n {
        let open: Vec<usize> = (0..i).filter(|&j| depth[j] < params.max_depth).collect();
        let Some(&parent) = open.choose(rng) else {
            break;
        };
        depth.push(depth[parent] + 1);
        children.push(Vec::new());
        children[parent].push(i);
    }
    let content: Vec<(String, Option<String>)> = (0..depth.len())
        .map(|_| {
            let label = params.labels.choose(rng).expect("labels").clone();
            let value = rng.random_bool(params.value_probability).then(|| {
                let k = rng.random_range(1..=params.max_value_words.max(1));
                (0..k)
                    .map(|_| params.words.choose(rng).expect("words").as_str())
                    .collect::<Vec<_>>()
                    .join(" ")
            });
            (label, value)
        })
        .collect();

    fn emit(
        b: &mut TreeBuilder,
        i: usize,
        children: &[Vec<usize>],
        content: &[(String, Option<String>)],
    ) {
        b.open(content[i].0.clone(), content[i].1.clone());
        for &c in &children[i] {
            emit(b, c, children, content);
        }
        b.close();
    }
    let mut b = TreeBuilder::new();
    emit(&mut b, 0, &children, &content);
    b.build().expect("generated trees are well formed")
}

/// Random cohesive query text with at most `max_occurrences` keywords drawn
/// with replacement, at most `max_terms` inner terms, nested at most
/// `max_nesting` deep.
pub fn random_query(
    rng: &mut impl Rng,
    words: &[String],
    max_occurrences: usize,
    max_terms: usize,
    max_nesting: usize,
) -> String {
    let n = rng.random_range(1..=max_occurrences.max(1));
    let picked: Vec<&str> = (0..n)
        .map(|_| words.choose(rng).expect("words").as_str())
        .collect();
    let mut budget = max_terms;
    let items = query_items(rng, &picked, 0, max_nesting, &mut budget);
    format!("({})", items.join(" "))
}

fn query_items(
    rng: &mut impl Rng,
    words: &[&str],
    depth: usize,
    max_nesting: usize,
    budget: &mut usize,
) -> Vec<String> {
    let mut items = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let remaining = words.len() - i;
        // a term may not swallow every item of its parent
        let most = if items.is_empty() {
            remaining - 1
        } else {
            remaining
        };
        if *budget > 0 && depth < max_nesting && most >= 2 && rng.random_bool(0.5) {
            let size = rng.random_range(2..=most);
            *budget -= 1;
            let inner = query_items(rng, &words[i..i + size], depth + 1, max_nesting, budget);
            items.push(format!("({})", inner.join(" ")));
            i += size;
        } else {
            items.push(words[i].to_string());
            i += 1;
        }
    }
    items
}

/// Replaces each `x` of `pattern` by the next keyword, in order.
pub fn instantiate_pattern(pattern: &str, keywords: &[&str]) -> Result<String, SynthError> {
    let needed = pattern.chars().filter(|&c| c == 'x').count();
    if needed > keywords.len() {
        return Err(SynthError::NotEnoughKeywords {
            needed,
            available: keywords.len(),
        });
    }
    let mut next = keywords.iter();
    let mut text = String::new();
    for c in pattern.chars() {
        match c {
            'x' => {
                text.push(' ');
                text.push_str(next.next().expect("counted"));
                text.push(' ');
            }
            c => text.push(c),
        }
    }
    Ok(parse_query(&text)?.to_string())
}

/// Corpus of `records` records, each with `fields` fields whose values draw
/// `words_per_field` words from a Zipf-distributed vocabulary `w0`, `w1`, ...
#[derive(Clone, Debug)]
pub struct ZipfCorpus {
    pub records: usize,
    pub fields: usize,
    pub words_per_field: usize,
    pub vocabulary: usize,
    pub exponent: f64,
    pub seed: u64,
}

impl Default for ZipfCorpus {
    fn default() -> Self {
        ZipfCorpus {
            records: 2000,
            fields: 4,
            words_per_field: 4,
            vocabulary: 200,
            exponent: 0.8,
            seed: 7,
        }
    }
}

impl ZipfCorpus {
    pub fn build(&self) -> DataTree {
        let mut rng = rng(self.seed);
        let zipf =
            Zipf::new(self.vocabulary.max(1) as f64, self.exponent).expect("valid zipf parameters");
        let mut b = TreeBuilder::new();
        b.open("corpus", None);
        for _ in 0..self.records {
            b.open("record", None);
            for f in 0..self.fields {
                let value: Vec<String> = (0..self.words_per_field)
                    .map(|_| format!("w{}", zipf.sample(&mut rng) as usize - 1))
                    .collect();
                b.leaf(format!("f{f}"), Some(value.join(" ")));
            }
            b.close();
        }
        b.close();
        b.build().expect("well formed")
    }
}

/// `records` identical records; each holds every keyword exactly once, in
/// leaves grouped three to a section.
pub fn template_corpus(keywords: &[&str], records: usize) -> DataTree {
    let mut b = TreeBuilder::new();
    b.open("corpus", None);
    for _ in 0..records {
        b.open("record", None);
        for group in keywords.chunks(3) {
            b.open("section", None);
            for kw in group {
                b.leaf("field", Some(kw.to_string()));
            }
            b.close();
        }
        b.close();
    }
    b.close();
    b.build().expect("well formed")
}
