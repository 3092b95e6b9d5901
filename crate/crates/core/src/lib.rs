//! Keyword search over XML trees with cohesive keyword groups.
//!
//! A cohesive query such as `(xml query (john smith))` asks for subtrees
//! containing every keyword, where `john` and `smith` must form an
//! indivisible unit: no other query keyword may be matched inside the subtree
//! rooted at their lowest common ancestor. Results are LCA nodes ranked by
//! the edge count of their smallest connecting tree.
//!
//! ```
//! use cohesive_lca::{evaluate, build_index, parse_document, parse_query};
//!
//! let idx = build_index(parse_document("<r><x><a/><b/></x><a/></r>").unwrap());
//! let results = evaluate(&parse_query("(a b)").unwrap(), &idx);
//! let ranked: Vec<(String, usize)> = results.iter().map(|r| (r.node.to_string(), r.size)).collect();
//! assert_eq!(ranked, [("0".to_string(), 2), ("ε".to_string(), 3)]);
//! ```

pub mod cli;
pub mod engine;
pub mod ingest;
pub mod lattice;
pub mod metrics;
pub mod oracle;
pub mod query;
pub mod synth;
pub mod tree_model;

pub use engine::{evaluate, evaluate_detailed, rank, EvalStats, Evaluation, ResultEntry};
pub use ingest::{build_index, load_index, parse_document, save_index, InvertedIndex};
pub use lattice::{bell, build_lattice, Lattice};
pub use query::{parse_query, QueryAst};
pub use tree_model::{DataTree, Dewey, NodeId};
