//! Cross-check the stack engine against brute-force embedding enumeration on
//! seeded random trees and queries.
//!
//! cargo run --release --example oracle_check -- 500

use std::collections::BTreeSet;

use cohesive_lca::oracle::oracle_answer;
use cohesive_lca::synth::{random_query, random_tree, rng, TreeParams};
use cohesive_lca::{build_index, evaluate, parse_query};

fn main() {
    let count: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(200);
    let params = TreeParams::default();
    let mut agree = 0;
    let mut results = 0;
    for seed in 0..count {
        let mut r = rng(seed);
        let tree = random_tree(&mut r, &params);
        let text = random_query(&mut r, &params.words, 5, 2, 2);
        let ast = parse_query(&text).expect("generated queries parse");
        let want: BTreeSet<_> = match oracle_answer(&ast, &tree) {
            Ok(answer) => answer.into_iter().collect(),
            Err(e) => {
                println!("seed {seed}: skipped ({e})");
                continue;
            }
        };
        let idx = build_index(tree);
        let got: BTreeSet<_> = evaluate(&ast, &idx)
            .into_iter()
            .map(|e| (e.node, e.size))
            .collect();
        if got == want {
            agree += 1;
            results += got.len();
        } else {
            println!("seed {seed}: {text}\n  engine {got:?}\n  oracle {want:?}");
        }
    }
    println!("{agree}/{count} instances agree ({results} results compared)");
    if agree != count {
        std::process::exit(1);
    }
}
