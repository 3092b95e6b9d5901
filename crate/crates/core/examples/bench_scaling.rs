//! Measure evaluation cost as posting lists grow, on a synthetic corpus.
//!
//! cargo run --release --example bench_scaling

use cohesive_lca::build_index;
use cohesive_lca::cli::{bench, BenchPlan, BENCH_HEADER};
use cohesive_lca::synth::template_corpus;

fn main() {
    let keywords = ["k0", "k1", "k2", "k3", "k4", "k5", "k6", "k7", "k8", "k9"];
    let idx = build_index(template_corpus(&keywords, 1000));
    let plan = BenchPlan {
        patterns: vec![
            "(x x ((x x x x) (x x x x)))".into(),
            "((x x x) (x x x) (x x x x))".into(),
        ],
        list_sizes: (1..=10).map(|i| i * 100).collect(),
        repetitions: 3,
    };
    let rows = bench(&idx, &plan).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        std::process::exit(1);
    });
    println!("{BENCH_HEADER}");
    for row in rows {
        println!("{}", row.csv());
    }
}
