//! Compare cohesive and SLCA answers against relevance judgments.
//!
//! cargo run --example effectiveness_eval

use std::collections::BTreeSet;

use cohesive_lca::cli::{run_query, Semantics};
use cohesive_lca::metrics::{csv_row, evaluate_effectiveness, top_size_filter, CSV_HEADER};
use cohesive_lca::{build_index, parse_document, parse_query, Dewey};

const XML: &str = include_str!("../tests/fixtures/citations.xml");

fn main() {
    let idx = build_index(parse_document(XML).expect("fixture parses"));
    let query = "((john smith) (mary jones))";
    let relevant: BTreeSet<Dewey> = ["0", "1"].iter().map(|d| d.parse().unwrap()).collect();
    let ast = parse_query(query).expect("valid query");

    println!("{CSV_HEADER}");
    for semantics in [Semantics::Cohesive, Semantics::Elca, Semantics::Slca] {
        let ranked = run_query(&idx, &ast, semantics);
        let retrieved: BTreeSet<Dewey> = top_size_filter(&ranked)
            .into_iter()
            .map(|r| r.node)
            .collect();
        let report = evaluate_effectiveness(&retrieved, &relevant);
        println!("{}", csv_row(semantics.name(), query, &report));
    }
}
