//! Index an XML document and run cohesive and flat versions of one query.
//!
//! cargo run --example search_xml -- tests/fixtures/bib.xml "((title xml) ((john smith) author))"

use std::path::PathBuf;

use cohesive_lca::{build_index, evaluate, parse_document, parse_query, InvertedIndex};

const SAMPLE: &str = "<bib>\
<article><title>XML search</title><author>John Smith</author><author>Mary Jones</author></article>\
<article><title>XML</title><author>John Jones</author><author>Mary Smith</author></article>\
</bib>";

fn show(idx: &InvertedIndex, query: &str) {
    let ast = parse_query(query).expect("valid query");
    println!("{query}");
    for r in evaluate(&ast, idx) {
        println!(
            "  {:<8} size {:<3} {}",
            r.node.to_string(),
            r.size,
            idx.tree().label_path(r.id)
        );
    }
}

fn main() {
    let mut args = std::env::args().skip(1);
    let xml = match args.next() {
        Some(path) => std::fs::read_to_string(PathBuf::from(&path)).unwrap_or_else(|e| {
            eprintln!("error: {path}: {e}");
            std::process::exit(1);
        }),
        None => SAMPLE.to_string(),
    };
    let query = args
        .next()
        .unwrap_or_else(|| "((john smith) (mary jones))".into());
    let tree = parse_document(&xml).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        std::process::exit(2);
    });
    let idx = build_index(tree);
    println!(
        "{} nodes, {} keywords",
        idx.node_count(),
        idx.keyword_count()
    );

    show(&idx, &query);
    let flat = parse_query(&query)
        .expect("valid query")
        .flattened()
        .to_string();
    show(&idx, &flat);
}
