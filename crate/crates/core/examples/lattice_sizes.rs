//! Show how cohesive terms shrink the lattice of keyword partitions.
//!
//! cargo run --example lattice_sizes -- "(XML Query (John Smith))" --dump

use cohesive_lca::{bell, build_lattice, parse_query};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dump = args.iter().any(|a| a == "--dump");
    let given: Vec<&String> = args.iter().filter(|a| *a != "--dump").collect();
    let queries: Vec<String> = if given.is_empty() {
        [
            "(XML Query John Smith)",
            "(XML Query (John Smith))",
            "((XML Query) (John Smith))",
            "((XML Keyword Search) (Paul Cooper) (Mary Davis))",
        ]
        .map(String::from)
        .to_vec()
    } else {
        given.into_iter().cloned().collect()
    };

    for text in &queries {
        let ast = match parse_query(text) {
            Ok(ast) => ast,
            Err(e) => {
                eprintln!("error: {text}: {e}");
                std::process::exit(2);
            }
        };
        let lattice = build_lattice(&ast);
        let full = bell(ast.len()).map_or_else(|_| "too large".to_string(), |b| b.to_string());
        println!("{text}");
        println!(
            "  stacks {} of {full} partitions, per level {:?}",
            lattice.len(),
            lattice.level_sizes()
        );
        for (term, size) in lattice.component_sizes() {
            println!("  term {} component {size}", term.0);
        }
        if dump {
            print!("{}", lattice.dump());
        }
    }
}
