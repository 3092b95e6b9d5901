//! Parse a cohesive query and print its structure and statistics.
//!
//! cargo run --example parse_query -- "((title XML) ((John Smith) author))"

use cohesive_lca::query::Child;
use cohesive_lca::{parse_query, QueryAst};

fn describe(ast: &QueryAst, children: &[Child], indent: usize, out: &mut String) {
    for &child in children {
        match child {
            Child::Keyword(o) => {
                let occ = ast.occurrence(o);
                out.push_str(&format!(
                    "{:indent$}{} (occurrence {})\n",
                    "", occ.keyword, o.0
                ));
            }
            Child::Term(t) => {
                out.push_str(&format!("{:indent$}term {}\n", "", t.0));
                describe(ast, &ast.term(t).children, indent + 2, out);
            }
        }
    }
}

fn main() {
    let text = std::env::args().nth(1).unwrap_or_else(|| {
        "(journal (Information Systems) ((Information Retrieval) Smith))".into()
    });
    let ast = match parse_query(&text) {
        Ok(ast) => ast,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    println!("canonical: {ast}");
    let mut tree = String::new();
    describe(&ast, &ast.root().children, 2, &mut tree);
    print!("structure:\n{tree}");
    let s = ast.stats();
    println!(
        "keywords={} terms={} max_cardinality={} max_depth={}",
        s.keywords, s.terms, s.max_cardinality, s.max_depth
    );
    println!("distinct: {}", ast.distinct_keywords().join(", "));
}
