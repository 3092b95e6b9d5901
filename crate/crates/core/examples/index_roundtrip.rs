//! Save an index to disk, load it back and show that corruption is detected.
//!
//! cargo run --example index_roundtrip

use cohesive_lca::ingest::{read_index, write_index};
use cohesive_lca::{build_index, load_index, parse_document, save_index};

fn main() {
    let xml = "<bib><article key=\"a1\"><title>XML keyword search</title></article></bib>";
    let idx = build_index(parse_document(xml).expect("valid xml"));
    let path = std::env::temp_dir().join(format!("roundtrip-{}.clidx", std::process::id()));

    save_index(&idx, &path).expect("index written");
    let loaded = load_index(&path).expect("index read");
    let _ = std::fs::remove_file(&path);
    assert_eq!(loaded, idx);
    println!(
        "{} nodes and {} keywords survive the round trip",
        loaded.node_count(),
        loaded.keyword_count()
    );
    for (keyword, postings) in loaded.iter() {
        let nodes: Vec<String> = postings
            .iter()
            .map(|p| format!("{}x{}", loaded.tree().dewey(p.node), p.count))
            .collect();
        println!("  {keyword}: {}", nodes.join(" "));
    }

    let bytes = write_index(&idx);
    assert_eq!(
        bytes,
        write_index(&loaded),
        "serialization is deterministic"
    );
    match read_index(&bytes[..bytes.len() - 1]) {
        Ok(_) => println!("truncation went unnoticed"),
        Err(e) => println!("truncated file rejected: {e}"),
    }
}
