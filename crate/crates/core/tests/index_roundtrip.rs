use std::path::{Path, PathBuf};

use cohesive_lca::ingest::{read_index, write_index, IndexFileError, FORMAT_VERSION};
use cohesive_lca::{build_index, load_index, parse_document, save_index};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn golden_files_match_fresh_builds() {
    for name in ["bib", "catalog", "citations"] {
        let xml = std::fs::read_to_string(fixture(&format!("{name}.xml"))).unwrap();
        let fresh = build_index(parse_document(&xml).unwrap());
        let golden = std::fs::read(fixture(&format!("{name}.clidx"))).unwrap();
        assert_eq!(write_index(&fresh), golden, "{name}");
        assert_eq!(read_index(&golden).unwrap(), fresh, "{name}");
    }
}

#[test]
fn save_and_load_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("doc.clidx");
    let idx = build_index(parse_document("<a x=\"1\"><b>john john smith</b></a>").unwrap());
    save_index(&idx, &path).unwrap();
    assert_eq!(load_index(&path).unwrap(), idx);
    assert!(matches!(
        load_index(dir.path().join("missing")),
        Err(IndexFileError::Io(_))
    ));
}

#[test]
fn every_truncation_is_rejected() {
    let bytes = std::fs::read(fixture("bib.clidx")).unwrap();
    for len in 0..bytes.len() {
        assert!(
            read_index(&bytes[..len]).is_err(),
            "prefix of {len} bytes accepted"
        );
    }
}

#[test]
fn corruption_is_classified() {
    let bytes = std::fs::read(fixture("catalog.clidx")).unwrap();

    let mut flipped = bytes.clone();
    let mid = bytes.len() / 2;
    flipped[mid] ^= 0x40;
    assert!(matches!(
        read_index(&flipped),
        Err(IndexFileError::Checksum)
    ));

    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(matches!(read_index(&magic), Err(IndexFileError::BadMagic)));

    let mut version = bytes.clone();
    version[8..10].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
    assert!(
        matches!(read_index(&version), Err(IndexFileError::Version { found }) if found == FORMAT_VERSION + 1)
    );
}
