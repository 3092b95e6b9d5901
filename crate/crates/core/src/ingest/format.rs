//! Binary index container.
//!
//! ```text
//! magic      8 bytes  "CLCAIDX\0"
//! version    u16 LE
//! nodeCount  varint
//! docDepth   varint
//! pool       varint n, then n x (varint len, utf-8 bytes)
//! nodes      nodeCount x (varint steps, steps x varint, varint label id, varint value id + 1 or 0)
//! postings   varint keywords, then per keyword in byte order:
//!            varint pool id of keyword, varint n, n x (varint node ordinal delta, varint count)
//! checksum   u32 LE, CRC-32 of every preceding byte
//! ```
//!
//! Varints are unsigned LEB128. Node ordinal deltas are relative to the
//! previous posting of the same keyword (the first is absolute).

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::Path;

use super::{InvertedIndex, Posting};
use crate::tree_model::{DataTree, Dewey, Node, NodeId};

pub const MAGIC: &[u8; 8] = b"CLCAIDX\0";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum IndexFileError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index version {found} (expected {FORMAT_VERSION})")]
    Version { found: u16 },
    #[error("checksum mismatch: file is truncated or corrupt")]
    Checksum,
    #[error("corrupt index: {0}")]
    Corrupt(String),
}

struct StringPool {
    ids: HashMap<String, u64>,
    strings: Vec<String>,
}

impl StringPool {
    fn intern(&mut self, s: &str) -> u64 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.strings.len() as u64;
        self.ids.insert(s.to_string(), id);
        self.strings.push(s.to_string());
        id
    }
}

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

/// Serializes an index. The output depends only on the index contents.
pub fn write_index(idx: &InvertedIndex) -> Vec<u8> {
    let tree = idx.tree();
    let mut pool = StringPool {
        ids: HashMap::new(),
        strings: Vec::new(),
    };
    let node_refs: Vec<(u64, Option<u64>)> = tree
        .nodes()
        .iter()
        .map(|n| {
            (
                pool.intern(&n.label),
                n.value.as_deref().map(|v| pool.intern(v)),
            )
        })
        .collect();
    let keyword_ids: Vec<u64> = idx.iter().map(|(k, _)| pool.intern(k)).collect();

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_varint(&mut out, tree.len() as u64);
    put_varint(&mut out, tree.depth() as u64);

    put_varint(&mut out, pool.strings.len() as u64);
    for s in &pool.strings {
        put_varint(&mut out, s.len() as u64);
        out.extend_from_slice(s.as_bytes());
    }

    for (node, (label, value)) in tree.nodes().iter().zip(&node_refs) {
        let steps = node.dewey.steps();
        put_varint(&mut out, steps.len() as u64);
        for &s in steps {
            put_varint(&mut out, s as u64);
        }
        put_varint(&mut out, *label);
        put_varint(&mut out, value.map_or(0, |v| v + 1));
    }

    put_varint(&mut out, keyword_ids.len() as u64);
    for ((_, postings), kid) in idx.iter().zip(&keyword_ids) {
        put_varint(&mut out, *kid);
        put_varint(&mut out, postings.len() as u64);
        let mut prev = 0u64;
        for p in postings {
            let ord = p.node.0 as u64;
            put_varint(&mut out, ord - prev);
            put_varint(&mut out, p.count as u64);
            prev = ord;
        }
    }

    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn corrupt(&self, what: &str) -> IndexFileError {
        IndexFileError::Corrupt(format!("{what} at byte {}", self.pos))
    }

    fn varint(&mut self) -> Result<u64, IndexFileError> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let byte = *self
                .buf
                .get(self.pos)
                .ok_or_else(|| self.corrupt("unexpected end"))?;
            self.pos += 1;
            v |= u64::from(byte & 0x7f) << shift;
            if byte & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(self.corrupt("overlong varint"))
    }

    fn usize(&mut self) -> Result<usize, IndexFileError> {
        usize::try_from(self.varint()?).map_err(|_| self.corrupt("value out of range"))
    }

    fn bytes(&mut self, n: usize) -> Result<&[u8], IndexFileError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| self.corrupt("unexpected end"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
}

pub fn read_index(bytes: &[u8]) -> Result<InvertedIndex, IndexFileError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(IndexFileError::BadMagic);
    }
    if bytes.len() < MAGIC.len() + 2 + 4 {
        return Err(IndexFileError::Checksum);
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != FORMAT_VERSION {
        return Err(IndexFileError::Version { found: version });
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(IndexFileError::Checksum);
    }

    let mut r = Reader { buf: body, pos: 10 };
    let node_count = r.usize()?;
    let depth = r.usize()?;

    let pool_len = r.usize()?;
    let mut pool = Vec::with_capacity(pool_len.min(body.len()));
    for _ in 0..pool_len {
        let n = r.usize()?;
        let s = std::str::from_utf8(r.bytes(n)?).map(str::to_string).ok();
        pool.push(s.ok_or_else(|| r.corrupt("invalid utf-8"))?);
    }
    let lookup = |r: &Reader<'_>, id: usize| {
        pool.get(id)
            .cloned()
            .ok_or_else(|| r.corrupt("bad string id"))
    };

    let mut nodes = Vec::with_capacity(node_count.min(body.len()));
    for _ in 0..node_count {
        let len = r.usize()?;
        let steps = (0..len)
            .map(|_| r.varint().map(|s| s as u32))
            .collect::<Result<Vec<_>, _>>()?;
        let id = r.usize()?;
        let label = lookup(&r, id)?;
        let value = match r.usize()? {
            0 => None,
            v => Some(lookup(&r, v - 1)?),
        };
        nodes.push(Node {
            dewey: Dewey::new(steps),
            label,
            value,
        });
    }
    let tree =
        DataTree::from_preorder(nodes).map_err(|e| IndexFileError::Corrupt(e.to_string()))?;
    if tree.depth() != depth {
        return Err(IndexFileError::Corrupt(
            "depth does not match node table".into(),
        ));
    }

    let mut postings = BTreeMap::new();
    for _ in 0..r.usize()? {
        let id = r.usize()?;
        let keyword = lookup(&r, id)?;
        let n = r.usize()?;
        let mut list = Vec::with_capacity(n.min(body.len()));
        let mut prev = 0u64;
        for i in 0..n {
            let delta = r.varint()?;
            if i > 0 && delta == 0 {
                return Err(r.corrupt("posting list not strictly sorted"));
            }
            let ord = prev + delta;
            if ord as usize >= tree.len() {
                return Err(r.corrupt("posting refers to a missing node"));
            }
            let count = r.varint()? as u32;
            if count == 0 {
                return Err(r.corrupt("zero occurrence count"));
            }
            list.push(Posting {
                node: NodeId(ord as u32),
                count,
            });
            prev = ord;
        }
        postings.insert(keyword, list);
    }
    if r.pos != body.len() {
        return Err(r.corrupt("trailing bytes"));
    }
    Ok(InvertedIndex::from_parts(tree, postings))
}

pub fn save_index(idx: &InvertedIndex, path: impl AsRef<Path>) -> Result<(), IndexFileError> {
    fs::write(path, write_index(idx))?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<InvertedIndex, IndexFileError> {
    read_index(&fs::read(path)?)
}
