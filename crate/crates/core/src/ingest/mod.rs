//! XML ingestion and the keyword inverted index.

mod format;

pub use format::{
    load_index, read_index, save_index, write_index, IndexFileError, FORMAT_VERSION, MAGIC,
};

use std::collections::BTreeMap;

use crate::tree_model::{DataTree, Dewey, Node, NodeId, TreeError};

/// Lowercased maximal runs of letters and digits.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml {
        line: u32,
        column: u32,
        message: String,
    },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Parses an XML document into a [`DataTree`].
///
/// Elements and attributes both become nodes. Attribute nodes are the first
/// children of their element, in source order, followed by child elements.
/// The direct text of an element, whitespace-normalized, is its value.
pub fn parse_document(xml: &str) -> Result<DataTree, ParseError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        ParseError::Xml {
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })?;
    let mut nodes = Vec::new();
    push_element(doc.root_element(), Dewey::root(), &mut nodes);
    Ok(DataTree::from_preorder(nodes)?)
}

fn qualified(node: roxmltree::Node<'_, '_>, ns: Option<&str>, local: &str) -> String {
    match ns.and_then(|uri| node.lookup_prefix(uri)) {
        Some(prefix) if !prefix.is_empty() => format!("{prefix}:{local}"),
        _ => local.to_string(),
    }
}

fn push_element(el: roxmltree::Node<'_, '_>, dewey: Dewey, out: &mut Vec<Node>) {
    let text: Vec<&str> = el
        .children()
        .filter(|c| c.is_text())
        .filter_map(|c| c.text())
        .flat_map(str::split_whitespace)
        .collect();
    let value = (!text.is_empty()).then(|| text.join(" "));
    let tag = el.tag_name();
    out.push(Node {
        dewey: dewey.clone(),
        label: qualified(el, tag.namespace(), tag.name()),
        value,
    });
    let mut step = 0u32;
    for attr in el.attributes() {
        out.push(Node {
            dewey: dewey.child(step),
            label: qualified(el, attr.namespace(), attr.name()),
            value: Some(attr.value().to_string()),
        });
        step += 1;
    }
    for child in el.children().filter(|c| c.is_element()) {
        push_element(child, dewey.child(step), out);
        step += 1;
    }
}

/// One keyword instance: a node and how often the keyword occurs in its
/// label and value combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Posting {
    pub node: NodeId,
    pub count: u32,
}

/// A parsed document together with its keyword postings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvertedIndex {
    tree: DataTree,
    postings: BTreeMap<String, Vec<Posting>>,
}

impl InvertedIndex {
    pub(crate) fn from_parts(tree: DataTree, postings: BTreeMap<String, Vec<Posting>>) -> Self {
        InvertedIndex { tree, postings }
    }

    pub fn tree(&self) -> &DataTree {
        &self.tree
    }

    pub fn node_count(&self) -> usize {
        self.tree.len()
    }

    pub fn doc_depth(&self) -> usize {
        self.tree.depth()
    }

    pub fn keyword_count(&self) -> usize {
        self.postings.len()
    }

    /// Posting list in preorder, empty for unknown keywords.
    pub fn postings(&self, keyword: &str) -> &[Posting] {
        self.postings.get(keyword).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, keyword: &str) -> bool {
        self.postings.contains_key(keyword)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.postings
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Keywords by descending posting-list length, ties alphabetical.
    pub fn most_frequent(&self) -> Vec<(&str, usize)> {
        let mut all: Vec<(&str, usize)> = self.iter().map(|(k, p)| (k, p.len())).collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        all
    }

    /// Copy with every posting list truncated to its first `cap` entries.
    pub fn truncated(&self, cap: usize) -> InvertedIndex {
        let postings = self
            .postings
            .iter()
            .map(|(k, v)| (k.clone(), v[..v.len().min(cap)].to_vec()))
            .collect();
        InvertedIndex {
            tree: self.tree.clone(),
            postings,
        }
    }
}

/// Token counts of a node's label and value together.
pub fn node_tokens(node: &Node) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    let value = node.value.as_deref().unwrap_or("");
    for tok in tokenize(&node.label).into_iter().chain(tokenize(value)) {
        *counts.entry(tok).or_insert(0) += 1;
    }
    counts
}

pub fn build_index(tree: DataTree) -> InvertedIndex {
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    for (i, node) in tree.nodes().iter().enumerate() {
        for (tok, count) in node_tokens(node) {
            postings.entry(tok).or_default().push(Posting {
                node: NodeId(i as u32),
                count,
            });
        }
    }
    InvertedIndex { tree, postings }
}
