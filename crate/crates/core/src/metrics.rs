//! Precision, recall and F-measure against relevance judgments.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::engine::ResultEntry;
use crate::tree_model::Dewey;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub fmeasure: f64,
    pub retrieved: usize,
    pub relevant: usize,
}

/// Entries sharing the smallest size of a ranked list.
pub fn top_size_filter(results: &[ResultEntry]) -> Vec<ResultEntry> {
    let Some(first) = results.first() else {
        return Vec::new();
    };
    results
        .iter()
        .take_while(|r| r.size == first.size)
        .cloned()
        .collect()
}

// An empty denominator scores 1 only when the other side is empty too.
fn ratio(hits: usize, denominator: usize, other: usize) -> f64 {
    match (denominator, other) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        (d, _) => hits as f64 / d as f64,
    }
}

pub fn evaluate_effectiveness(
    retrieved: &BTreeSet<Dewey>,
    relevant: &BTreeSet<Dewey>,
) -> EvalReport {
    let hits = retrieved.intersection(relevant).count();
    let precision = ratio(hits, retrieved.len(), relevant.len());
    let recall = ratio(hits, relevant.len(), retrieved.len());
    let fmeasure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    EvalReport {
        precision,
        recall,
        fmeasure,
        retrieved: retrieved.len(),
        relevant: relevant.len(),
    }
}

pub const CSV_HEADER: &str = "semantics,query,P,R,F,retrieved,relevant";

/// One CSV row; the query is quoted, inner quotes doubled.
pub fn csv_row(semantics: &str, query: &str, r: &EvalReport) -> String {
    let mut row = String::new();
    let _ = write!(
        row,
        "{semantics},\"{}\",{:.4},{:.4},{:.4},{},{}",
        query.replace('"', "\"\""),
        r.precision,
        r.recall,
        r.fmeasure,
        r.retrieved,
        r.relevant
    );
    row
}
