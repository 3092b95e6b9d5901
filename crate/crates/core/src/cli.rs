//! Command implementations behind the `cohesive` binary.
//!
//! Every command writes to a caller-supplied sink so it can be driven from
//! tests and examples.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::engine::{evaluate, evaluate_detailed, ResultEntry};
use crate::ingest::{
    build_index, parse_document, read_index, write_index, IndexFileError, InvertedIndex,
    ParseError, MAGIC,
};
use crate::lattice::build_lattice;
use crate::metrics::{csv_row, evaluate_effectiveness, top_size_filter, CSV_HEADER};
use crate::oracle::{elca, oracle_answer, slca, OracleError};
use crate::query::{parse_query, QueryAst, QueryError};
use crate::synth::{instantiate_pattern, random_query, random_tree, rng, SynthError, TreeParams};
use crate::tree_model::{Dewey, DeweyParseError};

/// Environment variable naming the directory for index files given by bare
/// name.
pub const INDEX_DIR_ENV: &str = "COHESIVE_INDEX_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Xml(#[from] ParseError),
    #[error("query syntax error: {0}")]
    Query(#[from] QueryError),
    #[error(transparent)]
    Pattern(#[from] SynthError),
    #[error(transparent)]
    Index(#[from] IndexFileError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    /// 2 for usage and parse errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Xml(_) | CliError::Query(_) | CliError::Pattern(_) => 2,
            _ => 1,
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    let bytes = read_file(path)?;
    String::from_utf8(bytes)
        .map_err(|_| CliError::Input(format!("{}: not valid UTF-8", path.display())))
}

/// Resolves a relative path that does not exist against the index directory.
pub fn resolve_index_path(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(INDEX_DIR_ENV) {
            return Path::new(&dir).join(path);
        }
    }
    path.to_path_buf()
}

/// Loads an index file, or parses and indexes an XML document.
pub fn open_index(path: &Path) -> Result<InvertedIndex, CliError> {
    let path = resolve_index_path(path);
    let bytes = read_file(&path)?;
    if bytes.starts_with(MAGIC) {
        return Ok(read_index(&bytes)?);
    }
    let text = String::from_utf8(bytes).map_err(|_| {
        CliError::Input(format!(
            "{}: neither an index nor UTF-8 XML",
            path.display()
        ))
    })?;
    Ok(build_index(parse_document(&text)?))
}

/// Default output location: the index directory if set, else next to the
/// input, with extension `.clidx`.
pub fn default_index_path(xml: &Path) -> PathBuf {
    let name = xml.with_extension("clidx");
    match std::env::var_os(INDEX_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(name.file_name().expect("file name")),
        None => name,
    }
}

pub fn cmd_index(
    xml: &Path,
    out_path: &Path,
    out: &mut impl Write,
) -> Result<InvertedIndex, CliError> {
    let idx = build_index(parse_document(&read_text(xml)?)?);
    let bytes = write_index(&idx);
    fs::write(out_path, &bytes).map_err(|source| CliError::File {
        path: out_path.to_path_buf(),
        source,
    })?;
    writeln!(out, "wrote {}", out_path.display())?;
    writeln!(out, "nodes\t{}", idx.node_count())?;
    writeln!(out, "keywords\t{}", idx.keyword_count())?;
    writeln!(out, "depth\t{}", idx.doc_depth())?;
    writeln!(out, "bytes\t{}", bytes.len())?;
    Ok(idx)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Semantics {
    #[default]
    Cohesive,
    Slca,
    Elca,
}

impl Semantics {
    pub fn name(self) -> &'static str {
        match self {
            Semantics::Cohesive => "cohesive",
            Semantics::Slca => "slca",
            Semantics::Elca => "elca",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct QueryOptions {
    pub limit: Option<usize>,
    pub top_size: bool,
    pub semantics: Semantics,
    pub tsv: bool,
}

fn flat_query(ast: &QueryAst) -> QueryAst {
    let text = format!("({})", ast.distinct_keywords().join(" "));
    parse_query(&text).expect("keywords re-parse")
}

/// Ranked results of one query under the chosen semantics. Baseline results
/// carry the size of their smallest flat MCT.
pub fn run_query(idx: &InvertedIndex, ast: &QueryAst, semantics: Semantics) -> Vec<ResultEntry> {
    if semantics == Semantics::Cohesive {
        return evaluate(ast, idx);
    }
    let keywords = ast.distinct_keywords();
    let keep: BTreeSet<Dewey> = match semantics {
        Semantics::Slca => slca(&keywords, idx),
        _ => elca(&keywords, idx),
    };
    evaluate(&flat_query(ast), idx)
        .into_iter()
        .filter(|r| keep.contains(&r.node))
        .collect()
}

fn snippet(idx: &InvertedIndex, r: &ResultEntry) -> String {
    let node = idx.tree().node(r.id);
    let text = node.value.as_deref().unwrap_or("");
    let mut s: String = text.chars().take(40).collect();
    if text.chars().count() > 40 {
        s.push('…');
    }
    s
}

pub fn cmd_query(
    idx: &InvertedIndex,
    query: &str,
    opts: &QueryOptions,
    out: &mut impl Write,
) -> Result<usize, CliError> {
    let ast = parse_query(query)?;
    let missing: Vec<&str> = ast
        .distinct_keywords()
        .into_iter()
        .filter(|k| !idx.contains(k))
        .collect();
    let mut results = run_query(idx, &ast, opts.semantics);
    if opts.top_size {
        results = top_size_filter(&results);
    }
    if let Some(n) = opts.limit {
        results.truncate(n);
    }
    for (rank, r) in results.iter().enumerate() {
        let path = idx.tree().label_path(r.id);
        if opts.tsv {
            writeln!(out, "{}\t{}\t{}", r.node, r.size, path)?;
        } else {
            writeln!(
                out,
                "{:>3}. {}  size {}  {}  {}",
                rank + 1,
                r.node,
                r.size,
                path,
                snippet(idx, r)
            )?;
        }
    }
    if !opts.tsv {
        if !missing.is_empty() {
            writeln!(out, "note: not in index: {}", missing.join(", "))?;
        }
        writeln!(out, "{} result(s)", results.len())?;
    }
    Ok(results.len())
}

/// Reads one query per line until end of input or `:quit`. Syntax errors are
/// reported and the loop continues.
pub fn repl(
    idx: &InvertedIndex,
    opts: &QueryOptions,
    input: impl BufRead,
    out: &mut impl Write,
) -> Result<(), CliError> {
    write!(out, "> ")?;
    out.flush()?;
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line == ":quit" || line == ":q" {
            break;
        }
        if !line.is_empty() {
            match cmd_query(idx, line, opts, out) {
                Ok(_) => {}
                Err(CliError::Query(e)) => writeln!(out, "query syntax error: {e}")?,
                Err(e) => return Err(e),
            }
        }
        write!(out, "> ")?;
        out.flush()?;
    }
    writeln!(out)?;
    Ok(())
}

/// Result sizes keyed by node.
type Sizes = BTreeMap<Dewey, usize>;

fn compare(ast: &QueryAst, idx: &InvertedIndex) -> Result<(Sizes, Sizes), CliError> {
    let engine: Sizes = evaluate(ast, idx)
        .into_iter()
        .map(|r| (r.node, r.size))
        .collect();
    let oracle = oracle_answer(ast, idx.tree())?;
    Ok((engine, oracle))
}

/// Compares the engine with brute-force enumeration on one query. Returns
/// whether they agree.
pub fn cmd_oracle(
    idx: &InvertedIndex,
    query: &str,
    out: &mut impl Write,
) -> Result<bool, CliError> {
    let ast = parse_query(query)?;
    let (engine, oracle) = compare(&ast, idx)?;
    writeln!(out, "dewey\tengine\toracle")?;
    let nodes: BTreeSet<&Dewey> = engine.keys().chain(oracle.keys()).collect();
    let show = |v: Option<&usize>| v.map_or("-".to_string(), usize::to_string);
    for d in nodes {
        writeln!(out, "{d}\t{}\t{}", show(engine.get(d)), show(oracle.get(d)))?;
    }
    let agree = engine == oracle;
    writeln!(out, "{}", if agree { "match" } else { "MISMATCH" })?;
    Ok(agree)
}

/// Runs the comparison on `count` seeded random trees and queries.
pub fn cmd_oracle_random(count: usize, seed: u64, out: &mut impl Write) -> Result<bool, CliError> {
    let params = TreeParams::default();
    let mut failures = 0usize;
    for i in 0..count {
        let s = seed.wrapping_add(i as u64);
        let mut r = rng(s);
        let tree = random_tree(&mut r, &params);
        let text = random_query(&mut r, &params.words, 5, 2, 2);
        let ast = parse_query(&text)?;
        let idx = build_index(tree);
        let (engine, oracle) = compare(&ast, &idx)?;
        if engine != oracle {
            failures += 1;
            writeln!(out, "MISMATCH seed {s} query {text}")?;
        }
    }
    writeln!(out, "{} instance(s), {} mismatch(es)", count, failures)?;
    Ok(failures == 0)
}

#[derive(Clone, Debug)]
pub struct BenchPlan {
    pub patterns: Vec<String>,
    pub list_sizes: Vec<usize>,
    pub repetitions: usize,
}

impl BenchPlan {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.repetitions == 0 {
            return Err(CliError::Usage("repetitions must be at least 1".into()));
        }
        if self.list_sizes.is_empty() || self.list_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Usage(
                "list sizes must be non-empty and strictly increasing".into(),
            ));
        }
        if self.patterns.is_empty() {
            return Err(CliError::Usage("at least one pattern is required".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub pattern: String,
    pub keywords: usize,
    pub terms: usize,
    pub max_cardinality: usize,
    pub instances: usize,
    pub millis: f64,
    pub stack_count: usize,
    pub push_count: u64,
}

pub const BENCH_HEADER: &str = "pattern,k,t,c,instances,millis,stackCount,pushCount";

impl BenchRow {
    pub fn csv(&self) -> String {
        format!(
            "\"{}\",{},{},{},{},{:.3},{},{}",
            self.pattern,
            self.keywords,
            self.terms,
            self.max_cardinality,
            self.instances,
            self.millis,
            self.stack_count,
            self.push_count
        )
    }
}

/// Instantiates each pattern with the most frequent keywords and times the
/// evaluation at every posting-list cap. One warm-up run is discarded.
pub fn bench(idx: &InvertedIndex, plan: &BenchPlan) -> Result<Vec<BenchRow>, CliError> {
    plan.validate()?;
    let frequent: Vec<&str> = idx.most_frequent().into_iter().map(|(k, _)| k).collect();
    let mut rows = Vec::new();
    for pattern in &plan.patterns {
        let text = instantiate_pattern(pattern, &frequent)?;
        let ast = parse_query(&text)?;
        let stats = ast.stats();
        let stack_count = build_lattice(&ast).len();
        for &cap in &plan.list_sizes {
            let capped = idx.truncated(cap);
            let warm = evaluate_detailed(&ast, &capped);
            let start = Instant::now();
            for _ in 0..plan.repetitions {
                std::hint::black_box(evaluate_detailed(&ast, &capped));
            }
            let millis = start.elapsed().as_secs_f64() * 1000.0 / plan.repetitions as f64;
            rows.push(BenchRow {
                pattern: pattern.clone(),
                keywords: stats.keywords,
                terms: stats.terms,
                max_cardinality: stats.max_cardinality,
                instances: warm.stats.postings,
                millis,
                stack_count,
                push_count: warm.stats.push_count,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_bench(
    idx: &InvertedIndex,
    plan: &BenchPlan,
    out: &mut impl Write,
) -> Result<Vec<BenchRow>, CliError> {
    let rows = bench(idx, plan)?;
    writeln!(out, "{BENCH_HEADER}")?;
    for r in &rows {
        writeln!(out, "{}", r.csv())?;
    }
    Ok(rows)
}

fn tab_lines(text: &str) -> impl Iterator<Item = (usize, &str, &str)> {
    text.lines().enumerate().filter_map(|(n, line)| {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            return None;
        }
        let (id, rest) = line.split_once('\t').unwrap_or((line, ""));
        Some((n + 1, id.trim(), rest.trim()))
    })
}

/// Effectiveness of cohesive top-size, SLCA and ELCA results.
///
/// `queries` holds `qid TAB query` lines and `relevance` holds
/// `qid TAB dewey dewey ...` lines. Queries without a relevance line have an
/// empty relevant set.
pub fn cmd_eval(
    idx: &InvertedIndex,
    queries: &str,
    relevance: &str,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let mut parsed: Vec<(&str, &str, QueryAst)> = Vec::new();
    for (line, id, text) in tab_lines(queries) {
        let ast =
            parse_query(text).map_err(|e| CliError::Input(format!("queries line {line}: {e}")))?;
        parsed.push((id, text, ast));
    }
    let mut relevant: BTreeMap<&str, BTreeSet<Dewey>> = BTreeMap::new();
    for (line, id, nodes) in tab_lines(relevance) {
        if !parsed.iter().any(|(q, _, _)| *q == id) {
            return Err(CliError::Input(format!(
                "relevance line {line}: unknown query id {id:?}"
            )));
        }
        let set = nodes
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<BTreeSet<Dewey>, DeweyParseError>>()
            .map_err(|e| CliError::Input(format!("relevance line {line}: {e}")))?;
        relevant.entry(id).or_default().extend(set);
    }
    writeln!(out, "{CSV_HEADER}")?;
    let none = BTreeSet::new();
    for (id, text, ast) in &parsed {
        let rel = relevant.get(id).unwrap_or(&none);
        for semantics in [Semantics::Cohesive, Semantics::Slca, Semantics::Elca] {
            let mut results = run_query(idx, ast, semantics);
            if semantics == Semantics::Cohesive {
                results = top_size_filter(&results);
            }
            let retrieved: BTreeSet<Dewey> = results.into_iter().map(|r| r.node).collect();
            let report = evaluate_effectiveness(&retrieved, rel);
            writeln!(out, "{}", csv_row(semantics.name(), text, &report))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(xml: &str) -> InvertedIndex {
        build_index(parse_document(xml).unwrap())
    }

    fn text(f: impl FnOnce(&mut Vec<u8>)) -> String {
        let mut buf = Vec::new();
        f(&mut buf);
        String::from_utf8(buf).unwrap()
    }

    const TWO_LEAF: &str = "<r><x><a/><b/></x><a/></r>";

    #[test]
    fn query_tsv() {
        let i = idx(TWO_LEAF);
        let opts = QueryOptions {
            tsv: true,
            ..QueryOptions::default()
        };
        let s = text(|b| {
            cmd_query(&i, "(a b)", &opts, b).unwrap();
        });
        assert_eq!(s, "0\t2\tr/x\nε\t3\tr\n");
        let top = QueryOptions {
            top_size: true,
            ..opts
        };
        let s = text(|b| {
            cmd_query(&i, "(a b)", &top, b).unwrap();
        });
        assert_eq!(s, "0\t2\tr/x\n");
    }

    #[test]
    fn query_errors_and_notes() {
        let i = idx(TWO_LEAF);
        let err = cmd_query(&i, "(()", &QueryOptions::default(), &mut Vec::new()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let s = text(|b| {
            cmd_query(&i, "(a zzz)", &QueryOptions::default(), b).unwrap();
        });
        assert!(s.contains("not in index: zzz"), "{s}");
    }

    #[test]
    fn baseline_semantics() {
        let i = idx("<r><a/><b/><x><a/><b/></x></r>");
        let ast = parse_query("(a b)").unwrap();
        let nodes = |s| {
            run_query(&i, &ast, s)
                .into_iter()
                .map(|r| r.node.to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(nodes(Semantics::Slca), ["2"]);
        assert_eq!(nodes(Semantics::Elca), ["ε", "2"]);
    }

    #[test]
    fn repl_loop() {
        let i = idx(TWO_LEAF);
        let opts = QueryOptions {
            tsv: true,
            ..QueryOptions::default()
        };
        let input = "(a b)\n(()\n:quit\n(a)\n";
        let s = text(|b| repl(&i, &opts, input.as_bytes(), b).unwrap());
        assert!(s.contains("0\t2\tr/x"));
        assert!(s.contains("syntax error"));
        assert!(!s.contains("1\t0"), "input after :quit is ignored");
    }

    #[test]
    fn oracle_command() {
        let i = idx(TWO_LEAF);
        let s = text(|b| assert!(cmd_oracle(&i, "(a b)", b).unwrap()));
        assert!(s.ends_with("match\n"));
        let s = text(|b| assert!(cmd_oracle_random(20, 3, b).unwrap()));
        assert!(s.contains("20 instance(s), 0 mismatch(es)"));
    }

    #[test]
    fn eval_command() {
        let i = idx(TWO_LEAF);
        let s = text(|b| cmd_eval(&i, "q1\t(a b)\n", "q1\t0\n", b).unwrap());
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "cohesive,\"(a b)\",1.0000,1.0000,1.0000,1,1");
        let err = cmd_eval(&i, "q1\t(a b)\n", "q2\t0\n", &mut Vec::new()).unwrap_err();
        assert!(err.to_string().contains("unknown query id"));
    }

    #[test]
    fn bench_rows() {
        let i = idx("<r><p>a b</p><p>a b c</p><p>c</p></r>");
        let plan = BenchPlan {
            patterns: vec!["(x (x x))".into()],
            list_sizes: vec![1, 2],
            repetitions: 1,
        };
        let rows = bench(&i, &plan).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(
            rows[0].stack_count,
            build_lattice(&parse_query("(p (a b))").unwrap()).len()
        );
        assert_eq!(
            (rows[0].keywords, rows[0].terms, rows[0].max_cardinality),
            (3, 1, 2)
        );
        let bad = BenchPlan {
            list_sizes: vec![2, 2],
            ..plan
        };
        assert!(bench(&i, &bad).is_err());
    }
}
