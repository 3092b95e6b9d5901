//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cohesive_lca::cli::cmd_eval;
use cohesive_lca::engine::{evaluate, evaluate_detailed, ResultEntry};
use cohesive_lca::ingest::{
    build_index, node_tokens, parse_document, read_index, write_index, InvertedIndex,
};
use cohesive_lca::lattice::{bell, build_lattice};
use cohesive_lca::metrics::top_size_filter;
use cohesive_lca::oracle::{all_lcas, elca, oracle_answer, slca};
use cohesive_lca::query::{parse_query, QueryAst};
use cohesive_lca::synth::{
    instantiate_pattern, random_query, random_tree, rng, template_corpus, TreeParams,
};
use cohesive_lca::tree_model::{DataTree, Dewey};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn lattice_cardinalities() -> Outcome {
    let start = Instant::now();
    let cases = [
        ("(XML Query John Smith)", 15),
        ("(XML Query (John Smith))", 7),
        ("((XML Query) (John Smith))", 3),
        ("((XML Keyword Search) (Paul Cooper) (Mary Davis))", 9),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (q, want) in cases {
        let got = build_lattice(&parse_query(q).unwrap()).len();
        pass &= got == want;
        details.push(format!("{got}/{want}"));
    }
    let b7 = bell(7).unwrap();
    pass &= b7 == 877;
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(1);
    outcome(
        pass,
        format!("stacks {} bell(7)={b7} in {elapsed:?}", details.join(" ")),
    )
}

struct Instance {
    ast: QueryAst,
    text: String,
    idx: InvertedIndex,
    engine: Vec<ResultEntry>,
}

fn random_suite(count: u64) -> Vec<Instance> {
    let params = TreeParams::default();
    (0..count)
        .map(|seed| {
            let mut r = rng(seed);
            let tree = random_tree(&mut r, &params);
            let text = random_query(&mut r, &params.words, 5, 2, 2);
            let ast = parse_query(&text).unwrap();
            let idx = build_index(tree);
            let engine = evaluate(&ast, &idx);
            Instance {
                ast,
                text,
                idx,
                engine,
            }
        })
        .collect()
}

// Some node holds every occurrence of some proper term.
fn has_single_node_term(ast: &QueryAst, tree: &DataTree) -> bool {
    ast.proper_terms().any(|t| {
        let mask = ast.occurrence_mask(t.id);
        let mut need: BTreeMap<&str, u32> = BTreeMap::new();
        for o in ast.occurrences().iter().filter(|o| mask >> o.id.0 & 1 == 1) {
            *need.entry(o.keyword.as_str()).or_default() += 1;
        }
        tree.nodes().iter().any(|n| {
            let tokens = node_tokens(n);
            need.iter()
                .all(|(k, m)| tokens.get(*k).copied().unwrap_or(0) >= *m)
        })
    })
}

fn oracle_equivalence(suite: &[Instance], engine_time: Duration) -> Outcome {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    let (mut repeated, mut single_node) = (0, 0);
    for inst in suite {
        let want: BTreeSet<(Dewey, usize)> = oracle_answer(&inst.ast, inst.idx.tree())
            .unwrap()
            .into_iter()
            .collect();
        let got: BTreeSet<(Dewey, usize)> = inst
            .engine
            .iter()
            .map(|r| (r.node.clone(), r.size))
            .collect();
        if got != want {
            mismatches.push(inst.text.clone());
        }
        if inst.ast.distinct_keywords().len() < inst.ast.len() {
            repeated += 1;
        }
        if has_single_node_term(&inst.ast, inst.idx.tree()) {
            single_node += 1;
        }
    }
    let elapsed = engine_time + start.elapsed();
    let pass = mismatches.is_empty()
        && repeated > 0
        && single_node > 0
        && elapsed < Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "{}/{} match, {repeated} with repeated keywords, {single_node} with single-node term candidates, {elapsed:?}{}",
            suite.len() - mismatches.len(),
            suite.len(),
            mismatches.first().map(|q| format!(", first mismatch {q}")).unwrap_or_default()
        ),
    )
}

fn flat_containment(suite: &[Instance]) -> Outcome {
    let mut bad = 0;
    for inst in suite {
        let flat: BTreeSet<Dewey> = oracle_answer(&inst.ast.flattened(), inst.idx.tree())
            .unwrap()
            .into_keys()
            .collect();
        let kws = inst.ast.distinct_keywords();
        let (s, e, a) = (
            slca(&kws, &inst.idx),
            elca(&kws, &inst.idx),
            all_lcas(&kws, &inst.idx),
        );
        let ok = inst.engine.iter().all(|r| flat.contains(&r.node))
            && s.is_subset(&e)
            && e.is_subset(&a);
        if !ok {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!("{}/{} instances contained", suite.len() - bad, suite.len()),
    )
}

fn ranking_contract(suite: &[Instance]) -> Outcome {
    let ordered = suite.iter().all(|inst| {
        inst.engine
            .windows(2)
            .all(|w| w[0].size < w[1].size || (w[0].size == w[1].size && w[0].node < w[1].node))
    });
    let idx = build_index(parse_document(&fixture("bib.xml")).unwrap());
    let results = evaluate(
        &parse_query("(XML keyword search (Paul Cooper) (Mary Davis))").unwrap(),
        &idx,
    );
    let head: Vec<(String, usize)> = results
        .iter()
        .take(2)
        .map(|r| (r.node.to_string(), r.size))
        .collect();
    let example = head == [("0.1".to_string(), 3), ("1.1".to_string(), 6)];
    outcome(
        ordered && example,
        format!("random suite ordered: {ordered}; article results {head:?}"),
    )
}

fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

const KEYWORDS: [&str; 10] = ["k0", "k1", "k2", "k3", "k4", "k5", "k6", "k7", "k8", "k9"];

fn scaling_trend(corpus: &InvertedIndex) -> Outcome {
    let ast = parse_query(&instantiate_pattern("(x x ((x x x x) (x x x x)))", &KEYWORDS).unwrap())
        .unwrap();
    let (mut xs, mut times, mut pushes) = (Vec::new(), Vec::new(), Vec::new());
    for cap in (100..=1000).step_by(100) {
        let capped = corpus.truncated(cap);
        let warm = evaluate_detailed(&ast, &capped);
        let mut runs: Vec<f64> = (0..5)
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(evaluate_detailed(&ast, &capped));
                t.elapsed().as_secs_f64() * 1000.0
            })
            .collect();
        runs.sort_by(f64::total_cmp);
        xs.push(warm.stats.postings as f64);
        times.push(runs[2]);
        pushes.push(warm.stats.push_count as i64);
    }
    let r2 = r_squared(&xs, &times);
    let second: Vec<i64> = pushes.windows(3).map(|w| w[2] - 2 * w[1] + w[0]).collect();
    let exact = second.iter().all(|&d| d == 0) && pushes[1] > pushes[0];
    outcome(
        r2 >= 0.9 && exact,
        format!(
            "time R²={r2:.4} over {}..{} instances; push count {}..{} step {}, second differences {:?}",
            xs[0],
            xs[xs.len() - 1],
            pushes[0],
            pushes[pushes.len() - 1],
            pushes[1] - pushes[0],
            second
        ),
    )
}

fn cardinality_sensitivity(corpus: &InvertedIndex) -> Outcome {
    let patterns = [
        (4, "((x x x x) (x x x) (x x x))"),
        (5, "((x x x x x) (x x x) (x x))"),
        (6, "((x x x x x x) (x x x x))"),
        (7, "((x x x x x x x) (x x x))"),
    ];
    let capped = corpus.truncated(300);
    let mut pass = true;
    let mut details = Vec::new();
    let mut last = 0u64;
    for (c, p) in patterns {
        let ast = parse_query(&instantiate_pattern(p, &KEYWORDS).unwrap()).unwrap();
        let lattice = build_lattice(&ast);
        let largest = lattice
            .component_sizes()
            .into_iter()
            .map(|(_, n)| n)
            .max()
            .unwrap() as u64;
        let stats = evaluate_detailed(&ast, &capped).stats;
        pass &= ast.stats().max_cardinality == c
            && largest == bell(c).unwrap()
            && stats.push_count > last;
        details.push(format!(
            "c={c}: pushes {} sublattice {largest}",
            stats.push_count
        ));
        last = stats.push_count;
    }
    outcome(
        pass,
        format!("{} at {} instances", details.join(", "), 300 * 10),
    )
}

fn slca_zero_fixture() -> Outcome {
    let xml = fixture("citations.xml");
    let idx = build_index(parse_document(&xml).unwrap());
    let queries = fixture("citations.queries");
    let relevance = fixture("citations.relevance");

    // the judged nodes are exactly the oracle's smallest results
    let ast = parse_query("((john smith) (mary jones))").unwrap();
    let oracle = oracle_answer(&ast, idx.tree()).unwrap();
    let min = oracle.values().min().copied();
    let oracle_top: BTreeSet<String> = oracle
        .iter()
        .filter(|(_, s)| Some(**s) == min)
        .map(|(d, _)| d.to_string())
        .collect();
    let judged: BTreeSet<String> = relevance
        .split('\t')
        .nth(1)
        .unwrap()
        .split_whitespace()
        .map(String::from)
        .collect();
    let engine_top: BTreeSet<String> = top_size_filter(&evaluate(&ast, &idx))
        .into_iter()
        .map(|r| r.node.to_string())
        .collect();

    let mut csv = Vec::new();
    cmd_eval(&idx, &queries, &relevance, &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    let row = |sem: &str| {
        csv.lines()
            .find(|l| l.starts_with(sem))
            .unwrap_or("")
            .to_string()
    };
    let slca_row = row("slca,");
    let cohesive_row = row("cohesive,");
    let pass = oracle_top == judged
        && engine_top == judged
        && slca_row.contains(",0.0000,0.0000,0.0000,")
        && cohesive_row.contains(",1.0000,1.0000,1.0000,");
    outcome(
        pass,
        format!("{slca_row} | {cohesive_row} | elca: {}", row("elca,")),
    )
}

fn index_roundtrip() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for name in ["bib", "catalog", "citations"] {
        let xml = fixture(&format!("{name}.xml"));
        let a = build_index(parse_document(&xml).unwrap());
        let b = build_index(parse_document(&xml).unwrap());
        let (bytes_a, bytes_b) = (write_index(&a), write_index(&b));
        let golden = std::fs::read(
            Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("tests/fixtures/{name}.clidx")),
        )
        .unwrap();
        let back = read_index(&bytes_a).unwrap();
        let ok =
            bytes_a == bytes_b && bytes_a == golden && back == a && write_index(&back) == bytes_a;
        pass &= ok;
        details.push(format!(
            "{name} {}B {}",
            bytes_a.len(),
            if ok { "ok" } else { "differs" }
        ));
    }
    outcome(pass, details.join(", "))
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1 lattice cardinalities", lattice_cardinalities()));

    let start = Instant::now();
    let suite = random_suite(1200);
    let engine_time = start.elapsed();
    results.push((
        "2 oracle equivalence",
        oracle_equivalence(&suite, engine_time),
    ));
    results.push(("3 flat-semantics containment", flat_containment(&suite)));
    results.push(("4 ranking contract", ranking_contract(&suite)));

    let corpus = build_index(template_corpus(&KEYWORDS, 1000));
    results.push(("5 scaling trend", scaling_trend(&corpus)));
    results.push((
        "6 term-cardinality sensitivity",
        cardinality_sensitivity(&corpus),
    ));
    results.push((
        "7 SLCA zero precision and recall fixture",
        slca_zero_fixture(),
    ));
    results.push(("8 index round-trip", index_roundtrip()));

    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "criterion {name}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
