use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn cohesive() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cohesive"));
    cmd.env_remove("COHESIVE_INDEX_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    cohesive().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn query_tsv_on_xml_input() {
    let xml = fixture("two_leaf.xml");
    let o = run(&["query", path_str(&xml), "(a b)", "--tsv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0\t2\tr/x\nε\t3\tr\n");

    let o = run(&["query", path_str(&xml), "a b", "--tsv", "--top-size"]);
    assert_eq!(stdout(&o), "0\t2\tr/x\n");
}

#[test]
fn query_on_golden_index() {
    let o = run(&[
        "query",
        path_str(&fixture("bib.clidx")),
        "(XML keyword search (Paul Cooper) (Mary Davis))",
        "--tsv",
        "--limit",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let nodes: Vec<String> = stdout(&o)
        .lines()
        .map(|l| l.split('\t').take(2).collect::<Vec<_>>().join(" "))
        .collect();
    assert_eq!(nodes, ["0.1 3", "1.1 6"]);
}

#[test]
fn exit_codes() {
    let o = run(&[
        "index",
        path_str(&fixture("malformed.xml")),
        "-o",
        "/dev/null",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = run(&["query", path_str(&fixture("two_leaf.xml")), "(()"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["query", "/nonexistent/file.clidx", "(a b)"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["bench", "--synthetic", "10", "--caps", "5,3"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["query"]);
    assert_eq!(o.status.code(), Some(2), "clap usage errors exit with 2");
}

#[test]
fn index_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.clidx");
    let second = dir.path().join("second.clidx");
    for out in [&first, &second] {
        let o = run(&[
            "index",
            path_str(&fixture("catalog.xml")),
            "-o",
            path_str(out),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("nodes\t"));
    }
    let bytes = std::fs::read(&first).unwrap();
    assert_eq!(bytes, std::fs::read(&second).unwrap());
    assert_eq!(bytes, std::fs::read(fixture("catalog.clidx")).unwrap());
}

#[test]
fn index_dir_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let o = cohesive()
        .env("COHESIVE_INDEX_DIR", dir.path())
        .args(["index", path_str(&fixture("two_leaf.xml"))])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("two_leaf.clidx").exists());

    let o = cohesive()
        .env("COHESIVE_INDEX_DIR", dir.path())
        .args(["query", "two_leaf.clidx", "(a b)", "--tsv"])
        .output()
        .unwrap();
    assert_eq!(stdout(&o), "0\t2\tr/x\nε\t3\tr\n");
}

#[test]
fn repl_keeps_going_after_errors() {
    let mut child = cohesive()
        .args(["query", path_str(&fixture("two_leaf.xml")), "--tsv"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"(a\n(a b)\n:quit\n(a)\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("query syntax error"), "{s}");
    assert!(s.contains("0\t2\tr/x\n"), "{s}");
    assert!(!s.contains("ε\t0"), "input after :quit is ignored: {s}");
}

#[test]
fn oracle_subcommand() {
    let o = run(&[
        "oracle",
        path_str(&fixture("bib.xml")),
        "(xml (paul cooper) (mary davis))",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("match\n"));

    let o = run(&["oracle", "--random", "25", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn bench_synthetic_is_deterministic_apart_from_timing() {
    let args = [
        "bench",
        "--synthetic",
        "200",
        "--pattern",
        "(x (x x))",
        "--caps",
        "10,20",
        "--repetitions",
        "1",
    ];
    let strip = |o: Output| -> Vec<String> {
        stdout(&o)
            .lines()
            .map(|l| {
                let mut cols: Vec<&str> = l.split(',').collect();
                cols.remove(5);
                cols.join(",")
            })
            .collect()
    };
    let first = strip(run(&args));
    assert_eq!(first[0], "pattern,k,t,c,instances,stackCount,pushCount");
    assert_eq!(first.len(), 3);
    assert_eq!(first, strip(run(&args)));
}

#[test]
fn eval_subcommand() {
    let o = run(&[
        "eval",
        path_str(&fixture("citations.clidx")),
        path_str(&fixture("citations.queries")),
        path_str(&fixture("citations.relevance")),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(rows[0], "semantics,query,P,R,F,retrieved,relevant");
    assert!(
        rows[1].starts_with("cohesive,") && rows[1].contains("1.0000,1.0000,1.0000"),
        "{rows:?}"
    );
    assert!(
        rows[2].starts_with("slca,") && rows[2].contains("0.0000,0.0000,0.0000"),
        "{rows:?}"
    );
}
