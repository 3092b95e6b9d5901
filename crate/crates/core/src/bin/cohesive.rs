use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cohesive_lca::build_index;
use cohesive_lca::cli::{self, BenchPlan, CliError, QueryOptions, Semantics};
use cohesive_lca::synth::ZipfCorpus;

/// Cohesive keyword search over XML documents.
#[derive(Parser)]
#[command(name = "cohesive", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an XML document and write its keyword index.
    Index {
        xml: PathBuf,
        /// Output file; defaults to the input name with extension .clidx,
        /// placed in $COHESIVE_INDEX_DIR when set.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a query; without a query, read queries from stdin.
    Query {
        /// Index file or XML document.
        index: PathBuf,
        query: Option<String>,
        #[arg(long)]
        limit: Option<usize>,
        /// Keep only the results of minimal size.
        #[arg(long)]
        top_size: bool,
        #[arg(long, value_enum, default_value_t = Semantics::Cohesive)]
        semantics: Semantics,
        /// Print `dewey TAB size TAB label-path` lines.
        #[arg(long)]
        tsv: bool,
    },
    /// Compare the engine against brute-force enumeration.
    Oracle {
        /// Index file or XML document.
        #[arg(required_unless_present = "random")]
        index: Option<PathBuf>,
        #[arg(required_unless_present = "random")]
        query: Option<String>,
        /// Check this many seeded random instances instead.
        #[arg(long, conflicts_with_all = ["index", "query"])]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time query patterns over growing posting-list caps; prints CSV.
    Bench {
        /// Index file or XML document; omit with --synthetic.
        #[arg(required_unless_present = "synthetic")]
        index: Option<PathBuf>,
        /// Use a seeded Zipf corpus with this many records.
        #[arg(long, conflicts_with = "index")]
        synthetic: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Query patterns; every `x` becomes a frequent keyword.
        #[arg(long = "pattern", default_values_t = ["(x x ((x x x x) (x x x x)))".to_string()])]
        patterns: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = (1..=10).map(|i| i * 100).collect::<Vec<usize>>())]
        caps: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
    },
    /// Precision, recall and F-measure per semantics; prints CSV.
    Eval {
        index: PathBuf,
        /// Lines of `qid TAB query`.
        queries: PathBuf,
        /// Lines of `qid TAB dewey dewey ...`.
        relevance: PathBuf,
    },
}

fn run(args: Args, out: &mut impl Write) -> Result<ExitCode, CliError> {
    match args.command {
        Command::Index { xml, out: path } => {
            let path = path.unwrap_or_else(|| cli::default_index_path(&xml));
            cli::cmd_index(&xml, &path, out)?;
        }
        Command::Query {
            index,
            query,
            limit,
            top_size,
            semantics,
            tsv,
        } => {
            let idx = cli::open_index(&index)?;
            let opts = QueryOptions {
                limit,
                top_size,
                semantics,
                tsv,
            };
            match query {
                Some(q) => {
                    cli::cmd_query(&idx, &q, &opts, out)?;
                }
                None => cli::repl(&idx, &opts, io::stdin().lock(), out)?,
            }
        }
        Command::Oracle {
            index,
            query,
            random,
            seed,
        } => {
            let agree = match (random, index, query) {
                (Some(n), _, _) => cli::cmd_oracle_random(n, seed, out)?,
                (None, Some(index), Some(query)) => {
                    cli::cmd_oracle(&cli::open_index(&index)?, &query, out)?
                }
                _ => {
                    return Err(CliError::Usage(
                        "oracle needs an index and a query, or --random".into(),
                    ))
                }
            };
            if !agree {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Bench {
            index,
            synthetic,
            seed,
            patterns,
            caps,
            repetitions,
        } => {
            let idx = match (synthetic, index) {
                (Some(records), _) => build_index(
                    ZipfCorpus {
                        records,
                        seed,
                        ..ZipfCorpus::default()
                    }
                    .build(),
                ),
                (None, Some(index)) => cli::open_index(&index)?,
                (None, None) => {
                    return Err(CliError::Usage(
                        "bench needs an index or --synthetic".into(),
                    ))
                }
            };
            let plan = BenchPlan {
                patterns,
                list_sizes: caps,
                repetitions,
            };
            cli::cmd_bench(&idx, &plan, out)?;
        }
        Command::Eval {
            index,
            queries,
            relevance,
        } => {
            let idx = cli::open_index(&index)?;
            let read = |p: &PathBuf| {
                std::fs::read_to_string(p).map_err(|source| CliError::File {
                    path: p.clone(),
                    source,
                })
            };
            cli::cmd_eval(&idx, &read(&queries)?, &read(&relevance)?, out)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut out = BufWriter::new(io::stdout().lock());
    let code = match run(args, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    };
    let _ = out.flush();
    code
}
