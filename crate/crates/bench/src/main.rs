use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wfst::ComposeOptions;
use wfst_bench::{
    bench_lexicon, bench_rand_arcs, bench_rand_nodes, cmd_compose, default_workers, write_csv, Algo, BenchError,
    LexiconBench, LexiconSource, RandArcs, RandNodes, RunConfig,
};

/// Compose weighted transducers and benchmark the sequential and parallel
/// engines.
#[derive(Parser, Debug)]
#[command(name = "wfst", version)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for the parallel engine [default: available cores]
    #[arg(long, global = true, env = "WFST_WORKERS")]
    workers: Option<usize>,

    /// Write benchmark records to this CSV file
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    /// Trials per point [default: 5, and 2 for the largest point]
    #[arg(long, global = true)]
    trials: Option<usize>,

    #[arg(long, global = true, value_delimiter = ',', default_value = "seq,par")]
    algos: Vec<Algo>,

    /// Check that seq and par outputs are equivalent
    #[arg(long, global = true)]
    verify: bool,

    #[arg(long, global = true, value_enum, default_value_t = Switch::On)]
    epsilon_filter: Switch,

    #[arg(long, global = true)]
    no_trim: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compose two graph files in text format
    Compose {
        a: PathBuf,
        b: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value = "seq")]
        algo: Algo,
    },
    #[command(subcommand)]
    Bench(Bench),
}

#[derive(Subcommand, Debug)]
enum Bench {
    /// Random graphs with node counts doubling
    RandNodes {
        #[arg(long, default_value_t = 256)]
        min_nodes: usize,
        #[arg(long, default_value_t = 8192)]
        max_nodes: usize,
        #[arg(long, default_value_t = 5)]
        degree: usize,
        #[arg(long, default_value_t = 10)]
        tokens: usize,
    },
    /// Random graphs with out-degree doubling and tokens = 2 * degree
    RandArcs {
        #[arg(long, default_value_t = 256)]
        nodes: usize,
        #[arg(long, default_value_t = 4)]
        min_degree: usize,
        #[arg(long, default_value_t = 64)]
        max_degree: usize,
    },
    /// Emissions graph composed with the closure of a sampled lexicon
    Lexicon {
        #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000,8000,16000")]
        words: Vec<usize>,
        #[arg(long, default_value_t = 250)]
        frames: usize,
        #[arg(long, default_value_t = 69)]
        phonemes: usize,
        /// Size of the synthetic master lexicon
        #[arg(long, default_value_t = 200_000)]
        lexicon_size: usize,
        #[arg(long, default_value_t = 3)]
        min_len: usize,
        #[arg(long, default_value_t = 10)]
        max_len: usize,
        /// Load the master lexicon from a "word phoneme ..." file instead
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let c = cli.common;
    let workers = c.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(BenchError::Usage("--workers must be at least 1".into()));
    }
    let opts = ComposeOptions {
        epsilon_filter: matches!(c.epsilon_filter, Switch::On),
        trim: !c.no_trim,
    };
    let cfg = RunConfig {
        algos: c.algos,
        workers,
        trials: c.trials,
        seed: c.seed,
        verify: c.verify,
        opts,
    };
    let bench = match cli.command {
        Command::Compose { a, b, output, algo } => {
            let s = cmd_compose(&a, &b, &output, algo, opts, workers, c.verify)?;
            eprintln!("nodes {} arcs {} seconds {:.6}", s.nodes, s.arcs, s.seconds);
            return Ok(());
        }
        Command::Bench(bench) => bench,
    };
    let records = match bench {
        Bench::RandNodes {
            min_nodes,
            max_nodes,
            degree,
            tokens,
        } => bench_rand_nodes(
            &RandNodes {
                min_nodes,
                max_nodes,
                degree,
                tokens,
            },
            &cfg,
        )?,
        Bench::RandArcs {
            nodes,
            min_degree,
            max_degree,
        } => bench_rand_arcs(
            &RandArcs {
                nodes,
                min_degree,
                max_degree,
            },
            &cfg,
        )?,
        Bench::Lexicon {
            words,
            frames,
            phonemes,
            lexicon_size,
            min_len,
            max_len,
            lexicon,
        } => {
            let source = match lexicon {
                Some(path) => LexiconSource::File(path),
                None => LexiconSource::Synthetic {
                    words: lexicon_size,
                    phonemes,
                    min_len,
                    max_len,
                },
            };
            bench_lexicon(
                &LexiconBench {
                    word_counts: words,
                    frames,
                    source,
                },
                &cfg,
            )?
        }
    };
    match c.csv {
        Some(path) => write_csv(&records, std::fs::File::create(path)?)?,
        None => write_csv(&records, std::io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
