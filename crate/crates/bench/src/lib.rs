//! Benchmark protocols and the `compose` command behind the `wfst` binary.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use wfst::gen::{
    derive_seed, emissions_graph, lexicon_graph, load_lexicon, random_graph, synthetic_lexicon, EmissionScores, Lexicon,
};
use wfst::oracle::graphs_equivalent;
use wfst::{closure, compose_parallel, compose_sequential, is_trim, ComposeOptions, ComposedGraph, Graph};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Graph(#[from] wfst::Error),
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BenchError {
    /// 2 for resource-cap breaches, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Graph(wfst::Error::ResourceLimit(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Seq,
    Par,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Seq => "seq",
            Algo::Par => "par",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "seq" => Ok(Algo::Seq),
            "par" => Ok(Algo::Par),
            _ => Err(format!("unknown algorithm '{s}' (expected seq or par)")),
        }
    }
}

/// One timed composition. Counts that do not apply to a benchmark are 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub benchmark: &'static str,
    pub algorithm: &'static str,
    pub nodes_a: usize,
    pub nodes_b: usize,
    pub degree: usize,
    pub tokens: usize,
    pub words: usize,
    pub frames: usize,
    pub workers: usize,
    pub trial: usize,
    pub seconds: f64,
    pub composed_nodes: usize,
    pub composed_arcs: usize,
}

pub const CSV_HEADER: &str =
    "benchmark,algorithm,nodes_a,nodes_b,degree,tokens,words,frames,workers,trial,seconds,composed_nodes,composed_arcs";

pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Settings shared by every benchmark.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub algos: Vec<Algo>,
    pub workers: usize,
    /// `None` picks 5 trials per point and 2 for the largest.
    pub trials: Option<usize>,
    pub seed: u64,
    pub verify: bool,
    pub opts: ComposeOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algos: vec![Algo::Seq, Algo::Par],
            workers: default_workers(),
            trials: None,
            seed: 0,
            verify: false,
            opts: ComposeOptions::default(),
        }
    }
}

impl RunConfig {
    fn trials_at(&self, point: usize, num_points: usize) -> usize {
        match self.trials {
            Some(t) => t,
            None if point + 1 == num_points && num_points > 1 => 2,
            None => 5,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn compose_with(
    algo: Algo,
    a: &Graph,
    b: &Graph,
    opts: ComposeOptions,
    workers: usize,
) -> wfst::Result<ComposedGraph> {
    match algo {
        Algo::Seq => compose_sequential(a, b, opts),
        Algo::Par => compose_parallel(a, b, opts, workers),
    }
}

/// Composition wall time in seconds.
pub fn timed(
    algo: Algo,
    a: &Graph,
    b: &Graph,
    opts: ComposeOptions,
    workers: usize,
) -> wfst::Result<(ComposedGraph, f64)> {
    let t0 = Instant::now();
    let c = compose_with(algo, a, b, opts, workers)?;
    Ok((c, t0.elapsed().as_secs_f64()))
}

/// `start, 2*start, 4*start, ... <= end`; a zero start steps to 1.
pub fn doubling(start: usize, end: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut x = start;
    while x <= end {
        out.push(x);
        x = if x == 0 { 1 } else { x * 2 };
    }
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Mean seconds per `(x, algorithm)` in first-seen order.
pub fn mean_seconds(records: &[BenchRecord], x: impl Fn(&BenchRecord) -> usize) -> Vec<(usize, &'static str, f64)> {
    let mut groups: Vec<(usize, &'static str, f64, usize)> = Vec::new();
    for r in records {
        let key = (x(r), r.algorithm);
        match groups.iter_mut().find(|g| (g.0, g.1) == key) {
            Some(g) => {
                g.2 += r.seconds;
                g.3 += 1;
            }
            None => groups.push((key.0, key.1, r.seconds, 1)),
        }
    }
    groups.into_iter().map(|(x, a, s, n)| (x, a, s / n as f64)).collect()
}

/// Template for a point's records; `run_point` fills in per-run fields.
#[derive(Clone, Copy)]
struct Point {
    benchmark: &'static str,
    degree: usize,
    tokens: usize,
    words: usize,
    frames: usize,
}

/// Runs every configured algorithm on one pair of graphs, passing each
/// output to `check`. With `verify` all outputs must be equivalent, and
/// with `same_size` they must have equal node and arc counts.
fn run_point(
    cfg: &RunConfig,
    point: Point,
    trial: usize,
    (a, b): (&Graph, &Graph),
    same_size: bool,
    check: impl Fn(&BenchRecord, &ComposedGraph) -> Result<()>,
) -> Result<Vec<BenchRecord>> {
    let mut records: Vec<BenchRecord> = Vec::new();
    let mut first: Option<ComposedGraph> = None;
    for &algo in &cfg.algos {
        let workers = if algo == Algo::Seq { 1 } else { cfg.workers };
        let (c, seconds) = timed(algo, a, b, cfg.opts, workers)?;
        let record = BenchRecord {
            benchmark: point.benchmark,
            algorithm: algo.name(),
            nodes_a: a.num_nodes(),
            nodes_b: b.num_nodes(),
            degree: point.degree,
            tokens: point.tokens,
            words: point.words,
            frames: point.frames,
            workers,
            trial,
            seconds,
            composed_nodes: c.num_nodes(),
            composed_arcs: c.num_arcs(),
        };
        check(&record, &c)?;
        if let Some(r0) = records.first() {
            if same_size && (r0.composed_nodes, r0.composed_arcs) != (record.composed_nodes, record.composed_arcs) {
                return Err(BenchError::Verification(format!(
                    "{} gave ({}, {}) but {} gave ({}, {})",
                    r0.algorithm,
                    r0.composed_nodes,
                    r0.composed_arcs,
                    record.algorithm,
                    record.composed_nodes,
                    record.composed_arcs
                )));
            }
        }
        if cfg.verify {
            match &first {
                Some(c0) if !graphs_equivalent(c0, &c)? => {
                    return Err(BenchError::Verification(format!(
                        "{} and {} outputs differ (nodes_a={}, trial {trial})",
                        records[0].algorithm,
                        record.algorithm,
                        a.num_nodes()
                    )));
                }
                Some(_) => {}
                None => first = Some(c),
            }
        }
        records.push(record);
    }
    Ok(records)
}

fn no_check(_: &BenchRecord, _: &ComposedGraph) -> Result<()> {
    Ok(())
}

fn report_means(records: &[BenchRecord], label: &str, x: impl Fn(&BenchRecord) -> usize) {
    for (x, algo, mean) in mean_seconds(records, x) {
        eprintln!("{label}={x} {algo}: mean {mean:.6} s");
    }
}

/// Skips a point that breached a resource cap, after a warning.
fn skip_on_cap(result: Result<Vec<BenchRecord>>, what: &str) -> Result<Vec<BenchRecord>> {
    match result {
        Err(BenchError::Graph(wfst::Error::ResourceLimit(msg))) => {
            eprintln!("warning: skipping {what}: {msg}");
            Ok(Vec::new())
        }
        other => other,
    }
}

#[derive(Clone, Debug)]
pub struct RandNodes {
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub degree: usize,
    pub tokens: usize,
}

impl Default for RandNodes {
    fn default() -> Self {
        RandNodes {
            min_nodes: 256,
            max_nodes: 8192,
            degree: 5,
            tokens: 10,
        }
    }
}

/// Two independent random graphs per trial, node counts doubling.
pub fn bench_rand_nodes(p: &RandNodes, cfg: &RunConfig) -> Result<Vec<BenchRecord>> {
    if p.min_nodes < 2 || p.min_nodes > p.max_nodes {
        return Err(BenchError::Usage(format!(
            "need 2 <= min-nodes <= max-nodes (got {}, {})",
            p.min_nodes, p.max_nodes
        )));
    }
    let sizes = doubling(p.min_nodes, p.max_nodes);
    let mut records = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let point = Point {
            benchmark: "rand-nodes",
            degree: p.degree,
            tokens: p.tokens,
            words: 0,
            frames: 0,
        };
        let run = || -> Result<Vec<BenchRecord>> {
            let mut rows = Vec::new();
            for trial in 0..cfg.trials_at(i, sizes.len()) {
                let a = random_graph(
                    n,
                    p.degree,
                    p.tokens,
                    derive_seed(cfg.seed, &[0, n as u64, trial as u64, 0]),
                )?;
                let b = random_graph(
                    n,
                    p.degree,
                    p.tokens,
                    derive_seed(cfg.seed, &[0, n as u64, trial as u64, 1]),
                )?;
                rows.extend(run_point(cfg, point, trial, (&a, &b), false, no_check)?);
            }
            Ok(rows)
        };
        let rows = skip_on_cap(run(), &format!("nodes={n}"))?;
        report_means(&rows, "nodes", |r| r.nodes_a);
        records.extend(rows);
    }
    Ok(records)
}

#[derive(Clone, Debug)]
pub struct RandArcs {
    pub nodes: usize,
    pub min_degree: usize,
    pub max_degree: usize,
}

impl Default for RandArcs {
    fn default() -> Self {
        RandArcs {
            nodes: 256,
            min_degree: 4,
            max_degree: 64,
        }
    }
}

/// Fixed node count, degree doubling, tokens twice the degree (at least 1).
pub fn bench_rand_arcs(p: &RandArcs, cfg: &RunConfig) -> Result<Vec<BenchRecord>> {
    if p.nodes < 2 || p.min_degree > p.max_degree {
        return Err(BenchError::Usage(format!(
            "need nodes >= 2 and min-degree <= max-degree (got {}, {}, {})",
            p.nodes, p.min_degree, p.max_degree
        )));
    }
    let degrees = doubling(p.min_degree, p.max_degree);
    let mut records = Vec::new();
    for (i, &d) in degrees.iter().enumerate() {
        let tokens = (2 * d).max(1);
        let point = Point {
            benchmark: "rand-arcs",
            degree: d,
            tokens,
            words: 0,
            frames: 0,
        };
        let run = || -> Result<Vec<BenchRecord>> {
            let mut rows = Vec::new();
            for trial in 0..cfg.trials_at(i, degrees.len()) {
                let a = random_graph(
                    p.nodes,
                    d,
                    tokens,
                    derive_seed(cfg.seed, &[1, d as u64, trial as u64, 0]),
                )?;
                let b = random_graph(
                    p.nodes,
                    d,
                    tokens,
                    derive_seed(cfg.seed, &[1, d as u64, trial as u64, 1]),
                )?;
                rows.extend(run_point(cfg, point, trial, (&a, &b), false, no_check)?);
            }
            Ok(rows)
        };
        let rows = skip_on_cap(run(), &format!("degree={d}"))?;
        report_means(&rows, "degree", |r| r.degree);
        records.extend(rows);
    }
    Ok(records)
}

/// Where the master lexicon comes from.
#[derive(Clone, Debug)]
pub enum LexiconSource {
    Synthetic {
        words: usize,
        phonemes: usize,
        min_len: usize,
        max_len: usize,
    },
    File(std::path::PathBuf),
}

#[derive(Clone, Debug)]
pub struct LexiconBench {
    pub word_counts: Vec<usize>,
    pub frames: usize,
    pub source: LexiconSource,
}

impl Default for LexiconBench {
    fn default() -> Self {
        LexiconBench {
            word_counts: vec![1000, 2000, 4000, 8000, 16000],
            frames: 250,
            source: LexiconSource::Synthetic {
                words: 200_000,
                phonemes: 69,
                min_len: 3,
                max_len: 10,
            },
        }
    }
}

pub fn master_lexicon(source: &LexiconSource, seed: u64) -> Result<Lexicon> {
    Ok(match source {
        LexiconSource::Synthetic {
            words,
            phonemes,
            min_len,
            max_len,
        } => synthetic_lexicon(*words, *phonemes, *min_len, *max_len, derive_seed(seed, &[2]))?,
        LexiconSource::File(path) => load_lexicon(std::io::BufReader::new(std::fs::File::open(path)?), None)?,
    })
}

/// Per word count: sample a sub-lexicon, compose the emissions graph with
/// the closure of its lexicon graph, and check that every output is
/// non-empty and trim and that all algorithms agree on its size.
pub fn bench_lexicon(p: &LexiconBench, cfg: &RunConfig) -> Result<Vec<BenchRecord>> {
    if p.word_counts.windows(2).any(|w| w[0] > w[1]) {
        return Err(BenchError::Usage("word counts must be ascending".into()));
    }
    let master = master_lexicon(&p.source, cfg.seed)?;
    let emissions = emissions_graph(
        p.frames,
        master.phoneme_count,
        EmissionScores::Seeded(derive_seed(cfg.seed, &[3])),
    )?;
    eprintln!(
        "lexicon: {} words, {} phonemes; emissions: {} nodes, {} arcs",
        master.len(),
        master.phoneme_count,
        emissions.num_nodes(),
        emissions.num_arcs()
    );
    let mut records = Vec::new();
    for (i, &count) in p.word_counts.iter().enumerate() {
        let lex = master.sample(count, derive_seed(cfg.seed, &[4, count as u64]))?;
        let graph = closure(&lexicon_graph(&lex));
        let point = Point {
            benchmark: "lexicon",
            degree: 0,
            tokens: 0,
            words: count,
            frames: p.frames,
        };
        let run = || -> Result<Vec<BenchRecord>> {
            let mut rows = Vec::new();
            for trial in 0..cfg.trials_at(i, p.word_counts.len()) {
                rows.extend(run_point(cfg, point, trial, (&emissions, &graph), true, |r, c| {
                    if c.num_nodes() == 0 || !is_trim(&c.graph) {
                        return Err(BenchError::Verification(format!(
                            "{} output for {count} words is empty or not trim",
                            r.algorithm
                        )));
                    }
                    Ok(())
                })?);
            }
            Ok(rows)
        };
        let rows = skip_on_cap(run(), &format!("words={count}"))?;
        report_means(&rows, "words", |r| r.words);
        records.extend(rows);
    }
    Ok(records)
}

/// Summary of a `compose` run.
#[derive(Clone, Debug)]
pub struct ComposeSummary {
    pub nodes: usize,
    pub arcs: usize,
    pub seconds: f64,
}

/// Composes two text-format graph files and writes the result as text.
/// With `verify`, also runs the other algorithm and checks equivalence.
pub fn cmd_compose(
    file_a: &Path,
    file_b: &Path,
    out: &Path,
    algo: Algo,
    opts: ComposeOptions,
    workers: usize,
    verify: bool,
) -> Result<ComposeSummary> {
    let read = |p: &Path| -> Result<Graph> {
        let f = std::fs::File::open(p).map_err(|e| BenchError::Usage(format!("{}: {e}", p.display())))?;
        wfst::read_text(std::io::BufReader::new(f)).map_err(|e| match e {
            wfst::Error::Parse { .. } => BenchError::Usage(format!("{}: {e}", p.display())),
            e => e.into(),
        })
    };
    let a = read(file_a)?;
    let b = read(file_b)?;
    let (c, seconds) = timed(algo, &a, &b, opts, workers)?;
    if verify {
        let other = match algo {
            Algo::Seq => Algo::Par,
            Algo::Par => Algo::Seq,
        };
        let d = compose_with(other, &a, &b, opts, workers)?;
        if !graphs_equivalent(&c, &d)? {
            return Err(BenchError::Verification(format!("{algo} and {other} outputs differ")));
        }
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(out)?);
    wfst::write_text(&c.graph, &mut w)?;
    w.flush()?;
    Ok(ComposeSummary {
        nodes: c.num_nodes(),
        arcs: c.num_arcs(),
        seconds,
    })
}
