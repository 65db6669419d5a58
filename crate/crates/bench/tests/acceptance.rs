//! Acceptance criteria 1-9. Each test prints one `criterion N: PASS|FAIL`
//! line. Timing-sensitive criteria hold a lock so they never overlap.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use wfst::compose::ComposedGraph;
use wfst::gen::{derive_seed, random_dag, random_graph, randomize_weights, SplitMix64};
use wfst::oracle::{
    bruteforce_compose_score, graphs_equivalent, matched_pair_counts, path_counts, scores_close, transduce_score,
};
use wfst::{build_graph, canonicalize, compose_parallel, compose_sequential, to_text, Arc, ComposeOptions, Graph};
use wfst_bench::{
    bench_lexicon, bench_rand_nodes, default_workers, loglog_slope, mean_seconds, Algo, LexiconBench, LexiconSource,
    RandNodes, RunConfig,
};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

/// Trim violations: nodes not both accessible and co-accessible.
fn trim_violations(c: &ComposedGraph) -> usize {
    let fwd = wfst::accessible(&c.graph);
    let bwd = wfst::coaccessible(&c.graph);
    fwd.iter().zip(&bwd).filter(|(&f, &b)| !(f && b)).count()
}

/// Random small DAG pair with weights in [-1, 1).
fn small_dag_pair(seed: u64, eps_prob: f64) -> (Graph, Graph) {
    let mut rng = SplitMix64::new(seed);
    let mut one = |side: u64| {
        let n = 2 + rng.below(7) as usize;
        let d = 1 + rng.below(3) as usize;
        let t = 1 + rng.below(4) as usize;
        let g = random_dag(n, d, t, eps_prob, derive_seed(seed, &[side])).unwrap();
        randomize_weights(&g, -1.0, 1.0, derive_seed(seed, &[side, 1]))
    };
    let a = one(0);
    let b = one(1);
    (a, b)
}

/// Pair `i` of a corpus. Even pairs are plain draws; odd pairs are redrawn
/// until `keep` holds, so that half the corpus composes to something.
fn corpus_pair(
    base: u64,
    i: u64,
    draw: impl Fn(u64) -> (Graph, Graph),
    keep: impl Fn(&Graph, &Graph) -> bool,
) -> (Graph, Graph) {
    for attempt in 0.. {
        let (a, b) = draw(derive_seed(base, &[i, attempt]));
        if i.is_multiple_of(2) || keep(&a, &b) {
            return (a, b);
        }
    }
    unreachable!()
}

// Operands have at most 8 nodes, so paths have at most 7 arcs and composed
// paths at most 14.
const OPERAND_LEN: usize = 7;
const COMPOSED_LEN: usize = 14;

#[test]
fn criterion_1_soa_layout() {
    let t0 = Instant::now();
    let arc = |s, d, i: char, o: char| Arc::new(s, d, i as i32 - 'a' as i32, o as i32 - 'a' as i32, 0.0);
    let g = build_graph(
        4,
        &[0],
        &[3],
        &[
            arc(0, 1, 'a', 't'),
            arc(0, 1, 'b', 'u'),
            arc(1, 3, 'c', 'v'),
            arc(2, 3, 'd', 'w'),
            arc(2, 3, 'e', 'x'),
            arc(1, 2, 'f', 'y'),
            arc(0, 2, 'g', 'z'),
        ],
    )
    .unwrap();
    let node2: Vec<_> = g
        .incoming_arcs(2)
        .unwrap()
        .iter()
        .map(|&e| (g.ilabel(e as usize), g.olabel(e as usize)))
        .collect();
    let pass = g.start() == [true, false, false, false]
        && g.accept() == [false, false, false, true]
        && g.in_arc_offset() == [0, 0, 2, 4, 7]
        && g.in_arcs() == [0, 1, 5, 6, 2, 3, 4]
        && node2 == [(5, 24), (6, 25)]
        && t0.elapsed() < Duration::from_secs(1);
    report(1, pass, &format!("in {:?}", t0.elapsed()));
}

#[test]
fn criterion_2_and_4_oracle_suite() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut keys_checked = 0;
    let mut non_empty = 0;
    let mut trim_bad = 0;
    for i in 0..500u64 {
        let eps = if (i / 2) % 2 == 0 { 0.0 } else { 0.2 };
        let (a, b) = corpus_pair(
            2,
            i,
            |s| small_dag_pair(s, eps),
            |a, b| !bruteforce_compose_score(a, b, OPERAND_LEN).unwrap().is_empty(),
        );
        let c = compose_sequential(&a, &b, ComposeOptions::default()).unwrap();
        trim_bad += trim_violations(&c);
        non_empty += usize::from(c.num_nodes() > 0);
        let expected = bruteforce_compose_score(&a, &b, OPERAND_LEN).unwrap();
        for ((x, z), w) in &expected {
            let got = transduce_score(&c.graph, x, z, COMPOSED_LEN).unwrap();
            keys_checked += 1;
            if !scores_close(got, *w, 1e-4) {
                failures.push(format!("pair {i} key ({x:?}, {z:?}): {got} vs {w}"));
            }
        }
        // The composed graph must not accept anything the oracle rejects.
        let extra = path_counts(&c.graph, COMPOSED_LEN)
            .unwrap()
            .into_keys()
            .filter(|k| !expected.contains_key(k))
            .count();
        if extra > 0 {
            failures.push(format!("pair {i}: {extra} labelings missing from the oracle"));
        }
    }
    let elapsed = t0.elapsed();
    report(
        2,
        failures.is_empty() && elapsed < Duration::from_secs(120),
        &format!(
            "500 pairs ({non_empty} non-empty), {keys_checked} keys, {} mismatches, {elapsed:?}{}",
            failures.len(),
            failures.first().map(|f| format!(", first: {f:?}")).unwrap_or_default()
        ),
    );
    report(
        4,
        trim_bad == 0,
        &format!("oracle-suite outputs: {trim_bad} trim violations"),
    );
}

#[test]
fn criterion_3_and_4_seq_par_equivalence() {
    let t0 = Instant::now();
    let mut mismatches = 0;
    let mut trim_bad = 0;
    let mut comparisons = 0;
    let mut non_empty = 0;
    let mut total_nodes = 0;
    for i in 0..200u64 {
        let draw = |seed: u64| {
            let mut rng = SplitMix64::new(seed);
            let mut one = |side: u64| {
                let n = 2 + rng.below(127) as usize;
                let d = rng.below(7) as usize;
                let t = 1 + rng.below(8) as usize;
                let s = derive_seed(seed, &[side]);
                let g = if (i / 2) % 2 == 0 {
                    random_graph(n, d, t, s).unwrap()
                } else {
                    random_dag(n, d, t, 0.2, s).unwrap()
                };
                randomize_weights(&g, -1.0, 0.0, derive_seed(s, &[1]))
            };
            let a = one(0);
            let b = one(1);
            (a, b)
        };
        let (a, b) = corpus_pair(3, i, draw, |a, b| {
            compose_sequential(a, b, ComposeOptions::default()).unwrap().num_nodes() > 0
        });
        let seq = compose_sequential(&a, &b, ComposeOptions::default()).unwrap();
        trim_bad += trim_violations(&seq);
        non_empty += usize::from(seq.num_nodes() > 0);
        total_nodes += seq.num_nodes();
        for workers in [1, 8] {
            let par = compose_parallel(&a, &b, ComposeOptions::default(), workers).unwrap();
            trim_bad += trim_violations(&par);
            comparisons += 1;
            if !graphs_equivalent(&seq, &par).unwrap() {
                mismatches += 1;
            }
        }
    }
    let elapsed = t0.elapsed();
    report(
        3,
        mismatches == 0 && comparisons == 400 && elapsed < Duration::from_secs(300),
        &format!(
            "{comparisons} comparisons, {mismatches} mismatches ({non_empty} non-empty pairs, {total_nodes} composed nodes), {elapsed:?}"
        ),
    );
    report(
        4,
        trim_bad == 0,
        &format!("seq/par outputs: {trim_bad} trim violations"),
    );
}

fn serialized(c: &ComposedGraph) -> Vec<u8> {
    let c = canonicalize(c).unwrap();
    let mut out = to_text(&c.graph).into_bytes();
    for p in &c.pair_keys {
        out.extend(format!("key {} {} {}\n", p.ua, p.ub, p.f as u8).bytes());
    }
    out
}

#[test]
fn criterion_5_determinism() {
    let mut differing = 0;
    for i in 0..20u64 {
        let seed = derive_seed(5, &[i]);
        let (a, b) = if i % 2 == 0 {
            (
                random_graph(64, 4, 6, seed).unwrap(),
                random_graph(64, 4, 6, seed ^ 1).unwrap(),
            )
        } else {
            (
                random_dag(64, 4, 6, 0.2, seed).unwrap(),
                random_dag(64, 4, 6, 0.2, seed ^ 1).unwrap(),
            )
        };
        let a = randomize_weights(&a, -1.0, 0.0, seed);
        let b = randomize_weights(&b, -1.0, 0.0, seed ^ 2);
        let runs: Vec<Vec<u8>> = [1, 2, 8]
            .iter()
            .map(|&w| serialized(&compose_parallel(&a, &b, ComposeOptions::default(), w).unwrap()))
            .collect();
        if runs.windows(2).any(|r| r[0] != r[1]) {
            differing += 1;
        }
    }
    report(
        5,
        differing == 0,
        &format!("20 inputs x workers {{1, 2, 8}}: {differing} differ"),
    );
}

#[test]
fn criterion_6_quadratic_scaling() {
    let _g = serial();
    let t0 = Instant::now();
    let cfg = RunConfig {
        algos: vec![Algo::Seq],
        trials: Some(3),
        seed: 6,
        ..RunConfig::default()
    };
    let params = RandNodes {
        min_nodes: 256,
        max_nodes: 2048,
        degree: 5,
        tokens: 10,
    };
    let records = bench_rand_nodes(&params, &cfg).unwrap();
    let means: Vec<(f64, f64)> = mean_seconds(&records, |r| r.nodes_a)
        .into_iter()
        .map(|(n, _, s)| (n as f64, s))
        .collect();
    let slope = loglog_slope(&means);
    let elapsed = t0.elapsed();
    report(
        6,
        means.len() == 4 && (1.4..=2.6).contains(&slope) && elapsed < Duration::from_secs(600),
        &format!("slope {slope:.3} over {means:?}, {elapsed:?}"),
    );
}

#[test]
fn criterion_7_parallel_benefit() {
    let _g = serial();
    let t0 = Instant::now();
    let hardware = default_workers();
    let cfg = RunConfig {
        workers: 8,
        trials: Some(2),
        seed: 7,
        ..RunConfig::default()
    };
    let params = RandNodes {
        min_nodes: 4096,
        max_nodes: 4096,
        ..RandNodes::default()
    };
    let records = bench_rand_nodes(&params, &cfg).unwrap();
    let means = mean_seconds(&records, |r| r.nodes_a);
    let mean = |algo: &str| means.iter().find(|m| m.1 == algo).map(|m| m.2).unwrap();
    let (seq, par) = (mean("seq"), mean("par"));
    let ratio = par / seq;
    let elapsed = t0.elapsed();
    report(
        7,
        hardware >= 8 && ratio <= 0.67 && elapsed < Duration::from_secs(600),
        &format!(
            "par/seq = {ratio:.3} (seq {seq:.2} s, par {par:.2} s, composed {} nodes, 8 workers on {hardware} hardware threads), {elapsed:?}",
            records[0].composed_nodes
        ),
    );
}

#[test]
fn criterion_8_and_4_lexicon() {
    let _g = serial();
    let cfg = RunConfig {
        trials: Some(1),
        seed: 8,
        ..RunConfig::default()
    };
    let params = LexiconBench {
        word_counts: vec![1000, 2000, 4000],
        frames: 250,
        source: LexiconSource::Synthetic {
            words: 200_000,
            phonemes: 69,
            min_len: 3,
            max_len: 10,
        },
    };
    // The run itself fails on an empty or untrimmed output, or on a seq/par
    // size mismatch.
    let result = bench_lexicon(&params, &cfg);
    let detail = match &result {
        Ok(records) => records
            .iter()
            .map(|r| {
                format!(
                    "{}@{}: {:.2} s ({}, {})",
                    r.algorithm, r.words, r.seconds, r.composed_nodes, r.composed_arcs
                )
            })
            .collect::<Vec<_>>()
            .join("; "),
        Err(e) => e.to_string(),
    };
    let pass = result.as_ref().is_ok_and(|records| {
        records.len() == 6
            && records
                .iter()
                .all(|r| r.seconds < 120.0 && r.composed_nodes > 0 && r.frames == 250)
            && records
                .chunks(2)
                .all(|p| (p[0].composed_nodes, p[0].composed_arcs) == (p[1].composed_nodes, p[1].composed_arcs))
    });
    report(8, pass, &detail);
    report(4, result.is_ok(), "lexicon outputs: trim checked in every run");
}

#[test]
fn criterion_9_filter_path_counts() {
    let mut unequal = 0;
    let mut below = 0;
    let mut strict = 0;
    for i in 0..100u64 {
        let (a, b) = corpus_pair(
            9,
            i,
            |s| small_dag_pair(s, 0.3),
            |a, b| !matched_pair_counts(a, b, OPERAND_LEN).unwrap().is_empty(),
        );
        let pairs = matched_pair_counts(&a, &b, OPERAND_LEN).unwrap();
        let on = compose_sequential(&a, &b, ComposeOptions::default()).unwrap();
        if path_counts(&on.graph, COMPOSED_LEN).unwrap() != pairs {
            unequal += 1;
        }
        let off_opts = ComposeOptions {
            epsilon_filter: false,
            trim: true,
        };
        let off = path_counts(&compose_sequential(&a, &b, off_opts).unwrap().graph, COMPOSED_LEN).unwrap();
        for (k, &n) in &pairs {
            let m = off.get(k).copied().unwrap_or(0);
            below += usize::from(m < n);
            strict += usize::from(m > n);
        }
    }
    report(
        9,
        unequal == 0 && below == 0 && strict > 0,
        &format!("100 pairs: {unequal} count mismatches with filter, {below} below and {strict} above without"),
    );
}
