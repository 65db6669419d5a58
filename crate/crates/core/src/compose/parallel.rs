//! Bulk-synchronous frontier composition.
//!
//! Every round expands all states of the current frontier at once. The
//! move slots of all frontier states are laid end to end (an exclusive scan
//! over per-state slot counts gives each state its base index) and every
//! slot is one task. A task decodes its move, drops it if the destination
//! pair is not co-accessible, and claims an unseen destination with an
//! atomic test-and-set; the claimed states form the next frontier. Rounds
//! are separated by the end of a rayon parallel call.
//!
//! After a backward sweep (co-accessible pairs) and a forward sweep
//! (accessible states), the output is built in two passes over all
//! discovered states:
//!
//! 1. *count*: each successful task bumps its source's out-count and its
//!    destination's in-count with `fetch_add`;
//! 2. *fill*: exclusive scans of the counts give every node its span, and
//!    each successful task claims a slot with a `fetch_add` on a per-node
//!    cursor and writes the arc's five fields there.
//!
//! Nodes are numbered by ascending pair key (the rank of the key in the
//! `seen` table), so the result does not depend on the schedule except for
//! the order of arcs inside each node's spans.

use std::sync::atomic::{AtomicI32, AtomicU32, Ordering};

use rayon::prelude::*;

use crate::compose::markers::MarkerTable;
use crate::compose::moves::{Move, MoveSpace};
use crate::compose::{trim, ComposeOptions, ComposedGraph, FilterState, PairState};
use crate::error::{Error, Result};
use crate::graph::{ArcId, Graph, GraphParts, NodeId};

/// Tasks handed to a worker at a time.
const CHUNK: u64 = 2048;

/// `offsets[0] = 0`, `offsets[i + 1] = offsets[i] + counts[i]`.
pub fn exclusive_scan(counts: &[u64]) -> Vec<u64> {
    let mut offsets = Vec::with_capacity(counts.len() + 1);
    let mut total = 0u64;
    offsets.push(0);
    for &c in counts {
        total += c;
        offsets.push(total);
    }
    offsets
}

/// Runs one task per slot of every item, in parallel. Returns the number of
/// tasks and everything the tasks pushed, in task order.
fn run_tasks<S, T, B, F>(items: &[S], bound: B, task: F) -> (u64, Vec<T>)
where
    S: Copy + Sync,
    T: Send,
    B: Fn(S) -> u64 + Sync,
    F: Fn(&mut Vec<T>, usize, S, u64) + Sync,
{
    let counts: Vec<u64> = items.par_iter().map(|&s| bound(s)).collect();
    let offsets = exclusive_scan(&counts);
    drop(counts);
    let total = *offsets.last().unwrap();
    let chunks = total.div_ceil(CHUNK);
    let out = (0..chunks)
        .into_par_iter()
        .fold(Vec::new, |mut out, c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(total);
            // Item owning task `lo`: last item whose base is <= lo.
            let mut item = offsets.partition_point(|&o| o <= lo) - 1;
            for t in lo..hi {
                while offsets[item + 1] <= t {
                    item += 1;
                }
                task(&mut out, item, items[item], t - offsets[item]);
            }
            out
        })
        .reduce(Vec::new, |mut a, mut b| {
            a.append(&mut b);
            a
        });
    (total, out)
}

/// States to expand in the next round, plus the marker tables shared by
/// all rounds.
pub struct Frontier {
    /// Flattened pair keys, unique, each marked in `seen`.
    pub current: Vec<u64>,
    /// Claimed states, over `3 * V_A * V_B` keys.
    pub seen: MarkerTable,
    /// Co-accessible node pairs, over `V_A * V_B` pair indices.
    pub reachable: MarkerTable,
}

impl Frontier {
    /// The first frontier: start pairs that are co-accessible, with the
    /// filter in `Match`.
    pub fn initial(space: &MoveSpace, reachable: MarkerTable) -> Frontier {
        let seen = MarkerTable::new(space.pairs.num_keys());
        let mut current = Vec::new();
        for sa in space.a.starts() {
            for sb in space.b.starts() {
                if reachable.get(space.pairs.pair_index(sa, sb)) {
                    let key = space.pairs.key(PairState {
                        ua: sa,
                        ub: sb,
                        f: FilterState::Match,
                    });
                    if seen.test_and_set(key) {
                        current.push(key);
                    }
                }
            }
        }
        Frontier {
            current,
            seen,
            reachable,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RoundStats {
    /// States expanded this round.
    pub frontier: usize,
    /// Move slots explored (one task each).
    pub tasks: u64,
    /// Legal moves whose destination is co-accessible.
    pub discovered_arcs: u64,
    /// States claimed for the first time.
    pub discovered_nodes: usize,
}

/// Expands every state of `frontier` in one bulk-synchronous round.
pub fn frontier_round(space: &MoveSpace, frontier: Frontier) -> (Frontier, RoundStats) {
    let pairs = space.pairs;
    let Frontier {
        current,
        seen,
        reachable,
    } = frontier;
    // Every successful task pushes its destination key, tagged with `CLAIM`
    // if it won the claim, so the arc count falls out of the same collection.
    let (tasks, found) = run_tasks(
        &current,
        |key| space.slots(pairs.state_of_key(key)),
        |out: &mut Vec<u64>, _, key, slot| {
            if let Some(mv) = space.decode(pairs.state_of_key(key), slot) {
                if reachable.get(pairs.pair_index(mv.next.ua, mv.next.ub)) {
                    let next = pairs.key(mv.next);
                    out.push(if seen.test_and_set(next) { next | CLAIM } else { next });
                }
            }
        },
    );
    let discovered_arcs = found.len() as u64;
    let next: Vec<u64> = found
        .into_iter()
        .filter(|k| k & CLAIM != 0)
        .map(|k| k & !CLAIM)
        .collect();
    let stats = RoundStats {
        frontier: current.len(),
        tasks,
        discovered_arcs,
        discovered_nodes: next.len(),
    };
    (
        Frontier {
            current: next,
            seen,
            reachable,
        },
        stats,
    )
}

const CLAIM: u64 = 1 << 63;

/// Backward sweep over node pairs: every pair from which an accept pair is
/// reachable by some move, ignoring the filter state.
fn backward_sweep(space: &MoveSpace, rounds: &mut Vec<RoundStats>) -> MarkerTable {
    let pairs = space.pairs;
    let reach = MarkerTable::new(pairs.num_pairs());
    let mut current = Vec::new();
    for sa in space.a.accepts() {
        for sb in space.b.accepts() {
            let idx = pairs.pair_index(sa, sb);
            if reach.test_and_set(idx) {
                current.push(idx);
            }
        }
    }
    while !current.is_empty() {
        let (tasks, next) = run_tasks(
            &current,
            |idx| {
                let (va, vb) = pairs.pair_of_index(idx);
                space.backward_slots(va, vb)
            },
            |out: &mut Vec<u64>, _, idx, slot| {
                let (va, vb) = pairs.pair_of_index(idx);
                if let Some((ua, ub)) = space.decode_backward(va, vb, slot) {
                    let pred = pairs.pair_index(ua, ub);
                    if reach.test_and_set(pred) {
                        out.push(pred);
                    }
                }
            },
        );
        rounds.push(RoundStats {
            frontier: current.len(),
            tasks,
            discovered_arcs: 0,
            discovered_nodes: next.len(),
        });
        current = next;
    }
    reach
}

/// Per-node arc counters and fill cursors.
pub struct CountTable {
    pub num_out_arcs: Vec<AtomicU32>,
    pub num_in_arcs: Vec<AtomicU32>,
    pub out_cursor: Vec<AtomicU32>,
    pub in_cursor: Vec<AtomicU32>,
}

fn atomic_zeros(n: usize) -> Vec<AtomicU32> {
    (0..n).into_par_iter().map(|_| AtomicU32::new(0)).collect()
}

impl CountTable {
    pub fn new(num_nodes: usize) -> Self {
        CountTable {
            num_out_arcs: atomic_zeros(num_nodes),
            num_in_arcs: atomic_zeros(num_nodes),
            out_cursor: atomic_zeros(num_nodes),
            in_cursor: atomic_zeros(num_nodes),
        }
    }

    /// `true` once every reserved slot has been claimed exactly once.
    pub fn all_slots_written(&self) -> bool {
        let eq = |a: &[AtomicU32], b: &[AtomicU32]| {
            a.par_iter()
                .zip(b)
                .all(|(x, y)| x.load(Ordering::Relaxed) == y.load(Ordering::Relaxed))
        };
        eq(&self.num_out_arcs, &self.out_cursor) && eq(&self.num_in_arcs, &self.in_cursor)
    }
}

fn scan_counts(counts: &[AtomicU32]) -> Vec<u64> {
    let plain: Vec<u64> = counts.par_iter().map(|c| c.load(Ordering::Relaxed) as u64).collect();
    exclusive_scan(&plain)
}

/// Counters gathered by [`compose_parallel_with_stats`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParallelStats {
    pub backward_rounds: Vec<RoundStats>,
    pub forward_rounds: Vec<RoundStats>,
    /// States discovered by the forward sweep (before trimming).
    pub discovered_nodes: usize,
    /// Arcs tallied by the count pass.
    pub counted_arcs: u64,
    /// Arc slots written by the fill pass.
    pub filled_arcs: u64,
    /// Whether every per-node cursor ended equal to its counter.
    pub slots_balanced: bool,
}

pub fn compose_parallel(a: &Graph, b: &Graph, opts: ComposeOptions, workers: usize) -> Result<ComposedGraph> {
    compose_parallel_with_stats(a, b, opts, workers).map(|(cg, _)| cg)
}

pub fn compose_parallel_with_stats(
    a: &Graph,
    b: &Graph,
    opts: ComposeOptions,
    workers: usize,
) -> Result<(ComposedGraph, ParallelStats)> {
    if workers == 0 {
        return Err(Error::InvalidArgument("workers must be at least 1".into()));
    }
    let space = MoveSpace::new(a, b, opts)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ResourceLimit(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| compose_in_pool(&space))
}

fn compose_in_pool(space: &MoveSpace) -> Result<(ComposedGraph, ParallelStats)> {
    let pairs = space.pairs;
    let mut stats = ParallelStats::default();

    let reachable = backward_sweep(space, &mut stats.backward_rounds);
    let mut frontier = Frontier::initial(space, reachable);
    while !frontier.is_empty() {
        let (next, round) = frontier_round(space, frontier);
        stats.forward_rounds.push(round);
        frontier = next;
    }
    let Frontier { seen, reachable, .. } = frontier;

    let states = seen.ones();
    let num_nodes = states.len();
    stats.discovered_nodes = num_nodes;
    if num_nodes >= NodeId::MAX as usize {
        return Err(Error::ResourceLimit(format!(
            "{num_nodes} composed nodes exceed 32-bit indexing"
        )));
    }
    let rank = seen.rank_index();
    let node_of = |p: PairState| rank.rank(pairs.key(p)) as usize;
    let successful = |key: u64, slot: u64| -> Option<(PairState, Move)> {
        let p = pairs.state_of_key(key);
        let mv = space.decode(p, slot)?;
        reachable
            .get(pairs.pair_index(mv.next.ua, mv.next.ub))
            .then_some((p, mv))
    };
    let bound = |key: u64| space.slots(pairs.state_of_key(key));

    // Count pass.
    let table = CountTable::new(num_nodes);
    run_tasks(&states, bound, |_: &mut Vec<()>, src, key, slot| {
        if let Some((_, mv)) = successful(key, slot) {
            table.num_out_arcs[src].fetch_add(1, Ordering::Relaxed);
            table.num_in_arcs[node_of(mv.next)].fetch_add(1, Ordering::Relaxed);
        }
    });
    let out_offset = scan_counts(&table.num_out_arcs);
    let in_offset = scan_counts(&table.num_in_arcs);
    let num_arcs = *out_offset.last().unwrap();
    stats.counted_arcs = num_arcs;
    if num_arcs >= ArcId::MAX as u64 {
        return Err(Error::ResourceLimit(format!(
            "{num_arcs} composed arcs exceed 32-bit indexing"
        )));
    }
    let num_arcs = num_arcs as usize;

    // Fill pass.
    let ilabels: Vec<AtomicI32> = (0..num_arcs).into_par_iter().map(|_| AtomicI32::new(0)).collect();
    let olabels: Vec<AtomicI32> = (0..num_arcs).into_par_iter().map(|_| AtomicI32::new(0)).collect();
    let weights = atomic_zeros(num_arcs);
    let src_nodes = atomic_zeros(num_arcs);
    let dst_nodes = atomic_zeros(num_arcs);
    let in_arcs = atomic_zeros(num_arcs);
    #[cfg(debug_assertions)]
    let shadow = (atomic_zeros(num_arcs), atomic_zeros(num_arcs));

    run_tasks(&states, bound, |_: &mut Vec<()>, src, key, slot| {
        let Some((_, mv)) = successful(key, slot) else {
            return;
        };
        let dst = node_of(mv.next);
        let e = out_offset[src] as usize + table.out_cursor[src].fetch_add(1, Ordering::Relaxed) as usize;
        let ie = in_offset[dst] as usize + table.in_cursor[dst].fetch_add(1, Ordering::Relaxed) as usize;
        #[cfg(debug_assertions)]
        {
            assert_eq!(
                shadow.0[e].fetch_add(1, Ordering::Relaxed),
                0,
                "arc slot {e} written twice"
            );
            assert_eq!(
                shadow.1[ie].fetch_add(1, Ordering::Relaxed),
                0,
                "in-arc slot {ie} written twice"
            );
        }
        let (il, ol, w) = space.arc_fields(&mv);
        ilabels[e].store(il, Ordering::Relaxed);
        olabels[e].store(ol, Ordering::Relaxed);
        weights[e].store(w.to_bits(), Ordering::Relaxed);
        src_nodes[e].store(src as u32, Ordering::Relaxed);
        dst_nodes[e].store(dst as u32, Ordering::Relaxed);
        in_arcs[ie].store(e as ArcId, Ordering::Relaxed);
    });
    stats.slots_balanced = table.all_slots_written();
    stats.filled_arcs = table
        .out_cursor
        .par_iter()
        .map(|c| c.load(Ordering::Relaxed) as u64)
        .sum();
    #[cfg(debug_assertions)]
    {
        assert!(stats.slots_balanced, "count and fill passes disagree");
        assert!(shadow.0.par_iter().all(|m| m.load(Ordering::Relaxed) == 1));
        assert!(shadow.1.par_iter().all(|m| m.load(Ordering::Relaxed) == 1));
    }

    let pair_keys: Vec<PairState> = states.par_iter().map(|&k| pairs.state_of_key(k)).collect();
    let u32s = |v: Vec<AtomicU32>| -> Vec<u32> { v.into_par_iter().map(AtomicU32::into_inner).collect() };
    let i32s = |v: Vec<AtomicI32>| -> Vec<i32> { v.into_par_iter().map(AtomicI32::into_inner).collect() };
    let to_ids = |v: Vec<u64>| -> Vec<ArcId> { v.into_par_iter().map(|x| x as ArcId).collect() };
    let parts = GraphParts {
        start: pair_keys.par_iter().map(|&p| space.is_start(p)).collect(),
        accept: pair_keys.par_iter().map(|&p| space.is_accept(p)).collect(),
        ilabels: i32s(ilabels),
        olabels: i32s(olabels),
        weights: weights
            .into_par_iter()
            .map(|w| f32::from_bits(w.into_inner()))
            .collect(),
        src_nodes: u32s(src_nodes),
        dst_nodes: u32s(dst_nodes),
        in_arcs: u32s(in_arcs),
        out_arcs: (0..num_arcs as ArcId).into_par_iter().collect(),
        in_arc_offset: to_ids(in_offset),
        out_arc_offset: to_ids(out_offset),
    };
    let graph = Graph::from_parts_unchecked(parts);
    debug_assert_eq!(crate::graph::validate(&graph), Ok(()));

    let needs_trim = space.opts.trim && pair_keys.iter().any(|p| p.f != FilterState::Match);
    let cg = ComposedGraph { graph, pair_keys };
    // As in the sequential engine, trimming is only needed when filter
    // states other than Match occur.
    Ok((if needs_trim { trim(cg) } else { cg }, stats))
}
