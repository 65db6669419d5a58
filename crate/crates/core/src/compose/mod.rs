//! Eager composition in the log semiring.
//!
//! Both engines produce trim graphs over pair states `(ua, ub, f)` where `f`
//! is the state of a three-valued ε filter:
//!
//! | move      | arcs consumed                  | allowed from    | next `f`  |
//! |-----------|--------------------------------|-----------------|-----------|
//! | MATCH     | `e_a`, `e_b`, `o_a = i_b != ε` | any             | `Match`   |
//! | EPS-BOTH  | `e_a`, `e_b`, `o_a = i_b = ε`  | `Match`         | `Match`   |
//! | EPS-A     | `e_a` with `o_a = ε`           | `Match`, `AEps` | `AEps`    |
//! | EPS-B     | `e_b` with `i_b = ε`           | `Match`, `BEps` | `BEps`    |
//!
//! With the filter, every pair of accepting paths (one in each operand)
//! whose middle tapes agree yields exactly one composed path. With the
//! filter off, `f` stays `Match`, EPS-A/EPS-B are always allowed and
//! EPS-BOTH is disabled, so ε interleavings are counted once per ordering.
//!
//! A composed arc carries the input label of `e_a` and the output label of
//! `e_b` (ε for the side that did not move), weighted `w_a + w_b`.

mod markers;
mod moves;
pub mod parallel;
pub mod sequential;

use std::collections::VecDeque;

pub use markers::{MarkerTable, PairSpace, RankIndex, MAX_PAIRS};
pub use moves::{match_moves, Move, MoveKind, MoveSpace};
pub use parallel::{compose_parallel, compose_parallel_with_stats, exclusive_scan, frontier_round};
pub use sequential::{coaccessible_set, compose_sequential};

use crate::error::{Error, Result};
use crate::graph::{ArcColumns, Graph, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum FilterState {
    Match = 0,
    AEps = 1,
    BEps = 2,
}

impl FilterState {
    #[inline]
    pub fn from_index(i: u8) -> Self {
        match i {
            0 => FilterState::Match,
            1 => FilterState::AEps,
            2 => FilterState::BEps,
            _ => panic!("filter state index {i} out of range"),
        }
    }
}

/// A state of the composed graph. Ordering matches the flattened key
/// `(ua * V_B + ub) * 3 + f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairState {
    pub ua: NodeId,
    pub ub: NodeId,
    pub f: FilterState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComposeOptions {
    pub epsilon_filter: bool,
    pub trim: bool,
}

impl Default for ComposeOptions {
    fn default() -> Self {
        ComposeOptions {
            epsilon_filter: true,
            trim: true,
        }
    }
}

/// A composition result: the graph plus the pair state behind each node.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposedGraph {
    pub graph: Graph,
    pub pair_keys: Vec<PairState>,
}

impl ComposedGraph {
    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_arcs(&self) -> usize {
        self.graph.num_arcs()
    }

    fn check_keys(&self) -> Result<()> {
        if self.pair_keys.len() != self.graph.num_nodes() {
            return Err(Error::MissingPairKeys {
                keys: self.pair_keys.len(),
                nodes: self.graph.num_nodes(),
            });
        }
        Ok(())
    }
}

fn reach(g: &Graph, seeds: Vec<NodeId>, forward: bool) -> Vec<bool> {
    let mut mark = vec![false; g.num_nodes()];
    let mut queue = VecDeque::new();
    for s in seeds {
        if !mark[s as usize] {
            mark[s as usize] = true;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        let span = if forward {
            g.out_span(v as usize)
        } else {
            g.in_span(v as usize)
        };
        for &e in span {
            let w = if forward { g.dst(e as usize) } else { g.src(e as usize) };
            if !mark[w as usize] {
                mark[w as usize] = true;
                queue.push_back(w);
            }
        }
    }
    mark
}

/// Nodes reachable from a start node.
pub fn accessible(g: &Graph) -> Vec<bool> {
    reach(g, g.starts(), true)
}

/// Nodes that can reach an accept node.
pub fn coaccessible(g: &Graph) -> Vec<bool> {
    reach(g, g.accepts(), false)
}

/// `true` iff every node is both accessible and co-accessible.
pub fn is_trim(g: &Graph) -> bool {
    accessible(g).iter().all(|&x| x) && coaccessible(g).iter().all(|&x| x)
}

/// Removes every node not on some start-to-accept path. Surviving nodes
/// keep their relative order, and arcs between them keep theirs.
pub fn trim(cg: ComposedGraph) -> ComposedGraph {
    let g = &cg.graph;
    let fwd = accessible(g);
    let bwd = coaccessible(g);
    let keep: Vec<bool> = fwd.iter().zip(&bwd).map(|(&f, &b)| f && b).collect();
    if keep.iter().all(|&k| k) {
        return cg;
    }
    let mut new_id = vec![NodeId::MAX; g.num_nodes()];
    let mut start = Vec::new();
    let mut accept = Vec::new();
    for v in (0..g.num_nodes()).filter(|&v| keep[v]) {
        new_id[v] = start.len() as NodeId;
        start.push(g.is_start(v));
        accept.push(g.is_accept(v));
    }
    let mut cols = ArcColumns::default();
    for mut arc in g.arcs() {
        if keep[arc.src as usize] && keep[arc.dst as usize] {
            arc.src = new_id[arc.src as usize];
            arc.dst = new_id[arc.dst as usize];
            cols.push(&arc);
        }
    }
    let pair_keys = if cg.pair_keys.len() == g.num_nodes() {
        cg.pair_keys
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(p, _)| *p)
            .collect()
    } else {
        Vec::new()
    };
    ComposedGraph {
        graph: Graph::from_arc_columns(start, accept, cols).expect("subgraph of a valid graph is valid"),
        pair_keys,
    }
}

/// Renumbers nodes by ascending pair key and orders every node's arcs by
/// `(dst, ilabel, olabel, weight)`. Two compositions of the same operands
/// canonicalize to identical arrays whatever their original numbering.
pub fn canonicalize(cg: &ComposedGraph) -> Result<ComposedGraph> {
    cg.check_keys()?;
    let g = &cg.graph;
    let mut order: Vec<usize> = (0..g.num_nodes()).collect();
    order.sort_unstable_by_key(|&v| cg.pair_keys[v]);
    let mut new_id = vec![0 as NodeId; g.num_nodes()];
    for (new, &old) in order.iter().enumerate() {
        new_id[old] = new as NodeId;
    }
    let mut cols = ArcColumns::with_capacity(g.num_arcs());
    let mut span = Vec::new();
    for (new, &old) in order.iter().enumerate() {
        span.clear();
        span.extend(g.out_span(old).iter().map(|&e| {
            let mut arc = g.arc(e as usize);
            arc.src = new as NodeId;
            arc.dst = new_id[arc.dst as usize];
            arc
        }));
        span.sort_by(|x, y| {
            (x.dst, x.ilabel, x.olabel)
                .cmp(&(y.dst, y.ilabel, y.olabel))
                .then(x.weight.total_cmp(&y.weight))
        });
        for arc in &span {
            cols.push(arc);
        }
    }
    let start = order.iter().map(|&v| g.is_start(v)).collect();
    let accept = order.iter().map(|&v| g.is_accept(v)).collect();
    Ok(ComposedGraph {
        graph: Graph::from_arc_columns(start, accept, cols)?,
        pair_keys: order.iter().map(|&v| cg.pair_keys[v]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, Arc};

    fn keys(n: u32) -> Vec<PairState> {
        (0..n)
            .map(|i| PairState {
                ua: i,
                ub: 0,
                f: FilterState::Match,
            })
            .collect()
    }

    #[test]
    fn trim_is_identity_on_trim_graph() {
        let g = build_graph(2, &[0], &[1], &[Arc::new(0, 1, 0, 0, 1.0)]).unwrap();
        let cg = ComposedGraph {
            graph: g,
            pair_keys: keys(2),
        };
        assert_eq!(trim(cg.clone()), cg);
    }

    #[test]
    fn trim_drops_unreachable_node() {
        let g = build_graph(3, &[0], &[1], &[Arc::new(0, 1, 0, 0, 1.0), Arc::new(2, 1, 0, 0, 1.0)]).unwrap();
        let t = trim(ComposedGraph {
            graph: g,
            pair_keys: keys(3),
        });
        assert_eq!(t.num_nodes(), 2);
        assert_eq!(t.num_arcs(), 1);
        assert_eq!(t.pair_keys, keys(2));
    }

    #[test]
    fn trim_drops_dead_end_branch() {
        // 0 -> 1 -> 3 (accept), 1 -> 2 dead end
        let g = build_graph(
            4,
            &[0],
            &[3],
            &[
                Arc::new(0, 1, 0, 0, 1.0),
                Arc::new(1, 2, 1, 1, 1.0),
                Arc::new(1, 3, 2, 2, 1.0),
            ],
        )
        .unwrap();
        let t = trim(ComposedGraph {
            graph: g,
            pair_keys: keys(4),
        });
        assert_eq!(t.num_nodes(), 3);
        assert_eq!(t.graph.arc(1), Arc::new(1, 2, 2, 2, 1.0));
        assert!(is_trim(&t.graph));
    }

    #[test]
    fn canonicalize_requires_keys() {
        let cg = ComposedGraph {
            graph: build_graph(1, &[0], &[0], &[]).unwrap(),
            pair_keys: Vec::new(),
        };
        assert!(matches!(canonicalize(&cg), Err(Error::MissingPairKeys { .. })));
    }

    #[test]
    fn canonicalize_sorts_nodes_and_spans() {
        let g = build_graph(
            2,
            &[1],
            &[0],
            &[
                Arc::new(1, 0, 5, 5, 2.0),
                Arc::new(1, 0, 5, 5, 1.0),
                Arc::new(1, 1, 0, 0, 0.0),
            ],
        )
        .unwrap();
        let mut pk = keys(2);
        pk.reverse();
        let c = canonicalize(&ComposedGraph {
            graph: g,
            pair_keys: pk,
        })
        .unwrap();
        assert_eq!(c.pair_keys, keys(2));
        assert_eq!(c.graph.starts(), vec![0]);
        let arcs: Vec<_> = c.graph.arcs().collect();
        assert_eq!(
            arcs,
            vec![
                Arc::new(0, 0, 0, 0, 0.0),
                Arc::new(0, 1, 5, 5, 1.0),
                Arc::new(0, 1, 5, 5, 2.0)
            ]
        );
    }
}
