//! Queue-driven reference composition.
//!
//! 1. Compute the co-accessible node pairs `R` by a backward search from the
//!    accept pairs.
//! 2. Seed a FIFO queue with the start pairs in `R`.
//! 3. Pop a state, enumerate its legal moves, skip destinations outside `R`,
//!    add unseen destinations as new nodes, and add one arc per move.
//!
//! Nodes are numbered in discovery order. Because the FIFO queue pops nodes
//! in that same order, arcs come out grouped by source node.

use std::collections::VecDeque;

use crate::compose::markers::MarkerTable;
use crate::compose::moves::MoveSpace;
use crate::compose::{trim, ComposeOptions, ComposedGraph, FilterState, PairState};
use crate::error::Result;
use crate::graph::{Arc, ArcColumns, Graph, NodeId};

/// Node pairs `(ua, ub)` from which an accept pair is reachable, indexed by
/// `ua * V_B + ub`. Computed over node pairs without the filter state, so
/// it may contain pairs that are dead under the ε filter.
pub fn coaccessible_set(a: &Graph, b: &Graph, opts: ComposeOptions) -> Result<MarkerTable> {
    let space = MoveSpace::new(a, b, opts)?;
    Ok(backward_search(&space))
}

fn backward_search(space: &MoveSpace) -> MarkerTable {
    let reach = MarkerTable::new(space.pairs.num_pairs());
    let mut queue = VecDeque::new();
    for sa in space.a.accepts() {
        for sb in space.b.accepts() {
            if reach.test_and_set(space.pairs.pair_index(sa, sb)) {
                queue.push_back((sa, sb));
            }
        }
    }
    while let Some((va, vb)) = queue.pop_front() {
        for slot in 0..space.backward_slots(va, vb) {
            if let Some((ua, ub)) = space.decode_backward(va, vb, slot) {
                if reach.test_and_set(space.pairs.pair_index(ua, ub)) {
                    queue.push_back((ua, ub));
                }
            }
        }
    }
    reach
}

const ABSENT: NodeId = NodeId::MAX;

struct Discovery<'s, 'g> {
    space: &'s MoveSpace<'g>,
    index: Vec<NodeId>,
    keys: Vec<PairState>,
    start: Vec<bool>,
    accept: Vec<bool>,
}

impl Discovery<'_, '_> {
    fn node(&mut self, p: PairState) -> NodeId {
        let slot = &mut self.index[self.space.pairs.key(p) as usize];
        if *slot == ABSENT {
            *slot = self.keys.len() as NodeId;
            self.keys.push(p);
            self.start.push(self.space.is_start(p));
            self.accept.push(self.space.is_accept(p));
        }
        *slot
    }
}

pub fn compose_sequential(a: &Graph, b: &Graph, opts: ComposeOptions) -> Result<ComposedGraph> {
    let space = MoveSpace::new(a, b, opts)?;
    let pairs = space.pairs;
    let reach = backward_search(&space);

    let mut found = Discovery {
        space: &space,
        index: vec![ABSENT; pairs.num_keys() as usize],
        keys: Vec::new(),
        start: Vec::new(),
        accept: Vec::new(),
    };
    let mut cols = ArcColumns::default();

    for sa in a.starts() {
        for sb in b.starts() {
            if reach.get(pairs.pair_index(sa, sb)) {
                found.node(PairState {
                    ua: sa,
                    ub: sb,
                    f: FilterState::Match,
                });
            }
        }
    }

    // `keys` doubles as the FIFO queue: node ids are handed out in push order.
    let mut head = 0;
    while head < found.keys.len() {
        let src = head as NodeId;
        let p = found.keys[head];
        head += 1;
        space.for_each_move(p, |mv| {
            if !reach.get(pairs.pair_index(mv.next.ua, mv.next.ub)) {
                return;
            }
            let dst = found.node(mv.next);
            let (ilabel, olabel, weight) = space.arc_fields(&mv);
            cols.push(&Arc::new(src, dst, ilabel, olabel, weight));
        });
    }
    let Discovery {
        keys, start, accept, ..
    } = found;

    let needs_trim = opts.trim && keys.iter().any(|p| p.f != FilterState::Match);
    let cg = ComposedGraph {
        graph: Graph::from_arc_columns(start, accept, cols)?,
        pair_keys: keys,
    };
    // Without filter states other than Match, `R` is exact and every
    // discovered node is already co-accessible.
    Ok(if needs_trim { trim(cg) } else { cg })
}
