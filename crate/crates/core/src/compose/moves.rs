//! Legal composition moves out of (and into) a pair state.
//!
//! The moves of a state `p = (ua, ub, f)` are numbered by a dense slot index:
//!
//! ```text
//! [0, |out(ua)| * |out(ub)|)     arc pairs (MATCH or EPS-BOTH)
//! next |epsA(ua)| slots          A advances on an ε-output arc (EPS-A)
//! next |epsB(ub)| slots          B advances on an ε-input arc  (EPS-B)
//! ```
//!
//! The EPS-A / EPS-B ranges are empty when the filter forbids them from `f`.
//! Both engines enumerate moves through [`MoveSpace::decode`], so they agree
//! on the move set by construction; the parallel engine hands one slot to
//! each task.

use crate::compose::markers::PairSpace;
use crate::compose::{ComposeOptions, FilterState, PairState};
use crate::error::Result;
use crate::graph::{ArcId, Graph, NodeId};
use crate::weight::{Label, EPSILON};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Match,
    EpsBoth,
    EpsA,
    EpsB,
}

/// One legal move, with the arcs it consumes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Move {
    pub kind: MoveKind,
    pub arc_a: Option<ArcId>,
    pub arc_b: Option<ArcId>,
    pub next: PairState,
}

/// Per-node lists of arcs whose relevant tape is ε.
#[derive(Clone, Debug)]
struct EpsIndex {
    offset: Vec<u32>,
    arcs: Vec<ArcId>,
}

impl EpsIndex {
    fn build<'a>(num_nodes: usize, span: impl Fn(usize) -> &'a [ArcId], is_eps: impl Fn(usize) -> bool) -> Self {
        let mut offset = Vec::with_capacity(num_nodes + 1);
        let mut arcs = Vec::new();
        offset.push(0);
        for v in 0..num_nodes {
            arcs.extend(span(v).iter().copied().filter(|&e| is_eps(e as usize)));
            offset.push(arcs.len() as u32);
        }
        EpsIndex { offset, arcs }
    }

    #[inline]
    fn get(&self, v: NodeId) -> &[ArcId] {
        let v = v as usize;
        &self.arcs[self.offset[v] as usize..self.offset[v + 1] as usize]
    }
}

/// Read-only view of two composition operands with the indexes needed to
/// enumerate moves by slot.
pub struct MoveSpace<'g> {
    pub a: &'g Graph,
    pub b: &'g Graph,
    pub opts: ComposeOptions,
    pub pairs: PairSpace,
    a_eps_out: EpsIndex,
    b_eps_out: EpsIndex,
    a_eps_in: EpsIndex,
    b_eps_in: EpsIndex,
}

impl<'g> MoveSpace<'g> {
    /// Fails with a resource error when the pair space is too large for the
    /// dense tables.
    pub fn new(a: &'g Graph, b: &'g Graph, opts: ComposeOptions) -> Result<Self> {
        let pairs = PairSpace::new(a.num_nodes(), b.num_nodes())?;
        let a_eps = |e: usize| a.olabel(e) == EPSILON;
        let b_eps = |e: usize| b.ilabel(e) == EPSILON;
        Ok(MoveSpace {
            a,
            b,
            opts,
            pairs,
            a_eps_out: EpsIndex::build(a.num_nodes(), |v| a.out_span(v), a_eps),
            b_eps_out: EpsIndex::build(b.num_nodes(), |v| b.out_span(v), b_eps),
            a_eps_in: EpsIndex::build(a.num_nodes(), |v| a.in_span(v), a_eps),
            b_eps_in: EpsIndex::build(b.num_nodes(), |v| b.in_span(v), b_eps),
        })
    }

    #[inline]
    fn eps_a_allowed(&self, f: FilterState) -> bool {
        !self.opts.epsilon_filter || f != FilterState::BEps
    }

    #[inline]
    fn eps_b_allowed(&self, f: FilterState) -> bool {
        !self.opts.epsilon_filter || f != FilterState::AEps
    }

    /// Size of the move-slot domain of `p` (an upper bound on its legal moves).
    #[inline]
    pub fn slots(&self, p: PairState) -> u64 {
        let pairs = self.a.out_degree(p.ua as usize) as u64 * self.b.out_degree(p.ub as usize) as u64;
        let eps_a = if self.eps_a_allowed(p.f) {
            self.a_eps_out.get(p.ua).len() as u64
        } else {
            0
        };
        let eps_b = if self.eps_b_allowed(p.f) {
            self.b_eps_out.get(p.ub).len() as u64
        } else {
            0
        };
        pairs + eps_a + eps_b
    }

    /// The move in slot `slot` of `p`, or `None` if that slot's arcs do not
    /// form a legal move.
    #[inline]
    pub fn decode(&self, p: PairState, slot: u64) -> Option<Move> {
        let filter = self.opts.epsilon_filter;
        let out_a = self.a.out_span(p.ua as usize);
        let out_b = self.b.out_span(p.ub as usize);
        let pairs = out_a.len() as u64 * out_b.len() as u64;
        if slot < pairs {
            let ea = out_a[(slot / out_b.len() as u64) as usize];
            let eb = out_b[(slot % out_b.len() as u64) as usize];
            let oa = self.a.olabel(ea as usize);
            let ib = self.b.ilabel(eb as usize);
            if oa != ib {
                return None;
            }
            let kind = if oa != EPSILON {
                MoveKind::Match
            } else if filter && p.f == FilterState::Match {
                MoveKind::EpsBoth
            } else {
                return None;
            };
            return Some(Move {
                kind,
                arc_a: Some(ea),
                arc_b: Some(eb),
                next: PairState {
                    ua: self.a.dst(ea as usize),
                    ub: self.b.dst(eb as usize),
                    f: FilterState::Match,
                },
            });
        }
        let mut rest = slot - pairs;
        if self.eps_a_allowed(p.f) {
            let eps = self.a_eps_out.get(p.ua);
            if rest < eps.len() as u64 {
                let ea = eps[rest as usize];
                return Some(Move {
                    kind: MoveKind::EpsA,
                    arc_a: Some(ea),
                    arc_b: None,
                    next: PairState {
                        ua: self.a.dst(ea as usize),
                        ub: p.ub,
                        f: if filter { FilterState::AEps } else { FilterState::Match },
                    },
                });
            }
            rest -= eps.len() as u64;
        }
        if self.eps_b_allowed(p.f) {
            let eps = self.b_eps_out.get(p.ub);
            if rest < eps.len() as u64 {
                let eb = eps[rest as usize];
                return Some(Move {
                    kind: MoveKind::EpsB,
                    arc_a: None,
                    arc_b: Some(eb),
                    next: PairState {
                        ua: p.ua,
                        ub: self.b.dst(eb as usize),
                        f: if filter { FilterState::BEps } else { FilterState::Match },
                    },
                });
            }
        }
        None
    }

    /// Calls `f` for every legal move of `p`, in slot order.
    #[inline]
    pub fn for_each_move(&self, p: PairState, mut f: impl FnMut(Move)) {
        for slot in 0..self.slots(p) {
            if let Some(mv) = self.decode(p, slot) {
                f(mv);
            }
        }
    }

    /// Size of the reversed-move slot domain of pair `(va, vb)`, ignoring
    /// the filter state.
    #[inline]
    pub fn backward_slots(&self, va: NodeId, vb: NodeId) -> u64 {
        let pairs = self.a.in_span(va as usize).len() as u64 * self.b.in_span(vb as usize).len() as u64;
        pairs + self.a_eps_in.get(va).len() as u64 + self.b_eps_in.get(vb).len() as u64
    }

    /// Predecessor pair reached by reversing the move in `slot`, if any.
    /// Any move kind counts, so the predecessor set over-approximates the
    /// filtered one.
    #[inline]
    pub fn decode_backward(&self, va: NodeId, vb: NodeId, slot: u64) -> Option<(NodeId, NodeId)> {
        let in_a = self.a.in_span(va as usize);
        let in_b = self.b.in_span(vb as usize);
        let pairs = in_a.len() as u64 * in_b.len() as u64;
        if slot < pairs {
            let ea = in_a[(slot / in_b.len() as u64) as usize] as usize;
            let eb = in_b[(slot % in_b.len() as u64) as usize] as usize;
            return (self.a.olabel(ea) == self.b.ilabel(eb)).then(|| (self.a.src(ea), self.b.src(eb)));
        }
        let rest = slot - pairs;
        let eps_a = self.a_eps_in.get(va);
        if rest < eps_a.len() as u64 {
            return Some((self.a.src(eps_a[rest as usize] as usize), vb));
        }
        let rest = rest - eps_a.len() as u64;
        let eps_b = self.b_eps_in.get(vb);
        eps_b.get(rest as usize).map(|&eb| (va, self.b.src(eb as usize)))
    }

    /// Input label, output label and weight of the composed arc for `mv`.
    #[inline]
    pub fn arc_fields(&self, mv: &Move) -> (Label, Label, f32) {
        let (ilabel, wa) = match mv.arc_a {
            Some(e) => (self.a.ilabel(e as usize), Some(self.a.weights()[e as usize])),
            None => (EPSILON, None),
        };
        let (olabel, wb) = match mv.arc_b {
            Some(e) => (self.b.olabel(e as usize), Some(self.b.weights()[e as usize])),
            None => (EPSILON, None),
        };
        let weight = match (wa, wb) {
            (Some(x), Some(y)) => x + y,
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => unreachable!("every move consumes at least one arc"),
        };
        (ilabel, olabel, weight)
    }

    #[inline]
    pub fn is_accept(&self, p: PairState) -> bool {
        self.a.is_accept(p.ua as usize) && self.b.is_accept(p.ub as usize)
    }

    #[inline]
    pub fn is_start(&self, p: PairState) -> bool {
        p.f == FilterState::Match && self.a.is_start(p.ua as usize) && self.b.is_start(p.ub as usize)
    }
}

/// All legal moves out of `p`, in slot order.
pub fn match_moves(a: &Graph, b: &Graph, p: PairState, opts: ComposeOptions) -> Result<Vec<Move>> {
    let space = MoveSpace::new(a, b, opts)?;
    let mut out = Vec::new();
    space.for_each_move(p, |mv| out.push(mv));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, Arc};

    fn p(ua: NodeId, ub: NodeId, f: FilterState) -> PairState {
        PairState { ua, ub, f }
    }

    #[test]
    fn single_matching_pair() {
        let a = build_graph(2, &[0], &[1], &[Arc::new(0, 1, 0, 1, 0.0)]).unwrap();
        let b = build_graph(2, &[0], &[1], &[Arc::new(0, 1, 1, 2, 0.0)]).unwrap();
        let moves = match_moves(&a, &b, p(0, 0, FilterState::Match), ComposeOptions::default()).unwrap();
        assert_eq!(moves.len(), 1);
        assert_eq!(moves[0].kind, MoveKind::Match);
        assert_eq!(moves[0].next, p(1, 1, FilterState::Match));
    }

    #[test]
    fn label_mismatch_gives_no_moves() {
        let a = build_graph(2, &[0], &[1], &[Arc::new(0, 1, 0, 1, 0.0)]).unwrap();
        let b = build_graph(2, &[0], &[1], &[Arc::new(0, 1, 2, 3, 0.0)]).unwrap();
        assert!(
            match_moves(&a, &b, p(0, 0, FilterState::Match), ComposeOptions::default())
                .unwrap()
                .is_empty()
        );
    }

    fn eps_pair() -> (Graph, Graph) {
        let a = build_graph(2, &[0], &[1], &[Arc::new(0, 1, 0, EPSILON, 0.0)]).unwrap();
        let b = build_graph(2, &[0], &[1], &[Arc::new(0, 1, EPSILON, 5, 0.0)]).unwrap();
        (a, b)
    }

    fn kinds(moves: &[Move]) -> Vec<MoveKind> {
        moves.iter().map(|m| m.kind).collect()
    }

    #[test]
    fn filter_table() {
        let (a, b) = eps_pair();
        let on = ComposeOptions::default();
        let at = |f| kinds(&match_moves(&a, &b, p(0, 0, f), on).unwrap());
        assert_eq!(
            at(FilterState::Match),
            vec![MoveKind::EpsBoth, MoveKind::EpsA, MoveKind::EpsB]
        );
        assert_eq!(at(FilterState::AEps), vec![MoveKind::EpsA]);
        assert_eq!(at(FilterState::BEps), vec![MoveKind::EpsB]);

        let moves = match_moves(&a, &b, p(0, 0, FilterState::Match), on).unwrap();
        assert_eq!(moves[1].next.f, FilterState::AEps);
        assert_eq!(moves[2].next.f, FilterState::BEps);
        assert_eq!(moves[0].next, p(1, 1, FilterState::Match));
    }

    #[test]
    fn naive_mode() {
        let (a, b) = eps_pair();
        let off = ComposeOptions {
            epsilon_filter: false,
            ..ComposeOptions::default()
        };
        let moves = match_moves(&a, &b, p(0, 0, FilterState::Match), off).unwrap();
        assert_eq!(kinds(&moves), vec![MoveKind::EpsA, MoveKind::EpsB]);
        assert!(moves.iter().all(|m| m.next.f == FilterState::Match));
    }

    #[test]
    fn composed_arc_fields() {
        let a = build_graph(2, &[0], &[1], &[Arc::new(0, 1, 7, EPSILON, 0.25)]).unwrap();
        let b = build_graph(2, &[0], &[1], &[Arc::new(0, 1, EPSILON, 9, 0.5)]).unwrap();
        let s = MoveSpace::new(&a, &b, ComposeOptions::default()).unwrap();
        let moves = match_moves(&a, &b, p(0, 0, FilterState::Match), ComposeOptions::default()).unwrap();
        let fields: Vec<_> = moves.iter().map(|m| s.arc_fields(m)).collect();
        assert_eq!(fields, vec![(7, 9, 0.75), (7, EPSILON, 0.25), (EPSILON, 9, 0.5)]);
    }

    #[test]
    fn backward_moves_cover_forward_moves() {
        let (a, b) = eps_pair();
        let s = MoveSpace::new(&a, &b, ComposeOptions::default()).unwrap();
        let preds: Vec<_> = (0..s.backward_slots(1, 1))
            .filter_map(|k| s.decode_backward(1, 1, k))
            .collect();
        assert_eq!(preds, vec![(0, 0), (0, 1), (1, 0)]);
        let preds: Vec<_> = (0..s.backward_slots(1, 0))
            .filter_map(|k| s.decode_backward(1, 0, k))
            .collect();
        assert_eq!(preds, vec![(0, 0)]);
    }
}
