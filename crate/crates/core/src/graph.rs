//! Transducer storage in a structure-of-arrays layout.
//!
//! A [`Graph`] with `V` nodes and `E` arcs keeps:
//!
//! - `start` / `accept`: `V` flags each,
//! - five parallel arc arrays of length `E`: input labels, output labels,
//!   weights, source nodes and destination nodes,
//! - `in_arcs` / `out_arcs`: arc indices grouped by node (each a permutation
//!   of `0..E`),
//! - `in_arc_offset` / `out_arc_offset`: `V + 1` entries; node `v` owns
//!   `arcs[offset[v]..offset[v + 1]]` in the matching adjacency array.
//!
//! Graphs are immutable once built. Node and arc indices are `u32`.

use std::fmt;

use crate::error::{Error, Result};
use crate::weight::{is_valid_label, Label, Weight, EPSILON};

pub type NodeId = u32;
pub type ArcId = u32;

/// A single transition, used when building graphs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub src: NodeId,
    pub dst: NodeId,
    pub ilabel: Label,
    pub olabel: Label,
    pub weight: f32,
}

impl Arc {
    pub fn new(src: NodeId, dst: NodeId, ilabel: Label, olabel: Label, weight: f32) -> Self {
        Arc {
            src,
            dst,
            ilabel,
            olabel,
            weight,
        }
    }
}

/// The raw arrays of a [`Graph`], for callers that assemble the layout
/// themselves (and for testing [`validate`] on broken layouts).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GraphParts {
    pub start: Vec<bool>,
    pub accept: Vec<bool>,
    pub ilabels: Vec<Label>,
    pub olabels: Vec<Label>,
    pub weights: Vec<f32>,
    pub src_nodes: Vec<NodeId>,
    pub dst_nodes: Vec<NodeId>,
    pub in_arcs: Vec<ArcId>,
    pub out_arcs: Vec<ArcId>,
    pub in_arc_offset: Vec<ArcId>,
    pub out_arc_offset: Vec<ArcId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    parts: GraphParts,
}

impl Default for Graph {
    fn default() -> Self {
        Graph::empty()
    }
}

/// Builds a graph from a node count, start and accept lists, and arcs.
///
/// Within each node's span, arc indices appear in insertion order.
pub fn build_graph(num_nodes: usize, starts: &[NodeId], accepts: &[NodeId], arcs: &[Arc]) -> Result<Graph> {
    let mut start = vec![false; num_nodes];
    let mut accept = vec![false; num_nodes];
    for &s in starts {
        *start.get_mut(s as usize).ok_or(Error::NodeOutOfRange {
            node: s as usize,
            num_nodes,
        })? = true;
    }
    for &a in accepts {
        *accept.get_mut(a as usize).ok_or(Error::NodeOutOfRange {
            node: a as usize,
            num_nodes,
        })? = true;
    }
    let mut cols = ArcColumns::with_capacity(arcs.len());
    for arc in arcs {
        cols.push(arc);
    }
    Graph::from_arc_columns(start, accept, cols)
}

/// Column-wise arc storage accumulated before adjacency is computed.
#[derive(Clone, Debug, Default)]
pub struct ArcColumns {
    pub ilabels: Vec<Label>,
    pub olabels: Vec<Label>,
    pub weights: Vec<f32>,
    pub src_nodes: Vec<NodeId>,
    pub dst_nodes: Vec<NodeId>,
}

impl ArcColumns {
    pub fn with_capacity(n: usize) -> Self {
        ArcColumns {
            ilabels: Vec::with_capacity(n),
            olabels: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
            src_nodes: Vec::with_capacity(n),
            dst_nodes: Vec::with_capacity(n),
        }
    }

    #[inline]
    pub fn push(&mut self, arc: &Arc) {
        self.ilabels.push(arc.ilabel);
        self.olabels.push(arc.olabel);
        self.weights.push(arc.weight);
        self.src_nodes.push(arc.src);
        self.dst_nodes.push(arc.dst);
    }

    pub fn len(&self) -> usize {
        self.ilabels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ilabels.is_empty()
    }
}

/// Counting sort of arc indices by `key`; ties keep ascending arc order.
fn group_by_node(num_nodes: usize, key: &[NodeId]) -> (Vec<ArcId>, Vec<ArcId>) {
    let mut offset = vec![0 as ArcId; num_nodes + 1];
    for &k in key {
        offset[k as usize + 1] += 1;
    }
    for v in 0..num_nodes {
        offset[v + 1] += offset[v];
    }
    let mut cursor = offset.clone();
    let mut arcs = vec![0 as ArcId; key.len()];
    for (e, &k) in key.iter().enumerate() {
        let slot = &mut cursor[k as usize];
        arcs[*slot as usize] = e as ArcId;
        *slot += 1;
    }
    (arcs, offset)
}

impl Graph {
    pub fn empty() -> Self {
        Graph {
            parts: GraphParts {
                in_arc_offset: vec![0],
                out_arc_offset: vec![0],
                ..GraphParts::default()
            },
        }
    }

    /// Computes adjacency for arcs given column-wise. Checks node ranges,
    /// labels and index capacity.
    pub fn from_arc_columns(start: Vec<bool>, accept: Vec<bool>, cols: ArcColumns) -> Result<Graph> {
        let num_nodes = start.len();
        if accept.len() != num_nodes {
            return Err(Error::InvalidArgument(format!(
                "start has {} flags but accept has {}",
                num_nodes,
                accept.len()
            )));
        }
        if num_nodes >= NodeId::MAX as usize || cols.len() >= ArcId::MAX as usize {
            return Err(Error::ResourceLimit(format!(
                "{} nodes / {} arcs exceed 32-bit indexing",
                num_nodes,
                cols.len()
            )));
        }
        for e in 0..cols.len() {
            for node in [cols.src_nodes[e], cols.dst_nodes[e]] {
                if node as usize >= num_nodes {
                    return Err(Error::ArcNodeOutOfRange {
                        arc: e,
                        node,
                        num_nodes,
                    });
                }
            }
            for label in [cols.ilabels[e], cols.olabels[e]] {
                if !is_valid_label(label) {
                    return Err(Error::InvalidLabel { arc: e, label });
                }
            }
        }
        let (out_arcs, out_arc_offset) = group_by_node(num_nodes, &cols.src_nodes);
        let (in_arcs, in_arc_offset) = group_by_node(num_nodes, &cols.dst_nodes);
        Ok(Graph {
            parts: GraphParts {
                start,
                accept,
                ilabels: cols.ilabels,
                olabels: cols.olabels,
                weights: cols.weights,
                src_nodes: cols.src_nodes,
                dst_nodes: cols.dst_nodes,
                in_arcs,
                out_arcs,
                in_arc_offset,
                out_arc_offset,
            },
        })
    }

    /// Wraps raw arrays after checking every layout invariant.
    pub fn from_parts(parts: GraphParts) -> Result<Graph> {
        let g = Graph { parts };
        match validate(&g) {
            Ok(()) => Ok(g),
            Err(v) => Err(Error::InvalidArgument(v.to_string())),
        }
    }

    /// Wraps raw arrays without any checking. Accessors may panic on a
    /// malformed layout; run [`validate`] first if unsure.
    pub fn from_parts_unchecked(parts: GraphParts) -> Graph {
        Graph { parts }
    }

    pub fn parts(&self) -> &GraphParts {
        &self.parts
    }

    pub fn into_parts(self) -> GraphParts {
        self.parts
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.parts.start.len()
    }

    #[inline]
    pub fn num_arcs(&self) -> usize {
        self.parts.ilabels.len()
    }

    pub fn start(&self) -> &[bool] {
        &self.parts.start
    }

    pub fn accept(&self) -> &[bool] {
        &self.parts.accept
    }

    #[inline]
    pub fn is_start(&self, v: usize) -> bool {
        self.parts.start[v]
    }

    #[inline]
    pub fn is_accept(&self, v: usize) -> bool {
        self.parts.accept[v]
    }

    pub fn starts(&self) -> Vec<NodeId> {
        flagged(&self.parts.start)
    }

    pub fn accepts(&self) -> Vec<NodeId> {
        flagged(&self.parts.accept)
    }

    pub fn ilabels(&self) -> &[Label] {
        &self.parts.ilabels
    }

    pub fn olabels(&self) -> &[Label] {
        &self.parts.olabels
    }

    pub fn weights(&self) -> &[f32] {
        &self.parts.weights
    }

    pub fn src_nodes(&self) -> &[NodeId] {
        &self.parts.src_nodes
    }

    pub fn dst_nodes(&self) -> &[NodeId] {
        &self.parts.dst_nodes
    }

    pub fn in_arcs(&self) -> &[ArcId] {
        &self.parts.in_arcs
    }

    pub fn out_arcs(&self) -> &[ArcId] {
        &self.parts.out_arcs
    }

    pub fn in_arc_offset(&self) -> &[ArcId] {
        &self.parts.in_arc_offset
    }

    pub fn out_arc_offset(&self) -> &[ArcId] {
        &self.parts.out_arc_offset
    }

    #[inline]
    pub fn ilabel(&self, e: usize) -> Label {
        self.parts.ilabels[e]
    }

    #[inline]
    pub fn olabel(&self, e: usize) -> Label {
        self.parts.olabels[e]
    }

    #[inline]
    pub fn weight(&self, e: usize) -> Weight {
        Weight(self.parts.weights[e])
    }

    #[inline]
    pub fn src(&self, e: usize) -> NodeId {
        self.parts.src_nodes[e]
    }

    #[inline]
    pub fn dst(&self, e: usize) -> NodeId {
        self.parts.dst_nodes[e]
    }

    pub fn arc(&self, e: usize) -> Arc {
        Arc {
            src: self.src(e),
            dst: self.dst(e),
            ilabel: self.ilabel(e),
            olabel: self.olabel(e),
            weight: self.parts.weights[e],
        }
    }

    /// All arcs in arc-index order.
    pub fn arcs(&self) -> impl Iterator<Item = Arc> + '_ {
        (0..self.num_arcs()).map(move |e| self.arc(e))
    }

    /// Incoming arc indices of `v`, without bounds checking beyond slicing.
    #[inline]
    pub fn in_span(&self, v: usize) -> &[ArcId] {
        let p = &self.parts;
        &p.in_arcs[p.in_arc_offset[v] as usize..p.in_arc_offset[v + 1] as usize]
    }

    /// Outgoing arc indices of `v`.
    #[inline]
    pub fn out_span(&self, v: usize) -> &[ArcId] {
        let p = &self.parts;
        &p.out_arcs[p.out_arc_offset[v] as usize..p.out_arc_offset[v + 1] as usize]
    }

    /// Incoming arc indices of `v`, or an error if `v` is not a node.
    pub fn incoming_arcs(&self, v: usize) -> Result<&[ArcId]> {
        self.check_node(v)?;
        Ok(self.in_span(v))
    }

    /// Outgoing arc indices of `v`, or an error if `v` is not a node.
    pub fn outgoing_arcs(&self, v: usize) -> Result<&[ArcId]> {
        self.check_node(v)?;
        Ok(self.out_span(v))
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.num_nodes() {
            return Err(Error::NodeOutOfRange {
                node: v,
                num_nodes: self.num_nodes(),
            });
        }
        Ok(())
    }

    pub fn out_degree(&self, v: usize) -> usize {
        let o = &self.parts.out_arc_offset;
        (o[v + 1] - o[v]) as usize
    }

    /// Maximum out-degree over all nodes (0 for an empty graph).
    pub fn max_out_degree(&self) -> usize {
        (0..self.num_nodes()).map(|v| self.out_degree(v)).max().unwrap_or(0)
    }

    pub fn has_epsilon(&self) -> bool {
        self.parts
            .ilabels
            .iter()
            .chain(&self.parts.olabels)
            .any(|&l| l == EPSILON)
    }

    /// The reverse graph: arcs flipped, start and accept swapped. Node `v`'s
    /// in-span in the result lists the same arcs, in the same order, as its
    /// out-span here.
    pub fn reversed(&self) -> Graph {
        let mut cols = ArcColumns::with_capacity(self.num_arcs());
        for arc in self.arcs() {
            cols.push(&Arc {
                src: arc.dst,
                dst: arc.src,
                ..arc
            });
        }
        Graph::from_arc_columns(self.parts.accept.clone(), self.parts.start.clone(), cols)
            .expect("reversal of a valid graph is valid")
    }
}

fn flagged(flags: &[bool]) -> Vec<NodeId> {
    flags
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(v, _)| v as NodeId)
        .collect()
}

/// The first broken layout invariant found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    FlagLength {
        start: usize,
        accept: usize,
    },
    ArcArrayLength {
        array: &'static str,
        len: usize,
        expected: usize,
    },
    OffsetLength {
        array: &'static str,
        len: usize,
        expected: usize,
    },
    OffsetStart {
        array: &'static str,
        value: ArcId,
    },
    OffsetSumMismatch {
        array: &'static str,
        value: ArcId,
        expected: usize,
    },
    OffsetNotMonotone {
        array: &'static str,
        node: usize,
    },
    NotPermutation {
        array: &'static str,
        position: usize,
    },
    AdjacencySourceMismatch {
        node: usize,
        arc: ArcId,
    },
    AdjacencyDestinationMismatch {
        node: usize,
        arc: ArcId,
    },
    NodeOutOfRange {
        arc: usize,
        node: NodeId,
    },
    InvalidLabel {
        arc: usize,
        label: Label,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FlagLength { start, accept } => {
                write!(f, "flag length mismatch: start has {start}, accept has {accept}")
            }
            Violation::ArcArrayLength { array, len, expected } => {
                write!(f, "arc array length mismatch: {array} has {len}, expected {expected}")
            }
            Violation::OffsetLength { array, len, expected } => {
                write!(f, "offset length mismatch: {array} has {len}, expected {expected}")
            }
            Violation::OffsetStart { array, value } => {
                write!(f, "offset start mismatch: {array}[0] = {value}")
            }
            Violation::OffsetSumMismatch { array, value, expected } => {
                write!(f, "offset sum mismatch: {array}[V] = {value}, expected E = {expected}")
            }
            Violation::OffsetNotMonotone { array, node } => {
                write!(f, "offset not monotone: {array} decreases after node {node}")
            }
            Violation::NotPermutation { array, position } => {
                write!(f, "{array} is not a permutation of arc indices (position {position})")
            }
            Violation::AdjacencySourceMismatch { node, arc } => {
                write!(f, "adjacency/source mismatch: arc {arc} in out-span of node {node}")
            }
            Violation::AdjacencyDestinationMismatch { node, arc } => {
                write!(f, "adjacency/destination mismatch: arc {arc} in in-span of node {node}")
            }
            Violation::NodeOutOfRange { arc, node } => {
                write!(f, "arc {arc} references node {node} out of range")
            }
            Violation::InvalidLabel { arc, label } => write!(f, "arc {arc} has invalid label {label}"),
        }
    }
}

impl std::error::Error for Violation {}

/// Checks every layout invariant of `g` and reports the first violation.
pub fn validate(g: &Graph) -> Result<(), Violation> {
    let p = &g.parts;
    let v = p.start.len();
    if p.accept.len() != v {
        return Err(Violation::FlagLength {
            start: v,
            accept: p.accept.len(),
        });
    }
    let e = p.ilabels.len();
    for (array, len) in [
        ("olabels", p.olabels.len()),
        ("weights", p.weights.len()),
        ("srcNodes", p.src_nodes.len()),
        ("dstNodes", p.dst_nodes.len()),
        ("inArcs", p.in_arcs.len()),
        ("outArcs", p.out_arcs.len()),
    ] {
        if len != e {
            return Err(Violation::ArcArrayLength {
                array,
                len,
                expected: e,
            });
        }
    }
    for arc in 0..e {
        for node in [p.src_nodes[arc], p.dst_nodes[arc]] {
            if node as usize >= v {
                return Err(Violation::NodeOutOfRange { arc, node });
            }
        }
        for label in [p.ilabels[arc], p.olabels[arc]] {
            if !is_valid_label(label) {
                return Err(Violation::InvalidLabel { arc, label });
            }
        }
    }
    for (array, offset, arcs, ends, out) in [
        ("inArcOffset", &p.in_arc_offset, &p.in_arcs, &p.dst_nodes, false),
        ("outArcOffset", &p.out_arc_offset, &p.out_arcs, &p.src_nodes, true),
    ] {
        if offset.len() != v + 1 {
            return Err(Violation::OffsetLength {
                array,
                len: offset.len(),
                expected: v + 1,
            });
        }
        if offset[0] != 0 {
            return Err(Violation::OffsetStart {
                array,
                value: offset[0],
            });
        }
        if offset[v] as usize != e {
            return Err(Violation::OffsetSumMismatch {
                array,
                value: offset[v],
                expected: e,
            });
        }
        if let Some(node) = (0..v).find(|&n| offset[n] > offset[n + 1]) {
            return Err(Violation::OffsetNotMonotone { array, node });
        }
        let adj_name = if out { "outArcs" } else { "inArcs" };
        let mut seen = vec![false; e];
        for (position, &a) in arcs.iter().enumerate() {
            match seen.get_mut(a as usize) {
                Some(s) if !*s => *s = true,
                _ => {
                    return Err(Violation::NotPermutation {
                        array: adj_name,
                        position,
                    })
                }
            }
        }
        for node in 0..v {
            for &a in &arcs[offset[node] as usize..offset[node + 1] as usize] {
                if ends[a as usize] as usize != node {
                    return Err(if out {
                        Violation::AdjacencySourceMismatch { node, arc: a }
                    } else {
                        Violation::AdjacencyDestinationMismatch { node, arc: a }
                    });
                }
            }
        }
    }
    Ok(())
}

/// Kleene closure: one new node (index `V`) that is both start and accept,
/// with `ε:ε` arcs of weight `0.0` from it to every former start and from
/// every former accept back to it. Former flags are cleared; original arcs
/// keep their indices.
pub fn closure(g: &Graph) -> Graph {
    let v = g.num_nodes();
    let hub = v as NodeId;
    let starts = g.starts();
    let accepts = g.accepts();
    let mut cols = ArcColumns::with_capacity(g.num_arcs() + starts.len() + accepts.len());
    for arc in g.arcs() {
        cols.push(&arc);
    }
    for &s in &starts {
        cols.push(&Arc::new(hub, s, EPSILON, EPSILON, 0.0));
    }
    for &a in &accepts {
        cols.push(&Arc::new(a, hub, EPSILON, EPSILON, 0.0));
    }
    let mut start = vec![false; v + 1];
    let mut accept = vec![false; v + 1];
    start[v] = true;
    accept[v] = true;
    Graph::from_arc_columns(start, accept, cols).expect("closure of a valid graph is valid")
}
