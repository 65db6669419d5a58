//! Brute-force reference semantics.
//!
//! Everything here enumerates explicit paths, so it is only usable on small
//! (ideally acyclic) graphs. It is kept independent of the composition
//! engines and serves as their test oracle.

use std::collections::BTreeMap;

use crate::compose::{canonicalize, ComposedGraph};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::weight::{Label, Weight, EPSILON};

/// Default limit on the number of accepting paths an enumeration may return.
pub const DEFAULT_PATH_CAP: usize = 1_000_000;

/// Labels and score of one accepting path, with ε stripped from both tapes.
#[derive(Clone, Debug, PartialEq)]
pub struct PathLabeling {
    pub input: Vec<Label>,
    pub output: Vec<Label>,
    pub score: Weight,
}

/// An `(input, output)` label pair with ε stripped.
pub type Labeling = (Vec<Label>, Vec<Label>);

/// `(input, output) -> score`; missing entries are semiring zero.
pub type ScoreTable = BTreeMap<Labeling, Weight>;

/// `(input, output) -> number of paths`.
pub type CountTable = BTreeMap<Labeling, usize>;

/// All start-to-accept paths with at most `max_len` arcs.
pub fn enumerate_accepting_paths(g: &Graph, max_len: usize) -> Result<Vec<PathLabeling>> {
    enumerate_accepting_paths_capped(g, max_len, DEFAULT_PATH_CAP)
}

/// As [`enumerate_accepting_paths`], failing with a resource error once more
/// than `cap` paths have been found.
pub fn enumerate_accepting_paths_capped(g: &Graph, max_len: usize, cap: usize) -> Result<Vec<PathLabeling>> {
    struct Walk<'g> {
        g: &'g Graph,
        max_len: usize,
        cap: usize,
        arcs: Vec<usize>,
        out: Vec<PathLabeling>,
    }

    impl Walk<'_> {
        fn visit(&mut self, v: usize) -> Result<()> {
            if self.g.is_accept(v) {
                if self.out.len() == self.cap {
                    return Err(Error::ResourceLimit(format!(
                        "more than {} accepting paths of length <= {}",
                        self.cap, self.max_len
                    )));
                }
                let strip = |labels: &[Label]| -> Vec<Label> {
                    self.arcs.iter().map(|&e| labels[e]).filter(|&l| l != EPSILON).collect()
                };
                let mut score = 0.0f32;
                for &e in &self.arcs {
                    score += self.g.weights()[e];
                }
                let labeling = PathLabeling {
                    input: strip(self.g.ilabels()),
                    output: strip(self.g.olabels()),
                    score: Weight(score),
                };
                self.out.push(labeling);
            }
            if self.arcs.len() == self.max_len {
                return Ok(());
            }
            for &e in self.g.out_span(v) {
                self.arcs.push(e as usize);
                self.visit(self.g.dst(e as usize) as usize)?;
                self.arcs.pop();
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        g,
        max_len,
        cap,
        arcs: Vec::new(),
        out: Vec::new(),
    };
    for s in g.starts() {
        walk.visit(s as usize)?;
    }
    Ok(walk.out)
}

/// Log-add of all scores grouped by labeling.
fn group_scores(items: impl IntoIterator<Item = (Labeling, Weight)>) -> ScoreTable {
    let mut groups: BTreeMap<Labeling, Vec<Weight>> = BTreeMap::new();
    for (k, w) in items {
        groups.entry(k).or_default().push(w);
    }
    groups.into_iter().map(|(k, ws)| (k, Weight::sum(ws))).collect()
}

/// Scores of every labeling of `g` found within `max_len` arcs.
pub fn score_table(g: &Graph, max_len: usize) -> Result<ScoreTable> {
    let paths = enumerate_accepting_paths(g, max_len)?;
    Ok(group_scores(paths.into_iter().map(|p| ((p.input, p.output), p.score))))
}

/// Number of accepting paths per labeling.
pub fn path_counts(g: &Graph, max_len: usize) -> Result<CountTable> {
    let mut counts = BTreeMap::new();
    for p in enumerate_accepting_paths(g, max_len)? {
        *counts.entry((p.input, p.output)).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Log-add of the scores of all accepting paths labeled exactly `(x, z)`.
pub fn transduce_score(g: &Graph, x: &[Label], z: &[Label], max_len: usize) -> Result<Weight> {
    let paths = enumerate_accepting_paths(g, max_len)?;
    Ok(Weight::sum(
        paths
            .into_iter()
            .filter(|p| p.input == x && p.output == z)
            .map(|p| p.score),
    ))
}

/// Pairs `(path in A labeled (x, y), path in B labeled (y, z))`.
fn matched_pairs(a: &Graph, b: &Graph, max_len: usize) -> Result<Vec<(Labeling, Weight)>> {
    let paths_a = enumerate_accepting_paths(a, max_len)?;
    let paths_b = enumerate_accepting_paths(b, max_len)?;
    let mut by_input: BTreeMap<&[Label], Vec<&PathLabeling>> = BTreeMap::new();
    for p in &paths_b {
        by_input.entry(&p.input).or_default().push(p);
    }
    let mut out = Vec::new();
    for pa in &paths_a {
        for pb in by_input.get(pa.output.as_slice()).into_iter().flatten() {
            out.push(((pa.input.clone(), pb.output.clone()), pa.score.times(pb.score)));
        }
    }
    Ok(out)
}

/// `C(x, z) = ⊕_y A(x, y) ⊗ B(y, z)`, aggregated over matched path pairs.
pub fn bruteforce_compose_score(a: &Graph, b: &Graph, max_len: usize) -> Result<ScoreTable> {
    Ok(group_scores(matched_pairs(a, b, max_len)?))
}

/// Number of matched path pairs per `(x, z)`.
pub fn matched_pair_counts(a: &Graph, b: &Graph, max_len: usize) -> Result<CountTable> {
    let mut counts = BTreeMap::new();
    for (k, _) in matched_pairs(a, b, max_len)? {
        *counts.entry(k).or_insert(0) += 1;
    }
    Ok(counts)
}

/// `|a - b| <= rel * max(1, |a|, |b|)`; two zeros compare equal.
pub fn scores_close(a: Weight, b: Weight, rel: f32) -> bool {
    if a.is_zero() || b.is_zero() {
        return a.is_zero() && b.is_zero();
    }
    let scale = 1f32.max(a.0.abs()).max(b.0.abs());
    (a.0 - b.0).abs() <= rel * scale
}

/// `true` iff both graphs canonicalize to identical arrays, weights
/// compared bit for bit.
pub fn graphs_equivalent(g1: &ComposedGraph, g2: &ComposedGraph) -> Result<bool> {
    let c1 = canonicalize(g1)?;
    let c2 = canonicalize(g2)?;
    if c1.pair_keys != c2.pair_keys {
        return Ok(false);
    }
    let (p1, p2) = (c1.graph.parts(), c2.graph.parts());
    let same_weights = p1.weights.len() == p2.weights.len()
        && p1
            .weights
            .iter()
            .zip(&p2.weights)
            .all(|(x, y)| x.to_bits() == y.to_bits());
    Ok(same_weights
        && p1.start == p2.start
        && p1.accept == p2.accept
        && p1.ilabels == p2.ilabels
        && p1.olabels == p2.olabels
        && p1.src_nodes == p2.src_nodes
        && p1.dst_nodes == p2.dst_nodes
        && p1.in_arcs == p2.in_arcs
        && p1.out_arcs == p2.out_arcs
        && p1.in_arc_offset == p2.in_arc_offset
        && p1.out_arc_offset == p2.out_arc_offset)
}
