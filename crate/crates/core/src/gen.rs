//! Seeded generators for benchmark and test graphs.
//!
//! All randomness comes from [`SplitMix64`]; draws happen in a fixed,
//! documented order so the same seed gives the same graph everywhere.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::graph::{Arc, ArcColumns, Graph, NodeId};
use crate::weight::{Label, EPSILON};

/// The splitmix64 generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// `next_u64() % n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Mixes a base seed with a list of integers into an independent seed.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut rng = SplitMix64::new(base);
    let mut seed = rng.next_u64();
    for &p in parts {
        rng = SplitMix64::new(seed ^ p.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        seed = rng.next_u64();
    }
    seed
}

/// A graph where every node has exactly `degree` outgoing arcs.
///
/// Node 0 is the only start, node `num_nodes - 1` the only accept. For each
/// node in order and each of its arcs, the destination is drawn uniformly
/// over all nodes (self-loops allowed), then the label uniformly over
/// `0..num_tokens`; the arc is `label:label` with weight 0.
pub fn random_graph(num_nodes: usize, degree: usize, num_tokens: usize, seed: u64) -> Result<Graph> {
    if num_nodes < 2 || num_tokens < 1 {
        return Err(Error::InvalidArgument(format!(
            "random_graph needs num_nodes >= 2 and num_tokens >= 1 (got {num_nodes}, {num_tokens})"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut cols = ArcColumns::with_capacity(num_nodes * degree);
    for u in 0..num_nodes {
        for _ in 0..degree {
            let dst = rng.below(num_nodes as u64) as NodeId;
            let label = rng.below(num_tokens as u64) as Label;
            cols.push(&Arc::new(u as NodeId, dst, label, label, 0.0));
        }
    }
    Graph::from_arc_columns(single_flag(num_nodes, 0), single_flag(num_nodes, num_nodes - 1), cols)
}

fn single_flag(n: usize, at: usize) -> Vec<bool> {
    let mut v = vec![false; n];
    v[at] = true;
    v
}

/// An acyclic transducer: every arc goes from a lower to a higher node.
///
/// Node 0 is the start and `num_nodes - 1` the accept. For each node `u` in
/// order: the degree is drawn from `0..=max_degree`; then per arc, the
/// destination from `u+1..num_nodes`, the input label, the output label,
/// and two uniforms deciding whether the input and output tapes become ε.
/// The last node has no arcs (no draws). Weights are 0.
pub fn random_dag(num_nodes: usize, max_degree: usize, num_tokens: usize, eps_prob: f64, seed: u64) -> Result<Graph> {
    if num_nodes < 2 || num_tokens < 1 || !(0.0..=1.0).contains(&eps_prob) {
        return Err(Error::InvalidArgument(format!(
            "random_dag needs num_nodes >= 2, num_tokens >= 1, eps_prob in [0, 1] \
             (got {num_nodes}, {num_tokens}, {eps_prob})"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut cols = ArcColumns::default();
    for u in 0..num_nodes - 1 {
        let degree = rng.below(max_degree as u64 + 1);
        for _ in 0..degree {
            let dst = (u + 1) as u64 + rng.below((num_nodes - 1 - u) as u64);
            let mut ilabel = rng.below(num_tokens as u64) as Label;
            let mut olabel = rng.below(num_tokens as u64) as Label;
            if rng.uniform() < eps_prob {
                ilabel = EPSILON;
            }
            if rng.uniform() < eps_prob {
                olabel = EPSILON;
            }
            cols.push(&Arc::new(u as NodeId, dst as NodeId, ilabel, olabel, 0.0));
        }
    }
    Graph::from_arc_columns(single_flag(num_nodes, 0), single_flag(num_nodes, num_nodes - 1), cols)
}

/// Copy of `g` with arc weights redrawn uniformly from `[lo, hi)`, in arc
/// order.
pub fn randomize_weights(g: &Graph, lo: f32, hi: f32, seed: u64) -> Graph {
    let mut rng = SplitMix64::new(seed);
    let mut parts = g.clone().into_parts();
    for w in &mut parts.weights {
        *w = lo + (hi - lo) * rng.uniform() as f32;
    }
    Graph::from_parts_unchecked(parts)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconEntry {
    pub word: Label,
    pub pronunciation: Vec<Label>,
}

/// Word-to-phoneme mappings. Word ids are unique; phoneme ids lie in
/// `0..phoneme_count`. Symbol names are present for loaded lexicons and
/// empty for synthetic ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    pub entries: Vec<LexiconEntry>,
    pub phoneme_count: usize,
    pub word_names: Vec<String>,
    pub phoneme_names: Vec<String>,
}

impl Lexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `count` entries drawn without replacement (partial Fisher-Yates over
    /// entry positions), keeping their word ids.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Lexicon> {
        if count > self.len() {
            return Err(Error::Lexicon(format!(
                "cannot sample {count} words from a lexicon of {}",
                self.len()
            )));
        }
        let mut rng = SplitMix64::new(seed);
        let mut idx: Vec<usize> = (0..self.len()).collect();
        for i in 0..count {
            let j = i + rng.below((self.len() - i) as u64) as usize;
            idx.swap(i, j);
        }
        Ok(Lexicon {
            entries: idx[..count].iter().map(|&i| self.entries[i].clone()).collect(),
            phoneme_count: self.phoneme_count,
            word_names: self.word_names.clone(),
            phoneme_names: self.phoneme_names.clone(),
        })
    }
}

/// `num_words` distinct pronunciations; word `i` gets id `i`.
///
/// Per word: the length is drawn from `min_len..=max_len`, then each
/// phoneme from `0..phoneme_count`; a pronunciation already taken is
/// redrawn from scratch.
pub fn synthetic_lexicon(
    num_words: usize,
    phoneme_count: usize,
    min_len: usize,
    max_len: usize,
    seed: u64,
) -> Result<Lexicon> {
    if min_len < 1 || min_len > max_len || phoneme_count < 1 {
        return Err(Error::InvalidArgument(format!(
            "synthetic_lexicon needs 1 <= min_len <= max_len and phoneme_count >= 1 \
             (got {min_len}, {max_len}, {phoneme_count})"
        )));
    }
    let capacity = (min_len..=max_len)
        .map(|l| (phoneme_count as u64).saturating_pow(l as u32))
        .fold(0u64, u64::saturating_add);
    if (num_words as u64) > capacity {
        return Err(Error::InvalidArgument(format!(
            "only {capacity} distinct pronunciations exist for {num_words} words"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut used = HashSet::with_capacity(num_words);
    let mut entries = Vec::with_capacity(num_words);
    for word in 0..num_words {
        let pronunciation = loop {
            let len = min_len + rng.below((max_len - min_len + 1) as u64) as usize;
            let p: Vec<Label> = (0..len).map(|_| rng.below(phoneme_count as u64) as Label).collect();
            if used.insert(p.clone()) {
                break p;
            }
        };
        entries.push(LexiconEntry {
            word: word as Label,
            pronunciation,
        });
    }
    Ok(Lexicon {
        entries,
        phoneme_count,
        word_names: Vec::new(),
        phoneme_names: Vec::new(),
    })
}

/// Reads `word phoneme phoneme ...` lines (`#` comments allowed).
///
/// Word ids follow line order. With an `inventory`, phoneme ids are
/// positions in it and unknown tokens are errors; otherwise ids are
/// assigned in order of first appearance.
pub fn load_lexicon<R: BufRead>(reader: R, inventory: Option<&[String]>) -> Result<Lexicon> {
    let mut phoneme_names: Vec<String> = inventory.map(<[String]>::to_vec).unwrap_or_default();
    let mut phoneme_ids: HashMap<String, Label> = phoneme_names
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i as Label))
        .collect();
    let mut word_ids: HashMap<String, Label> = HashMap::new();
    let mut word_names = Vec::new();
    let mut entries = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(word) = tokens.next() else {
            continue;
        };
        if word_ids.contains_key(word) {
            return Err(Error::Lexicon(format!("line {line_no}: duplicate word '{word}'")));
        }
        let mut pronunciation = Vec::new();
        for tok in tokens {
            let id = match phoneme_ids.get(tok) {
                Some(&id) => id,
                None if inventory.is_some() => {
                    return Err(Error::Lexicon(format!("line {line_no}: unknown phoneme '{tok}'")));
                }
                None => {
                    let id = phoneme_names.len() as Label;
                    phoneme_names.push(tok.to_string());
                    phoneme_ids.insert(tok.to_string(), id);
                    id
                }
            };
            pronunciation.push(id);
        }
        if pronunciation.is_empty() {
            return Err(Error::Lexicon(format!("line {line_no}: word '{word}' has no phonemes")));
        }
        let id = word_names.len() as Label;
        word_ids.insert(word.to_string(), id);
        word_names.push(word.to_string());
        entries.push(LexiconEntry {
            word: id,
            pronunciation,
        });
    }
    Ok(Lexicon {
        entries,
        phoneme_count: phoneme_names.len(),
        word_names,
        phoneme_names,
    })
}

/// Maps phoneme sequences to words: a shared start node 0 and, per entry,
/// a fresh chain whose first arc is `p0:word` and later arcs `pj:ε`. Chain
/// ends are accepting. Weights are 0.
pub fn lexicon_graph(lex: &Lexicon) -> Graph {
    let num_nodes = 1 + lex.entries.iter().map(|e| e.pronunciation.len()).sum::<usize>();
    let mut cols = ArcColumns::with_capacity(num_nodes - 1);
    let mut accept = vec![false; num_nodes];
    let mut next = 1 as NodeId;
    for entry in &lex.entries {
        let mut prev = 0 as NodeId;
        for (j, &p) in entry.pronunciation.iter().enumerate() {
            let olabel = if j == 0 { entry.word } else { EPSILON };
            cols.push(&Arc::new(prev, next, p, olabel, 0.0));
            prev = next;
            next += 1;
        }
        accept[prev as usize] = true;
    }
    Graph::from_arc_columns(single_flag(num_nodes, 0), accept, cols).expect("lexicon chains are well formed")
}

/// Where emission scores come from.
#[derive(Clone, Debug)]
pub enum EmissionScores {
    /// Draw `-uniform()` per arc, frame-major then phoneme.
    Seeded(u64),
    /// `scores[frame][phoneme]`.
    Table(Vec<Vec<f32>>),
}

/// A linear acceptor with nodes `0..=num_frames`: for every frame `t` and
/// phoneme `p`, an arc `t -> t+1` labeled `p:p` with weight `score(t, p)`.
pub fn emissions_graph(num_frames: usize, phoneme_count: usize, scores: EmissionScores) -> Result<Graph> {
    if num_frames < 1 {
        return Err(Error::InvalidArgument(
            "emissions_graph needs at least one frame".into(),
        ));
    }
    let mut score: Box<dyn FnMut(usize, usize) -> f32> = match scores {
        EmissionScores::Seeded(seed) => {
            let mut rng = SplitMix64::new(seed);
            Box::new(move |_, _| -(rng.uniform() as f32))
        }
        EmissionScores::Table(table) => {
            if table.len() != num_frames || table.iter().any(|row| row.len() != phoneme_count) {
                return Err(Error::InvalidArgument(format!(
                    "score table must be {num_frames} x {phoneme_count}"
                )));
            }
            Box::new(move |t, p| table[t][p])
        }
    };
    let mut cols = ArcColumns::with_capacity(num_frames * phoneme_count);
    for t in 0..num_frames {
        for p in 0..phoneme_count {
            let w = score(t, p);
            cols.push(&Arc::new(t as NodeId, (t + 1) as NodeId, p as Label, p as Label, w));
        }
    }
    Graph::from_arc_columns(
        single_flag(num_frames + 1, 0),
        single_flag(num_frames + 1, num_frames),
        cols,
    )
}
