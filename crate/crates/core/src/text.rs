//! Line-oriented text format.
//!
//! ```text
//! nodes <V>
//! start <v>          # repeatable
//! accept <v>         # repeatable
//! arc <src> <dst> <ilabel> <olabel> <weight>
//! ```
//!
//! `#` starts a comment. `nodes` must come first; the other lines may appear
//! in any order. Labels are integers `>= -1` (`-1` is epsilon). Weights are
//! written with the shortest decimal form that reads back to the same `f32`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{Arc, ArcColumns, Graph, NodeId};
use crate::weight::Label;

pub fn read_text<R: BufRead>(reader: R) -> Result<Graph> {
    let mut num_nodes: Option<usize> = None;
    let mut start = Vec::new();
    let mut accept = Vec::new();
    let mut cols = ArcColumns::default();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        let mut fields = content.split_whitespace();
        let Some(keyword) = fields.next() else {
            continue;
        };
        let fields: Vec<&str> = fields.collect();
        let err = |message: String| Error::Parse { line: line_no, message };

        if keyword == "nodes" {
            if num_nodes.is_some() {
                return Err(err("duplicate 'nodes' line".into()));
            }
            expect_fields(&fields, 1, line_no)?;
            let v: usize = parse_field(fields[0], "node count", line_no)?;
            if v >= NodeId::MAX as usize {
                return Err(err(format!("node count {v} too large")));
            }
            num_nodes = Some(v);
            start = vec![false; v];
            accept = vec![false; v];
            continue;
        }
        let Some(v) = num_nodes else {
            return Err(err(format!("'{keyword}' before 'nodes' line")));
        };
        let node = |s: &str| -> Result<NodeId> {
            let n: usize = parse_field(s, "node", line_no)?;
            if n >= v {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("node {n} out of range"),
                });
            }
            Ok(n as NodeId)
        };
        match keyword {
            "start" => {
                expect_fields(&fields, 1, line_no)?;
                start[node(fields[0])? as usize] = true;
            }
            "accept" => {
                expect_fields(&fields, 1, line_no)?;
                accept[node(fields[0])? as usize] = true;
            }
            "arc" => {
                expect_fields(&fields, 5, line_no)?;
                let src = node(fields[0])?;
                let dst = node(fields[1])?;
                let ilabel = parse_label(fields[2], line_no)?;
                let olabel = parse_label(fields[3], line_no)?;
                let weight: f32 = parse_field(fields[4], "weight", line_no)?;
                cols.push(&Arc::new(src, dst, ilabel, olabel, weight));
            }
            other => return Err(err(format!("unknown keyword '{other}'"))),
        }
    }
    let Some(_) = num_nodes else {
        return Err(Error::Parse {
            line: 0,
            message: "missing 'nodes' line".into(),
        });
    };
    Graph::from_arc_columns(start, accept, cols)
}

fn expect_fields(fields: &[&str], n: usize, line: usize) -> Result<()> {
    if fields.len() != n {
        return Err(Error::Parse {
            line,
            message: format!("expected {n} fields, found {}", fields.len()),
        });
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} '{s}'"),
    })
}

fn parse_label(s: &str, line: usize) -> Result<Label> {
    let label: Label = parse_field(s, "label", line)?;
    if label < -1 {
        return Err(Error::Parse {
            line,
            message: format!("label {label} < -1"),
        });
    }
    Ok(label)
}

/// Writes `nodes`, then start and accept lines in node order, then arcs in
/// arc-index order.
pub fn write_text<W: Write>(g: &Graph, mut out: W) -> Result<()> {
    writeln!(out, "nodes {}", g.num_nodes())?;
    for v in g.starts() {
        writeln!(out, "start {v}")?;
    }
    for v in g.accepts() {
        writeln!(out, "accept {v}")?;
    }
    for arc in g.arcs() {
        writeln!(
            out,
            "arc {} {} {} {} {}",
            arc.src, arc.dst, arc.ilabel, arc.olabel, arc.weight
        )?;
    }
    out.flush()?;
    Ok(())
}

/// [`write_text`] into a `String`.
pub fn to_text(g: &Graph) -> String {
    let mut buf = Vec::new();
    write_text(g, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("text format is ASCII")
}
