//! Weighted finite-state transducers in the log semiring, with sequential
//! and data-parallel eager composition.
//!
//! ```
//! use wfst::{build_graph, compose_sequential, Arc, ComposeOptions};
//!
//! let a = build_graph(2, &[0], &[1], &[Arc::new(0, 1, 0, 1, 1.0)])?;
//! let b = build_graph(2, &[0], &[1], &[Arc::new(0, 1, 1, 2, 2.0)])?;
//! let c = compose_sequential(&a, &b, ComposeOptions::default())?;
//! assert_eq!(c.graph.arcs().collect::<Vec<_>>(), vec![Arc::new(0, 1, 0, 2, 3.0)]);
//! # Ok::<(), wfst::Error>(())
//! ```

pub mod compose;
mod error;
pub mod gen;
mod graph;
pub mod oracle;
mod text;
mod weight;

pub use compose::{
    accessible, canonicalize, coaccessible, compose_parallel, compose_sequential, is_trim, trim, ComposeOptions,
    ComposedGraph, FilterState, PairState,
};
pub use error::{Error, Result};
pub use graph::{build_graph, closure, validate, Arc, ArcColumns, ArcId, Graph, GraphParts, NodeId, Violation};
pub use text::{read_text, to_text, write_text};
pub use weight::{is_valid_label, logadd, Label, Weight, EPSILON};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/composition.md")]
    mod composition {}
    #[doc = include_str!("../../../book/src/parallel.md")]
    mod parallel {}
    #[doc = include_str!("../../../book/src/generators.md")]
    mod generators {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
