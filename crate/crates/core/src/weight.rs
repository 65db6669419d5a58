//! Labels and log-semiring weights.
//!
//! A path score is the real sum of its arc weights (semiring product), and
//! alternative paths are combined with log-add (semiring sum). Weights are
//! stored as `f32`.

use std::fmt;

/// Integer symbol id. [`EPSILON`] is the empty label; ordinary symbols are `>= 0`.
pub type Label = i32;

/// The empty label.
pub const EPSILON: Label = -1;

/// Returns `true` for `-1` and every non-negative label.
#[inline]
pub fn is_valid_label(label: Label) -> bool {
    label >= EPSILON
}

/// A weight in the log semiring.
///
/// `times` is real addition with identity `0.0`; `plus` is
/// `log(exp(a) + exp(b))` with identity `-inf`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Weight(pub f32);

impl Weight {
    /// Semiring zero, `-inf`.
    pub const ZERO: Weight = Weight(f32::NEG_INFINITY);
    /// Semiring one, `0.0`.
    pub const ONE: Weight = Weight(0.0);

    #[inline]
    pub fn value(self) -> f32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f32::NEG_INFINITY
    }

    /// Semiring product: real addition.
    #[inline]
    pub fn times(self, other: Weight) -> Weight {
        Weight(self.0 + other.0)
    }

    /// Semiring sum: `max(a, b) + log1p(exp(-|a - b|))`.
    #[inline]
    pub fn plus(self, other: Weight) -> Weight {
        Weight(logadd(self.0, other.0))
    }

    /// Log-add over many weights with a pairwise (tree) reduction, so the
    /// result does not depend much on the order of the inputs.
    pub fn sum<I: IntoIterator<Item = Weight>>(weights: I) -> Weight {
        let mut level: Vec<f32> = weights.into_iter().map(|w| w.0).collect();
        if level.is_empty() {
            return Weight::ZERO;
        }
        while level.len() > 1 {
            level = level
                .chunks(2)
                .map(|c| if c.len() == 2 { logadd(c[0], c[1]) } else { c[0] })
                .collect();
        }
        Weight(level[0])
    }
}

impl From<f32> for Weight {
    fn from(v: f32) -> Self {
        Weight(v)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// `log(exp(a) + exp(b))` without overflow.
#[inline]
pub fn logadd(a: f32, b: f32) -> f32 {
    if a == f32::NEG_INFINITY {
        return b;
    }
    if b == f32::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
