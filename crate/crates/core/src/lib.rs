//! Quasipotential landscapes of planar stochastic systems
//! `dx = F(x) dt + dη`, `E[(Δη_i)²] = σ Δt`.
//!
//! The crate covers the whole pipeline:
//!
//! * [`dynamics`]: drift fields, Jacobians, fixed points and the exact
//!   quasipotential of the gradient Maier–Stein field.
//! * [`characteristics`]: Hamiltonian characteristics shot from a small circle
//!   around a stable node, reduced to a per-cell minimal-action dataset.
//! * [`net`]: a small tanh network with exact input Jacobians and exact
//!   parameter gradients through them, plus Adam.
//! * [`trainer`]: the four-part physics-informed loss and the training loop.
//! * [`path`]: most probable exit paths and the discrete action functional.
//! * [`control`]: Euler–Maruyama exit times and the feedback controller
//!   `u = c∇V` that steers the mean exit time to a requested value.
//!
//! The guide under `book/` walks through each piece; its snippets are compiled
//! and run as doc-tests of this crate.

// NaN must fail validation, so `!(x > 0.0)` is used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristics;
pub mod control;
pub mod dynamics;
pub mod format;
pub mod net;
pub mod path;
pub mod trainer;

use serde::{Deserialize, Serialize};

/// A point (or vector) in the plane.
pub type Point = [f64; 2];

/// A 2×2 matrix, row-major: `m[i][j]` is row `i`, column `j`.
pub type Mat2 = [[f64; 2]; 2];

/// Axis-aligned rectangle `[x1_min, x1_max] × [x2_min, x2_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
}

impl Rect {
    pub const fn new(x1_min: f64, x1_max: f64, x2_min: f64, x2_max: f64) -> Self {
        Self {
            x1_min,
            x1_max,
            x2_min,
            x2_max,
        }
    }

    /// The training domain used for the left Maier–Stein basin.
    pub const fn maier_stein_left() -> Self {
        Self::new(-1.5, 0.0, -0.6, 0.6)
    }

    pub fn width(&self) -> f64 {
        self.x1_max - self.x1_min
    }

    pub fn height(&self) -> f64 {
        self.x2_max - self.x2_min
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.width() > 0.0 && self.height() > 0.0)
    }

    /// Closed containment test.
    pub fn contains(&self, x: Point) -> bool {
        x[0] >= self.x1_min && x[0] <= self.x1_max && x[1] >= self.x2_min && x[1] <= self.x2_max
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x1_min >= self.x1_min
            && other.x1_max <= self.x1_max
            && other.x2_min >= self.x2_min
            && other.x2_max <= self.x2_max
    }

    /// Grows each side length by `fraction` (0.2 = 20 %), keeping the center.
    pub fn inflate(&self, fraction: f64) -> Self {
        let dw = 0.5 * fraction * self.width();
        let dh = 0.5 * fraction * self.height();
        Self::new(
            self.x1_min - dw,
            self.x1_max + dw,
            self.x2_min - dh,
            self.x2_max + dh,
        )
    }

    /// Node `(i, j)` of an `n1 × n2` lattice spanning the rectangle
    /// (a single node sits at the center).
    pub fn lattice_point(&self, i: usize, j: usize, n1: usize, n2: usize) -> Point {
        let along = |lo: f64, hi: f64, k: usize, n: usize| {
            if n <= 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        };
        [
            along(self.x1_min, self.x1_max, i, n1),
            along(self.x2_min, self.x2_max, j, n2),
        ]
    }
}

/// How data-parallel loops are executed. Both modes reduce in the same fixed
/// order and produce bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Serial,
    #[default]
    Parallel,
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn is_finite(x: Point) -> bool {
    x[0].is_finite() && x[1].is_finite()
}

/// A quasipotential landscape that can be queried pointwise: a trained
/// network or a closed-form oracle.
pub trait QuasipotentialModel: Send + Sync {
    fn value(&self, x: Point) -> f64;
    fn gradient(&self, x: Point) -> Point;

    /// Momentum field `p(x)`; equals the gradient unless the model carries
    /// its own estimate.
    fn momentum(&self, x: Point) -> Point {
        self.gradient(x)
    }
}

/// Euclidean distance between two points.
pub fn distance(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Symmetric Hausdorff distance between two sampled curves.
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    let directed = |from: &[Point], to: &[Point]| {
        from.iter()
            .map(|&p| {
                to.iter()
                    .map(|&q| distance(p, q))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0_f64, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/characteristics.md")]
    mod characteristics {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/paths.md")]
    mod paths {}
    #[doc = include_str!("../../../book/src/control.md")]
    mod control {}
}
