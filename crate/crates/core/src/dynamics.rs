//! Drift fields, fixed points and the gradient-case quasipotential.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{dot, is_finite, Mat2, Point, QuasipotentialModel, Rect};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("non-finite input {0:?}")]
    NonFinite(Point),
    #[error("analytic quasipotential is only known for gamma = 1 (got gamma = {0})")]
    UnsupportedOracle(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Identifies a drift field in reports and checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FieldId {
    MaierStein {
        #[serde(serialize_with = "crate::format::serialize_sig17")]
        gamma: f64,
    },
    Custom {
        name: String,
    },
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldId::MaierStein { gamma } => write!(f, "maier-stein(gamma={gamma})"),
            FieldId::Custom { name } => write!(f, "custom({name})"),
        }
    }
}

/// A continuously differentiable planar vector field together with its
/// Jacobian `(∇F)_ij = ∂F_i/∂x_j`.
///
/// Implement this trait to plug a new system into the pipeline. The two
/// methods must agree: the Jacobian is checked against central differences of
/// `field` in the test-suite of every provided implementation, and
/// [`jacobian_mismatch`] is available to do the same for custom ones.
pub trait DriftField: Send + Sync {
    fn field(&self, x: Point) -> Point;

    fn jacobian(&self, x: Point) -> Mat2;

    fn id(&self) -> FieldId {
        FieldId::Custom {
            name: "anonymous".to_owned(),
        }
    }

    /// Exact quasipotential, when known in closed form.
    fn quasipotential_oracle(&self, _x: Point) -> Option<f64> {
        None
    }

    /// Exact quasipotential gradient, when known in closed form.
    fn quasipotential_gradient_oracle(&self, _x: Point) -> Option<Point> {
        None
    }
}

/// `F(x) = (x₁ − x₁³ − γx₁x₂², −(1 + x₁²)x₂)`.
///
/// Stable nodes at `(±1, 0)` and a saddle at the origin for every `γ > 0`.
/// For `γ = 1` the field is `−∇U` with
/// `U = ¼[(x₁² − 1)² + 2x₂²(x₁² + 1)]`, so the quasipotential is `2U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaierStein {
    pub gamma: f64,
}

impl MaierStein {
    pub fn new(gamma: f64) -> Result<Self, DynamicsError> {
        if gamma.is_finite() && gamma > 0.0 {
            Ok(Self { gamma })
        } else {
            Err(DynamicsError::InvalidParameter(format!(
                "gamma must be positive and finite, got {gamma}"
            )))
        }
    }

    pub fn is_gradient(&self) -> bool {
        self.gamma == 1.0
    }

    /// The potential `U` of the `γ = 1` field.
    pub fn potential(x: Point) -> f64 {
        let a = x[0] * x[0] - 1.0;
        0.25 * (a * a + 2.0 * x[1] * x[1] * (x[0] * x[0] + 1.0))
    }

    pub fn potential_gradient(x: Point) -> Point {
        [
            x[0] * (x[0] * x[0] - 1.0) + x[0] * x[1] * x[1],
            x[1] * (x[0] * x[0] + 1.0),
        ]
    }
}

impl DriftField for MaierStein {
    fn field(&self, x: Point) -> Point {
        let [x1, x2] = x;
        [
            x1 - x1 * x1 * x1 - self.gamma * x1 * x2 * x2,
            -(1.0 + x1 * x1) * x2,
        ]
    }

    fn jacobian(&self, x: Point) -> Mat2 {
        let [x1, x2] = x;
        [
            [
                1.0 - 3.0 * x1 * x1 - self.gamma * x2 * x2,
                -2.0 * self.gamma * x1 * x2,
            ],
            [-2.0 * x1 * x2, -(1.0 + x1 * x1)],
        ]
    }

    fn id(&self) -> FieldId {
        FieldId::MaierStein { gamma: self.gamma }
    }

    fn quasipotential_oracle(&self, x: Point) -> Option<f64> {
        self.is_gradient().then(|| 2.0 * Self::potential(x))
    }

    fn quasipotential_gradient_oracle(&self, x: Point) -> Option<Point> {
        self.is_gradient().then(|| {
            let g = Self::potential_gradient(x);
            [2.0 * g[0], 2.0 * g[1]]
        })
    }
}

/// Additive isotropic noise; increments over `Δt` have variance `σΔt` per
/// component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl NoiseModel {
    /// `sigma = 0` is allowed and turns the simulation deterministic.
    pub fn new(sigma: f64) -> Result<Self, DynamicsError> {
        if sigma.is_finite() && sigma >= 0.0 {
            Ok(Self { sigma })
        } else {
            Err(DynamicsError::InvalidParameter(format!(
                "noise intensity must be nonnegative, got {sigma}"
            )))
        }
    }

    /// Standard deviation of one increment component over `dt`.
    pub fn increment_scale(&self, dt: f64) -> f64 {
        (self.sigma * dt).sqrt()
    }
}

pub fn eval_field(sys: &dyn DriftField, x: Point) -> Result<Point, DynamicsError> {
    if !is_finite(x) {
        return Err(DynamicsError::NonFinite(x));
    }
    Ok(sys.field(x))
}

pub fn eval_jacobian(sys: &dyn DriftField, x: Point) -> Result<Mat2, DynamicsError> {
    if !is_finite(x) {
        return Err(DynamicsError::NonFinite(x));
    }
    Ok(sys.jacobian(x))
}

/// Central-difference Jacobian of `sys.field` with step `h`.
pub fn finite_difference_jacobian(sys: &dyn DriftField, x: Point, h: f64) -> Mat2 {
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let mut xp = x;
        let mut xm = x;
        xp[j] += h;
        xm[j] -= h;
        let fp = sys.field(xp);
        let fm = sys.field(xm);
        for i in 0..2 {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Largest entrywise mismatch between the analytic Jacobian and central
/// differences, relative to `max(1, |entry|)`.
pub fn jacobian_mismatch(sys: &dyn DriftField, x: Point, h: f64) -> f64 {
    let exact = sys.jacobian(x);
    let approx = finite_difference_jacobian(sys, x, h);
    let mut worst = 0.0_f64;
    for i in 0..2 {
        for j in 0..2 {
            let scale = exact[i][j].abs().max(1.0);
            worst = worst.max((exact[i][j] - approx[i][j]).abs() / scale);
        }
    }
    worst
}

/// The exact landscape `V = 2U` of the `γ = 1` Maier–Stein field, usable
/// wherever a trained network is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticQuasipotential {
    sys: MaierStein,
}

impl AnalyticQuasipotential {
    pub fn new(sys: MaierStein) -> Result<Self, DynamicsError> {
        if sys.is_gradient() {
            Ok(Self { sys })
        } else {
            Err(DynamicsError::UnsupportedOracle(sys.gamma))
        }
    }

    pub fn system(&self) -> MaierStein {
        self.sys
    }
}

impl QuasipotentialModel for AnalyticQuasipotential {
    fn value(&self, x: Point) -> f64 {
        2.0 * MaierStein::potential(x)
    }

    fn gradient(&self, x: Point) -> Point {
        let g = MaierStein::potential_gradient(x);
        [2.0 * g[0], 2.0 * g[1]]
    }
}

/// `H(x, p) = ⟨p, F(x)⟩ + ½⟨p, p⟩`.
pub fn hamiltonian(sys: &dyn DriftField, x: Point, p: Point) -> f64 {
    dot(p, sys.field(x)) + 0.5 * dot(p, p)
}

/// Closed-form quasipotential `V = 2U` of the `γ = 1` Maier–Stein field.
pub fn analytic_quasipotential(sys: &MaierStein, x: Point) -> Result<f64, DynamicsError> {
    if !sys.is_gradient() {
        return Err(DynamicsError::UnsupportedOracle(sys.gamma));
    }
    if !is_finite(x) {
        return Err(DynamicsError::NonFinite(x));
    }
    Ok(2.0 * MaierStein::potential(x))
}

/// `l(x) = F(x) + ½∇V(x)`, the part of the drift orthogonal to `∇V` when `V`
/// solves the Hamilton–Jacobi equation.
pub fn rotational_component(
    sys: &dyn DriftField,
    x: Point,
    grad_v: Point,
) -> Result<Point, DynamicsError> {
    if !is_finite(grad_v) {
        return Err(DynamicsError::NonFinite(grad_v));
    }
    let f = eval_field(sys, x)?;
    Ok([f[0] + 0.5 * grad_v[0], f[1] + 0.5 * grad_v[1]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointKind {
    StableNode,
    Saddle,
    /// Repelling, or degenerate (an eigenvalue on the imaginary axis).
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub location: Point,
    pub kind: FixedPointKind,
    pub eigenvalues: [Complex64; 2],
}

/// Real parts closer to zero than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Eigenvalues of a real 2×2 matrix.
pub fn eigenvalues(m: Mat2) -> [Complex64; 2] {
    let half_trace = 0.5 * (m[0][0] + m[1][1]);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = half_trace * half_trace - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [
            Complex64::new(half_trace - r, 0.0),
            Complex64::new(half_trace + r, 0.0),
        ]
    } else {
        let r = (-disc).sqrt();
        [
            Complex64::new(half_trace, -r),
            Complex64::new(half_trace, r),
        ]
    }
}

pub fn classify(jacobian: Mat2) -> (FixedPointKind, [Complex64; 2]) {
    let ev = eigenvalues(jacobian);
    let (a, b) = (ev[0].re, ev[1].re);
    let kind = if a.abs() <= DEGENERACY_TOL || b.abs() <= DEGENERACY_TOL {
        FixedPointKind::Unstable
    } else if a < 0.0 && b < 0.0 {
        FixedPointKind::StableNode
    } else if (a < 0.0) != (b < 0.0) {
        FixedPointKind::Saddle
    } else {
        FixedPointKind::Unstable
    };
    (kind, ev)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Seeds per axis; the seed lattice is `seeds_per_axis²` points.
    pub seeds_per_axis: usize,
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub residual_tolerance: f64,
    pub dedup_radius: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            seeds_per_axis: 10,
            max_iterations: 50,
            step_tolerance: 1e-12,
            residual_tolerance: 1e-10,
            dedup_radius: 1e-6,
        }
    }
}

fn newton(sys: &dyn DriftField, mut x: Point, settings: &NewtonSettings) -> Option<Point> {
    for _ in 0..settings.max_iterations {
        let f = sys.field(x);
        let j = sys.jacobian(x);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = [
            (j[1][1] * f[0] - j[0][1] * f[1]) / det,
            (-j[1][0] * f[0] + j[0][0] * f[1]) / det,
        ];
        x = [x[0] - dx[0], x[1] - dx[1]];
        if !is_finite(x) {
            return None;
        }
        if dx[0].hypot(dx[1]) <= settings.step_tolerance {
            let r = sys.field(x);
            return (r[0].hypot(r[1]) <= settings.residual_tolerance).then_some(x);
        }
    }
    None
}

/// Newton iteration from a lattice of seeds over `search_box`; converged
/// points inside the box are deduplicated and classified. Returns an empty
/// list when nothing converges. Results are sorted by `(x₁, x₂)`.
pub fn find_fixed_points(
    sys: &dyn DriftField,
    search_box: &Rect,
    settings: &NewtonSettings,
) -> Result<Vec<FixedPoint>, DynamicsError> {
    if search_box.is_degenerate() {
        return Err(DynamicsError::InvalidParameter(format!(
            "degenerate search box {search_box:?}"
        )));
    }
    let n = settings.seeds_per_axis.max(1);
    let mut found: Vec<Point> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let seed = search_box.lattice_point(i, j, n, n);
            let Some(x) = newton(sys, seed, settings) else {
                continue;
            };
            if !search_box.contains(x) {
                continue;
            }
            if found
                .iter()
                .all(|y| crate::distance(*y, x) > settings.dedup_radius)
            {
                found.push(x);
            }
        }
    }
    found.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    Ok(found
        .into_iter()
        .map(|location| {
            let (kind, eigenvalues) = classify(sys.jacobian(location));
            FixedPoint {
                location,
                kind,
                eigenvalues,
            }
        })
        .collect())
}
