//! Most probable exit paths: the learned flow `ẋ = F + ∇Ṽ` run backwards
//! from just inside the saddle until it reaches a stable node, then reversed.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DriftField, FixedPoint, FixedPointKind};
use crate::format::{serialize_sig17, write_csv, Sig17};
use crate::{distance, dot, is_finite, norm, sub, Point, QuasipotentialModel};

#[derive(Debug, Error)]
pub enum PathError {
    #[error("{0:?} is not a saddle")]
    NotSaddle(Point),
    #[error("no stable node to end at")]
    NoStableNode,
    #[error("offset length {0:e} is outside (0, 0.05]")]
    InvalidOffset(f64),
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
    #[error("no stable node reached within {steps} steps")]
    NotConverged {
        steps: usize,
        partial: Vec<PathSample>,
    },
    #[error("path needs at least two samples")]
    TooShort,
    #[error("timestamps must increase strictly (sample {0})")]
    NonIncreasingTime(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub t: f64,
    pub x: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSettings {
    pub step: f64,
    pub max_steps: usize,
    /// Integration ends within this distance of a stable node.
    pub capture_radius: f64,
}

impl Default for PathSettings {
    fn default() -> Self {
        Self {
            step: 1e-3,
            max_steps: 1_000_000,
            capture_radius: 0.02,
        }
    }
}

/// Default start offset from the saddle: `10⁻³` into the left basin.
pub const DEFAULT_OFFSET: Point = [-1e-3, 1e-3];

pub const MAX_OFFSET: f64 = 0.05;

/// Ordered from the stable node (`t = 0`) to the saddle neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbablePath {
    pub samples: Vec<PathSample>,
    pub start_anchor: Point,
    pub end_anchor: Point,
    pub offset: Point,
    pub settings: PathSettings,
    pub action: f64,
}

impl ProbablePath {
    pub fn points(&self) -> Vec<Point> {
        self.samples.iter().map(|s| s.x).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PathError> {
        let rows = self.samples.iter().map(|s| [s.t, s.x[0], s.x[1]]);
        write_csv(out, &["t", "x1", "x2"], rows)?;
        Ok(())
    }

    pub fn summary(&self) -> PathSummary {
        PathSummary {
            action: self.action,
            start_anchor: self.start_anchor.map(Sig17),
            end_anchor: self.end_anchor.map(Sig17),
            first: self.samples[0].x.map(Sig17),
            last: self.samples[self.samples.len() - 1].x.map(Sig17),
            offset: self.offset.map(Sig17),
            step: self.settings.step,
            capture_radius: self.settings.capture_radius,
            samples: self.samples.len(),
        }
    }
}

/// Sidecar document for a path CSV.
#[derive(Debug, Clone, Serialize)]
pub struct PathSummary {
    #[serde(serialize_with = "serialize_sig17")]
    pub action: f64,
    pub start_anchor: [Sig17; 2],
    pub end_anchor: [Sig17; 2],
    pub first: [Sig17; 2],
    pub last: [Sig17; 2],
    pub offset: [Sig17; 2],
    #[serde(serialize_with = "serialize_sig17")]
    pub step: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub capture_radius: f64,
    pub samples: usize,
}

fn rk4<G: Fn(Point) -> Point>(g: &G, x: Point, h: f64) -> Point {
    let k1 = g(x);
    let k2 = g([x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]]);
    let k3 = g([x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]]);
    let k4 = g([x[0] + h * k3[0], x[1] + h * k3[1]]);
    [
        x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// RK4 of `ẋ = g(x)` from `start` until within the capture radius of one of
/// `targets`. Returns the samples (with `t` the integration time) and the
/// target reached.
fn flow_to_target<G: Fn(Point) -> Point>(
    g: G,
    start: Point,
    targets: &[Point],
    settings: &PathSettings,
) -> Result<(Vec<PathSample>, Point), PathError> {
    let captured = |x: Point| {
        targets
            .iter()
            .copied()
            .find(|&c| distance(x, c) <= settings.capture_radius)
    };
    let mut samples = vec![PathSample { t: 0.0, x: start }];
    let mut x = start;
    for n in 1..=settings.max_steps {
        if let Some(c) = captured(x) {
            return Ok((samples, c));
        }
        x = rk4(&g, x, settings.step);
        if !is_finite(x) {
            break;
        }
        samples.push(PathSample {
            t: n as f64 * settings.step,
            x,
        });
    }
    if let Some(c) = captured(x) {
        return Ok((samples, c));
    }
    Err(PathError::NotConverged {
        steps: settings.max_steps,
        partial: samples,
    })
}

fn check_settings(settings: &PathSettings) -> Result<(), PathError> {
    if !(settings.step > 0.0 && settings.step.is_finite())
        || !(settings.capture_radius > 0.0)
        || settings.max_steps == 0
    {
        return Err(PathError::InvalidSetting(format!("{settings:?}")));
    }
    Ok(())
}

fn stable_nodes(points: &[FixedPoint]) -> Result<Vec<Point>, PathError> {
    let nodes: Vec<Point> = points
        .iter()
        .filter(|p| p.kind == FixedPointKind::StableNode)
        .map(|p| p.location)
        .collect();
    if nodes.is_empty() {
        return Err(PathError::NoStableNode);
    }
    Ok(nodes)
}

/// Integrates `dx/ds = −(F + ∇Ṽ)` from `saddle + offset` to the first stable
/// node among `fixed_points`, then reverses time.
pub fn trace_most_probable_path(
    sys: &dyn DriftField,
    model: &dyn QuasipotentialModel,
    saddle: &FixedPoint,
    fixed_points: &[FixedPoint],
    offset: Point,
    settings: &PathSettings,
) -> Result<ProbablePath, PathError> {
    if saddle.kind != FixedPointKind::Saddle {
        return Err(PathError::NotSaddle(saddle.location));
    }
    let len = norm(offset);
    if !(len > 0.0 && len <= MAX_OFFSET) {
        return Err(PathError::InvalidOffset(len));
    }
    check_settings(settings)?;
    let nodes = stable_nodes(fixed_points)?;
    let start = [
        saddle.location[0] + offset[0],
        saddle.location[1] + offset[1],
    ];
    let reverse = |x: Point| {
        let f = sys.field(x);
        let g = model.gradient(x);
        [-(f[0] + g[0]), -(f[1] + g[1])]
    };
    let (forward, node) = flow_to_target(reverse, start, &nodes, settings)?;
    let total = forward[forward.len() - 1].t;
    let samples: Vec<PathSample> = forward
        .iter()
        .rev()
        .map(|s| PathSample {
            t: total - s.t,
            x: s.x,
        })
        .collect();
    let action = if samples.len() >= 2 {
        path_action(sys, &samples)?
    } else {
        0.0
    };
    Ok(ProbablePath {
        samples,
        start_anchor: start,
        end_anchor: node,
        offset,
        settings: *settings,
        action,
    })
}

/// The deterministic relaxation `ẋ = F(x)` from `start` into a stable node.
pub fn relaxation_path(
    sys: &dyn DriftField,
    start: Point,
    fixed_points: &[FixedPoint],
    settings: &PathSettings,
) -> Result<Vec<PathSample>, PathError> {
    check_settings(settings)?;
    let nodes = stable_nodes(fixed_points)?;
    Ok(flow_to_target(|x| sys.field(x), start, &nodes, settings)?.0)
}

/// Discrete action `Σ Δt · ½[L(xₖ, vₖ) + L(xₖ₊₁, vₖ)]` with
/// `L(x, v) = ½|v − F(x)|²` and `vₖ` the finite-difference velocity of
/// segment `k`.
pub fn path_action(sys: &dyn DriftField, samples: &[PathSample]) -> Result<f64, PathError> {
    if samples.len() < 2 {
        return Err(PathError::TooShort);
    }
    let mut action = 0.0;
    for (k, w) in samples.windows(2).enumerate() {
        let dt = w[1].t - w[0].t;
        if !(dt > 0.0) {
            return Err(PathError::NonIncreasingTime(k + 1));
        }
        let d = sub(w[1].x, w[0].x);
        let v = [d[0] / dt, d[1] / dt];
        let lagrangian = |x: Point| {
            let r = sub(v, sys.field(x));
            0.5 * dot(r, r)
        };
        action += 0.5 * dt * (lagrangian(w[0].x) + lagrangian(w[1].x));
    }
    Ok(action)
}

/// Hausdorff distance between `a` and the reflection of `b` in `x₂ = 0`.
pub fn mirror_deviation(a: &[Point], b: &[Point]) -> f64 {
    let mirrored: Vec<Point> = b.iter().map(|p| [p[0], -p[1]]).collect();
    crate::hausdorff(a, &mirrored)
}

pub fn write_summary<W: Write>(mut out: W, path: &ProbablePath) -> Result<(), PathError> {
    serde_json::to_writer_pretty(&mut out, &path.summary())?;
    out.write_all(b"\n")?;
    Ok(())
}
