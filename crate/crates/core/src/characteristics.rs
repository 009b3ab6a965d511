//! Hamiltonian characteristics of the Hamilton–Jacobi equation
//! (`ẋ = p + F(x)`, `ṗ = −(∇F)ᵀp`, `V̇ = ½|p|²`), shot from a small circle
//! around a stable node and reduced to one minimal-action record per grid
//! cell.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{hamiltonian, DriftField, FixedPoint, FixedPointKind};
use crate::format::write_csv;
use crate::{dot, ExecMode, Mat2, Point, Rect};

#[derive(Debug, Error)]
pub enum CharacteristicsError {
    #[error("seed circle center {0:?} is not a stable node")]
    NotStable(Point),
    #[error("Lyapunov equation is singular for Jacobian {0:?}")]
    SingularLyapunov(Mat2),
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
    #[error("seed is off the zero-energy set: |H| = {0:e}")]
    SeedOffShell(f64),
    #[error("cannot place momentum on the zero-energy set at {0:?}")]
    ProjectionFailed(Point),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Largest `|H|` accepted at a trajectory seed.
pub const SEED_HAMILTONIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicState {
    pub x: Point,
    pub p: Point,
    pub v: f64,
    pub t: f64,
}

/// The quadratic form `Q` of the local quasipotential `V ≈ ½ΔxᵀQΔx` at a
/// stable point with Jacobian `J`: `Q = X⁻¹` where `JX + XJᵀ + I = 0`, so
/// that `QJ + JᵀQ + Q² = 0`.
pub fn lyapunov_quadratic_form(jac: Mat2) -> Result<Mat2, CharacteristicsError> {
    let [[j11, j12], [j21, j22]] = jac;
    // unknowns (a, b, c) of X = [[a, b], [b, c]]
    let m = [
        [2.0 * j11, 2.0 * j12, 0.0],
        [j21, j11 + j22, j12],
        [0.0, 2.0 * j21, 2.0 * j22],
    ];
    let rhs = [-1.0, 0.0, -1.0];
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(&m);
    if d.abs() < 1e-14 {
        return Err(CharacteristicsError::SingularLyapunov(jac));
    }
    let mut sol = [0.0; 3];
    for (k, s) in sol.iter_mut().enumerate() {
        let mut mk = m;
        for row in 0..3 {
            mk[row][k] = rhs[row];
        }
        *s = det3(&mk) / d;
    }
    let [a, b, c] = sol;
    let det_x = a * c - b * b;
    if !(a > 0.0 && det_x > 0.0) {
        return Err(CharacteristicsError::SingularLyapunov(jac));
    }
    Ok([[c / det_x, -b / det_x], [-b / det_x, a / det_x]])
}

/// Frobenius norm of `QJ + JᵀQ + Q²`.
pub fn quadratic_form_residual(q: Mat2, jac: Mat2) -> f64 {
    let mut r = 0.0;
    for i in 0..2 {
        for k in 0..2 {
            let mut e = 0.0;
            for l in 0..2 {
                e += q[i][l] * jac[l][k] + jac[l][i] * q[l][k] + q[i][l] * q[l][k];
            }
            r += e * e;
        }
    }
    r.sqrt()
}

fn mat_vec(m: Mat2, v: Point) -> Point {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedCircle {
    pub center: Point,
    pub radius: f64,
    pub count: usize,
    pub q: Mat2,
}

impl SeedCircle {
    /// State number `k` of `count`, at angle `2πk/count`, with
    /// `p = QΔx` and `V = ½ΔxᵀQΔx`.
    pub fn state(&self, k: usize) -> CharacteristicState {
        let theta = 2.0 * PI * k as f64 / self.count as f64;
        let dx = [self.radius * theta.cos(), self.radius * theta.sin()];
        let p = mat_vec(self.q, dx);
        CharacteristicState {
            x: [self.center[0] + dx[0], self.center[1] + dx[1]],
            p,
            v: 0.5 * dot(dx, p),
            t: 0.0,
        }
    }

    pub fn states(&self) -> Vec<CharacteristicState> {
        (0..self.count).map(|k| self.state(k)).collect()
    }
}

pub fn seed_circle(
    sys: &dyn DriftField,
    center: &FixedPoint,
    radius: f64,
    count: usize,
) -> Result<SeedCircle, CharacteristicsError> {
    if center.kind != FixedPointKind::StableNode {
        return Err(CharacteristicsError::NotStable(center.location));
    }
    if !(radius > 0.0 && radius.is_finite()) || count == 0 {
        return Err(CharacteristicsError::InvalidSetting(format!(
            "radius {radius} / count {count}"
        )));
    }
    let q = lyapunov_quadratic_form(sys.jacobian(center.location))?;
    Ok(SeedCircle {
        center: center.location,
        radius,
        count,
        q,
    })
}

/// `count` states evenly spaced on the circle of `radius` around `center`,
/// carrying the quadratic approximation of `(p, V)`.
pub fn make_seed_circle(
    sys: &dyn DriftField,
    center: &FixedPoint,
    radius: f64,
    count: usize,
) -> Result<Vec<CharacteristicState>, CharacteristicsError> {
    Ok(seed_circle(sys, center, radius, count)?.states())
}

/// Rescales `p` along its own direction onto `H(x, p) = 0`. The quadratic
/// seed momentum is only `O(radius³)` off the zero-energy set; this removes
/// that residual before integration.
pub fn project_to_zero_energy(
    sys: &dyn DriftField,
    state: CharacteristicState,
) -> Result<CharacteristicState, CharacteristicsError> {
    let pp = dot(state.p, state.p);
    if pp == 0.0 {
        return Ok(state);
    }
    let scale = -2.0 * dot(state.p, sys.field(state.x)) / pp;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CharacteristicsError::ProjectionFailed(state.x));
    }
    Ok(CharacteristicState {
        p: [scale * state.p[0], scale * state.p[1]],
        ..state
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    /// Integration stops once `x` leaves this rectangle.
    pub domain: Rect,
    pub v_max: f64,
    pub max_arc_length: f64,
    pub max_steps: usize,
}

impl StopRule {
    /// Defaults for a training domain: 20 % larger box, `V ≤ 2`, `2·10⁵` steps.
    pub fn for_domain(training_domain: &Rect) -> Self {
        Self {
            domain: training_domain.inflate(0.2),
            v_max: 2.0,
            max_arc_length: 20.0,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    LeftDomain,
    ActionCap,
    ArcLengthCap,
    StepCap,
    /// Integration produced a non-finite state; the trajectory is truncated
    /// at the last finite one.
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<CharacteristicState>,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn is_truncated(&self) -> bool {
        self.stop == StopReason::NonFinite
    }

    /// Largest `|H(x, p)|` over the samples.
    pub fn max_abs_hamiltonian(&self, sys: &dyn DriftField) -> f64 {
        self.states
            .iter()
            .map(|s| hamiltonian(sys, s.x, s.p).abs())
            .fold(0.0, f64::max)
    }
}

type Phase = [f64; 5];

fn rhs(sys: &dyn DriftField, y: &Phase) -> Phase {
    let x = [y[0], y[1]];
    let p = [y[2], y[3]];
    let f = sys.field(x);
    let j = sys.jacobian(x);
    [
        p[0] + f[0],
        p[1] + f[1],
        -(j[0][0] * p[0] + j[1][0] * p[1]),
        -(j[0][1] * p[0] + j[1][1] * p[1]),
        0.5 * dot(p, p),
    ]
}

fn rk4(sys: &dyn DriftField, y: &Phase, h: f64) -> Phase {
    let axpy = |a: &Phase, k: &Phase, s: f64| -> Phase {
        let mut out = *a;
        for i in 0..5 {
            out[i] += s * k[i];
        }
        out
    };
    let k1 = rhs(sys, y);
    let k2 = rhs(sys, &axpy(y, &k1, 0.5 * h));
    let k3 = rhs(sys, &axpy(y, &k2, 0.5 * h));
    let k4 = rhs(sys, &axpy(y, &k3, h));
    let mut out = *y;
    for i in 0..5 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Fixed-step RK4 of the characteristic system, sampled at every step. The
/// state that triggers a stop rule is not recorded, so every sample lies in
/// the stop domain with `V ≤ v_max`.
pub fn integrate_characteristic(
    sys: &dyn DriftField,
    seed: CharacteristicState,
    stop: &StopRule,
    step: f64,
) -> Result<Trajectory, CharacteristicsError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(CharacteristicsError::InvalidSetting(format!("step {step}")));
    }
    let h0 = hamiltonian(sys, seed.x, seed.p);
    if !(h0.abs() <= SEED_HAMILTONIAN_TOL) {
        return Err(CharacteristicsError::SeedOffShell(h0));
    }
    let mut states = vec![seed];
    let exceeded = |s: &CharacteristicState| {
        if !stop.domain.contains(s.x) {
            Some(StopReason::LeftDomain)
        } else if s.v > stop.v_max {
            Some(StopReason::ActionCap)
        } else {
            None
        }
    };
    if let Some(reason) = exceeded(&seed) {
        return Ok(Trajectory {
            states,
            stop: reason,
        });
    }
    let mut y: Phase = [seed.x[0], seed.x[1], seed.p[0], seed.p[1], seed.v];
    let mut arc = 0.0;
    for n in 1..=stop.max_steps {
        let next = rk4(sys, &y, step);
        if !next.iter().all(|v| v.is_finite()) {
            return Ok(Trajectory {
                states,
                stop: StopReason::NonFinite,
            });
        }
        let s = CharacteristicState {
            x: [next[0], next[1]],
            p: [next[2], next[3]],
            v: next[4],
            t: seed.t + n as f64 * step,
        };
        if let Some(reason) = exceeded(&s) {
            return Ok(Trajectory {
                states,
                stop: reason,
            });
        }
        arc += (next[0] - y[0]).hypot(next[1] - y[1]);
        states.push(s);
        if arc > stop.max_arc_length {
            return Ok(Trajectory {
                states,
                stop: StopReason::ArcLengthCap,
            });
        }
        y = next;
    }
    Ok(Trajectory {
        states,
        stop: StopReason::StepCap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetRecord {
    pub x: Point,
    pub p: Point,
    pub v: f64,
}

/// `(n_rows, n_cols)`: rows split `x₂`, columns split `x₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub n_rows: usize,
    pub n_cols: usize,
}

impl Grid {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols }
    }

    pub fn cells(&self) -> usize {
        self.n_rows * self.n_cols
    }

    /// Row-major cell index of `x`, or `None` outside `domain`.
    pub fn cell_of(&self, domain: &Rect, x: Point) -> Option<usize> {
        if !domain.contains(x) {
            return None;
        }
        let bin = |v: f64, lo: f64, span: f64, n: usize| {
            (((v - lo) / span * n as f64).floor() as usize).min(n - 1)
        };
        let col = bin(x[0], domain.x1_min, domain.width(), self.n_cols);
        let row = bin(x[1], domain.x2_min, domain.height(), self.n_rows);
        Some(row * self.n_cols + col)
    }
}

/// Per-cell minimum of `V` over everything absorbed so far. Ties keep the
/// earlier sample, so absorbing in seed order and sample order is
/// deterministic.
#[derive(Debug, Clone)]
pub struct GridAccumulator {
    domain: Rect,
    grid: Grid,
    best: Vec<Option<DatasetRecord>>,
}

impl GridAccumulator {
    pub fn new(domain: Rect, grid: Grid) -> Result<Self, CharacteristicsError> {
        if grid.n_rows == 0 || grid.n_cols == 0 {
            return Err(CharacteristicsError::InvalidSetting(format!(
                "grid {grid:?}"
            )));
        }
        if domain.is_degenerate() {
            return Err(CharacteristicsError::InvalidSetting(format!(
                "domain {domain:?}"
            )));
        }
        Ok(Self {
            domain,
            grid,
            best: vec![None; grid.cells()],
        })
    }

    fn offer(&mut self, cell: usize, rec: DatasetRecord) {
        match &self.best[cell] {
            Some(b) if b.v <= rec.v => {}
            _ => self.best[cell] = Some(rec),
        }
    }

    pub fn absorb(&mut self, traj: &Trajectory) {
        for s in &traj.states {
            if let Some(cell) = self.grid.cell_of(&self.domain, s.x) {
                self.offer(
                    cell,
                    DatasetRecord {
                        x: s.x,
                        p: s.p,
                        v: s.v,
                    },
                );
            }
        }
    }

    /// Merges a later accumulator into this one.
    pub fn merge(&mut self, later: &GridAccumulator) {
        for (cell, rec) in later.best.iter().enumerate() {
            if let Some(r) = rec {
                self.offer(cell, *r);
            }
        }
    }

    pub fn finish(self) -> CharacteristicDataset {
        CharacteristicDataset {
            domain: self.domain,
            grid: self.grid,
            records: self.best.into_iter().flatten().collect(),
        }
    }
}

/// At most one record per grid cell, in row-major cell order.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicDataset {
    pub domain: Rect,
    pub grid: Grid,
    pub records: Vec<DatasetRecord>,
}

pub const DATASET_HEADER: [&str; 5] = ["x1", "x2", "p1", "p2", "V"];

impl CharacteristicDataset {
    /// Validates that records sit in distinct cells of the grid and orders
    /// them row-major.
    pub fn from_records(
        domain: Rect,
        grid: Grid,
        records: Vec<DatasetRecord>,
    ) -> Result<Self, CharacteristicsError> {
        let mut acc = GridAccumulator::new(domain, grid)?;
        for rec in records {
            let cell = grid.cell_of(&domain, rec.x).ok_or_else(|| {
                CharacteristicsError::Dataset(format!(
                    "record at {:?} lies outside {domain:?}",
                    rec.x
                ))
            })?;
            if acc.best[cell].is_some() {
                return Err(CharacteristicsError::Dataset(format!(
                    "two records share cell {cell}"
                )));
            }
            acc.best[cell] = Some(rec);
        }
        Ok(acc.finish())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CharacteristicsError> {
        let rows = self
            .records
            .iter()
            .map(|r| [r.x[0], r.x[1], r.p[0], r.p[1], r.v]);
        write_csv(out, &DATASET_HEADER, rows)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(
        input: R,
        domain: Rect,
        grid: Grid,
    ) -> Result<Self, CharacteristicsError> {
        let mut reader = csv::Reader::from_reader(input);
        let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        if header != DATASET_HEADER {
            return Err(CharacteristicsError::Dataset(format!(
                "unexpected header {header:?}"
            )));
        }
        let mut records = Vec::new();
        for row in reader.deserialize::<[f64; 5]>() {
            let [x1, x2, p1, p2, v] = row?;
            records.push(DatasetRecord {
                x: [x1, x2],
                p: [p1, p2],
                v,
            });
        }
        Self::from_records(domain, grid, records)
    }
}

/// Per-cell minimal-`V` samples over a list of trajectories.
pub fn extract_grid_dataset(
    trajectories: &[Trajectory],
    domain: Rect,
    grid: Grid,
) -> Result<CharacteristicDataset, CharacteristicsError> {
    let mut acc = GridAccumulator::new(domain, grid)?;
    for t in trajectories {
        acc.absorb(t);
    }
    Ok(acc.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootSettings {
    pub radius: f64,
    pub count: usize,
    pub step: f64,
    pub stop: StopRule,
    /// Dataset domain (the training domain).
    pub domain: Rect,
    pub grid: Grid,
}

impl Default for ShootSettings {
    fn default() -> Self {
        let domain = Rect::maier_stein_left();
        Self {
            radius: 0.02,
            count: 2000,
            step: 1e-3,
            stop: StopRule::for_domain(&domain),
            domain,
            grid: Grid::new(20, 20),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootDiagnostics {
    pub trajectories: usize,
    /// Trajectories cut short by a non-finite state.
    pub truncated: usize,
    pub left_domain: usize,
    pub action_cap: usize,
    pub arc_length_cap: usize,
    pub step_cap: usize,
    pub samples: usize,
    /// Largest `|H|` over every sample of every non-truncated trajectory.
    #[serde(serialize_with = "crate::format::serialize_sig17")]
    pub max_abs_hamiltonian: f64,
    /// Per trajectory: whether `V` never decreased.
    pub monotone_action: bool,
    pub records: usize,
}

impl ShootDiagnostics {
    fn empty() -> Self {
        Self {
            trajectories: 0,
            truncated: 0,
            left_domain: 0,
            action_cap: 0,
            arc_length_cap: 0,
            step_cap: 0,
            samples: 0,
            max_abs_hamiltonian: 0.0,
            monotone_action: true,
            records: 0,
        }
    }

    fn record(&mut self, sys: &dyn DriftField, t: &Trajectory) {
        self.trajectories += 1;
        self.samples += t.states.len();
        match t.stop {
            StopReason::NonFinite => self.truncated += 1,
            StopReason::LeftDomain => self.left_domain += 1,
            StopReason::ActionCap => self.action_cap += 1,
            StopReason::ArcLengthCap => self.arc_length_cap += 1,
            StopReason::StepCap => self.step_cap += 1,
        }
        if !t.is_truncated() {
            self.max_abs_hamiltonian = self.max_abs_hamiltonian.max(t.max_abs_hamiltonian(sys));
        }
        self.monotone_action &= t.states.windows(2).all(|w| w[1].v >= w[0].v);
    }

    fn merge(&mut self, o: &ShootDiagnostics) {
        self.trajectories += o.trajectories;
        self.truncated += o.truncated;
        self.left_domain += o.left_domain;
        self.action_cap += o.action_cap;
        self.arc_length_cap += o.arc_length_cap;
        self.step_cap += o.step_cap;
        self.samples += o.samples;
        self.max_abs_hamiltonian = self.max_abs_hamiltonian.max(o.max_abs_hamiltonian);
        self.monotone_action &= o.monotone_action;
    }
}

const SEEDS_PER_TASK: usize = 16;

/// Shoots `count` characteristics from the seed circle around `center` and
/// reduces them to the grid dataset without keeping whole trajectories.
pub fn shoot(
    sys: &dyn DriftField,
    center: &FixedPoint,
    settings: &ShootSettings,
    mode: ExecMode,
) -> Result<(CharacteristicDataset, ShootDiagnostics), CharacteristicsError> {
    let circle = seed_circle(sys, center, settings.radius, settings.count)?;
    GridAccumulator::new(settings.domain, settings.grid)?;
    let tasks: Vec<std::ops::Range<usize>> = (0..settings.count)
        .step_by(SEEDS_PER_TASK)
        .map(|s| s..(s + SEEDS_PER_TASK).min(settings.count))
        .collect();
    let work = |range: &std::ops::Range<usize>| -> Result<_, CharacteristicsError> {
        let mut acc = GridAccumulator::new(settings.domain, settings.grid)?;
        let mut diag = ShootDiagnostics::empty();
        for k in range.clone() {
            let seed = project_to_zero_energy(sys, circle.state(k))?;
            let traj = integrate_characteristic(sys, seed, &settings.stop, settings.step)?;
            diag.record(sys, &traj);
            acc.absorb(&traj);
        }
        Ok((acc, diag))
    };
    let parts: Vec<Result<_, _>> = match mode {
        ExecMode::Serial => tasks.iter().map(work).collect(),
        ExecMode::Parallel => tasks.par_iter().map(work).collect(),
    };
    let mut acc = GridAccumulator::new(settings.domain, settings.grid)?;
    let mut diag = ShootDiagnostics::empty();
    for part in parts {
        let (a, d) = part?;
        acc.merge(&a);
        diag.merge(&d);
    }
    let dataset = acc.finish();
    diag.records = dataset.len();
    Ok((dataset, diag))
}

/// Trapezoid rule of `½|p|²` along the samples; equals the accumulated `V`
/// increment up to quadrature error.
pub fn trapezoid_action(states: &[CharacteristicState]) -> f64 {
    states
        .windows(2)
        .map(|w| 0.25 * (dot(w[0].p, w[0].p) + dot(w[1].p, w[1].p)) * (w[1].t - w[0].t))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{classify, MaierStein};
    use crate::is_finite;

    fn state_is_finite(s: &CharacteristicState) -> bool {
        is_finite(s.x) && is_finite(s.p) && s.v.is_finite()
    }

    fn node(sys: &MaierStein, loc: Point) -> FixedPoint {
        let (kind, eigenvalues) = classify(sys.jacobian(loc));
        FixedPoint {
            location: loc,
            kind,
            eigenvalues,
        }
    }

    #[test]
    fn quadratic_form_for_gamma_one_is_4i() {
        let sys = MaierStein::new(1.0).unwrap();
        let q = lyapunov_quadratic_form(sys.jacobian([-1.0, 0.0])).unwrap();
        for (a, b) in q.iter().flatten().zip([4.0, 0.0, 0.0, 4.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(quadratic_form_residual(q, sys.jacobian([-1.0, 0.0])) <= 1e-8);
    }

    #[test]
    fn quadratic_form_solves_riccati_for_non_normal_jacobian() {
        let jac = [[-1.0, 3.0], [-0.5, -2.0]];
        let q = lyapunov_quadratic_form(jac).unwrap();
        assert!(quadratic_form_residual(q, jac) <= 1e-8);
        assert!((q[0][1] - q[1][0]).abs() < 1e-12);
        assert!(lyapunov_quadratic_form([[1.0, 0.0], [0.0, -1.0]]).is_err());
    }

    #[test]
    fn seed_circle_examples() {
        let sys = MaierStein::new(1.0).unwrap();
        let center = node(&sys, [-1.0, 0.0]);
        let states = make_seed_circle(&sys, &center, 0.02, 2000).unwrap();
        let s0 = states[0];
        assert!((s0.x[0] + 0.98).abs() < 1e-15 && s0.x[1] == 0.0);
        assert!((s0.p[0] - 0.08).abs() < 1e-14 && s0.p[1] == 0.0);
        assert!((s0.v - 0.0008).abs() < 1e-16);

        let four = make_seed_circle(&sys, &center, 0.02, 4).unwrap();
        assert_eq!(four.len(), 4);
        for s in &four {
            assert!((crate::distance(s.x, [-1.0, 0.0]) - 0.02).abs() < 1e-15);
        }
        let saddle = node(&sys, [0.0, 0.0]);
        assert!(matches!(
            make_seed_circle(&sys, &saddle, 0.02, 4),
            Err(CharacteristicsError::NotStable(_))
        ));
    }

    #[test]
    fn projection_lands_on_zero_energy() {
        let sys = MaierStein::new(5.0).unwrap();
        let center = node(&sys, [-1.0, 0.0]);
        let mut worst_before = 0.0_f64;
        for s in make_seed_circle(&sys, &center, 0.02, 64).unwrap() {
            worst_before = worst_before.max(hamiltonian(&sys, s.x, s.p).abs());
            let projected = project_to_zero_energy(&sys, s).unwrap();
            assert!(hamiltonian(&sys, projected.x, projected.p).abs() <= 1e-12);
        }
        // the quadratic seeds alone are not on the zero-energy set
        assert!(worst_before > SEED_HAMILTONIAN_TOL);
        // on the x₁-axis of the gradient case the projection is exactly ∇(2U)
        let g1 = MaierStein::new(1.0).unwrap();
        let s = make_seed_circle(&g1, &node(&g1, [-1.0, 0.0]), 0.02, 4).unwrap()[0];
        let p = project_to_zero_energy(&g1, s).unwrap().p;
        assert!((p[0] - 0.077616).abs() < 1e-12);
    }

    #[test]
    fn zero_momentum_follows_the_flow() {
        let sys = MaierStein::new(5.0).unwrap();
        let seed = CharacteristicState {
            x: [-0.3, 0.4],
            p: [0.0, 0.0],
            v: 0.0,
            t: 0.0,
        };
        let stop = StopRule {
            max_steps: 2000,
            ..StopRule::for_domain(&Rect::maier_stein_left())
        };
        let traj = integrate_characteristic(&sys, seed, &stop, 1e-3).unwrap();
        assert_eq!(traj.stop, StopReason::StepCap);
        assert!(traj.states.iter().all(|s| s.p == [0.0, 0.0] && s.v == 0.0));
        // compare with an RK4 of ẋ = F at the same step
        let mut x = seed.x;
        for _ in 0..2000 {
            let f = |x: Point| sys.field(x);
            let k1 = f(x);
            let k2 = f([x[0] + 0.5e-3 * k1[0], x[1] + 0.5e-3 * k1[1]]);
            let k3 = f([x[0] + 0.5e-3 * k2[0], x[1] + 0.5e-3 * k2[1]]);
            let k4 = f([x[0] + 1e-3 * k3[0], x[1] + 1e-3 * k3[1]]);
            for i in 0..2 {
                x[i] += 1e-3 / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        assert!(crate::distance(x, traj.states.last().unwrap().x) < 1e-14);
    }

    #[test]
    fn immediate_stop_and_off_shell_seed() {
        let sys = MaierStein::new(1.0).unwrap();
        let stop = StopRule::for_domain(&Rect::maier_stein_left());
        let outside = CharacteristicState {
            x: [2.5, 2.5],
            p: [0.0, 0.0],
            v: 0.0,
            t: 0.0,
        };
        let t = integrate_characteristic(&sys, outside, &stop, 1e-3).unwrap();
        assert_eq!(t.states.len(), 1);
        assert_eq!(t.stop, StopReason::LeftDomain);
        let off = CharacteristicState {
            p: [1.0, 0.0],
            ..outside
        };
        assert!(matches!(
            integrate_characteristic(&sys, off, &stop, 1e-3),
            Err(CharacteristicsError::SeedOffShell(_))
        ));
    }

    #[test]
    fn blow_up_is_truncated_and_flagged() {
        struct Explosive;
        impl DriftField for Explosive {
            fn field(&self, x: Point) -> Point {
                [x[0] * x[0] * x[0] * 1e100, 0.0]
            }
            fn jacobian(&self, x: Point) -> Mat2 {
                [[3.0 * x[0] * x[0] * 1e100, 0.0], [0.0, 0.0]]
            }
        }
        let stop = StopRule {
            domain: Rect::new(-1e300, 1e300, -1.0, 1.0),
            v_max: f64::INFINITY,
            max_arc_length: f64::INFINITY,
            max_steps: 100,
        };
        let seed = CharacteristicState {
            x: [1.0, 0.0],
            p: [0.0, 0.0],
            v: 0.0,
            t: 0.0,
        };
        let t = integrate_characteristic(&Explosive, seed, &stop, 1e-3).unwrap();
        assert!(t.is_truncated());
        assert!(t.states.iter().all(state_is_finite));
    }

    #[test]
    fn minimum_rule_and_empty_inputs() {
        let domain = Rect::new(0.0, 1.0, 0.0, 1.0);
        let grid = Grid::new(2, 2);
        let st = |x: Point, v: f64| CharacteristicState {
            x,
            p: [v, 0.0],
            v,
            t: 0.0,
        };
        let a = Trajectory {
            states: vec![st([0.1, 0.1], 0.5)],
            stop: StopReason::LeftDomain,
        };
        let b = Trajectory {
            states: vec![st([0.2, 0.2], 0.3), st([0.9, 0.9], 0.7)],
            stop: StopReason::LeftDomain,
        };
        let ds = extract_grid_dataset(&[a.clone(), b], domain, grid).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.records[0].v, 0.3);
        assert_eq!(ds.records[1].x, [0.9, 0.9]);

        // ties keep the earlier trajectory
        let twin = Trajectory {
            states: vec![st([0.15, 0.15], 0.5)],
            stop: StopReason::LeftDomain,
        };
        let ds = extract_grid_dataset(&[a, twin], domain, grid).unwrap();
        assert_eq!(ds.records[0].x, [0.1, 0.1]);

        assert!(extract_grid_dataset(&[], domain, grid).unwrap().is_empty());
        let never = Trajectory {
            states: vec![st([5.0, 5.0], 0.1)],
            stop: StopReason::LeftDomain,
        };
        assert!(extract_grid_dataset(&[never], domain, grid)
            .unwrap()
            .is_empty());
        assert!(GridAccumulator::new(domain, Grid::new(0, 3)).is_err());
    }

    #[test]
    fn csv_roundtrip_and_header() {
        let domain = Rect::new(0.0, 1.0, 0.0, 1.0);
        let grid = Grid::new(2, 2);
        let ds = CharacteristicDataset::from_records(
            domain,
            grid,
            vec![
                DatasetRecord {
                    x: [0.7, 0.2],
                    p: [0.1, -0.2],
                    v: 0.3,
                },
                DatasetRecord {
                    x: [0.2, 0.1],
                    p: [0.08, 0.0],
                    v: 0.0008,
                },
            ],
        )
        .unwrap();
        // row-major order
        assert_eq!(ds.records[0].x, [0.2, 0.1]);
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,p1,p2,V\n0.20000000000000001,0.10000000000000001,"));
        let back = CharacteristicDataset::read_csv(&buf[..], domain, grid).unwrap();
        assert_eq!(back, ds);
    }
}
