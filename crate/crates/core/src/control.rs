//! Exit-time Monte Carlo and the mean-exit-time controller.
//!
//! Trajectories follow the Euler–Maruyama scheme
//! `x ← x + [F(x) + c∇Ṽ(x)]Δt + √(σΔt)·ξ`. Trajectory `k` draws its normals
//! from ChaCha8 stream `k` of the base seed, so each trajectory is
//! reproducible on its own and the execution order is irrelevant.
//!
//! With `u = c∇V` the quasipotential barrier becomes `(1 − 2c)V₀`, hence
//! `T ≈ b·exp((1 − 2c)V₀/σ)`. The controller starts from
//! `c₁ = ½ − (σ/2V₀) ln T_d` and corrects with
//! `c ← c + (σ/2V₀) ln(T/T_d)`, which removes the unknown prefactor `b`.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DriftField, NoiseModel};
use crate::format::serialize_sig17;
use crate::{ExecMode, Point, QuasipotentialModel, Rect};

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("initial point {0:?} is not inside the exit region")]
    InitialOutside(Point),
    #[error("all {n} trajectories were censored at t = {max_time}; increase max_time")]
    AllCensored { n: usize, max_time: f64 },
    #[error("control loop stopped after {} iterate(s): {cause}", partial.iterates.len())]
    Incomplete {
        partial: Box<ControlReport>,
        cause: Box<ControlError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSettings {
    #[serde(serialize_with = "serialize_sig17")]
    pub dt: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub max_time: f64,
    pub n_trajectories: usize,
    pub base_seed: u64,
    pub initial_point: Point,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            max_time: 1e6,
            n_trajectories: 1000,
            base_seed: 0,
            initial_point: [-1.0, 0.0],
        }
    }
}

impl SimulationSettings {
    pub fn max_steps(&self) -> u64 {
        (self.max_time / self.dt).ceil() as u64
    }

    fn validate(&self) -> Result<(), ControlError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ControlError::InvalidParameter(format!("dt = {}", self.dt)));
        }
        if !(self.max_time >= self.dt) {
            return Err(ControlError::InvalidParameter(format!(
                "max_time = {} is shorter than one step",
                self.max_time
            )));
        }
        if self.n_trajectories == 0 {
            return Err(ControlError::InvalidParameter("n_trajectories = 0".into()));
        }
        Ok(())
    }
}

/// The basin `{x₁ < exit_x1}`, intersected with a safety box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitRegion {
    /// A trajectory exits once `x₁ ≥ exit_x1`.
    pub exit_x1: f64,
    /// Leaving this box also ends a trajectory, with a diagnostic flag.
    pub safety_box: Rect,
}

impl Default for ExitRegion {
    fn default() -> Self {
        Self {
            exit_x1: 0.0,
            safety_box: Rect::new(-3.0, 3.0, -3.0, 3.0),
        }
    }
}

impl ExitRegion {
    pub fn contains(&self, x: Point) -> bool {
        x[0] < self.exit_x1 && self.safety_box.contains(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExitOutcome {
    Exited { time: f64, left_box: bool },
    Censored,
}

/// The feedback `u = c∇Ṽ`.
#[derive(Clone, Copy)]
pub struct Control<'a> {
    pub c: f64,
    pub model: &'a dyn QuasipotentialModel,
}

/// One Euler–Maruyama trajectory from `settings.initial_point`.
pub fn simulate_exit(
    sys: &dyn DriftField,
    noise: NoiseModel,
    control: Option<Control<'_>>,
    region: &ExitRegion,
    settings: &SimulationSettings,
    trajectory_index: u64,
) -> Result<ExitOutcome, ControlError> {
    settings.validate()?;
    if !region.contains(settings.initial_point) {
        return Err(ControlError::InitialOutside(settings.initial_point));
    }
    Ok(run_trajectory(
        sys,
        noise,
        control,
        region,
        settings,
        trajectory_index,
    ))
}

fn run_trajectory(
    sys: &dyn DriftField,
    noise: NoiseModel,
    control: Option<Control<'_>>,
    region: &ExitRegion,
    settings: &SimulationSettings,
    index: u64,
) -> ExitOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.base_seed);
    rng.set_stream(index);
    let dt = settings.dt;
    let scale = noise.increment_scale(dt);
    let mut x = settings.initial_point;
    for k in 1..=settings.max_steps() {
        let mut drift = sys.field(x);
        if let Some(u) = control {
            let g = u.model.gradient(x);
            drift[0] += u.c * g[0];
            drift[1] += u.c * g[1];
        }
        let xi0: f64 = StandardNormal.sample(&mut rng);
        let xi1: f64 = StandardNormal.sample(&mut rng);
        x[0] += drift[0] * dt + scale * xi0;
        x[1] += drift[1] * dt + scale * xi1;
        if x[0] >= region.exit_x1 {
            return ExitOutcome::Exited {
                time: k as f64 * dt,
                left_box: false,
            };
        }
        // a NaN state fails `contains`, so it is caught here too
        if !region.safety_box.contains(x) {
            return ExitOutcome::Exited {
                time: k as f64 * dt,
                left_box: true,
            };
        }
    }
    ExitOutcome::Censored
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitTimeEstimate {
    #[serde(serialize_with = "serialize_sig17")]
    pub mean: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub std_error: f64,
    /// Trajectories that exited (the sample the mean is taken over).
    pub n: usize,
    pub n_censored: usize,
    /// Exits through the safety box rather than the basin boundary.
    pub n_left_box: usize,
    pub settings: SimulationSettings,
}

/// Per-trajectory outcomes in index order.
pub fn simulate_batch(
    sys: &dyn DriftField,
    noise: NoiseModel,
    control: Option<Control<'_>>,
    region: &ExitRegion,
    settings: &SimulationSettings,
    mode: ExecMode,
) -> Result<Vec<ExitOutcome>, ControlError> {
    settings.validate()?;
    if !region.contains(settings.initial_point) {
        return Err(ControlError::InitialOutside(settings.initial_point));
    }
    let run = |k: u64| run_trajectory(sys, noise, control, region, settings, k);
    let n = settings.n_trajectories as u64;
    Ok(match mode {
        ExecMode::Serial => (0..n).map(run).collect(),
        ExecMode::Parallel => (0..n).into_par_iter().map(run).collect(),
    })
}

/// Mean exit time over the uncensored trajectories, with the standard error
/// `s/√n`.
pub fn estimate_mean_exit_time(
    sys: &dyn DriftField,
    noise: NoiseModel,
    control: Option<Control<'_>>,
    region: &ExitRegion,
    settings: &SimulationSettings,
    mode: ExecMode,
) -> Result<ExitTimeEstimate, ControlError> {
    let outcomes = simulate_batch(sys, noise, control, region, settings, mode)?;
    summarize(&outcomes, settings)
}

pub fn summarize(
    outcomes: &[ExitOutcome],
    settings: &SimulationSettings,
) -> Result<ExitTimeEstimate, ControlError> {
    let times: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| match o {
            ExitOutcome::Exited { time, .. } => Some(*time),
            ExitOutcome::Censored => None,
        })
        .collect();
    let n_left_box = outcomes
        .iter()
        .filter(|o| matches!(o, ExitOutcome::Exited { left_box: true, .. }))
        .count();
    let n = times.len();
    if n == 0 {
        return Err(ControlError::AllCensored {
            n: outcomes.len(),
            max_time: settings.max_time,
        });
    }
    let mean = times.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(ExitTimeEstimate {
        mean,
        std_error,
        n,
        n_censored: outcomes.len() - n,
        n_left_box,
        settings: *settings,
    })
}

fn check_positive(name: &str, v: f64) -> Result<(), ControlError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ControlError::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// `c₁ = ½ − (σ/2V₀) ln T_d`.
pub fn c_initial(v0: f64, sigma: f64, t_d: f64) -> Result<f64, ControlError> {
    check_positive("V0", v0)?;
    check_positive("sigma", sigma)?;
    check_positive("T_d", t_d)?;
    Ok(0.5 - sigma / (2.0 * v0) * t_d.ln())
}

/// `c + (σ/2V₀) ln(T_k/T_d)`.
pub fn c_update(c: f64, v0: f64, sigma: f64, t_k: f64, t_d: f64) -> Result<f64, ControlError> {
    check_positive("V0", v0)?;
    check_positive("sigma", sigma)?;
    check_positive("T_k", t_k)?;
    check_positive("T_d", t_d)?;
    Ok(c + sigma / (2.0 * v0) * (t_k / t_d).ln())
}

/// Largest admissible control gain.
pub const C_MAX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSettings {
    pub max_iterations: usize,
    /// Converged once `|ln(T/T_d)|` is at most this.
    #[serde(serialize_with = "serialize_sig17")]
    pub tolerance: f64,
    /// Censoring horizon of controlled runs, in units of `T_d`.
    #[serde(serialize_with = "serialize_sig17")]
    pub horizon_factor: f64,
}

impl Default for ControlSettings {
    fn default() -> Self {
        Self {
            max_iterations: 5,
            tolerance: 0.1,
            horizon_factor: 50.0,
        }
    }
}

/// What an estimator reports for one gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    pub n_censored: usize,
}

impl From<&ExitTimeEstimate> for IterateEstimate {
    fn from(e: &ExitTimeEstimate) -> Self {
        Self {
            mean: e.mean,
            std_error: e.std_error,
            n: e.n,
            n_censored: e.n_censored,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlIterate {
    #[serde(serialize_with = "serialize_sig17")]
    pub c: f64,
    /// The update asked for `c > ½` and was clamped.
    pub clamped: bool,
    #[serde(serialize_with = "serialize_sig17")]
    pub mean: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub std_error: f64,
    pub n: usize,
    pub n_censored: usize,
}

impl ControlIterate {
    pub fn log_ratio(&self, t_d: f64) -> f64 {
        (self.mean / t_d).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMeta {
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlReport {
    #[serde(rename = "V0", serialize_with = "serialize_sig17")]
    pub v0: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub sigma: f64,
    #[serde(rename = "T_d", serialize_with = "serialize_sig17")]
    pub t_d: f64,
    pub iterates: Vec<ControlIterate>,
    pub converged: bool,
    #[serde(serialize_with = "serialize_sig17")]
    pub tolerance: f64,
    /// Run-dependent fields (wall time); everything else is reproducible.
    pub meta: ReportMeta,
}

impl ControlReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// The report without run-dependent metadata.
    pub fn without_meta(&self) -> Self {
        Self {
            meta: ReportMeta::default(),
            ..self.clone()
        }
    }
}

fn clamp(c: f64) -> (f64, bool) {
    if c > C_MAX {
        (C_MAX, true)
    } else {
        (c, false)
    }
}

/// The control loop with any estimator of the mean exit time under gain `c`.
pub fn run_control_loop_with<E>(
    v0: f64,
    sigma: f64,
    t_d: f64,
    settings: &ControlSettings,
    mut estimate: E,
) -> Result<ControlReport, ControlError>
where
    E: FnMut(f64) -> Result<IterateEstimate, ControlError>,
{
    let started = Instant::now();
    if settings.max_iterations == 0 {
        return Err(ControlError::InvalidParameter("max_iterations = 0".into()));
    }
    let (mut c, mut clamped) = clamp(c_initial(v0, sigma, t_d)?);
    let mut report = ControlReport {
        v0,
        sigma,
        t_d,
        iterates: Vec::new(),
        converged: false,
        tolerance: settings.tolerance,
        meta: ReportMeta::default(),
    };
    for k in 0..settings.max_iterations {
        let e = match estimate(c) {
            Ok(e) => e,
            Err(cause) => {
                report.meta.wall_time_seconds = started.elapsed().as_secs_f64();
                return Err(ControlError::Incomplete {
                    partial: Box::new(report),
                    cause: Box::new(cause),
                });
            }
        };
        report.iterates.push(ControlIterate {
            c,
            clamped,
            mean: e.mean,
            std_error: e.std_error,
            n: e.n,
            n_censored: e.n_censored,
        });
        if (e.mean / t_d).ln().abs() <= settings.tolerance {
            report.converged = true;
            break;
        }
        if k + 1 < settings.max_iterations {
            (c, clamped) = clamp(c_update(c, v0, sigma, e.mean, t_d)?);
        }
    }
    report.meta.wall_time_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

/// The control loop with Monte Carlo estimates under `u = c∇Ṽ`, where `V₀`
/// is read from `model` at `saddle`. Each iterate uses
/// `max_time = horizon_factor · T_d`.
#[allow(clippy::too_many_arguments)]
pub fn run_control_loop(
    sys: &dyn DriftField,
    model: &dyn QuasipotentialModel,
    noise: NoiseModel,
    saddle: Point,
    t_d: f64,
    region: &ExitRegion,
    simulation: &SimulationSettings,
    settings: &ControlSettings,
    mode: ExecMode,
) -> Result<ControlReport, ControlError> {
    check_positive("T_d", t_d)?;
    let v0 = model.value(saddle);
    let sim = SimulationSettings {
        max_time: settings.horizon_factor * t_d,
        ..*simulation
    };
    run_control_loop_with(v0, noise.sigma, t_d, settings, |c| {
        let control = Control { c, model };
        estimate_mean_exit_time(sys, noise, Some(control), region, &sim, mode)
            .map(|e| IterateEstimate::from(&e))
    })
}

/// `T(c) = b·exp((1 − 2c)V₀/σ)`, the exact exit-time law without Monte Carlo
/// noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactLaw {
    pub b: f64,
    pub v0: f64,
    pub sigma: f64,
}

impl ExactLaw {
    pub fn time(&self, c: f64) -> f64 {
        self.b * ((1.0 - 2.0 * c) * self.v0 / self.sigma).exp()
    }

    pub fn estimate(&self, c: f64) -> Result<IterateEstimate, ControlError> {
        Ok(IterateEstimate {
            mean: self.time(c),
            std_error: 0.0,
            n: 0,
            n_censored: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{AnalyticQuasipotential, MaierStein};
    use proptest::prelude::*;

    fn settings(start: Point, max_time: f64, n: usize) -> SimulationSettings {
        SimulationSettings {
            initial_point: start,
            max_time,
            n_trajectories: n,
            base_seed: 42,
            ..SimulationSettings::default()
        }
    }

    #[test]
    fn deterministic_cases_are_censored() {
        let sys = MaierStein::new(1.0).unwrap();
        let quiet = NoiseModel::new(0.0).unwrap();
        let region = ExitRegion::default();
        let out = simulate_exit(
            &sys,
            quiet,
            None,
            &region,
            &settings([-1.0, 0.0], 5.0, 1),
            0,
        )
        .unwrap();
        assert_eq!(out, ExitOutcome::Censored);

        // c = ½ cancels the γ = 1 drift exactly
        let oracle = AnalyticQuasipotential::new(sys).unwrap();
        let control = Control {
            c: 0.5,
            model: &oracle,
        };
        let s = settings([-0.5, 0.0], 5.0, 1);
        assert_eq!(
            simulate_exit(&sys, quiet, Some(control), &region, &s, 0).unwrap(),
            ExitOutcome::Censored
        );
        let mut x = s.initial_point;
        let f = sys.field(x);
        let g = oracle.gradient(x);
        x[0] += (f[0] + 0.5 * g[0]) * s.dt;
        assert_eq!(x, [-0.5, 0.0]);

        let e = estimate_mean_exit_time(
            &sys,
            quiet,
            None,
            &region,
            &settings([-1.0, 0.0], 1.0, 3),
            ExecMode::Serial,
        );
        assert!(matches!(e, Err(ControlError::AllCensored { n: 3, .. })));
    }

    #[test]
    fn trajectories_are_reproducible_per_index() {
        let sys = MaierStein::new(1.0).unwrap();
        let noise = NoiseModel::new(0.3).unwrap();
        let region = ExitRegion::default();
        let s = settings([-1.0, 0.0], 1e4, 8);
        let a = simulate_exit(&sys, noise, None, &region, &s, 5).unwrap();
        let b = simulate_exit(&sys, noise, None, &region, &s, 5).unwrap();
        assert_eq!(a, b);
        let batch = simulate_batch(&sys, noise, None, &region, &s, ExecMode::Serial).unwrap();
        assert_eq!(batch[5], a);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let par = pool.install(|| {
            simulate_batch(&sys, noise, None, &region, &s, ExecMode::Parallel).unwrap()
        });
        assert_eq!(batch, par);
        assert_ne!(batch[0], batch[1]);
    }

    #[test]
    fn invalid_inputs() {
        let sys = MaierStein::new(1.0).unwrap();
        let noise = NoiseModel::new(0.1).unwrap();
        let region = ExitRegion::default();
        assert!(matches!(
            simulate_exit(&sys, noise, None, &region, &settings([0.5, 0.0], 1.0, 1), 0),
            Err(ControlError::InitialOutside(_))
        ));
        let zero = SimulationSettings {
            n_trajectories: 0,
            ..settings([-1.0, 0.0], 1.0, 1)
        };
        assert!(
            estimate_mean_exit_time(&sys, noise, None, &region, &zero, ExecMode::Serial).is_err()
        );
    }

    #[test]
    fn summary_statistics() {
        let s = settings([-1.0, 0.0], 10.0, 4);
        let outcomes = [
            ExitOutcome::Exited {
                time: 1.0,
                left_box: false,
            },
            ExitOutcome::Exited {
                time: 3.0,
                left_box: true,
            },
            ExitOutcome::Censored,
            ExitOutcome::Exited {
                time: 2.0,
                left_box: false,
            },
        ];
        let e = summarize(&outcomes, &s).unwrap();
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.n, 3);
        assert_eq!(e.n_censored, 1);
        assert_eq!(e.n_left_box, 1);
        assert!((e.std_error - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn controller_formulas() {
        let c = c_initial(0.5, 0.15, 100.0).unwrap();
        assert!((c + 0.1908).abs() < 1e-4 && (c + 0.1901).abs() < 1e-3);
        let c = c_initial(0.5, 0.1, 100.0).unwrap();
        assert!((c - 0.0395).abs() < 1e-4 && (c - 0.0399).abs() < 1e-3);
        assert_eq!(c_initial(0.37, 0.2, 1.0).unwrap(), 0.5);

        let c2 = c_update(-0.1901, 0.5, 0.15, 136.94, 100.0).unwrap();
        assert!((c2 + 0.1430).abs() < 1e-3);
        let c2 = c_update(0.0399, 0.5, 0.1, 202.07, 100.0).unwrap();
        assert!((c2 - 0.1102).abs() < 1e-3);
        assert_eq!(c_update(0.123, 0.5, 0.1, 50.0, 50.0).unwrap(), 0.123);

        assert!(c_initial(0.5, 0.1, 0.0).is_err());
        assert!(c_initial(0.0, 0.1, 10.0).is_err());
        assert!(c_update(0.0, 0.5, 0.1, -1.0, 10.0).is_err());
    }

    #[test]
    fn loop_clamps_and_records_partial_failures() {
        let cfg = ControlSettings::default();
        // T_d < 1 asks for c₁ > ½
        let law = ExactLaw {
            b: 1.0,
            v0: 0.5,
            sigma: 0.1,
        };
        let r = run_control_loop_with(0.5, 0.1, 0.5, &cfg, |c| law.estimate(c)).unwrap();
        assert!(r.iterates[0].clamped);
        assert!(r.iterates.iter().all(|i| i.c <= C_MAX));

        let mut calls = 0;
        let err = run_control_loop_with(0.5, 0.1, 100.0, &cfg, |c| {
            calls += 1;
            if calls == 2 {
                Err(ControlError::AllCensored {
                    n: 1,
                    max_time: 1.0,
                })
            } else {
                Ok(IterateEstimate {
                    mean: 300.0 + c,
                    std_error: 1.0,
                    n: 1,
                    n_censored: 0,
                })
            }
        });
        match err {
            Err(ControlError::Incomplete { partial, .. }) => assert_eq!(partial.iterates.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn first_estimate_is_accepted_when_the_law_is_exact_with_unit_prefactor() {
        let law = ExactLaw {
            b: 1.0,
            v0: 0.5,
            sigma: 0.15,
        };
        let r = run_control_loop_with(0.5, 0.15, 100.0, &ControlSettings::default(), |c| {
            law.estimate(c)
        })
        .unwrap();
        assert!(r.converged);
        assert_eq!(r.iterates.len(), 1);
        assert!((r.iterates[0].mean - 100.0).abs() < 1e-9);
    }

    #[test]
    fn report_json_separates_metadata() {
        let law = ExactLaw {
            b: 3.0,
            v0: 0.5,
            sigma: 0.1,
        };
        let a = run_control_loop_with(0.5, 0.1, 1000.0, &ControlSettings::default(), |c| {
            law.estimate(c)
        })
        .unwrap();
        let b = run_control_loop_with(0.5, 0.1, 1000.0, &ControlSettings::default(), |c| {
            law.estimate(c)
        })
        .unwrap();
        assert_eq!(a.without_meta().to_json(), b.without_meta().to_json());
        let v: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
        assert!(v["meta"]["wall_time_seconds"].is_number());
        assert_eq!(v["V0"], 0.5);
        assert_eq!(v["iterates"].as_array().unwrap().len(), 2);
    }

    proptest! {
        #[test]
        fn one_update_lands_on_target(
            b in 0.01f64..100.0,
            v0 in 0.1f64..2.0,
            sigma in 0.05f64..0.5,
            c1 in -1.0f64..0.5,
            log_td in 0.0f64..8.0,
        ) {
            let law = ExactLaw { b, v0, sigma };
            let t_d = log_td.exp();
            let c2 = c_update(c1, v0, sigma, law.time(c1), t_d).unwrap();
            prop_assert!((law.time(c2) / t_d).ln().abs() <= 1e-12);
            prop_assert!(law.time(c1 + 0.01) < law.time(c1));
        }
    }
}
