//! Run configuration: defaults, a flat TOML file, the output-directory
//! environment override and command-line flags, applied in that order.

use std::path::{Path, PathBuf};

use quasipot::characteristics::{Grid, ShootSettings, StopRule};
use quasipot::control::{ControlSettings, ExitRegion, SimulationSettings};
use quasipot::dynamics::{MaierStein, NewtonSettings, NoiseModel};
use quasipot::net::{AdamConfig, NetArchitecture};
use quasipot::path::PathSettings;
use quasipot::trainer::{LossWeights, TrainingConfig};
use quasipot::{ExecMode, Point, Rect};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "QUASIPOT_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    pub gamma: f64,
    pub seed: u64,
    pub exec: ExecMode,
    pub out_dir: PathBuf,
    /// Defaults to `<out_dir>/checkpoint.json`.
    pub checkpoint: Option<PathBuf>,
    /// Defaults to `<out_dir>/dataset.csv`.
    pub dataset: Option<PathBuf>,

    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub search_x1_min: f64,
    pub search_x1_max: f64,
    pub search_x2_min: f64,
    pub search_x2_max: f64,

    pub seed_radius: f64,
    pub seed_count: usize,
    pub char_step: f64,
    pub stop_inflation: f64,
    pub v_max: f64,
    pub max_arc_length: f64,
    pub max_char_steps: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,

    pub n_collocation: usize,
    pub steps: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub hidden_sizes: Vec<usize>,
    pub trace_interval: u64,
    pub weight_p: f64,
    pub weight_h: f64,
    pub weight_0: f64,
    pub weight_d: f64,

    pub eval_rows: usize,
    pub eval_cols: usize,

    pub path_step: f64,
    pub path_max_steps: usize,
    pub capture_radius: f64,
    pub offset_x1: f64,
    pub offset_x2: f64,

    pub sigma: f64,
    pub dt: f64,
    pub n_traj: usize,
    pub max_time: f64,
    pub c: f64,
    pub initial_x1: f64,
    pub initial_x2: f64,
    pub exit_x1: f64,
    /// Use the closed-form `V = 2U` (γ = 1 only) instead of a checkpoint.
    pub analytic: bool,

    pub target_time: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub horizon_factor: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let shoot = ShootSettings::default();
        let train = TrainingConfig::default();
        let path = PathSettings::default();
        let sim = SimulationSettings::default();
        let ctl = ControlSettings::default();
        let domain = Rect::maier_stein_left();
        Self {
            model: "maier_stein".into(),
            gamma: 1.0,
            seed: 0,
            exec: ExecMode::Parallel,
            out_dir: PathBuf::from("out"),
            checkpoint: None,
            dataset: None,
            x1_min: domain.x1_min,
            x1_max: domain.x1_max,
            x2_min: domain.x2_min,
            x2_max: domain.x2_max,
            search_x1_min: -2.0,
            search_x1_max: 2.0,
            search_x2_min: -2.0,
            search_x2_max: 2.0,
            seed_radius: shoot.radius,
            seed_count: shoot.count,
            char_step: shoot.step,
            stop_inflation: 0.2,
            v_max: shoot.stop.v_max,
            max_arc_length: shoot.stop.max_arc_length,
            max_char_steps: shoot.stop.max_steps,
            grid_rows: shoot.grid.n_rows,
            grid_cols: shoot.grid.n_cols,
            n_collocation: train.n_collocation,
            steps: train.steps,
            learning_rate: train.adam.learning_rate,
            beta1: train.adam.beta1,
            beta2: train.adam.beta2,
            epsilon: train.adam.epsilon,
            hidden_sizes: train.architecture.hidden_sizes.clone(),
            trace_interval: train.trace_interval,
            weight_p: 1.0,
            weight_h: 1.0,
            weight_0: 1.0,
            weight_d: 1.0,
            eval_rows: 50,
            eval_cols: 50,
            path_step: path.step,
            path_max_steps: path.max_steps,
            capture_radius: path.capture_radius,
            offset_x1: quasipot::path::DEFAULT_OFFSET[0],
            offset_x2: quasipot::path::DEFAULT_OFFSET[1],
            sigma: 0.15,
            dt: sim.dt,
            n_traj: sim.n_trajectories,
            max_time: sim.max_time,
            c: 0.0,
            initial_x1: sim.initial_point[0],
            initial_x2: sim.initial_point[1],
            exit_x1: 0.0,
            analytic: false,
            target_time: 100.0,
            max_iterations: ctl.max_iterations,
            tolerance: ctl.tolerance,
            horizon_factor: ctl.horizon_factor,
        }
    }
}

/// Values given on the command line; `None` leaves the configured value.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub gamma: Option<f64>,
    pub sigma: Option<f64>,
    pub target_time: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub n_traj: Option<usize>,
    pub dt: Option<f64>,
    pub c: Option<f64>,
    pub checkpoint: Option<PathBuf>,
    pub steps: Option<u64>,
    pub seed_count: Option<usize>,
    pub analytic: bool,
    pub serial: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text)
            .map_err(|e| CliError::config(format!("config: {}", e.message().replace('\n', " "))))
    }

    /// Defaults, then `file`, then the environment, then `flags`.
    pub fn resolve(
        file: Option<&Path>,
        env_out_dir: Option<PathBuf>,
        flags: &Overrides,
    ) -> Result<Self, CliError> {
        let mut cfg = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        if let Some(dir) = env_out_dir {
            cfg.out_dir = dir;
        }
        let f = flags.clone();
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = f.$field { cfg.$field = v; } )* };
        }
        take!(
            seed,
            gamma,
            sigma,
            target_time,
            out_dir,
            n_traj,
            dt,
            c,
            steps,
            seed_count
        );
        if f.checkpoint.is_some() {
            cfg.checkpoint = f.checkpoint;
        }
        cfg.analytic |= f.analytic;
        if f.serial {
            cfg.exec = ExecMode::Serial;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.model != "maier_stein" {
            return Err(CliError::config(format!("unknown model {:?}", self.model)));
        }
        if self.domain().is_degenerate() {
            return Err(CliError::config("degenerate domain".into()));
        }
        if self.search_box().is_degenerate() {
            return Err(CliError::config("degenerate fixed-point search box".into()));
        }
        self.system()?;
        self.noise()?;
        Ok(())
    }

    pub fn system(&self) -> Result<MaierStein, CliError> {
        MaierStein::new(self.gamma).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn noise(&self) -> Result<NoiseModel, CliError> {
        NoiseModel::new(self.sigma).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn domain(&self) -> Rect {
        Rect::new(self.x1_min, self.x1_max, self.x2_min, self.x2_max)
    }

    pub fn search_box(&self) -> Rect {
        Rect::new(
            self.search_x1_min,
            self.search_x1_max,
            self.search_x2_min,
            self.search_x2_max,
        )
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid_rows, self.grid_cols)
    }

    pub fn newton(&self) -> NewtonSettings {
        NewtonSettings::default()
    }

    pub fn shoot_settings(&self) -> ShootSettings {
        let domain = self.domain();
        ShootSettings {
            radius: self.seed_radius,
            count: self.seed_count,
            step: self.char_step,
            stop: StopRule {
                domain: domain.inflate(self.stop_inflation),
                v_max: self.v_max,
                max_arc_length: self.max_arc_length,
                max_steps: self.max_char_steps,
            },
            domain,
            grid: self.grid(),
        }
    }

    pub fn training(&self, stable_point: Point) -> TrainingConfig {
        TrainingConfig {
            collocation_domain: self.domain(),
            n_collocation: self.n_collocation,
            stable_point,
            steps: self.steps,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                beta1: self.beta1,
                beta2: self.beta2,
                epsilon: self.epsilon,
            },
            seed: self.seed,
            weights: LossWeights {
                p: self.weight_p,
                h: self.weight_h,
                zero: self.weight_0,
                data: self.weight_d,
            },
            trace_interval: self.trace_interval,
            architecture: NetArchitecture::with_hidden(self.hidden_sizes.clone()),
            mode: self.exec,
        }
    }

    pub fn path_settings(&self) -> PathSettings {
        PathSettings {
            step: self.path_step,
            max_steps: self.path_max_steps,
            capture_radius: self.capture_radius,
        }
    }

    pub fn simulation(&self) -> SimulationSettings {
        SimulationSettings {
            dt: self.dt,
            max_time: self.max_time,
            n_trajectories: self.n_traj,
            base_seed: self.seed,
            initial_point: [self.initial_x1, self.initial_x2],
        }
    }

    pub fn exit_region(&self) -> ExitRegion {
        ExitRegion {
            exit_x1: self.exit_x1,
            ..ExitRegion::default()
        }
    }

    pub fn control_settings(&self) -> ControlSettings {
        ControlSettings {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            horizon_factor: self.horizon_factor,
        }
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.out_dir.join("checkpoint.json"))
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.dataset
            .clone()
            .unwrap_or_else(|| self.out_dir.join("dataset.csv"))
    }
}
