use std::fs;
use std::path::Path;

use quasipot::characteristics::{shoot, CharacteristicDataset};
use quasipot::control::{estimate_mean_exit_time, run_control_loop, Control};
use quasipot::dynamics::{
    find_fixed_points, AnalyticQuasipotential, DriftField, FixedPoint, FixedPointKind, MaierStein,
};
use quasipot::format::{sig17, write_csv, Sig17};
use quasipot::net::{init_params, Checkpoint};
use quasipot::path::{mirror_deviation, trace_most_probable_path, PathSummary, ProbablePath};
use quasipot::trainer::{max_oracle_error, train_observed, write_loss_trace};
use quasipot::QuasipotentialModel;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, ErrorCode};

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
        }
    }
    fs::write(path, bytes).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::new(ErrorCode::Internal, e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn fixed_points(cfg: &RunConfig, sys: &MaierStein) -> Result<Vec<FixedPoint>, CliError> {
    let found = find_fixed_points(sys, &cfg.search_box(), &cfg.newton())?;
    if found.is_empty() {
        return Err(CliError::new(
            ErrorCode::NoFixedPoints,
            format!("no fixed points in {:?}", cfg.search_box()),
        ));
    }
    Ok(found)
}

fn pick(
    points: &[FixedPoint],
    kind: FixedPointKind,
    cfg: &RunConfig,
) -> Result<FixedPoint, CliError> {
    points
        .iter()
        .find(|p| p.kind == kind && cfg.domain().contains(p.location))
        .copied()
        .ok_or_else(|| {
            CliError::new(
                ErrorCode::NoFixedPoints,
                format!("no {kind:?} inside the training domain"),
            )
        })
}

#[derive(Serialize)]
struct FixedPointOut {
    location: [Sig17; 2],
    kind: FixedPointKind,
    /// `[re, im]` pairs.
    eigenvalues: [[Sig17; 2]; 2],
}

pub fn cmd_fixed_points(cfg: &RunConfig) -> Result<(), CliError> {
    let sys = cfg.system()?;
    let found = fixed_points(cfg, &sys)?;
    let out: Vec<FixedPointOut> = found
        .iter()
        .map(|p| FixedPointOut {
            location: p.location.map(Sig17),
            kind: p.kind,
            eigenvalues: p.eigenvalues.map(|z| [Sig17(z.re), Sig17(z.im)]),
        })
        .collect();
    for p in &found {
        println!(
            "{:?} x=({}, {}) eigenvalues=({}, {})",
            p.kind,
            sig17(p.location[0]),
            sig17(p.location[1]),
            p.eigenvalues[0],
            p.eigenvalues[1]
        );
    }
    write_json(&cfg.out_dir.join("fixed_points.json"), &out)
}

pub fn cmd_shoot(cfg: &RunConfig) -> Result<CharacteristicDataset, CliError> {
    let sys = cfg.system()?;
    let node = pick(&fixed_points(cfg, &sys)?, FixedPointKind::StableNode, cfg)?;
    let (dataset, diag) = shoot(&sys, &node, &cfg.shoot_settings(), cfg.exec)?;
    let mut csv = Vec::new();
    dataset.write_csv(&mut csv)?;
    write_file(&cfg.dataset_path(), &csv)?;
    #[derive(Serialize)]
    struct ShootOut<'a> {
        center: [Sig17; 2],
        diagnostics: &'a quasipot::characteristics::ShootDiagnostics,
    }
    write_json(
        &cfg.out_dir.join("shoot.json"),
        &ShootOut {
            center: node.location.map(Sig17),
            diagnostics: &diag,
        },
    )?;
    println!(
        "{} trajectories, {} records, max |H| = {}",
        diag.trajectories,
        diag.records,
        sig17(diag.max_abs_hamiltonian)
    );
    Ok(dataset)
}

fn load_dataset(cfg: &RunConfig) -> Result<CharacteristicDataset, CliError> {
    let path = cfg.dataset_path();
    let file =
        fs::File::open(&path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(CharacteristicDataset::read_csv(
        file,
        cfg.domain(),
        cfg.grid(),
    )?)
}

pub fn cmd_train(cfg: &RunConfig) -> Result<(), CliError> {
    let sys = cfg.system()?;
    let dataset = load_dataset(cfg)?;
    train_on(cfg, &sys, &dataset)
}

fn train_on(
    cfg: &RunConfig,
    sys: &MaierStein,
    dataset: &CharacteristicDataset,
) -> Result<(), CliError> {
    let node = pick(&fixed_points(cfg, sys)?, FixedPointKind::StableNode, cfg)?;
    let tc = cfg.training(node.location);
    let init = init_params(&tc.architecture, tc.seed)?;
    let outcome = train_observed(sys, dataset, &tc, init, |b| {
        if b.step % 5000 == 0 {
            eprintln!("step {:>6}  L_all {}", b.step, sig17(b.l_all));
        }
    })?;
    let mut trace = Vec::new();
    write_loss_trace(&mut trace, &outcome.trace)?;
    write_file(&cfg.out_dir.join("loss_trace.csv"), &trace)?;
    let ck = Checkpoint {
        params: outcome.params,
        steps: tc.steps,
        loss: Some(outcome.final_loss),
        field: Some(sys.id()),
    };
    write_file(&cfg.checkpoint_path(), ck.to_json().as_bytes())?;
    let f = outcome.final_loss;
    println!(
        "L_all {} (L_p {}, L_H {}, L_0 {}, L_d {})",
        sig17(f.l_all),
        sig17(f.l_p),
        sig17(f.l_h),
        sig17(f.l_0),
        sig17(f.l_d)
    );
    if let Some(err) = max_oracle_error(&ck.params, sys, &cfg.domain(), 50) {
        println!("max |V - V_exact| on 50x50 grid {}", sig17(err));
    }
    Ok(())
}

fn load_model(cfg: &RunConfig, sys: &MaierStein) -> Result<Box<dyn QuasipotentialModel>, CliError> {
    if cfg.analytic {
        return Ok(Box::new(AnalyticQuasipotential::new(*sys)?));
    }
    let path = cfg.checkpoint_path();
    let ck = Checkpoint::load(&path).map_err(|e| match e {
        quasipot::net::NetError::Io(io) => CliError::io(format!("{}: {io}", path.display())),
        other => CliError::invalid(format!("{}: {other}", path.display())),
    })?;
    if let Some(field) = &ck.field {
        if *field != sys.id() {
            return Err(CliError::invalid(format!(
                "checkpoint was trained for {field}, configuration selects {}",
                sys.id()
            )));
        }
    }
    Ok(Box::new(ck.params))
}

pub fn cmd_eval_grid(cfg: &RunConfig) -> Result<(), CliError> {
    let sys = cfg.system()?;
    let model = load_model(cfg, &sys)?;
    if cfg.eval_rows == 0 || cfg.eval_cols == 0 {
        return Err(CliError::config("eval grid needs at least one node".into()));
    }
    let domain = cfg.domain();
    let oracle = sys
        .quasipotential_oracle(domain.lattice_point(0, 0, 1, 1))
        .is_some();
    let mut header = vec!["x1", "x2", "V", "p1", "p2"];
    if oracle {
        header.extend(["V_exact", "error"]);
    }
    let mut rows = Vec::with_capacity(cfg.eval_rows * cfg.eval_cols);
    for j in 0..cfg.eval_rows {
        for i in 0..cfg.eval_cols {
            let x = domain.lattice_point(i, j, cfg.eval_cols, cfg.eval_rows);
            let v = model.value(x);
            let p = model.momentum(x);
            let mut row = vec![x[0], x[1], v, p[0], p[1]];
            if let Some(exact) = sys.quasipotential_oracle(x) {
                row.extend([exact, v - exact]);
            }
            rows.push(row);
        }
    }
    let mut csv = Vec::new();
    write_csv(&mut csv, &header, rows)?;
    write_file(&cfg.out_dir.join("grid.csv"), &csv)?;
    println!("{} grid nodes", cfg.eval_rows * cfg.eval_cols);
    Ok(())
}

pub fn cmd_trace_path(cfg: &RunConfig) -> Result<(), CliError> {
    let sys = cfg.system()?;
    let model = load_model(cfg, &sys)?;
    let fps = fixed_points(cfg, &sys)?;
    let saddle = pick(&fps, FixedPointKind::Saddle, cfg)?;
    let settings = cfg.path_settings();
    let offset = [cfg.offset_x1, cfg.offset_x2];
    let trace =
        |offset| trace_most_probable_path(&sys, model.as_ref(), &saddle, &fps, offset, &settings);
    let primary = trace(offset)?;
    write_path(&cfg.out_dir.join("path.csv"), &primary)?;
    let mut mirror_summary: Option<PathSummary> = None;
    let mut deviation = None;
    if cfg.offset_x2 != 0.0 {
        let mirror = trace([offset[0], -offset[1]])?;
        write_path(&cfg.out_dir.join("path_mirror.csv"), &mirror)?;
        deviation = Some(mirror_deviation(&primary.points(), &mirror.points()));
        mirror_summary = Some(mirror.summary());
        println!("mirror path action {}", sig17(mirror.action));
    }
    #[derive(Serialize)]
    struct PathsOut {
        path: PathSummary,
        mirror: Option<PathSummary>,
        mirror_deviation: Option<Sig17>,
    }
    write_json(
        &cfg.out_dir.join("path.json"),
        &PathsOut {
            path: primary.summary(),
            mirror: mirror_summary,
            mirror_deviation: deviation.map(Sig17),
        },
    )?;
    let max_x2 = primary
        .samples
        .iter()
        .map(|s| s.x[1].abs())
        .fold(0.0, f64::max);
    println!(
        "path action {} with {} samples, max |x2| {}",
        sig17(primary.action),
        primary.samples.len(),
        sig17(max_x2)
    );
    Ok(())
}

fn write_path(path: &Path, p: &ProbablePath) -> Result<(), CliError> {
    let mut csv = Vec::new();
    p.write_csv(&mut csv)?;
    write_file(path, &csv)
}

pub fn cmd_exit_time(cfg: &RunConfig) -> Result<(), CliError> {
    let sys = cfg.system()?;
    let model = if cfg.c != 0.0 {
        Some(load_model(cfg, &sys)?)
    } else {
        None
    };
    let control = model.as_deref().map(|m| Control { c: cfg.c, model: m });
    let estimate = estimate_mean_exit_time(
        &sys,
        cfg.noise()?,
        control,
        &cfg.exit_region(),
        &cfg.simulation(),
        cfg.exec,
    )?;
    #[derive(Serialize)]
    struct ExitOut<'a> {
        #[serde(serialize_with = "quasipot::format::serialize_sig17")]
        sigma: f64,
        #[serde(serialize_with = "quasipot::format::serialize_sig17")]
        c: f64,
        estimate: &'a quasipot::control::ExitTimeEstimate,
    }
    write_json(
        &cfg.out_dir.join("exit_time.json"),
        &ExitOut {
            sigma: cfg.sigma,
            c: cfg.c,
            estimate: &estimate,
        },
    )?;
    println!(
        "mean exit time {} ± {} over {} exits ({} censored)",
        sig17(estimate.mean),
        sig17(estimate.std_error),
        estimate.n,
        estimate.n_censored
    );
    Ok(())
}

pub fn cmd_control(cfg: &RunConfig) -> Result<(), CliError> {
    let sys = cfg.system()?;
    let model = load_model(cfg, &sys)?;
    let saddle = pick(&fixed_points(cfg, &sys)?, FixedPointKind::Saddle, cfg)?;
    let report = run_control_loop(
        &sys,
        model.as_ref(),
        cfg.noise()?,
        saddle.location,
        cfg.target_time,
        &cfg.exit_region(),
        &cfg.simulation(),
        &cfg.control_settings(),
        cfg.exec,
    )?;
    write_file(
        &cfg.out_dir.join("control.json"),
        report.to_json().as_bytes(),
    )?;
    println!("V0 {}", sig17(report.v0));
    for (k, it) in report.iterates.iter().enumerate() {
        println!(
            "c{} = {}  T = {} ± {}",
            k + 1,
            sig17(it.c),
            sig17(it.mean),
            sig17(it.std_error)
        );
    }
    println!("converged: {}", report.converged);
    Ok(())
}

pub fn cmd_repro(cfg: &RunConfig) -> Result<(), CliError> {
    let sys = cfg.system()?;
    let dataset = cmd_shoot(cfg)?;
    train_on(cfg, &sys, &dataset)?;
    let cfg = RunConfig {
        analytic: false,
        ..cfg.clone()
    };
    cmd_control(&cfg)
}
