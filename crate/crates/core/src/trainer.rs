//! The physics-informed loss and the training loop.
//!
//! Four terms, each a mean over its own point set:
//!
//! * `L_p`: `|p̃ − ∇Ṽ|²` on the collocation points,
//! * `L_H`: `H(x, p̃)²` on the collocation points,
//! * `L_0`: `Ṽ(x_s)²` at the stable point,
//! * `L_d`: `|p̃ − pⁱ|² + (Ṽ − Vⁱ)²` on the characteristic dataset.
//!
//! `L_all` is their weighted sum (all weights 1 by default).

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characteristics::CharacteristicDataset;
use crate::dynamics::DriftField;
use crate::format::write_csv;
use crate::net::{
    adam_step, init_params, loss_gradient, loss_value, AdamConfig, AdamState, CompositeLoss,
    ExprBuilder, LossTerm, LossValues, NetArchitecture, NetError, NetParams, PointSet, V_CHANNEL,
};
use crate::{ExecMode, Point, QuasipotentialModel, Rect};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("the characteristic dataset is empty")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("loss diverged at step {step} (L_all = {value:e})")]
    Diverged {
        step: u64,
        value: f64,
        trace: Vec<LossBreakdown>,
    },
    #[error(transparent)]
    Net(#[from] NetError),
}

pub const TERM_P: &str = "L_p";
pub const TERM_H: &str = "L_H";
pub const TERM_0: &str = "L_0";
pub const TERM_D: &str = "L_d";

/// Training aborts when `L_all` exceeds this or becomes non-finite.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub step: u64,
    #[serde(rename = "L_p", serialize_with = "crate::format::serialize_sig17")]
    pub l_p: f64,
    #[serde(rename = "L_H", serialize_with = "crate::format::serialize_sig17")]
    pub l_h: f64,
    #[serde(rename = "L_0", serialize_with = "crate::format::serialize_sig17")]
    pub l_0: f64,
    #[serde(rename = "L_d", serialize_with = "crate::format::serialize_sig17")]
    pub l_d: f64,
    #[serde(rename = "L_all", serialize_with = "crate::format::serialize_sig17")]
    pub l_all: f64,
}

impl LossBreakdown {
    pub fn from_values(step: u64, values: &LossValues) -> Self {
        let get = |n| values.get(n).unwrap_or(0.0);
        let (l_p, l_h, l_0, l_d) = (get(TERM_P), get(TERM_H), get(TERM_0), get(TERM_D));
        Self {
            step,
            l_p,
            l_h,
            l_0,
            l_d,
            l_all: l_p + l_h + l_0 + l_d,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.l_p, self.l_h, self.l_0, self.l_d, self.l_all]
            .iter()
            .all(|v| v.is_finite())
    }
}

pub const TRACE_HEADER: [&str; 6] = ["step", "L_p", "L_H", "L_0", "L_d", "L_all"];

pub fn write_loss_trace<W: Write>(out: W, trace: &[LossBreakdown]) -> std::io::Result<()> {
    let rows = trace
        .iter()
        .map(|b| [b.step as f64, b.l_p, b.l_h, b.l_0, b.l_d, b.l_all]);
    write_csv(out, &TRACE_HEADER, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub p: f64,
    pub h: f64,
    pub zero: f64,
    pub data: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            p: 1.0,
            h: 1.0,
            zero: 1.0,
            data: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub collocation_domain: Rect,
    pub n_collocation: usize,
    pub stable_point: Point,
    pub steps: u64,
    pub adam: AdamConfig,
    pub seed: u64,
    pub weights: LossWeights,
    pub trace_interval: u64,
    pub architecture: NetArchitecture,
    pub mode: ExecMode,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            collocation_domain: Rect::maier_stein_left(),
            n_collocation: 5000,
            stable_point: [-1.0, 0.0],
            steps: 50_000,
            adam: AdamConfig::default(),
            seed: 0,
            weights: LossWeights::default(),
            trace_interval: 100,
            architecture: NetArchitecture::default(),
            mode: ExecMode::Parallel,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self, dataset: &CharacteristicDataset) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::InvalidConfig(m));
        if self.n_collocation == 0 {
            return bad("n_collocation must be at least 1".into());
        }
        if self.collocation_domain.is_degenerate() {
            return bad(format!("degenerate domain {:?}", self.collocation_domain));
        }
        if !self.collocation_domain.contains(self.stable_point) {
            return bad(format!(
                "stable point {:?} outside the domain",
                self.stable_point
            ));
        }
        if !self.collocation_domain.contains_rect(&dataset.domain) {
            return bad("dataset domain is not inside the collocation domain".into());
        }
        if self.trace_interval == 0 {
            return bad("trace_interval must be at least 1".into());
        }
        if dataset.is_empty() {
            return Err(TrainError::EmptyDataset);
        }
        self.architecture.validate()?;
        Ok(())
    }
}

/// Uniform samples in `domain`, drawn from a stream of `seed` that is
/// independent of the one used for weight initialization.
pub fn collocation_points(domain: &Rect, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..n)
        .map(|_| {
            [
                rng.random_range(domain.x1_min..domain.x1_max),
                rng.random_range(domain.x2_min..domain.x2_max),
            ]
        })
        .collect()
}

fn build(b: ExprBuilder, root: crate::net::NodeId, name: &str, weight: f64) -> LossTerm {
    LossTerm {
        name: name.to_owned(),
        weight,
        expr: b.build(root).expect("fixed loss expressions are valid"),
    }
}

/// `|p̃ − ∇Ṽ|²`.
pub fn gradient_consistency_term(weight: f64) -> LossTerm {
    let mut b = ExprBuilder::new();
    let parts: Vec<_> = (0..2)
        .map(|k| {
            let p = b.output(k);
            let g = b.jacobian(V_CHANNEL, k);
            let d = b.sub(p, g);
            b.square(d)
        })
        .collect();
    let root = b.sum(&parts);
    build(b, root, TERM_P, weight)
}

/// `(p̃·F + ½|p̃|²)²`, reading `F(x)` from data slots 0 and 1.
pub fn hamiltonian_term(weight: f64) -> LossTerm {
    let mut b = ExprBuilder::new();
    let mut parts = Vec::new();
    for k in 0..2 {
        let p = b.output(k);
        let f = b.datum(k);
        let pf = b.mul(p, f);
        let half = b.constant(0.5);
        let pp = b.square(p);
        let hp = b.mul(half, pp);
        parts.push(pf);
        parts.push(hp);
    }
    let h = b.sum(&parts);
    let root = b.square(h);
    build(b, root, TERM_H, weight)
}

/// `Ṽ²`.
pub fn anchor_term(weight: f64) -> LossTerm {
    let mut b = ExprBuilder::new();
    let v = b.output(V_CHANNEL);
    let root = b.square(v);
    build(b, root, TERM_0, weight)
}

/// `|p̃ − pⁱ|² + (Ṽ − Vⁱ)²`, reading `(p₁, p₂, V)` from data slots 0..3.
pub fn data_term(weight: f64) -> LossTerm {
    let mut b = ExprBuilder::new();
    let parts: Vec<_> = (0..3)
        .map(|k| {
            let y = b.output(k);
            let d = b.datum(k);
            let e = b.sub(y, d);
            b.square(e)
        })
        .collect();
    let root = b.sum(&parts);
    build(b, root, TERM_D, weight)
}

/// Collocation points with `L_p` and `L_H`.
pub fn collocation_set(
    sys: &dyn DriftField,
    points: Vec<Point>,
    weights: &LossWeights,
) -> Result<PointSet, NetError> {
    let data = points.iter().flat_map(|&x| sys.field(x)).collect();
    PointSet::new(
        points,
        data,
        2,
        vec![
            gradient_consistency_term(weights.p),
            hamiltonian_term(weights.h),
        ],
    )
}

pub fn anchor_set(stable_point: Point, weight: f64) -> Result<PointSet, NetError> {
    PointSet::new(vec![stable_point], vec![], 0, vec![anchor_term(weight)])
}

pub fn data_set(dataset: &CharacteristicDataset, weight: f64) -> Result<PointSet, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let points = dataset.records.iter().map(|r| r.x).collect();
    let data = dataset
        .records
        .iter()
        .flat_map(|r| [r.p[0], r.p[1], r.v])
        .collect();
    Ok(PointSet::new(points, data, 3, vec![data_term(weight)])?)
}

/// The full composite loss for `config`, with collocation points drawn from
/// its seed.
pub fn build_loss(
    sys: &dyn DriftField,
    dataset: &CharacteristicDataset,
    config: &TrainingConfig,
) -> Result<CompositeLoss, TrainError> {
    let points = collocation_points(
        &config.collocation_domain,
        config.n_collocation,
        config.seed,
    );
    Ok(CompositeLoss {
        sets: vec![
            collocation_set(sys, points, &config.weights)?,
            anchor_set(config.stable_point, config.weights.zero)?,
            data_set(dataset, config.weights.data)?,
        ],
    })
}

fn single(set: PointSet, params: &NetParams) -> f64 {
    loss_value(params, &CompositeLoss { sets: vec![set] }, ExecMode::Serial).total
}

/// `(1/N) Σ |p̃(xⁱ) − ∇Ṽ(xⁱ)|²`.
pub fn loss_p(params: &NetParams, points: &[Point]) -> Result<f64, NetError> {
    let set = PointSet::new(
        points.to_vec(),
        vec![],
        0,
        vec![gradient_consistency_term(1.0)],
    )?;
    Ok(single(set, params))
}

/// `(1/N) Σ H(xⁱ, p̃(xⁱ))²`.
pub fn loss_h(sys: &dyn DriftField, params: &NetParams, points: &[Point]) -> Result<f64, NetError> {
    let data = points.iter().flat_map(|&x| sys.field(x)).collect();
    let set = PointSet::new(points.to_vec(), data, 2, vec![hamiltonian_term(1.0)])?;
    Ok(single(set, params))
}

/// `Ṽ(x_s)²`.
pub fn loss_0(params: &NetParams, stable_point: Point) -> f64 {
    single(anchor_set(stable_point, 1.0).expect("one point"), params)
}

/// `(1/N_d) Σ |p̃(xⁱ) − pⁱ|² + (Ṽ(xⁱ) − Vⁱ)²`.
pub fn loss_d(params: &NetParams, dataset: &CharacteristicDataset) -> Result<f64, TrainError> {
    Ok(single(data_set(dataset, 1.0)?, params))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub params: NetParams,
    /// Loss before steps `0, interval, 2·interval, …` and after the last step.
    pub trace: Vec<LossBreakdown>,
    pub final_loss: LossBreakdown,
}

/// Full-batch Adam on `L_all` for `config.steps` steps from a seeded
/// initialization.
pub fn train(
    sys: &dyn DriftField,
    dataset: &CharacteristicDataset,
    config: &TrainingConfig,
) -> Result<TrainingOutcome, TrainError> {
    config.validate(dataset)?;
    let params = init_params(&config.architecture, config.seed)?;
    train_from(sys, dataset, config, params)
}

/// Like [`train`], starting from given parameters.
pub fn train_from(
    sys: &dyn DriftField,
    dataset: &CharacteristicDataset,
    config: &TrainingConfig,
    params: NetParams,
) -> Result<TrainingOutcome, TrainError> {
    train_observed(sys, dataset, config, params, |_| {})
}

/// Like [`train_from`], calling `observe` with every trace entry as it is
/// recorded.
pub fn train_observed(
    sys: &dyn DriftField,
    dataset: &CharacteristicDataset,
    config: &TrainingConfig,
    mut params: NetParams,
    mut observe: impl FnMut(&LossBreakdown),
) -> Result<TrainingOutcome, TrainError> {
    config.validate(dataset)?;
    let loss = build_loss(sys, dataset, config)?;
    let mut adam = AdamState::new(config.adam, &params);
    let mut trace = Vec::new();
    let check = |b: LossBreakdown, trace: &mut Vec<LossBreakdown>| {
        if !b.is_finite() || b.l_all > DIVERGENCE_THRESHOLD {
            trace.push(b);
            return Err(TrainError::Diverged {
                step: b.step,
                value: b.l_all,
                trace: std::mem::take(trace),
            });
        }
        Ok(())
    };
    for step in 0..config.steps {
        let (values, grad) = loss_gradient(&params, &loss, config.mode);
        let b = LossBreakdown::from_values(step, &values);
        check(b, &mut trace)?;
        if step % config.trace_interval == 0 {
            observe(&b);
            trace.push(b);
        }
        adam_step(&mut params, &grad, &mut adam)?;
    }
    let final_loss =
        LossBreakdown::from_values(config.steps, &loss_value(&params, &loss, config.mode));
    check(final_loss, &mut trace)?;
    observe(&final_loss);
    trace.push(final_loss);
    Ok(TrainingOutcome {
        params,
        trace,
        final_loss,
    })
}

/// `max |Ṽ − V_exact|` over an `n × n` lattice of `domain`, or `None` when
/// the field has no closed-form quasipotential.
pub fn max_oracle_error(
    model: &dyn QuasipotentialModel,
    sys: &dyn DriftField,
    domain: &Rect,
    n: usize,
) -> Option<f64> {
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let x = domain.lattice_point(i, j, n, n);
            worst = worst.max((model.value(x) - sys.quasipotential_oracle(x)?).abs());
        }
    }
    Some(worst)
}
