//! Losses built from per-point scalar expressions over the network jet.
//!
//! An expression may read the three outputs, any entry of the input
//! Jacobian, per-point data and constants, and combine them with `+`, `−`,
//! `×` and squaring. A loss term is the weighted mean of one expression over
//! a point set. Anything outside that vocabulary cannot be built, so every
//! gradient returned by [`loss_gradient`] is exact.

use rayon::prelude::*;

use super::{Gradient, Jet, NetError, NetParams, Workspace, INPUT_DIM, OUTPUT_DIM};
use crate::{ExecMode, Point};

/// Points handled by one work item. Chunk boundaries never depend on the
/// thread count, so serial and parallel runs sum in the same order.
const CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Output(usize),
    Jacobian(usize, usize),
    Datum(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Square(usize),
}

#[derive(Debug, Default, Clone)]
pub struct ExprBuilder {
    ops: Vec<Op>,
}

impl ExprBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op) -> NodeId {
        self.ops.push(op);
        NodeId(self.ops.len() - 1)
    }

    pub fn constant(&mut self, v: f64) -> NodeId {
        self.push(Op::Const(v))
    }

    /// Network output channel `k` (0, 1: momentum, 2: quasipotential).
    pub fn output(&mut self, k: usize) -> NodeId {
        self.push(Op::Output(k))
    }

    /// `∂y_row / ∂x_col`.
    pub fn jacobian(&mut self, row: usize, col: usize) -> NodeId {
        self.push(Op::Jacobian(row, col))
    }

    /// Per-point datum number `i` of the point set.
    pub fn datum(&mut self, i: usize) -> NodeId {
        self.push(Op::Datum(i))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Sub(a.0, b.0))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Mul(a.0, b.0))
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Square(a.0))
    }

    /// Sum of several nodes (at least one).
    pub fn sum(&mut self, nodes: &[NodeId]) -> NodeId {
        let mut acc = nodes[0];
        for &n in &nodes[1..] {
            acc = self.add(acc, n);
        }
        acc
    }

    pub fn build(self, root: NodeId) -> Result<PointExpr, NetError> {
        let n = self.ops.len();
        if root.0 >= n {
            return Err(NetError::Expression(format!(
                "root {} out of range",
                root.0
            )));
        }
        let mut n_data = 0;
        for (i, op) in self.ops.iter().enumerate() {
            let operands_ok = match *op {
                Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => a < i && b < i,
                Op::Square(a) => a < i,
                _ => true,
            };
            if !operands_ok {
                return Err(NetError::Expression(format!(
                    "node {i} refers to a node that is not defined before it"
                )));
            }
            match *op {
                Op::Output(k) if k >= OUTPUT_DIM => {
                    return Err(NetError::Expression(format!("no output channel {k}")))
                }
                Op::Jacobian(r, c) if r >= OUTPUT_DIM || c >= INPUT_DIM => {
                    return Err(NetError::Expression(format!("no Jacobian entry ({r},{c})")))
                }
                Op::Const(v) if !v.is_finite() => {
                    return Err(NetError::Expression("non-finite constant".to_owned()))
                }
                Op::Datum(d) => n_data = n_data.max(d + 1),
                _ => {}
            }
        }
        Ok(PointExpr {
            ops: self.ops,
            root: root.0,
            n_data,
        })
    }
}

/// A validated scalar expression of one point's jet and data.
#[derive(Debug, Clone, PartialEq)]
pub struct PointExpr {
    ops: Vec<Op>,
    root: usize,
    n_data: usize,
}

impl PointExpr {
    /// Number of per-point data slots the expression reads.
    pub fn data_width(&self) -> usize {
        self.n_data
    }

    fn eval_into(&self, jet: &Jet, data: &[f64], vals: &mut Vec<f64>) -> f64 {
        vals.clear();
        for op in &self.ops {
            let v = match *op {
                Op::Const(c) => c,
                Op::Output(k) => jet.0[k],
                Op::Jacobian(r, c) => jet.1[r][c],
                Op::Datum(d) => data[d],
                Op::Add(a, b) => vals[a] + vals[b],
                Op::Sub(a, b) => vals[a] - vals[b],
                Op::Mul(a, b) => vals[a] * vals[b],
                Op::Square(a) => vals[a] * vals[a],
            };
            vals.push(v);
        }
        vals[self.root]
    }

    /// Value at a jet, for tests and diagnostics.
    pub fn eval(&self, jet: &Jet, data: &[f64]) -> f64 {
        self.eval_into(jet, data, &mut Vec::with_capacity(self.ops.len()))
    }

    fn backprop(
        &self,
        vals: &[f64],
        seed: f64,
        adj: &mut Vec<f64>,
        ybar: &mut [f64; OUTPUT_DIM],
        jbar: &mut [[f64; INPUT_DIM]; OUTPUT_DIM],
    ) {
        adj.clear();
        adj.resize(self.ops.len(), 0.0);
        adj[self.root] = seed;
        for i in (0..self.ops.len()).rev() {
            let g = adj[i];
            if g == 0.0 {
                continue;
            }
            match self.ops[i] {
                Op::Const(_) | Op::Datum(_) => {}
                Op::Output(k) => ybar[k] += g,
                Op::Jacobian(r, c) => jbar[r][c] += g,
                Op::Add(a, b) => {
                    adj[a] += g;
                    adj[b] += g;
                }
                Op::Sub(a, b) => {
                    adj[a] += g;
                    adj[b] -= g;
                }
                Op::Mul(a, b) => {
                    adj[a] += g * vals[b];
                    adj[b] += g * vals[a];
                }
                Op::Square(a) => adj[a] += 2.0 * vals[a] * g,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossTerm {
    pub name: String,
    pub weight: f64,
    pub expr: PointExpr,
}

/// Points sharing one network evaluation, with per-point data of a fixed
/// width and the loss terms averaged over them.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
    data: Vec<f64>,
    stride: usize,
    terms: Vec<LossTerm>,
}

impl PointSet {
    /// `data` holds `stride` values per point, point-major.
    pub fn new(
        points: Vec<Point>,
        data: Vec<f64>,
        stride: usize,
        terms: Vec<LossTerm>,
    ) -> Result<Self, NetError> {
        if points.is_empty() {
            return Err(NetError::Expression("point set is empty".to_owned()));
        }
        if data.len() != points.len() * stride {
            return Err(NetError::Shape(format!(
                "{} data values for {} points of width {stride}",
                data.len(),
                points.len()
            )));
        }
        for t in &terms {
            if t.expr.data_width() > stride {
                return Err(NetError::Expression(format!(
                    "term {} reads {} data slots, set provides {stride}",
                    t.name,
                    t.expr.data_width()
                )));
            }
            if !t.weight.is_finite() {
                return Err(NetError::Expression(format!(
                    "term {} has non-finite weight",
                    t.name
                )));
            }
        }
        Ok(Self {
            points,
            data,
            stride,
            terms,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn terms(&self) -> &[LossTerm] {
        &self.terms
    }

    fn datum_row(&self, i: usize) -> &[f64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }
}

/// Sum of weighted per-set means.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompositeLoss {
    pub sets: Vec<PointSet>,
}

/// Weighted term values in declaration order, and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValues {
    pub terms: Vec<(String, f64)>,
    pub total: f64,
}

impl LossValues {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

struct ChunkResult {
    sums: Vec<f64>,
    grad: Option<Vec<f64>>,
}

fn run_chunk(
    params: &NetParams,
    set: &PointSet,
    range: std::ops::Range<usize>,
    with_grad: bool,
) -> ChunkResult {
    let mut ws = Workspace::new(params.architecture());
    let mut vals = Vec::new();
    let mut adj = Vec::new();
    let mut sums = vec![0.0; set.terms.len()];
    let mut grad = with_grad.then(|| vec![0.0; params.num_params()]);
    let n = set.len() as f64;
    for i in range {
        let jet = params.jet(set.points[i], &mut ws);
        let data = set.datum_row(i);
        let mut ybar = [0.0; OUTPUT_DIM];
        let mut jbar = [[0.0; INPUT_DIM]; OUTPUT_DIM];
        for (t, term) in set.terms.iter().enumerate() {
            sums[t] += term.expr.eval_into(&jet, data, &mut vals);
            if with_grad {
                term.expr
                    .backprop(&vals, term.weight / n, &mut adj, &mut ybar, &mut jbar);
            }
        }
        if let Some(g) = grad.as_mut() {
            params.backward(&mut ws, &ybar, &jbar, g);
        }
    }
    ChunkResult { sums, grad }
}

fn evaluate(
    params: &NetParams,
    loss: &CompositeLoss,
    mode: ExecMode,
    with_grad: bool,
) -> (LossValues, Option<Gradient>) {
    let tasks: Vec<(usize, std::ops::Range<usize>)> = loss
        .sets
        .iter()
        .enumerate()
        .flat_map(|(s, set)| {
            (0..set.len())
                .step_by(CHUNK)
                .map(move |start| (s, start..(start + CHUNK).min(set.len())))
        })
        .collect();
    let work = |(s, range): &(usize, std::ops::Range<usize>)| {
        run_chunk(params, &loss.sets[*s], range.clone(), with_grad)
    };
    let results: Vec<ChunkResult> = match mode {
        ExecMode::Serial => tasks.iter().map(work).collect(),
        ExecMode::Parallel => tasks.par_iter().map(work).collect(),
    };

    let mut sums: Vec<Vec<f64>> = loss.sets.iter().map(|s| vec![0.0; s.terms.len()]).collect();
    let mut grad = with_grad.then(|| vec![0.0; params.num_params()]);
    for ((s, _), r) in tasks.iter().zip(&results) {
        for (acc, v) in sums[*s].iter_mut().zip(&r.sums) {
            *acc += v;
        }
        if let (Some(g), Some(rg)) = (grad.as_mut(), r.grad.as_ref()) {
            for (a, b) in g.iter_mut().zip(rg) {
                *a += b;
            }
        }
    }
    let mut terms = Vec::new();
    let mut total = 0.0;
    for (set, set_sums) in loss.sets.iter().zip(&sums) {
        for (term, sum) in set.terms.iter().zip(set_sums) {
            let v = term.weight * sum / set.len() as f64;
            total += v;
            terms.push((term.name.clone(), v));
        }
    }
    (LossValues { terms, total }, grad.map(Gradient))
}

/// Loss value and its exact gradient with respect to every parameter.
pub fn loss_gradient(
    params: &NetParams,
    loss: &CompositeLoss,
    mode: ExecMode,
) -> (LossValues, Gradient) {
    let (values, grad) = evaluate(params, loss, mode, true);
    (values, grad.expect("gradient requested"))
}

pub fn loss_value(params: &NetParams, loss: &CompositeLoss, mode: ExecMode) -> LossValues {
    evaluate(params, loss, mode, false).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{init_params, NetArchitecture};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v_squared() -> PointExpr {
        let mut b = ExprBuilder::new();
        let v = b.output(2);
        let sq = b.square(v);
        b.build(sq).unwrap()
    }

    #[test]
    fn rejects_unsupported_references() {
        let mut b = ExprBuilder::new();
        let bad = b.output(3);
        assert!(matches!(b.build(bad), Err(NetError::Expression(_))));

        let mut b = ExprBuilder::new();
        let bad = b.jacobian(0, 2);
        assert!(b.build(bad).is_err());

        let mut other = ExprBuilder::new();
        let x = other.output(0);
        let y = other.output(1);
        let foreign = other.add(x, y);
        let mut b = ExprBuilder::new();
        let v = b.output(2);
        let s = b.square(foreign);
        let _ = v;
        assert!(b.build(s).is_err());

        let mut b = ExprBuilder::new();
        let d = b.datum(2);
        let expr = b.build(d).unwrap();
        let term = LossTerm {
            name: "d".into(),
            weight: 1.0,
            expr,
        };
        assert!(PointSet::new(vec![[0.0, 0.0]], vec![0.0, 0.0], 2, vec![term]).is_err());
    }

    #[test]
    fn zero_value_gives_zero_gradient() {
        let arch = NetArchitecture::with_hidden(vec![3]);
        let mut params = init_params(&arch, 1).unwrap();
        params.bias_mut(1)[2] = 0.0;
        // make V identically zero by zeroing its output row
        let (_, fan_in) = params.layer_shape(1);
        params.weights_mut(1)[2 * fan_in..3 * fan_in].fill(0.0);
        let set = PointSet::new(
            vec![[0.3, 0.2]],
            vec![],
            0,
            vec![LossTerm {
                name: "v2".into(),
                weight: 1.0,
                expr: v_squared(),
            }],
        )
        .unwrap();
        let (vals, g) = loss_gradient(
            &params,
            &CompositeLoss { sets: vec![set] },
            ExecMode::Serial,
        );
        assert_eq!(vals.total, 0.0);
        assert!(g.0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn duplicate_points_scale_linearly() {
        let arch = NetArchitecture::with_hidden(vec![4, 4]);
        let params = init_params(&arch, 2).unwrap();
        let term = || LossTerm {
            name: "v2".into(),
            weight: 1.0,
            expr: v_squared(),
        };
        let single = PointSet::new(vec![[0.1, 0.2], [0.5, -0.3]], vec![], 0, vec![term()]).unwrap();
        let doubled = PointSet::new(
            vec![[0.1, 0.2], [0.1, 0.2], [0.5, -0.3]],
            vec![],
            0,
            vec![term()],
        )
        .unwrap();
        let only_second = PointSet::new(vec![[0.5, -0.3]], vec![], 0, vec![term()]).unwrap();
        let only_first = PointSet::new(vec![[0.1, 0.2]], vec![], 0, vec![term()]).unwrap();
        let g = |s: PointSet| {
            loss_gradient(&params, &CompositeLoss { sets: vec![s] }, ExecMode::Serial)
                .1
                 .0
        };
        let (g1, g2) = (g(only_first), g(only_second));
        let gs = g(single);
        let gd = g(doubled);
        for k in 0..g1.len() {
            // N = 2: (g1 + g2)/2 ; N = 3 with duplicate: (2 g1 + g2)/3
            assert!((gs[k] - (g1[k] + g2[k]) / 2.0).abs() <= 1e-14);
            assert!((gd[k] - (2.0 * g1[k] + g2[k]) / 3.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn serial_and_parallel_are_bit_identical() {
        let arch = NetArchitecture::default();
        let params = init_params(&arch, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let points: Vec<Point> = (0..300)
            .map(|_| [rng.random_range(-1.5..0.0), rng.random_range(-0.6..0.6)])
            .collect();
        let mut b = ExprBuilder::new();
        let p0 = b.output(0);
        let g0 = b.jacobian(2, 0);
        let d = b.sub(p0, g0);
        let sq = b.square(d);
        let set = PointSet::new(
            points,
            vec![],
            0,
            vec![LossTerm {
                name: "lp".into(),
                weight: 1.0,
                expr: b.build(sq).unwrap(),
            }],
        )
        .unwrap();
        let loss = CompositeLoss { sets: vec![set] };
        let (va, ga) = loss_gradient(&params, &loss, ExecMode::Serial);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let (vb, gb) = pool.install(|| loss_gradient(&params, &loss, ExecMode::Parallel));
        assert_eq!(va.total.to_bits(), vb.total.to_bits());
        assert!(ga
            .0
            .iter()
            .zip(&gb.0)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
