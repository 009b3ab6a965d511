//! JSON checkpoint: architecture, seed, step count, final loss breakdown and
//! per-layer weights (row-major nested arrays) and biases.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NetArchitecture, NetError, NetParams};
use crate::dynamics::FieldId;
use crate::format::{sig17_vec, Sig17};
use crate::trainer::LossBreakdown;

pub const CHECKPOINT_FORMAT: &str = "quasipot-checkpoint/1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: NetParams,
    pub steps: u64,
    pub loss: Option<LossBreakdown>,
    pub field: Option<FieldId>,
}

#[derive(Serialize)]
struct LayerOut {
    weights: Vec<Vec<Sig17>>,
    bias: Vec<Sig17>,
}

#[derive(Serialize)]
struct DocOut<'a> {
    format: &'a str,
    architecture: &'a NetArchitecture,
    seed: u64,
    steps: u64,
    field: &'a Option<FieldId>,
    loss: &'a Option<LossBreakdown>,
    layers: Vec<LayerOut>,
}

#[derive(Deserialize)]
struct LayerIn {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocIn {
    format: String,
    architecture: NetArchitecture,
    seed: u64,
    steps: u64,
    field: Option<FieldId>,
    loss: Option<LossBreakdown>,
    layers: Vec<LayerIn>,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let p = &self.params;
        let layers = (0..p.num_layers())
            .map(|l| {
                let (_, fan_in) = p.layer_shape(l);
                LayerOut {
                    weights: p.weights(l).chunks(fan_in).map(sig17_vec).collect(),
                    bias: sig17_vec(p.bias(l)),
                }
            })
            .collect();
        let doc = DocOut {
            format: CHECKPOINT_FORMAT,
            architecture: p.architecture(),
            seed: p.seed(),
            steps: self.steps,
            field: &self.field,
            loss: &self.loss,
            layers,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, NetError> {
        let doc: DocIn =
            serde_json::from_str(text).map_err(|e| NetError::Checkpoint(e.to_string()))?;
        if doc.format != CHECKPOINT_FORMAT {
            return Err(NetError::Checkpoint(format!(
                "unknown format {:?}",
                doc.format
            )));
        }
        doc.architecture.validate()?;
        let shapes = doc.architecture.layer_shapes();
        if shapes.len() != doc.layers.len() {
            return Err(NetError::Shape(format!(
                "architecture has {} layers, checkpoint stores {}",
                shapes.len(),
                doc.layers.len()
            )));
        }
        let mut flat = Vec::with_capacity(shapes.len());
        for (l, ((fan_out, fan_in), layer)) in shapes.iter().zip(doc.layers).enumerate() {
            if layer.weights.len() != *fan_out || layer.weights.iter().any(|r| r.len() != *fan_in) {
                return Err(NetError::Shape(format!(
                    "layer {l}: weights are not {fan_out}x{fan_in}"
                )));
            }
            flat.push((layer.weights.concat(), layer.bias));
        }
        let params = NetParams::from_layers(&doc.architecture, doc.seed, &flat)?;
        Ok(Self {
            params,
            steps: doc.steps,
            loss: doc.loss,
            field: doc.field,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), NetError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NetError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
