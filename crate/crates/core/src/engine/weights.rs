use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::arch::{BoundLayer, BoundNetwork, LayerSpec};

use super::ops::conv_kernel_len;
use super::EngineError;

/// One named array: shape descriptor and row-major values.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightEntry {
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

impl WeightEntry {
    pub fn new(dims: Vec<usize>, values: Vec<f32>) -> Result<Self, EngineError> {
        let n: usize = dims.iter().product();
        if n != values.len() {
            return Err(EngineError::shape("weight entry", n, values.len()));
        }
        Ok(Self { dims, values })
    }
}

/// Parameters keyed by `<layer id>.weight`, `<layer id>.bias`, and
/// `<layer id>.norm` (a `[2, out]` scale/shift pair).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightStore {
    pub entries: BTreeMap<String, WeightEntry>,
}

pub(crate) fn weight_key(layer: &BoundLayer) -> String {
    format!("{}.weight", layer.id)
}

pub(crate) fn bias_key(layer: &BoundLayer) -> String {
    format!("{}.bias", layer.id)
}

pub(crate) fn norm_key(layer: &BoundLayer) -> String {
    format!("{}.norm", layer.id)
}

/// Shape descriptor of a layer's kernel: `[out, in/groups, kh, kw]` for
/// evenly grouped convs, flat `[len]` for uneven groups, `[out, in]` for
/// dense layers. `None` for layers without weights.
pub fn kernel_dims(layer: &BoundLayer) -> Option<Vec<usize>> {
    match &layer.spec {
        LayerSpec::Conv(c) => {
            if layer.in_channels.is_multiple_of(c.groups) && c.out.is_multiple_of(c.groups) {
                Some(vec![c.out, layer.in_channels / c.groups, c.kernel[0], c.kernel[1]])
            } else {
                Some(vec![conv_kernel_len(c, layer.in_channels)])
            }
        }
        LayerSpec::Dense(d) => Some(vec![d.out, layer.in_channels]),
        _ => None,
    }
}

impl WeightStore {
    pub fn get(&self, name: &str) -> Option<&WeightEntry> {
        self.entries.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, entry: WeightEntry) {
        self.entries.insert(name.into(), entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Values of `name`, checked against `len`.
    pub(crate) fn values(&self, name: &str, len: usize) -> Result<&[f32], EngineError> {
        let entry = self
            .entries
            .get(name)
            .ok_or_else(|| EngineError::MissingWeights(name.to_string()))?;
        if entry.values.len() != len {
            return Err(EngineError::shape(name, len, entry.values.len()));
        }
        Ok(&entry.values)
    }

    /// Every entry `net` needs, with matching sizes.
    pub fn check_complete(&self, net: &BoundNetwork) -> Result<(), EngineError> {
        for layer in net.layers() {
            let Some(dims) = kernel_dims(layer) else {
                continue;
            };
            self.values(&weight_key(layer), dims.iter().product())?;
            let (bias, norm) = match &layer.spec {
                LayerSpec::Conv(c) => (c.bias, c.normalize),
                LayerSpec::Dense(d) => (d.bias, false),
                _ => (false, false),
            };
            if bias {
                self.values(&bias_key(layer), layer.out_channels)?;
            }
            if norm {
                self.values(&norm_key(layer), 2 * layer.out_channels)?;
            }
        }
        Ok(())
    }
}

/// Deterministic initialization: kernels drawn from `N(0, 1/fan_in)` with
/// `fan_in = kh · kw · (group input width)`, zero biases, unit scale and
/// zero shift for normalization. Equal seeds give bit-identical stores.
pub fn init_weights(net: &BoundNetwork, seed: u64) -> WeightStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = WeightStore::default();
    for layer in net.layers() {
        let Some(dims) = kernel_dims(layer) else {
            continue;
        };
        let (taps, bias, norm) = match &layer.spec {
            LayerSpec::Conv(c) => (c.kernel[0] * c.kernel[1], c.bias, c.normalize),
            LayerSpec::Dense(d) => (1, d.bias, false),
            _ => unreachable!("only conv and dense layers carry kernels"),
        };
        let mut values = Vec::with_capacity(dims.iter().product());
        for (gi, go) in layer.group_split() {
            let scale = 1.0 / ((taps * gi) as f32).sqrt();
            for _ in 0..go * gi * taps {
                let z: f32 = rng.sample(StandardNormal);
                values.push(z * scale);
            }
        }
        store.insert(weight_key(layer), WeightEntry { dims, values });
        let out = layer.out_channels;
        if bias {
            store.insert(
                bias_key(layer),
                WeightEntry {
                    dims: vec![out],
                    values: vec![0.0; out],
                },
            );
        }
        if norm {
            let mut values = vec![1.0; out];
            values.extend(std::iter::repeat_n(0.0, out));
            store.insert(
                norm_key(layer),
                WeightEntry {
                    dims: vec![2, out],
                    values,
                },
            );
        }
    }
    store
}
