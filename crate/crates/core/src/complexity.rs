//! Exact parameter and multiply-add accounting.
//!
//! One mult-add is one multiply-accumulate. Bias additions, pooling,
//! residual adds, and softmax cost nothing. Normalization (when a conv
//! enables it) adds `2 · out` parameters and no mult-adds.

use serde::Serialize;

use crate::arch::{bind_channels, BoundLayer, BoundNetwork, GraphError, LayerId, LayerSpec, NetworkSpec, TensorShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerCost {
    pub layer: LayerId,
    pub params: u64,
    pub mult_adds: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexityReport {
    pub per_layer: Vec<LayerCost>,
    pub total_params: u64,
    pub total_mult_adds: u64,
    pub input_shape: TensorShape,
}

impl ComplexityReport {
    fn from_layers(per_layer: Vec<LayerCost>, input_shape: TensorShape) -> Self {
        let total_params = per_layer.iter().map(|c| c.params).sum();
        let total_mult_adds = per_layer.iter().map(|c| c.mult_adds).sum();
        Self {
            per_layer,
            total_params,
            total_mult_adds,
            input_shape,
        }
    }

    pub fn params_millions(&self) -> f64 {
        self.total_params as f64 / 1e6
    }

    pub fn mult_adds_millions(&self) -> f64 {
        self.total_mult_adds as f64 / 1e6
    }
}

/// Multiplications in one application of the layer's weights at a single
/// output position, i.e. the weight count excluding bias and normalization.
pub fn weight_count(layer: &BoundLayer) -> u64 {
    match &layer.spec {
        LayerSpec::Conv(c) => {
            let taps = (c.kernel[0] * c.kernel[1]) as u64;
            layer
                .group_split()
                .iter()
                .map(|&(i, o)| taps * i as u64 * o as u64)
                .sum()
        }
        LayerSpec::Dense(_) => (layer.in_channels * layer.out_channels) as u64,
        _ => 0,
    }
}

/// Trainable parameters of one layer.
pub fn layer_params(layer: &BoundLayer) -> u64 {
    let weights = weight_count(layer);
    let out = layer.out_channels as u64;
    match &layer.spec {
        LayerSpec::Conv(c) => weights + if c.bias { out } else { 0 } + if c.normalize { 2 * out } else { 0 },
        LayerSpec::Dense(d) => weights + if d.bias { out } else { 0 },
        _ => 0,
    }
}

/// Parameter side only; every layer's mult-add count is zero.
pub fn count_params(net: &BoundNetwork) -> ComplexityReport {
    let per_layer = net
        .layers()
        .map(|l| LayerCost {
            layer: l.id,
            params: layer_params(l),
            mult_adds: 0,
        })
        .collect();
    ComplexityReport::from_layers(per_layer, net.spec.input_shape)
}

/// Parameters and mult-adds for an input of shape `input`.
pub fn count_mult_adds(net: &BoundNetwork, input: TensorShape) -> Result<ComplexityReport, GraphError> {
    let shapes = net.shapes(input)?;
    let per_layer = net
        .layers()
        .zip(shapes)
        .map(|(l, s)| {
            debug_assert_eq!(l.id, s.id);
            LayerCost {
                layer: l.id,
                params: layer_params(l),
                mult_adds: weight_count(l) * (s.output.height * s.output.width) as u64,
            }
        })
        .collect();
    Ok(ComplexityReport::from_layers(per_layer, input))
}

/// Bind `net` and count at its own input shape.
pub fn analyze(net: &NetworkSpec) -> Result<ComplexityReport, GraphError> {
    count_mult_adds(&bind_channels(net)?, net.input_shape)
}
