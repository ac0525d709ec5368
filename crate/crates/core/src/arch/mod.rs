//! Layer, module, and network data model.
//!
//! A [`NetworkSpec`] is a plain value: a stem (conv + pool), an ordered list
//! of residual bottleneck modules, and a classification head. It serializes
//! to a strict JSON document (unknown keys are rejected). Structural checks
//! live in [`validate`]; channel binding and shape propagation live in
//! [`bind_channels`] and [`infer_shapes`].

mod bind;
mod shapes;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use bind::{bind_channels, group_partition, BoundLayer, BoundModule, BoundNetwork};
pub use shapes::{infer_shapes, pool_output_extent, LayerShape};
pub use validate::{validate, Issue, Location, Severity, ValidationReport, Violation};

/// Channel-major shape of a single feature map (no batch dimension).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl TensorShape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    pub fn numel(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_positive(&self) -> bool {
        self.channels > 0 && self.height > 0 && self.width > 0
    }
}

impl fmt::Display for TensorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Convolution hyper-parameters. Input channels are not stored; they come
/// from the predecessor layer at bind time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvSpec {
    pub kernel: [usize; 2],
    pub out: usize,
    #[serde(default = "one")]
    pub groups: usize,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub pad: usize,
    #[serde(default)]
    pub bias: bool,
    /// Apply ReLU to this layer's output.
    #[serde(default)]
    pub relu: bool,
    /// Per-channel affine normalization (scale + shift) after the conv.
    #[serde(default, skip_serializing_if = "is_false")]
    pub normalize: bool,
}

impl ConvSpec {
    /// Square kernel with "same"-style padding (`k / 2`), no bias.
    pub fn square(kernel: usize, out: usize, groups: usize, stride: usize) -> Self {
        Self {
            kernel: [kernel, kernel],
            out,
            groups,
            stride,
            pad: kernel / 2,
            bias: false,
            relu: false,
            normalize: false,
        }
    }

    pub fn pointwise(out: usize, stride: usize) -> Self {
        Self::square(1, out, 1, stride)
    }

    pub fn with_relu(mut self, relu: bool) -> Self {
        self.relu = relu;
        self
    }

    pub fn is_pointwise(&self) -> bool {
        self.kernel == [1, 1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    pub kernel: [usize; 2],
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub pad: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseSpec {
    pub out: usize,
    #[serde(default = "yes")]
    pub bias: bool,
}

/// One layer of a network.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", from = "LayerRepr")]
pub enum LayerSpec {
    Conv(ConvSpec),
    MaxPool(PoolSpec),
    AvgPool(PoolSpec),
    Dense(DenseSpec),
    Softmax,
    Identity,
}

// Internally tagged unit variants accept any extra keys; empty struct
// variants with deny_unknown_fields do not.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum LayerRepr {
    Conv(ConvSpec),
    MaxPool(PoolSpec),
    AvgPool(PoolSpec),
    Dense(DenseSpec),
    Softmax {},
    Identity {},
}

impl From<LayerRepr> for LayerSpec {
    fn from(r: LayerRepr) -> Self {
        match r {
            LayerRepr::Conv(c) => LayerSpec::Conv(c),
            LayerRepr::MaxPool(p) => LayerSpec::MaxPool(p),
            LayerRepr::AvgPool(p) => LayerSpec::AvgPool(p),
            LayerRepr::Dense(d) => LayerSpec::Dense(d),
            LayerRepr::Softmax {} => LayerSpec::Softmax,
            LayerRepr::Identity {} => LayerSpec::Identity,
        }
    }
}

impl LayerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv(_) => "conv",
            LayerSpec::MaxPool(_) => "max_pool",
            LayerSpec::AvgPool(_) => "avg_pool",
            LayerSpec::Dense(_) => "dense",
            LayerSpec::Softmax => "softmax",
            LayerSpec::Identity => "identity",
        }
    }

    pub fn as_conv(&self) -> Option<&ConvSpec> {
        match self {
            LayerSpec::Conv(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_conv_mut(&mut self) -> Option<&mut ConvSpec> {
        match self {
            LayerSpec::Conv(c) => Some(c),
            _ => None,
        }
    }

    /// Output channel count given the bound input channel count.
    pub fn out_channels(&self, in_channels: usize) -> usize {
        match self {
            LayerSpec::Conv(c) => c.out,
            LayerSpec::Dense(d) => d.out,
            _ => in_channels,
        }
    }

    /// Spatial stride; 1 for layers without one.
    pub fn stride(&self) -> usize {
        match self {
            LayerSpec::Conv(c) => c.stride,
            LayerSpec::MaxPool(p) | LayerSpec::AvgPool(p) => p.stride,
            _ => 1,
        }
    }
}

/// Module macro-architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModuleType {
    /// Identity shortcut, non-strided groups.
    A,
    /// 1×1 projection shortcut, groups may be strided.
    B,
}

/// One residual bottleneck module: compress → grouped 3×3 → mix → decompress,
/// added to the shortcut branch.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleSpec {
    #[serde(rename = "type")]
    pub module_type: ModuleType,
    pub compress: LayerSpec,
    pub group_conv: LayerSpec,
    pub mix: LayerSpec,
    pub decompress: LayerSpec,
    /// `Identity` or a 1×1 `Conv` projection.
    pub shortcut: LayerSpec,
    /// ReLU after the residual add.
    #[serde(default = "yes")]
    pub residual_relu: bool,
    /// Placeholder micro-architecture left open for exploration.
    #[serde(default, skip_serializing_if = "is_false")]
    pub free: bool,
}

impl ModuleSpec {
    pub fn main_path(&self) -> [(ModulePart, &LayerSpec); 4] {
        [
            (ModulePart::Compress, &self.compress),
            (ModulePart::GroupConv, &self.group_conv),
            (ModulePart::Mix, &self.mix),
            (ModulePart::Decompress, &self.decompress),
        ]
    }

    pub fn layers(&self) -> [(ModulePart, &LayerSpec); 5] {
        let [a, b, c, d] = self.main_path();
        [a, b, c, d, (ModulePart::Shortcut, &self.shortcut)]
    }

    pub fn layers_mut(&mut self) -> [(ModulePart, &mut LayerSpec); 5] {
        [
            (ModulePart::Compress, &mut self.compress),
            (ModulePart::GroupConv, &mut self.group_conv),
            (ModulePart::Mix, &mut self.mix),
            (ModulePart::Decompress, &mut self.decompress),
            (ModulePart::Shortcut, &mut self.shortcut),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stem {
    pub conv: LayerSpec,
    pub pool: LayerSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Head {
    pub pool: LayerSpec,
    pub dense: LayerSpec,
    pub softmax: LayerSpec,
}

/// A complete network: stem, module chain, head.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub name: String,
    pub input_shape: TensorShape,
    pub stem: Stem,
    pub modules: Vec<ModuleSpec>,
    pub head: Head,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("malformed network spec: {0}")]
    Json(#[from] serde_json::Error),
}

impl NetworkSpec {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Pretty-printed JSON; stable across runs for equal specs.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network spec serializes")
    }

    /// Hex SHA-256 of the compact JSON encoding.
    pub fn digest(&self) -> String {
        let compact = serde_json::to_vec(self).expect("network spec serializes");
        hex::encode(Sha256::digest(&compact))
    }

    /// All layers in topological order with their ids.
    pub fn layers(&self) -> Vec<(LayerId, &LayerSpec)> {
        let mut out = vec![
            (LayerId::StemConv, &self.stem.conv),
            (LayerId::StemPool, &self.stem.pool),
        ];
        for (i, m) in self.modules.iter().enumerate() {
            for (part, layer) in m.layers() {
                out.push((LayerId::module(i, part), layer));
            }
        }
        out.push((LayerId::HeadPool, &self.head.pool));
        out.push((LayerId::HeadDense, &self.head.dense));
        out.push((LayerId::HeadSoftmax, &self.head.softmax));
        out
    }

    /// Every conv layer, mutably, in topological order.
    pub fn convs_mut(&mut self) -> Vec<&mut ConvSpec> {
        let mut out = Vec::new();
        if let LayerSpec::Conv(c) = &mut self.stem.conv {
            out.push(c);
        }
        for m in &mut self.modules {
            for (_, layer) in m.layers_mut() {
                if let LayerSpec::Conv(c) = layer {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Copy with every conv's bias flag set to `bias`.
    pub fn with_conv_bias(&self, bias: bool) -> Self {
        let mut net = self.clone();
        for c in net.convs_mut() {
            c.bias = bias;
        }
        net
    }

    /// Copy with every conv's normalization flag set to `normalize`.
    pub fn with_normalization(&self, normalize: bool) -> Self {
        let mut net = self.clone();
        for c in net.convs_mut() {
            c.normalize = normalize;
        }
        net
    }

    /// Count of conv and dense layers (shortcut projections included).
    pub fn weighted_layer_count(&self) -> usize {
        self.layers()
            .iter()
            .filter(|(_, l)| matches!(l, LayerSpec::Conv(_) | LayerSpec::Dense(_)))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModulePart {
    Compress,
    GroupConv,
    Mix,
    Decompress,
    Shortcut,
}

impl ModulePart {
    pub fn name(&self) -> &'static str {
        match self {
            ModulePart::Compress => "compress",
            ModulePart::GroupConv => "group_conv",
            ModulePart::Mix => "mix",
            ModulePart::Decompress => "decompress",
            ModulePart::Shortcut => "shortcut",
        }
    }
}

/// Stable identifier of a layer within a network.
///
/// Module indices are zero-based internally and displayed one-based
/// (`m1.compress` is the first module's compression layer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerId {
    StemConv,
    StemPool,
    Module { index: usize, part: ModulePart },
    HeadPool,
    HeadDense,
    HeadSoftmax,
}

impl LayerId {
    pub fn module(index: usize, part: ModulePart) -> Self {
        LayerId::Module { index, part }
    }
}

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerId::StemConv => f.write_str("stem.conv"),
            LayerId::StemPool => f.write_str("stem.pool"),
            LayerId::Module { index, part } => write!(f, "m{}.{}", index + 1, part.name()),
            LayerId::HeadPool => f.write_str("head.pool"),
            LayerId::HeadDense => f.write_str("head.dense"),
            LayerId::HeadSoftmax => f.write_str("head.softmax"),
        }
    }
}

impl Serialize for LayerId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Failures of channel binding and shape propagation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("{layer}: channel mismatch (expected {expected}, found {found})")]
    ChannelMismatch {
        layer: LayerId,
        expected: usize,
        found: usize,
    },
    #[error("{layer}: {groups} groups exceed channels (in {in_channels}, out {out_channels})")]
    GroupsExceedChannels {
        layer: LayerId,
        groups: usize,
        in_channels: usize,
        out_channels: usize,
    },
    #[error("{layer}: invalid parameter: {detail}")]
    InvalidParameter { layer: LayerId, detail: String },
    #[error("{layer}: shape underflow on input {input}")]
    ShapeUnderflow { layer: LayerId, input: TensorShape },
    #[error("{layer}: dense layer on {height}x{width} feature map")]
    DenseBeforeCollapse {
        layer: LayerId,
        height: usize,
        width: usize,
    },
    #[error("{layer}: residual shapes differ (main {main}, shortcut {shortcut})")]
    ResidualShapeMismatch {
        layer: LayerId,
        main: TensorShape,
        shortcut: TensorShape,
    },
    #[error("input shape {0} has a zero dimension")]
    EmptyInput(TensorShape),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_json_matches_documented_form() {
        let text = r#"{"kind": "conv", "kernel": [3,3], "out": 32, "groups": 4, "stride": 2, "pad": 1, "bias": false}"#;
        let layer: LayerSpec = serde_json::from_str(text).unwrap();
        let conv = layer.as_conv().unwrap();
        assert_eq!(conv.kernel, [3, 3]);
        assert_eq!((conv.out, conv.groups, conv.stride, conv.pad), (32, 4, 2, 1));
        assert!(!conv.bias && !conv.relu && !conv.normalize);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let conv = r#"{"kind": "conv", "kernel": [1,1], "out": 8, "dilation": 2}"#;
        assert!(serde_json::from_str::<LayerSpec>(conv).is_err());
        let ident = r#"{"kind": "identity", "out": 8}"#;
        assert!(serde_json::from_str::<LayerSpec>(ident).is_err());
        let shape = r#"{"channels": 3, "height": 4, "width": 4, "batch": 1}"#;
        assert!(serde_json::from_str::<TensorShape>(shape).is_err());
    }

    #[test]
    fn unit_layers_parse() {
        let l: LayerSpec = serde_json::from_str(r#"{"kind":"softmax"}"#).unwrap();
        assert_eq!(l, LayerSpec::Softmax);
        let l: LayerSpec = serde_json::from_str(r#"{"kind":"identity"}"#).unwrap();
        assert_eq!(l, LayerSpec::Identity);
    }

    #[test]
    fn layer_ids_display_one_based() {
        assert_eq!(LayerId::module(0, ModulePart::GroupConv).to_string(), "m1.group_conv");
        assert_eq!(LayerId::HeadDense.to_string(), "head.dense");
    }
}
