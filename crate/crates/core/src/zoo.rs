//! Network builders: the open prototype skeleton and the four AttoNets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arch::{
    pool_output_extent, ConvSpec, DenseSpec, Head, LayerSpec, ModuleSpec, ModuleType, NetworkSpec, PoolSpec, Stem,
    TensorShape,
};

pub const DEFAULT_INPUT: TensorShape = TensorShape::new(3, 224, 224);
pub const DEFAULT_CLASSES: usize = 51;
pub const DEFAULT_MODULES: usize = 16;

/// Free parameters of the prototype skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrototypeConfig {
    pub num_modules: usize,
    pub num_classes: usize,
    pub input_shape: TensorShape,
}

impl Default for PrototypeConfig {
    fn default() -> Self {
        Self {
            num_modules: DEFAULT_MODULES,
            num_classes: DEFAULT_CLASSES,
            input_shape: DEFAULT_INPUT,
        }
    }
}

/// Micro-architecture of one module: the four main-path widths and the
/// group count of the 3×3 conv.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModuleWidths {
    pub compress: usize,
    pub groups: usize,
    pub group_out: usize,
    pub mix: usize,
    pub decompress: usize,
}

/// One-based indices of the modules that open a new stage (and carry a
/// projection shortcut). For 16 modules this is `[1, 4, 8, 14]`; other
/// module counts scale the same 3/4/6/3 stage proportions.
pub fn stage_starts(num_modules: usize) -> Vec<usize> {
    const CUMULATIVE: [usize; 4] = [0, 3, 7, 13];
    let mut starts: Vec<usize> = CUMULATIVE
        .iter()
        .map(|&c| 1 + (num_modules * c * 2 + DEFAULT_MODULES) / (2 * DEFAULT_MODULES))
        .filter(|&s| s <= num_modules)
        .collect();
    starts.dedup();
    starts
}

fn pointwise(out: usize, relu: bool) -> LayerSpec {
    LayerSpec::Conv(ConvSpec::pointwise(out, 1).with_relu(relu))
}

/// One bottleneck module. Type B gets a strided 1×1 projection; activations
/// follow ReLU after compress, group conv, mix, and the residual add.
fn module_spec(w: &ModuleWidths, module_type: ModuleType, stride: usize) -> ModuleSpec {
    let shortcut = match module_type {
        ModuleType::A => LayerSpec::Identity,
        ModuleType::B => LayerSpec::Conv(ConvSpec::pointwise(w.decompress, stride)),
    };
    ModuleSpec {
        module_type,
        compress: pointwise(w.compress, true),
        group_conv: LayerSpec::Conv(ConvSpec::square(3, w.group_out, w.groups, stride).with_relu(true)),
        mix: pointwise(w.mix, true),
        decompress: pointwise(w.decompress, false),
        shortcut,
        residual_relu: true,
        free: false,
    }
}

fn stem(width: usize) -> Stem {
    Stem {
        conv: LayerSpec::Conv(ConvSpec::square(7, width, 1, 2).with_relu(true)),
        pool: LayerSpec::MaxPool(PoolSpec {
            kernel: [3, 3],
            stride: 2,
            pad: 1,
        }),
    }
}

fn head(pool_extent: [usize; 2], num_classes: usize) -> Head {
    Head {
        pool: LayerSpec::AvgPool(PoolSpec {
            kernel: pool_extent,
            stride: 1,
            pad: 0,
        }),
        dense: LayerSpec::Dense(DenseSpec {
            out: num_classes,
            bias: true,
        }),
        softmax: LayerSpec::Softmax,
    }
}

/// Materialize a network on the prototype skeleton: 7×7/2 stem conv, 3×3/2
/// max-pool, one module per entry of `modules` (Type B at every stage
/// start, strided except for the first), global average pool, dense,
/// softmax.
///
/// `stage_starts` must begin with 1.
pub fn assemble(
    name: &str,
    input_shape: TensorShape,
    num_classes: usize,
    stem_width: usize,
    modules: &[ModuleWidths],
    stage_starts: &[usize],
) -> NetworkSpec {
    let downsamples = stage_starts.iter().filter(|&&s| s > 1 && s <= modules.len()).count();
    let extent = |x: usize| {
        let mut x = pool_output_extent(x, 7, 2, 3).unwrap_or(1);
        x = pool_output_extent(x, 3, 2, 1).unwrap_or(1);
        for _ in 0..downsamples {
            x = pool_output_extent(x, 3, 2, 1).unwrap_or(1);
        }
        x
    };
    let modules = modules
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let index = i + 1;
            if stage_starts.contains(&index) {
                module_spec(w, ModuleType::B, if index == 1 { 1 } else { 2 })
            } else {
                module_spec(w, ModuleType::A, 1)
            }
        })
        .collect();
    NetworkSpec {
        name: name.to_string(),
        input_shape,
        stem: stem(stem_width),
        modules,
        head: head([extent(input_shape.height), extent(input_shape.width)], num_classes),
    }
}

/// Placeholder module widths for the open prototype, per stage.
const PROTOTYPE_STAGE_WIDTHS: [usize; 4] = [128, 256, 512, 1024];
const PROTOTYPE_STEM_WIDTH: usize = 8;

/// The human-specified starting point: fixed macro-architecture, module
/// micro-architectures marked free.
pub fn build_prototype(cfg: &PrototypeConfig) -> NetworkSpec {
    let starts = stage_starts(cfg.num_modules);
    let widths: Vec<ModuleWidths> = (1..=cfg.num_modules)
        .map(|index| {
            let stage = starts.iter().filter(|&&s| s <= index).count().max(1) - 1;
            let decompress = PROTOTYPE_STAGE_WIDTHS[stage.min(3)];
            let compress = decompress / 8;
            ModuleWidths {
                compress,
                groups: compress,
                group_out: 4 * compress,
                mix: compress,
                decompress,
            }
        })
        .collect();
    let mut net = assemble(
        "prototype",
        cfg.input_shape,
        cfg.num_classes,
        PROTOTYPE_STEM_WIDTH,
        &widths,
        &starts,
    );
    for m in &mut net.modules {
        m.free = true;
    }
    net
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    A,
    B,
    C,
    D,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::A, Variant::B, Variant::C, Variant::D];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::A => "attonet-a",
            Variant::B => "attonet-b",
            Variant::C => "attonet-c",
            Variant::D => "attonet-d",
        }
    }

    fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        let tag = lower.strip_prefix("attonet-").unwrap_or(&lower);
        match tag {
            "a" => Ok(Variant::A),
            "b" => Ok(Variant::B),
            "c" => Ok(Variant::C),
            "d" => Ok(Variant::D),
            _ => Err(format!("unknown AttoNet variant `{s}`")),
        }
    }
}

/// How a table entry "[3x3xg, W]" maps onto a grouped convolution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GroupNotation {
    /// One group per input channel with `g` filters each (`groups` equals
    /// the compress width, `W = g · compress`). This is the reading under
    /// which the published parameter totals are reproduced.
    #[default]
    ChannelMultiplier,
    /// Exactly `g` groups.
    Groups,
}

#[derive(Debug, Clone, Copy)]
enum Shortcut {
    Identity,
    Projection { stride: usize },
}

/// A module cell of the architecture table, verbatim.
#[derive(Debug, Clone, Copy)]
struct Cell {
    compress: usize,
    g: usize,
    group_out: usize,
    group_stride: usize,
    mix: usize,
    decompress: usize,
    shortcut: Shortcut,
}

/// Identity-shortcut cell `[1x1, c] [3x3xg, w] [1x1, m] [1x1, d] | Identity`.
const fn a(compress: usize, g: usize, group_out: usize, mix: usize, decompress: usize) -> Cell {
    Cell {
        compress,
        g,
        group_out,
        group_stride: 1,
        mix,
        decompress,
        shortcut: Shortcut::Identity,
    }
}

/// Projection cell `[1x1, c] [3x3xg, w, s?] [1x1, m] [1x1, d] | [1x1, d, s?]`.
const fn b(
    compress: usize,
    g: usize,
    group_out: usize,
    group_stride: usize,
    mix: usize,
    decompress: usize,
    shortcut_stride: usize,
) -> Cell {
    Cell {
        compress,
        g,
        group_out,
        group_stride,
        mix,
        decompress,
        shortcut: Shortcut::Projection {
            stride: shortcut_stride,
        },
    }
}

/// Stem widths: "7x7, 8, s2" / "7x7, 8, s2" / "7x7, 6, s2" / "7x7, 3, s2".
const STEM_WIDTHS: [usize; 4] = [8, 8, 6, 3];

#[rustfmt::skip]
const TABLE: [[Cell; 16]; 4] = [
    // AttoNet-A
    [
        b(8, 4, 32, 1, 16, 176, 1),     // Module1:  [1x1, 8] [3x3x4, 32] [1x1, 16] [1x1, 176] | [1x1, 176]
        a(16, 4, 64, 16, 176),          // Module2:  [1x1, 16] [3x3x4, 64] [1x1, 16] [1x1, 176] | Identity
        a(16, 4, 64, 16, 176),          // Module3:  [1x1, 16] [3x3x4, 64] [1x1, 16] [1x1, 176] | Identity
        b(40, 4, 160, 2, 40, 400, 2),   // Module4:  [1x1, 40] [3x3x4, 160, s2] [1x1, 40] [1x1, 400] | [1x1, 400, s2]
        a(32, 4, 128, 24, 400),         // Module5:  [1x1, 32] [3x3x4, 128] [1x1, 24] [1x1, 400] | Identity
        a(40, 4, 160, 32, 400),         // Module6:  [1x1, 40] [3x3x4, 160] [1x1, 32] [1x1, 400] | Identity
        a(40, 4, 160, 32, 400),         // Module7:  [1x1, 40] [3x3x4, 160] [1x1, 32] [1x1, 400] | Identity
        b(80, 4, 320, 2, 64, 808, 2),   // Module8:  [1x1, 80] [3x3x4, 320, s2] [1x1, 64] [1x1, 808] | [1x1, 808, s2]
        a(72, 4, 288, 72, 808),         // Module9:  [1x1, 72] [3x3x4, 288] [1x1, 72] [1x1, 808] | Identity
        a(80, 4, 320, 72, 808),         // Module10: [1x1, 80] [3x3x4, 320] [1x1, 72] [1x1, 808] | Identity
        a(72, 4, 288, 72, 808),         // Module11: [1x1, 72] [3x3x4, 288] [1x1, 72] [1x1, 808] | Identity
        a(72, 4, 288, 64, 808),         // Module12: [1x1, 72] [3x3x4, 288] [1x1, 64] [1x1, 808] | Identity
        a(56, 4, 224, 56, 808),         // Module13: [1x1, 56] [3x3x4, 224] [1x1, 56] [1x1, 808] | Identity
        b(160, 4, 640, 2, 128, 952, 2), // Module14: [1x1, 160] [3x3x4, 640, s2] [1x1, 128] [1x1, 952] | [1x1, 952, s2]
        a(120, 4, 480, 88, 952),        // Module15: [1x1, 120] [3x3x4, 480] [1x1, 88] [1x1, 952] | Identity
        a(112, 4, 448, 88, 952),        // Module16: [1x1, 112] [3x3x4, 448] [1x1, 88] [1x1, 952] | Identity
    ],
    // AttoNet-B
    [
        b(8, 4, 32, 1, 16, 168, 1),     // Module1:  [1x1, 8] [3x3x4, 32] [1x1, 16] [1x1, 168] | [1x1, 168]
        a(16, 4, 64, 8, 168),           // Module2:  [1x1, 16] [3x3x4, 64] [1x1, 8] [1x1, 168] | Identity
        a(16, 4, 64, 16, 168),          // Module3:  [1x1, 16] [3x3x4, 64] [1x1, 16] [1x1, 168] | Identity
        b(32, 4, 128, 2, 24, 368, 2),   // Module4:  [1x1, 32] [3x3x4, 128, s2] [1x1, 24] [1x1, 368] | [1x1, 368, s2]
        a(16, 4, 64, 24, 368),          // Module5:  [1x1, 16] [3x3x4, 64] [1x1, 24] [1x1, 368] | Identity
        a(24, 4, 96, 24, 368),          // Module6:  [1x1, 24] [3x3x4, 96] [1x1, 24] [1x1, 368] | Identity
        a(24, 4, 96, 32, 368),          // Module7:  [1x1, 24] [3x3x4, 96] [1x1, 32] [1x1, 368] | Identity
        b(64, 4, 256, 2, 48, 728, 2),   // Module8:  [1x1, 64] [3x3x4, 256, s2] [1x1, 48] [1x1, 728] | [1x1, 728, s2]
        a(40, 4, 160, 40, 728),         // Module9:  [1x1, 40] [3x3x4, 160] [1x1, 40] [1x1, 728] | Identity
        a(48, 4, 192, 48, 728),         // Module10: [1x1, 48] [3x3x4, 192] [1x1, 48] [1x1, 728] | Identity
        a(56, 4, 224, 48, 728),         // Module11: [1x1, 56] [3x3x4, 224] [1x1, 48] [1x1, 728] | Identity
        a(48, 4, 192, 40, 728),         // Module12: [1x1, 48] [3x3x4, 192] [1x1, 40] [1x1, 728] | Identity
        a(32, 4, 128, 32, 728),         // Module13: [1x1, 32] [3x3x4, 128] [1x1, 32] [1x1, 728] | Identity
        b(112, 4, 448, 2, 96, 736, 2),  // Module14: [1x1, 112] [3x3x4, 448, s2] [1x1, 96] [1x1, 736] | [1x1, 736, s2]
        a(72, 4, 288, 48, 736),         // Module15: [1x1, 72] [3x3x4, 288] [1x1, 48] [1x1, 736] | Identity
        a(72, 4, 288, 56, 736),         // Module16: [1x1, 72] [3x3x4, 288] [1x1, 56] [1x1, 736] | Identity
    ],
    // AttoNet-C
    [
        b(7, 2, 14, 1, 8, 139, 1),      // Module1:  [1x1, 7] [3x3x2, 14] [1x1, 8] [1x1, 139] | [1x1, 139]
        a(5, 2, 10, 5, 139),            // Module2:  [1x1, 5] [3x3x2, 10] [1x1, 5] [1x1, 139] | Identity
        a(7, 2, 14, 6, 139),            // Module3:  [1x1, 7] [3x3x2, 14] [1x1, 6] [1x1, 139] | Identity
        b(19, 2, 38, 2, 14, 328, 2),    // Module4:  [1x1, 19] [3x3x2, 38, s2] [1x1, 14] [1x1, 328] | [1x1, 328, s2]
        a(13, 2, 26, 9, 328),           // Module5:  [1x1, 13] [3x3x2, 26] [1x1, 9] [1x1, 328] | Identity
        a(19, 2, 38, 8, 328),           // Module6:  [1x1, 19] [3x3x2, 38] [1x1, 8] [1x1, 328] | Identity
        a(20, 2, 40, 12, 328),          // Module7:  [1x1, 20] [3x3x2, 40] [1x1, 12] [1x1, 328] | Identity
        b(39, 2, 78, 2, 24, 628, 2),    // Module8:  [1x1, 39] [3x3x2, 78, s2] [1x1, 24] [1x1, 628] | [1x1, 628, s2]
        a(29, 2, 58, 28, 628),          // Module9:  [1x1, 29] [3x3x2, 58] [1x1, 28] [1x1, 628] | Identity
        a(37, 2, 74, 26, 628),          // Module10: [1x1, 37] [3x3x2, 74] [1x1, 26] [1x1, 628] | Identity
        a(37, 2, 74, 32, 628),          // Module11: [1x1, 37] [3x3x2, 74] [1x1, 32] [1x1, 628] | Identity
        a(37, 2, 74, 27, 628),          // Module12: [1x1, 37] [3x3x2, 74] [1x1, 27] [1x1, 628] | Identity
        a(17, 2, 34, 24, 628),          // Module13: [1x1, 17] [3x3x2, 34] [1x1, 24] [1x1, 628] | Identity
        b(67, 2, 134, 2, 52, 527, 2),   // Module14: [1x1, 67] [3x3x2, 134, s2] [1x1, 52] [1x1, 527] | [1x1, 527, s2]
        a(46, 2, 92, 30, 527),          // Module15: [1x1, 46] [3x3x2, 92] [1x1, 30] [1x1, 527] | Identity
        a(49, 2, 98, 31, 527),          // Module16: [1x1, 49] [3x3x2, 98] [1x1, 31] [1x1, 527] | Identity
    ],
    // AttoNet-D
    [
        b(7, 4, 28, 1, 8, 112, 1),      // Module1:  [1x1, 7] [3x3x4, 28] [1x1, 8] [1x1, 112] | [1x1, 112]
        a(5, 4, 20, 5, 112),            // Module2:  [1x1, 5] [3x3x4, 20] [1x1, 5] [1x1, 112] | Identity
        a(7, 4, 28, 65, 112),           // Module3:  [1x1, 7] [3x3x4, 28] [1x1,65] [1x1, 112] | Identity
        b(8, 4, 32, 2, 8, 264, 2),      // Module4:  [1x1, 8] [3x3x4, 32, s2] [1x1, 8] [1x1, 264] | [1x1, 264, s2]
        a(8, 4, 32, 8, 264),            // Module5:  [1x1, 8] [3x3x4, 32] [1x1,8] [1x1, 264] | Identity
        a(8, 4, 32, 8, 264),            // Module6:  [1x1, 8] [3x3x4, 32] [1x1,8] [1x1, 264] | Identity
        a(8, 4, 32, 8, 264),            // Module7:  [1x1, 8] [3x3x4, 32] [1x1, 8] [1x1, 264] | Identity
        b(8, 4, 32, 1, 8, 467, 2),      // Module8:  [1x1, 8] [3x3x4, 32] [1x1, 8] [1x1, 467] | [1x1, 467, s2]
        a(8, 4, 32, 8, 467),            // Module9:  [1x1, 8] [3x3x4, 32] [1x1, 8] [1x1, 467] | Identity
        a(8, 4, 32, 8, 467),            // Module10: [1x1, 8] [3x3x4, 32] [1x1, 8] [1x1, 467] | Identity
        a(8, 4, 32, 8, 467),            // Module11: [1x1, 8] [3x3x4, 32] [1x1, 8] [1x1, 467] | Identity
        a(8, 4, 32, 8, 467),            // Module12: [1x1, 8] [3x3x4, 32] [1x1, 8] [1x1, 467] | Identity
        a(8, 4, 32, 8, 467),            // Module13: [1x1, 8] [3x3x4, 32] [1x1, 8] [1x1, 467] | Identity
        b(16, 4, 64, 2, 8, 140, 2),     // Module14: [1x1, 16] [3x3x4, 64, s2] [1x1, 8] [1x1, 140] | [1x1, 140, s2]
        a(8, 4, 32, 8, 140),            // Module15: [1x1, 8] [3x3x4, 32] [1x1, 8] [1x1, 140] | Identity
        a(8, 4, 32, 8, 140),            // Module16: [1x1, 8] [3x3x4, 32] [1x1, 8] [1x1, 140] | Identity
    ],
];

/// The published architecture for `variant`, read with the default
/// [`GroupNotation`].
pub fn build_attonet(variant: Variant) -> NetworkSpec {
    build_attonet_with(variant, GroupNotation::default())
}

pub fn build_attonet_with(variant: Variant, notation: GroupNotation) -> NetworkSpec {
    let modules = TABLE[variant.index()]
        .iter()
        .map(|cell| {
            let groups = match notation {
                GroupNotation::ChannelMultiplier => cell.compress,
                GroupNotation::Groups => cell.g,
            };
            let widths = ModuleWidths {
                compress: cell.compress,
                groups,
                group_out: cell.group_out,
                mix: cell.mix,
                decompress: cell.decompress,
            };
            match cell.shortcut {
                Shortcut::Identity => module_spec(&widths, ModuleType::A, cell.group_stride),
                // A strided shortcut forces strided groups (D Module8 lists
                // the stride on the shortcut only).
                Shortcut::Projection { stride } => module_spec(&widths, ModuleType::B, cell.group_stride.max(stride)),
            }
        })
        .collect();
    NetworkSpec {
        name: variant.name().to_string(),
        input_shape: DEFAULT_INPUT,
        stem: stem(STEM_WIDTHS[variant.index()]),
        modules,
        head: head([7, 7], DEFAULT_CLASSES),
    }
}
