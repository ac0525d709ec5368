use std::fmt;

use super::{pool_output_extent, LayerId, LayerSpec, ModulePart, ModuleSpec, ModuleType, NetworkSpec, TensorShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Network,
    Module(usize),
    Layer(LayerId),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Network => f.write_str("network"),
            Location::Module(i) => write!(f, "m{}", i + 1),
            Location::Layer(id) => id.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyInputShape(TensorShape),
    WrongLayerKind {
        expected: &'static str,
        found: &'static str,
    },
    KernelMismatch {
        expected: [usize; 2],
        found: [usize; 2],
    },
    ZeroParameter {
        field: &'static str,
    },
    UnsupportedStride {
        stride: usize,
    },
    GroupsExceedChannels {
        groups: usize,
        in_channels: usize,
        out_channels: usize,
    },
    TypeAStrideViolation {
        stride: usize,
    },
    TypeAProjectionShortcut,
    TypeBMissingProjection,
    ShortcutStrideMismatch {
        shortcut: usize,
        group_conv: usize,
    },
    ResidualShapeMismatch {
        main: TensorShape,
        shortcut: TensorShape,
    },
    DenseBeforeCollapse {
        height: usize,
        width: usize,
    },
    ShapeUnderflow {
        input: TensorShape,
    },
    /// Channels do not divide evenly over the groups; allowed, split larger-first.
    UnevenGroups {
        groups: usize,
        in_channels: usize,
        out_channels: usize,
    },
    /// The mix layer is wider than the grouped conv feeding it.
    MixExpansion {
        mix: usize,
        group_conv: usize,
    },
}

impl Violation {
    pub fn severity(&self) -> Severity {
        match self {
            Violation::UnevenGroups { .. } | Violation::MixExpansion { .. } => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            EmptyInputShape(s) => write!(f, "input shape {s} has a zero dimension"),
            WrongLayerKind { expected, found } => write!(f, "expected {expected} layer, found {found}"),
            KernelMismatch { expected, found } => write!(
                f,
                "expected {}x{} kernel, found {}x{}",
                expected[0], expected[1], found[0], found[1]
            ),
            ZeroParameter { field } => write!(f, "{field} must be positive"),
            UnsupportedStride { stride } => write!(f, "stride {stride} not in {{1, 2}}"),
            GroupsExceedChannels {
                groups,
                in_channels,
                out_channels,
            } => write!(
                f,
                "{groups} groups exceed channels (in {in_channels}, out {out_channels})"
            ),
            TypeAStrideViolation { stride } => write!(f, "type A module has stride-{stride} groups"),
            TypeAProjectionShortcut => f.write_str("type A module has a projection shortcut"),
            TypeBMissingProjection => f.write_str("type B module lacks a projection shortcut"),
            ShortcutStrideMismatch { shortcut, group_conv } => {
                write!(
                    f,
                    "shortcut stride {shortcut} differs from group conv stride {group_conv}"
                )
            }
            ResidualShapeMismatch { main, shortcut } => {
                write!(f, "residual add of {main} and {shortcut}")
            }
            DenseBeforeCollapse { height, width } => write!(f, "dense layer on {height}x{width} map"),
            ShapeUnderflow { input } => write!(f, "window does not fit input {input}"),
            UnevenGroups {
                groups,
                in_channels,
                out_channels,
            } => write!(
                f,
                "{in_channels}->{out_channels} channels split unevenly over {groups} groups"
            ),
            MixExpansion { mix, group_conv } => {
                write!(f, "mix width {mix} exceeds group conv width {group_conv}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub location: Location,
    pub violation: Violation,
}

impl Issue {
    pub fn severity(&self) -> Severity {
        self.violation.severity()
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity() {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.location, self.violation)
    }
}

/// Every invariant violation found in a network, in walk order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    /// No errors; warnings are allowed.
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity() == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity() == Severity::Warning)
    }

    fn push(&mut self, location: Location, violation: Violation) {
        self.issues.push(Issue { location, violation });
    }
}

#[derive(Clone, Copy)]
enum Expect {
    Conv(Option<[usize; 2]>),
    AnyPool,
    AvgPool,
    Dense,
    Softmax,
    Shortcut,
}

/// Structural checks on a single layer in isolation. Returns false when
/// the layer is unusable for shape propagation.
fn check_layer(id: LayerId, layer: &LayerSpec, expect: Expect, report: &mut ValidationReport) -> bool {
    let at = Location::Layer(id);
    let expected = match expect {
        Expect::Conv(_) => "conv",
        Expect::AnyPool => "pooling",
        Expect::AvgPool => "avg_pool",
        Expect::Dense => "dense",
        Expect::Softmax => "softmax",
        Expect::Shortcut => "identity or conv",
    };
    let kind_ok = matches!(
        (expect, layer),
        (Expect::Conv(_), LayerSpec::Conv(_))
            | (Expect::AnyPool, LayerSpec::MaxPool(_) | LayerSpec::AvgPool(_))
            | (Expect::AvgPool, LayerSpec::AvgPool(_))
            | (Expect::Dense, LayerSpec::Dense(_))
            | (Expect::Softmax, LayerSpec::Softmax)
            | (Expect::Shortcut, LayerSpec::Identity | LayerSpec::Conv(_))
    );
    if !kind_ok {
        report.push(
            at,
            Violation::WrongLayerKind {
                expected,
                found: layer.kind_name(),
            },
        );
    }

    let mut usable = true;
    // False only for stride 0, which cannot be propagated.
    let stride_ok = |stride: usize, report: &mut ValidationReport| {
        if stride != 1 && stride != 2 {
            report.push(at, Violation::UnsupportedStride { stride });
        }
        stride != 0
    };
    match layer {
        LayerSpec::Conv(c) => {
            let want = match expect {
                Expect::Conv(k) => k,
                Expect::Shortcut => Some([1, 1]),
                _ => None,
            };
            if let Some(want) = want {
                if c.kernel != want {
                    report.push(
                        at,
                        Violation::KernelMismatch {
                            expected: want,
                            found: c.kernel,
                        },
                    );
                }
            }
            for (field, v) in [
                ("kernel height", c.kernel[0]),
                ("kernel width", c.kernel[1]),
                ("out", c.out),
                ("groups", c.groups),
            ] {
                if v == 0 {
                    report.push(at, Violation::ZeroParameter { field });
                    usable = false;
                }
            }
            usable &= stride_ok(c.stride, report);
        }
        LayerSpec::MaxPool(p) | LayerSpec::AvgPool(p) => {
            for (field, v) in [("kernel height", p.kernel[0]), ("kernel width", p.kernel[1])] {
                if v == 0 {
                    report.push(at, Violation::ZeroParameter { field });
                    usable = false;
                }
            }
            usable &= stride_ok(p.stride, report);
        }
        LayerSpec::Dense(d) => {
            if d.out == 0 {
                report.push(at, Violation::ZeroParameter { field: "out" });
                usable = false;
            }
        }
        LayerSpec::Softmax | LayerSpec::Identity => {}
    }
    usable
}

/// Shape step used by the validator: records problems instead of failing.
fn advance(id: LayerId, layer: &LayerSpec, x: TensorShape, report: &mut ValidationReport) -> Option<TensorShape> {
    let at = Location::Layer(id);
    let window = |kernel: [usize; 2], stride: usize, pad: usize, channels: usize, report: &mut ValidationReport| {
        let h = pool_output_extent(x.height, kernel[0], stride, pad);
        let w = pool_output_extent(x.width, kernel[1], stride, pad);
        match (h, w) {
            (Some(h), Some(w)) => Some(TensorShape::new(channels, h, w)),
            _ => {
                report.push(at, Violation::ShapeUnderflow { input: x });
                None
            }
        }
    };
    match layer {
        LayerSpec::Conv(c) => {
            if c.groups > x.channels || c.groups > c.out {
                report.push(
                    at,
                    Violation::GroupsExceedChannels {
                        groups: c.groups,
                        in_channels: x.channels,
                        out_channels: c.out,
                    },
                );
            } else if !x.channels.is_multiple_of(c.groups) || !c.out.is_multiple_of(c.groups) {
                report.push(
                    at,
                    Violation::UnevenGroups {
                        groups: c.groups,
                        in_channels: x.channels,
                        out_channels: c.out,
                    },
                );
            }
            window(c.kernel, c.stride, c.pad, c.out, report)
        }
        LayerSpec::MaxPool(p) | LayerSpec::AvgPool(p) => window(p.kernel, p.stride, p.pad, x.channels, report),
        LayerSpec::Dense(d) => {
            if x.height != 1 || x.width != 1 {
                report.push(
                    at,
                    Violation::DenseBeforeCollapse {
                        height: x.height,
                        width: x.width,
                    },
                );
            }
            Some(TensorShape::new(d.out, 1, 1))
        }
        LayerSpec::Softmax | LayerSpec::Identity => Some(x),
    }
}

fn step(
    id: LayerId,
    layer: &LayerSpec,
    expect: Expect,
    x: Option<TensorShape>,
    report: &mut ValidationReport,
) -> Option<TensorShape> {
    let usable = check_layer(id, layer, expect, report);
    match x {
        Some(x) if usable => advance(id, layer, x, report),
        _ => None,
    }
}

/// Type A/B rules. Returns true when a stride or shortcut-kind rule fired,
/// in which case a spatial residual mismatch is already explained.
fn check_module_type(index: usize, m: &ModuleSpec, report: &mut ValidationReport) -> bool {
    let at = Location::Module(index);
    let group_stride = m.group_conv.stride();
    let projection = matches!(m.shortcut, LayerSpec::Conv(_));
    let before = report.issues.len();
    match m.module_type {
        ModuleType::A => {
            if group_stride != 1 {
                report.push(at, Violation::TypeAStrideViolation { stride: group_stride });
            }
            if projection {
                report.push(at, Violation::TypeAProjectionShortcut);
            }
        }
        ModuleType::B => {
            if !projection {
                report.push(at, Violation::TypeBMissingProjection);
            } else if m.shortcut.stride() != group_stride {
                report.push(
                    at,
                    Violation::ShortcutStrideMismatch {
                        shortcut: m.shortcut.stride(),
                        group_conv: group_stride,
                    },
                );
            }
        }
    }
    if let (Some(mix), Some(group)) = (m.mix.as_conv(), m.group_conv.as_conv()) {
        if mix.out > group.out {
            report.push(
                at,
                Violation::MixExpansion {
                    mix: mix.out,
                    group_conv: group.out,
                },
            );
        }
    }
    report.issues[before..]
        .iter()
        .any(|i| !matches!(i.violation, Violation::MixExpansion { .. }))
}

/// Check every structural invariant of `net`. Violations are data: the walk
/// continues past problems so that one call reports all of them.
pub fn validate(net: &NetworkSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut x = if net.input_shape.is_positive() {
        Some(net.input_shape)
    } else {
        report.push(Location::Network, Violation::EmptyInputShape(net.input_shape));
        None
    };

    x = step(LayerId::StemConv, &net.stem.conv, Expect::Conv(None), x, &mut report);
    x = step(LayerId::StemPool, &net.stem.pool, Expect::AnyPool, x, &mut report);

    for (i, m) in net.modules.iter().enumerate() {
        let flagged = check_module_type(i, m, &mut report);
        let id = |part| LayerId::module(i, part);
        let module_input = x;
        let mut main = module_input;
        for (part, layer) in m.main_path() {
            let kernel = if part == ModulePart::GroupConv { [3, 3] } else { [1, 1] };
            main = step(id(part), layer, Expect::Conv(Some(kernel)), main, &mut report);
        }
        let shortcut = step(
            id(ModulePart::Shortcut),
            &m.shortcut,
            Expect::Shortcut,
            module_input,
            &mut report,
        );
        x = main;
        if let (Some(a), Some(b)) = (main, shortcut) {
            let spatial_differs = (a.height, a.width) != (b.height, b.width);
            if a.channels != b.channels || (spatial_differs && !flagged) {
                report.push(
                    Location::Layer(id(ModulePart::Shortcut)),
                    Violation::ResidualShapeMismatch { main: a, shortcut: b },
                );
            }
            // A stride fault already reported on this module should not
            // resurface downstream; continue at the shortcut's extent.
            if flagged && spatial_differs {
                x = Some(TensorShape::new(a.channels, b.height, b.width));
            }
        }
    }

    x = step(LayerId::HeadPool, &net.head.pool, Expect::AvgPool, x, &mut report);
    x = step(LayerId::HeadDense, &net.head.dense, Expect::Dense, x, &mut report);
    step(LayerId::HeadSoftmax, &net.head.softmax, Expect::Softmax, x, &mut report);
    report
}
