use super::{GraphError, LayerId, LayerSpec, ModulePart, ModuleType, NetworkSpec};

/// A layer with its concrete input/output channel counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundLayer {
    pub id: LayerId,
    pub spec: LayerSpec,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl BoundLayer {
    /// Per-group (input, output) channel counts for a conv; one pair for
    /// every other layer kind.
    pub fn group_split(&self) -> Vec<(usize, usize)> {
        match &self.spec {
            LayerSpec::Conv(c) => group_partition(self.in_channels, c.groups)
                .into_iter()
                .zip(group_partition(self.out_channels, c.groups))
                .collect(),
            _ => vec![(self.in_channels, self.out_channels)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundModule {
    pub module_type: ModuleType,
    pub compress: BoundLayer,
    pub group_conv: BoundLayer,
    pub mix: BoundLayer,
    pub decompress: BoundLayer,
    pub shortcut: BoundLayer,
    pub residual_relu: bool,
}

impl BoundModule {
    pub fn main_path(&self) -> [&BoundLayer; 4] {
        [&self.compress, &self.group_conv, &self.mix, &self.decompress]
    }
}

/// A network whose every layer knows its input channel count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundNetwork {
    pub spec: NetworkSpec,
    pub stem_conv: BoundLayer,
    pub stem_pool: BoundLayer,
    pub modules: Vec<BoundModule>,
    pub head_pool: BoundLayer,
    pub head_dense: BoundLayer,
    pub head_softmax: BoundLayer,
}

impl BoundNetwork {
    /// Layers in topological order: stem, then per module the main path
    /// followed by the shortcut, then the head.
    pub fn layers(&self) -> impl Iterator<Item = &BoundLayer> {
        let stem = [&self.stem_conv, &self.stem_pool];
        let head = [&self.head_pool, &self.head_dense, &self.head_softmax];
        stem.into_iter()
            .chain(self.modules.iter().flat_map(|m| {
                let [a, b, c, d] = m.main_path();
                [a, b, c, d, &m.shortcut]
            }))
            .chain(head)
    }

    pub fn num_classes(&self) -> usize {
        self.head_dense.out_channels
    }
}

/// Split `n` channels into `groups` near-equal parts, larger parts first.
///
/// `group_partition(7, 4) == [2, 2, 2, 1]`.
pub fn group_partition(n: usize, groups: usize) -> Vec<usize> {
    assert!(groups > 0, "group count must be positive");
    let base = n / groups;
    let extra = n % groups;
    (0..groups).map(|g| base + usize::from(g < extra)).collect()
}

fn bind_layer(id: LayerId, spec: &LayerSpec, in_channels: usize) -> Result<BoundLayer, GraphError> {
    let out_channels = spec.out_channels(in_channels);
    match spec {
        LayerSpec::Conv(c) => {
            if c.out == 0 {
                return Err(GraphError::InvalidParameter {
                    layer: id,
                    detail: "conv has zero output channels".into(),
                });
            }
            if c.groups == 0 {
                return Err(GraphError::InvalidParameter {
                    layer: id,
                    detail: "conv has zero groups".into(),
                });
            }
            if c.groups > in_channels || c.groups > c.out {
                return Err(GraphError::GroupsExceedChannels {
                    layer: id,
                    groups: c.groups,
                    in_channels,
                    out_channels: c.out,
                });
            }
        }
        LayerSpec::Dense(d) if d.out == 0 => {
            return Err(GraphError::InvalidParameter {
                layer: id,
                detail: "dense layer has zero outputs".into(),
            });
        }
        _ => {}
    }
    Ok(BoundLayer {
        id,
        spec: spec.clone(),
        in_channels,
        out_channels,
    })
}

/// Resolve every layer's input channel count from its predecessor.
///
/// Shortcut branches bind to the module input; the residual add requires
/// the shortcut and the decompression layer to agree on channel count.
pub fn bind_channels(net: &NetworkSpec) -> Result<BoundNetwork, GraphError> {
    if !net.input_shape.is_positive() {
        return Err(GraphError::EmptyInput(net.input_shape));
    }
    let stem_conv = bind_layer(LayerId::StemConv, &net.stem.conv, net.input_shape.channels)?;
    let stem_pool = bind_layer(LayerId::StemPool, &net.stem.pool, stem_conv.out_channels)?;
    let mut channels = stem_pool.out_channels;

    let mut modules = Vec::with_capacity(net.modules.len());
    for (i, m) in net.modules.iter().enumerate() {
        let id = |part| LayerId::module(i, part);
        let compress = bind_layer(id(ModulePart::Compress), &m.compress, channels)?;
        let group_conv = bind_layer(id(ModulePart::GroupConv), &m.group_conv, compress.out_channels)?;
        let mix = bind_layer(id(ModulePart::Mix), &m.mix, group_conv.out_channels)?;
        let decompress = bind_layer(id(ModulePart::Decompress), &m.decompress, mix.out_channels)?;
        let shortcut = bind_layer(id(ModulePart::Shortcut), &m.shortcut, channels)?;
        if shortcut.out_channels != decompress.out_channels {
            return Err(GraphError::ChannelMismatch {
                layer: shortcut.id,
                expected: decompress.out_channels,
                found: shortcut.out_channels,
            });
        }
        channels = decompress.out_channels;
        modules.push(BoundModule {
            module_type: m.module_type,
            compress,
            group_conv,
            mix,
            decompress,
            shortcut,
            residual_relu: m.residual_relu,
        });
    }

    let head_pool = bind_layer(LayerId::HeadPool, &net.head.pool, channels)?;
    let head_dense = bind_layer(LayerId::HeadDense, &net.head.dense, head_pool.out_channels)?;
    let head_softmax = bind_layer(LayerId::HeadSoftmax, &net.head.softmax, head_dense.out_channels)?;

    Ok(BoundNetwork {
        spec: net.clone(),
        stem_conv,
        stem_pool,
        modules,
        head_pool,
        head_dense,
        head_softmax,
    })
}
