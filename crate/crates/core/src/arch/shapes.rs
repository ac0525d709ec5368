use super::{bind_channels, BoundLayer, BoundNetwork, GraphError, LayerId, LayerSpec, NetworkSpec, TensorShape};

/// Output extent of a sliding window: `floor((input + 2·pad − kernel) / stride) + 1`.
///
/// `None` when the window does not fit or the stride is zero.
pub fn pool_output_extent(input: usize, kernel: usize, stride: usize, pad: usize) -> Option<usize> {
    let padded = input + 2 * pad;
    if stride == 0 || kernel == 0 || padded < kernel {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

/// Input and output shape of one executed layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub id: LayerId,
    pub input: TensorShape,
    pub output: TensorShape,
}

fn windowed(
    id: LayerId,
    input: TensorShape,
    kernel: [usize; 2],
    stride: usize,
    pad: usize,
    channels: usize,
) -> Result<TensorShape, GraphError> {
    let h = pool_output_extent(input.height, kernel[0], stride, pad);
    let w = pool_output_extent(input.width, kernel[1], stride, pad);
    match (h, w) {
        (Some(height), Some(width)) if stride > 0 => Ok(TensorShape::new(channels, height, width)),
        _ if stride == 0 => Err(GraphError::InvalidParameter {
            layer: id,
            detail: "stride must be positive".into(),
        }),
        _ => Err(GraphError::ShapeUnderflow { layer: id, input }),
    }
}

impl BoundLayer {
    /// Output shape for `input`, which must carry the bound channel count.
    pub fn output_shape(&self, input: TensorShape) -> Result<TensorShape, GraphError> {
        if input.channels != self.in_channels {
            return Err(GraphError::ChannelMismatch {
                layer: self.id,
                expected: self.in_channels,
                found: input.channels,
            });
        }
        match &self.spec {
            LayerSpec::Conv(c) => windowed(self.id, input, c.kernel, c.stride, c.pad, c.out),
            LayerSpec::MaxPool(p) | LayerSpec::AvgPool(p) => {
                windowed(self.id, input, p.kernel, p.stride, p.pad, input.channels)
            }
            LayerSpec::Dense(d) => {
                if input.height != 1 || input.width != 1 {
                    return Err(GraphError::DenseBeforeCollapse {
                        layer: self.id,
                        height: input.height,
                        width: input.width,
                    });
                }
                Ok(TensorShape::new(d.out, 1, 1))
            }
            LayerSpec::Softmax | LayerSpec::Identity => Ok(input),
        }
    }
}

impl BoundNetwork {
    /// Propagate `input` through every layer, in the order of [`BoundNetwork::layers`].
    pub fn shapes(&self, input: TensorShape) -> Result<Vec<LayerShape>, GraphError> {
        if !input.is_positive() {
            return Err(GraphError::EmptyInput(input));
        }
        let mut out = Vec::new();
        let mut step = |layer: &BoundLayer, x: TensorShape| -> Result<TensorShape, GraphError> {
            let y = layer.output_shape(x)?;
            out.push(LayerShape {
                id: layer.id,
                input: x,
                output: y,
            });
            Ok(y)
        };

        let mut x = step(&self.stem_conv, input)?;
        x = step(&self.stem_pool, x)?;
        for m in &self.modules {
            let module_input = x;
            let mut main = module_input;
            for layer in m.main_path() {
                main = step(layer, main)?;
            }
            let shortcut = step(&m.shortcut, module_input)?;
            if main != shortcut {
                return Err(GraphError::ResidualShapeMismatch {
                    layer: m.shortcut.id,
                    main,
                    shortcut,
                });
            }
            x = main;
        }
        x = step(&self.head_pool, x)?;
        x = step(&self.head_dense, x)?;
        step(&self.head_softmax, x)?;
        Ok(out)
    }
}

/// Bind channels and propagate the spec's input shape end to end.
///
/// Returns one `(layer id, output shape)` per layer in topological order.
pub fn infer_shapes(net: &NetworkSpec) -> Result<Vec<(LayerId, TensorShape)>, GraphError> {
    let bound = bind_channels(net)?;
    Ok(bound
        .shapes(net.input_shape)?
        .into_iter()
        .map(|s| (s.id, s.output))
        .collect())
}

impl NetworkSpec {
    /// The same network at another input extent, with a stride-1 average
    /// pool head resized to the new final feature map so it stays global.
    pub fn at_input(&self, input: TensorShape) -> Result<NetworkSpec, GraphError> {
        let mut net = self.clone();
        net.input_shape = input;
        let bound = bind_channels(&net)?;
        let shapes = bound.shapes_until_head(input)?;
        if let LayerSpec::AvgPool(p) = &mut net.head.pool {
            if p.stride == 1 && p.pad == 0 {
                p.kernel = [shapes.height, shapes.width];
            }
        }
        Ok(net)
    }
}

impl BoundNetwork {
    fn shapes_until_head(&self, input: TensorShape) -> Result<TensorShape, GraphError> {
        let mut x = self.stem_pool.output_shape(self.stem_conv.output_shape(input)?)?;
        for m in &self.modules {
            let mut main = x;
            for layer in m.main_path() {
                main = layer.output_shape(main)?;
            }
            x = main;
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{ConvSpec, PoolSpec};

    fn bound(spec: LayerSpec, in_channels: usize) -> BoundLayer {
        BoundLayer {
            id: LayerId::StemConv,
            out_channels: spec.out_channels(in_channels),
            spec,
            in_channels,
        }
    }

    #[test]
    fn stem_conv_halves_224() {
        let l = bound(LayerSpec::Conv(ConvSpec::square(7, 8, 1, 2)), 3);
        assert_eq!(
            l.output_shape(TensorShape::new(3, 224, 224)).unwrap(),
            TensorShape::new(8, 112, 112)
        );
    }

    #[test]
    fn max_pool_halves_112() {
        let pool = PoolSpec {
            kernel: [3, 3],
            stride: 2,
            pad: 1,
        };
        let l = bound(LayerSpec::MaxPool(pool), 8);
        assert_eq!(
            l.output_shape(TensorShape::new(8, 112, 112)).unwrap(),
            TensorShape::new(8, 56, 56)
        );
    }

    #[test]
    fn full_extent_avg_pool_collapses() {
        let pool = PoolSpec {
            kernel: [7, 7],
            stride: 1,
            pad: 0,
        };
        let l = bound(LayerSpec::AvgPool(pool), 952);
        assert_eq!(
            l.output_shape(TensorShape::new(952, 7, 7)).unwrap(),
            TensorShape::new(952, 1, 1)
        );
    }

    #[test]
    fn oversized_window_underflows() {
        let pool = PoolSpec {
            kernel: [7, 7],
            stride: 1,
            pad: 0,
        };
        let l = bound(LayerSpec::AvgPool(pool), 4);
        let err = l.output_shape(TensorShape::new(4, 5, 5)).unwrap_err();
        assert!(matches!(err, GraphError::ShapeUnderflow { .. }));
    }

    #[test]
    fn extent_formula() {
        assert_eq!(pool_output_extent(56, 3, 2, 1), Some(28));
        assert_eq!(pool_output_extent(7, 3, 2, 1), Some(4));
        assert_eq!(pool_output_extent(2, 7, 1, 0), None);
        assert_eq!(pool_output_extent(8, 1, 0, 0), None);
    }
}
