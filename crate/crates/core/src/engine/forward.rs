use crate::arch::{BoundLayer, BoundNetwork, LayerShape, LayerSpec};

use super::ops::{self, conv_kernel_len};
use super::weights::{bias_key, norm_key, weight_key};
use super::{EngineError, EngineOptions, Tensor, WeightStore};

/// Output distribution plus the shape every layer actually produced.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub output: Tensor,
    pub shapes: Vec<LayerShape>,
}

fn run_layer(
    layer: &BoundLayer,
    x: &Tensor,
    weights: &WeightStore,
    opts: EngineOptions,
) -> Result<Tensor, EngineError> {
    if x.shape().channels != layer.in_channels {
        return Err(EngineError::shape(
            layer.id.to_string(),
            format!("{} input channels", layer.in_channels),
            x.shape().channels,
        ));
    }
    let y = match &layer.spec {
        LayerSpec::Conv(c) => {
            let kernel = weights.values(&weight_key(layer), conv_kernel_len(c, layer.in_channels))?;
            let bias = if c.bias {
                Some(weights.values(&bias_key(layer), c.out)?)
            } else {
                None
            };
            let mut y = ops::conv2d_with(x, kernel, bias, c, opts)?;
            if c.normalize {
                let affine = weights.values(&norm_key(layer), 2 * c.out)?;
                let plane = y.shape().height * y.shape().width;
                for (ch, chunk) in y.data_mut().chunks_mut(plane).enumerate() {
                    let (scale, shift) = (affine[ch], affine[c.out + ch]);
                    chunk.iter_mut().for_each(|v| *v = *v * scale + shift);
                }
            }
            if c.relu {
                ops::relu_in_place(&mut y);
            }
            y
        }
        LayerSpec::MaxPool(p) => ops::max_pool2d(x, p)?,
        LayerSpec::AvgPool(p) => ops::avg_pool2d(x, p)?,
        LayerSpec::Dense(d) => {
            let w = weights.values(&weight_key(layer), d.out * layer.in_channels)?;
            let bias = if d.bias {
                Some(weights.values(&bias_key(layer), d.out)?)
            } else {
                None
            };
            ops::dense(x, w, bias, d.out, opts)?
        }
        LayerSpec::Softmax => ops::softmax(x),
        LayerSpec::Identity => x.clone(),
    };
    if !y.is_finite() {
        return Err(EngineError::NonFinite(layer.id));
    }
    Ok(y)
}

/// Class distribution for `input`.
pub fn forward(net: &BoundNetwork, weights: &WeightStore, input: &Tensor) -> Result<Tensor, EngineError> {
    forward_traced(net, weights, input, EngineOptions::default()).map(|t| t.output)
}

/// Forward pass recording every executed layer's input and output shape in
/// the same order as `BoundNetwork::shapes`.
pub fn forward_traced(
    net: &BoundNetwork,
    weights: &WeightStore,
    input: &Tensor,
    opts: EngineOptions,
) -> Result<ForwardTrace, EngineError> {
    weights.check_complete(net)?;
    let mut shapes = Vec::new();
    let mut step = |layer: &BoundLayer, x: &Tensor| -> Result<Tensor, EngineError> {
        let y = run_layer(layer, x, weights, opts)?;
        shapes.push(LayerShape {
            id: layer.id,
            input: x.shape(),
            output: y.shape(),
        });
        Ok(y)
    };

    let mut x = step(&net.stem_conv, input)?;
    x = step(&net.stem_pool, &x)?;
    for m in &net.modules {
        let mut main = step(&m.compress, &x)?;
        for layer in [&m.group_conv, &m.mix, &m.decompress] {
            main = step(layer, &main)?;
        }
        let shortcut = step(&m.shortcut, &x)?;
        ops::add_in_place(&mut main, &shortcut)?;
        if m.residual_relu {
            ops::relu_in_place(&mut main);
        }
        if !main.is_finite() {
            return Err(EngineError::NonFinite(m.shortcut.id));
        }
        x = main;
    }
    x = step(&net.head_pool, &x)?;
    x = step(&net.head_dense, &x)?;
    let output = step(&net.head_softmax, &x)?;
    Ok(ForwardTrace { output, shapes })
}
