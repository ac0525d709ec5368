use crate::arch::{group_partition, pool_output_extent, ConvSpec, PoolSpec, TensorShape};

use super::{EngineError, EngineOptions, Precision, Tensor};

trait Accum: Copy {
    const ZERO: Self;
    fn mul_add(&mut self, w: f32, x: f32);
    fn add(&mut self, v: f32);
    fn finish(self) -> f32;
}

impl Accum for f32 {
    const ZERO: Self = 0.0;

    #[inline(always)]
    fn mul_add(&mut self, w: f32, x: f32) {
        *self += w * x;
    }

    #[inline(always)]
    fn add(&mut self, v: f32) {
        *self += v;
    }

    fn finish(self) -> f32 {
        self
    }
}

impl Accum for f64 {
    const ZERO: Self = 0.0;

    #[inline(always)]
    fn mul_add(&mut self, w: f32, x: f32) {
        *self += w as f64 * x as f64;
    }

    #[inline(always)]
    fn add(&mut self, v: f32) {
        *self += v as f64;
    }

    fn finish(self) -> f32 {
        self as f32
    }
}

/// Output positions `ox` whose input coordinate `ox·stride + tap − pad`
/// lands inside `[0, extent)`.
fn valid_range(out: usize, extent: usize, tap: usize, stride: usize, pad: usize) -> std::ops::Range<usize> {
    let lo = if pad > tap { (pad - tap).div_ceil(stride) } else { 0 };
    let hi = if extent + pad > tap {
        ((extent - 1 + pad - tap) / stride + 1).min(out)
    } else {
        0
    };
    lo..hi.max(lo)
}

fn window_shape(
    context: &str,
    input: TensorShape,
    kernel: [usize; 2],
    stride: usize,
    pad: usize,
    channels: usize,
) -> Result<TensorShape, EngineError> {
    match (
        pool_output_extent(input.height, kernel[0], stride, pad),
        pool_output_extent(input.width, kernel[1], stride, pad),
    ) {
        (Some(h), Some(w)) => Ok(TensorShape::new(channels, h, w)),
        _ => Err(EngineError::shape(
            context,
            format!("input covering a {}x{} window", kernel[0], kernel[1]),
            input,
        )),
    }
}

/// Number of kernel values (excluding bias) for `conv` over `in_channels`.
pub(crate) fn conv_kernel_len(conv: &ConvSpec, in_channels: usize) -> usize {
    let taps = conv.kernel[0] * conv.kernel[1];
    group_partition(in_channels, conv.groups)
        .into_iter()
        .zip(group_partition(conv.out, conv.groups))
        .map(|(i, o)| taps * i * o)
        .sum()
}

/// Grouped, strided, zero-padded 2-D cross-correlation with 32-bit accumulation.
///
/// `kernel` is packed group by group; within a group the layout is
/// `[out][in][kh][kw]`, so for evenly divisible groups it is the usual
/// OIHW layout with `I = in_channels / groups`. Channels that do not divide
/// evenly are split larger-groups-first.
pub fn conv2d(input: &Tensor, kernel: &[f32], bias: Option<&[f32]>, conv: &ConvSpec) -> Result<Tensor, EngineError> {
    conv2d_with(input, kernel, bias, conv, EngineOptions::default())
}

pub fn conv2d_with(
    input: &Tensor,
    kernel: &[f32],
    bias: Option<&[f32]>,
    conv: &ConvSpec,
    opts: EngineOptions,
) -> Result<Tensor, EngineError> {
    let in_shape = input.shape();
    if conv.groups == 0 || conv.groups > in_shape.channels || conv.groups > conv.out {
        return Err(EngineError::shape(
            "conv groups",
            format!("at most {} groups", in_shape.channels.min(conv.out)),
            conv.groups,
        ));
    }
    let expected = conv_kernel_len(conv, in_shape.channels);
    if kernel.len() != expected {
        return Err(EngineError::shape("conv kernel length", expected, kernel.len()));
    }
    if let Some(b) = bias {
        if b.len() != conv.out {
            return Err(EngineError::shape("conv bias length", conv.out, b.len()));
        }
    }
    let out_shape = window_shape("conv input", in_shape, conv.kernel, conv.stride, conv.pad, conv.out)?;
    let data = match opts.accumulate {
        Precision::F32 => conv_loop::<f32>(input, kernel, bias, conv, out_shape),
        Precision::F64 => conv_loop::<f64>(input, kernel, bias, conv, out_shape),
    };
    Tensor::new(out_shape, data)
}

fn conv_loop<A: Accum>(
    input: &Tensor,
    kernel: &[f32],
    bias: Option<&[f32]>,
    conv: &ConvSpec,
    out_shape: TensorShape,
) -> Vec<f32> {
    let in_shape = input.shape();
    let (ih, iw) = (in_shape.height, in_shape.width);
    let (oh, ow) = (out_shape.height, out_shape.width);
    let [kh, kw] = conv.kernel;
    let (s, pad) = (conv.stride, conv.pad);
    let plane = oh * ow;
    let mut acc = vec![A::ZERO; conv.out * plane];

    let in_groups = group_partition(in_shape.channels, conv.groups);
    let out_groups = group_partition(conv.out, conv.groups);
    let (mut ic0, mut oc0, mut k0) = (0, 0, 0);
    for (&gi, &go) in in_groups.iter().zip(&out_groups) {
        for o in 0..go {
            let out_plane = &mut acc[(oc0 + o) * plane..(oc0 + o + 1) * plane];
            for i in 0..gi {
                let in_plane = input.channel(ic0 + i);
                for ky in 0..kh {
                    let rows = valid_range(oh, ih, ky, s, pad);
                    for kx in 0..kw {
                        let w = kernel[k0 + ((o * gi + i) * kh + ky) * kw + kx];
                        let cols = valid_range(ow, iw, kx, s, pad);
                        for oy in rows.clone() {
                            let iy = oy * s + ky - pad;
                            let in_row = &in_plane[iy * iw..(iy + 1) * iw];
                            let out_row = &mut out_plane[oy * ow..(oy + 1) * ow];
                            for ox in cols.clone() {
                                out_row[ox].mul_add(w, in_row[ox * s + kx - pad]);
                            }
                        }
                    }
                }
            }
        }
        k0 += go * gi * kh * kw;
        ic0 += gi;
        oc0 += go;
    }

    if let Some(bias) = bias {
        for (oc, &b) in bias.iter().enumerate() {
            acc[oc * plane..(oc + 1) * plane].iter_mut().for_each(|a| a.add(b));
        }
    }
    acc.into_iter().map(Accum::finish).collect()
}

/// Max pooling; padded positions never win.
pub fn max_pool2d(input: &Tensor, pool: &PoolSpec) -> Result<Tensor, EngineError> {
    pool2d(input, pool, |window| window.fold(f32::NEG_INFINITY, f32::max))
}

/// Average pooling over the in-bounds part of each window.
pub fn avg_pool2d(input: &Tensor, pool: &PoolSpec) -> Result<Tensor, EngineError> {
    pool2d(input, pool, |window| {
        let (sum, n) = window.fold((0.0f32, 0usize), |(s, n), v| (s + v, n + 1));
        sum / n as f32
    })
}

fn pool2d(
    input: &Tensor,
    pool: &PoolSpec,
    reduce: impl Fn(&mut dyn Iterator<Item = f32>) -> f32,
) -> Result<Tensor, EngineError> {
    let shape = input.shape();
    let out = window_shape("pool input", shape, pool.kernel, pool.stride, pool.pad, shape.channels)?;
    let [kh, kw] = pool.kernel;
    let (s, pad) = (pool.stride, pool.pad);
    let mut data = Vec::with_capacity(out.numel());
    for c in 0..shape.channels {
        let plane = input.channel(c);
        for oy in 0..out.height {
            for ox in 0..out.width {
                let mut window = (0..kh)
                    .flat_map(|ky| (0..kw).map(move |kx| (ky, kx)))
                    .filter_map(|(ky, kx)| {
                        let iy = (oy * s + ky).checked_sub(pad)?;
                        let ix = (ox * s + kx).checked_sub(pad)?;
                        (iy < shape.height && ix < shape.width).then(|| plane[iy * shape.width + ix])
                    });
                data.push(reduce(&mut window));
            }
        }
    }
    Tensor::new(out, data)
}

/// Fully connected layer over a 1×1 feature map; `weights` is `[out][in]`.
pub fn dense(
    input: &Tensor,
    weights: &[f32],
    bias: Option<&[f32]>,
    out: usize,
    opts: EngineOptions,
) -> Result<Tensor, EngineError> {
    let shape = input.shape();
    if shape.height != 1 || shape.width != 1 {
        return Err(EngineError::shape("dense input", "spatial 1x1", shape));
    }
    let n = shape.channels;
    if weights.len() != n * out {
        return Err(EngineError::shape("dense weight length", n * out, weights.len()));
    }
    if let Some(b) = bias {
        if b.len() != out {
            return Err(EngineError::shape("dense bias length", out, b.len()));
        }
    }
    let x = input.data();
    let row = |o: usize| -> f32 {
        let w = &weights[o * n..(o + 1) * n];
        let b = bias.map_or(0.0, |b| b[o]);
        match opts.accumulate {
            Precision::F32 => {
                let mut acc = 0.0f32;
                w.iter().zip(x).for_each(|(&w, &v)| Accum::mul_add(&mut acc, w, v));
                acc + b
            }
            Precision::F64 => {
                let mut acc = 0.0f64;
                w.iter().zip(x).for_each(|(&w, &v)| Accum::mul_add(&mut acc, w, v));
                (acc + b as f64) as f32
            }
        }
    };
    Tensor::new(TensorShape::new(out, 1, 1), (0..out).map(row).collect())
}

pub fn relu_in_place(t: &mut Tensor) {
    t.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
}

pub fn add_in_place(acc: &mut Tensor, other: &Tensor) -> Result<(), EngineError> {
    if acc.shape() != other.shape() {
        return Err(EngineError::shapes("residual add", acc.shape(), other.shape()));
    }
    acc.data_mut().iter_mut().zip(other.data()).for_each(|(a, b)| *a += b);
    Ok(())
}

/// Numerically stable softmax over every element.
pub fn softmax(input: &Tensor) -> Tensor {
    let max = input.data().iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f64> = input.data().iter().map(|&v| ((v - max) as f64).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let data = exps.into_iter().map(|e| (e / sum) as f32).collect();
    Tensor::new(input.shape(), data).expect("same shape")
}
