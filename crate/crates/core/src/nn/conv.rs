use rayon::prelude::*;

use super::{shape_err, NnError, Tensor};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Vec<T>,
}

fn check(input: &Tensor<impl Scalar>, weight: &Tensor<impl Scalar>, bias_len: usize) -> Result<(usize, usize, usize, usize, usize), NnError> {
    let (n, c_in, len) = input.dims3()?;
    let (c_out, w_in, k) = weight.dims3()?;
    if w_in != c_in {
        return Err(shape_err(format!("conv weight expects {w_in} input channels, input has {c_in}")));
    }
    if k == 0 || k % 2 == 0 {
        return Err(shape_err(format!("conv kernel size must be odd, got {k}")));
    }
    if bias_len != c_out {
        return Err(shape_err(format!("conv bias has {bias_len} entries for {c_out} output channels")));
    }
    Ok((n, c_in, len, c_out, k))
}

/// Output range `t` for kernel tap `j` so that `t + j - pad` is inside
/// `0..len`, with the matching input offset. `None` when the tap never
/// touches the signal (kernel wider than the padded input).
#[inline]
fn tap_range(j: usize, pad: usize, len: usize) -> Option<(usize, usize, usize)> {
    let lo = pad.saturating_sub(j);
    let hi = (len + pad).saturating_sub(j).min(len);
    (lo < hi).then(|| (lo, hi, lo + j - pad))
}

/// Stride-1 convolution with zero "same" padding of `(k - 1) / 2`.
/// Weights are `(out, in, k)`.
pub fn conv1d_forward<T: Scalar>(input: &Tensor<T>, weight: &Tensor<T>, bias: &[T]) -> Result<Tensor<T>, NnError> {
    let (n, c_in, len, c_out, k) = check(input, weight, bias.len())?;
    let pad = (k - 1) / 2;
    let w = weight.data();
    let mut out = vec![T::zero(); n * c_out * len];
    out.par_chunks_mut(c_out * len)
        .zip(input.data().par_chunks(c_in * len))
        .for_each(|(y, x)| {
            for o in 0..c_out {
                let yo = &mut y[o * len..(o + 1) * len];
                yo.iter_mut().for_each(|v| *v = bias[o]);
                for c in 0..c_in {
                    let xc = &x[c * len..(c + 1) * len];
                    for j in 0..k {
                        let wv = w[(o * c_in + c) * k + j];
                        let Some((lo, hi, shift)) = tap_range(j, pad, len) else {
                            continue;
                        };
                        for (yt, &xv) in yo[lo..hi].iter_mut().zip(&xc[shift..shift + (hi - lo)]) {
                            *yt += wv * xv;
                        }
                    }
                }
            }
        });
    Tensor::from_vec(&[n, c_out, len], out)
}

/// Gradients of [`conv1d_forward`]. Per-sample weight gradients are summed
/// in sample order, so the result does not depend on the thread count.
pub fn conv1d_backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>, NnError> {
    let (c_out_w, _, _) = weight.dims3()?;
    let (n, c_in, len, c_out, k) = check(input, weight, c_out_w)?;
    if grad_out.shape() != [n, c_out, len] {
        return Err(shape_err(format!(
            "conv output gradient {:?}, expected {:?}",
            grad_out.shape(),
            [n, c_out, len]
        )));
    }
    let pad = (k - 1) / 2;
    let w = weight.data();

    let per_sample: Vec<(Vec<T>, Vec<T>, Vec<T>)> = input
        .data()
        .par_chunks(c_in * len)
        .zip(grad_out.data().par_chunks(c_out * len))
        .map(|(x, gy)| {
            let mut gx = vec![T::zero(); c_in * len];
            let mut gw = vec![T::zero(); c_out * c_in * k];
            let mut gb = vec![T::zero(); c_out];
            for o in 0..c_out {
                let gyo = &gy[o * len..(o + 1) * len];
                gb[o] = gyo.iter().copied().sum();
                for c in 0..c_in {
                    let xc = &x[c * len..(c + 1) * len];
                    let gxc = &mut gx[c * len..(c + 1) * len];
                    for j in 0..k {
                        let idx = (o * c_in + c) * k + j;
                        let Some((lo, hi, shift)) = tap_range(j, pad, len) else {
                            continue;
                        };
                        let span = hi - lo;
                        let mut acc = T::zero();
                        for (&g, &xv) in gyo[lo..hi].iter().zip(&xc[shift..shift + span]) {
                            acc += g * xv;
                        }
                        gw[idx] += acc;
                        let wv = w[idx];
                        for (gxt, &g) in gxc[shift..shift + span].iter_mut().zip(&gyo[lo..hi]) {
                            *gxt += wv * g;
                        }
                    }
                }
            }
            (gx, gw, gb)
        })
        .collect();

    let mut gx_all = Vec::with_capacity(n * c_in * len);
    let mut gw_all = vec![T::zero(); c_out * c_in * k];
    let mut gb_all = vec![T::zero(); c_out];
    for (gx, gw, gb) in per_sample {
        gx_all.extend(gx);
        gw_all.iter_mut().zip(&gw).for_each(|(a, &b)| *a += b);
        gb_all.iter_mut().zip(&gb).for_each(|(a, &b)| *a += b);
    }
    Ok(ConvGrads {
        input: Tensor::from_vec(&[n, c_in, len], gx_all)?,
        weight: Tensor::from_vec(&[c_out, c_in, k], gw_all)?,
        bias: gb_all,
    })
}
