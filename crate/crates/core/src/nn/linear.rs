use super::{shape_err, NnError, Tensor};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct LinearGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Vec<T>,
}

fn check<T: Scalar>(input: &Tensor<T>, weight: &Tensor<T>, bias_len: usize) -> Result<(usize, usize, usize), NnError> {
    let (n, f_in) = input.dims2()?;
    let (f_out, w_in) = weight.dims2()?;
    if w_in != f_in || bias_len != f_out {
        return Err(shape_err(format!(
            "linear weight {:?} / bias {bias_len} incompatible with input {:?}",
            weight.shape(),
            input.shape()
        )));
    }
    Ok((n, f_in, f_out))
}

/// `y = x W^T + b` with `W` of shape `(out, in)`.
pub fn linear_forward<T: Scalar>(input: &Tensor<T>, weight: &Tensor<T>, bias: &[T]) -> Result<Tensor<T>, NnError> {
    let (n, f_in, f_out) = check(input, weight, bias.len())?;
    let w = weight.data();
    let mut out = Vec::with_capacity(n * f_out);
    for x in input.data().chunks_exact(f_in).take(n) {
        for o in 0..f_out {
            let row = &w[o * f_in..(o + 1) * f_in];
            let mut acc = bias[o];
            for (&a, &b) in row.iter().zip(x) {
                acc += a * b;
            }
            out.push(acc);
        }
    }
    Tensor::from_vec(&[n, f_out], out)
}

pub fn linear_backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<LinearGrads<T>, NnError> {
    let (f_out_w, _) = weight.dims2()?;
    let (n, f_in, f_out) = check(input, weight, f_out_w)?;
    if grad_out.shape() != [n, f_out] {
        return Err(shape_err(format!(
            "linear output gradient {:?}, expected {:?}",
            grad_out.shape(),
            [n, f_out]
        )));
    }
    let w = weight.data();
    let x = input.data();
    let gy = grad_out.data();
    let mut gx = vec![T::zero(); n * f_in];
    let mut gw = vec![T::zero(); f_out * f_in];
    let mut gb = vec![T::zero(); f_out];
    for s in 0..n {
        let xs = &x[s * f_in..(s + 1) * f_in];
        let gxs = &mut gx[s * f_in..(s + 1) * f_in];
        for o in 0..f_out {
            let g = gy[s * f_out + o];
            gb[o] += g;
            let row = &w[o * f_in..(o + 1) * f_in];
            let grow = &mut gw[o * f_in..(o + 1) * f_in];
            for i in 0..f_in {
                grow[i] += g * xs[i];
                gxs[i] += g * row[i];
            }
        }
    }
    Ok(LinearGrads {
        input: Tensor::from_vec(&[n, f_in], gx)?,
        weight: Tensor::from_vec(&[f_out, f_in], gw)?,
        bias: gb,
    })
}
