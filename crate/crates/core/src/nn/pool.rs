use super::{shape_err, NnError, Tensor};
use crate::scalar::Scalar;

/// Max pooling with window = stride = `kernel`; a trailing partial window is
/// dropped. Returns the output and, per output element, the flat index of
/// the input element it came from (first index on ties).
pub fn maxpool1d_forward<T: Scalar>(input: &Tensor<T>, kernel: usize) -> Result<(Tensor<T>, Vec<usize>), NnError> {
    let (n, c, len) = input.dims3()?;
    if kernel == 0 {
        return Err(shape_err("pool kernel must be positive"));
    }
    let out_len = len / kernel;
    let x = input.data();
    let mut out = Vec::with_capacity(n * c * out_len);
    let mut argmax = Vec::with_capacity(n * c * out_len);
    for row in 0..n * c {
        let base = row * len;
        for t in 0..out_len {
            let start = base + t * kernel;
            let mut best = start;
            for i in start + 1..start + kernel {
                if x[i] > x[best] {
                    best = i;
                }
            }
            out.push(x[best]);
            argmax.push(best);
        }
    }
    Ok((Tensor::from_vec(&[n, c, out_len], out)?, argmax))
}

pub fn maxpool1d_backward<T: Scalar>(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    if argmax.len() != grad_out.len() {
        return Err(shape_err(format!(
            "pool gradient has {} entries, argmax {}",
            grad_out.len(),
            argmax.len()
        )));
    }
    let mut gx = Tensor::zeros(input_shape);
    let data = gx.data_mut();
    for (&i, &g) in argmax.iter().zip(grad_out.data()) {
        data[i] += g;
    }
    Ok(gx)
}
