use super::{shape_err, Mode, NnError, Tensor};
use crate::rng::Prng;
use crate::scalar::Scalar;

pub fn relu_forward<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let data = x.data().iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect();
    Tensor::from_vec(x.shape(), data).expect("same shape")
}

/// Passes the gradient where the input was strictly positive (0 at x = 0).
pub fn relu_backward<T: Scalar>(x: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    if x.shape() != grad_out.shape() {
        return Err(shape_err(format!(
            "relu input {:?} vs gradient {:?}",
            x.shape(),
            grad_out.shape()
        )));
    }
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&v, &g)| if v > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::from_vec(x.shape(), data)
}

/// Inverted dropout. Returns the output and, in train mode, the per-element
/// scale (0 or `1 / (1 - p)`) needed by the backward pass.
pub fn dropout_forward<T: Scalar>(
    x: &Tensor<T>,
    p: f64,
    mode: Mode,
    rng: &mut Prng,
) -> Result<(Tensor<T>, Option<Vec<T>>), NnError> {
    if !(0.0..1.0).contains(&p) {
        return Err(NnError::InvalidProbability(p));
    }
    if mode == Mode::Eval || p == 0.0 {
        return Ok((x.clone(), None));
    }
    let keep = T::of(1.0 / (1.0 - p));
    let mask: Vec<T> = (0..x.len())
        .map(|_| if rng.uniform() < p { T::zero() } else { keep })
        .collect();
    let data = x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
    Ok((Tensor::from_vec(x.shape(), data)?, Some(mask)))
}

pub fn dropout_backward<T: Scalar>(mask: Option<&[T]>, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    match mask {
        None => Ok(grad_out.clone()),
        Some(m) if m.len() == grad_out.len() => {
            let data = grad_out.data().iter().zip(m).map(|(&g, &k)| g * k).collect();
            Tensor::from_vec(grad_out.shape(), data)
        }
        Some(m) => Err(shape_err(format!(
            "dropout mask has {} entries, gradient {}",
            m.len(),
            grad_out.len()
        ))),
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    let (n, k) = logits.dims2()?;
    let mut out = Vec::with_capacity(n * k);
    for row in logits.data().chunks_exact(k.max(1)).take(n) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = row.iter().map(|&v| (v - max).exp()).collect();
        let total: T = exps.iter().copied().sum();
        out.extend(exps.into_iter().map(|e| e / total));
    }
    Tensor::from_vec(logits.shape(), out)
}
