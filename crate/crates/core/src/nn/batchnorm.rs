use super::{shape_err, Mode, NnError, Tensor};
use crate::scalar::Scalar;

/// Per-channel affine parameters and running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
}

impl<T: Scalar> BatchNormParams<T> {
    pub fn new(channels: usize) -> Self {
        BatchNormParams {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// `running <- (1 - momentum) running + momentum batch`, using the
    /// unbiased batch variance.
    pub fn update_running(&mut self, cache: &BnCache<T>, momentum: f64) {
        if cache.mode != Mode::Train {
            return;
        }
        let m = T::of(momentum);
        let keep = T::one() - m;
        let n = cache.count as f64;
        let unbias = T::of(n / (n - 1.0));
        for c in 0..self.channels() {
            self.running_mean[c] = keep * self.running_mean[c] + m * cache.mean[c];
            self.running_var[c] = keep * self.running_var[c] + m * cache.var[c] * unbias;
        }
    }
}

/// Intermediates kept by the forward pass. `mean` and `var` are the
/// statistics actually used for normalization (biased batch variance in
/// train mode, running statistics in eval mode).
#[derive(Debug, Clone)]
pub struct BnCache<T> {
    pub mode: Mode,
    pub shape: Vec<usize>,
    pub x_hat: Vec<T>,
    pub inv_std: Vec<T>,
    pub mean: Vec<T>,
    pub var: Vec<T>,
    pub count: usize,
}

pub fn batchnorm1d_forward<T: Scalar>(
    input: &Tensor<T>,
    params: &BatchNormParams<T>,
    eps: f64,
    mode: Mode,
) -> Result<(Tensor<T>, BnCache<T>), NnError> {
    let (n, c, len) = input.dims3()?;
    if params.channels() != c {
        return Err(shape_err(format!(
            "batch norm has {} channels, input has {c}",
            params.channels()
        )));
    }
    let count = n * len;
    let x = input.data();
    let (mean, var) = match mode {
        Mode::Train => {
            if count < 2 {
                return Err(NnError::DegenerateBatch(count));
            }
            let m = T::of_usize(count);
            let mut mean = vec![T::zero(); c];
            let mut var = vec![T::zero(); c];
            for ch in 0..c {
                let mut s = T::zero();
                for b in 0..n {
                    s += x[(b * c + ch) * len..(b * c + ch + 1) * len].iter().copied().sum::<T>();
                }
                let mu = s / m;
                let mut q = T::zero();
                for b in 0..n {
                    for &v in &x[(b * c + ch) * len..(b * c + ch + 1) * len] {
                        let d = v - mu;
                        q += d * d;
                    }
                }
                mean[ch] = mu;
                var[ch] = q / m;
            }
            (mean, var)
        }
        Mode::Eval => (params.running_mean.clone(), params.running_var.clone()),
    };
    let eps = T::of(eps);
    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let mut x_hat = vec![T::zero(); x.len()];
    let mut y = vec![T::zero(); x.len()];
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * len;
            for t in base..base + len {
                let h = (x[t] - mean[ch]) * inv_std[ch];
                x_hat[t] = h;
                y[t] = params.gamma[ch] * h + params.beta[ch];
            }
        }
    }
    let cache = BnCache {
        mode,
        shape: input.shape().to_vec(),
        x_hat,
        inv_std,
        mean,
        var,
        count,
    };
    Ok((Tensor::from_vec(input.shape(), y)?, cache))
}

/// Returns `(d input, d gamma, d beta)`.
pub fn batchnorm1d_backward<T: Scalar>(
    cache: &BnCache<T>,
    gamma: &[T],
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Vec<T>, Vec<T>), NnError> {
    if grad_out.shape() != cache.shape.as_slice() {
        return Err(shape_err(format!(
            "batch norm gradient {:?}, expected {:?}",
            grad_out.shape(),
            cache.shape
        )));
    }
    let (n, c, len) = grad_out.dims3()?;
    let gy = grad_out.data();
    let mut g_gamma = vec![T::zero(); c];
    let mut g_beta = vec![T::zero(); c];
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * len;
            for t in base..base + len {
                g_beta[ch] += gy[t];
                g_gamma[ch] += gy[t] * cache.x_hat[t];
            }
        }
    }
    let mut gx = vec![T::zero(); gy.len()];
    match cache.mode {
        Mode::Train => {
            // dx = gamma inv_std / m (m dy - sum dy - x_hat sum(dy x_hat))
            let m = T::of_usize(cache.count);
            for ch in 0..c {
                let scale = gamma[ch] * cache.inv_std[ch] / m;
                for b in 0..n {
                    let base = (b * c + ch) * len;
                    for t in base..base + len {
                        gx[t] = scale * (m * gy[t] - g_beta[ch] - cache.x_hat[t] * g_gamma[ch]);
                    }
                }
            }
        }
        Mode::Eval => {
            for b in 0..n {
                for ch in 0..c {
                    let scale = gamma[ch] * cache.inv_std[ch];
                    let base = (b * c + ch) * len;
                    for t in base..base + len {
                        gx[t] = scale * gy[t];
                    }
                }
            }
        }
    }
    Ok((Tensor::from_vec(&cache.shape, gx)?, g_gamma, g_beta))
}
