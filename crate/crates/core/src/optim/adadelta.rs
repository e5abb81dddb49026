use serde::{Deserialize, Serialize};

use super::OptimError;
use crate::nn::{Gradients, NetworkParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaDeltaConfig {
    pub rho: f64,
    pub eps: f64,
    /// Multiplier on the AdaDelta step `dx`.
    pub lr: f64,
}

impl Default for AdaDeltaConfig {
    fn default() -> Self {
        AdaDeltaConfig {
            rho: 0.9,
            eps: 1e-6,
            lr: 0.01,
        }
    }
}

/// Running averages `E[g^2]` and `E[dx^2]`, one array per trainable
/// parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaDeltaState<T> {
    pub config: AdaDeltaConfig,
    pub sq_grad: Vec<Vec<T>>,
    pub sq_update: Vec<Vec<T>>,
}

impl<T: Scalar> AdaDeltaState<T> {
    pub fn new(sizes: &[usize], config: AdaDeltaConfig) -> Self {
        AdaDeltaState {
            config,
            sq_grad: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            sq_update: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn for_params(params: &NetworkParams<T>, config: AdaDeltaConfig) -> Self {
        Self::new(&params.trainable_sizes(), config)
    }

    /// Applies one update to every array whose gradient is `Some`; arrays
    /// with `None` (frozen) and their accumulators are untouched. All
    /// gradients are checked before anything is modified.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[Option<&[T]>]) -> Result<(), OptimError> {
        if params.len() != grads.len() || params.len() != self.sq_grad.len() {
            return Err(OptimError::ShapeMismatch(format!(
                "{} parameter arrays, {} gradients, {} accumulators",
                params.len(),
                grads.len(),
                self.sq_grad.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if let Some(g) = g {
                if g.len() != p.len() || p.len() != self.sq_grad[i].len() {
                    return Err(OptimError::ShapeMismatch(format!(
                        "array {i}: {} values, {} gradients, {} accumulators",
                        p.len(),
                        g.len(),
                        self.sq_grad[i].len()
                    )));
                }
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(OptimError::NonFiniteGradient(i));
                }
            }
        }
        let rho = T::of(self.config.rho);
        let one_minus = T::one() - rho;
        let eps = T::of(self.config.eps);
        let lr = T::of(self.config.lr);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let Some(g) = g else { continue };
            let eg = &mut self.sq_grad[i];
            let ex = &mut self.sq_update[i];
            for j in 0..g.len() {
                eg[j] = rho * eg[j] + one_minus * g[j] * g[j];
                let dx = -((ex[j] + eps).sqrt() / (eg[j] + eps).sqrt()) * g[j];
                ex[j] = rho * ex[j] + one_minus * dx * dx;
                p[j] += lr * dx;
            }
        }
        Ok(())
    }
}

/// One AdaDelta update of the network; frozen (absent) gradients leave
/// their parameters unchanged.
pub fn adadelta_step<T: Scalar>(
    params: &mut NetworkParams<T>,
    grads: &Gradients<T>,
    state: &mut AdaDeltaState<T>,
) -> Result<(), OptimError> {
    let n_conv = params.conv.len();
    let mut views: Vec<&mut [T]> = params.trainable_mut().into_iter().map(|(_, v)| v).collect();
    state.step(&mut views, &grads.flat(n_conv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step1(x: &mut f64, g: f64, st: &mut AdaDeltaState<f64>) {
        let mut p = [*x];
        st.step(&mut [&mut p[..]], &[Some(&[g][..])]).unwrap();
        *x = p[0];
    }

    #[test]
    fn first_step_example() {
        let mut st = AdaDeltaState::new(&[1], AdaDeltaConfig::default());
        let mut x = 0.0;
        step1(&mut x, 1.0, &mut st);
        // E[g^2] = 0.1, dx = -sqrt(1e-6) / sqrt(0.1 + 1e-6)
        let dx = -(1e-6f64).sqrt() / (0.1f64 + 1e-6).sqrt();
        assert!((dx + 3.1623e-3).abs() < 1e-7);
        assert!((x - 0.01 * dx).abs() < 1e-15);
        assert!((x + 3.1623e-5).abs() < 1e-9);
        assert!((st.sq_update[0][0] - 0.1 * dx * dx).abs() < 1e-18);
    }

    #[test]
    fn zero_gradient_only_decays() {
        let mut st = AdaDeltaState::new(&[2], AdaDeltaConfig::default());
        st.sq_grad[0] = vec![1.0, 2.0];
        st.sq_update[0] = vec![3.0, 4.0];
        let mut p = [5.0, -6.0];
        st.step(&mut [&mut p[..]], &[Some(&[0.0, 0.0][..])]).unwrap();
        assert_eq!(p, [5.0, -6.0]);
        assert_eq!(st.sq_grad[0], vec![0.9, 1.8]);
        assert_eq!(st.sq_update[0], vec![0.9 * 3.0, 0.9 * 4.0]);
    }

    #[test]
    fn updates_oppose_gradient_and_lr_zero_is_inert() {
        let mut st = AdaDeltaState::new(&[4], AdaDeltaConfig::default());
        let g = [0.5f64, -2.0, 0.0, 1e-3];
        let before = [1.0f64; 4];
        let mut p = before;
        st.step(&mut [&mut p[..]], &[Some(&g[..])]).unwrap();
        for i in 0..4 {
            let d = p[i] - before[i];
            if d != 0.0 {
                assert!(d.signum() == -g[i].signum());
            }
        }
        let mut st = AdaDeltaState::new(&[4], AdaDeltaConfig { lr: 0.0, ..Default::default() });
        let mut p = before;
        for _ in 0..5 {
            st.step(&mut [&mut p[..]], &[Some(&g[..])]).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn decreases_convex_quadratic() {
        let mut st = AdaDeltaState::new(&[1], AdaDeltaConfig::default());
        let mut x: f64 = 0.3;
        for _ in 0..20 {
            let f0 = x * x;
            let g = 2.0 * x;
            step1(&mut x, g, &mut st);
            assert!(x * x < f0);
        }
    }

    #[test]
    fn errors_leave_state_untouched() {
        let mut st = AdaDeltaState::<f64>::new(&[2, 1], AdaDeltaConfig::default());
        let mut a = [1.0, 2.0];
        let mut b = [3.0];
        let snapshot = st.clone();
        let r = st.step(&mut [&mut a[..], &mut b[..]], &[Some(&[0.1, 0.2][..]), Some(&[f64::NAN][..])]);
        assert!(matches!(r, Err(OptimError::NonFiniteGradient(1))));
        assert_eq!(a, [1.0, 2.0]);
        assert_eq!(st, snapshot);
        let r = st.step(&mut [&mut a[..], &mut b[..]], &[Some(&[0.1][..]), None]);
        assert!(matches!(r, Err(OptimError::ShapeMismatch(_))));
    }

    #[test]
    fn none_gradients_are_skipped() {
        let mut st = AdaDeltaState::<f64>::new(&[1, 1], AdaDeltaConfig::default());
        let mut a = [1.0];
        let mut b = [1.0];
        st.step(&mut [&mut a[..], &mut b[..]], &[None, Some(&[1.0][..])]).unwrap();
        assert_eq!(a, [1.0]);
        assert!(b[0] < 1.0);
        assert_eq!(st.sq_grad[0], vec![0.0]);
    }
}
