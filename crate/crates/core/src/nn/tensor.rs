use super::{shape_err, NnError};
use crate::scalar::Scalar;

/// Row-major dense tensor of shape `(batch, channels, length)` or
/// `(batch, features)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self, NnError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(shape_err(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dims3(&self) -> Result<(usize, usize, usize), NnError> {
        match self.shape[..] {
            [n, c, l] => Ok((n, c, l)),
            _ => Err(shape_err(format!("expected a 3-D tensor, got shape {:?}", self.shape))),
        }
    }

    pub fn dims2(&self) -> Result<(usize, usize), NnError> {
        match self.shape[..] {
            [n, f] => Ok((n, f)),
            _ => Err(shape_err(format!("expected a 2-D tensor, got shape {:?}", self.shape))),
        }
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Self, NnError> {
        Self::from_vec(shape, self.data)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}
