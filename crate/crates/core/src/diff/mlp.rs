use rand::Rng;

use super::Parameterized;
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector, Scalar};

/// Fully connected layer `z = W·a + b`, `W` stored as `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub weight: DenseMatrix<T>,
    pub bias: DenseVector<T>,
}

/// Multi-layer perceptron: tanh on hidden layers, identity on the output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    layers: Vec<DenseLayer<T>>,
}

/// Layer outputs saved by the forward pass. `acts[0]` is the input batch,
/// `acts[l + 1]` the (post-activation) output of layer `l`.
#[derive(Debug, Clone)]
pub struct MlpCache<T> {
    acts: Vec<DenseMatrix<T>>,
}

impl<T> MlpCache<T> {
    pub fn batch_size(&self) -> usize
    where
        T: Scalar,
    {
        self.acts[0].rows()
    }
}

impl<T: Scalar> MlpModel<T> {
    /// Glorot-uniform weights, zero biases. `dims = [in, hidden.., out]`.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::BadDimensions(format!("mlp dims {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                DenseLayer {
                    weight: DenseMatrix::from_fn(fan_out, fan_in, |_, _| {
                        T::lit(rng.random_range(-a..=a))
                    }),
                    bias: DenseVector::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::BadDimensions(format!("mlp dims {dims:?}")));
        }
        Self::from_layers(
            dims.windows(2)
                .map(|w| DenseLayer {
                    weight: DenseMatrix::zeros(w[1], w[0]),
                    bias: DenseVector::zeros(w[1]),
                })
                .collect(),
        )
    }

    pub fn from_layers(layers: Vec<DenseLayer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::BadDimensions("mlp needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weight.rows() != l.bias.len() {
                return Err(Error::dims(format!("layer {i}: bias length")));
            }
            if !l.weight.is_finite() || !l.bias.is_finite() {
                return Err(Error::NonFinite(format!("layer {i} parameters")));
            }
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].weight.rows() != w[1].weight.cols() {
                return Err(Error::dims(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    w[0].weight.rows(),
                    i + 1,
                    w[1].weight.cols()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer<T>] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weight.rows()
    }

    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.weight.rows()))
            .collect()
    }

    pub fn forward(&self, features: &[T]) -> Result<(DenseVector<T>, MlpCache<T>)> {
        let (out, cache) = self.forward_batch(&DenseMatrix::row_vector(features))?;
        Ok((out.row(0).into(), cache))
    }

    pub fn backward(
        &self,
        cache: &MlpCache<T>,
        d_output: &[T],
    ) -> Result<(MlpModel<T>, DenseVector<T>)> {
        let (grads, d_in) = self.backward_batch(cache, &DenseMatrix::row_vector(d_output))?;
        Ok((grads, d_in.row(0).into()))
    }

    /// Rows of `x` are independent samples.
    pub fn forward_batch(&self, x: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, MlpCache<T>)> {
        if x.cols() != self.input_dim() {
            return Err(Error::dims(format!(
                "mlp expects {} features, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = acts[l].matmul_tr(&layer.weight)?;
            for i in 0..z.rows() {
                for (zij, &b) in z.row_mut(i).iter_mut().zip(layer.bias.iter()) {
                    let v = *zij + b;
                    *zij = if l < last { v.tanh() } else { v };
                }
            }
            acts.push(z);
        }
        let out = acts[acts.len() - 1].clone();
        Ok((out, MlpCache { acts }))
    }

    pub fn backward_batch(
        &self,
        cache: &MlpCache<T>,
        d_output: &DenseMatrix<T>,
    ) -> Result<(MlpModel<T>, DenseMatrix<T>)> {
        if cache.acts.len() != self.layers.len() + 1 {
            return Err(Error::dims("cache does not belong to this model"));
        }
        let out = &cache.acts[self.layers.len()];
        if d_output.shape() != out.shape() {
            return Err(Error::dims(format!(
                "output gradient {:?} vs output {:?}",
                d_output.shape(),
                out.shape()
            )));
        }
        let last = self.layers.len() - 1;
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = d_output.clone();
        for l in (0..self.layers.len()).rev() {
            if l < last {
                let a = &cache.acts[l + 1];
                for (d, &y) in delta.as_mut_slice().iter_mut().zip(a.as_slice()) {
                    *d = *d * (T::one() - y * y);
                }
            }
            let weight_grad = delta.tr_matmul(&cache.acts[l])?;
            let mut bias_grad = DenseVector::zeros(delta.cols());
            for i in 0..delta.rows() {
                bias_grad.axpy(T::one(), delta.row(i));
            }
            grads.push(DenseLayer {
                weight: weight_grad,
                bias: bias_grad,
            });
            delta = delta.matmul(&self.layers[l].weight)?;
        }
        grads.reverse();
        Ok((MlpModel { layers: grads }, delta))
    }
}

impl<T: Scalar> Parameterized<T> for MlpModel<T> {
    fn param_slices(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    fn param_shapes(&self) -> Vec<(String, usize, usize)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                [
                    (format!("layer{i}.weight"), l.weight.rows(), l.weight.cols()),
                    (format!("layer{i}.bias"), l.bias.len(), 1),
                ]
            })
            .collect()
    }
}
