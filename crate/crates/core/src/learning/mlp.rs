//! Feed-forward networks with tanh hidden layers and a linear output layer,
//! with exact reverse-mode gradients. Samples are matrix columns.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out × in`.
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Layer inputs and hidden activations recorded by [`Mlp::forward_cached`].
#[derive(Debug, Clone)]
pub struct Cache {
    inputs: Vec<DMatrix<f64>>,
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let layers = sizes.windows(2).map(|s| Layer { w: DMatrix::zeros(s[1], s[0]), b: DVector::zeros(s[1]) }).collect();
        Self { layers }
    }

    /// Gaussian weights with std `1/sqrt(fan_in)` (times `output_gain` on the
    /// last layer), zero biases.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        let n = net.layers.len();
        for (k, layer) in net.layers.iter_mut().enumerate() {
            let gain = if k + 1 == n { output_gain } else { 1.0 };
            let std = gain / (layer.w.ncols() as f64).sqrt();
            for v in layer.w.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *v = std * z;
            }
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").w.nrows()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.w.nrows()));
        s
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn check(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.nrows() != self.input_dim() {
            return Err(Error::ShapeMismatch { expected: self.input_dim(), got: x.nrows() });
        }
        Ok(())
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Cache)> {
        self.check(x)?;
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut h = x.clone();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = &layer.w * &h;
            for mut col in z.column_iter_mut() {
                col += &layer.b;
            }
            if k + 1 < n {
                z.apply(|v| *v = v.tanh());
            }
            inputs.push(h);
            h = z;
        }
        Ok((h, Cache { inputs }))
    }

    /// Gradients of a scalar loss with respect to every parameter, given
    /// `d_out = ∂L/∂output`. Returns the gradient (shaped like `self`) and
    /// `∂L/∂input`.
    pub fn backward(&self, cache: &Cache, d_out: &DMatrix<f64>) -> (Mlp, DMatrix<f64>) {
        let n = self.layers.len();
        let mut grads = Vec::with_capacity(n);
        let mut delta = d_out.clone();
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            let input = &cache.inputs[k];
            let gw = &delta * input.transpose();
            let gb = delta.column_sum();
            grads.push(Layer { w: gw, b: gb });
            let mut d_in = layer.w.transpose() * &delta;
            if k > 0 {
                // input of layer k is tanh output of layer k-1
                d_in.zip_apply(input, |d, a| *d *= 1.0 - a * a);
            }
            delta = d_in;
        }
        grads.reverse();
        (Mlp { layers: grads }, delta)
    }

    /// Parameters in a fixed order: per layer, weights (column-major) then bias.
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| [l.w.as_slice(), l.b.as_slice()]).collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| [l.w.as_mut_slice(), l.b.as_mut_slice()]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}
