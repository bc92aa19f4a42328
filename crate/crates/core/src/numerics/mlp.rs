//! Affine/ReLU stacks with a hand-written backward pass.
//!
//! Parameters are a flat list of tensors in layer order: for each layer the
//! weight matrix `[d_in x d_out]` followed, when biases are enabled, by the bias
//! row `[1 x d_out]`. Hidden layers apply the activation; the last layer emits
//! logits.

use serde::{Deserialize, Serialize};

use super::{affine_backward, affine_forward, relu_backward, relu_forward, softmax_cross_entropy};
use super::{GaussianRng, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkSpec {
    pub layer_dims: Vec<usize>,
    pub activation: Activation,
    pub bias_included: bool,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            layer_dims: vec![2, 16, 16, 3],
            activation: Activation::Relu,
            bias_included: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamShape {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

impl ParamShape {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Activations kept from the forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer; `inputs[0]` is the batch itself.
    inputs: Vec<Matrix>,
    /// Pre-activation output of each hidden layer.
    pre_activations: Vec<Matrix>,
    pub logits: Matrix,
}

impl NetworkSpec {
    pub fn new(layer_dims: Vec<usize>) -> Result<Self> {
        let spec = Self {
            layer_dims,
            ..Self::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 {
            return Err(Error::InvalidConfig("layer_dims needs at least input and output".into()));
        }
        if self.layer_dims.contains(&0) {
            return Err(Error::InvalidConfig("layer_dims entries must be >= 1".into()));
        }
        Ok(())
    }

    pub fn num_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("validated")
    }

    pub fn param_shapes(&self) -> Vec<ParamShape> {
        let mut shapes = Vec::new();
        for (l, pair) in self.layer_dims.windows(2).enumerate() {
            shapes.push(ParamShape {
                name: format!("layer{l}.weight"),
                rows: pair[0],
                cols: pair[1],
            });
            if self.bias_included {
                shapes.push(ParamShape {
                    name: format!("layer{l}.bias"),
                    rows: 1,
                    cols: pair[1],
                });
            }
        }
        shapes
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes().iter().map(ParamShape::len).sum()
    }

    fn tensors_per_layer(&self) -> usize {
        if self.bias_included {
            2
        } else {
            1
        }
    }

    fn check_params(&self, params: &[Matrix]) -> Result<()> {
        let shapes = self.param_shapes();
        if shapes.len() != params.len() {
            return Err(Error::RecordLength {
                expected: shapes.len(),
                got: params.len(),
            });
        }
        for (s, p) in shapes.iter().zip(params) {
            if (s.rows, s.cols) != p.shape() {
                return Err(Error::ShapeMismatch {
                    op: "network parameters",
                    left: (s.rows, s.cols),
                    right: p.shape(),
                });
            }
        }
        Ok(())
    }

    fn layer<'a>(&self, params: &'a [Matrix], l: usize, zeros: &'a [f64]) -> (&'a Matrix, &'a [f64]) {
        let k = self.tensors_per_layer();
        let w = &params[l * k];
        let b = if self.bias_included {
            params[l * k + 1].data()
        } else {
            &zeros[..w.cols()]
        };
        (w, b)
    }

    pub fn forward(&self, params: &[Matrix], input: &Matrix) -> Result<ForwardCache> {
        self.check_params(params)?;
        let zeros = vec![0.0; self.layer_dims.iter().copied().max().unwrap_or(0)];
        let mut inputs = vec![input.clone()];
        let mut pre_activations = Vec::new();
        let last = self.num_layers() - 1;
        let mut logits = None;
        for l in 0..self.num_layers() {
            let (w, b) = self.layer(params, l, &zeros);
            let z = affine_forward(&inputs[l], w, b)?;
            if l == last {
                logits = Some(z);
            } else {
                let a = match self.activation {
                    Activation::Relu => relu_forward(&z),
                };
                pre_activations.push(z);
                inputs.push(a);
            }
        }
        Ok(ForwardCache {
            inputs,
            pre_activations,
            logits: logits.expect("at least one layer"),
        })
    }

    pub fn logits(&self, params: &[Matrix], input: &Matrix) -> Result<Matrix> {
        Ok(self.forward(params, input)?.logits)
    }

    /// Gradients w.r.t. every parameter tensor, in parameter order.
    pub fn backward(&self, params: &[Matrix], cache: &ForwardCache, grad_logits: &Matrix) -> Result<Vec<Matrix>> {
        self.check_params(params)?;
        let zeros = vec![0.0; self.layer_dims.iter().copied().max().unwrap_or(0)];
        let k = self.tensors_per_layer();
        let mut grads: Vec<Matrix> = params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect();
        let mut grad = grad_logits.clone();
        for l in (0..self.num_layers()).rev() {
            let (w, _) = self.layer(params, l, &zeros);
            let g = affine_backward(&grad, &cache.inputs[l], w)?;
            grads[l * k] = g.weights;
            if self.bias_included {
                grads[l * k + 1] = Matrix::new(1, g.bias.len(), g.bias)?;
            }
            if l > 0 {
                grad = match self.activation {
                    Activation::Relu => relu_backward(&g.input, &cache.pre_activations[l - 1])?,
                };
            }
        }
        Ok(grads)
    }

    /// Mean cross-entropy and its parameter gradients for one batch.
    pub fn loss_and_grads(&self, params: &[Matrix], input: &Matrix, labels: &[usize]) -> Result<(f64, Vec<Matrix>)> {
        let cache = self.forward(params, input)?;
        let (loss, grad_logits) = softmax_cross_entropy(&cache.logits, labels)?;
        let grads = self.backward(params, &cache, &grad_logits)?;
        Ok((loss, grads))
    }
}

/// A point-estimate network.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: NetworkSpec,
    pub params: Vec<Matrix>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init(spec: NetworkSpec, rng: &mut GaussianRng) -> Result<Self> {
        spec.validate()?;
        let params = spec
            .param_shapes()
            .iter()
            .map(|s| {
                if s.name.ends_with(".bias") {
                    Matrix::zeros(s.rows, s.cols)
                } else {
                    let limit = (6.0 / (s.rows + s.cols) as f64).sqrt();
                    let data = (0..s.len()).map(|_| (2.0 * rng.uniform() - 1.0) * limit).collect();
                    Matrix::new(s.rows, s.cols, data).expect("shape from spec")
                }
            })
            .collect();
        Ok(Self { spec, params })
    }

    pub fn from_params(spec: NetworkSpec, params: Vec<Matrix>) -> Result<Self> {
        spec.validate()?;
        spec.check_params(&params)?;
        Ok(Self { spec, params })
    }

    pub fn logits(&self, input: &Matrix) -> Result<Matrix> {
        self.spec.logits(&self.params, input)
    }
}
