use super::Matrix;
use crate::{Error, Result};

/// Gradients of one affine layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineGrads {
    pub input: Matrix,
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// `out[b, j] = sum_i input[b, i] * weights[i, j] + bias[j]`.
pub fn affine_forward(input: &Matrix, weights: &Matrix, bias: &[f64]) -> Result<Matrix> {
    if input.cols() != weights.rows() {
        return Err(Error::ShapeMismatch {
            op: "affine_forward input x weights",
            left: input.shape(),
            right: weights.shape(),
        });
    }
    if bias.len() != weights.cols() {
        return Err(Error::ShapeMismatch {
            op: "affine_forward bias",
            left: weights.shape(),
            right: (1, bias.len()),
        });
    }
    let (batch, d_in, d_out) = (input.rows(), input.cols(), weights.cols());
    let mut out = Matrix::zeros(batch, d_out);
    let w = weights.data();
    for b in 0..batch {
        let x = input.row(b);
        let o = &mut out.data_mut()[b * d_out..(b + 1) * d_out];
        o.copy_from_slice(bias);
        for (i, &xi) in x.iter().enumerate().take(d_in) {
            let wrow = &w[i * d_out..(i + 1) * d_out];
            for (oj, &wij) in o.iter_mut().zip(wrow) {
                *oj += xi * wij;
            }
        }
    }
    Ok(out)
}

/// Reverse-mode gradients of [`affine_forward`].
pub fn affine_backward(grad_out: &Matrix, input: &Matrix, weights: &Matrix) -> Result<AffineGrads> {
    if input.cols() != weights.rows() {
        return Err(Error::ShapeMismatch {
            op: "affine_backward input x weights",
            left: input.shape(),
            right: weights.shape(),
        });
    }
    if grad_out.rows() != input.rows() || grad_out.cols() != weights.cols() {
        return Err(Error::ShapeMismatch {
            op: "affine_backward grad_out",
            left: grad_out.shape(),
            right: (input.rows(), weights.cols()),
        });
    }
    let (batch, d_in, d_out) = (input.rows(), input.cols(), weights.cols());
    let mut g_in = Matrix::zeros(batch, d_in);
    let mut g_w = Matrix::zeros(d_in, d_out);
    let mut g_b = vec![0.0; d_out];
    let w = weights.data();
    for b in 0..batch {
        let go = grad_out.row(b);
        let x = input.row(b);
        for (gb, &g) in g_b.iter_mut().zip(go) {
            *gb += g;
        }
        for i in 0..d_in {
            let wrow = &w[i * d_out..(i + 1) * d_out];
            let mut acc = 0.0;
            for (&g, &wij) in go.iter().zip(wrow) {
                acc += g * wij;
            }
            g_in.data_mut()[b * d_in + i] = acc;
            let xi = x[i];
            let gw_row = &mut g_w.data_mut()[i * d_out..(i + 1) * d_out];
            for (gw, &g) in gw_row.iter_mut().zip(go) {
                *gw += xi * g;
            }
        }
    }
    Ok(AffineGrads {
        input: g_in,
        weights: g_w,
        bias: g_b,
    })
}

pub fn relu_forward(x: &Matrix) -> Matrix {
    let data = x.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    Matrix::new(x.rows(), x.cols(), data).expect("same shape")
}

/// Masks `grad_out` where `x <= 0` (the subgradient at exactly 0 is 0).
pub fn relu_backward(grad_out: &Matrix, x: &Matrix) -> Result<Matrix> {
    if grad_out.shape() != x.shape() {
        return Err(Error::ShapeMismatch {
            op: "relu_backward",
            left: grad_out.shape(),
            right: x.shape(),
        });
    }
    let data = grad_out
        .data()
        .iter()
        .zip(x.data())
        .map(|(&g, &v)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Matrix::new(x.rows(), x.cols(), data)
}
