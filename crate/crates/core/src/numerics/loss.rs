use super::Matrix;
use crate::{Error, Result};

/// Row-wise softmax with max-subtraction.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let (rows, cols) = logits.shape();
    let mut out = Matrix::zeros(rows, cols);
    for r in 0..rows {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let o = &mut out.data_mut()[r * cols..(r + 1) * cols];
        let mut sum = 0.0;
        for (oj, &z) in o.iter_mut().zip(row) {
            *oj = (z - max).exp();
            sum += *oj;
        }
        for oj in o.iter_mut() {
            *oj /= sum;
        }
    }
    out
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Mean negative log-likelihood over the batch and its gradient
/// `(softmax - onehot) / batch`.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (batch, classes) = logits.shape();
    if labels.len() != batch {
        return Err(Error::ShapeMismatch {
            op: "softmax_cross_entropy labels",
            left: logits.shape(),
            right: (labels.len(), 1),
        });
    }
    if batch == 0 {
        return Err(Error::Empty("softmax_cross_entropy batch"));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    let n = batch as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(batch, classes);
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&z| (z - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[label];
        let g = &mut grad.data_mut()[r * classes..(r + 1) * classes];
        for (gj, &z) in g.iter_mut().zip(row) {
            *gj = (z - log_z).exp() / n;
        }
        g[label] -= 1.0 / n;
    }
    Ok((loss / n, grad))
}
