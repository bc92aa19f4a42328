use super::Matrix;
use crate::{Error, Result};

/// Heavy-ball momentum SGD: `buf <- momentum * buf + grad; param <- param - lr * buf`.
///
/// No Nesterov correction and no weight decay.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdState {
    momentum_buffers: Vec<Matrix>,
    momentum: f64,
    learning_rate: f64,
}

impl SgdState {
    pub fn new(shapes: &[(usize, usize)], learning_rate: f64, momentum: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::InvalidConfig(format!("momentum {momentum} not in [0, 1)")));
        }
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate {learning_rate} must be positive")));
        }
        Ok(Self {
            momentum_buffers: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            momentum,
            learning_rate,
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    pub fn buffers(&self) -> &[Matrix] {
        &self.momentum_buffers
    }

    pub fn update(&mut self, params: &mut [Matrix], grads: &[Matrix]) -> Result<()> {
        if params.len() != self.momentum_buffers.len() || grads.len() != params.len() {
            return Err(Error::RecordLength {
                expected: self.momentum_buffers.len(),
                got: params.len().min(grads.len()),
            });
        }
        for ((p, g), buf) in params.iter_mut().zip(grads).zip(&mut self.momentum_buffers) {
            if p.shape() != g.shape() || p.shape() != buf.shape() {
                return Err(Error::ShapeMismatch {
                    op: "sgd update",
                    left: p.shape(),
                    right: g.shape(),
                });
            }
            for ((pv, &gv), bv) in p.data_mut().iter_mut().zip(g.data()).zip(buf.data_mut()) {
                *bv = self.momentum * *bv + gv;
                *pv -= self.learning_rate * *bv;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_rows(&[[v]])
    }

    #[test]
    fn zero_momentum_is_plain_sgd() {
        let mut s = SgdState::new(&[(1, 1)], 0.1, 0.0).unwrap();
        let mut p = [scalar(0.0)];
        s.update(&mut p, &[scalar(1.0)]).unwrap();
        assert!((p[0].get(0, 0) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let mut s = SgdState::new(&[(1, 2)], 0.5, 0.9).unwrap();
        let mut p = [Matrix::from_rows(&[[0.25, -3.0]])];
        for _ in 0..2 {
            s.update(&mut p, &[Matrix::zeros(1, 2)]).unwrap();
        }
        assert_eq!(p[0], Matrix::from_rows(&[[0.25, -3.0]]));
    }

    #[test]
    fn two_momentum_steps_hand_iterated() {
        // buf1 = 1, p = -1; buf2 = 0.9 + 1 = 1.9, p = -2.9
        let mut s = SgdState::new(&[(1, 1)], 1.0, 0.9).unwrap();
        let mut p = [scalar(0.0)];
        s.update(&mut p, &[scalar(1.0)]).unwrap();
        s.update(&mut p, &[scalar(1.0)]).unwrap();
        assert!((p[0].get(0, 0) + 2.9).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut s = SgdState::new(&[(1, 2)], 0.1, 0.9).unwrap();
        let mut p = [Matrix::zeros(1, 2)];
        assert!(s.update(&mut p, &[Matrix::zeros(2, 1)]).is_err());
        assert!(s.update(&mut p, &[]).is_err());
        assert!(SgdState::new(&[], 0.1, 1.0).is_err());
        assert!(SgdState::new(&[], 0.0, 0.5).is_err());
    }
}
