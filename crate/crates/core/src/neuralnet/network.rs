//! The Q-network: metafeature projection for `h₀`, an LSTM unrolled over the
//! state history, one ReLU layer and a linear head with one output per config.

use rand::Rng;

use super::lstm::{cell_backward, cell_forward, CellCache, LstmParams};
use crate::environment::EnvState;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metadata::N_METAFEATURES;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkShape {
    pub n_hidden: usize,
    /// Width of one history step: encoded config plus reward.
    pub n_input: usize,
    pub n_layer: usize,
    pub n_actions: usize,
    pub n_meta: usize,
}

impl NetworkShape {
    pub fn new(n_hidden: usize, n_input: usize, n_layer: usize, n_actions: usize) -> Self {
        Self { n_hidden, n_input, n_layer, n_actions, n_meta: N_METAFEATURES }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_hidden == 0 || self.n_input == 0 || self.n_layer == 0 || self.n_actions == 0 || self.n_meta == 0 {
            return Err(Error::Shape(format!("every network dimension must be ≥ 1: {self:?}")));
        }
        Ok(())
    }
}

/// All learnable arrays. Also used as the container for gradients and
/// optimizer moments, which mirror the parameter shapes exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetworkParams<T> {
    /// `n_hidden × n_meta`, maps standardized metafeatures to `h₀`.
    pub w0: Matrix<T>,
    pub lstm: LstmParams<T>,
    pub dense_w: Matrix<T>,
    pub dense_b: Vec<T>,
    pub head_w: Matrix<T>,
    pub head_b: Vec<T>,
}

/// Array names in checkpoint order.
pub const ARRAY_NAMES: [&str; 13] = [
    "w0", "lstm.w_f", "lstm.w_i", "lstm.w_o", "lstm.w_c", "lstm.b_f", "lstm.b_i", "lstm.b_o", "lstm.b_c", "dense.w",
    "dense.b", "head.w", "head.b",
];

impl<T: Scalar> QNetworkParams<T> {
    pub fn zeros(shape: NetworkShape) -> Result<Self> {
        shape.validate()?;
        let NetworkShape { n_hidden, n_input, n_layer, n_actions, n_meta } = shape;
        Ok(Self {
            w0: Matrix::zeros(n_hidden, n_meta),
            lstm: LstmParams::zeros(n_hidden, n_input),
            dense_w: Matrix::zeros(n_layer, n_hidden),
            dense_b: vec![T::zero(); n_layer],
            head_w: Matrix::zeros(n_actions, n_layer),
            head_b: vec![T::zero(); n_actions],
        })
    }

    /// Uniform(−1/√fan_in, 1/√fan_in) for every array.
    pub fn random<R: Rng + ?Sized>(shape: NetworkShape, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(shape)?;
        let fans = p.fan_ins();
        for (arr, fan) in p.arrays_mut().into_iter().zip(fans) {
            let bound = 1.0 / (fan as f64).sqrt();
            for v in arr {
                *v = T::of(rng.random_range(-bound..bound));
            }
        }
        Ok(p)
    }

    fn fan_ins(&self) -> [usize; 13] {
        let z = self.lstm.w_f.cols();
        let h = self.w0.cols();
        let d = self.dense_w.cols();
        let q = self.head_w.cols();
        [h, z, z, z, z, z, z, z, z, d, d, q, q]
    }

    pub fn shape(&self) -> NetworkShape {
        NetworkShape {
            n_hidden: self.w0.rows(),
            n_input: self.lstm.n_input(),
            n_layer: self.dense_w.rows(),
            n_actions: self.head_w.rows(),
            n_meta: self.w0.cols(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.shape()).expect("shape of an existing network is valid")
    }

    pub fn arrays(&self) -> [&[T]; 13] {
        let l = &self.lstm;
        [
            self.w0.as_slice(),
            l.w_f.as_slice(),
            l.w_i.as_slice(),
            l.w_o.as_slice(),
            l.w_c.as_slice(),
            &l.b_f,
            &l.b_i,
            &l.b_o,
            &l.b_c,
            self.dense_w.as_slice(),
            &self.dense_b,
            self.head_w.as_slice(),
            &self.head_b,
        ]
    }

    pub fn arrays_mut(&mut self) -> [&mut [T]; 13] {
        let l = &mut self.lstm;
        [
            self.w0.as_mut_slice(),
            l.w_f.as_mut_slice(),
            l.w_i.as_mut_slice(),
            l.w_o.as_mut_slice(),
            l.w_c.as_mut_slice(),
            &mut l.b_f,
            &mut l.b_i,
            &mut l.b_o,
            &mut l.b_c,
            self.dense_w.as_mut_slice(),
            &mut self.dense_b,
            self.head_w.as_mut_slice(),
            &mut self.head_b,
        ]
    }

    /// Total number of scalars across every array.
    pub fn param_count(&self) -> usize {
        self.arrays().iter().map(|a| a.len()).sum()
    }

    /// `h₀ = W₀ d`.
    pub fn init_hidden(&self, metafeatures: &[T]) -> Result<Vec<T>> {
        if metafeatures.len() != self.w0.cols() {
            return Err(Error::Shape(format!(
                "expected {} metafeatures, got {}",
                self.w0.cols(),
                metafeatures.len()
            )));
        }
        Ok(self.w0.matvec(metafeatures))
    }

    fn inputs(&self, state: &EnvState) -> Result<(Vec<T>, Vec<Vec<T>>)> {
        let n_x = self.lstm.n_input();
        let meta: Vec<T> = state.metafeatures.iter().map(|&v| T::of(v)).collect();
        let mut xs = Vec::with_capacity(state.history.len());
        for (t, entry) in state.history.iter().enumerate() {
            if entry.encoded.len() + 1 != n_x {
                return Err(Error::Shape(format!(
                    "history step {t} has width {}, network expects {n_x}",
                    entry.encoded.len() + 1
                )));
            }
            let mut x: Vec<T> = entry.encoded.iter().map(|&v| T::of(v)).collect();
            x.push(T::of(entry.reward));
            xs.push(x);
        }
        Ok((meta, xs))
    }

    fn trace(&self, state: &EnvState) -> Result<Trace<T>> {
        let (meta, xs) = self.inputs(state)?;
        let h0 = self.init_hidden(&meta)?;
        let mut cells: Vec<CellCache<T>> = Vec::with_capacity(xs.len());
        let zeros = vec![T::zero(); h0.len()];
        for x in &xs {
            let (h_prev, c_prev) = match cells.last() {
                Some(c) => (&c.h, &c.c),
                None => (&h0, &zeros),
            };
            let cell = cell_forward(x, h_prev, c_prev, &self.lstm);
            cells.push(cell);
        }
        let h_last = &cells.last().expect("history holds at least the sentinel").h;
        let pre: Vec<T> = self.dense_w.matvec(h_last).into_iter().zip(&self.dense_b).map(|(a, &b)| a + b).collect();
        let act: Vec<T> = pre.iter().map(|&v| v.max(T::zero())).collect();
        let q = self.head_w.matvec(&act).into_iter().zip(&self.head_b).map(|(a, &b)| a + b).collect();
        Ok(Trace { meta, cells, pre, act, q })
    }

    /// Q-values of every action in `state`.
    pub fn q_forward(&self, state: &EnvState) -> Result<Vec<T>> {
        Ok(self.trace(state)?.q)
    }

    /// Gradient of `Σ (target − Q(s, a))²` over the batch, where only the
    /// taken action's output enters each term. Returns the gradients and the loss.
    pub fn q_gradients(&self, batch: &[(&EnvState, usize, T)]) -> Result<(Self, T)> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("gradient batch is empty".into()));
        }
        let mut grad = self.zeros_like();
        let mut loss = T::zero();
        let n_actions = self.head_w.rows();
        for &(state, action, target) in batch {
            if action >= n_actions {
                return Err(Error::ActionOutOfRange { action, n_configs: n_actions });
            }
            if !target.is_finite() {
                return Err(Error::InvalidArgument("non-finite target".into()));
            }
            let tr = self.trace(state)?;
            let err = tr.q[action] - target;
            loss += err * err;
            let dq = err + err;

            for (g, &a) in grad.head_w.row_mut(action).iter_mut().zip(&tr.act) {
                *g += dq * a;
            }
            grad.head_b[action] += dq;
            let du: Vec<T> = self
                .head_w
                .row(action)
                .iter()
                .zip(&tr.pre)
                .map(|(&w, &u)| if u > T::zero() { dq * w } else { T::zero() })
                .collect();
            let h_last = &tr.cells.last().expect("non-empty").h;
            grad.dense_w.add_outer(&du, h_last);
            for (b, &d) in grad.dense_b.iter_mut().zip(&du) {
                *b += d;
            }
            let mut dh = vec![T::zero(); h_last.len()];
            self.dense_w.add_tr_matvec(&du, &mut dh);
            let mut dc = vec![T::zero(); dh.len()];
            for cell in tr.cells.iter().rev() {
                let (dh_prev, dc_prev) = cell_backward(cell, &dh, &dc, &self.lstm, &mut grad.lstm);
                dh = dh_prev;
                dc = dc_prev;
            }
            grad.w0.add_outer(&dh, &tr.meta);
        }
        Ok((grad, loss))
    }

    /// Summed squared error of the batch without computing gradients.
    pub fn batch_loss(&self, batch: &[(&EnvState, usize, T)]) -> Result<T> {
        let mut loss = T::zero();
        for &(state, action, target) in batch {
            let q = self.q_forward(state)?;
            let e = q[action] - target;
            loss += e * e;
        }
        Ok(loss)
    }

    /// Converts every array to another scalar type.
    pub fn cast<U: Scalar>(&self) -> QNetworkParams<U> {
        let mut out = QNetworkParams::<U>::zeros(self.shape()).expect("valid shape");
        for (dst, src) in out.arrays_mut().into_iter().zip(self.arrays()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = U::of(s.as_f64());
            }
        }
        out
    }
}

struct Trace<T> {
    meta: Vec<T>,
    cells: Vec<CellCache<T>>,
    pre: Vec<T>,
    act: Vec<T>,
    q: Vec<T>,
}
