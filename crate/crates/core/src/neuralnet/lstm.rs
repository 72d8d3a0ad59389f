//! A single LSTM cell with forget, input and output gates.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{sigmoid, Scalar};

/// Gate weights act on the concatenation `[h_prev, x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<T> {
    pub w_f: Matrix<T>,
    pub w_i: Matrix<T>,
    pub w_o: Matrix<T>,
    pub w_c: Matrix<T>,
    pub b_f: Vec<T>,
    pub b_i: Vec<T>,
    pub b_o: Vec<T>,
    pub b_c: Vec<T>,
}

impl<T: Scalar> LstmParams<T> {
    pub fn zeros(n_hidden: usize, n_input: usize) -> Self {
        let w = || Matrix::zeros(n_hidden, n_hidden + n_input);
        let b = || vec![T::zero(); n_hidden];
        Self { w_f: w(), w_i: w(), w_o: w(), w_c: w(), b_f: b(), b_i: b(), b_o: b(), b_c: b() }
    }

    pub fn n_hidden(&self) -> usize {
        self.w_f.rows()
    }

    pub fn n_input(&self) -> usize {
        self.w_f.cols() - self.w_f.rows()
    }
}

/// Intermediate values of one cell evaluation, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct CellCache<T> {
    pub z: Vec<T>,
    pub f: Vec<T>,
    pub i: Vec<T>,
    pub o: Vec<T>,
    pub g: Vec<T>,
    pub c_prev: Vec<T>,
    pub c: Vec<T>,
    pub tanh_c: Vec<T>,
    pub h: Vec<T>,
}

pub(crate) fn cell_forward<T: Scalar>(x: &[T], h_prev: &[T], c_prev: &[T], p: &LstmParams<T>) -> CellCache<T> {
    let mut z = Vec::with_capacity(h_prev.len() + x.len());
    z.extend_from_slice(h_prev);
    z.extend_from_slice(x);
    let gate = |w: &Matrix<T>, b: &[T], act: fn(T) -> T| -> Vec<T> {
        w.matvec(&z).into_iter().zip(b).map(|(a, &b)| act(a + b)).collect()
    };
    let f = gate(&p.w_f, &p.b_f, sigmoid);
    let i = gate(&p.w_i, &p.b_i, sigmoid);
    let o = gate(&p.w_o, &p.b_o, sigmoid);
    let g = gate(&p.w_c, &p.b_c, T::tanh);
    let c: Vec<T> = (0..f.len()).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<T> = c.iter().map(|v| v.tanh()).collect();
    let h = o.iter().zip(&tanh_c).map(|(&o, &t)| o * t).collect();
    CellCache { z, f, i, o, g, c_prev: c_prev.to_vec(), c, tanh_c, h }
}

/// One LSTM step; returns `(h_t, c_t)`.
pub fn lstm_cell_forward<T: Scalar>(
    x: &[T],
    h_prev: &[T],
    c_prev: &[T],
    p: &LstmParams<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    let n_h = p.n_hidden();
    if x.len() != p.n_input() || h_prev.len() != n_h || c_prev.len() != n_h {
        return Err(Error::Shape(format!(
            "lstm expects x:{} h:{n_h} c:{n_h}, got x:{} h:{} c:{}",
            p.n_input(),
            x.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    let cache = cell_forward(x, h_prev, c_prev, p);
    Ok((cache.h, cache.c))
}

/// Gradient accumulation for one cell step.
///
/// Given `dh`, `dc` flowing into `(h_t, c_t)`, adds parameter gradients into
/// `grad` and returns `(dh_prev, dc_prev)`.
pub(crate) fn cell_backward<T: Scalar>(
    cache: &CellCache<T>,
    dh: &[T],
    dc: &[T],
    p: &LstmParams<T>,
    grad: &mut LstmParams<T>,
) -> (Vec<T>, Vec<T>) {
    let n_h = dh.len();
    let one = T::one();
    let mut dpf = vec![T::zero(); n_h];
    let mut dpi = vec![T::zero(); n_h];
    let mut dpo = vec![T::zero(); n_h];
    let mut dpg = vec![T::zero(); n_h];
    let mut dc_prev = vec![T::zero(); n_h];
    for k in 0..n_h {
        let t = cache.tanh_c[k];
        let dck = dc[k] + dh[k] * cache.o[k] * (one - t * t);
        let (f, i, o, g) = (cache.f[k], cache.i[k], cache.o[k], cache.g[k]);
        dpo[k] = dh[k] * t * o * (one - o);
        dpf[k] = dck * cache.c_prev[k] * f * (one - f);
        dpi[k] = dck * g * i * (one - i);
        dpg[k] = dck * i * (one - g * g);
        dc_prev[k] = dck * f;
    }
    let mut dz = vec![T::zero(); cache.z.len()];
    for (w, gw, gb, dp) in [
        (&p.w_f, &mut grad.w_f, &mut grad.b_f, &dpf),
        (&p.w_i, &mut grad.w_i, &mut grad.b_i, &dpi),
        (&p.w_o, &mut grad.w_o, &mut grad.b_o, &dpo),
        (&p.w_c, &mut grad.w_c, &mut grad.b_c, &dpg),
    ] {
        gw.add_outer(dp, &cache.z);
        for (b, &d) in gb.iter_mut().zip(dp.iter()) {
            *b += d;
        }
        w.add_tr_matvec(dp, &mut dz);
    }
    dz.truncate(n_h);
    (dz, dc_prev)
}
