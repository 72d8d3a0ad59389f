use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, dot, solve_lower, Matrix};
use crate::Scalar;

/// Largest diagonal jitter tried before a kernel matrix is declared singular.
pub const MAX_JITTER: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Squared exponential with one length-scale per input dimension.
    SeArd,
    /// Matérn ν = 5/2, also with per-dimension length-scales.
    Matern52,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::SeArd => "se_ard",
            KernelKind::Matern52 => "matern52",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "se_ard" => Ok(KernelKind::SeArd),
            "matern52" => Ok(KernelKind::Matern52),
            _ => Err(Error::InvalidArgument(format!("unknown kernel `{s}` (expected se_ard or matern52)"))),
        }
    }
}

/// Covariance hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams<T> {
    pub length_scales: Vec<T>,
    pub signal_var: T,
    pub noise_var: T,
}

impl<T: Scalar> KernelParams<T> {
    fn to_log(&self) -> Vec<T> {
        let mut v: Vec<T> = self.length_scales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_var.ln());
        v.push(self.noise_var.ln());
        v
    }

    fn from_log(v: &[T]) -> Self {
        let d = v.len() - 2;
        Self {
            length_scales: v[..d].iter().map(|x| x.exp()).collect(),
            signal_var: v[d].exp(),
            noise_var: v[d + 1].exp(),
        }
    }
}

fn scaled_sq<T: Scalar>(a: &[T], b: &[T], ls: &[T]) -> Vec<T> {
    a.iter().zip(b).zip(ls).map(|((&x, &y), &l)| ((x - y) / l).powi(2)).collect()
}

/// k(a, b) without the noise term.
pub fn kernel<T: Scalar>(kind: KernelKind, a: &[T], b: &[T], length_scales: &[T], signal_var: T) -> T {
    let r2: T = scaled_sq(a, b, length_scales).into_iter().sum();
    match kind {
        KernelKind::SeArd => signal_var * (-r2 / T::of(2.0)).exp(),
        KernelKind::Matern52 => {
            let s5r = (T::of(5.0) * r2).sqrt();
            signal_var * (T::one() + s5r + T::of(5.0) * r2 / T::of(3.0)) * (-s5r).exp()
        }
    }
}

/// Kernel value and its derivatives with respect to each log length-scale.
fn kernel_and_ls_grad<T: Scalar>(kind: KernelKind, a: &[T], b: &[T], ls: &[T], sf2: T) -> (T, Vec<T>) {
    let sq = scaled_sq(a, b, ls);
    let r2: T = sq.iter().copied().sum();
    match kind {
        KernelKind::SeArd => {
            let k = sf2 * (-r2 / T::of(2.0)).exp();
            (k, sq.into_iter().map(|s| k * s).collect())
        }
        KernelKind::Matern52 => {
            let s5r = (T::of(5.0) * r2).sqrt();
            let e = (-s5r).exp();
            let k = sf2 * (T::one() + s5r + T::of(5.0) * r2 / T::of(3.0)) * e;
            let c = sf2 * T::of(5.0 / 3.0) * (T::one() + s5r) * e;
            (k, sq.into_iter().map(|s| c * s).collect())
        }
    }
}

/// Cholesky factor of `k + jitter·I`, escalating jitter from zero up to [`MAX_JITTER`].
fn factor_with_jitter<T: Scalar>(k: &Matrix<T>) -> Result<Matrix<T>> {
    if let Some(l) = cholesky(k) {
        return Ok(l);
    }
    let mut jitter = 1e-12;
    while jitter <= MAX_JITTER * (1.0 + 1e-9) {
        let mut kj = k.clone();
        for i in 0..k.rows() {
            kj.set(i, i, kj.get(i, i) + T::of(jitter));
        }
        if let Some(l) = cholesky(&kj) {
            return Ok(l);
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite { jitter: MAX_JITTER })
}

/// Conditioned Gaussian-process regressor over encoded configs.
#[derive(Debug, Clone)]
pub struct GpSurrogate<T> {
    pub kind: KernelKind,
    pub params: KernelParams<T>,
    /// Constant prior mean, added back to every prediction.
    pub prior_mean: T,
    x: Vec<Vec<T>>,
    y: Vec<T>,
    chol: Matrix<T>,
    alpha: Vec<T>,
}

impl<T: Scalar> GpSurrogate<T> {
    pub fn new(kind: KernelKind, x: Vec<Vec<T>>, y: Vec<T>, params: KernelParams<T>, prior_mean: T) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidArgument("GP needs at least one observation".into()));
        }
        if x.len() != y.len() {
            return Err(Error::Shape(format!("{} inputs but {} targets", x.len(), y.len())));
        }
        let d = x[0].len();
        if x.iter().any(|r| r.len() != d) || params.length_scales.len() != d {
            return Err(Error::Shape(format!("expected {d} length-scales matching every input")));
        }
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !params.length_scales.iter().all(|&l| positive(l)) || !positive(params.signal_var) {
            return Err(Error::InvalidArgument("kernel scales must be positive".into()));
        }
        if !(params.noise_var >= T::zero()) {
            return Err(Error::InvalidArgument("noise variance must be ≥ 0".into()));
        }
        let k = Self::gram(kind, &x, &params);
        let chol = factor_with_jitter(&k)?;
        let centred: Vec<T> = y.iter().map(|&v| v - prior_mean).collect();
        let alpha = cholesky_solve(&chol, &centred);
        Ok(Self { kind, params, prior_mean, x, y, chol, alpha })
    }

    fn gram(kind: KernelKind, x: &[Vec<T>], p: &KernelParams<T>) -> Matrix<T> {
        let n = x.len();
        let mut k = Matrix::from_fn(n, n, |i, j| kernel(kind, &x[i], &x[j], &p.length_scales, p.signal_var));
        for i in 0..n {
            k.set(i, i, k.get(i, i) + p.noise_var);
        }
        k
    }

    pub fn n_observations(&self) -> usize {
        self.x.len()
    }

    pub fn observations(&self) -> (&[Vec<T>], &[T]) {
        (&self.x, &self.y)
    }

    /// Posterior mean and latent (noise-free) variance at `x_star`.
    pub fn posterior(&self, x_star: &[T]) -> (T, T) {
        let p = &self.params;
        let ks: Vec<T> = self.x.iter().map(|xi| kernel(self.kind, xi, x_star, &p.length_scales, p.signal_var)).collect();
        let mean = self.prior_mean + dot(&ks, &self.alpha);
        let v = solve_lower(&self.chol, &ks);
        let var = p.signal_var - dot(&v, &v);
        // residues below round-off of the signal variance are treated as exact zeros
        let var = if var <= p.signal_var * T::of(1e-12) { T::zero() } else { var };
        (mean, var)
    }

    /// `log p(y | X, θ)` under the current hyperparameters.
    pub fn log_marginal_likelihood(&self) -> T {
        let centred: Vec<T> = self.y.iter().map(|&v| v - self.prior_mean).collect();
        let n = self.y.len();
        let log_det: T = (0..n).map(|i| self.chol.get(i, i).ln()).sum::<T>() * T::of(2.0);
        -(dot(&centred, &self.alpha) + log_det + T::of(n as f64 * (2.0 * std::f64::consts::PI).ln())) / T::of(2.0)
    }

    /// Gradient of the log marginal likelihood in log-parameter space,
    /// ordered as (log length-scales, log signal variance, log noise variance).
    pub fn lml_gradient(&self) -> Vec<T> {
        let n = self.x.len();
        let d = self.params.length_scales.len();
        let mut k_inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = cholesky_solve(&self.chol, &e);
            e[j] = T::zero();
            for (i, v) in col.into_iter().enumerate() {
                k_inv.set(i, j, v);
            }
        }
        let half = T::of(0.5);
        let mut grad = vec![T::zero(); d + 2];
        let p = &self.params;
        for i in 0..n {
            for j in 0..n {
                let w = self.alpha[i] * self.alpha[j] - k_inv.get(i, j);
                let (k, dls) = kernel_and_ls_grad(self.kind, &self.x[i], &self.x[j], &p.length_scales, p.signal_var);
                for (g, dk) in grad.iter_mut().zip(dls) {
                    *g += half * w * dk;
                }
                grad[d] += half * w * k;
                if i == j {
                    grad[d + 1] += half * w * p.noise_var;
                }
            }
        }
        grad
    }
}

/// Options for hyperparameter fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub iterations: usize,
    pub noise_floor: f64,
    pub initial_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { iterations: 50, noise_floor: 1e-6, initial_step: 0.1 }
    }
}

/// Bounds on the log-parameters, for inputs scaled to `[0, 1]`.
fn clamp_log<T: Scalar>(v: &mut [T], noise_floor: f64) {
    let d = v.len() - 2;
    let clamp = |x: T, lo: f64, hi: f64| x.max(T::of(lo.ln())).min(T::of(hi.ln()));
    for x in &mut v[..d] {
        *x = clamp(*x, 1e-2, 1e2);
    }
    v[d] = clamp(v[d], 1e-8, 1e4);
    v[d + 1] = clamp(v[d + 1], noise_floor, 1.0);
}

/// Fits kernel hyperparameters by gradient ascent on the log marginal
/// likelihood, with an adaptive step that only accepts improvements. The
/// prior mean is the mean of `y`.
pub fn fit_gp<T: Scalar>(kind: KernelKind, x: Vec<Vec<T>>, y: Vec<T>, opts: &FitOptions) -> Result<GpSurrogate<T>> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("GP needs at least one observation".into()));
    }
    let n = T::of(y.len() as f64);
    let mean = y.iter().copied().sum::<T>() / n;
    let var = y.iter().map(|&v| (v - mean).powi(2)).sum::<T>() / n;
    let d = x[0].len();
    let init = KernelParams {
        length_scales: vec![T::of(0.5); d],
        signal_var: var.max(T::of(1e-4)),
        noise_var: T::of(opts.noise_floor.max(1e-4 * var.as_f64())),
    };
    let mut theta = init.to_log();
    clamp_log(&mut theta, opts.noise_floor);
    let mut best = GpSurrogate::new(kind, x.clone(), y.clone(), KernelParams::from_log(&theta), mean)?;
    let mut best_lml = best.log_marginal_likelihood();
    let mut step = opts.initial_step;
    for _ in 0..opts.iterations {
        let g = best.lml_gradient();
        let norm = g.iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt();
        if !(norm > 1e-12) || !norm.is_finite() {
            break;
        }
        let mut cand: Vec<T> = theta.iter().zip(&g).map(|(&t, &gi)| t + T::of(step * gi.as_f64() / norm)).collect();
        clamp_log(&mut cand, opts.noise_floor);
        let accepted = match GpSurrogate::new(kind, x.clone(), y.clone(), KernelParams::from_log(&cand), mean) {
            Ok(gp) => {
                let lml = gp.log_marginal_likelihood();
                if lml > best_lml {
                    best_lml = lml;
                    best = gp;
                    theta = cand;
                    true
                } else {
                    false
                }
            }
            Err(_) => false,
        };
        step = if accepted { step * 1.5 } else { step * 0.5 };
    }
    Ok(best)
}

/// Posterior of `sur` at `x_star`.
pub fn gp_posterior<T: Scalar>(sur: &GpSurrogate<T>, x_star: &[T]) -> Result<(T, T)> {
    if x_star.len() != sur.params.length_scales.len() {
        return Err(Error::Shape(format!("query has {} dims, model {}", x_star.len(), sur.params.length_scales.len())));
    }
    Ok(sur.posterior(x_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(d: usize) -> KernelParams<f64> {
        KernelParams { length_scales: vec![0.3; d], signal_var: 1.5, noise_var: 0.0 }
    }

    #[test]
    fn kernels_at_zero_distance_equal_signal_variance() {
        for kind in [KernelKind::SeArd, KernelKind::Matern52] {
            assert_eq!(kernel(kind, &[0.2, 0.4], &[0.2, 0.4], &[0.5, 0.5], 2.0), 2.0);
            assert!(kernel(kind, &[0.0], &[1e3], &[0.5], 2.0) < 1e-300);
        }
    }

    #[test]
    fn matern_matches_closed_form() {
        // r = 1 after scaling
        let r = 1.0f64;
        let expected = (1.0 + 5f64.sqrt() * r + 5.0 * r * r / 3.0) * (-(5f64.sqrt()) * r).exp();
        assert!((kernel(KernelKind::Matern52, &[0.0], &[2.0], &[2.0], 1.0) - expected).abs() < 1e-15);
        assert!((kernel(KernelKind::SeArd, &[0.0], &[2.0], &[2.0], 1.0) - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn single_noiseless_point_interpolates() {
        for kind in [KernelKind::SeArd, KernelKind::Matern52] {
            let gp = GpSurrogate::new(kind, vec![vec![0.3, 0.7]], vec![0.42], params(2), 0.0).unwrap();
            let (m, v) = gp_posterior(&gp, &[0.3, 0.7]).unwrap();
            assert!((m - 0.42).abs() < 1e-9 && v.abs() < 1e-9);
            let (m, v) = gp.posterior(&[1e4, -1e4]);
            assert!(m.abs() < 1e-12 && (v - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn lml_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in [KernelKind::SeArd, KernelKind::Matern52] {
            let x: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| rng.random()).collect()).collect();
            let y: Vec<f64> = (0..6).map(|_| rng.random()).collect();
            let p = KernelParams { length_scales: vec![0.4, 0.7, 1.3], signal_var: 0.8, noise_var: 0.05 };
            let gp = GpSurrogate::new(kind, x.clone(), y.clone(), p.clone(), 0.3).unwrap();
            let g = gp.lml_gradient();
            let theta = p.to_log();
            for i in 0..theta.len() {
                let eval = |delta: f64| {
                    let mut t = theta.clone();
                    t[i] += delta;
                    GpSurrogate::new(kind, x.clone(), y.clone(), KernelParams::from_log(&t), 0.3).unwrap().log_marginal_likelihood()
                };
                let num = (eval(1e-6) - eval(-1e-6)) / 2e-6;
                assert!((num - g[i]).abs() < 1e-6 * num.abs().max(1.0), "{kind} param {i}: {num} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn fitting_improves_likelihood() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 11.0]).collect();
        let y: Vec<f64> = x.iter().map(|v| (6.0 * v[0]).sin()).collect();
        let opts = FitOptions::default();
        let gp = fit_gp(KernelKind::SeArd, x.clone(), y.clone(), &opts).unwrap();
        let initial = fit_gp(KernelKind::SeArd, x, y, &FitOptions { iterations: 0, ..opts }).unwrap();
        assert!(gp.log_marginal_likelihood() > initial.log_marginal_likelihood());
        assert!(gp.params.noise_var >= 1e-6);
    }

    #[test]
    fn duplicate_noiseless_inputs_need_jitter() {
        let x = vec![vec![0.5], vec![0.5]];
        let p = KernelParams { length_scales: vec![1.0f64], signal_var: 1.0, noise_var: 0.0 };
        let gp = GpSurrogate::new(KernelKind::SeArd, x, vec![0.1, 0.1], p, 0.0).unwrap();
        let (m, _) = gp.posterior(&[0.5]);
        assert!((m - 0.1).abs() < 1e-4);
    }

    #[test]
    fn kernel_names_parse() {
        assert_eq!("matern52".parse::<KernelKind>().unwrap(), KernelKind::Matern52);
        assert!("rbf".parse::<KernelKind>().is_err());
    }
}
