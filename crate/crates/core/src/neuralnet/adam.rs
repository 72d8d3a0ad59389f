use super::network::QNetworkParams;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates mirroring every parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub m: QNetworkParams<T>,
    pub v: QNetworkParams<T>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &QNetworkParams<T>, config: AdamConfig) -> Self {
        Self { config, m: params.zeros_like(), v: params.zeros_like(), t: 0 }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut QNetworkParams<T>, grads: &QNetworkParams<T>, lr: f64) {
        assert_eq!(params.shape(), grads.shape(), "gradient shape must mirror parameters");
        self.t += 1;
        let b1 = T::of(self.config.beta1);
        let b2 = T::of(self.config.beta2);
        let one = T::one();
        let c1 = one - b1.powi(self.t as i32);
        let c2 = one - b2.powi(self.t as i32);
        let lr = T::of(lr);
        let eps = T::of(self.config.eps);
        let ps = params.arrays_mut();
        let gs = grads.arrays();
        let ms = self.m.arrays_mut();
        let vs = self.v.arrays_mut();
        for (((p, g), m), v) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
            for k in 0..p.len() {
                let gk = g[k];
                m[k] = b1 * m[k] + (one - b1) * gk;
                v[k] = b2 * v[k] + (one - b2) * gk * gk;
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
