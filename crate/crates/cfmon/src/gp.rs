//! Gaussian-process regression with a Matérn kernel over the mixed
//! mode-assignment / jamming-power search space.
//!
//! The binary block and the continuous block get separate lengthscales; the
//! kernel is a single Matérn on the combined scaled distance, with the
//! binary block treated as integer-relaxed coordinates. Observation noise is
//! per-point (the MSP objective reports its own binomial standard error).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result};

/// Smoothness of the Matérn family. Half-integer orders have closed forms;
/// samples of a Matérn-nu process are (ceil(nu) - 1) times differentiable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl MaternNu {
    /// Correlation at scaled distance `r` (already divided by the
    /// lengthscale).
    pub fn correlation(self, r: f64) -> f64 {
        match self {
            MaternNu::Half => (-r).exp(),
            MaternNu::ThreeHalves => {
                let s = 3f64.sqrt() * r;
                (1.0 + s) * (-s).exp()
            }
            MaternNu::FiveHalves => {
                let s = 5f64.sqrt() * r;
                (1.0 + s + s * s / 3.0) * (-s).exp()
            }
        }
    }
}

/// Kernel hyperparameters: one lengthscale per variable block plus a signal
/// scale.
#[derive(Debug, Clone, Copy)]
pub struct KernelHyper {
    pub nu: MaternNu,
    /// Lengthscale of the binary (mode-assignment) block.
    pub len_alpha: f64,
    /// Lengthscale of the continuous (jamming-power) block.
    pub len_pi: f64,
    /// Signal variance, k(s, s).
    pub signal_var: f64,
}

impl KernelHyper {
    pub fn validate(&self) -> Result<()> {
        if self.len_alpha <= 0.0 || self.len_pi <= 0.0 {
            return Err(Error::BadParams("kernel lengthscales must be positive".into()));
        }
        if self.signal_var <= 0.0 {
            return Err(Error::BadParams("kernel signal variance must be positive".into()));
        }
        Ok(())
    }
}

/// A point in the optimizer's search space: relaxed binaries plus the
/// continuous jamming-power block (budget fractions in [0, 1]).
#[derive(Debug, Clone, PartialEq)]
pub struct SearchPoint {
    pub alpha: Vec<f64>,
    pub pi: Vec<f64>,
}

impl SearchPoint {
    pub fn dim(&self) -> usize {
        self.alpha.len() + self.pi.len()
    }
}

/// Matérn covariance on the concatenated block-scaled distance.
pub fn kernel(a: &SearchPoint, b: &SearchPoint, hyper: &KernelHyper) -> Result<f64> {
    hyper.validate()?;
    if a.alpha.len() != b.alpha.len() || a.pi.len() != b.pi.len() {
        return Err(Error::BadParams("kernel arguments have mismatched dimensions".into()));
    }
    let mut r2 = 0.0;
    for (x, y) in a.alpha.iter().zip(&b.alpha) {
        let d = (x - y) / hyper.len_alpha;
        r2 += d * d;
    }
    for (x, y) in a.pi.iter().zip(&b.pi) {
        let d = (x - y) / hyper.len_pi;
        r2 += d * d;
    }
    Ok(hyper.signal_var * hyper.nu.correlation(r2.sqrt()))
}

/// GP posterior state over the observed (point, value, noise) triples.
#[derive(Debug, Clone)]
pub struct GpState {
    pub hyper: KernelHyper,
    /// Constant prior mean.
    pub mu0: f64,
    points: Vec<SearchPoint>,
    values: Vec<f64>,
    noise_vars: Vec<f64>,
    /// Cholesky of K + diag(noise), rebuilt on every change.
    factor: Option<Cholesky<f64, Dyn>>,
    /// (K + diag(noise))^{-1} (f - mu0).
    alpha_weights: Option<DVector<f64>>,
}

/// Posterior mean and variance at a query point.
#[derive(Debug, Clone, Copy)]
pub struct Posterior {
    pub mean: f64,
    pub var: f64,
}

impl GpState {
    pub fn new(hyper: KernelHyper, mu0: f64) -> Result<Self> {
        hyper.validate()?;
        Ok(GpState {
            hyper,
            mu0,
            points: Vec::new(),
            values: Vec::new(),
            noise_vars: Vec::new(),
            factor: None,
            alpha_weights: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn observations(&self) -> (&[SearchPoint], &[f64]) {
        (&self.points, &self.values)
    }

    /// Adds one observation and refits the factorization.
    pub fn observe(&mut self, point: SearchPoint, value: f64, noise_var: f64) -> Result<()> {
        self.points.push(point);
        self.values.push(value);
        self.noise_vars.push(noise_var.max(0.0));
        self.refit()
    }

    /// Replaces the hyperparameters and refits.
    pub fn set_hyper(&mut self, hyper: KernelHyper) -> Result<()> {
        hyper.validate()?;
        self.hyper = hyper;
        if self.points.is_empty() {
            return Ok(());
        }
        self.refit()
    }

    fn gram(&self) -> Result<DMatrix<f64>> {
        let n = self.points.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = kernel(&self.points[i], &self.points[j], &self.hyper)?;
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
            k[(i, i)] += self.noise_vars[i];
        }
        Ok(k)
    }

    fn refit(&mut self) -> Result<()> {
        let k = self.gram()?;
        let n = k.nrows();
        let factor = cholesky_with_jitter(k)?;
        let resid = DVector::from_fn(n, |i, _| self.values[i] - self.mu0);
        let alpha = factor.solve(&resid);
        self.factor = Some(factor);
        self.alpha_weights = Some(alpha);
        Ok(())
    }

    /// Posterior mean/variance:
    /// mu(s)  = mu0 + k(s)^T (K + Sigma)^{-1} (f - mu0)
    /// var(s) = k(s,s) - k(s)^T (K + Sigma)^{-1} k(s), clamped at zero.
    pub fn posterior(&self, s: &SearchPoint) -> Result<Posterior> {
        if self.points.is_empty() {
            return Ok(Posterior { mean: self.mu0, var: self.hyper.signal_var });
        }
        let factor = self
            .factor
            .as_ref()
            .ok_or_else(|| Error::IllConditioned("gp not fitted".into()))?;
        let alpha = self.alpha_weights.as_ref().unwrap();
        let n = self.points.len();
        let kvec = DVector::from_fn(n, |i, _| {
            kernel(&self.points[i], s, &self.hyper).expect("dims checked on observe")
        });
        let mean = self.mu0 + kvec.dot(alpha);
        let v = factor.solve(&kvec);
        let var = (kernel(s, s, &self.hyper)? - kvec.dot(&v)).max(0.0);
        Ok(Posterior { mean, var })
    }

    /// Log marginal likelihood of the current observations (up to the
    /// constant term); used by the grid refit.
    pub fn log_marginal_likelihood(&self) -> Result<f64> {
        if self.points.is_empty() {
            return Ok(0.0);
        }
        let factor = self
            .factor
            .as_ref()
            .ok_or_else(|| Error::IllConditioned("gp not fitted".into()))?;
        let alpha = self.alpha_weights.as_ref().unwrap();
        let n = self.points.len();
        let resid = DVector::from_fn(n, |i, _| self.values[i] - self.mu0);
        let mut logdet = 0.0;
        let l = factor.l_dirty();
        for i in 0..n {
            logdet += l[(i, i)].ln();
        }
        Ok(-0.5 * resid.dot(alpha) - logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln())
    }

    /// Grid refit of the per-block lengthscales by log-marginal-likelihood
    /// maximization; signal variance tracks the observation spread.
    pub fn refit_hyper_grid(&mut self, base_alpha: f64, base_pi: f64) -> Result<()> {
        if self.points.len() < 3 {
            return Ok(());
        }
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let signal_var = var.max(1e-4);
        let mut best = self.hyper;
        let mut best_lml = f64::NEG_INFINITY;
        for &ma in &[0.5, 1.0, 2.0] {
            for &mp in &[0.5, 1.0, 2.0] {
                let cand = KernelHyper {
                    nu: self.hyper.nu,
                    len_alpha: base_alpha * ma,
                    len_pi: base_pi * mp,
                    signal_var,
                };
                self.set_hyper(cand)?;
                let lml = self.log_marginal_likelihood()?;
                if lml > best_lml {
                    best_lml = lml;
                    best = cand;
                }
            }
        }
        self.set_hyper(best)
    }
}

fn cholesky_with_jitter(k: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(k.clone()) {
        return Ok(c);
    }
    let n = k.nrows();
    let scale = (0..n).map(|i| k[(i, i)].abs()).sum::<f64>() / n.max(1) as f64;
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut jitter = 1e-12;
    while jitter <= 1e-4 {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter * scale;
        }
        if let Some(c) = Cholesky::new(kj) {
            return Ok(c);
        }
        jitter *= 10.0;
    }
    Err(Error::IllConditioned("gp gram matrix".into()))
}
