//! Data/jamming precoding, power control, signal synthesis, MMSE combining
//! and CPU aggregation.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{crandn_vec, fnv1a64, CMat, CVec};
use crate::scenario::PrecoderKind;
use crate::{Error, Result};

/// Feasibility slack on the per-MN jamming power budget; absorbs round-off
/// from the scale-down projection.
pub const POWER_TOL: f64 = 1e-9;

/// Mode assignment and jamming power coefficients: `alpha[m]` true means MN m
/// observes, false means it jams; `pi[m*nr + n]` is the jamming power
/// coefficient of MN m on UR stream n.
///
/// Feasibility: for every jamming MN, sum_n E{||ghat_mr,n||^2} pi[m][n] <= 1,
/// which keeps the expected transmitted jamming power within rho_J.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringConfig {
    pub alpha: Vec<bool>,
    pub pi: Vec<f64>,
    pub nr: usize,
}

impl MonitoringConfig {
    pub fn new(alpha: Vec<bool>, pi: Vec<f64>, nr: usize) -> Self {
        assert_eq!(alpha.len() * nr, pi.len(), "pi must hold m*nr coefficients");
        MonitoringConfig { alpha, pi, nr }
    }

    /// All MNs observing, no jamming power.
    pub fn all_observing(m: usize, nr: usize) -> Self {
        MonitoringConfig::new(vec![true; m], vec![0.0; m * nr], nr)
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }

    pub fn pi_at(&self, m: usize, n: usize) -> f64 {
        self.pi[m * self.nr + n]
    }

    pub fn observers(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.m()).filter(|&m| self.alpha[m])
    }

    pub fn jammers(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.m()).filter(|&m| !self.alpha[m])
    }

    pub fn n_observers(&self) -> usize {
        self.observers().count()
    }

    /// Left side of the per-MN power constraint for MN `m`:
    /// (1 - alpha_m) sum_n coeff_m pi[m][n] with coeff_m = E{||ghat_mr,n||^2}.
    pub fn budget_load(&self, m: usize, ghat_norm_sq: f64) -> f64 {
        if self.alpha[m] {
            return 0.0;
        }
        (0..self.nr).map(|n| ghat_norm_sq * self.pi_at(m, n)).sum()
    }

    /// Checks the power constraint for every MN.
    pub fn validate(&self, ghat_norm_sq: &[f64]) -> Result<()> {
        for m in 0..self.m() {
            if self.pi[m * self.nr..(m + 1) * self.nr].iter().any(|&p| p < 0.0) {
                return Err(Error::InfeasibleConfig(format!("negative pi at MN {m}")));
            }
            let load = self.budget_load(m, ghat_norm_sq[m]);
            if load > 1.0 + POWER_TOL {
                return Err(Error::InfeasibleConfig(format!(
                    "MN {m} exceeds jamming budget: load {load:.6}"
                )));
            }
        }
        Ok(())
    }

    /// Scale-down projection onto the feasible set: pi entries are clipped
    /// at zero, then each jamming MN whose budget load exceeds one is
    /// rescaled to equality. No entry ever increases; an already-feasible
    /// config is returned unchanged.
    pub fn projected(&self, ghat_norm_sq: &[f64]) -> MonitoringConfig {
        let mut out = self.clone();
        for p in out.pi.iter_mut() {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        for m in 0..out.m() {
            if out.alpha[m] {
                continue;
            }
            let load = out.budget_load(m, ghat_norm_sq[m]);
            if load > 1.0 + POWER_TOL {
                let scale = 1.0 / load;
                for n in 0..out.nr {
                    out.pi[m * out.nr + n] *= scale;
                }
            }
        }
        out
    }

    /// Equal-split allocation saturating the budget with equality on every
    /// MN: pi[m][n] = 1 / (nr * E{||ghat_mr,n||^2}).
    pub fn equal_power_pi(alpha: Vec<bool>, ghat_norm_sq: &[f64], nr: usize) -> Self {
        let m = alpha.len();
        let mut pi = vec![0.0; m * nr];
        for i in 0..m {
            let coeff = ghat_norm_sq[i];
            if coeff > 0.0 {
                for n in 0..nr {
                    pi[i * nr + n] = 1.0 / (nr as f64 * coeff);
                }
            }
        }
        MonitoringConfig::new(alpha, pi, nr)
    }

    /// Stable fingerprint used in CSV rows.
    pub fn fingerprint(&self) -> u64 {
        let mut bytes = Vec::with_capacity(self.alpha.len() + self.pi.len() * 8);
        for &a in &self.alpha {
            bytes.push(a as u8);
        }
        for &p in &self.pi {
            bytes.extend_from_slice(&p.to_bits().to_le_bytes());
        }
        fnv1a64(&bytes)
    }
}

/// Data precoder, power loading and jamming precoders for one realization.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    /// Column-normalized Nt x Nr data precoder.
    pub w: CMat,
    /// Diagonal power loads, sum = 1.
    pub lambda: Vec<f64>,
    /// Jamming precoders (maximum-ratio: the raw uplink estimates).
    pub wj: Vec<CMat>,
}

/// Builds the UT data precoder: ZF is Ghat (Ghat^H Ghat)^{-1}, MRT is Ghat;
/// in both cases the columns are normalized to unit norm afterwards.
pub fn build_data_precoder(ghat_tr: &CMat, kind: PrecoderKind) -> Result<CMat> {
    let raw = match kind {
        PrecoderKind::Mrt => ghat_tr.clone(),
        PrecoderKind::Zf => {
            let gram = ghat_tr.adjoint() * ghat_tr;
            let inv = gram.lu().try_inverse().ok_or(Error::DegenerateChannel)?;
            let w = ghat_tr * inv;
            if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::DegenerateChannel);
            }
            w
        }
    };
    let mut w = raw;
    for j in 0..w.ncols() {
        let norm = w.column(j).norm();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateChannel);
        }
        let scale = Complex::new(1.0 / norm, 0.0);
        for i in 0..w.nrows() {
            w[(i, j)] *= scale;
        }
    }
    Ok(w)
}

/// Equal power loading over the Nr streams; keeps E{||s_t||^2} = rho_t for a
/// column-normalized precoder.
pub fn load_powers(nr: usize) -> Vec<f64> {
    assert!(nr >= 1);
    vec![1.0 / nr as f64; nr]
}

/// Validates the config against the budget and returns the jamming precoders
/// (maximum-ratio: W_m^J equals the raw uplink estimate at MN m).
pub fn build_jamming(
    config: &MonitoringConfig,
    ghat_mr: &[CMat],
    ghat_norm_sq: &[f64],
) -> Result<Vec<CMat>> {
    config.validate(ghat_norm_sq)?;
    Ok(ghat_mr.to_vec())
}

/// Transmitted jamming signal of MN m for a given jamming symbol vector:
/// (1 - alpha_m) sqrt(rho_J) W_m^J Pi_m^{1/2} x_J.
pub fn jamming_signal(
    config: &MonitoringConfig,
    wj: &CMat,
    m: usize,
    rho_j: f64,
    x_j: &CVec,
) -> CVec {
    let n = wj.nrows();
    if config.alpha[m] {
        return CVec::zeros(n);
    }
    let nr = config.nr;
    let mut scaled = CVec::zeros(nr);
    for k in 0..nr {
        scaled[k] = x_j[k] * Complex::new((rho_j * config.pi_at(m, k)).sqrt(), 0.0);
    }
    wj * scaled
}

/// One synthesized symbol slot with its additive decomposition, kept per
/// receiver so the aggregation step can expose the desired/noise/interference
/// split exactly.
#[derive(Debug, Clone)]
pub struct Reception {
    /// Received vector at the UR.
    pub y_r: CVec,
    pub y_r_data: CVec,
    pub y_r_jam: CVec,
    pub y_r_noise: CVec,
    /// Per-MN received vectors (zero for jamming MNs).
    pub y_m: Vec<CVec>,
    pub y_m_data: Vec<CVec>,
    pub y_m_jam: Vec<CVec>,
    pub y_m_noise: Vec<CVec>,
    /// Symbols used for this slot.
    pub x_data: CVec,
    pub x_jam: CVec,
}

/// Synthesizes one downlink slot: the UT sends sqrt(rho_t) W Lambda^{1/2} x,
/// jamming MNs send coherent MR jamming on a shared symbol vector, and every
/// receiver adds unit-variance noise (plus the residual self-interference
/// noise on co-located observers).
pub struct ReceiveInputs<'a> {
    pub channels: &'a crate::channel::ChannelSet,
    pub precoders: &'a PrecoderSet,
    pub config: &'a MonitoringConfig,
    pub rho_t: f64,
    pub rho_j: f64,
    /// Extra noise variance per MN antenna (self-interference); empty = none.
    pub extra_noise_var: &'a [f64],
}

pub fn receive<R: Rng + ?Sized>(inp: &ReceiveInputs<'_>, rng: &mut R) -> Reception {
    let nr = inp.config.nr;
    let m_count = inp.config.m();
    let x_data = crandn_vec(nr, 1.0, rng);
    let x_jam = crandn_vec(nr, 1.0, rng);

    let mut loaded = CVec::zeros(nr);
    for k in 0..nr {
        loaded[k] = x_data[k] * Complex::new((inp.rho_t * inp.precoders.lambda[k]).sqrt(), 0.0);
    }
    let s_t = &inp.precoders.w * loaded;

    // UR side.
    let y_r_data = inp.channels.g_tr.adjoint() * &s_t;
    let mut y_r_jam = CVec::zeros(nr);
    for m in inp.config.jammers() {
        let s_j = jamming_signal(inp.config, &inp.precoders.wj[m], m, inp.rho_j, &x_jam);
        y_r_jam += inp.channels.g_mr[m].adjoint() * s_j;
    }
    let y_r_noise = crandn_vec(nr, 1.0, rng);
    let y_r = &y_r_data + &y_r_jam + &y_r_noise;

    // MN side; jamming MNs are half-duplex and do not receive.
    let mut y_m = Vec::with_capacity(m_count);
    let mut y_m_data = Vec::with_capacity(m_count);
    let mut y_m_jam = Vec::with_capacity(m_count);
    let mut y_m_noise = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let n_ant = inp.channels.g_mr[m].nrows();
        if !inp.config.alpha[m] {
            y_m.push(CVec::zeros(n_ant));
            y_m_data.push(CVec::zeros(n_ant));
            y_m_jam.push(CVec::zeros(n_ant));
            y_m_noise.push(CVec::zeros(n_ant));
            continue;
        }
        let data = inp.channels.g_tm[m].adjoint() * &s_t;
        let mut jam = CVec::zeros(n_ant);
        for l in inp.config.jammers() {
            let s_j = jamming_signal(inp.config, &inp.precoders.wj[l], l, inp.rho_j, &x_jam);
            jam += inp.channels.g_mm[l][m].adjoint() * s_j;
        }
        let var = 1.0 + inp.extra_noise_var.get(m).copied().unwrap_or(0.0);
        let noise = crandn_vec(n_ant, var, rng);
        y_m.push(&data + &jam + &noise);
        y_m_data.push(data);
        y_m_jam.push(jam);
        y_m_noise.push(noise);
    }

    Reception {
        y_r,
        y_r_data,
        y_r_jam,
        y_r_noise,
        y_m,
        y_m_data,
        y_m_jam,
        y_m_noise,
        x_data,
        x_jam,
    }
}

/// Regularized MMSE combining matrix V = Bhat (Bhat^H Bhat + rho I)^{-1}
/// with rho = 1/rho_t (the per-stream SNR inverse).
pub fn mmse_combine(b_hat: &CMat, rho_t: f64) -> CMat {
    let nr = b_hat.ncols();
    let reg = 1.0 / rho_t;
    let mut gram = b_hat.adjoint() * b_hat;
    for i in 0..nr {
        gram[(i, i)] += Complex::new(reg, 0.0);
    }
    let inv = gram
        .lu()
        .try_inverse()
        .expect("regularized Gram matrix is positive definite");
    b_hat * inv
}

/// Aggregated CPU signal z_c = sum_m alpha_m V_m^H y_m with its
/// desired/noise/interference split.
#[derive(Debug, Clone)]
pub struct CombinedSignal {
    pub z_c: CVec,
    pub d_c: CVec,
    pub n_c: CVec,
    pub i_c: CVec,
}

pub fn aggregate_cpu(
    config: &MonitoringConfig,
    combiners: &[CMat],
    reception: &Reception,
) -> CombinedSignal {
    let nr = config.nr;
    let mut z_c = CVec::zeros(nr);
    let mut d_c = CVec::zeros(nr);
    let mut n_c = CVec::zeros(nr);
    let mut i_c = CVec::zeros(nr);
    for m in config.observers() {
        let vh = combiners[m].adjoint();
        z_c += &vh * &reception.y_m[m];
        d_c += &vh * &reception.y_m_data[m];
        n_c += &vh * &reception.y_m_noise[m];
        i_c += &vh * &reception.y_m_jam[m];
    }
    CombinedSignal { z_c, d_c, n_c, i_c }
}
