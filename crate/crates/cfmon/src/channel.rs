//! Small-scale fading and the two training phases.
//!
//! Uplink training: the UR sends orthonormal pilots; the UT and every MN form
//! per-antenna linear MMSE estimates of their channels to the UR with the
//! scalar gain sqrt(tau rho) beta / (tau rho beta + 1).
//!
//! Beamforming training: the UT sends precoded pilots; the UR estimates the
//! effective channel A = G_tr^H W entry by entry and each MN estimates the
//! rows of its effective channel B_m = G_tm^H W as an affine MMSE function of
//! the projected pilot observation. The first- and second-order moments those
//! estimators need are not available in closed form, so they are estimated
//! once per geometry by Monte Carlo ([`effective_moments`]) and cached.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{crandn, CMat, CVec};
use crate::scenario::{PrecoderKind, ScenarioRealization, SystemParams};
use crate::transmission::build_data_precoder;
use crate::{Error, Result};

/// Mean square of one MMSE-estimated channel entry:
/// gamma = tau rho beta^2 / (tau rho beta + 1).
pub fn mmse_gamma(tau: usize, rho: f64, beta: f64) -> f64 {
    let t = tau as f64 * rho * beta;
    if t == 0.0 {
        0.0
    } else {
        t * beta / (t + 1.0)
    }
}

/// Scalar MMSE gain applied to the projected pilot:
/// sqrt(tau rho) beta / (tau rho beta + 1).
pub fn mmse_gain(tau: usize, rho: f64, beta: f64) -> f64 {
    let tr = tau as f64 * rho;
    if tr == 0.0 {
        0.0
    } else {
        tr.sqrt() * beta / (tr * beta + 1.0)
    }
}

/// Orthonormal pilot matrix: `count` pairwise-orthonormal rows of length
/// `len` (rows of the identity padded with zeros). Any orthonormal set is
/// equivalent up to a unitary rotation, so the canonical basis is used.
pub fn pilot_matrix(count: usize, len: usize) -> CMat {
    assert!(len >= count, "pilot length must cover the antenna count");
    CMat::from_fn(count, len, |i, j| {
        if i == j {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}

/// True small-scale channels of one realization. `g_mm[m][l]` is the MN m to
/// MN l channel and is the zero matrix on the diagonal.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// UT <-> UR, Nt x Nr.
    pub g_tr: CMat,
    /// MN m <-> UR, N x Nr each.
    pub g_mr: Vec<CMat>,
    /// UT <-> MN m, Nt x N each.
    pub g_tm: Vec<CMat>,
    /// Inter-MN, N x N each.
    pub g_mm: Vec<Vec<CMat>>,
}

/// Draws every channel matrix as sqrt(beta) times i.i.d. CN(0,1) fading.
pub fn draw_channels<R: Rng + ?Sized>(
    params: &SystemParams,
    real: &ScenarioRealization,
    rng: &mut R,
) -> ChannelSet {
    let m = real.n_mn();
    let g_tr = crandn(params.nt, params.nr, real.beta_tr, rng);
    let g_mr = (0..m)
        .map(|i| crandn(params.n, params.nr, real.beta_mr[i], rng))
        .collect();
    let g_tm = (0..m)
        .map(|i| crandn(params.nt, params.n, real.beta_tm[i], rng))
        .collect();
    let g_mm = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == j {
                        CMat::zeros(params.n, params.n)
                    } else {
                        crandn(params.n, params.n, real.beta_mm[i][j], rng)
                    }
                })
                .collect()
        })
        .collect();
    ChannelSet { g_tr, g_mr, g_tm, g_mm }
}

/// Uplink-phase MMSE estimates plus their closed-form per-entry mean squares.
#[derive(Debug, Clone)]
pub struct UplinkEstimates {
    /// UT-side estimate of the UR channel, Nt x Nr.
    pub ghat_tr: CMat,
    /// Per-MN estimates of the UR channel, N x Nr.
    pub ghat_mr: Vec<CMat>,
    /// Per-entry mean square of `ghat_tr` entries.
    pub gamma_tr: f64,
    /// Per-entry mean squares of `ghat_mr[m]` entries.
    pub gamma_mr: Vec<f64>,
}

impl UplinkEstimates {
    /// Expected squared norm E{||ghat_mr[m] column||^2} = N * gamma; this is
    /// the coefficient of the per-MN jamming power constraint.
    pub fn ghat_norm_sq(&self, m: usize) -> f64 {
        self.ghat_mr[m].nrows() as f64 * self.gamma_mr[m]
    }
}

/// Runs the uplink training phase at unit noise.
pub fn uplink_training<R: Rng + ?Sized>(
    channels: &ChannelSet,
    real: &ScenarioRealization,
    params: &SystemParams,
    rng: &mut R,
) -> UplinkEstimates {
    uplink_training_with_noise_std(channels, real, params, 1.0, rng)
}

/// Uplink training with an explicit noise standard deviation. `noise_std = 0`
/// is the noise-free consistency limit used by diagnostics and tests.
///
/// Pilots are the canonical orthonormal rows, so projecting the received
/// tau_r-symbol block onto the pilot of UR antenna n keeps exactly one noise
/// column per antenna; only those projected columns are generated.
pub fn uplink_training_with_noise_std<R: Rng + ?Sized>(
    channels: &ChannelSet,
    real: &ScenarioRealization,
    params: &SystemParams,
    noise_std: f64,
    rng: &mut R,
) -> UplinkEstimates {
    assert!(params.tau_r >= params.nr, "uplink pilots need tau_r >= nr");
    let amp = (params.tau_r as f64 * real.rho_r).sqrt();
    let project = |g: &CMat, rng: &mut R| -> CMat {
        let noise = crandn(g.nrows(), g.ncols(), 1.0, rng);
        g.map(|z| z * Complex::new(amp, 0.0)) + noise.map(|z| z * Complex::new(noise_std, 0.0))
    };

    let y_tr = project(&channels.g_tr, rng);
    let c_tr = mmse_gain(params.tau_r, real.rho_r, real.beta_tr);
    let ghat_tr = y_tr.map(|z| z * Complex::new(c_tr, 0.0));
    let gamma_tr = mmse_gamma(params.tau_r, real.rho_r, real.beta_tr);

    let m = real.n_mn();
    let mut ghat_mr = Vec::with_capacity(m);
    let mut gamma_mr = Vec::with_capacity(m);
    for i in 0..m {
        let y = project(&channels.g_mr[i], rng);
        let c = mmse_gain(params.tau_r, real.rho_r, real.beta_mr[i]);
        ghat_mr.push(y.map(|z| z * Complex::new(c, 0.0)));
        gamma_mr.push(mmse_gamma(params.tau_r, real.rho_r, real.beta_mr[i]));
    }
    UplinkEstimates { ghat_tr, ghat_mr, gamma_tr, gamma_mr }
}

/// Monte-Carlo moment cache for the beamforming-phase estimators, keyed by
/// precoder kind and the large-scale coefficients it was built from.
///
/// `e_whw` is E{W^H W}. Each effective row b_p = W^H g_tm,p has zero mean
/// (g_tm is zero-mean and independent of W) and covariance
/// C_bb = beta_tm * E{W^H W}, so the per-MN moments follow from one shared
/// matrix estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentCache {
    pub kind: PrecoderKind,
    /// E{a_{n,n'}} for the effective UT->UR channel entries, Nr x Nr.
    pub e_a: CMat,
    /// Var(a_{n,n'}) per entry, Nr x Nr.
    pub var_a: DMatrix<f64>,
    /// E{W^H W}, Nr x Nr.
    pub e_whw: CMat,
    /// Large-scale UT<->MN gains the cache was built from.
    pub beta_tm: Vec<f64>,
    /// UT<->UR gain the cache was built from.
    pub beta_tr: f64,
    /// Samples used.
    pub n_mc: usize,
}

impl MomentCache {
    /// Prior mean of an effective-channel row at MN `m` (identically zero).
    pub fn e_b(&self, _m: usize) -> CVec {
        CVec::zeros(self.e_whw.nrows())
    }

    /// Row covariance C_bb at MN `m`.
    pub fn c_bb(&self, m: usize) -> CMat {
        self.e_whw.map(|z| z * Complex::new(self.beta_tm[m], 0.0))
    }

    /// Serializes to JSON for reuse across runs.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("moment cache serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("moment cache: {e}")))
    }
}

/// Estimates the beamforming-phase moments by sampling fresh channels,
/// running uplink training, forming the precoder and averaging. Degenerate
/// ZF draws (singular Gram matrix) are discarded and redrawn.
pub fn effective_moments<R: Rng + ?Sized>(
    kind: PrecoderKind,
    real: &ScenarioRealization,
    params: &SystemParams,
    n_mc: usize,
    rng: &mut R,
) -> Result<MomentCache> {
    assert!(n_mc >= 1, "need at least one moment sample");
    let nr = params.nr;
    let mut sum_a = CMat::zeros(nr, nr);
    let mut sum_a2 = DMatrix::<f64>::zeros(nr, nr);
    let mut sum_whw = CMat::zeros(nr, nr);
    let mut used = 0usize;
    let mut attempts = 0usize;
    while used < n_mc {
        attempts += 1;
        if attempts > 10 * n_mc + 100 {
            return Err(Error::DegenerateChannel);
        }
        let g_tr = crandn(params.nt, nr, real.beta_tr, rng);
        let amp = (params.tau_r as f64 * real.rho_r).sqrt();
        let noise = crandn(params.nt, nr, 1.0, rng);
        let c = mmse_gain(params.tau_r, real.rho_r, real.beta_tr);
        let ghat = (g_tr.map(|z| z * Complex::new(amp, 0.0)) + noise)
            .map(|z| z * Complex::new(c, 0.0));
        let w = match build_data_precoder(&ghat, kind) {
            Ok(w) => w,
            Err(Error::DegenerateChannel) => continue,
            Err(e) => return Err(e),
        };
        let a = g_tr.adjoint() * &w;
        for i in 0..nr {
            for j in 0..nr {
                sum_a[(i, j)] += a[(i, j)];
                sum_a2[(i, j)] += a[(i, j)].norm_sqr();
            }
        }
        sum_whw += w.adjoint() * &w;
        used += 1;
    }
    let inv = 1.0 / used as f64;
    let e_a = sum_a.map(|z| z * Complex::new(inv, 0.0));
    let var_a = DMatrix::from_fn(nr, nr, |i, j| {
        (sum_a2[(i, j)] * inv - e_a[(i, j)].norm_sqr()).max(0.0)
    });
    let e_whw = sum_whw.map(|z| z * Complex::new(inv, 0.0));
    Ok(MomentCache {
        kind,
        e_a,
        var_a,
        e_whw,
        beta_tm: real.beta_tm.clone(),
        beta_tr: real.beta_tr,
        n_mc: used,
    })
}

/// Beamforming-phase MMSE estimates of the effective channels.
#[derive(Debug, Clone)]
pub struct EffectiveEstimates {
    /// UR-side estimate of A = G_tr^H W, Nr x Nr.
    pub a_hat: CMat,
    /// Per-MN estimate of B_m = G_tm^H W, N x Nr each.
    pub b_hat: Vec<CMat>,
}

/// Per-MN affine estimator pieces derived from the moment cache:
/// gain K = sqrt(tau rho) C (tau rho C + I)^{-1} and the posterior error
/// covariance C_err = C (tau rho C + I)^{-1}.
#[derive(Debug, Clone)]
pub struct BeamGain {
    pub k: CMat,
    pub c_err: CMat,
}

/// Builds the per-MN estimator gains for a given cache.
pub fn beam_gains(cache: &MomentCache, params: &SystemParams, real: &ScenarioRealization) -> Result<Vec<BeamGain>> {
    let nr = params.nr;
    let tr = params.tau_t as f64 * real.rho_t;
    let eye = CMat::identity(nr, nr);
    let mut out = Vec::with_capacity(real.n_mn());
    for m in 0..real.n_mn() {
        let c_bb = cache.c_bb(m);
        let denom = c_bb.map(|z| z * Complex::new(tr, 0.0)) + &eye;
        let lu = denom.lu();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::IllConditioned("beamforming gain inverse".into()))?;
        let k = c_bb.map(|z| z * Complex::new(tr.sqrt(), 0.0)) * &inv;
        let c_err = &c_bb * &inv;
        out.push(BeamGain { k, c_err });
    }
    Ok(out)
}

/// Runs the beamforming training phase at unit noise.
pub fn beamforming_training<R: Rng + ?Sized>(
    channels: &ChannelSet,
    w: &CMat,
    real: &ScenarioRealization,
    params: &SystemParams,
    cache: &MomentCache,
    gains: &[BeamGain],
    rng: &mut R,
) -> Result<EffectiveEstimates> {
    beamforming_training_with_noise_std(channels, w, real, params, cache, gains, 1.0, rng)
}

/// Beamforming training with an explicit noise standard deviation.
///
/// The projected observation at UR antenna n, stream n' is
/// sqrt(tau_t rho_t) a_{n,n'} + noise; the scalar estimator shrinks it toward
/// the prior mean E{a_{n,n'}} with gain
/// sqrt(tau rho) Var(a) / (tau rho Var(a) + 1). Each MN antenna p observes
/// sqrt(tau_t rho_t) b_p + noise and applies the affine vector estimator
/// from [`beam_gains`].
#[allow(clippy::too_many_arguments)]
pub fn beamforming_training_with_noise_std<R: Rng + ?Sized>(
    channels: &ChannelSet,
    w: &CMat,
    real: &ScenarioRealization,
    params: &SystemParams,
    cache: &MomentCache,
    gains: &[BeamGain],
    noise_std: f64,
    rng: &mut R,
) -> Result<EffectiveEstimates> {
    if cache.kind != params.precoder {
        return Err(Error::MomentCacheMismatch(format!(
            "cache built for {:?}, params use {:?}",
            cache.kind, params.precoder
        )));
    }
    assert!(params.tau_t >= params.nr, "beamforming pilots need tau_t >= nr");
    let amp = (params.tau_t as f64 * real.rho_t).sqrt();
    let nr = params.nr;

    // UR side: entrywise scalar MMSE on the projected pilots.
    let a_true = channels.g_tr.adjoint() * w;
    let noise_r = crandn(nr, nr, 1.0, rng);
    let mut a_hat = CMat::zeros(nr, nr);
    for i in 0..nr {
        for j in 0..nr {
            let y = a_true[(i, j)] * Complex::new(amp, 0.0)
                + noise_r[(i, j)] * Complex::new(noise_std, 0.0);
            let va = cache.var_a[(i, j)];
            let gain = if amp * amp * va > 0.0 {
                amp * va / (amp * amp * va + 1.0)
            } else {
                0.0
            };
            let prior = cache.e_a[(i, j)];
            a_hat[(i, j)] = prior + Complex::new(gain, 0.0) * (y - Complex::new(amp, 0.0) * prior);
        }
    }

    // MN side: per-row affine MMSE. Row p of the projected block is
    // sqrt(tau rho) b_p^H + noise, so Bhat = E_b rows + (Y - sqrt() E_b) K^H.
    let mut b_hat = Vec::with_capacity(real.n_mn());
    for m in 0..real.n_mn() {
        let b_true = channels.g_tm[m].adjoint() * w; // N x Nr, rows b_p^H
        let noise_m = crandn(params.n, nr, 1.0, rng);
        let y = b_true.map(|z| z * Complex::new(amp, 0.0))
            + noise_m.map(|z| z * Complex::new(noise_std, 0.0));
        // Prior mean is zero (zero-mean g_tm independent of W).
        let bh = &y * gains[m].k.adjoint();
        b_hat.push(bh);
    }

    Ok(EffectiveEstimates { a_hat, b_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::scenario::CsiQuality;

    fn tiny_params() -> SystemParams {
        SystemParams {
            m: 2,
            n: 6,
            nt: 3,
            nr: 2,
            tau_r: 4,
            tau_t: 4,
            tau: 50,
            ..SystemParams::default()
        }
    }

    fn unit_realization(params: &SystemParams, beta: f64, rho: f64) -> ScenarioRealization {
        let m = params.m;
        ScenarioRealization::synthetic(
            beta,
            vec![beta; m],
            vec![beta; m],
            vec![vec![beta; m]; m],
            rho,
            rho,
            rho,
        )
    }

    #[test]
    fn zero_beta_gives_zero_matrix() {
        let p = tiny_params();
        let mut real = unit_realization(&p, 1.0, 1.0);
        real.beta_tr = 0.0;
        let ch = draw_channels(&p, &real, &mut stream(1, &[0]));
        assert!(ch.g_tr.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn small_scale_unit_variance() {
        let p = tiny_params();
        let real = unit_realization(&p, 0.25, 1.0);
        let mut rng = stream(2, &[0]);
        let mut pow = 0.0;
        let mut count = 0usize;
        for _ in 0..2_000 {
            let ch = draw_channels(&p, &real, &mut rng);
            pow += ch.g_tr.iter().map(|z| z.norm_sqr()).sum::<f64>();
            count += ch.g_tr.len();
        }
        let per_entry = pow / count as f64 / real.beta_tr;
        assert!((per_entry - 1.0).abs() < 0.01, "normalized power {per_entry}");
    }

    #[test]
    fn draw_channels_deterministic() {
        let p = tiny_params();
        let real = unit_realization(&p, 0.5, 2.0);
        let a = draw_channels(&p, &real, &mut stream(3, &[1]));
        let b = draw_channels(&p, &real, &mut stream(3, &[1]));
        assert_eq!(a.g_tr, b.g_tr);
        assert_eq!(a.g_mm[0][1], b.g_mm[0][1]);
        assert!(a.g_mm[0][0].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn gamma_formula_and_empirical_mean_square() {
        // tau rho beta = 1 with beta = 1 gives gamma = 0.5 * beta.
        assert!((mmse_gamma(1, 1.0, 1.0) - 0.5).abs() < 1e-15);

        let mut p = tiny_params();
        p.tau_r = 4;
        let rho = 0.25; // tau_r * rho * beta = 1 at beta = 1
        let real = unit_realization(&p, 1.0, rho);
        let mut rng = stream(4, &[0]);
        let n_draws = 10_000;
        let mut acc = 0.0;
        for _ in 0..n_draws {
            let ch = draw_channels(&p, &real, &mut rng);
            let est = uplink_training(&ch, &real, &p, &mut rng);
            // Pool the squared norms of all Nr columns at MN 0.
            for col in 0..p.nr {
                acc += est.ghat_mr[0].column(col).norm_squared();
            }
        }
        let per_entry = acc / (n_draws * p.nr) as f64 / p.n as f64;
        let gamma = mmse_gamma(p.tau_r, rho, 1.0);
        assert!((gamma - 0.5).abs() < 1e-12);
        assert!(
            (per_entry / gamma - 1.0).abs() < 0.02,
            "empirical {per_entry} vs gamma {gamma}"
        );
    }

    #[test]
    fn uplink_noise_free_limit_recovers_channel() {
        let p = tiny_params();
        // Strong training: tau rho beta >> 1 makes the MMSE gain approach
        // 1/sqrt(tau rho), so the noise-free estimate approaches g.
        let real = unit_realization(&p, 1.0, 1e6);
        let ch = draw_channels(&p, &real, &mut stream(5, &[0]));
        let est = uplink_training_with_noise_std(&ch, &real, &p, 0.0, &mut stream(5, &[1]));
        let err = (&est.ghat_tr - &ch.g_tr).norm() / ch.g_tr.norm();
        assert!(err < 1e-6, "relative error {err}");
    }

    #[test]
    fn uplink_zero_power_gives_zero_estimate() {
        let p = tiny_params();
        let mut real = unit_realization(&p, 1.0, 1.0);
        real.rho_r = 0.0;
        let ch = draw_channels(&p, &real, &mut stream(6, &[0]));
        let est = uplink_training(&ch, &real, &p, &mut stream(6, &[1]));
        assert!(est.ghat_tr.iter().all(|z| z.norm() == 0.0));
        assert!(est.gamma_mr.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn pilot_matrix_orthonormal() {
        let phi = pilot_matrix(4, 40);
        let gram = &phi * phi.adjoint();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)].re - expect).abs() < 1e-15);
                assert!(gram[(i, j)].im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn moment_cache_zf_identity_and_psd() {
        // With near-perfect uplink CSI, ZF makes A diagonal: E{a} off-diagonal
        // vanishes and the diagonal is positive real.
        let mut p = tiny_params();
        p.precoder = PrecoderKind::Zf;
        let real = unit_realization(&p, 1.0, 1e8);
        let cache = effective_moments(PrecoderKind::Zf, &real, &p, 2_000, &mut stream(7, &[0])).unwrap();
        for i in 0..p.nr {
            for j in 0..p.nr {
                if i == j {
                    assert!(cache.e_a[(i, j)].re > 0.0);
                    assert!(cache.e_a[(i, j)].im.abs() < 1e-3);
                } else {
                    assert!(cache.e_a[(i, j)].norm() < 1e-3, "leakage {}", cache.e_a[(i, j)]);
                }
                assert!(cache.var_a[(i, j)] >= 0.0);
            }
        }
        // C_bb is Hermitian PSD: eigenvalues of the Hermitian part >= 0.
        let c = crate::linalg::hermitize(&cache.c_bb(0));
        let eig = c.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn moment_cache_error_scaling() {
        // Standard error of E{a} shrinks like 1/sqrt(n_mc): doubling n_mc
        // should reduce it by about sqrt(2).
        let p = tiny_params();
        let real = unit_realization(&p, 1.0, 1.0);
        let reps = 24;
        let spread = |n_mc: usize, salt: u64| -> f64 {
            let means: Vec<f64> = (0..reps)
                .map(|r| {
                    let cache =
                        effective_moments(PrecoderKind::Mrt, &real, &p, n_mc, &mut stream(8, &[salt, r]))
                            .unwrap();
                    cache.e_a[(0, 0)].re
                })
                .collect();
            let mu = means.iter().sum::<f64>() / reps as f64;
            (means.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / reps as f64).sqrt()
        };
        let s1 = spread(400, 1);
        let s2 = spread(800, 2);
        let ratio = s1 / s2;
        assert!(
            (0.9..2.4).contains(&ratio),
            "expected roughly sqrt(2) error reduction, got ratio {ratio}"
        );
    }

    #[test]
    fn beamforming_noise_free_is_consistent_and_zero_power_reverts_to_prior() {
        let mut p = tiny_params();
        p.precoder = PrecoderKind::Mrt;
        p.csi_quality = CsiQuality::Estimated;
        let real = unit_realization(&p, 1.0, 10.0);
        let mut rng = stream(9, &[0]);
        let cache = effective_moments(PrecoderKind::Mrt, &real, &p, 3_000, &mut rng).unwrap();

        let ch = draw_channels(&p, &real, &mut rng);
        let est = uplink_training(&ch, &real, &p, &mut rng);
        let w = build_data_precoder(&est.ghat_tr, PrecoderKind::Mrt).unwrap();

        // Zero noise: the affine estimator passes the observation through up
        // to the prior shrinkage; with tau rho Var >> 1 the estimate tracks
        // the true value closely.
        let mut strong = real.clone();
        strong.rho_t = 1e9;
        let gains_strong = beam_gains(&cache, &p, &strong).unwrap();
        let eff = beamforming_training_with_noise_std(
            &ch, &w, &strong, &p, &cache, &gains_strong, 0.0, &mut rng,
        )
        .unwrap();
        let a_true = ch.g_tr.adjoint() * &w;
        let rel = (&eff.a_hat - &a_true).norm() / a_true.norm();
        assert!(rel < 1e-3, "noise-free relative error {rel}");
        let b_true = ch.g_tm[0].adjoint() * &w;
        let relb = (&eff.b_hat[0] - &b_true).norm() / b_true.norm();
        assert!(relb < 1e-3, "noise-free relative error {relb}");

        // Zero pilot power: estimates fall back to the prior mean.
        let mut silent = real.clone();
        silent.rho_t = 0.0;
        let gains_zero = beam_gains(&cache, &p, &silent).unwrap();
        let eff0 =
            beamforming_training(&ch, &w, &silent, &p, &cache, &gains_zero, &mut rng).unwrap();
        assert!((&eff0.a_hat - &cache.e_a).norm() < 1e-12);
        assert!(eff0.b_hat[0].norm() < 1e-12, "prior mean of b is zero");
    }

    #[test]
    fn beamforming_rejects_mismatched_cache() {
        let mut p = tiny_params();
        p.precoder = PrecoderKind::Zf;
        let real = unit_realization(&p, 1.0, 1.0);
        let mut rng = stream(10, &[0]);
        let cache = effective_moments(PrecoderKind::Mrt, &real, &p, 100, &mut rng).unwrap();
        let gains = beam_gains(&cache, &p, &real).unwrap();
        let ch = draw_channels(&p, &real, &mut rng);
        let est = uplink_training(&ch, &real, &p, &mut rng);
        let w = build_data_precoder(&est.ghat_tr, PrecoderKind::Zf).unwrap();
        let r = beamforming_training(&ch, &w, &real, &p, &cache, &gains, &mut rng);
        assert!(matches!(r, Err(Error::MomentCacheMismatch(_))));
    }

    #[test]
    fn mmse_error_variance_never_exceeds_prior() {
        // Sample covariance of (bhat - b) should not exceed the prior row
        // covariance trace: the MMSE estimator cannot be worse than using
        // the prior mean.
        let mut p = tiny_params();
        p.precoder = PrecoderKind::Mrt;
        let real = unit_realization(&p, 1.0, 1.0);
        let mut rng = stream(11, &[0]);
        let cache = effective_moments(PrecoderKind::Mrt, &real, &p, 3_000, &mut rng).unwrap();
        let gains = beam_gains(&cache, &p, &real).unwrap();
        let mut err_pow = 0.0;
        let mut prior_pow = 0.0;
        let draws = 3_000;
        for _ in 0..draws {
            let ch = draw_channels(&p, &real, &mut rng);
            let est = uplink_training(&ch, &real, &p, &mut rng);
            let w = match build_data_precoder(&est.ghat_tr, PrecoderKind::Mrt) {
                Ok(w) => w,
                Err(_) => continue,
            };
            let eff = beamforming_training(&ch, &w, &real, &p, &cache, &gains, &mut rng).unwrap();
            let b_true = ch.g_tm[0].adjoint() * &w;
            err_pow += (&eff.b_hat[0] - &b_true).norm_squared();
            prior_pow += b_true.norm_squared();
        }
        assert!(
            err_pow < prior_pow,
            "estimation error power {err_pow} should undercut prior power {prior_pow}"
        );
    }

    #[test]
    fn moment_cache_json_roundtrip() {
        let p = tiny_params();
        let real = unit_realization(&p, 0.5, 1.0);
        let cache = effective_moments(PrecoderKind::Mrt, &real, &p, 50, &mut stream(12, &[0])).unwrap();
        let text = cache.to_json();
        let back = MomentCache::from_json(&text).unwrap();
        assert_eq!(back.n_mc, cache.n_mc);
        assert!((&back.e_a - &cache.e_a).norm() < 1e-15);
    }
}
