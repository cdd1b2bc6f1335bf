//! Spectral efficiency of the untrusted link and of the monitoring CPU, and
//! the monitoring success probability (MSP).
//!
//! Two-level Monte Carlo: the outer level draws geometry plus shadowing
//! ([`crate::scenario::draw_scenario`]), the inner level draws small-scale
//! fading, training noise and data/jamming symbols. The MSP is the outer
//! frequency of the indicator SE_cpu >= SE_ur; the expectations inside each
//! SE expression are inner averages.
//!
//! SE at the UR uses the closed SINR form with perfect knowledge of the
//! effective channel A = G_tr^H W (worst case for the monitor). The jamming
//! interference entering that SINR is the exact second moment of the
//! aggregated maximum-ratio jamming signal: an incoherent part
//! N sum beta gamma pi and a coherent part N^2 (sum sqrt(pi) gamma)^2; the
//! unit tests cross-check it against brute-force moments of the synthesized
//! signal.
//!
//! SE at the CPU is the MMSE-SIC log-det bound with side information
//! Theta = {Bhat_m} (case-1, conditional moments with the estimates held
//! fixed) or Theta = {} (case-2, unconditional moments and no outer
//! expectation around the log).

use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::channel::{
    beam_gains, effective_moments, mmse_gamma, mmse_gain, BeamGain, MomentCache,
};
use crate::linalg::{crandn, hermitize, logdet2_eye_plus, psd_factor, solve_hpd, CMat};
use crate::rng::{stream, tag};
use crate::scenario::{
    draw_colocated_scenario, draw_scenario, CsiCase, CsiQuality, ScenarioRealization, SystemParams,
};
use crate::transmission::{build_data_precoder, load_powers, mmse_combine, MonitoringConfig};
use crate::{Error, Result};

/// Monte-Carlo depths for the SE estimators.
///
/// `n_outer` small-scale conditioning draws per geometry, `n_inner` residual
/// draws per conditioning draw, `n_mc_moments` samples for the per-geometry
/// moment cache. The standard profile is 200/200/5000; `fast()` shrinks all
/// depths tenfold for desk-scale sweeps.
#[derive(Debug, Clone, Copy)]
pub struct ExpectationPlan {
    pub n_inner: usize,
    pub n_outer: usize,
    pub n_mc_moments: usize,
}

impl Default for ExpectationPlan {
    fn default() -> Self {
        ExpectationPlan { n_inner: 200, n_outer: 200, n_mc_moments: 5000 }
    }
}

impl ExpectationPlan {
    pub fn fast() -> Self {
        ExpectationPlan { n_inner: 20, n_outer: 20, n_mc_moments: 500 }
    }

    pub fn with_depths(n_inner: usize, n_outer: usize, n_mc_moments: usize) -> Self {
        assert!(n_inner >= 1 && n_outer >= 1 && n_mc_moments >= 1);
        ExpectationPlan { n_inner, n_outer, n_mc_moments }
    }
}

/// Per-geometry artifacts that depend only on the large-scale coefficients:
/// reusable across every monitoring configuration evaluated on the geometry.
#[derive(Debug, Clone)]
pub enum CsiArtifacts {
    /// Ideal CSI: estimates equal the true channels, no estimation error.
    Perfect,
    /// Trained CSI: moment cache, per-MN estimator gains and the Cholesky
    /// factor of each per-row error covariance.
    Estimated {
        cache: MomentCache,
        gains: Vec<BeamGain>,
        err_factor: Vec<CMat>,
    },
}

/// A geometry draw bundled with everything the SE estimators reuse.
#[derive(Debug, Clone)]
pub struct GeometryWorkspace {
    pub real: ScenarioRealization,
    pub artifacts: CsiArtifacts,
    /// Per-entry mean square of the MN->UR channel estimates (beta itself
    /// under perfect CSI).
    pub gamma_mr: Vec<f64>,
    /// E{||ghat_mr,n||^2} = N gamma; coefficient of the jamming budget.
    pub ghat_norm_sq: Vec<f64>,
    /// Antennas per MN (uniform except in asymmetric co-located layouts).
    pub n_antennas: Vec<usize>,
    pub id: u64,
}

impl GeometryWorkspace {
    /// Wraps an existing realization (drawn or synthetic) with the derived
    /// per-geometry artifacts; every MN carries `params.n` antennas.
    pub fn from_realization(
        params: &SystemParams,
        real: ScenarioRealization,
        plan: &ExpectationPlan,
        seed: u64,
        id: u64,
    ) -> Result<Self> {
        let n_ant = vec![params.n; real.n_mn()];
        Self::from_realization_with_antennas(params, real, n_ant, plan, seed, id)
    }

    /// Same, with explicit per-MN antenna counts.
    pub fn from_realization_with_antennas(
        params: &SystemParams,
        real: ScenarioRealization,
        n_antennas: Vec<usize>,
        plan: &ExpectationPlan,
        seed: u64,
        id: u64,
    ) -> Result<Self> {
        assert_eq!(n_antennas.len(), real.n_mn(), "one antenna count per MN");
        let gamma_mr: Vec<f64> = match params.csi_quality {
            CsiQuality::Perfect => real.beta_mr.clone(),
            CsiQuality::Estimated => real
                .beta_mr
                .iter()
                .map(|&b| mmse_gamma(params.tau_r, real.rho_r, b))
                .collect(),
        };
        let ghat_norm_sq: Vec<f64> = gamma_mr
            .iter()
            .zip(&n_antennas)
            .map(|(&g, &n)| n as f64 * g)
            .collect();
        let artifacts = match params.csi_quality {
            CsiQuality::Perfect => CsiArtifacts::Perfect,
            CsiQuality::Estimated => {
                let mut rng = stream(seed, &[tag::MOMENTS, id]);
                let cache =
                    effective_moments(params.precoder, &real, params, plan.n_mc_moments, &mut rng)?;
                let gains = beam_gains(&cache, params, &real)?;
                let err_factor = gains.iter().map(|g| psd_factor(&g.c_err)).collect();
                CsiArtifacts::Estimated { cache, gains, err_factor }
            }
        };
        Ok(GeometryWorkspace { real, artifacts, gamma_mr, ghat_norm_sq, n_antennas, id })
    }
}

/// Builds `n_geom` independent geometry workspaces (parallel, order-stable).
pub fn build_workspaces(
    params: &SystemParams,
    plan: &ExpectationPlan,
    seed: u64,
    n_geom: usize,
) -> Result<Vec<GeometryWorkspace>> {
    (0..n_geom as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = stream(seed, &[tag::GEOMETRY, id]);
            let real = draw_scenario(params, &mut rng);
            GeometryWorkspace::from_realization(params, real, plan, seed, id)
        })
        .collect()
}

/// Co-located variant: `params` must already describe the two virtual arrays
/// (m = 2) and `n_antennas` their sizes (observing array first). UT/UR
/// positions are drawn from the same sub-streams as [`build_workspaces`], so
/// geometry `id` pairs up across the two deployments.
pub fn build_colocated_workspaces(
    params: &SystemParams,
    n_antennas: [usize; 2],
    si_db: f64,
    plan: &ExpectationPlan,
    seed: u64,
    n_geom: usize,
) -> Result<Vec<GeometryWorkspace>> {
    if params.m != 2 {
        return Err(Error::BadParams("co-located variant uses exactly two virtual arrays".into()));
    }
    (0..n_geom as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = stream(seed, &[tag::GEOMETRY, id]);
            let real = draw_colocated_scenario(params, si_db, &mut rng);
            GeometryWorkspace::from_realization_with_antennas(
                params,
                real,
                n_antennas.to_vec(),
                plan,
                seed,
                id,
            )
        })
        .collect()
}

// ---------------------------------------------------------------------------
// UR-side spectral efficiency
// ---------------------------------------------------------------------------

/// Exact second moment of the aggregated MR jamming at UR antenna `stream`.
/// Incoherent part: sum_m N_m sum_{n'} (1-alpha) pi beta gamma; coherent
/// part: (sum_m (1-alpha) N_m sqrt(pi_{m,stream}) gamma)^2.
pub fn jamming_interference(
    _params: &SystemParams,
    ws: &GeometryWorkspace,
    config: &MonitoringConfig,
    stream_idx: usize,
) -> f64 {
    let mut incoherent = 0.0;
    let mut coherent_amp = 0.0;
    for m in config.jammers() {
        let n = ws.n_antennas[m] as f64;
        let gamma = ws.gamma_mr[m];
        let beta = ws.real.beta_mr[m];
        for np in 0..config.nr {
            incoherent += n * config.pi_at(m, np) * beta * gamma;
        }
        coherent_amp += n * config.pi_at(m, stream_idx).sqrt() * gamma;
    }
    incoherent + coherent_amp * coherent_amp
}

fn draw_precoder<R: Rng + ?Sized>(
    params: &SystemParams,
    real: &ScenarioRealization,
    rng: &mut R,
) -> Result<(CMat, CMat)> {
    // Redraw on a degenerate ZF Gram matrix instead of regularizing.
    for _ in 0..200 {
        let g_tr = crandn(params.nt, params.nr, real.beta_tr, rng);
        let ghat = match params.csi_quality {
            CsiQuality::Perfect => g_tr.clone(),
            CsiQuality::Estimated => {
                let amp = (params.tau_r as f64 * real.rho_r).sqrt();
                let noise = crandn(params.nt, params.nr, 1.0, rng);
                let c = mmse_gain(params.tau_r, real.rho_r, real.beta_tr);
                (g_tr.map(|z| z * Complex::new(amp, 0.0)) + noise)
                    .map(|z| z * Complex::new(c, 0.0))
            }
        };
        match build_data_precoder(&ghat, params.precoder) {
            Ok(w) => return Ok((g_tr, w)),
            Err(Error::DegenerateChannel) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateChannel)
}

/// SE of the untrusted link: prelog * E{log2(1 + sum_n Gamma_n)} with the
/// per-antenna SINR built from the realized effective channel and the
/// statistical jamming interference.
pub fn se_ur(
    params: &SystemParams,
    ws: &GeometryWorkspace,
    config: &MonitoringConfig,
    plan: &ExpectationPlan,
    seed: u64,
) -> Result<f64> {
    let lambda = load_powers(params.nr);
    let iota: Vec<f64> = (0..params.nr)
        .map(|n| jamming_interference(params, ws, config, n))
        .collect();
    let rho_t = ws.real.rho_t;
    let rho_j = ws.real.rho_j;
    let mut rng = stream(seed, &[tag::SE_UR, ws.id]);
    let mut acc = 0.0;
    for _ in 0..plan.n_outer {
        let (g_tr, w) = draw_precoder(params, &ws.real, &mut rng)?;
        let a = g_tr.adjoint() * &w;
        let mut sinr_sum = 0.0;
        for n in 0..params.nr {
            let num = rho_t * lambda[n] * a[(n, n)].norm_sqr();
            let mut cross = 0.0;
            for np in 0..params.nr {
                if np != n {
                    cross += lambda[np] * a[(n, np)].norm_sqr();
                }
            }
            let den = 1.0 + rho_t * cross + rho_j * iota[n];
            sinr_sum += num / den;
        }
        acc += (1.0 + sinr_sum).log2();
    }
    Ok(params.prelog() * acc / plan.n_outer as f64)
}

// ---------------------------------------------------------------------------
// CPU-side spectral efficiency
// ---------------------------------------------------------------------------

/// One small-scale training draw: precoder, per-observer effective channels,
/// their estimates and the MMSE combiners.
struct TrainingDraw {
    /// True effective channels of observing MNs (empty matrices elsewhere).
    b_true: Vec<CMat>,
    /// Estimated effective channels of observing MNs.
    b_hat: Vec<CMat>,
    /// Combiners of observing MNs.
    v: Vec<CMat>,
}

fn training_draw<R: Rng + ?Sized>(
    params: &SystemParams,
    ws: &GeometryWorkspace,
    config: &MonitoringConfig,
    rng: &mut R,
) -> Result<TrainingDraw> {
    let (_, w) = draw_precoder(params, &ws.real, rng)?;
    let m_count = config.m();
    let mut b_true = vec![CMat::zeros(0, 0); m_count];
    let mut b_hat = vec![CMat::zeros(0, 0); m_count];
    let mut v = vec![CMat::zeros(0, 0); m_count];
    let amp = (params.tau_t as f64 * ws.real.rho_t).sqrt();
    for m in config.observers() {
        let n_ant = ws.n_antennas[m];
        let g_tm = crandn(params.nt, n_ant, ws.real.beta_tm[m], rng);
        let bt = g_tm.adjoint() * &w;
        let bh = match &ws.artifacts {
            CsiArtifacts::Perfect => bt.clone(),
            CsiArtifacts::Estimated { gains, .. } => {
                let noise = crandn(n_ant, params.nr, 1.0, rng);
                let y = bt.map(|z| z * Complex::new(amp, 0.0)) + noise;
                &y * gains[m].k.adjoint()
            }
        };
        v[m] = mmse_combine(&bh, ws.real.rho_t);
        b_true[m] = bt;
        b_hat[m] = bh;
    }
    Ok(TrainingDraw { b_true, b_hat, v })
}

/// Extra per-antenna noise variance from residual self-interference: the
/// coupling factor times the expected transmitted jamming power of the
/// co-sited jamming arrays.
fn self_interference_var(ws: &GeometryWorkspace, config: &MonitoringConfig) -> Vec<f64> {
    let m_count = config.m();
    let tx_total: f64 = config
        .jammers()
        .map(|l| ws.real.rho_j * config.budget_load(l, ws.ghat_norm_sq[l]))
        .sum();
    (0..m_count).map(|m| ws.real.si_factor[m] * tx_total).collect()
}

/// D = sum_m alpha_m V_m^H B_m Lambda^{1/2}.
fn aggregate_effective(
    config: &MonitoringConfig,
    v: &[CMat],
    b: &[CMat],
    lambda: &[f64],
) -> CMat {
    let nr = config.nr;
    let mut d = CMat::zeros(nr, nr);
    for m in config.observers() {
        d += v[m].adjoint() * &b[m];
    }
    for j in 0..nr {
        let s = Complex::new(lambda[j].sqrt(), 0.0);
        for i in 0..nr {
            d[(i, j)] *= s;
        }
    }
    d
}

/// Samples T = sum_m alpha_m V_m^H F_m for one draw of the jamming-side
/// randomness, where F_m = sum_l (1-alpha_l) G_lm^H Ghat_l Pi_l^{1/2}.
///
/// Uses the matrix-normal reduction: conditionally on the jamming precoders,
/// V^H G^H C with i.i.d. CN(0, beta) G equals L_v Z L_c^H in distribution,
/// where L_v L_v^H = beta V^H V, L_c L_c^H = C^H C and Z is an i.i.d.
/// CN(0,1) Nr x Nr block. A unit test checks the reduction against literal
/// channel sampling.
pub(crate) struct JamSampler {
    /// Cholesky-type factors of V_m^H V_m per observer (index by MN id).
    lv: Vec<CMat>,
    observers: Vec<usize>,
    jammers: Vec<usize>,
    /// sqrt(pi) diagonal per jammer.
    pi_sqrt: Vec<Vec<f64>>,
}

impl JamSampler {
    pub(crate) fn new(config: &MonitoringConfig, v: &[CMat]) -> Self {
        let observers: Vec<usize> = config.observers().collect();
        let jammers: Vec<usize> = config.jammers().collect();
        let lv = v
            .iter()
            .enumerate()
            .map(|(m, vm)| {
                if config.alpha[m] {
                    psd_factor(&(vm.adjoint() * vm))
                } else {
                    CMat::zeros(0, 0)
                }
            })
            .collect();
        let pi_sqrt = (0..config.m())
            .map(|m| (0..config.nr).map(|n| config.pi_at(m, n).sqrt()).collect())
            .collect();
        JamSampler { lv, observers, jammers, pi_sqrt }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(
        &self,
        params: &SystemParams,
        ws: &GeometryWorkspace,
        rng: &mut R,
    ) -> CMat {
        let nr = params.nr;
        let mut t = CMat::zeros(nr, nr);
        for &l in &self.jammers {
            let gamma = ws.gamma_mr[l];
            if gamma <= 0.0 {
                continue;
            }
            // Fresh jamming precoder Ghat_l, reduced to the Gram factor of
            // C = Ghat_l Pi^{1/2}.
            let n_ant = ws.n_antennas[l];
            let ghat = crandn(n_ant, nr, gamma, rng);
            let mut c = ghat;
            for j in 0..nr {
                let s = Complex::new(self.pi_sqrt[l][j], 0.0);
                for i in 0..n_ant {
                    c[(i, j)] *= s;
                }
            }
            let lc = psd_factor(&(c.adjoint() * &c));
            for &m in &self.observers {
                let beta = ws.real.beta_mm[l][m];
                if beta <= 0.0 {
                    continue;
                }
                let z = crandn(nr, nr, 1.0, rng);
                let pair = (&self.lv[m] * z) * lc.adjoint();
                t += pair.map(|x| x * Complex::new(beta.sqrt(), 0.0));
            }
        }
        t
    }
}

/// Samples the aggregated estimation error D~ = sum alpha V^H B~ Lambda^{1/2}
/// with fresh per-row errors b~ ~ CN(0, C_err).
fn sample_error_term<R: Rng + ?Sized>(
    ws: &GeometryWorkspace,
    config: &MonitoringConfig,
    v: &[CMat],
    err_factor: &[CMat],
    lambda: &[f64],
    rng: &mut R,
) -> CMat {
    let nr = config.nr;
    let mut d = CMat::zeros(nr, nr);
    for m in config.observers() {
        let xi = crandn(nr, ws.n_antennas[m], 1.0, rng);
        let b_err = xi.adjoint() * err_factor[m].adjoint();
        d += v[m].adjoint() * b_err;
    }
    for j in 0..nr {
        let s = Complex::new(lambda[j].sqrt(), 0.0);
        for i in 0..nr {
            d[(i, j)] *= s;
        }
    }
    d
}

fn scaled(m: &CMat, s: f64) -> CMat {
    m.map(|z| z * Complex::new(s, 0.0))
}

/// One conditioning draw of the case-1 log-det sample: the estimates (and
/// therefore the combiners) are held fixed while the estimation errors, the
/// jamming precoders and the inter-MN channels are redrawn `n_inner` times.
fn case1_logdet_sample<R: Rng + ?Sized>(
    params: &SystemParams,
    ws: &GeometryWorkspace,
    config: &MonitoringConfig,
    draw: &TrainingDraw,
    n_inner: usize,
    rng: &mut R,
) -> Result<f64> {
    let nr = params.nr;
    let lambda = load_powers(nr);
    let rho_t = ws.real.rho_t;
    let rho_j = ws.real.rho_j;

    let d_hat = aggregate_effective(config, &draw.v, &draw.b_hat, &lambda);

    let si = self_interference_var(ws, config);
    let mut noise = CMat::zeros(nr, nr);
    for m in config.observers() {
        noise += scaled(&(draw.v[m].adjoint() * &draw.v[m]), 1.0 + si[m]);
    }

    let jam = JamSampler::new(config, &draw.v);
    let mut jam_acc = CMat::zeros(nr, nr);
    let mut err_acc = CMat::zeros(nr, nr);
    let sample_err = match &ws.artifacts {
        CsiArtifacts::Perfect => None,
        CsiArtifacts::Estimated { err_factor, .. } => Some(err_factor),
    };
    for _ in 0..n_inner {
        if rho_j > 0.0 {
            let t = jam.sample(params, ws, rng);
            jam_acc += &t * t.adjoint();
        }
        if let Some(err_factor) = sample_err {
            let e = sample_error_term(ws, config, &draw.v, err_factor, &lambda, rng);
            err_acc += &e * e.adjoint();
        }
    }
    let inv = 1.0 / n_inner as f64;
    let psi = hermitize(&(scaled(&jam_acc, rho_j * inv) + noise + scaled(&err_acc, rho_t * inv)));
    let upsilon = scaled(&(d_hat.adjoint() * solve_hpd(&psi, &d_hat)?), rho_t);
    logdet2_eye_plus(&upsilon)
}

/// Achievable SE at the CPU with the per-MN estimates forwarded (case-1):
/// prelog * E{log2 det(I + rho_t Dhat^H Psi^{-1} Dhat)}.
pub fn se_cpu_case1(
    params: &SystemParams,
    ws: &GeometryWorkspace,
    config: &MonitoringConfig,
    plan: &ExpectationPlan,
    seed: u64,
) -> Result<f64> {
    if config.n_observers() == 0 {
        return Ok(0.0);
    }
    let mut rng = stream(seed, &[tag::SE_CASE1, ws.id]);
    let mut acc = 0.0;
    for _ in 0..plan.n_outer {
        let draw = training_draw(params, ws, config, &mut rng)?;
        acc += case1_logdet_sample(params, ws, config, &draw, plan.n_inner, &mut rng)?;
    }
    Ok(params.prelog() * acc / plan.n_outer as f64)
}

/// Assembles the case-2 SE from unconditional moments. Exposed so small
/// hand-built instances can be checked independently of the sampler.
pub fn case2_se_from_moments(
    prelog: f64,
    rho_t: f64,
    e_d: &CMat,
    e_ddh: &CMat,
    e_jam_scaled: &CMat,
    e_noise: &CMat,
) -> Result<f64> {
    let psi = hermitize(&(e_jam_scaled + e_noise + scaled(&(e_ddh - &(e_d * e_d.adjoint())), rho_t)));
    let upsilon = scaled(&(e_d.adjoint() * solve_hpd(&psi, e_d)?), rho_t);
    Ok(prelog * logdet2_eye_plus(&upsilon)?)
}

/// Achievable SE at the CPU with statistics only (case-2): a deterministic
/// log-det bound on the unconditional moments, estimated with
/// n_inner * n_outer full training draws. No expectation wraps the log.
pub fn se_cpu_case2(
    params: &SystemParams,
    ws: &GeometryWorkspace,
    config: &MonitoringConfig,
    plan: &ExpectationPlan,
    seed: u64,
) -> Result<f64> {
    if config.n_observers() == 0 {
        return Ok(0.0);
    }
    let nr = params.nr;
    let lambda = load_powers(nr);
    let rho_t = ws.real.rho_t;
    let rho_j = ws.real.rho_j;
    let si = self_interference_var(ws, config);
    let draws = plan.n_inner * plan.n_outer;
    let mut rng = stream(seed, &[tag::SE_CASE2, ws.id]);

    let mut e_d = CMat::zeros(nr, nr);
    let mut e_ddh = CMat::zeros(nr, nr);
    let mut e_jam = CMat::zeros(nr, nr);
    let mut e_noise = CMat::zeros(nr, nr);
    for _ in 0..draws {
        let draw = training_draw(params, ws, config, &mut rng)?;
        let d = aggregate_effective(config, &draw.v, &draw.b_true, &lambda);
        e_ddh += &d * d.adjoint();
        e_d += d;
        for m in config.observers() {
            e_noise += scaled(&(draw.v[m].adjoint() * &draw.v[m]), 1.0 + si[m]);
        }
        if rho_j > 0.0 {
            let jam = JamSampler::new(config, &draw.v);
            let t = jam.sample(params, ws, &mut rng);
            e_jam += &t * t.adjoint();
        }
    }
    let inv = 1.0 / draws as f64;
    case2_se_from_moments(
        params.prelog(),
        rho_t,
        &scaled(&e_d, inv),
        &scaled(&e_ddh, inv),
        &scaled(&e_jam, rho_j * inv),
        &scaled(&e_noise, inv),
    )
}

// ---------------------------------------------------------------------------
// MSP and reporting
// ---------------------------------------------------------------------------

/// SE numbers and success indicators for one geometry and configuration.
#[derive(Debug, Clone)]
pub struct SeReport {
    pub geom_id: u64,
    pub config_hash: u64,
    pub se_r: f64,
    pub se_c1: f64,
    pub se_c2: f64,
    pub msp1: bool,
    pub msp2: bool,
}

impl SeReport {
    pub fn csv_header() -> &'static str {
        "geometry_id,config_hash,se_r,se_c1,se_c2,msp1,msp2"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:016x},{:.6e},{:.6e},{:.6e},{},{}",
            self.geom_id,
            self.config_hash,
            self.se_r,
            self.se_c1,
            self.se_c2,
            self.msp1 as u8,
            self.msp2 as u8
        )
    }
}

/// Evaluates both CSI cases for one geometry; per-geometry feasibility is
/// enforced by scale-down projection before evaluation.
pub fn evaluate_report(
    params: &SystemParams,
    ws: &GeometryWorkspace,
    config: &MonitoringConfig,
    plan: &ExpectationPlan,
    seed: u64,
) -> Result<SeReport> {
    let cfg = config.projected(&ws.ghat_norm_sq);
    let se_r = se_ur(params, ws, &cfg, plan, seed)?;
    let se_c1 = se_cpu_case1(params, ws, &cfg, plan, seed)?;
    let se_c2 = se_cpu_case2(params, ws, &cfg, plan, seed)?;
    Ok(SeReport {
        geom_id: ws.id,
        config_hash: cfg.fingerprint(),
        se_r,
        se_c1,
        se_c2,
        msp1: se_c1 >= se_r,
        msp2: se_c2 >= se_r,
    })
}

/// Success indicator for the configured CSI case only (the optimizer path).
pub fn evaluate_indicator(
    params: &SystemParams,
    ws: &GeometryWorkspace,
    config: &MonitoringConfig,
    plan: &ExpectationPlan,
    seed: u64,
) -> Result<bool> {
    let cfg = config.projected(&ws.ghat_norm_sq);
    let se_r = se_ur(params, ws, &cfg, plan, seed)?;
    let se_c = match params.csi_case {
        CsiCase::Case1 => se_cpu_case1(params, ws, &cfg, plan, seed)?,
        CsiCase::Case2 => se_cpu_case2(params, ws, &cfg, plan, seed)?,
    };
    Ok(se_c >= se_r)
}

/// MSP point estimate with its binomial standard error and the per-geometry
/// indicator vector (for paired comparisons).
#[derive(Debug, Clone)]
pub struct MspEstimate {
    pub msp: f64,
    pub stderr: f64,
    pub indicators: Vec<bool>,
}

impl MspEstimate {
    pub fn from_indicators(indicators: Vec<bool>) -> Self {
        let n = indicators.len().max(1) as f64;
        let hits = indicators.iter().filter(|&&b| b).count() as f64;
        let p = hits / n;
        MspEstimate { msp: p, stderr: (p * (1.0 - p) / n).sqrt(), indicators }
    }
}

/// MSP of a fixed monitoring configuration over fresh geometry draws:
/// the fraction of realizations where the CPU SE (configured CSI case)
/// reaches the untrusted-link SE.
pub fn msp_estimate(
    params: &SystemParams,
    config: &MonitoringConfig,
    plan: &ExpectationPlan,
    n_geom: usize,
    seed: u64,
) -> Result<MspEstimate> {
    assert!(n_geom >= 1);
    let workspaces = build_workspaces(params, plan, seed, n_geom)?;
    msp_over_workspaces(params, &workspaces, |_, _| config.clone(), plan, seed)
}

/// MSP over prebuilt workspaces with a per-geometry configuration rule
/// (fixed config, per-geometry random assignment, budget-fraction mapping).
pub fn msp_over_workspaces<F>(
    params: &SystemParams,
    workspaces: &[GeometryWorkspace],
    config_fn: F,
    plan: &ExpectationPlan,
    seed: u64,
) -> Result<MspEstimate>
where
    F: Fn(usize, &GeometryWorkspace) -> MonitoringConfig + Sync,
{
    let indicators: Result<Vec<bool>> = workspaces
        .par_iter()
        .enumerate()
        .map(|(i, ws)| {
            let cfg = config_fn(i, ws);
            evaluate_indicator(params, ws, &cfg, plan, seed)
        })
        .collect();
    Ok(MspEstimate::from_indicators(indicators?))
}

/// Writes per-geometry SE reports for a fixed configuration to CSV, with an
/// optional scheme tag column appended.
pub fn write_reports_csv(
    params: &SystemParams,
    config: &MonitoringConfig,
    plan: &ExpectationPlan,
    n_geom: usize,
    seed: u64,
    tag_col: Option<&str>,
    path: &std::path::Path,
) -> Result<()> {
    use std::io::Write;
    let workspaces = build_workspaces(params, plan, seed, n_geom)?;
    let reports: Result<Vec<SeReport>> = workspaces
        .par_iter()
        .map(|ws| evaluate_report(params, ws, config, plan, seed))
        .collect();
    let mut out = String::new();
    out.push_str(SeReport::csv_header());
    if tag_col.is_some() {
        out.push_str(",scheme");
    }
    out.push('\n');
    for r in reports? {
        out.push_str(&r.csv_row());
        if let Some(tag) = tag_col {
            out.push(',');
            out.push_str(tag);
        }
        out.push('\n');
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Fronthaul signaling load per coherence block: complex scalars forwarded by
/// each MN and statistical parameters needed at the CPU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalingLoad {
    pub scalars_per_block: u64,
    pub stat_params_case1: u64,
    pub stat_params_case2: u64,
}

pub fn signaling_load(params: &SystemParams, config: &MonitoringConfig) -> SignalingLoad {
    let payload = params.tau.saturating_sub(params.tau_t + params.tau_r) as u64;
    let scalars = payload * params.nr as u64;
    let m_obs = config.n_observers() as u64;
    SignalingLoad {
        scalars_per_block: scalars,
        stat_params_case1: (params.nr as u64).pow(2) * m_obs,
        stat_params_case2: 0,
    }
}

/// Deterministic RNG usable inside tests and sweeps.
pub fn seeded_rng(seed: u64, tags: &[u64]) -> ChaCha12Rng {
    stream(seed, tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{crandn_vec, fro_norm, CVec};
    use crate::scenario::PrecoderKind;

    fn tiny_params() -> SystemParams {
        SystemParams {
            m: 4,
            n: 6,
            nt: 3,
            nr: 2,
            tau_r: 4,
            tau_t: 4,
            tau: 50,
            precoder: PrecoderKind::Mrt,
            ..SystemParams::default()
        }
    }

    fn synthetic_ws(params: &SystemParams, beta: f64, rho: f64, plan: &ExpectationPlan) -> GeometryWorkspace {
        let m = params.m;
        let real = ScenarioRealization::synthetic(
            beta,
            vec![beta; m],
            vec![beta; m],
            vec![vec![beta; m]; m],
            rho,
            rho,
            rho,
        );
        GeometryWorkspace::from_realization(params, real, plan, 7, 0).unwrap()
    }

    fn half_jamming_config(params: &SystemParams, ws: &GeometryWorkspace) -> MonitoringConfig {
        let alpha: Vec<bool> = (0..params.m).map(|m| m % 2 == 0).collect();
        MonitoringConfig::equal_power_pi(alpha, &ws.ghat_norm_sq, params.nr)
    }

    #[test]
    fn se_ur_is_zero_without_transmit_power() {
        let p = tiny_params();
        let plan = ExpectationPlan::with_depths(4, 8, 200);
        let mut ws = synthetic_ws(&p, 1.0, 2.0, &plan);
        ws.real.rho_t = 0.0;
        let cfg = MonitoringConfig::all_observing(p.m, p.nr);
        let se = se_ur(&p, &ws, &cfg, &plan, 1).unwrap();
        assert_eq!(se, 0.0);
    }

    #[test]
    fn no_jammers_removes_interference() {
        let p = tiny_params();
        let plan = ExpectationPlan::with_depths(4, 8, 200);
        let ws = synthetic_ws(&p, 1.0, 2.0, &plan);
        let cfg = MonitoringConfig::all_observing(p.m, p.nr);
        for n in 0..p.nr {
            assert_eq!(jamming_interference(&p, &ws, &cfg, n), 0.0);
        }
    }

    #[test]
    fn single_stream_perfect_csi_matches_direct_capacity() {
        // Nr = 1, perfect CSI, no jamming: Gamma = rho_t ||g||^2, so SE must
        // equal prelog * E{log2(1 + rho_t ||g||^2)} computed by brute force
        // on the same channel stream.
        let mut p = tiny_params();
        p.nr = 1;
        p.nt = 3;
        p.csi_quality = CsiQuality::Perfect;
        p.precoder = PrecoderKind::Zf;
        let plan = ExpectationPlan::with_depths(2, 4000, 10);
        let ws = synthetic_ws(&p, 0.8, 3.0, &plan);
        let cfg = MonitoringConfig::all_observing(p.m, p.nr);
        let se = se_ur(&p, &ws, &cfg, &plan, 3).unwrap();

        // Independent oracle over its own large sample of channels.
        let mut rng = seeded_rng(99, &[1]);
        let mut acc = 0.0;
        let n = 60_000;
        for _ in 0..n {
            let g = crandn_vec(p.nt, ws.real.beta_tr, &mut rng);
            acc += (1.0 + ws.real.rho_t * g.norm_squared()).log2();
        }
        let oracle = p.prelog() * acc / n as f64;
        let rel = (se - oracle).abs() / oracle;
        assert!(rel < 0.03, "se {se} vs oracle {oracle} (rel {rel})");
    }

    #[test]
    fn jamming_interference_matches_brute_force_moment() {
        // The closed-form iota must match the second moment of the actual
        // aggregated jamming signal at each UR antenna.
        let p = tiny_params();
        let plan = ExpectationPlan::with_depths(2, 2, 400);
        let ws = synthetic_ws(&p, 0.7, 1.5, &plan);
        let cfg = half_jamming_config(&p, &ws);
        let mut rng = seeded_rng(5, &[0]);
        let draws = 60_000;
        let mut pow = vec![0.0; p.nr];
        for _ in 0..draws {
            let x = crandn_vec(p.nr, 1.0, &mut rng);
            let mut received = CVec::zeros(p.nr);
            for l in cfg.jammers() {
                // True channel and its estimate share the MMSE correlation:
                // g = ghat + e with independent parts.
                let ghat = crandn(p.n, p.nr, ws.gamma_mr[l], &mut rng);
                let err = crandn(p.n, p.nr, ws.real.beta_mr[l] - ws.gamma_mr[l], &mut rng);
                let g = &ghat + &err;
                let mut s = CVec::zeros(p.nr);
                for k in 0..p.nr {
                    s[k] = x[k] * Complex::new(cfg.pi_at(l, k).sqrt(), 0.0);
                }
                received += g.adjoint() * (&ghat * s);
            }
            for n in 0..p.nr {
                pow[n] += received[n].norm_sqr();
            }
        }
        for n in 0..p.nr {
            let empirical = pow[n] / draws as f64;
            let closed = jamming_interference(&p, &ws, &cfg, n);
            let rel = (empirical - closed).abs() / closed;
            assert!(rel < 0.05, "antenna {n}: empirical {empirical} vs closed {closed}");
        }
    }

    #[test]
    fn case1_zero_without_observers_and_case2_zero_all_jamming() {
        let p = tiny_params();
        let plan = ExpectationPlan::with_depths(4, 4, 200);
        let ws = synthetic_ws(&p, 1.0, 2.0, &plan);
        let cfg = MonitoringConfig::equal_power_pi(vec![false; p.m], &ws.ghat_norm_sq, p.nr);
        assert_eq!(se_cpu_case1(&p, &ws, &cfg, &plan, 1).unwrap(), 0.0);
        assert_eq!(se_cpu_case2(&p, &ws, &cfg, &plan, 1).unwrap(), 0.0);
    }

    #[test]
    fn case1_perfect_csi_no_jamming_matches_direct_formula() {
        // With perfect CSI and no jamming the sampled Psi reduces to the
        // noise Gram alone, so one conditioning draw must reproduce
        // log2 det(I + rho_t D^H (sum V^H V)^{-1} D) exactly.
        let mut p = tiny_params();
        p.csi_quality = CsiQuality::Perfect;
        let plan = ExpectationPlan::with_depths(3, 1, 10);
        let mut ws = synthetic_ws(&p, 1.0, 2.0, &plan);
        ws.real.rho_j = 0.0;
        let cfg = MonitoringConfig::all_observing(p.m, p.nr);
        let mut rng = seeded_rng(11, &[2]);
        let draw = training_draw(&p, &ws, &cfg, &mut rng).unwrap();
        let sample = case1_logdet_sample(&p, &ws, &cfg, &draw, plan.n_inner, &mut rng).unwrap();

        let lambda = load_powers(p.nr);
        let d = aggregate_effective(&cfg, &draw.v, &draw.b_true, &lambda);
        let mut noise = CMat::zeros(p.nr, p.nr);
        for m in cfg.observers() {
            noise += draw.v[m].adjoint() * &draw.v[m];
        }
        let inv = noise.clone().lu().try_inverse().unwrap();
        let upsilon = scaled(&(d.adjoint() * inv * &d), ws.real.rho_t);
        let direct = logdet2_eye_plus(&upsilon).unwrap();
        assert!(
            (sample - direct).abs() < 1e-9,
            "sample {sample} vs direct {direct}"
        );
    }

    #[test]
    fn case1_monotone_in_jamming_power() {
        let p = tiny_params();
        let plan = ExpectationPlan::with_depths(8, 6, 300);
        let ws = synthetic_ws(&p, 0.8, 2.0, &plan);
        let cfg = half_jamming_config(&p, &ws);
        let base = se_cpu_case1(&p, &ws, &cfg, &plan, 21).unwrap();
        let mut hot = ws.clone();
        hot.real.rho_j *= 100.0;
        let jammed = se_cpu_case1(&p, &hot, &cfg, &plan, 21).unwrap();
        assert!(
            jammed <= base + 1e-9,
            "jamming only adds PSD mass: {jammed} vs {base}"
        );
    }

    #[test]
    fn case2_below_case1_on_average() {
        // More side information cannot hurt this bounding technique.
        let p = tiny_params();
        let plan = ExpectationPlan::with_depths(10, 10, 400);
        let mut diff = 0.0;
        for g in 0..12u64 {
            let mut rng = stream(33, &[tag::GEOMETRY, g]);
            let real = draw_scenario(&p, &mut rng);
            let ws = GeometryWorkspace::from_realization(&p, real, &plan, 33, g).unwrap();
            let cfg = half_jamming_config(&p, &ws);
            let c1 = se_cpu_case1(&p, &ws, &cfg, &plan, 33).unwrap();
            let c2 = se_cpu_case2(&p, &ws, &cfg, &plan, 33).unwrap();
            diff += c1 - c2;
        }
        assert!(diff > 0.0, "paired mean of (case1 - case2) should be positive: {diff}");
    }

    #[test]
    fn case2_hand_built_instance() {
        // 2x2 moments chosen so the assembly is computable by hand:
        // E{D} = diag(1, 2), E{DD^H} = E{D}E{D}^H + 0.5 I, jam = 0.25 I,
        // noise = 0.25 I, rho_t = 1, prelog = 1.
        // Psi = 0.5I + 0.25I + 0.25I = I, Upsilon = diag(1, 4),
        // SE = log2(2) + log2(5).
        let e_d = CMat::from_diagonal(&CVec::from_vec(vec![
            Complex::new(1.0, 0.0),
            Complex::new(2.0, 0.0),
        ]));
        let e_ddh = &e_d * e_d.adjoint() + scaled(&CMat::identity(2, 2), 0.5);
        let jam = scaled(&CMat::identity(2, 2), 0.25);
        let noise = scaled(&CMat::identity(2, 2), 0.25);
        let se = case2_se_from_moments(1.0, 1.0, &e_d, &e_ddh, &jam, &noise).unwrap();
        let expect = 2.0f64.log2() + 5.0f64.log2();
        assert!((se - expect).abs() < 1e-12, "se {se} vs hand value {expect}");
    }

    #[test]
    fn matrix_normal_jam_sampler_matches_literal_channels() {
        // E{T T^H} from the reduced sampler must agree with literally drawn
        // inter-MN channels.
        let p = tiny_params();
        let plan = ExpectationPlan::with_depths(2, 2, 300);
        let ws = synthetic_ws(&p, 0.6, 1.2, &plan);
        let cfg = half_jamming_config(&p, &ws);
        let mut rng = seeded_rng(17, &[4]);
        let draw = training_draw(&p, &ws, &cfg, &mut rng).unwrap();
        let sampler = JamSampler::new(&cfg, &draw.v);

        let draws = 30_000;
        let mut reduced = CMat::zeros(p.nr, p.nr);
        for _ in 0..draws {
            let t = sampler.sample(&p, &ws, &mut rng);
            reduced += &t * t.adjoint();
        }
        reduced = scaled(&reduced, 1.0 / draws as f64);

        let mut literal = CMat::zeros(p.nr, p.nr);
        for _ in 0..draws {
            let mut t = CMat::zeros(p.nr, p.nr);
            for l in cfg.jammers() {
                let ghat = crandn(p.n, p.nr, ws.gamma_mr[l], &mut rng);
                let mut c = ghat;
                for j in 0..p.nr {
                    let s = Complex::new(cfg.pi_at(l, j).sqrt(), 0.0);
                    for i in 0..p.n {
                        c[(i, j)] *= s;
                    }
                }
                for m in cfg.observers() {
                    let g = crandn(p.n, p.n, ws.real.beta_mm[l][m], &mut rng);
                    t += draw.v[m].adjoint() * (g.adjoint() * &c);
                }
            }
            literal += &t * t.adjoint();
        }
        literal = scaled(&literal, 1.0 / draws as f64);

        let rel = fro_norm(&(&reduced - &literal)) / fro_norm(&literal);
        assert!(rel < 0.06, "reduced vs literal second moment differ: rel {rel}");

        // Closed form: sum_m sum_l beta_lm kappa_l V_m^H V_m.
        let mut closed = CMat::zeros(p.nr, p.nr);
        for m in cfg.observers() {
            let mut w = 0.0;
            for l in cfg.jammers() {
                let kappa: f64 =
                    (0..p.nr).map(|n| cfg.pi_at(l, n) * p.n as f64 * ws.gamma_mr[l]).sum();
                w += ws.real.beta_mm[l][m] * kappa;
            }
            closed += scaled(&(draw.v[m].adjoint() * &draw.v[m]), w);
        }
        let rel2 = fro_norm(&(&reduced - &closed)) / fro_norm(&closed);
        assert!(rel2 < 0.06, "reduced vs closed-form moment differ: rel {rel2}");
    }

    #[test]
    fn jamming_interference_monotone_in_pi() {
        // Raising any single power coefficient never lowers the
        // interference seen at any UR antenna.
        let p = tiny_params();
        let plan = ExpectationPlan::with_depths(2, 2, 100);
        let ws = synthetic_ws(&p, 0.5, 1.0, &plan);
        let base = half_jamming_config(&p, &ws);
        for m in base.jammers().collect::<Vec<_>>() {
            for k in 0..p.nr {
                let mut bumped = base.clone();
                bumped.pi[m * p.nr + k] *= 1.5;
                for stream in 0..p.nr {
                    let lo = jamming_interference(&p, &ws, &base, stream);
                    let hi = jamming_interference(&p, &ws, &bumped, stream);
                    assert!(hi >= lo, "bumping pi[{m}][{k}] lowered iota at stream {stream}");
                }
            }
        }
    }

    #[test]
    fn report_csv_roundtrip() {
        let p = tiny_params();
        let plan = ExpectationPlan::with_depths(2, 2, 100);
        let cfg = MonitoringConfig::all_observing(p.m, p.nr);
        let path = std::env::temp_dir().join(format!("cfmon-reports-{}.csv", std::process::id()));
        write_reports_csv(&p, &cfg, &plan, 3, 5, Some("opt"), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            format!("{},scheme", SeReport::csv_header())
        );
        assert_eq!(lines.count(), 3);
        let _ = std::fs::remove_file(&path);
    }

    #[test]
    fn msp_zero_when_everyone_jams() {
        let p = tiny_params();
        let plan = ExpectationPlan::with_depths(3, 3, 100);
        let est = msp_estimate(
            &p,
            &MonitoringConfig::new(vec![false; p.m], vec![0.0; p.m * p.nr], p.nr),
            &plan,
            10,
            5,
        )
        .unwrap();
        assert_eq!(est.msp, 0.0);
        assert_eq!(est.indicators.len(), 10);
    }

    #[test]
    fn msp_reaches_one_when_jamming_drowns_the_ur() {
        // Constructed geometry isolating the UR-side effect: jammers are
        // coupled to the UR but not to the observers, so scaling the jamming
        // power crushes SE_r while SE_c is untouched.
        let p = tiny_params();
        let plan = ExpectationPlan::with_depths(6, 6, 300);
        let m = p.m;
        let mut beta_mm = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    beta_mm[i][j] = 1e-9;
                }
            }
        }
        let real = ScenarioRealization::synthetic(
            1.0,
            vec![1.0; m],
            vec![1.0; m],
            beta_mm,
            2.0,
            2.0,
            1e7,
        );
        let ws = GeometryWorkspace::from_realization(&p, real, &plan, 9, 0).unwrap();
        let cfg = half_jamming_config(&p, &ws);
        let se_r = se_ur(&p, &ws, &cfg, &plan, 9).unwrap();
        let se_c = se_cpu_case1(&p, &ws, &cfg, &plan, 9).unwrap();
        assert!(se_r < 1e-3, "UR must be drowned, got {se_r}");
        assert!(se_c > se_r, "observing side survives: {se_c} vs {se_r}");
    }

    #[test]
    fn msp_estimator_error_shrinks_with_geometries() {
        // Binomial standard error scales as 1/sqrt(n_geom).
        let a = MspEstimate::from_indicators(vec![true, false, true, false]);
        let b = MspEstimate::from_indicators([true, false].repeat(8));
        assert!((a.msp - 0.5).abs() < 1e-12);
        assert!((a.stderr / b.stderr - 2.0).abs() < 1e-9);
    }

    #[test]
    fn signaling_load_formulas() {
        let mut p = tiny_params();
        p.tau = 300;
        p.tau_r = 40;
        p.tau_t = 40;
        p.nr = 4;
        let cfg = MonitoringConfig::new(
            vec![true, true, false, true],
            vec![0.0; 4 * p.nr],
            p.nr,
        );
        let load = signaling_load(&p, &cfg);
        assert_eq!(load.scalars_per_block, 880);
        assert_eq!(load.stat_params_case1, 16 * 3);
        assert_eq!(load.stat_params_case2, 0);

        let none = MonitoringConfig::new(vec![false; 4], vec![0.0; 4 * p.nr], p.nr);
        assert_eq!(signaling_load(&p, &none).stat_params_case1, 0);
    }

    #[test]
    fn prelog_shared_across_se_expressions() {
        let p = tiny_params();
        assert!((p.prelog() - (1.0 - 8.0 / 50.0)).abs() < 1e-15);
    }

    #[test]
    fn adding_an_observer_helps_case1_on_average() {
        // Flip one idle (jamming, zero power) MN to observing; the paired
        // mean SE must not decrease beyond 3 standard errors.
        let p = tiny_params();
        let plan = ExpectationPlan::with_depths(8, 8, 300);
        let mut diffs = Vec::new();
        for g in 0..16u64 {
            let mut rng = stream(44, &[tag::GEOMETRY, g]);
            let real = draw_scenario(&p, &mut rng);
            let ws = GeometryWorkspace::from_realization(&p, real, &plan, 44, g).unwrap();
            let mut alpha = vec![true, false, true, false];
            let fewer = MonitoringConfig::new(alpha.clone(), vec![0.0; p.m * p.nr], p.nr);
            alpha[1] = true;
            let more = MonitoringConfig::new(alpha, vec![0.0; p.m * p.nr], p.nr);
            let se_fewer = se_cpu_case1(&p, &ws, &fewer, &plan, 44).unwrap();
            let se_more = se_cpu_case1(&p, &ws, &more, &plan, 44).unwrap();
            diffs.push(se_more - se_fewer);
        }
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(
            mean > -3.0 * se,
            "adding an observer should not hurt: mean {mean}, stderr {se}"
        );
    }
}
