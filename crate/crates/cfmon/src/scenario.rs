//! Node geometry, large-scale fading and normalized powers for one outer
//! Monte-Carlo draw.
//!
//! Positions are uniform in a D x D km square with a wrap-around (torus)
//! distance metric. Large-scale gains follow a three-slope path-loss model
//! with log-normal shadowing; transmit powers are normalized by the thermal
//! noise power so that every later signal model can use unit-variance noise.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.381e-23;
/// Reference noise temperature (K).
pub const NOISE_TEMP_K: f64 = 290.0;

/// Data precoder used by the untrusted transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrecoderKind {
    Zf,
    Mrt,
}

impl PrecoderKind {
    pub fn label(self) -> &'static str {
        match self {
            PrecoderKind::Zf => "zf",
            PrecoderKind::Mrt => "mrt",
        }
    }
}

/// CSI available to the CPU: case-1 forwards the per-MN effective-channel
/// estimates, case-2 forwards nothing (statistics only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CsiCase {
    Case1,
    Case2,
}

impl CsiCase {
    pub fn label(self) -> &'static str {
        match self {
            CsiCase::Case1 => "case1",
            CsiCase::Case2 => "case2",
        }
    }
}

/// Channel-estimate quality at the monitor nodes. `Perfect` bypasses both
/// training phases (estimates equal the true channels); used by the ideal-CSI
/// comparison and by the large-system checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CsiQuality {
    Estimated,
    Perfect,
}

/// Full system parameterization. Defaults reproduce the reference setup:
/// 20 MHz bandwidth, 9 dB noise figure, tau = 300 with 40-symbol pilots in
/// each training phase, 100 mW at UT/UR and 200 mW jamming power, 8 MNs with
/// 30 antennas in a 1 km square, and a 4x4 untrusted pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of monitor nodes.
    pub m: usize,
    /// Antennas per monitor node.
    pub n: usize,
    /// Antennas at the untrusted transmitter.
    pub nt: usize,
    /// Antennas at the untrusted receiver.
    pub nr: usize,
    /// Side length of the deployment square (km).
    pub d_km: f64,
    /// Coherence interval (symbols).
    pub tau: usize,
    /// Uplink pilot length (symbols).
    pub tau_r: usize,
    /// Beamforming-training pilot length (symbols).
    pub tau_t: usize,
    /// Max transmit power at the UR (W).
    pub p_r_w: f64,
    /// Max transmit power at the UT (W).
    pub p_t_w: f64,
    /// Max transmit power per jamming MN (W).
    pub p_j_w: f64,
    /// Channel bandwidth (Hz).
    pub bandwidth_hz: f64,
    /// Receiver noise figure (dB).
    pub noise_figure_db: f64,
    /// Carrier frequency (GHz). Enters the path-loss constant in MHz, per
    /// the COST-231 Hata coefficient convention.
    pub carrier_ghz: f64,
    /// MN antenna height (m).
    pub h_mn_m: f64,
    /// Untrusted-node antenna height (m).
    pub h_u_m: f64,
    /// Shadow-fading standard deviation (dB).
    pub sigma_sh_db: f64,
    /// Inner path-loss breakpoint (m).
    pub d0_m: f64,
    /// Outer path-loss breakpoint (m).
    pub d1_m: f64,
    /// Data precoder at the UT.
    pub precoder: PrecoderKind,
    /// CSI case at the CPU.
    pub csi_case: CsiCase,
    /// Estimate quality at the MNs.
    pub csi_quality: CsiQuality,
    /// Run seed.
    pub rng_seed: u64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            m: 8,
            n: 30,
            nt: 4,
            nr: 4,
            d_km: 1.0,
            tau: 300,
            tau_r: 40,
            tau_t: 40,
            p_r_w: 0.1,
            p_t_w: 0.1,
            p_j_w: 0.2,
            bandwidth_hz: 20e6,
            noise_figure_db: 9.0,
            carrier_ghz: 1.9,
            h_mn_m: 15.0,
            h_u_m: 1.65,
            sigma_sh_db: 8.0,
            d0_m: 10.0,
            d1_m: 50.0,
            precoder: PrecoderKind::Zf,
            csi_case: CsiCase::Case1,
            csi_quality: CsiQuality::Estimated,
            rng_seed: 1,
        }
    }
}

impl SystemParams {
    /// Training-overhead prelog factor 1 - (tau_t + tau_r)/tau.
    pub fn prelog(&self) -> f64 {
        1.0 - (self.tau_t + self.tau_r) as f64 / self.tau as f64
    }

    /// Validates the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.nt == 0 || self.nr == 0 {
            return Err(Error::BadParams("antenna/node counts must be positive".into()));
        }
        if self.tau_r < self.nr || self.tau_t < self.nr {
            return Err(Error::BadParams(format!(
                "pilot orthogonality needs tau_r >= nr and tau_t >= nr (got {} / {} vs nr={})",
                self.tau_r, self.tau_t, self.nr
            )));
        }
        if self.tau <= self.tau_r + self.tau_t {
            return Err(Error::BadParams(
                "coherence interval must exceed the total training overhead".into(),
            ));
        }
        if self.precoder == PrecoderKind::Zf && self.nt < self.nr {
            return Err(Error::BadParams(
                "ZF needs nt >= nr for the Gram matrix to be invertible".into(),
            ));
        }
        for (name, v) in [
            ("d_km", self.d_km),
            ("p_r_w", self.p_r_w),
            ("p_t_w", self.p_t_w),
            ("p_j_w", self.p_j_w),
            ("bandwidth_hz", self.bandwidth_hz),
            ("d0_m", self.d0_m),
            ("d1_m", self.d1_m),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::BadParams(format!("{name} must be strictly positive")));
            }
        }
        if self.d1_m <= self.d0_m {
            return Err(Error::BadParams("d1 must exceed d0".into()));
        }
        Ok(())
    }

    /// Parses a plain-text `key = value` config (one pair per line, `#`
    /// comments). Keys mirror the field names; missing keys keep defaults.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut p = SystemParams::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| Error::Config(format!("line {}: bad {what} `{value}`", lineno + 1));
            macro_rules! int {
                ($field:expr) => {
                    $field = value.parse().map_err(|_| bad("integer"))?
                };
            }
            macro_rules! float {
                ($field:expr) => {
                    $field = value.parse().map_err(|_| bad("number"))?
                };
            }
            match key {
                "m" => int!(p.m),
                "n" => int!(p.n),
                "nt" => int!(p.nt),
                "nr" => int!(p.nr),
                "tau" => int!(p.tau),
                "tau_r" => int!(p.tau_r),
                "tau_t" => int!(p.tau_t),
                "rng_seed" => int!(p.rng_seed),
                "d_km" => float!(p.d_km),
                "p_r_w" => float!(p.p_r_w),
                "p_t_w" => float!(p.p_t_w),
                "p_j_w" => float!(p.p_j_w),
                "bandwidth_hz" => float!(p.bandwidth_hz),
                "noise_figure_db" => float!(p.noise_figure_db),
                "carrier_ghz" => float!(p.carrier_ghz),
                "h_mn_m" => float!(p.h_mn_m),
                "h_u_m" => float!(p.h_u_m),
                "sigma_sh_db" => float!(p.sigma_sh_db),
                "d0_m" => float!(p.d0_m),
                "d1_m" => float!(p.d1_m),
                "precoder" => {
                    p.precoder = match value.to_ascii_lowercase().as_str() {
                        "zf" => PrecoderKind::Zf,
                        "mrt" => PrecoderKind::Mrt,
                        _ => return Err(bad("precoder (zf|mrt)")),
                    }
                }
                "csi_case" => {
                    p.csi_case = match value.to_ascii_lowercase().as_str() {
                        "case1" | "1" => CsiCase::Case1,
                        "case2" | "2" => CsiCase::Case2,
                        _ => return Err(bad("csi_case (case1|case2)")),
                    }
                }
                "csi_quality" => {
                    p.csi_quality = match value.to_ascii_lowercase().as_str() {
                        "estimated" => CsiQuality::Estimated,
                        "perfect" => CsiQuality::Perfect,
                        _ => return Err(bad("csi_quality (estimated|perfect)")),
                    }
                }
                other => return Err(Error::Config(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        p.validate()?;
        Ok(p)
    }
}

/// Thermal noise power B * k_B * T0 * 10^(NF/10) in watts.
pub fn noise_power(params: &SystemParams) -> f64 {
    params.bandwidth_hz * BOLTZMANN * NOISE_TEMP_K * 10f64.powf(params.noise_figure_db / 10.0)
}

/// Frequency/height constant of the three-slope path-loss model (dB).
/// `f` enters in MHz; the 46.3/33.9 coefficients assume that unit.
pub fn path_loss_constant_db(params: &SystemParams) -> f64 {
    let f_mhz = params.carrier_ghz * 1e3;
    let lf = f_mhz.log10();
    46.3 + 33.9 * lf - 13.82 * params.h_mn_m.log10() - (1.1 * lf - 0.7) * params.h_u_m
        + (1.56 * lf - 0.8)
}

/// Three-slope path loss (dB, negative) at `distance_m` meters. Distances in
/// the log terms are in kilometers, matching the COST-231 Hata slope of
/// 35 dB/decade at these antenna heights; the model is constant below `d0`
/// and continuous at both breakpoints.
pub fn path_loss_db(distance_m: f64, params: &SystemParams) -> f64 {
    let l = path_loss_constant_db(params);
    let d_km = (distance_m / 1000.0).max(0.0);
    let d0_km = params.d0_m / 1000.0;
    let d1_km = params.d1_m / 1000.0;
    if d_km > d1_km {
        -l - 35.0 * d_km.log10()
    } else if d_km > d0_km {
        -l - 15.0 * d1_km.log10() - 20.0 * d_km.log10()
    } else {
        -l - 15.0 * d1_km.log10() - 20.0 * d0_km.log10()
    }
}

/// Per-axis torus distance on the wrapped square (km).
pub fn wrap_distance_km(a: [f64; 2], b: [f64; 2], d_km: f64) -> f64 {
    let mut acc = 0.0;
    for axis in 0..2 {
        let delta = (a[axis] - b[axis]).abs();
        let w = delta.min(d_km - delta);
        acc += w * w;
    }
    acc.sqrt()
}

/// One geometry draw: positions, large-scale gains and normalized powers.
/// Immutable once constructed; safe to share across parallel workers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioRealization {
    pub mn_pos: Vec<[f64; 2]>,
    pub ut_pos: [f64; 2],
    pub ur_pos: [f64; 2],
    /// UT <-> UR large-scale gain (linear).
    pub beta_tr: f64,
    /// MN m <-> UR gains.
    pub beta_mr: Vec<f64>,
    /// UT <-> MN m gains.
    pub beta_tm: Vec<f64>,
    /// Inter-MN gains, symmetric with zero diagonal.
    pub beta_mm: Vec<Vec<f64>>,
    /// Noise-normalized powers P_x / noise_power.
    pub rho_r: f64,
    pub rho_t: f64,
    pub rho_j: f64,
    /// Residual self-interference coupling per MN (linear factor applied to
    /// the co-sited jamming transmit power). Zero everywhere except in the
    /// co-located variant.
    pub si_factor: Vec<f64>,
}

impl ScenarioRealization {
    /// Synthetic realization with given gains; positions collapse to the
    /// origin. Intended for tests and controlled sweeps.
    pub fn synthetic(
        beta_tr: f64,
        beta_mr: Vec<f64>,
        beta_tm: Vec<f64>,
        beta_mm: Vec<Vec<f64>>,
        rho_r: f64,
        rho_t: f64,
        rho_j: f64,
    ) -> Self {
        let m = beta_mr.len();
        ScenarioRealization {
            mn_pos: vec![[0.0, 0.0]; m],
            ut_pos: [0.0, 0.0],
            ur_pos: [0.0, 0.0],
            beta_tr,
            beta_mr,
            beta_tm,
            beta_mm,
            rho_r,
            rho_t,
            rho_j,
            si_factor: vec![0.0; m],
        }
    }

    pub fn n_mn(&self) -> usize {
        self.beta_mr.len()
    }
}

fn shadowed_beta<R: Rng + ?Sized>(pl_db: f64, sigma_db: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    10f64.powf((pl_db + sigma_db * z) / 10.0)
}

/// Draws node positions, shadowed large-scale gains and normalized powers.
pub fn draw_scenario<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> ScenarioRealization {
    let d = params.d_km;
    let uniform_pos = |rng: &mut R| [rng.random::<f64>() * d, rng.random::<f64>() * d];
    let ut_pos = uniform_pos(rng);
    let ur_pos = uniform_pos(rng);
    let mn_pos: Vec<[f64; 2]> = (0..params.m).map(|_| uniform_pos(rng)).collect();

    let np = noise_power(params);
    let sigma = params.sigma_sh_db;
    let pl = |a: [f64; 2], b: [f64; 2]| {
        path_loss_db(wrap_distance_km(a, b, d) * 1000.0, params)
    };

    let beta_tr = shadowed_beta(pl(ut_pos, ur_pos), sigma, rng);
    let beta_mr: Vec<f64> = mn_pos
        .iter()
        .map(|&p| shadowed_beta(pl(p, ur_pos), sigma, rng))
        .collect();
    let beta_tm: Vec<f64> = mn_pos
        .iter()
        .map(|&p| shadowed_beta(pl(ut_pos, p), sigma, rng))
        .collect();

    let mut beta_mm = vec![vec![0.0; params.m]; params.m];
    for i in 0..params.m {
        for j in (i + 1)..params.m {
            let b = shadowed_beta(pl(mn_pos[i], mn_pos[j]), sigma, rng);
            beta_mm[i][j] = b;
            beta_mm[j][i] = b;
        }
    }

    ScenarioRealization {
        mn_pos,
        ut_pos,
        ur_pos,
        beta_tr,
        beta_mr,
        beta_tm,
        beta_mm,
        rho_r: params.p_r_w / np,
        rho_t: params.p_t_w / np,
        rho_j: params.p_j_w / np,
        si_factor: vec![0.0; params.m],
    }
}

/// Co-located full-duplex variant: both virtual MNs (one observing array, one
/// jamming array) sit at a single uniformly drawn site, the inter-array
/// propagation channel is replaced by a residual self-interference noise
/// coupling of `10^(-si_db/10)` on the observing array, and the UT/UR
/// positions are drawn exactly like in [`draw_scenario`] so paired
/// comparisons line up.
pub fn draw_colocated_scenario<R: Rng + ?Sized>(
    params: &SystemParams,
    si_db: f64,
    rng: &mut R,
) -> ScenarioRealization {
    let d = params.d_km;
    let uniform_pos = |rng: &mut R| [rng.random::<f64>() * d, rng.random::<f64>() * d];
    let ut_pos = uniform_pos(rng);
    let ur_pos = uniform_pos(rng);
    let site = uniform_pos(rng);

    let np = noise_power(params);
    let sigma = params.sigma_sh_db;
    let pl = |a: [f64; 2], b: [f64; 2]| {
        path_loss_db(wrap_distance_km(a, b, d) * 1000.0, params)
    };

    let beta_tr = shadowed_beta(pl(ut_pos, ur_pos), sigma, rng);
    // Shared site, independent shadowing per virtual array.
    let beta_mr: Vec<f64> = (0..2)
        .map(|_| shadowed_beta(pl(site, ur_pos), sigma, rng))
        .collect();
    let beta_tm: Vec<f64> = (0..2)
        .map(|_| shadowed_beta(pl(ut_pos, site), sigma, rng))
        .collect();
    let beta_mm = vec![vec![0.0; 2]; 2];
    let si = 10f64.powf(-si_db / 10.0);

    ScenarioRealization {
        mn_pos: vec![site; 2],
        ut_pos,
        ur_pos,
        beta_tr,
        beta_mr,
        beta_tm,
        beta_mm,
        rho_r: params.p_r_w / np,
        rho_t: params.p_t_w / np,
        rho_j: params.p_j_w / np,
        si_factor: vec![si, 0.0],
    }
}
