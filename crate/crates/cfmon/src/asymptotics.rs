//! Numerical verification of the large-system behavior: noise and inter-MN
//! interference washing out at the CPU as the observing population grows,
//! and jamming power downscaling as 1/M_J^2 keeping the UR-side jamming
//! level flat while the CPU-side jamming interference vanishes.
//!
//! Both sweeps assume perfect CSI and maximum-ratio precoding everywhere.
//! Reported norms are root-mean-square over (geometry x small-scale) draws,
//! so their expected decay follows the law-of-large-numbers rate exactly.

use num_complex::Complex;
use rand::Rng;

use crate::linalg::{crandn, crandn_vec, CMat, CVec};
use crate::rng::{stream, tag};
use crate::scenario::{draw_scenario, CsiQuality, PrecoderKind, SystemParams};
use crate::se::{ExpectationPlan, GeometryWorkspace, JamSampler};
use crate::transmission::{build_data_precoder, load_powers, mmse_combine, MonitoringConfig};
use crate::Result;

/// One sweep point of the growing-observer check.
#[derive(Debug, Clone, Copy)]
pub struct Prop2Row {
    pub m_o: usize,
    /// RMS of ||z_c/M_o - mean data term||.
    pub deviation: f64,
    /// RMS of ||sum alpha V^H omega|| / M_o.
    pub noise_norm: f64,
    /// RMS of ||sum alpha V^H jamming|| / M_o.
    pub interference_norm: f64,
}

#[derive(Debug, Clone)]
pub struct Prop2Report {
    pub rows: Vec<Prop2Row>,
    /// Fitted log-log slope of the noise norm versus M_o.
    pub noise_rate: f64,
    /// Fitted slope of the interference norm (NaN when there are no jammers).
    pub interference_rate: f64,
}

/// One sweep point of the growing-jammer check.
#[derive(Debug, Clone, Copy)]
pub struct Prop3Row {
    pub m_j: usize,
    /// RMS of the zero-mean jamming fluctuation at the UR.
    pub ur_fluctuation: f64,
    /// Mean jamming level at the UR (should stay flat across the sweep).
    pub ur_mean_level: f64,
    /// RMS of the jamming interference reaching the CPU.
    pub cpu_jam_norm: f64,
}

#[derive(Debug, Clone)]
pub struct Prop3Report {
    pub rows: Vec<Prop3Row>,
}

/// Least-squares slope of ln(y) against ln(x).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn perfect_mrt_params(base: &SystemParams, m: usize) -> SystemParams {
    let mut p = base.clone();
    p.m = m;
    p.csi_quality = CsiQuality::Perfect;
    p.precoder = PrecoderKind::Mrt;
    p
}

/// Equal-power jamming config with the first `m_o` MNs observing.
fn split_config(ws: &GeometryWorkspace, m_o: usize, nr: usize) -> MonitoringConfig {
    let m = ws.real.n_mn();
    let alpha: Vec<bool> = (0..m).map(|i| i < m_o).collect();
    MonitoringConfig::equal_power_pi(alpha, &ws.ghat_norm_sq, nr)
}

struct ObserverDraw {
    /// Effective data matrices X_m = V^H B Lambda^{1/2} per observer.
    x: Vec<CMat>,
    v: Vec<CMat>,
}

/// Draws the data-side quantities for every observer given the precoder.
fn draw_observers<R: Rng + ?Sized>(
    params: &SystemParams,
    ws: &GeometryWorkspace,
    config: &MonitoringConfig,
    w: &CMat,
    lambda: &[f64],
    rng: &mut R,
) -> ObserverDraw {
    let m = config.m();
    let mut x = vec![CMat::zeros(0, 0); m];
    let mut v = vec![CMat::zeros(0, 0); m];
    for i in config.observers() {
        let g_tm = crandn(params.nt, params.n, ws.real.beta_tm[i], rng);
        let b = g_tm.adjoint() * w;
        let vm = mmse_combine(&b, ws.real.rho_t);
        let mut xm = vm.adjoint() * &b;
        for j in 0..params.nr {
            let s = Complex::new(lambda[j].sqrt(), 0.0);
            for r in 0..params.nr {
                xm[(r, j)] *= s;
            }
        }
        x[i] = xm;
        v[i] = vm;
    }
    ObserverDraw { x, v }
}

fn rms(acc_sq: f64, n: usize) -> f64 {
    (acc_sq / n as f64).sqrt()
}

/// Growing observer population at a fixed jammer count: the normalized CPU
/// signal collapses onto its mean data term, while normalized noise and
/// inter-MN interference vanish at the law-of-large-numbers rate.
///
/// Per sweep point, `n_geom` geometries are drawn and each is probed with
/// `n_trials` small-scale trials; the conditional data mean given the
/// precoder is estimated per observer with `n_est` fresh channel draws.
pub fn verify_prop2(
    base: &SystemParams,
    mo_sweep: &[usize],
    m_j: usize,
    n_geom: usize,
    n_trials: usize,
    n_est: usize,
    seed: u64,
) -> Result<Prop2Report> {
    let mut rows = Vec::with_capacity(mo_sweep.len());
    let plan = ExpectationPlan::with_depths(1, 1, 1);
    for (pt, &m_o) in mo_sweep.iter().enumerate() {
        let params = perfect_mrt_params(base, m_o + m_j);
        let lambda = load_powers(params.nr);
        let mut dev_sq = 0.0;
        let mut noise_sq = 0.0;
        let mut jam_sq = 0.0;
        for g in 0..n_geom {
            let mut rng = stream(seed, &[tag::ASYMPTOTICS, 2, pt as u64, g as u64]);
            let real = draw_scenario(&params, &mut rng);
            let ws = GeometryWorkspace::from_realization(&params, real, &plan, seed, g as u64)?;
            let config = split_config(&ws, m_o, params.nr);
            for _ in 0..n_trials {
                // Perfect-CSI MRT precoder from the true UT-UR channel.
                let g_tr = crandn(params.nt, params.nr, ws.real.beta_tr, &mut rng);
                let w = build_data_precoder(&g_tr, PrecoderKind::Mrt)?;
                let draw = draw_observers(&params, &ws, &config, &w, &lambda, &mut rng);

                // Conditional mean of X_m given W, estimated independently
                // per observer.
                let x_data = crandn_vec(params.nr, 1.0, &mut rng);
                let mut fluct = CVec::zeros(params.nr);
                for i in config.observers() {
                    let mut e_x = CMat::zeros(params.nr, params.nr);
                    for _ in 0..n_est {
                        let g_tm = crandn(params.nt, params.n, ws.real.beta_tm[i], &mut rng);
                        let b = g_tm.adjoint() * &w;
                        let vm = mmse_combine(&b, ws.real.rho_t);
                        let mut xm = vm.adjoint() * &b;
                        for j in 0..params.nr {
                            let s = Complex::new(lambda[j].sqrt(), 0.0);
                            for r in 0..params.nr {
                                xm[(r, j)] *= s;
                            }
                        }
                        e_x += xm;
                    }
                    e_x = e_x.map(|z| z / Complex::new(n_est as f64, 0.0));
                    fluct += (&draw.x[i] - &e_x) * &x_data;
                }
                let rho_t_sqrt = Complex::new(ws.real.rho_t.sqrt(), 0.0);
                fluct = fluct.map(|z| z * rho_t_sqrt);

                // Aggregated noise.
                let mut noise = CVec::zeros(params.nr);
                for i in config.observers() {
                    let omega = crandn_vec(params.n, 1.0, &mut rng);
                    noise += draw.v[i].adjoint() * omega;
                }

                // Aggregated inter-MN jamming interference.
                let mut jam = CVec::zeros(params.nr);
                if m_j > 0 {
                    let sampler = JamSampler::new(&config, &draw.v);
                    let t_mat = sampler.sample(&params, &ws, &mut rng);
                    let x_jam = crandn_vec(params.nr, 1.0, &mut rng);
                    jam = (t_mat * x_jam).map(|z| z * Complex::new(ws.real.rho_j.sqrt(), 0.0));
                }

                let scale = 1.0 / (m_o * m_o) as f64;
                dev_sq += (&fluct + &noise + &jam).norm_squared() * scale;
                noise_sq += noise.norm_squared() * scale;
                jam_sq += jam.norm_squared() * scale;
            }
        }
        let n = n_geom * n_trials;
        rows.push(Prop2Row {
            m_o,
            deviation: rms(dev_sq, n),
            noise_norm: rms(noise_sq, n),
            interference_norm: rms(jam_sq, n),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.m_o as f64).collect();
    let noise: Vec<f64> = rows.iter().map(|r| r.noise_norm).collect();
    let noise_rate = loglog_slope(&xs, &noise);
    let interference_rate = if m_j > 0 {
        let jam: Vec<f64> = rows.iter().map(|r| r.interference_norm).collect();
        loglog_slope(&xs, &jam)
    } else {
        f64::NAN
    };
    Ok(Prop2Report { rows, noise_rate, interference_rate })
}

/// Expected UR-side mean jamming level under equal power allocation with
/// perfect CSI: sqrt(rho_J) * sum_l sqrt(N beta_l), averaged over many cheap
/// geometry-only draws. This isolates the E_J / M_J^2 power-scaling law from
/// small-scale noise.
fn mean_level_estimate(
    params: &SystemParams,
    m_o: usize,
    rho_j: f64,
    n_draws: usize,
    seed: u64,
    point: u64,
) -> f64 {
    let mut acc = 0.0;
    for d in 0..n_draws {
        let mut rng = stream(seed, &[tag::ASYMPTOTICS, 31, point, d as u64]);
        let real = draw_scenario(params, &mut rng);
        let level: f64 = real.beta_mr[m_o..]
            .iter()
            .map(|&b| (params.n as f64 * b).sqrt())
            .sum();
        acc += rho_j.sqrt() * level;
    }
    acc / n_draws as f64
}

/// Growing jammer population with transmit power downscaled as E_J / M_J^2:
/// the UR-side jamming fluctuation and the CPU-side jamming interference
/// vanish while the UR-side mean jamming level stays flat.
pub fn verify_prop3(
    base: &SystemParams,
    mj_sweep: &[usize],
    m_o: usize,
    e_j: f64,
    n_geom: usize,
    n_trials: usize,
    seed: u64,
) -> Result<Prop3Report> {
    let mut rows = Vec::with_capacity(mj_sweep.len());
    let plan = ExpectationPlan::with_depths(1, 1, 1);
    for (pt, &m_j) in mj_sweep.iter().enumerate() {
        let params = perfect_mrt_params(base, m_o + m_j);
        let lambda = load_powers(params.nr);
        let rho_j = if m_j > 0 { e_j / (m_j * m_j) as f64 } else { 0.0 };
        let mut fluct_sq = 0.0;
        let mut cpu_sq = 0.0;
        for g in 0..n_geom {
            let mut rng = stream(seed, &[tag::ASYMPTOTICS, 3, pt as u64, g as u64]);
            let mut real = draw_scenario(&params, &mut rng);
            real.rho_j = rho_j;
            let ws = GeometryWorkspace::from_realization(&params, real, &plan, seed, g as u64)?;
            let config = split_config(&ws, m_o, params.nr);
            for _ in 0..n_trials {
                let x_jam = crandn_vec(params.nr, 1.0, &mut rng);

                // UR side: per jammer, G^H G Pi^{1/2} x minus its mean
                // N beta Pi^{1/2} x (perfect CSI: the jamming precoder is
                // the true channel).
                let mut fluct = CVec::zeros(params.nr);
                for l in config.jammers() {
                    let g_ch = crandn(params.n, params.nr, ws.real.beta_mr[l], &mut rng);
                    let gram = g_ch.adjoint() * &g_ch;
                    let nbeta = params.n as f64 * ws.real.beta_mr[l];
                    for j in 0..params.nr {
                        let s = Complex::new(config.pi_at(l, j).sqrt(), 0.0);
                        for r in 0..params.nr {
                            let mean = if r == j {
                                Complex::new(nbeta, 0.0)
                            } else {
                                Complex::new(0.0, 0.0)
                            };
                            fluct[r] += (gram[(r, j)] - mean) * s * x_jam[j];
                        }
                    }
                }
                let amp = Complex::new(rho_j.sqrt(), 0.0);
                fluct_sq += fluct.map(|z| z * amp).norm_squared();

                // CPU side: jamming interference through the inter-MN
                // channels.
                if m_j > 0 {
                    let g_tr = crandn(params.nt, params.nr, ws.real.beta_tr, &mut rng);
                    let w = build_data_precoder(&g_tr, PrecoderKind::Mrt)?;
                    let draw = draw_observers(&params, &ws, &config, &w, &lambda, &mut rng);
                    let sampler = JamSampler::new(&config, &draw.v);
                    let t_mat = sampler.sample(&params, &ws, &mut rng);
                    cpu_sq += (t_mat * &x_jam).map(|z| z * amp).norm_squared();
                }
            }
        }
        let n = n_geom * n_trials;
        let level = if m_j > 0 {
            mean_level_estimate(&params, m_o, rho_j, 192, seed, pt as u64)
        } else {
            0.0
        };
        rows.push(Prop3Row {
            m_j,
            ur_fluctuation: rms(fluct_sq, n),
            ur_mean_level: level,
            cpu_jam_norm: rms(cpu_sq, n),
        });
    }
    Ok(Prop3Report { rows })
}
