//! Runs both training phases on one geometry and compares the empirical
//! estimator quality against the closed-form predictions.
//!
//! ```bash
//! cargo run --release --example channel_training
//! ```

use cfmon::channel::{
    beam_gains, draw_channels, effective_moments, mmse_gamma, uplink_training,
    beamforming_training,
};
use cfmon::rng::stream;
use cfmon::scenario::{draw_scenario, SystemParams};
use cfmon::transmission::build_data_precoder;

fn main() -> cfmon::Result<()> {
    let params = SystemParams::default();
    let mut rng = stream(params.rng_seed, &[100]);
    let real = draw_scenario(&params, &mut rng);

    println!("geometry: UT-UR gain {:.3e}, first MN-UR gain {:.3e}", real.beta_tr, real.beta_mr[0]);

    // Uplink phase: empirical per-entry mean square against the closed form.
    let draws = 2000;
    let mut acc = 0.0;
    for _ in 0..draws {
        let ch = draw_channels(&params, &real, &mut rng);
        let est = uplink_training(&ch, &real, &params, &mut rng);
        acc += est.ghat_mr[0].norm_squared() / (params.n * params.nr) as f64;
    }
    let empirical = acc / draws as f64;
    let closed = mmse_gamma(params.tau_r, real.rho_r, real.beta_mr[0]);
    println!(
        "uplink estimate mean square at MN 0: empirical {empirical:.4e}, closed form {closed:.4e} ({:+.2}%)",
        100.0 * (empirical / closed - 1.0)
    );

    // Beamforming phase: residual power of the effective-channel estimate.
    let cache = effective_moments(params.precoder, &real, &params, 3000, &mut rng)?;
    let gains = beam_gains(&cache, &params, &real)?;
    let mut err_pow = 0.0;
    let mut sig_pow = 0.0;
    for _ in 0..500 {
        let ch = draw_channels(&params, &real, &mut rng);
        let est = uplink_training(&ch, &real, &params, &mut rng);
        let w = match build_data_precoder(&est.ghat_tr, params.precoder) {
            Ok(w) => w,
            Err(_) => continue,
        };
        let eff = beamforming_training(&ch, &w, &real, &params, &cache, &gains, &mut rng)?;
        let b_true = ch.g_tm[0].adjoint() * &w;
        err_pow += (&eff.b_hat[0] - &b_true).norm_squared();
        sig_pow += b_true.norm_squared();
    }
    println!(
        "effective-channel estimation at MN 0: residual/signal power = {:.3}",
        err_pow / sig_pow
    );
    Ok(())
}
