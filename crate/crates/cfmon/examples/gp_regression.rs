//! Fits the Matérn GP to a noisy 1-D toy function and prints the posterior
//! on a grid, demonstrating interpolation and prior reversion.
//!
//! ```bash
//! cargo run --release --example gp_regression
//! ```

use cfmon::gp::{GpState, KernelHyper, MaternNu, SearchPoint};
use cfmon::rng::stream;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> cfmon::Result<()> {
    let hyper = KernelHyper {
        nu: MaternNu::FiveHalves,
        len_alpha: 1.0,
        len_pi: 0.4,
        signal_var: 1.0,
    };
    let mut gp = GpState::new(hyper, 0.0)?;
    let mut rng = stream(7, &[200]);

    let truth = |x: f64| (3.0 * x).sin() * (-x).exp();
    let noise_sd = 0.05;
    for i in 0..9 {
        let x = i as f64 / 4.0;
        let eps: f64 = rng.sample(StandardNormal);
        let y = truth(x) + noise_sd * eps;
        gp.observe(SearchPoint { alpha: vec![], pi: vec![x] }, y, noise_sd * noise_sd)?;
    }
    gp.refit_hyper_grid(1.0, 0.4)?;

    println!("x,posterior_mean,posterior_sd,truth");
    for i in 0..=40 {
        let x = i as f64 * 3.0 / 40.0;
        let post = gp.posterior(&SearchPoint { alpha: vec![], pi: vec![x] })?;
        println!("{x:.3},{:.4},{:.4},{:.4}", post.mean, post.var.sqrt(), truth(x));
    }
    println!("# fitted lengthscale (continuous block): {:.3}", gp.hyper.len_pi);
    Ok(())
}
