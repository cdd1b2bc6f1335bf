//! Large-system sanity sweeps: noise/interference at the CPU vanishing as
//! the observing population grows, and 1/M_J^2 jamming power downscaling.
//!
//! ```bash
//! cargo run --release --example asymptotics
//! ```

use cfmon::asymptotics::{verify_prop2, verify_prop3};
use cfmon::scenario::{noise_power, SystemParams};

fn main() -> cfmon::Result<()> {
    let params = SystemParams::default();

    let report = verify_prop2(&params, &[8, 16, 32, 64], 4, 6, 4, 32, params.rng_seed)?;
    println!("growing observers (M_J = 4):");
    println!("m_o    deviation    noise        interference");
    for r in &report.rows {
        println!(
            "{:<5}  {:.4e}  {:.4e}  {:.4e}",
            r.m_o, r.deviation, r.noise_norm, r.interference_norm
        );
    }
    println!(
        "fitted rates: noise {:.2}, interference {:.2} (1/sqrt law is -0.5)",
        report.noise_rate, report.interference_rate
    );

    let e_j = params.p_j_w / noise_power(&params);
    let report = verify_prop3(&params, &[16, 32, 64, 128], 8, e_j, 6, 4, params.rng_seed)?;
    println!("\ngrowing jammers with rho_J = E_J / M_J^2 (M_o = 8):");
    println!("m_j    ur_fluct     ur_mean      cpu_jam");
    for r in &report.rows {
        println!(
            "{:<5}  {:.4e}  {:.4e}  {:.4e}",
            r.m_j, r.ur_fluctuation, r.ur_mean_level, r.cpu_jam_norm
        );
    }
    Ok(())
}
