//! End-to-end MSP maximization on a small budget: seeds the GP with random
//! feasible configurations, runs the acquisition-portfolio rounds and prints
//! the optimization trace.
//!
//! ```bash
//! cargo run --release --example optimize_msp
//! ```

use cfmon::gp::SearchPoint;
use cfmon::optimize::{optimize, AlphaPolicy, Budget, OptimizeOpts, PoolSettings, SearchSpace};
use cfmon::rng::stream;
use cfmon::se::{build_workspaces, msp_over_workspaces, ExpectationPlan};
use cfmon::scenario::SystemParams;

fn main() -> cfmon::Result<()> {
    let params = SystemParams::default();
    let plan = ExpectationPlan::with_depths(10, 10, 300);
    let n_geom = 16;
    let workspaces = build_workspaces(&params, &plan, params.rng_seed, n_geom)?;

    let space = SearchSpace {
        m: params.m,
        nr: params.nr,
        alpha_policy: AlphaPolicy::Optimized,
    };
    let objective = |point: &SearchPoint| {
        let est = msp_over_workspaces(
            &params,
            &workspaces,
            |_, ws| space.to_config(point, None, ws),
            &plan,
            params.rng_seed,
        )?;
        Ok((est.msp, est.stderr))
    };

    let opts = OptimizeOpts::new(Budget { n_initial: 6, n_opt: 14 }, PoolSettings::default());
    let mut rng = stream(params.rng_seed, &[300]);
    let result = optimize(objective, &space, &opts, &mut rng)?;

    println!("iter  msp    acq   observers");
    for row in &result.trace {
        let observers = row.point.alpha.iter().filter(|&&a| a >= 0.5).count();
        println!(
            "{:>4}  {:.3}  {:<4}  {}",
            row.iteration, row.value, row.acquisition, observers
        );
    }
    println!(
        "best msp {:.3} with {} observing MNs",
        result.best_value,
        result.best_point.alpha.iter().filter(|&&a| a >= 0.5).count()
    );
    Ok(())
}
