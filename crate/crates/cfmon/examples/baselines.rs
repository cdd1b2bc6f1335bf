//! Compares the optimized scheme against random mode assignment with
//! optimized/equal power allocation and against a co-located full-duplex
//! array, all on common random numbers.
//!
//! ```bash
//! cargo run --release --example baselines
//! ```

use cfmon::baselines::{paired_gap, run_baseline, BaselineKind, BaselineSetup, ColocatedOpts};
use cfmon::optimize::Budget;
use cfmon::se::ExpectationPlan;
use cfmon::scenario::SystemParams;

fn main() -> cfmon::Result<()> {
    use cfmon::scenario::PrecoderKind;
    let mut params = SystemParams::default();
    let setup = BaselineSetup {
        plan: ExpectationPlan::with_depths(10, 10, 300),
        n_geom: 60,
        budget: Budget::default(),
        pool: Default::default(),
        seed: params.rng_seed,
    };

    for precoder in [PrecoderKind::Zf, PrecoderKind::Mrt] {
        params.precoder = precoder;
        let opt = run_baseline(BaselineKind::Opt, &params, &setup)?;
        let opa = run_baseline(BaselineKind::RmaOpa, &params, &setup)?;
        let epa = run_baseline(BaselineKind::RmaEpa, &params, &setup)?;
        let col = run_baseline(
            BaselineKind::Colocated(ColocatedOpts::half_split(30.0)),
            &params,
            &setup,
        )?;

        println!("[{}] scheme      msp    stderr", precoder.label());
        for r in [&opt, &opa, &epa, &col] {
            println!("[{}] {:<10}  {:.3}  {:.3}", precoder.label(), r.label, r.eval.msp, r.eval.stderr);
        }
        let (gap, se) = paired_gap(&opt.eval, &epa.eval);
        println!(
            "[{}] paired OPT-EPA gap: {gap:.3} +- {se:.3} (relative {:.0}%)\n",
            precoder.label(),
            100.0 * gap / epa.eval.msp.max(1e-9)
        );
    }
    Ok(())
}
