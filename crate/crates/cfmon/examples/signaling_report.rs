//! Prints the fronthaul signaling-load table for the reference setup and a
//! few mode splits.
//!
//! ```bash
//! cargo run --example signaling_report
//! ```

use cfmon::experiments::report_signaling;
use cfmon::scenario::SystemParams;
use cfmon::transmission::MonitoringConfig;

fn main() {
    let params = SystemParams::default();
    for observers in [params.m, params.m / 2, 0] {
        let alpha: Vec<bool> = (0..params.m).map(|m| m < observers).collect();
        let config = MonitoringConfig::new(alpha, vec![0.0; params.m * params.nr], params.nr);
        println!("{}", report_signaling(&params, &config));
    }
}
