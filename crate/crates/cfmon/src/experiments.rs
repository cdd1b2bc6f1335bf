//! Experiment orchestration: sweep definitions, deterministic execution and
//! CSV/JSON result emission.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::asymptotics::{verify_prop2, verify_prop3};
use crate::baselines::{run_baseline, BaselineKind, BaselineSetup, ColocatedOpts};
use crate::optimize::{Budget, PoolSettings};
use crate::se::{signaling_load, ExpectationPlan};
use crate::scenario::{CsiCase, CsiQuality, PrecoderKind, SystemParams};
use crate::transmission::MonitoringConfig;
use crate::{Error, Result};

/// Figure-style sweep selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentTag {
    /// MSP versus deployment area size (CF against co-located).
    DSweep,
    /// MSP versus the number of MNs at a fixed total antenna budget.
    MSweep,
    /// CSI availability comparison (perfect / case-1 / case-2).
    CsiCases,
    /// MSP versus antennas per MN.
    NSweep,
    /// MSP versus antennas at the untrusted pair (Nt = Nr).
    NrSweep,
    /// MSP versus jamming transmit power.
    RhoJSweep,
    /// Large-system sanity sweeps.
    Asymptotics,
}

impl ExperimentTag {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "D_sweep" => Ok(ExperimentTag::DSweep),
            "M_sweep" => Ok(ExperimentTag::MSweep),
            "csi_cases" => Ok(ExperimentTag::CsiCases),
            "N_sweep" => Ok(ExperimentTag::NSweep),
            "Nr_sweep" => Ok(ExperimentTag::NrSweep),
            "rhoJ_sweep" => Ok(ExperimentTag::RhoJSweep),
            "asymptotics" => Ok(ExperimentTag::Asymptotics),
            other => Err(Error::Config(format!(
                "unknown experiment `{other}` (expected D_sweep|M_sweep|csi_cases|N_sweep|Nr_sweep|rhoJ_sweep|asymptotics)"
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ExperimentTag::DSweep => "D_sweep",
            ExperimentTag::MSweep => "M_sweep",
            ExperimentTag::CsiCases => "csi_cases",
            ExperimentTag::NSweep => "N_sweep",
            ExperimentTag::NrSweep => "Nr_sweep",
            ExperimentTag::RhoJSweep => "rhoJ_sweep",
            ExperimentTag::Asymptotics => "asymptotics",
        }
    }

    /// Default sweep grid (interpreted per tag).
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            ExperimentTag::DSweep => vec![0.5, 1.0, 1.5],
            ExperimentTag::MSweep => vec![4.0, 8.0, 16.0, 24.0],
            ExperimentTag::CsiCases => vec![1.0],
            ExperimentTag::NSweep => vec![1.0, 10.0, 30.0, 50.0],
            ExperimentTag::NrSweep => vec![1.0, 2.0, 4.0, 8.0, 16.0, 24.0, 28.0],
            ExperimentTag::RhoJSweep => vec![0.001, 0.01, 0.1, 0.2, 0.5, 1.0],
            ExperimentTag::Asymptotics => vec![0.0],
        }
    }
}

/// Full experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub tag: ExperimentTag,
    pub grid: Vec<f64>,
    pub schemes: Vec<BaselineKind>,
    pub cases: Vec<CsiCase>,
    pub precoders: Vec<PrecoderKind>,
    pub setup: BaselineSetup,
    pub out_dir: PathBuf,
    pub fast: bool,
}

impl ExperimentSpec {
    /// Reference spec for a tag: desk-scale Monte-Carlo depths (tenfold
    /// smaller behind `fast`), reference optimization budget.
    pub fn defaults(tag: ExperimentTag, params: &SystemParams, fast: bool, out_dir: PathBuf) -> Self {
        let (plan, n_geom) = if fast {
            (ExpectationPlan::fast(), 50)
        } else {
            (ExpectationPlan::default(), 500)
        };
        let setup = BaselineSetup {
            plan,
            n_geom,
            budget: Budget::default(),
            pool: PoolSettings::default(),
            seed: params.rng_seed,
        };
        let schemes = match tag {
            ExperimentTag::DSweep => vec![
                BaselineKind::Opt,
                BaselineKind::Colocated(ColocatedOpts::half_split(30.0)),
            ],
            ExperimentTag::MSweep => {
                vec![BaselineKind::Opt, BaselineKind::RmaOpa, BaselineKind::RmaEpa]
            }
            _ => vec![BaselineKind::Opt],
        };
        let cases = match tag {
            ExperimentTag::MSweep => vec![params.csi_case],
            _ => vec![CsiCase::Case1, CsiCase::Case2],
        };
        ExperimentSpec {
            tag,
            grid: tag.default_grid(),
            schemes,
            cases,
            precoders: vec![params.precoder],
            setup,
            out_dir,
            fast,
        }
    }
}

/// Applies one grid value to the parameter set; errors mark the grid point
/// infeasible.
pub fn apply_grid_value(
    tag: ExperimentTag,
    params: &SystemParams,
    value: f64,
) -> Result<SystemParams> {
    let mut p = params.clone();
    match tag {
        ExperimentTag::DSweep => p.d_km = value,
        ExperimentTag::MSweep => {
            let m = value as usize;
            let total = params.m * params.n;
            if m == 0 || total % m != 0 {
                return Err(Error::BadParams(format!(
                    "antenna budget {total} not divisible across {m} MNs"
                )));
            }
            p.m = m;
            p.n = total / m;
        }
        ExperimentTag::CsiCases | ExperimentTag::Asymptotics => {}
        ExperimentTag::NSweep => p.n = value as usize,
        ExperimentTag::NrSweep => {
            p.nr = value as usize;
            p.nt = value as usize;
        }
        ExperimentTag::RhoJSweep => p.p_j_w = value,
    }
    p.validate()?;
    Ok(p)
}

/// One emitted result row.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub scheme: String,
    pub csi_case: String,
    pub precoder: String,
    pub msp_mean: f64,
    pub msp_stderr: f64,
    pub runtime_s: f64,
}

pub const RESULT_HEADER: &str = "sweep_value,scheme,csi_case,precoder,msp_mean,msp_stderr,runtime_s";

impl ResultRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{},{},{},{:.6},{:.6},{:.3}",
            self.sweep_value,
            self.scheme,
            self.csi_case,
            self.precoder,
            self.msp_mean,
            self.msp_stderr,
            self.runtime_s
        )
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    params: &'a SystemParams,
    seed: u64,
    git_hash: String,
    grid: &'a [f64],
    fast: bool,
}

fn git_hash() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Runs the experiment described by `spec` and writes one CSV per figure
/// plus a JSON run manifest. Returns the paths written. Deterministic given
/// the seed (the runtime column measures wall time only).
pub fn run_experiment(params: &SystemParams, spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    if spec.grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    params.validate()?;
    fs::create_dir_all(&spec.out_dir)?;
    let mut written = Vec::new();

    let manifest = Manifest {
        experiment: spec.tag.label(),
        params,
        seed: spec.setup.seed,
        git_hash: git_hash(),
        grid: &spec.grid,
        fast: spec.fast,
    };
    let manifest_path = spec.out_dir.join(format!("{}_manifest.json", spec.tag.label()));
    write_file(
        &manifest_path,
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    written.push(manifest_path);

    if spec.tag == ExperimentTag::Asymptotics {
        return run_asymptotics(params, spec, written);
    }

    let mut rows: Vec<ResultRow> = Vec::new();
    let mut traces: Vec<(String, String)> = Vec::new();
    for &value in &spec.grid {
        let point_params = match apply_grid_value(spec.tag, params, value) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("skipping infeasible grid point {value}: {e}");
                continue;
            }
        };
        for &precoder in &spec.precoders {
            for case_idx in 0..case_count(spec) {
                let mut p = point_params.clone();
                p.precoder = precoder;
                let case_label = configure_case(spec, case_idx, &mut p);
                for &scheme in &spec.schemes {
                    let start = Instant::now();
                    let outcome = run_baseline(scheme, &p, &spec.setup)?;
                    // First optimization trace per scheme, for auditability.
                    if let Some(trace) = &outcome.first_trace {
                        if !traces.iter().any(|(s, _)| s == outcome.label) {
                            traces.push((outcome.label.to_string(), trace.trace_csv()));
                        }
                    }
                    rows.push(ResultRow {
                        sweep_value: value,
                        scheme: outcome.label.to_string(),
                        csi_case: case_label.clone(),
                        precoder: precoder.label().to_string(),
                        msp_mean: outcome.eval.msp,
                        msp_stderr: outcome.eval.stderr,
                        runtime_s: start.elapsed().as_secs_f64(),
                    });
                }
            }
        }
    }

    for (scheme, csv) in &traces {
        let path = spec.out_dir.join(format!("{}_trace_{scheme}.csv", spec.tag.label()));
        write_file(&path, csv)?;
        written.push(path);
    }

    let mut csv = String::from(RESULT_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    let csv_path = spec.out_dir.join(format!("{}.csv", spec.tag.label()));
    write_file(&csv_path, &csv)?;
    written.push(csv_path);
    Ok(written)
}

/// csi_cases additionally sweeps the ideal-CSI upper bound.
fn case_count(spec: &ExperimentSpec) -> usize {
    if spec.tag == ExperimentTag::CsiCases {
        spec.cases.len() + 1
    } else {
        spec.cases.len()
    }
}

fn configure_case(spec: &ExperimentSpec, idx: usize, p: &mut SystemParams) -> String {
    if spec.tag == ExperimentTag::CsiCases && idx == spec.cases.len() {
        p.csi_quality = CsiQuality::Perfect;
        p.csi_case = CsiCase::Case1;
        return "perfect".into();
    }
    p.csi_case = spec.cases[idx];
    p.csi_case.label().into()
}

fn run_asymptotics(
    params: &SystemParams,
    spec: &ExperimentSpec,
    mut written: Vec<PathBuf>,
) -> Result<Vec<PathBuf>> {
    let (n_geom, n_trials, n_est) = if spec.fast { (6, 4, 32) } else { (16, 8, 96) };
    let prop2 = verify_prop2(params, &[8, 16, 32, 64, 128], 4, n_geom, n_trials, n_est, spec.setup.seed)?;
    let mut csv = String::from("m_o,deviation,noise_norm,interference_norm\n");
    for r in &prop2.rows {
        csv.push_str(&format!(
            "{},{:.6e},{:.6e},{:.6e}\n",
            r.m_o, r.deviation, r.noise_norm, r.interference_norm
        ));
    }
    csv.push_str(&format!(
        "# noise_rate = {:.4}, interference_rate = {:.4}\n",
        prop2.noise_rate, prop2.interference_rate
    ));
    let p2 = spec.out_dir.join("asymptotics_prop2.csv");
    write_file(&p2, &csv)?;
    written.push(p2);

    let e_j = {
        let np = crate::scenario::noise_power(params);
        params.p_j_w / np
    };
    let prop3 = verify_prop3(params, &[16, 32, 64, 128], 8, e_j, n_geom, n_trials, spec.setup.seed)?;
    let mut csv = String::from("m_j,ur_fluctuation,ur_mean_level,cpu_jam_norm\n");
    for r in &prop3.rows {
        csv.push_str(&format!(
            "{},{:.6e},{:.6e},{:.6e}\n",
            r.m_j, r.ur_fluctuation, r.ur_mean_level, r.cpu_jam_norm
        ));
    }
    let p3 = spec.out_dir.join("asymptotics_prop3.csv");
    write_file(&p3, &csv)?;
    written.push(p3);
    Ok(written)
}

/// Renders the fronthaul signaling-load table for a given configuration.
pub fn report_signaling(params: &SystemParams, config: &MonitoringConfig) -> String {
    let load = signaling_load(params, config);
    let mut out = String::new();
    out.push_str(&format!(
        "signaling load per coherence block (tau={}, tau_r={}, tau_t={}, Nr={}, observing MNs={})\n",
        params.tau,
        params.tau_r,
        params.tau_t,
        params.nr,
        config.n_observers()
    ));
    out.push_str("case    complex_scalars  stat_params\n");
    out.push_str(&format!(
        "case-1  {:<16} {}\n",
        load.scalars_per_block, load.stat_params_case1
    ));
    out.push_str(&format!(
        "case-2  {:<16} {}\n",
        load.scalars_per_block, load.stat_params_case2
    ));
    out
}

/// Runs a closure inside a bounded rayon pool. Worker count affects wall
/// time only; every reduction is order-stable.
pub fn with_worker_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("worker pool");
    pool.install(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_parsing_roundtrip() {
        for tag in [
            ExperimentTag::DSweep,
            ExperimentTag::MSweep,
            ExperimentTag::CsiCases,
            ExperimentTag::NSweep,
            ExperimentTag::NrSweep,
            ExperimentTag::RhoJSweep,
            ExperimentTag::Asymptotics,
        ] {
            assert_eq!(ExperimentTag::parse(tag.label()).unwrap(), tag);
        }
        assert!(ExperimentTag::parse("bogus").is_err());
    }

    #[test]
    fn empty_grid_rejected_before_compute() {
        let params = SystemParams::default();
        let mut spec = ExperimentSpec::defaults(
            ExperimentTag::NSweep,
            &params,
            true,
            std::env::temp_dir().join("cfmon-test-empty"),
        );
        spec.grid.clear();
        assert!(matches!(run_experiment(&params, &spec), Err(Error::EmptyGrid)));
    }

    #[test]
    fn grid_application_and_infeasible_points() {
        let params = SystemParams::default();
        let p = apply_grid_value(ExperimentTag::MSweep, &params, 8.0).unwrap();
        assert_eq!(p.m * p.n, params.m * params.n);
        // 7 does not divide 240.
        assert!(apply_grid_value(ExperimentTag::MSweep, &params, 7.0).is_err());
        // Nr beyond the pilot length violates the training invariant.
        assert!(apply_grid_value(ExperimentTag::NrSweep, &params, 64.0).is_err());
        let p = apply_grid_value(ExperimentTag::RhoJSweep, &params, 0.5).unwrap();
        assert!((p.p_j_w - 0.5).abs() < 1e-12);
    }

    #[test]
    fn signaling_report_reference_rows() {
        let params = SystemParams::default();
        let cfg = MonitoringConfig::all_observing(params.m, params.nr);
        let text = report_signaling(&params, &cfg);
        assert!(text.contains("case-1  880"), "{text}");
        assert!(text.contains("case-2  880"), "{text}");
        let load = signaling_load(&params, &cfg);
        assert_eq!(load.stat_params_case1, 16 * 8);
        assert_eq!(load.stat_params_case2, 0);
    }
}
