//! Benchmark schemes: jointly optimized mode assignment and power control,
//! random mode assignment with optimized or equal power allocation, and a
//! co-located full-duplex array.
//!
//! Every scheme is scored per geometry snapshot: the optimizing schemes run
//! the sequential optimizer against that snapshot's success indicator and
//! keep the incumbent best, the non-optimizing scheme evaluates its fixed
//! rule once. The scheme MSP is the frequency of per-geometry successes, and
//! all schemes consume identical geometry and fading streams (common random
//! numbers) so the per-geometry outcomes pair up.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::gp::SearchPoint;
use crate::optimize::{
    optimize, AlphaPolicy, Budget, OptimizeOpts, OptimizeResult, PoolSettings, SearchSpace,
};
use crate::rng::{stream, tag};
use crate::se::{
    build_colocated_workspaces, build_workspaces, evaluate_indicator, ExpectationPlan,
    GeometryWorkspace, MspEstimate,
};
use crate::scenario::SystemParams;
use crate::{Error, Result};

/// Co-located variant knobs. Residual self-interference after mitigation
/// sits between 30 and 100 dB; `split` is the fraction of the antenna
/// budget dedicated to observing (the reference comparison uses half).
#[derive(Debug, Clone, Copy)]
pub struct ColocatedOpts {
    pub si_db: f64,
    pub split: f64,
}

impl ColocatedOpts {
    pub fn half_split(si_db: f64) -> Self {
        ColocatedOpts { si_db, split: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(30.0..=100.0).contains(&self.si_db) {
            return Err(Error::BadParams(format!(
                "residual self-interference {} dB outside [30, 100]",
                self.si_db
            )));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::BadParams("antenna split ratio must lie strictly inside (0, 1)".into()));
        }
        Ok(())
    }
}

/// Benchmark scheme selector.
#[derive(Debug, Clone, Copy)]
pub enum BaselineKind {
    /// Joint mode assignment + jamming power optimization.
    Opt,
    /// Random mode assignment, optimized power allocation.
    RmaOpa,
    /// Random mode assignment, equal power allocation (budget saturated).
    RmaEpa,
    /// Co-located full-duplex array with residual self-interference.
    Colocated(ColocatedOpts),
}

impl BaselineKind {
    pub fn label(&self) -> &'static str {
        match self {
            BaselineKind::Opt => "opt",
            BaselineKind::RmaOpa => "rma-opa",
            BaselineKind::RmaEpa => "rma-epa",
            BaselineKind::Colocated(_) => "colocated",
        }
    }

    fn scheme_tag(&self) -> u64 {
        match self {
            BaselineKind::Opt => 1,
            BaselineKind::RmaOpa => 2,
            BaselineKind::RmaEpa => 3,
            BaselineKind::Colocated(_) => 4,
        }
    }
}

/// Compute budget of one baseline run.
#[derive(Debug, Clone, Copy)]
pub struct BaselineSetup {
    /// Monte-Carlo depths of every success-indicator evaluation.
    pub plan: ExpectationPlan,
    /// Geometry snapshots to score.
    pub n_geom: usize,
    /// Per-geometry optimizer budget.
    pub budget: Budget,
    pub pool: PoolSettings,
    pub seed: u64,
}

impl BaselineSetup {
    /// Desk-scale defaults: tenth-depth plans, the reference optimization
    /// budget (10 seed + 10 acquisition rounds), 200 geometries.
    pub fn fast(seed: u64) -> Self {
        BaselineSetup {
            plan: ExpectationPlan::fast(),
            n_geom: 200,
            budget: Budget::default(),
            pool: PoolSettings { uniform: 512, perturbations: 32 },
            seed,
        }
    }
}

/// Result of one baseline run: the per-geometry outcomes (incumbent success
/// for the optimizing schemes, single-shot success otherwise) plus the first
/// geometry's optimization trace for auditability.
#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub label: &'static str,
    pub eval: MspEstimate,
    pub first_trace: Option<OptimizeResult>,
}

/// Per-geometry random mode assignment: the observer count is uniform on
/// {0, ..., M} and the observing subset is uniform given the count. Derived
/// from the geometry id so every scheme sees the same assignment.
pub fn random_alpha(seed: u64, geom_id: u64, m: usize) -> Vec<bool> {
    let mut rng = stream(seed, &[tag::RMA_ALPHA, geom_id]);
    let observers = rng.random_range(0..=m);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut rng);
    let mut alpha = vec![false; m];
    for &i in idx.iter().take(observers) {
        alpha[i] = true;
    }
    alpha
}

/// Success indicator of one search point on one geometry (the optimizer
/// objective): deterministic given the evaluation seed.
fn indicator_value(
    params: &SystemParams,
    space: &SearchSpace,
    point: &SearchPoint,
    ws: &GeometryWorkspace,
    plan: &ExpectationPlan,
    seed: u64,
) -> Result<f64> {
    let cfg = space.to_config(point, None, ws);
    Ok(evaluate_indicator(params, ws, &cfg, plan, seed)? as u8 as f64)
}

/// Canonical seed corners for a scheme on one geometry: budget-saturated
/// jamming, no jamming, and (when the assignment is searched) a greedy
/// assignment that jams through the strongest MN-UR estimate.
fn corner_seeds(space: &SearchSpace, ws: &GeometryWorkspace) -> Vec<SearchPoint> {
    let pi_dim = space.pi_dim();
    let saturated = vec![1.0; pi_dim];
    let silent = vec![0.0; pi_dim];
    match space.alpha_policy {
        AlphaPolicy::Optimized => {
            let m = space.m;
            let all_obs = vec![1.0; m];
            let best_jammer = ws
                .gamma_mr
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let mut greedy = vec![1.0; m];
            greedy[best_jammer] = 0.0;
            vec![
                SearchPoint { alpha: greedy, pi: saturated.clone() },
                SearchPoint { alpha: all_obs, pi: silent },
                SearchPoint {
                    alpha: (0..m).map(|i| (i % 2 == 0) as u8 as f64).collect(),
                    pi: saturated,
                },
            ]
        }
        _ => vec![
            SearchPoint { alpha: vec![], pi: saturated },
            SearchPoint { alpha: vec![], pi: silent },
        ],
    }
}

/// Runs the per-geometry optimizer for one scheme and returns the incumbent
/// success plus the trace.
fn optimize_on_geometry(
    params: &SystemParams,
    space: &SearchSpace,
    ws: &GeometryWorkspace,
    setup: &BaselineSetup,
    scheme_tag: u64,
) -> Result<(bool, OptimizeResult)> {
    let mut opts = OptimizeOpts::new(setup.budget, setup.pool);
    opts.corner_seeds = corner_seeds(space, ws);
    opts.stop_at = Some(1.0);
    let mut rng = stream(setup.seed, &[tag::OPTIMIZER, scheme_tag, ws.id]);
    let objective =
        |point: &SearchPoint| Ok((indicator_value(params, space, point, ws, &setup.plan, setup.seed)?, 0.0));
    let res = optimize(objective, space, &opts, &mut rng)?;
    Ok((res.best_value >= 0.5, res))
}

fn scheme_outcome(
    kind: BaselineKind,
    params: &SystemParams,
    ws: &GeometryWorkspace,
    setup: &BaselineSetup,
) -> Result<(bool, Option<OptimizeResult>)> {
    match kind {
        BaselineKind::Opt => {
            let space = SearchSpace {
                m: params.m,
                nr: params.nr,
                alpha_policy: AlphaPolicy::Optimized,
            };
            let (hit, trace) = optimize_on_geometry(params, &space, ws, setup, kind.scheme_tag())?;
            Ok((hit, Some(trace)))
        }
        BaselineKind::RmaOpa => {
            let alpha = random_alpha(setup.seed, ws.id, params.m);
            if alpha.iter().all(|&a| a) || alpha.iter().all(|&a| !a) {
                // Power control cannot create jammers or observers.
                let space = SearchSpace {
                    m: params.m,
                    nr: params.nr,
                    alpha_policy: AlphaPolicy::Fixed(alpha),
                };
                let point = SearchPoint { alpha: vec![], pi: vec![1.0; space.pi_dim()] };
                let hit = indicator_value(params, &space, &point, ws, &setup.plan, setup.seed)? >= 0.5;
                return Ok((hit, None));
            }
            let space = SearchSpace {
                m: params.m,
                nr: params.nr,
                alpha_policy: AlphaPolicy::Fixed(alpha),
            };
            let (hit, trace) = optimize_on_geometry(params, &space, ws, setup, kind.scheme_tag())?;
            Ok((hit, Some(trace)))
        }
        BaselineKind::RmaEpa => {
            let alpha = random_alpha(setup.seed, ws.id, params.m);
            let space = SearchSpace {
                m: params.m,
                nr: params.nr,
                alpha_policy: AlphaPolicy::Fixed(alpha),
            };
            let point = SearchPoint { alpha: vec![], pi: vec![1.0; space.pi_dim()] };
            let hit = indicator_value(params, &space, &point, ws, &setup.plan, setup.seed)? >= 0.5;
            Ok((hit, None))
        }
        BaselineKind::Colocated(_) => {
            let space = SearchSpace {
                m: 2,
                nr: params.nr,
                alpha_policy: AlphaPolicy::Fixed(vec![true, false]),
            };
            let (hit, trace) = optimize_on_geometry(params, &space, ws, setup, kind.scheme_tag())?;
            Ok((hit, Some(trace)))
        }
    }
}

/// Co-located parameterization: the full antenna budget M*N split over two
/// virtual arrays at one site, observing array first.
pub fn colocated_layout(params: &SystemParams, opts: &ColocatedOpts) -> (SystemParams, [usize; 2]) {
    let total = params.m * params.n;
    let observing = ((total as f64 * opts.split).round() as usize).clamp(1, total - 1);
    let mut p = params.clone();
    p.m = 2;
    p.n = observing.max(total - observing);
    (p, [observing, total - observing])
}

/// Runs one benchmark scheme over `n_geom` paired geometry snapshots.
pub fn run_baseline(
    kind: BaselineKind,
    params: &SystemParams,
    setup: &BaselineSetup,
) -> Result<BaselineOutcome> {
    params.validate()?;
    let (eff_params, workspaces) = match kind {
        BaselineKind::Colocated(opts) => {
            opts.validate()?;
            let (cparams, counts) = colocated_layout(params, &opts);
            let ws = build_colocated_workspaces(&cparams, counts, opts.si_db, &setup.plan, setup.seed, setup.n_geom)?;
            (cparams, ws)
        }
        _ => {
            let ws = build_workspaces(params, &setup.plan, setup.seed, setup.n_geom)?;
            (params.clone(), ws)
        }
    };

    let results: Result<Vec<(bool, Option<OptimizeResult>)>> = workspaces
        .par_iter()
        .map(|ws| scheme_outcome(kind, &eff_params, ws, setup))
        .collect();
    let results = results?;
    let indicators: Vec<bool> = results.iter().map(|(hit, _)| *hit).collect();
    let first_trace = results.into_iter().find_map(|(_, trace)| trace);
    Ok(BaselineOutcome {
        label: kind.label(),
        eval: MspEstimate::from_indicators(indicators),
        first_trace,
    })
}

/// One-sided paired comparison: mean(a - b) and its standard error over the
/// per-geometry outcome differences.
pub fn paired_gap(a: &MspEstimate, b: &MspEstimate) -> (f64, f64) {
    assert_eq!(a.indicators.len(), b.indicators.len(), "paired test needs equal lengths");
    let n = a.indicators.len() as f64;
    let diffs: Vec<f64> = a
        .indicators
        .iter()
        .zip(&b.indicators)
        .map(|(&x, &y)| x as i8 as f64 - y as i8 as f64)
        .collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
