//! Convergence-rate and accuracy experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::accuracy::{accuracy_montecarlo, mean_sd, MonteCarloEstimate};
use super::analytic::AnalyticCase;
use crate::approx_rank::{rank_points_pde, rank_points_subset, RankerConfig};
use crate::density::fit_domain;
use crate::error::{Error, Result};
use crate::exact_sort::{sort_exact, SortMethod};
use crate::grid::{GridField, GridSpec};
use crate::hj_solver::{residual_report, solve_scheme, NodeSolveConfig};
use crate::points::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Convergence rate: errors behave like `h^alpha` or `n^{-alpha}`.
    pub alpha: f64,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PdeRate,
    StochasticRate,
    RankingAccuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub n: usize,
    pub cells: usize,
    pub k: usize,
    pub method: String,
    pub mean: f64,
    pub ci95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub case: AnalyticCase,
    pub dim: usize,
    /// Cells per axis for PDE sweeps, sample counts for stochastic ones.
    pub sizes: Vec<usize>,
    /// Grid spacing per size (PDE sweeps only).
    pub spacing: Vec<f64>,
    pub l1_errors: Vec<f64>,
    pub linf_errors: Vec<f64>,
    /// 95% half-widths of the mean errors over repetitions (stochastic only).
    pub l1_ci95: Vec<f64>,
    pub linf_ci95: Vec<f64>,
    /// Largest scheme residual per size, with the bound it must respect.
    pub max_residuals: Vec<f64>,
    pub residual_bounds: Vec<f64>,
    pub l1_fit: Option<RateFit>,
    pub linf_fit: Option<RateFit>,
    pub repetitions: usize,
    pub accuracy: Vec<AccuracyRow>,
}

impl ExperimentReport {
    fn empty(kind: ExperimentKind, case: AnalyticCase, dim: usize) -> Self {
        Self {
            kind,
            case,
            dim,
            sizes: Vec::new(),
            spacing: Vec::new(),
            l1_errors: Vec::new(),
            linf_errors: Vec::new(),
            l1_ci95: Vec::new(),
            linf_ci95: Vec::new(),
            max_residuals: Vec::new(),
            residual_bounds: Vec::new(),
            l1_fit: None,
            linf_fit: None,
            repetitions: 1,
            accuracy: Vec::new(),
        }
    }
}

/// Least-squares line through `(ln x, ln y)`. `alpha` is the slope itself;
/// callers flip its sign when the error decays in `x`.
pub fn fit_rate(x: &[f64], y: &[f64]) -> Result<RateFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument(
            "rate fit needs at least two paired values".into(),
        ));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NonFinite(
            "rate fit needs positive finite values".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "rate fit needs distinct sizes".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok(RateFit {
        alpha: slope,
        slope,
        intercept: my - slope * mx,
    })
}

fn check_increasing(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "sizes must be nonempty and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Solution of the scheme for `case` on `[0,1]^dim` with `cells` cells per
/// axis, alongside the sampled density.
pub fn solve_case(
    case: AnalyticCase,
    dim: usize,
    cells: usize,
    cfg: &NodeSolveConfig,
) -> Result<(GridField, GridField)> {
    let spec = GridSpec::cube(dim, 0.0, 1.0, cells)?;
    let density = GridField::from_fn(spec, |x| case.density(x))?;
    let solution = solve_scheme(&density, cfg)?;
    Ok((density, solution))
}

/// Node errors against the exact solution: `(L1, L∞)` with the `L1` norm
/// taken as `h^d Σ |U_h - U|` over the nodes.
pub fn node_errors(case: AnalyticCase, solution: &GridField) -> (f64, f64) {
    let spec = solution.spec();
    let (sum, max) = solution
        .values()
        .par_iter()
        .enumerate()
        .map(|(i, &v)| (v - case.solution(&spec.node(&spec.multi_index(i)))).abs())
        .fold(|| (0.0, 0.0f64), |(s, m), e| (s + e, m.max(e)))
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    (sum * spec.h().powi(spec.dim() as i32), max)
}

/// Solves the scheme for `case` on `[0,1]^dim` at each grid size and fits
/// the decay of the `L1` and `L∞` errors in `h`.
pub fn pde_rate_experiment(
    case: AnalyticCase,
    dim: usize,
    grids: &[usize],
    cfg: &NodeSolveConfig,
) -> Result<ExperimentReport> {
    check_increasing(grids)?;
    let rows = grids
        .par_iter()
        .map(|&cells| {
            let (density, solution) = solve_case(case, dim, cells, cfg)?;
            let (l1, linf) = node_errors(case, &solution);
            let residual = residual_report(&solution, &density)?;
            let h = solution.spec().h();
            Ok((
                h,
                l1,
                linf,
                residual.max_abs_residual,
                cfg.residual_bound(h),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ExperimentReport::empty(ExperimentKind::PdeRate, case, dim);
    report.sizes = grids.to_vec();
    for (h, l1, linf, res, bound) in rows {
        report.spacing.push(h);
        report.l1_errors.push(l1);
        report.linf_errors.push(linf);
        report.max_residuals.push(res);
        report.residual_bounds.push(bound);
    }
    if grids.len() >= 2 {
        report.l1_fit = Some(fit_rate(&report.spacing, &report.l1_errors)?);
        report.linf_fit = Some(fit_rate(&report.spacing, &report.linf_errors)?);
    }
    Ok(report)
}

fn rep_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sample_cloud(
    case: AnalyticCase,
    dim: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PointCloud> {
    let sampler = case.sampler(dim)?;
    let mut coords = Vec::with_capacity(n * dim);
    for _ in 0..n {
        coords.extend(sampler.sample(rng));
    }
    PointCloud::new(dim, coords)
}

/// Discrete `(L1, L∞)` distances between the rescaled longest-chain depths
/// of `n` samples and `U`, for one realization. With `λ = n / mass` the
/// rescaled depth is `λ^{-1/2} u_n`, whose limit is `(c_2 / 2) U = U`.
fn stochastic_errors(case: AnalyticCase, n: usize, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
    let sampler = case.sampler(2)?;
    let cloud = sample_cloud(case, 2, n, rng)?;
    let depths = sort_exact(&cloud, SortMethod::Auto)?;
    let scale = sampler.intensity(n).sqrt().recip();
    let (sum, max) = cloud
        .iter()
        .enumerate()
        .map(|(i, x)| (scale * depths.get(i) - case.solution(x)).abs())
        .fold((0.0, 0.0f64), |(s, m), e| (s + e, m.max(e)));
    Ok((sum / n as f64, max))
}

/// Averages the discrete errors of the longest-chain limit in `d = 2` over
/// `reps` realizations per sample size and fits their decay in `n`.
/// Realization `r` at size index `s` uses stream `s * reps + r` of `seed`.
pub fn stochastic_rate_experiment(
    case: AnalyticCase,
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    check_increasing(sizes)?;
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    case.sampler(2)?;
    let mut report = ExperimentReport::empty(ExperimentKind::StochasticRate, case, 2);
    report.sizes = sizes.to_vec();
    report.repetitions = reps;
    for (s, &n) in sizes.iter().enumerate() {
        let runs = (0..reps)
            .into_par_iter()
            .map(|r| stochastic_errors(case, n, &mut rep_rng(seed, (s * reps + r) as u64)))
            .collect::<Result<Vec<_>>>()?;
        let l1: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let linf: Vec<f64> = runs.iter().map(|r| r.1).collect();
        let l1 = MonteCarloEstimate::from_estimates(l1);
        let linf = MonteCarloEstimate::from_estimates(linf);
        report.l1_errors.push(l1.mean);
        report.l1_ci95.push(l1.ci95);
        report.linf_errors.push(linf.mean);
        report.linf_ci95.push(linf.ci95);
    }
    if sizes.len() >= 2 {
        let n: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
        for (errors, fit) in [
            (&report.l1_errors, &mut report.l1_fit),
            (&report.linf_errors, &mut report.linf_fit),
        ] {
            let mut f = fit_rate(&n, errors)?;
            f.alpha = -f.slope;
            *fit = Some(f);
        }
    }
    Ok(report)
}

/// `n^{-1/d}` times the longest chain length of `n` uniform points in
/// `[0,1]^d`, one value per repetition.
pub fn longest_chain_constant(
    dim: usize,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if n == 0 || reps == 0 {
        return Err(Error::InvalidArgument(
            "n and reps must be at least 1".into(),
        ));
    }
    let values = (0..reps)
        .into_par_iter()
        .map(|r| {
            let cloud = sample_cloud(
                AnalyticCase::F1Uniform,
                dim,
                n,
                &mut rep_rng(seed, r as u64),
            )?;
            let depths = sort_exact(&cloud, SortMethod::Auto)?;
            Ok(depths.max() * (n as f64).powf(-1.0 / dim as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonteCarloEstimate::from_estimates(values))
}

/// One grid resolution and subsample size for [`ranking_accuracy_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingSetup {
    pub cells: usize,
    pub k: usize,
}

/// Pairwise accuracy of PDE-based and subset ranking against exact sorting.
///
/// Each repetition draws `n` points from `case` in dimension `dim`, sorts
/// them exactly, and scores both approximate rankings for every setup with
/// one Monte Carlo estimate over `pairs` pairs. Bounded cases use the grid
/// `[0,1]^d`; the Gaussian case fits the grid to the sample.
pub fn ranking_accuracy_experiment(
    case: AnalyticCase,
    dim: usize,
    n: usize,
    setups: &[RankingSetup],
    reps: usize,
    pairs: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if reps == 0 || setups.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one setup and one rep".into(),
        ));
    }
    // per rep: for each setup, (pde, subset)
    let runs = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = rep_rng(seed, r as u64);
            let cloud = sample_cloud(case, dim, n, &mut rng)?;
            let exact = sort_exact(&cloud, SortMethod::Auto)?.to_f64();
            setups
                .iter()
                .map(|s| {
                    let grid = match case {
                        AnalyticCase::F2Gaussian => fit_domain(&cloud, s.cells)?,
                        _ => GridSpec::cube(dim, 0.0, 1.0, s.cells)?,
                    };
                    let cfg = RankerConfig::new(grid, s.k, seed.wrapping_add(r as u64));
                    let score = |ranks: Vec<f64>| -> Result<f64> {
                        Ok(accuracy_montecarlo(
                            &exact,
                            &ranks,
                            pairs,
                            1,
                            seed ^ ((r as u64 + 1) << 20),
                        )?
                        .mean)
                    };
                    Ok((
                        score(rank_points_pde(&cloud, &cfg)?.to_f64())?,
                        score(rank_points_subset(&cloud, &cfg)?.to_f64())?,
                    ))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ExperimentReport::empty(ExperimentKind::RankingAccuracy, case, dim);
    report.sizes = vec![n];
    report.repetitions = reps;
    for (j, s) in setups.iter().enumerate() {
        for (method, pick) in [("pde", 0), ("subset", 1)] {
            let values: Vec<f64> = runs
                .iter()
                .map(|run| if pick == 0 { run[j].0 } else { run[j].1 })
                .collect();
            let (mean, sd) = mean_sd(&values);
            report.accuracy.push(AccuracyRow {
                n,
                cells: s.cells,
                k: s.k,
                method: method.into(),
                mean,
                ci95: 1.96 * sd / (reps as f64).sqrt(),
            });
        }
    }
    Ok(report)
}
