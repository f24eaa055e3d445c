use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use pdsort::evaluation::{
    accuracy_exact, accuracy_montecarlo, pde_rate_experiment, ranking_accuracy_experiment,
    stochastic_rate_experiment, AnalyticCase, RankingSetup,
};
use pdsort::{
    check_domain, fit_domain, histogram_density, rank_points_pde, rank_points_subset,
    residual_report, solve_scheme, sort_exact, subsample, DepthVector, GridField, GridSpec, HRule,
    NodeSolveConfig, NodeSolveMethod, PointCloud, RankerConfig, SortMethod, SubsampleSpec,
};
use serde_json::{json, Value};

use crate::args::*;

/// Why a run stopped: bad flags (exit 2) or bad data and I/O (exit 1).
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Run(String),
}

impl From<pdsort::Error> for Failure {
    fn from(e: pdsort::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

pub type CmdResult<T> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CmdResult<T> {
    Err(Failure::Usage(msg.into()))
}

/// What a finished command reports to the manifest.
pub struct Finished {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub resolved: Value,
    pub result: Value,
}

/// Accepts `12000` and `1.2e4`; the value must be a nonnegative integer.
pub fn parse_count(flag: &str, s: &str) -> CmdResult<usize> {
    let s = s.trim();
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(53) => Ok(v as usize),
        _ => usage(format!(
            "--{flag}: expected a nonnegative integer, got {s:?}"
        )),
    }
}

pub fn parse_counts(flag: &str, s: &str) -> CmdResult<Vec<usize>> {
    s.split(',').map(|t| parse_count(flag, t)).collect()
}

/// `--grid 100,100`: one entry per axis, all equal. Returns `(dim, cells)`.
pub fn parse_grid(s: &str) -> CmdResult<(usize, usize)> {
    let cells = parse_counts("grid", s)?;
    if cells.iter().any(|&c| c != cells[0]) {
        return usage(format!(
            "--grid: all axes must have the same number of cells, got {s}"
        ));
    }
    if cells[0] < 3 {
        return usage("--grid: need at least 3 cells per axis");
    }
    Ok((cells.len(), cells[0]))
}

/// `--domain lo..hi`.
pub fn parse_domain(s: &str) -> CmdResult<(f64, f64)> {
    let bad = || usage(format!("--domain: expected lo..hi, got {s:?}"));
    let Some((lo, hi)) = s.split_once("..") else {
        return bad();
    };
    match (lo.trim().parse::<f64>(), hi.trim().parse::<f64>()) {
        (Ok(lo), Ok(hi)) if lo.is_finite() && hi.is_finite() && lo < hi => Ok((lo, hi)),
        _ => bad(),
    }
}

pub fn parse_case(s: &str) -> CmdResult<AnalyticCase> {
    AnalyticCase::from_id(s).map_or_else(
        || usage(format!("unknown case {s:?}; expected f1, f2, f3 or f4")),
        Ok,
    )
}

fn node_config(args: &NodeSolveArgs) -> CmdResult<NodeSolveConfig> {
    if !(args.tolerance > 0.0 && args.tolerance.is_finite()) {
        return usage("--tolerance must be positive");
    }
    Ok(NodeSolveConfig {
        method: match args.node_method {
            NodeMethodArg::ClosedForm2d => NodeSolveMethod::ClosedForm2d,
            NodeMethodArg::Bisection => NodeSolveMethod::Bisection,
            NodeMethodArg::Newton => NodeSolveMethod::NewtonSafeguarded,
        },
        tolerance: args.tolerance,
        max_iterations: args.max_iterations,
    })
}

/// Writes through a temporary file in the target directory, so a failed
/// run leaves no partial output behind.
pub fn write_atomic(
    path: &Path,
    write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> CmdResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path)
        .map_err(|e| Failure::Run(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CmdResult<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn open(path: &Path) -> CmdResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn read_points(path: &Path) -> CmdResult<PointCloud> {
    PointCloud::read_csv(open(path)?).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn read_ranks(path: &Path) -> CmdResult<DepthVector> {
    DepthVector::read_csv(open(path)?).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

/// Grid for point-based commands: the given box, or one fitted to the cloud.
fn point_grid(cloud: &PointCloud, grid: &str, domain: Option<&str>) -> CmdResult<GridSpec> {
    let (dim, cells) = parse_grid(grid)?;
    let domain = domain.map(parse_domain).transpose()?;
    if dim != cloud.dim() {
        return Err(Failure::Run(format!(
            "--grid has {dim} axes but the points have dimension {}",
            cloud.dim()
        )));
    }
    Ok(match domain {
        Some((lo, hi)) => GridSpec::cube(dim, lo, hi, cells)?,
        None => fit_domain(cloud, cells)?,
    })
}

fn grid_json(spec: &GridSpec) -> Value {
    json!({ "lo": spec.lo(), "hi": spec.hi(), "h": spec.h(), "shape": spec.shape() })
}

pub fn sort_exact_cmd(args: &SortExactArgs) -> CmdResult<Finished> {
    let method = match args.method {
        SortMethodArg::Auto => SortMethod::Auto,
        SortMethodArg::BruteForce => SortMethod::BruteForce,
        SortMethodArg::Fast2d => SortMethod::Fast2d,
    };
    let cloud = read_points(&args.input)?;
    let depths = sort_exact(&cloud, method)?;
    write_atomic(&args.output, |w| depths.write_csv(w))?;
    Ok(Finished {
        inputs: vec![args.input.clone()],
        outputs: vec![args.output.clone()],
        resolved: json!({ "points": cloud.len(), "dim": cloud.dim() }),
        result: json!({ "max_depth": depths.max() }),
    })
}

pub fn solve_pde_cmd(args: &SolvePdeArgs) -> CmdResult<Finished> {
    let cfg = node_config(&args.node)?;
    let mut inputs = Vec::new();
    let density = if let Some(id) = args.density.strip_prefix("builtin:") {
        let case = parse_case(id)?;
        let Some(grid) = &args.grid else {
            return usage("--grid is required with a builtin density");
        };
        let (dim, cells) = parse_grid(grid)?;
        let (lo, hi) = args
            .domain
            .as_deref()
            .map(parse_domain)
            .transpose()?
            .unwrap_or((0.0, 1.0));
        let spec = GridSpec::cube(dim, lo, hi, cells)?;
        GridField::from_fn(spec, |x| case.density(x))?
    } else {
        if args.grid.is_some() || args.domain.is_some() {
            return usage("--grid and --domain apply only to builtin densities");
        }
        let path = PathBuf::from(&args.density);
        let field = GridField::read_binary(open(&path)?)
            .map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
        inputs.push(path);
        field
    };
    cfg.validate(density.spec().dim())
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let solution = solve_scheme(&density, &cfg)?;
    let report = residual_report(&solution, &density)?;
    let bound = cfg.residual_bound(solution.spec().h());
    if report.max_abs_residual > bound {
        log::warn!("residual {} exceeds bound {bound}", report.max_abs_residual);
    }
    write_atomic(&args.output, |w| solution.write_binary(w))?;
    let mut outputs = vec![args.output.clone()];
    if let Some(csv) = &args.csv {
        write_atomic(csv, |w| solution.write_csv(w))?;
        outputs.push(csv.clone());
    }
    Ok(Finished {
        inputs,
        outputs,
        resolved: json!({ "grid": grid_json(solution.spec()), "node_solve": cfg }),
        result: json!({
            "max_abs_residual": report.max_abs_residual,
            "residual_bound": bound,
            "within_bound": report.max_abs_residual <= bound,
            "worst_node": report.location,
            "interior_nodes": report.interior_nodes,
            "max_value": solution.max(),
        }),
    })
}

pub fn estimate_density_cmd(args: &EstimateDensityArgs) -> CmdResult<Finished> {
    let k = args.k.as_deref().map(|k| parse_count("k", k)).transpose()?;
    parse_grid(&args.grid)?;
    args.domain.as_deref().map(parse_domain).transpose()?;
    let cloud = read_points(&args.input)?;
    let spec = point_grid(&cloud, &args.grid, args.domain.as_deref())?;
    check_domain(&cloud, &spec)?;
    let k = k.unwrap_or(cloud.len());
    let sample = subsample(&cloud, SubsampleSpec { k, seed: args.seed })?;
    let density = histogram_density(&sample, &spec)?;
    write_atomic(&args.output, |w| density.write_binary(w))?;
    Ok(Finished {
        inputs: vec![args.input.clone()],
        outputs: vec![args.output.clone()],
        resolved: json!({ "grid": grid_json(&spec), "k": k, "points": cloud.len() }),
        result: json!({ "max_density": density.max() }),
    })
}

pub fn rank_approx_cmd(args: &RankApproxArgs) -> CmdResult<Finished> {
    let k = parse_count("k", &args.k)?;
    let node_cfg = node_config(&args.node)?;
    parse_grid(&args.grid)?;
    args.domain.as_deref().map(parse_domain).transpose()?;
    let cloud = read_points(&args.input)?;
    let grid = point_grid(&cloud, &args.grid, args.domain.as_deref())?;
    let cfg = RankerConfig {
        grid,
        k,
        seed: args.seed,
        node_cfg,
        h_rule: match args.h_rule {
            HRuleArg::Explicit => HRule::Explicit,
            HRuleArg::Equalize => HRule::Equalize,
        },
    };
    let resolved_grid = cfg.resolved_grid()?;
    let ranks = match args.method {
        RankMethodArg::Pde => rank_points_pde(&cloud, &cfg)?,
        RankMethodArg::Subset => rank_points_subset(&cloud, &cfg)?,
    };
    write_atomic(&args.output, |w| ranks.write_csv(w))?;
    Ok(Finished {
        inputs: vec![args.input.clone()],
        outputs: vec![args.output.clone()],
        resolved: json!({ "grid": grid_json(&resolved_grid), "k": k, "node_solve": node_cfg }),
        result: json!({ "points": cloud.len(), "max_rank": ranks.max() }),
    })
}

pub fn eval_accuracy_cmd(args: &EvalAccuracyArgs) -> CmdResult<(Finished, Option<String>)> {
    let pairs = args
        .pairs
        .as_deref()
        .map(|p| parse_count("pairs", p))
        .transpose()?;
    if pairs == Some(0) || args.reps == 0 {
        return usage("--pairs and --reps must be at least 1");
    }
    let a = read_ranks(&args.ranks_a)?.to_f64();
    let b = read_ranks(&args.ranks_b)?.to_f64();
    let report = match pairs {
        None => json!({ "method": "exact", "n": a.len(), "accuracy": accuracy_exact(&a, &b)? }),
        Some(pairs) => {
            let mc = accuracy_montecarlo(&a, &b, pairs, args.reps, args.seed)?;
            json!({
                "method": "monte_carlo",
                "n": a.len(),
                "pairs": pairs,
                "reps": args.reps,
                "seed": args.seed,
                "accuracy": mc.mean,
                "ci95": mc.ci95,
                "std_error": mc.std_error,
                "estimates": mc.estimates,
            })
        }
    };
    let mut outputs = Vec::new();
    let stdout = match &args.report {
        Some(path) => {
            write_json(path, &report)?;
            outputs.push(path.clone());
            None
        }
        None => Some(serde_json::to_string_pretty(&report).expect("json")),
    };
    Ok((
        Finished {
            inputs: vec![args.ranks_a.clone(), args.ranks_b.clone()],
            outputs,
            resolved: json!({ "pairs": pairs, "reps": args.reps }),
            result: report,
        },
        stdout,
    ))
}

fn experiment_finished(
    path: &Path,
    report: &pdsort::evaluation::ExperimentReport,
) -> CmdResult<Finished> {
    write_json(path, report)?;
    Ok(Finished {
        inputs: Vec::new(),
        outputs: vec![path.to_path_buf()],
        resolved: json!({ "case": report.case, "dim": report.dim, "sizes": report.sizes }),
        result: json!({ "l1_fit": report.l1_fit, "linf_fit": report.linf_fit, "accuracy": report.accuracy }),
    })
}

pub fn experiment_cmd(cmd: &ExperimentCommand) -> CmdResult<Finished> {
    match cmd {
        ExperimentCommand::PdeRate(args) => {
            let case = parse_case(&args.case)?;
            let grids = parse_counts("grids", &args.grids)?;
            let cfg = node_config(&args.node)?;
            cfg.validate(args.dim)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let report = pde_rate_experiment(case, args.dim, &grids, &cfg)?;
            experiment_finished(&args.report, &report)
        }
        ExperimentCommand::StochasticRate(args) => {
            let case = parse_case(&args.case)?;
            let sizes = parse_counts("sizes", &args.sizes)?;
            let report = stochastic_rate_experiment(case, &sizes, args.reps, args.seed)?;
            experiment_finished(&args.report, &report)
        }
        ExperimentCommand::RankingAccuracy(args) => {
            let case = parse_case(&args.case)?;
            let n = parse_count("n", &args.n)?;
            let pairs = parse_count("pairs", &args.pairs)?;
            let setups = args
                .setups
                .split(',')
                .map(|s| {
                    let Some((cells, k)) = s.split_once(':') else {
                        return usage(format!("--setups: expected cells:k, got {s:?}"));
                    };
                    Ok(RankingSetup {
                        cells: parse_count("setups", cells)?,
                        k: parse_count("setups", k)?,
                    })
                })
                .collect::<CmdResult<Vec<_>>>()?;
            let report = ranking_accuracy_experiment(
                case, args.dim, n, &setups, args.reps, pairs, args.seed,
            )?;
            experiment_finished(&args.report, &report)
        }
    }
}
