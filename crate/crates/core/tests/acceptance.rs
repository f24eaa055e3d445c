//! Acceptance suite: one PASS/FAIL line per criterion.

use std::cell::RefCell;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdsort::evaluation::{
    accuracy_exact, accuracy_montecarlo, longest_chain_constant, pde_rate_experiment,
    ranking_accuracy_experiment, solve_case, stochastic_rate_experiment, AnalyticCase,
    RankingSetup,
};
use pdsort::hj_solver::local_solve;
use pdsort::{
    longest_chain_depths, nondominated_sort_2d, rank_points_pde, residual_report, solve_scheme,
    GridField, GridSpec, NodeSolveConfig, NodeSolveMethod, PointCloud, RankerConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

/// Residual checks of every scheme solve made by the other criteria.
struct ResidualLog {
    solves: usize,
    nodes: usize,
    violations: usize,
    worst_ratio: f64,
}

thread_local! {
    static RESIDUALS: RefCell<ResidualLog> = const {
        RefCell::new(ResidualLog { solves: 0, nodes: 0, violations: 0, worst_ratio: 0.0 })
    };
}

fn record_residual(solution: &GridField, density: &GridField, cfg: &NodeSolveConfig) {
    let report = residual_report(solution, density).expect("residual report");
    let bound = cfg.residual_bound(solution.spec().h());
    let h = solution.spec().h();
    let d = solution.spec().dim();
    // Count offending nodes, not just the maximum.
    let spec = solution.spec();
    let u = solution.values();
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for (i, &ux) in u.iter().enumerate() {
        let idx = spec.multi_index(i);
        if idx.iter().any(|&j| j < 2) {
            continue;
        }
        let mut s = 1.0;
        for axis in 0..d {
            s *= (ux - u[i - spec.strides()[axis]]) / h;
        }
        let r = (s - density.values()[i]).abs();
        worst = worst.max(r / bound);
        if r > bound {
            violations += 1;
        }
    }
    RESIDUALS.with(|log| {
        let mut log = log.borrow_mut();
        log.solves += 1;
        log.nodes += report.interior_nodes;
        log.violations += violations;
        log.worst_ratio = log
            .worst_ratio
            .max(worst)
            .max(report.max_abs_residual / bound);
    });
}

fn solve_logged(density: &GridField, cfg: &NodeSolveConfig) -> GridField {
    let solution = solve_scheme(density, cfg).expect("solve");
    record_residual(&solution, density, cfg);
    solution
}

/// Independent root finder for `∏ (t - a_i) = rhs`: plain bisection until
/// the bracket collapses to adjacent floats.
fn dense_bisection(a: &[f64], rhs: f64) -> f64 {
    let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let g = |t: f64| a.iter().map(|&ai| t - ai).product::<f64>() - rhs;
    let mut lo = m;
    let mut hi = m + rhs.powf(1.0 / a.len() as f64) + 1e-12;
    while g(hi) < 0.0 {
        hi += hi - lo;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c1_node_solve() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let closed = NodeSolveConfig::with_method(NodeSolveMethod::ClosedForm2d);
    let bisect = NodeSolveConfig::default();
    let mut worst2: f64 = 0.0;
    for _ in 0..100_000 {
        let a = [rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)];
        let h = rng.random_range(1e-3..0.1);
        let f = rng.random_range(0.0..10.0);
        let x = local_solve(&a, h, f, &closed).unwrap();
        let y = local_solve(&a, h, f, &bisect).unwrap();
        worst2 = worst2.max((x - y).abs());
    }
    let fine = NodeSolveConfig {
        tolerance: 1e-10,
        ..NodeSolveConfig::default()
    };
    let mut worst3: f64 = 0.0;
    for _ in 0..1000 {
        let a: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..2.0)).collect();
        let h = rng.random_range(1e-3..0.1);
        let f = rng.random_range(0.0..10.0);
        let x = local_solve(&a, h, f, &fine).unwrap();
        worst3 = worst3.max((x - dense_bisection(&a, h.powi(3) * f)).abs());
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst2 <= 1e-6 && worst3 <= 1e-8 && elapsed < Duration::from_secs(5),
        detail: format!(
            "d=2 max diff {worst2:.2e} (<= 1e-6), d=3 max diff {worst3:.2e} (<= 1e-8), {:.2}s (< 5s)",
            elapsed.as_secs_f64()
        ),
    }
}

fn c3_pde_rates() -> Outcome {
    let start = Instant::now();
    let cfg = NodeSolveConfig::default();
    let grids = [50, 100, 200, 400, 800];
    let report = pde_rate_experiment(AnalyticCase::F3Punctured, 2, &grids, &cfg).unwrap();
    for &cells in &grids {
        let (density, solution) = solve_case(AnalyticCase::F3Punctured, 2, cells, &cfg).unwrap();
        record_residual(&solution, &density, &cfg);
    }
    let elapsed = start.elapsed();
    let a_inf = report.linf_fit.unwrap().alpha;
    let a_l1 = report.l1_fit.unwrap().alpha;
    Outcome {
        pass: (a_inf - 0.50).abs() <= 0.10 && (a_l1 - 0.88).abs() <= 0.10 && elapsed < Duration::from_secs(120),
        detail: format!(
            "alpha_Linf {a_inf:.4} (0.50 ± 0.10), alpha_L1 {a_l1:.4} (0.88 ± 0.10), {:.1}s (< 120s)",
            elapsed.as_secs_f64()
        ),
    }
}

fn c4_from_below() -> Outcome {
    let cfg = NodeSolveConfig::default();
    let mut worst = f64::NEG_INFINITY;
    for case in [AnalyticCase::F1Uniform, AnalyticCase::F2Gaussian] {
        for cells in [50, 100, 200, 400] {
            let spec = GridSpec::cube(2, 0.0, 1.0, cells).unwrap();
            let density = GridField::from_fn(spec, |x| case.density(x)).unwrap();
            let solution = solve_logged(&density, &cfg);
            let spec = solution.spec();
            for (i, &v) in solution.values().iter().enumerate() {
                worst = worst.max(v - case.solution(&spec.node(&spec.multi_index(i))));
            }
        }
    }
    Outcome {
        pass: worst <= 1e-5,
        detail: format!("max (U_h - U) = {worst:.2e} (<= 1e-5) over f1, f2 and grids 50..400"),
    }
}

fn c5_comparison() -> Outcome {
    let cfg = NodeSolveConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = f64::NEG_INFINITY;
    for pair in 0..100 {
        let (dim, cells) = if pair % 4 == 3 {
            (3, rng.random_range(6..14))
        } else {
            (2, rng.random_range(10..60))
        };
        let spec = GridSpec::cube(dim, 0.0, 1.0, cells).unwrap();
        let fu: Vec<f64> = (0..spec.len())
            .map(|_| {
                if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random_range(0.0..5.0)
                }
            })
            .collect();
        let fv: Vec<f64> = fu
            .iter()
            .map(|&f| {
                if rng.random_bool(0.5) {
                    f
                } else {
                    f + rng.random_range(0.0..2.0)
                }
            })
            .collect();
        let fu = GridField::new(spec.clone(), fu).unwrap();
        let fv = GridField::new(spec, fv).unwrap();
        let uu = solve_logged(&fu, &cfg);
        let uv = solve_logged(&fv, &cfg);
        for (a, b) in uu.values().iter().zip(uv.values()) {
            worst = worst.max(a - b);
        }
    }
    Outcome {
        pass: worst <= cfg.tolerance,
        detail: format!(
            "max (U_u - U_v) = {worst:.2e} (<= {:.0e}) over 100 pairs",
            cfg.tolerance
        ),
    }
}

fn c6_holder() -> Outcome {
    let cfg = NodeSolveConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let r: f64 = 1.0;
    let d = 2usize;
    let mut worst_ratio: f64 = 0.0;
    for case in AnalyticCase::ALL {
        let spec = GridSpec::cube(d, 0.0, 1.0, 200).unwrap();
        let h = spec.h();
        let density = GridField::from_fn(spec.clone(), |x| case.density(x)).unwrap();
        let u = solve_logged(&density, &cfg);
        let vals = u.values();
        // sup of S(h, ·, U_h) over (h, R]^d
        let mut s_max: f64 = 0.0;
        for (i, &ux) in vals.iter().enumerate() {
            let idx = spec.multi_index(i);
            if idx.iter().any(|&j| j < 2) {
                continue;
            }
            let s: f64 = (0..d)
                .map(|a| (ux - vals[i - spec.strides()[a]]) / h)
                .product();
            s_max = s_max.max(s);
        }
        let c =
            2.0 * (d * d) as f64 * r.powf((d as f64 - 1.0) / d as f64) * s_max.powf(1.0 / d as f64);
        let eval = |x: &[f64]| u.get(&spec.floor_to_grid(x).unwrap());
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..d)
                .map(|_| rng.random_range(h..r) + f64::EPSILON)
                .collect();
            let y: Vec<f64> = (0..d)
                .map(|_| rng.random_range(h..r) + f64::EPSILON)
                .collect();
            let dist = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let bound = c * (dist.powf(1.0 / d as f64) + h.powf(1.0 / d as f64));
            worst_ratio = worst_ratio.max((eval(&x) - eval(&y)).abs() / bound);
        }
    }
    Outcome {
        pass: worst_ratio <= 1.0,
        detail: format!("max |ΔU_h| / bound = {worst_ratio:.3} (<= 1) over f1..f4, 1e4 pairs each"),
    }
}

fn c7_sorter_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut mismatches = 0;
    for inst in 0..200 {
        let n = rng.random_range(1..=2000);
        // Every third instance draws from a coarse lattice to force ties.
        let coarse = inst % 3 == 0;
        let coords: Vec<f64> = (0..2 * n)
            .map(|_| {
                if coarse {
                    rng.random_range(0..20) as f64
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let cloud = PointCloud::new(2, coords).unwrap();
        if nondominated_sort_2d(&cloud).unwrap() != longest_chain_depths(&cloud) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: mismatches == 0 && elapsed < Duration::from_secs(10),
        detail: format!(
            "{mismatches} mismatches in 200 instances, {:.2}s (< 10s)",
            elapsed.as_secs_f64()
        ),
    }
}

fn c8_chain_constant() -> Outcome {
    let start = Instant::now();
    let c = longest_chain_constant(2, 1_000_000, 10, 808).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        pass: (1.90..=2.02).contains(&c.mean) && elapsed < Duration::from_secs(120),
        detail: format!(
            "mean n^-1/2 max depth {:.4} ± {:.4} in [1.90, 2.02], {:.1}s (< 120s)",
            c.mean,
            c.ci95,
            elapsed.as_secs_f64()
        ),
    }
}

fn c9_stochastic_rates() -> Outcome {
    let start = Instant::now();
    let sizes = [1_000, 10_000, 100_000, 1_000_000];
    let report = stochastic_rate_experiment(AnalyticCase::F3Punctured, &sizes, 10, 909).unwrap();
    let elapsed = start.elapsed();
    let a_l1 = report.l1_fit.unwrap().alpha;
    let a_inf = report.linf_fit.unwrap().alpha;
    Outcome {
        pass: (a_l1 - 0.33).abs() <= 0.08 && (a_inf - 0.31).abs() <= 0.08 && elapsed < Duration::from_secs(600),
        detail: format!(
            "alpha_L1 {a_l1:.4} (0.33 ± 0.08), alpha_Linf {a_inf:.4} (0.31 ± 0.08), {:.1}s (< 600s)",
            elapsed.as_secs_f64()
        ),
    }
}

fn c10_end_to_end() -> Outcome {
    let start = Instant::now();
    let setups = [
        RankingSetup {
            cells: 100,
            k: 10_000,
        },
        RankingSetup {
            cells: 250,
            k: 100_000,
        },
    ];
    let report = ranking_accuracy_experiment(
        AnalyticCase::F1Uniform,
        2,
        100_000,
        &setups,
        3,
        1_000_000,
        1010,
    )
    .unwrap();
    let elapsed = start.elapsed();
    let pde: Vec<f64> = report
        .accuracy
        .iter()
        .filter(|r| r.method == "pde")
        .map(|r| r.mean)
        .collect();
    Outcome {
        pass: pde[0] > 0.95 && pde[1] >= pde[0] && elapsed < Duration::from_secs(60),
        detail: format!(
            "accuracy {:.4} at (100, 1e4) (> 0.95), {:.4} at (250, 1e5) (>= previous), {:.1}s (< 60s)",
            pde[0],
            pde[1],
            elapsed.as_secs_f64()
        ),
    }
}

fn c11_pde_vs_subset() -> Outcome {
    let setups = [RankingSetup {
        cells: 100,
        k: 1_000,
    }];
    let report = ranking_accuracy_experiment(
        AnalyticCase::F1Uniform,
        2,
        100_000,
        &setups,
        10,
        1_000_000,
        1111,
    )
    .unwrap();
    let get = |m: &str| {
        report
            .accuracy
            .iter()
            .find(|r| r.method == m)
            .unwrap()
            .clone()
    };
    let (pde, subset) = (get("pde"), get("subset"));
    Outcome {
        pass: pde.mean >= subset.mean,
        detail: format!(
            "PDE {:.4} ± {:.4} vs subset {:.4} ± {:.4} over 10 seeds",
            pde.mean, pde.ci95, subset.mean, subset.ci95
        ),
    }
}

fn c12_montecarlo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1212);
    let coords: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
    let cloud = PointCloud::new(2, coords).unwrap();
    let exact = nondominated_sort_2d(&cloud).unwrap().to_f64();
    let cfg = RankerConfig::new(GridSpec::cube(2, 0.0, 1.0, 30).unwrap(), 1000, 12);
    let approx = rank_points_pde(&cloud, &cfg).unwrap().to_f64();
    let truth = accuracy_exact(&exact, &approx).unwrap();
    let mc = accuracy_montecarlo(&exact, &approx, 5000, 10, 1213).unwrap();
    let z = (mc.mean - truth).abs() / mc.std_error;
    Outcome {
        pass: z <= 3.0,
        detail: format!(
            "exact {truth:.5}, Monte Carlo {:.5} ± {:.5} (se), {z:.2} se apart (<= 3)",
            mc.mean, mc.std_error
        ),
    }
}

fn c2_residuals() -> Outcome {
    RESIDUALS.with(|log| {
        let log = log.borrow();
        Outcome {
            pass: log.solves > 0 && log.violations == 0,
            detail: format!(
                "{} solves, {} interior nodes, {} above bound, worst residual/bound {:.3}",
                log.solves, log.nodes, log.violations, log.worst_ratio
            ),
        }
    })
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 node-solve correctness", c1_node_solve),
        ("3 PDE convergence rates", c3_pde_rates),
        ("4 convergence from below", c4_from_below),
        ("5 comparison principle", c5_comparison),
        ("6 Hölder bound", c6_holder),
        ("7 exact-sorter oracle equivalence", c7_sorter_oracle),
        ("8 stochastic limit constant", c8_chain_constant),
        ("9 stochastic convergence rates", c9_stochastic_rates),
        ("10 end-to-end accuracy", c10_end_to_end),
        ("11 PDE vs subset ranking", c11_pde_vs_subset),
        ("12 Monte Carlo consistency", c12_montecarlo),
    ];
    let mut results = Vec::new();
    for (name, run) in criteria {
        let outcome = run();
        println!(
            "[{}] {name}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
        results.push((name, outcome.pass));
    }
    // Residuals are checked last so they cover every solve above.
    let outcome = c2_residuals();
    println!(
        "[{}] 2 scheme residual: {}",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail
    );
    results.push(("2 scheme residual", outcome.pass));
    let failed: Vec<&str> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed",
        results.len() - failed.len(),
        failed.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
