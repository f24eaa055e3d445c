//! Upwind scheme for `U_{x_1} ··· U_{x_d} = f` with zero boundary data.
//!
//! At every node `x` away from the boundary strip the scheme asks for the
//! unique `t >= max_i U(x - h e_i)` with
//!
//! ```text
//! ∏_i (t - U(x - h e_i)) = h^d f(x)
//! ```
//!
//! Nodes with some index equal to 0 or 1 lie within distance `h` of the lower
//! boundary and are held at zero. Because each node only depends on its
//! backward neighbours, a single lexicographic sweep solves the whole grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{increment, GridField};
use crate::points::project;

/// Root finder for the per-node equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeSolveMethod {
    /// Quadratic formula; `d = 2` only.
    ClosedForm2d,
    Bisection,
    /// Newton's method started at the upper end of the bracket.
    NewtonSafeguarded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSolveConfig {
    pub method: NodeSolveMethod,
    /// Absolute accuracy required of each node value.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NodeSolveConfig {
    fn default() -> Self {
        Self {
            method: NodeSolveMethod::Bisection,
            tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

impl NodeSolveConfig {
    pub fn with_method(method: NodeSolveMethod) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "node-solve tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "max_iterations must be positive".into(),
            ));
        }
        if self.method == NodeSolveMethod::ClosedForm2d && dim != 2 {
            return Err(Error::UnsupportedDimension {
                dim,
                reason: "the closed-form node solve needs d = 2",
            });
        }
        Ok(())
    }

    /// Bound on the per-node re-substitution residual `|S(h, x, U_h) - f|`
    /// expected from this configuration at spacing `h`.
    pub fn residual_bound(&self, h: f64) -> f64 {
        10.0 * self.tolerance / h
    }
}

/// `∏ (t - a_i)` and its derivative in `t`.
fn product_and_slope(t: f64, neighbors: &[f64]) -> (f64, f64) {
    let mut prod = 1.0;
    let mut slope = 0.0;
    for &a in neighbors {
        slope = slope * (t - a) + prod;
        prod *= t - a;
    }
    (prod, slope)
}

/// Solves the node equation with spacing `h`: the `t >= max a_i` such that
/// `∏ (t - a_i) = h^d density`.
pub fn local_solve(neighbors: &[f64], h: f64, density: f64, cfg: &NodeSolveConfig) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "spacing must be positive, got {h}"
        )));
    }
    if !density.is_finite() {
        return Err(Error::NonFinite("density".into()));
    }
    if density < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "negative density {density}"
        )));
    }
    local_solve_rhs(neighbors, h.powi(neighbors.len() as i32) * density, cfg)
}

/// Solves `∏ (t - a_i) = rhs` for the root `t >= max a_i`.
///
/// The root lies in `[m, m + rhs^{1/d}]` with `m = max a_i`. Bisection shrinks
/// that bracket below the tolerance and finishes with one secant step inside
/// the final bracket.
pub fn local_solve_rhs(neighbors: &[f64], rhs: f64, cfg: &NodeSolveConfig) -> Result<f64> {
    let d = neighbors.len();
    if d == 0 {
        return Err(Error::InvalidArgument("no neighbours given".into()));
    }
    if neighbors.iter().any(|a| !a.is_finite()) || !rhs.is_finite() {
        return Err(Error::NonFinite("node-solve input".into()));
    }
    if rhs < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "negative right-hand side {rhs}"
        )));
    }
    let m = neighbors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if rhs == 0.0 {
        return Ok(m);
    }
    let upper = m + rhs.powf(1.0 / d as f64);
    match cfg.method {
        NodeSolveMethod::ClosedForm2d => {
            if d != 2 {
                return Err(Error::UnsupportedDimension {
                    dim: d,
                    reason: "the closed-form node solve needs d = 2",
                });
            }
            let (a, b) = (neighbors[0], neighbors[1]);
            let t = 0.5 * (a + b) + 0.5 * ((a - b) * (a - b) + 4.0 * rhs).sqrt();
            Ok(t.clamp(m, upper))
        }
        NodeSolveMethod::Bisection => bisect(neighbors, rhs, m, upper, cfg),
        NodeSolveMethod::NewtonSafeguarded => newton(neighbors, rhs, m, upper, cfg),
    }
}

fn bisect(
    neighbors: &[f64],
    rhs: f64,
    mut lo: f64,
    mut hi: f64,
    cfg: &NodeSolveConfig,
) -> Result<f64> {
    let mut iterations = 0;
    while hi - lo > cfg.tolerance {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket is down to adjacent floats
        }
        if iterations == cfg.max_iterations {
            return Err(Error::NoConvergence(cfg.max_iterations));
        }
        iterations += 1;
        if product_and_slope(mid, neighbors).0 < rhs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g_lo = product_and_slope(lo, neighbors).0 - rhs;
    let g_hi = product_and_slope(hi, neighbors).0 - rhs;
    let t = if g_hi > g_lo {
        lo - g_lo * (hi - lo) / (g_hi - g_lo)
    } else {
        0.5 * (lo + hi)
    };
    Ok(t.clamp(lo, hi))
}

/// On `[m, ∞)` the product is increasing and convex, so Newton iterates
/// started at the upper bracket end decrease monotonically onto the root.
fn newton(neighbors: &[f64], rhs: f64, m: f64, upper: f64, cfg: &NodeSolveConfig) -> Result<f64> {
    let mut t = upper;
    for _ in 0..cfg.max_iterations {
        let (p, slope) = product_and_slope(t, neighbors);
        let g = p - rhs;
        if g <= 0.0 || slope <= 0.0 {
            return Ok(t);
        }
        let next = (t - g / slope).clamp(m, t);
        let step = t - next;
        t = next;
        if step <= 0.01 * cfg.tolerance {
            return Ok(t);
        }
    }
    Err(Error::NoConvergence(cfg.max_iterations))
}

/// Solves the scheme on the grid of `density`, one sweep in lexicographic
/// order. The result is zero on every node with an index below 2.
pub fn solve_scheme(density: &GridField, cfg: &NodeSolveConfig) -> Result<GridField> {
    let spec = density.spec();
    let d = spec.dim();
    cfg.validate(d)?;
    if let Some(i) = density.values().iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeDensity {
            value: density.values()[i],
            index: spec.multi_index(i),
        });
    }
    let scale = spec.h().powi(d as i32);
    let strides = spec.strides().to_vec();
    let f = density.values();
    let mut solution = GridField::zeros(spec.clone());
    let u = solution.values_mut();
    let mut neighbors = vec![0.0; d];
    let mut index = vec![0; d];
    let mut flat = 0;
    loop {
        if index.iter().all(|&j| j >= 2) {
            for (a, &s) in neighbors.iter_mut().zip(&strides) {
                *a = u[flat - s];
            }
            u[flat] = local_solve_rhs(&neighbors, scale * f[flat], cfg)?;
        }
        flat += 1;
        if !increment(&mut index, spec.shape()) {
            break;
        }
    }
    Ok(solution)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeResidualReport {
    pub max_abs_residual: f64,
    /// Multi-index of the worst node; empty when the grid has no interior.
    pub location: Vec<usize>,
    pub interior_nodes: usize,
}

/// Re-substitutes `solution` into the scheme at every interior node and
/// reports the largest `|∏_i (U(x) - U(x - h e_i)) / h^d - f(x)|`.
pub fn residual_report(solution: &GridField, density: &GridField) -> Result<SchemeResidualReport> {
    let spec = solution.spec();
    if spec != density.spec() {
        return Err(Error::InvalidGrid(
            "solution and density live on different grids".into(),
        ));
    }
    let d = spec.dim();
    let h = spec.h();
    let u = solution.values();
    let mut report = SchemeResidualReport {
        max_abs_residual: 0.0,
        location: Vec::new(),
        interior_nodes: 0,
    };
    let mut index = vec![0; d];
    let mut flat = 0;
    loop {
        if index.iter().all(|&j| j >= 2) {
            let s: f64 = spec
                .strides()
                .iter()
                .map(|&st| (u[flat] - u[flat - st]) / h)
                .product();
            let r = (s - density.values()[flat]).abs();
            report.interior_nodes += 1;
            if r > report.max_abs_residual || report.location.is_empty() {
                report.max_abs_residual = r;
                report.location = index.clone();
            }
        }
        flat += 1;
        if !increment(&mut index, spec.shape()) {
            break;
        }
    }
    Ok(report)
}

/// Piecewise-constant extension: the value at `⌊x⌋_h`.
pub fn extend_eval(solution: &GridField, x: &[f64]) -> Result<f64> {
    let index = solution.spec().floor_to_grid(x)?;
    Ok(solution.get(&index))
}

/// Checks `U = U ∘ π_z` on every node, with exact equality.
pub fn check_truncation(solution: &GridField, z: &[f64]) -> bool {
    let spec = solution.spec();
    if z.len() != spec.dim() {
        return false;
    }
    let mut index = vec![0; spec.dim()];
    loop {
        let x = spec.node(&index);
        let projected = match extend_eval(solution, &project(&x, z)) {
            Ok(v) => v,
            Err(_) => return false,
        };
        if solution.get(&index) != projected {
            return false;
        }
        if !increment(&mut index, spec.shape()) {
            return true;
        }
    }
}
