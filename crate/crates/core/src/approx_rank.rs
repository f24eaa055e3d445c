//! Approximate non-dominated sorting.
//!
//! [`PdeRanker`] estimates the sample density on a grid from a random
//! subsample, solves the upwind scheme with that density, and ranks each
//! point by one extra node solve inside the cell that contains it.
//! [`rank_points_subset`] is the baseline that sorts the subsample exactly
//! and interpolates cell-averaged ranks.

use rayon::prelude::*;

use crate::density::{check_domain, histogram_density, subsample, SubsampleSpec};
use crate::error::{Error, Result};
use crate::exact_sort::{sort_exact, DepthVector, SortMethod};
use crate::grid::{snap, GridField, GridSpec};
use crate::hj_solver::{local_solve_rhs, solve_scheme, NodeSolveConfig};
use crate::points::PointCloud;

/// Fewest interior nodes per axis the equalizing rule may produce.
pub const MIN_INTERIOR_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HRule {
    /// Use the configured grid as is.
    #[default]
    Explicit,
    /// Balance sampling noise against discretization error:
    /// `h = side * k^{-1/(2(d+1))}`.
    Equalize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankerConfig {
    pub grid: GridSpec,
    pub k: usize,
    pub seed: u64,
    pub node_cfg: NodeSolveConfig,
    pub h_rule: HRule,
}

impl RankerConfig {
    pub fn new(grid: GridSpec, k: usize, seed: u64) -> Self {
        Self {
            grid,
            k,
            seed,
            node_cfg: NodeSolveConfig::default(),
            h_rule: HRule::Explicit,
        }
    }

    /// The grid actually used after applying the spacing rule. The equalized
    /// grid keeps the configured lower corner and covers the configured box.
    pub fn resolved_grid(&self) -> Result<GridSpec> {
        match self.h_rule {
            HRule::Explicit => Ok(self.grid.clone()),
            HRule::Equalize => {
                let d = self.grid.dim();
                let side = self
                    .grid
                    .lo()
                    .iter()
                    .zip(self.grid.hi())
                    .map(|(l, u)| u - l)
                    .fold(0.0, f64::max);
                let cells = snap(1.0 / equalizing_spacing(self.k, d)).ceil() as usize;
                let cells = cells.max(MIN_INTERIOR_NODES + 1);
                GridSpec::hypercube(self.grid.lo().to_vec(), side, cells)
            }
        }
    }

    fn check(&self, cloud: &PointCloud) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument(
                "subsample size must be at least 1".into(),
            ));
        }
        self.grid.check_dim(cloud.dim())?;
        self.node_cfg.validate(cloud.dim())
    }
}

/// Spacing on the unit cube that equates the sampling and discretization
/// error terms for `k` samples in dimension `dim`.
pub fn equalizing_spacing(k: usize, dim: usize) -> f64 {
    (k.max(1) as f64).powf(-1.0 / (2.0 * (dim as f64 + 1.0)))
}

/// Solved scheme for an estimated density, ready to rank arbitrary points.
#[derive(Debug, Clone)]
pub struct PdeRanker {
    density: GridField,
    solution: GridField,
    node_cfg: NodeSolveConfig,
}

impl PdeRanker {
    /// Subsample, histogram, and solve.
    pub fn fit(cloud: &PointCloud, cfg: &RankerConfig) -> Result<Self> {
        cfg.check(cloud)?;
        let grid = cfg.resolved_grid()?;
        check_domain(cloud, &grid)?;
        let sample = subsample(
            cloud,
            SubsampleSpec {
                k: cfg.k,
                seed: cfg.seed,
            },
        )?;
        let density = histogram_density(&sample, &grid)?;
        Self::from_density(density, cfg.node_cfg)
    }

    pub fn from_density(density: GridField, node_cfg: NodeSolveConfig) -> Result<Self> {
        let solution = solve_scheme(&density, &node_cfg)?;
        Ok(Self {
            density,
            solution,
            node_cfg,
        })
    }

    pub fn density(&self) -> &GridField {
        &self.density
    }

    pub fn solution(&self) -> &GridField {
        &self.solution
    }

    /// Rank of a single point.
    ///
    /// With `x` the upper corner of the cell holding `y` and `h_i = y_i -
    /// (x_i - h)`, solves `∏ (t - U(y - h_i e_i)) = h_1 ··· h_d f̂(x)`. Each
    /// backward value lies on a lower face of the cell and is interpolated
    /// multilinearly from that face's corner nodes. Points within one cell of
    /// the lower boundary rank 0.
    pub fn rank(&self, y: &[f64]) -> Result<f64> {
        let spec = self.solution.spec();
        spec.check_dim(y.len())?;
        let d = spec.dim();
        let h = spec.h();
        let mut upper = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for axis in 0..d {
            let s = spec.axis_coordinate(axis, y[axis])?;
            let top = (spec.shape()[axis] - 1) as f64;
            let c = s.ceil();
            let (c, w) = if c > top {
                (top, 1.0)
            } else {
                (c, s - (c - 1.0))
            };
            if c <= 1.0 {
                return Ok(0.0);
            }
            upper[axis] = c as usize;
            frac[axis] = w.clamp(0.0, 1.0);
        }

        let u = self.solution.values();
        let strides = spec.strides();
        let base: usize = upper.iter().zip(strides).map(|(c, s)| (c - 1) * s).sum();
        let mut neighbors = vec![0.0; d];
        for (i, a) in neighbors.iter_mut().enumerate() {
            let mut value = 0.0;
            for mask in 0usize..1 << d {
                if mask & (1 << i) != 0 {
                    continue;
                }
                let mut weight = 1.0;
                let mut flat = base;
                for j in (0..d).filter(|&j| j != i) {
                    if mask & (1 << j) != 0 {
                        weight *= frac[j];
                        flat += strides[j];
                    } else {
                        weight *= 1.0 - frac[j];
                    }
                }
                if weight != 0.0 {
                    value += weight * u[flat];
                }
            }
            *a = value;
        }
        let volume: f64 = frac.iter().map(|w| w * h).product();
        let f = self.density.get(&upper);
        local_solve_rhs(&neighbors, volume * f, &self.node_cfg)
    }

    pub fn rank_all(&self, cloud: &PointCloud) -> Result<DepthVector> {
        let ranks = (0..cloud.len())
            .into_par_iter()
            .map(|i| self.rank(cloud.point(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(DepthVector::Approximate(ranks))
    }
}

/// Approximate ranks from the estimated-density scheme, in units of the
/// scheme solution.
pub fn rank_points_pde(cloud: &PointCloud, cfg: &RankerConfig) -> Result<DepthVector> {
    PdeRanker::fit(cloud, cfg)?.rank_all(cloud)
}

/// Subset-ranking baseline.
///
/// The subsample is sorted exactly, each grid node takes the mean depth of
/// the subsample points in its cell, empty cells copy the nearest nonempty
/// cell, and points are ranked by multilinear interpolation of the node
/// values placed at cell centres.
pub fn rank_points_subset(cloud: &PointCloud, cfg: &RankerConfig) -> Result<DepthVector> {
    cfg.check(cloud)?;
    let grid = cfg.resolved_grid()?;
    check_domain(cloud, &grid)?;
    let sample = subsample(
        cloud,
        SubsampleSpec {
            k: cfg.k,
            seed: cfg.seed,
        },
    )?;
    let depths = sort_exact(&sample, SortMethod::Auto)?;
    let mut sums = vec![0.0; grid.len()];
    let mut counts = vec![0u32; grid.len()];
    for (i, y) in sample.iter().enumerate() {
        let flat = grid.flat_index(&grid.floor_to_grid(y)?);
        sums[flat] += depths.get(i);
        counts[flat] += 1;
    }
    let averages: Vec<Option<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| (c > 0).then(|| s / f64::from(c)))
        .collect();
    let node_ranks = GridField::new(grid.clone(), fill_nearest(&grid, &averages))?;
    let ranks = (0..cloud.len())
        .into_par_iter()
        .map(|i| interpolate_centered(&node_ranks, cloud.point(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DepthVector::Approximate(ranks))
}

/// Replaces each missing node value with the value of the nearest present
/// node in Chebyshev distance, preferring the lowest flat index on ties.
///
/// Multi-source breadth-first search over king moves; a node first reached
/// in layer `L + 1` takes the smallest source among its layer-`L` neighbours.
fn fill_nearest(grid: &GridSpec, values: &[Option<f64>]) -> Vec<f64> {
    let d = grid.dim();
    let shape = grid.shape();
    let strides = grid.strides();
    let offsets: Vec<Vec<isize>> = (0..3usize.pow(d as u32))
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let o = (code % 3) as isize - 1;
                    code /= 3;
                    o
                })
                .collect()
        })
        .filter(|o: &Vec<isize>| o.iter().any(|&x| x != 0))
        .collect();

    let mut source = vec![usize::MAX; values.len()];
    let mut layer = vec![u32::MAX; values.len()];
    let mut frontier = Vec::new();
    for (flat, v) in values.iter().enumerate() {
        if v.is_some() {
            source[flat] = flat;
            layer[flat] = 0;
            frontier.push(flat);
        }
    }
    let mut depth = 0;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &v in &frontier {
            let index = grid.multi_index(v);
            'offsets: for off in &offsets {
                let mut w = 0;
                for axis in 0..d {
                    let j = index[axis] as isize + off[axis];
                    if j < 0 || j >= shape[axis] as isize {
                        continue 'offsets;
                    }
                    w += j as usize * strides[axis];
                }
                if layer[w] == u32::MAX {
                    layer[w] = depth + 1;
                    source[w] = source[v];
                    next.push(w);
                } else if layer[w] == depth + 1 && source[v] < source[w] {
                    source[w] = source[v];
                }
            }
        }
        frontier = next;
        depth += 1;
    }
    source
        .iter()
        .map(|&s| {
            if s == usize::MAX {
                0.0
            } else {
                values[s].unwrap_or(0.0)
            }
        })
        .collect()
}

/// Multilinear interpolation with node values sitting at cell centres
/// `node + h/2`; constant beyond the outermost centres.
#[allow(clippy::needless_range_loop)]
fn interpolate_centered(field: &GridField, y: &[f64]) -> Result<f64> {
    let spec = field.spec();
    spec.check_dim(y.len())?;
    let d = spec.dim();
    let mut base = vec![0usize; d];
    let mut t = vec![0.0; d];
    for axis in 0..d {
        let s = spec.axis_coordinate(axis, y[axis])? - 0.5;
        let last = (spec.shape()[axis] - 2) as f64;
        let b = s.floor().clamp(0.0, last);
        base[axis] = b as usize;
        t[axis] = (s - b).clamp(0.0, 1.0);
    }
    let start = spec.flat_index(&base);
    let mut value = 0.0;
    for mask in 0usize..1 << d {
        let mut weight = 1.0;
        let mut flat = start;
        for axis in 0..d {
            if mask & (1 << axis) != 0 {
                weight *= t[axis];
                flat += spec.strides()[axis];
            } else {
                weight *= 1.0 - t[axis];
            }
        }
        if weight != 0.0 {
            value += weight * field.values()[flat];
        }
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::leq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_cloud(n: usize, d: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new(d, (0..n * d).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    fn unit_ranker(cells: usize, f: impl Fn(&[f64]) -> f64) -> PdeRanker {
        let spec = GridSpec::cube(2, 0.0, 1.0, cells).unwrap();
        let density = GridField::from_fn(spec, f).unwrap();
        PdeRanker::from_density(density, NodeSolveConfig::default()).unwrap()
    }

    #[test]
    fn nodes_reproduce_the_solved_field() {
        let ranker = unit_ranker(40, |x| 1.0 + x[0] * x[1]);
        let spec = ranker.solution().spec().clone();
        for idx in [[2, 2], [5, 17], [40, 40], [39, 3], [20, 20]] {
            let y = spec.node(&idx);
            let r = ranker.rank(&y).unwrap();
            assert!((r - ranker.solution().get(&idx)).abs() < 1e-6, "{idx:?}");
        }
    }

    #[test]
    fn boundary_strip_ranks_zero() {
        let ranker = unit_ranker(10, |_| 1.0);
        assert_eq!(ranker.rank(&[0.05, 0.9]).unwrap(), 0.0);
        assert_eq!(ranker.rank(&[0.9, 0.1]).unwrap(), 0.0);
        assert!(ranker.rank(&[0.9, 0.11]).unwrap() > 0.0);
        assert!(ranker.rank(&[1.1, 0.5]).is_err());
    }

    #[test]
    fn uniform_density_approximates_closed_form() {
        let ranker = unit_ranker(200, |_| 1.0);
        let r = ranker.rank(&[0.25, 0.25]).unwrap();
        assert!((r - 0.5).abs() < 2.0 * 0.005f64.sqrt(), "{r}");
        assert!(r <= 0.5);
        let r = ranker.rank(&[0.333, 0.777]).unwrap();
        assert!((r - 2.0 * (0.333f64 * 0.777).sqrt()).abs() < 0.1);
    }

    #[test]
    fn ranks_are_monotone_inside_a_cell() {
        let ranker = unit_ranker(20, |x| 0.5 + x[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..2000 {
            let cell = [
                rng.random_range(2..20) as f64,
                rng.random_range(2..20) as f64,
            ];
            let a = [rng.random::<f64>(), rng.random::<f64>()];
            let b = [
                a[0] + (1.0 - a[0]) * rng.random::<f64>(),
                a[1] + (1.0 - a[1]) * rng.random::<f64>(),
            ];
            let pa = [(cell[0] - 1.0 + a[0]) * 0.05, (cell[1] - 1.0 + a[1]) * 0.05];
            let pb = [(cell[0] - 1.0 + b[0]) * 0.05, (cell[1] - 1.0 + b[1]) * 0.05];
            assert!(ranker.rank(&pa).unwrap() <= ranker.rank(&pb).unwrap() + 1e-5);
        }
    }

    #[test]
    fn three_dimensional_pipeline_orders_chains() {
        let cloud = uniform_cloud(3000, 3, 4);
        let grid = GridSpec::cube(3, 0.0, 1.0, 20).unwrap();
        let cfg = RankerConfig::new(grid, 3000, 1);
        let ranks = rank_points_pde(&cloud, &cfg).unwrap().to_f64();
        let ranker = PdeRanker::fit(&cloud, &cfg).unwrap();
        assert!(ranker.solution().is_pareto_monotone());
        let mut violations = 0;
        for i in 0..300 {
            for j in 0..300 {
                if leq(cloud.point(i), cloud.point(j)) && ranks[i] > ranks[j] + 1e-5 {
                    violations += 1;
                }
            }
        }
        assert_eq!(violations, 0);
    }

    #[test]
    fn equalize_rule() {
        assert!((equalizing_spacing(1_000_000, 2) - 0.1).abs() < 1e-12);
        let grid = GridSpec::cube(2, 0.0, 2.0, 10).unwrap();
        let mut cfg = RankerConfig::new(grid, 1_000_000, 0);
        cfg.h_rule = HRule::Equalize;
        let g = cfg.resolved_grid().unwrap();
        assert_eq!(g.shape(), &[11, 11]);
        assert!((g.h() - 0.2).abs() < 1e-12);
        cfg.k = 10;
        let g = cfg.resolved_grid().unwrap();
        assert_eq!(g.shape(), &[10, 10]);
    }

    #[test]
    fn subset_ranks_at_cell_centres_are_exact() {
        let spec = GridSpec::cube(2, 0.0, 1.0, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut rows = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                if rng.random::<f64>() < 0.6 {
                    rows.push([(i as f64 + 0.5) * 0.1, (j as f64 + 0.5) * 0.1]);
                }
            }
        }
        let cloud = PointCloud::from_rows(&rows).unwrap();
        let cfg = RankerConfig::new(spec, cloud.len(), 3);
        let approx = rank_points_subset(&cloud, &cfg).unwrap().to_f64();
        let exact = sort_exact(&cloud, SortMethod::Auto).unwrap().to_f64();
        for (a, e) in approx.iter().zip(&exact) {
            assert!((a - e).abs() < 1e-9);
        }
    }

    #[test]
    fn subset_ranks_of_an_antichain_are_one() {
        let rows: Vec<[f64; 2]> = (0..50)
            .map(|i| [i as f64 / 50.0, 1.0 - i as f64 / 50.0])
            .collect();
        let cloud = PointCloud::from_rows(&rows).unwrap();
        let cfg = RankerConfig::new(GridSpec::cube(2, 0.0, 1.0, 16).unwrap(), 20, 0);
        let ranks = rank_points_subset(&cloud, &cfg).unwrap().to_f64();
        assert!(ranks.iter().all(|&r| (r - 1.0).abs() < 1e-12));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn nearest_fill_prefers_lower_indices() {
        let grid = GridSpec::cube(2, 0.0, 1.0, 4).unwrap();
        let mut values = vec![None; 25];
        values[grid.flat_index(&[0, 0])] = Some(1.0);
        values[grid.flat_index(&[4, 4])] = Some(5.0);
        values[grid.flat_index(&[0, 4])] = Some(3.0);
        let filled = fill_nearest(&grid, &values);
        let at = |i: usize, j: usize| filled[grid.flat_index(&[i, j])];
        assert_eq!(at(1, 1), 1.0);
        assert_eq!(at(3, 3), 5.0);
        // (2,2) is at distance 2 from all three; (0,0) has the lowest index.
        assert_eq!(at(2, 2), 1.0);
        // (2,4): distance 2 to (0,4) and (4,4); (0,4) is lower.
        assert_eq!(at(2, 4), 3.0);
        // Brute-force check over the whole grid.
        let sources: Vec<usize> = (0..25).filter(|&i| values[i].is_some()).collect();
        for v in 0..25 {
            let iv = grid.multi_index(v);
            let cheb = |s: usize| {
                let is = grid.multi_index(s);
                iv.iter()
                    .zip(&is)
                    .map(|(a, b)| a.abs_diff(*b))
                    .max()
                    .unwrap()
            };
            let best = sources
                .iter()
                .copied()
                .min_by_key(|&s| (cheb(s), s))
                .unwrap();
            assert_eq!(filled[v], values[best].unwrap());
        }
    }

    #[test]
    fn ranking_is_deterministic() {
        let cloud = uniform_cloud(5000, 2, 12);
        let cfg = RankerConfig::new(GridSpec::cube(2, 0.0, 1.0, 30).unwrap(), 1000, 77);
        assert_eq!(
            rank_points_pde(&cloud, &cfg).unwrap(),
            rank_points_pde(&cloud, &cfg).unwrap()
        );
        assert_eq!(
            rank_points_subset(&cloud, &cfg).unwrap(),
            rank_points_subset(&cloud, &cfg).unwrap()
        );
    }

    #[test]
    fn config_errors() {
        let cloud = uniform_cloud(10, 2, 0);
        let mut cfg = RankerConfig::new(GridSpec::cube(3, 0.0, 1.0, 5).unwrap(), 5, 0);
        assert!(rank_points_pde(&cloud, &cfg).is_err());
        cfg.grid = GridSpec::cube(2, 0.0, 1.0, 5).unwrap();
        cfg.k = 0;
        assert!(rank_points_subset(&cloud, &cfg).is_err());
        cfg.k = 5;
        cfg.grid = GridSpec::cube(2, 0.5, 1.0, 5).unwrap();
        assert!(matches!(
            rank_points_pde(&cloud, &cfg),
            Err(Error::OutOfDomain { .. })
        ));
    }
}
