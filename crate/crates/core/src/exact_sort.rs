//! Exact non-dominated sorting.
//!
//! The depth of a point is the length of the longest chain of sample points
//! below it in the componentwise order; points of depth `k` form the `k`-th
//! Pareto front. Identical points share a depth: a point never counts itself
//! or its duplicates as predecessors.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::points::{leq, PointCloud};

/// One rank per point of a cloud, in the cloud's order.
#[derive(Debug, Clone, PartialEq)]
pub enum DepthVector {
    /// 1-based Pareto depths from exact sorting.
    Exact(Vec<u32>),
    /// Real-valued ranks from approximate sorting.
    Approximate(Vec<f64>),
}

impl DepthVector {
    pub fn len(&self) -> usize {
        match self {
            Self::Exact(v) => v.len(),
            Self::Approximate(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> f64 {
        match self {
            Self::Exact(v) => f64::from(v[i]),
            Self::Approximate(v) => v[i],
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Self::Exact(v) => v.iter().map(|&d| f64::from(d)).collect(),
            Self::Approximate(v) => v.clone(),
        }
    }

    pub fn max(&self) -> f64 {
        (0..self.len())
            .map(|i| self.get(i))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Integer depths, accepting approximate vectors whose entries happen to
    /// be positive integers.
    pub fn integer_depths(&self) -> Result<Vec<u32>> {
        match self {
            Self::Exact(v) => Ok(v.clone()),
            Self::Approximate(v) => v
                .iter()
                .enumerate()
                .map(|(i, &d)| {
                    if d >= 1.0 && d.fract() == 0.0 && d <= f64::from(u32::MAX) {
                        Ok(d as u32)
                    } else {
                        Err(Error::InvalidArgument(format!(
                            "depth {d} at position {i} is not a positive integer"
                        )))
                    }
                })
                .collect(),
        }
    }

    /// One value per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        match self {
            Self::Exact(v) => v.iter().try_for_each(|d| writeln!(w, "{d}"))?,
            Self::Approximate(v) => v.iter().try_for_each(|d| writeln!(w, "{d}"))?,
        }
        w.flush()
    }

    /// Reads one value per line. The result is `Exact` when every entry is a
    /// positive integer.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                Error::Format(format!("line {}: cannot parse {line:?}", lineno + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("rank on line {}", lineno + 1)));
            }
            values.push(v);
        }
        let approx = Self::Approximate(values);
        Ok(match approx.integer_depths() {
            Ok(d) => Self::Exact(d),
            Err(_) => approx,
        })
    }
}

impl From<Vec<f64>> for DepthVector {
    fn from(v: Vec<f64>) -> Self {
        Self::Approximate(v)
    }
}

impl From<Vec<u32>> for DepthVector {
    fn from(v: Vec<u32>) -> Self {
        Self::Exact(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortMethod {
    /// `Fast2d` for planar clouds, `BruteForce` otherwise.
    #[default]
    Auto,
    BruteForce,
    Fast2d,
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn lex_order(cloud: &PointCloud) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(cloud.point(a), cloud.point(b)));
    order
}

/// Longest-chain depths by direct dynamic programming, `O(n^2 d)`.
///
/// In lexicographic order every strict predecessor of a point comes before
/// it, so one pass suffices.
pub fn longest_chain_depths(cloud: &PointCloud) -> DepthVector {
    let order = lex_order(cloud);
    let mut depths = vec![0u32; cloud.len()];
    for (a, &i) in order.iter().enumerate() {
        let p = cloud.point(i);
        let best = order[..a]
            .iter()
            .filter(|&&j| {
                let q = cloud.point(j);
                leq(q, p) && q != p
            })
            .map(|&j| depths[j])
            .max()
            .unwrap_or(0);
        depths[i] = best + 1;
    }
    DepthVector::Exact(depths)
}

/// `O(n log n)` non-dominated sorting in the plane.
///
/// Points are swept in lexicographic order while `envelope[k]` records the
/// smallest second coordinate seen so far at depth `k + 1`. The envelope is
/// nondecreasing, so a point's depth is one more than the number of levels
/// whose recorded minimum does not exceed its second coordinate.
pub fn nondominated_sort_2d(cloud: &PointCloud) -> Result<DepthVector> {
    if cloud.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: cloud.dim(),
            reason: "the sweep sorter only handles planar clouds",
        });
    }
    let order = lex_order(cloud);
    let mut depths = vec![0u32; cloud.len()];
    let mut envelope: Vec<f64> = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let p = cloud.point(order[start]);
        // Duplicates are resolved together so none sees the others.
        let mut end = start + 1;
        while end < order.len() && cloud.point(order[end]) == p {
            end += 1;
        }
        let level = envelope.partition_point(|&m| m <= p[1]);
        if level == envelope.len() {
            envelope.push(p[1]);
        } else {
            envelope[level] = p[1];
        }
        for &i in &order[start..end] {
            depths[i] = level as u32 + 1;
        }
        start = end;
    }
    Ok(DepthVector::Exact(depths))
}

pub fn sort_exact(cloud: &PointCloud, method: SortMethod) -> Result<DepthVector> {
    match method {
        SortMethod::BruteForce => Ok(longest_chain_depths(cloud)),
        SortMethod::Fast2d => nondominated_sort_2d(cloud),
        SortMethod::Auto if cloud.dim() == 2 => nondominated_sort_2d(cloud),
        SortMethod::Auto => Ok(longest_chain_depths(cloud)),
    }
}

/// Groups point indices (0-based) by depth; group `k` holds depth `k + 1`.
pub fn pareto_fronts(depths: &DepthVector) -> Result<Vec<Vec<usize>>> {
    let depths = depths.integer_depths()?;
    let count = depths.iter().copied().max().unwrap_or(0) as usize;
    let mut fronts = vec![Vec::new(); count];
    for (i, &d) in depths.iter().enumerate() {
        fronts[d as usize - 1].push(i);
    }
    Ok(fronts)
}
