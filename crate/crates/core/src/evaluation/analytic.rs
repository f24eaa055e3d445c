//! Densities with closed-form solutions, used as oracles for the scheme and
//! for the stochastic limit.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Error function, accurate to a few ulps.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticCase {
    /// `f = 1`, `U = d (x_1 ··· x_d)^{1/d}`.
    F1Uniform,
    /// `f = 2^d π^{-d/2} e^{-|x|^2}`, `U = d (∏ erf x_i)^{1/d}`.
    F2Gaussian,
    /// `f = 1` outside `[0, 1/2]^d`, zero inside.
    F3Punctured,
    /// Solution with non-convex level sets, `U = d (∏ x_i · Σ x_i^9)^{1/d}`.
    F4Nonconvex,
}

impl AnalyticCase {
    pub const ALL: [Self; 4] = [
        Self::F1Uniform,
        Self::F2Gaussian,
        Self::F3Punctured,
        Self::F4Nonconvex,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::F1Uniform => "f1",
            Self::F2Gaussian => "f2",
            Self::F3Punctured => "f3",
            Self::F4Nonconvex => "f4",
        }
    }

    /// Accepts the short ids (`f1`..`f4`) and the snake-case names.
    pub fn from_id(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.id() == s || c.name() == s)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::F1Uniform => "f1_uniform",
            Self::F2Gaussian => "f2_gaussian",
            Self::F3Punctured => "f3_punctured",
            Self::F4Nonconvex => "f4_nonconvex",
        }
    }

    /// Whether the exact solution is concave on the positive orthant.
    pub fn has_concave_solution(self) -> bool {
        matches!(self, Self::F1Uniform | Self::F2Gaussian)
    }

    pub fn density(self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        match self {
            Self::F1Uniform => 1.0,
            Self::F2Gaussian => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                2f64.powf(d) / std::f64::consts::PI.powf(d / 2.0) * (-r2).exp()
            }
            Self::F3Punctured => {
                if x.iter().all(|&v| (0.0..=0.5).contains(&v)) {
                    0.0
                } else {
                    1.0
                }
            }
            Self::F4Nonconvex => {
                let s: f64 = x.iter().map(|v| v.powi(9)).sum();
                if s <= 0.0 {
                    return 0.0;
                }
                s.powf(1.0 - d) * x.iter().map(|v| 9.0 * v.powi(9) + s).product::<f64>()
            }
        }
    }

    pub fn solution(self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        let root = |v: f64| d * v.max(0.0).powf(1.0 / d);
        match self {
            Self::F1Uniform => root(x.iter().product()),
            Self::F2Gaussian => root(x.iter().map(|&v| erf(v)).product()),
            Self::F3Punctured => {
                let best = (0..x.len())
                    .map(|i| {
                        let others: f64 = (0..x.len()).filter(|&j| j != i).map(|j| x[j]).product();
                        (x[i] - 0.5).max(0.0) * others
                    })
                    .fold(0.0, f64::max);
                root(best)
            }
            Self::F4Nonconvex => {
                let s: f64 = x.iter().map(|v| v.powi(9)).sum();
                root(x.iter().product::<f64>() * s)
            }
        }
    }

    pub fn eval(self, x: &[f64]) -> (f64, f64) {
        (self.density(x), self.solution(x))
    }

    /// Sampler for the normalized density, restricted to `[0,1]^d` except for
    /// the Gaussian case, which is sampled on the whole orthant.
    pub fn sampler(self, dim: usize) -> Result<CaseSampler> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        let (mass, bound) = match self {
            Self::F1Uniform | Self::F2Gaussian => (1.0, 1.0),
            Self::F3Punctured => (1.0 - 0.5f64.powi(dim as i32), 1.0),
            Self::F4Nonconvex => {
                if dim > 3 {
                    return Err(Error::UnsupportedDimension {
                        dim,
                        reason: "f4 sampling needs its mass by quadrature, done for d <= 3",
                    });
                }
                let d = dim as f64;
                (
                    unit_cube_mass(self, dim),
                    d.powf(1.0 - d) * (9.0 + d).powf(d),
                )
            }
        };
        Ok(CaseSampler {
            case: self,
            dim,
            mass,
            bound,
        })
    }
}

/// Tensor midpoint rule for `∫_{[0,1]^d} f`.
fn unit_cube_mass(case: AnalyticCase, dim: usize) -> f64 {
    let m: usize = match dim {
        1 => 100_000,
        2 => 2_000,
        _ => 160,
    };
    let mut index = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut total = 0.0;
    'outer: loop {
        for (xi, &j) in x.iter_mut().zip(&index) {
            *xi = (j as f64 + 0.5) / m as f64;
        }
        total += case.density(&x);
        for axis in (0..dim).rev() {
            index[axis] += 1;
            if index[axis] < m {
                continue 'outer;
            }
            index[axis] = 0;
        }
        break;
    }
    total / (m as f64).powi(dim as i32)
}

/// Draws i.i.d. points from a case density normalized to a probability
/// density.
#[derive(Debug, Clone)]
pub struct CaseSampler {
    case: AnalyticCase,
    dim: usize,
    mass: f64,
    bound: f64,
}

impl CaseSampler {
    pub fn case(&self) -> AnalyticCase {
        self.case
    }

    /// Integral of the unnormalized density over the sampled region.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Upper bound on the density used for rejection.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `n` samples from `f / mass` behave like a Poisson cloud of intensity
    /// `(n / mass) f`; this is that intensity scale.
    pub fn intensity(&self, n: usize) -> f64 {
        n as f64 / self.mass
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self.case {
            AnalyticCase::F1Uniform => (0..self.dim).map(|_| rng.random::<f64>()).collect(),
            AnalyticCase::F2Gaussian => {
                // Each factor (2/√π) e^{-t^2} on t > 0 is a half-normal with
                // variance 1/2.
                let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid sd");
                (0..self.dim).map(|_| normal.sample(rng).abs()).collect()
            }
            AnalyticCase::F3Punctured | AnalyticCase::F4Nonconvex => loop {
                let x: Vec<f64> = (0..self.dim).map(|_| rng.random::<f64>()).collect();
                if rng.random::<f64>() * self.bound < self.case.density(&x) {
                    return x;
                }
            },
        }
    }
}
