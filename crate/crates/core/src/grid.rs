//! Uniform lattices over a box and scalar fields stored on their nodes.
//!
//! Nodes sit at `lo + h * j` for multi-indices `0 <= j_i < shape_i`. Values are
//! stored row-major (last axis fastest), so ascending flat order is the
//! lexicographic order on multi-indices and respects the componentwise
//! partial order.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Relative slack used when snapping a coordinate onto a lattice line.
pub(crate) const SNAP: f64 = 1e-9;

const MAGIC: &[u8; 4] = b"PDGF";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    h: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
}

/// Snaps `s` to the nearest integer when it is within rounding distance of it.
pub(crate) fn snap(s: f64) -> f64 {
    let r = s.round();
    if (s - r).abs() <= SNAP * r.abs().max(1.0) {
        r
    } else {
        s
    }
}

impl GridSpec {
    /// Lattice with spacing `h` covering the box `[lo, hi]`. Each axis gets
    /// `floor((hi_i - lo_i) / h) + 1` nodes.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, h: f64) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {h}"
            )));
        }
        let mut shape = Vec::with_capacity(lo.len());
        for (axis, (&l, &u)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && u.is_finite()) {
                return Err(Error::NonFinite(format!("domain bounds on axis {axis}")));
            }
            if l >= u {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: lower bound {l} is not below upper bound {u}"
                )));
            }
            let cells = snap((u - l) / h).floor();
            let n = cells as usize + 1;
            if n < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} has {n} nodes, need at least 3"
                )));
            }
            shape.push(n);
        }
        let mut strides = vec![1; shape.len()];
        for i in (0..shape.len() - 1).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        Ok(Self {
            h,
            lo,
            hi,
            shape,
            strides,
        })
    }

    /// Hypercube `[lo, lo + side]` split into `cells` cells per axis.
    pub fn hypercube(lo: Vec<f64>, side: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidGrid("need at least one cell per axis".into()));
        }
        let hi = lo.iter().map(|l| l + side).collect();
        Self::new(lo, hi, side / cells as f64)
    }

    /// `[lo, hi]^dim` split into `cells` cells per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, cells: usize) -> Result<Self> {
        Self::hypercube(vec![lo; dim], hi - lo, cells)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.strides).map(|(j, s)| j * s).sum()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|&s| {
                let j = flat / s;
                flat %= s;
                j
            })
            .collect()
    }

    pub fn node(&self, index: &[usize]) -> Vec<f64> {
        index
            .iter()
            .zip(&self.lo)
            .map(|(&j, &l)| l + self.h * j as f64)
            .collect()
    }

    pub(crate) fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            })
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && (0..self.dim()).all(|axis| self.axis_floor(axis, x[axis]).is_ok())
    }

    /// Scaled coordinate `(x - lo) / h` on one axis, snapped to the lattice,
    /// or an error if `x` is outside `[lo, hi]`.
    pub(crate) fn axis_coordinate(&self, axis: usize, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("coordinate on axis {axis}")));
        }
        let s = snap((x - self.lo[axis]) / self.h);
        let span = (self.hi[axis] - self.lo[axis]) / self.h;
        if s < 0.0 || s > span + SNAP * span.max(1.0) {
            return Err(Error::OutsideDomain {
                axis,
                value: x,
                lo: self.lo[axis],
                hi: self.hi[axis],
            });
        }
        Ok(s)
    }

    fn axis_floor(&self, axis: usize, x: f64) -> Result<usize> {
        let s = self.axis_coordinate(axis, x)?;
        Ok((s.floor() as usize).min(self.shape[axis] - 1))
    }

    /// Multi-index of the lattice node `⌊x⌋_h`, clamped to the last node on
    /// the top faces.
    pub fn floor_to_grid(&self, x: &[f64]) -> Result<Vec<usize>> {
        self.check_dim(x.len())?;
        x.iter()
            .enumerate()
            .map(|(axis, &xi)| self.axis_floor(axis, xi))
            .collect()
    }
}

/// Advances `index` to the next multi-index in row-major order. Returns
/// `false` once the lattice is exhausted.
pub(crate) fn increment(index: &mut [usize], shape: &[usize]) -> bool {
    for axis in (0..index.len()).rev() {
        index[axis] += 1;
        if index[axis] < shape[axis] {
            return true;
        }
        index[axis] = 0;
    }
    false
}

/// Scalar values on every node of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values for {} nodes",
                values.len(),
                spec.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "field value at node {:?}",
                spec.multi_index(i)
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        let values = vec![0.0; spec.len()];
        Self { spec, values }
    }

    /// Samples `f` at every node.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(spec.len());
        let mut index = vec![0; spec.dim()];
        let mut x = spec.lo.clone();
        loop {
            for (axis, xi) in x.iter_mut().enumerate() {
                *xi = spec.lo[axis] + spec.h * index[axis] as f64;
            }
            values.push(f(&x));
            if !increment(&mut index, &spec.shape) {
                break;
            }
        }
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.spec.flat_index(index)]
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when every node is at least as large as each of its backward
    /// neighbours, i.e. the field is nondecreasing in the partial order.
    #[allow(clippy::needless_range_loop)]
    pub fn is_pareto_monotone(&self) -> bool {
        let spec = &self.spec;
        let mut index = vec![0; spec.dim()];
        let mut flat = 0;
        loop {
            for axis in 0..spec.dim() {
                if index[axis] > 0 && self.values[flat] < self.values[flat - spec.strides[axis]] {
                    return false;
                }
            }
            flat += 1;
            if !increment(&mut index, &spec.shape) {
                return true;
            }
        }
    }

    /// Binary container: `PDGF`, version, d, shape, h, lo, hi, then the
    /// values row-major. Everything little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let spec = &self.spec;
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(spec.dim() as u32).to_le_bytes())?;
        for &n in &spec.shape {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        w.write_all(&spec.h.to_le_bytes())?;
        for v in spec.lo.iter().chain(&spec.hi) {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a PDGF grid file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported PDGF version {version}")));
        }
        let dim = read_u32(&mut r)? as usize;
        if dim == 0 || dim > 16 {
            return Err(Error::Format(format!("implausible dimension {dim}")));
        }
        let mut shape = Vec::with_capacity(dim);
        for _ in 0..dim {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            shape.push(u64::from_le_bytes(b) as usize);
        }
        let h = read_f64(&mut r)?;
        let lo = (0..dim)
            .map(|_| read_f64(&mut r))
            .collect::<Result<Vec<_>>>()?;
        let hi = (0..dim)
            .map(|_| read_f64(&mut r))
            .collect::<Result<Vec<_>>>()?;
        let spec = GridSpec::new(lo, hi, h)?;
        if spec.shape != shape {
            return Err(Error::Format(format!(
                "stored shape {shape:?} disagrees with h/lo/hi (expected {:?})",
                spec.shape
            )));
        }
        let mut values = Vec::with_capacity(spec.len());
        for _ in 0..spec.len() {
            values.push(read_f64(&mut r)?);
        }
        Self::new(spec, values)
    }

    /// One line per node: coordinates, then the value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut index = vec![0; self.spec.dim()];
        let mut flat = 0;
        loop {
            for x in self.spec.node(&index) {
                write!(w, "{x},")?;
            }
            writeln!(w, "{}", self.values[flat])?;
            flat += 1;
            if !increment(&mut index, &self.spec.shape) {
                break;
            }
        }
        w.flush()
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
