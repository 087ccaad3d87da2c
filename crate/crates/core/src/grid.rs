//! Uniform grids, complex samples on them, and the discrete Sobolev norms.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier;

/// Uniform grid `origin + i * spacing`, `i = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    origin: f64,
    spacing: f64,
    count: usize,
}

impl Grid1D {
    pub fn new(origin: f64, spacing: f64, count: usize) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing must be > 0, got {spacing}")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid(format!("origin must be finite, got {origin}")));
        }
        if count < 2 {
            return Err(Error::InvalidGrid(format!("count must be >= 2, got {count}")));
        }
        Ok(Grid1D { origin, spacing, count })
    }

    /// `count` nodes spanning `[min, max]` with both endpoints included.
    pub fn from_range(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 || !(max > min) {
            return Err(Error::InvalidGrid(format!(
                "need max > min and count >= 2, got [{min}, {max}] with {count}"
            )));
        }
        Grid1D::new(min, (max - min) / (count - 1) as f64, count)
    }

    /// `count` nodes on the half-open period `[min, max)`.
    pub fn periodic(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 || !(max > min) {
            return Err(Error::InvalidGrid(format!(
                "need max > min and count >= 2, got [{min}, {max}) with {count}"
            )));
        }
        Grid1D::new(min, (max - min) / count as f64, count)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Node `i`, computed from the index so repeated calls are bit-identical.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn last(&self) -> f64 {
        self.node(self.count - 1)
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.node(i))
    }

    /// Index of the node nearest to `x`, if `x` lies within half a cell of the grid.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let s = (x - self.origin) / self.spacing;
        let i = s.round();
        if i < 0.0 || i > (self.count - 1) as f64 {
            None
        } else {
            Some(i as usize)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.origin && x <= self.last()
    }
}

/// Complex samples on a [`Grid1D`]; entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::InvalidField(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidField(format!(
                "non-finite value at node {i} (x = {})",
                grid.node(i)
            )));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        ComplexField { grid, values: vec![Complex64::new(0.0, 0.0); grid.count()] }
    }

    pub fn from_fn(grid: Grid1D, f: impl FnMut(f64) -> Complex64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        ComplexField::new(grid, values)
    }

    pub fn from_real_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        ComplexField::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Nodewise map; the result is re-validated for finiteness.
    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Result<Self> {
        let values = self
            .grid
            .nodes()
            .zip(&self.values)
            .map(|(x, &v)| f(x, v))
            .collect();
        ComplexField::new(self.grid, values)
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        ComplexField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Trapezoid-rule L² norm.
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        trapezoid_real(&sq, self.grid.spacing()).sqrt()
    }

    /// Larger of the two end-node magnitudes.
    pub fn edge_magnitude(&self) -> f64 {
        self.values[0].norm().max(self.values[self.values.len() - 1].norm())
    }

    /// Trapezoid rule over the whole grid.
    pub fn integrate(&self) -> Complex64 {
        trapezoid(&self.values, self.grid.spacing())
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(ComplexField { grid: self.grid, values })
    }

    pub fn check_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidField(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Writes `index,x,re,im` with a header row.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["index", "x", "re", "im"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record(&[
                i.to_string(),
                self.grid.node(i).to_string(),
                v.re.to_string(),
                v.im.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `index,x,re,im` format; the grid is recovered from the x column.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        let expected = ["index", "x", "re", "im"];
        if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h.trim() != e) {
            return Err(Error::Parse(format!("expected header index,x,re,im, got {headers:?}")));
        }
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec[k]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {row}, column {k}: {e}")))
            };
            let idx: usize = rec[0]
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("row {row}, index: {e}")))?;
            if idx != row {
                return Err(Error::Parse(format!("row {row} carries index {idx}")));
            }
            xs.push(parse(1)?);
            values.push(Complex64::new(parse(2)?, parse(3)?));
        }
        if xs.len() < 2 {
            return Err(Error::Parse("field file needs at least two rows".into()));
        }
        let spacing = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        let grid = Grid1D::new(xs[0], spacing, xs.len())?;
        let tol = 1e-9 * spacing.max(xs[0].abs().max(grid.last().abs()) * 1e-3);
        for (i, &x) in xs.iter().enumerate() {
            if (x - grid.node(i)).abs() > tol.max(1e-12) {
                return Err(Error::Parse(format!("non-uniform x column at row {i}")));
            }
        }
        ComplexField::new(grid, values)
    }

    /// Little-endian binary: origin, spacing, count (u64), then interleaved re/im.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&self.to_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        let mut buf = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut buf)?;
        ComplexField::from_bytes(&buf)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 16 * self.values.len());
        out.extend_from_slice(&self.grid.origin().to_le_bytes());
        out.extend_from_slice(&self.grid.spacing().to_le_bytes());
        out.extend_from_slice(&(self.grid.count() as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 24 {
            return Err(Error::Parse("binary field shorter than its 24-byte header".into()));
        }
        let f = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().unwrap());
        let count = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
        if bytes.len() != 24 + 16 * count {
            return Err(Error::Parse(format!(
                "binary field of {} bytes does not hold {count} complex values",
                bytes.len()
            )));
        }
        let grid = Grid1D::new(f(0), f(8), count)?;
        let values = (0..count)
            .map(|i| Complex64::new(f(24 + 16 * i), f(32 + 16 * i)))
            .collect();
        ComplexField::new(grid, values)
    }
}

/// Discrete H^{1,1} norm and its three components.
///
/// `h11 = sqrt(l2² + weighted_l2² + deriv_l2²)`, an equivalent norm to
/// `(‖(1+|x|)f‖² + ‖f'‖²)^{1/2}`: the two squared norms differ by at most a factor 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevNorms {
    pub l2: f64,
    pub weighted_l2: f64,
    pub deriv_l2: f64,
    pub h11: f64,
}

/// Trapezoid norms of `f`, `x f` and the spectral derivative `f'`.
pub fn h_norms(f: &ComplexField) -> Result<SobolevNorms> {
    let grid = f.grid();
    let h = grid.spacing();
    let vals = f.values();
    if vals.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::InvalidField("non-finite input to h_norms".into()));
    }
    let sq: Vec<f64> = vals.iter().map(|v| v.norm_sqr()).collect();
    let wsq: Vec<f64> = grid.nodes().zip(vals).map(|(x, v)| (x * v).norm_sqr()).collect();
    let deriv = fourier::spectral_derivative(vals, h);
    let dsq: Vec<f64> = deriv.iter().map(|v| v.norm_sqr()).collect();
    let l2 = trapezoid_real(&sq, h).sqrt();
    let weighted_l2 = trapezoid_real(&wsq, h).sqrt();
    let deriv_l2 = trapezoid_real(&dsq, h).sqrt();
    Ok(SobolevNorms {
        l2,
        weighted_l2,
        deriv_l2,
        h11: (l2 * l2 + weighted_l2 * weighted_l2 + deriv_l2 * deriv_l2).sqrt(),
    })
}

pub fn trapezoid(values: &[Complex64], h: f64) -> Complex64 {
    let n = values.len();
    if n < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let inner: Complex64 = values[1..n - 1].iter().sum();
    (inner + 0.5 * (values[0] + values[n - 1])) * h
}

pub fn trapezoid_real(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..n - 1].iter().sum();
    (inner + 0.5 * (values[0] + values[n - 1])) * h
}
