//! Uniform 1D grids, discrete calculus, quadrature, and Sobolev norms.
//!
//! Every field quantity in the toolkit (profiles, perturbations, residuals,
//! potentials) is a [`GridFunction`]: real samples on a uniform truncation of
//! the line. Integrals use the composite Simpson rule (4th order; the grid
//! constructor rounds the node count up to the next odd integer so the rule
//! always applies), derivatives use 4th-order central stencils with one-sided
//! closures on the two boundary bands.
//!
//! Grids of different extents are never mixed implicitly: binary operations
//! on mismatched grids return [`Error::GridMismatch`] instead of resampling.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Simpson quadrature needs at least three nodes.
pub const MIN_NODES: usize = 3;
/// First derivatives use 5-point one-sided stencils at the ends.
pub const MIN_NODES_DERIVATIVE: usize = 5;
/// Second derivatives use 6-point one-sided stencils at the ends.
pub const MIN_NODES_SECOND_DERIVATIVE: usize = 6;

/// Uniform grid on `[x_min, x_max]` with an odd number of nodes.
///
/// Node `i` sits at `x_min + i * spacing()` exactly; positions are computed
/// directly from the index, never by accumulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid {
    /// Build a grid with at least `n` nodes. An even `n` is rounded up to the
    /// next odd integer so composite Simpson weights always apply.
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() || x_min >= x_max {
            return Err(Error::GridBounds { x_min, x_max });
        }
        if n < MIN_NODES {
            return Err(Error::GridTooSmall { n, min: MIN_NODES });
        }
        let n = if n % 2 == 0 { n + 1 } else { n };
        Ok(Self { x_min, x_max, n })
    }

    /// Build the coarsest grid whose spacing does not exceed `h_max`.
    pub fn with_max_spacing(x_min: f64, x_max: f64, h_max: f64) -> Result<Self> {
        if !(h_max > 0.0) || !h_max.is_finite() {
            return Err(Error::InvalidParameter {
                name: "h_max",
                detail: format!("must be positive and finite, got {h_max}"),
            });
        }
        if !x_min.is_finite() || !x_max.is_finite() || x_min >= x_max {
            return Err(Error::GridBounds { x_min, x_max });
        }
        let intervals = ((x_max - x_min) / h_max).ceil() as usize;
        Self::new(x_min, x_max, intervals.max(2) + 1)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Number of nodes (always odd).
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        self.x_min + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }
}

/// Real-valued samples on a [`Grid`]. All values are finite; constructors and
/// arithmetic reject NaN/Inf.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                len: values.len(),
                n: grid.len(),
            });
        }
        let f = Self { grid, values };
        f.check_finite("GridFunction::new")?;
        Ok(f)
    }

    /// Internal constructor for values that are finite by construction
    /// (bounded closed-form samples, sums of finite inputs).
    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { grid, values }
    }

    pub fn sample<F: FnMut(f64) -> f64>(grid: Grid, mut f: F) -> Result<Self> {
        let values: Vec<f64> = grid.nodes().map(&mut f).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_values_unchecked(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_finite(&self, context: &'static str) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(context));
        }
        Ok(())
    }

    /// Pointwise map. The result is validated: a closure producing NaN/Inf is
    /// an error, not a silent poison.
    pub fn map<F: FnMut(f64) -> f64>(&self, mut f: F) -> Result<Self> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        Self::new(self.grid, values)
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with<F: FnMut(f64, f64) -> f64>(&self, other: &Self, mut f: F) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, values)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    /// Composite Simpson approximation of the integral over the grid window.
    /// 4th-order accurate for smooth integrands; terms are accumulated
    /// pairwise so summation rounding stays at the `eps * log n` level.
    pub fn quadrature(&self) -> f64 {
        let n = self.len();
        let h = self.grid.spacing();
        let v = &self.values;
        let weighted = pairwise_by(0, n, |i| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * v[i]
        });
        weighted * h / 3.0
    }

    /// Discrete L2 norm, `sqrt(quadrature(f^2))`.
    pub fn norm_l2(&self) -> f64 {
        let n = self.len();
        let h = self.grid.spacing();
        let v = &self.values;
        let weighted = pairwise_by(0, n, |i| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * v[i] * v[i]
        });
        (weighted * h / 3.0).max(0.0).sqrt()
    }

    /// Discrete H1 norm, `sqrt(|f|_L2^2 + |f'|_L2^2)` with the 4th-order
    /// derivative below. Always at least `norm_l2`.
    pub fn norm_h1(&self) -> Result<f64> {
        let d = self.derivative()?;
        let a = self.norm_l2();
        let b = d.norm_l2();
        Ok((a * a + b * b).sqrt())
    }

    /// First derivative: 4th-order central differences in the interior,
    /// one-sided 4th-order stencils on the two boundary bands.
    pub fn derivative(&self) -> Result<Self> {
        let n = self.len();
        if n < MIN_NODES_DERIVATIVE {
            return Err(Error::GridTooSmall {
                n,
                min: MIN_NODES_DERIVATIVE,
            });
        }
        let v = &self.values;
        let inv = 1.0 / (12.0 * self.grid.spacing());
        let mut out = vec![0.0; n];
        out[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) * inv;
        out[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) * inv;
        for i in 2..n - 2 {
            out[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) * inv;
        }
        out[n - 2] =
            (3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] - v[n - 5]) * inv;
        out[n - 1] = (25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4]
            + 3.0 * v[n - 5])
            * inv;
        Self::new(self.grid, out)
    }

    /// Second derivative: 4th-order central stencil in the interior,
    /// one-sided 4th-order 6-point stencils on the boundary bands.
    pub fn second_derivative(&self) -> Result<Self> {
        let n = self.len();
        if n < MIN_NODES_SECOND_DERIVATIVE {
            return Err(Error::GridTooSmall {
                n,
                min: MIN_NODES_SECOND_DERIVATIVE,
            });
        }
        let v = &self.values;
        let h = self.grid.spacing();
        let inv = 1.0 / (12.0 * h * h);
        let mut out = vec![0.0; n];
        out[0] = (45.0 * v[0] - 154.0 * v[1] + 214.0 * v[2] - 156.0 * v[3] + 61.0 * v[4]
            - 10.0 * v[5])
            * inv;
        out[1] =
            (10.0 * v[0] - 15.0 * v[1] - 4.0 * v[2] + 14.0 * v[3] - 6.0 * v[4] + v[5]) * inv;
        for i in 2..n - 2 {
            out[i] =
                (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) * inv;
        }
        out[n - 2] = (10.0 * v[n - 1] - 15.0 * v[n - 2] - 4.0 * v[n - 3] + 14.0 * v[n - 4]
            - 6.0 * v[n - 5]
            + v[n - 6])
            * inv;
        out[n - 1] = (45.0 * v[n - 1] - 154.0 * v[n - 2] + 214.0 * v[n - 3] - 156.0 * v[n - 4]
            + 61.0 * v[n - 5]
            - 10.0 * v[n - 6])
            * inv;
        Self::new(self.grid, out)
    }

    /// Two-column CSV: header `x,value`, `.` decimal separator, LF endings.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "x,value")?;
        for (x, v) in self.grid.nodes().zip(&self.values) {
            writeln!(w, "{x},{v}")?;
        }
        Ok(())
    }

    /// Parse the two-column CSV produced by [`write_csv`](Self::write_csv).
    /// The x column must be uniformly spaced.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if k == 0 && line.starts_with('x') {
                continue;
            }
            let mut parts = line.split(',');
            let (Some(xs_str), Some(vs_str)) = (parts.next(), parts.next()) else {
                return Err(Error::CsvParse(format!("line {}: expected two columns", k + 1)));
            };
            let x: f64 = xs_str
                .trim()
                .parse()
                .map_err(|e| Error::CsvParse(format!("line {}: {e}", k + 1)))?;
            let v: f64 = vs_str
                .trim()
                .parse()
                .map_err(|e| Error::CsvParse(format!("line {}: {e}", k + 1)))?;
            xs.push(x);
            vs.push(v);
        }
        if xs.len() < MIN_NODES {
            return Err(Error::GridTooSmall {
                n: xs.len(),
                min: MIN_NODES,
            });
        }
        let grid = Grid::new(xs[0], xs[xs.len() - 1], xs.len())?;
        if grid.len() != xs.len() {
            return Err(Error::CsvParse(
                "node count must be odd to reconstruct a Simpson grid".into(),
            ));
        }
        let h = grid.spacing();
        for (i, &x) in xs.iter().enumerate() {
            if (x - grid.node(i)).abs() > 1e-9 * h.max(1.0) {
                return Err(Error::CsvParse(format!(
                    "x column is not uniformly spaced near row {i}"
                )));
            }
        }
        Self::new(grid, vs)
    }
}

/// Pairwise (cascade) summation of `f(i)` for `i` in `lo..hi`.
pub(crate) fn pairwise_by<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: F) -> f64 {
    fn inner<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        let len = hi - lo;
        if len <= 64 {
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            s
        } else {
            let mid = lo + len / 2;
            inner(lo, mid, f) + inner(mid, hi, f)
        }
    }
    inner(lo, hi, &f)
}

/// Plain scaled dot product `h * sum_i u_i v_i`; the inner product used by
/// the operator module, where it keeps banded matrices exactly self-adjoint.
pub(crate) fn dot_scaled(h: f64, u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    h * pairwise_by(0, u.len(), |i| u[i] * v[i])
}
