//! Discretization of the two-kink linearized operator `L = -d2 + 2 + V`,
//! constrained solves against the translated kink derivatives, spectral
//! diagnostics, and the empirical coercivity constant.
//!
//! The matrix is the 4th-order second-difference stencil plus the sampled
//! potential, closed with homogeneous Dirichlet ends (out-of-window stencil
//! legs dropped); every relevant mode decays exponentially and the default
//! window pads by 25, so the closure is inert. Inner products here are the
//! plain scaled dot `h * u.v`, under which the assembled matrix is exactly
//! self-adjoint.
//!
//! Constrained solves use the bordered (saddle-point) form
//!
//! ```text
//! [ A  C ] [g     ]   [phi]
//! [ C' 0 ] [lambda] = [ 0 ]
//! ```
//!
//! factored by block elimination through the banded LU, then polished by
//! iterative refinement on the full bordered residual; the refinement is
//! what keeps `g` accurate when `A` itself is nearly singular along the
//! translational modes. Eigenvalues are located by Sylvester inertia
//! bisection (the bordered matrix's negative-pivot count exceeds the
//! constrained count below the shift by exactly the number of constraints)
//! and inverse iteration inside the final bracket, with a Rayleigh-quotient
//! value at the end.

mod banded;

pub use banded::BandMatrix;

use crate::error::{Error, Result};
use crate::grid::{dot_scaled, Grid, GridFunction};
use crate::model::{self, KinkPair};

/// Minimum padding between the kink transitions and the window ends.
pub const MIN_WINDOW_PAD: f64 = 10.0;

/// Discretized `L = -d2 + 2 + V` plus the two translated kink derivatives
/// as constraint vectors.
#[derive(Debug)]
pub struct ConstrainedOperator {
    grid: Grid,
    pair: KinkPair,
    matrix: BandMatrix,
    /// `2 + V` at the nodes.
    diag_potential: GridFunction,
    constraints: Vec<GridFunction>,
}

impl ConstrainedOperator {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn pair(&self) -> KinkPair {
        self.pair
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    pub fn diag_potential(&self) -> &GridFunction {
        &self.diag_potential
    }

    pub fn constraints(&self) -> &[GridFunction] {
        &self.constraints
    }

    pub fn stencil_order(&self) -> usize {
        4
    }

    /// `L f` through the assembled matrix.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = vec![0.0; f.len()];
        self.matrix.apply(f.values(), &mut out);
        GridFunction::new(self.grid, out)
    }

    /// Normalized overlap of the two constraints; exponentially small in the
    /// separation.
    pub fn constraint_coherence(&self) -> f64 {
        let h = self.grid.spacing();
        let c1 = self.constraints[0].values();
        let c2 = self.constraints[1].values();
        let ip = dot_scaled(h, c1, c2);
        let n1 = dot_scaled(h, c1, c1).sqrt();
        let n2 = dot_scaled(h, c2, c2).sqrt();
        ip.abs() / (n1 * n2)
    }
}

/// Assemble the operator for a pair on a grid that covers both transitions
/// with at least [`MIN_WINDOW_PAD`] of padding.
pub fn assemble(pair: &KinkPair, grid: Grid) -> Result<ConstrainedOperator> {
    let need_min = pair.left_center() - MIN_WINDOW_PAD;
    let need_max = pair.right_center() + MIN_WINDOW_PAD;
    if grid.x_min() > need_min || grid.x_max() < need_max {
        return Err(Error::WindowTooSmall {
            x_min: grid.x_min(),
            x_max: grid.x_max(),
            need_min,
            need_max,
        });
    }
    let n = grid.len();
    let h = grid.spacing();
    let v = model::potential_v(pair, grid);
    let diag_potential = v.map(|x| 2.0 + x)?;

    let inv = 1.0 / (12.0 * h * h);
    // -d2 stencil: [1, -16, 30, -16, 1] / (12 h^2), Dirichlet drop at ends
    let coef = [1.0 * inv, -16.0 * inv, 30.0 * inv, -16.0 * inv, 1.0 * inv];
    let mut matrix = BandMatrix::zeros(n);
    for i in 0..n {
        for (k, &c) in coef.iter().enumerate() {
            let j = i as isize + k as isize - 2;
            if (0..n as isize).contains(&j) {
                matrix.add(i, j as usize, c);
            }
        }
        matrix.add(i, i, diag_potential.values()[i]);
    }

    let constraints = vec![pair.sample_h1_prime(grid), pair.sample_h2_prime(grid)];
    Ok(ConstrainedOperator {
        grid,
        pair: *pair,
        matrix,
        diag_potential,
        constraints,
    })
}

// ---------------------------------------------------------------------------
// bordered solves
// ---------------------------------------------------------------------------

/// Block-elimination solver for `[A - shift, C; C', 0]`.
struct KktSolver<'a> {
    matrix: &'a BandMatrix,
    shift: f64,
    lu: banded::BandLu,
    /// `(A - shift)^{-1} c_j`
    w: Vec<Vec<f64>>,
    /// Schur block `S = C' W` (row major m x m)
    schur: Vec<f64>,
    constraints: Vec<&'a [f64]>,
}

fn solve_small(m: usize, a: &[f64], b: &mut [f64]) -> Result<()> {
    // dense Gaussian elimination with partial pivoting, m <= 2 in practice
    let mut a = a.to_vec();
    let mut perm: Vec<usize> = (0..m).collect();
    for k in 0..m {
        let piv = (k..m)
            .max_by(|&i, &j| a[i * m + k].abs().total_cmp(&a[j * m + k].abs()))
            .expect("nonempty");
        if a[piv * m + k].abs() <= 1e-300 {
            return Err(Error::SingularSystem);
        }
        if piv != k {
            for j in 0..m {
                a.swap(k * m + j, piv * m + j);
            }
            b.swap(k, piv);
            perm.swap(k, piv);
        }
        for i in (k + 1)..m {
            let f = a[i * m + k] / a[k * m + k];
            for j in k..m {
                a[i * m + j] -= f * a[k * m + j];
            }
            b[i] -= f * b[k];
        }
    }
    for k in (0..m).rev() {
        let mut acc = b[k];
        for j in (k + 1)..m {
            acc -= a[k * m + j] * b[j];
        }
        b[k] = acc / a[k * m + k];
    }
    Ok(())
}

impl<'a> KktSolver<'a> {
    fn factor(matrix: &'a BandMatrix, shift: f64, constraints: Vec<&'a [f64]>) -> Result<Self> {
        let lu = matrix.lu_shifted(shift)?;
        let w: Vec<Vec<f64>> = constraints.iter().map(|c| lu.solve(c)).collect();
        let m = constraints.len();
        let mut schur = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                schur[i * m + j] = raw_dot(constraints[i], &w[j]);
            }
        }
        Ok(Self {
            matrix,
            shift,
            lu,
            w,
            schur,
            constraints,
        })
    }

    /// One pass of `A g + C lambda = phi`, `C' g = rhs_c`.
    fn solve_once(&self, phi: &[f64], rhs_c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.constraints.len();
        let y = self.lu.solve(phi);
        if m == 0 {
            return Ok((y, Vec::new()));
        }
        let mut lambda: Vec<f64> = (0..m)
            .map(|i| raw_dot(self.constraints[i], &y) - rhs_c[i])
            .collect();
        solve_small(m, &self.schur, &mut lambda)?;
        let mut g = y;
        for (j, w) in self.w.iter().enumerate() {
            let l = lambda[j];
            for (gi, wi) in g.iter_mut().zip(w) {
                *gi -= l * wi;
            }
        }
        Ok((g, lambda))
    }

    /// Bordered residual `(phi - (A - shift) g - C lambda, rhs_c - C' g)`.
    fn residual(
        &self,
        phi: &[f64],
        rhs_c: &[f64],
        g: &[f64],
        lambda: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let n = g.len();
        let mut ag = vec![0.0; n];
        self.matrix.apply(g, &mut ag);
        let mut r1 = vec![0.0; n];
        for i in 0..n {
            let mut ci = 0.0;
            for (j, c) in self.constraints.iter().enumerate() {
                ci += lambda[j] * c[i];
            }
            r1[i] = phi[i] - (ag[i] - self.shift * g[i]) - ci;
        }
        let r2: Vec<f64> = self
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| rhs_c[i] - raw_dot(c, g))
            .collect();
        (r1, r2)
    }

    /// Solve with iterative refinement on the bordered residual. Refinement
    /// restores full accuracy in `g` even when `A` is nearly singular along
    /// the constrained-away directions.
    fn solve_refined(&self, phi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.constraints.len();
        let rhs_c = vec![0.0; m];
        let (mut g, mut lambda) = self.solve_once(phi, &rhs_c)?;
        let phi_scale = phi.iter().fold(0.0f64, |a, &v| a.max(v.abs())) + 1e-300;
        for _ in 0..10 {
            let (r1, r2) = self.residual(phi, &rhs_c, &g, &lambda);
            let rmax = r1
                .iter()
                .chain(r2.iter())
                .fold(0.0f64, |a, &v| a.max(v.abs()));
            if rmax <= 1e-13 * phi_scale {
                break;
            }
            // corrections satisfy (A - shift) dg + C dl = r1, C' dg = r2
            let (dg, dl) = self.solve_once(&r1, &r2)?;
            for (gi, di) in g.iter_mut().zip(&dg) {
                *gi += di;
            }
            for (li, di) in lambda.iter_mut().zip(&dl) {
                *li += di;
            }
        }
        Ok((g, lambda))
    }
}

fn raw_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    crate::grid::pairwise_by(0, a.len(), |i| a[i] * b[i])
}

/// Result of a constrained solve: remainder, multipliers, and the residual
/// diagnostics demanded of every solve.
#[derive(Debug, Clone)]
pub struct ConstrainedSolve {
    pub g: GridFunction,
    pub multipliers: Vec<f64>,
    /// `|A g + C lambda - phi|_L2 / |phi|_L2` (scaled dot norm).
    pub relative_residual: f64,
    /// `max_i |<g, c_i>| / (|g| |c_i|)`.
    pub constraint_residual: f64,
}

/// Solve `L g + sum lambda_i c_i = phi` with `<g, c_i> = 0`; the multipliers
/// absorb the component of `phi` along the constraints.
pub fn solve_constrained(op: &ConstrainedOperator, phi: &GridFunction) -> Result<ConstrainedSolve> {
    if phi.grid() != op.grid {
        return Err(Error::GridMismatch);
    }
    let constraints: Vec<&[f64]> = op.constraints.iter().map(|c| c.values()).collect();
    let kkt = KktSolver::factor(&op.matrix, 0.0, constraints)?;
    let (g, lambda) = kkt.solve_refined(phi.values())?;
    let h = op.grid.spacing();

    let (r1, _) = kkt.residual(phi.values(), &[0.0; 2], &g, &lambda);
    let phi_norm = dot_scaled(h, phi.values(), phi.values()).sqrt();
    let rel_res = if phi_norm > 0.0 {
        dot_scaled(h, &r1, &r1).sqrt() / phi_norm
    } else {
        0.0
    };
    let g_norm = dot_scaled(h, &g, &g).sqrt();
    let mut c_res = 0.0f64;
    for c in &op.constraints {
        let cn = dot_scaled(h, c.values(), c.values()).sqrt();
        if g_norm > 0.0 && cn > 0.0 {
            c_res = c_res.max(dot_scaled(h, &g, c.values()).abs() / (g_norm * cn));
        }
    }
    Ok(ConstrainedSolve {
        g: GridFunction::new(op.grid, g)?,
        multipliers: lambda,
        relative_residual: rel_res,
        constraint_residual: c_res,
    })
}

// ---------------------------------------------------------------------------
// eigenvalues: inertia bisection + inverse iteration
// ---------------------------------------------------------------------------

/// Number of eigenvalues of the constrained operator below `shift`
/// (constraints may be empty). Retries with jittered shifts when the
/// unpivoted factorization breaks down on a near-zero pivot.
fn count_below(matrix: &BandMatrix, constraints: &[&[f64]], shift: f64) -> Result<usize> {
    let scale = matrix.max_abs() + shift.abs() + 1.0;
    for attempt in 0..8 {
        let s = shift + attempt as f64 * 4e-12 * scale;
        match try_count(matrix, constraints, s) {
            Some(c) => return Ok(c),
            None => continue,
        }
    }
    Err(Error::EigenNoConvergence(8))
}

fn try_count(matrix: &BandMatrix, constraints: &[&[f64]], shift: f64) -> Option<usize> {
    let neg_a = matrix.ldlt_negative_pivots(shift).ok()?;
    let m = constraints.len();
    if m == 0 {
        return Some(neg_a);
    }
    // Schur block of the bordered matrix: -C' (A - shift)^{-1} C.
    // Its negative-eigenvalue count plus neg_a minus m is the constrained
    // count below the shift (Sylvester inertia of the bordered form).
    let lu = matrix.lu_shifted(shift).ok()?;
    let w: Vec<Vec<f64>> = constraints.iter().map(|c| lu.solve(c)).collect();
    let neg_schur = match m {
        1 => {
            let s = raw_dot(constraints[0], &w[0]);
            if s.abs() <= 1e-300 {
                return None;
            }
            usize::from(-s < 0.0)
        }
        2 => {
            let s11 = raw_dot(constraints[0], &w[0]);
            let s12 = 0.5 * (raw_dot(constraints[0], &w[1]) + raw_dot(constraints[1], &w[0]));
            let s22 = raw_dot(constraints[1], &w[1]);
            let det = s11 * s22 - s12 * s12; // det(-S) = det(S) for 2x2
            let scale = s11 * s11 + 2.0 * s12 * s12 + s22 * s22;
            if det.abs() <= 1e-13 * scale {
                return None;
            }
            if det < 0.0 {
                1
            } else if -(s11 + s22) < 0.0 {
                0
            } else {
                2
            }
        }
        _ => unreachable!("at most two constraints"),
    };
    Some(neg_a + neg_schur - m)
}

/// Bracket the `index`-th (1-based) constrained eigenvalue by bisection.
fn bisect_eigenvalue(
    matrix: &BandMatrix,
    constraints: &[&[f64]],
    index: usize,
    mut lo: f64,
    mut hi: f64,
) -> Result<(f64, f64)> {
    debug_assert!(index >= 1);
    for _ in 0..120 {
        if hi - lo <= 1e-10 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if count_below(matrix, constraints, mid)? >= index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Inverse iteration with per-step projection off the constraints; returns
/// the Rayleigh value, the normalized eigenvector, and the projected
/// eigen-residual norm (plain l2, relative to the vector norm).
fn eigenpair(
    matrix: &BandMatrix,
    constraints: &[&[f64]],
    shift: f64,
    max_steps: usize,
) -> Result<(f64, Vec<f64>, f64)> {
    let n = matrix.n();
    let kkt = KktSolver::factor(matrix, shift, constraints.to_vec())?;
    // orthonormal basis of the constraint span for projections
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for c in constraints {
        let mut q = c.to_vec();
        for b in &basis {
            let ip = raw_dot(&q, b);
            for (qi, bi) in q.iter_mut().zip(b) {
                *qi -= ip * bi;
            }
        }
        let nrm = raw_dot(&q, &q).sqrt();
        if nrm > 1e-14 {
            for qi in q.iter_mut() {
                *qi /= nrm;
            }
            basis.push(q);
        }
    }
    let project = |v: &mut Vec<f64>| {
        for b in &basis {
            let ip = raw_dot(v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= ip * bi;
            }
        }
    };

    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * (0.7 * i as f64).sin()).collect();
    project(&mut v);
    normalize(&mut v);

    let rhs_c = vec![0.0; constraints.len()];
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for _ in 0..max_steps {
        let (mut next, _) = kkt.solve_once(&v, &rhs_c)?;
        project(&mut next);
        normalize(&mut next);
        v = next;

        let mut av = vec![0.0; n];
        matrix.apply(&v, &mut av);
        let mu = raw_dot(&v, &av) / raw_dot(&v, &v);
        let mut r: Vec<f64> = av.iter().zip(&v).map(|(&a, &x)| a - mu * x).collect();
        project(&mut r);
        let res = raw_dot(&r, &r).sqrt();
        let good = best.as_ref().map_or(true, |(_, _, b)| res < *b);
        if good {
            best = Some((mu, v.clone(), res));
        }
        if res <= 1e-7 * (1.0 + matrix.max_abs() * 1e-3) {
            break;
        }
    }
    let (mu, v, res) = best.ok_or(Error::EigenNoConvergence(max_steps))?;
    if res > 1e-3 {
        return Err(Error::EigenNoConvergence(max_steps));
    }
    Ok((mu, v, res))
}

fn normalize(v: &mut [f64]) {
    let nrm = raw_dot(v, v).sqrt();
    if nrm > 0.0 {
        for x in v.iter_mut() {
            *x /= nrm;
        }
    }
}

/// Coercivity measurement: smallest eigenvalue of `L` on the orthogonal
/// complement of the two constraints, plus the H1-bound it induces.
#[derive(Debug, Clone, Copy)]
pub struct CoercivityEstimate {
    /// Smallest constrained eigenvalue (the empirical coercivity constant).
    pub mu_min: f64,
    /// Induced bound `|g|_H1 <= k_bound |phi|_L2` for constrained solves:
    /// from `|g| <= |phi|/mu` and
    /// `|g'|^2 = <Lg, g> - int (2+V) g^2 <= |phi||g| + max(0, -min(2+V)) |g|^2`.
    pub k_bound: f64,
    /// Projected eigen-residual of the converged mode.
    pub residual: f64,
}

/// Measure the constrained coercivity constant for a pair on a grid.
pub fn coercivity_constant(pair: &KinkPair, grid: Grid) -> Result<CoercivityEstimate> {
    let op = assemble(pair, grid)?;
    coercivity_of(&op)
}

pub fn coercivity_of(op: &ConstrainedOperator) -> Result<CoercivityEstimate> {
    let constraints: Vec<&[f64]> = op.constraints.iter().map(|c| c.values()).collect();
    // quadratic form is bounded below by min(2+V) > -3, so -6 is safely
    // under the whole spectrum
    let lo = -6.0;
    let mut hi = 8.5;
    let mut expansions = 0;
    while count_below(&op.matrix, &constraints, hi)? == 0 {
        hi *= 1.5;
        expansions += 1;
        if expansions > 40 {
            return Err(Error::EigenNoConvergence(expansions));
        }
    }
    let (blo, bhi) = bisect_eigenvalue(&op.matrix, &constraints, 1, lo, hi)?;
    let (mu, _v, res) = eigenpair(&op.matrix, &constraints, 0.5 * (blo + bhi), 50)?;
    let vmin = op
        .diag_potential
        .values()
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let k_bound = if mu > 0.0 {
        ((1.0 + (-vmin).max(0.0)) / (mu * mu) + 1.0 / mu).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(CoercivityEstimate {
        mu_min: mu,
        k_bound,
        residual: res,
    })
}

/// One row of a coercivity sweep.
#[derive(Debug, Clone, Copy)]
pub struct CoercivityRow {
    pub separation: f64,
    pub mu_min: f64,
    pub k_bound: f64,
}

/// Sweep the coercivity constant over separations (symmetric pairs).
pub fn coercivity_sweep(separations: &[f64], pad: f64, h: f64) -> Result<Vec<CoercivityRow>> {
    let mut rows = Vec::with_capacity(separations.len());
    for &s in separations {
        let pair = KinkPair::from_separation(s)?;
        let grid = pair.window(pad, h)?;
        let est = coercivity_constant(&pair, grid)?;
        rows.push(CoercivityRow {
            separation: s,
            mu_min: est.mu_min,
            k_bound: est.k_bound,
        });
    }
    Ok(rows)
}

/// CSV for spectrum/coercivity sweeps: `separation,mu_min,K_estimate`.
pub fn write_coercivity_csv<W: std::io::Write>(
    rows: &[CoercivityRow],
    w: &mut W,
) -> std::io::Result<()> {
    writeln!(w, "separation,mu_min,K_estimate")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.separation, r.mu_min, r.k_bound)?;
    }
    Ok(())
}

/// Spectrum of the single-kink linearization on a window centered near the
/// kink: the `k` smallest eigenvalues and the ground mode.
#[derive(Debug, Clone)]
pub struct SingleKinkSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Ground eigenvector, sign-normalized so its largest component is
    /// positive; approximates the kink derivative.
    pub ground_state: GridFunction,
    pub ground_residual: f64,
}

/// Assemble the single-kink operator `-d2 + 2 - 24 H^2 + 30 H^4` on `grid`.
pub fn single_kink_matrix(grid: Grid) -> BandMatrix {
    let n = grid.len();
    let h = grid.spacing();
    let inv = 1.0 / (12.0 * h * h);
    let coef = [inv, -16.0 * inv, 30.0 * inv, -16.0 * inv, inv];
    let mut matrix = BandMatrix::zeros(n);
    for i in 0..n {
        for (k, &c) in coef.iter().enumerate() {
            let j = i as isize + k as isize - 2;
            if (0..n as isize).contains(&j) {
                matrix.add(i, j as usize, c);
            }
        }
        let hh = model::kink_01(grid.node(i));
        matrix.add(i, i, 2.0 - 24.0 * hh * hh + 30.0 * hh.powi(4));
    }
    matrix
}

pub fn spectrum_single_kink(grid: Grid, k: usize) -> Result<SingleKinkSpectrum> {
    if k == 0 || k > 6 {
        return Err(Error::InvalidParameter {
            name: "k",
            detail: format!("need 1 <= k <= 6, got {k}"),
        });
    }
    let matrix = single_kink_matrix(grid);
    let lo = -6.0;
    let mut hi = 8.5;
    let mut expansions = 0;
    while count_below(&matrix, &[], hi)? < k {
        hi *= 1.5;
        expansions += 1;
        if expansions > 40 {
            return Err(Error::EigenNoConvergence(expansions));
        }
    }
    let mut eigenvalues = Vec::with_capacity(k);
    for index in 1..=k {
        let (blo, bhi) = bisect_eigenvalue(&matrix, &[], index, lo, hi)?;
        eigenvalues.push(0.5 * (blo + bhi));
    }
    let (mu, mut v, res) = eigenpair(&matrix, &[], eigenvalues[0], 50)?;
    eigenvalues[0] = mu;
    // sign normalization: largest component positive
    let mut mx = 0.0f64;
    let mut arg = 0usize;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > mx {
            mx = x.abs();
            arg = i;
        }
    }
    if v[arg] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    Ok(SingleKinkSpectrum {
        eigenvalues,
        ground_state: GridFunction::new(grid, v)?,
        ground_residual: res,
    })
}
