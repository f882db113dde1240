//! Symmetric pentadiagonal matrices (half-bandwidth 2, the 4th-order
//! stencil), with a row-pivoted banded LU for solves and an unpivoted
//! LDL^T pivot-sign pass for eigenvalue counting by Sylvester inertia.

use crate::error::{Error, Result};

/// Half-bandwidth of the 4th-order second-difference stencil.
pub const BW: usize = 2;
/// Upper bandwidth of U after partial pivoting.
const BW_WORK: usize = 2 * BW;
/// Stored row width during factorization: columns `i - BW ..= i + BW_WORK`.
const WIDTH: usize = BW + BW_WORK + 1;

/// Symmetric banded matrix; only offsets `|i - j| <= BW` are stored.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    /// Row-major, `2*BW + 1` entries per row; column `j` of row `i` sits at
    /// slot `j - i + BW`.
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n > 2 * BW + 1, "band matrix too small: n = {n}");
        Self {
            n,
            data: vec![0.0; n * (2 * BW + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(i: usize, j: usize) -> Option<usize> {
        let d = j as isize - i as isize + BW as isize;
        if (0..(2 * BW + 1) as isize).contains(&d) {
            Some(i * (2 * BW + 1) + d as usize)
        } else {
            None
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j < self.n);
        Self::slot(i, j).map_or(0.0, |s| self.data[s])
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = Self::slot(i, j).expect("entry outside band");
        self.data[s] += v;
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(BW);
            let hi = (i + BW).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Largest asymmetry `|a_ij - a_ji|` over the band; zero for matrices
    /// assembled from symmetric stencils.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..=(i + BW).min(self.n - 1) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Banded LU of `A - shift I` with partial pivoting.
    pub fn lu_shifted(&self, shift: f64) -> Result<BandLu> {
        let n = self.n;
        // working rows cover columns i-BW ..= i+BW_WORK
        let mut work = vec![0.0f64; n * WIDTH];
        let at = |i: usize, j: usize| -> usize {
            debug_assert!(j + BW >= i && j <= i + BW_WORK, "({i},{j}) outside work band");
            i * WIDTH + (j + BW - i)
        };
        for i in 0..n {
            let lo = i.saturating_sub(BW);
            let hi = (i + BW).min(n - 1);
            for j in lo..=hi {
                work[at(i, j)] = self.get(i, j) - if i == j { shift } else { 0.0 };
            }
        }

        let mut pivots = vec![0usize; n];
        let mut mults = vec![0.0f64; n * BW];
        let scale = self.max_abs() + shift.abs() + 1.0;
        for k in 0..n {
            let rmax = (k + BW).min(n - 1);
            let mut piv = k;
            let mut best = work[at(k, k)].abs();
            for r in (k + 1)..=rmax {
                let v = work[at(r, k)].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= 1e-280 * scale.max(1.0) {
                return Err(Error::SingularSystem);
            }
            pivots[k] = piv;
            if piv != k {
                let chi = (k + BW_WORK).min(n - 1);
                for j in k..=chi {
                    // column j is inside both row windows: j <= k + BW_WORK
                    // and j + BW >= piv because piv <= k + BW <= j + BW
                    let a = at(k, j);
                    let b = at(piv, j);
                    work.swap(a, b);
                }
            }
            let d = work[at(k, k)];
            for r in (k + 1)..=rmax {
                let m = work[at(r, k)] / d;
                mults[k * BW + (r - k - 1)] = m;
                if m != 0.0 {
                    let chi = (k + BW_WORK).min(n - 1);
                    for j in (k + 1)..=chi {
                        work[at(r, j)] -= m * work[at(k, j)];
                    }
                }
            }
        }
        Ok(BandLu {
            n,
            work,
            pivots,
            mults,
        })
    }

    /// Signed pivot count of the unpivoted LDL^T of `A - shift I`:
    /// `Ok(negatives)` or `Err` on a near-zero pivot (caller re-tries with a
    /// jittered shift). By Sylvester's law the count equals the number of
    /// eigenvalues below `shift`.
    pub fn ldlt_negative_pivots(&self, shift: f64) -> std::result::Result<usize, LdltBreakdown> {
        let n = self.n;
        // lower-triangle working band: row i holds columns i-BW ..= i
        let mut work = vec![0.0f64; n * (BW + 1)];
        let at = |i: usize, j: usize| -> usize { i * (BW + 1) + (j + BW - i) };
        for i in 0..n {
            let lo = i.saturating_sub(BW);
            for j in lo..=i {
                work[at(i, j)] = self.get(i, j) - if i == j { shift } else { 0.0 };
            }
        }
        let scale = self.max_abs() + shift.abs() + 1.0;
        let tiny = 1e-13 * scale;
        let mut negatives = 0usize;
        for k in 0..n {
            let d = work[at(k, k)];
            if d.abs() <= tiny {
                return Err(LdltBreakdown);
            }
            if d < 0.0 {
                negatives += 1;
            }
            let rmax = (k + BW).min(n - 1);
            for i in (k + 1)..=rmax {
                let lik = work[at(i, k)] / d;
                for j in (k + 1)..=i {
                    // A(i, j) -= l_ik * d * l_jk, and work(j, k) = d * l_jk
                    work[at(i, j)] -= lik * work[at(j, k)];
                }
            }
        }
        Ok(negatives)
    }
}

/// Unpivoted LDL^T hit a near-zero pivot; the shift must be jittered.
#[derive(Debug)]
pub struct LdltBreakdown;

/// Pivoted banded LU factors of `A - shift I`.
#[derive(Debug)]
pub struct BandLu {
    n: usize,
    work: Vec<f64>,
    pivots: Vec<usize>,
    mults: Vec<f64>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        let n = self.n;
        let at = |i: usize, j: usize| -> usize { i * WIDTH + (j + BW - i) };
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let rmax = (k + BW).min(n - 1);
            for r in (k + 1)..=rmax {
                b[r] -= self.mults[k * BW + (r - k - 1)] * b[k];
            }
        }
        for k in (0..n).rev() {
            let chi = (k + BW_WORK).min(n - 1);
            let mut acc = b[k];
            for j in (k + 1)..=chi {
                acc -= self.work[at(k, j)] * b[j];
            }
            b[k] = acc / self.work[at(k, k)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, piv);
            b.swap(k, piv);
            for i in (k + 1)..n {
                let m = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= m * a[k][j];
                }
                b[i] -= m * b[k];
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for j in (k + 1)..n {
                acc -= a[k][j] * b[j];
            }
            b[k] = acc / a[k][k];
        }
        b
    }

    fn random_band(n: usize, seed: u64) -> (BandMatrix, Vec<Vec<f64>>) {
        // deterministic xorshift values in [-1, 1], symmetric band
        let mut state = seed | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        let mut band = BandMatrix::zeros(n);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..=(i + BW).min(n - 1) {
                let v = if i == j { next() + 4.0 } else { next() };
                band.add(i, j, v);
                dense[i][j] += v;
                if i != j {
                    band.add(j, i, v);
                    dense[j][i] += v;
                }
            }
        }
        (band, dense)
    }

    #[test]
    fn lu_matches_dense_solver() {
        for seed in [3u64, 17, 91] {
            let n = 24;
            let (band, dense) = random_band(n, seed);
            let b: Vec<f64> = (0..n).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
            let lu = band.lu_shifted(0.0).unwrap();
            let x = lu.solve(&b);
            let xd = dense_solve(dense, b.clone());
            for (a, c) in x.iter().zip(&xd) {
                assert!((a - c).abs() < 1e-9, "seed {seed}: {a} vs {c}");
            }
            // residual check
            let mut ax = vec![0.0; n];
            band.apply(&x, &mut ax);
            for (r, want) in ax.iter().zip(&b) {
                assert!((r - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn shifted_lu_solves_shifted_system() {
        let n = 30;
        let (band, _) = random_band(n, 5);
        let shift = 1.37;
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let x = band.lu_shifted(shift).unwrap().solve(&b);
        let mut ax = vec![0.0; n];
        band.apply(&x, &mut ax);
        for i in 0..n {
            let r = ax[i] - shift * x[i] - b[i];
            assert!(r.abs() < 1e-10, "row {i}: residual {r:e}");
        }
    }

    #[test]
    fn inertia_counts_match_eigenvalues_of_test_matrix() {
        // 1D Dirichlet Laplacian (second order, tridiagonal inside our band
        // container): eigenvalues 4 sin^2(k pi / (2(n+1))) are closed form.
        let n = 40;
        let mut band = BandMatrix::zeros(n);
        for i in 0..n {
            band.add(i, i, 2.0);
            if i + 1 < n {
                band.add(i, i + 1, -1.0);
                band.add(i + 1, i, -1.0);
            }
        }
        let eig = |k: usize| {
            let t = (k as f64) * std::f64::consts::PI / (2.0 * (n as f64 + 1.0));
            4.0 * t.sin().powi(2)
        };
        for (shift, expect) in [
            (eig(1) - 1e-6, 0usize),
            (eig(1) + 1e-6, 1),
            (eig(3) + 1e-6, 3),
            (5.0, n),
        ] {
            let count = band.ldlt_negative_pivots(shift).unwrap();
            assert_eq!(count, expect, "shift {shift}");
        }
    }

    #[test]
    fn asymmetry_of_symmetric_assembly_is_zero() {
        let (band, _) = random_band(50, 11);
        assert_eq!(band.max_asymmetry(), 0.0);
    }
}
