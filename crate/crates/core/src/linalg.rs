//! Small dense-band linear algebra: tridiagonal solves, Sturm counts and a
//! symmetric banded LDL^T factorization that also reports inertia.

use crate::error::{LabError, Result};

/// Solve a tridiagonal system (Thomas algorithm, no pivoting).
/// `lower[i]` couples row i+1 to column i, `upper[i]` row i to column i+1.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 {
        return Err(LabError::LinearSolveFailure("zero pivot in tridiagonal solve".into()));
    }
    if n > 1 {
        c[0] = upper[0] / piv;
    }
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i - 1] * c[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return Err(LabError::LinearSolveFailure("zero pivot in tridiagonal solve".into()));
        }
        if i + 1 < n {
            c[i] = upper[i] / piv;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Number of eigenvalues strictly below `shift` of the symmetric
/// tridiagonal matrix with diagonal `diag` and off-diagonal `off`.
pub fn sturm_count(diag: &[f64], off: &[f64], shift: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - shift;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * (off[i - 1].abs() + 1.0) } else { q };
        q = diag[i] - shift - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection.
pub fn tridiagonal_min_eigenvalue(diag: &[f64], off: &[f64], tol: f64) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..diag.len() {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + off.get(i).map_or(0.0, |v| v.abs());
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    while hi - lo > tol * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Symmetric banded matrix stored by rows: `band[i * (bw + 1) + k]` holds
/// `A[i][i - bw + k]` for `k = 0..=bw` (entry `k = bw` is the diagonal).
#[derive(Debug, Clone)]
pub struct SymBanded {
    pub n: usize,
    pub bw: usize,
    pub band: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, band: vec![0.0; n * (bw + 1)] }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + self.bw - (i - j)
    }

    /// Set `A[i][j] = A[j][i] = v`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(r, c);
        self.band[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(r, c);
        self.band[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            return 0.0;
        }
        self.band[self.slot(r, c)]
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.n {
            let s = self.slot(i, i);
            self.band[s] += shift;
        }
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..=i {
                let a = self.band[self.slot(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// LDL^T factorization without pivoting. Fails only on an exactly zero
    /// (or non-finite) pivot.
    pub fn ldlt(&self) -> Result<Ldlt> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        let mut d = vec![0.0; n];
        let mut scratch = vec![0.0; w];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            // scratch[k - j0] = L[i][k] * d[k]
            for j in j0..i {
                let mut acc = self.band[i * w + bw - (i - j)];
                let kmin = j0.max(j.saturating_sub(bw));
                let li = i * w + bw - i;
                let lj = j * w + bw - j;
                for k in kmin..j {
                    acc -= scratch[k - j0] * l[lj + k];
                }
                let lij = acc / d[j];
                l[li + j] = lij;
                scratch[j - j0] = lij * d[j];
            }
            let mut dii = self.band[i * w + bw];
            let li = i * w + bw - i;
            for k in j0..i {
                dii -= scratch[k - j0] * l[li + k];
            }
            if dii == 0.0 || !dii.is_finite() {
                return Err(LabError::LinearSolveFailure(format!("zero pivot at row {i}")));
            }
            d[i] = dii;
            l[li + i] = 1.0;
        }
        Ok(Ldlt { n, bw, l, d })
    }
}

/// Factor `A = L D L^T` of a [`SymBanded`] matrix.
#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl Ldlt {
    /// Number of negative pivots = number of negative eigenvalues.
    pub fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let w = self.bw + 1;
        let mut x = b.to_vec();
        for i in 0..n {
            let j0 = i.saturating_sub(self.bw);
            let li = i * w + self.bw - i;
            let mut acc = x[i];
            for j in j0..i {
                acc -= self.l[li + j] * x[j];
            }
            x[i] = acc;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let xi = x[i];
            let j0 = i.saturating_sub(self.bw);
            let li = i * w + self.bw - i;
            for j in j0..i {
                x[j] -= self.l[li + j] * xi;
            }
        }
        x
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
