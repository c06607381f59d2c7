//! Small dense matrices (dimension at most 3) and the Perron-root solver.

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Row-major square matrix of dimension 1..=3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallMat {
    n: usize,
    a: [f64; 9],
}

impl SmallMat {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "dimension {n} unsupported");
        Self { n, a: [0.0; 9] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let mut m = Self::zeros(rows.len());
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), rows.len(), "matrix must be square");
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    /// Row-major slice of length n*n.
    pub fn from_row_major(n: usize, data: &[f64]) -> Option<Self> {
        if !(1..=MAX_DIM).contains(&n) || data.len() != n * n {
            return None;
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, data[i * n + j]);
            }
        }
        Some(m)
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                v.push(self.get(i, j));
            }
        }
        v
    }

    /// 2x2 rotation by `theta` radians.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_rows(&[&[c, -s], &[s, c]])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * 3 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * 3 + j] = v;
    }

    pub fn mul(&self, rhs: &SmallMat) -> SmallMat {
        debug_assert_eq!(self.n, rhs.n);
        let mut out = SmallMat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                let mut s = 0.0;
                for k in 0..self.n {
                    s += self.get(i, k) * rhs.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|k| self.get(i, k) * v[k]).sum())
            .collect()
    }

    pub fn transpose(&self) -> SmallMat {
        let mut out = SmallMat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> SmallMat {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(i, j, c * self.get(i, j));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.to_row_major().iter().all(|x| x.is_finite())
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j) == 0.0))
    }

    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.get(0, 0),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            _ => {
                let g = |i, j| self.get(i, j);
                g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
                    - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                    + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
            }
        }
    }

    /// Singular values in decreasing order.
    ///
    /// One-sided Jacobi: plane rotations applied to the columns until they
    /// are mutually orthogonal, which diagonalizes `TᵀT` without forming it.
    /// The singular values are then the column norms.
    pub fn singular_values(&self) -> Vec<f64> {
        let n = self.n;
        if n == 1 {
            return vec![self.get(0, 0).abs()];
        }
        let mut cols: Vec<[f64; 3]> = (0..n)
            .map(|j| {
                let mut c = [0.0; 3];
                for (i, ci) in c.iter_mut().enumerate().take(n) {
                    *ci = self.get(i, j);
                }
                c
            })
            .collect();
        let dot = |x: &[f64; 3], y: &[f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
        for _sweep in 0..60 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha = dot(&cols[p], &cols[p]);
                    let beta = dot(&cols[q], &cols[q]);
                    let gamma = dot(&cols[p], &cols[q]);
                    if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for i in 0..n {
                        let xp = cols[p][i];
                        let xq = cols[q][i];
                        cols[p][i] = c * xp - s * xq;
                        cols[q][i] = s * xp + c * xq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        // scaled norms so columns below 1e-154 do not underflow when squared
        let norm = |c: &[f64; 3]| {
            let m = c.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if m == 0.0 {
                0.0
            } else {
                let d = [c[0] / m, c[1] / m, c[2] / m];
                m * dot(&d, &d).sqrt()
            }
        };
        let mut sv: Vec<f64> = cols.iter().map(norm).collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv
    }
}

/// A matrix product carried as `exp(log_scale) * m` with `max|m| = 1`, so
/// long products neither underflow nor overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMat {
    pub m: SmallMat,
    pub log_scale: f64,
}

impl ScaledMat {
    pub fn new(m: SmallMat) -> Self {
        Self { m, log_scale: 0.0 }.normalized()
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: SmallMat::identity(n),
            log_scale: 0.0,
        }
    }

    fn normalized(mut self) -> Self {
        let s = self.m.max_abs();
        if s > 0.0 && s.is_finite() {
            self.m = self.m.scale(1.0 / s);
            self.log_scale += s.ln();
        }
        self
    }

    pub fn mul(&self, rhs: &ScaledMat) -> ScaledMat {
        ScaledMat {
            m: self.m.mul(&rhs.m),
            log_scale: self.log_scale + rhs.log_scale,
        }
        .normalized()
    }

    /// Log singular values in decreasing order.
    pub fn log_singular_values(&self) -> Vec<f64> {
        self.m
            .singular_values()
            .into_iter()
            .map(|a| a.ln() + self.log_scale)
            .collect()
    }
}

/// Nonnegative matrix given by weighted edges `(from, to, log_weight)`.
#[derive(Debug, Clone)]
pub struct LogEdgeMatrix {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

/// Perron data of a nonnegative irreducible matrix.
#[derive(Debug, Clone)]
pub struct Perron {
    pub log_rho: f64,
    /// Right eigenvector `Mv = ρv`, normalized to max 1.
    pub right: Vec<f64>,
    /// Left eigenvector `uM = ρu`, normalized to max 1.
    pub left: Vec<f64>,
    pub iterations: usize,
}

pub const PERRON_TOL: f64 = 1e-13;
pub const PERRON_MAX_ITER: usize = 100_000;

impl LogEdgeMatrix {
    pub fn from_dense_log(m: &[Vec<f64>]) -> Self {
        let n = m.len();
        let mut edges = Vec::new();
        for (i, row) in m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > f64::NEG_INFINITY {
                    edges.push((i, j, v));
                }
            }
        }
        Self { n, edges }
    }

    fn transposed(&self) -> Self {
        Self {
            n: self.n,
            edges: self.edges.iter().map(|&(i, j, w)| (j, i, w)).collect(),
        }
    }

    /// Power iteration for the spectral radius; the matrix is rescaled so its
    /// largest entry is 1, and shifted by a multiple of the identity so that
    /// periodic irreducible matrices converge too. Stops when the
    /// Collatz–Wielandt bounds `min (Mx)_i/x_i <= ρ <= max (Mx)_i/x_i` agree
    /// to `PERRON_TOL` relative.
    fn right_vector(&self) -> Result<(f64, Vec<f64>, usize)> {
        let n = self.n;
        if n == 0 || self.edges.is_empty() {
            return Err(Error::Reducible);
        }
        let shift_log = self
            .edges
            .iter()
            .map(|e| e.2)
            .fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<(usize, usize, f64)> = self
            .edges
            .iter()
            .map(|&(i, j, lw)| (i, j, (lw - shift_log).exp()))
            .collect();
        let apply = |x: &[f64]| {
            let mut y = vec![0.0; n];
            for &(i, j, wt) in &w {
                y[i] += wt * x[j];
            }
            y
        };
        let mut x = vec![1.0; n];
        let row = apply(&x);
        let min_row = row.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_row <= 0.0 {
            // a zero row means a state with no successor
            return Err(Error::Reducible);
        }
        let c = 0.5 * min_row;
        for it in 1..=PERRON_MAX_ITER {
            let mx = apply(&x);
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for i in 0..n {
                if x[i] <= 0.0 {
                    lo = 0.0;
                    hi = f64::INFINITY;
                    break;
                }
                let r = mx[i] / x[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
            if hi.is_finite() && hi - lo <= PERRON_TOL * hi {
                let rho = 0.5 * (lo + hi);
                let norm = x.iter().cloned().fold(0.0, f64::max);
                let v = x.iter().map(|xi| xi / norm).collect();
                return Ok((rho.ln() + shift_log, v, it));
            }
            let mut y: Vec<f64> = mx.iter().zip(&x).map(|(a, b)| a + c * b).collect();
            let norm = y.iter().cloned().fold(0.0, f64::max);
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::Reducible);
            }
            y.iter_mut().for_each(|v| *v /= norm);
            x = y;
        }
        Err(Error::NotConverged(PERRON_MAX_ITER))
    }

    /// `log ρ(M)` only.
    pub fn log_spectral_radius(&self) -> Result<f64> {
        self.right_vector().map(|r| r.0)
    }

    pub fn perron(&self) -> Result<Perron> {
        let (log_rho, right, it1) = self.right_vector()?;
        let (_, left, it2) = self.transposed().right_vector()?;
        Ok(Perron {
            log_rho,
            right,
            left,
            iterations: it1 + it2,
        })
    }
}
