//! Matrix cocycles over a subshift and the singular-value potentials they
//! induce.
//!
//! A cocycle assigns to each symbol `i` an invertible `u x u` matrix `B_i`
//! standing for the inverse of the unstable derivative on the cylinder of
//! `i`. Along a word `w = w_0 … w_{n-1}` the inverse derivative of the
//! n-th iterate is the product `B_{w_0} B_{w_1} ⋯ B_{w_{n-1}}`, which is
//! also the linear part of the composed inverse branches
//! `T_{w_0} ∘ ⋯ ∘ T_{w_{n-1}}` used by the geometric models.

use crate::error::{Error, Result};
use crate::linalg::{ScaledMat, SmallMat};
use crate::sft::Subshift;

/// Smallest admissible `|det B_i|`.
pub const MIN_ABS_DET: f64 = 1e-14;

/// Per-symbol invertible contractions.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCocycle {
    u: usize,
    mats: Vec<SmallMat>,
    scaled: Vec<ScaledMat>,
}

impl MatrixCocycle {
    pub fn new(mats: Vec<SmallMat>) -> Result<Self> {
        let u = mats
            .first()
            .map(|m| m.dim())
            .ok_or_else(|| Error::InvalidArgument("cocycle needs at least one matrix".into()))?;
        for (i, m) in mats.iter().enumerate() {
            if m.dim() != u {
                return Err(Error::InvalidArgument(format!(
                    "matrix {i} has dimension {}, expected {u}",
                    m.dim()
                )));
            }
            if !m.is_finite() {
                return Err(Error::InvalidArgument(format!("matrix {i} has non-finite entries")));
            }
            if m.det().abs() <= MIN_ABS_DET {
                return Err(Error::NonInvertible(m.det().abs()));
            }
            let a1 = m.singular_values()[0];
            if a1 >= 1.0 {
                return Err(Error::NotContracting {
                    symbol: i,
                    alpha1: a1,
                });
            }
        }
        let scaled = mats.iter().map(|m| ScaledMat::new(*m)).collect();
        Ok(Self { u, mats, scaled })
    }

    /// The same matrix for every one of `l` symbols.
    pub fn constant(m: SmallMat, l: usize) -> Result<Self> {
        Self::new(vec![m; l])
    }

    pub fn scalar(factors: &[f64]) -> Result<Self> {
        Self::new(factors.iter().map(|&f| SmallMat::diag(&[f])).collect())
    }

    pub fn dim(&self) -> usize {
        self.u
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn matrix(&self, symbol: u8) -> &SmallMat {
        &self.mats[symbol as usize]
    }

    pub fn matrices(&self) -> &[SmallMat] {
        &self.mats
    }

    pub fn is_diagonal(&self) -> bool {
        self.mats.iter().all(|m| m.is_diagonal())
    }

    /// True when every matrix is the same.
    pub fn is_constant(&self) -> bool {
        self.mats.windows(2).all(|p| p[0] == p[1])
    }

    /// `max_i α_1(B_i)`, the uniform contraction rate.
    pub fn contraction(&self) -> f64 {
        self.mats
            .iter()
            .map(|m| m.singular_values()[0])
            .fold(0.0, f64::max)
    }

    /// Checks that the cocycle covers the alphabet of `sub`.
    pub fn check_alphabet(&self, sub: &Subshift) -> Result<()> {
        if self.mats.len() != sub.alphabet_size() {
            return Err(Error::InvalidArgument(format!(
                "cocycle has {} matrices for an alphabet of size {}",
                self.mats.len(),
                sub.alphabet_size()
            )));
        }
        Ok(())
    }

    /// `B_{w_0} ⋯ B_{w_{n-1}}` with a separate log scale.
    pub fn product(&self, w: &[u8]) -> ScaledMat {
        let mut p = ScaledMat::identity(self.u);
        for &c in w {
            p = p.mul(&self.scaled[c as usize]);
        }
        p
    }
}

/// Singular-value exponent `s` with its integer part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvParams {
    pub s: f64,
    pub k: usize,
}

impl SvParams {
    /// `k = ⌊s⌋`, except `k = u - 1` at `s = u` (the fractional term has
    /// coefficient zero there).
    pub fn new(s: f64, u: usize) -> Result<Self> {
        if !(0.0..=u as f64).contains(&s) || s.is_nan() {
            return Err(Error::InvalidArgument(format!("s = {s} outside [0, {u}]")));
        }
        let k = (s.floor() as usize).min(u.saturating_sub(1));
        Ok(Self { s, k })
    }
}

/// Singular values of `t`, decreasing.
pub fn singular_values(t: &SmallMat) -> Vec<f64> {
    t.singular_values()
}

/// `log φ^s` from log singular values (decreasing).
///
/// `α_1 ⋯ α_k α_{k+1}^{s-k}` for `s <= d`, and `|det|^{s/d}` beyond.
pub fn log_svf_from_log_sv(log_sv: &[f64], s: f64) -> f64 {
    let d = log_sv.len();
    if s <= 0.0 {
        return 0.0;
    }
    if s > d as f64 {
        return s / d as f64 * log_sv.iter().sum::<f64>();
    }
    let k = s.floor() as usize;
    let mut acc: f64 = log_sv[..k].iter().sum();
    let frac = s - k as f64;
    if frac > 0.0 {
        acc += frac * log_sv[k];
    }
    acc
}

/// The singular value function `φ^s(T)`.
pub fn svf_value(t: &SmallMat, s: f64) -> Result<f64> {
    if s < 0.0 || s.is_nan() {
        return Err(Error::InvalidArgument(format!("s = {s} must be >= 0")));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    let sv = t.singular_values();
    let smallest = *sv.last().unwrap();
    if smallest == 0.0 {
        return Err(Error::NonInvertible(0.0));
    }
    let log_sv: Vec<f64> = sv.iter().map(|a| a.ln()).collect();
    Ok(log_svf_from_log_sv(&log_sv, s).exp())
}

/// `log φ^s` of a scaled product.
pub fn log_svf(p: &ScaledMat, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    log_svf_from_log_sv(&p.log_singular_values(), s)
}

/// The singular-valued potential `φ^s(x, f^n)` for `x ∈ [w]`, `n = |w|`.
///
/// Sums the logs of the `⌊s⌋` weakest forward singular values of
/// `Π^{-1}` plus the fractional term, with `α_i(Π^{-1}) = 1/α_{u-i+1}(Π)`.
/// Equals `-log φ^s(Π)`.
pub fn phi_s_log(c: &MatrixCocycle, sub: &Subshift, w: &[u8], p: SvParams) -> Result<f64> {
    sub.check_admissible(w)?;
    let u = c.dim();
    let inv_fwd = c.product(w).log_singular_values(); // log α_i(Π), decreasing
    // forward singular values of Π^{-1}, decreasing
    let fwd: Vec<f64> = (0..u).map(|i| -inv_fwd[u - 1 - i]).collect();
    let k = p.s.floor() as usize;
    let k = k.min(u);
    let mut acc = 0.0;
    for a in fwd.iter().take(u).skip(u - k) {
        acc += a;
    }
    let frac = p.s - k as f64;
    if frac > 0.0 && k < u {
        acc += frac * fwd[u - k - 1];
    }
    Ok(acc)
}

/// `(log G, log H)` of a matrix for cover index `k`:
/// `G = φ^k(T) / α_{k+1}(T)^k`, `H = α_{k+1}(T)`, with the cover constant 1.
pub fn log_gh_from_log_sv(log_sv: &[f64], k: usize) -> Result<(f64, f64)> {
    let u = log_sv.len();
    if k >= u {
        return Err(Error::BadK {
            k,
            max: u.saturating_sub(1),
        });
    }
    let h = log_sv[k];
    let g: f64 = log_sv[..k].iter().sum::<f64>() - k as f64 * h;
    Ok((g, h))
}

/// `(G, H)` for a single symbol.
pub fn gh_weights(c: &MatrixCocycle, symbol: u8, k: usize) -> Result<(f64, f64)> {
    let ls = c.product(&[symbol]).log_singular_values();
    let (g, h) = log_gh_from_log_sv(&ls, k)?;
    Ok((g.exp(), h.exp()))
}
