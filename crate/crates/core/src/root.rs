//! Bisection roots of nonincreasing pressure functions, the doubling-root
//! sequence and the one-step / multi-step upper roots.

use crate::cocycle::{MatrixCocycle, SvParams};
use crate::error::{Error, Result};
use crate::pressure::{
    block_classes, class_weights, doubling_pressure_from_weights, n_step_svp, one_step_svp,
    potential_pressure, subadditive_pressure, DoublingLimits, PressureEstimate,
};
use crate::sft::Subshift;

pub const DEFAULT_ROOT_TOL: f64 = 1e-6;
/// Noise allowed in sign tests and monotonicity checks.
pub const PRESSURE_NOISE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    pub root: f64,
    pub lo: f64,
    pub hi: f64,
    pub evaluations: usize,
    /// The pressure stayed positive on the whole domain and the root was
    /// reported as its right end.
    pub clamped: bool,
}

/// Bisection for the zero of a nonincreasing function on `[lo, hi]`.
pub fn pressure_root<F>(mut p: F, lo: f64, hi: f64, tol: f64) -> Result<RootResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo <= hi && tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bad root domain [{lo}, {hi}] with tol {tol}"
        )));
    }
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut eval = |s: f64, samples: &mut Vec<(f64, f64)>| -> Result<f64> {
        let v = p(s)?;
        if v.is_nan() {
            return Err(Error::InvalidArgument(format!("pressure is NaN at s = {s}")));
        }
        let pos = samples.partition_point(|&(x, _)| x < s);
        if pos > 0 {
            let (sl, pl) = samples[pos - 1];
            if v > pl + PRESSURE_NOISE {
                return Err(Error::NotDecreasing { s_lo: sl, p_lo: pl, s_hi: s, p_hi: v });
            }
        }
        if pos < samples.len() {
            let (sh, ph) = samples[pos];
            if ph > v + PRESSURE_NOISE {
                return Err(Error::NotDecreasing { s_lo: s, p_lo: v, s_hi: sh, p_hi: ph });
            }
        }
        samples.insert(pos, (s, v));
        Ok(v)
    };
    let p_lo = eval(lo, &mut samples)?;
    if p_lo < -PRESSURE_NOISE {
        return Err(Error::NegativeAtStart(p_lo));
    }
    let p_hi = eval(hi, &mut samples)?;
    if p_hi > 0.0 {
        return Ok(RootResult {
            root: hi,
            lo: hi,
            hi,
            evaluations: samples.len(),
            clamped: true,
        });
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if eval(mid, &mut samples)? > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(RootResult {
        root: 0.5 * (a + b),
        lo: a,
        hi: b,
        evaluations: samples.len(),
        clamped: false,
    })
}

/// Root of `s ↦ value` of a pressure estimate.
pub fn estimate_root<F>(mut p: F, lo: f64, hi: f64, tol: f64) -> Result<RootResult>
where
    F: FnMut(f64) -> Result<PressureEstimate>,
{
    pressure_root(|s| p(s).map(|e| e.value), lo, hi, tol)
}

/// Root of the sub-additive singular-value pressure.
///
/// Exact estimators (diagonal cocycles) give an ordinary bisection bracket.
/// Word-sum estimators give `[root(upper), root(value)]`, widened by the
/// bisection tolerance.
pub fn subadditive_root(
    sub: &Subshift,
    c: &MatrixCocycle,
    n_max: usize,
    tol: f64,
) -> Result<RootResult> {
    let u = c.dim();
    let eval = |s: f64| subadditive_pressure(sub, c, SvParams::new(s, u)?, n_max);
    let by_value = estimate_root(eval, 0.0, u as f64, tol)?;
    let probe = eval(by_value.root)?;
    if probe.lower == Some(probe.value) {
        return Ok(by_value);
    }
    let by_upper = pressure_root(|s| eval(s).map(|e| e.upper), 0.0, u as f64, tol)?;
    Ok(RootResult {
        root: by_value.root,
        lo: by_upper.lo.min(by_value.lo),
        hi: by_value.hi.max(by_upper.hi),
        evaluations: by_value.evaluations + by_upper.evaluations + 1,
        clamped: by_value.clamped,
    })
}

/// The doubling-root sequence `t_0, t_1, ..., t_{ℓ_max}` for a fixed `k`.
#[derive(Debug, Clone)]
pub struct DoublingRoots {
    pub k: usize,
    pub levels: Vec<RootResult>,
    /// `t_{ℓ_max}`.
    pub t_star: RootResult,
    /// `t_{ℓ+1} <= t_ℓ + 1e-9` for every computed level.
    pub monotone: bool,
    /// Present when `t_star` landed outside `[k, k+1)`: the same sequence
    /// recomputed with `k = ⌊t_star⌋`.
    pub rerun: Option<Box<DoublingRoots>>,
}

impl DoublingRoots {
    pub fn t(&self) -> Vec<f64> {
        self.levels.iter().map(|r| r.root).collect()
    }
}

pub fn doubling_roots(sub: &Subshift, c: &MatrixCocycle, level_max: usize) -> Result<DoublingRoots> {
    doubling_roots_with(sub, c, level_max, DoublingLimits::default(), DOUBLING_TOL)
}

/// Tolerance used for doubling roots, tight enough that exact levels agree
/// to 1e-12.
pub const DOUBLING_TOL: f64 = 1e-13;

pub fn doubling_roots_with(
    sub: &Subshift,
    c: &MatrixCocycle,
    level_max: usize,
    limits: DoublingLimits,
    tol: f64,
) -> Result<DoublingRoots> {
    if level_max > limits.level_cap {
        return Err(Error::CapExceeded {
            what: "doubling level",
            requested: level_max,
            cap: limits.level_cap,
        });
    }
    let pre = one_step_root(sub, c, 1e-9)?;
    let k = SvParams::new(pre.root, c.dim())?.k;
    let first = doubling_sequence(sub, c, level_max, limits, tol, k)?;
    let k_star = SvParams::new(first.t_star.root, c.dim())?.k;
    if k_star == k {
        return Ok(first);
    }
    let rerun = doubling_sequence(sub, c, level_max, limits, tol, k_star)?;
    Ok(DoublingRoots {
        rerun: Some(Box::new(rerun)),
        ..first
    })
}

fn doubling_sequence(
    sub: &Subshift,
    c: &MatrixCocycle,
    level_max: usize,
    limits: DoublingLimits,
    tol: f64,
    k: usize,
) -> Result<DoublingRoots> {
    let u = c.dim() as f64;
    let mut levels = Vec::with_capacity(level_max + 1);
    for level in 0..=level_max {
        let classes = block_classes(sub, c, level, limits)?;
        let w = class_weights(&classes, k)?;
        let r = estimate_root(
            |s| doubling_pressure_from_weights(sub, &classes, &w, s, level),
            0.0,
            u,
            tol,
        )?;
        levels.push(r);
    }
    let monotone = levels
        .windows(2)
        .all(|p| p[1].root <= p[0].root + PRESSURE_NOISE);
    Ok(DoublingRoots {
        k,
        t_star: *levels.last().unwrap(),
        levels,
        monotone,
        rerun: None,
    })
}

/// Root of the additive pressure of `i ↦ log φ^s(B_i)`.
pub fn one_step_root(sub: &Subshift, c: &MatrixCocycle, tol: f64) -> Result<RootResult> {
    estimate_root(
        |s| potential_pressure(sub, &one_step_svp(sub, c, s)?),
        0.0,
        c.dim() as f64,
        tol,
    )
}

/// Root of `s ↦ min_{n ∈ n_list} P(σ, (1/n) log φ^s(Π_{x_0..x_{n-1}}))`.
pub fn multi_step_root(
    sub: &Subshift,
    c: &MatrixCocycle,
    n_list: &[usize],
    tol: f64,
) -> Result<RootResult> {
    if n_list.is_empty() || n_list.windows(2).any(|p| p[1] <= p[0]) || n_list[0] == 0 {
        return Err(Error::InvalidArgument(
            "n list must be nonempty, positive and increasing".into(),
        ));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n > sub.word_cap()) {
        return Err(Error::CapExceeded {
            what: "block length",
            requested: n,
            cap: sub.word_cap(),
        });
    }
    pressure_root(
        |s| {
            let mut best = f64::INFINITY;
            for &n in n_list {
                best = best.min(potential_pressure(sub, &n_step_svp(sub, c, s, n)?)?.value);
            }
            Ok(best)
        },
        0.0,
        c.dim() as f64,
        tol,
    )
}

/// Tolerance of `step_root_pair`.
pub const STEP_ROOT_TOL: f64 = 1e-11;

/// The one-step root and the multi-step root, in that order.
pub fn step_root_pair(
    sub: &Subshift,
    c: &MatrixCocycle,
    n_list: &[usize],
) -> Result<(RootResult, RootResult)> {
    Ok((
        one_step_root(sub, c, STEP_ROOT_TOL)?,
        multi_step_root(sub, c, n_list, STEP_ROOT_TOL)?,
    ))
}
