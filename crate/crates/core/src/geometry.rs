//! Self-affine models of the unstable slice, their cylinder covers and
//! direct box counting.
//!
//! A model attaches to each symbol `i` an affine contraction
//! `T_i(x) = B_i x + c_i` of an ambient box. The attractor is the set of
//! points `lim T_{w_0} ∘ ⋯ ∘ T_{w_{n-1}}(x)` over admissible futures `w`.

use crate::cocycle::{gh_weights, MatrixCocycle};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::SmallMat;
use crate::potential::{Potential, Side};
use crate::pressure::DoublingLimits;
use crate::root::{doubling_roots_with, DoublingRoots, RootResult, DOUBLING_TOL};
use crate::sft::{Subshift, Word};
use crate::stopping::fold_family;

/// Largest number of representative points generated by [`box_count`].
pub const DEFAULT_POINT_CAP: usize = 1 << 24;
/// Hard bound on refinement depth in [`box_count`].
const MAX_REFINE_DEPTH: usize = 200;
const GEOM_TOL: f64 = 1e-12;

/// Axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AmbientBox {
    pub fn unit(u: usize) -> Self {
        Self {
            lo: vec![0.0; u],
            hi: vec![1.0; u],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    fn corners(&self) -> Vec<Vec<f64>> {
        let u = self.dim();
        (0..1usize << u)
            .map(|mask| {
                (0..u)
                    .map(|i| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] })
                    .collect()
            })
            .collect()
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lo[i] - GEOM_TOL && v <= self.hi[i] + GEOM_TOL)
    }
}

/// Scales `base^1, base^2, ..., base^count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsGrid {
    pub base: f64,
    pub count: usize,
}

impl EpsGrid {
    pub fn scales(&self) -> Vec<f64> {
        (1..=self.count).map(|j| self.base.powi(j as i32)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineModel {
    pub name: String,
    pub subshift: Subshift,
    pub cocycle: MatrixCocycle,
    pub offsets: Vec<Vec<f64>>,
    pub ambient: AmbientBox,
    /// Default box-counting scales.
    pub eps: EpsGrid,
    /// Default minimum word length for representative points.
    pub depth: usize,
}

impl AffineModel {
    /// Validates the model: one offset per symbol, every map sends the
    /// ambient box into itself, and distinct images have disjoint
    /// interiors.
    pub fn new(
        name: &str,
        subshift: Subshift,
        cocycle: MatrixCocycle,
        offsets: Vec<Vec<f64>>,
        ambient: AmbientBox,
        eps: EpsGrid,
        depth: usize,
    ) -> Result<Self> {
        let u = cocycle.dim();
        let l = subshift.alphabet_size();
        cocycle.check_alphabet(&subshift)?;
        if offsets.len() != l {
            return Err(Error::InvalidModel(format!(
                "{} offsets for {l} symbols",
                offsets.len()
            )));
        }
        if let Some(i) = offsets.iter().position(|o| o.len() != u) {
            return Err(Error::InvalidModel(format!("offset {i} is not of dimension {u}")));
        }
        if offsets.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("non-finite offset".into()));
        }
        if ambient.dim() != u || ambient.lo.iter().zip(&ambient.hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidModel("ambient box must have lo < hi in every coordinate".into()));
        }
        if !(eps.base > 0.0 && eps.base < 1.0 && eps.count >= 1) {
            return Err(Error::InvalidModel(format!(
                "eps grid needs base in (0,1) and count >= 1, got {} and {}",
                eps.base, eps.count
            )));
        }
        let model = Self {
            name: name.to_string(),
            subshift,
            cocycle,
            offsets,
            ambient,
            eps,
            depth,
        };
        for i in 0..l {
            for x in model.ambient.corners() {
                let y = model.apply(i as u8, &x);
                if !model.ambient.contains(&y) {
                    return Err(Error::InvalidModel(format!(
                        "map {i} sends corner {x:?} outside the ambient box"
                    )));
                }
            }
        }
        for i in 0..l {
            for j in i + 1..l {
                if !model.images_separated(i, j) {
                    return Err(Error::InvalidModel(format!(
                        "images of symbols {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.cocycle.dim()
    }

    /// `T_i(x) = B_i x + c_i`.
    pub fn apply(&self, i: u8, x: &[f64]) -> Vec<f64> {
        let y = self.cocycle.matrix(i).mul_vec(x);
        y.iter().zip(&self.offsets[i as usize]).map(|(a, b)| a + b).collect()
    }

    /// Image of the ambient box under `T_i` as a center and edge vectors.
    fn image(&self, i: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        let u = self.dim();
        let center = self.apply(i as u8, &self.ambient.center());
        let b = self.cocycle.matrix(i as u8);
        let edges = (0..u)
            .map(|k| {
                let side = self.ambient.hi[k] - self.ambient.lo[k];
                (0..u).map(|r| b.get(r, k) * side).collect()
            })
            .collect();
        (center, edges)
    }

    /// Separating-axis test for two parallelotopes; touching boundaries
    /// count as separated.
    fn images_separated(&self, i: usize, j: usize) -> bool {
        let (ci, ei) = self.image(i);
        let (cj, ej) = self.image(j);
        let u = self.dim();
        let mut axes: Vec<Vec<f64>> = Vec::new();
        match u {
            1 => axes.push(vec![1.0]),
            2 => {
                for e in ei.iter().chain(&ej) {
                    axes.push(vec![-e[1], e[0]]);
                }
            }
            _ => {
                let cross = |a: &[f64], b: &[f64]| {
                    vec![
                        a[1] * b[2] - a[2] * b[1],
                        a[2] * b[0] - a[0] * b[2],
                        a[0] * b[1] - a[1] * b[0],
                    ]
                };
                for es in [&ei, &ej] {
                    for p in 0..3 {
                        for q in p + 1..3 {
                            axes.push(cross(&es[p], &es[q]));
                        }
                    }
                }
                for a in &ei {
                    for b in &ej {
                        axes.push(cross(a, b));
                    }
                }
            }
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        axes.iter().any(|ax| {
            let norm = dot(ax, ax).sqrt();
            if norm < 1e-300 {
                return false;
            }
            let ri: f64 = ei.iter().map(|e| dot(e, ax).abs()).sum::<f64>() / 2.0;
            let rj: f64 = ej.iter().map(|e| dot(e, ax).abs()).sum::<f64>() / 2.0;
            let gap = (dot(&ci, ax) - dot(&cj, ax)).abs() - ri - rj;
            gap >= -GEOM_TOL * norm
        })
    }
}

/// Names of the built-in models.
pub const BUILTIN_NAMES: [&str; 4] = ["cantor3", "golden3", "baker34", "scalar23"];

pub fn builtin_models() -> Vec<AffineModel> {
    BUILTIN_NAMES.iter().map(|n| builtin(n).unwrap()).collect()
}

/// A built-in model by name.
pub fn builtin(name: &str) -> Option<AffineModel> {
    let third = EpsGrid {
        base: 1.0 / 3.0,
        count: 10,
    };
    let m = match name {
        "cantor3" => AffineModel::new(
            name,
            Subshift::full(2).ok()?,
            MatrixCocycle::scalar(&[1.0 / 3.0, 1.0 / 3.0]).ok()?,
            vec![vec![0.0], vec![2.0 / 3.0]],
            AmbientBox::unit(1),
            third,
            14,
        ),
        "golden3" => AffineModel::new(
            name,
            Subshift::golden_mean(),
            MatrixCocycle::scalar(&[1.0 / 3.0, 1.0 / 3.0]).ok()?,
            vec![vec![0.0], vec![2.0 / 3.0]],
            AmbientBox::unit(1),
            third,
            14,
        ),
        "baker34" => AffineModel::new(
            name,
            Subshift::full(4).ok()?,
            MatrixCocycle::constant(SmallMat::diag(&[1.0 / 3.0, 0.25]), 4).ok()?,
            vec![
                vec![0.0, 0.0],
                vec![2.0 / 3.0, 0.0],
                vec![0.0, 0.75],
                vec![2.0 / 3.0, 0.75],
            ],
            AmbientBox::unit(2),
            EpsGrid {
                base: 0.25,
                count: 6,
            },
            8,
        ),
        "scalar23" => AffineModel::new(
            name,
            Subshift::full(2).ok()?,
            MatrixCocycle::scalar(&[0.5, 1.0 / 3.0]).ok()?,
            vec![vec![0.0], vec![2.0 / 3.0]],
            AmbientBox::unit(1),
            third,
            14,
        ),
        _ => return None,
    };
    m.ok()
}

/// One cylinder of a fixed-depth cover: `exp(log_count)` balls of radius
/// `exp(log_radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverCell {
    pub word: Word,
    pub log_count: f64,
    pub log_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderCover {
    pub cells: Vec<CoverCell>,
    pub total_log_count: f64,
}

impl CylinderCover {
    /// `log Σ count` over cells of radius at most `eps`.
    pub fn log_count_at(&self, eps: f64) -> f64 {
        let mut acc = crate::exec::LogSumExp::new();
        let le = eps.ln();
        for c in &self.cells {
            if c.log_radius <= le + GEOM_TOL {
                acc.add(c.log_count);
            }
        }
        acc.value()
    }
}

/// Per-symbol `log G` and `log H` as depth-1 potentials.
pub fn gh_potentials(m: &AffineModel, k: usize) -> Result<(Potential, Potential)> {
    let l = m.subshift.alphabet_size();
    let mut g = Vec::with_capacity(l);
    let mut h = Vec::with_capacity(l);
    for i in 0..l as u8 {
        let (gi, hi) = gh_weights(&m.cocycle, i, k)?;
        g.push(gi.ln());
        h.push(hi.ln());
    }
    Ok((
        Potential::from_symbol_values(&m.subshift, &g)?,
        Potential::from_symbol_values(&m.subshift, &h)?,
    ))
}

/// Cover of every depth-`n` cylinder by `Π G(w_p)` balls of radius
/// `Π H(w_p)`.
pub fn cylinder_cover(m: &AffineModel, n: usize, k: usize) -> Result<CylinderCover> {
    let (g, h) = gh_potentials(m, k)?;
    let words = m.subshift.enumerate_words(n)?;
    let mut acc = crate::exec::LogSumExp::new();
    let cells: Vec<CoverCell> = words
        .into_iter()
        .map(|w| {
            let log_count = g.sup_unchecked(&m.subshift, w.symbols(), &Side::TwoSided);
            let log_radius = h.sup_unchecked(&m.subshift, w.symbols(), &Side::TwoSided);
            acc.add(log_count);
            CoverCell {
                word: w,
                log_count,
                log_radius,
            }
        })
        .collect();
    Ok(CylinderCover {
        cells,
        total_log_count: acc.value(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMethod {
    Grid,
    CylinderCover,
}

impl CountMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CountMethod::Grid => "grid",
            CountMethod::CylinderCover => "cylinder_cover",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxCountReport {
    pub eps_grid: Vec<f64>,
    /// `N(ε)`; integers for grid counts, sums of ball counts for covers.
    pub counts: Vec<f64>,
    pub slope: f64,
    pub method: CountMethod,
    /// Number of representative points or cover cylinders at the finest
    /// scale.
    pub samples: u64,
    /// Longest word used.
    pub max_depth: usize,
}

/// Least-squares slope of `log N` against `log(1/ε)` on the finest
/// `⌈len/2⌉` scales.
pub fn fit_slope(eps: &[f64], counts: &[f64]) -> f64 {
    let n = eps.len();
    if n == 0 {
        return 0.0;
    }
    let take = n.div_ceil(2);
    let pts: Vec<(f64, f64)> = eps[n - take..]
        .iter()
        .zip(&counts[n - take..])
        .map(|(e, c)| ((1.0 / e).ln(), c.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn check_eps(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::InvalidArgument(
            "eps grid must be nonempty, positive and decreasing".into(),
        ));
    }
    Ok(())
}

/// Composite map `T_{w_0} ∘ ⋯ ∘ T_{w_{n-1}}` as `(A, t)`.
#[derive(Clone)]
struct Branch {
    a: SmallMat,
    t: Vec<f64>,
}

impl Branch {
    fn then(&self, m: &AffineModel, i: u8) -> Branch {
        let shift = self.a.mul_vec(&m.offsets[i as usize]);
        Branch {
            a: self.a.mul(m.cocycle.matrix(i)),
            t: self.t.iter().zip(shift).map(|(x, y)| x + y).collect(),
        }
    }

    fn diameter_bound(&self, m: &AffineModel) -> f64 {
        self.a.singular_values()[0] * m.ambient.diameter()
    }

    fn point(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .mul_vec(x)
            .iter()
            .zip(&self.t)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Representative points: the image of the box center under every
/// cylinder of length at least `depth`, refined until its diameter is at
/// most `target`.
fn representative_points(
    m: &AffineModel,
    depth: usize,
    target: f64,
    point_cap: usize,
    exec: Exec,
) -> Result<(Vec<Vec<f64>>, usize)> {
    let u = m.dim();
    let root = Branch {
        a: SmallMat::identity(u),
        t: vec![0.0; u],
    };
    let center = m.ambient.center();
    // split by first symbol (and second for small alphabets) for parallelism
    let split = m.subshift.chunk_prefixes(depth.max(1));
    let parts = exec.map(&split, |prefix| -> Result<(Vec<Vec<f64>>, usize)> {
        let mut b = root.clone();
        for &s in prefix {
            b = b.then(m, s);
        }
        let mut pts = Vec::new();
        let mut deepest = 0;
        let mut buf = prefix.clone();
        refine(m, &mut buf, &b, depth, target, &center, point_cap, &mut pts, &mut deepest)?;
        Ok((pts, deepest))
    });
    let mut all = Vec::new();
    let mut deepest = 0;
    for p in parts {
        let (pts, d) = p?;
        all.extend(pts);
        deepest = deepest.max(d);
        if all.len() > point_cap {
            return Err(Error::CapExceeded {
                what: "box-count points",
                requested: all.len(),
                cap: point_cap,
            });
        }
    }
    Ok((all, deepest))
}

#[allow(clippy::too_many_arguments)]
fn refine(
    m: &AffineModel,
    buf: &mut Vec<u8>,
    b: &Branch,
    depth: usize,
    target: f64,
    center: &[f64],
    cap: usize,
    out: &mut Vec<Vec<f64>>,
    deepest: &mut usize,
) -> Result<()> {
    if buf.len() >= depth && b.diameter_bound(m) <= target {
        out.push(b.point(center));
        *deepest = (*deepest).max(buf.len());
        if out.len() > cap {
            return Err(Error::CapExceeded {
                what: "box-count points",
                requested: out.len(),
                cap,
            });
        }
        return Ok(());
    }
    if buf.len() >= MAX_REFINE_DEPTH {
        return Err(Error::CapExceeded {
            what: "box-count depth",
            requested: buf.len() + 1,
            cap: MAX_REFINE_DEPTH,
        });
    }
    let next: Vec<u8> = m.subshift.extensions(buf).collect();
    for s in next {
        let child = b.then(m, s);
        buf.push(s);
        let r = refine(m, buf, &child, depth, target, center, cap, out, deepest);
        buf.pop();
        r?;
    }
    Ok(())
}

/// Number of half-open `ε`-grid boxes (anchored at the ambient lower
/// corner) containing at least one point.
fn occupied_boxes(points: &[Vec<f64>], lo: &[f64], eps: f64) -> u64 {
    let mut keys: Vec<[i64; 3]> = points
        .iter()
        .map(|p| {
            let mut k = [0i64; 3];
            for (i, (&x, &o)) in p.iter().zip(lo).enumerate() {
                k[i] = ((x - o) / eps).floor() as i64;
            }
            k
        })
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len() as u64
}

/// Grid box counting of the attractor. `depth` is the minimum word length
/// of the representative points; cylinders are refined further until their
/// diameter is at most a quarter of the finest scale.
pub fn box_count(m: &AffineModel, depth: usize, eps_grid: &[f64]) -> Result<BoxCountReport> {
    box_count_with(m, depth, eps_grid, DEFAULT_POINT_CAP, Exec::default())
}

pub fn box_count_with(
    m: &AffineModel,
    depth: usize,
    eps_grid: &[f64],
    point_cap: usize,
    exec: Exec,
) -> Result<BoxCountReport> {
    check_eps(eps_grid)?;
    let finest = *eps_grid.last().unwrap();
    let (points, max_depth) = representative_points(m, depth, finest / 4.0, point_cap, exec)?;
    let counts: Vec<f64> = exec
        .map(eps_grid, |&e| occupied_boxes(&points, &m.ambient.lo, e))
        .into_iter()
        .map(|c| c as f64)
        .collect();
    Ok(BoxCountReport {
        slope: fit_slope(eps_grid, &counts),
        eps_grid: eps_grid.to_vec(),
        counts,
        method: CountMethod::Grid,
        samples: points.len() as u64,
        max_depth,
    })
}

/// Cover counts `N_cover(ε) = Σ_{I ∈ 𝒜_ε} Π G(I_p)` where `𝒜_ε` is the
/// stopping family of `log H` at scale `ε`: each cylinder is covered by its
/// `G`-count of balls of radius `Π H(I_p) < ε`.
pub fn cover_counts(m: &AffineModel, k: usize, eps_grid: &[f64]) -> Result<BoxCountReport> {
    cover_counts_with(m, k, eps_grid, Exec::default())
}

pub fn cover_counts_with(
    m: &AffineModel,
    k: usize,
    eps_grid: &[f64],
    exec: Exec,
) -> Result<BoxCountReport> {
    check_eps(eps_grid)?;
    let (g, h) = gh_potentials(m, k)?;
    let r0 = h.max_value().exp();
    let sub = &m.subshift;
    let mut counts = Vec::with_capacity(eps_grid.len());
    let mut samples = 0;
    let mut max_depth = 0;
    for &eps in eps_grid {
        let (log_n, n, d) = if eps >= r0 {
            // every single-symbol cylinder is already small enough
            let mut acc = crate::exec::LogSumExp::new();
            for i in 0..sub.alphabet_size() as u8 {
                acc.add(g.value(&[i]));
            }
            (acc.value(), sub.alphabet_size() as u64, 1)
        } else {
            fold_family(
                sub,
                &h,
                eps,
                exec,
                || (crate::exec::LogSumExp::new(), 0u64, 0usize),
                |acc, w, _| {
                    acc.0.add(g.sup_unchecked(sub, w, &Side::TwoSided));
                    acc.1 += 1;
                    acc.2 = acc.2.max(w.len());
                },
                |a, b| {
                    a.0.merge(&b.0);
                    a.1 += b.1;
                    a.2 = a.2.max(b.2);
                },
            )
            .map(|(a, n, d)| (a.value(), n, d))?
        };
        counts.push(log_n.exp());
        samples = n;
        max_depth = max_depth.max(d);
    }
    Ok(BoxCountReport {
        slope: fit_slope(eps_grid, &counts),
        eps_grid: eps_grid.to_vec(),
        counts,
        method: CountMethod::CylinderCover,
        samples,
        max_depth,
    })
}

/// Root, grid slope and cover slope side by side.
#[derive(Debug, Clone)]
pub struct DimComparison {
    pub root: RootResult,
    pub doubling: DoublingRoots,
    pub grid: BoxCountReport,
    pub cover: BoxCountReport,
    pub grid_slope: f64,
    pub cover_slope: f64,
    /// `max_ε N_grid(ε) / N_cover(ε)`.
    pub cover_constant: f64,
    /// `grid_slope <= root + 0.05`.
    pub bound_ok: bool,
}

/// Doubling levels used by [`dim_compare`].
pub const COMPARE_LEVELS: usize = 3;
pub const BOUND_SLACK: f64 = 0.05;

pub fn dim_compare(m: &AffineModel) -> Result<DimComparison> {
    dim_compare_with(m, DoublingLimits::default())
}

pub fn dim_compare_with(m: &AffineModel, limits: DoublingLimits) -> Result<DimComparison> {
    let doubling =
        doubling_roots_with(&m.subshift, &m.cocycle, COMPARE_LEVELS, limits, DOUBLING_TOL)?;
    let root = doubling.t_star;
    let k = doubling.rerun.as_ref().map(|r| r.k).unwrap_or(doubling.k);
    let eps = m.eps.scales();
    let grid = box_count(m, m.depth, &eps)?;
    let cover = cover_counts(m, k, &eps)?;
    let cover_constant = grid
        .counts
        .iter()
        .zip(&cover.counts)
        .map(|(a, b)| a / b)
        .fold(0.0, f64::max);
    Ok(DimComparison {
        grid_slope: grid.slope,
        cover_slope: cover.slope,
        bound_ok: grid.slope <= root.root + BOUND_SLACK,
        root,
        doubling,
        grid,
        cover,
        cover_constant,
    })
}
