//! Stopping families: prefix-free covers of the future by words whose
//! weight `sup e^{S_n h}` has just dropped below a scale `r`.
//!
//! Families are traversed depth first in lexicographic order. Large
//! families never need to be stored: sums over them are streamed, with the
//! tree split into independent subtrees at a shallow level.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::exec::{Exec, LogSumExp};
use crate::potential::{Potential, Side};
use crate::sft::{Subshift, Word};

/// Extra length allowed beyond the `log(1/r)/a_1` bound before giving up.
const LENGTH_SLACK: usize = 16;
/// Minimum number of independent subtrees for a parallel traversal.
const MIN_TASKS: usize = 64;

/// The scales and constants of a negative potential `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopBounds {
    /// `min(-h)`.
    pub a1: f64,
    /// `max(-h)`.
    pub a2: f64,
    /// `max e^{h}`; valid scales lie in `(0, r0)`.
    pub r0: f64,
}

impl StopBounds {
    pub fn of(h: &Potential) -> Result<Self> {
        let hmax = h.max_value();
        if hmax >= 0.0 || hmax.is_nan() {
            return Err(Error::NonNegativeH(hmax));
        }
        Ok(Self {
            a1: -hmax,
            a2: -h.min_value(),
            r0: hmax.exp(),
        })
    }

    /// `a` in `a·log(1/r) <= m(r)`.
    pub fn a(&self) -> f64 {
        1.0 / self.a2
    }

    /// `b` in `M(r) <= b·log(1/r)`, valid for all `r < r0`.
    pub fn b(&self) -> f64 {
        1.0 / self.a1 + 1.0 / (1.0 / self.r0).ln()
    }

    /// Longest word the traversal will build at scale `r`.
    pub fn max_len(&self, r: f64) -> usize {
        ((1.0 / r).ln() / self.a1).floor() as usize + 1 + LENGTH_SLACK
    }
}

/// Membership rule shared by construction, streaming and audit.
#[derive(Debug, Clone)]
struct StopRule<'a> {
    sub: &'a Subshift,
    h: &'a Potential,
    threshold: f64,
    max_len: usize,
}

impl<'a> StopRule<'a> {
    fn new(sub: &'a Subshift, h: &'a Potential, r: f64) -> Result<Self> {
        if h.alphabet_size() != sub.alphabet_size() {
            return Err(Error::InvalidPotential(
                "potential and subshift alphabets differ".into(),
            ));
        }
        let b = StopBounds::of(h)?;
        if !(r > 0.0 && r < b.r0) {
            return Err(Error::ROutOfRange { r, r0: b.r0 });
        }
        let log_r = r.ln();
        // sums equal to log r up to rounding count as ties and keep extending
        let tol = 1e-12 * log_r.abs().max(1.0);
        Ok(Self {
            sub,
            h,
            threshold: log_r - tol,
            max_len: b.max_len(r),
        })
    }

    fn sup(&self, w: &[u8], parent: f64) -> f64 {
        if self.h.depth() == 1 {
            parent + self.h.value(&w[w.len() - 1..])
        } else {
            self.h.sup_unchecked(self.sub, w, &Side::TwoSided)
        }
    }

    fn stops(&self, sup: f64) -> bool {
        sup < self.threshold
    }

    fn cap_error(&self) -> Error {
        Error::CapExceeded {
            what: "stopping word length",
            requested: self.max_len + 1,
            cap: self.max_len,
        }
    }

    /// Depth-first walk below `prefix` (whose sup is `sup`), calling `f` on
    /// every member in lexicographic order.
    fn walk(
        &self,
        buf: &mut Vec<u8>,
        sup: f64,
        f: &mut dyn FnMut(&[u8], f64),
    ) -> Result<()> {
        if buf.len() >= self.max_len {
            return Err(self.cap_error());
        }
        let next: Vec<u8> = self.sub.extensions(buf).collect();
        for a in next {
            buf.push(a);
            let s = self.sup(buf, sup);
            let r = if self.stops(s) {
                f(buf, s);
                Ok(())
            } else {
                self.walk(buf, s, f)
            };
            buf.pop();
            r?;
        }
        Ok(())
    }

    /// Split the tree into ordered tasks: members found above the split
    /// depth, and subtrees rooted at the split depth.
    fn tasks(&self, depth: usize) -> Vec<Task> {
        let mut out = Vec::new();
        self.split(&mut Vec::new(), 0.0, depth, &mut out);
        out
    }

    fn split(&self, buf: &mut Vec<u8>, sup: f64, depth: usize, out: &mut Vec<Task>) {
        let next: Vec<u8> = self.sub.extensions(buf).collect();
        for a in next {
            buf.push(a);
            let s = self.sup(buf, sup);
            if self.stops(s) {
                out.push(Task::Member(buf.clone(), s));
            } else if buf.len() >= depth || buf.len() >= self.max_len {
                out.push(Task::Subtree(buf.clone(), s));
            } else {
                self.split(buf, s, depth, out);
            }
            buf.pop();
        }
    }

    fn split_depth(&self) -> usize {
        let l = self.sub.alphabet_size().max(2);
        let mut d = 1;
        let mut n = l;
        while n < MIN_TASKS {
            d += 1;
            n *= l;
        }
        d
    }

    /// Fold over all members, one accumulator per task, merged in order.
    fn fold<A, I, F, M>(&self, exec: Exec, init: I, visit: F, mut merge: M) -> Result<A>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, &[u8], f64) + Sync,
        M: FnMut(&mut A, A),
    {
        let tasks = self.tasks(self.split_depth());
        let parts = exec.map(&tasks, |t| -> Result<A> {
            let mut acc = init();
            match t {
                Task::Member(w, s) => visit(&mut acc, w, *s),
                Task::Subtree(w, s) => {
                    let mut buf = w.clone();
                    self.walk(&mut buf, *s, &mut |m, sm| visit(&mut acc, m, sm))?;
                }
            }
            Ok(acc)
        });
        let mut total = init();
        for p in parts {
            merge(&mut total, p?);
        }
        Ok(total)
    }
}

#[derive(Debug, Clone)]
enum Task {
    Member(Vec<u8>, f64),
    Subtree(Vec<u8>, f64),
}

/// A stopping family `𝒜_r` for a negative potential.
#[derive(Debug, Clone)]
pub struct StoppingFamily {
    pub r: f64,
    pub words: Vec<Word>,
    pub h: Potential,
    pub m_r: usize,
    pub big_m_r: usize,
}

impl StoppingFamily {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Build `𝒜_r`: a word is a member when `sup_{[w]} S_{|w|} h < log r` while
/// its parent's sup is still `>= log r` (ties extend).
pub fn build_stopping_family(sub: &Subshift, h: &Potential, r: f64) -> Result<StoppingFamily> {
    build_stopping_family_with(sub, h, r, Exec::default())
}

pub fn build_stopping_family_with(
    sub: &Subshift,
    h: &Potential,
    r: f64,
    exec: Exec,
) -> Result<StoppingFamily> {
    let rule = StopRule::new(sub, h, r)?;
    let words = rule.fold(
        exec,
        Vec::new,
        |acc: &mut Vec<Word>, w, _| acc.push(Word::new(w.to_vec())),
        |a, b| a.extend(b),
    )?;
    let m_r = words.iter().map(Word::len).min().unwrap_or(0);
    let big_m_r = words.iter().map(Word::len).max().unwrap_or(0);
    Ok(StoppingFamily {
        r,
        words,
        h: h.clone(),
        m_r,
        big_m_r,
    })
}

/// Outcome of auditing a family against its defining invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyAudit {
    pub prefix_free: bool,
    pub exact_cover: bool,
    pub membership: bool,
    pub m_r: usize,
    pub big_m_r: usize,
    pub a: f64,
    pub b: f64,
    pub bounds_ok: bool,
}

impl FamilyAudit {
    pub fn passed(&self) -> bool {
        self.prefix_free && self.exact_cover && self.membership && self.bounds_ok
    }
}

/// Check prefix-freeness, exact cover, the stopping inequalities and the
/// length window `a·log(1/r) <= m(r) <= M(r) <= b·log(1/r)`.
pub fn audit_family(sub: &Subshift, fam: &StoppingFamily) -> FamilyAudit {
    let m_r = fam.words.iter().map(Word::len).min().unwrap_or(0);
    let big_m_r = fam.words.iter().map(Word::len).max().unwrap_or(0);
    let mut sorted: Vec<&Word> = fam.words.iter().collect();
    sorted.sort();
    // in lexicographic order a prefix is immediately followed by its extensions
    let prefix_free = sorted.windows(2).all(|p| !p[0].is_prefix_of(p[1]));
    let set: HashSet<&[u8]> = fam.words.iter().map(|w| w.symbols()).collect();
    let admissible = fam.words.iter().all(|w| !w.is_empty() && sub.is_admissible(w.symbols()));
    let exact_cover =
        prefix_free && admissible && covers(sub, &set, &mut Vec::new(), big_m_r);
    let (membership, a, b, bounds_ok) = match (StopBounds::of(&fam.h), StopRule::new(sub, &fam.h, fam.r)) {
        (Ok(bd), Ok(rule)) => {
            let membership = fam.words.iter().all(|w| {
                let s = w.symbols();
                let own = fam.h.sup_unchecked(sub, s, &Side::TwoSided);
                let parent = if s.len() == 1 {
                    0.0
                } else {
                    fam.h.sup_unchecked(sub, &s[..s.len() - 1], &Side::TwoSided)
                };
                rule.stops(own) && !rule.stops(parent)
            });
            let lr = (1.0 / fam.r).ln();
            let ok = bd.a() * lr <= m_r as f64 + 1e-9 && big_m_r as f64 <= bd.b() * lr + 1e-9;
            (membership, bd.a(), bd.b(), ok && !fam.words.is_empty())
        }
        _ => (false, f64::NAN, f64::NAN, false),
    };
    FamilyAudit {
        prefix_free,
        exact_cover,
        membership,
        m_r,
        big_m_r,
        a,
        b,
        bounds_ok,
    }
}

/// Every admissible extension of `buf` to length `depth` has a prefix in
/// `set` (checked on the word tree instead of enumerating length `depth`).
fn covers(sub: &Subshift, set: &HashSet<&[u8]>, buf: &mut Vec<u8>, depth: usize) -> bool {
    if !buf.is_empty() && set.contains(buf.as_slice()) {
        return true;
    }
    if buf.len() >= depth {
        return false;
    }
    let next: Vec<u8> = sub.extensions(buf).collect();
    for a in next {
        buf.push(a);
        let ok = covers(sub, set, buf, depth);
        buf.pop();
        if !ok {
            return false;
        }
    }
    true
}

/// `(log Γ_r, log Θ_r)`: log-sums over the family of
/// `sup e^{S_{|I|}(g + t h)}` and `sup e^{S_{|I|} g}`.
pub fn gamma_theta(
    sub: &Subshift,
    fam: &StoppingFamily,
    g: &Potential,
    t: f64,
) -> Result<(f64, f64)> {
    let gt = g.lin_comb(sub, 1.0, &fam.h, t)?;
    let mut gamma = LogSumExp::new();
    let mut theta = LogSumExp::new();
    for w in &fam.words {
        gamma.add(gt.birkhoff_sup(sub, w.symbols())?);
        theta.add(g.birkhoff_sup(sub, w.symbols())?);
    }
    Ok((gamma.value(), theta.value()))
}

/// Streaming summary of a family at one scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeRow {
    pub r: f64,
    pub count: u64,
    pub m_r: usize,
    pub big_m_r: usize,
    pub log_gamma: f64,
    pub log_theta: f64,
    /// `log Θ_r / log(1/r)`.
    pub theta_slope: f64,
    /// `log Γ_r / log(1/r)`.
    pub gamma_slope: f64,
}

#[derive(Debug, Clone)]
pub struct SlopeProbe {
    pub rows: Vec<SlopeRow>,
    /// Two-point extrapolation of the Θ slope, one per consecutive pair,
    /// assuming an error of order `1/log(1/r)`.
    pub theta_extrapolated: Vec<f64>,
    pub gamma_extrapolated: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct RowAcc {
    count: u64,
    m: usize,
    big_m: usize,
    gamma: LogSumExp,
    theta: LogSumExp,
}

impl RowAcc {
    fn new() -> Self {
        Self {
            count: 0,
            m: usize::MAX,
            big_m: 0,
            gamma: LogSumExp::new(),
            theta: LogSumExp::new(),
        }
    }

    fn merge(&mut self, o: RowAcc) {
        self.count += o.count;
        self.m = self.m.min(o.m);
        self.big_m = self.big_m.max(o.big_m);
        self.gamma.merge(&o.gamma);
        self.theta.merge(&o.theta);
    }
}

/// Θ and Γ slopes over a grid of scales, streamed without storing the
/// families.
pub fn slope_probe(
    sub: &Subshift,
    g: &Potential,
    h: &Potential,
    t: f64,
    r_grid: &[f64],
) -> Result<SlopeProbe> {
    slope_probe_with(sub, g, h, t, r_grid, Exec::default())
}

pub fn slope_probe_with(
    sub: &Subshift,
    g: &Potential,
    h: &Potential,
    t: f64,
    r_grid: &[f64],
    exec: Exec,
) -> Result<SlopeProbe> {
    if r_grid.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::InvalidArgument("r grid must be decreasing".into()));
    }
    let mut rows = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let acc = stream_sums(sub, g, h, t, r, exec)?;
        let lr = (1.0 / r).ln();
        rows.push(SlopeRow {
            r,
            count: acc.count,
            m_r: acc.m,
            big_m_r: acc.big_m,
            log_gamma: acc.gamma.value(),
            log_theta: acc.theta.value(),
            theta_slope: acc.theta.value() / lr,
            gamma_slope: acc.gamma.value() / lr,
        });
    }
    let extrap = |f: fn(&SlopeRow) -> f64| -> Vec<f64> {
        rows.windows(2)
            .map(|p| {
                let (x0, x1) = (1.0 / (1.0 / p[0].r).ln(), 1.0 / (1.0 / p[1].r).ln());
                (x0 * f(&p[1]) - x1 * f(&p[0])) / (x0 - x1)
            })
            .collect()
    };
    Ok(SlopeProbe {
        theta_extrapolated: extrap(|r| r.theta_slope),
        gamma_extrapolated: extrap(|r| r.gamma_slope),
        rows,
    })
}

fn stream_sums(
    sub: &Subshift,
    g: &Potential,
    h: &Potential,
    t: f64,
    r: f64,
    exec: Exec,
) -> Result<RowAcc> {
    let rule = StopRule::new(sub, h, r)?;
    let gt = g.lin_comb(sub, 1.0, h, t)?;
    rule.fold(
        exec,
        RowAcc::new,
        |acc, w, _| {
            acc.count += 1;
            acc.m = acc.m.min(w.len());
            acc.big_m = acc.big_m.max(w.len());
            acc.gamma.add(gt.sup_unchecked(sub, w, &Side::TwoSided));
            acc.theta.add(g.sup_unchecked(sub, w, &Side::TwoSided));
        },
        |a, b| a.merge(b),
    )
}

/// Geometric grid `start, start·ratio, ...` of `count` scales.
pub fn geometric_grid(start: f64, ratio: f64, count: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "geometric grid needs start > 0 and ratio in (0,1), got {start}, {ratio}"
        )));
    }
    Ok((0..count).map(|i| start * ratio.powi(i as i32)).collect())
}

/// Per-length log-weights of `φ` over the stopping family of `h` at `r`.
pub fn length_profile(
    sub: &Subshift,
    h: &Potential,
    r: f64,
    phi: &Potential,
) -> Result<BTreeMap<usize, f64>> {
    let rule = StopRule::new(sub, h, r)?;
    let prof = rule.fold(
        Exec::default(),
        BTreeMap::<usize, LogSumExp>::new,
        |acc, w, _| {
            acc.entry(w.len())
                .or_insert_with(LogSumExp::new)
                .add(phi.sup_unchecked(sub, w, &Side::TwoSided))
        },
        |a, b| {
            for (k, v) in b {
                a.entry(k).or_insert_with(LogSumExp::new).merge(&v);
            }
        },
    )?;
    Ok(prof.into_iter().map(|(k, v)| (k, v.value())).collect())
}

/// Streaming visit of every member of `𝒜_r` with its `sup S_n h`; used for
/// covers too large to store.
pub fn fold_family<A, I, F, M>(
    sub: &Subshift,
    h: &Potential,
    r: f64,
    exec: Exec,
    init: I,
    visit: F,
    merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &[u8], f64) + Sync,
    M: FnMut(&mut A, A),
{
    StopRule::new(sub, h, r)?.fold(exec, init, visit, merge)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_h() -> (Subshift, Potential) {
        let g = Subshift::golden_mean();
        let h = Potential::from_symbol_values(&g, &[-2f64.ln(), -3f64.ln()]).unwrap();
        (g, h)
    }

    fn words(f: &StoppingFamily) -> Vec<String> {
        f.words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn constant_h_gives_uniform_family() {
        let full = Subshift::full(2).unwrap();
        let h = Potential::constant(&full, -2f64.ln()).unwrap();
        let f = build_stopping_family(&full, &h, 0.3).unwrap();
        assert_eq!(words(&f), ["00", "01", "10", "11"]);
        assert_eq!((f.m_r, f.big_m_r), (2, 2));
        let a = audit_family(&full, &f);
        assert!(a.passed(), "{a:?}");
        assert!((a.a - 1.0 / 2f64.ln()).abs() < 1e-15);
        assert!(a.a * (1.0f64 / 0.3).ln() <= 2.0);
    }

    #[test]
    fn golden_family_matches_hand_enumeration() {
        let (g, h) = golden_h();
        let f = build_stopping_family(&g, &h, 0.2).unwrap();
        assert_eq!(words(&f), ["000", "001", "01", "10"]);
        assert_eq!((f.m_r, f.big_m_r), (2, 3));
        let a = audit_family(&g, &f);
        assert!(a.prefix_free && a.exact_cover && a.membership && a.bounds_ok);
    }

    #[test]
    fn corrupted_family_fails_cover() {
        let (g, h) = golden_h();
        let mut f = build_stopping_family(&g, &h, 0.2).unwrap();
        f.words.remove(1);
        let a = audit_family(&g, &f);
        assert!(a.prefix_free && !a.exact_cover);
        let mut f = build_stopping_family(&g, &h, 0.2).unwrap();
        f.words.push("0".parse().unwrap());
        assert!(!audit_family(&g, &f).prefix_free);
    }

    #[test]
    fn scale_range_and_sign_errors() {
        let (g, h) = golden_h();
        assert!(matches!(build_stopping_family(&g, &h, 0.5), Err(Error::ROutOfRange { .. })));
        assert!(matches!(build_stopping_family(&g, &h, 0.0), Err(Error::ROutOfRange { .. })));
        let bad = Potential::from_symbol_values(&g, &[0.0, -1.0]).unwrap();
        assert!(matches!(build_stopping_family(&g, &bad, 0.1), Err(Error::NonNegativeH(_))));
    }

    #[test]
    fn exact_ties_extend() {
        let full = Subshift::full(2).unwrap();
        let h = Potential::constant(&full, -2f64.ln()).unwrap();
        let f = build_stopping_family(&full, &h, 0.25).unwrap();
        assert_eq!(f.m_r, 3);
        let f = build_stopping_family(&full, &h, 0.25 * (1.0 + 1e-9)).unwrap();
        assert_eq!(f.m_r, 2);
    }

    #[test]
    fn gamma_theta_examples() {
        let full = Subshift::full(2).unwrap();
        let h = Potential::constant(&full, -2f64.ln()).unwrap();
        let g = Potential::constant(&full, 0.0).unwrap();
        let f = build_stopping_family(&full, &h, 0.3).unwrap();
        let (lg, lt) = gamma_theta(&full, &f, &g, 1.0).unwrap();
        assert!(lg.abs() < 1e-14);
        assert!((lt - 4f64.ln()).abs() < 1e-14);
        let (lg, lt) = gamma_theta(&full, &f, &g, 0.0).unwrap();
        assert_eq!(lg, lt);
    }

    #[test]
    fn streaming_matches_stored_family() {
        let (g, h) = golden_h();
        let zero = Potential::constant(&g, 0.0).unwrap();
        let r = 2f64.powi(-10);
        let f = build_stopping_family(&g, &h, r).unwrap();
        let (lg, lt) = gamma_theta(&g, &f, &zero, 0.6).unwrap();
        for exec in [Exec::Sequential, Exec::Parallel] {
            let p = slope_probe_with(&g, &zero, &h, 0.6, &[r], exec).unwrap();
            let row = p.rows[0];
            assert_eq!(row.count, f.len() as u64);
            assert!((row.log_gamma - lg).abs() < 1e-12);
            assert!((row.log_theta - lt).abs() < 1e-12);
            assert_eq!((row.m_r, row.big_m_r), (f.m_r, f.big_m_r));
        }
        let seq = build_stopping_family_with(&g, &h, r, Exec::Sequential).unwrap();
        assert_eq!(seq.words, f.words);
    }

    #[test]
    fn uniform_slopes() {
        let full = Subshift::full(2).unwrap();
        let zero = Potential::constant(&full, 0.0).unwrap();
        let h2 = Potential::constant(&full, -2f64.ln()).unwrap();
        let r = 2f64.powi(-16) * (1.0 + 1e-9);
        let p = slope_probe(&full, &zero, &h2, 1.0, &[r]).unwrap();
        assert!((p.rows[0].theta_slope - 1.0).abs() < 1e-9);
        assert_eq!(p.rows[0].big_m_r, 16);
        let h3 = Potential::constant(&full, -3f64.ln()).unwrap();
        let r = 3f64.powi(-12) * (1.0 + 1e-9);
        let p = slope_probe(&full, &zero, &h3, 0.5, &[r]).unwrap();
        assert!((p.rows[0].theta_slope - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn extrapolation_is_exact_for_inverse_log_error() {
        let full = Subshift::full(2).unwrap();
        let zero = Potential::constant(&full, 0.0).unwrap();
        let h = Potential::constant(&full, -2f64.ln()).unwrap();
        let grid = geometric_grid(0.3, 0.5, 4).unwrap();
        let p = slope_probe(&full, &zero, &h, 1.0, &grid).unwrap();
        assert_eq!(p.theta_extrapolated.len(), 3);
        assert!(p.rows.windows(2).all(|w| w[1].count >= w[0].count));
    }

    #[test]
    fn deeper_h_families_are_audited() {
        let g = Subshift::golden_mean();
        let h = Potential::from_table(
            &g,
            2,
            0,
            &[(vec![0, 0], -0.5), (vec![0, 1], -1.5), (vec![1, 0], -0.9)],
        )
        .unwrap();
        for r in [0.3, 0.05, 0.001] {
            let f = build_stopping_family(&g, &h, r).unwrap();
            assert!(audit_family(&g, &f).passed());
        }
    }
}
