//! Pressure of additive and sub-additive potentials on subshifts.
//!
//! All pressures here are symbolic: separated sets and Bowen balls are
//! replaced by cylinders, one symbol of refinement per level. Word sums are
//! accumulated in log space; spectral estimates come from the Perron root
//! of a weighted transition graph.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cocycle::{log_gh_from_log_sv, log_svf, log_svf_from_log_sv, MatrixCocycle, SvParams};
use crate::error::{Error, Result};
use crate::exec::{Exec, LogSumExp};
use crate::linalg::{LogEdgeMatrix, ScaledMat};
use crate::potential::{Potential, Side};
use crate::sft::Subshift;
use crate::stopping;

/// Default number of sampled pasts for fixed-past sums.
pub const DEFAULT_PAST_TRIALS: usize = 16;
/// Seed for the past sampler; fixed so runs are reproducible.
pub const DEFAULT_PAST_SEED: u64 = 0x5eed_b0e7;
/// Default cap on the doubling level ℓ.
pub const DEFAULT_LEVEL_CAP: usize = 5;
/// Default cap on the number of distinct block classes in the doubling
/// scheme.
pub const DEFAULT_BLOCK_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureMethod {
    WordSum,
    TransferMatrix,
    Doubling,
}

impl PressureMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            PressureMethod::WordSum => "word_sum",
            PressureMethod::TransferMatrix => "transfer_matrix",
            PressureMethod::Doubling => "doubling",
        }
    }
}

/// A pressure value with its certified upper bound and optional lower
/// bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureEstimate {
    pub value: f64,
    pub upper: f64,
    pub lower: Option<f64>,
    pub n_used: usize,
    pub method: PressureMethod,
}

impl PressureEstimate {
    fn exact(value: f64, n_used: usize, method: PressureMethod) -> Self {
        Self {
            value,
            upper: value,
            lower: Some(value),
            n_used,
            method,
        }
    }
}

/// `log Z_n = log Σ_{|I| = n} exp(sup_{[I]} S_n φ)`, with the supremum
/// taken over two-sided extensions or with a fixed past.
pub fn log_partition_sum(sub: &Subshift, phi: &Potential, n: usize, side: &Side) -> Result<f64> {
    log_partition_sum_with(sub, phi, n, side, Exec::default())
}

pub fn log_partition_sum_with(
    sub: &Subshift,
    phi: &Potential,
    n: usize,
    side: &Side,
    exec: Exec,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("word length must be >= 1".into()));
    }
    if n > sub.word_cap() {
        return Err(Error::CapExceeded {
            what: "word length",
            requested: n,
            cap: sub.word_cap(),
        });
    }
    check_potential(sub, phi)?;
    if let Side::FixedPast(p) = side {
        sub.check_admissible(p)?;
        if p.len() < phi.offset() {
            return Err(Error::InvalidArgument(format!(
                "past of length {} shorter than potential offset {}",
                p.len(),
                phi.offset()
            )));
        }
    }
    let prefixes = sub.chunk_prefixes(n);
    let parts = exec.map(&prefixes, |p| {
        let mut acc = LogSumExp::new();
        sub.for_each_extension(p, n, &mut |w| acc.add(phi.sup_unchecked(sub, w, side)));
        acc
    });
    let mut total = LogSumExp::new();
    parts.iter().for_each(|a| total.merge(a));
    Ok(total.value())
}

fn check_potential(sub: &Subshift, phi: &Potential) -> Result<()> {
    if phi.alphabet_size() != sub.alphabet_size() {
        return Err(Error::InvalidPotential(format!(
            "potential over {} symbols used on a subshift with {}",
            phi.alphabet_size(),
            sub.alphabet_size()
        )));
    }
    Ok(())
}

/// Weighted graph whose Perron root is `exp P(σ, φ)`: for depth 1 the
/// symbols with `M_ij = a_ij e^{φ(i)}`, for depth `d >= 2` the admissible
/// `(d-1)`-words with one edge per admissible `d`-word.
fn potential_graph(sub: &Subshift, phi: &Potential) -> LogEdgeMatrix {
    let l = sub.alphabet_size();
    let d = phi.depth();
    if d == 1 {
        let mut edges = Vec::new();
        for i in 0..l as u8 {
            for j in sub.successors(i) {
                edges.push((i as usize, j as usize, phi.value(&[i])));
            }
        }
        return LogEdgeMatrix { n: l, edges };
    }
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    sub.for_each_extension(&[], d - 1, &mut |w| {
        let k = index.len();
        index.insert(w.to_vec(), k);
    });
    let mut edges = Vec::new();
    sub.for_each_extension(&[], d, &mut |w| {
        edges.push((index[&w[..d - 1]], index[&w[1..]], phi.value(w)));
    });
    LogEdgeMatrix {
        n: index.len(),
        edges,
    }
}

/// Spectral pressure `log ρ(M)` for potentials of depth at most 2.
pub fn transfer_pressure(sub: &Subshift, phi: &Potential) -> Result<PressureEstimate> {
    if phi.depth() > 2 {
        return Err(Error::InvalidPotential(format!(
            "transfer pressure needs depth <= 2, got {}",
            phi.depth()
        )));
    }
    potential_pressure(sub, phi)
}

/// Spectral pressure for a potential of any depth, through its higher-block
/// presentation.
pub fn potential_pressure(sub: &Subshift, phi: &Potential) -> Result<PressureEstimate> {
    check_potential(sub, phi)?;
    if !sub.is_irreducible() {
        return Err(Error::Reducible);
    }
    let lr = potential_graph(sub, phi).log_spectral_radius()?;
    Ok(PressureEstimate::exact(lr, phi.depth(), PressureMethod::TransferMatrix))
}

/// `log Z_n(s)` for `n = 1..=n_max`, where `Z_n(s) = Σ_{|w| = n} φ^s(Π_w)`.
pub fn log_svp_sums(sub: &Subshift, c: &MatrixCocycle, s: f64, n_max: usize) -> Result<Vec<f64>> {
    log_svp_sums_with(sub, c, s, n_max, Exec::default())
}

pub fn log_svp_sums_with(
    sub: &Subshift,
    c: &MatrixCocycle,
    s: f64,
    n_max: usize,
    exec: Exec,
) -> Result<Vec<f64>> {
    c.check_alphabet(sub)?;
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    if n_max > sub.word_cap() {
        return Err(Error::CapExceeded {
            what: "word length",
            requested: n_max,
            cap: sub.word_cap(),
        });
    }
    let split = sub.chunk_prefixes(n_max);
    let parts = exec.map(&split, |prefix| {
        let mut acc = vec![LogSumExp::new(); n_max + 1];
        let mut stack = vec![ScaledMat::identity(c.dim())];
        for &sym in prefix.iter() {
            let next = stack.last().unwrap().mul(&c.product(&[sym]));
            stack.push(next);
        }
        let base = prefix.len();
        acc[base].add(log_svf(stack.last().unwrap(), s));
        let mut buf = prefix.clone();
        svp_dfs(sub, c, s, n_max, &mut buf, &mut stack, &mut acc);
        acc
    });
    // Levels shorter than the chunk prefix length are summed separately,
    // since several chunks share those prefixes.
    let base = split.first().map(|p| p.len()).unwrap_or(0);
    let mut totals = vec![LogSumExp::new(); n_max + 1];
    for acc in &parts {
        for m in base..=n_max {
            totals[m].merge(&acc[m]);
        }
    }
    for m in 1..base {
        let mut a = LogSumExp::new();
        sub.for_each_extension(&[], m, &mut |w| a.add(log_svf(&c.product(w), s)));
        totals[m] = a;
    }
    Ok((1..=n_max).map(|m| totals[m].value()).collect())
}

fn svp_dfs(
    sub: &Subshift,
    c: &MatrixCocycle,
    s: f64,
    n_max: usize,
    buf: &mut Vec<u8>,
    stack: &mut Vec<ScaledMat>,
    acc: &mut [LogSumExp],
) {
    if buf.len() == n_max {
        return;
    }
    let next: Vec<u8> = sub.extensions(buf).collect();
    for sym in next {
        let p = stack.last().unwrap().mul(&c.product(&[sym]));
        buf.push(sym);
        acc[buf.len()].add(log_svf(&p, s));
        stack.push(p);
        svp_dfs(sub, c, s, n_max, buf, stack, acc);
        stack.pop();
        buf.pop();
    }
}

/// Exact pressure of `Φ_f(s)` for diagonal cocycles.
///
/// For diagonal products, `φ^s` is the maximum over coordinate orderings of
/// a multiplicative weight, so the pressure is the maximum of finitely many
/// additive (depth-1) pressures.
fn diagonal_pressure(sub: &Subshift, c: &MatrixCocycle, s: f64) -> Result<f64> {
    let u = c.dim();
    let mut best = f64::NEG_INFINITY;
    for perm in permutations(u) {
        let vals: Vec<f64> = c
            .matrices()
            .iter()
            .map(|m| {
                let ls: Vec<f64> = perm.iter().map(|&i| m.get(i, i).abs().ln()).collect();
                log_svf_from_log_sv(&ls, s)
            })
            .collect();
        let phi = Potential::from_symbol_values(sub, &vals)?;
        best = best.max(potential_pressure(sub, &phi)?.value);
    }
    Ok(best)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Pressure of the sub-additive singular-value sequence at exponent `s`.
///
/// `value = (1/n_max) log Z_{n_max}`, `upper = min_n (1/n) log Z_n`. For
/// diagonal cocycles over an irreducible subshift the value is exact.
pub fn subadditive_pressure(
    sub: &Subshift,
    c: &MatrixCocycle,
    sv: SvParams,
    n_max: usize,
) -> Result<PressureEstimate> {
    subadditive_pressure_with(sub, c, sv, n_max, Exec::default())
}

pub fn subadditive_pressure_with(
    sub: &Subshift,
    c: &MatrixCocycle,
    sv: SvParams,
    n_max: usize,
    exec: Exec,
) -> Result<PressureEstimate> {
    c.check_alphabet(sub)?;
    if c.is_diagonal() && sub.is_irreducible() {
        if n_max > sub.word_cap() {
            return Err(Error::CapExceeded {
                what: "word length",
                requested: n_max,
                cap: sub.word_cap(),
            });
        }
        let v = diagonal_pressure(sub, c, sv.s)?;
        return Ok(PressureEstimate::exact(v, n_max, PressureMethod::TransferMatrix));
    }
    let sums = log_svp_sums_with(sub, c, sv.s, n_max, exec)?;
    let rates: Vec<f64> = sums
        .iter()
        .enumerate()
        .map(|(i, z)| z / (i + 1) as f64)
        .collect();
    let upper = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(PressureEstimate {
        value: *rates.last().unwrap(),
        upper,
        lower: None,
        n_used: n_max,
        method: PressureMethod::WordSum,
    })
}

/// Depth-1 potential `i ↦ log φ^s(B_i)`, i.e. `-φ^s(·, f)`.
pub fn one_step_svp(sub: &Subshift, c: &MatrixCocycle, s: f64) -> Result<Potential> {
    c.check_alphabet(sub)?;
    let vals: Vec<f64> = (0..sub.alphabet_size() as u8)
        .map(|i| log_svf(&c.product(&[i]), s))
        .collect();
    Potential::from_symbol_values(sub, &vals)
}

/// Depth-`n` potential `w ↦ (1/n) log φ^s(Π_w)`, i.e. `-(1/n) φ^s(·, f^n)`.
pub fn n_step_svp(sub: &Subshift, c: &MatrixCocycle, s: f64, n: usize) -> Result<Potential> {
    c.check_alphabet(sub)?;
    Potential::from_fn(sub, n, 0, |w| log_svf(&c.product(w), s) / n as f64)
}

/// Pasts used for fixed-past sums: every admissible past of the needed
/// length when there are at most `trials` of them, otherwise `trials`
/// random admissible walks.
pub fn sample_pasts(sub: &Subshift, len: usize, trials: usize, seed: u64) -> Vec<Vec<u8>> {
    let len = len.max(1);
    if sub.word_count(len) <= trials as f64 {
        let mut out = Vec::new();
        sub.for_each_extension(&[], len, &mut |w| out.push(w.to_vec()));
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = sub.alphabet_size();
    (0..trials)
        .map(|_| {
            let mut p = vec![rng.gen_range(0..l) as u8];
            while p.len() < len {
                let succ: Vec<u8> = sub.successors(*p.last().unwrap()).collect();
                p.push(succ[rng.gen_range(0..succ.len())]);
            }
            p
        })
        .collect()
}

/// Largest normalized gap `|log Z_n − log Z_n(past)| / n` over sampled
/// pasts. Identically zero for potentials that read only the future.
pub fn unstable_pressure_gap(
    sub: &Subshift,
    phi: &Potential,
    n: usize,
    trials: usize,
) -> Result<f64> {
    unstable_pressure_gap_seeded(sub, phi, n, trials, DEFAULT_PAST_SEED)
}

pub fn unstable_pressure_gap_seeded(
    sub: &Subshift,
    phi: &Potential,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let two = log_partition_sum(sub, phi, n, &Side::TwoSided)?;
    let mut gap: f64 = 0.0;
    for past in sample_pasts(sub, phi.offset(), trials, seed) {
        let one = log_partition_sum(sub, phi, n, &Side::FixedPast(past))?;
        gap = gap.max((two - one).abs() / n as f64);
    }
    Ok(gap)
}

/// Cover families for the dimensional form of pressure.
#[derive(Debug, Clone)]
pub enum CoverFamily {
    /// All admissible words of one length.
    Uniform(usize),
    /// The stopping family of a negative potential at scale `r`.
    Stopping { h: Potential, r: f64 },
}

/// Per-length log-weights `A_m = log Σ_{I ∈ family, |I| = m} exp(sup S_m φ)`.
pub fn family_length_profile(
    sub: &Subshift,
    phi: &Potential,
    family: &CoverFamily,
) -> Result<BTreeMap<usize, f64>> {
    match family {
        CoverFamily::Uniform(n) => {
            let z = log_partition_sum(sub, phi, *n, &Side::TwoSided)?;
            Ok(BTreeMap::from([(*n, z)]))
        }
        CoverFamily::Stopping { h, r } => stopping::length_profile(sub, h, *r, phi),
    }
}

/// `log Σ_{I ∈ family} exp(-λ|I|) exp(sup_{[I]} S_{|I|} φ)`.
pub fn dimensional_pressure(
    sub: &Subshift,
    phi: &Potential,
    lambda: f64,
    family: &CoverFamily,
) -> Result<f64> {
    let prof = family_length_profile(sub, phi, family)?;
    Ok(profile_at(&prof, lambda))
}

fn profile_at(prof: &BTreeMap<usize, f64>, lambda: f64) -> f64 {
    let mut acc = LogSumExp::new();
    for (&m, &a) in prof {
        acc.add(a - lambda * m as f64);
    }
    acc.value()
}

/// The λ at which the dimensional sum of a family crosses zero.
pub fn critical_lambda(sub: &Subshift, phi: &Potential, family: &CoverFamily) -> Result<f64> {
    let prof = family_length_profile(sub, phi, family)?;
    if prof.is_empty() {
        return Err(Error::InvalidArgument("empty cover family".into()));
    }
    if prof.len() == 1 {
        let (&m, &a) = prof.iter().next().unwrap();
        return Ok(a / m as f64);
    }
    // each length contributes a - λm; the root lies within their single roots
    // shifted by the log of the number of lengths
    let slack = (prof.len() as f64).ln();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&m, &a) in &prof {
        lo = lo.min(a / m as f64);
        hi = hi.max((a + slack) / m as f64);
    }
    let (mut lo, mut hi) = (lo - 1e-12, hi + 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if profile_at(&prof, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A Markov measure on a subshift: stationary vector and stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMeasure {
    pub p: Vec<f64>,
    pub q: Vec<Vec<f64>>,
}

impl MarkovMeasure {
    /// `-Σ p_i Q_ij log Q_ij`.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (pi, row) in self.p.iter().zip(&self.q) {
            for &qij in row {
                if qij > 0.0 {
                    h -= pi * qij * qij.ln();
                }
            }
        }
        h
    }

    /// `∫ φ dμ` for a depth-1 potential.
    pub fn integral(&self, phi: &Potential) -> f64 {
        self.p
            .iter()
            .enumerate()
            .map(|(i, pi)| pi * phi.value(&[i as u8]))
            .sum()
    }
}

/// Result of the variational-principle check.
#[derive(Debug, Clone)]
pub struct EquilibriumCheck {
    pub measure: MarkovMeasure,
    pub entropy: f64,
    pub integral: f64,
    pub pressure: f64,
    /// `pressure − (entropy + integral)`.
    pub defect: f64,
}

/// Equilibrium Markov measure of a depth-1 potential, built from the left
/// and right Perron vectors of `M_ij = a_ij e^{φ(i)}`.
pub fn equilibrium_measure(sub: &Subshift, phi: &Potential) -> Result<(MarkovMeasure, f64)> {
    check_potential(sub, phi)?;
    if phi.depth() != 1 {
        return Err(Error::InvalidPotential("equilibrium check needs depth 1".into()));
    }
    if !sub.is_irreducible() {
        return Err(Error::Reducible);
    }
    let l = sub.alphabet_size();
    let perron = potential_graph(sub, phi).perron()?;
    let rho_log = perron.log_rho;
    let (v, u) = (&perron.right, &perron.left);
    let mut q = vec![vec![0.0; l]; l];
    for i in 0..l {
        for j in sub.successors(i as u8) {
            let j = j as usize;
            q[i][j] = (phi.value(&[i as u8]) - rho_log).exp() * v[j] / v[i];
        }
        // renormalize rows against eigenvector round-off
        let s: f64 = q[i].iter().sum();
        q[i].iter_mut().for_each(|x| *x /= s);
    }
    let norm: f64 = (0..l).map(|i| u[i] * v[i]).sum();
    let p: Vec<f64> = (0..l).map(|i| u[i] * v[i] / norm).collect();
    Ok((MarkovMeasure { p, q }, rho_log))
}

pub fn equilibrium_check(sub: &Subshift, phi: &Potential) -> Result<EquilibriumCheck> {
    let (measure, pressure) = equilibrium_measure(sub, phi)?;
    let entropy = measure.entropy();
    let integral = measure.integral(phi);
    Ok(EquilibriumCheck {
        defect: pressure - (entropy + integral),
        measure,
        entropy,
        integral,
        pressure,
    })
}

/// One class of admissible blocks of length `2^ℓ` sharing first symbol,
/// last symbol and (up to rounding) cocycle product.
#[derive(Debug, Clone)]
pub struct BlockClass {
    pub first: u8,
    pub last: u8,
    pub log_count: f64,
    pub product: ScaledMat,
}

/// Options for the doubling scheme.
#[derive(Debug, Clone, Copy)]
pub struct DoublingLimits {
    pub level_cap: usize,
    pub block_limit: usize,
}

impl Default for DoublingLimits {
    fn default() -> Self {
        Self {
            level_cap: DEFAULT_LEVEL_CAP,
            block_limit: DEFAULT_BLOCK_LIMIT,
        }
    }
}

fn class_key(c: &BlockClass) -> (u8, u8, i64, Vec<u64>) {
    // merge products equal to ~1e-12 relative
    let mask = !((1u64 << 12) - 1);
    let ls = (c.product.log_scale * 1e9).round() as i64;
    (
        c.first,
        c.last,
        ls,
        c.product
            .m
            .to_row_major()
            .iter()
            .map(|x| x.to_bits() & mask)
            .collect(),
    )
}

/// Classes of admissible blocks of length `2^level`, built by pairing
/// classes of the previous level.
pub fn block_classes(
    sub: &Subshift,
    c: &MatrixCocycle,
    level: usize,
    limits: DoublingLimits,
) -> Result<Vec<BlockClass>> {
    c.check_alphabet(sub)?;
    if level > limits.level_cap {
        return Err(Error::CapExceeded {
            what: "doubling level",
            requested: level,
            cap: limits.level_cap,
        });
    }
    let mut classes: Vec<BlockClass> = (0..sub.alphabet_size() as u8)
        .map(|i| BlockClass {
            first: i,
            last: i,
            log_count: 0.0,
            product: c.product(&[i]),
        })
        .collect();
    for _ in 0..level {
        let mut merged: BTreeMap<(u8, u8, i64, Vec<u64>), BlockClass> = BTreeMap::new();
        for a in &classes {
            for b in &classes {
                if !sub.allowed(a.last, b.first) {
                    continue;
                }
                let cls = BlockClass {
                    first: a.first,
                    last: b.last,
                    log_count: a.log_count + b.log_count,
                    product: a.product.mul(&b.product),
                };
                match merged.entry(class_key(&cls)) {
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let cur = e.get_mut();
                        let mut acc = LogSumExp::new();
                        acc.add(cur.log_count);
                        acc.add(cls.log_count);
                        cur.log_count = acc.value();
                    }
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(cls);
                    }
                }
            }
            if merged.len() > limits.block_limit {
                return Err(Error::CapExceeded {
                    what: "block classes",
                    requested: merged.len(),
                    cap: limits.block_limit,
                });
            }
        }
        classes = merged.into_values().collect();
    }
    Ok(classes)
}

/// `(1/2^ℓ) P(σ^{2^ℓ}, log G_{2^ℓ} + s log H_{2^ℓ})` with `k` fixed.
///
/// The block shift has transitions `b → b'` whenever `last(b) → first(b')`
/// is allowed, so its weighted matrix factors through the `l x l` matrix
/// `K A` with `K_ij = Σ_{first(b)=i, last(b)=j} G_b H_b^s`; both share the
/// same Perron root.
pub fn doubling_pressure(
    sub: &Subshift,
    c: &MatrixCocycle,
    s: f64,
    k: usize,
    level: usize,
    limits: DoublingLimits,
) -> Result<PressureEstimate> {
    let classes = block_classes(sub, c, level, limits)?;
    doubling_pressure_from_classes(sub, &classes, s, k, level)
}

/// Per-class `(log G, log H)` weights; computed once per level.
pub fn class_weights(classes: &[BlockClass], k: usize) -> Result<Vec<(f64, f64)>> {
    classes
        .iter()
        .map(|cl| log_gh_from_log_sv(&cl.product.log_singular_values(), k))
        .collect()
}

pub fn doubling_pressure_from_classes(
    sub: &Subshift,
    classes: &[BlockClass],
    s: f64,
    k: usize,
    level: usize,
) -> Result<PressureEstimate> {
    let w = class_weights(classes, k)?;
    doubling_pressure_from_weights(sub, classes, &w, s, level)
}

pub(crate) fn doubling_pressure_from_weights(
    sub: &Subshift,
    classes: &[BlockClass],
    weights: &[(f64, f64)],
    s: f64,
    level: usize,
) -> Result<PressureEstimate> {
    if !sub.is_irreducible() {
        return Err(Error::Reducible);
    }
    let l = sub.alphabet_size();
    let mut kmat = vec![vec![LogSumExp::new(); l]; l];
    for (cl, &(g, h)) in classes.iter().zip(weights) {
        kmat[cl.first as usize][cl.last as usize].add(cl.log_count + g + s * h);
    }
    // (K A)_{ij'} = Σ_j K_ij a_{jj'}
    let mut ka = vec![vec![f64::NEG_INFINITY; l]; l];
    for (i, row) in ka.iter_mut().enumerate() {
        for (jp, cell) in row.iter_mut().enumerate() {
            let mut acc = LogSumExp::new();
            for j in 0..l {
                if sub.allowed(j as u8, jp as u8) {
                    acc.add(kmat[i][j].value());
                }
            }
            *cell = acc.value();
        }
    }
    let lr = LogEdgeMatrix::from_dense_log(&ka).log_spectral_radius()?;
    let block_len = (1usize << level) as f64;
    Ok(PressureEstimate::exact(
        lr / block_len,
        1 << level,
        PressureMethod::Doubling,
    ))
}
