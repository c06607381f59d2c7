//! Cross-checks against independent reference computations.

use bowen_core::cocycle::svf_value;
use bowen_core::exec::LogSumExp;
use bowen_core::geometry::{box_count, builtin, builtin_models, cover_counts};
use bowen_core::pressure::{log_svp_sums, subadditive_pressure, transfer_pressure};
use bowen_core::stopping::{audit_family, build_stopping_family};
use bowen_core::{MatrixCocycle, Potential, SmallMat, Subshift, SvParams, Word};

/// Singular values of a 2x2 matrix from the eigenvalues of `TᵀT`.
fn closed_form_sv(m: &SmallMat) -> (f64, f64) {
    let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let tr = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    let disc = (tr * tr - 4.0 * det * det).max(0.0).sqrt();
    (((tr + disc) / 2.0).sqrt(), ((tr - disc) / 2.0).sqrt())
}

#[test]
fn jacobi_matches_closed_form() {
    for i in 0..50 {
        let t = i as f64 * 0.37;
        let m = SmallMat::rotation(t)
            .mul(&SmallMat::from_rows(&[&[0.7, 0.2], &[-0.1, 0.3 + 0.01 * i as f64]]));
        let sv = m.singular_values();
        let (s1, s2) = closed_form_sv(&m);
        assert!((sv[0] - s1).abs() < 1e-13 && (sv[1] - s2).abs() < 1e-12);
        let s = 0.03 * i as f64;
        let want = if s <= 1.0 { s1.powf(s) } else { s1 * s2.powf(s - 1.0) };
        assert!((svf_value(&m, s).unwrap() - want).abs() < 1e-13);
    }
}

/// `Σ_{|w|=n} Π_i e^{φ(w_i)}` by explicit enumeration of all `l^n` strings.
fn brute_partition(l: usize, allowed: &dyn Fn(usize, usize) -> bool, phi: &[f64], n: usize) -> f64 {
    let mut total = 0.0;
    for code in 0..l.pow(n as u32) {
        let w: Vec<usize> = (0..n).map(|i| code / l.pow((n - 1 - i) as u32) % l).collect();
        if w.windows(2).all(|p| allowed(p[0], p[1])) {
            total += w.iter().map(|&s| phi[s]).sum::<f64>().exp();
        }
    }
    total.ln()
}

#[test]
fn transfer_pressure_matches_growth_of_brute_sums() {
    let phi = [0.3, -0.8];
    let g = Subshift::golden_mean();
    let pot = Potential::from_symbol_values(&g, &phi).unwrap();
    let p = transfer_pressure(&g, &pot).unwrap().value;
    let allowed = |i: usize, j: usize| !(i == 1 && j == 1);
    // ratio of consecutive sums converges geometrically to e^P
    let z15 = brute_partition(2, &allowed, &phi, 15);
    let z16 = brute_partition(2, &allowed, &phi, 16);
    assert!((z16 - z15 - p).abs() < 1e-6);
}

#[test]
fn diagonal_pressure_matches_word_sum_limit() {
    let full = Subshift::full(2).unwrap();
    let c = MatrixCocycle::new(vec![SmallMat::diag(&[0.5, 0.2]), SmallMat::diag(&[0.1, 0.6])]).unwrap();
    for s in [0.5, 1.2] {
        let exact = subadditive_pressure(&full, &c, SvParams::new(s, 2).unwrap(), 16).unwrap().value;
        let z = log_svp_sums(&full, &c, s, 16).unwrap();
        // rates decrease towards the limit with O(1/n) error
        let rate = z[15] / 16.0;
        assert!(exact <= rate + 1e-12 && rate - exact < 0.05, "s={s}: {exact} {rate}");
    }
}

/// Exact cover checked the literal way: every admissible word of length
/// `M_r` has exactly one family member as a prefix.
fn cover_by_enumeration(sub: &Subshift, words: &[Word], depth: usize) -> bool {
    sub.enumerate_words(depth).unwrap().iter().all(|w| {
        words.iter().filter(|v| v.is_prefix_of(w)).count() == 1
    })
}

#[test]
fn audit_agrees_with_enumeration() {
    let g = Subshift::golden_mean();
    let h = Potential::from_symbol_values(&g, &[-2f64.ln(), -3f64.ln()]).unwrap();
    for r in [0.2, 0.05, 0.01, 0.001] {
        let fam = build_stopping_family(&g, &h, r).unwrap();
        assert!(audit_family(&g, &fam).exact_cover);
        assert!(cover_by_enumeration(&g, &fam.words, fam.big_m_r));
        let mut broken = fam.clone();
        broken.words.pop();
        assert!(!audit_family(&g, &broken).exact_cover);
        assert!(!cover_by_enumeration(&g, &broken.words, fam.big_m_r));
    }
}

#[test]
fn golden_family_sizes_follow_the_root() {
    // #𝒜_r grows like r^{-t} with 2^{-t} + 6^{-t} = 1
    let g = Subshift::golden_mean();
    let h = Potential::from_symbol_values(&g, &[-2f64.ln(), -3f64.ln()]).unwrap();
    let a = build_stopping_family(&g, &h, 2f64.powi(-14)).unwrap().len() as f64;
    let b = build_stopping_family(&g, &h, 2f64.powi(-16)).unwrap().len() as f64;
    let t = (b / a).ln() / (4f64).ln();
    assert!((t - 0.600967).abs() < 0.02, "{t}");
}

#[test]
fn box_counts_are_monotone_and_dominated_by_covers() {
    for m in builtin_models() {
        let eps = m.eps.scales();
        let grid = box_count(&m, m.depth, &eps).unwrap();
        assert!(grid.counts.windows(2).all(|p| p[1] >= p[0]), "{}", m.name);
        assert!(grid.slope >= 0.0 && grid.slope <= m.dim() as f64);
        let k = if m.dim() == 2 { 1 } else { 0 };
        let cover = cover_counts(&m, k, &eps).unwrap();
        let c = grid
            .counts
            .iter()
            .zip(&cover.counts)
            .map(|(a, b)| a / b)
            .fold(0.0, f64::max);
        assert!(c < 64.0, "{}: C = {c}", m.name);
    }
}

#[test]
fn baker_grid_slope_below_root() {
    let m = builtin("baker34").unwrap();
    let rep = box_count(&m, m.depth, &m.eps.scales()).unwrap();
    assert!(rep.slope <= 1.2075 + 0.05);
}

#[test]
fn scalar_moran_grid_slope() {
    let m = builtin("scalar23").unwrap();
    let rep = box_count(&m, 14, &m.eps.scales()).unwrap();
    // (1/2)^s + (1/3)^s = 1
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..60 {
        let s = 0.5 * (lo + hi);
        if 0.5f64.powf(s) + (1.0f64 / 3.0).powf(s) > 1.0 {
            lo = s;
        } else {
            hi = s;
        }
    }
    assert!((rep.slope - lo).abs() < 0.02, "{} vs {lo}", rep.slope);
}

#[test]
fn log_sum_exp_matches_direct_sum() {
    let xs = [-1.0, 0.5, 2.0, -30.0];
    let mut acc = LogSumExp::new();
    xs.iter().for_each(|&x| acc.add(x));
    let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
    assert!((acc.value() - direct).abs() < 1e-14);
}
