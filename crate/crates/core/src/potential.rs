//! Locally constant potentials and exact cylinder suprema of Birkhoff sums.

use crate::error::{Error, Result};
use crate::sft::Subshift;

/// A potential that depends on a window of `depth` coordinates starting at
/// position `-offset`: `φ(x) = table[x_{-offset} … x_{-offset+depth-1}]`.
///
/// Potentials with `offset = 0` read only the future and are the only kind
/// produced by cocycles.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    l: usize,
    depth: usize,
    offset: usize,
    /// Indexed by the base-`l` code of the window; `-inf` on inadmissible
    /// windows.
    table: Vec<f64>,
}

/// Which coordinates left of the origin are free in a supremum.
#[derive(Debug, Clone, PartialEq)]
pub enum Side {
    /// Supremum over every admissible two-sided extension.
    TwoSided,
    /// Negative coordinates read from the given past (its last symbol sits at
    /// position -1). The junction between past and word is not checked: only
    /// windows that reach into the past see it.
    FixedPast(Vec<u8>),
}

fn word_code(w: &[u8], l: usize) -> usize {
    w.iter().fold(0, |acc, &c| acc * l + c as usize)
}

impl Potential {
    /// Builds a potential by evaluating `f` on every admissible window.
    pub fn from_fn(
        sub: &Subshift,
        depth: usize,
        offset: usize,
        f: impl Fn(&[u8]) -> f64,
    ) -> Result<Self> {
        let l = sub.alphabet_size();
        if depth == 0 || offset >= depth {
            return Err(Error::InvalidPotential(format!(
                "need depth >= 1 and offset < depth (got depth {depth}, offset {offset})"
            )));
        }
        let size = l
            .checked_pow(depth as u32)
            .filter(|&s| s <= 1 << 24)
            .ok_or_else(|| Error::InvalidPotential(format!("window table l^{depth} too large")))?;
        let mut table = vec![f64::NEG_INFINITY; size];
        let mut bad = None;
        sub.for_each_extension(&[], depth, &mut |w| {
            let v = f(w);
            if !v.is_finite() && bad.is_none() {
                bad = Some(w.to_vec());
            }
            table[word_code(w, l)] = v;
        });
        if let Some(w) = bad {
            return Err(Error::InvalidPotential(format!("non-finite value on window {w:?}")));
        }
        Ok(Self {
            l,
            depth,
            offset,
            table,
        })
    }

    /// Depth-1 potential from per-symbol values.
    pub fn from_symbol_values(sub: &Subshift, values: &[f64]) -> Result<Self> {
        if values.len() != sub.alphabet_size() {
            return Err(Error::InvalidPotential(format!(
                "{} values for alphabet of size {}",
                values.len(),
                sub.alphabet_size()
            )));
        }
        Self::from_fn(sub, 1, 0, |w| values[w[0] as usize])
    }

    /// Potential from an explicit window table, which must list every
    /// admissible window exactly once.
    pub fn from_table(
        sub: &Subshift,
        depth: usize,
        offset: usize,
        entries: &[(Vec<u8>, f64)],
    ) -> Result<Self> {
        let l = sub.alphabet_size();
        let mut map = std::collections::HashMap::new();
        for (w, v) in entries {
            if w.len() != depth || !sub.is_admissible(w) {
                return Err(Error::InvalidPotential(format!(
                    "window {w:?} is not an admissible word of length {depth}"
                )));
            }
            if map.insert(word_code(w, l), *v).is_some() {
                return Err(Error::InvalidPotential(format!("window {w:?} listed twice")));
            }
        }
        let expected = sub.word_count(depth) as usize;
        if map.len() != expected {
            return Err(Error::InvalidPotential(format!(
                "table lists {} windows, subshift has {expected}",
                map.len()
            )));
        }
        Self::from_fn(sub, depth, offset, |w| map[&word_code(w, l)])
    }

    pub fn constant(sub: &Subshift, c: f64) -> Result<Self> {
        Self::from_fn(sub, 1, 0, |_| c)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn alphabet_size(&self) -> usize {
        self.l
    }

    /// True when only coordinates `x_0, x_1, …` are read.
    pub fn is_future_only(&self) -> bool {
        self.offset == 0
    }

    #[inline]
    pub fn value(&self, window: &[u8]) -> f64 {
        self.table[word_code(window, self.l)]
    }

    fn admissible_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.table.iter().copied().filter(|v| v.is_finite())
    }

    pub fn max_value(&self) -> f64 {
        self.admissible_values().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.admissible_values().fold(f64::INFINITY, f64::min)
    }

    /// Re-expresses the potential on a longer window (same offset).
    pub fn lift(&self, sub: &Subshift, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::InvalidPotential("cannot lower depth".into()));
        }
        if depth == self.depth {
            return Ok(self.clone());
        }
        Self::from_fn(sub, depth, self.offset, |w| self.value(&w[..self.depth]))
    }

    /// `a·self + b·other`, lifted to the larger depth.
    pub fn lin_comb(&self, sub: &Subshift, a: f64, other: &Potential, b: f64) -> Result<Self> {
        if self.offset != other.offset || self.l != other.l {
            return Err(Error::InvalidPotential(
                "combined potentials need the same alphabet and offset".into(),
            ));
        }
        let d = self.depth.max(other.depth);
        let x = self.lift(sub, d)?;
        let y = other.lift(sub, d)?;
        Self::from_fn(sub, d, self.offset, |w| a * x.value(w) + b * y.value(w))
    }

    pub fn scaled(&self, sub: &Subshift, a: f64) -> Result<Self> {
        Self::from_fn(sub, self.depth, self.offset, |w| a * self.value(w))
    }

    /// Exact `sup_{x ∈ [w]} S_{|w|} φ(x)` over admissible two-sided
    /// extensions of `w`.
    pub fn birkhoff_sup(&self, sub: &Subshift, w: &[u8]) -> Result<f64> {
        self.birkhoff_sup_side(sub, w, &Side::TwoSided)
    }

    pub fn birkhoff_sup_side(&self, sub: &Subshift, w: &[u8], side: &Side) -> Result<f64> {
        if w.is_empty() {
            return Err(Error::InvalidArgument("empty word".into()));
        }
        sub.check_admissible(w)?;
        if let Side::FixedPast(p) = side {
            sub.check_admissible(p)?;
            if p.len() < self.offset {
                return Err(Error::InvalidArgument(format!(
                    "past of length {} shorter than potential offset {}",
                    p.len(),
                    self.offset
                )));
            }
        }
        Ok(self.sup_unchecked(sub, w, side))
    }

    /// Viterbi over the unknown coordinates; no validation.
    pub(crate) fn sup_unchecked(&self, sub: &Subshift, w: &[u8], side: &Side) -> f64 {
        let (d, o, l, n) = (self.depth, self.offset, self.l, w.len());
        if d == 1 {
            return w.iter().map(|&c| self.table[c as usize]).sum();
        }
        // y[k] = x_{k-o}, k in 0..n+d-1; windows j = 0..n-1 cover y[j..j+d].
        let total = n + d - 1;
        let fixed_past = match side {
            Side::FixedPast(p) => Some(&p[p.len() - o..]),
            Side::TwoSided => None,
        };
        let known = |k: usize| -> Option<u8> {
            if k < o {
                fixed_past.map(|p| p[k])
            } else if k < o + n {
                Some(w[k - o])
            } else {
                None
            }
        };
        // transition into y[k] is unchecked at the past/word junction
        let check = |k: usize| !(fixed_past.is_some() && k == o);
        let candidates = |k: usize| -> Vec<u8> {
            match known(k) {
                Some(c) => vec![c],
                None => (0..l as u8).collect(),
            }
        };

        let states = l.pow(d as u32 - 1);
        // prefix layer: codes of y[0..d-1]
        let mut layer: Vec<(usize, u8)> = candidates(0).into_iter().map(|c| (c as usize, c)).collect();
        for k in 1..d - 1 {
            let mut next = Vec::new();
            for &(code, last) in &layer {
                for c in candidates(k) {
                    if !check(k) || sub.allowed(last, c) {
                        next.push((code * l + c as usize, c));
                    }
                }
            }
            layer = next;
        }
        let mut best = vec![f64::NEG_INFINITY; states];
        for &(code, _) in &layer {
            best[code] = 0.0;
        }
        for k in d - 1..total {
            let mut next = vec![f64::NEG_INFINITY; states];
            let cands = candidates(k);
            for (code, &val) in best.iter().enumerate() {
                if val == f64::NEG_INFINITY {
                    continue;
                }
                let last = (code % l) as u8;
                for &c in &cands {
                    if check(k) && !sub.allowed(last, c) {
                        continue;
                    }
                    let window = code * l + c as usize;
                    let v = val + self.table[window];
                    let ns = window % states;
                    if v > next[ns] {
                        next[ns] = v;
                    }
                }
            }
            best = next;
        }
        best.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_one_sup_is_plain_sum() {
        let full = Subshift::full(2).unwrap();
        let (a, b) = (0.7, -1.3);
        let p = Potential::from_symbol_values(&full, &[a, b]).unwrap();
        assert_eq!(p.birkhoff_sup(&full, &[0, 1, 0]).unwrap(), a + b + a);
    }

    #[test]
    fn depth_two_golden_mean_examples() {
        let g = Subshift::golden_mean();
        let p = Potential::from_table(
            &g,
            2,
            0,
            &[(vec![0, 0], 0.0), (vec![0, 1], 1.0), (vec![1, 0], 2.0)],
        )
        .unwrap();
        assert_eq!(p.birkhoff_sup(&g, &[0, 1]).unwrap(), 3.0);
        assert_eq!(p.birkhoff_sup(&g, &[0, 0]).unwrap(), 1.0);
        assert!(matches!(
            p.birkhoff_sup(&g, &[1, 1]),
            Err(Error::Inadmissible(_))
        ));
    }

    #[test]
    fn table_must_cover_every_window() {
        let g = Subshift::golden_mean();
        assert!(Potential::from_table(&g, 2, 0, &[(vec![0, 0], 0.0)]).is_err());
        assert!(Potential::from_table(&g, 2, 0, &[(vec![1, 1], 0.0)]).is_err());
    }

    #[test]
    fn offset_potential_left_sup_and_fixed_past() {
        let full = Subshift::full(2).unwrap();
        // value -1 whenever the previous symbol is 1
        let p = Potential::from_fn(&full, 2, 1, |w| if w[0] == 1 { -1.0 } else { 0.0 }).unwrap();
        // free past picks 0; word 110 then contributes -1 (from x_0=1) -1 (x_1=1)
        assert_eq!(p.birkhoff_sup(&full, &[1, 1, 0]).unwrap(), -2.0);
        let past1 = Side::FixedPast(vec![0, 1]);
        assert_eq!(p.birkhoff_sup_side(&full, &[1, 1, 0], &past1).unwrap(), -3.0);
        let past0 = Side::FixedPast(vec![1, 0]);
        assert_eq!(p.birkhoff_sup_side(&full, &[1, 1, 0], &past0).unwrap(), -2.0);
        assert!(p
            .birkhoff_sup_side(&full, &[1], &Side::FixedPast(vec![]))
            .is_err());
    }

    #[test]
    fn lin_comb_lifts_depth() {
        let g = Subshift::golden_mean();
        let a = Potential::from_symbol_values(&g, &[-1.0, -2.0]).unwrap();
        let b = Potential::from_table(
            &g,
            2,
            0,
            &[(vec![0, 0], 0.5), (vec![0, 1], 0.25), (vec![1, 0], 0.0)],
        )
        .unwrap();
        let c = a.lin_comb(&g, 2.0, &b, 1.0).unwrap();
        assert_eq!(c.depth(), 2);
        assert_eq!(c.value(&[0, 1]), -2.0 + 0.25);
        assert_eq!(c.max_value(), -2.0 + 0.5);
        assert_eq!(c.min_value(), -4.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        let full = Subshift::full(2).unwrap();
        assert!(Potential::from_fn(&full, 0, 0, |_| 0.0).is_err());
        assert!(Potential::from_fn(&full, 2, 2, |_| 0.0).is_err());
        assert!(Potential::from_fn(&full, 1, 0, |_| f64::NAN).is_err());
        assert!(Potential::from_symbol_values(&full, &[1.0]).is_err());
    }
}
