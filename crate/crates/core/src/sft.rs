//! Two-sided subshifts of finite type.
//!
//! A [`Subshift`] is an alphabet `0..l` together with a 0/1 transition
//! matrix. Finite words are admissible when every consecutive pair is an
//! allowed transition; a cylinder is identified with its defining word.
//! Enumeration is lexicographic, and that order is relied on downstream for
//! deterministic sums.

use std::fmt;

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Default maximum word length for full enumeration.
pub const DEFAULT_WORD_CAP: usize = 20;

/// A finite word over the alphabet of a subshift.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Self {
        Word(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl From<&[u8]> for Word {
    fn from(s: &[u8]) -> Self {
        Word(s.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wide = self.0.iter().any(|&c| c > 9);
        for (i, c) in self.0.iter().enumerate() {
            if wide && i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Parses `"0101"` (single digits) or `"10.3.0"` (dot separated) into a word.
impl std::str::FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse word {s:?}"));
        let syms: Option<Vec<u8>> = if s.contains('.') {
            s.split('.').map(|t| t.parse().ok()).collect()
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|d| d as u8))
                .collect()
        };
        syms.map(Word).ok_or_else(bad)
    }
}

/// Alphabet plus 0/1 transition matrix, validated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subshift {
    l: usize,
    allowed: Vec<bool>,
    word_cap: usize,
}

impl Subshift {
    /// Validates and builds a subshift from a square 0/1 matrix.
    ///
    /// Every row and column needs at least one allowed transition. A 1x1
    /// alphabet is accepted for degenerate single-point models.
    pub fn new(transition: &[Vec<f64>]) -> Result<Self> {
        let l = transition.len();
        if l == 0 || l > 255 {
            return Err(Error::BadAlphabet(l));
        }
        let mut allowed = vec![false; l * l];
        for (i, row) in transition.iter().enumerate() {
            if row.len() != l {
                return Err(Error::NotSquare {
                    expected: l,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                allowed[i * l + j] = if v == 1.0 {
                    true
                } else if v == 0.0 {
                    false
                } else {
                    return Err(Error::BadEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                };
            }
        }
        for i in 0..l {
            let row_ok = (0..l).any(|j| allowed[i * l + j]);
            let col_ok = (0..l).any(|j| allowed[j * l + i]);
            if !row_ok || !col_ok {
                return Err(Error::RowColZero(i));
            }
        }
        Ok(Self {
            l,
            allowed,
            word_cap: DEFAULT_WORD_CAP,
        })
    }

    /// Convenience constructor from integer rows.
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let m: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| v as f64).collect())
            .collect();
        Self::new(&m)
    }

    pub fn full(l: usize) -> Result<Self> {
        Self::new(&vec![vec![1.0; l]; l])
    }

    /// The golden-mean shift: the word `11` is forbidden.
    pub fn golden_mean() -> Self {
        Self::from_rows(&[&[1, 1], &[1, 0]]).expect("valid matrix")
    }

    pub fn with_word_cap(mut self, cap: usize) -> Self {
        self.word_cap = cap;
        self
    }

    pub fn word_cap(&self) -> usize {
        self.word_cap
    }

    pub fn alphabet_size(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn allowed(&self, i: u8, j: u8) -> bool {
        self.allowed[i as usize * self.l + j as usize]
    }

    /// The transition matrix as 0/1 rows.
    pub fn transition_rows(&self) -> Vec<Vec<u8>> {
        (0..self.l)
            .map(|i| {
                (0..self.l)
                    .map(|j| self.allowed[i * self.l + j] as u8)
                    .collect()
            })
            .collect()
    }

    pub fn is_admissible(&self, w: &[u8]) -> bool {
        w.iter().all(|&c| (c as usize) < self.l) && w.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    pub fn check_admissible(&self, w: &[u8]) -> Result<()> {
        if self.is_admissible(w) {
            Ok(())
        } else {
            Err(Error::Inadmissible(w.to_vec()))
        }
    }

    /// Symbols that may follow `c`.
    pub fn successors(&self, c: u8) -> impl Iterator<Item = u8> + '_ {
        (0..self.l as u8).filter(move |&j| self.allowed(c, j))
    }

    /// Symbols that may follow the last symbol of `prefix` (all symbols for
    /// the empty prefix).
    pub fn extensions<'a>(&'a self, prefix: &[u8]) -> Box<dyn Iterator<Item = u8> + 'a> {
        match prefix.last() {
            Some(&c) => Box::new(self.successors(c)),
            None => Box::new(0..self.l as u8),
        }
    }

    fn check_cap(&self, n: usize) -> Result<()> {
        if n > self.word_cap {
            return Err(Error::CapExceeded {
                what: "word length",
                requested: n,
                cap: self.word_cap,
            });
        }
        Ok(())
    }

    /// All admissible words of length `n` in lexicographic order.
    pub fn enumerate_words(&self, n: usize) -> Result<Vec<Word>> {
        self.enumerate_words_with(n, Exec::default())
    }

    pub fn enumerate_words_with(&self, n: usize, exec: Exec) -> Result<Vec<Word>> {
        if n == 0 {
            return Err(Error::InvalidArgument("word length must be >= 1".into()));
        }
        self.check_cap(n)?;
        let prefixes = self.chunk_prefixes(n);
        let chunks = exec.map(&prefixes, |p| {
            let mut out = Vec::new();
            self.for_each_extension(p, n, &mut |w| out.push(Word(w.to_vec())));
            out
        });
        Ok(chunks.into_iter().flatten().collect())
    }

    /// Lexicographically ordered admissible prefixes used to split word-tree
    /// work into independent chunks.
    pub(crate) fn chunk_prefixes(&self, n: usize) -> Vec<Vec<u8>> {
        let mut depth = 0;
        let mut count = self.l;
        while depth + 1 < n && count < 256 {
            depth += 1;
            count *= self.l;
        }
        let depth = (depth + 1).min(n);
        let mut out = Vec::new();
        self.for_each_extension(&[], depth, &mut |w| out.push(w.to_vec()));
        out
    }

    /// Visits every admissible word of length `n` extending `prefix`,
    /// lexicographically.
    pub(crate) fn for_each_extension(&self, prefix: &[u8], n: usize, f: &mut dyn FnMut(&[u8])) {
        let mut buf = prefix.to_vec();
        self.extend_rec(&mut buf, n, f);
    }

    fn extend_rec(&self, buf: &mut Vec<u8>, n: usize, f: &mut dyn FnMut(&[u8])) {
        if buf.len() == n {
            f(buf);
            return;
        }
        let next: Vec<u8> = self.extensions(buf).collect();
        for c in next {
            buf.push(c);
            self.extend_rec(buf, n, f);
            buf.pop();
        }
    }

    /// Number of admissible words of length `n`: the entry sum of
    /// `A^(n-1)`. Computed in `f64`, exact while below 2^53.
    pub fn word_count(&self, n: usize) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let mut v = vec![1.0f64; self.l];
        for _ in 1..n {
            let mut next = vec![0.0; self.l];
            for (i, nx) in next.iter_mut().enumerate() {
                for (j, vj) in v.iter().enumerate() {
                    if self.allowed[i * self.l + j] {
                        *nx += vj;
                    }
                }
            }
            v = next;
        }
        v.iter().sum()
    }

    /// True iff the transition graph is strongly connected.
    pub fn is_irreducible(&self) -> bool {
        let reach = |forward: bool| {
            let mut seen = vec![false; self.l];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..self.l {
                    let edge = if forward {
                        self.allowed[i * self.l + j]
                    } else {
                        self.allowed[j * self.l + i]
                    };
                    if edge && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    /// All admissible words of length `n` read backwards are the admissible
    /// words of the transposed shift.
    pub fn transposed(&self) -> Self {
        let mut allowed = vec![false; self.l * self.l];
        for i in 0..self.l {
            for j in 0..self.l {
                allowed[j * self.l + i] = self.allowed[i * self.l + j];
            }
        }
        Self {
            l: self.l,
            allowed,
            word_cap: self.word_cap,
        }
    }
}
