//! Sparse exponent vectors over integer mode labels.

use crate::error::{Error, Result};

/// Multi-index `q`: the monomial `v^q = prod_j v_j^(q_j)`.
///
/// Entries are kept sorted by mode label with strictly positive exponents,
/// so equality and ordering are canonical. The empty index (degree zero,
/// the constant monomial) is representable because intermediate results of
/// differentiation need it; stored series terms always have degree >= 1.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex {
    entries: Vec<(i32, u32)>,
}

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex::default()
    }

    pub fn single(mode: i32, exp: u32) -> Self {
        if exp == 0 {
            MultiIndex::empty()
        } else {
            MultiIndex {
                entries: vec![(mode, exp)],
            }
        }
    }

    /// Build from arbitrary (mode, exponent) pairs; repeated modes merge.
    pub fn from_pairs<I: IntoIterator<Item = (i32, u32)>>(pairs: I) -> Self {
        let mut q = MultiIndex::empty();
        for (mode, exp) in pairs {
            q = q.with(mode, exp as i64);
        }
        q
    }

    /// Returns a copy with `delta` added to the exponent of `mode`.
    /// Panics if the result would be negative.
    fn with(&self, mode: i32, delta: i64) -> Self {
        let mut entries = self.entries.clone();
        match entries.binary_search_by_key(&mode, |&(m, _)| m) {
            Ok(i) => {
                let new = entries[i].1 as i64 + delta;
                assert!(new >= 0, "negative exponent for mode {mode}");
                if new == 0 {
                    entries.remove(i);
                } else {
                    entries[i].1 = new as u32;
                }
            }
            Err(i) => {
                assert!(delta >= 0, "negative exponent for mode {mode}");
                if delta > 0 {
                    entries.insert(i, (mode, delta as u32));
                }
            }
        }
        MultiIndex { entries }
    }

    pub fn degree(&self) -> u32 {
        self.entries.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn exponent(&self, mode: i32) -> u32 {
        self.entries
            .binary_search_by_key(&mode, |&(m, _)| m)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn entries(&self) -> &[(i32, u32)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = i32> + '_ {
        self.entries.iter().map(|&(m, _)| m)
    }

    /// Product of monomials: exponents add.
    pub fn mul(&self, other: &MultiIndex) -> MultiIndex {
        let mut q = self.clone();
        for &(m, e) in &other.entries {
            q = q.with(m, e as i64);
        }
        q
    }

    /// `q - e_mode`, the index after one formal differentiation in `mode`.
    pub fn minus_one(&self, mode: i32) -> Option<MultiIndex> {
        if self.exponent(mode) == 0 {
            None
        } else {
            Some(self.with(mode, -1))
        }
    }

    /// Weighted label sum `sum_j j * q_j`. For Fourier-convolution systems
    /// this is the wavenumber the monomial feeds.
    pub fn momentum(&self) -> i64 {
        self.entries
            .iter()
            .map(|&(m, e)| m as i64 * e as i64)
            .sum()
    }

    /// All proper sub-multi-indices of degree in `2..degree()`, used by the
    /// truncation-sensitivity diagnostic to enumerate interaction chains.
    pub fn proper_subindices(&self) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, MultiIndex::empty())];
        while let Some((i, cur)) = stack.pop() {
            if i == self.entries.len() {
                let d = cur.degree();
                if d >= 2 && d < self.degree() {
                    out.push(cur);
                }
                continue;
            }
            let (m, e) = self.entries[i];
            for take in 0..=e {
                let mut next = cur.clone();
                if take > 0 {
                    next = next.with(m, take as i64);
                }
                stack.push((i + 1, next));
            }
        }
        out
    }

    /// Canonical text form `mode:exp,mode:exp`, sorted by mode.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(m, e)| format!("{m}:{e}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn from_text(s: &str) -> Result<MultiIndex> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(MultiIndex::empty());
        }
        let mut pairs = Vec::new();
        for part in s.split(',') {
            let (m, e) = part.trim().split_once(':').ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("invalid multi-index entry `{part}`"),
            })?;
            let mode: i32 = m.trim().parse().map_err(|_| Error::Parse {
                line: 0,
                msg: format!("invalid mode label `{m}`"),
            })?;
            let exp: u32 = e.trim().parse().map_err(|_| Error::Parse {
                line: 0,
                msg: format!("invalid exponent `{e}`"),
            })?;
            if exp == 0 {
                return Err(Error::Parse {
                    line: 0,
                    msg: "zero exponents are not stored".into(),
                });
            }
            pairs.push((mode, exp));
        }
        Ok(MultiIndex::from_pairs(pairs))
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.entries.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", self.to_text())
        }
    }
}

impl std::fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merging_and_canonical_order() {
        let q = MultiIndex::from_pairs([(2, 1), (-1, 1), (2, 1)]);
        assert_eq!(q.entries(), &[(-1, 1), (2, 2)]);
        assert_eq!(q.degree(), 3);
        assert_eq!(q.momentum(), 3);
    }

    #[test]
    fn differentiation_index() {
        let q = MultiIndex::from_pairs([(1, 1), (2, 1)]);
        let d = q.minus_one(2).unwrap();
        assert_eq!(d, MultiIndex::single(1, 1));
        assert!(q.minus_one(5).is_none());
        // removing the last exponent yields the empty index
        let lin = MultiIndex::single(3, 1);
        assert!(lin.minus_one(3).unwrap().is_empty());
    }

    #[test]
    fn subindices_enumerate_interaction_chains() {
        let q = MultiIndex::from_pairs([(-1, 1), (1, 1), (5, 1)]);
        let subs = q.proper_subindices();
        // degree-2 subsets of a degree-3 index: three of them
        assert_eq!(subs.len(), 3);
        let momenta: Vec<i64> = subs.iter().map(|s| s.momentum()).collect();
        assert!(momenta.contains(&0));
        assert!(momenta.contains(&4));
        assert!(momenta.contains(&6));
    }

    #[test]
    fn text_roundtrip() {
        let q = MultiIndex::from_pairs([(-1, 1), (1, 2)]);
        assert_eq!(MultiIndex::from_text(&q.to_text()).unwrap(), q);
        assert!(MultiIndex::from_text("1:0").is_err());
    }
}
