//! Eigenstructure, spectral-gap parameters, and resonance classification.
//!
//! The model holds the finite mode window, the exact eigenvalue of each mode,
//! and the trichotomy parameters (alpha, beta, gamma, mu_tilde). Eigenvalues
//! are supplied, never computed: diagonalization happens upstream. A model is
//! validated once at construction and immutable afterwards, so every query is
//! a pure function safe for concurrent use.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Signed;

use crate::algebra::{abs_re, display_crat, rat_to_f64, CRat, MultiIndex, Rat};
use crate::error::{Error, Result};

/// Which leg of the exponential trichotomy a mode belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ModeClass {
    Centre,
    Stable,
    Unstable,
}

impl ModeClass {
    pub fn tag(self) -> char {
        match self {
            ModeClass::Centre => 'c',
            ModeClass::Stable => 's',
            ModeClass::Unstable => 'u',
        }
    }
}

/// Spectral-gap parameters. `beta` or `gamma` may be infinite (`None`).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GapParams {
    pub alpha: Rat,
    pub beta: Option<Rat>,
    pub gamma: Option<Rat>,
    pub mu_tilde: Rat,
}

impl GapParams {
    /// Gap condition for a residual of order `p`:
    /// `beta - (p+1) alpha > mu_tilde` and `gamma - (p+1) alpha > mu_tilde`,
    /// in exact rational arithmetic. Infinite bounds always pass.
    pub fn check_order(&self, p: u32) -> GapCheck {
        let factor = Rat::from_integer((p as i64 + 1).into());
        let checks: [(&str, &Option<Rat>); 2] = [("beta", &self.beta), ("gamma", &self.gamma)];
        for (name, bound) in checks {
            if let Some(b) = bound {
                let lhs = b - &factor * &self.alpha;
                if lhs <= self.mu_tilde {
                    return GapCheck::Violation {
                        inequality: format!("{name} - (p+1)*alpha > mu_tilde at p = {p}"),
                        slack: lhs - &self.mu_tilde,
                    };
                }
            }
        }
        GapCheck::Ok
    }

    fn finite_min_bound(&self) -> Option<&Rat> {
        match (&self.beta, &self.gamma) {
            (Some(b), Some(g)) => Some(if b <= g { b } else { g }),
            (Some(b), None) => Some(b),
            (None, Some(g)) => Some(g),
            (None, None) => None,
        }
    }
}

/// Outcome of the order-`p` gap condition check.
#[derive(Clone, Debug, PartialEq)]
pub enum GapCheck {
    Ok,
    Violation { inequality: String, slack: Rat },
}

impl GapCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, GapCheck::Ok)
    }
}

/// The spectral model: mode labels, exact eigenvalues, gap parameters,
/// and the truncation bound of the mode window.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SpectralModel {
    modes: Vec<i32>,
    alpha: BTreeMap<i32, CRat>,
    gap: GapParams,
    truncation: i64,
}

impl SpectralModel {
    /// Validate and freeze a model. Fails hard on any forbidden-band
    /// eigenvalue or mis-ordered gap parameters: every later guarantee
    /// depends on these invariants.
    pub fn new(
        mut modes: Vec<i32>,
        alpha: BTreeMap<i32, CRat>,
        gap: GapParams,
        truncation: Option<i64>,
    ) -> Result<Arc<SpectralModel>> {
        modes.sort_unstable();
        modes.dedup();
        if modes.is_empty() {
            return Err(Error::ModelInvariant("mode set is empty".into()));
        }
        for j in &modes {
            if !alpha.contains_key(j) {
                return Err(Error::ModelInvariant(format!(
                    "mode {j} has no eigenvalue entry"
                )));
            }
        }
        if gap.alpha.is_negative() {
            return Err(Error::ModelInvariant(
                "0 <= alpha < mu_tilde < min(beta,gamma) (alpha negative)".into(),
            ));
        }
        if gap.mu_tilde <= gap.alpha {
            return Err(Error::ModelInvariant(
                "0 <= alpha < mu_tilde < min(beta,gamma) (mu_tilde <= alpha)".into(),
            ));
        }
        if let Some(min_bg) = gap.finite_min_bound() {
            if &gap.mu_tilde >= min_bg {
                return Err(Error::ModelInvariant(
                    "0 <= alpha < mu_tilde < min(beta,gamma) (mu_tilde >= min(beta,gamma))"
                        .into(),
                ));
            }
        }
        let truncation =
            truncation.unwrap_or_else(|| modes.iter().map(|&m| (m as i64).abs()).max().unwrap());
        let model = SpectralModel {
            modes,
            alpha,
            gap,
            truncation,
        };
        // forbidden bands: no Re(alpha_j) in (-beta, -alpha) or (alpha, gamma)
        for &j in &model.modes {
            model.classify(j)?;
        }
        Ok(Arc::new(model))
    }

    pub fn modes(&self) -> &[i32] {
        &self.modes
    }

    pub fn gap(&self) -> &GapParams {
        &self.gap
    }

    pub fn mu_tilde_f64(&self) -> f64 {
        rat_to_f64(&self.gap.mu_tilde)
    }

    pub fn truncation(&self) -> i64 {
        self.truncation
    }

    pub fn contains_mode(&self, j: i32) -> bool {
        self.modes.binary_search(&j).is_ok()
    }

    pub fn mode_index(&self, j: i32) -> Option<usize> {
        self.modes.binary_search(&j).ok()
    }

    pub fn eigenvalue(&self, j: i32) -> Result<&CRat> {
        self.alpha.get(&j).ok_or(Error::MissingMode(j))
    }

    /// Centre / stable / unstable classification of one mode. Errors if the
    /// eigenvalue falls in a forbidden band, which `new` rules out up front.
    pub fn classify(&self, j: i32) -> Result<ModeClass> {
        let a = self.eigenvalue(j)?;
        let re = &a.re;
        if re.abs() <= self.gap.alpha {
            return Ok(ModeClass::Centre);
        }
        match &self.gap.beta {
            Some(beta) if re <= &(-beta.clone()) => return Ok(ModeClass::Stable),
            _ => {}
        }
        match &self.gap.gamma {
            Some(gamma) if re >= gamma => return Ok(ModeClass::Unstable),
            _ => {}
        }
        Err(Error::UnclassifiableMode {
            mode: j,
            re: re.to_string(),
        })
    }

    /// Modes of a given class, in label order.
    pub fn modes_of(&self, class: ModeClass) -> Vec<i32> {
        self.modes
            .iter()
            .copied()
            .filter(|&j| self.classify(j).map_or(false, |c| c == class))
            .collect()
    }

    /// Split `q = q_c + q_s + q_u` along the trichotomy.
    pub fn split_multiindex(&self, q: &MultiIndex) -> Result<(MultiIndex, MultiIndex, MultiIndex)> {
        let mut c = Vec::new();
        let mut s = Vec::new();
        let mut u = Vec::new();
        for &(m, e) in q.entries() {
            match self.classify(m)? {
                ModeClass::Centre => c.push((m, e)),
                ModeClass::Stable => s.push((m, e)),
                ModeClass::Unstable => u.push((m, e)),
            }
        }
        Ok((
            MultiIndex::from_pairs(c),
            MultiIndex::from_pairs(s),
            MultiIndex::from_pairs(u),
        ))
    }

    /// Resonance sum `mu^q = sum_j q_j alpha_j`, exact.
    pub fn mu_q(&self, q: &MultiIndex) -> Result<CRat> {
        let mut acc = crate::algebra::crat_zero();
        for &(m, e) in q.entries() {
            let a = self.eigenvalue(m)?;
            acc = acc + a * crate::algebra::crat_int(e as i64);
        }
        Ok(acc)
    }

    /// Resonance exponent `mu^q_j = mu^q - alpha_j`, exact.
    pub fn mu_qj(&self, q: &MultiIndex, j: i32) -> Result<CRat> {
        Ok(self.mu_q(q)? - self.eigenvalue(j)?.clone())
    }

    /// Membership of `j` in the structural elimination set `J^q`:
    /// true means the separation structure *requires* eliminating the
    /// `(q, j)` term into the transform; false means it may stay in the
    /// normal-form nonlinearity.
    pub fn in_jq(&self, q: &MultiIndex, j: i32) -> Result<bool> {
        let (_, qs, qu) = self.split_multiindex(q)?;
        Ok(match self.classify(j)? {
            ModeClass::Centre => {
                (qs.is_empty() && !qu.is_empty()) || (qu.is_empty() && !qs.is_empty())
            }
            ModeClass::Stable => qs.is_empty(),
            ModeClass::Unstable => qu.is_empty(),
        })
    }

    /// `|Re mu^q_j| - mu_tilde`, the exact margin against the small-divisor
    /// threshold. Positive margin means the term is eliminable.
    pub fn re_margin(&self, q: &MultiIndex, j: i32) -> Result<Rat> {
        Ok(abs_re(&self.mu_qj(q, j)?) - self.gap.mu_tilde.clone())
    }

    /// Gap condition for a residual of order `p`; see [`GapParams::check_order`].
    pub fn gap_check(&self, p: u32) -> GapCheck {
        self.gap.check_order(p)
    }

    pub fn describe_mu(&self, q: &MultiIndex, j: i32) -> String {
        match self.mu_qj(q, j) {
            Ok(mu) => display_crat(&mu),
            Err(_) => "?".into(),
        }
    }
}

/// One row of the resonance report: the exponent, the structural
/// classification, and the exact margin against `mu_tilde`.
#[derive(Clone, Debug)]
pub struct ResonanceEntry {
    pub q: MultiIndex,
    pub j: i32,
    pub mu: CRat,
    pub in_jq: bool,
    pub re_margin: Rat,
}

#[derive(Clone, Debug, Default)]
pub struct ResonanceReport {
    pub entries: Vec<ResonanceEntry>,
}
