//! Order-by-order construction of the near-identity transform `xi_p` and the
//! separated normal form `F_p`.
//!
//! One step takes a state whose residual vanishes below order `p`, reads the
//! exact degree-`p` forcing coefficients off the residual, splits each
//! `(q, j)` pair on the small-divisor threshold, solves the scalar update ODE
//! for the eliminated pairs, and recomputes the residual one order higher.
//!
//! Elimination rule: a pair is absorbed into the transform exactly when its
//! resonance exponent satisfies `|Re mu^q_j| > mu_tilde`. Every pair that the
//! separation structure *requires* to be eliminated (`j in J^q`) is covered by
//! this rule whenever the spectral gap condition holds; that inclusion is
//! asserted for every such pair during construction. Kept pairs have
//! `|Re mu^q_j| <= mu_tilde`, which forces them to satisfy the separation
//! clause of their target's class, so the constructed normal form separates
//! invariant subspaces by construction (and `verify_separation` re-checks it).

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::algebra::{
    crat_div, crat_int, CRat, ModalSeries, MultiIndex, Rat, TimePoly,
};
use crate::error::{Error, Result};
use crate::model::{GapCheck, ModeClass, ResonanceEntry, ResonanceReport, SpectralModel};

/// Transform state at order `p`: the residual of the transported system
/// vanishes identically below degree `p`.
#[derive(Clone, Debug)]
pub struct TransformState {
    pub p: u32,
    /// Full transform, identity part included.
    pub xi: ModalSeries,
    /// Normal-form nonlinearity `F_p`.
    pub normal_form: ModalSeries,
    /// Residual of the transported system, exact through its `max_degree`.
    pub residual: ModalSeries,
}

/// One update solve: what happened to the `(q, j)` forcing term.
#[derive(Clone, Debug)]
pub struct UpdateRecord {
    pub q: MultiIndex,
    pub j: i32,
    pub mu: CRat,
    /// `|Re mu| - mu_tilde`, exact.
    pub re_margin: Rat,
    /// Structural elimination-set membership (`j in J^q`).
    pub in_jq: bool,
    pub eliminated: bool,
    /// Forcing coefficient `a^q_j` read off the residual.
    pub forcing: TimePoly,
    pub xi_hat: TimePoly,
    pub f_hat: TimePoly,
    /// True when the coefficient's interaction chains can touch the mode
    /// window boundary, i.e. it may differ from the untruncated system's.
    pub truncation_flagged: bool,
}

/// All updates performed while raising the order from `p` to `p+1`.
#[derive(Clone, Debug)]
pub struct OrderLedger {
    /// Degree of the eliminated homogeneous part.
    pub order: u32,
    pub records: Vec<UpdateRecord>,
}

/// Result of a full construction run.
#[derive(Clone, Debug)]
pub struct NormalFormResult {
    pub model: Arc<SpectralModel>,
    /// The ingested nonlinearity the run started from.
    pub nonlinearity: ModalSeries,
    pub state: TransformState,
    pub orders: Vec<OrderLedger>,
}

impl NormalFormResult {
    pub fn xi(&self) -> &ModalSeries {
        &self.state.xi
    }

    pub fn normal_form(&self) -> &ModalSeries {
        &self.state.normal_form
    }

    pub fn residual(&self) -> &ModalSeries {
        &self.state.residual
    }

    pub fn resonance_report(&self) -> ResonanceReport {
        let mut entries = Vec::new();
        for ledger in &self.orders {
            for r in &ledger.records {
                entries.push(ResonanceEntry {
                    q: r.q.clone(),
                    j: r.j,
                    mu: r.mu.clone(),
                    in_jq: r.in_jq,
                    re_margin: r.re_margin.clone(),
                });
            }
        }
        ResonanceReport { entries }
    }

    /// Coefficients whose values depend on the finite mode window.
    pub fn truncation_flagged(&self) -> Vec<(u32, MultiIndex, i32)> {
        let mut out = Vec::new();
        for ledger in &self.orders {
            for r in &ledger.records {
                if r.truncation_flagged {
                    out.push((ledger.order, r.q.clone(), r.j));
                }
            }
        }
        out
    }
}

/// Exact residual of the transported system, truncated to `keep_deg`:
/// `R = d_t xi + D xi . (A v + F) - A(xi) - f(xi)`.
///
/// `xi` must contain its identity part; `A` acts diagonally through the
/// model's eigenvalues.
pub fn residual(
    f: &ModalSeries,
    xi: &ModalSeries,
    normal_form: &ModalSeries,
    keep_deg: u32,
) -> Result<ModalSeries> {
    let model = f.model().clone();
    let drift = ModalSeries::diagonal_field(model).add(normal_form)?;
    let transported = xi
        .time_derivative()
        .add(&xi.directional_derivative(&drift, keep_deg)?)?;
    let lin = xi.apply_diagonal();
    let comp = f.compose(xi, keep_deg)?;
    Ok(transported.sub(&lin)?.sub(&comp)?.truncate(keep_deg))
}

/// Read the degree-`p` forcing coefficients off a residual:
/// `a^q_j = -(coefficient of v^q in mode j)`. The minus sign is part of the
/// contract. Errors if any lower-degree term survives.
pub fn extract_forcing(
    r: &ModalSeries,
    p: u32,
) -> Result<BTreeMap<MultiIndex, BTreeMap<i32, TimePoly>>> {
    let mut out: BTreeMap<MultiIndex, BTreeMap<i32, TimePoly>> = BTreeMap::new();
    for (j, q, c) in r.terms() {
        let d = q.degree();
        if d < p {
            return Err(Error::OrderViolation {
                degree: d,
                order: p,
            });
        }
        if d == p {
            out.entry(q.clone()).or_default().insert(j, c.neg());
        }
    }
    Ok(out)
}

/// The unique polynomial solution of `xi' + mu xi = a`, by back-substitution
/// from the leading coefficient. This equals the mu-regular exponential
/// convolution solution whenever `|Re mu| > mu_tilde`.
pub fn solve_update(mu: &CRat, a: &TimePoly) -> Result<TimePoly> {
    if mu.is_zero() {
        return Err(Error::ZeroDivisor);
    }
    let Some(d) = a.degree() else {
        return Ok(TimePoly::zero());
    };
    let mut coeffs = vec![crate::algebra::crat_zero(); d + 1];
    coeffs[d] = crat_div(&a.coeff(d), mu);
    for m in (0..d).rev() {
        let num = a.coeff(m) - crat_int(m as i64 + 1) * &coeffs[m + 1];
        coeffs[m] = crat_div(&num, mu);
    }
    Ok(TimePoly::from_coeffs(coeffs))
}

/// True when some intermediate interaction target of the monomial `q` falls
/// outside the mode window: the coefficient then depends on the truncation.
fn touches_mode_boundary(model: &SpectralModel, q: &MultiIndex) -> bool {
    q.proper_subindices().iter().any(|sub| {
        let m = sub.momentum();
        i32::try_from(m).map_or(true, |m| !model.contains_mode(m))
    })
}

/// Raise the order of a valid state by one.
pub fn step(f: &ModalSeries, state: &TransformState) -> Result<(TransformState, OrderLedger)> {
    let model = f.model().clone();
    let p = state.p;
    if let GapCheck::Violation { inequality, slack } = model.gap_check(p + 1) {
        return Err(Error::GapViolation(format!(
            "{inequality} fails with slack {slack}"
        )));
    }

    let forcing = extract_forcing(&state.residual, p)?;
    let mut xi = state.xi.clone();
    let mut normal_form = state.normal_form.clone();
    let mut records = Vec::new();

    for (q, per_mode) in forcing {
        for (j, a) in per_mode {
            let mu = model.mu_qj(&q, j)?;
            let in_jq = model.in_jq(&q, j)?;
            let re_margin = model.re_margin(&q, j)?;
            let eliminate = re_margin.is_positive();
            if in_jq && !eliminate {
                // the spectral-gap guarantee is broken; separation cannot
                // be maintained for this term
                return Err(Error::SmallDivisor {
                    q,
                    j,
                    mu: crate::algebra::display_crat(&mu),
                });
            }
            let (xi_hat, f_hat) = if eliminate {
                let xi_hat = solve_update(&mu, &a)?;
                // update ODE identity, exact: xi' + mu xi - a = 0
                let defect = xi_hat.derivative().add(&xi_hat.scale(&mu)).sub(&a);
                assert!(defect.is_zero(), "update solve defect for q={q}, j={j}");
                xi.add_term(j, q.clone(), xi_hat.clone())?;
                (xi_hat, TimePoly::zero())
            } else {
                normal_form.add_term(j, q.clone(), a.clone())?;
                (TimePoly::zero(), a.clone())
            };
            records.push(UpdateRecord {
                truncation_flagged: touches_mode_boundary(&model, &q),
                q: q.clone(),
                j,
                mu,
                re_margin,
                in_jq,
                eliminated: eliminate,
                forcing: a,
                xi_hat,
                f_hat,
            });
        }
    }

    let new_residual = residual(f, &xi, &normal_form, p + 1)?;
    for d in 1..=p {
        if !new_residual.homogeneous_part(d).is_empty() {
            return Err(Error::ResidualOrderViolation {
                degree: d,
                order: p + 1,
            });
        }
    }

    Ok((
        TransformState {
            p: p + 1,
            xi,
            normal_form,
            residual: new_residual,
        },
        OrderLedger { order: p, records },
    ))
}

/// Iterate the construction from the identity base state up to `p_target`.
///
/// The returned state carries the residual recomputed without truncation
/// (its top degree is bounded because transform and nonlinearity are
/// polynomials), so downstream numerics see the exact defect.
pub fn run(f: &ModalSeries, p_target: u32) -> Result<NormalFormResult> {
    if p_target < 2 {
        return Err(Error::ModelInvariant("target order must be >= 2".into()));
    }
    let model = f.model().clone();
    if let GapCheck::Violation { inequality, slack } = model.gap_check(p_target) {
        return Err(Error::GapViolation(format!(
            "{inequality} fails with slack {slack}"
        )));
    }
    if f.min_degree().map_or(false, |d| d < 2) {
        return Err(Error::ModelInvariant(
            "nonlinearity must vanish to second order at the origin".into(),
        ));
    }

    let poly_deg = p_target.saturating_sub(1).max(1);
    let xi = ModalSeries::identity(model.clone()).with_max_degree(poly_deg);
    let normal_form = ModalSeries::zero(model.clone(), poly_deg);
    let base_residual = residual(f, &xi, &normal_form, 2)?;
    let mut state = TransformState {
        p: 2,
        xi,
        normal_form,
        residual: base_residual,
    };

    let mut orders = Vec::new();
    while state.p < p_target {
        let (next, ledger) = step(f, &state)?;
        orders.push(ledger);
        state = next;
    }

    state.residual = residual(f, &state.xi, &state.normal_form, full_residual_degree(f, p_target))?;
    debug_assert!(verify_separation(&state.normal_form));

    Ok(NormalFormResult {
        model,
        nonlinearity: f.clone(),
        state,
        orders,
    })
}

/// Degree bound of the exact residual: compositions of the degree-`s`
/// nonlinearity with a degree-`(p-1)` transform, and the transport term.
fn full_residual_degree(f: &ModalSeries, p: u32) -> u32 {
    let s = f.top_degree().unwrap_or(2);
    (s * (p - 1)).max(2 * p - 3).max(1)
}

/// Check the separation structure clause by clause: centre targets carry only
/// pure-centre or mixed stable-unstable monomials, stable targets need a
/// stable factor, unstable targets an unstable factor.
pub fn verify_separation(normal_form: &ModalSeries) -> bool {
    let model = normal_form.model().clone();
    normal_form.terms().all(|(j, q, _)| {
        let Ok((_, qs, qu)) = model.split_multiindex(q) else {
            return false;
        };
        match model.classify(j) {
            Ok(ModeClass::Centre) => {
                (qs.is_empty() && qu.is_empty()) || (!qs.is_empty() && !qu.is_empty())
            }
            Ok(ModeClass::Stable) => !qs.is_empty(),
            Ok(ModeClass::Unstable) => !qu.is_empty(),
            Err(_) => false,
        }
    })
}

/// One-shot degree-2 transform for quadratic nonlinearities with a pure-`t`
/// time factor, from the closed per-term formula `c (d t - d^2)` with
/// `d = 1/mu^q_j` built directly from the eigenvalues. Used as a cross-check
/// oracle against the iteration; shares none of its residual machinery.
pub fn direct_oracle_xi3(f: &ModalSeries) -> Result<ModalSeries> {
    let model = f.model().clone();
    let mut out = ModalSeries::identity(model.clone()).with_max_degree(2);
    for (j, q, c) in f.terms() {
        if q.degree() != 2 {
            return Err(Error::NotQuadraticConvolution(format!(
                "term (j={j}, q={q}) has degree {}",
                q.degree()
            )));
        }
        if c.degree() != Some(1) || !c.coeff(0).is_zero() {
            return Err(Error::NotQuadraticConvolution(format!(
                "coefficient at (j={j}, q={q}) is not a pure multiple of t"
            )));
        }
        let slope = c.coeff(1);
        let mu = model.mu_qj(q, j)?;
        if !model.re_margin(q, j)?.is_positive() {
            continue; // small divisor: stays in the evolution, no transform term
        }
        let d = crat_div(&crate::algebra::crat_one(), &mu);
        let lin = &slope * &d;
        let cst = -(&lin * &d);
        out.add_term(j, q.clone(), TimePoly::from_coeffs(vec![cst, lin]))?;
    }
    Ok(out)
}

impl ModalSeries {
    /// Same terms under a (weakly larger) degree bound.
    pub fn with_max_degree(&self, max_deg: u32) -> ModalSeries {
        assert!(self.top_degree().map_or(0, |d| d) <= max_deg);
        self.truncate(max_deg)
    }
}
