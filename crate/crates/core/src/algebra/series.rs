//! Finite modal series: maps `(t, v) -> V` stored as sparse sums
//! `sum_{j,q} c_{j,q}(t) v^q e_j` with exact time-polynomial coefficients.
//!
//! A series is bound to the spectral model whose mode set constrains both the
//! target labels and every multi-index support. Values are immutable after
//! construction; every operation here is a pure function of its inputs, so
//! series can be shared freely across worker threads.
//!
//! Truncation contract: any term whose total degree in `v` exceeds the
//! requested bound is discarded the moment it is produced, never materialized
//! past a single multiplication.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;

use super::multiindex::MultiIndex;
use super::scalar::{crat_int, C64, CRat};
use super::statevec::StateVector;
use super::timepoly::TimePoly;
use crate::error::{Error, Result};
use crate::model::SpectralModel;

type TermMap = BTreeMap<(i32, MultiIndex), TimePoly>;
type PolyMap = BTreeMap<MultiIndex, TimePoly>;

/// `v^q` in double precision. Errors if a support mode is missing from `v`.
pub fn mono_eval(q: &MultiIndex, v: &StateVector) -> Result<C64> {
    let mut acc = Complex::new(1.0, 0.0);
    for &(m, e) in q.entries() {
        let x = v.get(m).ok_or(Error::MissingMode(m))?;
        acc *= x.powu(e);
    }
    Ok(acc)
}

#[derive(Clone, PartialEq)]
pub struct ModalSeries {
    model: Arc<SpectralModel>,
    max_degree: u32,
    terms: TermMap,
}

impl ModalSeries {
    pub fn zero(model: Arc<SpectralModel>, max_degree: u32) -> Self {
        assert!(max_degree >= 1, "max_degree must be positive");
        ModalSeries {
            model,
            max_degree,
            terms: TermMap::new(),
        }
    }

    /// The identity transform: terms `(j, {j:1}) -> 1` for every mode.
    pub fn identity(model: Arc<SpectralModel>) -> Self {
        let mut s = ModalSeries::zero(model.clone(), 1);
        for &j in model.modes() {
            s.terms
                .insert((j, MultiIndex::single(j, 1)), TimePoly::one());
        }
        s
    }

    pub fn model(&self) -> &Arc<SpectralModel> {
        &self.model
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &MultiIndex, &TimePoly)> {
        self.terms.iter().map(|((j, q), c)| (*j, q, c))
    }

    pub fn coefficient(&self, j: i32, q: &MultiIndex) -> TimePoly {
        self.terms
            .get(&(j, q.clone()))
            .cloned()
            .unwrap_or_else(TimePoly::zero)
    }

    /// Accumulate one term, enforcing the stored-term invariants:
    /// labels inside the model, `1 <= |q| <= max_degree`, no zero entries.
    pub fn add_term(&mut self, j: i32, q: MultiIndex, c: TimePoly) -> Result<()> {
        if c.is_zero() {
            return Ok(());
        }
        if !self.model.contains_mode(j) {
            return Err(Error::MissingMode(j));
        }
        for m in q.support() {
            if !self.model.contains_mode(m) {
                return Err(Error::MissingMode(m));
            }
        }
        let d = q.degree();
        if d == 0 || d > self.max_degree {
            return Err(Error::ModelInvariant(format!(
                "term degree {d} outside 1..={}",
                self.max_degree
            )));
        }
        let key = (j, q);
        let sum = match self.terms.remove(&key) {
            Some(existing) => existing.add(&c),
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(key, sum);
        }
        Ok(())
    }

    fn same_model(&self, other: &ModalSeries) -> Result<()> {
        if self.model == other.model {
            Ok(())
        } else {
            Err(Error::ModelMismatch)
        }
    }

    /// Termwise `a*S1 + b*S2`, canonicalized; `max_degree` is the max of both.
    pub fn combine(a: &CRat, s1: &ModalSeries, b: &CRat, s2: &ModalSeries) -> Result<ModalSeries> {
        s1.same_model(s2)?;
        let mut out = ModalSeries::zero(s1.model.clone(), s1.max_degree.max(s2.max_degree));
        for ((j, q), c) in &s1.terms {
            out.add_term(*j, q.clone(), c.scale(a))?;
        }
        for ((j, q), c) in &s2.terms {
            out.add_term(*j, q.clone(), c.scale(b))?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &ModalSeries) -> Result<ModalSeries> {
        ModalSeries::combine(&super::scalar::crat_one(), self, &super::scalar::crat_one(), other)
    }

    pub fn sub(&self, other: &ModalSeries) -> Result<ModalSeries> {
        ModalSeries::combine(
            &super::scalar::crat_one(),
            self,
            &(-super::scalar::crat_one()),
            other,
        )
    }

    pub fn scale(&self, s: &CRat) -> ModalSeries {
        let mut out = ModalSeries::zero(self.model.clone(), self.max_degree);
        if s.is_zero() {
            return out;
        }
        for ((j, q), c) in &self.terms {
            out.terms.insert((*j, q.clone()), c.scale(s));
        }
        out
    }

    /// Differentiate every coefficient in `t`; degrees in `v` are unchanged.
    pub fn time_derivative(&self) -> ModalSeries {
        let mut out = ModalSeries::zero(self.model.clone(), self.max_degree);
        for ((j, q), c) in &self.terms {
            let d = c.derivative();
            if !d.is_zero() {
                out.terms.insert((*j, q.clone()), d);
            }
        }
        out
    }

    /// Apply the diagonal linear operator: mode `j` scaled by `alpha_j`.
    pub fn apply_diagonal(&self) -> ModalSeries {
        let mut out = ModalSeries::zero(self.model.clone(), self.max_degree);
        for ((j, q), c) in &self.terms {
            let a = self.model.eigenvalue(*j).expect("target in model");
            out.terms.insert((*j, q.clone()), c.scale(a));
        }
        out
    }

    /// The diagonal drift itself as a linear series: `(j, {j:1}) -> alpha_j`.
    pub fn diagonal_field(model: Arc<SpectralModel>) -> ModalSeries {
        let mut s = ModalSeries::zero(model.clone(), 1);
        for &j in model.modes() {
            let a = model.eigenvalue(j).expect("mode in model").clone();
            if !a.is_zero() {
                s.terms
                    .insert((j, MultiIndex::single(j, 1)), TimePoly::constant(a));
            }
        }
        s
    }

    /// Restriction to terms with `|q| = d` exactly.
    pub fn homogeneous_part(&self, d: u32) -> ModalSeries {
        let mut out = ModalSeries::zero(self.model.clone(), self.max_degree.max(d.max(1)));
        for ((j, q), c) in &self.terms {
            if q.degree() == d {
                out.terms.insert((*j, q.clone()), c.clone());
            }
        }
        out
    }

    /// Drop every term of degree exceeding `max_deg`.
    pub fn truncate(&self, max_deg: u32) -> ModalSeries {
        let mut out = ModalSeries::zero(self.model.clone(), max_deg.max(1));
        for ((j, q), c) in &self.terms {
            if q.degree() <= max_deg {
                out.terms.insert((*j, q.clone()), c.clone());
            }
        }
        out
    }

    /// Smallest degree present, if any.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(|(_, q)| q.degree()).min()
    }

    /// Largest degree present, if any.
    pub fn top_degree(&self) -> Option<u32> {
        self.terms.keys().map(|(_, q)| q.degree()).max()
    }

    /// Per-target-mode scalar polynomials, used by composition and
    /// directional derivatives.
    fn components(&self) -> BTreeMap<i32, PolyMap> {
        let mut comps: BTreeMap<i32, PolyMap> = BTreeMap::new();
        for ((j, q), c) in &self.terms {
            comps
                .entry(*j)
                .or_default()
                .insert(q.clone(), c.clone());
        }
        comps
    }

    /// Evaluate at `(t, v)` in double precision.
    pub fn eval(&self, t: f64, v: &StateVector) -> Result<StateVector> {
        let mut out = StateVector::new();
        for ((j, q), c) in &self.terms {
            let val = c.eval(t) * mono_eval(q, v)?;
            let cur = out.entry_or_zero(*j);
            out.set(*j, cur + val);
        }
        Ok(out)
    }

    /// Directional derivative `sum_m (dS/dv_m) * G_m`, expanded exactly and
    /// truncated to total degree `max_deg`.
    pub fn directional_derivative(&self, g: &ModalSeries, max_deg: u32) -> Result<ModalSeries> {
        self.same_model(g)?;
        let gcomps = g.components();
        let mut out = ModalSeries::zero(self.model.clone(), max_deg.max(1));
        for ((j, q), c) in &self.terms {
            for &(m, e) in q.entries() {
                let Some(gm) = gcomps.get(&m) else { continue };
                let base = q.minus_one(m).expect("mode in support");
                let factor = c.scale(&crat_int(e as i64));
                for (qg, cg) in gm {
                    let qq = base.mul(qg);
                    if qq.degree() > max_deg {
                        continue;
                    }
                    out.add_term(*j, qq, factor.mul(cg))?;
                }
            }
        }
        Ok(out)
    }

    /// Substitute `v_m <- xi_m(t, .)` into every monomial, expanding products
    /// exactly and discarding all terms of degree above `max_deg`.
    ///
    /// `xi` must be the full transform, identity part included.
    pub fn compose(&self, xi: &ModalSeries, max_deg: u32) -> Result<ModalSeries> {
        self.same_model(xi)?;
        let comps = xi.components();
        let empty = PolyMap::new();
        let mut out = ModalSeries::zero(self.model.clone(), max_deg.max(1));
        for ((j, q), c) in &self.terms {
            let mut acc: PolyMap = PolyMap::new();
            acc.insert(MultiIndex::empty(), TimePoly::one());
            for &(m, e) in q.entries() {
                let xm = comps.get(&m).unwrap_or(&empty);
                for _ in 0..e {
                    acc = poly_mul_trunc(&acc, xm, max_deg);
                    if acc.is_empty() {
                        break;
                    }
                }
                if acc.is_empty() {
                    break;
                }
            }
            for (qq, poly) in acc {
                out.add_term(*j, qq, c.mul(&poly))?;
            }
        }
        Ok(out)
    }

    /// Canonical serialization: one record per term, sorted by
    /// `(target mode, multi-index)`.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# modalnf series v1\n");
        s.push_str(&format!("maxdeg {}\n", self.max_degree));
        for ((j, q), c) in &self.terms {
            s.push_str(&format!("{j} | {} | {}\n", q.to_text(), c.to_text()));
        }
        s
    }

    pub fn from_text(text: &str, model: Arc<SpectralModel>) -> Result<ModalSeries> {
        let mut max_degree: Option<u32> = None;
        let mut terms: Vec<(i32, MultiIndex, TimePoly)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            if let Some(rest) = line.strip_prefix("maxdeg") {
                max_degree = Some(
                    rest.trim()
                        .parse()
                        .map_err(|_| at(format!("invalid maxdeg `{rest}`")))?,
                );
                continue;
            }
            let mut parts = line.splitn(3, '|');
            let j: i32 = parts
                .next()
                .ok_or_else(|| at("missing target".into()))?
                .trim()
                .parse()
                .map_err(|_| at("invalid target mode".into()))?;
            let q = MultiIndex::from_text(
                parts.next().ok_or_else(|| at("missing multi-index".into()))?,
            )?;
            let c = TimePoly::from_text(
                parts.next().ok_or_else(|| at("missing coefficient".into()))?,
            )?;
            terms.push((j, q, c));
        }
        let max_degree = max_degree.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "missing maxdeg header".into(),
        })?;
        let mut out = ModalSeries::zero(model, max_degree);
        for (j, q, c) in terms {
            out.add_term(j, q, c)?;
        }
        Ok(out)
    }
}

fn poly_mul_trunc(a: &PolyMap, b: &PolyMap, max_deg: u32) -> PolyMap {
    let mut out = PolyMap::new();
    for (qa, ca) in a {
        for (qb, cb) in b {
            if qa.degree() + qb.degree() > max_deg {
                continue;
            }
            let q = qa.mul(qb);
            let c = ca.mul(cb);
            if c.is_zero() {
                continue;
            }
            let entry = out.entry(q).or_insert_with(TimePoly::zero);
            *entry = entry.add(&c);
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

impl std::fmt::Debug for ModalSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ModalSeries(maxdeg {}) {{", self.max_degree)?;
        for ((j, q), c) in &self.terms {
            writeln!(f, "  e_{j} * v^({q}) * [{c:?}]")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::scalar::{crat_frac, crat_int, crat_one};
    use crate::testsupport::tiny_model;

    fn series_of(
        model: &Arc<SpectralModel>,
        max_deg: u32,
        terms: &[(i32, &[(i32, u32)], TimePoly)],
    ) -> ModalSeries {
        let mut s = ModalSeries::zero(model.clone(), max_deg);
        for (j, q, c) in terms {
            s.add_term(*j, MultiIndex::from_pairs(q.iter().copied()), c.clone())
                .unwrap();
        }
        s
    }

    #[test]
    fn mono_eval_examples() {
        let v = StateVector::from_entries([(1, Complex::new(3.0, 0.0))]);
        let q = MultiIndex::single(1, 2);
        assert_eq!(mono_eval(&q, &v).unwrap(), Complex::new(9.0, 0.0));

        let v = StateVector::from_entries([
            (1, Complex::new(2.0, 0.0)),
            (-1, Complex::new(5.0, 0.0)),
        ]);
        let q = MultiIndex::from_pairs([(1, 1), (-1, 1)]);
        assert_eq!(mono_eval(&q, &v).unwrap(), Complex::new(10.0, 0.0));

        // extra modes in v are ignored
        let v = StateVector::from_entries([
            (1, Complex::new(0.5, 0.0)),
            (2, Complex::new(4.0, 0.0)),
            (3, Complex::new(7.0, 0.0)),
        ]);
        let q = MultiIndex::from_pairs([(1, 1), (2, 1)]);
        assert_eq!(mono_eval(&q, &v).unwrap(), Complex::new(2.0, 0.0));

        // missing mode is an error
        let q = MultiIndex::single(9, 1);
        assert!(matches!(mono_eval(&q, &v), Err(Error::MissingMode(9))));
    }

    #[test]
    fn series_eval_examples() {
        let model = tiny_model();
        // (2, {1:2}) -> t/6 - 1/18 at t = 1, v_1 = 1 gives 1/9
        let s = series_of(
            &model,
            2,
            &[(
                2,
                &[(1, 2)],
                TimePoly::from_coeffs(vec![crat_frac(-1, 18), crat_frac(1, 6)]),
            )],
        );
        let v = StateVector::from_entries([(1, Complex::new(1.0, 0.0))]);
        let out = s.eval(1.0, &v).unwrap();
        assert!((out.get(2).unwrap() - Complex::new(1.0 / 9.0, 0.0)).norm() < 1e-15);

        // empty series evaluates to the zero vector
        let z = ModalSeries::zero(model.clone(), 2);
        assert!(z.eval(1.0, &v).unwrap().is_empty());

        // (0, {1:1,-1:1}) -> t + 1 at t = 2, v = (1,1) gives 3
        let s = series_of(
            &model,
            2,
            &[(
                0,
                &[(1, 1), (-1, 1)],
                TimePoly::from_coeffs(vec![crat_int(1), crat_int(1)]),
            )],
        );
        let v = StateVector::from_entries([
            (1, Complex::new(1.0, 0.0)),
            (-1, Complex::new(1.0, 0.0)),
        ]);
        let out = s.eval(2.0, &v).unwrap();
        assert!((out.get(0).unwrap() - Complex::new(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn combine_cancellation_and_merge() {
        let model = tiny_model();
        let s1 = series_of(&model, 2, &[(1, &[(1, 1)], TimePoly::t())]);
        // 1*s - 1*s = empty
        let diff = s1.sub(&s1).unwrap();
        assert!(diff.is_empty());

        // scaling by zero kills the other operand
        let s2 = series_of(&model, 2, &[(2, &[(1, 2)], TimePoly::one())]);
        let out = ModalSeries::combine(&crat_int(2), &s1, &crat_int(0), &s2).unwrap();
        assert_eq!(out.coefficient(1, &MultiIndex::single(1, 1)), TimePoly::t().scale(&crat_int(2)));
        assert_eq!(out.len(), 1);

        // same-key merge: t + 1
        let s3 = series_of(&model, 2, &[(1, &[(1, 1)], TimePoly::one())]);
        let out = s1.add(&s3).unwrap();
        assert_eq!(
            out.coefficient(1, &MultiIndex::single(1, 1)),
            TimePoly::from_coeffs(vec![crat_int(1), crat_int(1)])
        );
    }

    #[test]
    fn time_derivative_examples() {
        let model = tiny_model();
        let s = series_of(
            &model,
            2,
            &[(
                2,
                &[(1, 2)],
                TimePoly::from_coeffs(vec![crat_frac(-1, 18), crat_frac(1, 6)]),
            )],
        );
        let d = s.time_derivative();
        assert_eq!(
            d.coefficient(2, &MultiIndex::single(1, 2)),
            TimePoly::constant(crat_frac(1, 6))
        );

        let c = series_of(&model, 2, &[(1, &[(1, 1)], TimePoly::one())]);
        assert!(c.time_derivative().is_empty());

        let s = series_of(
            &model,
            2,
            &[(
                0,
                &[(1, 1), (-1, 1)],
                TimePoly::from_coeffs(vec![crat_int(0), crat_int(0), crat_int(1)]),
            )],
        );
        let d = s.time_derivative();
        assert_eq!(
            d.coefficient(0, &MultiIndex::from_pairs([(1, 1), (-1, 1)])),
            TimePoly::from_coeffs(vec![crat_int(0), crat_int(2)])
        );
    }

    #[test]
    fn directional_derivative_examples() {
        let model = tiny_model();
        // Euler identity on a degree-2 monomial against a scaled identity
        let s = series_of(&model, 2, &[(2, &[(1, 2)], TimePoly::one())]);
        let lam = crat_frac(3, 7);
        let g = series_of(&model, 1, &[(1, &[(1, 1)], TimePoly::constant(lam.clone()))]);
        let d = s.directional_derivative(&g, 2).unwrap();
        assert_eq!(
            d.coefficient(2, &MultiIndex::single(1, 2)),
            TimePoly::constant(crat_int(2) * lam)
        );

        // chain through a linear map
        let s = series_of(&model, 1, &[(1, &[(1, 1)], TimePoly::one())]);
        let g = series_of(&model, 2, &[(1, &[(1, 2)], TimePoly::one())]);
        let d = s.directional_derivative(&g, 2).unwrap();
        assert_eq!(d.coefficient(1, &MultiIndex::single(1, 2)), TimePoly::one());

        // hand expansion: d/dv_2 of t*v_1*v_2, direction (2,{1:2}) -> t*v_1^3
        let s = series_of(&model, 2, &[(3, &[(1, 1), (2, 1)], TimePoly::t())]);
        let g = series_of(&model, 2, &[(2, &[(1, 2)], TimePoly::one())]);
        let d = s.directional_derivative(&g, 3).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.coefficient(3, &MultiIndex::single(1, 3)), TimePoly::t());
    }

    #[test]
    fn euler_identity_homogeneous() {
        // for S homogeneous of degree d: dS . id = d*S exactly
        let model = tiny_model();
        let s = series_of(
            &model,
            3,
            &[
                (1, &[(1, 2), (-1, 1)], TimePoly::t()),
                (2, &[(2, 1), (1, 1), (-1, 1)], TimePoly::from_coeffs(vec![crat_frac(2, 3)])),
            ],
        );
        let id = ModalSeries::identity(model.clone());
        let d = s.directional_derivative(&id, 3).unwrap();
        let expected = s.scale(&crat_int(3));
        assert_eq!(d.sub(&expected).unwrap().len(), 0);
    }

    #[test]
    fn compose_examples() {
        let model = tiny_model();
        // identity substitution = truncation
        let f = series_of(
            &model,
            3,
            &[
                (0, &[(1, 2)], TimePoly::t()),
                (1, &[(1, 2), (-1, 1)], TimePoly::one()),
            ],
        );
        let id = ModalSeries::identity(model.clone());
        let out = f.compose(&id, 2).unwrap();
        assert_eq!(out.sub(&f.truncate(2)).unwrap().len(), 0);

        // binomial: f = (0,{1:2}) -> 1 under v_1 <- v_1 + c v_2
        let f = series_of(&model, 2, &[(0, &[(1, 2)], TimePoly::one())]);
        let c = crat_frac(3, 2);
        let mut xi = ModalSeries::identity(model.clone());
        xi = xi
            .add(&series_of(
                &model,
                1,
                &[(1, &[(2, 1)], TimePoly::constant(c.clone()))],
            ))
            .unwrap();
        let out = f.compose(&xi, 2).unwrap();
        assert_eq!(out.coefficient(0, &MultiIndex::single(1, 2)), TimePoly::one());
        assert_eq!(
            out.coefficient(0, &MultiIndex::from_pairs([(1, 1), (2, 1)])),
            TimePoly::constant(crat_int(2) * &c)
        );
        assert_eq!(
            out.coefficient(0, &MultiIndex::single(2, 2)),
            TimePoly::constant(&c * &c)
        );
        assert_eq!(out.len(), 3);

        // truncation contract: quadratic f, quadratic correction, max_deg 3
        // leaves no degree-4 cross terms
        let mut xi2 = ModalSeries::identity(model.clone());
        xi2 = xi2
            .add(&series_of(&model, 2, &[(1, &[(2, 2)], TimePoly::one())]))
            .unwrap();
        let out = f.compose(&xi2, 3).unwrap();
        assert!(out.top_degree().unwrap() <= 3);
        // (v_1 + v_2^2)^2 keeps v_1^2 and 2 v_1 v_2^2, drops v_2^4
        assert_eq!(out.len(), 2);
        assert_eq!(
            out.coefficient(0, &MultiIndex::from_pairs([(1, 1), (2, 2)])),
            TimePoly::constant(crat_int(2))
        );
    }

    #[test]
    fn homogeneous_part_partitions() {
        let model = tiny_model();
        let s = series_of(
            &model,
            3,
            &[
                (1, &[(1, 2)], TimePoly::one()),
                (2, &[(1, 2), (-1, 1)], TimePoly::t()),
            ],
        );
        let h2 = s.homogeneous_part(2);
        let h3 = s.homogeneous_part(3);
        assert_eq!(h2.len(), 1);
        assert_eq!(h3.len(), 1);
        assert!(s.homogeneous_part(4).is_empty());
        let back = h2.add(&h3).unwrap();
        assert_eq!(back.sub(&s).unwrap().len(), 0);
    }

    #[test]
    fn eval_commutes_with_combine() {
        // evaluating operands then combining numerically agrees with
        // combining symbolically then evaluating
        let model = tiny_model();
        let s1 = series_of(
            &model,
            3,
            &[
                (1, &[(1, 2)], TimePoly::t()),
                (0, &[(1, 1), (-1, 1)], TimePoly::from_coeffs(vec![crat_frac(1, 3), crat_int(2)])),
            ],
        );
        let s2 = series_of(
            &model,
            3,
            &[(1, &[(1, 2)], TimePoly::one()), (2, &[(2, 1)], TimePoly::t())],
        );
        let a = crat_frac(2, 5);
        let b = crat_frac(-7, 3);
        let sym = ModalSeries::combine(&a, &s1, &b, &s2).unwrap();
        let v = StateVector::from_entries([
            (-1, Complex::new(0.3, -0.2)),
            (1, Complex::new(0.7, 0.1)),
            (2, Complex::new(-0.4, 0.0)),
        ]);
        let t = 0.9;
        let lhs = sym.eval(t, &v).unwrap();
        let e1 = s1.eval(t, &v).unwrap();
        let e2 = s2.eval(t, &v).unwrap();
        let af = crate::algebra::scalar::to_c64(&a);
        let bf = crate::algebra::scalar::to_c64(&b);
        for m in [-1, 0, 1, 2] {
            let rhs = e1.entry_or_zero(m) * af + e2.entry_or_zero(m) * bf;
            assert!((lhs.entry_or_zero(m) - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn serialization_roundtrip_identical() {
        let model = tiny_model();
        let s = series_of(
            &model,
            3,
            &[
                (1, &[(1, 2)], TimePoly::from_coeffs(vec![crat_frac(-1, 18), crat_frac(1, 6)])),
                (0, &[(1, 1), (-1, 1)], TimePoly::from_coeffs(vec![crat_one(), crat_one()])),
            ],
        );
        let text = s.to_text();
        let back = ModalSeries::from_text(&text, model.clone()).unwrap();
        assert_eq!(back, s);
        // determinism: serialize again, byte identical
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn model_mismatch_is_rejected() {
        let m1 = tiny_model();
        let m2 = crate::testsupport::burgers_model((1, 1), 2);
        let s1 = ModalSeries::identity(m1);
        let s2 = ModalSeries::identity(m2);
        assert!(matches!(s1.add(&s2), Err(Error::ModelMismatch)));
    }
}
