//! Univariate polynomials in `t` with exact complex-rational coefficients.

use num_complex::Complex;
use num_traits::Zero;

use super::scalar::{crat_div, crat_one, format_crat, parse_crat, to_c64, C64, CRat};
use crate::error::{Error, Result};

/// Dense polynomial in `t`; entry `m` is the coefficient of `t^m`.
///
/// Canonical form: trailing zero coefficients are stripped, so the zero
/// polynomial has an empty coefficient list and `degree()` is `None`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct TimePoly {
    coeffs: Vec<CRat>,
}

impl TimePoly {
    pub fn zero() -> Self {
        TimePoly { coeffs: Vec::new() }
    }

    pub fn constant(c: CRat) -> Self {
        TimePoly::from_coeffs(vec![c])
    }

    pub fn one() -> Self {
        TimePoly::constant(crat_one())
    }

    /// The indeterminate `t`.
    pub fn t() -> Self {
        TimePoly::from_coeffs(vec![CRat::zero(), crat_one()])
    }

    pub fn from_coeffs(coeffs: Vec<CRat>) -> Self {
        let mut p = TimePoly { coeffs };
        p.normalize();
        p
    }

    fn normalize(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, m: usize) -> CRat {
        self.coeffs.get(m).cloned().unwrap_or_else(CRat::zero)
    }

    pub fn coeffs(&self) -> &[CRat] {
        &self.coeffs
    }

    pub fn add(&self, other: &TimePoly) -> TimePoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for m in 0..n {
            out.push(self.coeff(m) + other.coeff(m));
        }
        TimePoly::from_coeffs(out)
    }

    pub fn sub(&self, other: &TimePoly) -> TimePoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> TimePoly {
        TimePoly::from_coeffs(self.coeffs.iter().map(|c| -c.clone()).collect())
    }

    pub fn scale(&self, s: &CRat) -> TimePoly {
        if s.is_zero() {
            return TimePoly::zero();
        }
        TimePoly::from_coeffs(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &TimePoly) -> TimePoly {
        if self.is_zero() || other.is_zero() {
            return TimePoly::zero();
        }
        let mut out = vec![CRat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        TimePoly::from_coeffs(out)
    }

    pub fn derivative(&self) -> TimePoly {
        if self.coeffs.len() <= 1 {
            return TimePoly::zero();
        }
        let out = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(m, c)| c * crate::algebra::scalar::crat_int(m as i64))
            .collect();
        TimePoly::from_coeffs(out)
    }

    /// Horner evaluation at a real time, in double precision.
    pub fn eval(&self, t: f64) -> C64 {
        let mut acc = Complex::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * t + to_c64(c);
        }
        acc
    }

    /// Exact division of every coefficient by a nonzero complex rational.
    pub fn div_scalar(&self, s: &CRat) -> TimePoly {
        TimePoly::from_coeffs(self.coeffs.iter().map(|c| crat_div(c, s)).collect())
    }

    /// Canonical text form: `pow:re/den:im/den` triples joined by `;`.
    pub fn to_text(&self) -> String {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| format!("{m}:{}", format_crat(c)))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn from_text(s: &str) -> Result<TimePoly> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(TimePoly::zero());
        }
        let mut coeffs: Vec<CRat> = Vec::new();
        for part in s.split(';') {
            let part = part.trim();
            let (pow, rest) = part.split_once(':').ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("invalid time-poly entry `{part}`"),
            })?;
            let m: usize = pow.trim().parse().map_err(|_| Error::Parse {
                line: 0,
                msg: format!("invalid power `{pow}`"),
            })?;
            if coeffs.len() <= m {
                coeffs.resize(m + 1, CRat::zero());
            }
            coeffs[m] = parse_crat(rest)?;
        }
        Ok(TimePoly::from_coeffs(coeffs))
    }
}

impl std::fmt::Debug for TimePoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| {
                let c = crate::algebra::scalar::display_crat(c);
                match m {
                    0 => format!("({c})"),
                    1 => format!("({c})t"),
                    _ => format!("({c})t^{m}"),
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
