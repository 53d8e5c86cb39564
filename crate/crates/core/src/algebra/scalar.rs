//! Exact scalar arithmetic: arbitrary-precision rationals and complex rationals.
//!
//! All symbolic coefficients in this crate are complex numbers with exact
//! rational real and imaginary parts. Floating point appears only at
//! evaluation time, through [`to_c64`].

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational, always in lowest terms with positive denominator.
pub type Rat = BigRational;

/// Exact complex rational.
pub type CRat = Complex<Rat>;

/// Double-precision complex, used at evaluation time only.
pub type C64 = Complex<f64>;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn crat(re: Rat, im: Rat) -> CRat {
    Complex::new(re, im)
}

pub fn crat_int(n: i64) -> CRat {
    Complex::new(rat_int(n), Rat::zero())
}

pub fn crat_frac(num: i64, den: i64) -> CRat {
    Complex::new(rat(num, den), Rat::zero())
}

pub fn crat_real(re: Rat) -> CRat {
    Complex::new(re, Rat::zero())
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn to_c64(c: &CRat) -> C64 {
    Complex::new(rat_to_f64(&c.re), rat_to_f64(&c.im))
}

/// Exact complex division; the divisor must be nonzero.
pub fn crat_div(a: &CRat, b: &CRat) -> CRat {
    let norm = &b.re * &b.re + &b.im * &b.im;
    assert!(!norm.is_zero(), "division by zero complex rational");
    let re = (&a.re * &b.re + &a.im * &b.im) / &norm;
    let im = (&a.im * &b.re - &a.re * &b.im) / &norm;
    Complex::new(re, im)
}

/// |Re c| as an exact rational.
pub fn abs_re(c: &CRat) -> Rat {
    c.re.abs()
}

/// Parse an exact rational literal, either `num` or `num/den`.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let err = || Error::Parse {
        line: 0,
        msg: format!("invalid rational literal `{s}`"),
    };
    if let Some((n, d)) = s.split_once('/') {
        let num: BigInt = n.trim().parse().map_err(|_| err())?;
        let den: BigInt = d.trim().parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        Ok(Rat::new(num, den))
    } else {
        let num: BigInt = s.parse().map_err(|_| err())?;
        Ok(Rat::from_integer(num))
    }
}

/// Canonical `num/den` form, denominator always printed.
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn format_crat(c: &CRat) -> String {
    format!("{}:{}", format_rat(&c.re), format_rat(&c.im))
}

/// Parse the canonical `re_num/re_den:im_num/im_den` form.
pub fn parse_crat(s: &str) -> Result<CRat> {
    let (re, im) = s.split_once(':').ok_or_else(|| Error::Parse {
        line: 0,
        msg: format!("invalid complex rational `{s}`"),
    })?;
    Ok(Complex::new(parse_rat(re)?, parse_rat(im)?))
}

/// Human-readable form used in reports and error messages.
pub fn display_crat(c: &CRat) -> String {
    if c.im.is_zero() {
        c.re.to_string()
    } else if c.re.is_zero() {
        format!("{}i", c.im)
    } else {
        format!("{}{}{}i", c.re, if c.im.is_negative() { "" } else { "+" }, c.im)
    }
}

pub fn crat_one() -> CRat {
    Complex::new(Rat::one(), Rat::zero())
}

pub fn crat_zero() -> CRat {
    Complex::new(Rat::zero(), Rat::zero())
}
