use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Signed;

use super::cyclo::CycRational;
use super::forward_binop;
use super::laurent::LaurentPoly;
use crate::error::{Error, Result};

/// A reduced quotient of Laurent polynomials in `v`.
///
/// Canonical form: the denominator is an ordinary polynomial with nonzero
/// constant term equal to 1, and it is coprime to the numerator. Two equal
/// field elements therefore have identical representations.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatFunc {
    num: LaurentPoly,
    den: LaurentPoly,
}

impl Default for RatFunc {
    fn default() -> Self {
        Self::zero()
    }
}

impl RatFunc {
    pub fn zero() -> Self {
        RatFunc {
            num: LaurentPoly::zero(),
            den: LaurentPoly::one(),
        }
    }

    pub fn one() -> Self {
        Self::from_poly(LaurentPoly::one())
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_poly(LaurentPoly::from_int(n))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::constant(CycRational::from_ratio(n, d))
    }

    pub fn constant(c: CycRational) -> Self {
        Self::from_poly(LaurentPoly::constant(c))
    }

    pub fn from_poly(p: LaurentPoly) -> Self {
        RatFunc {
            num: p,
            den: LaurentPoly::one(),
        }
    }

    /// `v^e`.
    pub fn v_pow(e: i64) -> Self {
        Self::from_poly(LaurentPoly::v_pow(e))
    }

    /// `q^e`.
    pub fn q_pow(e: i64) -> Self {
        Self::from_poly(LaurentPoly::q_pow(e))
    }

    /// `c * v^e`.
    pub fn monomial(c: CycRational, e: i64) -> Self {
        Self::from_poly(LaurentPoly::monomial(c, e))
    }

    /// Reduces `num / den` to canonical form.
    pub fn new(num: LaurentPoly, den: LaurentPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let shift = den.low_exp();
        let num = num.shift(-shift);
        let den = den.shift(-shift);
        let g = num.gcd(&den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.exact_div(&g).expect("gcd divides numerator"),
                den.exact_div(&g).expect("gcd divides denominator"),
            )
        };
        Ok(Self::normalized(num, den))
    }

    /// Scales so that the denominator's constant term is 1. Inputs must
    /// already be coprime with `den.low_exp() == 0`.
    fn normalized(num: LaurentPoly, den: LaurentPoly) -> Self {
        let c = den.lowest_coeff();
        if c.is_one() {
            return RatFunc { num, den };
        }
        let inv = c.inv().expect("nonzero");
        RatFunc {
            num: num.scale(&inv),
            den: den.scale(&inv),
        }
    }

    pub fn numer(&self) -> &LaurentPoly {
        &self.num
    }

    pub fn denom(&self) -> &LaurentPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    /// True when the denominator is 1.
    pub fn is_laurent_poly(&self) -> bool {
        self.den.is_one()
    }

    /// The constant value if `self` does not depend on `v`.
    pub fn as_constant(&self) -> Option<CycRational> {
        if self.den.is_one() && self.num.is_constant() {
            Some(self.num.lowest_coeff())
        } else {
            None
        }
    }

    /// `(c, e)` when `self = c v^e`.
    pub fn as_monomial(&self) -> Option<(CycRational, i64)> {
        if self.den.is_one() && self.num.is_monomial() {
            Some((self.num.lowest_coeff(), self.num.low_exp()))
        } else {
            None
        }
    }

    pub fn is_zeta_free(&self) -> bool {
        self.num.is_zeta_free() && self.den.is_zeta_free()
    }

    /// True when numerator and denominator are polynomials in `q` with rational
    /// coefficients, i.e. the value prints in `q`.
    pub fn is_q_rational(&self) -> bool {
        self.is_zeta_free() && self.num.is_even() && self.den.is_even()
    }

    /// Degree in `v` as `v -> infinity`: `high(num) - high(den)`.
    pub fn v_degree(&self) -> i64 {
        self.num.high_exp() - self.den.high_exp()
    }

    /// Leading coefficient as `v -> infinity`.
    pub fn leading_coeff(&self) -> CycRational {
        &self.num.highest_coeff() * &self.den.highest_coeff().inv().expect("nonzero")
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let shift = self.num.low_exp();
        Ok(Self::normalized(
            self.den.shift(-shift),
            self.num.shift(-shift),
        ))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.inv()?)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let e = e as u32;
        Ok(RatFunc {
            num: self.num.pow(e),
            den: self.den.pow(e),
        })
    }

    pub fn scale(&self, c: &CycRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        RatFunc {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    /// Multiplies by `v^k`.
    pub fn shift(&self, k: i64) -> Self {
        RatFunc {
            num: self.num.shift(k),
            den: self.den.clone(),
        }
    }

    pub fn conj(&self) -> Self {
        RatFunc {
            num: self.num.conj(),
            den: self.den.conj(),
        }
    }

    /// Complex value at the given `v`.
    pub fn eval_v(&self, v: Complex64) -> Result<Complex64> {
        let d = self.den.eval_complex(v);
        if d.norm() == 0.0 {
            return Err(Error::PoleAtEvaluation);
        }
        Ok(self.num.eval_complex(v) / d)
    }

    /// Complex value at real `q0 > 0` with `v = +sqrt(q0)`.
    pub fn eval_q(&self, q0: f64) -> Result<Complex64> {
        self.eval_v(Complex64::new(q0.sqrt(), 0.0))
    }

    /// Exact value at rational `q0 > 0`. Odd powers of `v` require `q0` to be
    /// the square of a rational.
    pub fn eval_exact(&self, q0: &BigRational) -> Result<CycRational> {
        if !q0.is_positive() {
            return Err(Error::ContractViolation("q must be positive".into()));
        }
        let (num, den) = if self.num.is_even() && self.den.is_even() {
            (
                self.num.deflate(2).unwrap().eval_exact(q0),
                self.den.deflate(2).unwrap().eval_exact(q0),
            )
        } else {
            let v = rational_sqrt(q0).ok_or_else(|| Error::IrrationalPoint(q0.to_string()))?;
            (self.num.eval_exact(&v), self.den.eval_exact(&v))
        };
        let inv = den.inv().ok_or(Error::PoleAtEvaluation)?;
        Ok(&num * &inv)
    }

    /// Replaces `v` by `v^k`.
    pub fn inflate(&self, k: i64) -> Self {
        Self::new(self.num.inflate(k), self.den.inflate(k)).expect("nonzero denominator")
    }

    /// Text form; in `q` when possible, otherwise in `v`.
    pub fn render(&self) -> String {
        let as_q = self.is_q_rational();
        let num = self.num.render(as_q);
        if self.den.is_one() {
            return num;
        }
        let den = self.den.render(as_q);
        let num = if self.num.num_terms() > 1 {
            format!("({})", num)
        } else {
            num
        };
        let den = if self.den.num_terms() > 1 || den.contains('*') {
            format!("({})", den)
        } else {
            den
        };
        format!("{}/{}", num, den)
    }
}

fn rational_sqrt(x: &BigRational) -> Option<BigRational> {
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

impl Add<&RatFunc> for &RatFunc {
    type Output = RatFunc;
    fn add(self, rhs: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            let num = &self.num + &rhs.num;
            if self.den.is_one() {
                return RatFunc::from_poly(num);
            }
            return RatFunc::new(num, self.den.clone()).expect("nonzero");
        }
        let g = self.den.gcd(&rhs.den);
        if g.is_one() {
            // Coprime denominators: the sum is already reduced.
            let num = &self.num * &rhs.den + &rhs.num * &self.den;
            if num.is_zero() {
                return RatFunc::zero();
            }
            return RatFunc::normalized(num, &self.den * &rhs.den);
        }
        let b1 = self.den.exact_div(&g).unwrap();
        let d1 = rhs.den.exact_div(&g).unwrap();
        let num = &self.num * &d1 + &rhs.num * &b1;
        RatFunc::new(num, &b1 * &rhs.den).expect("nonzero")
    }
}

impl Sub<&RatFunc> for &RatFunc {
    type Output = RatFunc;
    fn sub(self, rhs: &RatFunc) -> RatFunc {
        self + &(-rhs)
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Neg for RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        -&self
    }
}

impl Mul<&RatFunc> for &RatFunc {
    type Output = RatFunc;
    fn mul(self, rhs: &RatFunc) -> RatFunc {
        if self.is_zero() || rhs.is_zero() {
            return RatFunc::zero();
        }
        if self.den.is_one() && rhs.den.is_one() {
            return RatFunc::from_poly(&self.num * &rhs.num);
        }
        // Cross-cancel: gcd(a, d) and gcd(c, b) for (a/b)(c/d).
        let g1 = self.num.gcd(&rhs.den);
        let g2 = rhs.num.gcd(&self.den);
        let a = self.num.exact_div(&g1).unwrap();
        let d = rhs.den.exact_div(&g1).unwrap();
        let c = rhs.num.exact_div(&g2).unwrap();
        let b = self.den.exact_div(&g2).unwrap();
        let num = &a * &c;
        let den = &b * &d;
        let shift = den.low_exp();
        RatFunc::normalized(num.shift(-shift), den.shift(-shift))
    }
}

impl Div<&RatFunc> for &RatFunc {
    type Output = RatFunc;
    /// Panics on division by zero; use `checked_div` for a fallible version.
    fn div(self, rhs: &RatFunc) -> RatFunc {
        self.checked_div(rhs).expect("division by zero")
    }
}

forward_binop!(RatFunc, Add, add);
forward_binop!(RatFunc, Sub, sub);
forward_binop!(RatFunc, Mul, mul);
forward_binop!(RatFunc, Div, div);

impl From<LaurentPoly> for RatFunc {
    fn from(p: LaurentPoly) -> Self {
        RatFunc::from_poly(p)
    }
}

impl From<CycRational> for RatFunc {
    fn from(c: CycRational) -> Self {
        RatFunc::constant(c)
    }
}

impl From<i64> for RatFunc {
    fn from(n: i64) -> Self {
        RatFunc::from_int(n)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl std::iter::Sum for RatFunc {
    fn sum<I: Iterator<Item = RatFunc>>(iter: I) -> RatFunc {
        iter.fold(RatFunc::zero(), |a, b| &a + &b)
    }
}

impl std::iter::Product for RatFunc {
    fn product<I: Iterator<Item = RatFunc>>(iter: I) -> RatFunc {
        iter.fold(RatFunc::one(), |a, b| &a * &b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn qp(c: &[i64]) -> LaurentPoly {
        LaurentPoly::q_poly(c)
    }

    fn frac(n: LaurentPoly, d: LaurentPoly) -> RatFunc {
        RatFunc::new(n, d).unwrap()
    }

    #[test]
    fn telescoping_sum() {
        let d = qp(&[1, 1]);
        let s = frac(LaurentPoly::one(), d.clone()) + frac(qp(&[0, 1]), d);
        assert!(s.is_one());
    }

    #[test]
    fn reduces_on_construction() {
        let n = qp(&[1, -1]).pow(2);
        let d = qp(&[1, 0, -1]);
        let r = frac(n, d);
        assert_eq!(r, frac(qp(&[1, -1]), qp(&[1, 1])));
        assert_eq!(r.to_string(), "(1-q)/(1+q)");
    }

    #[test]
    fn gl2_quotient_from_negative_powers() {
        let qi = RatFunc::q_pow(-1);
        let one = RatFunc::one();
        let n = (&qi - &one).pow(2).unwrap();
        let d = &RatFunc::q_pow(-2) - &one;
        assert_eq!((n / d).to_string(), "(1-q)/(1+q)");
    }

    #[test]
    fn exact_evaluation() {
        let a = frac(LaurentPoly::one(), qp(&[1, 1]));
        assert_eq!(
            a.eval_exact(&BigRational::from_integer(2.into())).unwrap(),
            CycRational::from_ratio(1, 3)
        );
        let b = frac(LaurentPoly::from_int(2), qp(&[1, 0, 1]));
        assert_eq!(
            b.eval_exact(&BigRational::from_integer(3.into())).unwrap(),
            CycRational::from_ratio(1, 5)
        );
        let p3 = qp(&[1, 1]) * qp(&[1, 1, 1]);
        let c = frac(LaurentPoly::one(), p3);
        assert_eq!(
            c.eval_exact(&BigRational::from_integer(2.into())).unwrap(),
            CycRational::from_ratio(1, 21)
        );
    }

    #[test]
    fn odd_v_power_needs_square() {
        let a = RatFunc::v_pow(1);
        assert!(matches!(
            a.eval_exact(&BigRational::from_integer(2.into())),
            Err(Error::IrrationalPoint(_))
        ));
        assert_eq!(
            a.eval_exact(&BigRational::from_integer(4.into())).unwrap(),
            CycRational::from_int(2)
        );
    }

    #[test]
    fn pole_is_reported() {
        let a = frac(LaurentPoly::one(), qp(&[-1, 1]));
        assert_eq!(
            a.eval_exact(&BigRational::one()),
            Err(Error::PoleAtEvaluation)
        );
        assert_eq!(RatFunc::zero().inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn rendering() {
        assert_eq!(frac(LaurentPoly::one(), qp(&[1, 1])).to_string(), "1/(1+q)");
        assert_eq!(
            frac(LaurentPoly::from_int(2), qp(&[1, 0, 1])).to_string(),
            "2/(1+q^2)"
        );
        assert_eq!(RatFunc::q_pow(2).scale(&CycRational::from_int(2)).to_string(), "2*q^2");
        assert_eq!(RatFunc::v_pow(-3).to_string(), "v^-3");
    }
}
