use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::cyclo::CycRational;
use super::forward_binop;

/// A Laurent polynomial in `v` with coefficients in `Q(zeta)`.
///
/// Stored densely from the lowest exponent `low`; both the first and the last
/// stored coefficient are nonzero, so zero is the empty vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LaurentPoly {
    low: i64,
    coeffs: Vec<CycRational>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly {
            low: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn one() -> Self {
        Self::constant(CycRational::one())
    }

    pub fn constant(c: CycRational) -> Self {
        Self::monomial(c, 0)
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(CycRational::from_int(n))
    }

    /// `c * v^e`.
    pub fn monomial(c: CycRational, e: i64) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            LaurentPoly {
                low: e,
                coeffs: vec![c],
            }
        }
    }

    /// `v^e`.
    pub fn v_pow(e: i64) -> Self {
        Self::monomial(CycRational::one(), e)
    }

    /// `q^e = v^(2e)`.
    pub fn q_pow(e: i64) -> Self {
        Self::v_pow(2 * e)
    }

    /// Dense constructor from the coefficient of `v^low`, `v^(low+1)`, ...
    pub fn from_dense(low: i64, coeffs: Vec<CycRational>) -> Self {
        let mut p = LaurentPoly { low, coeffs };
        p.normalize();
        p
    }

    /// Builds a polynomial in `q` from integer coefficients of `q^0, q^1, ...`.
    pub fn q_poly(coeffs: &[i64]) -> Self {
        let mut dense = Vec::with_capacity(2 * coeffs.len());
        for (i, &c) in coeffs.iter().enumerate() {
            if i > 0 {
                dense.push(CycRational::zero());
            }
            dense.push(CycRational::from_int(c));
        }
        Self::from_dense(0, dense)
    }

    /// Sums `c * v^e` over the given terms.
    pub fn from_terms<I: IntoIterator<Item = (i64, CycRational)>>(terms: I) -> Self {
        let terms: Vec<(i64, CycRational)> = terms.into_iter().collect();
        if terms.is_empty() {
            return Self::zero();
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut dense = vec![CycRational::zero(); (hi - lo + 1) as usize];
        for (e, c) in terms {
            let slot = &mut dense[(e - lo) as usize];
            *slot = &*slot + &c;
        }
        Self::from_dense(lo, dense)
    }

    fn normalize(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        let lead_zeros = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead_zeros > 0 {
            self.coeffs.drain(..lead_zeros);
            self.low += lead_zeros as i64;
        }
        if self.coeffs.is_empty() {
            self.low = 0;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.low == 0 && self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// True for a nonzero constant or zero.
    pub fn is_constant(&self) -> bool {
        self.is_zero() || (self.low == 0 && self.coeffs.len() == 1)
    }

    /// True for a single term `c v^e`.
    pub fn is_monomial(&self) -> bool {
        self.coeffs.len() == 1
    }

    /// Lowest exponent with a nonzero coefficient (0 for the zero polynomial).
    pub fn low_exp(&self) -> i64 {
        self.low
    }

    /// Highest exponent with a nonzero coefficient (0 for the zero polynomial).
    pub fn high_exp(&self) -> i64 {
        if self.is_zero() {
            0
        } else {
            self.low + self.coeffs.len() as i64 - 1
        }
    }

    /// `high_exp - low_exp`, the degree after clearing the `v`-content.
    pub fn span(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, e: i64) -> CycRational {
        if e < self.low {
            return CycRational::zero();
        }
        self.coeffs
            .get((e - self.low) as usize)
            .cloned()
            .unwrap_or_else(CycRational::zero)
    }

    pub fn lowest_coeff(&self) -> CycRational {
        self.coeffs.first().cloned().unwrap_or_else(CycRational::zero)
    }

    pub fn highest_coeff(&self) -> CycRational {
        self.coeffs.last().cloned().unwrap_or_else(CycRational::zero)
    }

    /// Nonzero terms `(exponent, coefficient)` in ascending order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &CycRational)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (self.low + i as i64, c))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.iter().filter(|c| !c.is_zero()).count()
    }

    /// Multiplies by `v^k`.
    pub fn shift(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        LaurentPoly {
            low: self.low + k,
            coeffs: self.coeffs.clone(),
        }
    }

    /// The ordinary polynomial `v^(-low) * self`.
    pub fn content_free(&self) -> Self {
        self.shift(-self.low)
    }

    pub fn scale(&self, c: &CycRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        LaurentPoly {
            low: self.low,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// True when every coefficient is rational.
    pub fn is_zeta_free(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_rational())
    }

    /// True when every coefficient is an integer.
    pub fn has_integer_coeffs(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_rational() && c.is_integer())
    }

    /// True when only even powers of `v` occur, i.e. a Laurent polynomial in `q`.
    pub fn is_even(&self) -> bool {
        self.terms().all(|(e, _)| e % 2 == 0)
    }

    /// Replaces `v` by `v^k` for `k >= 1`.
    pub fn inflate(&self, k: i64) -> Self {
        assert!(k >= 1);
        Self::from_terms(self.terms().map(|(e, c)| (e * k, c.clone())))
    }

    /// Inverse of `inflate`; every exponent must be divisible by `k`.
    pub fn deflate(&self, k: i64) -> Option<Self> {
        if self.terms().any(|(e, _)| e % k != 0) {
            return None;
        }
        Some(Self::from_terms(self.terms().map(|(e, c)| (e / k, c.clone()))))
    }

    /// Conjugates the coefficients; `v` is treated as real.
    pub fn conj(&self) -> Self {
        LaurentPoly {
            low: self.low,
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn eval_complex(&self, v: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * v + c.to_complex();
        }
        acc * v.powi(self.low as i32)
    }

    pub fn eval_exact(&self, v: &BigRational) -> CycRational {
        if self.is_zero() {
            return CycRational::zero();
        }
        let mut acc = CycRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.scale(v) + c;
        }
        let vp = if self.low >= 0 {
            num_traits::pow(v.clone(), self.low as usize)
        } else {
            num_traits::pow(v.recip(), (-self.low) as usize)
        };
        acc.scale(&vp)
    }

    /// Division with remainder of the content-free parts, viewed as ordinary
    /// polynomials. Both results have `low == 0` semantics in `v`.
    pub fn poly_divrem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let (q, r) = divrem_dense(&self.coeffs, &d.coeffs);
        (Self::from_dense(0, q), Self::from_dense(0, r))
    }

    /// Exact quotient of Laurent polynomials, `None` if `d` does not divide `self`.
    pub fn exact_div(&self, d: &Self) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Self::zero());
        }
        if d.coeffs.len() == 1 {
            let inv = d.coeffs[0].inv()?;
            return Some(self.scale(&inv).shift(-d.low));
        }
        let (q, r) = divrem_dense(&self.coeffs, &d.coeffs);
        if r.iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(Self::from_dense(self.low - d.low, q))
    }

    /// Monic gcd of the content-free parts (lowest exponent 0). The gcd of
    /// zero and zero is zero.
    pub fn gcd(&self, other: &Self) -> Self {
        if self.is_zero() && other.is_zero() {
            return Self::zero();
        }
        if self.coeffs.len() == 1 || other.coeffs.len() == 1 {
            if self.is_zero() {
                return monic(other.content_free());
            }
            if other.is_zero() {
                return monic(self.content_free());
            }
            return Self::one();
        }
        let mut a = self.coeffs.clone();
        let mut b = other.coeffs.clone();
        if a.len() < b.len() {
            std::mem::swap(&mut a, &mut b);
        }
        make_monic(&mut b);
        while !b.is_empty() {
            if b.len() == 1 {
                return Self::one();
            }
            let r = rem_dense(a, &b);
            a = b;
            b = r;
            make_monic(&mut b);
        }
        monic(Self::from_dense(0, a))
    }
}

fn monic(p: LaurentPoly) -> LaurentPoly {
    match p.highest_coeff().inv() {
        Some(inv) => p.scale(&inv),
        None => p,
    }
}

fn make_monic(p: &mut Vec<CycRational>) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    if let Some(lead) = p.last() {
        if !lead.is_one() {
            let inv = lead.inv().unwrap();
            for c in p.iter_mut() {
                *c = &*c * &inv;
            }
        }
    }
}

fn rem_dense(mut a: Vec<CycRational>, b: &[CycRational]) -> Vec<CycRational> {
    // b is monic and nonzero
    let db = b.len() - 1;
    while a.len() > db {
        let lead = a.pop().unwrap();
        if lead.is_zero() {
            continue;
        }
        let base = a.len() - db;
        for (j, bj) in b.iter().enumerate().take(db) {
            if !bj.is_zero() {
                a[base + j] = &a[base + j] - &(&lead * bj);
            }
        }
    }
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    a
}

fn divrem_dense(a: &[CycRational], b: &[CycRational]) -> (Vec<CycRational>, Vec<CycRational>) {
    let db = b.len() - 1;
    if a.len() <= db {
        return (Vec::new(), a.to_vec());
    }
    let inv = b[db].inv().expect("nonzero leading coefficient");
    let mut r = a.to_vec();
    let mut q = vec![CycRational::zero(); a.len() - db];
    for i in (0..q.len()).rev() {
        let c = &r[i + db] * &inv;
        if c.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if !bj.is_zero() {
                r[i + j] = &r[i + j] - &(&c * bj);
            }
        }
        q[i] = c;
    }
    r.truncate(db);
    (q, r)
}

impl Add<&LaurentPoly> for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let lo = self.low.min(rhs.low);
        let hi = self.high_exp().max(rhs.high_exp());
        let mut dense = vec![CycRational::zero(); (hi - lo + 1) as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            dense[(self.low - lo) as usize + i] = c.clone();
        }
        for (i, c) in rhs.coeffs.iter().enumerate() {
            let slot = &mut dense[(rhs.low - lo) as usize + i];
            *slot = &*slot + c;
        }
        LaurentPoly::from_dense(lo, dense)
    }
}

impl Sub<&LaurentPoly> for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        self + &(-rhs)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            low: self.low,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Neg for LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        -&self
    }
}

impl Mul<&LaurentPoly> for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() || rhs.is_zero() {
            return LaurentPoly::zero();
        }
        if self.coeffs.len() == 1 {
            return rhs.scale(&self.coeffs[0]).shift(self.low);
        }
        if rhs.coeffs.len() == 1 {
            return self.scale(&rhs.coeffs[0]).shift(rhs.low);
        }
        let mut dense = vec![CycRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    dense[i + j] = &dense[i + j] + &(a * b);
                }
            }
        }
        LaurentPoly::from_dense(self.low + rhs.low, dense)
    }
}

forward_binop!(LaurentPoly, Add, add);
forward_binop!(LaurentPoly, Sub, sub);
forward_binop!(LaurentPoly, Mul, mul);

impl From<CycRational> for LaurentPoly {
    fn from(c: CycRational) -> Self {
        LaurentPoly::constant(c)
    }
}

impl LaurentPoly {
    /// Renders in `q` when `as_q` is set (all exponents must be even),
    /// otherwise in `v`. Terms ascend by exponent.
    pub(crate) fn render(&self, as_q: bool) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let var = if as_q { "q" } else { "v" };
        let mut out = String::new();
        for (e, c) in self.terms() {
            let e = if as_q { e / 2 } else { e };
            let (neg, body) = render_term(c, e, var);
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push(if neg { '-' } else { '+' });
            }
            out.push_str(&body);
        }
        out
    }
}

fn render_term(c: &CycRational, e: i64, var: &str) -> (bool, String) {
    let power = match e {
        0 => String::new(),
        1 => var.to_string(),
        _ => format!("{}^{}", var, e),
    };
    if let Some(r) = c.as_rational() {
        let neg = r < BigRational::zero();
        let mag = if neg { -r } else { r };
        let coef = if mag.is_integer() {
            mag.to_string()
        } else {
            format!("({})", mag)
        };
        let body = if power.is_empty() {
            coef
        } else if mag.is_one() {
            power
        } else {
            format!("{}*{}", coef, power)
        };
        (neg, body)
    } else {
        let coef = format!("({})", c);
        let body = if power.is_empty() {
            coef
        } else {
            format!("{}*{}", coef, power)
        };
        (false, body)
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let as_q = self.is_even() && self.is_zeta_free();
        write!(f, "{}", self.render(as_q))
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp(c: &[i64]) -> LaurentPoly {
        LaurentPoly::q_poly(c)
    }

    #[test]
    fn product_of_poincare_factors() {
        let p = qp(&[1, 1]) * qp(&[1, 1, 1]);
        assert_eq!(p, qp(&[1, 2, 2, 1]));
    }

    #[test]
    fn gcd_extracts_common_factor() {
        let a = qp(&[1, 1]) * qp(&[1, 0, 1]);
        let b = qp(&[1, 1]) * qp(&[1, 1, 1]);
        assert_eq!(a.gcd(&b), qp(&[1, 1]));
    }

    #[test]
    fn exact_division_with_shift() {
        let a = (qp(&[1, 1]) * qp(&[1, 0, 1])).shift(-3);
        let d = qp(&[1, 0, 1]).shift(2);
        assert_eq!(a.exact_div(&d).unwrap(), qp(&[1, 1]).shift(-5));
        assert!(qp(&[1, 0, 0, 0, 0, 1]).exact_div(&qp(&[1, 1, 1])).is_none());
    }

    #[test]
    fn display_in_q() {
        assert_eq!(qp(&[1, 0, 1]).to_string(), "1+q^2");
        assert_eq!(LaurentPoly::q_pow(-1).to_string(), "q^-1");
        assert_eq!(LaurentPoly::v_pow(3).to_string(), "v^3");
    }
}
