use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::forward_binop;
use super::roots::cyclotomic_poly;

/// Order `m` of the root of unity adjoined to `Q`. Changing it rebuilds the
/// coefficient field; everything downstream reads the tables below.
pub const CYCLO_ORDER: u32 = 12;

struct Tables {
    /// `phi(m)`, the dimension of `Q(zeta)` over `Q`.
    dim: usize,
    /// Monic `Phi_m`, ascending coefficients (length `dim + 1`).
    modulus: Vec<BigRational>,
    /// Reduced coordinates of `zeta^k` for `k in 0..m`.
    powers: Vec<Vec<BigRational>>,
    /// Real and imaginary parts of `zeta`.
    zeta: Complex64,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let m = CYCLO_ORDER as u64;
        let modulus: Vec<BigRational> = cyclotomic_poly(m)
            .into_iter()
            .map(BigRational::from_integer)
            .collect();
        let dim = modulus.len() - 1;
        let mut powers = Vec::with_capacity(m as usize);
        for k in 0..m as usize {
            let mut raw = vec![BigRational::zero(); k.max(dim) + 1];
            raw[k] = BigRational::one();
            powers.push(reduce(raw, &modulus, dim));
        }
        let angle = 2.0 * std::f64::consts::PI / m as f64;
        Tables {
            dim,
            modulus,
            powers,
            zeta: Complex64::new(angle.cos(), angle.sin()),
        }
    })
}

fn trim(mut c: Vec<BigRational>) -> Vec<BigRational> {
    while c.last().is_some_and(|x| x.is_zero()) {
        c.pop();
    }
    c
}

fn reduce(mut c: Vec<BigRational>, modulus: &[BigRational], dim: usize) -> Vec<BigRational> {
    let mut top = c.len();
    while top > dim {
        top -= 1;
        let lead = std::mem::take(&mut c[top]);
        if lead.is_zero() {
            continue;
        }
        let base = top - dim;
        for (j, mj) in modulus.iter().enumerate().take(dim) {
            if !mj.is_zero() {
                c[base + j] -= &lead * mj;
            }
        }
    }
    c.truncate(dim);
    trim(c)
}

/// An element of `Q(zeta_m)` in the power basis `1, zeta, .., zeta^(phi(m)-1)`.
///
/// Coordinates are stored without trailing zeros, so the zero element has no
/// coordinates and a rational number has at most one.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CycRational {
    coords: Vec<BigRational>,
}

impl CycRational {
    pub fn zero() -> Self {
        CycRational { coords: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_rational(r: BigRational) -> Self {
        if r.is_zero() {
            Self::zero()
        } else {
            CycRational { coords: vec![r] }
        }
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// Builds an element from power-basis coordinates of any length; higher
    /// powers are reduced modulo `Phi_m`.
    pub fn from_coords(coords: Vec<BigRational>) -> Self {
        let t = tables();
        CycRational {
            coords: reduce(coords, &t.modulus, t.dim),
        }
    }

    /// `zeta^k` for any integer `k`.
    pub fn zeta_pow(k: i64) -> Self {
        let t = tables();
        let m = CYCLO_ORDER as i64;
        CycRational {
            coords: t.powers[k.rem_euclid(m) as usize].clone(),
        }
    }

    /// Dimension of the coefficient field over `Q`.
    pub fn degree() -> usize {
        tables().dim
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coords.len() == 1 && self.coords[0].is_one()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self.coords.len() {
            0 => Some(BigRational::zero()),
            1 => Some(self.coords[0].clone()),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        self.coords.len() <= 1
    }

    pub fn is_integer(&self) -> bool {
        self.coords.iter().all(|c| c.is_integer())
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        CycRational {
            coords: self.coords.iter().map(|c| c * r).collect(),
        }
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        match self.coords.len() {
            0 => None,
            1 => Some(Self::from_rational(self.coords[0].recip())),
            _ => Some(self.inv_general()),
        }
    }

    fn inv_general(&self) -> Self {
        // Solve (multiplication by self) x = 1 by Gaussian elimination.
        let t = tables();
        let n = t.dim;
        let mut cols: Vec<Vec<BigRational>> = Vec::with_capacity(n);
        for k in 0..n {
            let mut col = (self * &Self::zeta_pow(k as i64)).coords;
            col.resize(n, BigRational::zero());
            cols.push(col);
        }
        let mut a: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                let mut row: Vec<BigRational> = (0..n).map(|j| cols[j][i].clone()).collect();
                row.push(if i == 0 {
                    BigRational::one()
                } else {
                    BigRational::zero()
                });
                row
            })
            .collect();
        for col in 0..n {
            let piv = (col..n)
                .find(|&r| !a[r][col].is_zero())
                .expect("nonzero element of a field is invertible");
            a.swap(col, piv);
            let p = a[col][col].clone();
            for x in a[col].iter_mut() {
                *x /= &p;
            }
            for r in 0..n {
                if r != col && !a[r][col].is_zero() {
                    let f = a[r][col].clone();
                    for c in col..=n {
                        let sub = &f * &a[col][c];
                        a[r][c] -= sub;
                    }
                }
            }
        }
        CycRational {
            coords: trim(a.into_iter().map(|row| row[n].clone()).collect()),
        }
    }

    /// Complex conjugation `zeta -> zeta^-1`.
    pub fn conj(&self) -> Self {
        if self.is_rational() {
            return self.clone();
        }
        let mut acc = Self::zero();
        for (k, c) in self.coords.iter().enumerate() {
            if !c.is_zero() {
                acc = acc + Self::zeta_pow(-(k as i64)).scale(c);
            }
        }
        acc
    }

    /// Image under the embedding `zeta -> exp(2 pi i / m)`.
    pub fn to_complex(&self) -> Complex64 {
        let z = tables().zeta;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut p = Complex64::new(1.0, 0.0);
        for c in &self.coords {
            acc += p * c.to_f64().unwrap_or(f64::NAN);
            p *= z;
        }
        acc
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// True when the value is a nonzero rational with a single coordinate
    /// of absolute value one, or an exact root of unity.
    pub fn is_root_of_unity(&self) -> bool {
        let m = CYCLO_ORDER as i64;
        (0..2 * m).any(|k| {
            let z = Self::zeta_pow(k);
            z == *self || -z == *self
        })
    }

    pub(crate) fn fmt_with(&self, f: &mut fmt::Formatter<'_>, zeta: &str) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if let Some(r) = self.as_rational() {
            return write!(f, "{}", r);
        }
        let mut first = true;
        for (k, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { "-" } else { "+" })?;
            }
            first = false;
            match k {
                0 => write!(f, "{}", mag)?,
                _ => {
                    if !mag.is_one() {
                        if mag.is_integer() {
                            write!(f, "{}*", mag)?;
                        } else {
                            write!(f, "({})*", mag)?;
                        }
                    }
                    if k == 1 {
                        write!(f, "{}", zeta)?;
                    } else {
                        write!(f, "{}^{}", zeta, k)?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for CycRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, "zeta")
    }
}

impl fmt::Debug for CycRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Add<&CycRational> for &CycRational {
    type Output = CycRational;
    fn add(self, rhs: &CycRational) -> CycRational {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let n = self.coords.len().max(rhs.coords.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            match (self.coords.get(i), rhs.coords.get(i)) {
                (Some(a), Some(b)) => out.push(a + b),
                (Some(a), None) => out.push(a.clone()),
                (None, Some(b)) => out.push(b.clone()),
                (None, None) => unreachable!(),
            }
        }
        CycRational { coords: trim(out) }
    }
}

impl Sub<&CycRational> for &CycRational {
    type Output = CycRational;
    fn sub(self, rhs: &CycRational) -> CycRational {
        self + &(-rhs)
    }
}

impl Neg for &CycRational {
    type Output = CycRational;
    fn neg(self) -> CycRational {
        CycRational {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }
}

impl Neg for CycRational {
    type Output = CycRational;
    fn neg(self) -> CycRational {
        -&self
    }
}

impl Mul<&CycRational> for &CycRational {
    type Output = CycRational;
    fn mul(self, rhs: &CycRational) -> CycRational {
        if self.is_zero() || rhs.is_zero() {
            return CycRational::zero();
        }
        if self.coords.len() == 1 {
            return rhs.scale(&self.coords[0]);
        }
        if rhs.coords.len() == 1 {
            return self.scale(&rhs.coords[0]);
        }
        let mut raw = vec![BigRational::zero(); self.coords.len() + rhs.coords.len() - 1];
        for (i, a) in self.coords.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coords.iter().enumerate() {
                if !b.is_zero() {
                    raw[i + j] += a * b;
                }
            }
        }
        let t = tables();
        CycRational {
            coords: reduce(raw, &t.modulus, t.dim),
        }
    }
}

forward_binop!(CycRational, Add, add);
forward_binop!(CycRational, Sub, sub);
forward_binop!(CycRational, Mul, mul);

impl From<i64> for CycRational {
    fn from(n: i64) -> Self {
        CycRational::from_int(n)
    }
}
