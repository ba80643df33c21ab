//! Torus integrands of the form `scalar * z^e * prod (z^a - c z^b)^p` and the
//! local calculus the residue engine needs: substitution, differentiation,
//! residues at linear poles and Laurent coefficients at `z = 0`.
//!
//! Monomials are indexed by global variable number; a variable that has been
//! integrated out keeps its slot (always exponent 0) and is marked inactive.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qfield::{CycRational, LaurentPoly, RatFunc, CYCLO_ORDER};

/// Exponent vector `z_1^{e_1} ... z_k^{e_k}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct Monomial(Vec<i64>);

impl Monomial {
    pub fn unit(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut m = Self::unit(nvars);
        m.0[i] = 1;
        m
    }

    pub fn from_exps(e: Vec<i64>) -> Self {
        Monomial(e)
    }

    pub fn exps(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> i64 {
        self.0[i]
    }

    pub fn is_unit(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Total degree.
    pub fn degree(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn div(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn pow(&self, k: i64) -> Monomial {
        Monomial(self.0.iter().map(|a| a * k).collect())
    }

    pub fn meet(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }

    /// Copy with exponent `i` set to zero.
    pub fn without(&self, i: usize) -> Monomial {
        let mut m = self.clone();
        m.0[i] = 0;
        m
    }

    fn add_at(&mut self, i: usize, e: i64) {
        self.0[i] += e;
    }

    fn render(&self) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e != 0)
            .map(|(i, &e)| {
                if e == 1 {
                    format!("z{}", i + 1)
                } else {
                    format!("z{}^{}", i + 1, e)
                }
            })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join(" ")
        }
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// `(z^left - coeff * z^right)^power`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinearFactor {
    pub left: Monomial,
    pub right: Monomial,
    pub coeff: RatFunc,
    pub power: i64,
}

type FactorKey = (Monomial, Monomial, RatFunc);

/// Where a pole of one variable sits.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub enum PoleLocation {
    /// `z = 0`.
    Zero,
    /// `z = coeff * z^target` with `target` free of `z`.
    Linear { coeff: RatFunc, target: Monomial },
}

/// A pole of `var` together with its order.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Pole {
    pub var: usize,
    pub location: PoleLocation,
    pub order: i64,
}

/// Position of a pole relative to the unit circle for `q >> 1`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Side {
    Inside,
    Outside,
    Contour,
}

/// Classifies `|coeff|` against 1 as `v -> infinity`.
fn side_of(coeff: &RatFunc) -> Side {
    let d = coeff.v_degree();
    if d < 0 {
        return Side::Inside;
    }
    if d > 0 {
        return Side::Outside;
    }
    let m = coeff.leading_coeff().to_complex().norm();
    if (m - 1.0).abs() < 1e-12 {
        Side::Contour
    } else if m < 1.0 {
        Side::Inside
    } else {
        Side::Outside
    }
}

/// Failure while multiplying a vanishing constant into a product.
enum Vanish {
    /// A zero constant with negative exponent.
    Pole,
}

/// Accumulates an integrand, deferring the scalar reduction to one gcd.
struct Builder {
    active: Vec<bool>,
    num: LaurentPoly,
    den: LaurentPoly,
    prefactor: Monomial,
    factors: BTreeMap<FactorKey, i64>,
    zero: bool,
}

impl Builder {
    fn new(active: Vec<bool>, scalar: &RatFunc, prefactor: Monomial) -> Self {
        Builder {
            active,
            num: scalar.numer().clone(),
            den: scalar.denom().clone(),
            prefactor,
            factors: BTreeMap::new(),
            zero: scalar.is_zero(),
        }
    }

    fn mul_scalar_pow(&mut self, c: &RatFunc, p: i64) -> std::result::Result<(), Vanish> {
        if p == 0 || self.zero {
            return Ok(());
        }
        if c.is_zero() {
            if p < 0 {
                return Err(Vanish::Pole);
            }
            self.zero = true;
            return Ok(());
        }
        let (n, d) = if p > 0 {
            (c.numer(), c.denom())
        } else {
            (c.denom(), c.numer())
        };
        let k = p.unsigned_abs() as u32;
        self.num = &self.num * &n.pow(k);
        self.den = &self.den * &d.pow(k);
        Ok(())
    }

    /// Adds an already canonical factor, merging powers.
    fn add_raw(&mut self, key: FactorKey, p: i64) {
        let slot = self.factors.entry(key.clone()).or_insert(0);
        *slot += p;
        if *slot == 0 {
            self.factors.remove(&key);
        }
    }

    fn mul_monomial(&mut self, m: &Monomial, p: i64) {
        self.prefactor = self.prefactor.mul(&m.pow(p));
    }

    fn push_factor(
        &mut self,
        left: Monomial,
        coeff: RatFunc,
        right: Monomial,
        power: i64,
    ) -> std::result::Result<(), Vanish> {
        if power == 0 || self.zero {
            return Ok(());
        }
        if coeff.is_zero() {
            self.mul_monomial(&left, power);
            return Ok(());
        }
        let g = left.meet(&right);
        let a = left.div(&g);
        let b = right.div(&g);
        self.mul_monomial(&g, power);
        if a == b {
            return self.mul_scalar_pow(&(&RatFunc::one() - &coeff), power);
        }
        let (a, b, c) = if a < b {
            self.mul_scalar_pow(&-&coeff, power)?;
            (b, a, coeff.inv().expect("nonzero"))
        } else {
            (a, b, coeff)
        };
        self.add_raw((a, b, c), power);
        Ok(())
    }

    fn finish(self) -> Integrand {
        if self.zero || self.num.is_zero() {
            return Integrand::zero_with(self.active);
        }
        Integrand {
            active: self.active,
            scalar: RatFunc::new(self.num, self.den).expect("nonzero denominator"),
            prefactor: self.prefactor,
            factors: self.factors,
        }
    }
}

/// `scalar * z^prefactor * prod (z^left - coeff z^right)^power`.
///
/// Factors are stored with disjoint, nonnegative `left`/`right` supports and
/// `left > right` lexicographically; common monomials, constant factors and
/// orientation signs are folded into `prefactor` and `scalar`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Integrand {
    active: Vec<bool>,
    scalar: RatFunc,
    prefactor: Monomial,
    factors: BTreeMap<FactorKey, i64>,
}

impl Integrand {
    /// The constant 1 in `nvars` active variables.
    pub fn unit(nvars: usize) -> Self {
        Self::constant(nvars, RatFunc::one())
    }

    pub fn constant(nvars: usize, scalar: RatFunc) -> Self {
        if scalar.is_zero() {
            return Self::zero_with(vec![true; nvars]);
        }
        Integrand {
            active: vec![true; nvars],
            scalar,
            prefactor: Monomial::unit(nvars),
            factors: BTreeMap::new(),
        }
    }

    /// The zero integrand in `nvars` active variables.
    pub fn zero(nvars: usize) -> Self {
        Self::zero_with(vec![true; nvars])
    }

    fn zero_with(active: Vec<bool>) -> Self {
        let n = active.len();
        Integrand {
            active,
            scalar: RatFunc::zero(),
            prefactor: Monomial::unit(n),
            factors: BTreeMap::new(),
        }
    }

    fn builder(&self) -> Builder {
        let mut b = Builder::new(self.active.clone(), &self.scalar, self.prefactor.clone());
        b.factors = self.factors.clone();
        b
    }

    /// Number of variable slots (active or not).
    pub fn nvars(&self) -> usize {
        self.active.len()
    }

    pub fn is_active(&self, var: usize) -> bool {
        self.active[var]
    }

    pub fn active_vars(&self) -> Vec<usize> {
        (0..self.nvars()).filter(|&i| self.active[i]).collect()
    }

    pub fn num_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn scalar(&self) -> &RatFunc {
        &self.scalar
    }

    pub fn prefactor(&self) -> &Monomial {
        &self.prefactor
    }

    pub fn factors(&self) -> Vec<LinearFactor> {
        self.factors
            .iter()
            .map(|((l, r, c), &p)| LinearFactor {
                left: l.clone(),
                right: r.clone(),
                coeff: c.clone(),
                power: p,
            })
            .collect()
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn is_zero(&self) -> bool {
        self.scalar.is_zero()
    }

    /// Multiplies by `(z^left - coeff z^right)^power`.
    pub fn with_factor(
        &self,
        left: Monomial,
        coeff: RatFunc,
        right: Monomial,
        power: i64,
    ) -> Result<Integrand> {
        self.check_len(&left)?;
        self.check_len(&right)?;
        let mut b = self.builder();
        b.push_factor(left, coeff, right, power)
            .map_err(|_| Error::DivisionByZero)?;
        Ok(b.finish())
    }

    /// Multiplies by `z^m`.
    pub fn with_monomial(&self, m: &Monomial) -> Result<Integrand> {
        self.check_len(m)?;
        if self.is_zero() {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        out.prefactor = out.prefactor.mul(m);
        Ok(out)
    }

    pub fn with_scalar(&self, c: &RatFunc) -> Integrand {
        if c.is_zero() {
            return Self::zero_with(self.active.clone());
        }
        let mut out = self.clone();
        out.scalar = &out.scalar * c;
        out
    }

    /// Product of two integrands on the same variables.
    pub fn mul(&self, other: &Integrand) -> Result<Integrand> {
        if self.nvars() != other.nvars() {
            return Err(Error::ContractViolation("variable count mismatch".into()));
        }
        let mut b = self.builder();
        b.active = self
            .active
            .iter()
            .zip(&other.active)
            .map(|(a, c)| *a || *c)
            .collect();
        b.mul_scalar_pow(&other.scalar, 1)
            .map_err(|_| Error::DivisionByZero)?;
        b.mul_monomial(&other.prefactor, 1);
        for ((l, r, c), &p) in &other.factors {
            b.push_factor(l.clone(), c.clone(), r.clone(), p)
                .map_err(|_| Error::DivisionByZero)?;
        }
        Ok(b.finish())
    }

    fn check_len(&self, m: &Monomial) -> Result<()> {
        if m.len() != self.nvars() {
            return Err(Error::ContractViolation(format!(
                "monomial has {} exponents, integrand has {} variables",
                m.len(),
                self.nvars()
            )));
        }
        Ok(())
    }

    /// True when `var` occurs in the prefactor or in some factor.
    pub fn involves(&self, var: usize) -> bool {
        self.prefactor.get(var) != 0
            || self
                .factors
                .keys()
                .any(|(l, r, _)| l.get(var) != 0 || r.get(var) != 0)
    }

    /// Total degree if every factor is homogeneous, else `None`.
    pub fn homogeneous_degree(&self) -> Option<i64> {
        let mut d = self.prefactor.degree();
        for ((l, r, _), &p) in &self.factors {
            if l.degree() != r.degree() {
                return None;
            }
            d += p * l.degree();
        }
        Some(d)
    }

    /// Replaces `z_var` by `coeff * z^target` and deactivates `var`.
    pub fn substitute(&self, var: usize, coeff: &RatFunc, target: &Monomial) -> Result<Integrand> {
        self.check_len(target)?;
        if target.get(var) != 0 {
            return Err(Error::ContractViolation(
                "substitution target involves the substituted variable".into(),
            ));
        }
        if coeff.is_zero() {
            return Err(Error::ContractViolation("zero substitution coefficient".into()));
        }
        let mut active = self.active.clone();
        active[var] = false;
        if self.is_zero() {
            return Ok(Self::zero_with(active));
        }
        let pole_err = || Error::SubstituteIntoPole {
            var: var + 1,
            target: format!("[{}] {}", coeff, target),
        };
        let k = self.prefactor.get(var);
        let mut b = Builder::new(active, &self.scalar, self.prefactor.without(var));
        b.mul_monomial(target, k);
        b.mul_scalar_pow(coeff, k).map_err(|_| pole_err())?;
        for ((l, r, c), &p) in &self.factors {
            let kl = l.get(var);
            let kr = r.get(var);
            if kl == 0 && kr == 0 {
                b.add_raw((l.clone(), r.clone(), c.clone()), p);
                continue;
            }
            let lm = l.without(var).mul(&target.pow(kl));
            let rm = r.without(var).mul(&target.pow(kr));
            // c_L z^lm - c c_R z^rm = c_L (z^lm - (c c_R / c_L) z^rm)
            let cl = coeff.pow(kl)?;
            let cr = coeff.pow(kr)?;
            let new_c = &(c * &cr) / &cl;
            b.mul_scalar_pow(&cl, p).map_err(|_| pole_err())?;
            b.push_factor(lm, new_c, rm, p).map_err(|_| pole_err())?;
        }
        Ok(b.finish())
    }

    /// Formal partial derivative in `var` as a sum of integrands.
    pub fn derivative(&self, var: usize) -> Vec<Integrand> {
        let mut out = Vec::new();
        if self.is_zero() {
            return out;
        }
        let e = self.prefactor.get(var);
        if e != 0 {
            let mut t = self.with_scalar(&RatFunc::from_int(e));
            t.prefactor.add_at(var, -1);
            out.push(t);
        }
        for ((l, r, c), &p) in &self.factors {
            let (mono, coef) = if l.get(var) != 0 {
                (l.clone(), RatFunc::from_int(p * l.get(var)))
            } else if r.get(var) != 0 {
                (r.clone(), -c.scale(&CycRational::from_int(p * r.get(var))))
            } else {
                continue;
            };
            let mut t = self.with_scalar(&coef);
            let key = (l.clone(), r.clone(), c.clone());
            if p == 1 {
                t.factors.remove(&key);
            } else {
                t.factors.insert(key, p - 1);
            }
            t.prefactor = t.prefactor.mul(&mono);
            t.prefactor.add_at(var, -1);
            out.push(t);
        }
        out
    }

    /// Rewrites every factor of degree `e >= 2` in `var` with negative power
    /// as a product of factors linear in `var`. Fails when the roots do not
    /// lie in the coefficient field.
    pub fn split_for(&self, var: usize) -> Result<Integrand> {
        let needs = self.factors.iter().any(|((l, r, _), &p)| {
            p < 0 && (l.get(var) > 1 || r.get(var) > 1)
        });
        if !needs || self.is_zero() {
            return Ok(self.clone());
        }
        let n = self.nvars();
        let mut b = Builder::new(self.active.clone(), &self.scalar, self.prefactor.clone());
        for ((l, r, c), &p) in &self.factors {
            let e = l.get(var).max(r.get(var));
            if p > 0 || e <= 1 {
                b.add_raw((l.clone(), r.clone(), c.clone()), p);
                continue;
            }
            let nonlinear = || Error::NonLinearPole {
                var: var + 1,
                factor: render_factor(l, r, c),
            };
            // Normalize to x^e - D z^mu times a monomial and a constant.
            let (d, mu) = if l.get(var) > 0 {
                b.mul_monomial(&l.without(var), p);
                (c.clone(), r.div(&l.without(var)))
            } else {
                b.mul_monomial(r, p);
                b.mul_scalar_pow(&-c, p).map_err(|_| Error::DivisionByZero)?;
                (c.inv()?, l.div(&r.without(var)))
            };
            if mu.exps().iter().any(|x| x % e != 0) {
                return Err(nonlinear());
            }
            let roots = nth_roots(&d, e).ok_or_else(nonlinear)?;
            let mu_e = Monomial(mu.exps().iter().map(|x| x / e).collect());
            for root in roots {
                b.push_factor(Monomial::var(n, var), root, mu_e.clone(), p)
                    .map_err(|_| Error::DivisionByZero)?;
            }
        }
        Ok(b.finish())
    }

    /// Poles of `var` (after `split_for`) with their side of the unit circle.
    fn all_poles(&self, var: usize) -> Result<Vec<(Pole, Side)>> {
        let mut out = Vec::new();
        let e = self.prefactor.get(var);
        if e < 0 {
            out.push((
                Pole {
                    var,
                    location: PoleLocation::Zero,
                    order: -e,
                },
                Side::Inside,
            ));
        }
        let mut orders: BTreeMap<PoleLocation, i64> = BTreeMap::new();
        for ((l, r, c), &p) in &self.factors {
            if let Some(loc) = linear_root(l, r, c, var) {
                *orders.entry(loc).or_insert(0) += p;
            } else if p < 0 && (l.get(var) != 0 || r.get(var) != 0) {
                return Err(Error::NonLinearPole {
                    var: var + 1,
                    factor: render_factor(l, r, c),
                });
            }
        }
        for (loc, p) in orders {
            if p >= 0 {
                continue;
            }
            let side = match &loc {
                PoleLocation::Linear { coeff, .. } => side_of(coeff),
                PoleLocation::Zero => Side::Inside,
            };
            if side == Side::Contour {
                let PoleLocation::Linear { coeff, target } = &loc else {
                    unreachable!()
                };
                return Err(Error::PoleOnContour {
                    var: var + 1,
                    location: format!("[{}] {}", coeff, target),
                });
            }
            out.push((
                Pole {
                    var,
                    location: loc,
                    order: -p,
                },
                side,
            ));
        }
        Ok(out)
    }

    /// Poles of `var` inside the unit circle (for `q >> 1`), in a fixed
    /// order: `0` first, then linear poles sorted by location.
    pub fn classify_poles(&self, var: usize) -> Result<Vec<Pole>> {
        if !self.active[var] {
            return Err(Error::ContractViolation(format!("z{} is not active", var + 1)));
        }
        let f = self.split_for(var)?;
        Ok(f.all_poles(var)?
            .into_iter()
            .filter(|(_, s)| *s == Side::Inside)
            .map(|(p, _)| p)
            .collect())
    }

    /// Residue at a simple pole.
    pub fn residue_simple(&self, var: usize, at: &PoleLocation) -> Result<Vec<Integrand>> {
        let f = self.split_for(var)?;
        let order = f.pole_order(var, at);
        if order != 1 {
            return Err(Error::ContractViolation(format!(
                "residue_simple at a pole of order {}",
                order
            )));
        }
        f.residue_split(var, at, 1)
    }

    /// Residue at a pole of order `order >= 2`.
    pub fn residue_higher(
        &self,
        var: usize,
        at: &PoleLocation,
        order: i64,
    ) -> Result<Vec<Integrand>> {
        if order < 2 {
            return Err(Error::ContractViolation(format!(
                "residue_higher with order {}",
                order
            )));
        }
        let f = self.split_for(var)?;
        if f.pole_order(var, at) != order {
            return Err(Error::ContractViolation("stated order does not match".into()));
        }
        f.residue_split(var, at, order)
    }

    /// Residue at any pole, whatever its order.
    pub fn residue(&self, var: usize, at: &PoleLocation) -> Result<Vec<Integrand>> {
        let f = self.split_for(var)?;
        let order = f.pole_order(var, at);
        if order <= 0 {
            return Ok(Vec::new());
        }
        f.residue_split(var, at, order)
    }

    fn pole_order(&self, var: usize, at: &PoleLocation) -> i64 {
        match at {
            PoleLocation::Zero => -self.prefactor.get(var),
            PoleLocation::Linear { .. } => {
                let mut p = 0;
                for ((l, r, c), &pw) in &self.factors {
                    if linear_root(l, r, c, var).as_ref() == Some(at) {
                        p += pw;
                    }
                }
                -p
            }
        }
    }

    fn residue_split(&self, var: usize, at: &PoleLocation, order: i64) -> Result<Vec<Integrand>> {
        match at {
            PoleLocation::Zero => self.series_coefficient_split(var, -1),
            PoleLocation::Linear { coeff, target } => {
                // g = (x - p)^order * f with the vanishing factors removed.
                let mut b =
                    Builder::new(self.active.clone(), &self.scalar, self.prefactor.clone());
                for ((l, r, c), &p) in &self.factors {
                    if linear_root(l, r, c, var).as_ref() == Some(at) {
                        if l.get(var) == 1 {
                            b.mul_monomial(&l.without(var), p);
                        } else {
                            b.mul_monomial(&r.without(var), p);
                            b.mul_scalar_pow(&-c, p).map_err(|_| Error::DivisionByZero)?;
                        }
                    } else {
                        b.add_raw((l.clone(), r.clone(), c.clone()), p);
                    }
                }
                let mut terms = vec![b.finish()];
                for _ in 1..order {
                    terms = merge_terms(terms.iter().flat_map(|t| t.derivative(var)).collect());
                }
                let fact: i64 = (1..order).product();
                let norm = RatFunc::from_ratio(1, fact);
                let mut out = Vec::with_capacity(terms.len());
                for t in terms {
                    let s = t.substitute(var, coeff, target)?.with_scalar(&norm);
                    if !s.is_zero() {
                        out.push(s);
                    }
                }
                Ok(merge_terms(out))
            }
        }
    }

    /// Coefficient of `z_var^n` in the Laurent expansion at `z_var = 0`, as a
    /// sum of integrands free of `z_var`.
    pub fn series_coefficient(&self, var: usize, n: i64) -> Result<Vec<Integrand>> {
        self.series_coefficient_split(var, n)
    }

    fn series_coefficient_split(&self, var: usize, n: i64) -> Result<Vec<Integrand>> {
        let mut active = self.active.clone();
        active[var] = false;
        if self.is_zero() {
            return Ok(Vec::new());
        }
        let need = n - self.prefactor.get(var);
        if need < 0 {
            return Ok(Vec::new());
        }
        let nv = self.nvars();
        let mut base = Builder::new(active.clone(), &self.scalar, self.prefactor.without(var));
        // Each factor involving var expands as base * sum_k binom(p,k) (rho z^mu)^k x^(e k).
        let mut series: Vec<(i64, i64, RatFunc, Monomial)> = Vec::new();
        for ((l, r, c), &p) in &self.factors {
            let kl = l.get(var);
            let kr = r.get(var);
            if kl == 0 && kr == 0 {
                base.add_raw((l.clone(), r.clone(), c.clone()), p);
                continue;
            }
            if kl > 0 {
                // (x^e A - c B)^p = (-c B)^p (1 - x^e A/(c B))^p
                base.mul_monomial(r, p);
                base.mul_scalar_pow(&-c, p).map_err(|_| Error::DivisionByZero)?;
                let rho = -c.inv()?;
                series.push((kl, p, rho, l.without(var).div(r)));
            } else {
                // (A - c x^e B)^p = A^p (1 - c x^e B/A)^p
                base.mul_monomial(l, p);
                series.push((kr, p, -c, r.without(var).div(l)));
            }
        }
        let base = base.finish();
        if base.is_zero() {
            return Ok(Vec::new());
        }
        // Dynamic programme over factors: (x-degree, monomial) -> coefficient.
        let mut states: BTreeMap<(i64, Monomial), RatFunc> = BTreeMap::new();
        states.insert((0, Monomial::unit(nv)), RatFunc::one());
        for (e, p, rho, mu) in &series {
            let mut next: BTreeMap<(i64, Monomial), RatFunc> = BTreeMap::new();
            for ((deg, mono), val) in &states {
                let mut k = 0i64;
                let mut binom = BigRational::one();
                let mut rho_k = RatFunc::one();
                let mut mono_k = mono.clone();
                while deg + e * k <= need {
                    if !binom.is_zero() {
                        let term = &(val * &rho_k).scale(&CycRational::from_rational(binom.clone()));
                        let slot = next
                            .entry((deg + e * k, mono_k.clone()))
                            .or_insert_with(RatFunc::zero);
                        *slot = &*slot + term;
                    } else {
                        break;
                    }
                    // binom(p, k+1) = binom(p, k) (p - k) / (k + 1)
                    binom *= BigRational::new(BigInt::from(p - k), BigInt::from(k + 1));
                    k += 1;
                    rho_k = &rho_k * rho;
                    mono_k = mono_k.mul(mu);
                }
            }
            states = next;
        }
        let mut out = Vec::new();
        for ((deg, mono), val) in states {
            if deg != need || val.is_zero() {
                continue;
            }
            let mut t = base.with_scalar(&val);
            t.prefactor = t.prefactor.mul(&mono);
            out.push(t);
        }
        Ok(merge_terms(out))
    }

    /// Copy with the scalar replaced.
    pub(crate) fn map_scalar(&self, s: RatFunc) -> Integrand {
        if s.is_zero() {
            return Self::zero_with(self.active.clone());
        }
        let mut out = self.clone();
        out.scalar = s;
        out
    }

    /// Key identifying the non-scalar part.
    fn shape(&self) -> (&Monomial, &BTreeMap<FactorKey, i64>, &Vec<bool>) {
        (&self.prefactor, &self.factors, &self.active)
    }

    /// Text form, e.g. `[2] * z1^-1 z2^-1 * (z1 - [q^-1] z2)^-1`.
    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        if !self.scalar.is_one() || (self.prefactor.is_unit() && self.factors.is_empty()) {
            parts.push(format!("[{}]", self.scalar));
        }
        if !self.prefactor.is_unit() {
            parts.push(self.prefactor.render());
        }
        for ((l, r, c), &p) in &self.factors {
            let f = render_factor(l, r, c);
            if p == 1 {
                parts.push(f);
            } else {
                parts.push(format!("{}^{}", f, p));
            }
        }
        parts.join(" * ")
    }

    /// Parses the text form produced by `render`. `nvars` fixes the number of
    /// variable slots; it must cover every index used.
    pub fn parse(s: &str, nvars: usize) -> Result<Integrand> {
        let mut out = Integrand::unit(nvars);
        for chunk in split_top(s, '*')? {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                return Err(Error::Parse("empty product term".into()));
            }
            if let Some(rest) = chunk.strip_prefix('[') {
                let end = rest
                    .rfind(']')
                    .ok_or_else(|| Error::Parse("unclosed `[`".into()))?;
                let c = crate::qfield::parse_ratfunc(&rest[..end])?;
                out = out.with_scalar(&c);
            } else if chunk.starts_with('(') {
                let close = matching_paren(chunk)?;
                let inner = &chunk[1..close];
                let tail = chunk[close + 1..].trim();
                let power = if tail.is_empty() {
                    1
                } else {
                    let t = tail
                        .strip_prefix('^')
                        .ok_or_else(|| Error::Parse(format!("unexpected `{}`", tail)))?;
                    t.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::Parse(format!("bad exponent `{}`", t)))?
                };
                let (l, c, r) = parse_factor(inner, nvars)?;
                out = out.with_factor(l, c, r, power)?;
            } else {
                let m = parse_monomial(chunk, nvars)?;
                out = out.with_monomial(&m)?;
            }
        }
        Ok(out)
    }
}

/// Sums terms with identical non-scalar parts, dropping zeros. Output order
/// is deterministic.
pub fn merge_terms(terms: Vec<Integrand>) -> Vec<Integrand> {
    if terms.len() <= 1 {
        return terms.into_iter().filter(|t| !t.is_zero()).collect();
    }
    let mut acc: BTreeMap<(Monomial, Vec<(FactorKey, i64)>, Vec<bool>), Integrand> =
        BTreeMap::new();
    for t in terms {
        if t.is_zero() {
            continue;
        }
        let (m, f, a) = t.shape();
        let key = (
            m.clone(),
            f.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            a.clone(),
        );
        match acc.get_mut(&key) {
            Some(existing) => {
                let s = existing.scalar() + t.scalar();
                *existing = existing.map_scalar(s);
            }
            None => {
                acc.insert(key, t);
            }
        }
    }
    acc.into_values().filter(|t| !t.is_zero()).collect()
}

/// Root of a factor that is linear in `var`, if it is.
fn linear_root(l: &Monomial, r: &Monomial, c: &RatFunc, var: usize) -> Option<PoleLocation> {
    if l.get(var) == 1 {
        // z^a x - c z^b = 0  =>  x = c z^(b - a)
        Some(PoleLocation::Linear {
            coeff: c.clone(),
            target: r.div(&l.without(var)),
        })
    } else if r.get(var) == 1 {
        // z^a - c x z^b = 0  =>  x = c^-1 z^(a - b)
        Some(PoleLocation::Linear {
            coeff: c.inv().expect("nonzero"),
            target: l.div(&r.without(var)),
        })
    } else {
        None
    }
}

/// All `e`-th roots of a monomial `c = r v^k` inside `Q(zeta)(v)`, if there
/// are exactly `e` of them.
fn nth_roots(c: &RatFunc, e: i64) -> Option<Vec<RatFunc>> {
    let (r, k) = c.as_monomial()?;
    if k % e != 0 {
        return None;
    }
    let m = CYCLO_ORDER as i64;
    let mut roots: Vec<RatFunc> = Vec::new();
    for i in 0..m {
        let t = &r * &CycRational::zeta_pow(-i * e);
        let Some(t) = t.as_rational() else { continue };
        if !t.is_positive() {
            continue;
        }
        let Some(rho) = rational_root(&t, e as u32) else {
            continue;
        };
        let cand = RatFunc::monomial(
            CycRational::zeta_pow(i).scale(&rho),
            k / e,
        );
        if !roots.contains(&cand) {
            roots.push(cand);
        }
    }
    (roots.len() as i64 == e).then_some(roots)
}

fn rational_root(t: &BigRational, e: u32) -> Option<BigRational> {
    let n = t.numer().nth_root(e);
    let d = t.denom().nth_root(e);
    let cand = BigRational::new(n, d);
    (num_traits::pow(cand.clone(), e as usize) == *t).then_some(cand)
}

fn render_factor(l: &Monomial, r: &Monomial, c: &RatFunc) -> String {
    let coef = if c.is_one() {
        String::new()
    } else {
        format!("[{}]", c)
    };
    let rhs = match (coef.is_empty(), r.is_unit()) {
        (true, true) => "1".to_string(),
        (true, false) => r.render(),
        (false, true) => coef,
        (false, false) => format!("{} {}", coef, r.render()),
    };
    format!("({} - {})", l.render(), rhs)
}

fn split_top(s: &str, sep: char) -> Result<Vec<&str>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::Parse("unbalanced brackets".into()));
                }
            }
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::Parse("unbalanced brackets".into()));
    }
    out.push(&s[start..]);
    Ok(out)
}

fn matching_paren(s: &str) -> Result<usize> {
    let mut depth = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => {
                depth -= 1;
                if depth == 0 {
                    return Ok(i);
                }
            }
            _ => {}
        }
    }
    Err(Error::Parse("unclosed `(`".into()))
}

fn parse_monomial(s: &str, nvars: usize) -> Result<Monomial> {
    let mut m = Monomial::unit(nvars);
    for tok in s.split_whitespace() {
        if tok == "1" {
            continue;
        }
        let body = tok
            .strip_prefix('z')
            .ok_or_else(|| Error::Parse(format!("bad monomial `{}`", tok)))?;
        let (idx, exp) = match body.split_once('^') {
            Some((i, e)) => (i, e),
            None => (body, "1"),
        };
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::Parse(format!("bad variable `{}`", tok)))?;
        let exp: i64 = exp
            .parse()
            .map_err(|_| Error::Parse(format!("bad exponent in `{}`", tok)))?;
        if idx == 0 || idx > nvars {
            return Err(Error::Parse(format!("variable z{} out of range", idx)));
        }
        m.add_at(idx - 1, exp);
    }
    Ok(m)
}

/// `L - [c] R` or `L + [c] R` (either side may be `1`).
fn parse_factor(s: &str, nvars: usize) -> Result<(Monomial, RatFunc, Monomial)> {
    // Find the top-level binary operator.
    let mut depth = 0;
    let mut op = None;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            '+' | '-' if depth == 0 && i > 0 => {
                op = Some((i, ch));
                break;
            }
            _ => {}
        }
    }
    let (i, ch) = op.ok_or_else(|| Error::Parse(format!("factor `{}` has no `-`", s)))?;
    let left = parse_monomial(s[..i].trim(), nvars)?;
    let rest = s[i + 1..].trim();
    let (coeff, right) = if let Some(r) = rest.strip_prefix('[') {
        let end = r
            .find(']')
            .ok_or_else(|| Error::Parse("unclosed `[`".into()))?;
        (
            crate::qfield::parse_ratfunc(&r[..end])?,
            parse_monomial(r[end + 1..].trim(), nvars)?,
        )
    } else {
        (RatFunc::one(), parse_monomial(rest, nvars)?)
    };
    let coeff = if ch == '+' { -coeff } else { coeff };
    Ok((left, coeff, right))
}

impl fmt::Display for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfield::parse_ratfunc;

    fn rf(s: &str) -> RatFunc {
        parse_ratfunc(s).unwrap()
    }

    fn m(e: &[i64]) -> Monomial {
        Monomial::from_exps(e.to_vec())
    }

    /// Gamma^{12} with parameters a, b, times z1^-1 z2^-1.
    fn gamma12(a: &str, b: &str) -> Integrand {
        let (a, b) = (rf(a), rf(b));
        Integrand::unit(2)
            .with_monomial(&m(&[-1, -1]))
            .unwrap()
            .with_factor(m(&[1, 0]), a.clone(), m(&[0, 1]), 1)
            .unwrap()
            .with_factor(m(&[1, 0]), a.inv().unwrap(), m(&[0, 1]), 1)
            .unwrap()
            .with_factor(m(&[1, 0]), b.clone(), m(&[0, 1]), -1)
            .unwrap()
            .with_factor(m(&[1, 0]), b.inv().unwrap(), m(&[0, 1]), -1)
            .unwrap()
    }

    #[test]
    fn orientation_is_canonical() {
        let a = Integrand::unit(2)
            .with_factor(m(&[0, 1]), rf("q"), m(&[1, 0]), 1)
            .unwrap();
        // z2 - q z1 = (-q)(z1 - q^-1 z2)
        assert_eq!(a.scalar(), &rf("-q"));
        let f = &a.factors()[0];
        assert_eq!(f.left, m(&[1, 0]));
        assert_eq!(f.coeff, rf("q^-1"));
    }

    #[test]
    fn equal_factors_merge() {
        let a = Integrand::unit(2)
            .with_factor(m(&[1, 0]), rf("q"), m(&[0, 1]), 1)
            .unwrap()
            .with_factor(m(&[0, 1]), rf("q^-1"), m(&[1, 0]), 2)
            .unwrap();
        assert_eq!(a.num_factors(), 1);
        assert_eq!(a.factors()[0].power, 3);
    }

    #[test]
    fn gl2_substitution_gives_scalar_factor() {
        let f = Integrand::unit(2)
            .with_factor(m(&[1, 0]), RatFunc::one(), m(&[0, 1]), 1)
            .unwrap();
        let g = f.substitute(0, &rf("q^-1"), &m(&[0, 1])).unwrap();
        assert_eq!(g.scalar(), &rf("q^-1-1"));
        assert_eq!(g.prefactor(), &m(&[0, 1]));
        assert_eq!(g.num_factors(), 0);
    }

    #[test]
    fn substitution_composes_monomials() {
        let f = Integrand::unit(3)
            .with_factor(m(&[1, 0, 0]), rf("q"), m(&[0, 1, 0]), 1)
            .unwrap();
        let g = f.substitute(1, &rf("q^-2"), &m(&[0, 0, 1])).unwrap();
        assert_eq!(g.factors()[0].coeff, rf("q^-1"));
        assert_eq!(g.factors()[0].right, m(&[0, 0, 1]));
        let u = Integrand::unit(2).substitute(0, &rf("q"), &m(&[0, 1])).unwrap();
        assert!(u.scalar().is_one() && u.num_factors() == 0 && u.prefactor().is_unit());
    }

    #[test]
    fn substitute_into_pole_is_error() {
        let f = Integrand::unit(2)
            .with_factor(m(&[1, 0]), rf("q"), m(&[0, 1]), -1)
            .unwrap();
        assert!(matches!(
            f.substitute(0, &rf("q"), &m(&[0, 1])),
            Err(Error::SubstituteIntoPole { .. })
        ));
    }

    #[test]
    fn gamma_has_one_inside_pole() {
        let g = gamma12("1", "q");
        let poles = g.classify_poles(0).unwrap();
        assert_eq!(poles.len(), 2);
        assert_eq!(poles[0].location, PoleLocation::Zero);
        assert_eq!(
            poles[1].location,
            PoleLocation::Linear {
                coeff: rf("q^-1"),
                target: m(&[0, 1])
            }
        );
        assert_eq!(poles[1].order, 1);
    }

    #[test]
    fn contour_pole_rejected() {
        let f = Integrand::unit(2)
            .with_factor(m(&[1, 0]), RatFunc::one(), m(&[0, 1]), -1)
            .unwrap();
        assert!(matches!(f.classify_poles(0), Err(Error::PoleOnContour { .. })));
    }

    #[test]
    fn gl2_residues() {
        let g = gamma12("1", "q");
        let lin = PoleLocation::Linear {
            coeff: rf("q^-1"),
            target: m(&[0, 1]),
        };
        let r = g.residue_simple(0, &lin).unwrap();
        assert_eq!(r.len(), 1);
        let expect = rf("(q^-1-1)^2/((q^-1-q)*q^-1)");
        assert_eq!(r[0].scalar(), &expect);
        assert_eq!(r[0].prefactor(), &m(&[0, -1]));
        let z = g.residue_simple(0, &PoleLocation::Zero).unwrap();
        assert_eq!(z.len(), 1);
        assert!(z[0].scalar().is_one());
        assert_eq!(z[0].prefactor(), &m(&[0, -1]));
        assert_eq!(z[0].num_factors(), 0);
    }

    #[test]
    fn zero_residue_of_ratio() {
        // z^-1 (z - c)/(z - d) at 0 gives c/d
        let f = Integrand::unit(1)
            .with_monomial(&m(&[-1]))
            .unwrap()
            .with_factor(m(&[1]), rf("q"), m(&[0]), 1)
            .unwrap()
            .with_factor(m(&[1]), rf("q^-2"), m(&[0]), -1)
            .unwrap();
        let r = f.residue_simple(0, &PoleLocation::Zero).unwrap();
        assert_eq!(r[0].scalar(), &rf("q^3"));
    }

    #[test]
    fn gamma_taylor_coefficients() {
        let (a, b) = (rf("v"), rf("q^2"));
        let g = gamma12("v", "q^2").with_monomial(&m(&[1, 1])).unwrap();
        let c0 = g.series_coefficient(0, 0).unwrap();
        assert_eq!(c0.len(), 1);
        assert!(c0[0].scalar().is_one());
        let c1 = g.series_coefficient(0, 1).unwrap();
        assert_eq!(c1.len(), 1);
        let expect = &(&b + &b.inv().unwrap()) - &(&a + &a.inv().unwrap());
        assert_eq!(c1[0].scalar(), &expect);
        assert_eq!(c1[0].prefactor(), &m(&[0, -1]));
    }

    #[test]
    fn double_pole_residue() {
        // z (z - c)^-2 at c has residue 1
        let f = Integrand::unit(1)
            .with_monomial(&m(&[1]))
            .unwrap()
            .with_factor(m(&[1]), rf("q^-1"), m(&[0]), -2)
            .unwrap();
        let loc = PoleLocation::Linear {
            coeff: rf("q^-1"),
            target: m(&[0]),
        };
        let r = f.residue_higher(0, &loc, 2).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].scalar().is_one());
        assert!(matches!(
            f.residue_simple(0, &loc),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn derivative_rules() {
        let lin = Integrand::unit(1)
            .with_factor(m(&[1]), rf("q"), m(&[0]), 1)
            .unwrap();
        let d = lin.derivative(0);
        assert_eq!(d.len(), 1);
        assert!(d[0].scalar().is_one() && d[0].num_factors() == 0 && d[0].prefactor().is_unit());
        let mono = Integrand::unit(1).with_monomial(&m(&[5])).unwrap();
        let d = mono.derivative(0);
        assert_eq!(d[0].scalar(), &RatFunc::from_int(5));
        assert_eq!(d[0].prefactor(), &m(&[4]));
        let two = lin.with_factor(m(&[1]), rf("q^2"), m(&[0]), 1).unwrap();
        assert_eq!(two.derivative(0).len(), 2);
    }

    #[test]
    fn split_quadratic_denominator() {
        // (z^2 - q^2)^-1 = ((z - q)(z + q))^-1
        let f = Integrand::unit(1)
            .with_factor(m(&[2]), rf("q^2"), m(&[0]), -1)
            .unwrap();
        let g = f.split_for(0).unwrap();
        assert_eq!(g.num_factors(), 2);
        let h = Integrand::unit(1)
            .with_factor(m(&[2]), rf("q"), m(&[0]), -1)
            .unwrap();
        assert!(h.split_for(0).is_ok());
        let bad = Integrand::unit(1)
            .with_factor(m(&[2]), rf("2"), m(&[0]), -1)
            .unwrap();
        assert!(matches!(bad.split_for(0), Err(Error::NonLinearPole { .. })));
    }

    #[test]
    fn text_round_trip() {
        let g = gamma12("1", "q").with_scalar(&rf("2/(1+q)"));
        let s = g.render();
        assert_eq!(Integrand::parse(&s, 2).unwrap(), g);
        let h = Integrand::parse("z1^-1 z2^-1 * (z1 - [q^-1] z2)^-1 * (z1 - z2)^2", 2).unwrap();
        assert_eq!(Integrand::parse(&h.render(), 2).unwrap(), h);
        let k = Integrand::parse("(z1^3 + [q^-1])^2", 1).unwrap();
        assert_eq!(k.factors()[0].coeff, rf("-q^-1"));
        assert_eq!(Integrand::parse(&k.render(), 1).unwrap(), k);
    }
}
