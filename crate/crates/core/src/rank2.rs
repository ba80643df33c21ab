//! Rank-one Plancherel components of `Sp_4` and `G_2`, and a catalog of
//! Iwahori-spherical formal degrees with a pole-structure check.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::engine::integrate_torus;
use crate::error::{Error, Result};
use crate::gln::{poincare, WeylFamily};
use crate::integrand::{Integrand, Monomial};
use crate::qfield::{
    divides_power_of, parse_ratfunc, unity_witness, CycRational, CyclotomicWitness, Divisibility,
    LaurentPoly, RatFunc,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    Sp4,
    G2,
}

impl Group {
    pub fn weyl(self) -> WeylFamily {
        match self {
            Group::Sp4 => WeylFamily::C(2),
            Group::G2 => WeylFamily::G2,
        }
    }

    pub fn levis(self) -> [LeviLabel; 2] {
        match self {
            Group::Sp4 => [LeviLabel::Mh, LeviLabel::Ms],
            Group::G2 => [LeviLabel::M1, LeviLabel::M2],
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Sp4 => "sp4",
            Group::G2 => "g2",
        })
    }
}

impl FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp4" => Ok(Group::Sp4),
            "g2" => Ok(Group::G2),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LeviLabel {
    Mh,
    Ms,
    M1,
    M2,
}

impl LeviLabel {
    pub fn group(self) -> Group {
        match self {
            LeviLabel::Mh | LeviLabel::Ms => Group::Sp4,
            LeviLabel::M1 | LeviLabel::M2 => Group::G2,
        }
    }
}

impl fmt::Display for LeviLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

impl FromStr for LeviLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mh" => Ok(LeviLabel::Mh),
            "ms" => Ok(LeviLabel::Ms),
            "m1" => Ok(LeviLabel::M1),
            "m2" => Ok(LeviLabel::M2),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

/// A constant that is carried by name rather than computed, default 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Multiplier {
    pub label: String,
    #[serde(serialize_with = "crate::qfield::serial::as_string")]
    pub value: RatFunc,
}

impl Multiplier {
    fn unit(label: &str) -> Self {
        Multiplier {
            label: label.to_string(),
            value: RatFunc::one(),
        }
    }
}

/// One rank-one Plancherel component: `prefactor * multipliers * \oint kernel * trace dz/z`.
///
/// The kernel is stored without the measure, so `kernel_integral(e)` is the
/// plain `dz` integral of `kernel * z^e`.
#[derive(Clone, Debug)]
pub struct DensityEntry {
    pub group: Group,
    pub levi: LeviLabel,
    pub prefactor: RatFunc,
    pub multipliers: Vec<Multiplier>,
    pub kernel: Integrand,
    pub notes: &'static str,
}

fn z() -> Monomial {
    Monomial::var(1, 0)
}

fn one() -> Monomial {
    Monomial::unit(1)
}

/// `(z^k - c)^p`.
fn lin(f: Integrand, k: i64, c: RatFunc, p: i64) -> Result<Integrand> {
    f.with_factor(z().pow(k), c, one(), p)
}

fn v(e: i64) -> RatFunc {
    RatFunc::v_pow(e)
}

fn neg(r: RatFunc) -> RatFunc {
    -r
}

fn zeta3(k: i64) -> RatFunc {
    RatFunc::constant(CycRational::zeta_pow(4 * k))
}

fn q_minus_one_over(den: RatFunc) -> RatFunc {
    &(&RatFunc::q_pow(1) - &RatFunc::one()) / &den
}

fn sp4_multipliers(sub: &str) -> Vec<Multiplier> {
    vec![
        Multiplier::unit(&format!("c(G/P_{})^-2", sub)),
        Multiplier::unit(&format!("gamma(G/P_{})", sub)),
        Multiplier::unit(&format!("1/#W(M_{})", sub)),
    ]
}

/// `q^3 (z-q)(z-q^-1) / ((z-q^-2)(z-q^2))`.
fn mh_kernel() -> Result<Integrand> {
    let mut f = Integrand::constant(1, RatFunc::q_pow(3));
    f = lin(f, 1, v(2), 1)?;
    f = lin(f, 1, v(-2), 1)?;
    f = lin(f, 1, v(-4), -1)?;
    lin(f, 1, v(4), -1)
}

/// `(z^2-1)^2 / ((z+q^-1/2)(z-q^-3/2)(z-q^3/2)(z+q^1/2))`.
fn ms_kernel() -> Result<Integrand> {
    let mut f = Integrand::unit(1);
    f = lin(f, 2, RatFunc::one(), 2)?;
    f = lin(f, 1, neg(v(-1)), -1)?;
    f = lin(f, 1, v(-3), -1)?;
    f = lin(f, 1, v(3), -1)?;
    lin(f, 1, neg(v(1)), -1)
}

/// `q^{21/2} (z^3+q^-1)^2 (z+1)^2 (z-1)^2` over the ten linear factors
/// `z + q^{+-3/2}`, `z + zeta q^{+-1/2}`, `z + zeta^2 q^{+-1/2}`, `z +- q^{+-1/2}`.
fn m1_kernel() -> Result<Integrand> {
    let mut f = Integrand::constant(1, v(21));
    f = lin(f, 3, neg(v(-2)), 2)?;
    f = lin(f, 1, RatFunc::from_int(-1), 2)?;
    f = lin(f, 1, RatFunc::one(), 2)?;
    for e in [-3, 3] {
        f = lin(f, 1, neg(v(e)), -1)?;
    }
    for k in [1, 2] {
        for e in [1, -1] {
            f = lin(f, 1, neg(&zeta3(k) * &v(e)), -1)?;
        }
    }
    for e in [-1, 1] {
        f = lin(f, 1, neg(v(e)), -1)?;
        f = lin(f, 1, v(e), -1)?;
    }
    Ok(f)
}

/// `q^5 (z^2-1)^2 (z+q^3/2)(z+q^-3/2)` over
/// `(z-q^-1/2)(z+q^1/2)(z+q^-5/2)(z^2-q)(z+q^5/2)`.
fn m2_kernel() -> Result<Integrand> {
    let mut f = Integrand::constant(1, RatFunc::q_pow(5));
    f = lin(f, 2, RatFunc::one(), 2)?;
    f = lin(f, 1, neg(v(3)), 1)?;
    f = lin(f, 1, neg(v(-3)), 1)?;
    f = lin(f, 1, v(-1), -1)?;
    f = lin(f, 1, neg(v(1)), -1)?;
    f = lin(f, 1, neg(v(-5)), -1)?;
    f = lin(f, 2, RatFunc::q_pow(1), -1)?;
    lin(f, 1, neg(v(5)), -1)
}

/// The density entry for a Levi label.
pub fn density(levi: LeviLabel) -> Result<DensityEntry> {
    let q_plus_1 = &RatFunc::q_pow(1) + &RatFunc::one();
    Ok(match levi {
        LeviLabel::Mh => DensityEntry {
            group: Group::Sp4,
            levi,
            prefactor: q_minus_one_over(q_plus_1),
            multipliers: sp4_multipliers("h"),
            kernel: mh_kernel()?,
            notes: "GL1 x Sp2 Levi of Sp4",
        },
        LeviLabel::Ms => DensityEntry {
            group: Group::Sp4,
            levi,
            prefactor: q_minus_one_over(q_plus_1.scale(&CycRational::from_int(2))),
            multipliers: sp4_multipliers("s"),
            kernel: ms_kernel()?,
            notes: "GL2 Levi of Sp4",
        },
        LeviLabel::M1 | LeviLabel::M2 => DensityEntry {
            group: Group::G2,
            levi,
            prefactor: q_minus_one_over(&q_plus_1.scale(&CycRational::from_int(2)) * &RatFunc::q_pow(5)),
            multipliers: Vec::new(),
            kernel: if levi == LeviLabel::M1 {
                m1_kernel()?
            } else {
                m2_kernel()?
            },
            notes: "GL2 Levi of G2, Steinberg of GL2, zeta a primitive cube root of unity",
        },
    })
}

/// A finite Laurent polynomial `sum c_e z^e` in the torus coordinate.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    terms: BTreeMap<i64, RatFunc>,
}

impl Trace {
    pub fn zero() -> Self {
        Trace::default()
    }

    pub fn monomial(e: i64) -> Self {
        Trace::zero().plus(e, RatFunc::one())
    }

    /// Adds `c z^e`.
    pub fn plus(mut self, e: i64, c: RatFunc) -> Self {
        let sum = &self.terms.remove(&e).unwrap_or_default() + &c;
        if !sum.is_zero() {
            self.terms.insert(e, sum);
        }
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &RatFunc)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl DensityEntry {
    /// `\oint kernel * z^e dz` over the unit circle.
    pub fn kernel_integral(&self, e: i64) -> Result<RatFunc> {
        let f = self.kernel.with_monomial(&Monomial::from_exps(vec![e]))?;
        integrate_torus(&f)
    }

    /// Product of the labeled multipliers.
    pub fn multiplier_value(&self) -> RatFunc {
        self.multipliers.iter().map(|m| m.value.clone()).product()
    }

    /// `\oint kernel * trace dz/z`, without the prefactor.
    pub fn trace_integral(&self, trace: &Trace) -> Result<RatFunc> {
        let mut acc = RatFunc::zero();
        for (e, c) in trace.terms() {
            acc = &acc + &(c * &self.kernel_integral(e - 1)?);
        }
        Ok(acc)
    }

    /// The component value `prefactor * multipliers * trace_integral`.
    pub fn component_integral(&self, trace: &Trace) -> Result<RatFunc> {
        let raw = self.trace_integral(trace)?;
        let out = &(&self.prefactor * &self.multiplier_value()) * &raw;
        if self.group == Group::G2 && !out.is_zeta_free() {
            return Err(Error::InvariantViolation(format!(
                "{} integral keeps zeta coefficients: {}",
                self.levi, out
            )));
        }
        Ok(out)
    }

    /// The same integrand over the torus with `dz/z` folded in, for quadrature.
    pub fn measure_integrand(&self, trace_exp: i64) -> Result<Integrand> {
        self.kernel
            .with_monomial(&Monomial::from_exps(vec![trace_exp - 1]))
    }
}

/// `\oint kernel * trace dz/z` for an `Sp_4` component, scaled by the prefactor.
pub fn sp4_component_integral(levi: LeviLabel, trace: &Trace) -> Result<RatFunc> {
    if levi.group() != Group::Sp4 {
        return Err(Error::ContractViolation(format!("{} is not an Sp4 Levi", levi)));
    }
    density(levi)?.component_integral(trace)
}

/// As `sp4_component_integral` for `G_2`; the result must be zeta-free.
pub fn g2_component_integral(levi: LeviLabel, trace: &Trace) -> Result<RatFunc> {
    if levi.group() != Group::G2 {
        return Err(Error::ContractViolation(format!("{} is not a G2 Levi", levi)));
    }
    density(levi)?.component_integral(trace)
}

/// Closed form for the `Mh` kernel: `q^{-2e-2}(q^{-2}-q)/(1+q+q^2+q^3)`.
pub fn mh_displayed(e: i64) -> RatFunc {
    let p = RatFunc::from_poly(LaurentPoly::q_poly(&[1, 1, 1, 1]));
    &(&RatFunc::q_pow(-2 * e - 2) * &(&RatFunc::q_pow(-2) - &RatFunc::q_pow(1))) / &p
}

/// Non-polynomial part displayed for the `Ms` kernel:
/// `q^-3 q^{9/2} q^{-3e/2}/((1+q)(1+q^2)) + q^e q^{1/2}/(1+q)^2`.
pub fn ms_displayed(e: i64) -> RatFunc {
    let a = &v(3 - 3 * e) / &RatFunc::from_poly(LaurentPoly::q_poly(&[1, 1, 1, 1]));
    let b = &v(2 * e + 1) / &RatFunc::from_poly(LaurentPoly::q_poly(&[1, 2, 1]));
    &a + &b
}

/// True when `r` is zeta-free and, written with a primitive integer
/// denominator, has an integer numerator.
pub fn has_integral_form(r: &RatFunc) -> bool {
    if !r.is_zeta_free() {
        return false;
    }
    let (num, den) = integral_parts(r);
    num.iter().all(|c| c.is_integer()) && den.iter().all(|c| c.is_integer())
}

/// Numerator and denominator coefficients (rational) after scaling the
/// denominator to a primitive integer polynomial with positive top coefficient.
pub fn integral_parts(r: &RatFunc) -> (Vec<num_rational::BigRational>, Vec<num_rational::BigRational>) {
    use num_integer::Integer;
    use num_traits::{One, Signed, Zero};
    let rat = |p: &LaurentPoly| -> Vec<num_rational::BigRational> {
        p.terms()
            .map(|(_, c)| c.as_rational().unwrap_or_else(num_rational::BigRational::zero))
            .collect()
    };
    let den = rat(r.denom());
    let num = rat(r.numer());
    let mut lcm = num_bigint::BigInt::one();
    for c in &den {
        lcm = lcm.lcm(c.denom());
    }
    let mut g = num_bigint::BigInt::zero();
    for c in &den {
        g = g.gcd(&(c.numer() * (&lcm / c.denom())));
    }
    let mut s = num_rational::BigRational::new(lcm, g);
    if den.last().map(|c| c.is_negative()).unwrap_or(false) {
        s = -s;
    }
    let sc = |v: Vec<num_rational::BigRational>| v.into_iter().map(|c| c * &s).collect();
    (sc(num), sc(den))
}

/// How a catalog entry is defined.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Reeder,
    Borel,
    Steinberg,
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BorelKind {
    B,
    Ca,
    Cb,
    F4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BorelFormula {
    pub kind: BorelKind,
    pub ell: u32,
}

/// A catalog record as stored on disk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalDegreeEntry {
    pub label: String,
    pub group: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<BorelFormula>,
}

#[derive(Deserialize)]
struct CatalogFile {
    entries: Vec<FormalDegreeEntry>,
}

const CATALOG_JSON: &str = include_str!("../data/catalog.json");

/// The shipped formal-degree catalog.
pub fn catalog() -> &'static [FormalDegreeEntry] {
    static CAT: OnceLock<Vec<FormalDegreeEntry>> = OnceLock::new();
    CAT.get_or_init(|| {
        serde_json::from_str::<CatalogFile>(CATALOG_JSON)
            .expect("shipped catalog parses")
            .entries
    })
}

pub fn catalog_entry(label: &str) -> Result<&'static FormalDegreeEntry> {
    catalog()
        .iter()
        .find(|e| e.label == label)
        .ok_or_else(|| Error::UnknownLabel(label.to_string()))
}

/// `1 + s q^e` with `s = +-1`.
fn one_pm(s: i64, e: i64) -> RatFunc {
    &RatFunc::one() + &RatFunc::q_pow(e).scale(&CycRational::from_int(s))
}

fn checked_quot(num: RatFunc, den: RatFunc) -> Result<RatFunc> {
    num.checked_div(&den)
}

/// Borel's parametric formal degrees, instantiated as printed.
pub fn borel_value(f: BorelFormula) -> Result<RatFunc> {
    let l = f.ell as i64;
    let mut acc = RatFunc::one();
    match f.kind {
        BorelKind::B => {
            if l < 3 {
                return Err(Error::Unsupported("type B formula needs ell >= 3".into()));
            }
            let head = &(&(&RatFunc::q_pow(l) * &one_pm(1, l)) * &one_pm(-1, 2 - l)) * &one_pm(-1, 3 - l);
            let den = RatFunc::from_poly(
                LaurentPoly::q_poly(&[1, 1]) * LaurentPoly::q_poly(&vec![1; 2 * l as usize]),
            );
            acc = checked_quot(head, den)?;
            for i in 1..l {
                let d = RatFunc::from_poly(LaurentPoly::q_poly(&vec![1; 2 * i as usize]));
                acc = &acc * &checked_quot(RatFunc::q_pow(2 * i - 1), d)?;
            }
            for i in 2..l {
                let num = &(&RatFunc::q_pow(2 * i - 2) * &one_pm(-1, 1 - l)) * &one_pm(-1, 2 - l + i);
                acc = &acc * &checked_quot(num, one_pm(-1, 2 * i - 2))?;
            }
        }
        BorelKind::Ca | BorelKind::Cb => {
            if l < 2 || (f.kind == BorelKind::Cb && l < 4) {
                return Err(Error::Unsupported("type C formula outside its range".into()));
            }
            for i in 0..l {
                let (num, den) = if f.kind == BorelKind::Ca {
                    (
                        &one_pm(-1, -1) * &one_pm(-1, -l - i + 1),
                        &(&one_pm(-1, -i - 1) * &one_pm(1, -i - 1)) * &one_pm(1, -i + 1),
                    )
                } else {
                    (
                        &one_pm(-1, -1) * &one_pm(1, -l - i + 3),
                        &(&one_pm(-1, -i - 1) * &one_pm(1, -i + 1)) * &one_pm(1, -i + 1),
                    )
                };
                acc = &acc * &checked_quot(num, den)?;
            }
        }
        BorelKind::F4 => {
            for i in 0..4 {
                let num = &one_pm(-1, -1) * &one_pm(-1, 1);
                let den = &(&one_pm(-1, i - 1) * &one_pm(1, -i + 1)) * &one_pm(-1, i);
                acc = &acc * &checked_quot(num, den)?;
            }
        }
    }
    Ok(acc)
}

/// `prod (1 - q^{e_i}) / P_W(q)`.
pub fn steinberg_value(family: WeylFamily) -> Result<RatFunc> {
    let num: RatFunc = family
        .exponents()?
        .into_iter()
        .map(|e| one_pm(-1, e as i64))
        .product();
    num.checked_div(&RatFunc::from_poly(poincare(family)?))
}

impl FormalDegreeEntry {
    pub fn weyl(&self) -> Result<WeylFamily> {
        WeylFamily::parse(&self.group)
    }

    pub fn value(&self) -> Result<RatFunc> {
        match self.source {
            Source::Steinberg => steinberg_value(self.weyl()?),
            Source::Borel => borel_value(self.formula.ok_or_else(|| {
                Error::Parse(format!("{}: Borel entry without formula", self.label))
            })?),
            Source::Reeder | Source::Synthetic => parse_ratfunc(self.expr.as_deref().ok_or_else(|| {
                Error::Parse(format!("{}: entry without expression", self.label))
            })?),
        }
    }
}

/// `formal_degree(label)` from the shipped catalog.
pub fn formal_degree(label: &str) -> Result<RatFunc> {
    catalog_entry(label)?.value()
}

/// Outcome of the pole-structure check for one entry.
#[derive(Clone, Debug, Serialize)]
pub struct PoleCheck {
    pub label: String,
    pub ok: bool,
    pub value: Option<String>,
    pub witness: Option<CyclotomicWitness>,
    /// Divisibility of the denominator by powers of the group's Poincaré polynomial.
    pub divides_poincare: Option<Divisibility>,
    pub vanishes: bool,
    pub error: Option<String>,
}

/// Checks that the denominator is, up to a monomial, a product of cyclotomic
/// polynomials, i.e. divides a product of powers of `q^n - 1`.
pub fn check_entry_poles(entry: &FormalDegreeEntry) -> PoleCheck {
    let mut out = PoleCheck {
        label: entry.label.clone(),
        ok: false,
        value: None,
        witness: None,
        divides_poincare: None,
        vanishes: false,
        error: None,
    };
    let val = match entry.value() {
        Ok(v) => v,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    let w = unity_witness(val.denom());
    out.ok = w.complete;
    out.vanishes = val.is_zero();
    if let Ok(fam) = entry.weyl() {
        if let Ok(p) = poincare(fam) {
            out.divides_poincare = Some(divides_power_of(val.denom(), &p));
        }
    }
    out.value = Some(val.to_string());
    out.witness = Some(w);
    out
}

pub fn check_formal_degree_poles(label: &str) -> Result<bool> {
    Ok(check_entry_poles(catalog_entry(label)?).ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(s: &str) -> RatFunc {
        parse_ratfunc(s).unwrap()
    }

    #[test]
    fn catalog_loads() {
        assert!(catalog().len() >= 20);
        assert_eq!(formal_degree("SO5.tau2").unwrap(), rf("q*(q-1)^2/(2*(q^2+1)*(q+1)^2)"));
        assert_eq!(formal_degree("G2.tau4").unwrap(), rf("q*(q-1)^2*(q+1)/(3*(q^6-1))"));
        assert!(matches!(formal_degree("nope"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn steinberg_a1() {
        assert_eq!(formal_degree("St(A1)").unwrap(), rf("(1-q)/(1+q)"));
    }

    #[test]
    fn pole_checks() {
        assert!(check_formal_degree_poles("SO5.tau2").unwrap());
        assert!(check_formal_degree_poles("G2.tau2").unwrap());
        let synthetic = FormalDegreeEntry {
            label: "synthetic".into(),
            group: "A1".into(),
            source: Source::Synthetic,
            expr: Some("1/(q-2)".into()),
            formula: None,
        };
        assert!(!check_entry_poles(&synthetic).ok);
    }

    #[test]
    fn c2_borel_value() {
        let c = borel_value(BorelFormula { kind: BorelKind::Ca, ell: 2 }).unwrap();
        assert!(roots_ok(&c));
    }

    fn roots_ok(r: &RatFunc) -> bool {
        unity_witness(r.denom()).complete
    }

    #[test]
    fn zero_trace_gives_zero() {
        let t = Trace::monomial(1).plus(1, RatFunc::from_int(-1));
        assert!(t.is_zero());
        assert!(g2_component_integral(LeviLabel::M1, &t).unwrap().is_zero());
    }

    #[test]
    fn integral_form() {
        assert!(has_integral_form(&rf("(1-q)/(1+q)")));
        assert!(!has_integral_form(&rf("1/(2*(1+q))")));
        assert!(!has_integral_form(&rf("3*q/(2+2*q)")));
        assert!(has_integral_form(&rf("2/(2+2*q)")));
    }
}
