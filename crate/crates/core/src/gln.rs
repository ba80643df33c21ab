//! GL_n Plancherel densities indexed by partitions, the clump closed form for
//! the torus integral, `f_d(1)` and the denominator checks built on them.

use std::collections::HashMap;

use serde::Serialize;

use crate::engine::{Engine, EngineOptions};
use crate::error::{Error, Result};
use crate::integrand::{Integrand, Monomial};
use crate::qfield::{cyclotomic_in_q, divides_power_of, CycRational, Divisibility, LaurentPoly, RatFunc};

/// Block sizes `l_0 <= ... <= l_N` of a standard Levi subgroup of `GL_n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LeviSpec {
    blocks: Vec<u32>,
}

impl LeviSpec {
    /// Sorts the blocks; rejects empty input and zero blocks.
    pub fn new(mut blocks: Vec<u32>) -> Result<Self> {
        if blocks.is_empty() || blocks.contains(&0) {
            return Err(Error::ContractViolation(
                "a partition needs at least one positive part".into(),
            ));
        }
        blocks.sort_unstable();
        Ok(LeviSpec { blocks })
    }

    /// `(1, ..., 1)` with `n` parts.
    pub fn torus(n: u32) -> Self {
        LeviSpec {
            blocks: vec![1; n as usize],
        }
    }

    pub fn blocks(&self) -> &[u32] {
        &self.blocks
    }

    /// Number of blocks `N + 1`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn n(&self) -> u32 {
        self.blocks.iter().sum()
    }

    /// `2 g_i = l_i - 1`.
    pub fn two_g(&self, i: usize) -> i64 {
        self.blocks[i] as i64 - 1
    }

    /// `v`-exponent of `q_{ij} = q^{|g_i - g_j|}`.
    pub fn small_exp(&self, i: usize, j: usize) -> i64 {
        (self.blocks[i] as i64 - self.blocks[j] as i64).abs()
    }

    /// `v`-exponent of `q^{ij} = q^{g_i + g_j + 1}`.
    pub fn big_exp(&self, i: usize, j: usize) -> i64 {
        self.blocks[i] as i64 + self.blocks[j] as i64
    }

    /// `m_j`, the number of blocks of size `j`, for `j = 1..=n`.
    pub fn multiplicities(&self) -> Vec<u32> {
        let n = self.n() as usize;
        let mut m = vec![0; n + 1];
        for &l in &self.blocks {
            m[l as usize] += 1;
        }
        m.remove(0);
        m
    }

    /// `m_1! ... m_n!`.
    pub fn symmetry_order(&self) -> u64 {
        self.multiplicities()
            .iter()
            .map(|&m| (1..=m as u64).product::<u64>())
            .product()
    }

    pub fn label(&self) -> String {
        self.blocks
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl std::str::FromStr for LeviSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let blocks = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad partition part `{}`", t)))
            })
            .collect::<Result<Vec<_>>>()?;
        LeviSpec::new(blocks)
    }
}

/// All partitions of `n` as nondecreasing block lists, in lexicographic order.
pub fn partitions(n: u32) -> Vec<LeviSpec> {
    fn rec(rest: u32, min: u32, cur: &mut Vec<u32>, out: &mut Vec<LeviSpec>) {
        if rest == 0 {
            out.push(LeviSpec {
                blocks: cur.clone(),
            });
            return;
        }
        for l in min..=rest {
            if rest - l != 0 && rest - l < l {
                continue;
            }
            cur.push(l);
            rec(rest - l, l, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, 1, &mut Vec::new(), &mut out);
    }
    out
}

fn v_monomial(e: i64) -> RatFunc {
    RatFunc::v_pow(e)
}

fn one_minus_v(e: i64) -> RatFunc {
    &RatFunc::one() - &RatFunc::v_pow(e)
}

/// `Gamma^{ij}` for blocks `i < j` of `levi`, as an integrand on `nvars`
/// variables with `z_i`, `z_j` at the given slots.
pub fn gamma_factor(levi: &LeviSpec, i: usize, j: usize, slot_i: usize, slot_j: usize, nvars: usize) -> Result<Integrand> {
    let a = v_monomial(levi.small_exp(i, j));
    let b = v_monomial(levi.big_exp(i, j));
    let zi = Monomial::var(nvars, slot_i);
    let zj = Monomial::var(nvars, slot_j);
    Integrand::unit(nvars)
        .with_factor(zi.clone(), a.clone(), zj.clone(), 1)?
        .with_factor(zi.clone(), a.inv()?, zj.clone(), 1)?
        .with_factor(zi.clone(), b.clone(), zj.clone(), -1)?
        .with_factor(zi, b.inv()?, zj, -1)
}

/// The constant `c_M`: the `q^{2g+1}` over triples `(i, j, g)`, the block
/// factors `q^{l^2-l}(q-1)^l / (l(q^l-1))` and `q^{(n-n^2)/2}`.
pub fn c_m(levi: &LeviSpec) -> RatFunc {
    let k = levi.len();
    // Work with v-exponents: q^{2g+1} = v^{4g+2} = v^{2(2g)+2}.
    let mut vexp: i64 = 0;
    for i in 0..k {
        for j in i + 1..k {
            let lo = (levi.two_g(i) - levi.two_g(j)).abs();
            let hi = levi.two_g(i) + levi.two_g(j);
            let mut tg = lo;
            while tg <= hi {
                vexp += 2 * tg + 2;
                tg += 2;
            }
        }
    }
    let n = levi.n() as i64;
    vexp += n - n * n;
    let mut acc = RatFunc::v_pow(vexp);
    let q_minus_1 = &RatFunc::q_pow(1) - &RatFunc::one();
    for &l in levi.blocks() {
        let l = l as i64;
        let num = &RatFunc::q_pow(l * l - l) * &q_minus_1.pow(l).expect("nonnegative power");
        let den = (&RatFunc::q_pow(l) - &RatFunc::one()).scale(&CycRational::from_int(l));
        acc = &acc * &(&num / &den);
    }
    acc
}

/// The density `prod_{i<j} Gamma^{ij}` times `(z_0 ... z_N)^-1`, together
/// with `c_M`. The engine integrates against plain `dz`, so the `dz/z`
/// measure lives in the prefactor.
pub fn build_gln_density(levi: &LeviSpec) -> Result<(RatFunc, Integrand)> {
    let k = levi.len();
    let mut f = Integrand::unit(k).with_monomial(&Monomial::from_exps(vec![-1; k]))?;
    for i in 0..k {
        for j in i + 1..k {
            f = f.mul(&gamma_factor(levi, i, j, i, j, k)?)?;
        }
    }
    Ok((c_m(levi), f))
}

/// Which algebraic form of the clump product to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClumpForm {
    /// Product over consecutive pairs and all earlier starts, before any
    /// cancellation.
    PreCancellation,
    /// The reduced form with the `R_{rk}` numerators.
    PostCancellation,
}

/// Data of one clump `i_0 -> ... -> i_t`.
pub struct ClumpTerm<'a> {
    levi: &'a LeviSpec,
    idx: Vec<usize>,
}

impl<'a> ClumpTerm<'a> {
    pub fn new(levi: &'a LeviSpec, idx: Vec<usize>) -> Self {
        ClumpTerm { levi, idx }
    }

    fn l(&self, k: usize) -> i64 {
        self.levi.blocks()[self.idx[k]] as i64
    }

    /// `t`, one less than the clump size.
    pub fn t(&self) -> usize {
        self.idx.len() - 1
    }

    /// `v`-exponent of `Q_{rk} = q^{i_k i_{k+1}} ... q^{i_r i_{r+1}}`.
    pub fn q_rk_exp(&self, r: usize, k: usize) -> i64 {
        (r..=k).map(|s| self.l(s) + self.l(s + 1)).sum()
    }

    /// `R_{rk}` in the reduced form.
    pub fn r_rk(&self, r: usize, k: usize) -> RatFunc {
        let q = self.q_rk_exp(r, k);
        let t = self.t();
        if k + 1 < t {
            one_minus_v(q + self.l(r) - self.l(k + 1))
        } else {
            let d = self.l(r) - self.l(t);
            &one_minus_v(q + d) * &one_minus_v(q - d)
        }
    }

    pub fn value(&self, form: ClumpForm) -> RatFunc {
        match form {
            ClumpForm::PreCancellation => self.value_pre(),
            ClumpForm::PostCancellation => self.value_post(),
        }
    }

    fn value_pre(&self) -> RatFunc {
        let t = self.t();
        let lv = self.levi;
        let mut acc = RatFunc::one();
        for k in 0..t {
            let (a, b) = (
                lv.small_exp(self.idx[k], self.idx[k + 1]),
                lv.big_exp(self.idx[k], self.idx[k + 1]),
            );
            acc = &acc * &(&(&one_minus_v(b + a) * &one_minus_v(b - a)) / &one_minus_v(2 * b));
            for r in 0..k {
                let qe = self.q_rk_exp(r, k);
                let a = lv.small_exp(self.idx[r], self.idx[k + 1]);
                let b = lv.big_exp(self.idx[r], self.idx[k + 1]);
                let num = &one_minus_v(qe + a) * &one_minus_v(qe - a);
                let den = &one_minus_v(qe + b) * &one_minus_v(qe - b);
                acc = &acc * &(&num / &den);
            }
        }
        acc
    }

    fn value_post(&self) -> RatFunc {
        let t = self.t();
        let lv = self.levi;
        let (l0, l1) = (2 * self.l(0), 2 * self.l(1));
        let mut acc = &(&one_minus_v(l0) * &one_minus_v(l1)) / &one_minus_v(l0 + l1);
        for k in 1..t {
            let lk1 = 2 * self.l(k + 1);
            let lk = 2 * self.l(k);
            acc = &acc * &(&one_minus_v(lk1) / &one_minus_v(lk + lk1));
            for r in 0..k {
                let qe = self.q_rk_exp(r, k);
                let b = lv.big_exp(self.idx[r], self.idx[k + 1]);
                acc = &acc * &(&self.r_rk(r, k) / &one_minus_v(qe + b));
            }
        }
        acc
    }
}

/// Sum over all branches of the product of clump values.
///
/// A branch splits the blocks into ordered chains, each starting at the
/// smallest index not yet used; chains of length one contribute 1.
pub fn closed_form_with(levi: &LeviSpec, form: ClumpForm) -> RatFunc {
    let k = levi.len();
    let full: u32 = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
    let mut memo: HashMap<u32, RatFunc> = HashMap::new();
    let mut chain_memo: HashMap<Vec<usize>, RatFunc> = HashMap::new();
    sum_over_rest(levi, form, full, &mut memo, &mut chain_memo)
}

fn sum_over_rest(
    levi: &LeviSpec,
    form: ClumpForm,
    rest: u32,
    memo: &mut HashMap<u32, RatFunc>,
    chain_memo: &mut HashMap<Vec<usize>, RatFunc>,
) -> RatFunc {
    if rest == 0 {
        return RatFunc::one();
    }
    if let Some(v) = memo.get(&rest) {
        return v.clone();
    }
    let start = rest.trailing_zeros() as usize;
    let mut total = RatFunc::zero();
    let mut chain = vec![start];
    extend_chains(
        levi,
        form,
        rest & !(1 << start),
        &mut chain,
        &mut total,
        memo,
        chain_memo,
    );
    memo.insert(rest, total.clone());
    total
}

fn extend_chains(
    levi: &LeviSpec,
    form: ClumpForm,
    rest: u32,
    chain: &mut Vec<usize>,
    total: &mut RatFunc,
    memo: &mut HashMap<u32, RatFunc>,
    chain_memo: &mut HashMap<Vec<usize>, RatFunc>,
) {
    // Close the chain here.
    let cv = if chain.len() == 1 {
        RatFunc::one()
    } else {
        chain_memo
            .entry(chain.clone())
            .or_insert_with(|| ClumpTerm::new(levi, chain.clone()).value(form))
            .clone()
    };
    let tail = sum_over_rest(levi, form, rest, memo, chain_memo);
    *total = &*total + &(&cv * &tail);
    // Or continue it with any remaining block.
    let mut bits = rest;
    while bits != 0 {
        let j = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        chain.push(j);
        extend_chains(levi, form, rest & !(1 << j), chain, total, memo, chain_memo);
        chain.pop();
    }
}

/// The torus integral of the density, from the reduced clump formula.
pub fn closed_form_value(levi: &LeviSpec) -> RatFunc {
    closed_form_with(levi, ClumpForm::PostCancellation)
}

/// The torus integral of the density, by the residue engine.
pub fn engine_value(levi: &LeviSpec, opts: EngineOptions) -> Result<RatFunc> {
    let (_, f) = build_gln_density(levi)?;
    Engine::new(opts).integrate(&f)
}

/// `rank / (m_1! ... m_n!) * c_M * closed_form_value`.
pub fn fd1(levi: &LeviSpec, rank: u32) -> Result<RatFunc> {
    if rank == 0 {
        return Err(Error::ContractViolation("rank must be positive".into()));
    }
    Ok(fd1_from_integral(levi, rank, &closed_form_value(levi)))
}

/// `rank / (m_1! ... m_n!) * c_M * integral`.
pub fn fd1_from_integral(levi: &LeviSpec, rank: u32, integral: &RatFunc) -> RatFunc {
    let pre = RatFunc::from_ratio(rank as i64, levi.symmetry_order() as i64);
    &(&pre * &c_m(levi)) * integral
}

/// Finite Weyl groups with a Poincaré polynomial on offer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeylFamily {
    /// Type `A_r`, the symmetric group `S_{r+1}`.
    A(u32),
    B(u32),
    C(u32),
    D(u32),
    G2,
    F4,
}

impl WeylFamily {
    /// Exponents `e_i`; the Poincaré polynomial is `prod (1 + q + ... + q^{e_i})`.
    pub fn exponents(&self) -> Result<Vec<u32>> {
        Ok(match *self {
            WeylFamily::A(r) => (1..=r).collect(),
            WeylFamily::B(r) | WeylFamily::C(r) => {
                if r == 0 {
                    return Err(Error::Unsupported("rank 0".into()));
                }
                (1..=r).map(|i| 2 * i - 1).collect()
            }
            WeylFamily::D(r) => {
                if r < 2 {
                    return Err(Error::Unsupported("type D needs rank >= 2".into()));
                }
                let mut e: Vec<u32> = (1..r).map(|i| 2 * i - 1).collect();
                e.push(r - 1);
                e.sort_unstable();
                e
            }
            WeylFamily::G2 => vec![1, 5],
            WeylFamily::F4 => vec![1, 5, 7, 11],
        })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let up = s.to_ascii_uppercase();
        if up == "G2" {
            return Ok(WeylFamily::G2);
        }
        if up == "F4" {
            return Ok(WeylFamily::F4);
        }
        let (head, tail) = up.split_at(1);
        let r: u32 = tail
            .parse()
            .map_err(|_| Error::Unsupported(format!("unknown Weyl family `{}`", s)))?;
        match head {
            "A" => Ok(WeylFamily::A(r)),
            "B" => Ok(WeylFamily::B(r)),
            "C" => Ok(WeylFamily::C(r)),
            "D" => Ok(WeylFamily::D(r)),
            _ => Err(Error::Unsupported(format!("unknown Weyl family `{}`", s))),
        }
    }
}

/// `1 + q + ... + q^e`.
pub fn q_integer(e: u32) -> LaurentPoly {
    LaurentPoly::q_poly(&vec![1; e as usize + 1])
}

/// Poincaré polynomial `sum_w q^{l(w)}` of the finite Weyl group.
pub fn poincare(family: WeylFamily) -> Result<LaurentPoly> {
    Ok(family
        .exponents()?
        .into_iter()
        .fold(LaurentPoly::one(), |acc, e| acc * q_integer(e)))
}

/// `P_{S_n}(q)`.
pub fn poincare_sn(n: u32) -> LaurentPoly {
    poincare(WeylFamily::A(n.saturating_sub(1))).expect("type A is supported")
}

/// Behaviour of `f_d(1)` at the roots of `P_{S_n}` grouped by order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SingularityReport {
    pub partition: String,
    pub fd1: String,
    /// Labels `Phi<d>` of the cyclotomic classes where `f_d(1)` has a pole.
    pub singular: Vec<String>,
    /// Labels where `f_d(1)` is regular.
    pub regular: Vec<String>,
    pub divides: Divisibility,
}

/// Orders `d >= 2` with `Phi_d | P_{S_n}`, i.e. `2 <= d <= n`.
pub fn poincare_root_orders(n: u32) -> Vec<u64> {
    (2..=n as u64).collect()
}

/// Classifies the roots of `P_{S_n}` as poles or regular points of `f_d(1)`.
pub fn singularity_report(levi: &LeviSpec) -> Result<SingularityReport> {
    let f = fd1(levi, 1)?;
    singularity_report_for(levi, &f)
}

pub fn singularity_report_for(levi: &LeviSpec, f: &RatFunc) -> Result<SingularityReport> {
    let n = levi.n();
    let den = f.denom();
    let mut singular = Vec::new();
    let mut regular = Vec::new();
    for d in poincare_root_orders(n) {
        let phi = cyclotomic_in_q(d);
        let label = format!("Phi{}", d);
        if den.gcd(&phi).span() > 0 {
            singular.push(label);
        } else {
            regular.push(label);
        }
    }
    Ok(SingularityReport {
        partition: levi.label(),
        fd1: f.to_string(),
        singular,
        regular,
        divides: divides_power_of(den, &poincare_sn(n)),
    })
}

/// Highest power of `q` in the numerator of `f_d(1)` (half-integers rounded up).
pub fn numerator_q_degree(f: &RatFunc) -> i64 {
    (f.numer().high_exp() + 1).div_euclid(2)
}

/// A uniform bound, depending only on `n`, for `numerator_q_degree` of
/// `f_d(1)` over all partitions of `n`: `n(n-1)`.
pub fn numerator_degree_bound(n: u32) -> i64 {
    let n = n as i64;
    n * (n - 1)
}

/// Everything computed for one partition.
#[derive(Clone, Debug, Serialize)]
pub struct GlnReport {
    pub n: u32,
    pub partition: String,
    #[serde(rename = "cM")]
    pub c_m: String,
    pub closed_form: String,
    pub engine_value: Option<String>,
    pub fd1: String,
    pub poincare: String,
    pub divides: Divisibility,
    pub singular_roots: Vec<String>,
    pub regular_roots: Vec<String>,
    pub agreement: Option<bool>,
    pub numerator_q_degree: i64,
}

/// Builds the report; the engine runs only when `engine` is given.
pub fn gln_report(levi: &LeviSpec, engine: Option<EngineOptions>) -> Result<GlnReport> {
    let cm = c_m(levi);
    let closed = closed_form_value(levi);
    let eng = match engine {
        Some(opts) => Some(engine_value(levi, opts)?),
        None => None,
    };
    let f = fd1_from_integral(levi, 1, &closed);
    let sr = singularity_report_for(levi, &f)?;
    Ok(GlnReport {
        n: levi.n(),
        partition: levi.label(),
        c_m: cm.to_string(),
        closed_form: closed.to_string(),
        agreement: eng.as_ref().map(|e| (&cm * e) == (&cm * &closed)),
        engine_value: eng.map(|e| e.to_string()),
        fd1: f.to_string(),
        poincare: poincare_sn(levi.n()).to_string(),
        divides: sr.divides,
        singular_roots: sr.singular,
        regular_roots: sr.regular,
        numerator_q_degree: numerator_q_degree(&f),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfield::parse_ratfunc;

    fn rf(s: &str) -> RatFunc {
        parse_ratfunc(s).unwrap()
    }

    fn levi(b: &[u32]) -> LeviSpec {
        LeviSpec::new(b.to_vec()).unwrap()
    }

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (1..=8).map(|n| partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11, 15, 22]);
        assert!(partitions(4).iter().any(|p| p.blocks() == [2, 2]));
    }

    #[test]
    fn levi_constants() {
        let l = levi(&[1, 3]);
        assert_eq!(l.small_exp(0, 1) + l.big_exp(0, 1), 2 * 3);
        assert_eq!(levi(&[1, 1, 2]).multiplicities(), vec![2, 1, 0, 0]);
        assert_eq!(levi(&[1, 1, 2]).symmetry_order(), 2);
    }

    #[test]
    fn c_m_values() {
        assert!(c_m(&levi(&[1, 1])).is_one());
        assert!(c_m(&LeviSpec::torus(4)).is_one());
        assert_eq!(c_m(&levi(&[2, 2])), rf("q^2*(q-1)^2/(4*(q+1)^2)"));
    }

    #[test]
    fn closed_forms_match_examples() {
        assert_eq!(closed_form_value(&levi(&[1, 1])), rf("2/(1+q)"));
        assert_eq!(closed_form_value(&levi(&[2, 2])), rf("2/(1+q^2)"));
        assert_eq!(
            closed_form_value(&LeviSpec::torus(3)),
            rf("6/((1+q)*(1+q+q^2))")
        );
        for p in partitions(4) {
            assert_eq!(
                closed_form_with(&p, ClumpForm::PreCancellation),
                closed_form_with(&p, ClumpForm::PostCancellation),
                "{}",
                p.label()
            );
        }
    }

    #[test]
    fn fd1_examples() {
        assert_eq!(fd1(&levi(&[1, 1]), 1).unwrap(), rf("1/(1+q)"));
        let cm = c_m(&levi(&[2, 2]));
        assert_eq!(fd1(&levi(&[2, 2]), 1).unwrap(), &cm / &rf("1+q^2"));
        assert_eq!(fd1(&levi(&[3]), 1).unwrap(), c_m(&levi(&[3])));
    }

    #[test]
    fn poincare_polynomials() {
        assert_eq!(poincare(WeylFamily::A(2)).unwrap(), LaurentPoly::q_poly(&[1, 2, 2, 1]));
        assert_eq!(
            poincare(WeylFamily::C(2)).unwrap(),
            LaurentPoly::q_poly(&[1, 1]).pow(2) * LaurentPoly::q_poly(&[1, 0, 1])
        );
        assert_eq!(poincare(WeylFamily::A(1)).unwrap(), LaurentPoly::q_poly(&[1, 1]));
        assert_eq!(
            poincare(WeylFamily::G2).unwrap(),
            LaurentPoly::q_poly(&[1, 1]) * LaurentPoly::q_poly(&[1, 1, 1, 1, 1, 1])
        );
    }

    #[test]
    fn singularity_examples() {
        let r = singularity_report(&levi(&[2, 2])).unwrap();
        assert!(r.regular.contains(&"Phi3".to_string()));
        assert_eq!(r.singular, vec!["Phi2".to_string(), "Phi4".to_string()]);
        let r = singularity_report(&levi(&[1, 1])).unwrap();
        assert_eq!(r.singular, vec!["Phi2".to_string()]);
        let r = singularity_report(&levi(&[1])).unwrap();
        assert!(r.singular.is_empty() && r.regular.is_empty());
    }
}
