use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use super::cyclo::{CycRational, CYCLO_ORDER};
use super::laurent::LaurentPoly;

/// Euler's totient.
pub fn euler_phi(n: u64) -> u64 {
    let mut n0 = n;
    let mut out = n;
    let mut p = 2;
    while p * p <= n0 {
        if n0.is_multiple_of(p) {
            while n0.is_multiple_of(p) {
                n0 /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if n0 > 1 {
        out -= out / n0;
    }
    out
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn int_poly_divexact(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    // b is monic
    let db = b.len() - 1;
    let mut r = a.to_vec();
    let mut q = vec![BigInt::zero(); a.len() - db];
    for i in (0..q.len()).rev() {
        let c = r[i + db].clone();
        if c.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            r[i + j] -= &c * bj;
        }
        q[i] = c;
    }
    debug_assert!(r.iter().all(|x| x.is_zero()));
    q
}

fn inflate_int(a: &[BigInt], k: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); (a.len() - 1) * k + 1];
    for (i, c) in a.iter().enumerate() {
        out[i * k] = c.clone();
    }
    out
}

/// Integer coefficients of the cyclotomic polynomial `Phi_n(x)`, ascending.
pub fn cyclotomic_poly(n: u64) -> Vec<BigInt> {
    assert!(n >= 1);
    // Phi_rad(n) via Phi_{pk}(x) = Phi_k(x^p) / Phi_k(x), then inflate by n / rad(n).
    let mut phi = vec![-BigInt::one(), BigInt::one()];
    let mut rad = 1u64;
    for p in prime_factors(n) {
        let up = inflate_int(&phi, p as usize);
        phi = int_poly_divexact(&up, &phi);
        rad *= p;
    }
    inflate_int(&phi, (n / rad) as usize)
}

/// `Phi_n` as a Laurent polynomial in the variable `v^step`.
fn cyclotomic_laurent(n: u64, step: i64) -> LaurentPoly {
    let c = cyclotomic_poly(n);
    LaurentPoly::from_terms(c.into_iter().enumerate().filter(|(_, x)| !x.is_zero()).map(
        |(i, x)| {
            (
                i as i64 * step,
                CycRational::from_rational(num_rational::BigRational::from_integer(x)),
            )
        },
    ))
}

/// Result of a divisibility test `den | P^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Divisibility {
    pub ok: bool,
    /// Minimal exponent when `ok`.
    pub k: Option<u32>,
}

/// Smallest `k >= 0` with `den | P^k` up to monomial factors `v^j`.
///
/// Each round divides out `gcd(r, P)`; the number of rounds equals the
/// largest ratio of multiplicities over the irreducible factors of `den`,
/// which is the minimal exponent.
pub fn divides_power_of(den: &LaurentPoly, p: &LaurentPoly) -> Divisibility {
    assert!(!den.is_zero() && !p.is_zero(), "zero input to divides_power_of");
    let mut r = den.content_free();
    let mut k = 0u32;
    while r.span() > 0 {
        let g = r.gcd(p);
        if g.span() == 0 {
            return Divisibility { ok: false, k: None };
        }
        r = r.exact_div(&g).expect("gcd divides");
        k += 1;
    }
    Divisibility { ok: true, k: Some(k) }
}

/// Cyclotomic content of a polynomial: the factors `Phi_n` of the variable
/// (`q` if only even `v`-powers occur, else `v`) together with multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CyclotomicWitness {
    /// `"q"` or `"v"`.
    pub variable: String,
    /// `(n, multiplicity)` for each `Phi_n` sharing a root with the input.
    pub factors: Vec<(u64, u32)>,
    /// True when nothing but cyclotomic factors and monomials remain.
    pub complete: bool,
}

impl CyclotomicWitness {
    pub fn labels(&self) -> Vec<String> {
        self.factors
            .iter()
            .map(|(n, m)| {
                if *m == 1 {
                    format!("Phi{}({})", n, self.variable)
                } else {
                    format!("Phi{}({})^{}", n, self.variable, m)
                }
            })
            .collect()
    }
}

/// Splits off cyclotomic factors by repeated exact gcds.
///
/// A root of unity that is a root of an irreducible factor of degree `d` over
/// `Q(zeta_m)` has order `n` with `phi(n) <= d * phi(m)`, so it suffices to
/// try those `n`.
pub fn unity_witness(den: &LaurentPoly) -> CyclotomicWitness {
    assert!(!den.is_zero());
    let (mut r, variable) = match den.content_free().deflate(2) {
        Some(p) => (p, "q"),
        None => (den.content_free(), "v"),
    };
    let bound = r.span() as u64 * euler_phi(CYCLO_ORDER as u64);
    let mut factors = Vec::new();
    let mut n = 1u64;
    while r.span() > 0 && n <= 2 * bound * bound + 2 {
        if euler_phi(n) <= bound {
            let phi_n = cyclotomic_laurent(n, 1);
            let mut mult = 0;
            loop {
                let g = r.gcd(&phi_n);
                if g.span() == 0 {
                    break;
                }
                r = r.exact_div(&g).unwrap();
                mult += 1;
            }
            if mult > 0 {
                factors.push((n, mult));
            }
        }
        n += 1;
    }
    CyclotomicWitness {
        variable: variable.to_string(),
        factors,
        complete: r.span() == 0,
    }
}

/// True iff every root of `den` (as a polynomial in `v`, monomials ignored)
/// is a root of unity, i.e. `den` divides a product of powers of `q^n - 1`.
pub fn roots_are_roots_of_unity(den: &LaurentPoly) -> bool {
    unity_witness(den).complete
}

/// `Phi_n(q)` as a Laurent polynomial in `v`.
pub fn cyclotomic_in_q(n: u64) -> LaurentPoly {
    cyclotomic_laurent(n, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_i64(v: Vec<BigInt>) -> Vec<i64> {
        v.into_iter().map(|x| i64::try_from(x).unwrap()).collect()
    }

    #[test]
    fn small_cyclotomics() {
        assert_eq!(to_i64(cyclotomic_poly(1)), vec![-1, 1]);
        assert_eq!(to_i64(cyclotomic_poly(2)), vec![1, 1]);
        assert_eq!(to_i64(cyclotomic_poly(6)), vec![1, -1, 1]);
        assert_eq!(to_i64(cyclotomic_poly(12)), vec![1, 0, -1, 0, 1]);
        assert_eq!(to_i64(cyclotomic_poly(9)), vec![1, 0, 0, 1, 0, 0, 1]);
        assert_eq!(cyclotomic_poly(105).len() - 1, 48);
        // Phi_105 is the first cyclotomic with a coefficient of absolute value 2.
        assert!(cyclotomic_poly(105).iter().any(|c| *c == BigInt::from(-2)));
    }

    #[test]
    fn product_of_cyclotomics_is_x_n_minus_one() {
        let mut acc = LaurentPoly::one();
        for d in [1u64, 2, 3, 4, 6, 12] {
            acc = acc * cyclotomic_laurent(d, 1);
        }
        assert_eq!(acc, LaurentPoly::v_pow(12) - LaurentPoly::one());
    }

    #[test]
    fn divisibility_examples() {
        let p2 = LaurentPoly::q_poly(&[1, 1]);
        assert_eq!(
            divides_power_of(&p2, &p2),
            Divisibility { ok: true, k: Some(1) }
        );
        let p4 = LaurentPoly::q_poly(&[1, 1]) * LaurentPoly::q_poly(&[1, 1, 1]) * LaurentPoly::q_poly(&[1, 1, 1, 1]);
        let d = LaurentPoly::q_poly(&[1, 0, 1]);
        assert_eq!(divides_power_of(&d, &p4).k, Some(1));
        let p3 = LaurentPoly::q_poly(&[1, 1]) * LaurentPoly::q_poly(&[1, 1, 1]);
        assert!(!divides_power_of(&LaurentPoly::q_poly(&[1, 0, 0, 0, 0, 1]), &p3).ok);
        let sq = LaurentPoly::q_poly(&[1, 1]).pow(3).shift(-4);
        assert_eq!(divides_power_of(&sq, &p2).k, Some(3));
    }

    #[test]
    fn unity_examples() {
        let a = LaurentPoly::q_poly(&[1, 0, 1]) * LaurentPoly::q_poly(&[1, 1]).pow(2);
        assert!(roots_are_roots_of_unity(&a));
        assert!(roots_are_roots_of_unity(&LaurentPoly::q_poly(&[1, 1, 1, 1, 1, 1])));
        assert!(!roots_are_roots_of_unity(&LaurentPoly::q_poly(&[-2, 1])));
        let w = unity_witness(&a);
        assert_eq!(w.variable, "q");
        assert_eq!(w.factors, vec![(2, 2), (4, 1)]);
    }
}
