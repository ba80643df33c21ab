//! Floating-point cross-checks: evaluation of integrands at points of the
//! torus and trapezoidal quadrature of torus integrals at a concrete `q`.
//!
//! Conventions match the engine: an [`Integrand`] is integrated against plain
//! `dz_1 ... dz_k / (2 pi i)^k`, so a density that includes the `dz/z`
//! measure carries it in its prefactor.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrand::Integrand;
use crate::qfield::RatFunc;

/// Samples whose smallest pole factor has modulus below this are treated as
/// hitting a pole.
pub const SINGULAR_EPS: f64 = 1e-13;

/// Parameters of a tensor trapezoidal rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub q0: f64,
    /// Points per circle; a power of two, at least 64.
    pub grid_n: usize,
}

impl QuadratureSpec {
    pub fn new(q0: f64, grid_n: usize) -> Result<Self> {
        if !(q0 > 1.0) || !q0.is_finite() {
            return Err(Error::ContractViolation(format!("q0 = {} must exceed 1", q0)));
        }
        if grid_n < 64 || !grid_n.is_power_of_two() {
            return Err(Error::ContractViolation(format!(
                "grid size {} must be a power of two >= 64",
                grid_n
            )));
        }
        Ok(QuadratureSpec { q0, grid_n })
    }
}

/// An integrand with coefficients specialized to complex numbers, restricted
/// to its active variables.
#[derive(Clone, Debug)]
struct Compiled {
    vars: Vec<usize>,
    scalar: Complex64,
    prefactor: Vec<i64>,
    /// `(left, coeff, right, power)` with exponents over `vars`.
    factors: Vec<(Vec<i64>, Complex64, Vec<i64>, i64)>,
}

fn restrict(exps: &[i64], vars: &[usize]) -> Vec<i64> {
    vars.iter().map(|&i| exps[i]).collect()
}

impl Compiled {
    fn new(f: &Integrand, q0: f64) -> Result<Self> {
        let v = Complex64::new(q0.sqrt(), 0.0);
        let vars = f.active_vars();
        let factors = f
            .factors()
            .into_iter()
            .map(|lf| {
                Ok((
                    restrict(lf.left.exps(), &vars),
                    lf.coeff.eval_v(v)?,
                    restrict(lf.right.exps(), &vars),
                    lf.power,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Compiled {
            scalar: f.scalar().eval_v(v)?,
            prefactor: restrict(f.prefactor().exps(), &vars),
            factors,
            vars,
        })
    }

    /// Value at `z`, given as a closure for `z^m`.
    fn eval_with(&self, mono: impl Fn(&[i64]) -> Complex64) -> Result<Complex64> {
        let mut acc = self.scalar * mono(&self.prefactor);
        for (l, c, r, p) in &self.factors {
            let x = mono(l) - c * mono(r);
            if *p < 0 && x.norm() < SINGULAR_EPS {
                return Err(Error::NearSingular);
            }
            acc *= x.powi(*p as i32);
        }
        Ok(acc)
    }
}

/// Value of `f` at `point` (indexed like the integrand's variables; entries
/// for inactive variables are ignored) with `v = +sqrt(q0)`.
pub fn eval_integrand_numeric(f: &Integrand, q0: f64, point: &[Complex64]) -> Result<Complex64> {
    if point.len() != f.nvars() {
        return Err(Error::ContractViolation(format!(
            "point of length {} for {} variables",
            point.len(),
            f.nvars()
        )));
    }
    let c = Compiled::new(f, q0)?;
    let z: Vec<Complex64> = c.vars.iter().map(|&i| point[i]).collect();
    c.eval_with(|m| {
        m.iter()
            .zip(&z)
            .map(|(&e, zi)| zi.powi(e as i32))
            .product()
    })
}

/// Neumaier-compensated complex sum.
#[derive(Clone, Copy, Default)]
struct KahanSum {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier(acc: &mut (f64, f64), x: f64) {
    let t = acc.0 + x;
    if acc.0.abs() >= x.abs() {
        acc.1 += (acc.0 - t) + x;
    } else {
        acc.1 += (x - t) + acc.0;
    }
    acc.0 = t;
}

impl KahanSum {
    fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, z.re);
        neumaier(&mut self.im, z.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

/// `(2 pi i)^-k \oint f dz_1 ... dz_k` by the trapezoidal rule at the points
/// `exp(i (2 pi j / n + shift))`.
///
/// When `f` is homogeneous of degree `-k`, `f * z_1 ... z_k` is invariant
/// under a common rotation, so the last variable is pinned to 1 and one
/// circle is dropped.
pub fn quadrature(f: &Integrand, spec: QuadratureSpec) -> Result<Complex64> {
    QuadratureSpec::new(spec.q0, spec.grid_n)?;
    let c = Compiled::new(f, spec.q0)?;
    let k = c.vars.len();
    if f.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if k == 0 {
        return Ok(c.scalar);
    }
    let reduce = f.homogeneous_degree() == Some(-(k as i64));
    // Half-step shifts move the grid off isolated singular samples.
    for attempt in 0..4 {
        let shift = attempt as f64 * std::f64::consts::PI / (spec.grid_n as f64 * 2.0);
        match run_grid(&c, spec.grid_n, reduce, shift) {
            Err(Error::NearSingular) => continue,
            other => return other,
        }
    }
    Err(Error::PoleOnContour {
        var: c.vars[0],
        location: "quadrature grid".into(),
    })
}

fn run_grid(c: &Compiled, n: usize, reduce: bool, shift: f64) -> Result<Complex64> {
    let k = c.vars.len();
    let free = if reduce { k - 1 } else { k };
    let tau = 2.0 * std::f64::consts::PI;
    let roots: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(1.0, tau * j as f64 / n as f64))
        .collect();
    let deg = |m: &[i64]| -> i64 { m[..free].iter().sum() };
    let rot = |d: i64| Complex64::from_polar(1.0, shift * d as f64);
    // z^a - c z^b = z^b (z^{a-b} - c): one table over the residue of the
    // exponent of z^{a-b} for each factor, and a single monomial for the rest.
    let mut mono_exp = c.prefactor.clone();
    for e in mono_exp.iter_mut() {
        *e += 1;
    }
    let mut tables = Vec::with_capacity(c.factors.len());
    let mut scale = c.scalar;
    for (l, coeff, r, p) in &c.factors {
        let d: Vec<i64> = l.iter().zip(r).map(|(a, b)| a - b).collect();
        for (e, b) in mono_exp.iter_mut().zip(r) {
            *e += p * b;
        }
        let twist = rot(deg(&d));
        let mut tab = Vec::with_capacity(n);
        for root in &roots {
            let x = root * twist - coeff;
            if *p < 0 && x.norm() < SINGULAR_EPS {
                return Err(Error::NearSingular);
            }
            tab.push(x.powi(*p as i32));
        }
        tables.push((d[..free].to_vec(), tab));
    }
    scale *= rot(deg(&mono_exp));
    let mono_free = mono_exp[..free].to_vec();
    let total = n.pow(free as u32);
    let nn = n as i64;
    const CHUNK: usize = 4096;
    let partials: Vec<Complex64> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|ch| {
            let mut s = KahanSum::default();
            let mut idx = vec![0i64; free];
            for flat in ch * CHUNK..((ch + 1) * CHUNK).min(total) {
                let mut r = flat;
                for slot in idx.iter_mut() {
                    *slot = (r % n) as i64;
                    r /= n;
                }
                let dot = |m: &[i64]| -> usize {
                    m.iter().zip(&idx).map(|(a, b)| a * b).sum::<i64>().rem_euclid(nn) as usize
                };
                let mut val = roots[dot(&mono_free)];
                for (d, tab) in &tables {
                    val *= tab[dot(d)];
                }
                s.add(val);
            }
            s.value()
        })
        .collect();
    let mut s = KahanSum::default();
    for p in partials {
        s.add(p);
    }
    Ok(scale * s.value() / total as f64)
}

/// One `q` value of a comparison.
#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub q: f64,
    pub exact: f64,
    pub quad_re: f64,
    pub quad_im: f64,
    pub rel_err: f64,
    /// `(grid_n, rel_err)` for the refinement sequence ending at the main grid.
    pub refinement: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub tol: f64,
    pub grid_n: usize,
    pub rows: Vec<CompareRow>,
    pub max_rel_err: f64,
    pub pass: bool,
}

/// Relative error `|exact - approx| / max(|exact|, floor)`.
pub fn rel_err(exact: Complex64, approx: Complex64) -> f64 {
    (exact - approx).norm() / exact.norm().max(1e-300)
}

/// Quadrature of `f` against the exact value at each `q`, with a refinement
/// sequence `grid/8, grid/4, grid/2, grid` where those are at least 64.
pub fn compare(exact: &RatFunc, f: &Integrand, qs: &[f64], tol: f64, grid_n: usize) -> Result<CompareReport> {
    if qs.is_empty() {
        return Err(Error::ContractViolation("empty q list".into()));
    }
    let mut rows = Vec::new();
    for &q in qs {
        let ex = exact.eval_q(q)?;
        let mut refinement = Vec::new();
        let mut g = (grid_n / 8).max(64);
        while g < grid_n {
            let a = quadrature(f, QuadratureSpec::new(q, g)?)?;
            refinement.push((g, abs_or_rel(ex, a)));
            g *= 2;
        }
        let a = quadrature(f, QuadratureSpec::new(q, grid_n)?)?;
        let e = abs_or_rel(ex, a);
        refinement.push((grid_n, e));
        rows.push(CompareRow {
            q,
            exact: ex.re,
            quad_re: a.re,
            quad_im: a.im,
            rel_err: e,
            refinement,
        });
    }
    let max_rel_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    Ok(CompareReport {
        tol,
        grid_n,
        pass: max_rel_err <= tol,
        max_rel_err,
        rows,
    })
}

/// Relative error, or absolute error when the exact value is zero.
fn abs_or_rel(exact: Complex64, approx: Complex64) -> f64 {
    if exact.norm() == 0.0 {
        approx.norm()
    } else {
        rel_err(exact, approx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gln::{build_gln_density, LeviSpec};
    use crate::integrand::Monomial;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_at_a_point() {
        // Gamma^{12} for blocks (1,1), without the dz/z prefactor.
        let l = LeviSpec::torus(2);
        let g = crate::gln::gamma_factor(&l, 0, 1, 0, 1, 2).unwrap();
        let val = eval_integrand_numeric(&g, 4.0, &[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert!((val - c(16.0 / 25.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn trivial_points() {
        let u = Integrand::unit(1);
        assert_eq!(eval_integrand_numeric(&u, 2.0, &[c(0.0, 1.0)]).unwrap(), c(1.0, 0.0));
        let inv = u.with_monomial(&Monomial::from_exps(vec![-1])).unwrap();
        let val = eval_integrand_numeric(&inv, 2.0, &[c(0.0, 1.0)]).unwrap();
        assert!((val - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn gl2_quadrature() {
        let (_, f) = build_gln_density(&LeviSpec::torus(2)).unwrap();
        let a = quadrature(&f, QuadratureSpec::new(2.0, 1024).unwrap()).unwrap();
        assert!((a - c(2.0 / 3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn compare_detects_mismatch() {
        let (_, f) = build_gln_density(&LeviSpec::torus(2)).unwrap();
        let good = crate::qfield::parse_ratfunc("2/(1+q)").unwrap();
        let bad = crate::qfield::parse_ratfunc("1/(1+q)").unwrap();
        assert!(compare(&good, &f, &[2.0, 3.0, 5.0], 1e-9, 1024).unwrap().pass);
        assert!(!compare(&bad, &f, &[2.0], 1e-9, 1024).unwrap().pass);
        let z = Integrand::zero(1);
        assert!(compare(&RatFunc::zero(), &z, &[2.0], 1e-12, 256).unwrap().pass);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(1.0, 256).is_err());
        assert!(QuadratureSpec::new(2.0, 100).is_err());
        assert!(QuadratureSpec::new(2.0, 32).is_err());
    }
}
