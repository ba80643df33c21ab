//! Iterated-residue evaluation of `(2 pi i)^-k \oint f dz_1 ... dz_k` over the
//! unit torus, and enumeration of the residue choices (branches) it makes.
//!
//! The measure is plain `dz`: an integrand that should be integrated against
//! `dz/z` carries the `z^-1` in its prefactor.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrand::{Integrand, Monomial, PoleLocation};
use crate::qfield::RatFunc;

/// Which active variable to integrate next.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EliminationOrder {
    /// Always the lowest-indexed active variable.
    LowestIndex,
    /// After `z_i = c z_j`, continue with `z_j`; otherwise the lowest index.
    FollowTarget,
    /// First active variable in the given permutation.
    Custom(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub order: EliminationOrder,
    /// Skip homogeneous integrands whose degree is not `-k`.
    pub shortcut: bool,
    /// Prefer a variable without a pole at 0, falling back to the one with
    /// the mildest pole there.
    pub reorder: bool,
    /// Evaluate residues of the top recursion levels on the rayon pool.
    pub parallel: bool,
    /// Cache values of sub-integrands up to their scalar.
    pub memoize: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            order: EliminationOrder::LowestIndex,
            shortcut: true,
            reorder: false,
            parallel: true,
            memoize: true,
        }
    }
}

/// One residue decision.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PoleChoice {
    pub var: usize,
    pub location: PoleLocation,
    pub order: i64,
}

/// A root-to-leaf path of residue decisions together with the total value
/// it contributes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Branch {
    pub choices: Vec<PoleChoice>,
    pub value: RatFunc,
    /// Maximal chains `i_0 -> i_1 -> ... -> i_t` (`t >= 1`) of substitutions
    /// `z_{i_k} = c z_{i_{k+1}}` closed by `z_{i_t} = 0`.
    pub clumps: Vec<Vec<usize>>,
}

/// Residue engine with its options and a value cache.
pub struct Engine {
    opts: EngineOptions,
    cache: Mutex<HashMap<Integrand, RatFunc>>,
}

const PARALLEL_DEPTH: usize = 2;

impl Engine {
    pub fn new(opts: EngineOptions) -> Self {
        Engine {
            opts,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn options(&self) -> &EngineOptions {
        &self.opts
    }

    /// Exact value of the torus integral of `f` against plain `dz`.
    pub fn integrate(&self, f: &Integrand) -> Result<RatFunc> {
        self.eval(f, None, 0)
    }

    fn choose_var(&self, f: &Integrand, follow: Option<usize>) -> usize {
        let active = f.active_vars();
        if self.opts.reorder {
            if let Some(&x) = active.iter().find(|&&i| f.prefactor().get(i) >= 0) {
                return x;
            }
            return *active
                .iter()
                .max_by_key(|&&i| (f.prefactor().get(i), std::cmp::Reverse(i)))
                .unwrap();
        }
        match &self.opts.order {
            EliminationOrder::LowestIndex => active[0],
            EliminationOrder::FollowTarget => match follow {
                Some(j) if f.is_active(j) => j,
                _ => active[0],
            },
            EliminationOrder::Custom(perm) => *perm
                .iter()
                .find(|&&i| i < f.nvars() && f.is_active(i))
                .unwrap_or(&active[0]),
        }
    }

    /// Value that is known without taking residues, if any.
    fn trivial_value(&self, f: &Integrand) -> Result<Option<RatFunc>> {
        if f.is_zero() {
            return Ok(Some(RatFunc::zero()));
        }
        let k = f.num_active();
        if k == 0 {
            if !f.prefactor().is_unit() || f.num_factors() > 0 {
                return Err(Error::InvariantViolation(format!(
                    "integrand `{}` depends on eliminated variables",
                    f
                )));
            }
            return Ok(Some(f.scalar().clone()));
        }
        if self.opts.shortcut {
            if let Some(d) = f.homogeneous_degree() {
                if d != -(k as i64) {
                    return Ok(Some(RatFunc::zero()));
                }
            }
        }
        if f.active_vars().iter().any(|&i| !f.involves(i)) {
            return Ok(Some(RatFunc::zero()));
        }
        Ok(None)
    }

    fn eval(&self, f: &Integrand, follow: Option<usize>, depth: usize) -> Result<RatFunc> {
        if let Some(v) = self.trivial_value(f)? {
            return Ok(v);
        }
        let key = if self.opts.memoize && matches!(self.opts.order, EliminationOrder::LowestIndex | EliminationOrder::Custom(_)) {
            let k = f.map_scalar(RatFunc::one());
            if let Some(v) = self.cache.lock().unwrap().get(&k) {
                return Ok(f.scalar() * v);
            }
            Some(k)
        } else {
            None
        };
        let x = self.choose_var(f, follow);
        let g = f.split_for(x)?;
        let poles = g.classify_poles(x)?;
        let mut jobs: Vec<(Integrand, Option<usize>)> = Vec::new();
        for p in &poles {
            let next = follow_of(&p.location);
            for t in g.residue(x, &p.location)? {
                jobs.push((t, next));
            }
        }
        let values: Vec<Result<RatFunc>> = if self.opts.parallel && depth < PARALLEL_DEPTH {
            jobs.par_iter()
                .map(|(t, n)| self.eval(t, *n, depth + 1))
                .collect()
        } else {
            jobs.iter().map(|(t, n)| self.eval(t, *n, depth + 1)).collect()
        };
        let mut total = RatFunc::zero();
        for v in values {
            total = &total + &v?;
        }
        if let Some(k) = key {
            let unit = total.checked_div(f.scalar())?;
            self.cache.lock().unwrap().insert(k, unit);
        }
        Ok(total)
    }

    /// All residue paths with nonzero contribution, in a deterministic order.
    pub fn enumerate(&self, f: &Integrand) -> Result<Vec<Branch>> {
        let mut leaves: Vec<(Vec<PoleChoice>, RatFunc)> = Vec::new();
        self.walk(f, None, &mut Vec::new(), &mut leaves)?;
        let mut merged: BTreeMap<String, (Vec<PoleChoice>, RatFunc)> = BTreeMap::new();
        let mut order: Vec<String> = Vec::new();
        for (path, v) in leaves {
            let key = serde_json::to_string(&path).expect("serializable");
            match merged.get_mut(&key) {
                Some(e) => e.1 = &e.1 + &v,
                None => {
                    order.push(key.clone());
                    merged.insert(key, (path, v));
                }
            }
        }
        Ok(order
            .into_iter()
            .filter_map(|k| merged.remove(&k))
            .filter(|(_, v)| !v.is_zero())
            .map(|(choices, value)| {
                let clumps = clumps_of(&choices);
                Branch {
                    choices,
                    value,
                    clumps,
                }
            })
            .collect())
    }

    fn walk(
        &self,
        f: &Integrand,
        follow: Option<usize>,
        path: &mut Vec<PoleChoice>,
        out: &mut Vec<(Vec<PoleChoice>, RatFunc)>,
    ) -> Result<()> {
        if f.is_zero() {
            return Ok(());
        }
        if f.num_active() == 0 {
            if let Some(v) = self.trivial_value(f)? {
                out.push((path.clone(), v));
            }
            return Ok(());
        }
        if let Some(v) = self.trivial_value(f)? {
            if v.is_zero() {
                return Ok(());
            }
        }
        let x = self.choose_var(f, follow);
        let g = f.split_for(x)?;
        for p in g.classify_poles(x)? {
            let next = follow_of(&p.location);
            for t in g.residue(x, &p.location)? {
                path.push(PoleChoice {
                    var: x,
                    location: p.location.clone(),
                    order: p.order,
                });
                self.walk(&t, next, path, out)?;
                path.pop();
            }
        }
        Ok(())
    }
}

/// The single variable a substitution points to, if there is one.
fn follow_of(loc: &PoleLocation) -> Option<usize> {
    match loc {
        PoleLocation::Zero => None,
        PoleLocation::Linear { target, .. } => single_var(target),
    }
}

fn single_var(m: &Monomial) -> Option<usize> {
    let nz: Vec<usize> = (0..m.len()).filter(|&i| m.get(i) != 0).collect();
    (nz.len() == 1 && m.get(nz[0]) == 1).then(|| nz[0])
}

/// Clumps of a branch: chains of substitutions, each followed by a choice
/// in its target variable, ending in a `z = 0` decoration.
pub fn clumps_of(choices: &[PoleChoice]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    for (i, c) in choices.iter().enumerate() {
        cur.push(c.var);
        let continues = match &c.location {
            PoleLocation::Zero => false,
            PoleLocation::Linear { target, .. } => {
                let t = single_var(target);
                t.is_some() && choices.get(i + 1).map(|n| n.var) == t
            }
        };
        if !continues {
            if cur.len() >= 2 {
                out.push(std::mem::take(&mut cur));
            } else {
                cur.clear();
            }
        }
    }
    out
}

/// Torus integral with default options.
pub fn integrate_torus(f: &Integrand) -> Result<RatFunc> {
    Engine::new(EngineOptions::default()).integrate(f)
}

/// `integrate_torus(f * z^e)`. For homogeneous `f` of degree `-k` the result
/// vanishes unless `sum(e) = 0`; that test runs before any residue.
pub fn integrate_monomial_family(f: &Integrand, e: &[i64], shortcut: bool) -> Result<RatFunc> {
    if e.len() != f.nvars() {
        return Err(Error::ContractViolation(format!(
            "exponent tuple of length {} for {} variables",
            e.len(),
            f.nvars()
        )));
    }
    let g = f.with_monomial(&Monomial::from_exps(e.to_vec()))?;
    let opts = EngineOptions {
        shortcut,
        ..EngineOptions::default()
    };
    Engine::new(opts).integrate(&g)
}

/// Branches of the bookkeeping tree, eliminating variables in follow-target
/// order and without the homogeneity shortcut.
pub fn enumerate_tree(f: &Integrand) -> Result<Vec<Branch>> {
    let opts = EngineOptions {
        order: EliminationOrder::FollowTarget,
        shortcut: false,
        reorder: false,
        parallel: false,
        memoize: false,
    };
    Engine::new(opts).enumerate(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfield::parse_ratfunc;

    fn rf(s: &str) -> RatFunc {
        parse_ratfunc(s).unwrap()
    }

    fn gamma_product(n: usize, b: &str) -> Integrand {
        let b = rf(b);
        let mut f = Integrand::unit(n)
            .with_monomial(&Monomial::from_exps(vec![-1; n]))
            .unwrap();
        for i in 0..n {
            for j in i + 1..n {
                let zi = Monomial::var(n, i);
                let zj = Monomial::var(n, j);
                f = f
                    .with_factor(zi.clone(), RatFunc::one(), zj.clone(), 2)
                    .unwrap()
                    .with_factor(zi.clone(), b.clone(), zj.clone(), -1)
                    .unwrap()
                    .with_factor(zi, b.inv().unwrap(), zj, -1)
                    .unwrap();
            }
        }
        f
    }

    #[test]
    fn gl2_value() {
        assert_eq!(integrate_torus(&gamma_product(2, "q")).unwrap(), rf("2/(1+q)"));
        assert_eq!(integrate_torus(&gamma_product(2, "q^2")).unwrap(), rf("2/(1+q^2)"));
    }

    #[test]
    fn gl3_value() {
        assert_eq!(
            integrate_torus(&gamma_product(3, "q")).unwrap(),
            rf("6/((1+q)*(1+q+q^2))")
        );
    }

    #[test]
    fn monomial_family() {
        let f = gamma_product(2, "q");
        assert!(integrate_monomial_family(&f, &[0, -1], true).unwrap().is_zero());
        assert!(integrate_monomial_family(&f, &[0, -1], false).unwrap().is_zero());
        assert_eq!(
            integrate_monomial_family(&f, &[0, 0], true).unwrap(),
            rf("2/(1+q)")
        );
        assert_eq!(
            integrate_monomial_family(&f, &[1, -1], true).unwrap(),
            integrate_monomial_family(&f, &[1, -1], false).unwrap()
        );
    }

    #[test]
    fn gl2_tree() {
        let br = enumerate_tree(&gamma_product(2, "q")).unwrap();
        assert_eq!(br.len(), 2);
        assert_eq!(br[0].choices[0].location, PoleLocation::Zero);
        assert!(matches!(br[1].choices[0].location, PoleLocation::Linear { .. }));
        assert_eq!(br[1].clumps, vec![vec![0, 1]]);
        let total: RatFunc = br.iter().map(|b| b.value.clone()).sum();
        assert_eq!(total, rf("2/(1+q)"));
    }

    #[test]
    fn single_variable_tree() {
        let f = Integrand::unit(1)
            .with_monomial(&Monomial::from_exps(vec![-1]))
            .unwrap();
        let br = enumerate_tree(&f).unwrap();
        assert_eq!(br.len(), 1);
        assert_eq!(br[0].choices[0].location, PoleLocation::Zero);
        assert!(br[0].value.is_one());
    }

    #[test]
    fn orders_agree() {
        let f = gamma_product(3, "q");
        let base = integrate_torus(&f).unwrap();
        for perm in [vec![2, 1, 0], vec![1, 2, 0], vec![0, 2, 1]] {
            let e = Engine::new(EngineOptions {
                order: EliminationOrder::Custom(perm),
                ..EngineOptions::default()
            });
            assert_eq!(e.integrate(&f).unwrap(), base);
        }
        let e = Engine::new(EngineOptions {
            reorder: true,
            ..EngineOptions::default()
        });
        assert_eq!(e.integrate(&f).unwrap(), base);
    }
}
