use plancherel_core::engine::{enumerate_tree, Engine, EngineOptions};
use plancherel_core::gln::{
    build_gln_density, closed_form_value, closed_form_with, engine_value, fd1, gamma_factor,
    numerator_degree_bound, numerator_q_degree, partitions, poincare_sn, ClumpForm, LeviSpec,
};
use plancherel_core::integrand::{Integrand, Monomial};
use plancherel_core::oracle::compare;
use plancherel_core::qfield::parse_ratfunc;
use plancherel_core::RatFunc;

fn levi(b: &[u32]) -> LeviSpec {
    LeviSpec::new(b.to_vec()).unwrap()
}

fn rf(s: &str) -> RatFunc {
    parse_ratfunc(s).unwrap()
}

fn all_permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn small_torus_values() {
    assert_eq!(engine_value(&LeviSpec::torus(2), EngineOptions::default()).unwrap(), rf("2/(1+q)"));
    assert_eq!(
        engine_value(&LeviSpec::torus(3), EngineOptions::default()).unwrap(),
        rf("6/((1+q)*(1+q+q^2))")
    );
    assert_eq!(engine_value(&levi(&[2, 2]), EngineOptions::default()).unwrap(), rf("2/(1+q^2)"));
}

#[test]
fn lowest_cell_is_inverse_poincare() {
    for n in 1..=5 {
        let want = RatFunc::from_poly(poincare_sn(n)).inv().unwrap();
        assert_eq!(fd1(&LeviSpec::torus(n), 1).unwrap(), want, "n = {}", n);
    }
}

#[test]
fn engine_matches_closed_form_up_to_five() {
    for n in 1..=5 {
        for p in partitions(n) {
            let e = engine_value(&p, EngineOptions::default()).unwrap();
            assert_eq!(e, closed_form_value(&p), "partition {}", p.label());
            assert!(e.is_q_rational(), "partition {}", p.label());
        }
    }
}

#[test]
fn clump_forms_agree_for_four() {
    for p in partitions(4) {
        assert_eq!(
            closed_form_with(&p, ClumpForm::PreCancellation),
            closed_form_with(&p, ClumpForm::PostCancellation),
            "partition {}",
            p.label()
        );
    }
}

#[test]
fn density_is_invariant_under_equal_block_permutations() {
    for b in [vec![1, 1, 1], vec![1, 1, 2], vec![2, 2, 1], vec![1, 1, 1, 1]] {
        let l = levi(&b);
        let k = l.len();
        let (_, base) = build_gln_density(&l).unwrap();
        let base_value = Engine::new(EngineOptions::default()).integrate(&base).unwrap();
        for perm in all_permutations(k) {
            if (0..k).any(|i| l.blocks()[perm[i]] != l.blocks()[i]) {
                continue;
            }
            let mut f = Integrand::unit(k).with_monomial(&Monomial::from_exps(vec![-1; k])).unwrap();
            for i in 0..k {
                for j in i + 1..k {
                    f = f.mul(&gamma_factor(&l, i, j, perm[i], perm[j], k).unwrap()).unwrap();
                }
            }
            let v = Engine::new(EngineOptions::default()).integrate(&f).unwrap();
            assert_eq!(v, base_value, "{:?} under {:?}", b, perm);
        }
    }
}

#[test]
fn numerator_degree_is_uniformly_bounded() {
    for n in 1..=6 {
        let worst = partitions(n)
            .iter()
            .map(|p| numerator_q_degree(&fd1(p, 1).unwrap()))
            .max()
            .unwrap();
        let n = n as i64;
        assert_eq!(worst, (n - 1) * (n + 2) / 2, "n = {}", n);
        assert!(worst <= numerator_degree_bound(n as u32));
    }
}

#[test]
fn gl2_tree_has_two_branches() {
    let (_, f) = build_gln_density(&LeviSpec::torus(2)).unwrap();
    let branches = enumerate_tree(&f).unwrap();
    assert_eq!(branches.len(), 2);
    let total = branches.iter().fold(RatFunc::zero(), |acc, b| &acc + &b.value);
    assert_eq!(total, rf("2/(1+q)"));
}

#[test]
fn four_block_tree_clumps_and_branch_sum() {
    let l = LeviSpec::torus(4);
    let (_, f) = build_gln_density(&l).unwrap();
    let branches = enumerate_tree(&f).unwrap();
    let total = branches.iter().fold(RatFunc::zero(), |acc, b| &acc + &b.value);
    assert_eq!(total, engine_value(&l, EngineOptions::default()).unwrap());
    let seen: Vec<Vec<usize>> = branches.iter().flat_map(|b| b.clumps.iter().cloned()).collect();
    for want in [vec![2, 3], vec![1, 2, 3], vec![1, 2], vec![1, 3], vec![1, 3, 2]] {
        assert!(seen.contains(&want), "missing clump {:?}", want);
    }
}

#[test]
fn shortcut_does_not_change_values() {
    for n in 1..=4 {
        for p in partitions(n) {
            let with = engine_value(&p, EngineOptions::default()).unwrap();
            let without = engine_value(
                &p,
                EngineOptions {
                    shortcut: false,
                    memoize: false,
                    ..EngineOptions::default()
                },
            )
            .unwrap();
            assert_eq!(with, without, "partition {}", p.label());
        }
    }
}

#[test]
fn oracle_agrees_up_to_three() {
    for n in 1..=3 {
        for p in partitions(n) {
            let (_, f) = build_gln_density(&p).unwrap();
            let exact = engine_value(&p, EngineOptions::default()).unwrap();
            let rep = compare(&exact, &f, &[2.0, 3.0, 5.0], 1e-9, 4096).unwrap();
            assert!(rep.pass, "partition {}: {}", p.label(), rep.max_rel_err);
        }
    }
}
