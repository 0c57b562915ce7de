use dioph_core::hamiltonian::{hp_diagonal, SymmetryBreak};
use dioph_core::oracle::{search_box, DEFAULT_BUDGET};
use dioph_core::{FockSpace, Polynomial, ProblemInstance};
use num_bigint::BigInt;
use proptest::prelude::*;

const VARS: [&str; 3] = ["x", "y", "z"];

fn vars() -> Vec<String> {
    VARS.iter().map(|v| v.to_string()).collect()
}

fn terms() -> impl Strategy<Value = Vec<(i64, Vec<u32>)>> {
    prop::collection::vec((-20i64..=20, prop::collection::vec(0u32..=4, 3)), 1..6)
}

fn build(terms: &[(i64, Vec<u32>)]) -> Polynomial {
    Polynomial::new(vars(), terms.iter().map(|(c, e)| (BigInt::from(*c), e.clone()))).unwrap()
}

/// Term-by-term evaluation with repeated multiplication.
fn naive(terms: &[(i64, Vec<u32>)], point: &[u64]) -> i128 {
    let mut total = 0i128;
    for (c, e) in terms {
        let mut t = *c as i128;
        for (x, k) in point.iter().zip(e) {
            for _ in 0..*k {
                t *= *x as i128;
            }
        }
        total += t;
    }
    total
}

fn point() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..=12, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn evaluate_matches_naive(t in terms(), x in point()) {
        prop_assert_eq!(build(&t).evaluate(&x).unwrap(), BigInt::from(naive(&t, &x)));
    }
}

proptest! {
    #[test]
    fn render_then_parse_preserves_values(t in terms(), x in point()) {
        let p = build(&t);
        let q = Polynomial::parse(&p.to_string()).unwrap();
        // the parser orders variables by first appearance
        let mapped: Vec<u64> = q
            .variables()
            .iter()
            .map(|v| x[VARS.iter().position(|w| w == v).unwrap()])
            .collect();
        prop_assert_eq!(q.evaluate(&mapped).unwrap(), p.evaluate(&x).unwrap());
        if q.variables() == p.variables() {
            prop_assert_eq!(&q, &p);
        }
        let again = Polynomial::parse(&q.to_string()).unwrap();
        prop_assert_eq!(again, q);
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(a in terms(), b in terms(), x in point()) {
        let (p, q) = (build(&a), build(&b));
        let (vp, vq) = (p.evaluate(&x).unwrap(), q.evaluate(&x).unwrap());
        prop_assert_eq!((&p + &q).evaluate(&x).unwrap(), &vp + &vq);
        prop_assert_eq!((&p - &q).evaluate(&x).unwrap(), &vp - &vq);
        prop_assert_eq!((&p * &q).evaluate(&x).unwrap(), &vp * &vq);
        prop_assert_eq!((-&p).evaluate(&x).unwrap(), -vp);
    }

    #[test]
    fn canonical_form_ignores_term_order(mut t in terms()) {
        let p = build(&t);
        t.reverse();
        let q = build(&t);
        prop_assert_eq!(&p, &q);
        let r1 = search_box(&p, &[3, 3, 3], DEFAULT_BUDGET).unwrap();
        let r2 = search_box(&q, &[3, 3, 3], DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(r1, r2);
    }
}

fn small_terms() -> impl Strategy<Value = Vec<(i64, Vec<u32>)>> {
    prop::collection::vec((-6i64..=6, prop::collection::vec(0u32..=2, 2)), 1..5)
}

fn build2(terms: &[(i64, Vec<u32>)]) -> Polynomial {
    let v = vec!["x".to_string(), "y".to_string()];
    Polynomial::new(v, terms.iter().map(|(c, e)| (BigInt::from(*c), e.clone()))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hp_diagonal_is_squared_value(t in small_terms(), n in prop::collection::vec(0usize..6, 2)) {
        let p = build2(&t);
        let space = FockSpace::uniform(2, 6).unwrap();
        let inst = ProblemInstance::new(p, space.clone()).unwrap();
        let diag = hp_diagonal(&inst).unwrap();
        let d = naive(&t, &[n[0] as u64, n[1] as u64]);
        prop_assert_eq!(diag[space.index(&n).unwrap()], (d * d) as f64);
    }

    #[test]
    fn symmetry_breaking_selects_one_oracle_minimizer(t in small_terms()) {
        let p = build2(&t);
        let space = FockSpace::uniform(2, 6).unwrap();
        let inst = ProblemInstance::new(p.clone(), space.clone()).unwrap().with_default_symmetry_break().unwrap();
        let diag = hp_diagonal(&inst).unwrap();
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let argmin: Vec<usize> = (0..diag.len()).filter(|&i| diag[i] == min).collect();
        prop_assert_eq!(argmin.len(), 1);
        let oracle = search_box(&p, &[5, 5], DEFAULT_BUDGET).unwrap();
        let tuple: Vec<u64> = space.occupations(argmin[0]).into_iter().map(|n| n as u64).collect();
        prop_assert!(oracle.minimizers.contains(&tuple));
    }
}

#[test]
fn zero_epsilon_keeps_degeneracy() {
    let p = Polynomial::parse("(x - 2)*(x - 4)").unwrap();
    let space = FockSpace::uniform(1, 8).unwrap();
    let inst = ProblemInstance::new(p, space).unwrap().with_symmetry_break(SymmetryBreak::none(1)).unwrap();
    let diag = hp_diagonal(&inst).unwrap();
    assert_eq!(diag[2], 0.0);
    assert_eq!(diag[4], 0.0);
}
