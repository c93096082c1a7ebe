mod common;

use common::{dense_eigenvalues, random_domains};
use pentanodal::certify::posdef::interval_pivots;
use pentanodal::certify::sturm::tridiagonalize_matrix;
use pentanodal::certify::{
    bisect_brackets, certify_domain, certify_domain_with, certify_system, cg_gate, cg_lower_bound,
    default_lambda, default_v, discrete_threshold_for, kappa_squared, lanczos_estimate,
    posdef_interval_ldlt, posdef_rational_lu, recheck, sturm_count, tridiagonalize, BackendOptions,
    Evidence, Method, TridiagOptions,
};
use pentanodal::embedded::upper_domain;
use pentanodal::fem::{discretize, DiscreteSystem};
use pentanodal::geometry::{build_domain, full_domain, DomainKind, GridPoint};
use pentanodal::linalg::ordering::OrderingKind;
use pentanodal::linalg::sparse::CsrMatrix;
use pentanodal::scalar::rational::{from_f64, to_f64};
use pentanodal::scalar::{int, rat, Interval, Rational, TriBool};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy(c: Vec<(usize, usize, i64)>, b: Vec<i64>) -> DiscreteSystem {
    let n = b.len();
    DiscreteSystem {
        n_grid: 1,
        c: CsrMatrix::from_triplets(n, c, |x, y| x + y),
        b,
        sigma: int(1),
        mesh_hash: String::new(),
        dof_edges: Vec::new(),
    }
}

fn pair() -> DiscreteSystem {
    toy(
        vec![(0, 0, 2), (0, 1, -1), (1, 0, -1), (1, 1, 2)],
        vec![1, 1],
    )
}

fn lu(s: &DiscreteSystem, theta: &Rational) -> TriBool {
    posdef_rational_lu(s, theta, OrderingKind::MinimumDegree, None)
        .unwrap()
        .verdict
}

fn ldlt(s: &DiscreteSystem, theta: &Rational) -> TriBool {
    posdef_interval_ldlt(s, theta, OrderingKind::MinimumDegree, None).verdict
}

#[test]
fn small_posdef_examples() {
    let one = toy(vec![(0, 0, 2)], vec![1]);
    assert_eq!(lu(&one, &int(3)), TriBool::False);
    assert_eq!(lu(&one, &int(1)), TriBool::True);
    assert_eq!(lu(&pair(), &int(1)), TriBool::False);
    assert_eq!(lu(&pair(), &rat(99, 100).unwrap()), TriBool::True);
    assert_eq!(ldlt(&pair(), &rat(99, 100).unwrap()), TriBool::True);
}

#[test]
fn straddling_pivot_is_indeterminate() {
    let eps = Interval::new(-1e-12, 1e-12).unwrap();
    let a = CsrMatrix::from_triplets(1, vec![(0, 0, eps)], |x, y| *x + *y);
    assert_eq!(interval_pivots(&a).0, TriBool::Indeterminate);
}

#[test]
fn interval_and_exact_verdicts_never_contradict() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut compared = 0;
    for d in random_domains(6, 100, 5) {
        let s = discretize(&d).unwrap();
        let ev = dense_eigenvalues(&s);
        // Thresholds near the lowest eigenvalue, on both sides.
        let theta = rat(
            (ev[0] * rng.gen_range(0.9..1.1) * 1024.0).round() as i64,
            1024,
        )
        .unwrap();
        let exact = lu(&s, &theta);
        let float = ldlt(&s, &theta);
        assert!(
            float == TriBool::Indeterminate || float == exact,
            "{} {exact} {float}",
            d.id()
        );
        compared += 1;
    }
    assert_eq!(compared, 100);
}

#[test]
fn upper_domain_zero_is_positive_definite_by_interval_ldlt() {
    let s = discretize(&upper_domain(0, 64).unwrap()).unwrap();
    let theta = pentanodal::certify::matrix_threshold_for(&default_lambda(), &s.sigma)
        .unwrap()
        .theta;
    assert_eq!(ldlt(&s, &theta), TriBool::True);
}

#[test]
fn tridiagonal_examples() {
    let p = CsrMatrix::from_triplets(
        2,
        vec![(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)],
        |x, y| x + y,
    )
    .map(|&v| Interval::point(v));
    let t = tridiagonalize_matrix(&p, &TridiagOptions::default()).unwrap();
    assert!(t.diag.iter().all(|d| d.contains(2.0)));
    assert!(t.off[0].contains(-1.0) || t.off[0].contains(1.0));

    let three = vec![
        (0, 0, 4.0),
        (0, 1, 1.0),
        (1, 0, 1.0),
        (1, 1, 3.0),
        (1, 2, -2.0),
        (2, 1, -2.0),
        (2, 2, 5.0),
    ];
    let p = CsrMatrix::from_triplets(3, three, |x, y| x + y).map(|&v| Interval::point(v));
    let t = tridiagonalize_matrix(&p, &TridiagOptions::default()).unwrap();
    for (d, want) in t.diag.iter().zip([4.0, 3.0, 5.0]) {
        assert!(d.contains(want), "{d}");
    }
    for (o, want) in t.off.iter().zip([1.0f64, 2.0]) {
        assert!(o.contains(want) || o.contains(-want), "{o}");
    }
}

#[test]
fn sturm_examples() {
    let t = tridiagonalize(&pair(), &TridiagOptions::default()).unwrap();
    assert_eq!(sturm_count(&t, &rat(5, 2).unwrap()), Some(1));
    assert_eq!(sturm_count(&t, &int(0)), Some(0));
    let (lo, _) = t.gershgorin();
    assert_eq!(sturm_count(&t, &from_f64(lo - 1.0)), Some(0));
    let b = bisect_brackets(&t, 2, &rat(1, 1024).unwrap()).unwrap();
    assert!(b[0].contains(1.0) && b[1].contains(3.0));
    assert!(b.iter().all(|x| x.width() <= rat(1, 1024).unwrap()));
}

#[test]
fn brackets_contain_dense_eigenvalues() {
    for d in random_domains(8, 50, 21) {
        let s = discretize(&d).unwrap();
        let t = tridiagonalize(&s, &TridiagOptions::default()).unwrap();
        let br = bisect_brackets(&t, s.b.len(), &rat(1, 1 << 20).unwrap()).unwrap();
        for (b, ev) in br.iter().zip(dense_eigenvalues(&s)) {
            let tol = 1e-8 * ev.abs().max(1.0);
            assert!(
                to_f64(&b.lo) - tol <= ev && ev <= to_f64(&b.hi) + tol,
                "{}: {ev} not in bracket {}",
                d.id(),
                b.index
            );
        }
    }
}

#[test]
fn random_system_of_fifty_dofs() {
    let d = random_domains(8, 200, 77)
        .into_iter()
        .find(|d| (45..=60).contains(&discretize(d).unwrap().b.len()))
        .unwrap();
    let s = discretize(&d).unwrap();
    let t = tridiagonalize(&s, &TridiagOptions::default()).unwrap();
    let br = bisect_brackets(&t, s.b.len(), &rat(1, 1 << 20).unwrap()).unwrap();
    for ev in dense_eigenvalues(&s) {
        assert!(
            br.iter()
                .any(|b| to_f64(&b.lo) - 1e-9 <= ev && ev <= to_f64(&b.hi) + 1e-9),
            "{ev}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sturm_counts_are_monotone(seed in 0u64..1000, x in -1000i64..200_000, step in 1i64..50_000) {
        let d = random_domains(5, 1, seed).pop().unwrap();
        let s = discretize(&d).unwrap();
        let t = tridiagonalize(&s, &TridiagOptions::default()).unwrap();
        let a = sturm_count(&t, &int(x));
        let b = sturm_count(&t, &int(x + step));
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn discrete_threshold_is_the_smallest_passing_step(p in 1i64..4000, n in prop::sample::select(vec![16u32, 32, 64, 128])) {
        let v = rat(p, 256).unwrap();
        if let Ok(lambda) = discrete_threshold_for(&v, n) {
            prop_assert!(cg_gate(&v, &lambda, n).unwrap());
            let below = &lambda - rat(1, 256).unwrap();
            prop_assert!(!cg_gate(&v, &below, n).unwrap());
        }
    }

    #[test]
    fn cg_bound_increases_with_lambda(p in 1i64..100_000, dp in 1i64..10_000) {
        let h2 = rat(25033, 67_108_864).unwrap();
        let lo = cg_lower_bound(&rat(p, 256).unwrap(), &kappa_squared(), &h2).unwrap();
        let hi = cg_lower_bound(&rat(p + dp, 256).unwrap(), &kappa_squared(), &h2).unwrap();
        prop_assert!(hi > lo);
    }
}

#[test]
fn discrete_threshold_examples() {
    assert_eq!(
        discrete_threshold_for(&default_v(), 64).unwrap(),
        default_lambda()
    );
    assert!(!cg_gate(&default_v(), &rat(3138, 256).unwrap(), 64).unwrap());
    assert!(discrete_threshold_for(&int(1000), 16).is_err());
    assert!(discrete_threshold_for(&int(0), 64).is_err());
}

#[test]
fn cg_examples() {
    let b = cg_lower_bound(
        &default_lambda(),
        &kappa_squared(),
        &rat(25033, 67_108_864).unwrap(),
    )
    .unwrap();
    assert!(b > default_v());
    assert_eq!(
        cg_lower_bound(&default_lambda(), &int(0), &int(3)).unwrap(),
        default_lambda()
    );
}

#[test]
fn lanczos_examples() {
    let est = lanczos_estimate(&pair(), 2, 1).unwrap();
    assert!((est[0].value - 1.0).abs() < 1e-13);
    assert!((est[1].value - 3.0).abs() < 1e-13);
    assert!(lanczos_estimate(&pair(), 3, 1).is_err());
    let d = random_domains(8, 1, 9).pop().unwrap();
    let s = discretize(&d).unwrap();
    let est = lanczos_estimate(&s, 1, 1).unwrap();
    let ev = dense_eigenvalues(&s);
    assert!((est[0].value - ev[0]).abs() < 1e-9 * ev[0].abs().max(1.0));
}

#[test]
fn neumann_triangle_fails_for_positive_threshold() {
    let s = discretize(&full_domain(8)).unwrap();
    for method in [
        Method::RationalLu,
        Method::IntervalLdlt,
        Method::SturmBisect,
    ] {
        let out = certify_system(
            &s,
            &rat(1, 100).unwrap(),
            method,
            &BackendOptions::default(),
        )
        .unwrap();
        assert_eq!(out.verdict, TriBool::False, "{}", method.as_str());
    }
    let c = certify_domain(
        &full_domain(64),
        &default_v(),
        &default_lambda(),
        Method::IntervalLdlt,
    )
    .unwrap();
    assert_eq!(c.verdict, TriBool::False);
}

fn first_bracket_lo(s: &DiscreteSystem) -> Rational {
    let out = certify_system(s, &int(0), Method::SturmBisect, &BackendOptions::default()).unwrap();
    match out.evidence {
        Evidence::SturmBisect { brackets, .. } => brackets[0].lo.clone(),
        _ => unreachable!(),
    }
}

#[test]
fn more_exclusion_never_lowers_the_bound() {
    let hist = [
        GridPoint::new(5, 2),
        GridPoint::new(6, 1),
        GridPoint::new(3, 1),
    ];
    let p = GridPoint::new(2, 5);
    let mut prev: Option<Rational> = None;
    for k in 0..=hist.len() {
        let d = build_domain(DomainKind::Upper, &hist[..k], p, 8).unwrap();
        let lo = first_bracket_lo(&discretize(&d).unwrap());
        if let Some(prev) = &prev {
            // A smaller domain with more Dirichlet boundary; allow bisection slack.
            assert!(&lo + rat(1, 1 << 19).unwrap() >= *prev, "k={k}");
        }
        prev = Some(lo);
    }
}

#[test]
fn sturm_and_exact_verdicts_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for d in random_domains(8, 15, 13) {
        let s = discretize(&d).unwrap();
        let ev = dense_eigenvalues(&s)[0];
        let theta = rat(
            (ev * if rng.gen_bool(0.5) { 0.97 } else { 1.03 } * 1024.0).round() as i64,
            1024,
        )
        .unwrap();
        let lo = first_bracket_lo(&s);
        assert_eq!(lo > theta, lu(&s, &theta) == TriBool::True, "{}", d.id());
    }
}

#[test]
fn certificates_recheck() {
    let v = rat(11, 1).unwrap();
    for d in random_domains(8, 3, 4) {
        for method in Method::ALL {
            let opts = BackendOptions::default();
            let Ok(c) = certify_domain_with(&d, &v, &default_lambda(), method, &opts) else {
                continue;
            };
            assert!(
                recheck(&c).unwrap().is_empty(),
                "{} {}",
                d.id(),
                method.as_str()
            );
        }
    }
    let c = certify_domain(
        &upper_domain(0, 64).unwrap(),
        &default_v(),
        &default_lambda(),
        Method::IntervalLdlt,
    )
    .unwrap();
    assert_eq!(c.verdict, TriBool::True);
    assert!(recheck(&c).unwrap().is_empty());
    let mut bad = c.clone();
    if let Evidence::IntervalLdlt { pivot_signs, .. } = &mut bad.evidence {
        let flipped: String = pivot_signs
            .chars()
            .enumerate()
            .map(|(i, ch)| if i == 3 { '-' } else { ch })
            .collect();
        *pivot_signs = flipped;
    }
    assert!(!recheck(&bad).unwrap().is_empty());
}
