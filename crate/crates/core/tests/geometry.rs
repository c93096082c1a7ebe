use pentanodal::embedded::{chain, lower_domain, upper_domain};
use pentanodal::geometry::*;
use proptest::prelude::*;

fn pts(v: &[(i64, i64)]) -> Vec<GridPoint> {
    v.iter().map(|&p| GridPoint::from(p)).collect()
}

const UPPER_CORNERS: [&[(i64, i64)]; 10] = [
    &[(0, 0), (25, 24)],
    &[(0, 0), (20, 17), (28, 21)],
    &[(0, 0), (28, 30)],
    &[(0, 0), (18, 13), (24, 14), (28, 21), (31, 27)],
    &[(0, 0), (22, 18), (28, 23), (31, 27)],
    &[(0, 0), (24, 14), (26, 19), (28, 28)],
    &[(0, 0), (21, 9), (24, 14), (26, 19), (28, 23), (29, 29)],
    &[(0, 0), (19, 12), (24, 14), (26, 19), (28, 23), (30, 27)],
    &[(0, 0), (21, 9), (23, 15), (26, 19), (27, 25), (30, 27)],
    &[
        (0, 0),
        (21, 9),
        (23, 15),
        (25, 20),
        (28, 23),
        (30, 27),
        (31, 30),
    ],
];

const LOWER_CORNERS: [&[(i64, i64)]; 10] = [
    &[(28, 21)],
    &[(20, 17), (25, 24), (31, 27)],
    &[(24, 14), (25, 24), (28, 30)],
    &[(18, 13), (20, 17), (28, 23)],
    &[(18, 13), (20, 17), (22, 18), (26, 19), (28, 30)],
    &[(21, 9), (22, 18), (25, 24), (28, 28)],
    &[(18, 13), (20, 17), (22, 18), (25, 24), (30, 27)],
    &[(19, 12), (23, 15), (25, 24), (28, 28), (29, 29)],
    &[
        (19, 12),
        (20, 17),
        (22, 18),
        (25, 24),
        (27, 25),
        (28, 28),
        (29, 29),
        (31, 30),
    ],
    &[
        (19, 12),
        (20, 17),
        (22, 18),
        (25, 20),
        (27, 25),
        (28, 28),
        (29, 29),
    ],
];

#[test]
fn chain_reproduces_listed_corners() {
    for k in 0..10 {
        let u = upper_domain(k, 64).unwrap();
        assert_eq!(u.listed_corners(), pts(UPPER_CORNERS[k]), "upper {k}");
        let l = lower_domain(k, 64).unwrap();
        assert_eq!(l.listed_corners(), pts(LOWER_CORNERS[k]), "lower {k}");
    }
}

#[test]
fn staircase_alternates_with_every_other_vertex() {
    // Between two listed corners the full polygon has exactly one elided vertex.
    for d in chain(64).unwrap() {
        let poly = d.domain.polygon_grid_units();
        let listed = d.domain.listed_corners();
        let positions: Vec<usize> = listed
            .iter()
            .filter(|p| **p != GridPoint::ORIGIN)
            .map(|p| {
                poly.iter()
                    .position(|q| q == p)
                    .expect("listed corner on polygon")
            })
            .collect();
        for w in positions.windows(2) {
            let gap = (w[1] + poly.len() - w[0]) % poly.len();
            let back = (w[0] + poly.len() - w[1]) % poly.len();
            assert!(gap == 2 || back == 2, "{}: {:?}", d.name, poly);
        }
    }
}

#[test]
fn last_lower_domain_is_complement_of_upper_union() {
    let d = lower_domain(9, 64).unwrap();
    let u = exclusion_union(DomainKind::Lower, &pentanodal::embedded::P_UPPER, 64).unwrap();
    assert_eq!(d.cells, u.complement());
}

#[test]
fn third_upper_domain_full_outline() {
    let d = upper_domain(3, 64).unwrap();
    let poly = d.polygon_grid_units();
    assert_eq!(poly.first(), Some(&GridPoint::ORIGIN));
    assert_eq!(poly.last(), Some(&GridPoint::new(0, 64)));
}

fn arb_point(n: i64) -> impl Strategy<Value = GridPoint> {
    (0..=n)
        .prop_flat_map(move |i| (Just(i), 0..=(n - i)))
        .prop_map(|(i, j)| GridPoint::new(i, j))
}

fn every_boundary_edge_labeled_once(d: &SubdomainSpec) -> bool {
    let cells = &d.cells;
    let n = d.n as i64;
    let mut count = 0;
    for (i, j) in cells.iter() {
        let half = i + j == n - 1;
        let nbs: Vec<Option<(i64, i64)>> = if half {
            vec![
                (j > 0).then(|| (i, j - 1)),
                (i > 0).then(|| (i - 1, j)),
                None,
            ]
        } else {
            vec![
                (j > 0).then(|| (i, j - 1)),
                (i > 0).then(|| (i - 1, j)),
                Some((i, j + 1)),
                Some((i + 1, j)),
            ]
        };
        count += nbs
            .iter()
            .filter(|nb| !nb.map(|(a, b)| cells.contains(a, b)).unwrap_or(false))
            .count();
    }
    count == d.edge_labels.len()
}

proptest! {
    #[test]
    fn exclusion_growth_is_monotone(h in proptest::collection::vec(arb_point(16), 0..4), q in arb_point(16), p in arb_point(16)) {
        for kind in [DomainKind::Upper, DomainKind::Lower] {
            let a = build_domain(kind, &h, p, 16);
            let mut h2 = h.clone();
            h2.push(q);
            let b = build_domain(kind, &h2, p, 16);
            if let (Ok(a), Ok(b)) = (a, b) {
                prop_assert!(b.cells.is_subset(&a.cells));
                prop_assert!(every_boundary_edge_labeled_once(&b));
            }
        }
    }

    #[test]
    fn regions_overlap_only_on_shared_corner_cells(p in arb_point(16)) {
        let l = region_lower(p, 16).unwrap();
        let u = region_upper(p, 16).unwrap();
        // Closed-cell convention: a cell cannot have min-x >= x_p and max-x <= x_p.
        prop_assert!(l.intersection(&u).is_empty());
    }

    #[test]
    fn dominance_matches_region_membership(p in arb_point(16), q in arb_point(16)) {
        let r = region_upper(p, 16).unwrap();
        let r2 = region_upper(q, 16).unwrap();
        if monotone_dominates(DomainKind::Upper, p, q) {
            prop_assert!(r2.is_subset(&r));
        }
        let r = region_lower(p, 16).unwrap();
        let r2 = region_lower(q, 16).unwrap();
        if monotone_dominates(DomainKind::Lower, p, q) {
            prop_assert!(r2.is_subset(&r));
        }
    }
}
