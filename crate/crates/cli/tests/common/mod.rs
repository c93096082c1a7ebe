#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use pentanodal::fem::DiscreteSystem;
use pentanodal::geometry::{build_domain, DomainKind, GridPoint, SubdomainSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Eigenvalues of `C u = mu B u` by a dense symmetric solver, ascending.
pub fn dense_eigenvalues(s: &DiscreteSystem) -> Vec<f64> {
    let n = s.b.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, j, &v) in s.c.triplets() {
        a[(i, j)] = v as f64 / ((s.b[i] * s.b[j]) as f64).sqrt();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Matrix eigenvalue to the units of the scaled triangle with legs 1 and 93/128.
pub fn outer_units(s: &DiscreteSystem, mu: f64) -> f64 {
    mu * 16384.0 / pentanodal::scalar::rational::to_f64(&s.sigma)
}

fn random_point(rng: &mut ChaCha8Rng, n: i64) -> GridPoint {
    let i = rng.gen_range(0..=n);
    let j = rng.gen_range(0..=n - i);
    GridPoint::new(i, j)
}

/// Connected, nonempty random subdomains of the `n x n` grid.
pub fn random_domains(n: u32, count: usize, seed: u64) -> Vec<SubdomainSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let kind = if rng.gen_bool(0.5) {
            DomainKind::Upper
        } else {
            DomainKind::Lower
        };
        let k = rng.gen_range(0..3);
        let hist: Vec<GridPoint> = (0..k).map(|_| random_point(&mut rng, n as i64)).collect();
        let p = random_point(&mut rng, n as i64);
        if let Ok(d) = build_domain(kind, &hist, p, n) {
            out.push(d);
        }
    }
    out
}
