//! Eigenpair enclosure by a contraction test on the bordered Newton system,
//! followed by an inertia count that identifies the enclosed eigenvalue as
//! the smallest one.
//!
//! With `A = C - l B`, `g = -B x` and one component `s` of `x` held fixed,
//! the Newton matrix `G` is `A` with column `s` replaced by `g`. For an
//! approximate inverse `R` the map `y -> y - R f(x + y', l + y_s)` satisfies,
//! on the max-norm ball of radius `rho`,
//! `|T(y)| <= a + b rho + |R| |B| rho^2` with `a = |R r|`, `b = |I - R G|`,
//! and its Lipschitz constant is at most `b + 2 |R| |B| rho`.

use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::DiscreteSystem;
use crate::linalg::ldlt::{factor, LdlScalar, PermutedLdl, Symbolic};
use crate::linalg::ordering::minimum_degree;
use crate::linalg::sparse::CsrMatrix;
use crate::scalar::interval::{Interval, TriBool};
use crate::scalar::rational::{from_f64, Rational};
use crate::scalar::round::{add_up, mul_up};

use super::lanczos::{lanczos_estimate, EigenEstimate};
use super::{shifted_interval_matrix, BackendOptions, Evidence, Outcome};

/// Enclosure of a true eigenpair near an approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifiedPair {
    pub eigenvalue: Interval,
    /// Max-norm radius of the eigenvector enclosure around `vector`.
    pub vector_radius: f64,
    pub vector: Vec<f64>,
    /// Lipschitz bound of the fixed-point map on the final ball.
    pub contraction: f64,
}

struct Bordered {
    a_int: CsrMatrix<Interval>,
    g: Vec<Interval>,
    s: usize,
    /// Index map from full to reduced DOFs (`usize::MAX` at `s`).
    reduced: Vec<usize>,
    ldl: PermutedLdl,
    h: Vec<f64>,
    kk: Vec<f64>,
    schur: f64,
}

fn float_shifted(c: &CsrMatrix<i64>, b: &[i64], lambda: f64) -> CsrMatrix<f64> {
    let trip = c.triplets().map(|(i, j, v)| {
        let x = *v as f64;
        (i, j, if i == j { x - lambda * b[i] as f64 } else { x })
    });
    CsrMatrix::from_triplets(c.n(), trip, |x, y| x + y)
}

impl Bordered {
    fn new(sys: &DiscreteSystem, lambda: f64, x: &[f64]) -> Result<Self> {
        let n = sys.n();
        let s = (0..n)
            .max_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs()))
            .expect("nonempty");
        let lam = Interval::point(lambda);
        let a_int = {
            let trip = sys.c.triplets().map(|(i, j, v)| {
                let mut e = Interval::point(*v as f64);
                if i == j {
                    e -= lam * Interval::point(sys.b[i] as f64);
                }
                (i, j, e)
            });
            CsrMatrix::from_triplets(n, trip, |p, q| *p + *q)
        };
        let g: Vec<Interval> = (0..n)
            .map(|i| -(Interval::point(sys.b[i] as f64) * Interval::point(x[i])))
            .collect();
        let a = float_shifted(&sys.c, &sys.b, lambda);
        let keep: Vec<usize> = (0..n).filter(|&i| i != s).collect();
        let mut reduced = vec![usize::MAX; n];
        for (k, &i) in keep.iter().enumerate() {
            reduced[i] = k;
        }
        let a2 = a.principal_submatrix(&keep);
        let perm = minimum_degree(&a2.adjacency());
        let ldl = PermutedLdl::new(&a2, perm).map_err(|e| {
            Error::NoConvergence(format!("bordered factorization broke down: {e:?}"))
        })?;
        let a_col: Vec<f64> = keep
            .iter()
            .map(|&i| a.get(i, s).copied().unwrap_or(0.0))
            .collect();
        let g_red: Vec<f64> = keep.iter().map(|&i| g[i].mid()).collect();
        let h = ldl.solve(&a_col);
        let kk = ldl.solve(&g_red);
        let schur = g[s].mid() - g_red.iter().zip(&h).map(|(p, q)| p * q).sum::<f64>();
        if schur == 0.0 || !schur.is_finite() {
            return Err(Error::NoConvergence("singular bordered matrix".into()));
        }
        Ok(Bordered {
            a_int,
            g,
            s,
            reduced,
            ldl,
            h,
            kk,
            schur,
        })
    }

    /// Row `i` of the approximate inverse of `G`, i.e. `z` with `G^T z ~ e_i`.
    fn inverse_row(&self, i: usize) -> Vec<f64> {
        let n = self.reduced.len();
        let (zs, u) = if i == self.s {
            (1.0 / self.schur, None)
        } else {
            let r = self.reduced[i];
            let mut e = vec![0.0; n - 1];
            e[r] = 1.0;
            (-self.kk[r] / self.schur, Some(self.ldl.solve(&e)))
        };
        let mut z = vec![0.0; n];
        for j in 0..n {
            let r = self.reduced[j];
            if r == usize::MAX {
                z[j] = zs;
            } else {
                let uj = u.as_ref().map_or(0.0, |u| u[r]);
                z[j] = uj - self.h[r] * zs;
            }
        }
        z
    }

    /// `G^T z` enclosed.
    fn gt_times(&self, z: &[f64]) -> Vec<Interval> {
        let n = z.len();
        let mut w = vec![Interval::ZERO; n];
        for (k, wk) in w.iter_mut().enumerate() {
            if k == self.s {
                let mut acc = Interval::ZERO;
                for (gj, zj) in self.g.iter().zip(z) {
                    if *zj != 0.0 {
                        acc += *gj * Interval::point(*zj);
                    }
                }
                *wk = acc;
            } else {
                let mut acc = Interval::ZERO;
                for (j, v) in self.a_int.row(k) {
                    acc += *v * Interval::point(z[j]);
                }
                *wk = acc;
            }
        }
        w
    }

    /// A Newton correction `(dx, dl)` with `dx_s = 0` for the residual `r`.
    fn newton_step(&self, r: &[f64]) -> (Vec<f64>, f64) {
        let n = r.len();
        let r_red: Vec<f64> = (0..n).filter(|&i| i != self.s).map(|i| r[i]).collect();
        let w = self.ldl.solve(&r_red);
        // Solve A'' y' + g' dl = -r', a'^T y' + g_s dl = -r_s.
        let a_dot_w: f64 = self.h.iter().zip(&r_red).map(|(p, q)| p * q).sum();
        let dl = (-r[self.s] + a_dot_w) / self.schur;
        let mut dx = vec![0.0; n];
        for j in 0..n {
            let k = self.reduced[j];
            if k != usize::MAX {
                dx[j] = -w[k] - self.kk[k] * dl;
            }
        }
        (dx, dl)
    }
}

fn float_residual(sys: &DiscreteSystem, lambda: f64, x: &[f64]) -> Vec<f64> {
    let n = sys.n();
    let mut r = vec![0.0; n];
    for (i, ri) in r.iter_mut().enumerate() {
        let mut acc = -lambda * sys.b[i] as f64 * x[i];
        for (j, v) in sys.c.row(i) {
            acc += *v as f64 * x[j];
        }
        *ri = acc;
    }
    r
}

fn interval_residual(sys: &DiscreteSystem, lambda: f64, x: &[f64]) -> Vec<Interval> {
    let lam = Interval::point(lambda);
    (0..sys.n())
        .map(|i| {
            let mut acc = -(lam * Interval::point(sys.b[i] as f64) * Interval::point(x[i]));
            for (j, v) in sys.c.row(i) {
                acc += Interval::point(*v as f64) * Interval::point(x[j]);
            }
            acc
        })
        .collect()
}

/// Encloses a true eigenpair of `(C, B)` near `approx`. Fails when the
/// contraction test does not close.
pub fn verify_eigenpair(sys: &DiscreteSystem, approx: &EigenEstimate) -> Result<VerifiedPair> {
    let n = sys.n();
    if approx.vector.len() != n {
        return Err(Error::InvalidArgument(
            "vector length does not match the system".into(),
        ));
    }
    let mut lambda = approx.value;
    let mut x = approx.vector.clone();
    let mut bordered = Bordered::new(sys, lambda, &x)?;
    // Two Newton steps with the frozen matrix sharpen the approximation.
    for _ in 0..2 {
        let r = float_residual(sys, lambda, &x);
        let (dx, dl) = bordered.newton_step(&r);
        x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
        lambda += dl;
    }
    bordered = Bordered::new(sys, lambda, &x)?;
    let r = interval_residual(sys, lambda, &x);
    let r_mag: Vec<f64> = r.iter().map(Interval::mag).collect();

    // Per row of R: (sum |z| |r|, sum |I - RG|, sum |z|), all rounded up.
    let rows: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let z = bordered.inverse_row(i);
            let w = bordered.gt_times(&z);
            let mut a = 0.0;
            let mut c = 0.0;
            for (zk, rk) in z.iter().zip(&r_mag) {
                a = add_up(a, mul_up(zk.abs(), *rk));
                c = add_up(c, zk.abs());
            }
            let mut b = 0.0;
            for (k, wk) in w.iter().enumerate() {
                let e = if k == i { Interval::ONE - *wk } else { -*wk };
                b = add_up(b, e.mag());
            }
            (a, b, c)
        })
        .collect();
    let fold = |f: fn(&(f64, f64, f64)) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let a = fold(|t| t.0);
    let b = fold(|t| t.1);
    let c1 = fold(|t| t.2);
    let bmax = sys.b.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as f64;
    let c = mul_up(c1, bmax);
    if !(b < 1.0) {
        return Err(Error::NoConvergence(format!(
            "|I - RG| = {b:e} is not below one"
        )));
    }
    let one_minus_b = crate::scalar::round::sub_down(1.0, b);
    let mut rho = crate::scalar::round::div_up(mul_up(2.0, a), one_minus_b);
    if rho == 0.0 {
        rho = f64::MIN_POSITIVE;
    }
    let image = add_up(add_up(a, mul_up(b, rho)), mul_up(mul_up(c, rho), rho));
    let q = add_up(b, mul_up(mul_up(2.0, c), rho));
    if !(image <= rho && q < 1.0) {
        return Err(Error::NoConvergence(format!(
            "contraction test failed: image {image:e}, rho {rho:e}, q {q:e}"
        )));
    }
    let eigenvalue = Interval::point(lambda) + Interval::new(-rho, rho).expect("ordered");
    Ok(VerifiedPair {
        eigenvalue,
        vector_radius: rho,
        vector: x,
        contraction: q,
    })
}

/// Interval inertia of `C - shift B`: the number of negative eigenvalues,
/// or `None` when some pivot sign is undecided.
pub fn negative_eigenvalues_below(sys: &DiscreteSystem, shift: &Rational) -> Option<usize> {
    let a = shifted_interval_matrix(sys, shift);
    let perm = minimum_degree(&a.adjacency());
    let pa = a.permute_symmetric(&perm);
    let sym = Symbolic::analyze(&pa);
    let f = factor(&pa, &sym, false).ok()?;
    let mut neg = 0;
    for d in &f.d {
        match d.positive() {
            Some(true) => {}
            Some(false) if d.hi() < 0.0 => neg += 1,
            _ => return None,
        }
    }
    Some(neg)
}

/// Verified-eigenpair back-end: enclose the lowest Lanczos pair, confirm by
/// an inertia count that nothing else lies below the enclosure, and compare
/// with `theta`.
pub fn certify_verified(
    sys: &DiscreteSystem,
    theta: &Rational,
    opts: &BackendOptions,
) -> Result<Outcome> {
    let k = 2.min(sys.n());
    let pairs = lanczos_estimate(sys, k, opts.seed)?;
    let evidence = |eigenvalue: Interval,
                    radius: f64,
                    contraction: f64,
                    shift: Rational,
                    neg: Option<usize>| {
        Evidence::VerifiedEigenpair {
            seed: opts.seed,
            eigenvalue,
            radius,
            contraction,
            inertia_shift: shift,
            negative_pivots: neg,
        }
    };
    let pair = match verify_eigenpair(sys, &pairs[0]) {
        Ok(p) => p,
        Err(e) => {
            return Ok(Outcome {
                verdict: TriBool::Indeterminate,
                evidence: evidence(
                    Interval::point(pairs[0].value),
                    f64::INFINITY,
                    f64::INFINITY,
                    <Rational as Zero>::zero(),
                    None,
                ),
                advice: Some(format!("{e}; fall back to sturm-bisect")),
            })
        }
    };
    let upper = pair.eigenvalue.hi();
    let shift_f = if pairs.len() > 1 {
        0.5 * (upper + pairs[1].value)
    } else {
        upper + 1.0
    };
    if !shift_f.is_finite() {
        return Err(Error::NoConvergence("non-finite inertia shift".into()));
    }
    let shift = from_f64(shift_f);
    let neg = if shift_f > upper {
        negative_eigenvalues_below(sys, &shift)
    } else {
        None
    };
    let th = Interval::from_rational(theta);
    let verdict = if neg != Some(1) {
        TriBool::Indeterminate
    } else if pair.eigenvalue.lo() > th.hi() {
        TriBool::True
    } else if pair.eigenvalue.hi() <= th.lo() {
        TriBool::False
    } else {
        TriBool::Indeterminate
    };
    let advice = match (verdict, neg) {
        (TriBool::True, _) => None,
        (_, Some(1)) => {
            Some("the enclosure does not separate the eigenvalue from the threshold".into())
        }
        _ => Some(
            "inertia count does not isolate the enclosed eigenvalue; fall back to sturm-bisect"
                .into(),
        ),
    };
    Ok(Outcome {
        verdict,
        advice,
        evidence: evidence(
            pair.eigenvalue,
            pair.vector_radius,
            pair.contraction,
            shift,
            neg,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational::{int, rat};

    fn system(c: Vec<(usize, usize, i64)>, b: Vec<i64>) -> DiscreteSystem {
        DiscreteSystem {
            n_grid: 1,
            c: CsrMatrix::from_triplets(b.len(), c, |x, y| x + y),
            b,
            sigma: int(1),
            mesh_hash: String::new(),
            dof_edges: Vec::new(),
        }
    }

    #[test]
    fn identity_pencil_encloses_one() {
        let s = system(vec![(0, 0, 3)], vec![3]);
        let v = vec![1.0 / 3f64.sqrt()];
        let p = verify_eigenpair(
            &s,
            &EigenEstimate {
                value: 1.0,
                vector: v,
            },
        )
        .unwrap();
        assert!(p.eigenvalue.contains(1.0));
        assert!(p.vector_radius < 1e-15);
    }

    #[test]
    fn repeated_eigenvalue_is_not_verified() {
        let n = 4;
        let s = system((0..n).map(|i| (i, i, 3)).collect(), vec![3; n]);
        let mut v = vec![0.0; n];
        v[2] = 1.0 / 3f64.sqrt();
        assert!(verify_eigenpair(
            &s,
            &EigenEstimate {
                value: 1.0,
                vector: v
            }
        )
        .is_err());
    }

    #[test]
    fn path_graph_lowest_pair() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2));
            if i + 1 < n {
                t.push((i, i + 1, -1));
                t.push((i + 1, i, -1));
            }
        }
        let s = system(t, vec![1; n]);
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        let out = certify_verified(&s, &rat(1, 1000).unwrap(), &BackendOptions::default()).unwrap();
        assert_eq!(out.verdict, TriBool::True);
        match out.evidence {
            Evidence::VerifiedEigenpair {
                eigenvalue,
                radius,
                negative_pivots,
                ..
            } => {
                assert!(eigenvalue.contains(exact));
                assert!(radius < 1e-12);
                assert_eq!(negative_pivots, Some(1));
            }
            _ => unreachable!(),
        }
        let above = certify_verified(&s, &rat(1, 50).unwrap(), &BackendOptions::default()).unwrap();
        assert_eq!(above.verdict, TriBool::False);
    }

    #[test]
    fn inertia_counts() {
        let s = system(vec![(0, 0, 1), (1, 1, 2), (2, 2, 3)], vec![1, 1, 1]);
        assert_eq!(negative_eigenvalues_below(&s, &rat(5, 2).unwrap()), Some(2));
        assert_eq!(negative_eigenvalues_below(&s, &int(2)), None);
        assert_eq!(negative_eigenvalues_below(&s, &rat(1, 2).unwrap()), Some(0));
    }
}
