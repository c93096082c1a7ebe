//! Interval tridiagonal enclosure of `B^{-1/2} C B^{-1/2}` and Sturm counts.
//!
//! The dense matrix `P` is reduced by floating Householder reflections to
//! `T` with accumulated `X`. The residual `R = P X - X T` is bounded
//! rigorously, as is `f >= ||X^T X - I||`. Since `X^{-1} P X = T + X^{-1} R`
//! and `T` is symmetric, every eigenvalue of `P` lies within
//! `eta = ||R||_F / sqrt(1 - f)` of one of `T` (Bauer-Fike), and along the
//! path `T + t X^{-1} R` the number of eigenvalues in each connected
//! component of those disks is constant. Hence if the interval Sturm
//! sequence of `T + [-eta, eta] I` at `x` is sign-determinate, `x` lies in
//! no disk and the count of eigenvalues of `P` below `x` equals that of `T`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::DiscreteSystem;
use crate::linalg::dense::{householder_tridiagonalize, DenseMatrix};
use crate::linalg::sparse::CsrMatrix;
use crate::scalar::interval::{Interval, TriBool};
use crate::scalar::rational::{from_f64, serde_rational, to_f64, Rational};
use crate::scalar::round::{add_up, div_up, mul_up, sqrt_down, sqrt_up, sub_down, sub_up};

use super::{BackendOptions, Evidence, Outcome};

/// Unit roundoff.
const U: f64 = f64::EPSILON / 2.0;

/// `gamma_k = k u / (1 - k u)`, rounded up.
fn gamma(k: usize) -> f64 {
    let ku = mul_up(k as f64, U);
    div_up(ku, sub_down(1.0, ku))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagOptions {
    /// Largest acceptable enclosure radius, in matrix units.
    pub max_radius: f64,
}

impl Default for TridiagOptions {
    fn default() -> Self {
        TridiagOptions { max_radius: 1e-6 }
    }
}

/// Symmetric tridiagonal matrix with interval entries.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTridiagonal {
    pub diag: Vec<Interval>,
    pub off: Vec<Interval>,
    /// Radius `eta` already added to the diagonal.
    pub radius: f64,
    /// Bound on `||X^T X - I||_2`.
    pub orthogonality_defect: f64,
}

impl IntervalTridiagonal {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Gershgorin interval containing the spectrum of every member.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..n {
            let mut r = 0.0;
            if k > 0 {
                r = add_up(r, self.off[k - 1].mag());
            }
            if k + 1 < n {
                r = add_up(r, self.off[k].mag());
            }
            lo = lo.min(sub_down(self.diag[k].lo(), r));
            hi = hi.max(add_up(self.diag[k].hi(), r));
        }
        (lo, hi)
    }
}

/// `P = B^{-1/2} C B^{-1/2}` with interval entries.
pub fn symmetric_scaled_matrix(s: &DiscreteSystem) -> CsrMatrix<Interval> {
    let sqrt2 = Interval::point(2.0).checked_sqrt().expect("positive");
    let scale = |b: i64| match b {
        1 => Interval::ONE,
        2 => sqrt2,
        other => Interval::point(other as f64)
            .checked_sqrt()
            .expect("positive"),
    };
    let sc: Vec<Interval> = s.b.iter().map(|&b| scale(b)).collect();
    let trip: Vec<(usize, usize, Interval)> =
        s.c.triplets()
            .map(|(i, j, v)| {
                (
                    i,
                    j,
                    Interval::point(*v as f64)
                        .checked_div(sc[i] * sc[j])
                        .expect("nonzero"),
                )
            })
            .collect();
    CsrMatrix::from_triplets(s.n(), trip, |a, b| *a + *b)
}

pub fn tridiagonalize(s: &DiscreteSystem, opts: &TridiagOptions) -> Result<IntervalTridiagonal> {
    tridiagonalize_matrix(&symmetric_scaled_matrix(s), opts)
}

/// Encloses the spectrum of a symmetric interval matrix (every member) in an
/// interval tridiagonal family.
pub fn tridiagonalize_matrix(
    p: &CsrMatrix<Interval>,
    opts: &TridiagOptions,
) -> Result<IntervalTridiagonal> {
    let n = p.n();
    if n == 0 {
        return Ok(IntervalTridiagonal {
            diag: vec![],
            off: vec![],
            radius: 0.0,
            orthogonality_defect: 0.0,
        });
    }
    let mut a = DenseMatrix::zeros(n, n);
    for (i, j, v) in p.triplets() {
        a.set(i, j, v.mid());
    }
    let tri = householder_tridiagonalize(&mut a);
    drop(a);
    let x = tri.form_q();
    let r_norm = residual_frobenius(p, &x, &tri.diag, &tri.off);
    let f = orthogonality_defect(&x);
    if f >= 0.5 {
        return Err(Error::EnclosureBlowup(format!(
            "reflector product is far from orthogonal (defect {f:e})"
        )));
    }
    let eta = div_up(r_norm, sqrt_down(sub_down(1.0, f)));
    if !(eta <= opts.max_radius) {
        return Err(Error::EnclosureBlowup(format!(
            "tridiagonal enclosure radius {eta:e} exceeds the cap {:e}; use a smaller grid or the exact back-end",
            opts.max_radius
        )));
    }
    let diag = tri
        .diag
        .iter()
        .map(|&d| Interval::new(sub_down(d, eta), add_up(d, eta)).expect("ordered"))
        .collect();
    let off = tri.off.iter().map(|&e| Interval::point(e)).collect();
    Ok(IntervalTridiagonal {
        diag,
        off,
        radius: eta,
        orthogonality_defect: f,
    })
}

/// Upper bound on `||P X - X T||_F` over all members `P` of `p`.
fn residual_frobenius(p: &CsrMatrix<Interval>, x: &DenseMatrix, d: &[f64], e: &[f64]) -> f64 {
    let n = p.n();
    let mut acc = vec![0.0; n];
    let mut abs = vec![0.0; n];
    let mut rad = vec![0.0; n];
    let mut total = 0.0f64;
    for r in 0..n {
        acc.iter_mut().for_each(|v| *v = 0.0);
        abs.iter_mut().for_each(|v| *v = 0.0);
        rad.iter_mut().for_each(|v| *v = 0.0);
        let mut terms = 3;
        for (j, pij) in p.row(r) {
            terms += 1;
            let m = pij.mid();
            let pr = pij.rad();
            for (k, &xjk) in x.row(j).iter().enumerate() {
                let t = m * xjk;
                acc[k] += t;
                abs[k] += t.abs();
                rad[k] += pr * xjk.abs();
            }
        }
        let xr = x.row(r);
        for k in 0..n {
            let mut t = xr[k] * d[k];
            acc[k] -= t;
            abs[k] += t.abs();
            if k > 0 {
                t = xr[k - 1] * e[k - 1];
                acc[k] -= t;
                abs[k] += t.abs();
            }
            if k + 1 < n {
                t = xr[k + 1] * e[k];
                acc[k] -= t;
                abs[k] += t.abs();
            }
        }
        // |exact - acc| <= gamma_m sum|t| and the float sums of |t| and of
        // the radius terms are within a factor 1/(1 - gamma_m) of the truth.
        let g = gamma(terms);
        let inv = div_up(1.0, sub_down(1.0, g));
        for k in 0..n {
            let err = mul_up(add_up(mul_up(g, abs[k]), rad[k]), inv);
            let b = add_up(acc[k].abs(), err);
            total = add_up(total, mul_up(b, b));
        }
    }
    sqrt_up(total)
}

/// Upper bound on `||X^T X - I||_2` from a floating Gram matrix.
fn orthogonality_defect(x: &DenseMatrix) -> f64 {
    let n = x.rows;
    let g = x.gram();
    let mut fro = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let v = g.get(i, j);
            let dev = if i == j {
                sub_up(v, 1.0).max(sub_up(1.0, v))
            } else {
                v.abs()
            };
            fro = add_up(fro, mul_up(dev, dev));
        }
    }
    // |fl(X^T X) - X^T X| <= gamma_n |X|^T |X|, whose Frobenius norm is at
    // most gamma_n sum_i ||x_i||^2 = gamma_n ||X||_F^2.
    let mut xf = 0.0f64;
    for v in &x.data {
        xf = add_up(xf, mul_up(*v, *v));
    }
    let xf = mul_up(xf, div_up(1.0, sub_down(1.0, gamma(n * n))));
    add_up(sqrt_up(fro), mul_up(gamma(n), xf))
}

/// Number of eigenvalues below `x`, the same for every member of `t`, or
/// `None` if the interval Sturm sequence does not decide it.
pub fn sturm_count(t: &IntervalTridiagonal, x: &Rational) -> Option<usize> {
    sturm_count_at(t, Interval::from_rational(x))
}

fn sturm_count_at(t: &IntervalTridiagonal, x: Interval) -> Option<usize> {
    let n = t.n();
    let mut count = 0;
    let mut q = Interval::ZERO;
    for k in 0..n {
        let mut next = t.diag[k] - x;
        if k > 0 {
            next -= t.off[k - 1].square().checked_div(q).ok()?;
        }
        match next.sign() {
            TriBool::True => {}
            TriBool::False => count += 1,
            TriBool::Indeterminate => return None,
        }
        q = next;
    }
    Some(count)
}

/// Rational bracket `[lo, hi)` holding the `index`-th smallest eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigBracket {
    pub index: usize,
    #[serde(with = "serde_rational")]
    pub lo: Rational,
    #[serde(with = "serde_rational")]
    pub hi: Rational,
    /// Bisection stopped early because a Sturm count was indeterminate.
    pub flagged: bool,
}

impl EigBracket {
    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        let v = from_f64(v);
        self.lo <= v && v < self.hi
    }
}

/// Brackets for the `k` smallest eigenvalues, each of width at most `tol`
/// unless flagged.
pub fn bisect_brackets(
    t: &IntervalTridiagonal,
    k: usize,
    tol: &Rational,
) -> Result<Vec<EigBracket>> {
    if k == 0 || k > t.n() {
        return Err(Error::InvalidArgument(format!(
            "cannot bracket {k} eigenvalues of a {0}x{0} matrix",
            t.n()
        )));
    }
    let (glo, ghi) = t.gershgorin();
    let mut lo0 = glo - 1.0 - glo.abs() * 1e-3;
    let mut hi0 = ghi + 1.0 + ghi.abs() * 1e-3;
    let count = |x: f64| sturm_count_at(t, Interval::point(x));
    for _ in 0..64 {
        if count(lo0) == Some(0) {
            break;
        }
        lo0 -= (hi0 - lo0).max(1.0);
    }
    for _ in 0..64 {
        if count(hi0) == Some(t.n()) {
            break;
        }
        hi0 += (hi0 - lo0).max(1.0);
    }
    if count(lo0) != Some(0) || count(hi0) != Some(t.n()) {
        return Err(Error::EnclosureBlowup(
            "Sturm counts at the Gershgorin bounds are indeterminate".into(),
        ));
    }
    let mut out = Vec::with_capacity(k);
    let mut floor = lo0;
    for index in 1..=k {
        let (mut lo, mut hi) = (floor, hi0);
        let mut flagged = false;
        while from_f64(hi) - from_f64(lo) > *tol {
            let mid = 0.5 * lo + 0.5 * hi;
            if mid <= lo || mid >= hi {
                break;
            }
            let width = hi - lo;
            let probes = [
                mid,
                mid - width / 8.0,
                mid + width / 8.0,
                mid - width / 4.0,
                mid + width / 4.0,
            ];
            let mut decided = None;
            for &x in &probes {
                if let Some(c) = count(x) {
                    decided = Some((x, c));
                    break;
                }
            }
            match decided {
                Some((x, c)) if c >= index => hi = x,
                Some((x, _)) => lo = x,
                None => {
                    flagged = true;
                    break;
                }
            }
        }
        floor = lo;
        out.push(EigBracket {
            index,
            lo: from_f64(lo),
            hi: from_f64(hi),
            flagged,
        });
    }
    Ok(out)
}

/// Sturm back-end: the verdict is the sign-determinate count below `theta`.
pub fn certify_sturm(
    s: &DiscreteSystem,
    theta: &Rational,
    opts: &BackendOptions,
) -> Result<Outcome> {
    let t = tridiagonalize(s, &opts.tridiag)?;
    let count = sturm_count(&t, theta);
    let brackets = bisect_brackets(&t, opts.brackets.min(t.n()).max(1), &opts.bisection_tol)?;
    let (verdict, advice) = match count {
        Some(0) => (TriBool::True, None),
        Some(c) => (
            TriBool::False,
            Some(format!("{c} eigenvalue(s) lie below the threshold")),
        ),
        None => (
            TriBool::Indeterminate,
            Some("the threshold is within the enclosure radius of an eigenvalue".into()),
        ),
    };
    Ok(Outcome {
        verdict,
        advice,
        evidence: Evidence::SturmBisect {
            tolerance: opts.bisection_tol.clone(),
            radius: t.radius,
            orthogonality_defect: t.orthogonality_defect,
            count_below_theta: count,
            brackets,
        },
    })
}

/// Midpoint of a bracket as a float.
pub fn bracket_mid(b: &EigBracket) -> f64 {
    0.5 * (to_f64(&b.lo) + to_f64(&b.hi))
}
