//! Up-looking sparse `L D L^T` without pivoting, generic over the scalar.
//!
//! The symbolic phase computes the elimination tree and column counts; the
//! numeric phase computes row `k` of `L` by a sparse triangular solve over the
//! row subtree. Entries are only added, subtracted, multiplied and divided by
//! pivots, so the same code runs on floats, intervals and exact rationals.

use num_traits::{Signed, Zero};

use crate::scalar::interval::Interval;
use crate::scalar::rational::Rational;

use super::sparse::CsrMatrix;

pub trait LdlScalar: Clone {
    fn zero() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    /// `None` when `d` may be zero.
    fn div(&self, d: &Self) -> Option<Self>;
    /// Certified sign: `Some(true)` positive, `Some(false)` non-positive,
    /// `None` undecided.
    fn positive(&self) -> Option<bool>;
}

impl LdlScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, d: &Self) -> Option<Self> {
        (*d != 0.0).then(|| self / d)
    }
    fn positive(&self) -> Option<bool> {
        Some(*self > 0.0)
    }
}

impl LdlScalar for Interval {
    fn zero() -> Self {
        Interval::ZERO
    }
    fn add(&self, o: &Self) -> Self {
        *self + *o
    }
    fn sub(&self, o: &Self) -> Self {
        *self - *o
    }
    fn mul(&self, o: &Self) -> Self {
        *self * *o
    }
    fn div(&self, d: &Self) -> Option<Self> {
        self.checked_div(*d).ok()
    }
    fn positive(&self) -> Option<bool> {
        if self.lo() > 0.0 {
            Some(true)
        } else if self.hi() <= 0.0 {
            Some(false)
        } else {
            None
        }
    }
}

impl LdlScalar for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, d: &Self) -> Option<Self> {
        (!d.is_zero()).then(|| self / d)
    }
    fn positive(&self) -> Option<bool> {
        Some(self.is_positive())
    }
}

/// Elimination tree and the nonzero count of every column of `L`.
#[derive(Debug, Clone)]
pub struct Symbolic {
    pub n: usize,
    pub parent: Vec<Option<usize>>,
    pub col_ptr: Vec<usize>,
}

impl Symbolic {
    pub fn analyze<T: Clone>(a: &CsrMatrix<T>) -> Self {
        let n = a.n();
        let mut parent = vec![None; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for (j, _) in a.row(k) {
                if j >= k {
                    continue;
                }
                let mut i = j;
                while flag[i] != k {
                    if parent[i].is_none() {
                        parent[i] = Some(k);
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i].expect("set above");
                }
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + lnz[k];
        }
        Symbolic { n, parent, col_ptr }
    }

    pub fn nnz_l(&self) -> usize {
        self.col_ptr[self.n]
    }
}

/// Factor `L D L^T` stored by columns (strictly lower part).
#[derive(Debug, Clone)]
pub struct LdlFactor<T> {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub l: Vec<T>,
    pub d: Vec<T>,
}

/// Why a factorization stopped early.
#[derive(Debug, Clone, PartialEq)]
pub enum LdlStop {
    /// Pivot `k` is zero or not certifiably nonzero.
    Breakdown { index: usize },
    /// Pivot `k` is certifiably not positive (only with `require_positive`).
    NonPositive { index: usize },
    /// Pivot `k` could not be certified positive (only with `require_positive`).
    Undecided { index: usize },
}

/// Numeric factorization of a symmetric matrix given with both triangles.
/// With `require_positive`, stops at the first pivot that is not certified
/// positive.
pub fn factor<T: LdlScalar>(
    a: &CsrMatrix<T>,
    sym: &Symbolic,
    require_positive: bool,
) -> Result<LdlFactor<T>, (LdlStop, Vec<T>)> {
    let n = a.n();
    let nnz = sym.nnz_l();
    let mut row_idx = vec![0usize; nnz];
    let mut l: Vec<T> = vec![T::zero(); nnz];
    let mut d: Vec<T> = Vec::with_capacity(n);
    let mut y: Vec<T> = vec![T::zero(); n];
    let mut flag = vec![usize::MAX; n];
    let mut pattern = vec![0usize; n];
    let mut lnz = vec![0usize; n];
    for k in 0..n {
        let mut top = n;
        flag[k] = k;
        let mut diag = T::zero();
        for (i0, v) in a.row(k) {
            if i0 > k {
                continue;
            }
            if i0 == k {
                diag = diag.add(v);
                continue;
            }
            y[i0] = y[i0].add(v);
            let mut len = 0;
            let mut i = i0;
            while flag[i] != k {
                pattern[len] = i;
                len += 1;
                flag[i] = k;
                i = sym.parent[i].expect("row subtree reaches k");
            }
            while len > 0 {
                top -= 1;
                len -= 1;
                pattern[top] = pattern[len];
            }
        }
        let mut dk = diag;
        for &i in &pattern[top..n] {
            let yi = std::mem::replace(&mut y[i], T::zero());
            let p0 = sym.col_ptr[i];
            for p in p0..p0 + lnz[i] {
                let r = row_idx[p];
                y[r] = y[r].sub(&l[p].mul(&yi));
            }
            let Some(lki) = yi.div(&d[i]) else {
                return Err((LdlStop::Breakdown { index: i }, d));
            };
            dk = dk.sub(&lki.mul(&yi));
            let p = p0 + lnz[i];
            row_idx[p] = k;
            l[p] = lki;
            lnz[i] += 1;
        }
        if require_positive {
            match dk.positive() {
                Some(true) => {}
                Some(false) => {
                    d.push(dk);
                    return Err((LdlStop::NonPositive { index: k }, d));
                }
                None => {
                    d.push(dk);
                    return Err((LdlStop::Undecided { index: k }, d));
                }
            }
        }
        d.push(dk);
    }
    Ok(LdlFactor {
        n,
        col_ptr: sym.col_ptr.clone(),
        row_idx,
        l,
        d,
    })
}

impl LdlFactor<f64> {
    /// Solves `L D L^T x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        for j in 0..self.n {
            let xj = x[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                x[self.row_idx[p]] -= self.l[p] * xj;
            }
        }
        for j in 0..self.n {
            x[j] /= self.d[j];
        }
        for j in (0..self.n).rev() {
            let mut s = x[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                s -= self.l[p] * x[self.row_idx[p]];
            }
            x[j] = s;
        }
    }

    /// Number of negative pivots, which equals the number of negative
    /// eigenvalues when the factorization is exact.
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|v| **v < 0.0).count()
    }
}

/// A float factorization with its fill-reducing permutation.
#[derive(Debug, Clone)]
pub struct PermutedLdl {
    pub perm: Vec<usize>,
    pub factor: LdlFactor<f64>,
}

impl PermutedLdl {
    pub fn new(a: &CsrMatrix<f64>, perm: Vec<usize>) -> Result<Self, LdlStop> {
        let pa = a.permute_symmetric(&perm);
        let sym = Symbolic::analyze(&pa);
        let factor = factor(&pa, &sym, false).map_err(|(e, _)| e)?;
        Ok(PermutedLdl { perm, factor })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        self.factor.solve_in_place(&mut x);
        let mut out = vec![0.0; b.len()];
        for (k, &i) in self.perm.iter().enumerate() {
            out[i] = x[k];
        }
        out
    }
}
