//! Dense row-major matrices, blocked Householder tridiagonalization and a
//! cyclic Jacobi eigensolver for small symmetric matrices.

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        DenseMatrix {
            rows: r,
            cols: c,
            data,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self^T * self` through the blocked kernel.
    pub fn gram(&self) -> DenseMatrix {
        let (m, n) = (self.rows, self.cols);
        let mut out = Self::zeros(n, n);
        // SAFETY: the strides describe `self.data` (m x n row-major) read as
        // its transpose and `out.data` (n x n row-major); all buffers are
        // large enough and `out` does not alias the inputs.
        unsafe {
            matrixmultiply::dgemm(
                n,
                m,
                n,
                1.0,
                self.data.as_ptr(),
                1,
                n as isize,
                self.data.as_ptr(),
                n as isize,
                1,
                0.0,
                out.data.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        out
    }
}

/// `c[m x n] = beta c + alpha a[m x k] b[k x n]` on raw strided storage.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    (ars, acs): (usize, usize),
    b: &[f64],
    (brs, bcs): (usize, usize),
    beta: f64,
    c: &mut [f64],
    crs: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k > 0 {
        assert!(a.len() > (m - 1) * ars + (k - 1) * acs);
        assert!(b.len() > (k - 1) * brs + (n - 1) * bcs);
    }
    assert!(c.len() > (m - 1) * crs + (n - 1));
    // SAFETY: bounds were asserted above; `c` is a distinct mutable slice.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            ars as isize,
            acs as isize,
            b.as_ptr(),
            brs as isize,
            bcs as isize,
            beta,
            c.as_mut_ptr(),
            crs as isize,
            1,
        );
    }
}

/// One elementary reflector `I - tau v v^T` acting on indices
/// `start..start + v.len()`, with `v[0] = 1`.
#[derive(Debug, Clone)]
pub struct Reflector {
    pub start: usize,
    pub v: Vec<f64>,
    pub tau: f64,
}

/// `Q^T A Q = T` with `Q = H_0 H_1 ... H_{n-2}`.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub reflectors: Vec<Reflector>,
    pub block: usize,
}

const BLOCK: usize = 32;

/// Blocked Householder reduction of a full symmetric matrix (both triangles
/// stored). `a` is overwritten.
pub fn householder_tridiagonalize(a: &mut DenseMatrix) -> Tridiagonal {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut reflectors: Vec<Reflector> = Vec::with_capacity(n.saturating_sub(1));
    if n == 0 {
        return Tridiagonal {
            diag,
            off,
            reflectors,
            block: BLOCK,
        };
    }
    let last = n - 1;
    let mut p = 0;
    while p < last {
        let nb = BLOCK.min(last - p);
        let mut ws: Vec<Vec<f64>> = Vec::with_capacity(nb);
        for t in 0..nb {
            let i = p + t;
            // Column i of the current matrix from rows i..n.
            let mut col: Vec<f64> = a.row(i)[i..].to_vec();
            for (tp, w) in ws.iter().enumerate() {
                let r = &reflectors[p + tp];
                let vi = r.v[i - r.start];
                let wi = w[i - r.start];
                let off0 = i - r.start;
                for (c, (vv, ww)) in col.iter_mut().zip(r.v[off0..].iter().zip(&w[off0..])) {
                    *c -= vv * wi + ww * vi;
                }
            }
            diag[i] = col[0];
            let x = &col[1..];
            let (beta, tau, v) = make_reflector(x);
            off[i] = beta;
            let m = n - i - 1;
            // w = tau (A_cur v) - (tau^2/2)(v^T A_cur v) v with A_cur the
            // block at panel start minus the pending rank-2 corrections.
            let mut w = vec![0.0; m];
            if tau != 0.0 {
                sym_block_matvec(a, i + 1, &v, &mut w);
                for (tp, wp) in ws.iter().enumerate() {
                    let r = &reflectors[p + tp];
                    let o = i + 1 - r.start;
                    let vp = &r.v[o..];
                    let wq = &wp[o..];
                    let c1: f64 = wq.iter().zip(&v).map(|(a, b)| a * b).sum();
                    let c2: f64 = vp.iter().zip(&v).map(|(a, b)| a * b).sum();
                    for k in 0..m {
                        w[k] -= vp[k] * c1 + wq[k] * c2;
                    }
                }
                for x in &mut w {
                    *x *= tau;
                }
                let dot: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
                let alpha = -0.5 * tau * dot;
                for (x, vv) in w.iter_mut().zip(&v) {
                    *x += alpha * vv;
                }
            }
            reflectors.push(Reflector {
                start: i + 1,
                v,
                tau,
            });
            ws.push(w);
        }
        // Trailing update A[q.., q..] -= V W^T + W V^T.
        let q = p + nb;
        let m = n - q;
        let mut vm = vec![0.0; m * nb];
        let mut wm = vec![0.0; m * nb];
        for t in 0..nb {
            let r = &reflectors[p + t];
            let o = q - r.start;
            for k in 0..m {
                vm[k * nb + t] = r.v[o + k];
                wm[k * nb + t] = ws[t][o + k];
            }
        }
        let c = &mut a.data[q * n + q..];
        gemm(m, nb, m, -1.0, &vm, (nb, 1), &wm, (1, nb), 1.0, c, n);
        gemm(m, nb, m, -1.0, &wm, (nb, 1), &vm, (1, nb), 1.0, c, n);
        p = q;
    }
    diag[last] = a.get(last, last);
    Tridiagonal {
        diag,
        off,
        reflectors,
        block: BLOCK,
    }
}

/// Householder vector for `x`: returns `(beta, tau, v)` with
/// `(I - tau v v^T) x = beta e_1`.
fn make_reflector(x: &[f64]) -> (f64, f64, Vec<f64>) {
    let mut v = vec![0.0; x.len()];
    if x.is_empty() {
        return (0.0, 0.0, v);
    }
    v[0] = 1.0;
    let alpha = x[0];
    let tail = x[1..].iter().fold(0.0f64, |s, t| s.hypot(*t));
    if tail == 0.0 {
        return (alpha, 0.0, v);
    }
    let beta = -alpha.signum() * alpha.hypot(tail);
    let beta = if alpha == 0.0 {
        -alpha.hypot(tail)
    } else {
        beta
    };
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    for (dst, src) in v[1..].iter_mut().zip(&x[1..]) {
        *dst = src * scale;
    }
    (beta, tau, v)
}

/// `w = A[s.., s..] v`, reading only the lower triangle of the block.
fn sym_block_matvec(a: &DenseMatrix, s: usize, v: &[f64], w: &mut [f64]) {
    let n = a.rows;
    let m = n - s;
    w.iter_mut().for_each(|x| *x = 0.0);
    for r in 0..m {
        let row = &a.data[(s + r) * n + s..(s + r) * n + s + r + 1];
        let vr = v[r];
        let mut acc = 0.0;
        for (c, &arc) in row[..r].iter().enumerate() {
            acc += arc * v[c];
            w[c] += arc * vr;
        }
        w[r] += acc + row[r] * vr;
    }
}

impl Tridiagonal {
    /// Accumulates `Q = H_0 ... H_{n-2}` with block reflectors.
    pub fn form_q(&self) -> DenseMatrix {
        let n = self.diag.len();
        let mut x = DenseMatrix::identity(n);
        let total = self.reflectors.len();
        let mut blocks = Vec::new();
        let mut p = 0;
        while p < total {
            let nb = self.block.min(total - p);
            blocks.push((p, nb));
            p += nb;
        }
        for &(p, nb) in blocks.iter().rev() {
            let s = self.reflectors[p].start;
            let m = n - s;
            let mut vm = vec![0.0; m * nb];
            for t in 0..nb {
                let r = &self.reflectors[p + t];
                let o = r.start - s;
                for (k, vv) in r.v.iter().enumerate() {
                    vm[(o + k) * nb + t] = *vv;
                }
            }
            let tm = self.block_factor(p, nb, &vm, m);
            // X[s.., s..] -= V T V^T X[s.., s..]
            let mut w1 = vec![0.0; nb * m];
            gemm(
                nb,
                m,
                m,
                1.0,
                &vm,
                (1, nb),
                &x.data[s * n + s..],
                (n, 1),
                0.0,
                &mut w1,
                m,
            );
            let mut w2 = vec![0.0; nb * m];
            gemm(nb, nb, m, 1.0, &tm, (nb, 1), &w1, (m, 1), 0.0, &mut w2, m);
            gemm(
                m,
                nb,
                m,
                -1.0,
                &vm,
                (nb, 1),
                &w2,
                (m, 1),
                1.0,
                &mut x.data[s * n + s..],
                n,
            );
        }
        x
    }

    /// Upper-triangular `T` with `H_p ... H_{p+nb-1} = I - V T V^T`.
    fn block_factor(&self, p: usize, nb: usize, vm: &[f64], m: usize) -> Vec<f64> {
        let mut t = vec![0.0; nb * nb];
        for j in 0..nb {
            let tau = self.reflectors[p + j].tau;
            t[j * nb + j] = tau;
            if j == 0 {
                continue;
            }
            let mut tmp = vec![0.0; j];
            for (i, slot) in tmp.iter_mut().enumerate() {
                let mut s = 0.0;
                for k in 0..m {
                    s += vm[k * nb + i] * vm[k * nb + j];
                }
                *slot = -tau * s;
            }
            for i in 0..j {
                let mut s = 0.0;
                for (l, tl) in tmp.iter().enumerate().skip(i) {
                    s += t[i * nb + l] * tl;
                }
                t[i * nb + j] = s;
            }
        }
        t
    }
}

/// Eigenvalues (ascending) and eigenvectors (as columns) of a small dense
/// symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigen(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..100 {
        let mut offn = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = m.get(i, j) * m.get(i, j);
                total += x;
                if i != j {
                    offn += x;
                }
            }
        }
        if offn <= 1e-30 * total || offn == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).total_cmp(&m.get(j, j)));
    let vals = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vecs = DenseMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vecs.set(k, new, v.get(k, old));
        }
    }
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.gen_range(-1.0..1.0);
                m.set(i, j, x);
                m.set(j, i, x);
            }
        }
        m
    }

    fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut c = DenseMatrix::zeros(a.rows, b.cols);
        for i in 0..a.rows {
            for k in 0..a.cols {
                for j in 0..b.cols {
                    c.data[i * b.cols + j] += a.get(i, k) * b.get(k, j);
                }
            }
        }
        c
    }

    #[test]
    fn tridiagonalization_is_a_similarity() {
        for &n in &[1usize, 2, 3, 5, 33, 70, 100] {
            let a = random_symmetric(n, n as u64);
            let mut work = a.clone();
            let t = householder_tridiagonalize(&mut work);
            let q = t.form_q();
            let qtq = q.gram();
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((qtq.get(i, j) - e).abs() < 1e-12, "n={n}");
                }
            }
            let aq = matmul(&a, &q);
            let qt = q.transpose();
            let tt = matmul(&qt, &aq);
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j {
                        t.diag[i]
                    } else if i + 1 == j {
                        t.off[i]
                    } else if j + 1 == i {
                        t.off[j]
                    } else {
                        0.0
                    };
                    assert!((tt.get(i, j) - expect).abs() < 1e-11, "n={n} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn jacobi_matches_two_by_two() {
        let a = DenseMatrix::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]]);
        let (vals, vecs) = jacobi_eigen(&a);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        assert!((vecs.get(0, 0).abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn jacobi_trace_is_preserved() {
        let a = random_symmetric(12, 7);
        let (vals, _) = jacobi_eigen(&a);
        let tr: f64 = (0..12).map(|i| a.get(i, i)).sum();
        assert!((vals.iter().sum::<f64>() - tr).abs() < 1e-12);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }
}
