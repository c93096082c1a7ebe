//! Shift-invert Lanczos for the smallest generalized eigenpairs of `(C, B)`.
//! Purely advisory: nothing computed here is trusted without verification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::DiscreteSystem;
use crate::linalg::dense::{jacobi_eigen, DenseMatrix};
use crate::linalg::ldlt::PermutedLdl;
use crate::linalg::ordering::minimum_degree;
use crate::linalg::sparse::CsrMatrix;

/// Approximate eigenpair, vector normalized to `x^T B x = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Factorization of `C - sigma B` for repeated solves.
pub struct ShiftInvert {
    pub sigma: f64,
    pub c: CsrMatrix<f64>,
    pub b: Vec<f64>,
    ldl: PermutedLdl,
}

impl ShiftInvert {
    pub fn new(s: &DiscreteSystem, sigma: f64) -> Result<Self> {
        let c = s.c_f64();
        let b = s.b_f64();
        let shifted = shift(&c, &b, sigma);
        let perm = minimum_degree(&c.adjacency());
        let ldl = PermutedLdl::new(&shifted, perm).map_err(|e| {
            Error::NoConvergence(format!("shifted factorization broke down: {e:?}"))
        })?;
        Ok(ShiftInvert { sigma, c, b, ldl })
    }

    /// `(C - sigma B)^{-1} B v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let bv: Vec<f64> = v.iter().zip(&self.b).map(|(x, b)| x * b).collect();
        self.ldl.solve(&bv)
    }

    pub fn b_dot(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.b)
            .map(|((a, c), b)| a * c * b)
            .sum()
    }

    /// Rayleigh quotient `x^T C x / x^T B x`.
    pub fn rayleigh(&self, x: &[f64]) -> f64 {
        let mut cx = vec![0.0; x.len()];
        self.c.matvec(x, &mut cx);
        let num: f64 = cx.iter().zip(x).map(|(a, b)| a * b).sum();
        num / self.b_dot(x, x)
    }

    /// `||C x - lambda B x|| / || |C| |x| + |lambda| B |x| ||`, which stays
    /// meaningful for eigenvalues at or near zero.
    pub fn relative_residual(&self, lambda: f64, x: &[f64]) -> f64 {
        let mut r = 0.0;
        let mut scale = 0.0;
        for (i, xi) in x.iter().enumerate() {
            let mut acc = -lambda * self.b[i] * xi;
            let mut mag = (lambda * self.b[i] * xi).abs();
            for (j, v) in self.c.row(i) {
                acc += v * x[j];
                mag += (v * x[j]).abs();
            }
            r += acc * acc;
            scale += mag * mag;
        }
        (r / scale.max(f64::MIN_POSITIVE)).sqrt()
    }
}

fn shift(c: &CsrMatrix<f64>, b: &[f64], sigma: f64) -> CsrMatrix<f64> {
    let trip = c
        .triplets()
        .map(|(i, j, v)| (i, j, if i == j { v - sigma * b[i] } else { *v }));
    CsrMatrix::from_triplets(c.n(), trip, |x, y| x + y)
}

/// Shift below the spectrum, so the pure Neumann kernel is harmless.
pub const DEFAULT_SHIFT: f64 = -0.25;

const MAX_STEPS: usize = 512;

/// The `k` smallest generalized eigenpairs, ascending, from a seeded
/// shift-invert Lanczos run with full reorthogonalization.
pub fn lanczos_estimate(s: &DiscreteSystem, k: usize, seed: u64) -> Result<Vec<EigenEstimate>> {
    let n = s.n();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cannot estimate {k} eigenpairs of a {n}x{n} system"
        )));
    }
    let op = ShiftInvert::new(s, DEFAULT_SHIFT)?;
    let mut steps = (2 * k + 30).min(n);
    let mut attempt = 0u64;
    loop {
        let pairs = lanczos_run(&op, k, steps, seed.wrapping_add(attempt))?;
        let worst = pairs
            .iter()
            .map(|p| op.relative_residual(p.value, &p.vector))
            .fold(0.0, f64::max);
        if worst < 1e-10 || steps == n {
            return Ok(pairs);
        }
        if steps >= MAX_STEPS {
            return Err(Error::NoConvergence(format!(
                "Lanczos residual {worst:e} after {steps} steps"
            )));
        }
        steps = (steps * 2).min(n).min(MAX_STEPS);
        attempt += 1;
    }
}

fn lanczos_run(op: &ShiftInvert, k: usize, steps: usize, seed: u64) -> Result<Vec<EigenEstimate>> {
    let n = op.b.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = op.b_dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= norm);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    while alpha.len() < steps {
        let j = alpha.len();
        let mut w = op.apply(&basis[j]);
        let a = op.b_dot(&w, &basis[j]);
        alpha.push(a);
        // Two passes of full B-orthogonalization.
        for _ in 0..2 {
            for v in &basis {
                let h = op.b_dot(&w, v);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= h * y);
            }
        }
        if alpha.len() == steps {
            break;
        }
        let bnorm = op.b_dot(&w, &w).sqrt();
        if bnorm <= 1e-12 * a.abs().max(1e-300) {
            // Invariant subspace found; restart from a fresh vector
            // orthogonal to the current basis.
            let mut r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for _ in 0..2 {
                for v in &basis {
                    let h = op.b_dot(&r, v);
                    r.iter_mut().zip(v).for_each(|(x, y)| *x -= h * y);
                }
            }
            let rn = op.b_dot(&r, &r).sqrt();
            if rn == 0.0 {
                break;
            }
            r.iter_mut().for_each(|x| *x /= rn);
            beta.push(0.0);
            basis.push(r);
        } else {
            w.iter_mut().for_each(|x| *x /= bnorm);
            beta.push(bnorm);
            basis.push(w);
        }
    }
    let m = alpha.len();
    let mut t = DenseMatrix::zeros(m, m);
    for i in 0..m {
        t.set(i, i, alpha[i]);
        if i + 1 < m {
            t.set(i, i + 1, beta[i]);
            t.set(i + 1, i, beta[i]);
        }
    }
    let (vals, vecs) = jacobi_eigen(&t);
    // Largest Ritz values of the inverse are the smallest eigenvalues.
    let mut out = Vec::with_capacity(k);
    for r in 0..k.min(m) {
        let col = m - 1 - r;
        let theta = vals[col];
        if theta <= 0.0 {
            return Err(Error::NoConvergence(
                "non-positive Ritz value of the shifted inverse".into(),
            ));
        }
        let mut x = vec![0.0; n];
        for (i, v) in basis.iter().take(m).enumerate() {
            let c = vecs.get(i, col);
            x.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
        }
        let xn = op.b_dot(&x, &x).sqrt();
        x.iter_mut().for_each(|a| *a /= xn);
        let value = op.rayleigh(&x);
        out.push(EigenEstimate { value, vector: x });
    }
    if out.len() < k {
        return Err(Error::NoConvergence("Krylov space exhausted".into()));
    }
    out.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(out)
}

/// A few steps of inverse iteration at `sigma` to polish a vector.
pub fn refine(op: &ShiftInvert, x: &[f64], steps: usize) -> EigenEstimate {
    let mut v = x.to_vec();
    for _ in 0..steps {
        v = op.apply(&v);
        let n = op.b_dot(&v, &v).sqrt();
        v.iter_mut().for_each(|a| *a /= n);
    }
    EigenEstimate {
        value: op.rayleigh(&v),
        vector: v,
    }
}
