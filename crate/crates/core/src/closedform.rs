//! Executable versions of the analytic identities for the equilateral
//! triangle and the cube: symmetric mode values, boundary traces, interval
//! integrals along a side, lattice integrals over face cubes and the
//! face-center parity sums.
//!
//! Everything is evaluated in double precision. Identities that are exact
//! zeros analytically are checked against [`IDENTITY_TOL`].

use std::f64::consts::PI;

use serde::Serialize;

use crate::{Error, Result};

/// Tolerance used when an analytic zero is checked numerically.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Default search bound for admissible `(m, k, M)` triples.
pub const TRIPLE_BOUND: u64 = 200;

/// Index pair of a symmetric equilateral mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModeIndex {
    pub m: u64,
    pub n: u64,
}

impl ModeIndex {
    pub fn new(m: u64, n: u64) -> Self {
        ModeIndex { m, n }
    }

    /// `m^2 + mn + n^2`; the eigenvalue is `16 pi^2 / 9` times this integer.
    pub fn eigenvalue_factor(&self) -> u64 {
        self.m * self.m + self.m * self.n + self.n * self.n
    }

    /// Floating value of `16 pi^2 / 9 * (m^2 + mn + n^2)`.
    pub fn eigenvalue(&self) -> f64 {
        16.0 * PI * PI / 9.0 * self.eigenvalue_factor() as f64
    }

    /// `(n - m) / 3` when `n >= m` and `3 | n - m`.
    pub fn k(&self) -> Option<u64> {
        if self.n >= self.m && (self.n - self.m) % 3 == 0 {
            Some((self.n - self.m) / 3)
        } else {
            None
        }
    }
}

fn parity(v: i64) -> f64 {
    if v.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Symmetric mode `phi_{m,n}` on the unit-side equilateral triangle with a
/// side on `[0,1] x {0}`.
pub fn equilateral_mode(m: u64, n: u64, x: f64, y: f64) -> f64 {
    let (mi, ni) = (m as i64, n as i64);
    let (mf, nf) = (m as f64, n as f64);
    let s = 2.0 * x - 1.0;
    let r3 = 3f64.sqrt();
    parity(mi + ni) * (PI * s * (mf - nf) / 3.0).cos() * (2.0 * PI * (mf + nf) * y / r3).cos()
        + parity(mi) * (PI * s * (mf + 2.0 * nf) / 3.0).cos() * (2.0 * PI * mf * y / r3).cos()
        + parity(ni) * (PI * s * (2.0 * mf + nf) / 3.0).cos() * (2.0 * PI * nf * y / r3).cos()
}

/// Trace of `phi_{m, m+3k}` on the side `y = 0`.
pub fn equilateral_trace(m: u64, k: u64, x: f64) -> f64 {
    let (m, k) = (m as f64, k as f64);
    (2.0 * PI * k * x).cos() + (2.0 * PI * (m + 2.0 * k) * x).cos() + (2.0 * PI * (m + k) * x).cos()
}

/// Centers `x_i = (2i+1)/(2M)` of the comb intervals.
pub fn comb_centers(big_m: u64) -> Vec<f64> {
    (0..big_m)
        .map(|i| (2 * i + 1) as f64 / (2 * big_m) as f64)
        .collect()
}

/// `3M^2 = 3m^2 + 3mk + k^2`.
pub fn is_admissible_triple(m: u64, k: u64, big_m: u64) -> bool {
    let lhs = 3u128 * (big_m as u128).pow(2);
    let (m, k) = (m as u128, k as u128);
    lhs == 3 * m * m + 3 * m * k + k * k
}

/// All `(m, k, M)` with `k > 0`, `m, k <= bound` and `3M^2 = 3m^2 + 3mk + k^2`.
pub fn admissible_triples(bound: u64) -> Vec<(u64, u64, u64)> {
    let mut out = Vec::new();
    for m in 0..=bound {
        for k in 1..=bound {
            let rhs = 3 * m * m + 3 * m * k + k * k;
            if rhs % 3 != 0 {
                continue;
            }
            let sq = rhs / 3;
            let root = sq.isqrt();
            if root * root == sq && root > 0 {
                out.push((m, k, root));
            }
        }
    }
    out
}

/// Integral of `phi_{m,m+3k}(x, 0)` over the union of `(x_i - a, x_i + a)`.
pub fn comb_integral(m: u64, k: u64, big_m: u64, a: f64) -> Result<f64> {
    if big_m == 0 {
        return Err(Error::InvalidArgument("comb needs M >= 1".into()));
    }
    if !(a > 0.0 && a < 1.0 / (2 * big_m) as f64) {
        return Err(Error::InvalidArgument(format!(
            "half-width {a} outside (0, 1/(2M)) for M = {big_m}"
        )));
    }
    if !is_admissible_triple(m, k, big_m) {
        return Err(Error::InvalidArgument(format!(
            "3M^2 != 3m^2+3mk+k^2 for (m,k,M) = ({m},{k},{big_m})"
        )));
    }
    let centers = comb_centers(big_m);
    let mut total = 0.0;
    for freq in [k, m + 2 * k, m + k] {
        let alpha = 2.0 * PI * freq as f64;
        if freq == 0 {
            total += 2.0 * a * big_m as f64;
            continue;
        }
        let weight = 2.0 / alpha * (alpha * a).sin();
        total += weight * centers.iter().map(|&x| (alpha * x).cos()).sum::<f64>();
    }
    Ok(total)
}

/// Closed form of the `k = 0` comb integral: `2aM - (2/pi) sin(2 pi M a)`.
pub fn comb_integral_k0(big_m: u64, a: f64) -> f64 {
    2.0 * a * big_m as f64 - 2.0 / PI * (2.0 * PI * big_m as f64 * a).sin()
}

/// Root of `x = (n-1) sin x` in `(0, pi)`, by bisection to full precision.
pub fn sine_root(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "sine_root needs n >= 2, got {n}"
        )));
    }
    if n == 2 {
        return Err(Error::NoRoot("x = sin x has no root in (0, pi)".into()));
    }
    let c = (n - 1) as f64;
    let f = |x: f64| x - c * x.sin();
    // f(pi/2) = pi/2 - c < 0 and f(pi) = pi > 0.
    let (mut lo, mut hi) = (PI / 2.0, PI);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

/// A nondecreasing sequence `m_1 <= ... <= m_n` with `sum m_i^2 = m^2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CubeSequence {
    values: Vec<u64>,
    target: u64,
}

impl CubeSequence {
    pub fn new(mut values: Vec<u64>, target: u64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument(
                "cube sequence needs dimension >= 2".into(),
            ));
        }
        values.sort_unstable();
        let sum: u128 = values.iter().map(|&v| (v as u128).pow(2)).sum();
        if sum != (target as u128).pow(2) {
            return Err(Error::InvalidArgument(format!(
                "sum of squares of {values:?} is not {target}^2"
            )));
        }
        Ok(CubeSequence { values, target })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn target(&self) -> u64 {
        self.target
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Assignment with the largest entry moved to `position`, the others kept
    /// in ascending order. Slot `dim - 1` is the face-normal coordinate.
    pub fn assignment(&self, position: usize) -> Result<Vec<u64>> {
        if position >= self.dim() {
            return Err(Error::InvalidArgument(format!(
                "slot {position} out of range for dimension {}",
                self.dim()
            )));
        }
        let mut rest = self.values.clone();
        let top = rest.pop().expect("dimension >= 2");
        rest.insert(position, top);
        Ok(rest)
    }
}

/// Every sequence of length `dim` with squares summing to `target^2`.
pub fn cube_sequences(dim: usize, target: u64) -> Vec<CubeSequence> {
    fn rec(
        dim: usize,
        remaining: u64,
        min: u64,
        prefix: &mut Vec<u64>,
        target: u64,
        out: &mut Vec<CubeSequence>,
    ) {
        if dim == 0 {
            if remaining == 0 {
                out.push(CubeSequence {
                    values: prefix.clone(),
                    target,
                });
            }
            return;
        }
        let mut v = min;
        while v * v * dim as u64 <= remaining {
            // The remaining slots are all >= v, so they need at least dim * v^2.
            prefix.push(v);
            rec(dim - 1, remaining - v * v, v, prefix, target, out);
            prefix.pop();
            v += 1;
        }
    }
    let mut out = Vec::new();
    rec(
        dim,
        target * target,
        0,
        &mut Vec::with_capacity(dim),
        target,
        &mut out,
    );
    out
}

fn one_axis_integral(mi: u64, target: u64, a: f64) -> f64 {
    // Sum over the lattice x_k = 1 - (2k+1)/m, k < m, of the integral of
    // cos(mi pi z) over (x_k - a, x_k + a).
    let centers = (0..target).map(|k| 1.0 - (2 * k + 1) as f64 / target as f64);
    if mi == 0 {
        return 2.0 * a * target as f64;
    }
    let w = mi as f64 * PI;
    let weight = 2.0 / w * (w * a).sin();
    weight * centers.map(|x| (w * x).cos()).sum::<f64>()
}

/// Integral of `prod cos(m_{sigma(i)} pi x_i)` over the face cubes, for the
/// assignment that puts the largest entry of `seq` at `sigma_position`.
pub fn cube_lattice_integral(seq: &CubeSequence, sigma_position: usize, a: f64) -> Result<f64> {
    let assignment = seq.assignment(sigma_position)?;
    lattice_integral_for(&assignment, seq.target(), a)
}

/// Same as [`cube_lattice_integral`] for an explicit assignment.
pub fn lattice_integral_for(assignment: &[u64], target: u64, a: f64) -> Result<f64> {
    if target == 0 {
        return Err(Error::InvalidArgument(
            "lattice integral needs m >= 1".into(),
        ));
    }
    if !(a > 0.0 && a < 1.0 / target as f64) {
        return Err(Error::InvalidArgument(format!(
            "half-width {a} outside (0, 1/m) for m = {target}"
        )));
    }
    let (normal, face) = assignment
        .split_last()
        .ok_or_else(|| Error::InvalidArgument("empty assignment".into()))?;
    let mut value = parity(*normal as i64);
    for &mi in face {
        value *= one_axis_integral(mi, target, a);
    }
    Ok(value)
}

/// Case formula for the lattice integral of one assignment.
pub fn lattice_integral_cases(assignment: &[u64], target: u64, a: f64) -> f64 {
    let n = assignment.len() as i32;
    let m = target;
    if assignment.iter().any(|&v| v != 0 && v != m) {
        return 0.0;
    }
    let twoam = 2.0 * a * m as f64;
    match assignment.iter().position(|&v| v == m) {
        Some(pos) if pos + 1 == assignment.len() => parity(m as i64) * twoam.powi(n - 1),
        Some(_) => {
            // The in-face factor is (2/(m pi)) sin(m pi a) * sum_k cos(m pi x_k)
            // and the cosine sum equals -m (-1)^m.
            parity(m as i64 + 1) * 2.0 / PI * (m as f64 * PI * a).sin() * twoam.powi(n - 2)
        }
        None => 0.0,
    }
}

/// `(-1)^{sum m_i}` times the sum of lattice integrals over all `n!`
/// assignments of the sequence.
pub fn cube_symmetrized_integral(seq: &CubeSequence, a: f64) -> Result<f64> {
    let sign = parity(seq.values().iter().sum::<u64>() as i64);
    let mut total = 0.0;
    let mut perm: Vec<usize> = (0..seq.dim()).collect();
    loop {
        let assignment: Vec<u64> = perm.iter().map(|&i| seq.values()[i]).collect();
        total += lattice_integral_for(&assignment, seq.target(), a)?;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(sign * total)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Half-width at which the symmetrized integral of `(0, ..., 0, m)` vanishes.
pub fn vanishing_half_width(dim: usize, target: u64) -> Result<f64> {
    Ok(sine_root(dim as u64)? / (PI * target as f64))
}

/// Face-center bracket `prod (cos(m_i pi h) + (-1)^{m_i}) - 1 - prod cos(m_i pi h)`.
pub fn cube_face_sum(seq: &CubeSequence, h: f64) -> f64 {
    let mut with_sign = 1.0;
    let mut plain = 1.0;
    for &mi in seq.values() {
        let c = (mi as f64 * PI * h).cos();
        with_sign *= c + parity(mi as i64);
        plain *= c;
    }
    with_sign - 1.0 - plain
}

/// Cube-center bracket `prod (1 + (-1)^{m_i}) - (-1)^{sum m_i} - 1`, used for odd `m`.
pub fn cube_center_sum(seq: &CubeSequence) -> f64 {
    let prod: f64 = seq
        .values()
        .iter()
        .map(|&mi| 1.0 + parity(mi as i64))
        .product();
    prod - parity(seq.values().iter().sum::<u64>() as i64) - 1.0
}

/// Face-center spacing for even `m`: `2^{-v}` with `2^v` the largest power of two dividing `m`.
pub fn face_spacing(target: u64) -> f64 {
    0.5f64.powi(target.trailing_zeros() as i32)
}

/// One row of the identity suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> SuiteCheck {
    SuiteCheck {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Largest `|cube_face_sum|` over all sequences of the given dimensions with
/// even `m <= max_m` (spacing [`face_spacing`]) and `|cube_center_sum|` for odd `m`.
pub fn parity_sweep(dims: &[usize], max_m: u64) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut count = 0;
    for &dim in dims {
        for m in 1..=max_m {
            for seq in cube_sequences(dim, m) {
                let v = if m % 2 == 0 {
                    cube_face_sum(&seq, face_spacing(m))
                } else {
                    cube_center_sum(&seq)
                };
                worst = worst.max(v.abs());
                count += 1;
            }
        }
    }
    (worst, count)
}

/// Runs every identity check and reports one row per check.
pub fn run_suite() -> Vec<SuiteCheck> {
    let mut out = Vec::new();

    let corner = [(1, 0), (2, 1), (0, 2)]
        .iter()
        .map(|&(m, k)| (equilateral_mode(m, m + 3 * k, 0.0, 0.0) - 3.0).abs())
        .fold(0.0, f64::max);
    out.push(check(
        "mode value 3 at the corner",
        corner <= IDENTITY_TOL,
        format!("max error {corner:.2e}"),
    ));

    let mut worst = 0.0f64;
    let mut cases = 0;
    for s in 0..4u32 {
        for m1 in 0..6u64 {
            for k1 in 0..6u64 {
                if m1 % 2 == 0 && k1 % 2 == 0 {
                    continue;
                }
                let (m, k) = (m1 << s, k1 << s);
                let x = 0.5f64.powi(s as i32 + 1);
                worst = worst.max((equilateral_mode(m, m + 3 * k, x, 0.0) + 1.0).abs());
                cases += 1;
            }
        }
    }
    out.push(check(
        "mode value -1 at 2^(-s-1)",
        worst <= IDENTITY_TOL,
        format!("{cases} cases, max error {worst:.2e}"),
    ));

    let triples = admissible_triples(TRIPLE_BOUND);
    let mut worst = 0.0f64;
    for &(m, k, big_m) in &triples {
        let a = 0.37 / (2 * big_m) as f64;
        if let Ok(v) = comb_integral(m, k, big_m, a) {
            worst = worst.max(v.abs());
        }
    }
    out.push(check(
        "comb integral vanishes for k > 0",
        !triples.is_empty() && worst <= IDENTITY_TOL,
        format!(
            "{} triples up to {TRIPLE_BOUND}, max |I| {worst:.2e}",
            triples.len()
        ),
    ));

    let z0 = sine_root(3).unwrap_or(f64::NAN);
    let a0 = z0 / (2.0 * PI);
    let comb0 = comb_integral(1, 0, 1, a0)
        .map(f64::abs)
        .unwrap_or(f64::INFINITY);
    out.push(check(
        "comb integral vanishes at z0 = 2 sin z0",
        comb0 <= IDENTITY_TOL,
        format!("a0 = {a0:.15}, |I| {comb0:.2e}"),
    ));

    let residual = (z0 - 2.0 * z0.sin()).abs();
    out.push(check(
        "sine root for n = 3",
        residual <= IDENTITY_TOL,
        format!("x = {z0:.16}, residual {residual:.2e}"),
    ));
    out.push(check(
        "no sine root for n = 2",
        matches!(sine_root(2), Err(Error::NoRoot(_))),
        "n = 2 rejected".into(),
    ));

    let mut worst = 0.0f64;
    for dim in 3..=6usize {
        for m in 1..=4u64 {
            let mut values = vec![0; dim - 1];
            values.push(m);
            let seq = CubeSequence::new(values, m).expect("valid sequence");
            let a = vanishing_half_width(dim, m).expect("dim > 2");
            // Relative to the size of the individual terms.
            let scale: f64 = (1..=dim).map(|i| i as f64).product::<f64>()
                * (2.0 * a * m as f64).powi(dim as i32 - 1);
            if let Ok(v) = cube_symmetrized_integral(&seq, a) {
                worst = worst.max(v.abs() / scale);
            }
        }
    }
    out.push(check(
        "symmetrized cube integral vanishes",
        worst <= IDENTITY_TOL,
        format!("max relative |I| {worst:.2e}"),
    ));

    let (worst, count) = parity_sweep(&[2, 3, 4], 40);
    out.push(check(
        "face brackets vanish in dimensions 2-4",
        worst <= IDENTITY_TOL,
        format!("{count} sequences, m <= 40, max {worst:.2e}"),
    ));

    let five = CubeSequence::new(vec![0, 3, 3, 3, 3], 6).expect("valid sequence");
    let v = cube_face_sum(&five, 0.5);
    out.push(check(
        "face bracket is 1 for (0,3,3,3,3)",
        (v - 1.0).abs() <= IDENTITY_TOL,
        format!("value {v:.15}"),
    ));

    out
}
