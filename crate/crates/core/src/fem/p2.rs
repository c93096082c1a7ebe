//! Conforming quadratic elements on the right triangle with legs `1` and
//! `85/117`, used for a validated upper bound on its first nonzero Neumann
//! eigenvalue.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::ldlt::PermutedLdl;
use crate::linalg::ordering::minimum_degree;
use crate::linalg::sparse::CsrMatrix;
use crate::scalar::interval::Interval;
use crate::scalar::rational::{int, rat, Rational};

/// Height of the inner rational triangle.
pub fn inner_height() -> Rational {
    rat(85, 117).expect("nonzero")
}

/// Polynomial in barycentric coordinates: exponents -> coefficient.
type Bary = Vec<([u32; 3], Rational)>;

fn bary_mul(p: &Bary, q: &Bary) -> Bary {
    let mut out: HashMap<[u32; 3], Rational> = HashMap::new();
    for (ea, ca) in p {
        for (eb, cb) in q {
            let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
            *out.entry(e).or_insert_with(Rational::zero) += ca * cb;
        }
    }
    out.into_iter().collect()
}

fn factorial(n: u32) -> Rational {
    (1..=n).fold(Rational::one(), |acc, k| acc * int(i64::from(k)))
}

/// `int_T p / |T|`, from `int l1^a l2^b l3^c = 2|T| a! b! c! / (a+b+c+2)!`.
fn bary_mean(p: &Bary) -> Rational {
    let mut s = Rational::zero();
    for (e, c) in p {
        let num = factorial(e[0]) * factorial(e[1]) * factorial(e[2]) * int(2);
        s += c * num / factorial(e[0] + e[1] + e[2] + 2);
    }
    s
}

fn mono(e: [u32; 3], c: i64) -> ([u32; 3], Rational) {
    (e, int(c))
}

/// Quadratic basis (vertices then midpoints of edges 01, 12, 20) and the
/// barycentric-coefficient form of each gradient: `grad phi_i = sum_k g[i][k] grad l_k`.
fn basis() -> (Vec<Bary>, Vec<[Bary; 3]>) {
    let e = |k: usize| {
        let mut x = [0u32; 3];
        x[k] = 1;
        x
    };
    let e2 = |k: usize| {
        let mut x = [0u32; 3];
        x[k] = 2;
        x
    };
    let e11 = |a: usize, b: usize| {
        let mut x = [0u32; 3];
        x[a] += 1;
        x[b] += 1;
        x
    };
    let zero: Bary = Vec::new();
    let mut phi = Vec::new();
    let mut grad = Vec::new();
    for k in 0..3 {
        phi.push(vec![mono(e2(k), 2), mono(e(k), -1)]);
        let mut g = [zero.clone(), zero.clone(), zero.clone()];
        g[k] = vec![mono(e(k), 4), mono([0, 0, 0], -1)];
        grad.push(g);
    }
    for (a, b) in [(0, 1), (1, 2), (2, 0)] {
        phi.push(vec![mono(e11(a, b), 4)]);
        let mut g = [zero.clone(), zero.clone(), zero.clone()];
        g[a] = vec![mono(e(b), 4)];
        g[b] = vec![mono(e(a), 4)];
        grad.push(g);
    }
    (phi, grad)
}

type Point = (Rational, Rational);

/// Exact element stiffness and mass matrices, in basis order.
pub fn element_matrices(v: &[Point; 3]) -> Result<([[Rational; 6]; 6], [[Rational; 6]; 6])> {
    let (x0, y0) = &v[0];
    let (x1, y1) = &v[1];
    let (x2, y2) = &v[2];
    let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    if det.is_zero() {
        return Err(Error::InvalidArgument("degenerate triangle".into()));
    }
    let area = det.abs() / int(2);
    // grad l_k = (y_{k+1} - y_{k+2}, x_{k+2} - x_{k+1}) / det.
    let grads: Vec<Point> = (0..3)
        .map(|k| {
            let (xa, ya) = &v[(k + 1) % 3];
            let (xb, yb) = &v[(k + 2) % 3];
            ((ya - yb) / &det, (xb - xa) / &det)
        })
        .collect();
    let g: Vec<Vec<Rational>> = (0..3)
        .map(|a| {
            (0..3)
                .map(|b| &grads[a].0 * &grads[b].0 + &grads[a].1 * &grads[b].1)
                .collect()
        })
        .collect();
    let (phi, dphi) = basis();
    let mut k = std::array::from_fn(|_| std::array::from_fn(|_| Rational::zero()));
    let mut m: [[Rational; 6]; 6] =
        std::array::from_fn(|_| std::array::from_fn(|_| Rational::zero()));
    for i in 0..6 {
        for j in 0..6 {
            m[i][j] = &area * bary_mean(&bary_mul(&phi[i], &phi[j]));
            let mut s = Rational::zero();
            for a in 0..3 {
                for b in 0..3 {
                    if dphi[i][a].is_empty() || dphi[j][b].is_empty() {
                        continue;
                    }
                    s += &g[a][b] * bary_mean(&bary_mul(&dphi[i][a], &dphi[j][b]));
                }
            }
            k[i][j] = &area * s;
        }
    }
    Ok((k, m))
}

/// Uniform quadratic mesh of the inner triangle with `level^2` congruent
/// elements, assembled exactly.
#[derive(Debug, Clone)]
pub struct P2Mesh {
    pub level: usize,
    /// Node positions on the half-step lattice `(a, b)`, `a + b <= 2 level`.
    pub nodes: Vec<(usize, usize)>,
    pub stiffness: CsrMatrix<Rational>,
    pub mass: CsrMatrix<Rational>,
    pub area: Rational,
}

impl P2Mesh {
    pub fn new(level: usize) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidArgument(
                "refinement level must be at least 1".into(),
            ));
        }
        let l2 = 2 * level;
        let mut index = HashMap::new();
        let mut nodes = Vec::new();
        for b in 0..=l2 {
            for a in 0..=l2 - b {
                index.insert((a, b), nodes.len());
                nodes.push((a, b));
            }
        }
        let hx = rat(1, l2 as i64)?;
        let hy = inner_height() / int(l2 as i64);
        let point = |(a, b): (usize, usize)| (&hx * int(a as i64), &hy * int(b as i64));
        let mut tris = Vec::new();
        for j in 0..level {
            for i in 0..level - j {
                let (a, b) = (2 * i, 2 * j);
                tris.push([(a, b), (a + 2, b), (a, b + 2)]);
                if i + j + 1 < level {
                    tris.push([(a + 2, b), (a + 2, b + 2), (a, b + 2)]);
                }
            }
        }
        let mut kt = Vec::new();
        let mut mt = Vec::new();
        // Elements come in two congruent orientations with identical matrices.
        let mut cache: HashMap<bool, ([[Rational; 6]; 6], [[Rational; 6]; 6])> = HashMap::new();
        for t in &tris {
            let mid = |p: (usize, usize), q: (usize, usize)| ((p.0 + q.0) / 2, (p.1 + q.1) / 2);
            let local = [
                t[0],
                t[1],
                t[2],
                mid(t[0], t[1]),
                mid(t[1], t[2]),
                mid(t[2], t[0]),
            ];
            let upright = t[1].1 == t[0].1 && t[1].0 > t[0].0 && t[2].0 == t[0].0;
            if !cache.contains_key(&upright) {
                let v = [point(t[0]), point(t[1]), point(t[2])];
                cache.insert(upright, element_matrices(&v)?);
            }
            let (ke, me) = &cache[&upright];
            for r in 0..6 {
                for c in 0..6 {
                    let (gi, gj) = (index[&local[r]], index[&local[c]]);
                    kt.push((gi, gj, ke[r][c].clone()));
                    mt.push((gi, gj, me[r][c].clone()));
                }
            }
        }
        let n = nodes.len();
        let stiffness = CsrMatrix::from_triplets(n, kt, |x, y| x + y);
        let mass = CsrMatrix::from_triplets(n, mt, |x, y| x + y);
        let area = inner_height() / int(2);
        Ok(P2Mesh {
            level,
            nodes,
            stiffness,
            mass,
            area,
        })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }
}

fn quad_form(a: &CsrMatrix<Interval>, u: &[Interval], v: &[Interval]) -> Interval {
    let mut s = Interval::ZERO;
    for (i, ui) in u.iter().enumerate() {
        let mut row = Interval::ZERO;
        for (j, x) in a.row(i) {
            row += *x * v[j];
        }
        s += *ui * row;
    }
    s
}

/// Enclosure of `u^T K u / u^T M u` for the piecewise quadratic with nodal
/// values `u`, or `None` if the denominator is not certifiably positive.
pub fn rayleigh_quotient(mesh: &P2Mesh, u: &[f64]) -> Option<Interval> {
    let k = mesh.stiffness.map(Interval::from_rational);
    let m = mesh.mass.map(Interval::from_rational);
    let u: Vec<Interval> = u.iter().map(|x| Interval::point(*x)).collect();
    quad_form(&k, &u, &u)
        .checked_div(quad_form(&m, &u, &u))
        .ok()
}

/// Enclosure of the quotient of `u - mean(u)`, which is orthogonal to
/// constants and so bounds the first nonzero Neumann eigenvalue from above.
pub fn mean_free_quotient(mesh: &P2Mesh, u: &[f64]) -> Option<Interval> {
    let k = mesh.stiffness.map(Interval::from_rational);
    let m = mesh.mass.map(Interval::from_rational);
    let u: Vec<Interval> = u.iter().map(|x| Interval::point(*x)).collect();
    let ones = vec![Interval::ONE; u.len()];
    // K annihilates constants exactly, so the numerator is unchanged.
    let num = quad_form(&k, &u, &u);
    let m1 = quad_form(&m, &ones, &u);
    let den = quad_form(&m, &u, &u)
        - m1.square()
            .checked_div(Interval::from_rational(&mesh.area))
            .ok()?;
    num.checked_div(den).ok()
}

/// Validated upper bound for the first nonzero Neumann eigenvalue of the
/// inner triangle: the enclosed quotient of a computed approximate
/// eigenfunction on the `level^2` quadratic mesh.
pub fn p2_upper_bound(level: usize) -> Result<Interval> {
    let mesh = P2Mesh::new(level)?;
    let u = approximate_mode(&mesh, 12.0)?;
    mean_free_quotient(&mesh, &u)
        .ok_or_else(|| Error::NoConvergence("quotient denominator not positive".into()))
}

/// Inverse iteration at `shift` with constants projected out.
fn approximate_mode(mesh: &P2Mesh, shift: f64) -> Result<Vec<f64>> {
    let k = mesh.stiffness.map(crate::scalar::rational::to_f64);
    let m = mesh.mass.map(crate::scalar::rational::to_f64);
    let n = mesh.n();
    let trip: Vec<_> = k
        .triplets()
        .map(|(i, j, v)| (i, j, v - shift * m.get(i, j).copied().unwrap_or(0.0)))
        .chain(
            m.triplets()
                .filter(|(i, j, _)| k.get(*i, *j).is_none())
                .map(|(i, j, v)| (i, j, -shift * v)),
        )
        .collect();
    let a = CsrMatrix::from_triplets(n, trip, |x, y| x + y);
    let ldl = PermutedLdl::new(&a, minimum_degree(&a.adjacency()))
        .map_err(|e| Error::NoConvergence(format!("shifted quadratic system: {e:?}")))?;
    let area = crate::scalar::rational::to_f64(&mesh.area);
    let mut u: Vec<f64> = mesh
        .nodes
        .iter()
        .map(|&(a, b)| (a as f64 - b as f64) + 0.5)
        .collect();
    let mut mu = vec![0.0; n];
    for _ in 0..60 {
        m.matvec(&u, &mut mu);
        let mean = mu.iter().sum::<f64>() / area;
        u.iter_mut().for_each(|x| *x -= mean);
        m.matvec(&u, &mut mu);
        let next = ldl.solve(&mu);
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NoConvergence("inverse iteration broke down".into()));
        }
        u = next.into_iter().map(|x| x / norm).collect();
    }
    Ok(u)
}
