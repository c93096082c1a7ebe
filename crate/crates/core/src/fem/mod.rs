//! Crouzeix-Raviart discretization on the structured triangulation.
//!
//! Every grid cell is split along the diagonal from `(i, j+1)` to `(i+1, j)`;
//! hypotenuse half-cells contribute only their lower-left triangle. In the
//! scaled triangle (legs 128 and 93) every element is a right triangle with
//! legs `h = 2` and `alpha h = 93/64`, so the local matrices are identical.

pub mod p2;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{
    alpha, is_half_cell, BcLabel, EdgeClass, GridEdge, GridPoint, SubdomainSpec, TriangleFamily,
};
use crate::linalg::sparse::CsrMatrix;
use crate::scalar::rational::{int, Rational};

/// Factor `93 * 64` that makes the stiffness matrix integral.
pub const STIFFNESS_SCALE: i64 = 93 * 64;
/// `93^2 / 3`: `C u = SIGMA * lambda''' * B u` on the scaled triangle at `N = 64`.
pub const SIGMA: i64 = 2883;

/// Factor relating matrix and scaled-triangle eigenvalues on an `n x n` grid:
/// element legs are `128/n`, so it is `SIGMA * (64/n)^2`.
pub fn sigma_for_grid(n: u32) -> Rational {
    Rational::new((SIGMA * 4096).into(), (i64::from(n) * i64::from(n)).into())
}

/// Side-length factor between the scaled triangle and the outer triangle.
pub const SCALE_SQUARED: i64 = 128 * 128;

/// Element stiffness matrix for legs `h` (horizontal) and `alpha h`
/// (vertical), independent of `h`. DOF order: horizontal leg, hypotenuse,
/// vertical leg.
pub fn local_stiffness(alpha: &Rational) -> Result<[[Rational; 3]; 3]> {
    if alpha <= &Rational::zero() {
        return Err(Error::InvalidArgument(
            "aspect ratio must be positive".into(),
        ));
    }
    let two = int(2);
    let a = alpha.clone();
    let ia = a.recip();
    let hor = &two * &ia;
    let ver = &two * &a;
    let hyp = &two * (&a + &ia);
    let z = Rational::zero();
    Ok([
        [hor.clone(), -hor.clone(), z.clone()],
        [-hor, hyp, -ver.clone()],
        [z, -ver.clone(), ver],
    ])
}

/// Integer element matrix for `alpha = 93/128`, scaled by `93 * 64`.
pub fn scaled_local_stiffness() -> [[i64; 3]; 3] {
    let k = local_stiffness(&alpha()).expect("positive");
    let s = int(STIFFNESS_SCALE);
    let mut out = [[0i64; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let v = &k[a][b] * &s;
            assert!(v.is_integer());
            out[a][b] = v.to_integer().to_i64().expect("small");
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshTriangle {
    pub cell: (i64, i64),
    /// Upper-right half of the cell (right angle at `(i+1, j+1)`).
    pub upper: bool,
    /// Edges in local DOF order: horizontal leg, hypotenuse, vertical leg.
    pub edges: [GridEdge; 3],
}

impl MeshTriangle {
    pub fn vertices(&self) -> [GridPoint; 3] {
        let (i, j) = self.cell;
        if self.upper {
            [
                GridPoint::new(i + 1, j + 1),
                GridPoint::new(i, j + 1),
                GridPoint::new(i + 1, j),
            ]
        } else {
            [
                GridPoint::new(i, j),
                GridPoint::new(i + 1, j),
                GridPoint::new(i, j + 1),
            ]
        }
    }
}

#[derive(Debug, Clone)]
pub struct CrMesh {
    pub n: u32,
    pub triangles: Vec<MeshTriangle>,
    /// Every edge of a kept triangle, in canonical order.
    pub edges: Vec<GridEdge>,
    /// Number of kept triangles containing each edge.
    pub edge_triangles: Vec<u8>,
    /// Position of each edge among the DOFs, `None` if removed.
    pub dof_index: Vec<Option<usize>>,
    /// Edges on the Dirichlet boundary.
    pub removed: Vec<GridEdge>,
}

impl CrMesh {
    pub fn num_dofs(&self) -> usize {
        self.dof_index.iter().filter(|d| d.is_some()).count()
    }

    /// Edge carrying each DOF.
    pub fn dof_edges(&self) -> Vec<GridEdge> {
        self.edges
            .iter()
            .zip(&self.dof_index)
            .filter(|(_, d)| d.is_some())
            .map(|(e, _)| *e)
            .collect()
    }

    /// Vertex coordinates of a triangle in the scaled triangle.
    pub fn scaled_vertices(&self, t: &MeshTriangle) -> [(Rational, Rational); 3] {
        let fam = TriangleFamily::new(self.n);
        t.vertices().map(|p| fam.to_scaled(p))
    }
}

fn cell_triangles(i: i64, j: i64, n: u32) -> Vec<MeshTriangle> {
    let lower = MeshTriangle {
        cell: (i, j),
        upper: false,
        edges: [
            GridEdge::new(EdgeClass::Horizontal, i, j),
            GridEdge::new(EdgeClass::Diagonal, i, j),
            GridEdge::new(EdgeClass::Vertical, i, j),
        ],
    };
    if is_half_cell(i, j, n) {
        return vec![lower];
    }
    let upper = MeshTriangle {
        cell: (i, j),
        upper: true,
        edges: [
            GridEdge::new(EdgeClass::Horizontal, i, j + 1),
            GridEdge::new(EdgeClass::Diagonal, i, j),
            GridEdge::new(EdgeClass::Vertical, i + 1, j),
        ],
    };
    vec![lower, upper]
}

pub fn build_mesh(d: &SubdomainSpec) -> Result<CrMesh> {
    if d.cells.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let n = d.n;
    let mut triangles = Vec::new();
    let mut count: BTreeMap<GridEdge, u8> = BTreeMap::new();
    for (i, j) in d.cells.iter() {
        for t in cell_triangles(i, j, n) {
            for e in t.edges {
                *count.entry(e).or_insert(0) += 1;
            }
            triangles.push(t);
        }
    }
    let mut edges = Vec::with_capacity(count.len());
    let mut edge_triangles = Vec::with_capacity(count.len());
    let mut dof_index = Vec::with_capacity(count.len());
    let mut removed = Vec::new();
    let mut next = 0usize;
    for (e, c) in count {
        edges.push(e);
        edge_triangles.push(c);
        let dirichlet = c == 1 && d.label(&e) == Some(BcLabel::Dirichlet);
        if dirichlet {
            removed.push(e);
            dof_index.push(None);
        } else {
            dof_index.push(Some(next));
            next += 1;
        }
    }
    Ok(CrMesh {
        n,
        triangles,
        edges,
        edge_triangles,
        dof_index,
        removed,
    })
}

/// Integer generalized eigenproblem `C u = mu B u` with `mu = sigma * lambda'''`
/// and `lambda'' = 128^2 lambda'''`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSystem {
    pub n_grid: u32,
    pub c: CsrMatrix<i64>,
    pub b: Vec<i64>,
    pub sigma: Rational,
    pub mesh_hash: String,
    pub dof_edges: Vec<GridEdge>,
}

pub fn assemble(m: &CrMesh) -> DiscreteSystem {
    let local = scaled_local_stiffness();
    let pos: BTreeMap<GridEdge, usize> = m
        .edges
        .iter()
        .zip(&m.dof_index)
        .filter_map(|(e, d)| d.map(|d| (*e, d)))
        .collect();
    let ndof = pos.len();
    let mut trip = Vec::with_capacity(9 * m.triangles.len());
    let mut b = vec![0i64; ndof];
    for t in &m.triangles {
        let idx: Vec<Option<usize>> = t.edges.iter().map(|e| pos.get(e).copied()).collect();
        for a in 0..3 {
            let Some(r) = idx[a] else { continue };
            b[r] += 1;
            for c in 0..3 {
                if let Some(s) = idx[c] {
                    if local[a][c] != 0 {
                        trip.push((r, s, local[a][c]));
                    }
                }
            }
        }
    }
    let c = CsrMatrix::from_triplets(ndof, trip, |x, y| x + y);
    let dof_edges = m.dof_edges();
    let mesh_hash = hash_system(m.n, &c, &b, &dof_edges);
    DiscreteSystem {
        n_grid: m.n,
        c,
        b,
        sigma: sigma_for_grid(m.n),
        mesh_hash,
        dof_edges,
    }
}

/// Convenience: mesh and assemble a subdomain.
pub fn discretize(d: &SubdomainSpec) -> Result<DiscreteSystem> {
    Ok(assemble(&build_mesh(d)?))
}

fn hash_system(n_grid: u32, c: &CsrMatrix<i64>, b: &[i64], dofs: &[GridEdge]) -> String {
    let mut h = Sha256::new();
    h.update(format!("grid {n_grid} dofs {}\n", b.len()).as_bytes());
    for (e, bi) in dofs.iter().zip(b) {
        h.update(format!("{:?} {} {} {}\n", e.class, e.i, e.j, bi).as_bytes());
    }
    for (i, j, v) in c.triplets() {
        h.update(format!("{i} {j} {v}\n").as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportHeader {
    pub sigma: String,
    #[serde(rename = "N")]
    pub n: u32,
    pub dofs: usize,
    pub nnz: usize,
    pub mesh_hash: String,
    /// Diagonal of `B`.
    pub b: Vec<i64>,
}

impl DiscreteSystem {
    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// Matrix eigenvalue to the Laplacian eigenvalue on the outer triangle.
    pub fn to_outer_units(&self, mu: f64) -> f64 {
        mu * SCALE_SQUARED as f64 / self.sigma_f64()
    }

    pub fn from_outer_units(&self, lambda: f64) -> f64 {
        lambda * self.sigma_f64() / SCALE_SQUARED as f64
    }

    fn sigma_f64(&self) -> f64 {
        crate::scalar::rational::to_f64(&self.sigma)
    }

    /// `sigma / 128^2`: a matrix eigenvalue is this times the outer-triangle one.
    pub fn outer_to_matrix(&self) -> Rational {
        &self.sigma / int(SCALE_SQUARED)
    }

    /// Coordinate text (`row col value`, 1-based, both triangles) and its header.
    pub fn export_coo(&self) -> (ExportHeader, String) {
        let mut body = String::new();
        for (i, j, v) in self.c.triplets() {
            let _ = writeln!(body, "{} {} {}", i + 1, j + 1, v);
        }
        let header = ExportHeader {
            sigma: self.sigma.to_string(),
            n: self.n_grid,
            dofs: self.n(),
            nnz: self.c.nnz(),
            mesh_hash: self.mesh_hash.clone(),
            b: self.b.clone(),
        };
        (header, body)
    }

    /// Twice the DOF midpoints in grid units, for geometric orderings.
    pub fn dof_coords(&self) -> Vec<(i64, i64)> {
        self.dof_edges.iter().map(|e| e.midpoint2()).collect()
    }

    pub fn c_f64(&self) -> CsrMatrix<f64> {
        self.c.map(|v| *v as f64)
    }

    pub fn b_f64(&self) -> Vec<f64> {
        self.b.iter().map(|v| *v as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::full_domain;
    use crate::scalar::rational::rat;

    #[test]
    fn local_matrix_values() {
        let k = local_stiffness(&rat(93, 128).unwrap()).unwrap();
        let expect = [
            [rat(256, 93).unwrap(), rat(-256, 93).unwrap(), int(0)],
            [
                rat(-256, 93).unwrap(),
                rat(25033, 5952).unwrap(),
                rat(-93, 64).unwrap(),
            ],
            [int(0), rat(-93, 64).unwrap(), rat(93, 64).unwrap()],
        ];
        assert_eq!(k, expect);
        let k1 = local_stiffness(&int(1)).unwrap();
        assert_eq!(k1[1][1], int(4));
        assert_eq!(k1[0][1], int(-2));
        assert!(local_stiffness(&int(0)).is_err());
    }

    #[test]
    fn scaled_local_is_integral() {
        assert_eq!(
            scaled_local_stiffness(),
            [[16384, -16384, 0], [-16384, 25033, -8649], [0, -8649, 8649]]
        );
    }

    #[test]
    fn tiny_full_triangle() {
        let d = full_domain(2);
        let m = build_mesh(&d).unwrap();
        assert_eq!(m.triangles.len(), 4);
        assert_eq!(m.edges.len(), 9);
        assert_eq!(m.num_dofs(), 9);
        let s = assemble(&m);
        for i in 0..s.n() {
            let row_sum: i64 = s.c.row(i).map(|(_, v)| *v).sum();
            assert_eq!(row_sum, 0);
        }
    }

    #[test]
    fn full_triangle_counts() {
        let m = build_mesh(&full_domain(64)).unwrap();
        assert_eq!(m.triangles.len(), 64 * 64);
        assert_eq!(m.edges.len(), 3 * 64 * 65 / 2);
        assert!(m.removed.is_empty());
    }
}
