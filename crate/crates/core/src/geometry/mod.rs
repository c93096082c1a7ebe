//! Grid, exclusion regions and staircase subdomains of the reference triangle.
//!
//! Everything is carried out on integer grid indices. Cell `(i, j)` is the
//! square `[i, i+1] x [j, j+1]` of the reference triangle with legs `N`; the
//! cells with `i + j = N - 1` are cut by the hypotenuse and only their
//! lower-left half belongs to the triangle.

mod svg;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::rational::{int, rat, Rational};

pub use svg::{render_panels, render_svg};

/// Grid size used by the embedded domain chain.
pub const DEFAULT_N: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPoint {
    pub i: i64,
    pub j: i64,
}

impl GridPoint {
    pub const ORIGIN: GridPoint = GridPoint { i: 0, j: 0 };

    pub const fn new(i: i64, j: i64) -> Self {
        GridPoint { i, j }
    }

    pub fn check(&self, n: u32) -> Result<()> {
        if self.i < 0 || self.j < 0 || self.i + self.j > n as i64 {
            return Err(Error::PointOutsideTriangle {
                i: self.i,
                j: self.j,
                n,
            });
        }
        Ok(())
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

impl From<(i64, i64)> for GridPoint {
    fn from((i, j): (i64, i64)) -> Self {
        GridPoint { i, j }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Upper,
    Lower,
    /// The whole triangle with Neumann conditions everywhere.
    Full,
}

impl DomainKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DomainKind::Upper => "upper",
            DomainKind::Lower => "lower",
            DomainKind::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(DomainKind::Upper),
            "lower" => Ok(DomainKind::Lower),
            "full" => Ok(DomainKind::Full),
            _ => Err(Error::Parse(format!("unknown domain kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcLabel {
    Dirichlet,
    Neumann,
}

/// Orientation class of a mesh edge; the order doubles as the DOF sort key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeClass {
    /// `(i, j) - (i+1, j)`
    Horizontal,
    /// `(i, j) - (i, j+1)`
    Vertical,
    /// `(i+1, j) - (i, j+1)`, parallel to the hypotenuse
    Diagonal,
}

/// An edge of the structured triangulation, keyed by class and the anchor
/// `(i, j)` described on each [`EdgeClass`] variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridEdge {
    pub class: EdgeClass,
    pub i: i64,
    pub j: i64,
}

impl GridEdge {
    pub const fn new(class: EdgeClass, i: i64, j: i64) -> Self {
        GridEdge { class, i, j }
    }

    pub fn endpoints(&self) -> (GridPoint, GridPoint) {
        let (i, j) = (self.i, self.j);
        match self.class {
            EdgeClass::Horizontal => (GridPoint::new(i, j), GridPoint::new(i + 1, j)),
            EdgeClass::Vertical => (GridPoint::new(i, j), GridPoint::new(i, j + 1)),
            EdgeClass::Diagonal => (GridPoint::new(i + 1, j), GridPoint::new(i, j + 1)),
        }
    }

    /// Lexicographically smaller endpoint.
    pub fn min_endpoint(&self) -> GridPoint {
        let (a, b) = self.endpoints();
        a.min(b)
    }

    /// Canonical DOF ordering: minimum endpoint, then orientation class.
    pub fn sort_key(&self) -> (i64, i64, EdgeClass) {
        let m = self.min_endpoint();
        (m.i, m.j, self.class)
    }

    /// Twice the midpoint, in grid units.
    pub fn midpoint2(&self) -> (i64, i64) {
        let (a, b) = self.endpoints();
        (a.i + b.i, a.j + b.j)
    }

    pub fn on_hypotenuse(&self, n: u32) -> bool {
        self.class == EdgeClass::Diagonal && self.i + self.j == n as i64 - 1
    }

    pub fn on_left_leg(&self) -> bool {
        self.class == EdgeClass::Vertical && self.i == 0
    }

    pub fn on_bottom_leg(&self) -> bool {
        self.class == EdgeClass::Horizontal && self.j == 0
    }

    pub fn on_triangle_boundary(&self, n: u32) -> bool {
        self.on_hypotenuse(n) || self.on_left_leg() || self.on_bottom_leg()
    }
}

impl Ord for GridEdge {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for GridEdge {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A set of cells of the `N x N` grid restricted to the triangle.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellSet {
    n: u32,
    bits: Vec<bool>,
}

impl CellSet {
    pub fn empty(n: u32) -> Self {
        CellSet {
            n,
            bits: vec![false; (n * n) as usize],
        }
    }

    /// Every cell of the triangle.
    pub fn triangle(n: u32) -> Self {
        let mut s = CellSet::empty(n);
        for (i, j) in cells_of_triangle(n) {
            s.insert(i, j);
        }
        s
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    fn idx(&self, i: i64, j: i64) -> Option<usize> {
        let n = self.n as i64;
        if i < 0 || j < 0 || i + j > n - 1 {
            None
        } else {
            Some((i * n + j) as usize)
        }
    }

    pub fn contains(&self, i: i64, j: i64) -> bool {
        self.idx(i, j).map(|k| self.bits[k]).unwrap_or(false)
    }

    pub fn insert(&mut self, i: i64, j: i64) {
        if let Some(k) = self.idx(i, j) {
            self.bits[k] = true;
        }
    }

    pub fn remove(&mut self, i: i64, j: i64) {
        if let Some(k) = self.idx(i, j) {
            self.bits[k] = false;
        }
    }

    pub fn union_with(&mut self, other: &CellSet) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
    }

    /// Cells of the triangle not in `self`.
    pub fn complement(&self) -> CellSet {
        let mut c = CellSet::empty(self.n);
        for (i, j) in cells_of_triangle(self.n) {
            if !self.contains(i, j) {
                c.insert(i, j);
            }
        }
        c
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        let mut c = self.clone();
        for (a, b) in c.bits.iter_mut().zip(&other.bits) {
            *a &= *b;
        }
        c
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    /// Cells in `(i, j)` lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let n = self.n;
        cells_of_triangle(n).filter(move |&(i, j)| self.contains(i, j))
    }
}

fn cells_of_triangle(n: u32) -> impl Iterator<Item = (i64, i64)> {
    let n = n as i64;
    (0..n).flat_map(move |i| (0..n - i).map(move |j| (i, j)))
}

/// Whether cell `(i, j)` is a hypotenuse half-cell.
pub fn is_half_cell(i: i64, j: i64, n: u32) -> bool {
    i + j == n as i64 - 1
}

/// Cells whose closed square lies in `{x >= x_p, y <= y_p}`.
pub fn region_lower(p: GridPoint, n: u32) -> Result<CellSet> {
    p.check(n)?;
    let mut s = CellSet::empty(n);
    for (i, j) in cells_of_triangle(n) {
        if i >= p.i && j + 1 <= p.j {
            s.insert(i, j);
        }
    }
    Ok(s)
}

/// Cells whose closed square lies in `{x <= x_p, y >= y_p}`.
pub fn region_upper(p: GridPoint, n: u32) -> Result<CellSet> {
    p.check(n)?;
    let mut s = CellSet::empty(n);
    for (i, j) in cells_of_triangle(n) {
        if i + 1 <= p.i && j >= p.j {
            s.insert(i, j);
        }
    }
    Ok(s)
}

/// Pruning predicate of the frontier search: admissibility of `p` implies
/// admissibility of `q`.
pub fn monotone_dominates(kind: DomainKind, p: GridPoint, q: GridPoint) -> bool {
    match kind {
        DomainKind::Upper => q.i <= p.i && q.j >= p.j,
        DomainKind::Lower => q.i >= p.i && q.j <= p.j,
        DomainKind::Full => false,
    }
}

/// Union of exclusion regions for a point history.
pub fn exclusion_union(kind: DomainKind, history: &[GridPoint], n: u32) -> Result<CellSet> {
    let mut acc = CellSet::empty(n);
    for &q in history {
        let r = match kind {
            DomainKind::Upper => region_lower(q, n)?,
            DomainKind::Lower => region_upper(q, n)?,
            DomainKind::Full => {
                return Err(Error::InvalidArgument("full domain has no history".into()))
            }
        };
        acc.union_with(&r);
    }
    Ok(acc)
}

/// A staircase subdomain with per-edge boundary labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubdomainSpec {
    pub kind: DomainKind,
    pub k: usize,
    pub history: Vec<GridPoint>,
    pub p: GridPoint,
    pub n: u32,
    pub cells: CellSet,
    pub edge_labels: BTreeMap<GridEdge, BcLabel>,
}

/// `D_U(k, p)` or `D_L(k, p)` where `k = history.len()`.
///
/// Upper domains drop the cells of every `R_L(q)`, `q` in `history`, and of
/// `R_L(p)`; lower domains drop `R_U` regions instead.
pub fn build_domain(
    kind: DomainKind,
    history: &[GridPoint],
    p: GridPoint,
    n: u32,
) -> Result<SubdomainSpec> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid size must be positive".into()));
    }
    if kind == DomainKind::Full {
        if !history.is_empty() {
            return Err(Error::InvalidArgument("full domain has no history".into()));
        }
        return Ok(full_domain(n));
    }
    p.check(n)?;
    let mut excluded = exclusion_union(kind, history, n)?;
    excluded.union_with(&exclusion_union(kind, &[p], n)?);
    let cells = excluded.complement();
    from_cells(kind, history.to_vec(), p, cells)
}

/// The whole triangle, pure Neumann.
pub fn full_domain(n: u32) -> SubdomainSpec {
    let cells = CellSet::triangle(n);
    let edge_labels = boundary_edges(&cells)
        .into_iter()
        .map(|e| (e, BcLabel::Neumann))
        .collect();
    SubdomainSpec {
        kind: DomainKind::Full,
        k: 0,
        history: Vec::new(),
        p: GridPoint::ORIGIN,
        n,
        cells,
        edge_labels,
    }
}

fn from_cells(
    kind: DomainKind,
    history: Vec<GridPoint>,
    p: GridPoint,
    cells: CellSet,
) -> Result<SubdomainSpec> {
    let n = cells.n();
    if cells.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let components = count_components(&cells);
    if components != 1 {
        return Err(Error::DisconnectedDomain { components });
    }
    let edge_labels = boundary_edges(&cells)
        .into_iter()
        .map(|e| (e, label_for(kind, &e, n)))
        .collect();
    Ok(SubdomainSpec {
        kind,
        k: history.len(),
        history,
        p,
        n,
        cells,
        edge_labels,
    })
}

fn label_for(kind: DomainKind, e: &GridEdge, n: u32) -> BcLabel {
    let neumann = match kind {
        DomainKind::Upper => e.on_hypotenuse(n) || e.on_left_leg(),
        DomainKind::Lower | DomainKind::Full => e.on_triangle_boundary(n),
    };
    if neumann {
        BcLabel::Neumann
    } else {
        BcLabel::Dirichlet
    }
}

/// Boundary sides of a cell: `(edge, neighbour across it)`.
fn cell_sides(i: i64, j: i64, n: u32) -> Vec<(GridEdge, Option<(i64, i64)>)> {
    let mut v = vec![
        (
            GridEdge::new(EdgeClass::Horizontal, i, j),
            (j > 0).then(|| (i, j - 1)),
        ),
        (
            GridEdge::new(EdgeClass::Vertical, i, j),
            (i > 0).then(|| (i - 1, j)),
        ),
    ];
    if is_half_cell(i, j, n) {
        v.push((GridEdge::new(EdgeClass::Diagonal, i, j), None));
    } else {
        v.push((
            GridEdge::new(EdgeClass::Horizontal, i, j + 1),
            Some((i, j + 1)),
        ));
        v.push((
            GridEdge::new(EdgeClass::Vertical, i + 1, j),
            Some((i + 1, j)),
        ));
    }
    v
}

fn boundary_edges(cells: &CellSet) -> Vec<GridEdge> {
    let n = cells.n();
    let mut out = Vec::new();
    for (i, j) in cells.iter() {
        for (e, nb) in cell_sides(i, j, n) {
            if !nb.map(|(a, b)| cells.contains(a, b)).unwrap_or(false) {
                out.push(e);
            }
        }
    }
    out.sort();
    out
}

fn count_components(cells: &CellSet) -> usize {
    let n = cells.n();
    let mut seen = CellSet::empty(n);
    let mut components = 0;
    for (i, j) in cells.iter() {
        if seen.contains(i, j) {
            continue;
        }
        components += 1;
        seen.insert(i, j);
        let mut queue = VecDeque::from([(i, j)]);
        while let Some((a, b)) = queue.pop_front() {
            for (_, nb) in cell_sides(a, b, n) {
                if let Some((c, d)) = nb {
                    if cells.contains(c, d) && !seen.contains(c, d) {
                        seen.insert(c, d);
                        queue.push_back((c, d));
                    }
                }
            }
        }
    }
    components
}

impl SubdomainSpec {
    pub fn id(&self) -> String {
        match self.kind {
            DomainKind::Full => format!("full-N{}", self.n),
            _ => format!(
                "{}-k{}-p{}-{}-N{}",
                self.kind.as_str(),
                self.k,
                self.p.i,
                self.p.j,
                self.n
            ),
        }
    }

    pub fn label(&self, e: &GridEdge) -> Option<BcLabel> {
        self.edge_labels.get(e).copied()
    }

    pub fn dirichlet_edges(&self) -> impl Iterator<Item = &GridEdge> {
        self.edge_labels
            .iter()
            .filter(|(_, l)| **l == BcLabel::Dirichlet)
            .map(|(e, _)| e)
    }

    /// Counterclockwise corner list of the outer boundary in grid units,
    /// collinear vertices removed, starting at the lexicographically
    /// smallest corner.
    pub fn polygon_grid_units(&self) -> Vec<GridPoint> {
        let loop_pts = trace_outer_boundary(self);
        elide_collinear(&loop_pts)
    }

    /// Reflex corners of the staircase in increasing `i`, preceded by the
    /// origin for upper domains. This is the every-other-vertex listing of
    /// the Dirichlet staircase.
    pub fn listed_corners(&self) -> Vec<GridPoint> {
        let poly = self.polygon_grid_units();
        let m = poly.len();
        let mut out: Vec<GridPoint> = (0..m)
            .filter(|&t| {
                let a = poly[(t + m - 1) % m];
                let b = poly[t];
                let c = poly[(t + 1) % m];
                let cross = (b.i - a.i) * (c.j - b.j) - (b.j - a.j) * (c.i - b.i);
                cross < 0
            })
            .map(|t| poly[t])
            .collect();
        out.sort();
        if self.kind == DomainKind::Upper && poly.contains(&GridPoint::ORIGIN) {
            out.insert(0, GridPoint::ORIGIN);
        }
        out
    }

    /// Polygon corners in the scaled triangle with legs 128 and 93:
    /// `(i, j) -> (2i, 93 j / 64)` for `N = 64`, generally `(128 i / N, 93 j / N)`.
    pub fn to_polygon(&self) -> Vec<(Rational, Rational)> {
        let fam = TriangleFamily::new(self.n);
        self.polygon_grid_units()
            .into_iter()
            .map(|p| fam.to_scaled(p))
            .collect()
    }

    pub fn to_json(&self) -> DomainJson {
        DomainJson {
            kind: self.kind.as_str().to_string(),
            k: self.k,
            history: self.history.iter().map(|p| [p.i, p.j]).collect(),
            p: [self.p.i, self.p.j],
            n: self.n,
            polygon_grid_units: self
                .polygon_grid_units()
                .iter()
                .map(|p| [p.i, p.j])
                .collect(),
        }
    }

    pub fn from_json(j: &DomainJson) -> Result<Self> {
        let kind = DomainKind::parse(&j.kind)?;
        let history: Vec<GridPoint> = j
            .history
            .iter()
            .map(|a| GridPoint::new(a[0], a[1]))
            .collect();
        if history.len() != j.k {
            return Err(Error::Parse(format!(
                "history length {} does not match k = {}",
                history.len(),
                j.k
            )));
        }
        let d = build_domain(kind, &history, GridPoint::new(j.p[0], j.p[1]), j.n)?;
        if !j.polygon_grid_units.is_empty() {
            let poly: Vec<[i64; 2]> = d.polygon_grid_units().iter().map(|p| [p.i, p.j]).collect();
            if poly != j.polygon_grid_units {
                return Err(Error::Parse(
                    "polygon does not match the rebuilt domain".into(),
                ));
            }
        }
        Ok(d)
    }
}

fn trace_outer_boundary(d: &SubdomainSpec) -> Vec<GridPoint> {
    // Directed boundary edges with the domain on the left.
    let mut out: BTreeMap<GridPoint, Vec<GridPoint>> = BTreeMap::new();
    for e in d.edge_labels.keys() {
        let (a, b) = e.endpoints();
        let (i, j) = (e.i, e.j);
        let inside_above_or_left = match e.class {
            EdgeClass::Horizontal => d.cells.contains(i, j),
            EdgeClass::Vertical => !d.cells.contains(i, j),
            EdgeClass::Diagonal => false,
        };
        let (from, to) = match e.class {
            EdgeClass::Horizontal if inside_above_or_left => (a, b),
            EdgeClass::Horizontal => (b, a),
            EdgeClass::Vertical if inside_above_or_left => (a, b),
            EdgeClass::Vertical => (b, a),
            EdgeClass::Diagonal => (a, b),
        };
        out.entry(from).or_default().push(to);
    }
    let start = match out.keys().next() {
        Some(s) => *s,
        None => return Vec::new(),
    };
    let mut used: BTreeSet<(GridPoint, GridPoint)> = BTreeSet::new();
    let mut pts = vec![start];
    let mut cur = start;
    let mut dir_in = (0i64, -1i64);
    loop {
        let cands = &out[&cur];
        // Prefer the sharpest left turn so that pinch points split loops.
        let next = cands
            .iter()
            .filter(|t| !used.contains(&(cur, **t)))
            .max_by_key(|t| {
                let d = (t.i - cur.i, t.j - cur.j);
                turn_rank(dir_in, d)
            })
            .copied();
        let Some(next) = next else { break };
        used.insert((cur, next));
        dir_in = (next.i - cur.i, next.j - cur.j);
        if next == start {
            break;
        }
        pts.push(next);
        cur = next;
    }
    pts
}

/// Larger is further counterclockwise relative to the incoming direction.
fn turn_rank(din: (i64, i64), dout: (i64, i64)) -> i64 {
    let cross = din.0 * dout.1 - din.1 * dout.0;
    let dot = din.0 * dout.0 + din.1 * dout.1;
    // Angles quantized well enough for the eight grid directions.
    let angle = (cross as f64).atan2(dot as f64);
    (angle * 1.0e6) as i64
}

fn elide_collinear(pts: &[GridPoint]) -> Vec<GridPoint> {
    let m = pts.len();
    if m < 3 {
        return pts.to_vec();
    }
    let keep: Vec<GridPoint> = (0..m)
        .filter(|&t| {
            let a = pts[(t + m - 1) % m];
            let b = pts[t];
            let c = pts[(t + 1) % m];
            (b.i - a.i) * (c.j - b.j) - (b.j - a.j) * (c.i - b.i) != 0
        })
        .map(|t| pts[t])
        .collect();
    // Rotate so the smallest corner comes first.
    let s = keep
        .iter()
        .enumerate()
        .min_by_key(|(_, p)| **p)
        .map(|(t, _)| t)
        .unwrap_or(0);
    keep[s..].iter().chain(keep[..s].iter()).copied().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainJson {
    pub kind: String,
    pub k: usize,
    pub history: Vec<[i64; 2]>,
    pub p: [i64; 2],
    #[serde(rename = "N")]
    pub n: u32,
    pub polygon_grid_units: Vec<[i64; 2]>,
}

/// A right triangle with legs on the coordinate axes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RightTriangle {
    pub name: &'static str,
    pub leg_x: Rational,
    pub leg_y: Rational,
}

impl RightTriangle {
    pub fn area(&self) -> Rational {
        &self.leg_x * &self.leg_y / int(2)
    }
}

/// The named triangles sharing one grid, together with the grid size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangleFamily {
    pub n: u32,
    /// Legs 1 and 85/117; contained in the triangle of interest.
    pub inner: RightTriangle,
    /// Legs 1 and 93/128; contains the triangle of interest.
    pub outer: RightTriangle,
    /// `outer` scaled by 128: legs 128 and 93.
    pub scaled: RightTriangle,
    /// Legs 1 and 1.
    pub reference: RightTriangle,
}

impl TriangleFamily {
    pub fn new(n: u32) -> Self {
        let one = int(1);
        TriangleFamily {
            n,
            inner: RightTriangle {
                name: "inner",
                leg_x: one.clone(),
                leg_y: rat(85, 117).expect("nonzero"),
            },
            outer: RightTriangle {
                name: "outer",
                leg_x: one.clone(),
                leg_y: alpha(),
            },
            scaled: RightTriangle {
                name: "scaled",
                leg_x: int(128),
                leg_y: int(93),
            },
            reference: RightTriangle {
                name: "reference",
                leg_x: one.clone(),
                leg_y: one,
            },
        }
    }

    pub fn cell_width(&self, t: &RightTriangle) -> Rational {
        &t.leg_x / int(self.n as i64)
    }

    pub fn cell_height(&self, t: &RightTriangle) -> Rational {
        &t.leg_y / int(self.n as i64)
    }

    /// Factor between the scaled and outer triangles' side lengths.
    pub fn scale(&self) -> Rational {
        &self.scaled.leg_x / &self.outer.leg_x
    }

    /// Eigenvalues on the outer triangle are this factor times those on the
    /// scaled one.
    pub fn eigenvalue_scale(&self) -> Rational {
        let s = self.scale();
        &s * &s
    }

    pub fn map_point(&self, t: &RightTriangle, p: GridPoint) -> (Rational, Rational) {
        (
            self.cell_width(t) * int(p.i),
            self.cell_height(t) * int(p.j),
        )
    }

    pub fn to_scaled(&self, p: GridPoint) -> (Rational, Rational) {
        self.map_point(&self.scaled, p)
    }
}

/// Aspect ratio of the outer triangle, 93/128.
pub fn alpha() -> Rational {
    rat(93, 128).expect("nonzero")
}
