//! The embedded domain chain and the reference values it is compared against.

use crate::error::{Error, Result};
use crate::geometry::{build_domain, DomainKind, GridPoint, SubdomainSpec};

const fn gp(i: i64, j: i64) -> GridPoint {
    GridPoint::new(i, j)
}

/// Lower exclusion points, in the order they were found.
pub const P_LOWER: [GridPoint; 9] = [
    gp(28, 21),
    gp(31, 27),
    gp(24, 14),
    gp(28, 23),
    gp(26, 19),
    gp(21, 9),
    gp(30, 27),
    gp(23, 15),
    gp(31, 30),
];

/// Upper exclusion points, in the order they were found.
pub const P_UPPER: [GridPoint; 10] = [
    gp(25, 24),
    gp(20, 17),
    gp(28, 30),
    gp(18, 13),
    gp(22, 18),
    gp(28, 28),
    gp(29, 29),
    gp(19, 12),
    gp(27, 25),
    gp(25, 20),
];

/// A member of the certified chain.
#[derive(Debug, Clone)]
pub struct ChainDomain {
    /// `upper-<k>` or `lower-<k>`.
    pub name: String,
    pub kind: DomainKind,
    pub index: usize,
    pub domain: SubdomainSpec,
}

/// Grid on which the embedded points are given.
pub const CHAIN_GRID: u32 = 64;

/// The embedded points rescaled to an `n x n` grid; `n` must be a multiple of 64.
fn scaled(points: &[GridPoint], n: u32) -> Result<Vec<GridPoint>> {
    if n == 0 || n % CHAIN_GRID != 0 {
        return Err(Error::InvalidArgument(format!(
            "the embedded chain lives on grids that are multiples of {CHAIN_GRID}, not {n}"
        )));
    }
    let f = (n / CHAIN_GRID) as i64;
    Ok(points
        .iter()
        .map(|p| GridPoint::new(p.i * f, p.j * f))
        .collect())
}

/// Upper domain `k` is `D_U(k, p_U[k])` with history `p_L[..k]`.
pub fn upper_domain(k: usize, n: u32) -> Result<SubdomainSpec> {
    let hist = scaled(&P_LOWER[..k], n)?;
    let p = scaled(&P_UPPER[k..=k], n)?[0];
    build_domain(DomainKind::Upper, &hist, p, n)
}

/// Lower domain `k < 9` is `D_L(k+1, p_L[k])` with history `p_U[..=k]`;
/// lower domain 9 is `D_L(10, (0,0))`, the complement of all upper regions.
pub fn lower_domain(k: usize, n: u32) -> Result<SubdomainSpec> {
    let hist = scaled(&P_UPPER[..k + 1], n)?;
    let p = if k < P_LOWER.len() {
        scaled(&P_LOWER[k..=k], n)?[0]
    } else {
        GridPoint::ORIGIN
    };
    build_domain(DomainKind::Lower, &hist, p, n)
}

/// The 20 domains whose first mixed eigenvalue must exceed the threshold.
pub fn chain(n: u32) -> Result<Vec<ChainDomain>> {
    let mut out = Vec::with_capacity(20);
    for k in 0..10 {
        out.push(ChainDomain {
            name: format!("upper-{k}"),
            kind: DomainKind::Upper,
            index: k,
            domain: upper_domain(k, n)?,
        });
    }
    for k in 0..10 {
        out.push(ChainDomain {
            name: format!("lower-{k}"),
            kind: DomainKind::Lower,
            index: k,
            domain: lower_domain(k, n)?,
        });
    }
    Ok(out)
}

/// Reference first and second eigenvalues on the outer triangle, upper chain.
pub const UPPER_EIGS: [(f64, f64); 10] = [
    (12.32808937, 61.28234427),
    (12.28049706, 63.11306391),
    (12.27067982, 59.72331787),
    (12.28475539, 63.34657906),
    (12.32978563, 62.41415118),
    (12.27032723, 60.89756087),
    (12.26881872, 61.32799996),
    (12.26612593, 62.64435623),
    (12.28907295, 61.74502565),
    (12.28227434, 61.77654477),
];

/// Reference first and second eigenvalues on the outer triangle, lower chain.
pub const LOWER_EIGS: [(f64, f64); 10] = [
    (12.35848215, 47.63909357),
    (12.27959016, 56.23540471),
    (12.41003685, 63.87608517),
    (12.27157804, 61.18083146),
    (12.32234011, 62.36099167),
    (12.30303087, 64.35809373),
    (12.29807616, 61.14841468),
    (12.30521249, 63.27332626),
    (12.29850781, 62.20762852),
    (12.29425300, 62.65668399),
];

/// Reference margins `lambda_1 - radius - Lambda`, upper chain.
pub const UPPER_MARGINS: [f64; 10] = [
    6.63706231e-02,
    1.87783061e-02,
    8.96106588e-03,
    2.30366406e-02,
    6.80668799e-02,
    8.60847819e-03,
    7.09997069e-03,
    4.40717954e-03,
    2.73542003e-02,
    2.05555934e-02,
];

/// Reference margins, lower chain.
pub const LOWER_MARGINS: [f64; 10] = [
    9.67633998e-02,
    1.78714114e-02,
    1.48318103e-01,
    9.85928892e-03,
    6.06213576e-02,
    4.13121178e-02,
    3.63574115e-02,
    4.34937388e-02,
    3.67890648e-02,
    3.25342545e-02,
];

/// Reference eigenvalues for a chain member.
pub fn reference_eigs(kind: DomainKind, k: usize) -> Option<(f64, f64)> {
    match kind {
        DomainKind::Upper => UPPER_EIGS.get(k).copied(),
        DomainKind::Lower => LOWER_EIGS.get(k).copied(),
        DomainKind::Full => None,
    }
}

pub fn reference_margin(kind: DomainKind, k: usize) -> Option<f64> {
    match kind {
        DomainKind::Upper => UPPER_MARGINS.get(k).copied(),
        DomainKind::Lower => LOWER_MARGINS.get(k).copied(),
        DomainKind::Full => None,
    }
}
