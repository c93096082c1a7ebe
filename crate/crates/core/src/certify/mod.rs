//! Rigorous lower bounds on the first generalized eigenvalue of `(C, B)`.
//!
//! Four back-ends decide whether `C - theta B` is positive definite:
//! an exact fraction-free factorization, an interval `L D L^T`, interval
//! Sturm counts on a rigorously enclosed tridiagonal form, and a verified
//! eigenpair combined with an inertia count.

pub mod lanczos;
pub mod posdef;
pub mod sturm;
pub mod verify;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{discretize, sigma_for_grid, DiscreteSystem, SCALE_SQUARED};
use crate::geometry::{DomainJson, SubdomainSpec, DEFAULT_N};
use crate::linalg::ordering::OrderingKind;
use crate::linalg::sparse::CsrMatrix;
use crate::scalar::interval::{serde_hexf, Interval, TriBool};
use crate::scalar::rational::{int, is_power_of_two, rat, serde_rational, Rational};

pub use lanczos::{lanczos_estimate, EigenEstimate};
pub use posdef::{posdef_interval_ldlt, posdef_rational_lu};
pub use sturm::{
    bisect_brackets, sturm_count, tridiagonalize, EigBracket, IntervalTridiagonal, TridiagOptions,
};
pub use verify::{verify_eigenpair, VerifiedPair};

pub const TOOL_VERSION: &str = concat!("pentanodal ", env!("CARGO_PKG_VERSION"));

/// Upper bound for the interpolation constant squared.
pub fn kappa_squared() -> Rational {
    rat(1931, 10000).expect("nonzero")
}

/// Default continuous threshold `V = 49/4`.
pub fn default_v() -> Rational {
    rat(49, 4).expect("nonzero")
}

/// Default discrete threshold `Lambda = 12.25 + 3/256`.
pub fn default_lambda() -> Rational {
    rat(3139, 256).expect("nonzero")
}

/// Squared diameter of a grid cell in the outer triangle: `(1 + alpha^2) / n^2`.
pub fn mesh_h2(n: u32) -> Rational {
    let n = i64::from(n);
    rat(25033, 16384 * n * n).expect("nonzero")
}

/// Squared diameter of a cell of twice the grid spacing at N = 64:
/// `(2/64)^2 (1 + alpha^2)`. Too coarse for the gate.
pub fn double_cell_h2() -> Rational {
    rat(25033, 16_777_216).expect("nonzero")
}

/// `Lambda / (1 + kappa2 Lambda H2)`: a lower bound for the continuous
/// eigenvalue whenever `Lambda` bounds the discrete one from below.
pub fn cg_lower_bound(lambda: &Rational, kappa2: &Rational, h2: &Rational) -> Result<Rational> {
    if lambda.is_negative() || kappa2.is_negative() || h2.is_negative() {
        return Err(Error::InvalidArgument("inputs must be nonnegative".into()));
    }
    Ok(lambda / (Rational::one() + kappa2 * lambda * h2))
}

/// Whether `cg_lower_bound(Lambda, kappa2, H2(n)) > V`.
pub fn cg_gate(v: &Rational, lambda: &Rational, n: u32) -> Result<bool> {
    Ok(&cg_lower_bound(lambda, &kappa_squared(), &mesh_h2(n))? > v)
}

/// Denominator of the discrete thresholds produced by [`discrete_threshold_for`].
pub const LAMBDA_DENOMINATOR: i64 = 256;

/// Smallest multiple of `1/256` that passes [`cg_gate`] for `v` on an
/// `n x n` grid. Gives `3139/256` for `v = 49/4`, `n = 64`.
pub fn discrete_threshold_for(v: &Rational, n: u32) -> Result<Rational> {
    if !v.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "threshold {v} must be positive"
        )));
    }
    // The bound exceeds v exactly when lambda > v / (1 - kappa2 v H2).
    let denom = Rational::one() - kappa_squared() * v * mesh_h2(n);
    if !denom.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "no discrete threshold implies {v} on a {n}x{n} grid"
        )));
    }
    let critical = v / denom;
    let steps =
        (critical * Rational::from_integer(LAMBDA_DENOMINATOR.into())).floor() + Rational::one();
    let lambda = steps / Rational::from_integer(LAMBDA_DENOMINATOR.into());
    debug_assert!(cg_gate(v, &lambda, n)?);
    Ok(lambda)
}

/// Threshold in matrix units and the factor clearing its denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Threshold {
    pub theta: Rational,
    /// Denominator of `theta`; `den * C - num * B` is integral.
    pub multiplier: BigInt,
    /// `log2(multiplier)` when it is a power of two.
    pub multiplier_log2: Option<u64>,
}

impl Threshold {
    pub fn new(theta: Rational) -> Self {
        let multiplier = theta.denom().clone();
        let multiplier_log2 = is_power_of_two(&multiplier).then(|| multiplier.bits() - 1);
        Threshold {
            theta,
            multiplier,
            multiplier_log2,
        }
    }
}

/// `theta = sigma Lambda / 128^2` for the `N = 64` system.
pub fn matrix_threshold(lambda: &Rational) -> Result<Threshold> {
    matrix_threshold_for(lambda, &sigma_for_grid(DEFAULT_N))
}

pub fn matrix_threshold_for(lambda: &Rational, sigma: &Rational) -> Result<Threshold> {
    if lambda.is_negative() {
        return Err(Error::InvalidArgument(
            "threshold must be nonnegative".into(),
        ));
    }
    Ok(Threshold::new(sigma * lambda / int(SCALE_SQUARED)))
}

/// `den(theta) C - num(theta) B` as an integer matrix.
pub fn shifted_integer_matrix(s: &DiscreteSystem, theta: &Rational) -> Result<CsrMatrix<i64>> {
    let num = theta
        .numer()
        .to_i64()
        .ok_or_else(|| Error::InvalidArgument("threshold numerator too large".into()))?;
    let den = theta
        .denom()
        .to_i64()
        .ok_or_else(|| Error::InvalidArgument("threshold denominator too large".into()))?;
    let overflow = || Error::InvalidArgument("shifted matrix entry exceeds 64 bits".into());
    let mut trip = Vec::with_capacity(s.c.nnz());
    for (i, j, v) in s.c.triplets() {
        let mut x = v.checked_mul(den).ok_or_else(overflow)?;
        if i == j {
            x = x
                .checked_sub(num.checked_mul(s.b[i]).ok_or_else(overflow)?)
                .ok_or_else(overflow)?;
        }
        trip.push((i, j, x));
    }
    Ok(CsrMatrix::from_triplets(s.n(), trip, |a, b| a + b))
}

/// `C - theta B` with interval entries.
pub fn shifted_interval_matrix(s: &DiscreteSystem, theta: &Rational) -> CsrMatrix<Interval> {
    let t = Interval::from_rational(theta);
    let mut trip = Vec::with_capacity(s.c.nnz());
    for (i, j, v) in s.c.triplets() {
        let mut x = Interval::point(*v as f64);
        if i == j {
            x -= t * Interval::point(s.b[i] as f64);
        }
        trip.push((i, j, x));
    }
    CsrMatrix::from_triplets(s.n(), trip, |a, b| *a + *b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RationalLu,
    IntervalLdlt,
    SturmBisect,
    VerifiedEigenpair,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::RationalLu,
        Method::IntervalLdlt,
        Method::SturmBisect,
        Method::VerifiedEigenpair,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::RationalLu => "rational-lu",
            Method::IntervalLdlt => "interval-ldlt",
            Method::SturmBisect => "sturm-bisect",
            Method::VerifiedEigenpair => "verified-eigenpair",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rational-lu" => Ok(Method::RationalLu),
            "interval-ldlt" => Ok(Method::IntervalLdlt),
            "sturm" | "sturm-bisect" => Ok(Method::SturmBisect),
            "verified" | "verified-eigenpair" => Ok(Method::VerifiedEigenpair),
            _ => Err(Error::Parse(format!("unknown method {s:?}"))),
        }
    }
}

/// Method-specific data from which a verdict can be re-derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evidence {
    RationalLu {
        ordering: OrderingKind,
        permutation: Vec<usize>,
        /// Decimal denominator of `theta` used to clear fractions.
        multiplier: String,
        pivots_checked: usize,
        failed_at: Option<usize>,
        pivot_signs: String,
        pivot_digest: String,
        max_bits: u64,
    },
    IntervalLdlt {
        ordering: OrderingKind,
        permutation: Vec<usize>,
        pivots_checked: usize,
        failed_at: Option<usize>,
        /// `+`, `-`, `0` or `?` per pivot.
        pivot_signs: String,
        min_pivot: Option<Interval>,
    },
    SturmBisect {
        #[serde(with = "serde_rational")]
        tolerance: Rational,
        /// Radius added to the tridiagonal diagonal.
        #[serde(with = "serde_hexf")]
        radius: f64,
        #[serde(with = "serde_hexf")]
        orthogonality_defect: f64,
        count_below_theta: Option<usize>,
        brackets: Vec<EigBracket>,
    },
    VerifiedEigenpair {
        seed: u64,
        /// Enclosure of the eigenvalue in matrix units.
        eigenvalue: Interval,
        #[serde(with = "serde_hexf")]
        radius: f64,
        #[serde(with = "serde_hexf")]
        contraction: f64,
        #[serde(with = "serde_rational")]
        inertia_shift: Rational,
        negative_pivots: Option<usize>,
    },
}

/// Verdict and evidence from one back-end.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub verdict: TriBool,
    pub evidence: Evidence,
    /// Why the verdict is not `true`, if it is not.
    pub advice: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub domain: DomainJson,
    pub method: Method,
    #[serde(with = "serde_rational")]
    pub theta: Rational,
    pub verdict: TriBool,
    pub evidence: Evidence,
    pub mesh_hash: String,
    pub tool_version: String,
}

/// Parameters of the back-ends that are not part of the inputs proper.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendOptions {
    pub ordering: OrderingKind,
    pub bisection_tol: Rational,
    pub brackets: usize,
    pub seed: u64,
    pub tridiag: TridiagOptions,
}

impl Default for BackendOptions {
    fn default() -> Self {
        BackendOptions {
            ordering: OrderingKind::MinimumDegree,
            bisection_tol: rat(1, 1 << 20).expect("nonzero"),
            brackets: 2,
            seed: 0x5eed,
            tridiag: TridiagOptions::default(),
        }
    }
}

/// Runs one back-end on an assembled system.
pub fn certify_system(
    s: &DiscreteSystem,
    theta: &Rational,
    method: Method,
    opts: &BackendOptions,
) -> Result<Outcome> {
    match method {
        Method::RationalLu => posdef_rational_lu(s, theta, opts.ordering, None),
        Method::IntervalLdlt => Ok(posdef_interval_ldlt(s, theta, opts.ordering, None)),
        Method::SturmBisect => sturm::certify_sturm(s, theta, opts),
        Method::VerifiedEigenpair => verify::certify_verified(s, theta, opts),
    }
}

/// Builds the system for `d` and certifies `lambda_1 > V` through `Lambda`.
pub fn certify_domain(
    d: &SubdomainSpec,
    v: &Rational,
    lambda: &Rational,
    method: Method,
) -> Result<Certificate> {
    certify_domain_with(d, v, lambda, method, &BackendOptions::default())
}

pub fn certify_domain_with(
    d: &SubdomainSpec,
    v: &Rational,
    lambda: &Rational,
    method: Method,
    opts: &BackendOptions,
) -> Result<Certificate> {
    if !cg_gate(v, lambda, d.n)? {
        return Err(Error::InvalidArgument(format!(
            "the discrete threshold {lambda} does not imply the continuous threshold {v} on a {0}x{0} grid",
            d.n
        )));
    }
    let s = discretize(d)?;
    let th = matrix_threshold_for(lambda, &s.sigma)?;
    let out = certify_system(&s, &th.theta, method, opts)?;
    Ok(Certificate {
        domain: d.to_json(),
        method,
        theta: th.theta,
        verdict: out.verdict,
        evidence: out.evidence,
        mesh_hash: s.mesh_hash,
        tool_version: TOOL_VERSION.to_string(),
    })
}

/// Re-derives a certificate from its domain description and compares every
/// field. Returns the list of disagreements (empty on success).
pub fn recheck(cert: &Certificate) -> Result<Vec<String>> {
    let mut diffs = Vec::new();
    let d = SubdomainSpec::from_json(&cert.domain)?;
    let s = discretize(&d)?;
    if s.mesh_hash != cert.mesh_hash {
        diffs.push(format!(
            "mesh hash {} != recomputed {}",
            cert.mesh_hash, s.mesh_hash
        ));
        return Ok(diffs);
    }
    if cert.theta.is_negative() || cert.theta.is_zero() && cert.verdict == TriBool::True {
        diffs.push("threshold must be positive".into());
    }
    let redo = match &cert.evidence {
        Evidence::RationalLu {
            ordering,
            permutation,
            ..
        } => posdef_rational_lu(&s, &cert.theta, *ordering, Some(permutation.as_slice()))?,
        Evidence::IntervalLdlt {
            ordering,
            permutation,
            ..
        } => posdef_interval_ldlt(&s, &cert.theta, *ordering, Some(permutation.as_slice())),
        Evidence::SturmBisect {
            tolerance,
            brackets,
            ..
        } => {
            let opts = BackendOptions {
                bisection_tol: tolerance.clone(),
                brackets: brackets.len(),
                ..Default::default()
            };
            sturm::certify_sturm(&s, &cert.theta, &opts)?
        }
        Evidence::VerifiedEigenpair { seed, .. } => {
            let opts = BackendOptions {
                seed: *seed,
                ..Default::default()
            };
            verify::certify_verified(&s, &cert.theta, &opts)?
        }
    };
    if redo.verdict != cert.verdict {
        diffs.push(format!(
            "verdict {} != recomputed {}",
            cert.verdict, redo.verdict
        ));
    }
    if redo.evidence != cert.evidence {
        let a = serde_json::to_value(&cert.evidence).map_err(|e| Error::Parse(e.to_string()))?;
        let b = serde_json::to_value(&redo.evidence).map_err(|e| Error::Parse(e.to_string()))?;
        match (a, b) {
            (serde_json::Value::Object(a), serde_json::Value::Object(b)) => {
                for (k, va) in &a {
                    if b.get(k) != Some(va) {
                        diffs.push(format!("evidence field {k:?} differs"));
                    }
                }
                for k in b.keys() {
                    if !a.contains_key(k) {
                        diffs.push(format!("evidence field {k:?} missing"));
                    }
                }
            }
            _ => diffs.push("evidence differs".into()),
        }
    }
    Ok(diffs)
}
