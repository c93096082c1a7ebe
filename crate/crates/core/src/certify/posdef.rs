//! Positive-definiteness of `C - theta B` by factorization.

use crate::error::{Error, Result};
use crate::fem::DiscreteSystem;
use crate::linalg::exact::fraction_free_ldlt;
use crate::linalg::ldlt::{factor, LdlScalar, LdlStop, Symbolic};
use crate::linalg::ordering::{self, is_permutation, OrderingKind};
use crate::linalg::sparse::CsrMatrix;
use crate::scalar::interval::{Interval, TriBool};
use crate::scalar::rational::Rational;

use super::{shifted_integer_matrix, shifted_interval_matrix, Evidence, Outcome};

fn permutation_for(
    s: &DiscreteSystem,
    kind: OrderingKind,
    given: Option<&[usize]>,
) -> Result<Vec<usize>> {
    match given {
        Some(p) => {
            if p.len() != s.n() || !is_permutation(p) {
                return Err(Error::InvalidArgument(
                    "stored permutation is not a permutation of the DOFs".into(),
                ));
            }
            Ok(p.to_vec())
        }
        None => Ok(ordering::compute(kind, &s.c.adjacency(), &s.dof_coords())),
    }
}

/// Exact factorization of `P (den C - num B) P^T`; the verdict is true iff
/// every pivot is positive. A zero or negative pivot gives `false` with its
/// position.
pub fn posdef_rational_lu(
    s: &DiscreteSystem,
    theta: &Rational,
    kind: OrderingKind,
    permutation: Option<&[usize]>,
) -> Result<Outcome> {
    let perm = permutation_for(s, kind, permutation)?;
    let a = shifted_integer_matrix(s, theta)?.permute_symmetric(&perm);
    let (res, _) = fraction_free_ldlt(&a, false);
    let verdict = if res.positive_definite() {
        TriBool::True
    } else {
        TriBool::False
    };
    let advice = res
        .failed_at
        .map(|k| format!("leading minor {} is not positive", k + 1));
    Ok(Outcome {
        verdict,
        advice,
        evidence: Evidence::RationalLu {
            ordering: kind,
            permutation: perm,
            multiplier: theta.denom().to_string(),
            pivots_checked: res.pivots_checked,
            failed_at: res.failed_at,
            pivot_signs: res.pivot_signs,
            pivot_digest: res.pivot_digest,
            max_bits: res.max_bits,
        },
    })
}

fn sign_char(x: &Interval) -> char {
    match x.positive() {
        Some(true) => '+',
        Some(false) if x.lo() == 0.0 && x.hi() == 0.0 => '0',
        Some(false) => '-',
        None => '?',
    }
}

/// Interval factorization; true iff every pivot is certified positive,
/// false iff a pivot is certified non-positive, indeterminate otherwise.
pub fn posdef_interval_ldlt(
    s: &DiscreteSystem,
    theta: &Rational,
    kind: OrderingKind,
    permutation: Option<&[usize]>,
) -> Outcome {
    let perm = match permutation_for(s, kind, permutation) {
        Ok(p) => p,
        Err(e) => {
            return Outcome {
                verdict: TriBool::Indeterminate,
                advice: Some(e.to_string()),
                evidence: Evidence::IntervalLdlt {
                    ordering: kind,
                    permutation: permutation.map(<[usize]>::to_vec).unwrap_or_default(),
                    pivots_checked: 0,
                    failed_at: None,
                    pivot_signs: String::new(),
                    min_pivot: None,
                },
            }
        }
    };
    let a = shifted_interval_matrix(s, theta).permute_symmetric(&perm);
    let (verdict, d, failed_at, advice) = interval_pivots(&a);
    let min_pivot = d.iter().copied().min_by(|x, y| x.lo().total_cmp(&y.lo()));
    Outcome {
        verdict,
        advice,
        evidence: Evidence::IntervalLdlt {
            ordering: kind,
            permutation: perm,
            pivots_checked: d.len(),
            failed_at,
            pivot_signs: d.iter().map(sign_char).collect(),
            min_pivot,
        },
    }
}

/// Positive-definiteness verdict for a symmetric interval matrix in the
/// given order, with the pivots computed so far.
pub fn interval_pivots(
    a: &CsrMatrix<Interval>,
) -> (TriBool, Vec<Interval>, Option<usize>, Option<String>) {
    let sym = Symbolic::analyze(a);
    match factor(a, &sym, true) {
        Ok(f) => (TriBool::True, f.d, None, None),
        Err((LdlStop::NonPositive { index }, d)) => (
            TriBool::False,
            d,
            Some(index),
            Some(format!("pivot {} is certainly not positive", index + 1)),
        ),
        Err((LdlStop::Undecided { index } | LdlStop::Breakdown { index }, d)) => (
            TriBool::Indeterminate,
            d,
            Some(index),
            Some(format!(
                "pivot {} straddles zero; use the exact back-end",
                index + 1
            )),
        ),
    }
}
