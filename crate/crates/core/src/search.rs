//! Non-validated exclusion search that discovers the point lists driving
//! the certified domain chain. Every decision here uses floating-point
//! eigenvalues; the chain it emits must be certified separately.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::discrete_threshold_for;
use crate::certify::lanczos::lanczos_estimate;
use crate::embedded::{P_LOWER, P_UPPER};
use crate::error::{Error, Result};
use crate::fem::discretize;
use crate::geometry::{
    build_domain, exclusion_union, DomainJson, DomainKind, GridPoint, SubdomainSpec,
};
use crate::scalar::rational::{from_f64, to_f64};

/// Scores within this distance count as equal in [`select_point`].
pub const SCORE_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_ROUNDS: usize = 30;
const SEED: u64 = 0x5eed;

/// The `k` smallest eigenvalues of the discrete problem on `d`, ascending,
/// in outer-triangle units.
pub fn fast_eigs(d: &SubdomainSpec, k: usize) -> Result<Vec<f64>> {
    let s = discretize(d)?;
    let pairs = lanczos_estimate(&s, k, SEED)?;
    Ok(pairs.iter().map(|p| s.to_outer_units(p.value)).collect())
}

/// Smallest mixed eigenvalue on `d` in outer-triangle units; no rigor.
pub fn fast_lowest_eig(d: &SubdomainSpec) -> Result<f64> {
    Ok(fast_eigs(d, 1)?[0])
}

#[derive(Debug, Clone)]
pub struct SearchState {
    pub n: u32,
    pub k: usize,
    pub history_lower: Vec<GridPoint>,
    pub history_upper: Vec<GridPoint>,
    /// Cached eigenvalues keyed by domain shape; `None` marks a domain with
    /// no degrees of freedom.
    cache: HashMap<(DomainKind, Vec<GridPoint>, GridPoint), Option<f64>>,
    pub evaluations: usize,
}

impl SearchState {
    pub fn new(n: u32) -> Self {
        SearchState {
            n,
            k: 0,
            history_lower: Vec::new(),
            history_upper: Vec::new(),
            cache: HashMap::new(),
            evaluations: 0,
        }
    }

    fn history(&self, kind: DomainKind) -> &[GridPoint] {
        match kind {
            DomainKind::Upper => &self.history_lower,
            _ => &self.history_upper,
        }
    }

    /// Eigenvalue of `build_domain(kind, history(kind), p)`.
    fn eig(&mut self, kind: DomainKind, p: GridPoint) -> Result<Option<f64>> {
        let key = (kind, self.history(kind).to_vec(), p);
        if let Some(v) = self.cache.get(&key) {
            return Ok(*v);
        }
        let v = eval_domain(kind, &key.1, p, self.n)?;
        self.evaluations += 1;
        self.cache.insert(key, v);
        Ok(v)
    }

    fn eig_many(&mut self, kind: DomainKind, points: &[GridPoint]) -> Result<Vec<Option<f64>>> {
        let hist = self.history(kind).to_vec();
        let n = self.n;
        let missing: Vec<GridPoint> = points
            .iter()
            .copied()
            .filter(|p| !self.cache.contains_key(&(kind, hist.clone(), *p)))
            .collect();
        let fresh: Vec<Result<Option<f64>>> = missing
            .par_iter()
            .map(|p| eval_domain(kind, &hist, *p, n))
            .collect();
        for (p, v) in missing.into_iter().zip(fresh) {
            self.evaluations += 1;
            self.cache.insert((kind, hist.clone(), p), v?);
        }
        Ok(points
            .iter()
            .map(|p| self.cache[&(kind, hist.clone(), *p)])
            .collect())
    }
}

fn eval_domain(kind: DomainKind, hist: &[GridPoint], p: GridPoint, n: u32) -> Result<Option<f64>> {
    let d = match build_domain(kind, hist, p, n) {
        Ok(d) => d,
        Err(Error::EmptyDomain) => return Ok(None),
        Err(e) => return Err(e),
    };
    if d.cells.is_empty() {
        return Ok(None);
    }
    match discretize(&d) {
        Ok(s) if s.n() == 0 => Ok(None),
        Ok(_) => fast_lowest_eig(&d).map(Some),
        Err(Error::EmptyDomain) => Ok(None),
        Err(e) => Err(e),
    }
}

fn admissible(v: Option<f64>, threshold: f64) -> bool {
    v.is_some_and(|x| x > threshold)
}

/// Frontier of the admissible set for `kind`: upper test domains have an
/// up-left closed admissible set and report the lowest admissible point per
/// column; lower test domains mirror this with the highest point per column.
pub fn admissible_set(state: &mut SearchState, kind: DomainKind, v: f64) -> Result<Vec<GridPoint>> {
    let n = i64::from(state.n);
    let mut out = Vec::new();
    match kind {
        DomainKind::Upper => {
            let mut start = 0;
            for i in 0..=n {
                let mut found = None;
                for j in start..=n - i {
                    if admissible(state.eig(kind, GridPoint::new(i, j))?, v) {
                        found = Some(j);
                        break;
                    }
                }
                match found {
                    Some(j) => {
                        out.push(GridPoint::new(i, j));
                        start = j;
                    }
                    None => break,
                }
            }
        }
        DomainKind::Lower => {
            let mut prev: Option<i64> = None;
            for i in 0..=n {
                let mut j = match prev {
                    Some(pj) => pj.min(n - i),
                    None => {
                        if !admissible(state.eig(kind, GridPoint::new(i, 0))?, v) {
                            continue;
                        }
                        0
                    }
                };
                while j < n - i && admissible(state.eig(kind, GridPoint::new(i, j + 1))?, v) {
                    j += 1;
                }
                out.push(GridPoint::new(i, j));
                prev = Some(j);
            }
        }
        DomainKind::Full => {
            return Err(Error::InvalidArgument(
                "the full domain has no frontier".into(),
            ))
        }
    }
    Ok(out)
}

/// Index of the largest score, ties within [`SCORE_TOLERANCE`] going to the
/// lexicographically smallest point.
pub fn select_by_score(points: &[GridPoint], scores: &[Option<f64>]) -> Option<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&t| points[t]);
    let mut best: Option<(usize, f64)> = None;
    for t in order {
        let Some(x) = scores[t] else { continue };
        if best.is_none_or(|(_, b)| x > b + SCORE_TOLERANCE) {
            best = Some((t, x));
        }
    }
    best.map(|(t, _)| t)
}

/// The frontier point whose partner domain has the largest eigenvalue.
/// Returns the point and that eigenvalue.
pub fn select_point(
    state: &mut SearchState,
    kind: DomainKind,
    s: &[GridPoint],
) -> Result<Option<(GridPoint, f64)>> {
    let partner = match kind {
        DomainKind::Upper => DomainKind::Lower,
        DomainKind::Lower => DomainKind::Upper,
        DomainKind::Full => {
            return Err(Error::InvalidArgument(
                "the full domain has no partner".into(),
            ))
        }
    };
    let scores = state.eig_many(partner, s)?;
    Ok(select_by_score(s, &scores).map(|t| (s[t], scores[t].expect("selected score exists"))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStatus {
    Success,
    Failed,
}

/// One half-round: which kind of point was chosen and from what frontier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfRound {
    pub round: usize,
    /// `upper` when choosing `p_U`, `lower` when choosing `p_L`.
    pub choosing: String,
    pub frontier: Vec<GridPoint>,
    pub chosen: GridPoint,
    pub chosen_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub status: SearchStatus,
    pub n: u32,
    /// Continuous threshold `V`.
    pub threshold: f64,
    /// Bound the fast discrete eigenvalues are compared against.
    pub discrete_threshold: f64,
    pub p_lower: Vec<GridPoint>,
    pub p_upper: Vec<GridPoint>,
    pub rounds: usize,
    pub evaluations: usize,
    pub trace: Vec<HalfRound>,
    /// Domains whose eigenvalue must exceed the threshold, in the order they
    /// were constructed; the last is the closing domain.
    pub chain: Vec<DomainJson>,
    pub diagnostic: Option<String>,
    pub matches_embedded: bool,
}

/// Runs the alternating search with the default round cap.
pub fn run_search(n: u32, v: f64) -> Result<SearchReport> {
    run_search_with(n, v, DEFAULT_MAX_ROUNDS)
}

/// Discrete eigenvalues are compared with [`discrete_threshold_for`]`(v, n)`
/// rather than `v`, so that every emitted domain can be certified.
pub fn run_search_with(n: u32, v: f64, max_rounds: usize) -> Result<SearchReport> {
    let lambda = discrete_threshold_for(&from_f64(v), n)?;
    run_search_at(n, v, to_f64(&lambda), max_rounds)
}

/// Search with an explicit discrete threshold `lambda`; `v` is only reported.
pub fn run_search_at(n: u32, v: f64, lambda: f64, max_rounds: usize) -> Result<SearchReport> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "grid size must be at least 2".into(),
        ));
    }
    let mut st = SearchState::new(n);
    let mut trace = Vec::new();
    let mut chain = Vec::new();
    let finish = |st: &SearchState,
                  trace: Vec<HalfRound>,
                  chain: Vec<DomainJson>,
                  status,
                  rounds,
                  diag: Option<String>| {
        let matches_embedded = status == SearchStatus::Success
            && n == crate::geometry::DEFAULT_N
            && st.history_lower == P_LOWER
            && st.history_upper == P_UPPER;
        SearchReport {
            status,
            n,
            threshold: v,
            discrete_threshold: lambda,
            p_lower: st.history_lower.clone(),
            p_upper: st.history_upper.clone(),
            rounds,
            evaluations: st.evaluations,
            trace,
            chain,
            diagnostic: diag,
            matches_embedded,
        }
    };
    for k in 0..max_rounds {
        st.k = k;
        let excluded_before = exclusion_sizes(&st)?;
        // Choose p_U: the upper test domain excludes R_L(p).
        let s_upper = admissible_set(&mut st, DomainKind::Upper, lambda)?;
        let pick = if s_upper.is_empty() {
            None
        } else {
            select_point(&mut st, DomainKind::Upper, &s_upper)?
        };
        let upper_empty = pick.is_none();
        let (pu, score_u) = pick.map_or((GridPoint::ORIGIN, None), |(p, x)| (p, Some(x)));
        if !upper_empty {
            chain.push(build_domain(DomainKind::Upper, &st.history_lower, pu, n)?.to_json());
        }
        st.history_upper.push(pu);
        trace.push(HalfRound {
            round: k,
            choosing: "upper".into(),
            frontier: s_upper,
            chosen: pu,
            chosen_score: score_u,
        });
        if score_u.is_some_and(|x| x > lambda) {
            chain.push(
                build_domain(DomainKind::Lower, &st.history_upper, GridPoint::ORIGIN, n)?.to_json(),
            );
            return Ok(finish(
                &st,
                trace,
                chain,
                SearchStatus::Success,
                k + 1,
                None,
            ));
        }

        // Choose p_L: the lower test domain excludes R_U(p) on top of U^(k+1).
        let s_lower = admissible_set(&mut st, DomainKind::Lower, lambda)?;
        if s_lower.is_empty() && upper_empty {
            return Ok(finish(
                &st,
                trace,
                chain,
                SearchStatus::Failed,
                k + 1,
                Some(format!("no admissible point for either kind in round {k}")),
            ));
        }
        let pick = if s_lower.is_empty() {
            None
        } else {
            select_point(&mut st, DomainKind::Lower, &s_lower)?
        };
        let (pl, score_l) = pick.map_or((GridPoint::ORIGIN, None), |(p, x)| (p, Some(x)));
        if pick.is_some() {
            chain.push(build_domain(DomainKind::Lower, &st.history_upper, pl, n)?.to_json());
        }
        st.history_lower.push(pl);
        trace.push(HalfRound {
            round: k,
            choosing: "lower".into(),
            frontier: s_lower,
            chosen: pl,
            chosen_score: score_l,
        });
        if score_l.is_some_and(|x| x > lambda) {
            chain.push(
                build_domain(DomainKind::Upper, &st.history_lower, GridPoint::ORIGIN, n)?.to_json(),
            );
            return Ok(finish(
                &st,
                trace,
                chain,
                SearchStatus::Success,
                k + 1,
                None,
            ));
        }
        if exclusion_sizes(&st)? == excluded_before {
            return Ok(finish(
                &st,
                trace,
                chain,
                SearchStatus::Failed,
                k + 1,
                Some(format!("round {k} did not enlarge either exclusion region")),
            ));
        }
    }
    Ok(finish(
        &st,
        trace,
        chain,
        SearchStatus::Failed,
        max_rounds,
        Some(format!("round cap {max_rounds} reached")),
    ))
}

fn exclusion_sizes(st: &SearchState) -> Result<(usize, usize)> {
    let l = exclusion_union(DomainKind::Upper, &st.history_lower, st.n)?.len();
    let u = exclusion_union(DomainKind::Lower, &st.history_upper, st.n)?.len();
    Ok((l, u))
}

/// Two-panel picture of a half-round: the chosen test domain and the
/// partner domain it was scored on.
pub fn round_svg(report: &SearchReport, index: usize) -> Result<String> {
    let h = report
        .trace
        .get(index)
        .ok_or_else(|| Error::InvalidArgument(format!("no half-round {index}")))?;
    let n = report.n;
    let nu = report.trace[..index]
        .iter()
        .filter(|t| t.choosing == "upper")
        .count();
    let nl = report.trace[..index]
        .iter()
        .filter(|t| t.choosing == "lower")
        .count();
    let hist_l = &report.p_lower[..nl];
    let hist_u = &report.p_upper[..nu];
    let (test, partner) = if h.choosing == "upper" {
        (
            build_domain(DomainKind::Upper, hist_l, h.chosen, n)?,
            build_domain(DomainKind::Lower, hist_u, h.chosen, n)?,
        )
    } else {
        (
            build_domain(DomainKind::Lower, hist_u, h.chosen, n)?,
            build_domain(DomainKind::Upper, hist_l, h.chosen, n)?,
        )
    };
    Ok(crate::geometry::render_panels(&[
        (&test, Some(h.chosen)),
        (&partner, Some(h.chosen)),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_the_smaller_point() {
        let pts = [
            GridPoint::new(3, 1),
            GridPoint::new(2, 5),
            GridPoint::new(2, 4),
        ];
        let s = [Some(1.0), Some(1.0 + 1e-12), Some(0.5)];
        assert_eq!(select_by_score(&pts, &s), Some(1));
        let s = [Some(2.0), Some(1.0), None];
        assert_eq!(select_by_score(&pts, &s), Some(0));
        assert_eq!(select_by_score(&pts[..1], &[Some(0.0)]), Some(0));
        assert_eq!(select_by_score(&pts[..1], &[None]), None);
    }
}
