//! Fill-reducing symmetric orderings.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingKind {
    Natural,
    MinimumDegree,
    /// Coordinate bisection along grid lines, minimum degree on the leaves.
    NestedDissection,
}

/// Minimum-degree ordering on the explicit elimination graph. Ties go to
/// the smallest index, so the result is deterministic.
pub fn minimum_degree(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut g: Vec<Vec<usize>> = adj
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<usize> = row.iter().copied().filter(|&j| j != i).collect();
            r.sort_unstable();
            r.dedup();
            r
        })
        .collect();
    let mut eliminated = vec![false; n];
    let mut queue: std::collections::BTreeSet<(usize, usize)> =
        (0..n).map(|i| (g[i].len(), i)).collect();
    let mut order = Vec::with_capacity(n);
    while let Some((_, v)) = queue.pop_first() {
        eliminated[v] = true;
        order.push(v);
        let nbrs = std::mem::take(&mut g[v]);
        for &u in &nbrs {
            queue.remove(&(g[u].len(), u));
            let merged = merge_without(&g[u], &nbrs, v, u);
            g[u] = merged;
            queue.insert((g[u].len(), u));
        }
    }
    debug_assert!(eliminated.iter().all(|e| *e));
    order
}

/// Sorted union of `a` and `b`, dropping `drop1` and `drop2`.
fn merge_without(a: &[usize], b: &[usize], drop1: usize, drop2: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut x, mut y) = (0, 0);
    while x < a.len() || y < b.len() {
        let v = if y >= b.len() || (x < a.len() && a[x] < b[y]) {
            x += 1;
            a[x - 1]
        } else if x >= a.len() || b[y] < a[x] {
            y += 1;
            b[y - 1]
        } else {
            x += 1;
            y += 1;
            a[x - 1]
        };
        if v != drop1 && v != drop2 {
            out.push(v);
        }
    }
    out
}

/// Nested dissection for DOFs with known coordinates, where every coupling
/// joins DOFs whose coordinates differ by at most one in each direction.
/// Any grid line of constant coordinate is then a separator; even lines are
/// preferred because they carry fewer DOFs.
pub fn nested_dissection(adj: &[Vec<usize>], coords: &[(i64, i64)], leaf: usize) -> Vec<usize> {
    assert_eq!(adj.len(), coords.len());
    let mut order = Vec::with_capacity(adj.len());
    let all: Vec<usize> = (0..adj.len()).collect();
    dissect(adj, coords, all, leaf.max(4), &mut order);
    order
}

fn dissect(
    adj: &[Vec<usize>],
    coords: &[(i64, i64)],
    ids: Vec<usize>,
    leaf: usize,
    order: &mut Vec<usize>,
) {
    if ids.len() <= leaf {
        order_leaf(adj, &ids, order);
        return;
    }
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for &v in &ids {
        let (x, y) = coords[v];
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let use_x = xmax - xmin >= ymax - ymin;
    let key = |v: usize| if use_x { coords[v].0 } else { coords[v].1 };
    let mut ks: Vec<i64> = ids.iter().map(|&v| key(v)).collect();
    ks.sort_unstable();
    let median = ks[ks.len() / 2];
    let mut cut = median - median.rem_euclid(2);
    let (lo, hi) = (ks[0], ks[ks.len() - 1]);
    if cut <= lo || cut >= hi {
        cut = median;
    }
    if cut <= lo || cut >= hi {
        order_leaf(adj, &ids, order);
        return;
    }
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut sep = Vec::new();
    for &v in &ids {
        match key(v).cmp(&cut) {
            std::cmp::Ordering::Less => left.push(v),
            std::cmp::Ordering::Greater => right.push(v),
            std::cmp::Ordering::Equal => sep.push(v),
        }
    }
    dissect(adj, coords, left, leaf, order);
    dissect(adj, coords, right, leaf, order);
    order.extend(sep);
}

fn order_leaf(adj: &[Vec<usize>], ids: &[usize], order: &mut Vec<usize>) {
    let mut local = std::collections::HashMap::with_capacity(ids.len());
    for (k, &v) in ids.iter().enumerate() {
        local.insert(v, k);
    }
    let sub: Vec<Vec<usize>> = ids
        .iter()
        .map(|&v| {
            adj[v]
                .iter()
                .filter_map(|u| local.get(u).copied())
                .collect()
        })
        .collect();
    for k in minimum_degree(&sub) {
        order.push(ids[k]);
    }
}

pub fn compute(kind: OrderingKind, adj: &[Vec<usize>], coords: &[(i64, i64)]) -> Vec<usize> {
    match kind {
        OrderingKind::Natural => (0..adj.len()).collect(),
        OrderingKind::MinimumDegree => minimum_degree(adj),
        OrderingKind::NestedDissection => nested_dissection(adj, coords, 48),
    }
}

pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &v in p {
        if v >= p.len() || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}
