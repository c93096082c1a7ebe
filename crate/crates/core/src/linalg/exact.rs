//! Fraction-free multifrontal `L D L^T` over the integers.
//!
//! For column `j` let `T(j)` be its subtree in the elimination tree and `E` the
//! strict descendants. Subtrees of distinct children are uncoupled, so
//! `det A[E, E]` is the product of the children's subtree determinants. Every
//! front entry is kept as that determinant times the corresponding Schur
//! complement entry, which is an integer by Sylvester's identity; one
//! elimination step is then a Bareiss update with an exact division. Pivot
//! `j` equals `D_j / D_E` with `D_j = det A[T(j), T(j)]`, so positivity of all
//! pivots is positivity of all the `D_j`.

use rug::Integer;
use sha2::{Digest, Sha256};

use super::sparse::CsrMatrix;

/// Result of an exact factorization attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLdl {
    pub n: usize,
    /// Pivots processed (all of them unless a non-positive one was found).
    pub pivots_checked: usize,
    /// First pivot (in elimination order) that is not positive.
    pub failed_at: Option<usize>,
    /// `+`, `-` or `0` per processed pivot.
    pub pivot_signs: String,
    /// SHA-256 over the subtree determinants in hexadecimal.
    pub pivot_digest: String,
    /// Bit length of the largest subtree determinant.
    pub max_bits: u64,
}

impl ExactLdl {
    pub fn positive_definite(&self) -> bool {
        self.failed_at.is_none() && self.pivots_checked == self.n
    }
}

struct Update {
    rows: Vec<usize>,
    vals: Vec<Integer>,
    det: Integer,
}

#[inline]
fn packed(a: usize, b: usize) -> usize {
    // a >= b
    a * (a + 1) / 2 + b
}

/// Column structures of `L` (strict lower part, ascending) and the
/// elimination tree of a symmetric pattern.
pub fn column_structure<T: Clone>(a: &CsrMatrix<T>) -> (Vec<Option<usize>>, Vec<Vec<usize>>) {
    let n = a.n();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut flag = vec![usize::MAX; n];
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for k in 0..n {
        flag[k] = k;
        for (j, _) in a.row(k) {
            if j >= k {
                continue;
            }
            let mut i = j;
            while flag[i] != k {
                if parent[i].is_none() {
                    parent[i] = Some(k);
                }
                cols[i].push(k);
                flag[i] = k;
                i = parent[i].expect("set above");
            }
        }
    }
    (parent, cols)
}

/// Factorizes a symmetric integer matrix given with both triangles, in the
/// given order, stopping at the first pivot that is not positive.
/// `keep_dets` returns `(D_j, D_E)` per pivot for inspection.
pub fn fraction_free_ldlt(
    a: &CsrMatrix<i64>,
    keep_dets: bool,
) -> (ExactLdl, Vec<(Integer, Integer)>) {
    let n = a.n();
    let (parent, cols) = column_structure(a);
    let mut pending: Vec<Vec<Update>> = (0..n).map(|_| Vec::new()).collect();
    let mut hasher = Sha256::new();
    let mut signs = String::with_capacity(n);
    let mut max_bits = 0u64;
    let mut dets = Vec::new();
    let mut pos = vec![usize::MAX; n];

    for j in 0..n {
        let children = std::mem::take(&mut pending[j]);
        let mut front = Vec::with_capacity(cols[j].len() + 1);
        front.push(j);
        front.extend_from_slice(&cols[j]);
        let m = front.len();
        for (t, &r) in front.iter().enumerate() {
            pos[r] = t;
        }

        // D_E and the cofactors D_E / D_c as products of the other children.
        let k = children.len();
        let mut prefix = vec![Integer::from(1)];
        for c in &children {
            let next = Integer::from(prefix.last().expect("nonempty") * &c.det);
            prefix.push(next);
        }
        let d_e = prefix[k].clone();
        let mut suffix = Integer::from(1);
        let mut cof = vec![Integer::new(); k];
        for t in (0..k).rev() {
            cof[t] = Integer::from(&prefix[t] * &suffix);
            suffix *= &children[t].det;
        }

        let mut x: Vec<Integer> = (0..m * (m + 1) / 2).map(|_| Integer::new()).collect();
        for (r, v) in a.row(j) {
            if r < j {
                continue;
            }
            let t = pos[r];
            x[packed(t, 0)] += Integer::from(&d_e * *v);
        }
        for (c, up) in children.into_iter().enumerate() {
            let map: Vec<usize> = up.rows.iter().map(|r| pos[*r]).collect();
            let one = cof[c] == 1;
            let mut idx = 0;
            for (s, &ps) in map.iter().enumerate() {
                for &pt in map.iter().take(s + 1) {
                    let (hi, lo) = if ps >= pt { (ps, pt) } else { (pt, ps) };
                    let v = &up.vals[idx];
                    if one {
                        x[packed(hi, lo)] += v;
                    } else {
                        x[packed(hi, lo)] += Integer::from(v * &cof[c]);
                    }
                    idx += 1;
                }
            }
        }

        let d_j = x[0].clone();
        let sign = d_j.cmp0();
        max_bits = max_bits.max(u64::from(d_j.significant_bits()));
        hasher.update(d_j.to_string_radix(16).as_bytes());
        hasher.update(b"\n");
        if keep_dets {
            dets.push((d_j.clone(), d_e.clone()));
        }
        match sign {
            std::cmp::Ordering::Greater => signs.push('+'),
            std::cmp::Ordering::Less => signs.push('-'),
            std::cmp::Ordering::Equal => signs.push('0'),
        }
        if sign != std::cmp::Ordering::Greater {
            let out = ExactLdl {
                n,
                pivots_checked: j + 1,
                failed_at: Some(j),
                pivot_signs: signs,
                pivot_digest: hex::encode(hasher.finalize()),
                max_bits,
            };
            return (out, dets);
        }

        if let Some(p) = parent[j] {
            let r = m - 1;
            let mut vals: Vec<Integer> = Vec::with_capacity(r * (r + 1) / 2);
            let divide = d_e != 1;
            for s in 1..m {
                let xs0 = &x[packed(s, 0)];
                for t in 1..=s {
                    let mut v = Integer::from(&d_j * &x[packed(s, t)]);
                    v -= Integer::from(xs0 * &x[packed(t, 0)]);
                    if divide {
                        v.div_exact_mut(&d_e);
                    }
                    vals.push(v);
                }
            }
            pending[p].push(Update {
                rows: front[1..].to_vec(),
                vals,
                det: d_j,
            });
        }
    }
    let out = ExactLdl {
        n,
        pivots_checked: n,
        failed_at: None,
        pivot_signs: signs,
        pivot_digest: hex::encode(hasher.finalize()),
        max_bits,
    };
    (out, dets)
}
