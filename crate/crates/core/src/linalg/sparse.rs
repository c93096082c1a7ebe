//! Compressed sparse row storage with both triangles of a symmetric matrix.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Clone> CsrMatrix<T> {
    /// Builds from `(row, col, value)` triplets, combining duplicates with `add`.
    /// Columns within a row come out sorted.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
        add: impl Fn(&T, &T) -> T,
    ) -> Self {
        let mut rows: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); n];
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            let row = &mut rows[i];
            match row.get_mut(&j) {
                Some(old) => *old = add(old, &v),
                None => {
                    row.insert(j, v);
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &T)> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(&self.values[r])
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&T> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        let cols = &self.col_idx[r.clone()];
        cols.binary_search(&j)
            .ok()
            .map(|k| &self.values[r.start + k])
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }

    /// `B[i][j] = A[perm[i]][perm[j]]`, i.e. `P A P^T` with `perm` listing
    /// old indices in new order.
    pub fn permute_symmetric(&self, perm: &[usize]) -> CsrMatrix<T> {
        assert_eq!(perm.len(), self.n);
        let mut inv = vec![0usize; self.n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut trip = Vec::with_capacity(self.nnz());
        for (i, j, v) in self.triplets() {
            trip.push((inv[i], inv[j], v.clone()));
        }
        CsrMatrix::from_triplets(self.n, trip, |a, _| a.clone())
    }

    /// Adjacency lists of the off-diagonal pattern.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
            .collect()
    }

    /// Principal submatrix on `keep` (in the given order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> CsrMatrix<T> {
        let mut pos = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            pos[old] = new;
        }
        let mut trip = Vec::new();
        for &old in keep {
            for (j, v) in self.row(old) {
                if pos[j] != usize::MAX {
                    trip.push((pos[old], pos[j], v.clone()));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), trip, |a, _| a.clone())
    }

    pub fn is_symmetric(&self) -> bool
    where
        T: PartialEq,
    {
        self.triplets().all(|(i, j, v)| self.get(j, i) == Some(v))
    }
}

impl CsrMatrix<f64> {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for (j, v) in self.row(i) {
                s += v * x[j];
            }
            y[i] = s;
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.triplets() {
            d[i][j] = *v;
        }
        d
    }
}
