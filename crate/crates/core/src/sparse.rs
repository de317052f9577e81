//! Compressed sparse row matrices of `f64`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            indptr: vec![0; n_rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Build from unordered `(column, value)` entries per row. Duplicate
    /// columns are summed and exact zeros are dropped.
    pub fn from_rows<R>(n_cols: usize, rows: R) -> Self
    where
        R: IntoIterator,
        R::Item: IntoIterator<Item = (usize, f64)>,
    {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for row in rows {
            buf.clear();
            buf.extend(row);
            buf.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < buf.len() {
                let col = buf[i].0;
                assert!(
                    col < n_cols,
                    "column {col} out of bounds for {n_cols} columns"
                );
                let mut v = 0.0;
                while i < buf.len() && buf[i].0 == col {
                    v += buf[i].1;
                    i += 1;
                }
                if v != 0.0 {
                    indices.push(col);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            n_rows: indptr.len() - 1,
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        Self::from_rows(
            n_cols,
            rows.iter().map(|r| {
                assert_eq!(r.len(), n_cols, "ragged dense input");
                r.iter().copied().enumerate()
            }),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (start, end) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[start..end], &self.values[start..end])
    }

    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (idx, val) = self.row(i);
        idx.iter().copied().zip(val.iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        idx.binary_search(&j).map_or(0.0, |p| val[p])
    }

    pub fn row_dot(&self, i: usize, dense: &[f64]) -> f64 {
        self.row_iter(i).map(|(j, v)| v * dense[j]).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows)
            .map(|i| {
                let mut row = vec![0.0; self.n_cols];
                for (j, v) in self.row_iter(i) {
                    row[j] = v;
                }
                row
            })
            .collect()
    }

    /// Apply `f` to every stored value of each row, given the row index.
    pub fn map_rows(&self, mut f: impl FnMut(usize, &[usize], &mut [f64])) -> Self {
        let mut out = self.clone();
        for i in 0..self.n_rows {
            let (start, end) = (self.indptr[i], self.indptr[i + 1]);
            f(i, &out.indices[start..end], &mut out.values[start..end]);
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_rows(self.n_cols, rows.iter().map(|&i| self.row_iter(i)))
    }

    /// Keep the given ascending columns, renumbered `0..columns.len()`.
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        let mut remap = vec![usize::MAX; self.n_cols];
        for (new, &old) in columns.iter().enumerate() {
            remap[old] = new;
        }
        Self::from_rows(
            columns.len(),
            (0..self.n_rows).map(|i| {
                self.row_iter(i)
                    .filter(|&(j, _)| remap[j] != usize::MAX)
                    .map(|(j, v)| (remap[j], v))
                    .collect::<Vec<_>>()
            }),
        )
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols];
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            sums[j] += v;
        }
        sums
    }

    /// Structural CSR checks: offsets monotone, columns strictly increasing
    /// within each row and in bounds.
    pub fn is_well_formed(&self) -> bool {
        self.indptr.len() == self.n_rows + 1
            && self.indptr[0] == 0
            && self.indptr[self.n_rows] == self.indices.len()
            && self.indices.len() == self.values.len()
            && self.indptr.windows(2).all(|w| w[0] <= w[1])
            && (0..self.n_rows).all(|i| {
                let (idx, _) = self.row(i);
                idx.windows(2).all(|w| w[0] < w[1]) && idx.iter().all(|&j| j < self.n_cols)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_sorted_merged_rows() {
        let m = SparseMatrix::from_rows(
            4,
            vec![vec![(3, 1.0), (0, 2.0), (3, 1.0)], vec![], vec![(1, 0.0)]],
        );
        assert!(m.is_well_formed());
        assert_eq!(m.n_rows(), 3);
        assert_eq!(m.row(0), (&[0, 3][..], &[2.0, 2.0][..]));
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 3), 2.0);
        assert_eq!(m.get(1, 3), 0.0);
    }

    #[test]
    fn dense_round_trip_and_selection() {
        let dense = vec![vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 0.0]];
        let m = SparseMatrix::from_dense(&dense);
        assert_eq!(m.to_dense(), dense);
        assert_eq!(
            m.select_columns(&[0, 2]).to_dense(),
            vec![vec![1.0, 2.0], vec![0.0, 0.0]]
        );
        assert_eq!(m.select_rows(&[1]).to_dense(), vec![vec![0.0, 3.0, 0.0]]);
        assert_eq!(m.column_sums(), vec![1.0, 3.0, 2.0]);
        assert_eq!(m.row_dot(0, &[1.0, 1.0, 0.5]), 2.0);
    }
}
