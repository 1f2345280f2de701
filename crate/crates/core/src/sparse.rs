//! Compressed sparse row storage and the sparse-dense products NMF needs.

use ndarray::Array2;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from per-row `(column, value)` lists. Entries within a
    /// row must have strictly increasing columns below `n_cols`.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in &rows {
            for w in row.windows(2) {
                assert!(w[0].0 < w[1].0, "row entries must be sorted by column");
            }
            for &(c, v) in row {
                assert!(c < n_cols, "column {c} out of range");
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            n_rows: rows.len(),
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(dense: &Array2<f64>) -> Self {
        let rows = dense
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(c, v)| (c, *v))
                    .collect()
            })
            .collect();
        Self::from_rows(dense.ncols(), rows)
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_rows, self.n_cols));
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Mean over all `n_rows * n_cols` entries, zeros included.
    pub fn mean(&self) -> f64 {
        let cells = self.n_rows * self.n_cols;
        if cells == 0 {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / cells as f64
    }

    /// `self · rhs` for dense `rhs` of shape `n_cols × k`.
    pub fn mul_dense(&self, rhs: &Array2<f64>) -> Array2<f64> {
        assert_eq!(rhs.nrows(), self.n_cols);
        let k = rhs.ncols();
        let mut out = Array2::zeros((self.n_rows, k));
        for i in 0..self.n_rows {
            let mut out_row = out.row_mut(i);
            for (j, v) in self.row(i) {
                out_row.scaled_add(v, &rhs.row(j));
            }
        }
        out
    }

    /// `selfᵀ · rhs` for dense `rhs` of shape `n_rows × k`.
    pub fn t_mul_dense(&self, rhs: &Array2<f64>) -> Array2<f64> {
        assert_eq!(rhs.nrows(), self.n_rows);
        let k = rhs.ncols();
        let mut out = Array2::zeros((self.n_cols, k));
        for i in 0..self.n_rows {
            let rhs_row = rhs.row(i);
            for (j, v) in self.row(i) {
                out.row_mut(j).scaled_add(v, &rhs_row);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> CsrMatrix {
        CsrMatrix::from_rows(3, vec![vec![(0, 1.0), (2, 2.0)], vec![], vec![(1, 3.0)]])
    }

    #[test]
    fn dense_round_trip() {
        let m = sample();
        assert_eq!(CsrMatrix::from_dense(&m.to_dense()), m);
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn products_match_dense() {
        let m = sample();
        let b = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        assert_eq!(m.mul_dense(&b), m.to_dense().dot(&b));
        assert_eq!(m.t_mul_dense(&b), m.to_dense().t().dot(&b));
    }

    #[test]
    fn mean_counts_implicit_zeros() {
        assert_eq!(sample().mean(), 6.0 / 9.0);
    }
}
