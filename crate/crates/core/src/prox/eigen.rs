use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenvalues below this magnitude count as zero when computing ranks.
pub const RANK_TOL: f64 = 1e-12;

/// Symmetric eigendecomposition `A = Q diag(d) Q^T` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    /// Decomposes the symmetric part of `a` (only the lower triangle is read).
    pub fn new(a: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(a.clone());
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        EigenDecomposition {
            eigenvalues,
            eigenvectors,
        }
    }

    /// `Q diag(f(d_i)) Q^T`, returned exactly symmetric.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mapped = self.eigenvalues.map(f);
        self.reconstruct_with(&mapped)
    }

    pub fn reconstruct_with(&self, values: &DVector<f64>) -> DMatrix<f64> {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (mut col, &v) in scaled.column_iter_mut().zip(values.iter()) {
            col *= v;
        }
        let mut out = scaled * q.transpose();
        crate::types::symmetrize(&mut out);
        out
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.reconstruct_with(&self.eigenvalues)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Number of eigenvalues of the symmetric matrix `a` above [`RANK_TOL`] in magnitude.
pub fn numerical_rank(a: &DMatrix<f64>) -> usize {
    EigenDecomposition::new(a)
        .eigenvalues
        .iter()
        .filter(|d| d.abs() > RANK_TOL)
        .count()
}
