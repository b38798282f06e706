//! Fréchet distance between Gaussian fits of two embedding sets.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const PSD_TOLERANCE: f64 = 1e-6;

/// Mean and covariance of a set of embeddings.
///
/// When built from samples, the centered sample matrix is kept as well:
/// with `F = (X − μ) / sqrt(n − 1)` the covariance is `FᵀF`, which lets
/// [`frechet_distance`] work in sample space instead of forming and
/// decomposing `D × D` matrices.
#[derive(Clone, Debug)]
pub struct EmbeddingStats {
    pub mean: DVector<f64>,
    pub count: usize,
    covariance: Option<DMatrix<f64>>,
    factor: Option<DMatrix<f64>>,
}

impl EmbeddingStats {
    pub fn from_embeddings(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::validation(
                "embeddings",
                format!("need at least 2 samples, got {n}"),
            ));
        }
        let dim = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::LengthMismatch(dim, r.len()));
        }
        let mut mean = DVector::zeros(dim);
        for r in rows {
            mean += DVector::from_column_slice(r);
        }
        mean /= n as f64;
        let norm = 1.0 / ((n - 1) as f64).sqrt();
        let factor = DMatrix::from_fn(n, dim, |i, j| (rows[i][j] - mean[j]) * norm);
        Ok(Self {
            mean,
            count: n,
            covariance: None,
            factor: Some(factor),
        })
    }

    /// Stats from an explicit mean and covariance.
    pub fn from_moments(
        mean: DVector<f64>,
        covariance: DMatrix<f64>,
        count: usize,
    ) -> Result<Self> {
        if covariance.nrows() != mean.len() || covariance.ncols() != mean.len() {
            return Err(Error::LengthMismatch(mean.len(), covariance.nrows()));
        }
        if count < 2 {
            return Err(Error::validation("embeddings", "count must be at least 2"));
        }
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > 1e-9 * covariance.amax().max(1.0) {
            return Err(Error::validation(
                "covariance",
                format!("not symmetric (max deviation {asym:e})"),
            ));
        }
        Ok(Self {
            mean,
            count,
            covariance: Some(covariance),
            factor: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        match (&self.covariance, &self.factor) {
            (Some(c), _) => c.clone(),
            (None, Some(f)) => f.transpose() * f,
            (None, None) => unreachable!("stats always hold a covariance or a factor"),
        }
    }

    fn trace(&self) -> f64 {
        match (&self.covariance, &self.factor) {
            (Some(c), _) => c.trace(),
            (None, Some(f)) => f.norm_squared(),
            (None, None) => unreachable!(),
        }
    }
}

/// `‖μa − μb‖² + Tr(Σa + Σb − 2 (Σa Σb)^{1/2})`, clamped at zero.
pub fn frechet_distance(a: &EmbeddingStats, b: &EmbeddingStats) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::LengthMismatch(a.dim(), b.dim()));
    }
    let mean_term = (&a.mean - &b.mean).norm_squared();
    let cross = match (&a.factor, &b.factor) {
        (Some(fa), Some(fb)) if a.covariance.is_none() && b.covariance.is_none() => {
            // Nonzero eigenvalues of Σa Σb are the squared singular values
            // of Fa Fbᵀ, so the trace of the square root is its nuclear norm.
            (fa * fb.transpose()).singular_values().sum()
        }
        _ => trace_sqrt_product(&a.covariance(), &b.covariance())?,
    };
    Ok((mean_term + a.trace() + b.trace() - 2.0 * cross).max(0.0))
}

/// `Tr((A B)^{1/2})` for symmetric PSD `A`, `B` via `A^{1/2} B A^{1/2}`.
pub fn trace_sqrt_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let sqrt_a = psd_sqrt(a)?;
    let m = &sqrt_a * b * &sqrt_a;
    let m = (&m + m.transpose()) * 0.5;
    let eig = checked_eigenvalues(m)?;
    Ok(eig.iter().map(|&l| l.max(0.0).sqrt()).sum())
}

fn checked_eigenvalues(m: DMatrix<f64>) -> Result<DVector<f64>> {
    let eig = SymmetricEigen::new(m).eigenvalues;
    check_psd(&eig)?;
    Ok(eig)
}

fn check_psd(eig: &DVector<f64>) -> Result<()> {
    let max = eig.max().max(1.0);
    let min = eig.min();
    if min < -PSD_TOLERANCE * max {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    Ok(())
}

fn psd_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (a + a.transpose()) * 0.5;
    let SymmetricEigen {
        eigenvectors,
        eigenvalues,
    } = SymmetricEigen::new(sym);
    check_psd(&eigenvalues)?;
    let roots = eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eigenvectors * DMatrix::from_diagonal(&roots) * eigenvectors.transpose())
}
