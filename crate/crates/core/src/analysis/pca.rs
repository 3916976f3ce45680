use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Principal axes of a point cloud, sorted by decreasing variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `components[i]` is the unit axis of the `i`-th component.
    pub components: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
    pub total_variance: f64,
}

impl Pca {
    pub fn fit(points: &[Vec<f64>], n_components: usize) -> Result<Self> {
        let n = points.len();
        let h = points.first().map_or(0, |p| p.len());
        if n_components == 0 || n_components > h {
            return Err(Error::InvalidInput(format!("{n_components} components requested from {h}-dimensional data")));
        }
        if n < n_components.max(2) {
            return Err(Error::InvalidInput(format!("{n} points are too few for {n_components} components")));
        }
        if points.iter().any(|p| p.len() != h || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput("points must share one dimension and be finite".into()));
        }
        let mut mean = vec![0.0; h];
        for p in points {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v / n as f64;
            }
        }
        let centered = DMatrix::from_fn(n, h, |i, j| points[i][j] - mean[j]);
        let cov = (centered.transpose() * &centered) / (n - 1) as f64;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..h).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let total_variance = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        let components = order[..n_components]
            .iter()
            .map(|&k| {
                let col = eig.eigenvectors.column(k);
                // Fix the sign so the largest-magnitude entry is positive.
                let big = col.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
                let s = if big < 0.0 { -1.0 } else { 1.0 };
                col.iter().map(|v| v * s).collect()
            })
            .collect();
        let variances = order[..n_components].iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
        Ok(Self { mean, components, variances, total_variance })
    }

    /// Fraction of total variance captured by each component.
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        if self.total_variance <= 0.0 {
            return vec![0.0; self.variances.len()];
        }
        self.variances.iter().map(|v| v / self.total_variance).collect()
    }

    pub fn cumulative_explained(&self) -> Vec<f64> {
        self.explained_variance_ratio()
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect()
    }

    pub fn project(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        points
            .iter()
            .map(|p| {
                self.components
                    .iter()
                    .map(|c| c.iter().zip(p).zip(&self.mean).map(|((a, x), m)| a * (x - m)).sum())
                    .collect()
            })
            .collect()
    }
}
