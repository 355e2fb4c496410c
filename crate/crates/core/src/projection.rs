//! Two-dimensional PCA sketch of a handful of embeddings.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::embedding::Embedding;
use crate::error::{Error, Result};

/// Projects `points` onto their top two principal components. Signs are fixed
/// so the largest-magnitude coordinate of each component is positive.
pub fn pca_2d(points: &[&Embedding]) -> Result<Vec<[f64; 2]>> {
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let dim = points[0].dim();
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        return Err(Error::DimMismatch { expected: dim, actual: p.dim() });
    }
    let mut centered = DMatrix::<f64>::zeros(n, dim);
    for (i, p) in points.iter().enumerate() {
        for (j, &v) in p.as_slice().iter().enumerate() {
            centered[(i, j)] = f64::from(v);
        }
    }
    let mean = centered.row_mean();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    // Eigen-decompose the n x n Gram matrix: scores = u * sqrt(lambda).
    let gram = &centered * centered.transpose();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut out = vec![[0.0; 2]; n];
    for (axis, &c) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[c].max(0.0);
        let u = eig.eigenvectors.column(c);
        let pivot = (0..n).max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()).then(b.cmp(&a))).unwrap_or(0);
        let sign = if u[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            out[i][axis] = sign * u[i] * lambda.sqrt();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_have_no_second_axis() {
        let pts: Vec<Embedding> =
            (0..4).map(|i| Embedding::new(vec![i as f32, 2.0 * i as f32, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])).collect();
        let refs: Vec<&Embedding> = pts.iter().collect();
        let xy = pca_2d(&refs).unwrap();
        assert!(xy.iter().all(|p| p[1].abs() < 1e-6));
        let span = xy[3][0] - xy[0][0];
        assert!((span.abs() - 3.0 * 5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn single_point_is_origin() {
        let p = Embedding::new(vec![1.0; 8]);
        assert_eq!(pca_2d(&[&p]).unwrap(), vec![[0.0, 0.0]]);
    }
}
