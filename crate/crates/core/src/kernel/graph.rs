use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::sq_dist;

/// Similarity graph over a point set and its Laplacian `L = D − W`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphLaplacian {
    pub weights: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
}

impl GraphLaplacian {
    /// `fᵀ L f`.
    pub fn quadratic_form(&self, f: &[f64]) -> f64 {
        let n = f.len();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += f[i] * self.laplacian[(i, j)] * f[j];
            }
        }
        s
    }
}

/// Heat-kernel weights `W_ij = exp(−‖x_i − x_j‖² / (2 h²))` with a zero
/// diagonal. With `knn = Some(k)`, an edge is kept when either endpoint is
/// among the other's `k` nearest neighbours.
pub fn graph_laplacian(points: &[Vec<f64>], bandwidth: f64, knn: Option<usize>) -> Result<GraphLaplacian> {
    let n = points.len();
    if n < 2 {
        return Err(Error::data("a graph Laplacian needs at least two points"));
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::param("graph bandwidth must be positive"));
    }
    let d = pairwise_sq(points)?;
    let denom = 2.0 * bandwidth * bandwidth;
    let mut w = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { (-d[(i, j)] / denom).exp() });
    if let Some(k) = knn {
        if k == 0 {
            return Err(Error::param("knn must be at least 1"));
        }
        let mut keep = DMatrix::from_element(n, n, false);
        for i in 0..n {
            for j in nearest(&d, i, k) {
                keep[(i, j)] = true;
                keep[(j, i)] = true;
            }
        }
        w.zip_apply(&keep, |v, k| {
            if !k {
                *v = 0.0;
            }
        });
    }
    let mut laplacian = -w.clone();
    for i in 0..n {
        laplacian[(i, i)] = w.row(i).sum();
    }
    Ok(GraphLaplacian { weights: w, laplacian })
}

/// Mean distance from each point to its `k`-th nearest neighbour.
pub fn knn_scale(points: &[Vec<f64>], k: usize) -> Result<f64> {
    let n = points.len();
    if n < 2 || k == 0 {
        return Err(Error::data("knn scale needs two points and k >= 1"));
    }
    let d = pairwise_sq(points)?;
    let total: f64 = (0..n).map(|i| d[(i, *nearest(&d, i, k).last().unwrap_or(&i))].sqrt()).sum();
    Ok(total / n as f64)
}

fn nearest(d: &DMatrix<f64>, i: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..d.nrows()).filter(|&j| j != i).collect();
    others.sort_by(|&a, &b| d[(i, a)].total_cmp(&d[(i, b)]).then(a.cmp(&b)));
    others.truncate(k);
    others
}

fn pairwise_sq(points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::data("points have inconsistent dimensions"));
    }
    let n = points.len();
    Ok(DMatrix::from_fn(n, n, |i, j| sq_dist(&points[i], &points[j])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pair() {
        let g = graph_laplacian(&[vec![1.0, 2.0], vec![1.0, 2.0]], 0.5, None).unwrap();
        assert_eq!(g.weights[(0, 1)], 1.0);
        assert_eq!(g.laplacian, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn knn_mask_is_symmetric() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![(i * i) as f64]).collect();
        let g = graph_laplacian(&pts, 3.0, Some(1)).unwrap();
        assert_eq!(g.weights, g.weights.transpose());
        assert_eq!(g.weights[(0, 5)], 0.0);
        assert!(g.weights[(4, 5)] > 0.0);
    }

    #[test]
    fn knn_scale_on_a_line() {
        let pts: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        assert!((knn_scale(&pts, 1).unwrap() - 1.0).abs() < 1e-15);
    }
}
