//! Distance correlation and a blocked permutation test of independence.

use rand::seq::SliceRandom;

use super::RngState;
use crate::error::{Error, Result};

/// Double-centered Euclidean distance matrix, stored row-major.
fn centered_distances(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let row_means: Vec<f64> = (0..n).map(|i| d[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] += grand - row_means[i] - row_means[j];
        }
    }
    d
}

struct Block {
    a: Vec<f64>,
    b: Vec<f64>,
    n: usize,
    denom: f64,
}

impl Block {
    fn new(x: &[Vec<f64>], y: &[Vec<f64>]) -> Self {
        let n = x.len();
        let a = centered_distances(x);
        let b = centered_distances(y);
        let var_a: f64 = a.iter().map(|v| v * v).sum();
        let var_b: f64 = b.iter().map(|v| v * v).sum();
        Block { a, b, n, denom: (var_a * var_b).sqrt() }
    }

    /// Squared distance correlation with `y` rows permuted by `perm`.
    fn dcor_sq(&self, perm: Option<&[usize]>) -> f64 {
        if !(self.denom > 0.0) {
            return 0.0;
        }
        let n = self.n;
        let mut cov = 0.0;
        for i in 0..n {
            let pi = perm.map_or(i, |p| p[i]);
            let arow = &self.a[i * n..(i + 1) * n];
            let brow = &self.b[pi * n..(pi + 1) * n];
            cov += match perm {
                None => arow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>(),
                Some(p) => arow.iter().zip(p).map(|(x, &j)| x * brow[j]).sum::<f64>(),
            };
        }
        (cov / self.denom).max(0.0)
    }
}

/// Sample distance correlation (V-statistic) between paired rows of `x` and `y`.
///
/// Returns 0 when either sample is constant.
pub fn distance_correlation(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    assert_eq!(x.len(), y.len(), "paired samples must have equal length");
    Block::new(x, y).dcor_sq(None).sqrt()
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct IndependenceTest {
    /// Mean within-block distance correlation.
    pub statistic: f64,
    /// Upper `1 − level` quantile of the permutation null.
    pub threshold: f64,
    pub p_value: f64,
    pub n_permutations: usize,
    pub block_size: usize,
}

impl IndependenceTest {
    pub fn rejects(&self) -> bool {
        self.statistic > self.threshold
    }
}

/// Permutation test of independence using block-averaged distance correlation.
///
/// Samples are split into consecutive blocks of at most `block_size` rows; the
/// statistic is the mean of the per-block distance correlations. Null draws
/// permute `y` within each block, which keeps the test exact under
/// exchangeability while bounding the cost at `O(n · block_size)` per draw.
pub fn permutation_independence_test(
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    n_permutations: usize,
    block_size: usize,
    level: f64,
    rng: &mut RngState,
) -> Result<IndependenceTest> {
    if x.len() != y.len() || x.len() < 4 {
        return Err(Error::data("independence test needs >= 4 paired rows"));
    }
    if n_permutations == 0 || block_size < 4 || !(level > 0.0 && level < 1.0) {
        return Err(Error::param("need permutations >= 1, block_size >= 4, level in (0,1)"));
    }
    let blocks: Vec<Block> = x
        .chunks(block_size)
        .zip(y.chunks(block_size))
        .filter(|(bx, _)| bx.len() >= 4)
        .map(|(bx, by)| Block::new(bx, by))
        .collect();
    let stat_of = |perms: Option<&[Vec<usize>]>| -> f64 {
        let total: f64 = blocks.iter().enumerate().map(|(k, b)| b.dcor_sq(perms.map(|p| p[k].as_slice())).sqrt()).sum();
        total / blocks.len() as f64
    };
    let observed = stat_of(None);
    let mut perms: Vec<Vec<usize>> = blocks.iter().map(|b| (0..b.n).collect()).collect();
    let mut null = Vec::with_capacity(n_permutations);
    for _ in 0..n_permutations {
        for p in perms.iter_mut() {
            p.shuffle(rng);
        }
        null.push(stat_of(Some(&perms)));
    }
    null.sort_by(f64::total_cmp);
    let idx = (((1.0 - level) * (n_permutations + 1) as f64).ceil() as usize).clamp(1, n_permutations) - 1;
    let exceed = null.iter().filter(|&&v| v >= observed).count();
    Ok(IndependenceTest {
        statistic: observed,
        threshold: null[idx],
        p_value: (exceed + 1) as f64 / (n_permutations + 1) as f64,
        n_permutations,
        block_size,
    })
}
