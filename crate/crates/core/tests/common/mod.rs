#![allow(dead_code)]

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use semisup_core::binary::CountData;
use semisup_core::mixture::{
    gibbs_step, GibbsState, LabeledPoint, MixtureMode, MixtureParams, NiwMixturePrior, SemiSupDataset,
};
use semisup_core::relevance::Dag;
use semisup_core::stochastics::special::ln_beta;
use semisup_core::stochastics::{sample_mvn, IwConvention};
use semisup_core::{RngState, SpdMatrix};

/// Sample mean and its Monte Carlo standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean and batch-means standard error for an autocorrelated series.
pub fn batch_mean_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let size = xs.len() / batches;
    let means: Vec<f64> =
        (0..batches).map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    mean_se(&means)
}

/// Number of standard errors separating the sample mean of `xs` from `target`.
pub fn z_score(xs: &[f64], target: f64) -> f64 {
    let (m, se) = mean_se(xs);
    (m - target) / se
}

pub fn check_z(label: &str, xs: &[f64], target: f64, tol: f64) -> bool {
    let z = z_score(xs, target);
    let ok = z.abs() <= tol;
    if !ok {
        eprintln!("{label}: z = {z:.3} (mean {:.6}, target {target:.6})", mean_se(xs).0);
    }
    ok
}

/// A small LapRLS instance written out from the objective's definition.
pub struct LapRlsInstance {
    pub labeled: Vec<(Vec<f64>, f64)>,
    pub unlabeled: Vec<Vec<f64>>,
    pub bandwidth: f64,
    pub gamma_a: f64,
    pub gamma_i: f64,
}

impl LapRlsInstance {
    pub fn random(rng: &mut impl rand::Rng, max_l: usize, max_u: usize) -> Self {
        let n = rng.random_range(1..=max_l);
        let m = rng.random_range(0..=max_u);
        let pt = |rng: &mut dyn rand::RngCore| {
            vec![3.0 * rand::Rng::random::<f64>(rng), 3.0 * rand::Rng::random::<f64>(rng)]
        };
        let labeled = (0..n).map(|_| (pt(rng), if rng.random::<bool>() { 1.0 } else { -1.0 })).collect();
        let unlabeled = (0..m).map(|_| pt(rng)).collect();
        Self {
            labeled,
            unlabeled,
            bandwidth: rng.random_range(0.5..1.5),
            gamma_a: 10f64.powf(rng.random_range(-2.0..0.0)),
            gamma_i: 10f64.powf(rng.random_range(-1.0..1.0)),
        }
    }

    fn points(&self) -> Vec<Vec<f64>> {
        self.labeled.iter().map(|p| p.0.clone()).chain(self.unlabeled.iter().cloned()).collect()
    }

    fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        (-d / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }

    /// Values `f = Kα` at every point.
    fn fitted(&self, alpha: &[f64]) -> Vec<f64> {
        let p = self.points();
        p.iter().map(|x| p.iter().zip(alpha).map(|(b, a)| a * self.k(x, b)).sum()).collect()
    }

    fn laplacian_form(&self, f: &[f64]) -> f64 {
        let p = self.points();
        let mut s = 0.0;
        for i in 0..p.len() {
            for j in 0..p.len() {
                if i != j {
                    s += 0.5 * self.k(&p[i], &p[j]) * (f[i] - f[j]).powi(2);
                }
            }
        }
        s
    }

    pub fn objective(&self, alpha: &[f64]) -> f64 {
        let f = self.fitted(alpha);
        let n = self.labeled.len() as f64;
        let big = f.len() as f64;
        let loss: f64 = self.labeled.iter().enumerate().map(|(i, (_, y))| (y - f[i]).powi(2)).sum::<f64>() / n;
        let norm: f64 = alpha.iter().zip(&f).map(|(a, v)| a * v).sum();
        loss + self.gamma_a * norm + self.gamma_i / (big * big) * self.laplacian_form(&f)
    }

    /// Analytic gradient through `∂f/∂α = K`.
    pub fn gradient(&self, alpha: &[f64]) -> Vec<f64> {
        let p = self.points();
        let f = self.fitted(alpha);
        let n = self.labeled.len() as f64;
        let big = p.len() as f64;
        let mut df = vec![0.0; p.len()];
        for i in 0..self.labeled.len() {
            df[i] += 2.0 * (f[i] - self.labeled[i].1) / n;
        }
        for i in 0..p.len() {
            df[i] += 2.0 * self.gamma_a * alpha[i];
            for j in 0..p.len() {
                if i != j {
                    df[i] += 2.0 * self.gamma_i / (big * big) * self.k(&p[i], &p[j]) * (f[i] - f[j]);
                }
            }
        }
        (0..p.len()).map(|i| (0..p.len()).map(|j| self.k(&p[i], &p[j]) * df[j]).sum()).collect()
    }

    /// Conjugate gradient with exact line search, using only gradient
    /// evaluations. Returns the minimizing weights.
    pub fn minimize(&self) -> Vec<f64> {
        let dim = self.labeled.len() + self.unlabeled.len();
        let mut x = vec![0.0; dim];
        let mut g = self.gradient(&x);
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        for it in 0..20 * dim + 200 {
            if dot(&g, &g).sqrt() < 1e-13 {
                break;
            }
            let probe: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
            let hd: Vec<f64> = self.gradient(&probe).iter().zip(&g).map(|(a, b)| a - b).collect();
            let curv = dot(&d, &hd);
            if curv <= 0.0 {
                break;
            }
            let step = -dot(&g, &d) / curv;
            for i in 0..dim {
                x[i] += step * d[i];
            }
            let g_new = self.gradient(&x);
            let beta = if (it + 1) % dim == 0 { 0.0 } else { (dot(&g_new, &g_new) / dot(&g, &g)).max(0.0) };
            for i in 0..dim {
                d[i] = -g_new[i] + beta * d[i];
            }
            g = g_new;
        }
        x
    }
}

pub struct RandomDag {
    pub names: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

impl RandomDag {
    pub fn draw(rng: &mut ChaCha8Rng) -> Self {
        let n = rng.random_range(2..=8);
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let p = rng.random_range(0.15..0.6);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((order[i], order[j]));
                }
            }
        }
        Self { names: (0..n).map(|i| format!("v{i}")).collect(), edges }
    }

    pub fn build(&self) -> Dag {
        let e: Vec<(&str, &str)> =
            self.edges.iter().map(|&(a, b)| (self.names[a].as_str(), self.names[b].as_str())).collect();
        let n: Vec<&str> = self.names.iter().map(String::as_str).collect();
        Dag::new(&n, &e).unwrap()
    }

    pub fn descendants(&self, v: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([v]);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &(a, b) in &self.edges {
                if a == u && seen.insert(b) {
                    stack.push(b);
                }
            }
        }
        seen
    }

    pub fn directed(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a, b))
    }

    /// Every simple trail in the skeleton, checked node by node.
    pub fn separated_by_enumeration(&self, a: usize, b: usize, z: &BTreeSet<usize>) -> bool {
        let n = self.names.len();
        let adjacent = |u: usize, v: usize| self.directed(u, v) || self.directed(v, u);
        let mut path = vec![a];
        let mut on_path = vec![false; n];
        on_path[a] = true;
        !self.extend(&mut path, &mut on_path, b, z, &adjacent)
    }

    fn extend(
        &self,
        path: &mut Vec<usize>,
        on_path: &mut Vec<bool>,
        b: usize,
        z: &BTreeSet<usize>,
        adjacent: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        let last = *path.last().unwrap();
        if last == b {
            return self.trail_active(path, z);
        }
        for next in 0..self.names.len() {
            if !on_path[next] && adjacent(last, next) {
                path.push(next);
                on_path[next] = true;
                let found = self.extend(path, on_path, b, z, adjacent);
                path.pop();
                on_path[next] = false;
                if found {
                    return true;
                }
            }
        }
        false
    }

    pub fn trail_active(&self, path: &[usize], z: &BTreeSet<usize>) -> bool {
        path.windows(3).all(|w| {
            let collider = self.directed(w[0], w[1]) && self.directed(w[2], w[1]);
            if collider {
                self.descendants(w[1]).iter().any(|d| z.contains(d))
            } else {
                !z.contains(&w[1])
            }
        })
    }
}

pub fn draw_query(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize, BTreeSet<usize>) {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    let z = (0..n).filter(|&v| v != a && v != b && rng.random::<f64>() < 0.35).collect();
    (a, b, z)
}

/// Successive-conditional simulator: alternately draws data given the
/// current parameters and takes one Gibbs sweep given that data. The
/// parameter marginal must equal the prior.
pub fn geweke_draws(
    prior: &NiwMixturePrior,
    iterations: usize,
    n_lab: usize,
    n_unl: usize,
    seed: u64,
) -> Vec<MixtureParams> {
    let mut rng = RngState::new(seed);
    let mut params = prior.draw_params(&mut rng).unwrap();
    let mut out = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut labeled = Vec::new();
        let mut unlabeled = Vec::new();
        let mut alloc = Vec::new();
        let mut hidden = Vec::new();
        for i in 0..n_lab + n_unl {
            let u: f64 = rng.random();
            let k = if u < params.weights()[0] { 0 } else { 1 };
            let c = &params.components()[k];
            let z = sample_mvn(&c.mu, &c.sigma, &mut rng).unwrap();
            let x = z.rows(1, z.len() - 1).into_owned();
            alloc.push(k);
            if i < n_lab {
                labeled.push(LabeledPoint { y: z[0], x });
            } else {
                unlabeled.push(x);
                hidden.push(z[0]);
            }
        }
        let data = SemiSupDataset::new(labeled, unlabeled).unwrap();
        let state = GibbsState { params: params.clone(), allocations: alloc, imputed_y: Some(hidden) };
        params = gibbs_step(&state, &data, prior, MixtureMode::Regression, &mut rng).unwrap().params;
        out.push(params.clone());
    }
    out
}

pub fn geweke_prior() -> NiwMixturePrior {
    NiwMixturePrior {
        dirichlet_alpha: vec![1.0, 1.0],
        tau: 1.0,
        iw_dof: 8.0,
        iw_scale: SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap(),
        iw_convention: IwConvention::Standard,
    }
}

/// Posterior mean of `ϕ_{x*}` under a Dirichlet mixture, using the Beta
/// marginal of the aggregated cell `θ` for the unlabeled counts.
pub fn aggregated_oracle(a: f64, dir0: [f64; 4], dir1: [f64; 4], d: &CountData, x: usize) -> f64 {
    let n = [d.labeled[0][0] as f64, d.labeled[0][1] as f64, d.labeled[1][0] as f64, d.labeled[1][1] as f64];
    let (m0, m1) = (d.unlabeled[0] as f64, d.unlabeled[1] as f64);
    let mut terms = Vec::new();
    for (w, q) in [(a, dir0), (1.0 - a, dir1)] {
        let ln_marg = ln_beta(q[0] + n[0], q[1] + n[1]) - ln_beta(q[0], q[1]) + ln_beta(q[2] + n[2], q[3] + n[3])
            - ln_beta(q[2], q[3])
            + ln_beta(q[2] + q[3] + n[2] + n[3] + m1, q[0] + q[1] + n[0] + n[1] + m0)
            - ln_beta(q[2] + q[3], q[0] + q[1]);
        let mean = if x == 1 {
            (q[3] + n[3]) / (q[2] + q[3] + n[2] + n[3])
        } else {
            (q[1] + n[1]) / (q[0] + q[1] + n[0] + n[1])
        };
        terms.push((w.ln() + ln_marg, mean));
    }
    let mx = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = terms.iter().map(|t| (t.0 - mx).exp()).sum();
    terms.iter().map(|t| (t.0 - mx).exp() / z * t.1).sum()
}
