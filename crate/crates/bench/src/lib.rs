//! Fixed inputs shared by the benchmarks.

use semisup_core::data::{generate_mixture_scene, Interval, MixtureScene};
use semisup_core::kernel::LabeledPoints;
use semisup_core::mixture::NiwMixturePrior;
use semisup_core::relevance::Dag;
use semisup_core::{Result, RngState};

pub const SEED: u64 = 7;

/// One-dimensional regression scene with the illustrative prior.
pub fn mixture_scene(n: usize) -> Result<MixtureScene> {
    let prior = NiwMixturePrior::illustrative(2);
    generate_mixture_scene(&prior, prior.m(), n, Interval::new(-1.0, 1.0), &mut RngState::new(SEED))
}

pub fn two_cluster(n: usize) -> Result<LabeledPoints> {
    LabeledPoints::two_cluster(n, 0.1, &mut RngState::new(SEED))
}

/// A layered DAG: `width` nodes per layer, each wired to every node in the
/// next layer.
pub fn layered_dag(layers: usize, width: usize) -> Result<Dag> {
    let name = |l: usize, i: usize| format!("n{l}_{i}");
    let nodes: Vec<String> = (0..layers).flat_map(|l| (0..width).map(move |i| name(l, i))).collect();
    let mut edges = Vec::new();
    for l in 1..layers {
        for i in 0..width {
            for j in 0..width {
                edges.push((name(l - 1, i), name(l, j)));
            }
        }
    }
    Dag::new(&nodes, &edges)
}
