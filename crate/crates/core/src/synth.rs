//! Synthetic coverage benchmark.
//!
//! Points are drawn from a 2-D mixture of isotropic unit Gaussians whose
//! centres sit evenly on a circle. Every point scores by its centrality in
//! its own cluster, `exp(-|x - mu|^2 / 2)`, which lies in `(0, 1]`. The `m`
//! most central points of cluster 0 are lifted above 1, so a score-only cut
//! of size `m` can only ever pick from cluster 0. The benchmark then counts
//! how many clusters the graph sampler reaches with the same budget.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::graph::{build_graph, pairwise_knn, Bandwidth, Metric};
use crate::sampler::{graph_select, Selection};
use crate::scores::{rank, top_m, Order};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub clusters: usize,
    pub per_cluster: usize,
    pub m: usize,
    pub knn: usize,
    pub bandwidth: Bandwidth,
    pub seed: u64,
    /// Radius of the circle holding the cluster centres, in units of the
    /// cluster standard deviation.
    pub radius: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            clusters: 5,
            per_cluster: 100,
            m: 10,
            knn: 10,
            bandwidth: Bandwidth::Median,
            seed: 1,
            radius: 10.0,
        }
    }
}

impl SynthConfig {
    pub fn echo(&self) -> String {
        format!(
            "synth clusters={} per_cluster={} m={} knn={} sigma={} seed={} radius={}",
            self.clusters,
            self.per_cluster,
            self.m,
            self.knn,
            self.bandwidth,
            self.seed,
            self.radius
        )
    }
}

/// Generated points with their cluster labels and scores.
#[derive(Clone, Debug)]
pub struct SynthData {
    pub points: FeatureMatrix,
    pub cluster: Vec<usize>,
    pub scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicyCoverage {
    pub policy: String,
    pub clusters_covered: usize,
    /// Selected points per cluster.
    pub per_cluster: Vec<usize>,
    pub selected: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthReport {
    pub params: String,
    pub clusters: usize,
    pub policies: Vec<PolicyCoverage>,
}

impl SynthReport {
    pub fn policy(&self, name: &str) -> Option<&PolicyCoverage> {
        self.policies.iter().find(|p| p.policy == name)
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    if cfg.clusters == 0 || cfg.per_cluster == 0 {
        return Err(Error::InvalidArgument(
            "synth needs at least one cluster with at least one point".into(),
        ));
    }
    if !(cfg.radius.is_finite() && cfg.radius >= 0.0) {
        return Err(Error::InvalidArgument(format!("bad radius {}", cfg.radius)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let n = cfg.clusters * cfg.per_cluster;
    let mut values = Vec::with_capacity(2 * n);
    let mut cluster = Vec::with_capacity(n);
    let mut centrality = Vec::with_capacity(n);
    for c in 0..cfg.clusters {
        let angle = std::f64::consts::TAU * c as f64 / cfg.clusters as f64;
        let r = if cfg.clusters == 1 { 0.0 } else { cfg.radius };
        let (mx, my) = (r * angle.cos(), r * angle.sin());
        for _ in 0..cfg.per_cluster {
            let (dx, dy): (f64, f64) = (normal.sample(&mut rng), normal.sample(&mut rng));
            values.push(mx + dx);
            values.push(my + dy);
            cluster.push(c);
            centrality.push((-0.5 * (dx * dx + dy * dy)).exp());
        }
    }

    // Lift the m most central points of cluster 0 above every other score.
    let mut hot: Vec<usize> = (0..cfg.per_cluster).collect();
    hot.sort_by(|&a, &b| centrality[b].total_cmp(&centrality[a]).then(a.cmp(&b)));
    let mut scores = centrality.clone();
    for &i in hot.iter().take(cfg.m) {
        scores[i] = 1.0 + 0.1 * centrality[i];
    }

    Ok(SynthData {
        points: FeatureMatrix::new(n, 2, values)?,
        cluster,
        scores,
    })
}

fn coverage(name: &str, sel: &Selection, cluster: &[usize], k: usize) -> PolicyCoverage {
    let mut per_cluster = vec![0; k];
    for &i in &sel.indices() {
        per_cluster[cluster[i]] += 1;
    }
    PolicyCoverage {
        policy: name.into(),
        clusters_covered: per_cluster.iter().filter(|&&c| c > 0).count(),
        per_cluster,
        selected: sel.indices(),
    }
}

/// Runs score-only and score+graph selection on one generated dataset.
pub fn run(cfg: &SynthConfig) -> Result<SynthReport> {
    let data = generate(cfg)?;
    let n = data.scores.len();
    if cfg.m == 0 || cfg.m > n {
        return Err(Error::InvalidArgument(format!(
            "selection size {} outside 1..={n}",
            cfg.m
        )));
    }
    let plain = top_m(&rank(&data.scores, Order::Descending)?, cfg.m)?;
    let graph = build_graph(
        &pairwise_knn(&data.points, Metric::Euclidean, cfg.knn)?,
        cfg.bandwidth,
    )?;
    let diverse = graph_select(&graph, &data.scores, cfg.m, Order::Descending)?;
    Ok(SynthReport {
        params: cfg.echo(),
        clusters: cfg.clusters,
        policies: vec![
            coverage("score", &plain, &data.cluster, cfg.clusters),
            coverage("score+graph", &diverse, &data.cluster, cfg.clusters),
        ],
    })
}
