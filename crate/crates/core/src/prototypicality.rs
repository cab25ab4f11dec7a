//! k-means vector quantisation and the prototypicality score: the Euclidean
//! distance from a sample's features to the nearest centroid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    /// Upper bound on Lloyd update steps.
    pub max_iter: usize,
    /// Stop once the relative distortion improvement drops below this.
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iter: 300,
            tol: 1e-6,
        }
    }

    pub fn echo(&self) -> String {
        format!(
            "k={} seed={} max_iter={} tol={}",
            self.k, self.seed, self.max_iter, self.tol
        )
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.k > n {
            return Err(Error::InvalidArgument(format!(
                "k = {} exceeds the {n} samples",
                self.k
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol must be a non-negative number, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansModel {
    pub centroids: FeatureMatrix,
    pub assignments: Vec<usize>,
    /// Mean squared distance of each sample to its assigned centroid.
    pub distortion: f64,
    /// Distortion after the initial assignment and after every accepted
    /// Lloyd step. Non-increasing.
    pub history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, mu) in centroids.iter().enumerate() {
        let d = sq_dist(x, mu);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding.
fn init_plus_plus(features: &FeatureMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = features.n();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![features.row(first).to_vec()];
    let mut d2: Vec<f64> = features
        .rows()
        .map(|x| sq_dist(x, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total has a positive weight")
        } else {
            // every point coincides with a chosen centroid
            (0..n).find(|&i| !chosen[i]).expect("k <= n")
        };
        chosen[pick] = true;
        let mu = features.row(pick).to_vec();
        for (i, x) in features.rows().enumerate() {
            d2[i] = d2[i].min(sq_dist(x, &mu));
        }
        centroids.push(mu);
    }
    centroids
}

struct Assignment {
    labels: Vec<usize>,
    sq: Vec<f64>,
}

impl Assignment {
    fn distortion(&self) -> f64 {
        self.sq.iter().sum::<f64>() / self.sq.len() as f64
    }
}

/// Nearest-centroid assignment, then empty clusters are refilled with the
/// point farthest from its centroid in the currently largest cluster.
fn assign(features: &FeatureMatrix, centroids: &mut [Vec<f64>]) -> Assignment {
    let (labels, sq): (Vec<usize>, Vec<f64>) = (0..features.n())
        .into_par_iter()
        .map(|i| nearest(features.row(i), centroids))
        .unzip();
    let mut a = Assignment { labels, sq };
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in &a.labels {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            break;
        };
        let largest = (0..k).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).unwrap();
        let far = (0..a.labels.len())
            .filter(|&i| a.labels[i] == largest)
            .max_by(|&i, &j| a.sq[i].total_cmp(&a.sq[j]).then(j.cmp(&i)))
            .unwrap();
        a.labels[far] = empty;
        a.sq[far] = 0.0;
        centroids[empty] = features.row(far).to_vec();
    }
    a
}

fn update(features: &FeatureMatrix, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = features.d();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (x, &l) in features.rows().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(x) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        for v in s.iter_mut() {
            *v /= c as f64;
        }
    }
    sums
}

/// Lloyd's algorithm from a seeded k-means++ start. Deterministic for a
/// given `(features, cfg)`.
pub fn kmeans_fit(features: &FeatureMatrix, cfg: &KMeansConfig) -> Result<KMeansModel> {
    cfg.validate(features.n())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = init_plus_plus(features, cfg.k, &mut rng);
    let mut current = assign(features, &mut centroids);
    let mut distortion = current.distortion();
    let mut history = vec![distortion];

    for _ in 0..cfg.max_iter {
        if distortion == 0.0 {
            break;
        }
        let mut next_centroids = update(features, &current.labels, cfg.k);
        let next = assign(features, &mut next_centroids);
        let next_distortion = next.distortion();
        // Exact arithmetic never increases here; rounding can.
        if next_distortion > distortion {
            break;
        }
        let improvement = (distortion - next_distortion) / distortion;
        centroids = next_centroids;
        current = next;
        distortion = next_distortion;
        history.push(distortion);
        if improvement < cfg.tol {
            break;
        }
    }
    debug_assert!(history.windows(2).all(|w| w[1] <= w[0]));

    Ok(KMeansModel {
        centroids: FeatureMatrix::new(cfg.k, features.d(), centroids.concat())?,
        assignments: current.labels,
        distortion,
        history,
    })
}

/// Euclidean distance from every sample to its nearest centroid.
pub fn ps_score(features: &FeatureMatrix, model: &KMeansModel) -> Result<Vec<f64>> {
    if features.d() != model.centroids.d() {
        return Err(Error::DimensionMismatch(format!(
            "features have {} dimensions, centroids {}",
            features.d(),
            model.centroids.d()
        )));
    }
    let centroids: Vec<Vec<f64>> = model.centroids.rows().map(<[f64]>::to_vec).collect();
    Ok((0..features.n())
        .into_par_iter()
        .map(|i| nearest(features.row(i), &centroids).1.sqrt())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn k_equals_n_has_zero_distortion() {
        let f = fm(&[&[0.0, 1.0], &[3.0, -2.0], &[5.0, 5.0]]);
        let m = kmeans_fit(&f, &KMeansConfig::new(3, 7)).unwrap();
        assert_eq!(m.distortion, 0.0);
        assert_eq!(ps_score(&f, &m).unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn duplicate_points_do_not_leave_empty_clusters() {
        let f = fm(&[&[1.0], &[1.0], &[1.0], &[1.0]]);
        let m = kmeans_fit(&f, &KMeansConfig::new(3, 1)).unwrap();
        let mut used = m.assignments.clone();
        used.sort();
        used.dedup();
        assert_eq!(used.len(), 3);
        assert_eq!(m.distortion, 0.0);
    }

    #[test]
    fn one_dimensional_single_centroid() {
        let f = fm(&[&[0.0], &[10.0]]);
        let m = kmeans_fit(&f, &KMeansConfig::new(1, 0)).unwrap();
        assert_eq!(m.centroids.row(0), &[5.0]);
        assert_eq!(ps_score(&f, &m).unwrap(), [5.0, 5.0]);
        assert_eq!(m.distortion, 25.0);
    }

    #[test]
    fn config_errors() {
        let f = fm(&[&[0.0], &[1.0]]);
        assert!(kmeans_fit(&f, &KMeansConfig::new(3, 0)).is_err());
        assert!(kmeans_fit(&f, &KMeansConfig::new(0, 0)).is_err());
        let mut cfg = KMeansConfig::new(1, 0);
        cfg.max_iter = 0;
        assert!(kmeans_fit(&f, &cfg).is_err());
        cfg.max_iter = 5;
        cfg.tol = -1.0;
        assert!(kmeans_fit(&f, &cfg).is_err());
    }

    #[test]
    fn ps_dimension_mismatch() {
        let f = fm(&[&[0.0], &[1.0]]);
        let m = kmeans_fit(&f, &KMeansConfig::new(1, 0)).unwrap();
        assert!(ps_score(&fm(&[&[0.0, 1.0]]), &m).is_err());
    }

    #[test]
    fn same_seed_same_model() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.37).sin() * 5.0, (i as f64 * 1.3).cos() * 3.0])
            .collect();
        let f = FeatureMatrix::from_rows(&rows).unwrap();
        let a = kmeans_fit(&f, &KMeansConfig::new(4, 99)).unwrap();
        let b = kmeans_fit(&f, &KMeansConfig::new(4, 99)).unwrap();
        let bits = |m: &KMeansModel| m.centroids.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.assignments, b.assignments);
    }
}
