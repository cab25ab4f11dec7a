//! k-means prototypicality: distance from each sample to its nearest
//! centroid. Small distances mark redundant, typical samples.
//!
//!     cargo run --example prototypicality

use entropy_coreset::{kmeans_fit, ps_score, rank, FeatureMatrix, KMeansConfig, Order};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> entropy_coreset::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.8).unwrap();
    let centres = [[0.0, 0.0, 0.0], [6.0, 0.0, 1.0], [0.0, 6.0, -1.0]];
    let mut rows = Vec::new();
    for c in &centres {
        for _ in 0..40 {
            rows.push(c.iter().map(|v| v + noise.sample(&mut rng)).collect());
        }
    }
    // a few stragglers between the blobs
    rows.push(vec![3.0, 3.0, 0.0]);
    rows.push(vec![-4.0, -4.0, 2.0]);
    let features = FeatureMatrix::from_rows(&rows)?;

    let cfg = KMeansConfig::new(3, 7);
    let model = kmeans_fit(&features, &cfg)?;
    println!("k-means {}: {} Lloyd steps, distortion {:.4}", cfg.echo(), model.history.len() - 1, model.distortion);
    for (c, mu) in model.centroids.rows().enumerate() {
        println!("  centroid {c}: [{:.2}, {:.2}, {:.2}]", mu[0], mu[1], mu[2]);
    }

    let ps = ps_score(&features, &model)?;
    let by_ps = rank(&ps, Order::Descending)?;
    println!("least prototypical:");
    for &i in by_ps.permutation.iter().take(4) {
        println!("  sample {i:>3}  ps {:.3}", ps[i]);
    }
    println!("most prototypical:");
    for &i in by_ps.permutation.iter().rev().take(4) {
        println!("  sample {i:>3}  ps {:.3}", ps[i]);
    }
    Ok(())
}
