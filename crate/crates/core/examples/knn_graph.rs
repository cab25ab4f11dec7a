//! Builds a Gaussian-weighted K-NN graph over random 2-D points and writes
//! its edge list.
//!
//!     cargo run --example knn_graph [-- K [SIGMA]]
//!
//! SIGMA is `median` (default) or a positive number.

use entropy_coreset::{build_graph, pairwise_knn, Bandwidth, FeatureMatrix, Metric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> entropy_coreset::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().map_or(Ok(5), |s| s.parse()).expect("K must be an integer");
    let sigma: Bandwidth = args.next().as_deref().unwrap_or("median").parse()?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
        .collect();
    let points = FeatureMatrix::from_rows(&rows)?;

    let lists = pairwise_knn(&points, Metric::Euclidean, k)?;
    let graph = build_graph(&lists, sigma)?;
    let degrees: Vec<usize> = (0..graph.n()).map(|i| graph.neighbors(i).len()).collect();
    println!("{}", graph.echo());
    println!(
        "{} undirected edges, degree min {} max {}",
        graph.num_edges(),
        degrees.iter().min().unwrap(),
        degrees.iter().max().unwrap()
    );
    for e in graph.neighbors(0) {
        println!("  0 -> {:>3}  d {:.3}  w {:.3}", e.neighbor, e.distance, e.weight);
    }

    let out = std::env::temp_dir().join("knn_graph_example_edges.csv");
    graph.write_edges(&out, &["source=knn_graph example".into()])?;
    println!("edge list written to {}", out.display());
    Ok(())
}
