//! Greedy selection over a K-NN graph compared with a plain top-m cut.
//!
//!     cargo run --example graph_sampling
//!
//! Two tight groups of near-duplicates score high, a spread-out group scores
//! lower. The top-m cut takes only duplicates; the graph sampler suppresses
//! neighbours of each pick and reaches the other samples.

use entropy_coreset::sampler::SamplerState;
use entropy_coreset::{
    build_graph, coverage_stats, graph_select, pairwise_knn, rank, top_m, Bandwidth, FeatureMatrix,
    Metric, Order,
};

fn main() -> entropy_coreset::Result<()> {
    let mut rows = Vec::new();
    let mut scores = Vec::new();
    for i in 0..5 {
        rows.push(vec![0.0 + 0.01 * i as f64, 0.0]);
        scores.push(0.95 - 0.01 * i as f64);
    }
    for i in 0..5 {
        rows.push(vec![5.0, 0.01 * i as f64]);
        scores.push(0.90 - 0.01 * i as f64);
    }
    for i in 0..6 {
        rows.push(vec![2.0 * i as f64, 6.0]);
        scores.push(0.5 + 0.02 * i as f64);
    }
    let points = FeatureMatrix::from_rows(&rows)?;
    let graph = build_graph(&pairwise_knn(&points, Metric::Euclidean, 3)?, Bandwidth::Median)?;
    let m = 6;

    let plain = top_m(&rank(&scores, Order::Descending)?, m)?;
    let diverse = graph_select(&graph, &scores, m, Order::Descending)?;
    println!("top-m:        {:?}", plain.indices());
    println!("graph select: {:?}", diverse.indices());
    for (name, sel) in [("top-m", &plain), ("graph", &diverse)] {
        let c = coverage_stats(sel, &graph)?;
        println!(
            "{name:<6} one-hop coverage {:.2}, mean geodesic distance {:?}",
            c.one_hop_coverage, c.mean_pairwise_distance
        );
    }

    println!("\nstep by step:");
    let mut state = SamplerState::new(&graph, &scores, Order::Descending)?;
    for _ in 0..3 {
        let (i, s) = state.step().expect("nodes left");
        let w: Vec<String> = state.working_scores().iter().map(|v| format!("{v:.2}")).collect();
        println!("  pick {i:>2} at {s:.3}; working [{}]", w.join(" "));
    }
    Ok(())
}
