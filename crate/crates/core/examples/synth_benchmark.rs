//! Coverage of score-only versus graph-diversified selection on a
//! Gaussian mixture whose top scores all sit in one cluster.
//!
//!     cargo run --release --example synth_benchmark [-- RUNS]

use entropy_coreset::synth::{run, SynthConfig};

fn main() -> entropy_coreset::Result<()> {
    let runs: u64 = std::env::args().nth(1).map_or(20, |s| s.parse().expect("RUNS must be an integer"));
    let base = SynthConfig::default();
    println!("{} runs={runs}", base.echo());

    let mut histogram = [[0usize; 6]; 2];
    for seed in 0..runs {
        let report = run(&SynthConfig { seed, ..base })?;
        for (h, name) in histogram.iter_mut().zip(["score", "score+graph"]) {
            h[report.policy(name).unwrap().clusters_covered] += 1;
        }
        if seed == 0 {
            for p in &report.policies {
                println!("seed 0 {:<12} per-cluster picks {:?}", p.policy, p.per_cluster);
            }
        }
    }
    println!("clusters covered (0..=5) across runs:");
    for (h, name) in histogram.iter().zip(["score", "score+graph"]) {
        println!("  {name:<12} {h:?}");
    }
    Ok(())
}
