//! Full pipeline on a small generated dataset: manifest, bpp scores,
//! label-histogram graph, diversified selection, selection file.
//!
//!     cargo run --example end_to_end [-- OUT_DIR]
//!
//! The same steps from the shell:
//!
//!     coreset score  --manifest manifest.jsonl --which bpp --out scores.csv
//!     coreset graph  --manifest manifest.jsonl --graph histogram --num-classes 4 --knn 4 --out edges.csv
//!     coreset select --manifest manifest.jsonl --scores scores.csv --score bpp \
//!                    --order asc --edges edges.csv --fraction 0.25 --out selection.csv

use std::fs;
use std::path::{Path, PathBuf};

use entropy_coreset::histogram::to_feature_matrix;
use entropy_coreset::{
    build_graph, graph_select, histogram, load_manifest, load_mask, pairwise_knn,
    score_dataset_bpp, write_selection, Bandwidth, BppConfig, Metric, Order,
};
use image::ExtendedColorType;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIDE: u32 = 48;
const CLASSES: u32 = 4;

/// Writes `n` images whose texture grows with the index, plus masks with one
/// or two classes and a void band.
fn generate(dir: &Path, n: usize) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut manifest = String::new();
    for i in 0..n {
        let amplitude = (i * 255 / n) as f64;
        let mut pixels = Vec::with_capacity((SIDE * SIDE * 3) as usize);
        for y in 0..SIDE {
            for x in 0..SIDE {
                let base = (x + y) as f64 * 2.0;
                for _ in 0..3 {
                    let v = base + amplitude * rng.random::<f64>();
                    pixels.push(v.min(255.0) as u8);
                }
            }
        }
        let image = format!("img{i:03}.jpg");
        image::save_buffer(dir.join(&image), &pixels, SIDE, SIDE, ExtendedColorType::Rgb8).unwrap();

        let (a, b) = (i as u32 % CLASSES, (i as u32 / CLASSES) % CLASSES);
        let split = rng.random_range(8..40);
        let mask: Vec<u8> = (0..SIDE * SIDE)
            .map(|p| match p % SIDE {
                x if x < 2 => 255,
                x if x < split => a as u8,
                _ => b as u8,
            })
            .collect();
        let mask_name = format!("mask{i:03}.png");
        image::save_buffer(dir.join(&mask_name), &mask, SIDE, SIDE, ExtendedColorType::L8).unwrap();

        manifest.push_str(&format!(
            "{{\"id\":\"sample{i:03}\",\"image\":\"{image}\",\"mask\":\"{mask_name}\"}}\n"
        ));
    }
    let path = dir.join("manifest.jsonl");
    fs::write(&path, manifest).unwrap();
    path
}

fn main() -> entropy_coreset::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("coreset_end_to_end"));
    fs::create_dir_all(&dir).unwrap();
    let manifest = load_manifest(generate(&dir, 40))?;
    let ids = manifest.ids();

    let scores = score_dataset_bpp(&manifest, &BppConfig::default())?;
    scores.write(dir.join("scores.csv"))?;
    let bpp = scores.column("bpp").unwrap();

    let hists = manifest
        .records
        .iter()
        .map(|r| histogram(&load_mask(r)?, CLASSES as usize, Some(255)))
        .collect::<entropy_coreset::Result<Vec<_>>>()?;
    let graph = build_graph(
        &pairwise_knn(&to_feature_matrix(&hists)?, Metric::Jsd, 4)?,
        Bandwidth::Median,
    )?;
    graph.write_edges(dir.join("edges.csv"), &["source=histogram".into()])?;

    let mut selection = graph_select(&graph, bpp, 10, Order::Ascending)?.with_ids(&ids)?;
    selection.params.score_name = "bpp".into();
    selection.params.graph = "histogram".into();
    write_selection(&selection, dir.join("selection.csv"))?;

    println!("{} samples, {} graph edges, sigma {:.4}", ids.len(), graph.num_edges(), graph.sigma().unwrap());
    for e in &selection.entries {
        let classes: Vec<usize> = (0..CLASSES as usize).filter(|&c| hists[e.index].probs()[c] > 0.0).collect();
        println!("  {}  bpp {:.3}  classes {classes:?}", e.id, e.original_score);
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
