//! Label histograms from segmentation masks and their Jensen-Shannon
//! divergences.
//!
//!     cargo run --example label_histograms

use entropy_coreset::histogram::js_distance;
use entropy_coreset::{histogram, jsd, MaskBuffer};

const VOID: u32 = 255;

/// A 16x16 mask: class `a` on the left, class `b` on the right, with a
/// void border.
fn split_mask(a: u32, b: u32, split: u32) -> MaskBuffer {
    let mut labels = Vec::with_capacity(256);
    for y in 0..16 {
        for x in 0..16 {
            let border = x == 0 || y == 0 || x == 15 || y == 15;
            labels.push(if border { VOID } else if x < split { a } else { b });
        }
    }
    MaskBuffer::new(16, 16, labels).unwrap()
}

fn main() -> entropy_coreset::Result<()> {
    let masks = [
        ("sky/road even", split_mask(0, 1, 8)),
        ("sky/road skewed", split_mask(0, 1, 12)),
        ("all road", split_mask(1, 1, 8)),
        ("person/car", split_mask(2, 3, 8)),
    ];
    let hists = masks
        .iter()
        .map(|(_, m)| histogram(m, 4, Some(VOID)))
        .collect::<entropy_coreset::Result<Vec<_>>>()?;

    for ((name, _), h) in masks.iter().zip(&hists) {
        println!("{name:<16} {:?} ({} counted pixels)", h.probs(), h.counted_pixels());
    }

    println!("\nJS divergence in nats (upper) and its square root (lower):");
    for i in 0..hists.len() {
        for j in 0..hists.len() {
            let v = if j >= i { jsd(&hists[i], &hists[j])? } else { js_distance(&hists[i], &hists[j])? };
            print!("{v:>9.4}");
        }
        println!();
    }
    println!("maximum possible divergence: ln 2 = {:.4}", std::f64::consts::LN_2);
    Ok(())
}
