//! Fixture builders shared by the integration tests.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use entropy_coreset::bpp::encode_jpeg;
use entropy_coreset::{BppConfig, ChromaSubsampling, PixelBuffer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn constant(w: u32, h: u32) -> PixelBuffer {
    PixelBuffer::new(w, h, 3, vec![128; (w * h * 3) as usize]).unwrap()
}

/// Horizontal red ramp, vertical green ramp, constant blue.
pub fn gradient(w: u32, h: u32) -> PixelBuffer {
    let mut data = Vec::with_capacity((w * h * 3) as usize);
    for y in 0..h {
        for x in 0..w {
            data.push((x * 255 / (w - 1).max(1)) as u8);
            data.push((y * 255 / (h - 1).max(1)) as u8);
            data.push(96);
        }
    }
    PixelBuffer::new(w, h, 3, data).unwrap()
}

pub fn noise(w: u32, h: u32, seed: u64) -> PixelBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..w * h * 3).map(|_| rng.random::<u8>()).collect();
    PixelBuffer::new(w, h, 3, data).unwrap()
}

pub fn jpeg_bytes(px: &PixelBuffer, quality: u8) -> Vec<u8> {
    encode_jpeg(px, &BppConfig::new(quality, ChromaSubsampling::None, false).unwrap()).unwrap()
}

pub fn write_jpeg(path: &Path, px: &PixelBuffer, quality: u8) {
    fs::write(path, jpeg_bytes(px, quality)).unwrap();
}

pub fn write_png_rgb(path: &Path, px: &PixelBuffer) {
    image::save_buffer(
        path,
        px.data(),
        px.width(),
        px.height(),
        image::ExtendedColorType::Rgb8,
    )
    .unwrap();
}

pub fn write_png_gray(path: &Path, w: u32, h: u32, data: &[u8]) {
    image::save_buffer(path, data, w, h, image::ExtendedColorType::L8).unwrap();
}

/// 8-bit paletted PNG whose raw indices are `data`.
pub fn write_png_indexed(path: &Path, w: u32, h: u32, data: &[u8]) {
    let file = fs::File::create(path).unwrap();
    let mut enc = png::Encoder::new(std::io::BufWriter::new(file), w, h);
    enc.set_color(png::ColorType::Indexed);
    enc.set_depth(png::BitDepth::Eight);
    enc.set_palette((0..=255u8).flat_map(|v| [v, v, v]).collect::<Vec<u8>>());
    let mut writer = enc.write_header().unwrap();
    writer.write_image_data(data).unwrap();
}

/// Writes a JSON-Lines manifest of `(id, image, mask)` entries with paths
/// relative to `dir`.
pub fn write_manifest(dir: &Path, entries: &[(&str, &str, Option<&str>)]) -> PathBuf {
    let mut out = String::new();
    for (id, image, mask) in entries {
        let mut v = serde_json::json!({ "id": id, "image": image });
        if let Some(m) = mask {
            v["mask"] = serde_json::json!(m);
        }
        out.push_str(&v.to_string());
        out.push('\n');
    }
    let p = dir.join("manifest.jsonl");
    fs::write(&p, out).unwrap();
    p
}

/// Random points in `[-scale, scale]^d`.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-scale..scale)).collect())
        .collect()
}

/// A random probability vector with roughly a third of its mass cells zero.
pub fn random_distribution(rng: &mut ChaCha8Rng, c: usize) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..c)
            .map(|_| {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let s: f64 = raw.iter().sum();
        if s > 0.0 {
            return raw.iter().map(|v| v / s).collect();
        }
    }
}

/// A 12-sample dataset under `dir`: JPEG and PNG images of mixed texture,
/// paletted masks over 3 classes with void pixels, 4-D features and an
/// external `nll` column. Returns `(manifest, features, nll)` paths.
pub fn build_dataset(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    use entropy_coreset::dataset::write_features;
    use entropy_coreset::{FeatureMatrix, ScoreTable};

    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut entries = Vec::new();
    let mut names = Vec::new();
    for i in 0..12u32 {
        let px = match i % 3 {
            0 => constant(24, 20),
            1 => gradient(24, 20),
            _ => noise(24, 20, i as u64),
        };
        let image = if i % 4 == 3 {
            format!("img{i:02}.png")
        } else {
            format!("img{i:02}.jpg")
        };
        if image.ends_with(".png") {
            write_png_rgb(&dir.join(&image), &px);
        } else {
            write_jpeg(&dir.join(&image), &px, 90);
        }
        let mask = format!("mask{i:02}.png");
        let labels: Vec<u8> = (0..24 * 20)
            .map(|p| match (p + i as usize * 7) % 11 {
                0 => 255,
                r if r < 2 + (i as usize % 5) => 2,
                r if r % 2 == 0 => 0,
                _ => 1,
            })
            .collect();
        write_png_indexed(&dir.join(&mask), 24, 20, &labels);
        names.push((format!("s{i:02}"), image, mask));
    }
    for (id, image, mask) in &names {
        entries.push((id.as_str(), image.as_str(), Some(mask.as_str())));
    }
    let manifest = write_manifest(dir, &entries);

    let ids: Vec<String> = names.iter().map(|n| n.0.clone()).collect();
    let rows = random_points(&mut rng, ids.len(), 4, 2.0);
    let features = dir.join("features.csv");
    write_features(&features, &ids, &FeatureMatrix::from_rows(&rows).unwrap(), &[]).unwrap();

    let mut nll = ScoreTable::new(ids.clone());
    let values = (0..ids.len()).map(|_| rng.random_range(2.0..6.0)).collect();
    nll.set_column("nll", values, Some("external generative model".into()))
        .unwrap();
    let nll_path = dir.join("nll.csv");
    nll.write(&nll_path).unwrap();
    (manifest, features, nll_path)
}
