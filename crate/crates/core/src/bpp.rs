//! Bits-per-pixel of an image's JPEG encoding.
//!
//! Two routes produce the score. For datasets already stored as JPEG the
//! stored file size is used directly. For raw or losslessly stored pixels the
//! image is re-encoded in memory. A dataset is scored through exactly one
//! route, because stored and re-encoded sizes come from different encoders
//! and are not comparable.

use std::fs;
use std::io::{BufReader, Read};

use image::{ImageFormat, ImageReader};
use jpeg_encoder::{ColorType as JpegColor, Encoder, SamplingFactor};
use rayon::prelude::*;

use crate::dataset::{load_image, DatasetManifest, PixelBuffer, SampleRecord, ScoreTable};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChromaSubsampling {
    /// 4:4:4, every chroma sample kept.
    None,
    /// 4:2:0.
    Quarter,
}

impl ChromaSubsampling {
    pub fn as_str(self) -> &'static str {
        match self {
            ChromaSubsampling::None => "444",
            ChromaSubsampling::Quarter => "420",
        }
    }
}

impl std::str::FromStr for ChromaSubsampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "444" | "4:4:4" | "none" => Ok(ChromaSubsampling::None),
            "420" | "4:2:0" => Ok(ChromaSubsampling::Quarter),
            _ => Err(Error::InvalidArgument(format!(
                "unknown chroma subsampling {s:?} (expected 444 or 420)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BppConfig {
    quality: u8,
    pub chroma: ChromaSubsampling,
    pub use_stored_size: bool,
}

impl Default for BppConfig {
    /// Quality 100, no chroma subsampling, always re-encode.
    fn default() -> Self {
        Self {
            quality: 100,
            chroma: ChromaSubsampling::None,
            use_stored_size: false,
        }
    }
}

impl BppConfig {
    pub fn new(quality: u8, chroma: ChromaSubsampling, use_stored_size: bool) -> Result<Self> {
        if !(1..=100).contains(&quality) {
            return Err(Error::InvalidArgument(format!(
                "JPEG quality must be in 1..=100, got {quality}"
            )));
        }
        Ok(Self {
            quality,
            chroma,
            use_stored_size,
        })
    }

    pub fn quality(&self) -> u8 {
        self.quality
    }

    pub fn echo(&self) -> String {
        format!(
            "quality={} chroma={} stored={}",
            self.quality,
            self.chroma.as_str(),
            self.use_stored_size
        )
    }
}

fn bits_per_pixel(bytes: u64, width: u32, height: u32) -> f64 {
    (8 * bytes) as f64 / (width as u64 * height as u64) as f64
}

fn is_jpeg(path: &std::path::Path) -> Result<bool> {
    let mut magic = [0u8; 3];
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let n = f.read(&mut magic).map_err(|e| Error::io(path, e))?;
    Ok(n == 3 && magic == [0xFF, 0xD8, 0xFF])
}

/// `8 * file_size / (width * height)` of a stored JPEG.
pub fn bpp_from_stored(record: &SampleRecord) -> Result<f64> {
    let path = &record.image_path;
    if !is_jpeg(path)? {
        return Err(Error::NotJpeg {
            id: record.id.clone(),
            path: path.clone(),
        });
    }
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let bytes = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let (width, height) = ImageReader::with_format(BufReader::new(file), ImageFormat::Jpeg)
        .into_dimensions()
        .map_err(|e| Error::Decode {
            path: path.clone(),
            message: e.to_string(),
        })?;
    if width == 0 || height == 0 {
        return Err(Error::Decode {
            path: path.clone(),
            message: "zero-sized JPEG".into(),
        });
    }
    Ok(bits_per_pixel(bytes, width, height))
}

/// Encodes `pixels` as baseline JPEG and returns the encoded bytes.
/// Gray buffers become single-component JPEGs.
pub fn encode_jpeg(pixels: &PixelBuffer, cfg: &BppConfig) -> Result<Vec<u8>> {
    let (w, h) = (pixels.width(), pixels.height());
    if w == 0 || h == 0 {
        return Err(Error::Encode(format!("cannot encode a {w}x{h} image")));
    }
    let (w16, h16) = match (u16::try_from(w), u16::try_from(h)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => {
            return Err(Error::Encode(format!(
                "{w}x{h} exceeds the JPEG limit of 65535 pixels per side"
            )))
        }
    };
    let color = match pixels.channels() {
        1 => JpegColor::Luma,
        _ => JpegColor::Rgb,
    };
    let mut out = Vec::new();
    let mut encoder = Encoder::new(&mut out, cfg.quality);
    encoder.set_sampling_factor(match cfg.chroma {
        ChromaSubsampling::None => SamplingFactor::F_1_1,
        ChromaSubsampling::Quarter => SamplingFactor::F_2_2,
    });
    encoder
        .encode(pixels.data(), w16, h16, color)
        .map_err(|e| Error::Encode(e.to_string()))?;
    Ok(out)
}

/// Bits per pixel of `pixels` re-encoded with `cfg`.
pub fn bpp_reencode(pixels: &PixelBuffer, cfg: &BppConfig) -> Result<f64> {
    let bytes = encode_jpeg(pixels, cfg)?;
    Ok(bits_per_pixel(
        bytes.len() as u64,
        pixels.width(),
        pixels.height(),
    ))
}

fn score_one(record: &SampleRecord, cfg: &BppConfig) -> Result<f64> {
    if cfg.use_stored_size {
        bpp_from_stored(record)
    } else {
        bpp_reencode(&load_image(record)?, cfg)
    }
}

/// Scores every manifest image and returns a table with a single `bpp`
/// column in manifest order. Images are processed in parallel; the reported
/// error is the first failing sample in manifest order.
pub fn score_dataset_bpp(manifest: &DatasetManifest, cfg: &BppConfig) -> Result<ScoreTable> {
    let results: Vec<Result<f64>> = manifest
        .records
        .par_iter()
        .map(|r| score_one(r, cfg))
        .collect();
    let mut scores = Vec::with_capacity(results.len());
    for (r, rec) in results.into_iter().zip(&manifest.records) {
        match r {
            Ok(v) => scores.push(v),
            Err(e @ Error::NotJpeg { .. }) => return Err(e),
            Err(e) => return Err(e.for_sample(&rec.id)),
        }
    }
    let mut table = ScoreTable::new(manifest.ids());
    table.set_column("bpp", scores, Some(cfg.echo()))?;
    Ok(table)
}

/// Summary of a score column with Tukey low-outlier flags
/// (`value < Q1 - 1.5 * IQR`). Heavily pre-compressed sources show up here as
/// implausibly low bits per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreStats {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub low_outliers: Vec<usize>,
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn score_stats(values: &[f64]) -> Result<ScoreStats> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no scores to summarise".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("score at index {i}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    let fence = q1 - 1.5 * (q3 - q1);
    Ok(ScoreStats {
        count: values.len(),
        min: sorted[0],
        q1,
        median: quantile(&sorted, 0.5),
        q3,
        max: sorted[sorted.len() - 1],
        mean: values.iter().sum::<f64>() / values.len() as f64,
        low_outliers: (0..values.len()).filter(|&i| values[i] < fence).collect(),
    })
}
