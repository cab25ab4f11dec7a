//! Ground-truth label histograms and the Jensen-Shannon divergence between
//! them.

use std::f64::consts::LN_2;

use crate::dataset::{FeatureMatrix, MaskBuffer};
use crate::error::{Error, Result};

/// Conventional void label of VOC/ADE-style masks.
pub const DEFAULT_IGNORE_INDEX: u32 = 255;

/// Normalised class frequencies of one mask.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelHistogram {
    probs: Vec<f64>,
    counted_pixels: u64,
}

impl LabelHistogram {
    /// Wraps an existing probability vector (entries in `[0, 1]`, sum 1
    /// within 1e-9).
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        check_distribution(&probs)?;
        Ok(Self {
            probs,
            counted_pixels: 0,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn counted_pixels(&self) -> u64 {
        self.counted_pixels
    }
}

pub(crate) fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidArgument("empty distribution".into()));
    }
    if let Some(i) = p.iter().position(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidArgument(format!(
            "probability {} at class {i} is outside [0, 1]",
            p[i]
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Class frequencies of `mask` over `num_classes` classes, skipping pixels
/// labelled `ignore_index`.
pub fn histogram(
    mask: &MaskBuffer,
    num_classes: usize,
    ignore_index: Option<u32>,
) -> Result<LabelHistogram> {
    if num_classes == 0 {
        return Err(Error::InvalidArgument("num_classes must be positive".into()));
    }
    let mut counts = vec![0u64; num_classes];
    let mut counted = 0u64;
    for (offset, &label) in mask.labels().iter().enumerate() {
        if Some(label) == ignore_index {
            continue;
        }
        let slot = counts
            .get_mut(label as usize)
            .ok_or(Error::LabelOutOfRange {
                label,
                offset,
                num_classes,
            })?;
        *slot += 1;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::EmptyHistogram);
    }
    let total = counted as f64;
    Ok(LabelHistogram {
        probs: counts.iter().map(|&c| c as f64 / total).collect(),
        counted_pixels: counted,
    })
}

/// `p * ln(p / m)` with `0 * ln(0 / m) = 0`.
#[inline]
fn kl_term(p: f64, m: f64) -> f64 {
    if p > 0.0 {
        p * (p / m).ln()
    } else {
        0.0
    }
}

/// Jensen-Shannon divergence in nats between two probability slices of equal
/// length. Each class contributes `(kl(p) + kl(q)) / 2` with the two terms
/// added commutatively, so swapping the arguments gives a bitwise-identical
/// result. The sum is clamped to `[0, ln 2]`.
pub(crate) fn jsd_slices(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let total: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let m = 0.5 * (a + b);
            0.5 * (kl_term(a, m) + kl_term(b, m))
        })
        .sum();
    total.clamp(0.0, LN_2)
}

/// Jensen-Shannon divergence (natural log) between two histograms.
pub fn jsd(p: &LabelHistogram, q: &LabelHistogram) -> Result<f64> {
    if p.num_classes() != q.num_classes() {
        return Err(Error::DimensionMismatch(format!(
            "histograms over {} and {} classes",
            p.num_classes(),
            q.num_classes()
        )));
    }
    Ok(jsd_slices(&p.probs, &q.probs))
}

/// Square root of [`jsd`], a metric on distributions.
pub fn js_distance(p: &LabelHistogram, q: &LabelHistogram) -> Result<f64> {
    jsd(p, q).map(f64::sqrt)
}

/// Stacks histograms into an `n x C` matrix, e.g. for export or graph
/// construction.
pub fn to_feature_matrix(hists: &[LabelHistogram]) -> Result<FeatureMatrix> {
    let c = hists.first().map_or(0, LabelHistogram::num_classes);
    if hists.iter().any(|h| h.num_classes() != c) {
        return Err(Error::DimensionMismatch(
            "histograms have different class counts".into(),
        ));
    }
    FeatureMatrix::new(
        hists.len(),
        c,
        hists.iter().flat_map(|h| h.probs.iter().copied()).collect(),
    )
}
