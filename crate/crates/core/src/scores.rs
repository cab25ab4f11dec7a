//! Score composition and ranking.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sampler::{Selection, SelectionEntry, SelectionParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    Ascending,
    Descending,
}

impl Order {
    pub fn as_str(self) -> &'static str {
        match self {
            Order::Ascending => "asc",
            Order::Descending => "desc",
        }
    }

    /// Orders two scores so that the preferred one compares `Less`.
    pub(crate) fn prefer(self, a: f64, b: f64) -> Ordering {
        match self {
            Order::Ascending => a.total_cmp(&b),
            Order::Descending => b.total_cmp(&a),
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asc" | "ascending" => Ok(Order::Ascending),
            "desc" | "descending" => Ok(Order::Descending),
            _ => Err(Error::InvalidArgument(format!(
                "order must be asc or desc, got {s:?}"
            ))),
        }
    }
}

/// `nll - bpp`. Both must be in bits per pixel; the caller is responsible
/// for the units of `nll`.
pub fn cpx(nll: f64, bpp: f64) -> Result<f64> {
    if !nll.is_finite() || !bpp.is_finite() {
        return Err(Error::NonFinite(format!("cpx(nll={nll}, bpp={bpp})")));
    }
    Ok(nll - bpp)
}

pub fn cpx_columns(nll: &[f64], bpp: &[f64]) -> Result<Vec<f64>> {
    if nll.len() != bpp.len() {
        return Err(Error::DimensionMismatch(format!(
            "nll has {} values, bpp has {}",
            nll.len(),
            bpp.len()
        )));
    }
    nll.iter()
        .zip(bpp)
        .enumerate()
        .map(|(i, (&a, &b))| {
            cpx(a, b).map_err(|_| Error::NonFinite(format!("nll/bpp at index {i}")))
        })
        .collect()
}

/// A permutation of sample indices sorted by score.
#[derive(Clone, Debug, PartialEq)]
pub struct Ranking {
    pub permutation: Vec<usize>,
    pub order: Order,
    pub score_name: String,
    scores: Vec<f64>,
}

impl Ranking {
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.score_name = name.into();
        self
    }
}

/// Sorts sample indices by score in `order`; equal scores keep ascending
/// index order.
pub fn rank(scores: &[f64], order: Order) -> Result<Ranking> {
    if let Some(i) = scores.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "score {} at sample index {i}",
            scores[i]
        )));
    }
    let mut permutation: Vec<usize> = (0..scores.len()).collect();
    // Stable sort keeps ties in index order.
    permutation.sort_by(|&a, &b| order.prefer(scores[a], scores[b]));
    Ok(Ranking {
        permutation,
        order,
        score_name: "score".into(),
        scores: scores.to_vec(),
    })
}

/// The first `m` ranked samples, with final scores equal to the originals.
pub fn top_m(ranking: &Ranking, m: usize) -> Result<Selection> {
    let n = ranking.permutation.len();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "selection size {m} outside 1..={n}"
        )));
    }
    let entries = ranking.permutation[..m]
        .iter()
        .map(|&i| SelectionEntry {
            index: i,
            id: i.to_string(),
            original_score: ranking.scores[i],
            final_score: ranking.scores[i],
        })
        .collect();
    Ok(Selection {
        entries,
        params: SelectionParams {
            score_name: ranking.score_name.clone(),
            order: ranking.order,
            graph: "none".into(),
            knn: None,
            sigma: None,
            m,
            seed: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cpx_examples() {
        assert!((cpx(3.2, 1.1).unwrap() - 2.1).abs() < 1e-15);
        assert_eq!(cpx(0.73, 0.73).unwrap(), 0.0);
        assert_eq!(cpx_columns(&[4.0, 2.0], &[1.0, 3.0]).unwrap(), [3.0, -1.0]);
        assert!(cpx(f64::NAN, 1.0).is_err());
        assert!(cpx(1.0, f64::INFINITY).is_err());
        assert!(cpx_columns(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rank_examples() {
        let s = [0.5, 0.1, 0.9];
        assert_eq!(rank(&s, Order::Descending).unwrap().permutation, [2, 0, 1]);
        assert_eq!(rank(&s, Order::Ascending).unwrap().permutation, [1, 0, 2]);
        let t = [0.7, 0.7, 0.1];
        assert_eq!(rank(&t, Order::Descending).unwrap().permutation, [0, 1, 2]);
        assert_eq!(rank(&t, Order::Ascending).unwrap().permutation, [2, 0, 1]);
        match rank(&[1.0, f64::NAN], Order::Ascending).unwrap_err() {
            Error::NonFinite(msg) => assert!(msg.contains("index 1")),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn top_m_examples() {
        let r = rank(&[0.5, 0.1, 0.9], Order::Descending).unwrap();
        let sel = top_m(&r, 2).unwrap();
        assert_eq!(sel.indices(), [2, 0]);
        assert_eq!(sel.entries[0].final_score, 0.9);
        assert_eq!(top_m(&r, 3).unwrap().indices(), [2, 0, 1]);
        assert!(top_m(&r, 0).is_err());
        assert!(top_m(&r, 4).is_err());
    }

    #[test]
    fn order_parses() {
        assert_eq!("asc".parse::<Order>().unwrap(), Order::Ascending);
        assert_eq!("desc".parse::<Order>().unwrap(), Order::Descending);
        assert!("up".parse::<Order>().is_err());
    }

    proptest! {
        #[test]
        fn asc_reverses_desc_for_distinct(
            s in prop::collection::btree_set(-10_000i32..10_000, 1..60)
                .prop_map(|s| s.into_iter().map(|x| x as f64 / 7.0).collect::<Vec<_>>())
                .prop_shuffle()
        ) {
            let mut asc = rank(&s, Order::Ascending).unwrap().permutation;
            asc.reverse();
            prop_assert_eq!(asc, rank(&s, Order::Descending).unwrap().permutation);
        }

        #[test]
        fn rank_invariant_under_increasing_transform(
            v in prop::collection::vec(-10f64..10.0, 1..60),
            desc in any::<bool>(),
        ) {
            let order = if desc { Order::Descending } else { Order::Ascending };
            let t: Vec<f64> = v.iter().map(|x| x.exp()).collect();
            // rounding may merge near-equal inputs
            let distinct = |s: &[f64]| {
                let mut s = s.to_vec();
                s.sort_by(f64::total_cmp);
                s.dedup();
                s.len()
            };
            prop_assume!(distinct(&v) == distinct(&t));
            prop_assert_eq!(
                rank(&v, order).unwrap().permutation,
                rank(&t, order).unwrap().permutation
            );
        }

        #[test]
        fn cpx_shift_linearity(
            a in -100f64..100.0, b in -100f64..100.0, c in -100f64..100.0
        ) {
            let lhs = cpx(a + c, b).unwrap();
            let rhs = cpx(a, b).unwrap() + c;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
        }

        #[test]
        fn top_m_prefix(v in prop::collection::vec(-5f64..5.0, 2..40), m_seed in any::<usize>()) {
            let r = rank(&v, Order::Descending).unwrap();
            let m = 1 + m_seed % (v.len() - 1);
            let a = top_m(&r, m).unwrap().indices();
            let b = top_m(&r, m + 1).unwrap().indices();
            prop_assert_eq!(&a[..], &b[..m]);
        }
    }
}
