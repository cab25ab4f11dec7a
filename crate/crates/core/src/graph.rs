//! Symmetric Gaussian-weighted K-NN graphs.
//!
//! Neighbour search is exact brute force. Each node keeps its `k` nearest
//! neighbours (ties broken by lower index), the directed lists are merged by
//! edge union, and every undirected edge gets the weight
//! `exp(-d^2 / (2 sigma^2))`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dataset::{read_commented, write_csv, FeatureMatrix};
use crate::error::{Error, Result};
use crate::histogram::{check_distribution, jsd_slices};

/// Floor applied to a zero median bandwidth.
pub const SIGMA_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    /// L2 distance between feature rows.
    Euclidean,
    /// Jensen-Shannon divergence between histogram rows.
    Jsd,
    /// Square root of the Jensen-Shannon divergence.
    SqrtJsd,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Jsd => "jsd",
            Metric::SqrtJsd => "sqrt-jsd",
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Jsd => jsd_slices(a, b),
            Metric::SqrtJsd => jsd_slices(a, b).sqrt(),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "jsd" => Ok(Metric::Jsd),
            "sqrt-jsd" => Ok(Metric::SqrtJsd),
            _ => Err(Error::InvalidArgument(format!("unknown metric {s:?}"))),
        }
    }
}

/// Directed K-NN lists: `neighbors[i]` holds `(j, d(i, j))` sorted by
/// distance, then index.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnLists {
    pub k: usize,
    pub metric: Metric,
    pub neighbors: Vec<Vec<(usize, f64)>>,
}

impl KnnLists {
    pub fn n(&self) -> usize {
        self.neighbors.len()
    }
}

fn by_distance_then_index(a: &(usize, f64), b: &(usize, f64)) -> std::cmp::Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

/// Exact K nearest neighbours of every row of `points` under `metric`.
/// For the JSD metrics each row must be a probability vector.
pub fn pairwise_knn(points: &FeatureMatrix, metric: Metric, k: usize) -> Result<KnnLists> {
    let n = points.n();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "K-NN needs at least 2 points, got {n}"
        )));
    }
    if k == 0 || k > n - 1 {
        return Err(Error::InvalidArgument(format!(
            "K must be in 1..={}, got {k}",
            n - 1
        )));
    }
    if matches!(metric, Metric::Jsd | Metric::SqrtJsd) {
        for (i, row) in points.rows().enumerate() {
            check_distribution(row)
                .map_err(|e| Error::InvalidArgument(format!("histogram row {i}: {e}")))?;
        }
    }
    let neighbors = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = points.row(i);
            let mut cand: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, metric.distance(a, points.row(j))))
                .collect();
            if let Some(&(j, d)) = cand.iter().find(|(_, d)| !d.is_finite()) {
                return Err(Error::NonFinite(format!("distance between {i} and {j} is {d}")));
            }
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_distance_then_index);
                cand.truncate(k);
            }
            cand.sort_by(by_distance_then_index);
            Ok(cand)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KnnLists {
        k,
        metric,
        neighbors,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth {
    /// Median of the retained undirected edge distances.
    Median,
    Fixed(f64),
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Median => f.write_str("median"),
            Bandwidth::Fixed(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "median" {
            return Ok(Bandwidth::Median);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(Bandwidth::Fixed(v)),
            _ => Err(Error::InvalidArgument(format!(
                "sigma must be \"median\" or a positive number, got {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub neighbor: usize,
    pub distance: f64,
    pub weight: f64,
}

/// Gaussian kernel `exp(-d^2 / (2 sigma^2))`, kept strictly positive.
pub fn gaussian_weight(distance: f64, sigma: f64) -> f64 {
    let r = distance / sigma;
    (-0.5 * r * r).exp().max(f64::MIN_POSITIVE)
}

/// Undirected weighted graph. Adjacency lists are sorted by neighbour index
/// and every edge is stored in both directions.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnGraph {
    adjacency: Vec<Vec<Edge>>,
    k: usize,
    sigma: Option<f64>,
    metric: Option<Metric>,
}

impl KnnGraph {
    /// A graph with `n` nodes and no edges.
    pub fn edgeless(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
            k: 0,
            sigma: None,
            metric: None,
        }
    }

    /// Builds a graph from undirected edges `(i, j, distance, weight)`.
    /// Used for hand-made fixtures and for reading edge dumps.
    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize, f64, f64)],
        k: usize,
        sigma: Option<f64>,
        metric: Option<Metric>,
    ) -> Result<Self> {
        let mut unique = BTreeMap::new();
        for &(i, j, d, w) in edges {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "bad edge ({i}, {j}) for {n} nodes"
                )));
            }
            if !(d.is_finite() && d >= 0.0 && w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i}, {j}) has distance {d} and weight {w}"
                )));
            }
            if unique.insert((i.min(j), i.max(j)), (d, w)).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(Self::from_unique(n, &unique, k, sigma, metric))
    }

    fn from_unique(
        n: usize,
        unique: &BTreeMap<(usize, usize), (f64, f64)>,
        k: usize,
        sigma: Option<f64>,
        metric: Option<Metric>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for (&(i, j), &(distance, weight)) in unique {
            adjacency[i].push(Edge {
                neighbor: j,
                distance,
                weight,
            });
            adjacency[j].push(Edge {
                neighbor: i,
                distance,
                weight,
            });
        }
        for list in &mut adjacency {
            list.sort_by_key(|e| e.neighbor);
        }
        Self {
            adjacency,
            k,
            sigma,
            metric,
        }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    pub fn metric(&self) -> Option<Metric> {
        self.metric
    }

    pub fn neighbors(&self, i: usize) -> &[Edge] {
        &self.adjacency[i]
    }

    /// Undirected edges `(i, j, distance, weight)` with `i < j`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .filter(move |e| e.neighbor > i)
                .map(move |e| (i, e.neighbor, e.distance, e.weight))
        })
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn echo(&self) -> String {
        format!(
            "graph n={} metric={} knn={} sigma={}",
            self.n(),
            self.metric.map_or("none", Metric::as_str),
            self.k,
            self.sigma.map_or_else(|| "none".to_string(), |s| s.to_string())
        )
    }

    /// Writes `i,j,distance,weight`, one line per undirected edge.
    pub fn write_edges(&self, path: impl AsRef<Path>, extra_comments: &[String]) -> Result<()> {
        let mut comments = vec![self.echo()];
        comments.extend_from_slice(extra_comments);
        let header: Vec<String> = ["i", "j", "distance", "weight"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows = self.edges().map(|(i, j, d, w)| {
            vec![i.to_string(), j.to_string(), d.to_string(), w.to_string()]
        });
        write_csv(path.as_ref(), &comments, &header, rows)
    }
}

/// Reads an edge dump written by [`KnnGraph::write_edges`].
pub fn load_graph_edges(path: impl AsRef<Path>) -> Result<KnnGraph> {
    let path = path.as_ref();
    let (comments, body) = read_commented(path)?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let echo = comments
        .iter()
        .find(|c| c.starts_with("graph "))
        .ok_or_else(|| parse_err(1, "missing \"# graph ...\" header".into()))?;
    let field = |key: &str| {
        echo.split_whitespace()
            .find_map(|t| t.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
            .ok_or_else(|| parse_err(1, format!("graph header lacks {key}")))
    };
    let n: usize = field("n")?
        .parse()
        .map_err(|_| parse_err(1, "bad n".into()))?;
    let k: usize = field("knn")?
        .parse()
        .map_err(|_| parse_err(1, "bad knn".into()))?;
    let metric = match field("metric")? {
        "none" => None,
        m => Some(m.parse()?),
    };
    let sigma = match field("sigma")? {
        "none" => None,
        s => Some(s.parse().map_err(|_| parse_err(1, "bad sigma".into()))?),
    };

    let skipped = comments.len();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let mut edges = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_err(skipped, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize) + skipped;
        if rec.len() != 4 {
            return Err(parse_err(line, "expected i,j,distance,weight".into()));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| parse_err(line, format!("bad index {s:?}")));
        let real = |s: &str| s.parse::<f64>().map_err(|_| parse_err(line, format!("bad number {s:?}")));
        edges.push((int(&rec[0])?, int(&rec[1])?, real(&rec[2])?, real(&rec[3])?));
    }
    KnnGraph::from_edges(n, &edges, k, sigma, metric)
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Symmetrises directed K-NN lists by edge union and applies the Gaussian
/// kernel.
pub fn build_graph(lists: &KnnLists, bandwidth: Bandwidth) -> Result<KnnGraph> {
    let n = lists.n();
    let mut unique: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, list) in lists.neighbors.iter().enumerate() {
        for &(j, d) in list {
            if j >= n || j == i {
                return Err(Error::InvalidArgument(format!(
                    "neighbour list of {i} contains {j}"
                )));
            }
            if !d.is_finite() || d < 0.0 {
                return Err(Error::NonFinite(format!("distance {d} on edge ({i}, {j})")));
            }
            unique.entry((i.min(j), i.max(j))).or_insert(d);
        }
    }

    let sigma = match bandwidth {
        Bandwidth::Fixed(s) => {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidArgument(format!("sigma must be positive, got {s}")));
            }
            s
        }
        Bandwidth::Median => {
            let mut ds: Vec<f64> = unique.values().copied().collect();
            if ds.iter().all(|&d| d == 0.0) {
                return Err(Error::DegenerateBandwidth);
            }
            ds.sort_by(f64::total_cmp);
            median(&ds).max(SIGMA_FLOOR)
        }
    };

    let weighted = unique
        .into_iter()
        .map(|(key, d)| (key, (d, gaussian_weight(d, sigma))))
        .collect();
    Ok(KnnGraph::from_unique(
        n,
        &weighted,
        lists.k,
        Some(sigma),
        Some(lists.metric),
    ))
}
