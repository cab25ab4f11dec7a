//! Greedy diversity-aware selection over a K-NN graph.
//!
//! In descending mode the unselected node with the largest working score is
//! taken, then every unselected neighbour `j` of the chosen node `i` has its
//! working score multiplied by `1 - w_ij`. Close neighbours (weight near 1)
//! are all but eliminated; distant ones barely move.
//!
//! Ascending mode reflects the scores, `s' = max(s) - s`, and runs the same
//! procedure: the lowest original score is taken first and its neighbours'
//! scores rise towards the maximum.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};
use crate::graph::KnnGraph;
use crate::scores::Order;

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionEntry {
    /// Position of the sample in manifest order.
    pub index: usize,
    pub id: String,
    pub original_score: f64,
    /// Score at the moment of selection, in the original score's units.
    pub final_score: f64,
}

/// Everything needed to reproduce a selection.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionParams {
    pub score_name: String,
    pub order: Order,
    /// `none`, `features`, `histogram`, or a description of a loaded graph.
    pub graph: String,
    pub knn: Option<usize>,
    pub sigma: Option<f64>,
    pub m: usize,
    pub seed: Option<u64>,
}

impl SelectionParams {
    pub fn echo(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        format!(
            "select score={} order={} graph={} knn={} sigma={} m={} seed={}",
            self.score_name,
            self.order,
            self.graph,
            opt(self.knn.map(|k| k.to_string())),
            opt(self.sigma.map(|s| s.to_string())),
            self.m,
            opt(self.seed.map(|s| s.to_string())),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub entries: Vec<SelectionEntry>,
    pub params: SelectionParams,
}

impl Selection {
    pub fn indices(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.index).collect()
    }

    /// Replaces index-based ids with the manifest ids.
    pub fn with_ids(mut self, ids: &[String]) -> Result<Self> {
        for e in &mut self.entries {
            e.id = ids
                .get(e.index)
                .ok_or_else(|| {
                    Error::DimensionMismatch(format!(
                        "selected index {} but only {} ids",
                        e.index,
                        ids.len()
                    ))
                })?
                .clone();
        }
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    working: f64,
    original: f64,
    index: usize,
    order: Order,
}

impl Candidate {
    /// `Greater` means "picked first".
    fn rank(&self, other: &Self) -> Ordering {
        self.working
            .total_cmp(&other.working)
            .then_with(|| self.order.prefer(other.original, self.original))
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.rank(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank(other)
    }
}

/// Mutable state of one greedy run. Exposed so callers can watch the working
/// scores evolve step by step.
#[derive(Debug)]
pub struct SamplerState<'g> {
    graph: &'g KnnGraph,
    order: Order,
    original: Vec<f64>,
    working: Vec<f64>,
    reflect_max: f64,
    touched: Vec<bool>,
    is_selected: Vec<bool>,
    selected: Vec<usize>,
    heap: BinaryHeap<Candidate>,
}

impl<'g> SamplerState<'g> {
    pub fn new(graph: &'g KnnGraph, scores: &[f64], order: Order) -> Result<Self> {
        if graph.n() != scores.len() {
            return Err(Error::DimensionMismatch(format!(
                "graph has {} nodes, {} scores given",
                graph.n(),
                scores.len()
            )));
        }
        if let Some(i) = scores.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("score at sample index {i}")));
        }
        let reflect_max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let working: Vec<f64> = match order {
            Order::Descending => {
                if let Some(i) = scores.iter().position(|&v| v < 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "descending graph selection needs non-negative scores; sample index {i} has {} (use --order asc or shift the scores)",
                        scores[i]
                    )));
                }
                scores.to_vec()
            }
            Order::Ascending => scores.iter().map(|&s| reflect_max - s).collect(),
        };
        let heap = working
            .iter()
            .enumerate()
            .map(|(index, &w)| Candidate {
                working: w,
                original: scores[index],
                index,
                order,
            })
            .collect();
        Ok(Self {
            graph,
            order,
            original: scores.to_vec(),
            working,
            reflect_max,
            touched: vec![false; scores.len()],
            is_selected: vec![false; scores.len()],
            selected: Vec::new(),
            heap,
        })
    }

    /// Working scores in the sampler's internal (descending) frame.
    pub fn working_scores(&self) -> &[f64] {
        &self.working
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.is_selected[i]
    }

    /// Score of node `i` reported in the original units.
    fn reported(&self, i: usize) -> f64 {
        match (self.order, self.touched[i]) {
            (_, false) => self.original[i],
            (Order::Descending, true) => self.working[i],
            (Order::Ascending, true) => self.reflect_max - self.working[i],
        }
    }

    /// Selects the next node and sends its messages. Returns the node and its
    /// score at selection time, or `None` when every node is taken.
    pub fn step(&mut self) -> Option<(usize, f64)> {
        let chosen = loop {
            let c = self.heap.pop()?;
            if !self.is_selected[c.index] && c.working.to_bits() == self.working[c.index].to_bits()
            {
                break c.index;
            }
        };
        let final_score = self.reported(chosen);
        self.is_selected[chosen] = true;
        self.selected.push(chosen);
        for e in self.graph.neighbors(chosen) {
            let j = e.neighbor;
            if self.is_selected[j] {
                continue;
            }
            self.working[j] *= 1.0 - e.weight;
            self.touched[j] = true;
            self.heap.push(Candidate {
                working: self.working[j],
                original: self.original[j],
                index: j,
                order: self.order,
            });
        }
        Some((chosen, final_score))
    }
}

/// Greedy selection of `m` nodes with neighbour suppression. With an
/// edgeless graph this reduces to the plain ranking cut.
pub fn graph_select(graph: &KnnGraph, scores: &[f64], m: usize, order: Order) -> Result<Selection> {
    let n = scores.len();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "selection size {m} outside 1..={n}"
        )));
    }
    let mut state = SamplerState::new(graph, scores, order)?;
    let mut entries = Vec::with_capacity(m);
    for _ in 0..m {
        let (index, final_score) = state.step().expect("m <= n nodes remain");
        entries.push(SelectionEntry {
            index,
            id: index.to_string(),
            original_score: scores[index],
            final_score,
        });
    }
    Ok(Selection {
        entries,
        params: SelectionParams {
            score_name: "score".into(),
            order,
            graph: if graph.num_edges() == 0 { "none" } else { "graph" }.into(),
            knn: (graph.k() > 0).then_some(graph.k()),
            sigma: graph.sigma(),
            m,
            seed: None,
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub selected: usize,
    /// Mean shortest-path distance over connected selected pairs.
    pub mean_pairwise_distance: Option<f64>,
    pub min_pairwise_distance: Option<f64>,
    /// Selected pairs with no connecting path.
    pub disconnected_pairs: usize,
    /// Fraction of all nodes that are selected or adjacent to a selected node.
    pub one_hop_coverage: f64,
}

#[derive(PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn shortest_paths(graph: &KnnGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.n()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Dist(0.0), source)));
    while let Some(Reverse((Dist(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for e in graph.neighbors(u) {
            let nd = d + e.distance;
            if nd < dist[e.neighbor] {
                dist[e.neighbor] = nd;
                heap.push(Reverse((Dist(nd), e.neighbor)));
            }
        }
    }
    dist
}

/// Spread of a selection over the graph. Pairwise distances are shortest
/// paths along graph edges.
pub fn coverage_stats(selection: &Selection, graph: &KnnGraph) -> Result<CoverageReport> {
    let sel = selection.indices();
    let mut seen = HashSet::new();
    for &i in &sel {
        if i >= graph.n() {
            return Err(Error::DimensionMismatch(format!(
                "selected index {i} but graph has {} nodes",
                graph.n()
            )));
        }
        if !seen.insert(i) {
            return Err(Error::InvalidArgument(format!("index {i} selected twice")));
        }
    }

    let mut covered = vec![false; graph.n()];
    for &i in &sel {
        covered[i] = true;
        for e in graph.neighbors(i) {
            covered[e.neighbor] = true;
        }
    }

    let mut sum = 0.0;
    let mut connected = 0usize;
    let mut disconnected = 0usize;
    let mut min = f64::INFINITY;
    for (a, &src) in sel.iter().enumerate() {
        let dist = shortest_paths(graph, src);
        for &dst in &sel[a + 1..] {
            let d = dist[dst];
            if d.is_finite() {
                sum += d;
                connected += 1;
                min = min.min(d);
            } else {
                disconnected += 1;
            }
        }
    }

    Ok(CoverageReport {
        selected: sel.len(),
        mean_pairwise_distance: (connected > 0).then(|| sum / connected as f64),
        min_pairwise_distance: (connected > 0).then_some(min),
        disconnected_pairs: disconnected,
        one_hop_coverage: if graph.n() == 0 {
            0.0
        } else {
            covered.iter().filter(|&&c| c).count() as f64 / graph.n() as f64
        },
    })
}
