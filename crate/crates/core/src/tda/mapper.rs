use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PointCloud, Result, TdaError};

/// Overlapping interval cover of the lens range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cover {
    pub n_intervals: usize,
    /// Fraction of each interval shared with its neighbour.
    pub overlap: f64,
}

impl Default for Cover {
    fn default() -> Self {
        Self { n_intervals: 10, overlap: 0.35 }
    }
}

impl Cover {
    pub fn validate(&self) -> Result<()> {
        if self.n_intervals < 1 {
            return Err(TdaError::BadCover("n_intervals must be at least 1".into()));
        }
        if !(self.overlap > 0.0 && self.overlap < 1.0) {
            return Err(TdaError::BadCover(format!("overlap {} not in (0, 1)", self.overlap)));
        }
        Ok(())
    }

    /// Closed intervals over `[lo, hi]`. A zero-width range gets one interval.
    pub fn intervals(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        if hi <= lo {
            return vec![(lo, hi)];
        }
        let step = (hi - lo) / self.n_intervals as f64;
        let pad = (step / (1.0 - self.overlap) - step) / 2.0;
        (0..self.n_intervals)
            .map(|i| (lo + i as f64 * step - pad, lo + (i + 1) as f64 * step + pad))
            .collect()
    }
}

/// Scalar filter on points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lens {
    /// One coordinate of the (reduced) cloud; 0 is the first principal axis.
    Coordinate(usize),
}

impl Default for Lens {
    fn default() -> Self {
        Lens::Coordinate(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapperNode {
    pub node_id: usize,
    pub interval: usize,
    /// Sorted doc ids.
    pub members: Vec<String>,
    pub mean_gbv: f64,
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapperEdge {
    pub source: usize,
    pub target: usize,
    pub shared: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapperGraph {
    pub nodes: Vec<MapperNode>,
    pub edges: Vec<MapperEdge>,
}

impl MapperGraph {
    pub fn components(&self) -> usize {
        let mut uf = UnionFind::new(self.nodes.len());
        for e in &self.edges {
            uf.union(e.source, e.target);
        }
        (0..self.nodes.len()).filter(|&i| uf.find(i) == i).count()
    }

    /// Independent cycles: `E − V + C`.
    pub fn first_betti(&self) -> usize {
        self.edges.len() + self.components() - self.nodes.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller root wins so the result is order independent
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Half the median pairwise distance among `points`; 0 for fewer than two.
fn default_eps(points: &[&[f64]]) -> f64 {
    let mut d: Vec<f64> = Vec::new();
    for i in 0..points.len() {
        for j in 0..i {
            d.push(distance(points[i], points[j]));
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let median = if m % 2 == 1 { d[m / 2] } else { 0.5 * (d[m / 2 - 1] + d[m / 2]) };
    0.5 * median
}

/// Single-linkage clusters (distance ≤ eps) as lists of member indices.
fn single_linkage(members: &[usize], cloud: &PointCloud, eps: Option<f64>) -> Vec<Vec<usize>> {
    let pts: Vec<&[f64]> = members.iter().map(|&i| cloud.coords[i].as_slice()).collect();
    let eps = eps.unwrap_or_else(|| default_eps(&pts));
    let mut uf = UnionFind::new(pts.len());
    for i in 0..pts.len() {
        for j in 0..i {
            if distance(pts[i], pts[j]) <= eps {
                uf.union(i, j);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..pts.len() {
        groups.entry(uf.find(i)).or_default().push(members[i]);
    }
    groups.into_values().collect()
}

/// Builds the nerve graph. `cluster_eps = None` uses half the median
/// pairwise distance inside each interval's preimage.
pub fn mapper(cloud: &PointCloud, lens: Lens, cover: &Cover, cluster_eps: Option<f64>) -> Result<MapperGraph> {
    cover.validate()?;
    if cloud.is_empty() {
        return Err(TdaError::EmptyInput);
    }
    if let Some(eps) = cluster_eps {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(TdaError::BadCover(format!("cluster eps {eps} must be finite and non-negative")));
        }
    }
    let Lens::Coordinate(axis) = lens;
    if axis >= cloud.dim() {
        return Err(TdaError::BadLens(axis));
    }
    let scores: Vec<f64> = cloud
        .ids
        .iter()
        .map(|id| cloud.extra.get(id).copied().ok_or_else(|| TdaError::MissingScore(id.clone())))
        .collect::<Result<_>>()?;

    let values: Vec<f64> = cloud.coords.iter().map(|r| r[axis]).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let intervals = cover.intervals(lo, hi);

    let per_interval: Vec<Vec<Vec<usize>>> = intervals
        .par_iter()
        .map(|&(a, b)| {
            let members: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= a && values[i] <= b).collect();
            if members.is_empty() {
                Vec::new()
            } else {
                single_linkage(&members, cloud, cluster_eps)
            }
        })
        .collect();

    let mut keyed: Vec<(usize, Vec<String>, f64)> = Vec::new();
    for (interval, clusters) in per_interval.into_iter().enumerate() {
        for cluster in clusters {
            let mut cluster = cluster;
            cluster.sort_by(|&a, &b| cloud.ids[a].cmp(&cloud.ids[b]));
            let mean = cluster.iter().map(|&i| scores[i]).sum::<f64>() / cluster.len() as f64;
            let ids: Vec<String> = cluster.iter().map(|&i| cloud.ids[i].clone()).collect();
            keyed.push((interval, ids, mean));
        }
    }
    keyed.sort_by(|a, b| (a.0, &a.1[0]).cmp(&(b.0, &b.1[0])));

    let nodes: Vec<MapperNode> = keyed
        .into_iter()
        .enumerate()
        .map(|(node_id, (interval, members, mean_gbv))| MapperNode {
            node_id,
            interval,
            size: members.len(),
            members,
            mean_gbv,
            color: None,
            radius: None,
        })
        .collect();

    let sets: Vec<BTreeSet<&str>> = nodes.iter().map(|n| n.members.iter().map(String::as_str).collect()).collect();
    let mut edges = Vec::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let shared = sets[i].intersection(&sets[j]).count();
            if shared > 0 {
                edges.push(MapperEdge { source: i, target: j, shared });
            }
        }
    }
    Ok(MapperGraph { nodes, edges })
}

/// Adds render hints: colour = min–max normalised mean score (0 when all
/// equal), radius = √size.
pub fn decorate(graph: &MapperGraph) -> MapperGraph {
    let lo = graph.nodes.iter().map(|n| n.mean_gbv).fold(f64::INFINITY, f64::min);
    let hi = graph.nodes.iter().map(|n| n.mean_gbv).fold(f64::NEG_INFINITY, f64::max);
    let mut out = graph.clone();
    for n in &mut out.nodes {
        n.color = Some(if hi > lo { (n.mean_gbv - lo) / (hi - lo) } else { 0.0 });
        n.radius = Some((n.size as f64).sqrt());
    }
    out
}
