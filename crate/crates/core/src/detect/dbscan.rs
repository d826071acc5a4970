use serde::{Deserialize, Serialize};

use super::{dist, minutes_between};
use crate::error::{Error, Result};
use crate::pings::Ping;

pub const NOISE: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    /// Blocks.
    pub dist_thresh: f64,
    /// Minutes.
    pub time_thresh: f64,
    /// Neighbours (not counting the point itself) needed to be a core point.
    pub min_pts: usize,
}

impl DbscanParams {
    pub fn new(dist_thresh: f64, time_thresh: f64, min_pts: usize) -> Self {
        DbscanParams { dist_thresh, time_thresh, min_pts }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dist_thresh >= 0.0 && self.dist_thresh.is_finite()) {
            return Err(Error::invalid(format!("dist_thresh must be non-negative, got {}", self.dist_thresh)));
        }
        if !(self.time_thresh >= 0.0 && self.time_thresh.is_finite()) {
            return Err(Error::invalid(format!("time_thresh must be non-negative, got {}", self.time_thresh)));
        }
        Ok(())
    }
}

/// Cluster index per ping (`NOISE` for unclustered), numbered 0.. in order
/// of each cluster's earliest ping.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterLabeling {
    pub labels: Vec<i32>,
}

impl ClusterLabeling {
    pub fn num_clusters(&self) -> usize {
        self.labels.iter().map(|&l| l + 1).max().unwrap_or(0) as usize
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }
}

/// Temporal DBSCAN: neighbours are other pings within `dist_thresh` blocks
/// and `time_thresh` minutes. Clusters are connected components of core
/// points; a border point joins the neighbouring cluster whose earliest core
/// point comes first. The result does not depend on input order.
pub fn temporal_dbscan(pings: &[Ping], params: &DbscanParams) -> Result<ClusterLabeling> {
    params.validate()?;
    let n = pings.len();
    // Work in (time, x, y) order so ties and numbering are order-free.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| key(&pings[a]).partial_cmp(&key(&pings[b])).unwrap().then(a.cmp(&b)));
    let sorted: Vec<&Ping> = order.iter().map(|&i| &pings[i]).collect();

    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut lo = 0;
    for i in 0..n {
        while minutes_between(sorted[lo], sorted[i]) > params.time_thresh {
            lo += 1;
        }
        for j in lo..i {
            if dist(sorted[i], sorted[j]) <= params.dist_thresh {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= params.min_pts).collect();

    // Components of the core graph, keyed by their earliest core point.
    let mut comp = vec![usize::MAX; n];
    for root in 0..n {
        if !core[root] || comp[root] != usize::MAX {
            continue;
        }
        comp[root] = root;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &v in &neighbors[u] {
                if core[v] && comp[v] == usize::MAX {
                    comp[v] = root;
                    stack.push(v);
                }
            }
        }
    }
    for i in 0..n {
        if !core[i] {
            comp[i] = neighbors[i].iter().filter(|&&j| core[j]).map(|&j| comp[j]).min().unwrap_or(usize::MAX);
        }
    }

    // Renumber by earliest member, then map back to input order.
    let mut rename = std::collections::HashMap::new();
    let mut sorted_labels = vec![NOISE; n];
    for i in 0..n {
        if comp[i] != usize::MAX {
            let next = rename.len() as i32;
            sorted_labels[i] = *rename.entry(comp[i]).or_insert(next);
        }
    }
    let mut labels = vec![NOISE; n];
    for (pos, &i) in order.iter().enumerate() {
        labels[i] = sorted_labels[pos];
    }
    Ok(ClusterLabeling { labels })
}

fn key(p: &Ping) -> (i64, f64, f64) {
    (p.unix_timestamp, p.x, p.y)
}
