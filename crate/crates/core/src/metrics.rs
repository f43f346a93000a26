//! Evaluation measures: edge precision/recall/F1, mean distance to the labelled
//! edge set, and thresholded nearest-neighbour distances between two clouds.

use crate::error::{Error, Result};
use crate::parallel::{pairwise_sum, par_map_indices};
use crate::pointcloud::{Point3, PointCloud, SpatialIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    let sum = precision + recall;
    if sum > 0.0 {
        2.0 * precision * recall / sum
    } else {
        0.0
    }
}

/// Precision, recall and F1 of a selected index set against per-point edge labels.
pub fn edge_prf(selected: &[usize], labels: &[bool]) -> Result<EdgeScores> {
    if selected.is_empty() {
        return Err(Error::invalid("selection is empty"));
    }
    let edges = labels.iter().filter(|&&e| e).count();
    if edges == 0 {
        return Err(Error::invalid("no points are labelled as edges"));
    }
    let mut seen = vec![false; labels.len()];
    let mut kept = 0usize;
    let mut hits = 0usize;
    for &i in selected {
        if i >= labels.len() {
            return Err(Error::invalid(format!(
                "selected index {i} out of range for {} labels",
                labels.len()
            )));
        }
        if !seen[i] {
            seen[i] = true;
            kept += 1;
            hits += labels[i] as usize;
        }
    }
    let precision = hits as f64 / kept as f64;
    let recall = hits as f64 / edges as f64;
    Ok(EdgeScores {
        precision,
        recall,
        f1: f1_score(precision, recall),
    })
}

/// Mean over `selected` of the distance to the closest point of `edges`.
pub fn mean_edge_distance(selected: &[Point3], edges: &[Point3]) -> Result<f64> {
    if selected.is_empty() || edges.is_empty() {
        return Err(Error::invalid(
            "mean edge distance needs non-empty selected and edge point sets",
        ));
    }
    let index = SpatialIndex::from_points(edges);
    let d = par_map_indices(selected.len(), |i| {
        index.nearest_to(&selected[i]).expect("non-empty").1.sqrt()
    });
    Ok(pairwise_sum(&d) / selected.len() as f64)
}

/// One direction of the thresholded cloud distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedDistance {
    /// mean nearest distance over matched points; `None` when nothing matched
    pub mean: Option<f64>,
    pub matched: usize,
}

/// Mean nearest-neighbour distance from `from` to `to`, over the points of `from`
/// whose nearest point in `to` is closer than `d_theta`.
pub fn matched_distance(from: &[Point3], to: &SpatialIndex, d_theta: f64) -> MatchedDistance {
    let nearest = par_map_indices(from.len(), |i| {
        to.nearest_to(&from[i]).map(|(_, d2)| d2.sqrt())
    });
    let within: Vec<f64> = nearest
        .into_iter()
        .flatten()
        .filter(|&d| d < d_theta)
        .collect();
    MatchedDistance {
        mean: (!within.is_empty()).then(|| pairwise_sum(&within) / within.len() as f64),
        matched: within.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudDistance {
    pub d0: Option<f64>,
    pub dual_d0: Option<f64>,
    pub n1: usize,
    pub n2: usize,
    pub d_theta: f64,
}

/// Distance and dual distance between an original and a recovered cloud.
pub fn cloud_distance(
    original: &PointCloud,
    recovered: &PointCloud,
    d_theta: f64,
) -> Result<CloudDistance> {
    if !(d_theta > 0.0) || !d_theta.is_finite() {
        return Err(Error::invalid(format!(
            "distance threshold must be positive, got {d_theta}"
        )));
    }
    let orig_index = SpatialIndex::build(original);
    let rec_index = SpatialIndex::build(recovered);
    let fwd = matched_distance(original.points(), &rec_index, d_theta);
    let back = matched_distance(recovered.points(), &orig_index, d_theta);
    Ok(CloudDistance {
        d0: fwd.mean,
        dual_d0: back.mean,
        n1: fwd.matched,
        n2: back.matched,
        d_theta,
    })
}

/// Flat evaluation record; fields not measured by a run stay `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub name: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub mean_edge_distance: Option<f64>,
    pub d0: Option<f64>,
    pub dual_d0: Option<f64>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub d_theta: Option<f64>,
}

const FIELDS: [&str; 10] = [
    "name",
    "precision",
    "recall",
    "f1",
    "mean_edge_distance",
    "d0",
    "dual_d0",
    "n1",
    "n2",
    "d_theta",
];

fn fmt_f(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.6}"))
}

fn fmt_u(v: Option<usize>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl EvalReport {
    pub fn with_edges(mut self, scores: EdgeScores, mean_edge_distance: f64) -> Self {
        self.precision = Some(scores.precision);
        self.recall = Some(scores.recall);
        self.f1 = Some(scores.f1);
        self.mean_edge_distance = Some(mean_edge_distance);
        self
    }

    pub fn with_distance(mut self, d: CloudDistance) -> Self {
        self.d0 = d.d0;
        self.dual_d0 = d.dual_d0;
        self.n1 = Some(d.n1);
        self.n2 = Some(d.n2);
        self.d_theta = Some(d.d_theta);
        self
    }

    fn values(&self) -> [String; 10] {
        [
            self.name.clone(),
            fmt_f(self.precision),
            fmt_f(self.recall),
            fmt_f(self.f1),
            fmt_f(self.mean_edge_distance),
            fmt_f(self.d0),
            fmt_f(self.dual_d0),
            fmt_u(self.n1),
            fmt_u(self.n2),
            fmt_f(self.d_theta),
        ]
    }

    /// `key=value` lines for the measured fields. Undefined distances print as `nan`.
    pub fn to_key_values(&self) -> String {
        let edges = self.precision.is_some();
        let dist = self.n1.is_some();
        let mut out = String::new();
        for (k, v) in FIELDS.iter().zip(self.values()) {
            let show = match *k {
                "name" => !self.name.is_empty(),
                "precision" | "recall" | "f1" | "mean_edge_distance" => edges,
                _ => dist,
            };
            if show {
                out.push_str(&format!("{k}={v}\n"));
            }
        }
        out
    }

    pub fn csv_header() -> String {
        FIELDS.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        self.values().join(",")
    }
}
