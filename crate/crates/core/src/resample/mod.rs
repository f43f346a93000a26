//! Per-point sharpness scorers and top-fraction point selection.

mod kernel;
mod lhf;

pub use kernel::{hkc_scores, hkf_scores, local_count_signal, KernelScorer};
pub use lhf::{
    lhf_local_sharpness, lhf_local_signal, lhf_scores, lhf_scores_detailed, LhfConfig, LhfOutput,
};

use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Hkc,
    Hkf,
    Lhf,
    PcaBaseline,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Hkc => "hkc",
            Method::Hkf => "hkf",
            Method::Lhf => "lhf",
            Method::PcaBaseline => "pca",
        }
    }
}

/// Which end of a score vector holds the sharp points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    SharpHigh,
    SharpLow,
}

/// Which end of the ranking to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    #[default]
    Sharp,
    Smooth,
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharp" => Ok(Selection::Sharp),
            "smooth" => Ok(Selection::Smooth),
            other => Err(Error::invalid(format!("unknown selection '{other}'"))),
        }
    }
}

/// Per-point scores of one method, aligned with the source cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    scores: Vec<f64>,
    method: Method,
    direction: Direction,
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>, method: Method, direction: Direction) -> Result<Self> {
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("score {i} is not finite")));
        }
        Ok(Self {
            scores,
            method,
            direction,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }
}

/// Number of points kept at ratio `alpha`: `round(alpha * n)`, at least one.
pub fn selection_size(n: usize, alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!(
            "resampling ratio must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(((alpha * n as f64).round() as usize).clamp(1, n.max(1)))
}

/// The `round(alpha * N)` sharpest points, as ascending indices.
pub fn select_points(scores: &ScoreVector, alpha: f64) -> Result<Vec<usize>> {
    select_points_as(scores, alpha, Selection::Sharp)
}

/// [`select_points`] with an explicit choice of the sharp or the smooth end.
///
/// Ranking ties are broken by ascending point index in both modes.
pub fn select_points_as(
    scores: &ScoreVector,
    alpha: f64,
    selection: Selection,
) -> Result<Vec<usize>> {
    let n = scores.len();
    let keep = selection_size(n, alpha)?;
    if n == 0 {
        return Err(Error::invalid("cannot select from an empty score vector"));
    }
    let s = scores.scores();
    let descending = matches!(
        (scores.direction, selection),
        (Direction::SharpHigh, Selection::Sharp) | (Direction::SharpLow, Selection::Smooth)
    );
    let mut order: Vec<usize> = (0..n).collect();
    let cmp = |a: &usize, b: &usize| {
        let by_score = if descending {
            s[*b].total_cmp(&s[*a])
        } else {
            s[*a].total_cmp(&s[*b])
        };
        by_score.then(a.cmp(b))
    };
    if keep < n {
        order.select_nth_unstable_by(keep - 1, cmp);
        order.truncate(keep);
    }
    order.sort_unstable();
    Ok(order)
}

/// `index,score` CSV.
pub fn write_scores_csv<W: Write>(scores: &ScoreVector, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "index,score")?;
    for (i, s) in scores.scores().iter().enumerate() {
        writeln!(w, "{i},{s}")?;
    }
    Ok(())
}

/// Whole cloud as CSV with an extra 0/1 `selected` column.
pub fn write_selection_csv<W: Write>(
    cloud: &PointCloud,
    selected: &[usize],
    w: &mut W,
) -> std::io::Result<()> {
    let mut flag = vec![false; cloud.len()];
    for &i in selected {
        if i < flag.len() {
            flag[i] = true;
        }
    }
    let labels = cloud.labels();
    write!(w, "x,y,z")?;
    if labels.is_some() {
        write!(w, ",edge")?;
    }
    writeln!(w, ",selected")?;
    for (i, p) in cloud.points().iter().enumerate() {
        write!(w, "{},{},{}", p[0], p[1], p[2])?;
        if let Some(l) = labels {
            write!(w, ",{}", l[i] as u8)?;
        }
        writeln!(w, ",{}", flag[i] as u8)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(scores: Vec<f64>, direction: Direction) -> ScoreVector {
        ScoreVector::new(scores, Method::Hkf, direction).unwrap()
    }

    #[test]
    fn argmax_selection() {
        let s = sv(vec![3.0, 1.0, 2.0], Direction::SharpHigh);
        assert_eq!(select_points(&s, 1.0 / 3.0).unwrap(), vec![0]);
        let s = sv(vec![3.0, 1.0, 2.0], Direction::SharpLow);
        assert_eq!(select_points(&s, 1.0 / 3.0).unwrap(), vec![1]);
        assert_eq!(
            select_points_as(&s, 1.0 / 3.0, Selection::Smooth).unwrap(),
            vec![0]
        );
    }

    #[test]
    fn full_selection() {
        let s = sv(vec![0.5, 0.1, 0.9, 0.3], Direction::SharpHigh);
        assert_eq!(select_points(&s, 1.0).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn tie_break_by_index() {
        for dir in [Direction::SharpHigh, Direction::SharpLow] {
            let s = sv(vec![1.0; 4], dir);
            assert_eq!(select_points(&s, 0.5).unwrap(), vec![0, 1]);
            assert_eq!(
                select_points_as(&s, 0.5, Selection::Smooth).unwrap(),
                vec![0, 1]
            );
        }
    }

    #[test]
    fn at_least_one_point() {
        let s = sv(vec![0.0, 1.0, 2.0], Direction::SharpHigh);
        assert_eq!(select_points(&s, 0.01).unwrap(), vec![2]);
    }

    #[test]
    fn rejects_bad_alpha() {
        let s = sv(vec![0.0, 1.0], Direction::SharpHigh);
        for a in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(select_points(&s, a).is_err());
        }
    }

    #[test]
    fn rejects_non_finite_scores() {
        assert!(ScoreVector::new(vec![f64::NAN], Method::Hkc, Direction::SharpLow).is_err());
    }

    #[test]
    fn csv_exports() {
        let s = sv(vec![0.5, 1.0], Direction::SharpHigh);
        let mut buf = Vec::new();
        write_scores_csv(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,score\n0,0.5\n1,1\n");

        let cloud = PointCloud::new(vec![[0.0; 3], [1.0, 2.0, 3.0]]).unwrap();
        let mut buf = Vec::new();
        write_selection_csv(&cloud, &[1], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x,y,z,selected\n0,0,0,0\n1,2,3,1\n"
        );
    }
}
