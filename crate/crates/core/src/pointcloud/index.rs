use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{dist_sq, Point3, PointCloud};
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Neighbor candidate ordered by (squared distance, point index).
#[derive(Debug, Clone, Copy)]
struct Candidate {
    d2: f64,
    idx: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
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
        self.d2
            .total_cmp(&other.d2)
            .then_with(|| self.idx.cmp(&other.idx))
    }
}

/// Static kd-tree over a point cloud.
///
/// Every query is exact: results equal a linear scan with ties broken by ascending
/// point index.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl SpatialIndex {
    pub fn build(cloud: &PointCloud) -> Self {
        Self::from_points(cloud.points())
    }

    pub fn from_points(points: &[Point3]) -> Self {
        let mut index = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1),
        };
        if !points.is_empty() {
            index.build_node(0, points.len());
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the widest axis of this block
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            let p = &self.points[i];
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
            .unwrap();
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
            points[i][axis].total_cmp(&points[j][axis]).then(i.cmp(&j))
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end }); // placeholder
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// The `m` nearest points to point `query`, excluding `query` itself, ascending by
    /// distance with ties broken by index.
    pub fn k_nearest(&self, query: usize, m: usize) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(m);
        self.k_nearest_into(query, m, &mut out)?;
        Ok(out)
    }

    /// Buffer-reusing form of [`SpatialIndex::k_nearest`].
    pub fn k_nearest_into(&self, query: usize, m: usize, out: &mut Vec<usize>) -> Result<()> {
        if query >= self.len() {
            return Err(Error::invalid(format!(
                "query index {query} out of range for {} points",
                self.len()
            )));
        }
        if m >= self.len() {
            return Err(Error::invalid(format!(
                "requested {m} neighbors but the cloud has only {} points",
                self.len()
            )));
        }
        let heap = self.knn_heap(&self.points[query], m, Some(query));
        out.clear();
        out.extend(heap.into_sorted_vec().into_iter().map(|c| c.idx));
        Ok(())
    }

    /// The `m` nearest indexed points to an arbitrary location, with squared distances.
    pub fn k_nearest_to(&self, q: &Point3, m: usize) -> Vec<(usize, f64)> {
        self.knn_heap(q, m.min(self.len()), None)
            .into_sorted_vec()
            .into_iter()
            .map(|c| (c.idx, c.d2))
            .collect()
    }

    /// Nearest indexed point to `q` and its squared distance; `None` for an empty index.
    pub fn nearest_to(&self, q: &Point3) -> Option<(usize, f64)> {
        self.k_nearest_to(q, 1).into_iter().next()
    }

    fn knn_heap(&self, q: &Point3, m: usize, exclude: Option<usize>) -> BinaryHeap<Candidate> {
        let mut heap = BinaryHeap::with_capacity(m + 1);
        if m > 0 && !self.nodes.is_empty() {
            self.knn_recurse(0, q, m, exclude, &mut heap);
        }
        heap
    }

    fn knn_recurse(
        &self,
        node: usize,
        q: &Point3,
        m: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &idx in &self.order[start..end] {
                    if Some(idx) == exclude {
                        continue;
                    }
                    let cand = Candidate {
                        d2: dist_sq(q, &self.points[idx]),
                        idx,
                    };
                    if heap.len() < m {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = q[axis] - value;
                let (near, far) = if delta < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.knn_recurse(near, q, m, exclude, heap);
                // equal distances must still be visited: they may carry a smaller index
                if heap.len() < m || delta * delta <= heap.peek().unwrap().d2 {
                    self.knn_recurse(far, q, m, exclude, heap);
                }
            }
        }
    }

    /// Calls `f(index, point)` for every point with `lo[a] <= p[a] <= hi[a]` on all axes.
    pub fn for_each_in_box(&self, lo: &Point3, hi: &Point3, mut f: impl FnMut(usize, &Point3)) {
        if !self.nodes.is_empty() {
            self.box_recurse(0, lo, hi, &mut f);
        }
    }

    fn box_recurse(
        &self,
        node: usize,
        lo: &Point3,
        hi: &Point3,
        f: &mut impl FnMut(usize, &Point3),
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &idx in &self.order[start..end] {
                    let p = &self.points[idx];
                    if (0..3).all(|a| lo[a] <= p[a] && p[a] <= hi[a]) {
                        f(idx, p);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                if lo[axis] <= value {
                    self.box_recurse(left, lo, hi, f);
                }
                if hi[axis] >= value {
                    self.box_recurse(right, lo, hi, f);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_knn(points: &[Point3], query: usize, m: usize) -> Vec<usize> {
        let mut all: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != query)
            .map(|(j, p)| (dist_sq(&points[query], p), j))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.into_iter().take(m).map(|(_, j)| j).collect()
    }

    fn cloud(points: Vec<Point3>) -> PointCloud {
        PointCloud::new(points).unwrap()
    }

    #[test]
    fn collinear_ordering() {
        let c = cloud(vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
            [5.0, 0.0, 0.0],
        ]);
        let idx = SpatialIndex::build(&c);
        assert_eq!(idx.k_nearest(0, 2).unwrap(), vec![1, 2]);
    }

    #[test]
    fn equilateral_tie_break() {
        let h = 3f64.sqrt() / 2.0;
        let c = cloud(vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.5, h, 0.0],
            [0.5, h / 3.0, 0.0],
        ]);
        let idx = SpatialIndex::build(&c);
        let got = idx.k_nearest(3, 3).unwrap();
        let mut sorted = got.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2]);
        assert_eq!(got, brute_knn(c.points(), 3, 3));
    }

    #[test]
    fn exact_ties_follow_index_order() {
        // a 2D lattice has many equal distances
        let mut pts = Vec::new();
        for x in 0..12 {
            for y in 0..12 {
                pts.push([x as f64, y as f64, 0.0]);
            }
        }
        let idx = SpatialIndex::from_points(&pts);
        for q in 0..pts.len() {
            assert_eq!(idx.k_nearest(q, 9).unwrap(), brute_knn(&pts, q, 9));
        }
    }

    #[test]
    fn random_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point3> = (0..500)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let idx = SpatialIndex::from_points(&pts);
        for q in 0..pts.len() {
            assert_eq!(idx.k_nearest(q, 8).unwrap(), brute_knn(&pts, q, 8));
        }
    }

    #[test]
    fn rejects_too_many_neighbors() {
        let c = cloud(vec![[0.0; 3], [1.0, 0.0, 0.0]]);
        let idx = SpatialIndex::build(&c);
        assert!(idx.k_nearest(0, 2).is_err());
        assert!(idx.k_nearest(5, 1).is_err());
        assert_eq!(idx.k_nearest(0, 1).unwrap(), vec![1]);
    }

    #[test]
    fn duplicates_are_neighbors() {
        let c = cloud(vec![[1.0; 3], [0.0; 3], [1.0; 3]]);
        let idx = SpatialIndex::build(&c);
        assert_eq!(idx.k_nearest(0, 1).unwrap(), vec![2]);
        assert_eq!(idx.k_nearest(2, 1).unwrap(), vec![0]);
    }

    #[test]
    fn box_query_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point3> = (0..800)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let idx = SpatialIndex::from_points(&pts);
        for _ in 0..50 {
            let c: Point3 = [rng.random(), rng.random(), rng.random()];
            let lo = [c[0] - 0.1, c[1] - 0.15, c[2] - 0.2];
            let hi = [c[0] + 0.1, c[1] + 0.15, c[2] + 0.2];
            let mut got = Vec::new();
            idx.for_each_in_box(&lo, &hi, |i, _| got.push(i));
            got.sort();
            let want: Vec<usize> = (0..pts.len())
                .filter(|&i| (0..3).all(|a| lo[a] <= pts[i][a] && pts[i][a] <= hi[a]))
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn nearest_to_external_point() {
        let pts = vec![[0.0; 3], [2.0, 0.0, 0.0], [4.0, 0.0, 0.0]];
        let idx = SpatialIndex::from_points(&pts);
        assert_eq!(idx.nearest_to(&[1.0, 0.0, 0.0]), Some((0, 1.0)));
        assert_eq!(idx.nearest_to(&[3.9, 0.0, 0.0]).unwrap().0, 2);
    }
}
