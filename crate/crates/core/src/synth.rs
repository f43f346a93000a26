//! Labelled synthetic clouds: grid-sampled exterior surfaces of unions of
//! axis-aligned boxes, with points near the union's edges marked as edges.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pointcloud::{Point3, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cuboid {
    pub min: Point3,
    pub size: Point3,
}

impl Cuboid {
    pub fn cube(min: Point3, side: f64) -> Self {
        Self {
            min,
            size: [side; 3],
        }
    }

    pub fn max(&self) -> Point3 {
        [
            self.min[0] + self.size[0],
            self.min[1] + self.size[1],
            self.min[2] + self.size[2],
        ]
    }

    fn contains_closed(&self, p: &Point3) -> bool {
        let max = self.max();
        (0..3).all(|a| self.min[a] <= p[a] && p[a] <= max[a])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubeUnionSpec {
    pub cubes: Vec<Cuboid>,
    pub sample_spacing: f64,
    /// points within this distance of an exterior edge are labelled
    pub edge_band: f64,
    pub seed: u64,
    /// in-plane jitter of up to a quarter spacing per point
    pub jitter: bool,
}

impl Default for CubeUnionSpec {
    /// A unit cube with a half-size cube attached to its +x face, sampled at 0.025
    /// (11202 points, 2072 of them edge-labelled).
    fn default() -> Self {
        Self::new(
            vec![
                Cuboid::cube([0.0, 0.0, 0.0], 1.0),
                Cuboid::cube([1.0, 0.25, 0.25], 0.5),
            ],
            0.025,
        )
    }
}

impl CubeUnionSpec {
    /// Spec with the default edge band of 1.5 sample spacings, seed 0, no jitter.
    pub fn new(cubes: Vec<Cuboid>, sample_spacing: f64) -> Self {
        Self {
            cubes,
            sample_spacing,
            edge_band: 1.5 * sample_spacing,
            seed: 0,
            jitter: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cubes.is_empty() {
            return Err(Error::invalid("at least one cube is required"));
        }
        for (i, c) in self.cubes.iter().enumerate() {
            let finite = c.min.iter().chain(&c.size).all(|v| v.is_finite());
            if !finite || c.size.iter().any(|&s| !(s > 0.0)) {
                return Err(Error::invalid(format!(
                    "cube {i} must have finite coordinates and positive sides"
                )));
            }
        }
        if !(self.sample_spacing > 0.0) || !self.sample_spacing.is_finite() {
            return Err(Error::invalid(format!(
                "sample spacing must be positive, got {}",
                self.sample_spacing
            )));
        }
        if !(self.edge_band > 0.0) || !self.edge_band.is_finite() {
            return Err(Error::invalid(format!(
                "edge band must be positive, got {}",
                self.edge_band
            )));
        }
        Ok(())
    }
}

/// Geometry queries on a union of closed boxes.
struct Union<'a> {
    cubes: &'a [Cuboid],
    eps: f64,
}

impl Union<'_> {
    fn covered(&self, p: &Point3) -> bool {
        self.cubes.iter().any(|c| c.contains_closed(p))
    }

    /// True when every diagonal direction out of `p` stays inside the union.
    ///
    /// Near a point the union is a union of closed orthants, so `p` is interior iff
    /// none of the eight open orthants is left uncovered.
    fn is_interior(&self, p: &Point3) -> bool {
        (0..8).all(|m| {
            let q = [
                p[0] + if m & 1 == 0 { -self.eps } else { self.eps },
                p[1] + if m & 2 == 0 { -self.eps } else { self.eps },
                p[2] + if m & 4 == 0 { -self.eps } else { self.eps },
            ];
            self.covered(&q)
        })
    }
}

fn unique_sorted(mut v: Vec<f64>, tol: f64) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|b, a| (*b - *a).abs() <= tol);
    v
}

/// Straight pieces of the union's exterior edges.
fn union_edge_segments(union: &Union, coords: &[Vec<f64>; 3]) -> Vec<(Point3, Point3)> {
    let mut segments = Vec::new();
    for a in 0..3 {
        let (u, v) = ((a + 1) % 3, (a + 2) % 3);
        for &cu in &coords[u] {
            for &cv in &coords[v] {
                for w in coords[a].windows(2) {
                    let mut mid = [0.0; 3];
                    mid[a] = 0.5 * (w[0] + w[1]);
                    mid[u] = cu;
                    mid[v] = cv;
                    // occupancy of the four quadrants around the line
                    let mut occ = [false; 4];
                    for (q, o) in occ.iter_mut().enumerate() {
                        let mut p = mid;
                        p[u] += if q & 1 == 0 { -union.eps } else { union.eps };
                        p[v] += if q & 2 == 0 { -union.eps } else { union.eps };
                        *o = union.covered(&p);
                    }
                    let count = occ.iter().filter(|&&o| o).count();
                    let diagonal = count == 2 && occ[0] == occ[3];
                    if count == 1 || count == 3 || diagonal {
                        let mut s = mid;
                        let mut e = mid;
                        s[a] = w[0];
                        e[a] = w[1];
                        segments.push((s, e));
                    }
                }
            }
        }
    }
    segments
}

fn point_segment_distance(p: &Point3, s: &Point3, e: &Point3) -> f64 {
    let d = [e[0] - s[0], e[1] - s[1], e[2] - s[2]];
    let w = [p[0] - s[0], p[1] - s[1], p[2] - s[2]];
    let len2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let t = if len2 > 0.0 {
        ((w[0] * d[0] + w[1] * d[1] + w[2] * d[2]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c = [s[0] + t * d[0], s[1] + t * d[1], s[2] + t * d[2]];
    crate::pointcloud::dist(p, &c)
}

/// Sample point with the box face it came from.
struct FaceSample {
    p: Point3,
    cube: usize,
    normal_axis: usize,
}

/// Generate the labelled surface cloud of a union of boxes.
pub fn generate_cube_union(spec: &CubeUnionSpec) -> Result<PointCloud> {
    spec.validate()?;
    let h = spec.sample_spacing;

    let mut coords: [Vec<f64>; 3] = Default::default();
    for c in &spec.cubes {
        let max = c.max();
        for a in 0..3 {
            coords[a].push(c.min[a]);
            coords[a].push(max[a]);
        }
    }
    let extent = coords
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(h);
    let tol = 1e-9 * extent;
    let coords = coords.map(|v| unique_sorted(v, tol));
    let min_gap = coords
        .iter()
        .flat_map(|v| v.windows(2).map(|w| w[1] - w[0]))
        .fold(h, f64::min);
    let union = Union {
        cubes: &spec.cubes,
        eps: 1e-6 * min_gap,
    };

    // grid samples on every box face that are not inside the union
    let mut samples: Vec<FaceSample> = Vec::new();
    for (ci, c) in spec.cubes.iter().enumerate() {
        let max = c.max();
        for a in 0..3 {
            let (u, v) = ((a + 1) % 3, (a + 2) % 3);
            let nu = ((c.size[u] / h).round() as usize).max(1);
            let nv = ((c.size[v] / h).round() as usize).max(1);
            let at = |axis: usize, n: usize, i: usize| {
                if i == n {
                    max[axis]
                } else {
                    c.min[axis] + c.size[axis] * (i as f64 / n as f64)
                }
            };
            for plane in [c.min[a], max[a]] {
                for i in 0..=nu {
                    for j in 0..=nv {
                        let mut p = [0.0; 3];
                        p[a] = plane;
                        p[u] = at(u, nu, i);
                        p[v] = at(v, nv, j);
                        if !union.is_interior(&p) {
                            samples.push(FaceSample {
                                p,
                                cube: ci,
                                normal_axis: a,
                            });
                        }
                    }
                }
            }
        }
    }

    // merge coincident samples along shared face borders, first occurrence wins
    let quantum = 1e-4 * h;
    let merge_tol = 1e-6 * h;
    let key = |p: &Point3| p.map(|x| (x / quantum).round() as i64);
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut kept: Vec<FaceSample> = Vec::new();
    for s in samples {
        let k = key(&s.p);
        let mut dup = false;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if list
                            .iter()
                            .any(|&j| crate::pointcloud::dist(&kept[j].p, &s.p) <= merge_tol)
                        {
                            dup = true;
                            break 'search;
                        }
                    }
                }
            }
        }
        if !dup {
            grid.entry(k).or_default().push(kept.len());
            kept.push(s);
        }
    }
    if kept.is_empty() {
        return Err(Error::Degenerate("union has no exterior surface".into()));
    }

    if spec.jitter {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for s in kept.iter_mut() {
            let c = &spec.cubes[s.cube];
            let max = c.max();
            // a jitter that slides into another box would leave the surface: redraw
            for _ in 0..8 {
                let mut q = s.p;
                for axis in [(s.normal_axis + 1) % 3, (s.normal_axis + 2) % 3] {
                    let shift = rng.random_range(-0.25..=0.25) * h;
                    q[axis] = (q[axis] + shift).clamp(c.min[axis], max[axis]);
                }
                if !union.is_interior(&q) {
                    s.p = q;
                    break;
                }
            }
        }
    }

    let segments = union_edge_segments(&union, &coords);
    let points: Vec<Point3> = kept.iter().map(|s| s.p).collect();
    let labels = points
        .iter()
        .map(|p| {
            segments
                .iter()
                .any(|(s, e)| point_segment_distance(p, s, e) <= spec.edge_band)
        })
        .collect();
    Ok(PointCloud::with_labels(points, Some(labels))?.named("cube_union"))
}
