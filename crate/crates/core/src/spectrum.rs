//! Hypergraph spectrum estimation from coordinate covariance, the simplified
//! hypergraph Fourier transform pair, and the eigenvalue-gap frequency split.
//!
//! Under the stationarity assumption the spectrum basis is the eigenbasis of
//! `R = P' P'^T`, where `P'` is the zero-mean `M x 3` coordinate matrix. Small
//! eigenvalues are the high-frequency end of the spectrum.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{canonicalize_with, jacobi_eigen, SymmetricEigen};
use crate::pointcloud::Point3;

/// Relative width under which neighbouring eigenvalues are treated as one
/// repeated eigenvalue when fixing the basis. Eigenvectors of closer pairs are
/// dominated by rounding in the input, so they are not distinguished.
const CLUSTER_TOL: f64 = 1e-6;

/// A `k x k x k` voxel kernel with pitch `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    k: usize,
    d: f64,
}

impl KernelConfig {
    pub fn new(k: usize, d: f64) -> Result<Self> {
        if k == 0 || k % 2 == 0 {
            return Err(Error::invalid(format!(
                "kernel size must be a positive odd integer, got {k}"
            )));
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::invalid(format!(
                "voxel pitch must be positive and finite, got {d}"
            )));
        }
        Ok(Self { k, d })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Number of voxels, `k^3`.
    pub fn n_k(&self) -> usize {
        self.k * self.k * self.k
    }

    /// Voxel index of offset `(ix, iy, iz)`, each in `0..k`.
    #[inline]
    pub fn voxel_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.k + iy) * self.k + iz
    }
}

/// Voxel centers of the kernel around the origin, z fastest, then y, then x.
pub fn kernel_voxel_centers(cfg: &KernelConfig) -> Vec<Point3> {
    let k = cfg.k;
    let half = (k / 2) as f64;
    let offset = |i: usize| (i as f64 - half) * cfg.d;
    let mut centers = Vec::with_capacity(cfg.n_k());
    for ix in 0..k {
        for iy in 0..k {
            for iz in 0..k {
                centers.push([offset(ix), offset(iy), offset(iz)]);
            }
        }
    }
    centers
}

/// Orthonormal spectrum basis with ascending eigenvalues and its gap threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumBasis {
    dim: usize,
    /// column-major, column `r` is `f_{r+1}`
    vectors: Vec<f64>,
    eigenvalues: Vec<f64>,
    theta: usize,
}

impl SpectrumBasis {
    /// Basis from explicit columns (column-major) and ascending eigenvalues.
    pub fn from_parts(vectors: Vec<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        let dim = eigenvalues.len();
        if vectors.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: vectors.len(),
            });
        }
        for r in 0..dim {
            for s in r..dim {
                let d: f64 = (0..dim)
                    .map(|i| vectors[r * dim + i] * vectors[s * dim + i])
                    .sum();
                let want = if r == s { 1.0 } else { 0.0 };
                if (d - want).abs() > 1e-10 {
                    return Err(Error::invalid("basis columns are not orthonormal"));
                }
            }
        }
        let theta = frequency_gap_threshold(&eigenvalues)?;
        Ok(Self {
            dim,
            vectors,
            eigenvalues,
            theta,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Number of leading (smallest-eigenvalue) components treated as high frequency.
    pub fn theta(&self) -> usize {
        self.theta
    }

    /// Basis vector `r` (0-based), i.e. `f_{r+1}`.
    pub fn column(&self, r: usize) -> &[f64] {
        &self.vectors[r * self.dim..(r + 1) * self.dim]
    }

    /// Entry `V[row][col]`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.vectors[col * self.dim + row]
    }

    /// Eigenvalues divided by the largest one, in `[0, 1]`.
    pub fn normalized_eigenvalues(&self) -> Result<Vec<f64>> {
        let max = self.eigenvalues.last().copied().unwrap_or(0.0);
        if !(max > 0.0) {
            return Err(Error::Degenerate(
                "largest eigenvalue is zero (all points coincide)".into(),
            ));
        }
        Ok(self.eigenvalues.iter().map(|l| l / max).collect())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: len,
            });
        }
        Ok(())
    }

    /// `out = V^T s` without allocating; lengths must already match.
    #[inline]
    pub fn hgft_into(&self, s: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.column(r).iter().zip(s).map(|(v, x)| v * x).sum();
        }
    }

    /// `out = V s_hat` without allocating; lengths must already match.
    #[inline]
    pub fn ihgft_into(&self, s_hat: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (r, &c) in s_hat.iter().enumerate() {
            if c != 0.0 {
                for (o, v) in out.iter_mut().zip(self.column(r)) {
                    *o += c * v;
                }
            }
        }
    }

    /// `V^T S` for a row-major `dim x 3` signal, e.g. a coordinate matrix.
    pub fn hgft_rows3(&self, s: &[Point3]) -> Result<Vec<Point3>> {
        self.check_len(s.len())?;
        Ok((0..self.dim)
            .map(|r| {
                let f = self.column(r);
                let mut acc = [0.0; 3];
                for (v, row) in f.iter().zip(s) {
                    for c in 0..3 {
                        acc[c] += v * row[c];
                    }
                }
                acc
            })
            .collect())
    }
}

/// Forward transform `s_hat = V^T s`.
pub fn hgft(basis: &SpectrumBasis, s: &[f64]) -> Result<Vec<f64>> {
    basis.check_len(s.len())?;
    let mut out = vec![0.0; basis.dim];
    basis.hgft_into(s, &mut out);
    Ok(out)
}

/// Inverse transform `s = V s_hat`.
pub fn ihgft(basis: &SpectrumBasis, s_hat: &[f64]) -> Result<Vec<f64>> {
    basis.check_len(s_hat.len())?;
    let mut out = vec![0.0; basis.dim];
    basis.ihgft_into(s_hat, &mut out);
    Ok(out)
}

/// Estimate the spectrum basis of an `M x 3` coordinate signal.
///
/// The basis of a repeated (in particular the null) eigenvalue is fixed to a
/// canonical choice, so the result depends only on the eigenspaces of `R` and the
/// coordinates. Where the constant vector or a centered coordinate column reaches
/// into such an eigenspace, its projection is the first basis vector there.
pub fn estimate_spectrum(coords: &[Point3]) -> Result<SpectrumBasis> {
    let m = coords.len();
    if m < 2 {
        return Err(Error::invalid(format!(
            "spectrum estimation needs at least 2 rows, got {m}"
        )));
    }
    if coords.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::invalid("coordinates must be finite"));
    }
    let mut mean = [0.0; 3];
    for p in coords {
        for c in 0..3 {
            mean[c] += p[c];
        }
    }
    let centered: Vec<Point3> = coords
        .iter()
        .map(|p| {
            [
                p[0] - mean[0] / m as f64,
                p[1] - mean[1] / m as f64,
                p[2] - mean[2] / m as f64,
            ]
        })
        .collect();
    let mut r = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let a = &centered[i];
            let b = &centered[j];
            let v = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            r[i * m + j] = v;
            r[j * m + i] = v;
        }
    }
    let mut eig: SymmetricEigen = jacobi_eigen(&r, m);
    // R is a Gram matrix: negative eigenvalues are rounding noise
    for v in eig.values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    // constant and coordinate directions first, so the basis follows a reordering
    // of the rows wherever the signal itself has weight
    let mut seeds = vec![vec![1.0; m]];
    seeds.extend((0..3).map(|c| centered.iter().map(|p| p[c]).collect::<Vec<f64>>()));
    canonicalize_with(&mut eig, CLUSTER_TOL, &seeds);
    let theta = frequency_gap_threshold(&eig.values)?;
    Ok(SpectrumBasis {
        dim: m,
        vectors: eig.vectors,
        eigenvalues: eig.values,
        theta,
    })
}

/// Index of the largest jump between consecutive ascending eigenvalues.
///
/// Returns `theta` in `1..len`: components `1..=theta` (the smallest eigenvalues)
/// form the high-frequency band. Equal jumps resolve to the smallest index.
pub fn frequency_gap_threshold(eigenvalues: &[f64]) -> Result<usize> {
    if eigenvalues.len() < 2 {
        return Err(Error::invalid(
            "gap threshold needs at least two eigenvalues",
        ));
    }
    if eigenvalues.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::invalid("eigenvalues must be finite and ascending"));
    }
    let mut best = 0;
    let mut best_gap = f64::NEG_INFINITY;
    for (i, w) in eigenvalues.windows(2).enumerate() {
        let gap = w[1] - w[0];
        if gap > best_gap {
            best_gap = gap;
            best = i;
        }
    }
    Ok(best + 1)
}

/// Dump eigenvalues and basis as CSV: a `lambda` row, then `V` row by row,
/// 12 significant digits.
pub fn write_spectrum_csv<W: Write>(basis: &SpectrumBasis, w: &mut W) -> std::io::Result<()> {
    let fmt = |x: f64| format!("{x:.11e}");
    write!(w, "lambda")?;
    for &l in basis.eigenvalues() {
        write!(w, ",{}", fmt(l))?;
    }
    writeln!(w)?;
    for row in 0..basis.dim {
        let line: Vec<String> = (0..basis.dim).map(|c| fmt(basis.get(row, c))).collect();
        writeln!(w, "v{},{}", row + 1, line.join(","))?;
    }
    Ok(())
}
