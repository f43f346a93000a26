//! Dense symmetric eigendecomposition for the small matrices used by the
//! spectral scorers (3x3 up to a few hundred rows).
//!
//! Cyclic Jacobi is used because it is accurate for tiny eigenvalues and its
//! output is a deterministic function of the input bits.

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
///
/// `vectors` is column-major: column `r` occupies `vectors[r * n..(r + 1) * n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    pub fn column(&self, r: usize) -> &[f64] {
        &self.vectors[r * self.n..(r + 1) * self.n]
    }
}

/// Jacobi eigendecomposition of the symmetric row-major `n x n` matrix `a`.
///
/// Only the upper triangle is trusted; the input is symmetrized first. Eigenvalues
/// are sorted ascending, ties keep the order of the diagonal they converged on.
pub fn jacobi_eigen(a: &[f64], n: usize) -> SymmetricEigen {
    assert_eq!(a.len(), n * n, "matrix must be n x n");
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = a[i * n + j];
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let frob = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob > 0.0 {
        let skip = 1e-18 * frob;
        for _ in 0..MAX_SWEEPS {
            let off = (0..n)
                .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
                .map(|(p, q)| m[p * n + q] * m[p * n + q])
                .sum::<f64>()
                .sqrt();
            if off <= 1e-15 * frob {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[p * n + q];
                    if apq.abs() <= skip {
                        continue;
                    }
                    let tau = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                    let t = if tau.abs() > 1e150 {
                        0.5 / tau
                    } else {
                        tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = m[k * n + p];
                        let akq = m[k * n + q];
                        m[k * n + p] = c * akp - s * akq;
                        m[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = m[p * n + k];
                        let aqk = m[q * n + k];
                        m[p * n + k] = c * apk - s * aqk;
                        m[q * n + k] = s * apk + c * aqk;
                    }
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (r, &i) in order.iter().enumerate() {
        for k in 0..n {
            vectors[r * n + k] = v[k * n + i];
        }
    }
    SymmetricEigen { n, values, vectors }
}

/// Eigenvalues of a symmetric 3x3 matrix, ascending.
pub fn eigenvalues_3x3(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let flat: Vec<f64> = a.iter().flatten().copied().collect();
    let e = jacobi_eigen(&flat, 3);
    [e.values[0], e.values[1], e.values[2]]
}

/// Replace the basis of every cluster of (numerically) repeated eigenvalues by a
/// canonical one and fix column signs.
///
/// Within a repeated eigenvalue any orthonormal basis is valid, and rounding noise
/// decides which one an iterative solver lands on. The canonical basis is the
/// Gram-Schmidt orthonormalization of the projections of `e_0, e_1, ...` onto the
/// cluster subspace, which depends only on the subspace. Afterwards each column is
/// flipped so its largest-magnitude entry is positive (lowest row wins ties).
pub fn canonicalize(eig: &mut SymmetricEigen, rel_tol: f64) {
    canonicalize_with(eig, rel_tol, &[]);
}

/// [`canonicalize`], taking the projections of `seeds` as basis candidates before
/// the unit vectors.
///
/// Seeds that are equivariant under a reordering of rows (a constant vector, data
/// columns) make the part of the basis they fix equivariant too.
pub fn canonicalize_with(eig: &mut SymmetricEigen, rel_tol: f64, seeds: &[Vec<f64>]) {
    let n = eig.n;
    if n == 0 {
        return;
    }
    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = rel_tol * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.values[end] - eig.values[end - 1] <= tol {
            end += 1;
        }
        if end - start > 1 {
            canonical_subspace_basis(eig, start, end, seeds);
        }
        start = end;
    }
    for r in 0..n {
        normalize_sign(&mut eig.vectors[r * n..(r + 1) * n]);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn canonical_subspace_basis(
    eig: &mut SymmetricEigen,
    start: usize,
    end: usize,
    seeds: &[Vec<f64>],
) {
    let n = eig.n;
    let dim = end - start;
    let q: Vec<Vec<f64>> = (start..end).map(|r| eig.column(r).to_vec()).collect();
    let project_vec = |x: &[f64]| -> Vec<f64> {
        let mut w = vec![0.0; n];
        for u in &q {
            let c = dot(u, x);
            for (wk, uk) in w.iter_mut().zip(u) {
                *wk += c * uk;
            }
        }
        w
    };
    let project = |j: usize| -> Vec<f64> {
        let mut w = vec![0.0; n];
        for u in &q {
            let c = u[j];
            for (wk, uk) in w.iter_mut().zip(u) {
                *wk += c * uk;
            }
        }
        w
    };
    let residual = |w: &mut Vec<f64>, basis: &[Vec<f64>]| -> f64 {
        // two passes of classical Gram-Schmidt for orthogonality to rounding
        for _ in 0..2 {
            for b in basis {
                let c = dot(w, b);
                for (wk, bk) in w.iter_mut().zip(b) {
                    *wk -= c * bk;
                }
            }
        }
        dot(w, w).sqrt()
    };

    // residual norms only shrink as the basis grows, and their squares sum to the
    // remaining dimension, so this threshold always leaves enough candidates
    let threshold = 0.25 / (n as f64).sqrt();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for seed in seeds {
        if basis.len() == dim || seed.len() != n {
            break;
        }
        let len = dot(seed, seed).sqrt();
        if len == 0.0 {
            continue;
        }
        let unit: Vec<f64> = seed.iter().map(|x| x / len).collect();
        let mut w = project_vec(&unit);
        let norm = residual(&mut w, &basis);
        if norm > threshold {
            w.iter_mut().for_each(|x| *x /= norm);
            basis.push(w);
        }
    }
    for j in 0..n {
        if basis.len() == dim {
            break;
        }
        let mut w = project(j);
        let norm = residual(&mut w, &basis);
        if norm > threshold {
            w.iter_mut().for_each(|x| *x /= norm);
            basis.push(w);
        }
    }
    while basis.len() < dim {
        // rounding pushed every remaining candidate under the threshold: take the best
        let (mut best, mut best_norm) = (Vec::new(), -1.0);
        for j in 0..n {
            let mut w = project(j);
            let norm = residual(&mut w, &basis);
            if norm > best_norm {
                best_norm = norm;
                best = w;
            }
        }
        best.iter_mut().for_each(|x| *x /= best_norm);
        basis.push(best);
    }
    for (k, b) in basis.into_iter().enumerate() {
        let r = start + k;
        eig.vectors[r * n..(r + 1) * n].copy_from_slice(&b);
    }
}

fn normalize_sign(col: &mut [f64]) {
    let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let tie = 1e-12 * max;
    let pivot = col
        .iter()
        .position(|x| x.abs() >= max - tie)
        .expect("max is attained");
    if col[pivot] < 0.0 {
        col.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(e: &SymmetricEigen) -> Vec<f64> {
        let n = e.n;
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            let f = e.column(r);
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] += e.values[r] * f[i] * f[j];
                }
            }
        }
        out
    }

    #[test]
    fn diagonal_matrix() {
        let e = jacobi_eigen(&[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0], 3);
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(e.column(0), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn two_by_two_known() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let mut e = jacobi_eigen(&[2.0, 1.0, 1.0, 2.0], 2);
        canonicalize(&mut e, 1e-10);
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        let s = 0.5f64.sqrt();
        assert!((e.column(1)[0] - s).abs() < 1e-14 && (e.column(1)[1] - s).abs() < 1e-14);
        // tie in magnitude: lowest row is made positive
        assert!(e.column(0)[0] > 0.0 && e.column(0)[1] < 0.0);
    }

    #[test]
    fn reconstructs_and_is_orthonormal() {
        let n = 7;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = ((i * 3 + j * 5) % 11) as f64 + if i == j { 4.0 } else { 0.0 };
            }
        }
        for i in 0..n {
            for j in 0..i {
                a[i * n + j] = a[j * n + i];
            }
        }
        let mut e = jacobi_eigen(&a, n);
        canonicalize(&mut e, 1e-10);
        let back = reconstruct(&e);
        for (x, y) in back.iter().zip(&a) {
            assert!((x - y).abs() < 1e-10);
        }
        for r in 0..n {
            for s in 0..n {
                let d = dot(e.column(r), e.column(s));
                let want = if r == s { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn repeated_eigenvalue_gets_canonical_basis() {
        // identity: canonical basis of the single 3-fold cluster is e_0, e_1, e_2
        let mut e = jacobi_eigen(&[5.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 5.0], 3);
        canonicalize(&mut e, 1e-10);
        assert_eq!(e.vectors, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn canonical_basis_ignores_rotation_within_cluster() {
        // same matrix reached from two different rotated bases of the cluster
        let c = 0.6;
        let s = 0.8;
        let mut a = SymmetricEigen {
            n: 3,
            values: vec![0.0, 0.0, 2.0],
            vectors: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        };
        let mut b = SymmetricEigen {
            n: 3,
            values: vec![0.0, 0.0, 2.0],
            vectors: vec![c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0],
        };
        canonicalize(&mut a, 1e-10);
        canonicalize(&mut b, 1e-10);
        for (x, y) in a.vectors.iter().zip(&b.vectors) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn three_by_three_values() {
        let v = eigenvalues_3x3(&[[2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        assert_eq!(v, [0.0, 1.0, 2.0]);
    }
}
