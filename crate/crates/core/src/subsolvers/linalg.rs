//! Small dense linear algebra: LU with partial pivoting, null-space
//! bases via Gauss-Jordan, and symmetric eigenvalues by cyclic Jacobi.
//! Everything here targets the sizes the subsolvers see (tens of
//! variables, hundreds of rows); no blocking, no packing.

/// LU factorization with partial pivoting of a square matrix.
pub struct Lu {
    n: usize,
    lu: Vec<Vec<f64>>,
    piv: Vec<usize>,
    singular: bool,
}

/// Relative pivot threshold below which a matrix counts as singular.
const PIVOT_RTOL: f64 = 1e-12;

impl Lu {
    pub fn factor(a: &[Vec<f64>]) -> Lu {
        let n = a.len();
        let mut lu: Vec<Vec<f64>> = a.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut singular = false;
        let scale: f64 = lu
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        for k in 0..n {
            let (mut best, mut best_val) = (k, lu[k][k].abs());
            for r in k + 1..n {
                if lu[r][k].abs() > best_val {
                    best = r;
                    best_val = lu[r][k].abs();
                }
            }
            if best_val <= PIVOT_RTOL * scale {
                singular = true;
                continue;
            }
            lu.swap(k, best);
            piv.swap(k, best);
            for r in k + 1..n {
                let f = lu[r][k] / lu[k][k];
                lu[r][k] = f;
                for c in k + 1..n {
                    lu[r][c] -= f * lu[k][c];
                }
            }
        }
        Lu {
            n,
            lu,
            piv,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Solve `A x = b`; `None` if the factorization was singular.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        if self.singular {
            return None;
        }
        let n = self.n;
        let mut x: Vec<f64> = (0..n).map(|i| b[self.piv[i]]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i][j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i][j] * x[j];
            }
            x[i] /= self.lu[i][i];
        }
        Some(x)
    }
}

/// Reduced row echelon data for a rectangular matrix.
pub struct Rref {
    /// Row-reduced matrix (same shape as the input).
    pub mat: Vec<Vec<f64>>,
    /// Transformed right-hand side.
    pub rhs: Vec<f64>,
    /// Column index of the pivot in each nonzero row.
    pub pivots: Vec<usize>,
    /// Rows whose coefficients eliminated to zero; the system is
    /// inconsistent if any of them kept a nonzero right-hand side.
    pub zero_rows: Vec<usize>,
}

/// Gauss-Jordan elimination with partial pivoting of `[a | b]`.
pub fn rref(a: &[Vec<f64>], b: &[f64]) -> Rref {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut mat = a.to_vec();
    let mut rhs = b.to_vec();
    let scale: f64 = mat
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let tol = PIVOT_RTOL * scale;

    let mut pivots = Vec::new();
    let mut r = 0usize;
    for c in 0..cols {
        if r >= rows {
            break;
        }
        let (mut best, mut best_val) = (r, mat[r][c].abs());
        for rr in r + 1..rows {
            if mat[rr][c].abs() > best_val {
                best = rr;
                best_val = mat[rr][c].abs();
            }
        }
        if best_val <= tol {
            continue;
        }
        mat.swap(r, best);
        rhs.swap(r, best);
        let p = mat[r][c];
        for cc in 0..cols {
            mat[r][cc] /= p;
        }
        rhs[r] /= p;
        for rr in 0..rows {
            if rr != r && mat[rr][c] != 0.0 {
                let f = mat[rr][c];
                for cc in 0..cols {
                    mat[rr][cc] -= f * mat[r][cc];
                }
                rhs[rr] -= f * rhs[r];
            }
        }
        pivots.push(c);
        r += 1;
    }
    let zero_rows = (r..rows).collect();
    Rref {
        mat,
        rhs,
        pivots,
        zero_rows,
    }
}

/// Affine parametrization `v = v0 + Z t` of the solution set of
/// `A v = b`. `None` when the system is inconsistent.
pub fn affine_solution_space(a: &[Vec<f64>], b: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let rows = a.len();
    let cols = if rows == 0 {
        return Some((Vec::new(), Vec::new()));
    } else {
        a[0].len()
    };
    let red = rref(a, b);
    let scale: f64 = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for &zr in &red.zero_rows {
        if red.rhs[zr].abs() > 1e-9 * scale {
            return None;
        }
    }
    let mut is_pivot = vec![false; cols];
    for &c in &red.pivots {
        is_pivot[c] = true;
    }
    let free_cols: Vec<usize> = (0..cols).filter(|&c| !is_pivot[c]).collect();

    let mut v0 = vec![0.0; cols];
    for (row, &pc) in red.pivots.iter().enumerate() {
        v0[pc] = red.rhs[row];
    }

    // One basis column per free variable: set it to 1, read pivot
    // entries off the reduced rows.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(free_cols.len());
    for &fc in &free_cols {
        let mut z = vec![0.0; cols];
        z[fc] = 1.0;
        for (row, &pc) in red.pivots.iter().enumerate() {
            z[pc] = -red.mat[row][fc];
        }
        basis.push(z);
    }
    Some((v0, basis))
}

/// All eigenvalues of a symmetric matrix by the cyclic Jacobi method.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    symmetric_eigen(a).0
}

/// Eigenvalues and orthonormal eigenvectors of a symmetric matrix by
/// the cyclic Jacobi method. Returns `(values, vectors)` sorted by
/// ascending eigenvalue, with `vectors[k]` belonging to `values[k]`.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let off = |m: &Vec<Vec<f64>>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i][j] * m[i][j];
                }
            }
        }
        s
    };
    let scale: f64 = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |mx, v| mx.max(v.abs()))
        .max(1.0);
    for _sweep in 0..60 {
        if off(&m) <= (1e-24) * scale * scale * (n * n) as f64 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].partial_cmp(&m[j][j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[i][i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row][col]).collect())
        .collect();
    (values, vectors)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Positive semidefiniteness up to a scaled eigenvalue tolerance.
pub fn is_psd(q: &[Vec<f64>]) -> bool {
    if q.is_empty() {
        return true;
    }
    let scale = q
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    if scale == 0.0 {
        return true;
    }
    let evals = symmetric_eigenvalues(q);
    evals[0] >= -1e-10 * (1.0 + scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let a = vec![
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 4.0],
        ];
        let lu = Lu::factor(&a);
        let x = lu.solve(&[3.0, 5.0, 5.0]).unwrap();
        for (i, row) in a.iter().enumerate() {
            assert!((dot(row, &x) - [3.0, 5.0, 5.0][i]).abs() < 1e-12);
        }
    }

    #[test]
    fn lu_flags_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(Lu::factor(&a).is_singular());
    }

    #[test]
    fn affine_space_of_underdetermined_system() {
        // v0 + v1 + v2 = 3 has a 2-dimensional solution space.
        let a = vec![vec![1.0, 1.0, 1.0]];
        let (v0, z) = affine_solution_space(&a, &[3.0]).unwrap();
        assert_eq!(z.len(), 2);
        let check = |v: &[f64]| v.iter().sum::<f64>();
        assert!((check(&v0) - 3.0).abs() < 1e-12);
        for zi in &z {
            assert!(check(zi).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_space_detects_inconsistency() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(affine_solution_space(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn jacobi_eigenvalues_of_known_matrix() {
        // Eigenvalues of [[2,1],[1,2]] are 1 and 3.
        let a = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let eig = symmetric_eigenvalues(&a);
        assert!((eig[0] - 1.0).abs() < 1e-10);
        assert!((eig[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn jacobi_eigenvectors_reconstruct_the_matrix() {
        let a = vec![
            vec![4.0, 1.0, -2.0],
            vec![1.0, 3.0, 0.5],
            vec![-2.0, 0.5, 5.0],
        ];
        let (vals, vecs) = symmetric_eigen(&a);
        for i in 0..3 {
            for j in 0..3 {
                let mut sum = 0.0;
                for k in 0..3 {
                    sum += vals[k] * vecs[k][i] * vecs[k][j];
                }
                assert!(
                    (sum - a[i][j]).abs() < 1e-9,
                    "entry ({i},{j}) reconstructed as {sum}"
                );
            }
        }
        for k in 0..3 {
            let norm: f64 = dot(&vecs[k], &vecs[k]);
            assert!((norm - 1.0).abs() < 1e-10);
        }
    }
}
