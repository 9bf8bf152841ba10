//! Small dense linear-algebra helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

/// Skew-symmetric matrix of `w`, so that `skew(w) * x == w.cross(x)`.
pub fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Inverse of [`skew`]; reads the antisymmetric part.
pub fn unskew(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Flattens a matrix column-major into a vector.
pub fn mat_to_vec(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Reshapes a column-major vector into an `n × n` matrix.
pub fn vec_to_mat(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), n * n);
    DMatrix::from_column_slice(n, n, v.as_slice())
}

pub fn to_matrix3(m: &DMatrix<f64>) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m[(i, j)])
}

pub fn from_matrix3(m: &Matrix3<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
}

pub fn to_vector3(v: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

pub fn from_vector3(v: &Vector3<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

/// Singular values of `a`, sorted descending. Wide matrices are transposed first.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let m = if a.nrows() >= a.ncols() {
        a.clone()
    } else {
        a.transpose()
    };
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Minimum-norm least-squares solution of `a x = b` together with the numerical rank of `a`.
///
/// Singular values below `rel_tol * sigma_max` are treated as zero.
pub fn min_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> (DVector<f64>, usize) {
    let (rows, cols) = a.shape();
    // nalgebra's thin SVD needs rows >= cols to expose the full right singular basis
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let mut rhs = DVector::zeros(padded.nrows());
    rhs.rows_mut(0, rows).copy_from(b);

    let svd = padded.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s_max = svd.singular_values.max();
    let cutoff = rel_tol * s_max.max(f64::MIN_POSITIVE);

    let mut x = DVector::zeros(cols);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            rank += 1;
            let coef = u.column(k).dot(&rhs) / s;
            x += v_t.row(k).transpose() * coef;
        }
    }
    (x, rank)
}

/// Orthonormal basis of the null space of `a`; singular values at or below
/// `rel_tol * max(sigma_max, 1)` count as zero.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return Vec::new();
    }
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let cutoff = rel_tol * svd.singular_values.max().max(1.0);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cutoff)
        .map(|(k, _)| v_t.row(k).transpose())
        .collect()
}

/// Gram–Schmidt orthonormalisation; drops vectors that are (numerically) dependent.
pub fn orthonormalize(vectors: &[DVector<f64>], tol: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        // two passes for numerical stability
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&w);
                w -= q * c;
            }
        }
        let n = w.norm();
        if n > tol {
            out.push(w / n);
        }
    }
    out
}

/// Nearest rotation to `m` in the Frobenius sense (polar projection).
pub fn polar_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skew_matches_cross_product() {
        let w = Vector3::new(0.3, -1.2, 2.0);
        let x = Vector3::new(-0.7, 0.1, 0.5);
        assert!((skew(&w) * x - w.cross(&x)).norm() < 1e-15);
        assert_eq!(unskew(&skew(&w)), w);
    }

    #[test]
    fn min_norm_solution_of_wide_system() {
        // x + y = 2 has minimum-norm solution (1, 1)
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0]);
        let (x, rank) = min_norm_solve(&a, &b, 1e-12);
        assert_eq!(rank, 1);
        assert!((x - DVector::from_vec(vec![1.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn null_space_of_duplicated_columns() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.len(), 1);
        assert!((a * &ns[0]).norm() < 1e-12);
    }

    #[test]
    fn polar_projection_of_rotation_is_identity_map() {
        let r = nalgebra::Rotation3::from_scaled_axis(Vector3::new(0.2, 0.4, -0.1)).into_inner();
        assert!((polar_rotation(&(r * 1.001)) - r).norm() < 1e-12);
    }
}
