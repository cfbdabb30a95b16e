//! Eigenvalues of 3x3 complex matrices.
//!
//! The matrix is first shifted by `tr(M)/3` so that the characteristic
//! polynomial is the depressed cubic `x^3 + p x + q`. Working on the shifted
//! matrix keeps a large common diagonal (the mechanical frequency in the pump
//! frame) out of the polynomial coefficients. Roots come from the closed form
//! and are then polished with Newton steps on `det(A - x I)`, evaluated from
//! the matrix entries rather than from the coefficients.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;

const NEWTON_STEPS: usize = 3;

/// Sum of the principal 2x2 minors.
fn minor_sum(a: &Matrix3<C64>) -> C64 {
    a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)] + a[(0, 0)] * a[(2, 2)]
        - a[(0, 2)] * a[(2, 0)]
        + a[(1, 1)] * a[(2, 2)]
        - a[(1, 2)] * a[(2, 1)]
}

fn det3(a: &Matrix3<C64>) -> C64 {
    a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
        - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
        + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)])
}

/// Roots of `x^3 + p x + q`.
fn depressed_cubic_roots(p: C64, q: C64) -> [C64; 3] {
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    // larger-magnitude branch avoids cancellation in u^3
    let u3 = {
        let a = -q / 2.0 + disc;
        let b = -q / 2.0 - disc;
        if a.norm() >= b.norm() {
            a
        } else {
            b
        }
    };
    if u3.norm() == 0.0 {
        // p = q = 0: triple root at zero
        return [C64::new(0.0, 0.0); 3];
    }
    let u = u3.cbrt();
    let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut out = [C64::new(0.0, 0.0); 3];
    let mut uk = u;
    for r in out.iter_mut() {
        *r = uk - p / (3.0 * uk);
        uk *= w;
    }
    out
}

/// Newton polish of a root of `det(A - x I)`, accepted only while it lowers
/// the determinant magnitude.
fn polish(a: &Matrix3<C64>, mut x: C64) -> C64 {
    let id = Matrix3::<C64>::identity();
    let mut f = det3(&(a - id * x));
    for _ in 0..NEWTON_STEPS {
        if f.norm() == 0.0 {
            break;
        }
        let shifted = a - id * x;
        // d/dx det(A - xI) = -sum of principal minors of (A - xI)
        let df = -minor_sum(&shifted);
        if df.norm() == 0.0 {
            break;
        }
        let next = x - f / df;
        let f_next = det3(&(a - id * next));
        if f_next.norm() < f.norm() {
            x = next;
            f = f_next;
        } else {
            break;
        }
    }
    x
}

/// The three eigenvalues of `m` (with multiplicity), in no particular order.
pub fn eigenvalues(m: &Matrix3<C64>) -> [C64; 3] {
    let shift = m.trace() / 3.0;
    let a = m - Matrix3::<C64>::identity() * shift;
    let p = minor_sum(&a);
    let q = -det3(&a);
    depressed_cubic_roots(p, q).map(|x| polish(&a, x) + shift)
}

/// A unit null vector of `m - mu I`.
///
/// For rank-2 matrices the null vector is the (bilinear) cross product of two
/// rows; the pair with the largest cross product is used.
pub fn eigenvector(m: &Matrix3<C64>, mu: C64) -> Vector3<C64> {
    let b = m - Matrix3::<C64>::identity() * mu;
    let rows: [Vector3<C64>; 3] = [0, 1, 2].map(|i| b.row(i).transpose());
    let cross = |u: &Vector3<C64>, v: &Vector3<C64>| {
        Vector3::new(
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        )
    };
    let candidates = [
        cross(&rows[0], &rows[1]),
        cross(&rows[1], &rows[2]),
        cross(&rows[2], &rows[0]),
    ];
    let best = candidates
        .iter()
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .copied()
        .unwrap();
    if best.norm() > 0.0 {
        return best / C64::new(best.norm(), 0.0);
    }
    // rank <= 1: any vector orthogonal (bilinearly) to the largest row
    let r = rows
        .iter()
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .copied()
        .unwrap();
    if r.norm() == 0.0 {
        return Vector3::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    }
    let e = [0, 1, 2]
        .map(|k| {
            let mut v = Vector3::zeros();
            v[k] = C64::new(1.0, 0.0);
            cross(&r, &v)
        })
        .into_iter()
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .unwrap();
    e / C64::new(e.norm(), 0.0)
}

/// `||(M - mu I) v||` for the computed unit eigenvector `v`.
pub fn eigen_residual(m: &Matrix3<C64>, mu: C64) -> f64 {
    let v = eigenvector(m, mu);
    ((m - Matrix3::<C64>::identity() * mu) * v).norm()
}
