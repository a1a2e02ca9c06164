//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::rng::complex_gaussian;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// `a^H b` over raw slices.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter()
        .zip(b)
        .fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Slice view of column `j` of a column-major matrix.
pub fn column(m: &CMatrix, j: usize) -> &[Complex64] {
    let rows = m.nrows();
    &m.as_slice()[j * rows..(j + 1) * rows]
}

pub fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVector {
    DVector::from_fn(len, |_, _| complex_gaussian(rng))
}

/// Matrix of i.i.d. unit-variance complex Gaussians, filled column by column.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    DMatrix::from_vec(rows, cols, data)
}

/// Haar-distributed `m x m` unitary.
///
/// QR of a complex Gaussian matrix, then every column of Q is rotated by the
/// phase of the matching diagonal entry of R so that R ends up with a
/// positive real diagonal. That makes the factorization unique and the
/// resulting Q exactly Haar.
pub fn haar_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CMatrix {
    let qr = gaussian_matrix(m, m, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Frobenius norm of `U^H U - I`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let gram = u.adjoint() * u;
    let n = gram.nrows();
    (gram - CMatrix::identity(n, n)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    #[test]
    fn haar_is_unitary() {
        let mut rng = from_seed(11);
        for m in [1, 2, 5, 64] {
            let u = haar_unitary(m, &mut rng);
            assert!(unitarity_defect(&u) < 1e-10, "m={m}");
        }
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_argument() {
        let a = [Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.0)];
        let b = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        // (-i)(1) + 2(i) = i
        let v = inner(&a, &b);
        assert!((v - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((norm_sq(&a) - 5.0).abs() < 1e-15);
    }
}
