//! Seeded random matrices and vectors (complex Gaussian ensembles, Haar unitaries).

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{cabs, ComplexMatrix, ComplexVector};
use crate::scalar::Real;

pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(re), T::lit(im))
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Uniformly distributed unit vector in `C^dim`.
pub fn unit_vector<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexVector<T> {
    loop {
        let v = ComplexVector::from_fn(dim, |_, _| complex_gaussian(rng));
        let nv = v.norm();
        if nv > T::lit(1e-12) {
            return v.unscale(nv);
        }
    }
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of the
/// diagonal of R absorbed into Q.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix<T> {
    let g = ginibre::<T, R>(n, n, rng).into_na();
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let q = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let nd = cabs(d);
        let phase = if nd > T::zero() { d.unscale(nd) } else { Complex::new(T::one(), T::zero()) };
        q[(i, j)] * phase
    });
    ComplexMatrix::from_na(q).expect("finite unitary")
}

/// Random Hermitian matrix `(G + G^dagger)/2` from the Ginibre ensemble.
pub fn hermitian<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix<T> {
    ginibre::<T, R>(n, n, rng).hermitian_part()
}
