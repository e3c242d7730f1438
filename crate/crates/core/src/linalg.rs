//! Dense complex linear algebra: the matrix carrier, Hermitian spectra,
//! k-numerical ranges, (2,k)-spectral norms, the Moore–Penrose inverse,
//! partial transposition and tolerance-aware semidefiniteness tests.
//!
//! Eigenvalues are always reported in ascending order and singular values in
//! descending order.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative asymmetry accepted by [`hermitian_eig`] before symmetrizing.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Default relative slack for [`psd_check`].
pub const PSD_TOL: f64 = 1e-9;
/// Default relative cutoff factor for [`pinv`]; multiplied by `max(rows, cols)`.
pub const PINV_RCOND: f64 = 1e-12;

pub type ComplexVector<T> = DVector<Complex<T>>;

/// Dense complex `rows x cols` matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    data: DMatrix<Complex<T>>,
}

impl<T: Real> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix {}x{} {:?}", self.rows(), self.cols(), self.data.as_slice())
    }
}

pub(crate) fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Modulus of a complex scalar.
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { data: DMatrix::from_element(rows, cols, Complex::new(T::zero(), T::zero())) }
    }

    pub fn identity(n: usize) -> Self {
        Self { data: DMatrix::identity(n, n) }
    }

    /// Matrix unit `E_ij` of size `rows x cols`.
    pub fn unit(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m[(i, j)] = c(T::one());
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        Self { data: DMatrix::from_fn(rows, cols, f) }
    }

    /// Builds a matrix from row-major entries, rejecting NaN/Inf.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_na(DMatrix::from_row_slice(rows, cols, &entries))
    }

    /// Real matrix from nested rows.
    pub fn from_real_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let entries = rows.iter().flat_map(|row| row.iter().map(|&x| c(x))).collect();
        Self::from_row_major(r, cols, entries)
    }

    pub fn diag_real(values: &[T]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = c(v);
        }
        m
    }

    pub fn from_na(data: DMatrix<Complex<T>>) -> Result<Self> {
        let m = Self { data };
        if m.is_finite() {
            Ok(m)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[ComplexVector<T>]) -> Result<Self> {
        if columns.iter().any(|v| v.len() != rows) {
            return Err(Error::DimensionMismatch("column length".into()));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    /// `|u><v|`.
    pub fn outer(u: &ComplexVector<T>, v: &ComplexVector<T>) -> Self {
        Self { data: u * v.adjoint() }
    }

    pub fn as_na(&self) -> &DMatrix<Complex<T>> {
        &self.data
    }

    pub fn into_na(self) -> DMatrix<Complex<T>> {
        self.data
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite_value() && z.im.is_finite_value())
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<Complex<T>> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.data[(i, j)]);
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> ComplexVector<T> {
        self.data.column(j).into_owned()
    }

    pub fn adjoint(&self) -> Self {
        Self { data: self.data.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        Self { data: self.data.transpose() }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { data: self.data.map(|z| z * s) }
    }

    pub fn scale_complex(&self, s: Complex<T>) -> Self {
        Self { data: self.data.map(|z| z * s) }
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self { data: self.data.kronecker(&other.data) }
    }

    pub fn trace(&self) -> Complex<T> {
        self.data.trace()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(T::zero(), |acc, (a, b)| acc.max(cabs(*a - *b)))
    }

    /// `||A - A^dagger||_F / ||A||_F` (0 for the zero matrix).
    pub fn hermitian_defect(&self) -> T {
        let norm = self.frobenius_norm();
        if norm == T::zero() {
            return T::zero();
        }
        (&self.data - self.data.adjoint()).iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt() / norm
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self { data: (&self.data + self.data.adjoint()).map(|z| z * half) }
    }

    /// `<x|A|x>`.
    pub fn quadratic_form(&self, x: &ComplexVector<T>) -> Complex<T> {
        x.dotc(&(&self.data * x))
    }

    pub fn mul_vec(&self, x: &ComplexVector<T>) -> ComplexVector<T> {
        &self.data * x
    }

    /// Square sub-block `(bi, bj)` of a matrix partitioned into `size x size` blocks.
    pub fn block(&self, bi: usize, bj: usize, size: usize) -> Self {
        Self { data: self.data.view((bi * size, bj * size), (size, size)).into_owned() }
    }

    pub fn set_block(&mut self, bi: usize, bj: usize, block: &Self) {
        let (r, cc) = (block.rows(), block.cols());
        self.data.view_mut((bi * r, bj * cc), (r, cc)).copy_from(&block.data);
    }

    /// `U^dagger A U` for `U` with orthonormal columns.
    pub fn compress(&self, basis: &Self) -> Self {
        Self { data: basis.data.adjoint() * &self.data * &basis.data }
    }
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, idx: (usize, usize)) -> &Complex<T> {
        &self.data[idx]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut Complex<T> {
        &mut self.data[idx]
    }
}

impl<'a, T: Real> Add<&'a ComplexMatrix<T>> for &'a ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        ComplexMatrix { data: &self.data + &rhs.data }
    }
}

impl<'a, T: Real> Sub<&'a ComplexMatrix<T>> for &'a ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        ComplexMatrix { data: &self.data - &rhs.data }
    }
}

impl<'a, T: Real> Mul<&'a ComplexMatrix<T>> for &'a ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        ComplexMatrix { data: &self.data * &rhs.data }
    }
}

impl<'a, T: Real> Mul<&'a ComplexMatrix<T>> for ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: &'a ComplexMatrix<T>) -> ComplexMatrix<T> {
        ComplexMatrix { data: self.data * &rhs.data }
    }
}

impl<T: Real> Neg for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn neg(self) -> ComplexMatrix<T> {
        ComplexMatrix { data: -&self.data }
    }
}

impl<T: Real> Add for ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        ComplexMatrix { data: self.data + rhs.data }
    }
}

impl<T: Real> Sub for ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        ComplexMatrix { data: self.data - rhs.data }
    }
}

/// Closed real interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Option<Self> {
        (lo <= hi).then_some(Self { lo, hi })
    }

    pub fn contains(&self, x: T, slack: T) -> bool {
        x >= self.lo - slack && x <= self.hi + slack
    }

    pub fn is_point(&self, slack: T) -> bool {
        self.hi - self.lo <= slack
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition<T: Real> {
    pub eigenvalues: Vec<T>,
    /// Orthonormal eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: ComplexMatrix<T>,
}

impl<T: Real> SpectralDecomposition<T> {
    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues.first().copied().unwrap_or_else(T::zero)
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalues.last().copied().unwrap_or_else(T::zero)
    }

    /// Largest absolute eigenvalue, i.e. the spectral norm.
    pub fn spectral_norm(&self) -> T {
        self.min_eigenvalue().abs().max(self.max_eigenvalue().abs())
    }

    pub fn eigenvector(&self, i: usize) -> ComplexVector<T> {
        self.eigenvectors.column(i)
    }
}

fn require_square<T: Real>(a: &ComplexMatrix<T>) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(Error::NonSquare { rows: a.rows(), cols: a.cols() })
    }
}

/// Eigen-decomposition of a Hermitian matrix using the default Hermiticity tolerance.
pub fn hermitian_eig<T: Real>(a: &ComplexMatrix<T>) -> Result<SpectralDecomposition<T>> {
    hermitian_eig_with_tol(a, T::lit(HERMITIAN_TOL))
}

/// Eigen-decomposition of `(A + A^dagger)/2` after checking that the relative
/// asymmetry of `A` is at most `hermitian_tol`.
pub fn hermitian_eig_with_tol<T: Real>(a: &ComplexMatrix<T>, hermitian_tol: T) -> Result<SpectralDecomposition<T>> {
    require_square(a)?;
    let defect = a.hermitian_defect();
    if defect > hermitian_tol {
        return Err(Error::NotHermitian { asymmetry: defect.to_f64_lossy() });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(SpectralDecomposition { eigenvalues: vec![], eigenvectors: ComplexMatrix::zeros(0, 0) });
    }
    let h = a.hermitian_part();
    let (values, vectors) = robust_eig(&h)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite eigenvalues"));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, col| vectors[(r, order[col])]);
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

type EigPair<T> = (DVector<T>, DMatrix<Complex<T>>);

fn raw_eig<T: Real>(h: &DMatrix<Complex<T>>) -> Option<EigPair<T>> {
    let n = h.nrows();
    if h.iter().all(|z| z.im == T::zero()) {
        let eig = SymmetricEigen::try_new(h.map(|z| z.re), T::default_epsilon(), 2000 * n + 2000)?;
        Some((eig.eigenvalues, eig.eigenvectors.map(|x| Complex::new(x, T::zero()))))
    } else {
        let eig = SymmetricEigen::try_new(h.clone(), T::default_epsilon(), 2000 * n + 2000)?;
        Some((eig.eigenvalues, eig.eigenvectors))
    }
}

fn accurate<T: Real>(h: &DMatrix<Complex<T>>, (values, vectors): &EigPair<T>) -> bool {
    if !values.iter().all(|x| x.is_finite_value()) || !vectors.iter().all(|z| z.re.is_finite_value() && z.im.is_finite_value()) {
        return false;
    }
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| vectors[(r, c)] * values[c]);
    let residual = (h * vectors - scaled).norm();
    residual <= T::default_epsilon().sqrt() * h.norm().max(T::one())
}

/// nalgebra's QR sweep occasionally yields NaN or inaccurate pairs on sparse
/// matrices with repeated exact entries; these are retried after a shift and
/// after a dense unitary similarity, which leave the spectrum unchanged.
fn robust_eig<T: Real>(h: &ComplexMatrix<T>) -> Result<EigPair<T>> {
    let n = h.rows();
    let h = &h.data;
    if let Some(e) = raw_eig(h).filter(|e| accurate(h, e)) {
        return Ok(e);
    }
    let shift = h.norm() * T::lit(0.37) + T::lit(0.61);
    let shifted = h + DMatrix::from_diagonal_element(n, n, Complex::new(shift, T::zero()));
    if let Some((values, vectors)) = raw_eig(&shifted) {
        let e = (values.map(|x| x - shift), vectors);
        if accurate(h, &e) {
            return Ok(e);
        }
    }
    let f = dft(n);
    let rotated = &f * h * f.adjoint();
    if let Some((values, vectors)) = raw_eig(&rotated) {
        let e = (values, f.adjoint() * vectors);
        if accurate(h, &e) {
            return Ok(e);
        }
    }
    Err(Error::NumericalFailure("Hermitian eigensolver did not produce accurate eigenpairs".into()))
}

/// Unitary discrete Fourier matrix.
fn dft<T: Real>(n: usize) -> DMatrix<Complex<T>> {
    let scale = T::one() / T::lit(n as f64).sqrt();
    DMatrix::from_fn(n, n, |r, c| {
        let angle = T::two_pi() * T::lit(((r * c) % n) as f64) / T::lit(n as f64);
        Complex::new(angle.cos() * scale, angle.sin() * scale)
    })
}

/// Singular values in descending order.
pub fn singular_values<T: Real>(x: &ComplexMatrix<T>) -> Result<Vec<T>> {
    if x.rows() == 0 || x.cols() == 0 {
        return Ok(vec![]);
    }
    let svd = robust_svd(real_embedding(&x.data))?;
    let mut s: Vec<T> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(s.into_iter().step_by(2).collect())
}

/// k-numerical range of a Hermitian matrix: the interval between the sum of
/// its `k` smallest and the sum of its `k` largest eigenvalues.
pub fn k_numerical_range<T: Real>(a: &ComplexMatrix<T>, k: usize) -> Result<Interval<T>> {
    require_square(a)?;
    let n = a.rows();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, max: n });
    }
    let eig = hermitian_eig(a)?;
    Ok(k_range_from_spectrum(&eig.eigenvalues, k))
}

/// Same as [`k_numerical_range`] for an already sorted (ascending) spectrum.
pub(crate) fn k_range_from_spectrum<T: Real>(ascending: &[T], k: usize) -> Interval<T> {
    let n = ascending.len();
    let lo = ascending[..k].iter().fold(T::zero(), |s, &x| s + x);
    let hi = ascending[n - k..].iter().fold(T::zero(), |s, &x| s + x);
    // Rounding can only matter for a degenerate spectrum.
    Interval { lo: lo.min(hi), hi: hi.max(lo) }
}

/// (2,k)-spectral norm: square root of the sum of the `k` largest squared singular values.
pub fn norm_2k<T: Real>(x: &ComplexMatrix<T>, k: usize) -> Result<T> {
    let max = x.rows().min(x.cols());
    if k == 0 || k > max {
        return Err(Error::KOutOfRange { k, max });
    }
    let s = singular_values(x)?;
    Ok(s[..k].iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt())
}

/// Moore–Penrose inverse; singular values at or below `rank_tol * sigma_max`
/// are treated as zero.
pub fn pinv<T: Real>(a: &ComplexMatrix<T>, rank_tol: T) -> Result<ComplexMatrix<T>> {
    if !(rank_tol > T::zero()) {
        return Err(Error::NumericalFailure("rank tolerance must be positive".into()));
    }
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Ok(ComplexMatrix::zeros(n, m));
    }
    let svd = robust_svd(real_embedding(&a.data))?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::NumericalFailure("SVD factors missing".into())),
    };
    let sigma_max = svd.singular_values.iter().fold(T::zero(), |acc, &s| acc.max(s));
    let cutoff = rank_tol * sigma_max;
    let mut out = DMatrix::<T>::zeros(2 * n, 2 * m);
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > T::zero() {
            out += (v_t.row(idx).transpose() * u.column(idx).transpose()) * (T::one() / s);
        }
    }
    Ok(ComplexMatrix::from_fn(n, m, |i, j| Complex::new(out[(i, j)], out[(n + i, j)])))
}

/// SVD with its reconstruction checked.  With a convergence tolerance of
/// one ulp nalgebra can stop with a visibly wrong factorization, so looser
/// tolerances and the transpose are tried as well.
fn robust_svd<T: Real>(a: DMatrix<T>) -> Result<SVD<T, nalgebra::Dyn, nalgebra::Dyn>> {
    let scale = a.norm().max(T::one());
    for transpose in [false, true] {
        let input = if transpose { a.transpose() } else { a.clone() };
        for factor in [5.0, 50.0, 500.0] {
            let Some(svd) = SVD::try_new(input.clone(), true, true, T::default_epsilon() * T::lit(factor), 0) else {
                continue;
            };
            let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else { continue };
            let (u, v_t) = if transpose { (v_t.transpose(), u.transpose()) } else { (u, v_t) };
            let rebuilt = &u * DMatrix::from_diagonal(&svd.singular_values) * &v_t;
            if (rebuilt - &a).norm() <= T::default_epsilon().sqrt() * scale {
                return Ok(SVD { u: Some(u), v_t: Some(v_t), singular_values: svd.singular_values });
            }
        }
    }
    Err(Error::NumericalFailure("SVD did not produce an accurate factorization".into()))
}

/// `[[Re A, -Im A], [Im A, Re A]]`, whose SVD carries that of `A` with every
/// singular value doubled.
fn real_embedding<T: Real>(a: &DMatrix<Complex<T>>) -> DMatrix<T> {
    let (m, n) = a.shape();
    DMatrix::from_fn(2 * m, 2 * n, |r, col| {
        let z = a[(r % m, col % n)];
        match (r < m, col < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// [`pinv`] with the default cutoff `1e-12 * max(rows, cols) * sigma_max`.
pub fn pinv_default<T: Real>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let scale = T::from_usize(a.rows().max(a.cols()).max(1)).unwrap_or_else(T::one);
    pinv(a, T::lit(PINV_RCOND) * scale)
}

/// Transposes the second tensor factor of an operator on `C^dim1 (x) C^dim2`:
/// every `dim2 x dim2` block is replaced by its transpose.
pub fn partial_transpose_second<T: Real>(m: &ComplexMatrix<T>, dim1: usize, dim2: usize) -> Result<ComplexMatrix<T>> {
    let d = dim1 * dim2;
    if m.rows() != d || m.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not an operator on C^{dim1} (x) C^{dim2}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(ComplexMatrix::from_fn(d, d, |r, col| {
        let (i, a) = (r / dim2, r % dim2);
        let (j, b) = (col / dim2, col % dim2);
        m[(i * dim2 + b, j * dim2 + a)]
    }))
}

/// Tests `A >= 0` up to `tol * max(1, ||A||)`; returns the verdict and `lambda_min`.
pub fn psd_check<T: Real>(a: &ComplexMatrix<T>, tol: T) -> Result<(bool, T)> {
    let eig = hermitian_eig(a)?;
    let lmin = eig.min_eigenvalue();
    let scale = eig.spectral_norm().max(T::one());
    Ok((lmin >= -tol * scale, lmin))
}

/// Whether `v` lies in the range of the square matrix `A`, judged by
/// `||A A^+ v - v|| <= tol ||v||`.
pub fn in_range<T: Real>(a: &ComplexMatrix<T>, v: &ComplexVector<T>, tol: T) -> Result<bool> {
    require_square(a)?;
    if v.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!("vector of length {} for {}x{} matrix", v.len(), a.rows(), a.cols())));
    }
    let vnorm = v.norm();
    if vnorm == T::zero() {
        return Ok(true);
    }
    let p = pinv_default(a)?;
    let proj = a.mul_vec(&p.mul_vec(v));
    Ok((proj - v).norm() <= tol * vnorm)
}

/// Orthonormal basis (as columns) of the span of `vectors`, extended by
/// standard basis vectors until it has `target` columns.
pub fn orthonormal_completion<T: Real>(dim: usize, vectors: &[ComplexVector<T>], target: usize) -> ComplexMatrix<T> {
    let thresh = T::lit(1e-10);
    let mut basis: Vec<ComplexVector<T>> = Vec::with_capacity(target);
    let candidates = vectors.iter().cloned().chain((0..dim).map(|i| {
        let mut e = ComplexVector::from_element(dim, c(T::zero()));
        e[i] = c(T::one());
        e
    }));
    for mut v in candidates {
        if basis.len() == target {
            break;
        }
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let nv = v.norm();
        if nv > thresh {
            basis.push(v.unscale(nv));
        }
    }
    ComplexMatrix::from_columns(dim, &basis).expect("columns have equal length")
}
