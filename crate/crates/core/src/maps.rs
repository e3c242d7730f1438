//! Linear maps `L: M_n -> M_m` in Choi, elementary-operator and D-type form.
//!
//! The Choi matrix convention is `C(L) = sum_ij E_ij (x) L(E_ij)`: the first
//! tensor factor indexes `m x m` blocks, so block `(i, j)` of `C(L)` is
//! `L(E_ij)` and row `i*m + a` pairs input index `i` with output index `a`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{c, cabs, singular_values, ComplexMatrix, ComplexVector, HERMITIAN_TOL};
use crate::scalar::Real;

/// Nonnegative real `n x n` weight matrix of a D-type map, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DWeights<T> {
    n: usize,
    entries: Vec<T>,
}

impl<T: Real> DWeights<T> {
    pub fn new(n: usize, entries: Vec<T>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!("{} weights for n = {n}", entries.len())));
        }
        for (idx, &x) in entries.iter().enumerate() {
            if !x.is_finite_value() {
                return Err(Error::NonFinite);
            }
            if x < T::zero() {
                return Err(Error::NegativeEntry { row: idx / n, col: idx % n });
            }
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("D must be square".into()));
        }
        Self::new(n, rows.iter().flatten().copied().collect())
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        Self::new(n, (0..n * n).map(|idx| f(idx / n, idx % n)).collect())
    }

    /// `value * I_n`.
    pub fn scaled_identity(n: usize, value: T) -> Result<Self> {
        Self::from_fn(n, |i, j| if i == j { value } else { T::zero() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.entries.chunks(self.n.max(1)).map(<[T]>::to_vec).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.entries.iter().zip(&other.entries).fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    }
}

/// A linear map on matrices in one of its three concrete representations.
#[derive(Clone, Debug, PartialEq)]
pub enum MapRep<T: Real> {
    /// Given by its Choi matrix of size `(n*m) x (n*m)`.
    Choi { choi: ComplexMatrix<T>, n: usize, m: usize },
    /// `X -> sum_r C_r X C_r^dagger - sum_s D_s X D_s^dagger` with all operators `m x n`.
    KrausDifference { plus: Vec<ComplexMatrix<T>>, minus: Vec<ComplexMatrix<T>> },
    /// `A -> diag(sum_k a_kk d_k1, ..., sum_k a_kk d_kn) - A`.
    DType(DWeights<T>),
}

impl<T: Real> MapRep<T> {
    /// Choi-form map; `choi` must be Hermitian to the default tolerance.
    pub fn from_choi(choi: ComplexMatrix<T>, n: usize, m: usize) -> Result<Self> {
        if choi.rows() != n * m || choi.cols() != n * m {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix is {}x{}, expected {}x{}",
                choi.rows(),
                choi.cols(),
                n * m,
                n * m
            )));
        }
        let defect = choi.hermitian_defect();
        if defect > T::lit(HERMITIAN_TOL) {
            return Err(Error::NotHermitian { asymmetry: defect.to_f64_lossy() });
        }
        Ok(Self::Choi { choi, n, m })
    }

    pub fn kraus(plus: Vec<ComplexMatrix<T>>, minus: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let first = plus
            .first()
            .or_else(|| minus.first())
            .ok_or_else(|| Error::DimensionMismatch("elementary-operator form needs at least one operator".into()))?;
        let dims = (first.rows(), first.cols());
        if plus.iter().chain(&minus).any(|op| (op.rows(), op.cols()) != dims) {
            return Err(Error::DimensionMismatch("operators of different shapes".into()));
        }
        Ok(Self::KrausDifference { plus, minus })
    }

    pub fn dtype(d: DWeights<T>) -> Self {
        Self::DType(d)
    }

    /// `L_gamma(A) = gamma tr(A) I - A`, the D-type map with every weight `gamma`.
    pub fn l_gamma(n: usize, gamma: T) -> Result<Self> {
        Ok(Self::DType(DWeights::from_fn(n, |_, _| gamma)?))
    }

    pub fn identity(n: usize) -> Self {
        Self::KrausDifference { plus: vec![ComplexMatrix::identity(n)], minus: vec![] }
    }

    /// Transposition on `M_n`; its Choi matrix is the swap operator.
    pub fn transpose(n: usize) -> Self {
        let mut choi = ComplexMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                choi[(i * n + j, j * n + i)] = c(T::one());
            }
        }
        Self::Choi { choi, n, m: n }
    }

    /// Input dimension `n` (the map acts on `M_n`).
    pub fn input_dim(&self) -> usize {
        match self {
            Self::Choi { n, .. } => *n,
            Self::KrausDifference { plus, minus } => plus.first().or(minus.first()).map_or(0, ComplexMatrix::cols),
            Self::DType(d) => d.n(),
        }
    }

    /// Output dimension `m` (the map lands in `M_m`).
    pub fn output_dim(&self) -> usize {
        match self {
            Self::Choi { m, .. } => *m,
            Self::KrausDifference { plus, minus } => plus.first().or(minus.first()).map_or(0, ComplexMatrix::rows),
            Self::DType(d) => d.n(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Choi { .. } => "choi",
            Self::KrausDifference { .. } => "kraus",
            Self::DType(_) => "dtype",
        }
    }
}

/// Applies `L` to an `n x n` matrix.
pub fn apply<T: Real>(map: &MapRep<T>, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let n = map.input_dim();
    if x.rows() != n || x.cols() != n {
        return Err(Error::DimensionMismatch(format!("map acts on {n}x{n}, got {}x{}", x.rows(), x.cols())));
    }
    Ok(match map {
        MapRep::Choi { choi, m, .. } => {
            let mut out = ComplexMatrix::zeros(*m, *m);
            for i in 0..n {
                for j in 0..n {
                    let w = x[(i, j)];
                    if w != c(T::zero()) {
                        out = out + choi.block(i, j, *m).scale_complex(w);
                    }
                }
            }
            out
        }
        MapRep::KrausDifference { plus, minus } => {
            let m = map.output_dim();
            let mut out = ComplexMatrix::zeros(m, m);
            for op in plus {
                out = out + &(op * x) * &op.adjoint();
            }
            for op in minus {
                out = out - &(op * x) * &op.adjoint();
            }
            out
        }
        MapRep::DType(d) => {
            let mut out = -x;
            for l in 0..n {
                let s = (0..n).fold(c(T::zero()), |acc, k| acc + x[(k, k)] * d.get(k, l));
                out[(l, l)] += s;
            }
            out
        }
    })
}

/// Choi matrix `sum_ij E_ij (x) L(E_ij)`.
pub fn choi<T: Real>(map: &MapRep<T>) -> ComplexMatrix<T> {
    if let MapRep::Choi { choi, .. } = map {
        return choi.clone();
    }
    let (n, m) = (map.input_dim(), map.output_dim());
    let mut out = ComplexMatrix::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..n {
            let block = apply(map, &ComplexMatrix::unit(n, n, i, j)).expect("matrix unit has the input shape");
            out.set_block(i, j, &block);
        }
    }
    out
}

/// Inverse of [`choi`]: the Choi-form map with the given Choi matrix.
pub fn from_choi<T: Real>(choi: &ComplexMatrix<T>, n: usize, m: usize) -> Result<MapRep<T>> {
    MapRep::from_choi(choi.clone(), n, m)
}

/// `(I_k (x) L)(X)` for `X` partitioned into `k x k` blocks of size `n`.
pub fn ampliate<T: Real>(map: &MapRep<T>, k: usize, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let (n, m) = (map.input_dim(), map.output_dim());
    if k == 0 || x.rows() != k * n || x.cols() != k * n {
        return Err(Error::DimensionMismatch(format!(
            "ampliation by k = {k} needs a {}x{} matrix, got {}x{}",
            k * n,
            k * n,
            x.rows(),
            x.cols()
        )));
    }
    let mut out = ComplexMatrix::zeros(k * m, k * m);
    for i in 0..k {
        for j in 0..k {
            out.set_block(i, j, &apply(map, &x.block(i, j, n))?);
        }
    }
    Ok(out)
}

/// The `m x n` operator `F` with `F[a, i] = v[i*m + a]`; the map `X -> F X F^dagger`
/// has Choi matrix `|v><v|`.
pub fn operator_from_choi_vector<T: Real>(v: &ComplexVector<T>, n: usize, m: usize) -> ComplexMatrix<T> {
    assert_eq!(v.len(), n * m, "vector length must be n*m");
    ComplexMatrix::from_fn(m, n, |a, i| v[i * m + a])
}

/// Inverse of [`operator_from_choi_vector`].
pub fn choi_vector<T: Real>(f: &ComplexMatrix<T>) -> ComplexVector<T> {
    let (m, n) = (f.rows(), f.cols());
    ComplexVector::from_fn(n * m, |idx, _| f[(idx % m, idx / m)])
}

/// Elementary-operator form of any map.
///
/// A D-type map becomes `sum_kl d_kl E_lk A E_kl - A`; a Choi-form map is
/// split along the eigenvectors of its Choi matrix, dropping eigenvalues
/// below `1e-14 ||C||`.
pub fn to_kraus<T: Real>(map: &MapRep<T>) -> Result<MapRep<T>> {
    match map {
        MapRep::KrausDifference { .. } => Ok(map.clone()),
        MapRep::DType(d) => {
            let n = d.n();
            let mut plus = Vec::new();
            for k in 0..n {
                for l in 0..n {
                    let w = d.get(k, l);
                    if w > T::zero() {
                        plus.push(ComplexMatrix::unit(n, n, l, k).scale(w.sqrt()));
                    }
                }
            }
            MapRep::kraus(plus, vec![ComplexMatrix::identity(n)])
        }
        MapRep::Choi { choi, n, m } => {
            let eig = crate::linalg::hermitian_eig(choi)?;
            let cut = T::lit(1e-14) * eig.spectral_norm();
            let (mut plus, mut minus) = (Vec::new(), Vec::new());
            for (idx, &lambda) in eig.eigenvalues.iter().enumerate().rev() {
                let f = operator_from_choi_vector(&eig.eigenvector(idx), *n, *m).scale(lambda.abs().sqrt());
                if lambda > cut {
                    plus.push(f);
                } else if lambda < -cut {
                    minus.push(f);
                }
            }
            if plus.is_empty() && minus.is_empty() {
                plus.push(ComplexMatrix::zeros(*m, *n));
            }
            MapRep::kraus(plus, minus)
        }
    }
}

/// Orthonormal set `{x_1, ..., x_k}` in `C^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalFrame<T: Real> {
    vectors: Vec<ComplexVector<T>>,
    dim: usize,
}

impl<T: Real> OrthonormalFrame<T> {
    pub const TOL: f64 = 1e-10;

    pub fn new(dim: usize, vectors: Vec<ComplexVector<T>>) -> Result<Self> {
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch("frame vectors must share the ambient dimension".into()));
        }
        let tol = T::lit(Self::TOL);
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate() {
                let target = if i == j { c(T::one()) } else { c(T::zero()) };
                let dev = cabs(a.dotc(b) - target);
                if dev > tol {
                    return Err(Error::NumericalFailure(format!(
                        "frame is not orthonormal: <x_{i}|x_{j}> deviates by {:e}",
                        dev.to_f64_lossy()
                    )));
                }
            }
        }
        Ok(Self { vectors, dim })
    }

    /// Columns of `basis` as a frame.
    pub fn from_columns(basis: &ComplexMatrix<T>) -> Result<Self> {
        Self::new(basis.rows(), (0..basis.cols()).map(|j| basis.column(j)).collect())
    }

    /// `{e_1, ..., e_k}` in `C^dim`.
    pub fn standard(dim: usize, k: usize) -> Self {
        Self {
            vectors: (0..k)
                .map(|i| ComplexVector::from_fn(dim, |r, _| if r == i { c(T::one()) } else { c(T::zero()) }))
                .collect(),
            dim,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[ComplexVector<T>] {
        &self.vectors
    }

    /// `dim x k` matrix with the frame vectors as columns.
    pub fn to_matrix(&self) -> ComplexMatrix<T> {
        ComplexMatrix::from_columns(self.dim, &self.vectors).expect("frame vectors share a dimension")
    }
}

/// `L_X = (L(|x_i><x_j|))_{i,j}`, a `k x k` block matrix with `m x m` blocks.
pub fn block_matrix_lx<T: Real>(map: &MapRep<T>, frame: &OrthonormalFrame<T>) -> Result<ComplexMatrix<T>> {
    let (n, m) = (map.input_dim(), map.output_dim());
    if frame.dim() != n {
        return Err(Error::DimensionMismatch(format!("frame lives in C^{}, map acts on M_{n}", frame.dim())));
    }
    let k = frame.len();
    let mut out = ComplexMatrix::zeros(k * m, k * m);
    for (i, xi) in frame.vectors().iter().enumerate() {
        for (j, xj) in frame.vectors().iter().enumerate() {
            out.set_block(i, j, &apply(map, &ComplexMatrix::outer(xi, xj))?);
        }
    }
    Ok(out)
}

/// Reshapes `x` in `C^n (x) C^m` into the `n x m` coefficient matrix `X[i, a] = x[i*m + a]`.
pub fn bipartite_matrix<T: Real>(x: &ComplexVector<T>, n: usize, m: usize) -> ComplexMatrix<T> {
    assert_eq!(x.len(), n * m, "vector length must be n*m");
    ComplexMatrix::from_fn(n, m, |i, a| x[i * m + a])
}

/// Inverse of [`bipartite_matrix`].
pub fn bipartite_vector<T: Real>(x: &ComplexMatrix<T>) -> ComplexVector<T> {
    let (n, m) = (x.rows(), x.cols());
    ComplexVector::from_fn(n * m, |idx, _| x[(idx / m, idx % m)])
}

/// Schmidt coefficients of `x` in `C^n (x) C^m`, descending.
pub fn schmidt_coefficients<T: Real>(x: &ComplexVector<T>, n: usize, m: usize) -> Result<Vec<T>> {
    singular_values(&bipartite_matrix(x, n, m))
}

/// Number of Schmidt coefficients above `tol * ||x||`.
pub fn schmidt_rank<T: Real>(x: &ComplexVector<T>, n: usize, m: usize, tol: T) -> Result<usize> {
    let s = schmidt_coefficients(x, n, m)?;
    let cut = tol * x.norm();
    Ok(s.iter().filter(|&&v| v > cut).count())
}

/// Given `u = sum_q f_q (x) a_q` in `C^k (x) C^n` and `v = sum_q f_q (x) b_q`
/// in `C^k (x) C^m`, returns `x = sum_q conj(a_q) (x) b_q`, which satisfies
/// `<v|(I_k (x) L)(|u><u|)|v> = <x|C(L)|x>` and has Schmidt rank at most `k`.
pub fn induced_schmidt_vector<T: Real>(
    u: &ComplexVector<T>,
    v: &ComplexVector<T>,
    k: usize,
    n: usize,
    m: usize,
) -> Result<ComplexVector<T>> {
    if u.len() != k * n || v.len() != k * m {
        return Err(Error::DimensionMismatch(format!(
            "expected vectors of length {} and {}, got {} and {}",
            k * n,
            k * m,
            u.len(),
            v.len()
        )));
    }
    Ok(ComplexVector::from_fn(n * m, |idx, _| {
        let (i, a) = (idx / m, idx % m);
        (0..k).fold(Complex::new(T::zero(), T::zero()), |acc, q| acc + u[q * n + i].conj() * v[q * m + a])
    }))
}

/// Row-major flattening of a `k x n` matrix `U` into `u = sum_j u_j (x) e_j`
/// in `C^k (x) C^n`, where `u_j` are the columns of `U`.
pub fn flatten_rows<T: Real>(u: &ComplexMatrix<T>) -> ComplexVector<T> {
    ComplexVector::from_vec(u.row_major())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eig, psd_check};
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dtype_phi_3cycle() -> MapRep<f64> {
        // D = 2I + P with f_i(u) = 2|u_i|^2 + |u_{pi(i)}|^2 and pi(i) = i - 1 (mod 3)
        let d = DWeights::from_rows(&[vec![2.0, 1.0, 0.0], vec![0.0, 2.0, 1.0], vec![1.0, 0.0, 2.0]]).unwrap();
        MapRep::dtype(d)
    }

    #[test]
    fn kraus_conversion_preserves_choi() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random::hermitian::<f64, _>(6, &mut rng);
        let maps = vec![
            dtype_phi_3cycle(),
            MapRep::l_gamma(3, 1.5).unwrap(),
            MapRep::from_choi(h, 2, 3).unwrap(),
            MapRep::transpose(2),
        ];
        for map in maps {
            let k = to_kraus(&map).unwrap();
            assert_eq!(k.kind(), "kraus");
            assert!(choi(&k).max_abs_diff(&choi(&map)) < 1e-12);
        }
    }

    #[test]
    fn choi_vector_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random::ginibre::<f64, _>(3, 2, &mut rng);
        let v = choi_vector(&f);
        assert_eq!(operator_from_choi_vector(&v, 2, 3), f);
        let single = MapRep::kraus(vec![f], vec![]).unwrap();
        assert!(choi(&single).max_abs_diff(&ComplexMatrix::outer(&v, &v)) < 1e-12);
    }

    #[test]
    fn apply_examples() {
        let gamma = 2.5;
        let l = MapRep::l_gamma(4, gamma).unwrap();
        let out = apply(&l, &ComplexMatrix::identity(4)).unwrap();
        assert!(out.max_abs_diff(&ComplexMatrix::identity(4).scale(gamma * 4.0 - 1.0)) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random::ginibre::<f64, _>(3, 3, &mut rng);
        assert!(apply(&MapRep::identity(3), &x).unwrap().max_abs_diff(&x) < 1e-14);

        let out = apply(&dtype_phi_3cycle(), &ComplexMatrix::unit(3, 3, 0, 0)).unwrap();
        assert!(out.max_abs_diff(&ComplexMatrix::<f64>::diag_real(&[1.0, 1.0, 0.0])) < 1e-14);

        assert!(apply(&l, &ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn choi_examples() {
        let n = 3;
        let mut omega = ComplexMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                omega = omega + ComplexMatrix::unit(n, n, i, j).kron(&ComplexMatrix::unit(n, n, i, j));
            }
        }
        assert!(choi(&MapRep::<f64>::identity(n)).max_abs_diff(&omega) < 1e-14);

        let gamma = 1.7;
        let expected = &ComplexMatrix::identity(n * n).scale(gamma) - &omega;
        assert!(choi(&MapRep::l_gamma(n, gamma).unwrap()).max_abs_diff(&expected) < 1e-14);

        let cp = MapRep::dtype(DWeights::scaled_identity(4, 4.0).unwrap());
        assert!(psd_check(&choi(&cp), 1e-9).unwrap().0);
    }

    #[test]
    fn from_choi_examples() {
        let id = from_choi(&choi(&MapRep::<f64>::identity(3)), 3, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = ComplexMatrix::unit(3, 3, i, j);
                assert!(apply(&id, &e).unwrap().max_abs_diff(&e) < 1e-15);
            }
        }
        let zero = from_choi(&ComplexMatrix::<f64>::zeros(4, 4), 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random::ginibre::<f64, _>(2, 2, &mut rng);
        assert_eq!(apply(&zero, &x).unwrap().frobenius_norm(), 0.0);

        let l2 = from_choi(&choi(&MapRep::l_gamma(3, 2.0).unwrap()), 3, 3).unwrap();
        let e12 = ComplexMatrix::unit(3, 3, 0, 1);
        assert!(apply(&l2, &e12).unwrap().max_abs_diff(&(-&e12)) < 1e-15);

        let c = choi(&MapRep::<f64>::l_gamma(3, 2.0).unwrap());
        assert_eq!(choi(&from_choi(&c, 3, 3).unwrap()), c);
        assert!(from_choi(&c, 2, 3).is_err());
        let mut bad = c.clone();
        bad[(0, 1)] = Complex::new(5.0, 0.0);
        assert!(matches!(from_choi(&bad, 3, 3), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn ampliate_examples() {
        let l = MapRep::l_gamma(3, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random::hermitian::<f64, _>(3, &mut rng);
        assert!(ampliate(&l, 1, &x).unwrap().max_abs_diff(&apply(&l, &x).unwrap()) < 1e-15);

        let k = 2;
        let lifted = ampliate(&l, k, &ComplexMatrix::identity(k * 3)).unwrap();
        let expected = ComplexMatrix::identity(k).kron(&apply(&l, &ComplexMatrix::identity(3)).unwrap());
        assert!(lifted.max_abs_diff(&expected) < 1e-14);

        // x = sum_j e_j (x) x_j for an orthonormal frame gives gamma I - |x><x|
        let gamma = 1.5;
        let u = random::haar_unitary::<f64, _>(3, &mut rng);
        let frame_vec = ComplexVector::from_fn(k * 3, |idx, _| u[(idx % 3, idx / 3)]);
        let xx = ComplexMatrix::outer(&frame_vec, &frame_vec);
        let lifted = ampliate(&l, k, &xx).unwrap();
        let expected = &ComplexMatrix::identity(k * 3).scale(gamma) - &xx;
        assert!(lifted.max_abs_diff(&expected) < 1e-14);

        assert!(ampliate(&l, 2, &ComplexMatrix::identity(5)).is_err());
    }

    #[test]
    fn block_matrix_examples() {
        let l = dtype_phi_3cycle();
        let std = OrthonormalFrame::standard(3, 3);
        assert!(block_matrix_lx(&l, &std).unwrap().max_abs_diff(&choi(&l)) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random::unit_vector::<f64, _>(3, &mut rng);
        let frame = OrthonormalFrame::new(3, vec![x.clone()]).unwrap();
        let lx = block_matrix_lx(&l, &frame).unwrap();
        assert!(lx.max_abs_diff(&apply(&l, &ComplexMatrix::outer(&x, &x)).unwrap()) < 1e-15);

        // the generalized Choi map is positive but not completely positive
        let eig = hermitian_eig(&block_matrix_lx(&l, &std).unwrap()).unwrap();
        assert!(eig.min_eigenvalue() < -0.1);

        assert!(block_matrix_lx(&l, &OrthonormalFrame::standard(2, 1)).is_err());
    }

    #[test]
    fn frame_validation() {
        let v = ComplexVector::from_vec(vec![c(1.0), c(0.0)]);
        let w = ComplexVector::from_vec(vec![c(1.0), c(1.0)]);
        assert!(OrthonormalFrame::<f64>::new(2, vec![v, w]).is_err());
    }

    #[test]
    fn kraus_validation() {
        assert!(MapRep::<f64>::kraus(vec![], vec![]).is_err());
        assert!(MapRep::<f64>::kraus(vec![ComplexMatrix::identity(2)], vec![ComplexMatrix::identity(3)]).is_err());
        let l = MapRep::<f64>::kraus(vec![ComplexMatrix::zeros(2, 3)], vec![]).unwrap();
        assert_eq!((l.input_dim(), l.output_dim()), (3, 2));
    }

    #[test]
    fn dweights_validation() {
        assert!(matches!(
            DWeights::<f64>::from_rows(&[vec![1.0, -1.0], vec![0.0, 1.0]]),
            Err(Error::NegativeEntry { row: 0, col: 1 })
        ));
        assert!(DWeights::<f64>::from_rows(&[vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let l = MapRep::<f32>::l_gamma(3, 2.0).unwrap();
        let out = apply(&l, &ComplexMatrix::identity(3)).unwrap();
        assert!(out.max_abs_diff(&ComplexMatrix::identity(3).scale(5.0)) < 1e-6);
    }
}
