//! Decomposability: a map is decomposable when its Choi matrix is `C1 + C2`
//! with `C1 >= 0` and the partial transpose of `C2` on the output factor `>= 0`.

use crate::dtype::{make_phi, PermutationSpec};
use crate::error::{Error, Result};
use crate::kcriteria::{Status, Verdict};
use crate::linalg::{c, partial_transpose_second, psd_check, ComplexMatrix, PSD_TOL};
use crate::maps::{choi, MapRep};
use crate::scalar::Real;

/// Candidate splitting of a Choi matrix on `C^n (x) C^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiSplit<T: Real> {
    pub c1: ComplexMatrix<T>,
    pub c2: ComplexMatrix<T>,
    /// Input dimension.
    pub n: usize,
}

impl<T: Real> ChoiSplit<T> {
    pub fn new(c1: ComplexMatrix<T>, c2: ComplexMatrix<T>, n: usize) -> Result<Self> {
        let d = c1.rows();
        if c1.cols() != d || c2.rows() != d || c2.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "split parts are {}x{} and {}x{}",
                c1.rows(),
                c1.cols(),
                c2.rows(),
                c2.cols()
            )));
        }
        if n == 0 || !d.is_multiple_of(n) {
            return Err(Error::DimensionMismatch(format!("{d}x{d} blocks do not factor with input dimension {n}")));
        }
        Ok(Self { c1, c2, n })
    }

    /// Output dimension.
    pub fn m(&self) -> usize {
        self.c1.rows() / self.n
    }

    /// `C2` with its output factor transposed.
    pub fn c2_partial_transpose(&self) -> ComplexMatrix<T> {
        partial_transpose_second(&self.c2, self.n, self.m()).expect("square by construction")
    }
}

/// Certifies decomposability when `C1 + C2 = C(L)` to `tol * max(1, ||C(L)||_F)`
/// and both `C1` and `C2^{T2}` pass [`psd_check`] at slack `tol`.
/// The margin is the smaller of the two minimal eigenvalues.
pub fn verify_split<T: Real>(map: &MapRep<T>, split: &ChoiSplit<T>, tol: T) -> Result<Verdict<T>> {
    let (n, m) = (map.input_dim(), map.output_dim());
    if split.n != n || split.c1.rows() != n * m {
        return Err(Error::DimensionMismatch(format!(
            "split on {}-dimensional space with input {} for a map {n} -> {m}",
            split.c1.rows(),
            split.n
        )));
    }
    let full = choi(map);
    let sum_err = (split.c1.clone() + split.c2.clone()).max_abs_diff(&full);
    let (c1_ok, l1) = psd_check(&split.c1, tol)?;
    let (c2_ok, l2) = psd_check(&split.c2_partial_transpose(), tol)?;
    let margin = l1.min(l2);
    let sums = sum_err <= tol * full.frobenius_norm().max(T::one());
    let status = if sums && c1_ok && c2_ok { Status::CertifiedDecomposable } else { Status::Inconclusive };
    Ok(Verdict::new(status, 1, margin, "choi-split"))
}

/// [`verify_split`] at the default PSD slack.
pub fn verify_split_default<T: Real>(map: &MapRep<T>, split: &ChoiSplit<T>) -> Result<Verdict<T>> {
    verify_split(map, split, T::lit(PSD_TOL))
}

/// Splitting of the Choi matrix of the D-type map with `D = (n-1) I + P_pi`
/// for an involution `pi` with fixed-point set `F`:
///
/// `C1 = sum_{i in F} (n-1) E_ii (x) E_ii + sum_{i not in F} (n-2) E_ii (x) E_ii - sum_{i != j, pi(i) != j} E_ij (x) E_ij`,
/// `C2 = sum_{i not in F} (E_{pi(i) pi(i)} (x) E_ii - E_{i pi(i)} (x) E_{i pi(i)})`.
pub fn involution_split<T: Real>(n: usize, pi: &PermutationSpec) -> Result<ChoiSplit<T>> {
    if pi.n() != n {
        return Err(Error::DimensionMismatch(format!("permutation of {} points for n = {n}", pi.n())));
    }
    if !pi.is_involution() {
        return Err(Error::NotInvolution);
    }
    let d = n * n;
    let idx = |i: usize, a: usize| i * n + a;
    let nt = T::from_usize(n).expect("dimension");
    let mut c1 = ComplexMatrix::zeros(d, d);
    let mut c2 = ComplexMatrix::zeros(d, d);
    for i in 0..n {
        let p = pi.apply0(i);
        let fixed = p == i;
        let diag = if fixed { nt - T::one() } else { nt - T::lit(2.0) };
        c1[(idx(i, i), idx(i, i))] = c(diag);
        for j in 0..n {
            if j != i && p != j {
                c1[(idx(i, i), idx(j, j))] = c(-T::one());
            }
        }
        if !fixed {
            // E_{pi(i) pi(i)} (x) E_ii sits at row/col (pi(i), i)
            c2[(idx(p, i), idx(p, i))] += c(T::one());
            c2[(idx(i, i), idx(p, p))] -= c(T::one());
        }
    }
    ChoiSplit::new(c1, c2, n)
}

/// The map `D = (n-1) I + P_pi` whose Choi matrix [`involution_split`] splits.
pub fn involution_map<T: Real>(n: usize, pi: &PermutationSpec) -> Result<MapRep<T>> {
    Ok(MapRep::dtype(make_phi(n, pi, T::one())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eig, singular_values};
    use crate::maps::DWeights;

    #[test]
    fn involution_counts() {
        // telephone numbers 1, 2, 4, 10, 26, 76
        let counts: Vec<usize> = (1..=6).map(|n| PermutationSpec::involutions(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 4, 10, 26, 76]);
    }

    #[test]
    fn cp_and_transpose_splits() {
        let id = MapRep::<f64>::KrausDifference { plus: vec![ComplexMatrix::identity(2)], minus: vec![] };
        let split = ChoiSplit::new(choi(&id), ComplexMatrix::zeros(4, 4), 2).unwrap();
        assert_eq!(verify_split_default(&id, &split).unwrap().status, Status::CertifiedDecomposable);

        let swap = partial_transpose_second(&choi(&id), 2, 2).unwrap();
        let transpose = MapRep::from_choi(swap.clone(), 2, 2).unwrap();
        let split = ChoiSplit::new(ComplexMatrix::zeros(4, 4), swap.clone(), 2).unwrap();
        let v = verify_split_default(&transpose, &split).unwrap();
        assert_eq!(v.status, Status::CertifiedDecomposable);
        assert!(v.margin.abs() < 1e-14);

        // the swap itself is not PSD, so the split the other way round fails
        let wrong = ChoiSplit::new(swap, ComplexMatrix::zeros(4, 4), 2).unwrap();
        assert_eq!(verify_split_default(&transpose, &wrong).unwrap().status, Status::Inconclusive);
    }

    #[test]
    fn split_of_a_swap_pair() {
        let pi = PermutationSpec::new(vec![2, 1]).unwrap();
        let map = involution_map::<f64>(2, &pi).unwrap();
        let s = involution_split::<f64>(2, &pi).unwrap();
        // n = 2: C1 has no diagonal weight on moved points and only -1 off-diagonal
        // couplings between i != j with pi(i) = j, which are excluded, so C1 = 0
        assert_eq!(s.c1, ComplexMatrix::zeros(4, 4));
        let e = hermitian_eig(&s.c2_partial_transpose()).unwrap();
        let mut ev = e.eigenvalues.clone();
        ev.sort_by(f64::total_cmp);
        let expected = [0.0, 0.0, 0.0, 2.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(verify_split_default(&map, &s).unwrap().status, Status::CertifiedDecomposable);
    }

    #[test]
    fn identity_permutation_split() {
        let pi = PermutationSpec::identity(3);
        let s = involution_split::<f64>(3, &pi).unwrap();
        assert_eq!(s.c2, ComplexMatrix::zeros(9, 9));
        assert_eq!(s.c1, choi(&MapRep::dtype(DWeights::scaled_identity(3, 3.0).unwrap())));
    }

    #[test]
    fn all_involutions_verify() {
        for n in 1..=6 {
            for pi in PermutationSpec::involutions(n) {
                let s = involution_split::<f64>(n, &pi).unwrap();
                let map = involution_map::<f64>(n, &pi).unwrap();
                assert!((s.c1.clone() + s.c2.clone()).max_abs_diff(&choi(&map)) < 1e-12);
                let v = verify_split_default(&map, &s).unwrap();
                assert_eq!(v.status, Status::CertifiedDecomposable, "n = {n}, pi = {:?}", pi.image());
                assert!(v.margin >= -1e-10);
            }
        }
    }

    #[test]
    fn c1_block_rows_sum_to_zero() {
        for n in 2..=6 {
            for pi in PermutationSpec::involutions(n) {
                let s = involution_split::<f64>(n, &pi).unwrap();
                for i in 0..n {
                    let row: f64 = (0..n).map(|j| s.c1[(i * n + i, j * n + j)].re).sum();
                    assert!(row.abs() < 1e-12);
                    let expected = if pi.apply0(i) == i { n - 1 } else { n - 2 };
                    assert_eq!(s.c1[(i * n + i, i * n + i)].re, expected as f64);
                }
            }
        }
    }

    #[test]
    fn c2_rank_and_blocks() {
        for n in 2..=6 {
            for pi in PermutationSpec::involutions(n) {
                let s = involution_split::<f64>(n, &pi).unwrap();
                let moved = n - pi.fixed_points().len();
                let rank = singular_values(&s.c2).unwrap().iter().filter(|&&x| x > 1e-10).count();
                assert_eq!(rank, 2 * moved);
                // each pair {i, pi(i)} contributes a block supported in span{e_i, e_pi(i)} (x) span{e_i, e_pi(i)}
                let pt = s.c2_partial_transpose();
                for r in 0..n * n {
                    for q in 0..n * n {
                        if pt[(r, q)].norm_sqr() > 0.0 {
                            let (i, a, j, b) = (r / n, r % n, q / n, q % n);
                            let pair = [i, pi.apply0(i)];
                            assert!(i != pi.apply0(i) && [a, j, b].iter().all(|x| pair.contains(x)));
                        }
                    }
                }
                for i in (0..n).filter(|&i| i < pi.apply0(i)) {
                    let p = pi.apply0(i);
                    let idx = [i * n + i, i * n + p, p * n + i, p * n + p];
                    let block = ComplexMatrix::from_fn(4, 4, |r, q| pt[(idx[r], idx[q])]);
                    assert!(hermitian_eig(&block).unwrap().min_eigenvalue() >= -1e-12);
                }
            }
        }
    }

    #[test]
    fn half_shift_is_decomposable() {
        for n in [4usize, 6, 8] {
            let pi = PermutationSpec::new((0..n).map(|i| (i + n / 2) % n + 1).collect()).unwrap();
            let s = involution_split::<f64>(n, &pi).unwrap();
            let v = verify_split_default(&involution_map(n, &pi).unwrap(), &s).unwrap();
            assert_eq!(v.status, Status::CertifiedDecomposable);
        }
    }

    #[test]
    fn rejects_non_involutions() {
        assert!(matches!(involution_split::<f64>(3, &PermutationSpec::cycle(3)), Err(Error::NotInvolution)));
    }
}
