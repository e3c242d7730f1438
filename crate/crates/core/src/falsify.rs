//! Search engine shared by every refutation routine: seeded multistart,
//! alternating descent over Schmidt-rank-k vectors, sampling of normalized
//! `U` matrices and a monotone line-search ascent for smooth objectives.
//!
//! Restart `i` draws from its own ChaCha8 stream `(seed, i)`, so results do
//! not depend on how rayon schedules the restarts.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix, ComplexVector};
use crate::maps::{bipartite_matrix, bipartite_vector};
use crate::random;
use crate::scalar::Real;

/// Stopping threshold on the per-step decrease of the Schmidt descent.
pub const DESCENT_TOL: f64 = 1e-10;

/// Restarts, iteration cap, seed and decision tolerance for a search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { restarts: 64, max_iters: 500, seed: 0, tol: 1e-8 }
    }
}

impl SearchBudget {
    pub fn new(restarts: usize, max_iters: usize, seed: u64, tol: f64) -> Result<Self> {
        let b = Self { restarts, max_iters, seed, tol };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::BadBudget("restarts must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::BadBudget("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::BadBudget(format!("tol must be positive and finite, got {}", self.tol)));
        }
        Ok(())
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Independent generator for restart `index`.
    pub fn rng_for(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// Outcome of one Schmidt descent run.
#[derive(Clone, Debug)]
pub struct SchmidtRun<T: Real> {
    pub value: T,
    pub vector: ComplexVector<T>,
    /// Objective after the start and after every half-step.
    pub history: Vec<T>,
}

/// Best result over all restarts of a Schmidt search.
#[derive(Clone, Debug)]
pub struct SchmidtSearch<T: Real> {
    pub value: T,
    pub vector: ComplexVector<T>,
    pub best_restart: usize,
    pub restarts: usize,
}

fn check_dims<T: Real>(choi: &ComplexMatrix<T>, n: usize, m: usize, k: usize) -> Result<()> {
    let max = n.min(m);
    if k == 0 || k > max {
        return Err(Error::KOutOfRange { k, max });
    }
    if choi.rows() != n * m || choi.cols() != n * m {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not an operator on C^{n} (x) C^{m}",
            choi.rows(),
            choi.cols()
        )));
    }
    Ok(())
}

/// Orthonormal basis (as columns) of the dominant `k`-dimensional column space of `x`.
fn dominant_columns<T: Real>(x: &ComplexMatrix<T>, k: usize) -> Result<ComplexMatrix<T>> {
    let gram = x * &x.adjoint();
    let eig = hermitian_eig(&gram)?;
    let d = gram.rows();
    Ok(ComplexMatrix::from_fn(d, k, |r, j| eig.eigenvectors[(r, d - k + j)]))
}

/// Best Schmidt-rank-`k` approximation of `x`, normalized.
pub fn truncate_schmidt<T: Real>(x: &ComplexVector<T>, n: usize, m: usize, k: usize) -> Result<ComplexVector<T>> {
    let xm = bipartite_matrix(x, n, m);
    let v = dominant_columns(&xm, k)?;
    let proj = &(&v * &v.adjoint()) * &xm;
    let out = bipartite_vector(&proj);
    let nv = out.norm();
    if !(nv > T::zero()) || !nv.is_finite_value() {
        return Err(Error::BadNormalization);
    }
    Ok(out.unscale(nv))
}

/// Minimizes `<x|C|x>` over the range of `basis` and returns the minimizer in `C^{nm}`.
fn compressed_min<T: Real>(choi: &ComplexMatrix<T>, basis: &ComplexMatrix<T>) -> Result<(T, ComplexVector<T>)> {
    let eig = hermitian_eig(&choi.compress(basis))?;
    let y = eig.eigenvector(0);
    let x = basis.as_na() * y;
    let nx = x.norm();
    Ok((eig.min_eigenvalue(), x.unscale(nx)))
}

/// Alternating descent of `<x|C|x>` over unit vectors of Schmidt rank at most `k`
/// in `C^n (x) C^m`.
///
/// Each half-step fixes a `k`-dimensional subspace of one tensor factor that
/// contains the current vector and jumps to the exact minimizer inside it, so
/// the recorded values never increase.
pub fn refine_schmidt<T: Real>(
    choi: &ComplexMatrix<T>,
    n: usize,
    m: usize,
    k: usize,
    start: &ComplexVector<T>,
    max_iters: usize,
) -> Result<SchmidtRun<T>> {
    check_dims(choi, n, m, k)?;
    if start.len() != n * m {
        return Err(Error::DimensionMismatch(format!("start vector of length {} for n*m = {}", start.len(), n * m)));
    }
    let h = choi.hermitian_part();
    let mut x = truncate_schmidt(start, n, m, k)?;
    let mut value = h.quadratic_form(&x).re;
    let mut history = vec![value];
    let id_n = ComplexMatrix::identity(n);
    let id_m = ComplexMatrix::identity(m);
    let tol = T::lit(DESCENT_TOL);
    for _ in 0..max_iters {
        let before = value;
        for side in 0..2 {
            let xm = bipartite_matrix(&x, n, m);
            let basis = if side == 0 {
                // span of the rows of X on the output factor
                id_n.kron(&dominant_columns(&xm.transpose(), k)?)
            } else {
                dominant_columns(&xm, k)?.kron(&id_m)
            };
            let (v, nx) = compressed_min(&h, &basis)?;
            // Never accept a step that rounding made worse.
            if v <= value {
                value = v;
                x = nx;
            }
            history.push(value);
        }
        if before - value < tol {
            break;
        }
    }
    Ok(SchmidtRun { value, vector: x, history })
}

/// Random unit vector `vec(A B^T)` with `A` (`n x k`) and `B` (`m x k`) Gaussian.
pub fn random_schmidt_vector<T: Real, R: Rng + ?Sized>(n: usize, m: usize, k: usize, rng: &mut R) -> ComplexVector<T> {
    loop {
        let a = random::ginibre::<T, R>(n, k, rng);
        let b = random::ginibre::<T, R>(m, k, rng);
        let x = bipartite_vector(&(&a * &b.transpose()));
        let nx = x.norm();
        if nx > T::lit(1e-12) {
            return x.unscale(nx);
        }
    }
}

/// Multistart Schmidt descent: the given `seeds` first (restart indices
/// `0..seeds.len()`), then `budget.restarts` random starts.  The minimum is
/// taken with ties broken by the lower restart index.
pub fn minimize_schmidt<T: Real>(
    choi: &ComplexMatrix<T>,
    n: usize,
    m: usize,
    k: usize,
    budget: &SearchBudget,
    seeds: &[ComplexVector<T>],
) -> Result<SchmidtSearch<T>> {
    check_dims(choi, n, m, k)?;
    budget.validate()?;
    let total = seeds.len() + budget.restarts;
    let runs: Vec<Result<(usize, SchmidtRun<T>)>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let start = match seeds.get(idx) {
                Some(s) => s.clone(),
                None => random_schmidt_vector(n, m, k, &mut budget.rng_for(idx)),
            };
            refine_schmidt(choi, n, m, k, &start, budget.max_iters).map(|r| (idx, r))
        })
        .collect();
    let mut best: Option<(usize, SchmidtRun<T>)> = None;
    for run in runs {
        let (idx, r) = run?;
        let better = match &best {
            None => true,
            Some((bi, b)) => r.value < b.value || (r.value == b.value && idx < *bi),
        };
        if better {
            best = Some((idx, r));
        }
    }
    let (best_restart, run) = best.expect("at least one restart");
    Ok(SchmidtSearch { value: run.value, vector: run.vector, best_restart, restarts: total })
}

/// Complex Gaussian `k x n` matrix scaled to `tr(U^dagger U) = 1`.
pub fn sample_u<T: Real, R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> ComplexMatrix<T> {
    loop {
        let g = random::ginibre::<T, R>(k, n, rng);
        let f = g.frobenius_norm();
        if f > T::lit(1e-12) {
            return g.scale(T::one() / f);
        }
    }
}

/// Flattens `U` into real coordinates `(re, im)` entry by entry, row-major.
pub fn u_to_params<T: Real>(u: &ComplexMatrix<T>) -> Vec<T> {
    u.row_major().into_iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Inverse of [`u_to_params`].
pub fn params_to_u<T: Real>(k: usize, n: usize, p: &[T]) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(k, n, |i, j| {
        let idx = 2 * (i * n + j);
        Complex::new(p[idx], p[idx + 1])
    })
}

/// Result of [`ascend`].
#[derive(Clone, Debug)]
pub struct AscentRun<T> {
    pub value: T,
    pub point: Vec<T>,
    pub iterations: usize,
}

/// Monotone gradient ascent with Armijo backtracking.
///
/// `grad` returns the gradient at a point; `project` maps every accepted
/// iterate back onto the feasible set (for scale-invariant objectives a
/// renormalization).  Stops as soon as `f` becomes `+inf` (an infeasible
/// point for the callers), when no step improves, or after `max_iters`.
pub fn ascend<T, F, G, P>(f: F, grad: G, project: P, x0: Vec<T>, max_iters: usize) -> AscentRun<T>
where
    T: Real,
    F: Fn(&[T]) -> T,
    G: Fn(&[T]) -> Vec<T>,
    P: Fn(&mut Vec<T>),
{
    let mut x = x0;
    let mut fx = f(&x);
    let mut step = T::one();
    let armijo = T::lit(1e-4);
    let half = T::lit(0.5);
    let mut iterations = 0;
    while iterations < max_iters && fx.is_finite_value() {
        iterations += 1;
        let g = grad(&x);
        let gg = g.iter().fold(T::zero(), |s, &v| s + v * v);
        if !(gg > T::lit(1e-300)) || !gg.is_finite_value() {
            break;
        }
        let mut accepted = None;
        let mut s = step * T::lit(4.0);
        for _ in 0..60 {
            let mut y: Vec<T> = x.iter().zip(&g).map(|(&xi, &gi)| xi + s * gi).collect();
            project(&mut y);
            let fy = f(&y);
            if fy > fx + armijo * s * gg || (fy == T::lit(f64::INFINITY)) {
                accepted = Some((y, fy));
                break;
            }
            s *= half;
        }
        match accepted {
            Some((y, fy)) => {
                let gain = fy - fx;
                x = y;
                fx = fy;
                step = s;
                if gain <= T::lit(1e-15) * fx.abs().max(T::one()) {
                    break;
                }
            }
            None => break,
        }
    }
    AscentRun { value: fx, point: x, iterations }
}

/// Central-difference gradient with relative step `h`.
pub fn numeric_gradient<T: Real>(f: &dyn Fn(&[T]) -> T, x: &[T], h: T) -> Vec<T> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(T::one());
            y[i] = x[i] + step;
            let up = f(&y);
            y[i] = x[i] - step;
            let down = f(&y);
            y[i] = x[i];
            let g = (up - down) / (step + step);
            if g.is_finite_value() {
                g
            } else {
                T::zero()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{choi, schmidt_rank, MapRep};

    fn l_gamma_choi(n: usize, gamma: f64) -> ComplexMatrix<f64> {
        choi(&MapRep::l_gamma(n, gamma).unwrap())
    }

    #[test]
    fn budget_validation() {
        assert!(SearchBudget::default().validate().is_ok());
        assert_eq!(SearchBudget::default().restarts, 64);
        assert!(SearchBudget::new(0, 10, 1, 1e-8).is_err());
        assert!(SearchBudget::new(1, 0, 1, 1e-8).is_err());
        assert!(SearchBudget::new(1, 1, 1, 0.0).is_err());
        assert!(SearchBudget::new(1, 1, 1, f64::NAN).is_err());
    }

    #[test]
    fn descent_on_l1_reaches_minus_one() {
        let c = l_gamma_choi(3, 1.0);
        let mut rng = SearchBudget::default().rng_for(7);
        let start = random_schmidt_vector::<f64, _>(3, 3, 2, &mut rng);
        let run = refine_schmidt(&c, 3, 3, 2, &start, 50).unwrap();
        assert!((run.value + 1.0).abs() < 1e-9, "value {}", run.value);
        assert!(run.history.windows(2).all(|w| w[1] <= w[0]));
        assert!((run.vector.norm() - 1.0).abs() < 1e-12);
        assert!(schmidt_rank(&run.vector, 3, 3, 1e-8).unwrap() <= 2);
    }

    #[test]
    fn descent_on_cp_map_stays_nonnegative() {
        let c = choi(&MapRep::<f64>::identity(3));
        let mut rng = SearchBudget::default().rng_for(0);
        for k in 1..=3 {
            let start = random_schmidt_vector::<f64, _>(3, 3, k, &mut rng);
            let run = refine_schmidt(&c, 3, 3, k, &start, 500).unwrap();
            assert!(run.value >= -1e-9);
        }
    }

    #[test]
    fn full_rank_descent_finds_global_minimum() {
        let mut rng = SearchBudget::default().rng_for(3);
        let c = random::hermitian::<f64, _>(9, &mut rng);
        let lmin = hermitian_eig(&c).unwrap().min_eigenvalue();
        let start = random_schmidt_vector::<f64, _>(3, 3, 3, &mut rng);
        let run = refine_schmidt(&c, 3, 3, 3, &start, 500).unwrap();
        assert!((run.value - lmin).abs() < 1e-10);
    }

    #[test]
    fn start_with_excess_rank_is_truncated() {
        let c = l_gamma_choi(3, 1.0);
        let mut rng = SearchBudget::default().rng_for(5);
        let start = random::unit_vector::<f64, _>(9, &mut rng);
        let run = refine_schmidt(&c, 3, 3, 1, &start, 100).unwrap();
        assert!(schmidt_rank(&run.vector, 3, 3, 1e-8).unwrap() == 1);
        assert!((run.value - 0.0).abs() < 1e-9);
    }

    #[test]
    fn k_out_of_range() {
        let c = l_gamma_choi(2, 1.0);
        let x = ComplexVector::from_element(4, Complex::new(0.5, 0.0));
        assert!(matches!(refine_schmidt(&c, 2, 2, 0, &x, 10), Err(Error::KOutOfRange { .. })));
        assert!(matches!(refine_schmidt(&c, 2, 2, 3, &x, 10), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn multistart_is_deterministic_across_thread_counts() {
        let c = l_gamma_choi(3, 1.5);
        let budget = SearchBudget { restarts: 16, max_iters: 100, seed: 42, tol: 1e-8 };
        let a = minimize_schmidt(&c, 3, 3, 2, &budget, &[]).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| minimize_schmidt(&c, 3, 3, 2, &budget, &[]).unwrap());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.best_restart, b.best_restart);
        assert!((a.value - (1.5 - 2.0)).abs() < 1e-9);
    }

    #[test]
    fn sample_u_is_normalized_and_reproducible() {
        let budget = SearchBudget::default().with_seed(9);
        let mut r1 = budget.rng_for(0);
        let mut r2 = budget.rng_for(0);
        for _ in 0..100 {
            let u = sample_u::<f64, _>(2, 4, &mut r1);
            let v = sample_u::<f64, _>(2, 4, &mut r2);
            assert_eq!(u, v);
            assert!(((u.adjoint() * &u).trace().re - 1.0).abs() < 1e-14);
        }
    }

    /// CDF of Beta(2, 6), the law of the squared norm of one column of a
    /// normalized complex Gaussian 2x4 matrix.
    fn beta_2_6_cdf(x: f64) -> f64 {
        let y = 1.0 - x;
        1.0 - y.powi(7) - 7.0 * x * y.powi(6)
    }

    fn kolmogorov_p(d: f64, n: usize) -> f64 {
        let sn = (n as f64).sqrt();
        let lambda = (sn + 0.12 + 0.11 / sn) * d;
        let mut p = 0.0;
        for j in 1..200 {
            let j = j as f64;
            p += 2.0 * (-1f64).powf(j - 1.0) * (-2.0 * j * j * lambda * lambda).exp();
        }
        p.clamp(0.0, 1.0)
    }

    #[test]
    fn sample_u_column_norm_distribution() {
        let mut rng = SearchBudget::default().with_seed(2024).rng_for(0);
        let draws = 10_000;
        let mut xs: Vec<f64> = (0..draws)
            .map(|_| {
                let u = sample_u::<f64, _>(2, 4, &mut rng);
                u.column(0).norm_squared()
            })
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = beta_2_6_cdf(x);
            d = d.max((f - i as f64 / draws as f64).abs()).max(((i + 1) as f64 / draws as f64 - f).abs());
        }
        let p = kolmogorov_p(d, draws);
        assert!(p > 0.01, "KS statistic {d}, p = {p}");
    }

    #[test]
    fn ascent_is_monotone_and_finds_maximum() {
        // maximize -(x-1)^2 - (y+2)^2
        let f = |p: &[f64]| -(p[0] - 1.0).powi(2) - (p[1] + 2.0).powi(2);
        let run = ascend(f, |p| numeric_gradient(&f, p, 1e-6), |_| {}, vec![5.0, 5.0], 200);
        assert!((run.point[0] - 1.0).abs() < 1e-5 && (run.point[1] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn params_round_trip() {
        let mut rng = SearchBudget::default().rng_for(1);
        let u = sample_u::<f64, _>(2, 3, &mut rng);
        assert_eq!(params_to_u(2, 3, &u_to_params(&u)), u);
    }
}
