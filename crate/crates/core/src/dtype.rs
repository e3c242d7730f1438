//! D-type maps `A -> diag(sum_k a_kk d_k1, ..., sum_k a_kk d_kn) - A`:
//! the Moore–Penrose test on `k x n` matrices `U`, the positivity functional
//! `sum_j |u_j|^2 / f_j(u)`, the family `D = (n-t) I + t P_pi` with its
//! threshold `n / l`, doubly-stochastic classification and circulants.
//!
//! Throughout, `f_j(u) = sum_i d_ij |u_i|^2` uses column `j` of `D`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::falsify::{ascend, numeric_gradient, params_to_u, refine_schmidt, sample_u, u_to_params, SearchBudget};
use crate::kcriteria::{refutation_threshold, verify_witness, Status, Verdict, Witness};
use crate::linalg::{c, hermitian_eig, in_range, pinv_default, psd_check, ComplexMatrix, ComplexVector};
use crate::maps::{ampliate, bipartite_matrix, choi, flatten_rows, induced_schmidt_vector, DWeights, MapRep};
use crate::scalar::Real;

/// Relative tolerance of the range test inside [`pinv_condition`].
pub const RANGE_TOL: f64 = 1e-9;

/// Permutation of `{1, ..., n}` given by its 1-based image, with its cycles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PermutationImage", into = "PermutationImage")]
pub struct PermutationSpec {
    image: Vec<usize>,
    cycles: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct PermutationImage {
    image: Vec<usize>,
}

impl TryFrom<PermutationImage> for PermutationSpec {
    type Error = Error;
    fn try_from(p: PermutationImage) -> Result<Self> {
        Self::new(p.image)
    }
}

impl From<PermutationSpec> for PermutationImage {
    fn from(p: PermutationSpec) -> Self {
        Self { image: p.image }
    }
}

impl PermutationSpec {
    /// `image[i-1] = pi(i)`.
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &v in &image {
            if v == 0 || v > n {
                return Err(Error::InvalidPermutation(format!("value {v} outside 1..={n}")));
            }
            if std::mem::replace(&mut seen[v - 1], true) {
                return Err(Error::InvalidPermutation(format!("value {v} repeated")));
            }
        }
        let mut visited = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if visited[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !visited[i] {
                visited[i] = true;
                cycle.push(i + 1);
                i = image[i] - 1;
            }
            cycles.push(cycle);
        }
        Ok(Self { image, cycles })
    }

    pub fn identity(n: usize) -> Self {
        Self::new((1..=n).collect()).expect("identity is a permutation")
    }

    /// `i -> i + 1` cyclically on `{1, ..., n}`.
    pub fn cycle(n: usize) -> Self {
        Self::new((1..=n).map(|i| i % n + 1).collect()).expect("shift is a permutation")
    }

    /// Builds a permutation from disjoint 1-based cycles; unlisted points are fixed.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut image: Vec<usize> = (1..=n).collect();
        for cyc in cycles {
            for (idx, &a) in cyc.iter().enumerate() {
                if a == 0 || a > n {
                    return Err(Error::InvalidPermutation(format!("point {a} outside 1..={n}")));
                }
                image[a - 1] = cyc[(idx + 1) % cyc.len()];
            }
        }
        let p = Self::new(image)?;
        let listed: usize = cycles.iter().map(Vec::len).sum();
        let moved: usize = p.cycles.iter().filter(|c| c.len() > 1).map(Vec::len).sum::<usize>()
            + cycles.iter().filter(|c| c.len() == 1).count();
        if listed != moved {
            return Err(Error::InvalidPermutation("cycles are not disjoint".into()));
        }
        Ok(p)
    }

    /// Every involution of `{1, ..., n}`, including the identity.
    pub fn involutions(n: usize) -> Vec<Self> {
        fn go(rest: &[usize], image: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            let Some((&first, tail)) = rest.split_first() else {
                out.push(image.clone());
                return;
            };
            go(tail, image, out);
            for (pos, &other) in tail.iter().enumerate() {
                image[first] = other + 1;
                image[other] = first + 1;
                let remaining: Vec<usize> = tail.iter().enumerate().filter(|&(q, _)| q != pos).map(|(_, &v)| v).collect();
                go(&remaining, image, out);
                image[first] = first + 1;
                image[other] = other + 1;
            }
        }
        let mut out = Vec::new();
        let points: Vec<usize> = (0..n).collect();
        go(&points, &mut (1..=n).collect(), &mut out);
        out.into_iter().map(|im| Self::new(im).expect("pairing is a permutation")).collect()
    }

    pub fn n(&self) -> usize {
        self.image.len()
    }

    /// 1-based image.
    pub fn image(&self) -> &[usize] {
        &self.image
    }

    /// Zero-based application.
    pub fn apply0(&self, i: usize) -> usize {
        self.image[i] - 1
    }

    /// Disjoint cycles, 1-based, each starting at its smallest element and
    /// listed as `(c, pi(c), pi(pi(c)), ...)`.
    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    /// Length of the longest cycle.
    pub fn ell(&self) -> usize {
        self.cycles.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| v == i + 1)
    }

    pub fn is_involution(&self) -> bool {
        (0..self.n()).all(|i| self.apply0(self.apply0(i)) == i)
    }

    /// Zero-based fixed points.
    pub fn fixed_points(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.apply0(i) == i).collect()
    }
}

/// Value of the Moore–Penrose test for one `U`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PinvCondition<T> {
    /// `sum_j <u_j| (U diag(d_1j..d_nj) U^dagger)^+ |u_j>` for `U` scaled to unit Frobenius norm.
    pub value: T,
    /// Whether every column `u_j` lies in the range of its `D_j`.
    pub feasible: bool,
}

impl<T: Real> PinvCondition<T> {
    /// `value > 1 + tol` or infeasible: the map is not k-positive.
    pub fn violates(&self, tol: T) -> bool {
        !self.feasible || self.value > T::one() + tol
    }
}

/// Evaluates `sum_j <u_j|D_j^+|u_j>` with `D_j = U diag(d_1j, ..., d_nj) U^dagger`
/// and the columns `u_j` of `U`.  `U` is rescaled to `tr(U^dagger U) = 1`
/// (the value is scale invariant); a zero or non-finite `U` is rejected.
pub fn pinv_condition<T: Real>(d: &DWeights<T>, k: usize, u: &ComplexMatrix<T>) -> Result<PinvCondition<T>> {
    let n = d.n();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, max: n });
    }
    if u.rows() != k || u.cols() != n {
        return Err(Error::DimensionMismatch(format!("U must be {k}x{n}, got {}x{}", u.rows(), u.cols())));
    }
    let f = u.frobenius_norm();
    if !(f > T::zero()) || !f.is_finite_value() {
        return Err(Error::BadNormalization);
    }
    let u = u.scale(T::one() / f);
    let cols: Vec<ComplexVector<T>> = (0..n).map(|j| u.column(j)).collect();
    let mut value = T::zero();
    let mut feasible = true;
    for j in 0..n {
        let mut dj = ComplexMatrix::zeros(k, k);
        for (i, ui) in cols.iter().enumerate() {
            let w = d.get(i, j);
            if w > T::zero() {
                dj = dj + ComplexMatrix::outer(ui, ui).scale(w);
            }
        }
        let uj = &cols[j];
        value += pinv_default(&dj)?.quadratic_form(uj).re;
        if feasible && !in_range(&dj, uj, T::lit(RANGE_TOL))? {
            feasible = false;
        }
    }
    Ok(PinvCondition { value, feasible })
}

/// `sum_j |u_j|^2 / f_j(u)`; scale invariant in `u`.
pub fn ratio_sum<T: Real>(d: &DWeights<T>, u: &ComplexVector<T>) -> Result<T> {
    let n = d.n();
    if u.len() != n {
        return Err(Error::DimensionMismatch(format!("vector of length {} for n = {n}", u.len())));
    }
    if let Some(index) = (0..n).find(|&i| d.get(i, i) == T::zero()) {
        return Err(Error::ZeroDiagonal { index });
    }
    if let Some(index) = u.iter().position(|z| z.norm_sqr() == T::zero()) {
        return Err(Error::ZeroEntry { index });
    }
    let scale = u.iter().fold(T::zero(), |a, z| a.max(z.norm_sqr()));
    let r: Vec<T> = u.iter().map(|z| z.norm_sqr() / scale).collect();
    Ok(ratio_sum_from_moduli(d, &r))
}

/// The functional on squared moduli `r_i = |u_i|^2`.
fn ratio_sum_from_moduli<T: Real>(d: &DWeights<T>, r: &[T]) -> T {
    let n = r.len();
    (0..n).fold(T::zero(), |acc, j| {
        let fj = (0..n).fold(T::zero(), |s, i| s + d.get(i, j) * r[i]);
        acc + r[j] / fj
    })
}

/// Gradient in log-moduli `s_k = ln r_k`:
/// `r_k (1/f_k - sum_j r_j d_kj / f_j^2)`.
fn ratio_sum_log_gradient<T: Real>(d: &DWeights<T>, s: &[T]) -> Vec<T> {
    let n = s.len();
    let r: Vec<T> = s.iter().map(|&x| x.exp()).collect();
    let f: Vec<T> = (0..n).map(|j| (0..n).fold(T::zero(), |acc, i| acc + d.get(i, j) * r[i])).collect();
    (0..n)
        .map(|k| {
            let tail = (0..n).fold(T::zero(), |acc, j| acc + r[j] * d.get(k, j) / (f[j] * f[j]));
            r[k] * (T::one() / f[k] - tail)
        })
        .collect()
}

/// Shift so the largest log-modulus is 0 and clamp the rest away from underflow.
fn project_log<T: Real>(s: &mut Vec<T>) {
    let top = s.iter().copied().fold(T::lit(f64::NEG_INFINITY), |a, b| a.max(b));
    let floor = T::lit(-600.0);
    for x in s.iter_mut() {
        *x = (*x - top).max(floor);
    }
}

/// `D = (n - t) I + t P_pi` with `d_{pi(j), j} = t`, so that
/// `f_i(u) = (n - t)|u_i|^2 + t |u_{pi(i)}|^2`.
pub fn make_phi<T: Real>(n: usize, pi: &PermutationSpec, t: T) -> Result<DWeights<T>> {
    if !(t >= T::zero()) || !t.is_finite_value() {
        return Err(Error::NegativeT(t.to_f64_lossy()));
    }
    if pi.n() != n {
        return Err(Error::DimensionMismatch(format!("permutation of {} points for n = {n}", pi.n())));
    }
    let nt = T::from_usize(n).expect("dimension");
    let mut entries = vec![T::zero(); n * n];
    for j in 0..n {
        entries[j * n + j] += nt - t;
        entries[pi.apply0(j) * n + j] += t;
    }
    DWeights::new(n, entries)
}

/// `n / l`, the largest `t` for which `(n - t) I + t P_pi` gives a positive map.
pub fn phi_threshold<T: Real>(n: usize, pi: &PermutationSpec) -> Result<T> {
    if pi.n() != n {
        return Err(Error::DimensionMismatch(format!("permutation of {} points for n = {n}", pi.n())));
    }
    if pi.is_identity() {
        return Err(Error::IdentityPermutation);
    }
    Ok(T::from_usize(n).expect("dimension") / T::from_usize(pi.ell()).expect("cycle length"))
}

/// `D = (n - t) I + t S` with the circulant `S[i][j] = s[(j - i) mod n]`.
pub fn make_circulant<T: Real>(s: &[T], t: T, n: usize) -> Result<DWeights<T>> {
    if s.len() != n || n == 0 {
        return Err(Error::BadWeights(format!("expected {n} weights, got {}", s.len())));
    }
    if s.iter().any(|&x| !(x >= T::zero()) || !x.is_finite_value()) {
        return Err(Error::BadWeights("weights must be nonnegative and finite".into()));
    }
    let total = s.iter().fold(T::zero(), |a, &b| a + b);
    if (total - T::one()).abs() > T::lit(1e-12) {
        return Err(Error::BadWeights(format!("weights sum to {} instead of 1", total.to_f64_lossy())));
    }
    if !(t >= T::zero() && t <= T::one()) {
        return Err(Error::BadWeights(format!("t = {} outside [0, 1]", t.to_f64_lossy())));
    }
    let nt = T::from_usize(n).expect("dimension");
    DWeights::from_fn(n, |i, j| {
        let diag = if i == j { nt - t } else { T::zero() };
        diag + t * s[(j + n - i) % n]
    })
}

/// Classification of a D-type map whose weight matrix has all row and column sums `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DoublyStochasticReport<T: Real> {
    pub min_diagonal: T,
    /// `min_i d_ii >= n - 1`, which makes the map positive.
    pub positive_sufficient: bool,
    /// `D = n I`: completely positive, equivalently 2-positive.
    pub completely_positive: bool,
    /// Zero-based index `i` with `d_ii < n` used for the refuting `U`.
    pub refuting_index: Option<usize>,
    /// `[e_i; 1 - e_i] / sqrt(n)`, a `2 x n` matrix failing the Moore–Penrose test when `D != n I`.
    pub refuting_u: Option<ComplexMatrix<T>>,
}

pub fn classify_doubly_stochastic<T: Real>(d: &DWeights<T>) -> Result<DoublyStochasticReport<T>> {
    let n = d.n();
    let nt = T::from_usize(n).expect("dimension");
    let mut deviation = T::zero();
    for i in 0..n {
        let row = (0..n).fold(T::zero(), |a, j| a + d.get(i, j));
        let col = (0..n).fold(T::zero(), |a, j| a + d.get(j, i));
        deviation = deviation.max((row - nt).abs()).max((col - nt).abs());
    }
    if deviation > T::lit(1e-9) {
        return Err(Error::NotDoublyStochasticScaled { deviation: deviation.to_f64_lossy() });
    }
    let (idx, min_diagonal) =
        (0..n).map(|i| (i, d.get(i, i))).fold((0, nt), |best, cur| if cur.1 < best.1 { cur } else { best });
    let identity_dev = d.max_abs_diff(&DWeights::scaled_identity(n, nt)?);
    let completely_positive = identity_dev <= T::lit(1e-9);
    let positive_sufficient = min_diagonal >= nt - T::one() - T::lit(1e-12);
    let (refuting_index, refuting_u) = if completely_positive || n < 2 {
        (None, None)
    } else {
        (Some(idx), Some(two_row_u(n, idx)))
    };
    Ok(DoublyStochasticReport { min_diagonal, positive_sufficient, completely_positive, refuting_index, refuting_u })
}

/// `[e_i; 1 - e_i] / sqrt(n)`.
fn two_row_u<T: Real>(n: usize, i: usize) -> ComplexMatrix<T> {
    let w = T::one() / T::from_usize(n).expect("dimension").sqrt();
    ComplexMatrix::from_fn(2, n, |r, j| {
        let on = (r == 0) == (j == i);
        c(if on { w } else { T::zero() })
    })
}

/// Starting moduli along chains of the dominant off-diagonal entry in each
/// column: `|u_{c_j}|^2 = eps^(j+1)` for `c_{j+1} = sigma(c_j)`, all other
/// entries 1.  For `D = (n-t) I + t P_pi`, `sigma = pi` and these are the
/// vectors that break positivity above the threshold.
fn chain_seeds<T: Real>(d: &DWeights<T>) -> Vec<Vec<T>> {
    let n = d.n();
    let sigma: Vec<Option<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&r| r != i && d.get(r, i) > T::zero())
                .fold(None, |best: Option<usize>, r| match best {
                    Some(b) if d.get(b, i) >= d.get(r, i) => Some(b),
                    _ => Some(r),
                })
        })
        .collect();
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        let mut chain = vec![start];
        while let Some(next) = sigma[*chain.last().expect("nonempty")] {
            if chain.contains(&next) {
                break;
            }
            chain.push(next);
        }
        if chain.len() > 1 {
            let mut key = chain.clone();
            key.sort_unstable();
            if !chains.iter().any(|c| {
                let mut k2 = c.clone();
                k2.sort_unstable();
                k2 == key
            }) {
                chains.push(chain);
            }
        }
    }
    let grid = [0.9, 0.5, 0.3, 0.1, 0.05, 0.02, 1e-2, 5e-3, 1e-3, 1e-4, 1e-5, 1e-6];
    let mut seeds = Vec::new();
    for chain in &chains {
        for &eps in &grid {
            let le = T::lit(f64::ln(eps));
            let mut s = vec![T::zero(); n];
            for (j, &cj) in chain.iter().enumerate() {
                s[cj] = le * T::from_usize(j + 1).expect("index");
            }
            seeds.push(s);
        }
    }
    seeds
}

/// Best value of `sum_j |u_j|^2 / f_j(u)` found by multistart ascent in the
/// log-moduli, from the structured chain seeds followed by random Gaussian
/// vectors, `budget.restarts` starts in total.  Returns the value and the
/// maximizing vector (real, nonnegative entries).
pub fn maximize_ratio_sum<T: Real>(d: &DWeights<T>, budget: &SearchBudget) -> Result<(T, ComplexVector<T>)> {
    budget.validate()?;
    let n = d.n();
    if let Some(index) = (0..n).find(|&i| d.get(i, i) == T::zero()) {
        return Err(Error::ZeroDiagonal { index });
    }
    let seeds = chain_seeds(d);
    let total = budget.restarts.max(seeds.len());
    let runs: Vec<(usize, T, Vec<T>)> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut s0 = match seeds.get(idx) {
                Some(s) => s.clone(),
                None => {
                    let u = sample_u::<T, _>(1, n, &mut budget.rng_for(idx));
                    (0..n).map(|j| u[(0, j)].norm_sqr().max(T::lit(1e-300)).ln()).collect()
                }
            };
            project_log(&mut s0);
            let f = |s: &[T]| ratio_sum_from_moduli(d, &s.iter().map(|&x| x.exp()).collect::<Vec<_>>());
            let run = ascend(f, |s| ratio_sum_log_gradient(d, s), project_log, s0, budget.max_iters);
            (idx, run.value, run.point)
        })
        .collect();
    let (_, value, s) = runs
        .into_iter()
        .fold(None, |best: Option<(usize, T, Vec<T>)>, cur| match best {
            Some(b) if b.1 > cur.1 || (b.1 == cur.1 && b.0 < cur.0) => Some(b),
            _ => Some(cur),
        })
        .expect("at least one start");
    let u = ComplexVector::from_iterator(n, s.iter().map(|&x| c((x / T::lit(2.0)).exp())));
    let nu = u.norm();
    Ok((value, u.unscale(nu)))
}

/// Multistart ascent of the Moore–Penrose value over `k x n` matrices `U`
/// (real and imaginary parts, central-difference gradient).
fn maximize_pinv_condition<T: Real>(d: &DWeights<T>, k: usize, budget: &SearchBudget) -> Result<(PinvCondition<T>, ComplexMatrix<T>)> {
    let n = d.n();
    let mut seeds: Vec<ComplexMatrix<T>> = Vec::new();
    if n >= 2 {
        for i in 0..n {
            seeds.push(pad_rows(&two_row_u(n, i), k));
        }
    }
    for s in chain_seeds(d) {
        let row = ComplexMatrix::from_fn(1, n, |_, j| c((s[j] / T::lit(2.0)).exp()));
        seeds.push(pad_rows(&row, k));
    }
    let total = budget.restarts.max(seeds.len());
    let value_of = |u: &ComplexMatrix<T>| -> T {
        match pinv_condition(d, k, u) {
            Ok(v) if v.feasible => v.value,
            Ok(_) => T::lit(f64::INFINITY),
            Err(_) => T::lit(f64::NEG_INFINITY),
        }
    };
    let runs: Vec<(usize, T, ComplexMatrix<T>)> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let u0 = match seeds.get(idx) {
                Some(u) => u.clone(),
                None => sample_u(k, n, &mut budget.rng_for(idx)),
            };
            let f = |p: &[T]| value_of(&params_to_u(k, n, p));
            let project = |p: &mut Vec<T>| {
                let norm = p.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
                if norm > T::zero() {
                    p.iter_mut().for_each(|x| *x /= norm);
                }
            };
            let run = ascend(f, |p| numeric_gradient(&f, p, T::lit(1e-6)), project, u_to_params(&u0), budget.max_iters);
            (idx, run.value, params_to_u(k, n, &run.point))
        })
        .collect();
    let (_, _, u) = runs
        .into_iter()
        .fold(None, |best: Option<(usize, T, ComplexMatrix<T>)>, cur| match best {
            Some(b) if b.1 > cur.1 || (b.1 == cur.1 && b.0 < cur.0) => Some(b),
            _ => Some(cur),
        })
        .expect("at least one start");
    Ok((pinv_condition(d, k, &u)?, u))
}

fn pad_rows<T: Real>(u: &ComplexMatrix<T>, k: usize) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(k, u.cols(), |r, j| if r < u.rows() { u[(r, j)] } else { c(T::zero()) })
}

/// `-lambda_min(diag(f(u)) - |u><u|)` for `|u_i|^2 = exp(s_i)` normalized,
/// i.e. how far `L(|u><u|)` is from positive.
fn product_depth<T: Real>(d: &DWeights<T>, s: &[T]) -> T {
    let n = d.n();
    let r: Vec<T> = s.iter().map(|&x| x.exp()).collect();
    let total = r.iter().fold(T::zero(), |a, &b| a + b);
    if !(total > T::zero()) || !total.is_finite_value() {
        return T::lit(f64::NEG_INFINITY);
    }
    let r: Vec<T> = r.into_iter().map(|x| x / total).collect();
    let m = ComplexMatrix::from_fn(n, n, |i, j| {
        let mut v = -(r[i] * r[j]).sqrt();
        if i == j {
            v += (0..n).fold(T::zero(), |a, q| a + d.get(q, i) * r[q]);
        }
        c(v)
    });
    match hermitian_eig(&m) {
        Ok(e) => -e.min_eigenvalue(),
        Err(_) => T::lit(f64::NEG_INFINITY),
    }
}

/// Single-row `U` maximizing [`product_depth`], by ascent in the log-moduli
/// from `start`, the chain seeds and random starts.  Near the positivity
/// boundary the ratio-sum maximizer sits at extreme moduli where
/// `L(|u><u|)` is only barely indefinite; this finds a deeper violation.
fn deepest_product_violation<T: Real>(d: &DWeights<T>, start: &ComplexMatrix<T>, budget: &SearchBudget) -> ComplexMatrix<T> {
    let n = d.n();
    let floor = T::lit(1e-300);
    let mut seeds = vec![(0..n).map(|j| start[(0, j)].norm_sqr().max(floor).ln()).collect::<Vec<T>>()];
    seeds.extend(chain_seeds(d));
    let total = seeds.len() + budget.restarts.min(64);
    let best = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut s0 = match seeds.get(idx) {
                Some(s) => s.clone(),
                None => {
                    let u = sample_u::<T, _>(1, n, &mut budget.rng_for(idx));
                    (0..n).map(|j| u[(0, j)].norm_sqr().max(floor).ln()).collect()
                }
            };
            project_log(&mut s0);
            let f = |s: &[T]| product_depth(d, s);
            let run = ascend(f, |s| numeric_gradient(&f, s, T::lit(1e-6)), project_log, s0, budget.max_iters);
            (idx, run.value, run.point)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None, |best: Option<(usize, T, Vec<T>)>, cur| match best {
            Some(b) if b.1 > cur.1 || (b.1 == cur.1 && b.0 < cur.0) => Some(b),
            _ => Some(cur),
        })
        .expect("at least one start");
    let row: Vec<T> = best.2.iter().map(|&x| (x / T::lit(2.0)).exp()).collect();
    let norm = row.iter().fold(T::zero(), |a, &b| a + b * b).sqrt();
    ComplexMatrix::from_fn(1, n, |_, j| c(row[j] / norm))
}

/// Test vector `v` (the bottom eigenvector of `(I_k (x) L)(|u><u|)`) and the
/// induced Schmidt-rank-`k` vector `x` with `<x|C(L)|x> = <v|(I_k (x) L)(|u><u|)|v>`.
pub fn induced_vector<T: Real>(map: &MapRep<T>, u: &ComplexMatrix<T>) -> Result<ComplexVector<T>> {
    let (k, n) = (u.rows(), u.cols());
    let f = u.frobenius_norm();
    if !(f > T::zero()) {
        return Err(Error::BadNormalization);
    }
    let flat = flatten_rows(&u.scale(T::one() / f));
    let amp = ampliate(map, k, &ComplexMatrix::outer(&flat, &flat))?;
    let v = hermitian_eig(&amp)?.eigenvector(0);
    induced_schmidt_vector(&flat, &v, k, n, map.output_dim())
}

/// `k x n` matrix `U` whose rows `a_q` satisfy `x = sum_q conj(a_q) (x) b_q`
/// for the dominant Schmidt pairs of `x` in `C^n (x) C^n`.
fn u_from_schmidt<T: Real>(x: &ComplexVector<T>, n: usize, k: usize) -> Result<ComplexMatrix<T>> {
    let xm = bipartite_matrix(x, n, n);
    let eig = hermitian_eig(&(&xm * &xm.adjoint()))?;
    Ok(ComplexMatrix::from_fn(k, n, |q, i| eig.eigenvectors[(i, n - 1 - q)].conj()))
}

fn dtype_margin<T: Real>(v: &PinvCondition<T>, witness_value: T) -> T {
    if v.feasible {
        T::one() - v.value
    } else {
        witness_value
    }
}

/// Searches for `U` with Moore–Penrose value above `1 + budget.tol` (or
/// failing the range condition), which proves the D-type map is not
/// k-positive.  A zero diagonal entry refutes at once.
///
/// A violating `U` is reported only after `(I_k (x) L)(|u><u|)` is confirmed
/// to have an eigenvalue below `-budget.tol ||C(L)||`; when the raw maximizer
/// is too close to the boundary for that, it is first pushed deeper by
/// Schmidt descent from its induced vector.  `margin` is `1 - value`.
pub fn dtype_falsify<T: Real>(d: &DWeights<T>, k: usize, budget: &SearchBudget) -> Result<Verdict<T>> {
    budget.validate()?;
    let n = d.n();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, max: n });
    }
    let map = MapRep::dtype(d.clone());
    let thr = refutation_threshold(&map, T::lit(budget.tol))?;
    let method = "dtype-falsify";
    if let Some(i) = (0..n).find(|&i| d.get(i, i) == T::zero()) {
        let u = ComplexMatrix::unit(1, n, 0, i);
        let value = verify_witness(&map, &Witness::UMatrix(u.clone()), k)?;
        return Ok(Verdict::new(Status::RefutedKPositive, k, value, "zero-diagonal").with_witness(Witness::UMatrix(u)));
    }
    let (best, u) = if k == 1 {
        let (value, vec) = maximize_ratio_sum(d, budget)?;
        let u = ComplexMatrix::from_fn(1, n, |_, j| vec[j]);
        (PinvCondition { value, feasible: true }, u)
    } else {
        maximize_pinv_condition(d, k, budget)?
    };
    let tol = T::lit(budget.tol);
    if !best.violates(tol) {
        return Ok(Verdict::new(Status::Inconclusive, k, T::one() - best.value, method));
    }
    let direct = verify_witness(&map, &Witness::UMatrix(u.clone()), k)?;
    if direct < -thr {
        return Ok(Verdict::new(Status::RefutedKPositive, k, dtype_margin(&best, direct), method).with_witness(Witness::UMatrix(u)));
    }
    if k == 1 {
        let deep = deepest_product_violation(d, &u, budget);
        let check = verify_witness(&map, &Witness::UMatrix(deep.clone()), k)?;
        let value = pinv_condition(d, k, &deep)?;
        if check < -thr && value.violates(tol) {
            return Ok(Verdict::new(Status::RefutedKPositive, k, dtype_margin(&value, check), method)
                .with_witness(Witness::UMatrix(deep)));
        }
    }
    let x = induced_vector(&map, &u)?;
    let run = refine_schmidt(&choi(&map), n, n, k, &x, budget.max_iters)?;
    let polished = u_from_schmidt(&run.vector, n, k)?;
    let check = verify_witness(&map, &Witness::UMatrix(polished.clone()), k)?;
    let value = pinv_condition(d, k, &polished)?;
    if check < -thr && value.violates(tol) {
        return Ok(Verdict::new(Status::RefutedKPositive, k, dtype_margin(&value, check), method)
            .with_witness(Witness::UMatrix(polished)));
    }
    Ok(Verdict::new(Status::Inconclusive, k, T::one() - best.value, method))
}

/// `lambda_min` of the Choi matrix of a D-type map.
pub fn choi_min_eigenvalue<T: Real>(d: &DWeights<T>) -> Result<T> {
    Ok(psd_check(&choi(&MapRep::dtype(d.clone())), T::lit(crate::linalg::PSD_TOL))?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::falsify::SearchBudget;
    use crate::kcriteria::schmidt_min_seeded;
    use crate::random;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn budget(restarts: usize) -> SearchBudget {
        SearchBudget { restarts, max_iters: 500, seed: 3, tol: 1e-8 }
    }

    #[test]
    fn permutation_cycles() {
        let p = PermutationSpec::new(vec![2, 3, 1, 5, 4, 6]).unwrap();
        assert_eq!(p.cycles(), &[vec![1, 2, 3], vec![4, 5], vec![6]]);
        assert_eq!(p.ell(), 3);
        assert!(!p.is_involution());
        assert!(PermutationSpec::new(vec![2, 1, 4, 3]).unwrap().is_involution());
        assert!(PermutationSpec::new(vec![1, 1]).is_err());
        assert!(PermutationSpec::new(vec![0, 1]).is_err());
        let q = PermutationSpec::from_cycles(6, &[vec![1, 2, 3], vec![4, 5]]).unwrap();
        assert_eq!(q, p);
        assert!(PermutationSpec::from_cycles(3, &[vec![1, 2], vec![2, 3]]).is_err());
    }

    #[test]
    fn permutation_json_round_trip() {
        let p = PermutationSpec::new(vec![3, 4, 1, 2]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"image":[3,4,1,2]}"#);
        let back: PermutationSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<PermutationSpec>(r#"{"image":[1,1]}"#).is_err());
    }

    #[test]
    fn make_phi_examples() {
        let cyc = PermutationSpec::cycle(3);
        assert_eq!(make_phi(3, &cyc, 0.0).unwrap(), DWeights::<f64>::scaled_identity(3, 3.0).unwrap());
        let d = make_phi(3, &cyc, 1.0).unwrap();
        for i in 0..3 {
            assert_eq!(d.get(i, i), 2.0);
            assert_eq!(d.get(cyc.apply0(i), i), 1.0);
        }
        let inv = PermutationSpec::new(vec![2, 1, 4, 3]).unwrap();
        let d = make_phi(4, &inv, 2.0).unwrap();
        assert_eq!(d.rows(), vec![vec![2.0, 2.0, 0.0, 0.0], vec![2.0, 2.0, 0.0, 0.0], vec![0.0, 0.0, 2.0, 2.0], vec![0.0, 0.0, 2.0, 2.0]]);
        assert!(matches!(make_phi(3, &cyc, -1.0), Err(Error::NegativeT(_))));
    }

    #[test]
    fn make_phi_matches_f_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pi = PermutationSpec::new(vec![3, 1, 4, 2]).unwrap();
        let t = 1.3;
        let d = make_phi(4, &pi, t).unwrap();
        let r: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..2.0)).collect();
        for i in 0..4 {
            let f = (0..4).map(|k| d.get(k, i) * r[k]).sum::<f64>();
            let expected = (4.0 - t) * r[i] + t * r[pi.apply0(i)];
            assert!((f - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(phi_threshold::<f64>(3, &PermutationSpec::cycle(3)).unwrap(), 1.0);
        assert_eq!(phi_threshold::<f64>(4, &PermutationSpec::new(vec![2, 1, 4, 3]).unwrap()).unwrap(), 2.0);
        let p = PermutationSpec::from_cycles(6, &[vec![1, 2, 3], vec![4, 5]]).unwrap();
        assert_eq!(phi_threshold::<f64>(6, &p).unwrap(), 2.0);
        assert!(matches!(phi_threshold::<f64>(3, &PermutationSpec::identity(3)), Err(Error::IdentityPermutation)));
    }

    #[test]
    fn ratio_sum_examples() {
        let d = DWeights::<f64>::from_rows(&[vec![1.35, 1.0, 0.65], vec![0.65, 1.35, 1.0], vec![1.0, 0.65, 1.35]]).unwrap();
        let ones = ComplexVector::from_element(3, c(1.0));
        assert!((ratio_sum(&d, &ones).unwrap() - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ni = DWeights::<f64>::scaled_identity(4, 4.0).unwrap();
        let u = random::unit_vector::<f64, _>(4, &mut rng);
        assert!((ratio_sum(&ni, &u).unwrap() - 1.0).abs() < 1e-14);

        let mut z = ones.clone();
        z[1] = c(0.0);
        assert!(matches!(ratio_sum(&d, &z), Err(Error::ZeroEntry { index: 1 })));
        let zd = DWeights::<f64>::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(ratio_sum(&zd, &ComplexVector::from_element(2, c(1.0))), Err(Error::ZeroDiagonal { index: 0 })));
    }

    #[test]
    fn ratio_sum_witness_above_threshold() {
        // the chain vector |u_{c_j}|^2 = eps^(j+1) breaks positivity for t > n / l
        let pi = PermutationSpec::cycle(4);
        let t: f64 = 1.2;
        let d = make_phi(4, &pi, t).unwrap();
        let eps: f64 = 0.5 * (1.0 - 4.0 / (4.0 * t));
        let mut u = ComplexVector::from_element(4, c(1.0));
        let cyc = &pi.cycles()[0];
        for (j, &cj) in cyc.iter().enumerate() {
            u[cj - 1] = c(eps.powf((j + 1) as f64 / 2.0));
        }
        assert!(ratio_sum(&d, &u).unwrap() > 1.0);
    }

    #[test]
    fn ratio_sum_gradient_matches_finite_differences() {
        let d = DWeights::<f64>::from_rows(&[vec![1.35, 1.0, 0.65], vec![0.65, 1.35, 1.0], vec![1.0, 0.65, 1.35]]).unwrap();
        let s = vec![0.0, -0.7, 0.4];
        let f = |s: &[f64]| ratio_sum_from_moduli(&d, &s.iter().map(|x| x.exp()).collect::<Vec<_>>());
        let g = ratio_sum_log_gradient(&d, &s);
        let fd = numeric_gradient(&f, &s, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn pinv_condition_reduces_to_ratio_sum_at_k1() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let d = DWeights::from_fn(4, |i, j| if i == j { rng.gen_range(0.5..3.0) } else { rng.gen_range(0.0..2.0) }).unwrap();
            let u = sample_u::<f64, _>(1, 4, &mut rng);
            let v = pinv_condition(&d, 1, &u).unwrap();
            let w = ratio_sum(&d, &u.row_major().into_iter().collect::<Vec<_>>().into()).unwrap();
            assert!(v.feasible);
            assert!((v.value - w).abs() < 1e-12);
        }
    }

    #[test]
    fn pinv_condition_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ni = DWeights::<f64>::scaled_identity(3, 3.0).unwrap();
        for _ in 0..100 {
            let k = rng.gen_range(1..=3);
            let u = sample_u::<f64, _>(k, 3, &mut rng);
            let v = pinv_condition(&ni, k, &u).unwrap();
            assert!(v.feasible && v.value <= 1.0 + 1e-9);
        }
        let zd = DWeights::<f64>::from_rows(&[vec![0.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let u = ComplexMatrix::from_real_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(!pinv_condition(&zd, 1, &u).unwrap().feasible);
        assert!(matches!(pinv_condition(&zd, 1, &ComplexMatrix::zeros(1, 2)), Err(Error::BadNormalization)));
        assert!(matches!(pinv_condition(&zd, 3, &u), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn pinv_condition_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = make_phi(3, &PermutationSpec::cycle(3), 1.0).unwrap();
        let u = sample_u::<f64, _>(2, 3, &mut rng);
        let a = pinv_condition(&d, 2, &u).unwrap();
        let b = pinv_condition(&d, 2, &u.scale(7.5)).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
    }

    #[test]
    fn falsify_examples() {
        let inv = PermutationSpec::new(vec![2, 1, 4, 3]).unwrap();
        let d = make_phi(4, &inv, 2.05).unwrap();
        let v = dtype_falsify(&d, 1, &budget(64)).unwrap();
        assert_eq!(v.status, Status::RefutedKPositive);
        check_consistency(&d, &v);

        for pi in [PermutationSpec::cycle(3), inv.clone()] {
            let d = make_phi(pi.n(), &pi, 1.0).unwrap();
            let v = dtype_falsify(&d, 1, &budget(64)).unwrap();
            assert_eq!(v.status, Status::Inconclusive);
        }

        let d = make_phi(3, &PermutationSpec::cycle(3), 1.0).unwrap();
        let v = dtype_falsify(&d, 2, &budget(8)).unwrap();
        assert_eq!(v.status, Status::RefutedKPositive);
        check_consistency(&d, &v);
    }

    fn check_consistency(d: &DWeights<f64>, v: &Verdict<f64>) {
        let map = MapRep::dtype(d.clone());
        let u = match v.witness.as_ref().unwrap() {
            Witness::UMatrix(u) => u.clone(),
            _ => panic!("expected a U witness"),
        };
        assert!(pinv_condition(d, u.rows(), &u).unwrap().violates(1e-9));
        let x = induced_vector(&map, &u).unwrap();
        let thr = refutation_threshold(&map, 1e-8).unwrap();
        let s = schmidt_min_seeded(&map, v.k, &SearchBudget { restarts: 1, max_iters: 1, seed: 0, tol: 1e-8 }, &[x]).unwrap();
        assert!(s.value < -thr);
    }

    #[test]
    fn zero_diagonal_refutes_immediately() {
        let d = DWeights::<f64>::from_rows(&[vec![0.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let v = dtype_falsify(&d, 1, &budget(1)).unwrap();
        assert_eq!(v.status, Status::RefutedKPositive);
        assert!((v.margin + 1.0).abs() < 1e-12);
    }

    #[test]
    fn doubly_stochastic_examples() {
        let r = classify_doubly_stochastic(&DWeights::<f64>::scaled_identity(3, 3.0).unwrap()).unwrap();
        assert!(r.completely_positive && r.positive_sufficient && r.refuting_u.is_none());

        let d = make_phi(4, &PermutationSpec::cycle(4), 1.0).unwrap();
        let r = classify_doubly_stochastic(&d).unwrap();
        assert!(r.positive_sufficient && !r.completely_positive);
        let u = r.refuting_u.unwrap();
        let v = pinv_condition(&d, 2, &u).unwrap();
        assert!(v.violates(1e-9));

        let e65 = DWeights::<f64>::from_rows(&[vec![1.35, 1.0, 0.65], vec![0.65, 1.35, 1.0], vec![1.0, 0.65, 1.35]]).unwrap();
        let r = classify_doubly_stochastic(&e65).unwrap();
        assert!(!r.positive_sufficient);
        assert!((r.min_diagonal - 1.35).abs() < 1e-15);

        let bad = DWeights::<f64>::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert!(matches!(classify_doubly_stochastic(&bad), Err(Error::NotDoublyStochasticScaled { .. })));
    }

    #[test]
    fn doubly_stochastic_value_matches_closed_form() {
        // 1/d_ii + sum_{j != i} 1/(n - d_ij) for the two-row U
        let d = DWeights::<f64>::from_rows(&[vec![1.35, 1.0, 0.65], vec![0.65, 1.35, 1.0], vec![1.0, 0.65, 1.35]]).unwrap();
        let r = classify_doubly_stochastic(&d).unwrap();
        let i = r.refuting_index.unwrap();
        let v = pinv_condition(&d, 2, &r.refuting_u.unwrap()).unwrap();
        let expected = 1.0 / d.get(i, i) + (0..3).filter(|&j| j != i).map(|j| 1.0 / (3.0 - d.get(i, j))).sum::<f64>();
        assert!((v.value - expected).abs() < 1e-12);
    }

    #[test]
    fn circulant_examples() {
        assert_eq!(make_circulant::<f64>(&[1.0, 0.0, 0.0], 0.7, 3).unwrap(), DWeights::<f64>::scaled_identity(3, 3.0).unwrap());
        let d = make_circulant::<f64>(&[0.0, 1.0, 0.0], 1.0, 3).unwrap();
        let r = classify_doubly_stochastic(&d).unwrap();
        assert!(r.positive_sufficient && !r.completely_positive);
        assert!((d.get(0, 0) - 2.0).abs() < 1e-15 && (d.get(0, 1) - 1.0).abs() < 1e-15);
        let uniform = make_circulant::<f64>(&[0.25; 4], 1.0, 4).unwrap();
        assert_eq!(dtype_falsify(&uniform, 1, &budget(32)).unwrap().status, Status::Inconclusive);
        assert!(make_circulant::<f64>(&[0.5, 0.6], 1.0, 2).is_err());
        assert!(make_circulant::<f64>(&[0.5, 0.5], 1.5, 2).is_err());
    }

    #[test]
    fn n_identity_choi_is_psd() {
        assert!(choi_min_eigenvalue(&DWeights::<f64>::scaled_identity(4, 4.0).unwrap()).unwrap() >= -1e-10);
    }
}
