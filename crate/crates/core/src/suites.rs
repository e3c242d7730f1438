//! Named reproduction scenarios with pinned seeds.  Each suite runs a fixed
//! grid of cases and reports one pass/fail line per check.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::check::{run_check, CheckOptions, Criterion, MapInput};
use crate::decomp::{involution_map, involution_split, verify_split_default};
use crate::dtype::{
    choi_min_eigenvalue, classify_doubly_stochastic, dtype_falsify, make_phi, maximize_ratio_sum, phi_threshold,
    pinv_condition, ratio_sum, PermutationSpec,
};
use crate::error::{Error, Result};
use crate::falsify::SearchBudget;
use crate::kcriteria::{
    choi_compression_check, orthobasis_norm_sufficient, orthobasis_sufficient, schmidt_min, verify_witness, xi_k,
    xi_tilde_k, OrthoBasisFamily, Status, Verdict, Witness,
};
use crate::linalg::{hermitian_eig, psd_check, ComplexMatrix, PSD_TOL};
use crate::maps::{choi, DWeights, MapRep};
use crate::random::{haar_unitary, hermitian};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    /// `L_gamma = gamma tr(A) I - A` is k-positive exactly when `gamma >= k`.
    LGammaThreshold,
    /// `(n - t) I + t P_pi` weights: positive exactly for `t <= n / l`.
    PermutationThreshold,
    /// The 8x8 family with two negative elements is 2-positive.
    EightDimensional,
    /// A 3x3 circulant D whose map is positive although `min d_ii < n - 1`.
    CirculantUnrefuted,
    /// Row/column sums `n`, `D != n I`: never 2-positive.
    DoublyStochastic,
    /// `D = (n - 1) I + P_pi` with `pi` an involution is decomposable.
    InvolutionSplit,
    /// `sum F F^dagger = n I_m`, `sum F^dagger F = m I_n` and the rank-one projections.
    OrthonormalIdentities,
    /// Full-level compression and Schmidt search agree with the Choi spectrum.
    ChoiOracle,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::LGammaThreshold,
        Suite::PermutationThreshold,
        Suite::EightDimensional,
        Suite::CirculantUnrefuted,
        Suite::DoublyStochastic,
        Suite::InvolutionSplit,
        Suite::OrthonormalIdentities,
        Suite::ChoiOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::LGammaThreshold => "l-gamma-threshold",
            Self::PermutationThreshold => "permutation-threshold",
            Self::EightDimensional => "eight-dimensional",
            Self::CirculantUnrefuted => "circulant-unrefuted",
            Self::DoublyStochastic => "doubly-stochastic",
            Self::InvolutionSplit => "involution-split",
            Self::OrthonormalIdentities => "orthonormal-identities",
            Self::ChoiOracle => "choi-oracle",
        }
    }

    /// Seed used for every random draw and search in the suite.
    pub fn seed(self) -> u64 {
        0
    }

    pub fn run(self) -> Result<SuiteReport> {
        let mut r = SuiteReport { suite: self, seed: self.seed(), checks: Vec::new() };
        match self {
            Self::LGammaThreshold => l_gamma_threshold(&mut r)?,
            Self::PermutationThreshold => permutation_threshold(&mut r)?,
            Self::EightDimensional => eight_dimensional(&mut r)?,
            Self::CirculantUnrefuted => circulant_unrefuted(&mut r)?,
            Self::DoublyStochastic => doubly_stochastic(&mut r)?,
            Self::InvolutionSplit => involution_split_suite(&mut r)?,
            Self::OrthonormalIdentities => orthonormal_identities(&mut r)?,
            Self::ChoiOracle => choi_oracle(&mut r)?,
        }
        Ok(r)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct SuiteCheck {
    pub label: String,
    pub passed: bool,
    pub detail: String,
    pub verdict: Option<Verdict<f64>>,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<SuiteCheck>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, label: impl Into<String>, passed: bool, detail: impl Into<String>, verdict: Option<Verdict<f64>>) {
        self.checks.push(SuiteCheck { label: label.into(), passed, detail: detail.into(), verdict });
    }
}

fn budget(restarts: usize, seed: u64) -> SearchBudget {
    SearchBudget::default().with_restarts(restarts).with_seed(seed)
}

fn l_gamma_threshold(r: &mut SuiteReport) -> Result<()> {
    let b = budget(200, r.seed);
    let opts = CheckOptions { budget: b, exhaustive: true };
    for n in 2..=4 {
        for k in 1..=n {
            let kf = k as f64;
            for gamma in [kf - 0.01, kf] {
                let found = schmidt_min(&MapRep::l_gamma(n, gamma)?, k, &b)?;
                let gap = (found.value - (gamma - kf)).abs();
                r.push(
                    format!("schmidt_min n={n} k={k} gamma={gamma}"),
                    gap <= 1e-6,
                    format!("{:.12} (expected {:.12})", found.value, gamma - kf),
                    None,
                );
            }
            let at = MapInput::new(MapRep::l_gamma(n, kf)?);
            let out = run_check(&at, &[Criterion::ChoiPsd, Criterion::OrthoBasis], k, &opts)?;
            let best = out.runs.iter().find(|x| x.verdict.status.is_certified()).map(|x| x.verdict.clone());
            r.push(format!("certify L_{k} n={n} k={k}"), out.status == Status::CertifiedKPositive, format!("{:?}", out.status), best);
            let below = MapRep::l_gamma(n, kf - 0.01)?;
            let v = run_check(&MapInput::new(below.clone()), &[Criterion::SchmidtMin], k, &opts)?;
            let verdict = v.runs[0].verdict.clone();
            let checked = match &verdict.witness {
                Some(w) => verify_witness(&below, w, k)? < 0.0,
                None => false,
            };
            r.push(
                format!("refute L_{{{k}-0.01}} n={n} k={k}"),
                verdict.status == Status::RefutedKPositive && checked,
                format!("{:?}, witness value {:.3e}", verdict.status, verdict.margin),
                Some(verdict),
            );
        }
    }
    Ok(())
}

fn permutation_threshold(r: &mut SuiteReport) -> Result<()> {
    let cases = [
        (3, PermutationSpec::cycle(3)),
        (4, PermutationSpec::from_cycles(4, &[vec![1, 2], vec![3, 4]])?),
        (5, PermutationSpec::cycle(5)),
        (6, PermutationSpec::from_cycles(6, &[vec![1, 2, 3], vec![4, 5, 6]])?),
    ];
    let b = budget(2000, r.seed);
    for (n, pi) in &cases {
        let t0: f64 = phi_threshold(*n, pi)?;
        let above = make_phi(*n, pi, t0 + 0.05)?;
        let v = dtype_falsify(&above, 1, &b)?;
        let value = match &v.witness {
            Some(Witness::UMatrix(u)) => ratio_sum(&above, &u.as_na().row(0).transpose())?,
            _ => f64::NAN,
        };
        r.push(
            format!("refute n={n} pi={:?} t={}", pi.image(), t0 + 0.05),
            v.status == Status::RefutedKPositive && value > 1.0 + 1e-9,
            format!("{:?}, witness ratio sum {value:.9}", v.status),
            Some(v),
        );
        let v = dtype_falsify(&make_phi(*n, pi, t0)?, 1, &b)?;
        r.push(
            format!("unrefuted n={n} pi={:?} t={t0}", pi.image()),
            v.status == Status::Inconclusive,
            format!("{:?}, best ratio sum {:.12}", v.status, 1.0 - v.margin),
            Some(v),
        );
    }
    Ok(())
}

fn eight_dimensional(r: &mut SuiteReport) -> Result<()> {
    let family = OrthoBasisFamily::<f64>::eight_dimensional_example();
    let gamma = vec![1.0; 64];
    let xi = xi_k(&family, 2)?;
    r.push("xi_2", (xi - 0.5).abs() <= 1e-10, format!("{xi:.12}"), None);
    let xt = xi_tilde_k(&family, 2)?;
    r.push("norm-based xi_2", xt.abs() <= 1e-10, format!("{xt:.3e}"), None);
    let v = orthobasis_norm_sufficient(&family, &gamma, 2)?;
    r.push("norm-based criterion", v.status == Status::NotApplicable, format!("{:?}", v.status), Some(v));
    let v = orthobasis_sufficient(&family, &gamma, 2)?;
    r.push("orthonormal-basis criterion", v.status == Status::CertifiedKPositive, format!("{:?}, margin {:.3e}", v.status, v.margin), Some(v));
    Ok(())
}

fn circulant_unrefuted(r: &mut SuiteReport) -> Result<()> {
    let d = DWeights::<f64>::from_rows(&[vec![1.35, 1.0, 0.65], vec![0.65, 1.35, 1.0], vec![1.0, 0.65, 1.35]])?;
    let b = budget(2000, r.seed);
    let (best, _) = maximize_ratio_sum(&d, &b)?;
    r.push("max ratio sum", best <= 1.0 + 1e-9, format!("{best:.12}"), None);
    let rep = classify_doubly_stochastic(&d)?;
    r.push(
        "min diagonal below n - 1",
        (rep.min_diagonal - 1.35).abs() < 1e-12 && !rep.positive_sufficient,
        format!("min d_ii = {}", rep.min_diagonal),
        None,
    );
    let v = dtype_falsify(&d, 1, &b)?;
    r.push("unrefuted", v.status != Status::RefutedKPositive, format!("{:?}", v.status), Some(v));
    Ok(())
}

/// `n (w_0 I + sum_q w_q P_q)` with random permutations and weights, `D != n I`.
fn random_doubly_stochastic(rng: &mut ChaCha8Rng) -> Result<DWeights<f64>> {
    let n = rng.gen_range(2..=5);
    let q = rng.gen_range(1..=3);
    let mut perms: Vec<Vec<usize>> = (0..q)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    if perms.iter().all(|p| p.iter().enumerate().all(|(i, &v)| i == v)) {
        perms[0].swap(0, 1);
    }
    let mut w: Vec<f64> = (0..=q).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    DWeights::from_fn(n, |i, j| {
        let mut v = if i == j { w[0] } else { 0.0 };
        for (p, wq) in perms.iter().zip(&w[1..]) {
            if p[j] == i {
                v += wq;
            }
        }
        n as f64 * v
    })
}

fn doubly_stochastic(r: &mut SuiteReport) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    for case in 0..50 {
        let d = random_doubly_stochastic(&mut rng)?;
        let rep = classify_doubly_stochastic(&d)?;
        let (ok, detail) = match &rep.refuting_u {
            Some(u) => {
                let v = pinv_condition(&d, 2, u)?;
                (v.violates(1e-9) && v.value > 1.0 + 1e-9, format!("n={} value {:.9}", d.n(), v.value))
            }
            None => (false, "no refuting U".to_string()),
        };
        r.push(format!("random D #{case}"), ok, detail, None);
    }
    for n in 2..=6 {
        let l = choi_min_eigenvalue(&DWeights::scaled_identity(n, n as f64)?)?;
        r.push(format!("D = {n} I completely positive"), l >= -1e-10, format!("lambda_min {l:.3e}"), None);
    }
    Ok(())
}

fn involution_split_suite(r: &mut SuiteReport) -> Result<()> {
    for n in 2..=6 {
        for pi in PermutationSpec::involutions(n) {
            let map = involution_map::<f64>(n, &pi)?;
            let split = involution_split::<f64>(n, &pi)?;
            let sum_err = (split.c1.clone() + split.c2.clone()).max_abs_diff(&choi(&map));
            let l1 = hermitian_eig(&split.c1)?.min_eigenvalue();
            let l2 = hermitian_eig(&split.c2_partial_transpose())?.min_eigenvalue();
            let v = verify_split_default(&map, &split)?;
            r.push(
                format!("n={n} pi={:?}", pi.image()),
                sum_err <= 1e-12 && l1 >= -1e-10 && l2 >= -1e-10 && v.status == Status::CertifiedDecomposable,
                format!("sum error {sum_err:.1e}, lambda_min {l1:.2e} / {l2:.2e}"),
                Some(v),
            );
        }
    }
    Ok(())
}

fn orthonormal_identities(r: &mut SuiteReport) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let shapes = [(2, 3), (3, 3), (2, 4)];
    for trial in 0..100 {
        let (m, n) = shapes[trial % 3];
        let family = OrthoBasisFamily::from_unitary(&haar_unitary::<f64, _>(m * n, &mut rng), m, n, m * n)?;
        let els = family.elements();
        let left = els.iter().fold(ComplexMatrix::zeros(m, m), |a, f| a + f * &f.adjoint());
        let right = els.iter().fold(ComplexMatrix::zeros(n, n), |a, f| a + &f.adjoint() * f);
        let mut dev = left.max_abs_diff(&ComplexMatrix::identity(m).scale(n as f64));
        dev = dev.max(right.max_abs_diff(&ComplexMatrix::identity(n).scale(m as f64)));
        let ps = family.projections(&haar_unitary::<f64, _>(n, &mut rng))?;
        for (a, pa) in ps.iter().enumerate() {
            dev = dev.max((pa.trace().re - 1.0).abs());
            for (b, pb) in ps.iter().enumerate() {
                let expected = if a == b { pa.clone() } else { ComplexMatrix::zeros(pa.rows(), pa.cols()) };
                dev = dev.max((pa * pb).max_abs_diff(&expected));
            }
        }
        r.push(format!("family #{trial} ({m}x{n})"), dev <= 1e-10, format!("max deviation {dev:.1e}"), None);
    }
    Ok(())
}

fn choi_oracle(r: &mut SuiteReport) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let b = budget(64, r.seed);
    for case in 0..100 {
        let h = hermitian::<f64, _>(9, &mut rng);
        let base = hermitian_eig(&h)?.min_eigenvalue();
        let mut target: f64 = rng.gen_range(-0.5..0.5);
        if target.abs() < 1e-3 {
            target = 1e-3;
        }
        let c = &h + &ComplexMatrix::identity(9).scale(target - base);
        let map = MapRep::from_choi(c.clone(), 3, 3)?;
        let v = choi_compression_check(&map, &ComplexMatrix::identity(3), b.tol)?;
        let (psd, lmin) = psd_check(&c, PSD_TOL)?;
        let found = schmidt_min(&map, 3, &b)?;
        r.push(
            format!("random Choi #{case}"),
            (v.status == Status::CertifiedKPositive) == psd && (found.value - lmin).abs() <= 1e-8,
            format!("{:?}, lambda_min {lmin:.6}, schmidt_min {:.6}", v.status, found.value),
            Some(v),
        );
    }
    Ok(())
}
