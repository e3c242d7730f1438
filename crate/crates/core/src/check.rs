//! Runs named criteria against a map in order, stopping at the first
//! certificate or refutation unless asked to run them all.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::dtype::dtype_falsify;
use crate::error::{Error, Result};
use crate::falsify::SearchBudget;
use crate::kcriteria::{
    check_frame_positivity, choi_compression_check, orthobasis_norm_sufficient, orthobasis_last_necessary, orthobasis_sufficient, numrange_sufficient,
    schmidt_verdict, trace_necessary, OrthoBasisFamily, Status, Verdict,
};
use crate::linalg::ComplexMatrix;
use crate::maps::{to_kraus, MapRep, OrthonormalFrame};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Criterion {
    /// Choi matrix PSD: certifies complete positivity, refutes only at full level.
    ChoiPsd,
    /// Block positivity on the first `k` standard basis vectors.
    StandardFrame,
    /// Multistart search for a negative Schmidt-rank-`k` expectation.
    SchmidtMin,
    /// Numerical range of `sum C^dagger C - sum D^dagger D` (necessary).
    TraceNecessary,
    /// Numerical ranges of the positive and negative parts (sufficient).
    NumRange,
    /// Orthonormal-basis criterion with `xi_k`.
    OrthoBasis,
    /// Orthonormal-basis criterion with `(2,k)`-norms.
    OrthoBasisCorollary,
    /// Necessary condition with a single negative element.
    OrthoBasisLast,
    /// Moore–Penrose search on D-type maps.
    DTypeFalsify,
}

impl Criterion {
    pub const ALL: [Criterion; 9] = [
        Criterion::ChoiPsd,
        Criterion::StandardFrame,
        Criterion::TraceNecessary,
        Criterion::OrthoBasis,
        Criterion::OrthoBasisCorollary,
        Criterion::OrthoBasisLast,
        Criterion::NumRange,
        Criterion::DTypeFalsify,
        Criterion::SchmidtMin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ChoiPsd => "choi-psd",
            Self::StandardFrame => "standard-frame",
            Self::SchmidtMin => "schmidt-min",
            Self::TraceNecessary => "trace-necessary",
            Self::NumRange => "numrange",
            Self::OrthoBasis => "orthobasis",
            Self::OrthoBasisCorollary => "orthobasis-corollary",
            Self::OrthoBasisLast => "orthobasis-last",
            Self::DTypeFalsify => "dtype-falsify",
        }
    }

    /// Comma-separated list; whitespace around names is ignored.
    pub fn parse_list(s: &str) -> Result<Vec<Criterion>> {
        s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::parse).collect()
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Error::UnknownCriterion(s.to_string()))
    }
}

/// A map together with an optional orthonormal-basis presentation
/// `(family, gamma)`; without one the spectral form of the Choi matrix is used.
#[derive(Clone, Debug)]
pub struct MapInput<T: Real> {
    pub map: MapRep<T>,
    pub orthobasis: Option<(OrthoBasisFamily<T>, Vec<T>)>,
}

impl<T: Real> MapInput<T> {
    pub fn new(map: MapRep<T>) -> Self {
        Self { map, orthobasis: None }
    }

    pub fn from_family(family: OrthoBasisFamily<T>, gamma: Vec<T>) -> Result<Self> {
        let map = family.to_map(&gamma)?;
        Ok(Self { map, orthobasis: Some((family, gamma)) })
    }

    fn family(&self) -> Result<(OrthoBasisFamily<T>, Vec<T>)> {
        match &self.orthobasis {
            Some(fg) => Ok(fg.clone()),
            None => OrthoBasisFamily::from_map(&self.map),
        }
    }
}

impl<T: Real> From<MapRep<T>> for MapInput<T> {
    fn from(map: MapRep<T>) -> Self {
        Self::new(map)
    }
}

#[derive(Clone, Debug)]
#[derive(Default)]
pub struct CheckOptions {
    pub budget: SearchBudget,
    pub exhaustive: bool,
}


#[derive(Clone, Debug)]
pub struct CriterionRun<T: Real> {
    pub criterion: Criterion,
    pub verdict: Verdict<T>,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct CheckOutcome<T: Real> {
    /// `k` after clamping to `min(n, m)`.
    pub k: usize,
    pub runs: Vec<CriterionRun<T>>,
    /// First certificate or refutation; otherwise inconclusive (or not
    /// applicable when no criterion applied).
    pub status: Status,
}

/// Errors that mean "this criterion does not apply to this input".
fn inapplicable(e: &Error) -> bool {
    matches!(e, Error::WrongRepresentation { .. } | Error::WrongSplit { .. } | Error::EmptyPlusList)
}

/// One criterion at level `k` (clamped to `min(n, m)`; `k = 0` is rejected).
pub fn run_criterion<T: Real>(input: &MapInput<T>, criterion: Criterion, k: usize, budget: &SearchBudget) -> Result<Verdict<T>> {
    let map = &input.map;
    let (n, m) = (map.input_dim(), map.output_dim());
    if k == 0 {
        return Err(Error::KOutOfRange { k, max: n.min(m) });
    }
    let k = k.min(n).min(m);
    let tol = T::lit(budget.tol);
    let result = match criterion {
        Criterion::ChoiPsd => choi_compression_check(map, &ComplexMatrix::identity(m), tol).map(|mut v| {
            v.k = k;
            if v.status == Status::RefutedKPositive && k < n.min(m) {
                v.status = Status::Inconclusive;
                v.witness = None;
            }
            if v.status == Status::Inconclusive {
                v.method = "choi-psd".into();
            }
            v
        }),
        Criterion::StandardFrame => check_frame_positivity(map, &OrthonormalFrame::standard(n, k), tol),
        Criterion::SchmidtMin => schmidt_verdict(map, k, budget),
        Criterion::TraceNecessary => to_kraus(map).and_then(|kr| trace_necessary(&kr, k, tol)),
        Criterion::NumRange => to_kraus(map).and_then(|kr| numrange_sufficient(&kr, k, budget)),
        Criterion::OrthoBasis => input.family().and_then(|(f, g)| orthobasis_sufficient(&f, &g, k)),
        Criterion::OrthoBasisCorollary => input.family().and_then(|(f, g)| orthobasis_norm_sufficient(&f, &g, k)),
        Criterion::OrthoBasisLast => input.family().and_then(|(f, g)| orthobasis_last_necessary(&f, &g, k)),
        Criterion::DTypeFalsify => match map {
            MapRep::DType(d) => dtype_falsify(d, k, budget),
            _ => Err(Error::WrongRepresentation { expected: "dtype" }),
        },
    };
    match result {
        Err(e) if inapplicable(&e) => Ok(Verdict::new(Status::NotApplicable, k, T::zero(), criterion.name())),
        other => other,
    }
}

/// Runs `criteria` in order; stops after the first certificate or refutation
/// unless `options.exhaustive`.
pub fn run_check<T: Real>(input: &MapInput<T>, criteria: &[Criterion], k: usize, options: &CheckOptions) -> Result<CheckOutcome<T>> {
    options.budget.validate()?;
    let (n, m) = (input.map.input_dim(), input.map.output_dim());
    if k == 0 {
        return Err(Error::KOutOfRange { k, max: n.min(m) });
    }
    let k_eff = k.min(n).min(m);
    let mut runs = Vec::with_capacity(criteria.len());
    let mut status = None;
    for &criterion in criteria {
        let start = Instant::now();
        let verdict = run_criterion(input, criterion, k_eff, &options.budget)?;
        let decisive = verdict.status.is_decisive();
        if decisive && status.is_none() {
            status = Some(verdict.status);
        }
        runs.push(CriterionRun { criterion, verdict, elapsed: start.elapsed() });
        if decisive && !options.exhaustive {
            break;
        }
    }
    let status = status.unwrap_or_else(|| {
        if !runs.is_empty() && runs.iter().all(|r| r.verdict.status == Status::NotApplicable) {
            Status::NotApplicable
        } else {
            Status::Inconclusive
        }
    });
    Ok(CheckOutcome { k: k_eff, runs, status })
}
