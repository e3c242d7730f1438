//! JSON encodings.
//!
//! Matrices are `{"rows", "cols", "re", "im"}` with row-major entries; vectors
//! are single-column matrices.  Maps carry a `"kind"` tag: `"choi"`,
//! `"kraus"`, `"dtype"` or `"orthobasis"`.

use serde::{Deserialize, Serialize};

use crate::check::MapInput;
use crate::decomp::ChoiSplit;
use crate::error::{Error, Result};
use crate::falsify::SearchBudget;
use crate::kcriteria::{OrthoBasisFamily, Status, Verdict, Witness};
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::maps::{DWeights, MapRep};
use num_complex::Complex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

impl From<&ComplexMatrix<f64>> for MatrixJson {
    fn from(m: &ComplexMatrix<f64>) -> Self {
        let (rows, cols) = (m.rows(), m.cols());
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                re.push(m[(r, c)].re);
                im.push(m[(r, c)].im);
            }
        }
        Self { rows, cols, re, im }
    }
}

impl From<&ComplexVector<f64>> for MatrixJson {
    fn from(v: &ComplexVector<f64>) -> Self {
        Self { rows: v.len(), cols: 1, re: v.iter().map(|z| z.re).collect(), im: v.iter().map(|z| z.im).collect() }
    }
}

impl TryFrom<&MatrixJson> for ComplexMatrix<f64> {
    type Error = Error;
    fn try_from(j: &MatrixJson) -> Result<Self> {
        let len = j.rows * j.cols;
        if j.re.len() != len || (!j.im.is_empty() && j.im.len() != len) {
            return Err(Error::Json(format!(
                "{}x{} matrix needs {len} entries, got re: {}, im: {}",
                j.rows,
                j.cols,
                j.re.len(),
                j.im.len()
            )));
        }
        if j.re.iter().chain(&j.im).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ComplexMatrix::from_fn(j.rows, j.cols, |r, c| {
            let idx = r * j.cols + c;
            Complex::new(j.re[idx], j.im.get(idx).copied().unwrap_or(0.0))
        }))
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<ComplexMatrix<f64>> {
        self.try_into()
    }

    pub fn to_vector(&self) -> Result<ComplexVector<f64>> {
        if self.cols != 1 {
            return Err(Error::Json(format!("expected a column vector, got {}x{}", self.rows, self.cols)));
        }
        let m = self.to_matrix()?;
        Ok(m.column(0))
    }
}

/// `{"n": n, "d": [[...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DMatrixJson {
    pub n: usize,
    pub d: Vec<Vec<f64>>,
}

impl From<&DWeights<f64>> for DMatrixJson {
    fn from(d: &DWeights<f64>) -> Self {
        Self { n: d.n(), d: d.rows() }
    }
}

impl TryFrom<&DMatrixJson> for DWeights<f64> {
    type Error = Error;
    fn try_from(j: &DMatrixJson) -> Result<Self> {
        if j.d.len() != j.n || j.d.iter().any(|r| r.len() != j.n) {
            return Err(Error::Json(format!("D must be {0}x{0}", j.n)));
        }
        DWeights::from_rows(&j.d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapJson {
    Choi {
        n: usize,
        m: usize,
        choi: MatrixJson,
    },
    Kraus {
        plus: Vec<MatrixJson>,
        #[serde(default)]
        minus: Vec<MatrixJson>,
    },
    Dtype {
        n: usize,
        d: Vec<Vec<f64>>,
    },
    /// `sum_{j<p} g_j F_j X F_j^dagger - sum_{j>=p} g_j F_j X F_j^dagger` for an
    /// orthonormal basis `F_j` of `m x n` matrices.
    Orthobasis {
        m: usize,
        n: usize,
        p: usize,
        elements: Vec<MatrixJson>,
        gamma: Vec<f64>,
    },
}

impl MapJson {
    pub fn from_map(map: &MapRep<f64>) -> Self {
        match map {
            MapRep::Choi { choi, n, m } => Self::Choi { n: *n, m: *m, choi: choi.into() },
            MapRep::KrausDifference { plus, minus } => {
                Self::Kraus { plus: plus.iter().map(Into::into).collect(), minus: minus.iter().map(Into::into).collect() }
            }
            MapRep::DType(d) => Self::Dtype { n: d.n(), d: d.rows() },
        }
    }

    pub fn from_input(input: &MapInput<f64>) -> Self {
        match &input.orthobasis {
            Some((family, gamma)) => Self::Orthobasis {
                m: family.m(),
                n: family.n(),
                p: family.p(),
                elements: family.elements().iter().map(Into::into).collect(),
                gamma: gamma.clone(),
            },
            None => Self::from_map(&input.map),
        }
    }

    pub fn to_input(&self) -> Result<MapInput<f64>> {
        let mats = |v: &[MatrixJson]| v.iter().map(ComplexMatrix::try_from).collect::<Result<Vec<_>>>();
        Ok(match self {
            Self::Choi { n, m, choi } => MapInput::new(MapRep::from_choi(choi.to_matrix()?, *n, *m)?),
            Self::Kraus { plus, minus } => MapInput::new(MapRep::kraus(mats(plus)?, mats(minus)?)?),
            Self::Dtype { n, d } => MapInput::new(MapRep::dtype((&DMatrixJson { n: *n, d: d.clone() }).try_into()?)),
            Self::Orthobasis { m, n, p, elements, gamma } => {
                MapInput::from_family(OrthoBasisFamily::new(mats(elements)?, *p, *m, *n)?, gamma.clone())?
            }
        })
    }
}

pub fn map_to_json(input: &MapInput<f64>) -> Result<String> {
    serde_json::to_string_pretty(&MapJson::from_input(input)).map_err(|e| Error::Json(e.to_string()))
}

pub fn map_from_json(s: &str) -> Result<MapInput<f64>> {
    let j: MapJson = serde_json::from_str(s).map_err(|e| Error::Json(e.to_string()))?;
    j.to_input()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    /// `"frame"`, `"schmidt-vector"` or `"u-matrix"`.
    pub kind: String,
    pub matrix: MatrixJson,
}

impl From<&Witness<f64>> for WitnessJson {
    fn from(w: &Witness<f64>) -> Self {
        match w {
            Witness::Frame(x) => Self { kind: "frame".into(), matrix: x.into() },
            Witness::SchmidtVector(x) => Self { kind: "schmidt-vector".into(), matrix: x.into() },
            Witness::UMatrix(u) => Self { kind: "u-matrix".into(), matrix: u.into() },
        }
    }
}

impl TryFrom<&WitnessJson> for Witness<f64> {
    type Error = Error;
    fn try_from(j: &WitnessJson) -> Result<Self> {
        match j.kind.as_str() {
            "frame" => Ok(Witness::Frame(j.matrix.to_matrix()?)),
            "schmidt-vector" => Ok(Witness::SchmidtVector(j.matrix.to_vector()?)),
            "u-matrix" => Ok(Witness::UMatrix(j.matrix.to_matrix()?)),
            other => Err(Error::Json(format!("unknown witness kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictJson {
    pub status: Status,
    pub k: usize,
    /// `null` when not finite.
    pub margin: Option<f64>,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessJson>,
}

impl From<&Verdict<f64>> for VerdictJson {
    fn from(v: &Verdict<f64>) -> Self {
        Self {
            status: v.status,
            k: v.k,
            margin: v.margin.is_finite().then_some(v.margin),
            method: v.method.clone(),
            witness: v.witness.as_ref().map(Into::into),
        }
    }
}

impl TryFrom<&VerdictJson> for Verdict<f64> {
    type Error = Error;
    fn try_from(j: &VerdictJson) -> Result<Self> {
        let v = Verdict::new(j.status, j.k, j.margin.unwrap_or(f64::NAN), j.method.clone());
        Ok(match &j.witness {
            Some(w) => v.with_witness(w.try_into()?),
            None => v,
        })
    }
}

/// `{"c1": matrix, "c2": matrix}`; the input dimension is recovered as the
/// square root of the block size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiSplitJson {
    pub c1: MatrixJson,
    pub c2: MatrixJson,
}

impl From<&ChoiSplit<f64>> for ChoiSplitJson {
    fn from(s: &ChoiSplit<f64>) -> Self {
        Self { c1: (&s.c1).into(), c2: (&s.c2).into() }
    }
}

impl ChoiSplitJson {
    /// `n` defaults to the square root of the block size.
    pub fn to_split(&self, n: Option<usize>) -> Result<ChoiSplit<f64>> {
        let c1 = self.c1.to_matrix()?;
        let c2 = self.c2.to_matrix()?;
        let d = c1.rows();
        let n = match n {
            Some(n) => n,
            None => {
                let r = (d as f64).sqrt().round() as usize;
                if r * r != d {
                    return Err(Error::DimensionMismatch(format!("{d} is not a square; give the input dimension")));
                }
                r
            }
        };
        ChoiSplit::new(c1, c2, n)
    }
}

/// Reads a [`SearchBudget`] and validates it.
pub fn budget_from_json(s: &str) -> Result<SearchBudget> {
    let b: SearchBudget = serde_json::from_str(s).map_err(|e| Error::Json(e.to_string()))?;
    b.validate()?;
    Ok(b)
}
