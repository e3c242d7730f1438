//! Build specifications: a `"family"` tag plus its parameters.

use kpos_core::check::MapInput;
use kpos_core::dtype::{make_circulant, make_phi};
use kpos_core::io::MatrixJson;
use kpos_core::kcriteria::OrthoBasisFamily;
use kpos_core::maps::MapRep;
use kpos_core::PermutationSpec;
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// The 8x8 family with `I_4 (x) [[1, +-1], [+-1, 1]] / 4` as its two negative elements.
    EightDimensional,
    MatrixUnits,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BuildSpec {
    /// `gamma tr(A) I_n - A`.
    LGamma { n: usize, gamma: f64 },
    /// D-type map with `D = (n - t) I + t P_pi`; `pi` is the 1-based image.
    PhiTPi { n: usize, pi: Vec<usize>, t: f64 },
    /// D-type map with `D = (1 - t) n I + t n S`, `S` the circulant of `s`.
    Circulant { n: usize, s: Vec<f64>, t: f64 },
    /// Orthonormal-basis map; weights default to 1.
    Orthobasis {
        preset: Preset,
        #[serde(default)]
        m: Option<usize>,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        p: Option<usize>,
        #[serde(default)]
        gamma: Option<Vec<f64>>,
    },
    /// A Choi matrix given directly; `n` and `m` default to its square root.
    Raw {
        choi: MatrixJson,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        m: Option<usize>,
    },
}

fn missing(field: &str, family: &str) -> String {
    format!("field `{field}` is required for family `{family}`")
}

/// 1-based line and column of a byte offset.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

impl BuildSpec {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| {
            if e.line() > 0 {
                return e.to_string();
            }
            // tagged enums are buffered, so serde_json drops the position
            let msg = e.to_string();
            let key = msg.split('`').nth(1).filter(|_| msg.starts_with("unknown field"));
            let offset = key
                .and_then(|k| text.find(&format!("\"{k}\"")))
                .unwrap_or_else(|| text.trim_end().len().saturating_sub(1));
            let (line, column) = position(text, offset);
            format!("{msg} at line {line} column {column}")
        })
    }

    /// Builds the map.  Errors are reported as text naming the offending field.
    pub fn build(&self) -> Result<MapInput<f64>, String> {
        let field = |name: &str, e: kpos_core::Error| format!("field `{name}`: {e}");
        match self {
            Self::LGamma { n, gamma } => {
                MapRep::l_gamma(*n, *gamma).map(MapInput::new).map_err(|e| field("gamma", e))
            }
            Self::PhiTPi { n, pi, t } => {
                let pi = PermutationSpec::new(pi.clone()).map_err(|e| field("pi", e))?;
                let d = make_phi(*n, &pi, *t).map_err(|e| field("t", e))?;
                Ok(MapInput::new(MapRep::dtype(d)))
            }
            Self::Circulant { n, s, t } => {
                let d = make_circulant(s, *t, *n).map_err(|e| field("s", e))?;
                Ok(MapInput::new(MapRep::dtype(d)))
            }
            Self::Orthobasis { preset, m, n, p, gamma } => {
                let family = match preset {
                    Preset::EightDimensional => OrthoBasisFamily::eight_dimensional_example(),
                    Preset::MatrixUnits => {
                        let m = m.ok_or_else(|| missing("m", "orthobasis"))?;
                        let n = n.ok_or_else(|| missing("n", "orthobasis"))?;
                        let p = p.ok_or_else(|| missing("p", "orthobasis"))?;
                        OrthoBasisFamily::matrix_units(m, n, p).map_err(|e| field("p", e))?
                    }
                };
                let gamma = gamma.clone().unwrap_or_else(|| vec![1.0; family.m() * family.n()]);
                MapInput::from_family(family, gamma).map_err(|e| field("gamma", e))
            }
            Self::Raw { choi, n, m } => {
                let c = choi.to_matrix().map_err(|e| field("choi", e))?;
                let side = (c.rows() as f64).sqrt().round() as usize;
                let (n, m) = match (n, m) {
                    (Some(n), Some(m)) => (*n, *m),
                    (Some(n), None) if *n > 0 => (*n, c.rows() / n),
                    (None, Some(m)) if *m > 0 => (c.rows() / m, *m),
                    _ if side * side == c.rows() => (side, side),
                    _ => return Err("field `choi`: size is not a square; give `n` and `m`".into()),
                };
                MapRep::from_choi(c, n, m).map(MapInput::new).map_err(|e| field("choi", e))
            }
        }
    }
}
