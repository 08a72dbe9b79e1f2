//! JSON model files: many day-ahead mixtures sharing one horizon and at most
//! one pattern dictionary.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "horizon": 2,
//!   "dictionary": { "id": "u", "ridge": 0.001, "matrix": [[1.0, 0.0], [0.0, 1.0]] },
//!   "instances": [
//!     { "id": "day-1", "condition": [0.5], "k": 1,
//!       "components": [ { "mean": [1.0, 2.0], "cov": { "kind": "pdcc", "dictionary": "u", "aux_sigma": [1.0, 2.0] } } ] }
//!   ]
//! }
//! ```
//!
//! `weights` may be given per instance; when absent the mixture is uniform.
//! Floats are written in shortest round-trip form, so write-then-read is
//! bit-exact.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceSpec, PatternDictionary};
use crate::error::{Error, Result};
use crate::mixture::{MixtureForecast, MvnComponent};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format_version: u32,
    horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dictionary: Option<DictionaryDoc>,
    instances: Vec<InstanceDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DictionaryDoc {
    id: String,
    ridge: f64,
    matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    id: String,
    #[serde(default)]
    condition: Vec<f64>,
    k: usize,
    components: Vec<ComponentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDoc {
    mean: Vec<f64>,
    cov: CovDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum CovDoc {
    Diag { sigma: Vec<f64> },
    Pdcc { dictionary: String, aux_sigma: Vec<f64> },
    Dense { matrix: Vec<Vec<f64>> },
}

fn at(path: String, e: Error) -> Error {
    match e {
        Error::DanglingDictionaryRef(_) | Error::Parse { .. } => e,
        other => Error::Parse {
            line: 0,
            column: 0,
            message: format!("{path}: {other}"),
        },
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::ShapeMismatch(format!("{what} rows differ in length")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Parses a model document.
pub fn parse_model(text: &str) -> Result<Vec<MixtureForecast>> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: doc.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let dictionary = doc
        .dictionary
        .map(|d| {
            let matrix = matrix_from_rows(&d.matrix, "dictionary").map_err(|e| at("dictionary".into(), e))?;
            if matrix.nrows() != doc.horizon {
                return Err(at(
                    "dictionary".into(),
                    Error::DimensionMismatch {
                        context: "dictionary rows vs horizon",
                        expected: doc.horizon,
                        found: matrix.nrows(),
                    },
                ));
            }
            PatternDictionary::new(d.id, matrix, d.ridge)
                .map(Arc::new)
                .map_err(|e| at("dictionary".into(), e))
        })
        .transpose()?;

    let mut out = Vec::with_capacity(doc.instances.len());
    for (i, inst) in doc.instances.into_iter().enumerate() {
        let path = format!("instances[{i}]");
        if inst.k != inst.components.len() {
            return Err(at(
                path,
                Error::DimensionMismatch {
                    context: "k vs components",
                    expected: inst.k,
                    found: inst.components.len(),
                },
            ));
        }
        let mut components = Vec::with_capacity(inst.k);
        for (j, c) in inst.components.into_iter().enumerate() {
            let cpath = format!("{path}.components[{j}]");
            let cov = match c.cov {
                CovDoc::Diag { sigma } => CovarianceSpec::diagonal(sigma),
                CovDoc::Pdcc {
                    dictionary: id,
                    aux_sigma,
                } => match &dictionary {
                    Some(d) if d.id() == id => CovarianceSpec::pdcc(Arc::clone(d), aux_sigma),
                    _ => return Err(Error::DanglingDictionaryRef(id)),
                },
                CovDoc::Dense { matrix } => {
                    matrix_from_rows(&matrix, "dense covariance").and_then(CovarianceSpec::dense)
                }
            }
            .map_err(|e| at(cpath.clone(), e))?;
            if cov.dim() != doc.horizon {
                return Err(at(
                    cpath,
                    Error::DimensionMismatch {
                        context: "covariance vs horizon",
                        expected: doc.horizon,
                        found: cov.dim(),
                    },
                ));
            }
            components.push(MvnComponent::new(c.mean, cov).map_err(|e| at(cpath, e))?);
        }
        let fc = match inst.weights {
            Some(w) => MixtureForecast::new(inst.id, components, w),
            None => MixtureForecast::uniform(inst.id, components),
        }
        .map_err(|e| at(path, e))?;
        out.push(fc.with_condition(inst.condition));
    }
    let mut ids: Vec<&str> = out.iter().map(MixtureForecast::id).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateId(w[0].to_string()));
    }
    Ok(out)
}

/// Renders forecasts as a model document. Instances keep their order.
pub fn render_model(forecasts: &[MixtureForecast]) -> Result<String> {
    let Some(first) = forecasts.first() else {
        return Err(Error::ShapeMismatch("no forecasts to write".into()));
    };
    let horizon = first.horizon();
    let mut dictionary: Option<&Arc<PatternDictionary>> = None;
    for fc in forecasts {
        if fc.horizon() != horizon {
            return Err(Error::ShapeMismatch(format!(
                "forecast '{}' has horizon {}, expected {horizon}",
                fc.id(),
                fc.horizon()
            )));
        }
        if let Some(d) = fc.dictionary() {
            match dictionary {
                None => dictionary = Some(d),
                Some(prev) if Arc::ptr_eq(prev, d) || **prev == **d => {}
                Some(_) => {
                    return Err(Error::InvalidCovariance(
                        "a model file holds at most one pattern dictionary".into(),
                    ))
                }
            }
        }
    }
    let doc = ModelDoc {
        format_version: FORMAT_VERSION,
        horizon,
        dictionary: dictionary.map(|d| DictionaryDoc {
            id: d.id().to_string(),
            ridge: d.ridge(),
            matrix: matrix_to_rows(d.patterns()),
        }),
        instances: forecasts
            .iter()
            .map(|fc| {
                let k = fc.k();
                let uniform = 1.0 / k as f64;
                let weights = fc
                    .weights()
                    .iter()
                    .any(|w| w.to_bits() != uniform.to_bits())
                    .then(|| fc.weights().to_vec());
                InstanceDoc {
                    id: fc.id().to_string(),
                    condition: fc.condition().to_vec(),
                    k,
                    components: fc
                        .components()
                        .iter()
                        .map(|c| ComponentDoc {
                            mean: c.mean().iter().copied().collect(),
                            cov: match c.cov() {
                                CovarianceSpec::Diagonal { sigma } => CovDoc::Diag { sigma: sigma.clone() },
                                CovarianceSpec::Pdcc { dictionary, aux_sigma } => CovDoc::Pdcc {
                                    dictionary: dictionary.id().to_string(),
                                    aux_sigma: aux_sigma.clone(),
                                },
                                CovarianceSpec::Dense { matrix } => CovDoc::Dense {
                                    matrix: matrix_to_rows(matrix),
                                },
                            },
                        })
                        .collect(),
                    weights,
                }
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("model documents serialize");
    text.push('\n');
    Ok(text)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Vec<MixtureForecast>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

pub fn write_model(forecasts: &[MixtureForecast], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_model(forecasts)?).map_err(|e| Error::io(path, e))
}
