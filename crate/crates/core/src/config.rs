//! JSON descriptions of targets and diffusions.
//!
//! ```json
//! {"target": {"kind": "gaussian_mixture", "weights": [0.5, 0.5],
//!             "means": [[-2.0], [2.0]], "cov": [[1.0]]},
//!  "diffusion": {"kind": "langevin"}}
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::diffusion::DiffusionSpec;
use crate::error::{Error, Result};
use crate::target::TargetModel;
use crate::targets::{
    riemannian_spec_pseudo_huber_scaled, GaussianMixture, HuberRegression, LogisticRegression,
    StudentTRegression, Underdamped,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    StandardNormal {
        dim: usize,
    },
    Gaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        cov: Vec<Vec<f64>>,
    },
    /// `½ N(-Δ/2, 1) + ½ N(Δ/2, 1)`.
    SymmetricPair {
        delta: f64,
    },
    Logistic {
        covariates: Vec<Vec<f64>>,
        labels: Vec<f64>,
        prior_mean: Vec<f64>,
        prior_cov: Vec<Vec<f64>>,
    },
    Huber {
        covariates: Vec<Vec<f64>>,
        responses: Vec<f64>,
        prior_mean: Vec<f64>,
        prior_cov: Vec<Vec<f64>>,
        threshold: f64,
    },
    StudentT {
        design: Vec<Vec<f64>>,
        response: Vec<f64>,
        dof: f64,
        noise_cov: Vec<Vec<f64>>,
        delta: f64,
    },
    /// `P ⊗ N(0, I)` for a base target `P`.
    Underdamped {
        base: Box<TargetConfig>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionConfig {
    #[default]
    Langevin,
    Preconditioned {
        a: Vec<Vec<f64>>,
    },
    Nonreversible {
        a: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
    },
    /// Requires an even dimension `2d`.
    SecondOrder,
    /// `a(β) = scale · √(1 + ‖β/δ‖²) I`.
    PseudoHuber {
        delta: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Top-level file layout; either part may be absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub target: Option<TargetConfig>,
    pub diffusion: Option<DiffusionConfig>,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Config(format!("{what}: rows have different lengths")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl TargetConfig {
    pub fn build(&self) -> Result<Box<dyn TargetModel>> {
        Ok(match self {
            TargetConfig::StandardNormal { dim } => {
                if *dim == 0 {
                    return Err(Error::Config("dim must be >= 1".into()));
                }
                Box::new(GaussianMixture::standard_normal(*dim))
            }
            TargetConfig::Gaussian { mean, cov } => {
                Box::new(GaussianMixture::gaussian(mean.clone(), matrix(cov, "cov")?)?)
            }
            TargetConfig::GaussianMixture { weights, means, cov } => Box::new(GaussianMixture::new(
                weights.clone(),
                means.clone(),
                matrix(cov, "cov")?,
            )?),
            TargetConfig::SymmetricPair { delta } => {
                if !delta.is_finite() {
                    return Err(Error::Config("delta must be finite".into()));
                }
                Box::new(GaussianMixture::symmetric_pair(*delta))
            }
            TargetConfig::Logistic {
                covariates,
                labels,
                prior_mean,
                prior_cov,
            } => Box::new(LogisticRegression::new(
                matrix(covariates, "covariates")?,
                labels.clone(),
                prior_mean.clone(),
                matrix(prior_cov, "prior_cov")?,
            )?),
            TargetConfig::Huber {
                covariates,
                responses,
                prior_mean,
                prior_cov,
                threshold,
            } => Box::new(HuberRegression::new(
                matrix(covariates, "covariates")?,
                responses.clone(),
                prior_mean.clone(),
                matrix(prior_cov, "prior_cov")?,
                *threshold,
            )?),
            TargetConfig::StudentT {
                design,
                response,
                dof,
                noise_cov,
                delta,
            } => Box::new(StudentTRegression::new(
                matrix(design, "design")?,
                response.clone(),
                *dof,
                matrix(noise_cov, "noise_cov")?,
                *delta,
            )?),
            TargetConfig::Underdamped { base } => Box::new(Underdamped::new(base.build()?)),
        })
    }

    /// The mixture parameters, for targets that are Gaussian mixtures.
    pub fn mixture(&self) -> Result<Option<GaussianMixture>> {
        Ok(match self {
            TargetConfig::StandardNormal { dim } => Some(GaussianMixture::standard_normal(*dim)),
            TargetConfig::Gaussian { mean, cov } => {
                Some(GaussianMixture::gaussian(mean.clone(), matrix(cov, "cov")?)?)
            }
            TargetConfig::GaussianMixture { weights, means, cov } => Some(GaussianMixture::new(
                weights.clone(),
                means.clone(),
                matrix(cov, "cov")?,
            )?),
            TargetConfig::SymmetricPair { delta } => Some(GaussianMixture::symmetric_pair(*delta)),
            _ => None,
        })
    }
}

impl DiffusionConfig {
    pub fn build(&self, dim: usize) -> Result<DiffusionSpec> {
        let spec = match self {
            DiffusionConfig::Langevin => DiffusionSpec::langevin(dim),
            DiffusionConfig::Preconditioned { a } => DiffusionSpec::preconditioned(matrix(a, "a")?)?,
            DiffusionConfig::Nonreversible { a, c } => {
                DiffusionSpec::nonreversible(matrix(a, "a")?, matrix(c, "c")?)?
            }
            DiffusionConfig::SecondOrder => {
                if dim % 2 != 0 {
                    return Err(Error::Config(format!(
                        "second_order diffusion needs an even dimension, got {dim}"
                    )));
                }
                DiffusionSpec::second_order(dim / 2)
            }
            DiffusionConfig::PseudoHuber { delta, scale } => {
                riemannian_spec_pseudo_huber_scaled(dim, *delta, *scale)?
            }
        };
        if spec.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: spec.dim(),
            });
        }
        Ok(spec)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, e: serde_json::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

fn has_kind(text: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(text)
        .map(|v| v.get("kind").is_some())
        .unwrap_or(false)
}

/// Reads a model file, or a bare target object with a `kind` field.
pub fn load_model_file(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let text = read(path)?;
    if has_kind(&text) {
        let target = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
        return Ok(ModelFile {
            target: Some(target),
            diffusion: None,
        });
    }
    serde_json::from_str(&text).map_err(|e| parse_err(path, e))
}

/// Reads a diffusion from a model file or a bare diffusion object.
pub fn load_diffusion_file(path: impl AsRef<Path>) -> Result<DiffusionConfig> {
    let path = path.as_ref();
    let text = read(path)?;
    if has_kind(&text) {
        return serde_json::from_str(&text).map_err(|e| parse_err(path, e));
    }
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
    file.diffusion
        .ok_or_else(|| Error::Config(format!("{}: no diffusion section", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_model_file() {
        let text = r#"{"target": {"kind": "gaussian_mixture", "weights": [0.5, 0.5],
            "means": [[-2.0], [2.0]], "cov": [[1.0]]}, "diffusion": {"kind": "langevin"}}"#;
        let file: ModelFile = serde_json::from_str(text).unwrap();
        let target = file.target.unwrap().build().unwrap();
        assert_eq!(target.dim(), 1);
        assert_eq!(target.score(&[0.0]), vec![0.0]);
        assert_eq!(file.diffusion, Some(DiffusionConfig::Langevin));
    }

    #[test]
    fn pseudo_huber_scale_defaults_to_one() {
        let d: DiffusionConfig = serde_json::from_str(r#"{"kind": "pseudo_huber", "delta": 0.5}"#).unwrap();
        assert_eq!(d, DiffusionConfig::PseudoHuber { delta: 0.5, scale: 1.0 });
    }

    #[test]
    fn ragged_matrix_rejected() {
        let t = TargetConfig::Gaussian {
            mean: vec![0.0, 0.0],
            cov: vec![vec![1.0, 0.0], vec![0.0]],
        };
        assert!(matches!(t.build(), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_kind_rejected() {
        assert!(serde_json::from_str::<TargetConfig>(r#"{"kind": "banana"}"#).is_err());
    }
}
