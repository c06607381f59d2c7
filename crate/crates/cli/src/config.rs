//! Model configuration files.
//!
//! A model is a flat TOML document:
//!
//! ```toml
//! name = "cantor3"
//! alphabet_size = 2
//! transition = [[1, 1], [1, 1]]
//! u = 1
//! matrices = [[0.3333333333333333], [0.3333333333333333]]
//! offsets = [[0.0], [0.6666666666666666]]
//! # optional
//! box_lo = [0.0]
//! box_hi = [1.0]
//! eps_base = 0.3333333333333333
//! eps_count = 10
//! depth = 14
//!
//! [caps]
//! word_cap = 20
//! lmax_cap = 5
//! block_limit = 4096
//! ```
//!
//! `matrices[i]` is the row-major `u x u` matrix of symbol `i`.

use bowen_core::geometry::{AffineModel, AmbientBox, EpsGrid};
use bowen_core::pressure::{DoublingLimits, DEFAULT_BLOCK_LIMIT, DEFAULT_LEVEL_CAP};
use bowen_core::{MatrixCocycle, SmallMat, Subshift};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse model config: {0}")]
    Parse(String),
    #[error("invalid model config, {field}: {message}")]
    Validation { field: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word_cap: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lmax_cap: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub alphabet_size: usize,
    pub transition: Vec<Vec<i64>>,
    pub u: usize,
    pub matrices: Vec<Vec<f64>>,
    pub offsets: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_lo: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_hi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_base: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caps: Option<Caps>,
}

/// A validated model together with its resource caps.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub config: ModelConfig,
    pub model: AffineModel,
    pub limits: DoublingLimits,
}

pub fn parse_config(text: &str) -> Result<ModelConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

pub fn serialize_config(cfg: &ModelConfig) -> String {
    toml::to_string(cfg).expect("model configs always serialize")
}

impl ModelConfig {
    pub fn from_model(m: &AffineModel) -> Self {
        let u = m.dim();
        Self {
            name: m.name.clone(),
            alphabet_size: m.subshift.alphabet_size(),
            transition: m
                .subshift
                .transition_rows()
                .into_iter()
                .map(|r| r.into_iter().map(i64::from).collect())
                .collect(),
            u,
            matrices: m.cocycle.matrices().iter().map(|b| b.to_row_major()).collect(),
            offsets: m.offsets.clone(),
            box_lo: Some(m.ambient.lo.clone()),
            box_hi: Some(m.ambient.hi.clone()),
            eps_base: Some(m.eps.base),
            eps_count: Some(m.eps.count),
            depth: Some(m.depth),
            caps: None,
        }
    }

    /// Checks every invariant and builds the model.
    pub fn validate(&self) -> Result<LoadedModel, ConfigError> {
        let l = self.alphabet_size;
        let u = self.u;
        if l == 0 || l > 255 {
            return Err(invalid("alphabet_size", format!("{l} is outside 1..=255")));
        }
        if !(1..=3).contains(&u) {
            return Err(invalid("u", format!("{u} is outside 1..=3")));
        }
        if self.transition.len() != l || self.transition.iter().any(|r| r.len() != l) {
            return Err(invalid(
                "transition",
                format!("expected a {l}x{l} matrix (non-square or wrong size)"),
            ));
        }
        let rows: Vec<Vec<f64>> = self
            .transition
            .iter()
            .map(|r| r.iter().map(|&x| x as f64).collect())
            .collect();
        let mut sub = Subshift::new(&rows).map_err(|e| invalid("transition", e.to_string()))?;
        let caps = self.caps.clone().unwrap_or(Caps {
            word_cap: None,
            lmax_cap: None,
            block_limit: None,
        });
        if let Some(w) = caps.word_cap {
            if w == 0 {
                return Err(invalid("caps.word_cap", "must be positive"));
            }
            sub = sub.with_word_cap(w);
        }
        let limits = DoublingLimits {
            level_cap: caps.lmax_cap.unwrap_or(DEFAULT_LEVEL_CAP),
            block_limit: caps.block_limit.unwrap_or(DEFAULT_BLOCK_LIMIT),
        };
        if self.matrices.len() != l {
            return Err(invalid(
                "matrices",
                format!("{} matrices for {l} symbols", self.matrices.len()),
            ));
        }
        let mut mats = Vec::with_capacity(l);
        for (i, data) in self.matrices.iter().enumerate() {
            let m = SmallMat::from_row_major(u, data).ok_or_else(|| {
                invalid(
                    format!("matrices[{i}]"),
                    format!("expected {} entries, got {}", u * u, data.len()),
                )
            })?;
            MatrixCocycle::new(vec![m]).map_err(|e| invalid(format!("matrices[{i}]"), e.to_string()))?;
            mats.push(m);
        }
        let cocycle = MatrixCocycle::new(mats).map_err(|e| invalid("matrices", e.to_string()))?;
        if self.offsets.len() != l {
            return Err(invalid("offsets", format!("{} offsets for {l} symbols", self.offsets.len())));
        }
        if let Some(i) = self.offsets.iter().position(|o| o.len() != u) {
            return Err(invalid(format!("offsets[{i}]"), format!("expected {u} coordinates")));
        }
        let ambient = match (&self.box_lo, &self.box_hi) {
            (None, None) => AmbientBox::unit(u),
            (Some(lo), Some(hi)) if lo.len() == u && hi.len() == u => AmbientBox {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            _ => return Err(invalid("box_lo/box_hi", format!("give both, each with {u} coordinates"))),
        };
        let eps = EpsGrid {
            base: self.eps_base.unwrap_or(1.0 / 3.0),
            count: self.eps_count.unwrap_or(8),
        };
        let model = AffineModel::new(
            &self.name,
            sub,
            cocycle,
            self.offsets.clone(),
            ambient,
            eps,
            self.depth.unwrap_or(12),
        )
        .map_err(|e| invalid("offsets", e.to_string()))?;
        Ok(LoadedModel {
            config: self.clone(),
            model,
            limits,
        })
    }
}

/// Resolves `--model`: a builtin name, or a path to a config file.
pub fn load_model(source: &str) -> Result<LoadedModel, ConfigError> {
    if let Some(m) = bowen_core::geometry::builtin(source) {
        return ModelConfig::from_model(&m).validate();
    }
    let text = std::fs::read_to_string(source).map_err(|e| ConfigError::Io {
        path: source.to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)?.validate()
}
