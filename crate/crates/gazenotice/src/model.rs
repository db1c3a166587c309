//! Versioned model files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use gazenotice_core::features::{FeatureSet, FeatureVector};
use gazenotice_core::learn::{ClassifierModel, Scheme, SvcParams, SvrModel, SvrParams};
use gazenotice_core::redirect::NoticeClass;

use crate::error::{Error, Result};
use crate::io::{read_json, write_json};

pub const MODEL_FORMAT: &str = "gazenotice-model";
pub const MODEL_VERSION: u32 = 1;

/// A trained model together with the parameters it was trained with, so
/// cross-validation can retrain it identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trained {
    Svr { params: SvrParams, model: SvrModel },
    Classifier { params: SvcParams, model: ClassifierModel },
}

impl Trained {
    pub fn feature_set(&self) -> FeatureSet {
        match self {
            Trained::Svr { model, .. } => model.feature_set,
            Trained::Classifier { model, .. } => model.feature_set,
        }
    }

    pub fn scheme(&self) -> Option<Scheme> {
        match self {
            Trained::Svr { .. } => None,
            Trained::Classifier { model, .. } => Some(model.scheme),
        }
    }

    /// Noticeability for a regressor, class index for a classifier.
    pub fn predict(&self, features: &FeatureVector) -> Result<f64> {
        Ok(match self {
            Trained::Svr { model, .. } => model.predict(features)?,
            Trained::Classifier { model, .. } => model.predict(features)? as f64,
        })
    }

    /// Three-level class for the redirection controller. Regressor output is
    /// binned with the three-class thresholds.
    pub fn notice_class(&self, features: &FeatureVector) -> Result<NoticeClass> {
        let index = match self {
            Trained::Svr { model, .. } => Scheme::Three.class_of(model.predict(features)?),
            Trained::Classifier { model, .. } if model.scheme == Scheme::Three => model.predict(features)?,
            Trained::Classifier { .. } => {
                return Err(Error::Usage("the controller needs a three-class classifier or a regressor".into()))
            }
        };
        Ok(NoticeClass::from_index(index).expect("three classes"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub model: Trained,
}

impl ModelFile {
    pub fn new(model: Trained) -> Self {
        ModelFile { format: MODEL_FORMAT.into(), version: MODEL_VERSION, model }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let head: serde_json::Value = read_json(path)?;
        if head.get("format").and_then(|f| f.as_str()) != Some(MODEL_FORMAT) {
            return Err(Error::schema(path, format!("not a model file (expected format \"{MODEL_FORMAT}\")")));
        }
        match head.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_VERSION as u64 => {}
            v => {
                return Err(Error::schema(
                    path,
                    format!("model version {v:?} is not supported (this build reads version {MODEL_VERSION})"),
                ))
            }
        }
        read_json(path)
    }
}
