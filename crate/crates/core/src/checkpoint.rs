//! Model checkpoints: a versioned JSON container holding all layer
//! parameters and the hyperparameters. Floats are written in shortest
//! round-trip form, so save/load reproduces the model exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Hyperparameters, ModelParams};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    hyper: Hyperparameters,
    params: ModelParams,
}

pub fn save_model(path: &Path, params: &ModelParams, hyper: &Hyperparameters) -> Result<()> {
    let all_finite = params.layers.iter().all(|l| {
        l.beta.iter().all(|v| v.is_finite())
            && l.heads.iter().all(|h| {
                h.weight.iter().all(|v| v.is_finite()) && h.attn.iter().all(|v| v.is_finite())
            })
    });
    if !all_finite {
        return Err(Error::Checkpoint(
            "refusing to save non-finite parameters".into(),
        ));
    }
    let checkpoint = Checkpoint {
        version: CHECKPOINT_VERSION,
        hyper: hyper.clone(),
        params: params.clone(),
    };
    let json = serde_json::to_string(&checkpoint)
        .map_err(|e| Error::Checkpoint(format!("serialize failed: {e}")))?;
    std::fs::write(path, json).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<(ModelParams, Hyperparameters)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let checkpoint: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("parse failed: {e}")))?;
    if checkpoint.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
            checkpoint.version
        )));
    }
    Ok((checkpoint.params, checkpoint.hyper))
}
