//! Self-describing surrogate model artifact.
//!
//! One JSON document carrying the architecture, the normalization maps, and
//! the flattened per-layer weights (row-major, layer order), plus a format
//! version so future readers can refuse unknown layouts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use tps_core::pinn::{NetworkArchitecture, NetworkParameters, NormalizationSpec};

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub hidden: Vec<usize>,
    pub normalization: NormBlock,
    pub layers: Vec<LayerBlock>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormBlock {
    pub x_m: (f64, f64),
    pub t_s: (f64, f64),
    pub rho: (f64, f64),
    pub k: (f64, f64),
    pub cp: (f64, f64),
    pub t0_c: f64,
    pub t_scale_k: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerBlock {
    pub rows: usize,
    pub cols: usize,
    /// Row-major rows × cols weight matrix.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

pub fn save_model(
    path: &Path,
    params: &NetworkParameters,
    norm: &NormalizationSpec,
) -> CliResult<()> {
    let mut layers = Vec::new();
    for layer in params.layers() {
        let w_end = layer.w_offset + layer.out_dim * layer.in_dim;
        let b_off = layer.b_offset.expect("network layers carry biases");
        layers.push(LayerBlock {
            rows: layer.out_dim,
            cols: layer.in_dim,
            weights: params.values[layer.w_offset..w_end].to_vec(),
            bias: params.values[b_off..b_off + layer.out_dim].to_vec(),
        });
    }
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        hidden: params.arch.hidden.clone(),
        normalization: NormBlock {
            x_m: norm.x_range,
            t_s: norm.t_range,
            rho: norm.rho_range,
            k: norm.k_range,
            cp: norm.cp_range,
            t0_c: norm.t0,
            t_scale_k: norm.t_scale,
        },
        layers,
    };
    let text = serde_json::to_string(&file).expect("model serializes");
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write model {}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> CliResult<(NetworkParameters, NormalizationSpec)> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Io(format!(
            "cannot read model {}: {e}; run `tps train` first to produce one",
            path.display()
        ))
    })?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("malformed model {}: {e}", path.display())))?;
    if file.format_version != FORMAT_VERSION {
        return Err(CliError::Validation(format!(
            "model {} has format version {}, this build reads {FORMAT_VERSION}",
            path.display(),
            file.format_version
        )));
    }
    let arch = NetworkArchitecture { hidden: file.hidden };
    let mut values = Vec::new();
    for (i, layer) in file.layers.iter().enumerate() {
        if layer.weights.len() != layer.rows * layer.cols || layer.bias.len() != layer.rows {
            return Err(CliError::Validation(format!(
                "model layer {i} has inconsistent shapes ({}×{} with {} weights, {} biases)",
                layer.rows,
                layer.cols,
                layer.weights.len(),
                layer.bias.len()
            )));
        }
        values.extend_from_slice(&layer.weights);
        values.extend_from_slice(&layer.bias);
    }
    let params = NetworkParameters::from_values(arch, values)
        .map_err(|e| CliError::Validation(format!("model {}: {e}", path.display())))?;
    let n = file.normalization;
    let norm = NormalizationSpec {
        x_range: n.x_m,
        t_range: n.t_s,
        rho_range: n.rho,
        k_range: n.k,
        cp_range: n.cp,
        t0: n.t0_c,
        t_scale: n.t_scale_k,
    };
    norm.validate().map_err(|e| CliError::Validation(format!("model {}: {e}", path.display())))?;
    Ok((params, norm))
}
