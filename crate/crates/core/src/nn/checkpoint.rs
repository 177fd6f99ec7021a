//! Checkpoints: a directory holding `manifest.json` and one HRT1 tensor per
//! weight array (`out*in x 3 x 3`) and bias vector (`1 x 1 x out`).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::conv::ConvParams;
use super::network::{Network, NetworkSpec, Parameters};
use crate::error::{Error, Result};
use crate::image::{read_tensor, write_tensor, FeatureMap};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize, Deserialize)]
struct Manifest {
    input_size: usize,
    n: usize,
    scale_x: f64,
    width_divisor: usize,
    layers: Vec<LayerEntry>,
}

#[derive(Serialize, Deserialize)]
struct LayerEntry {
    in_channels: usize,
    out_channels: usize,
    weights: String,
    bias: String,
}

/// Tensors are stored as `f32`, so loaded parameters are rounded.
pub fn save_checkpoint(dir: impl AsRef<Path>, net: &Network, params: &Parameters) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let spec = net.spec();
    let mut layers = Vec::new();
    for (k, p) in params.convs.iter().enumerate() {
        let entry = LayerEntry {
            in_channels: p.in_channels,
            out_channels: p.out_channels,
            weights: format!("conv{k:02}_weights.hrt"),
            bias: format!("conv{k:02}_bias.hrt"),
        };
        let w = FeatureMap::from_vec(p.out_channels * p.in_channels, 3, 3, p.weights.clone())?;
        let b = FeatureMap::from_vec(1, 1, p.out_channels, p.bias.clone())?;
        write_tensor(&w, dir.join(&entry.weights))?;
        write_tensor(&b, dir.join(&entry.bias))?;
        layers.push(entry);
    }
    let manifest = Manifest {
        input_size: spec.input_size,
        n: spec.n,
        scale_x: spec.scale_x,
        width_divisor: spec.width_divisor,
        layers,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn load_checkpoint(dir: impl AsRef<Path>) -> Result<(Network, Parameters)> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::format("manifest", e.to_string()))?;
    let net = Network::new(NetworkSpec {
        input_size: m.input_size,
        n: m.n,
        scale_x: m.scale_x,
        width_divisor: m.width_divisor,
    })?;
    let mut convs = Vec::with_capacity(m.layers.len());
    for entry in &m.layers {
        let w = read_tensor(dir.join(&entry.weights))?;
        let b = read_tensor(dir.join(&entry.bias))?;
        if w.shape() != (entry.out_channels * entry.in_channels, 3, 3) || b.shape() != (1, 1, entry.out_channels) {
            return Err(Error::format("manifest", format!("tensor shapes disagree with layer {}", entry.weights)));
        }
        convs.push(ConvParams {
            in_channels: entry.in_channels,
            out_channels: entry.out_channels,
            weights: w.into_values(),
            bias: b.into_values(),
        });
    }
    let params = Parameters { convs };
    let expected = net.init_params(0);
    if expected.convs.len() != params.convs.len()
        || expected
            .convs
            .iter()
            .zip(&params.convs)
            .any(|(a, b)| (a.in_channels, a.out_channels) != (b.in_channels, b.out_channels))
    {
        return Err(Error::format("manifest", "layer widths do not match the network spec"));
    }
    Ok((net, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::build_network;

    #[test]
    fn round_trip_rounds_to_f32() {
        let dir = tempfile::tempdir().unwrap();
        let (net, params) = build_network(NetworkSpec::reduced(16, 13, 1.0), 2).unwrap();
        save_checkpoint(dir.path(), &net, &params).unwrap();
        let (net2, back) = load_checkpoint(dir.path()).unwrap();
        assert_eq!(net2.spec(), net.spec());
        for (a, b) in params.iter().zip(back.iter()) {
            assert_eq!(*b, *a as f32 as f64);
        }
    }

    #[test]
    fn corrupt_manifest_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(MANIFEST_FILE), "{").unwrap();
        assert!(matches!(load_checkpoint(dir.path()), Err(Error::Format { .. })));
    }
}
