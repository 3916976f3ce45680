use super::network::{Encoder, Network};
use super::spec::ModelSpec;
use crate::data::ScalingStats;
use crate::error::{Error, Result};
use crate::numerics::serialize::{load_tensors, save_tensors};
use crate::numerics::Tensor;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

const PARAMS: &str = "params.bin";
const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    role: String,
    spec: ModelSpec,
    stats: ScalingStats,
    objects: Vec<String>,
    layers: Vec<String>,
}

fn write(dir: &Path, role: &str, spec: &ModelSpec, stats: &ScalingStats, objects: &[String], params: Vec<(&str, &Tensor)>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    save_tensors(&dir.join(PARAMS), &params)?;
    let m = Manifest {
        role: role.into(),
        spec: spec.clone(),
        stats: stats.clone(),
        objects: objects.to_vec(),
        layers: params.iter().map(|(n, _)| n.to_string()).collect(),
    };
    std::fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

fn read(dir: &Path, role: &str) -> Result<(Network, Vec<String>)> {
    let m: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST))?)?;
    if m.role != role {
        return Err(Error::Data(format!("bundle holds a {}, expected a {role}", m.role)));
    }
    let state: BTreeMap<String, Tensor> = load_tensors(&dir.join(PARAMS))?.into_iter().collect();
    if m.layers.iter().any(|l| !state.contains_key(l)) {
        return Err(Error::Data("parameter file does not match its manifest".into()));
    }
    let mut net = Network::new(&m.spec, m.objects.len(), m.stats)?;
    if role == "encoder" {
        let mut full = net.state();
        full.extend(state);
        net.load_state(&full)?;
    } else {
        net.load_state(&state)?;
    }
    Ok((net, m.objects))
}

/// Write parameters and a JSON manifest (spec, scaling stats, vocabulary).
pub fn save_bundle(dir: &Path, net: &Network, objects: &[String]) -> Result<()> {
    let params = net.params().into_iter().map(|p| (p.name.as_str(), &p.value)).collect();
    write(dir, "model", &net.spec, &net.stats, objects, params)
}

pub fn load_bundle(dir: &Path) -> Result<(Network, Vec<String>)> {
    read(dir, "model")
}

pub fn save_encoder(dir: &Path, enc: &Encoder, objects: &[String]) -> Result<()> {
    let params = enc.params().into_iter().map(|p| (p.name.as_str(), &p.value)).collect();
    write(dir, "encoder", &enc.spec, &enc.stats, objects, params)
}

pub fn load_encoder(dir: &Path) -> Result<(Encoder, Vec<String>)> {
    let (net, objects) = read(dir, "encoder")?;
    Ok((Encoder::from_network(net)?, objects))
}
