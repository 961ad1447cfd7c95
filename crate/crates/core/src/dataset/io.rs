use std::collections::BTreeMap;
use std::path::Path;

use super::{Dataset, DatasetError, Manifest, Record, SpectrumUnit};
use crate::container::{self, ContainerError, Header};
use crate::scatter::SpectralGrid;

pub const DATASET_MAGIC: &str = "NLD1";

const PARAM_PREFIX: &str = "param.";

pub(crate) fn manifest_header(m: &Manifest) -> Header {
    let mut h = Header::new();
    h.push("num_layers", m.num_layers);
    h.push("count", m.count);
    h.push_f64("lambda_min", m.grid.lambda_min());
    h.push_f64("lambda_max", m.grid.lambda_max());
    h.push("n_points", m.grid.len());
    h.push("materials", m.materials.join(","));
    h.push_f64("host_index", m.host_index);
    h.push("seed", m.seed);
    h.push("unit", m.unit.as_str());
    h.push_f64s("bounds", &[m.bounds.0, m.bounds.1]);
    for (k, v) in &m.params {
        h.push(&format!("{PARAM_PREFIX}{k}"), v);
    }
    h
}

pub(crate) fn manifest_from_header(h: &Header) -> Result<Manifest, ContainerError> {
    let bad = |what: &str| ContainerError::Header(format!("invalid {what}"));
    let grid = SpectralGrid::new(h.parse("lambda_min")?, h.parse("lambda_max")?, h.parse("n_points")?)
        .map_err(|_| bad("spectral grid"))?;
    let materials: Vec<String> = h.parse_list("materials")?;
    let materials: [String; 2] = materials.try_into().map_err(|_| bad("materials"))?;
    let bounds: Vec<f64> = h.parse_list("bounds")?;
    if bounds.len() != 2 {
        return Err(bad("bounds"));
    }
    let unit = SpectrumUnit::parse(h.get("unit")?).ok_or_else(|| bad("unit"))?;
    let params: BTreeMap<String, String> = h
        .entries()
        .iter()
        .filter_map(|(k, v)| k.strip_prefix(PARAM_PREFIX).map(|k| (k.to_string(), v.clone())))
        .collect();
    Ok(Manifest {
        num_layers: h.parse("num_layers")?,
        grid,
        materials,
        host_index: h.parse("host_index")?,
        seed: h.parse("seed")?,
        unit,
        bounds: (bounds[0], bounds[1]),
        count: h.parse("count")?,
        params,
    })
}

pub fn encode_dataset(ds: &Dataset) -> Vec<u8> {
    let mut payload = Vec::with_capacity(ds.len() * (ds.num_layers() + ds.n_points()));
    for r in &ds.records {
        payload.extend_from_slice(&r.thicknesses);
        payload.extend_from_slice(&r.spectrum);
    }
    container::encode(DATASET_MAGIC, &manifest_header(&ds.manifest), &payload)
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset, DatasetError> {
    let (header, payload) = container::decode(DATASET_MAGIC, bytes)?;
    let manifest = manifest_from_header(&header)?;
    let width = manifest.num_layers + manifest.grid.len();
    if payload.len() != manifest.count * width {
        return Err(ContainerError::Truncated {
            expected: manifest.count * width * 8,
            found: payload.len() * 8,
        }
        .into());
    }
    let records = payload
        .chunks_exact(width)
        .map(|c| Record {
            thicknesses: c[..manifest.num_layers].to_vec(),
            spectrum: c[manifest.num_layers..].to_vec(),
        })
        .collect();
    Dataset::new(manifest, records)
}

/// Writes to a sibling temporary file first, so a failed save never leaves a partial file.
pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<(), DatasetError> {
    write_atomic(path, &encode_dataset(ds))?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    decode_dataset(&std::fs::read(path)?)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}
