//! Oracle-generated (stack → spectrum) corpora: sampling, generation,
//! splitting, normalization and persistence.

mod io;
mod normalize;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::scatter::{LayerStack, Oracle, ScatterError, SpectralGrid, DESIGN_BOX, SILICA, TITANIA};

pub use io::{decode_dataset, encode_dataset, load_dataset, save_dataset, write_atomic, DATASET_MAGIC};
pub use normalize::Normalizer;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("oracle failed on record {index}: {source}")]
    Oracle {
        index: usize,
        #[source]
        source: ScatterError,
    },
    #[error("cannot normalize: {0}")]
    Normalization(String),
    #[error(transparent)]
    Format(#[from] crate::container::ContainerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How spectrum values are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumUnit {
    /// Scattering cross-section, nm².
    CrossSection,
    /// Cross-section divided by the geometric cross-section of the outer sphere.
    Efficiency,
}

impl SpectrumUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumUnit::CrossSection => "nm2",
            SpectrumUnit::Efficiency => "efficiency",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nm2" => Some(SpectrumUnit::CrossSection),
            "efficiency" => Some(SpectrumUnit::Efficiency),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub num_layers: usize,
    pub grid: SpectralGrid,
    pub materials: [String; 2],
    pub host_index: f64,
    pub seed: u64,
    pub unit: SpectrumUnit,
    pub bounds: (f64, f64),
    pub count: usize,
    /// Free-form provenance (e.g. which split this is).
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub thicknesses: Vec<f64>,
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(manifest: Manifest, records: Vec<Record>) -> Result<Self, DatasetError> {
        if manifest.count != records.len() {
            return Err(DatasetError::Argument(format!(
                "manifest count {} but {} records",
                manifest.count,
                records.len()
            )));
        }
        for (i, r) in records.iter().enumerate() {
            if r.thicknesses.len() != manifest.num_layers || r.spectrum.len() != manifest.grid.len() {
                return Err(DatasetError::Argument(format!("record {i} has inconsistent dimensions")));
            }
        }
        Ok(Self { manifest, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_layers(&self) -> usize {
        self.manifest.num_layers
    }

    pub fn n_points(&self) -> usize {
        self.manifest.grid.len()
    }

    pub fn stack(&self, i: usize) -> Result<LayerStack, ScatterError> {
        LayerStack::new(self.records[i].thicknesses.clone(), self.manifest.materials.clone())
    }

    /// Same manifest (with an updated count and extra provenance), subset of records.
    fn subset(&self, indices: &[usize], role: &str, extra: &[(&str, String)]) -> Dataset {
        let mut manifest = self.manifest.clone();
        manifest.count = indices.len();
        manifest.params.insert("split".into(), role.into());
        for (k, v) in extra {
            manifest.params.insert((*k).into(), v.clone());
        }
        Dataset {
            manifest,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }
}

/// Random stream dedicated to one record: a function of `(seed, index)` only.
pub fn record_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Thicknesses i.i.d. uniform on `bounds`, silica/titania alternating.
pub fn sample_stack(seed: u64, index: u64, num_layers: usize, bounds: (f64, f64)) -> Result<LayerStack, DatasetError> {
    let t = sample_thicknesses(seed, index, num_layers, bounds)?;
    LayerStack::silica_titania(t).map_err(|e| DatasetError::Argument(e.to_string()))
}

pub fn sample_thicknesses(seed: u64, index: u64, num_layers: usize, bounds: (f64, f64)) -> Result<Vec<f64>, DatasetError> {
    let (lo, hi) = bounds;
    if num_layers == 0 {
        return Err(DatasetError::Argument("num_layers must be at least 1".into()));
    }
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || lo > hi {
        return Err(DatasetError::Argument(format!("invalid thickness bounds [{lo}, {hi}]")));
    }
    let mut rng = record_rng(seed, index);
    Ok((0..num_layers).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationParams {
    pub count: usize,
    pub num_layers: usize,
    pub bounds: (f64, f64),
    pub seed: u64,
    pub unit: SpectrumUnit,
    /// Core material first, then alternating.
    pub materials: [String; 2],
}

impl GenerationParams {
    pub fn new(count: usize, num_layers: usize, seed: u64) -> Self {
        Self {
            count,
            num_layers,
            bounds: DESIGN_BOX,
            seed,
            unit: SpectrumUnit::CrossSection,
            materials: [SILICA.to_string(), TITANIA.to_string()],
        }
    }
}

/// Record `i` is `sample_stack(seed, i)` pushed through the oracle. Records are computed on
/// the current rayon pool and gathered in index order.
pub fn generate_dataset(params: &GenerationParams, oracle: &Oracle) -> Result<Dataset, DatasetError> {
    if params.count == 0 {
        return Err(DatasetError::Argument("count must be at least 1".into()));
    }
    // Validate arguments once up front so the parallel loop only sees oracle errors.
    sample_thicknesses(params.seed, 0, params.num_layers, params.bounds)?;
    LayerStack::new(vec![1.0], params.materials.clone()).map_err(|e| DatasetError::Argument(e.to_string()))?;
    let records = (0..params.count)
        .into_par_iter()
        .map(|i| {
            let t = sample_thicknesses(params.seed, i as u64, params.num_layers, params.bounds)?;
            let stack = LayerStack::new(t, params.materials.clone())
                .map_err(|e| DatasetError::Argument(e.to_string()))?;
            let spectrum = oracle
                .spectrum(&stack)
                .map_err(|source| DatasetError::Oracle { index: i, source })?;
            let mut values = spectrum.into_values();
            if params.unit == SpectrumUnit::Efficiency {
                let area = std::f64::consts::PI * stack.outer_radius().powi(2);
                values.iter_mut().for_each(|v| *v /= area);
            }
            Ok(Record {
                thicknesses: stack.thicknesses().to_vec(),
                spectrum: values,
            })
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    let mut extra = BTreeMap::new();
    extra.insert("generator".into(), "oracle".into());
    Dataset::new(
        Manifest {
            num_layers: params.num_layers,
            grid: oracle.grid,
            materials: params.materials.clone(),
            host_index: oracle.host_index,
            seed: params.seed,
            unit: params.unit,
            bounds: params.bounds,
            count: params.count,
            params: extra,
        },
        records,
    )
}

/// Train/validation/test fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.90,
            val: 0.05,
            test: 0.05,
        }
    }
}

/// Sizes are `floor(n * train)`, `floor(n * val)` and the remainder.
pub fn split_sizes(n: usize, fr: SplitFractions) -> Result<(usize, usize, usize), DatasetError> {
    let parts = [fr.train, fr.val, fr.test];
    if parts.iter().any(|f| !(*f > 0.0) || !f.is_finite()) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(DatasetError::Argument(format!(
            "split fractions must be positive and sum to 1, got {parts:?}"
        )));
    }
    // Guard against products like 0.29 * 100 = 28.999999999999996.
    let floor = |f: f64| ((n as f64) * f + 1e-9).floor() as usize;
    let train = floor(fr.train).min(n);
    let val = floor(fr.val).min(n - train);
    let test = n - train - val;
    if train == 0 || val == 0 || test == 0 {
        return Err(DatasetError::Argument(format!(
            "split of {n} records into {train}/{val}/{test} leaves an empty part"
        )));
    }
    Ok((train, val, test))
}

/// Seeded shuffle, then contiguous train/val/test blocks.
pub fn split_dataset(
    ds: &Dataset,
    fractions: SplitFractions,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset), DatasetError> {
    let (n_train, n_val, _) = split_sizes(ds.len(), fractions)?;
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let extra = [
        ("split_seed", seed.to_string()),
        (
            "split_fractions",
            format!("{:?},{:?},{:?}", fractions.train, fractions.val, fractions.test),
        ),
    ];
    Ok((
        ds.subset(&order[..n_train], "train", &extra),
        ds.subset(&order[n_train..n_train + n_val], "val", &extra),
        ds.subset(&order[n_train + n_val..], "test", &extra),
    ))
}
