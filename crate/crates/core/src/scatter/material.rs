use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::ScatterError;

/// Tabulated complex refractive index of one material, linearly interpolated
/// in real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialTable {
    name: String,
    samples: Vec<(f64, Complex64)>,
}

impl MaterialTable {
    pub fn new(name: impl Into<String>, samples: Vec<(f64, Complex64)>) -> Result<Self, ScatterError> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) || name.contains(',') {
            return Err(ScatterError::Argument(format!("invalid material name {name:?}")));
        }
        if samples.is_empty() {
            return Err(ScatterError::Argument(format!("material {name} has no samples")));
        }
        for (i, &(wl, n)) in samples.iter().enumerate() {
            if !wl.is_finite() || wl <= 0.0 || !n.re.is_finite() || !n.im.is_finite() {
                return Err(ScatterError::Argument(format!(
                    "material {name}: non-finite or nonpositive sample at row {i}"
                )));
            }
            if n.im < 0.0 {
                return Err(ScatterError::Argument(format!(
                    "material {name}: negative imaginary index at {wl} nm"
                )));
            }
            if i > 0 && wl <= samples[i - 1].0 {
                return Err(ScatterError::Argument(format!(
                    "material {name}: wavelengths must be strictly increasing (row {i})"
                )));
            }
        }
        Ok(Self { name, samples })
    }

    /// Nondispersive table spanning `[lo, hi]` nm.
    pub fn constant(name: impl Into<String>, index: Complex64, lo: f64, hi: f64) -> Result<Self, ScatterError> {
        Self::new(name, vec![(lo, index), (hi, index)])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &[(f64, Complex64)] {
        &self.samples
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    pub fn refractive_index(&self, wavelength: f64) -> Result<Complex64, ScatterError> {
        let (lo, hi) = self.domain();
        if !(wavelength >= lo && wavelength <= hi) {
            return Err(ScatterError::Domain {
                material: self.name.clone(),
                wavelength,
            });
        }
        let upper = self.samples.partition_point(|&(wl, _)| wl < wavelength);
        let (w1, n1) = self.samples[upper];
        if w1 == wavelength || upper == 0 {
            return Ok(n1);
        }
        let (w0, n0) = self.samples[upper - 1];
        let t = (wavelength - w0) / (w1 - w0);
        Ok(n0 + (n1 - n0) * t)
    }

    /// Parses the plain-text table format:
    ///
    /// ```text
    /// # material TiO2
    /// 400  2.40  0.0
    /// 800  2.40  0.0
    /// ```
    pub fn parse(text: &str) -> Result<Self, ScatterError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(ScatterError::Parse {
            line: 1,
            msg: "empty material file".into(),
        })?;
        let name = header
            .trim()
            .strip_prefix('#')
            .map(str::trim)
            .and_then(|h| h.strip_prefix("material"))
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .ok_or(ScatterError::Parse {
                line: 1,
                msg: "expected header `# material <name>`".into(),
            })?;
        let mut samples = Vec::new();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_err = |msg: &str| ScatterError::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            if fields.len() != 3 {
                return Err(parse_err("expected `wavelength_nm n_real n_imag`"));
            }
            let vals: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            let vals = vals.map_err(|_| parse_err("malformed number"))?;
            samples.push((vals[0], Complex64::new(vals[1], vals[2])));
        }
        Self::new(name, samples)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ScatterError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# material {}\n", self.name);
        for (wl, n) in &self.samples {
            let _ = writeln!(s, "{wl:?} {:?} {:?}", n.re, n.im);
        }
        s
    }
}

/// Named set of material tables.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialLibrary {
    tables: BTreeMap<String, MaterialTable>,
}

pub const SILICA: &str = "SiO2";
pub const TITANIA: &str = "TiO2";

impl Default for MaterialLibrary {
    /// Lossless, nondispersive silica (1.45) and titania (2.40) over 300–900 nm.
    fn default() -> Self {
        let mut lib = Self::empty();
        lib.insert(MaterialTable::constant(SILICA, Complex64::new(1.45, 0.0), 300.0, 900.0).unwrap());
        lib.insert(MaterialTable::constant(TITANIA, Complex64::new(2.40, 0.0), 300.0, 900.0).unwrap());
        lib
    }
}

impl MaterialLibrary {
    pub fn empty() -> Self {
        Self { tables: BTreeMap::new() }
    }

    /// Adds or replaces a table.
    pub fn insert(&mut self, table: MaterialTable) {
        self.tables.insert(table.name.clone(), table);
    }

    pub fn get(&self, name: &str) -> Result<&MaterialTable, ScatterError> {
        self.tables
            .get(name)
            .ok_or_else(|| ScatterError::UnknownMaterial(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    pub fn refractive_index(&self, name: &str, wavelength: f64) -> Result<Complex64, ScatterError> {
        self.get(name)?.refractive_index(wavelength)
    }
}
