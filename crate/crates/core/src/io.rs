//! JSON file formats: `*.state.json` (amplitude lists), `*.instr.json`
//! (per-party Kraus operators), `*.pmf.json` (probability lists). All
//! numbers are decimal floats; outcome tuples use 0-based party order with
//! party 0 most significant, matching the in-memory index convention.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::LocalInstrument;
use crate::pmf::JointPmf;
use crate::state::{CMatrix, PartyLayout, PureState};

const FILE_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmplitudeEntry {
    pub index: Vec<usize>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// On-disk pure state: explicit nonzero amplitudes over a layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSpecFile {
    pub dims: Vec<usize>,
    pub amplitudes: Vec<AmplitudeEntry>,
    /// When true the amplitudes are rescaled to unit norm; otherwise the
    /// norm must already be 1 within 1e-6.
    #[serde(default)]
    pub normalize: bool,
}

impl StateSpecFile {
    pub fn from_state(psi: &PureState) -> StateSpecFile {
        let layout = psi.layout();
        let amplitudes = psi
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(i, a)| AmplitudeEntry {
                index: layout.tuple_of(i),
                re: a.re,
                im: a.im,
            })
            .collect();
        StateSpecFile {
            dims: layout.dims().to_vec(),
            amplitudes,
            normalize: false,
        }
    }

    pub fn build(&self) -> Result<PureState> {
        if self.dims.len() < 2 {
            return Err(Error::InvalidFile(
                "state file needs at least two parties".into(),
            ));
        }
        let layout = PartyLayout::new(self.dims.clone())?;
        let mut amps = vec![Complex64::new(0.0, 0.0); layout.total_dim()];
        let mut seen = vec![false; layout.total_dim()];
        for e in &self.amplitudes {
            if e.index.len() != self.dims.len() {
                return Err(Error::InvalidFile(format!(
                    "index {:?} has {} entries, expected {}",
                    e.index,
                    e.index.len(),
                    self.dims.len()
                )));
            }
            for (p, (&x, &d)) in e.index.iter().zip(&self.dims).enumerate() {
                if x >= d {
                    return Err(Error::InvalidFile(format!(
                        "index {:?} out of range at party {p} (dim {d})",
                        e.index
                    )));
                }
            }
            let flat = layout.index_of(&e.index);
            if seen[flat] {
                return Err(Error::InvalidFile(format!(
                    "duplicate amplitude index {:?}",
                    e.index
                )));
            }
            seen[flat] = true;
            amps[flat] = Complex64::new(e.re, e.im);
        }
        if self.normalize {
            PureState::normalized(layout, amps)
        } else {
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > FILE_NORM_TOL {
                return Err(Error::InvalidFile(format!(
                    "amplitudes have norm {norm}; set normalize=true to rescale"
                )));
            }
            PureState::normalized(layout, amps)
        }
    }
}

/// One Kraus operator: a complex matrix as real and imaginary row-major
/// parts (rows = out-dim, cols = in-dim). `im` defaults to zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrausEntry {
    pub outcome: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

/// Per-party instrument description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartyInstrumentSpec {
    /// `"trivial"` (identity, single outcome) or `"measure-computational"`.
    Named(String),
    Kraus { kraus: Vec<KrausEntry> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstrumentSpecFile {
    pub parties: Vec<PartyInstrumentSpec>,
}

impl InstrumentSpecFile {
    /// Builds the per-party instruments against a state layout (needed to
    /// size the named variants).
    pub fn build(&self, layout: &PartyLayout) -> Result<Vec<LocalInstrument>> {
        if self.parties.len() != layout.parties() {
            return Err(Error::InvalidFile(format!(
                "{} party instruments for {} parties",
                self.parties.len(),
                layout.parties()
            )));
        }
        self.parties
            .iter()
            .enumerate()
            .map(|(p, spec)| match spec {
                PartyInstrumentSpec::Named(name) => match name.as_str() {
                    "trivial" => Ok(LocalInstrument::trivial(p, layout.dim(p))),
                    "measure-computational" => {
                        Ok(LocalInstrument::computational(p, layout.dim(p)))
                    }
                    other => Err(Error::InvalidFile(format!(
                        "unknown instrument name {other:?} for party {p} \
                         (expected \"trivial\" or \"measure-computational\")"
                    ))),
                },
                PartyInstrumentSpec::Kraus { kraus } => {
                    let ops: Result<Vec<(usize, CMatrix)>> = kraus
                        .iter()
                        .map(|k| Ok((k.outcome, kraus_matrix(k, p, layout.dim(p))?)))
                        .collect();
                    LocalInstrument::from_kraus(p, ops?)
                }
            })
            .collect()
    }
}

fn kraus_matrix(entry: &KrausEntry, party: usize, in_dim: usize) -> Result<CMatrix> {
    let rows = entry.re.len();
    if rows == 0 {
        return Err(Error::InvalidFile(format!(
            "party {party}: empty Kraus matrix"
        )));
    }
    let cols = entry.re[0].len();
    if entry.re.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidFile(format!(
            "party {party}: ragged Kraus matrix"
        )));
    }
    if cols != in_dim {
        return Err(Error::DimMismatch {
            party,
            expected: in_dim,
            got: cols,
        });
    }
    let im = match &entry.im {
        Some(im) => {
            if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                return Err(Error::InvalidFile(format!(
                    "party {party}: im part has a different shape than re"
                )));
            }
            Some(im)
        }
        None => None,
    };
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        Complex64::new(entry.re[i][j], im.map_or(0.0, |m| m[i][j]))
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmfEntry {
    pub index: Vec<usize>,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmfFile {
    pub dims: Vec<usize>,
    pub entries: Vec<PmfEntry>,
}

impl PmfFile {
    pub fn from_pmf(pmf: &JointPmf) -> PmfFile {
        PmfFile {
            dims: pmf.sizes().to_vec(),
            entries: pmf
                .support()
                .into_iter()
                .map(|(index, probability)| PmfEntry { index, probability })
                .collect(),
        }
    }

    pub fn build(&self) -> Result<JointPmf> {
        let total: usize = self.dims.iter().product();
        if self.dims.is_empty() || total == 0 {
            return Err(Error::InvalidFile("pmf needs nonempty dims".into()));
        }
        let mut probs = vec![0.0; total];
        let mut seen = vec![false; total];
        for e in &self.entries {
            if e.index.len() != self.dims.len()
                || e.index.iter().zip(&self.dims).any(|(&x, &d)| x >= d)
            {
                return Err(Error::InvalidFile(format!(
                    "pmf index {:?} out of range",
                    e.index
                )));
            }
            let mut flat = 0;
            for (i, &x) in e.index.iter().enumerate() {
                flat = flat * self.dims[i] + x;
            }
            if seen[flat] {
                return Err(Error::InvalidFile(format!(
                    "duplicate pmf index {:?}",
                    e.index
                )));
            }
            seen[flat] = true;
            probs[flat] = e.probability;
        }
        JointPmf::new(self.dims.clone(), probs)
    }
}

pub fn load_state(path: &Path) -> Result<PureState> {
    let text = std::fs::read_to_string(path)?;
    let spec: StateSpecFile = serde_json::from_str(&text)?;
    spec.build()
}

pub fn save_state(path: &Path, psi: &PureState) -> Result<()> {
    let spec = StateSpecFile::from_state(psi);
    std::fs::write(path, serde_json::to_string_pretty(&spec)?)?;
    Ok(())
}

pub fn load_instruments(path: &Path, layout: &PartyLayout) -> Result<Vec<LocalInstrument>> {
    let text = std::fs::read_to_string(path)?;
    let spec: InstrumentSpecFile = serde_json::from_str(&text)?;
    spec.build(layout)
}

pub fn load_pmf(path: &Path) -> Result<JointPmf> {
    let text = std::fs::read_to_string(path)?;
    let spec: PmfFile = serde_json::from_str(&text)?;
    spec.build()
}

pub fn save_pmf(path: &Path, pmf: &JointPmf) -> Result<()> {
    let spec = PmfFile::from_pmf(pmf);
    std::fs::write(path, serde_json::to_string_pretty(&spec)?)?;
    Ok(())
}
