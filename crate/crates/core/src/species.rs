//! Atomic-structure data for a single ion species.
//!
//! Species files are JSON documents. Half-integer quantum numbers are stored
//! doubled (`S2`, `J2`) so that every key and value stays an integer. Energies
//! are in cm⁻¹ above the ground level; all derived frequencies are SI angular
//! frequencies.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angular::TensorTable;
use crate::constants::{wavenumber_to_angular, AMU};

#[derive(Debug, Error)]
pub enum SpeciesError {
    #[error("cannot read species file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("species file does not parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("missing required level {0}")]
    MissingLevel(String),
    #[error("unknown level {0}")]
    UnknownLevel(String),
    #[error("m_J = {two_m}/2 is not a sublevel of {level} (J = {two_j}/2)")]
    BadSublevel { level: String, two_j: u32, two_m: i32 },
    #[error("unknown bundled species {0:?}; expected one of ca40, sr88, ba138, ra226")]
    UnknownBundled(String),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> SpeciesError {
    SpeciesError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Labels every species must provide.
pub const REQUIRED_LEVELS: [&str; 5] = ["S1/2", "P1/2", "P3/2", "D3/2", "D5/2"];

/// A fine-structure level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub label: String,
    #[serde(rename = "L")]
    pub l: u32,
    /// Twice the electronic spin.
    #[serde(rename = "S2")]
    pub two_s: u32,
    /// Twice the total angular momentum.
    #[serde(rename = "J2")]
    pub two_j: u32,
    pub energy_cm: f64,
}

impl Level {
    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn s(&self) -> f64 {
        self.two_s as f64 / 2.0
    }

    /// Number of Zeeman sublevels, 2J + 1.
    pub fn multiplicity(&self) -> usize {
        self.two_j as usize + 1
    }
}

/// An electric-dipole transition with its spontaneous emission rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub upper: String,
    pub lower: String,
    #[serde(rename = "A_per_s")]
    pub a_per_s: f64,
}

#[derive(Serialize, Deserialize)]
struct SpeciesFile {
    name: String,
    mass_amu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
    levels: Vec<Level>,
    transitions: Vec<Transition>,
    metastable_decay: BTreeMap<String, f64>,
}

/// A validated, immutable species record.
#[derive(Debug)]
pub struct SpeciesData {
    pub name: String,
    pub mass_amu: f64,
    pub provenance: Option<String>,
    pub levels: Vec<Level>,
    pub dipole_transitions: Vec<Transition>,
    /// Total spontaneous decay rate of each D level, s⁻¹.
    pub metastable_decay: BTreeMap<String, f64>,
    tensors: OnceLock<TensorTable>,
}

impl Clone for SpeciesData {
    fn clone(&self) -> Self {
        SpeciesData {
            name: self.name.clone(),
            mass_amu: self.mass_amu,
            provenance: self.provenance.clone(),
            levels: self.levels.clone(),
            dipole_transitions: self.dipole_transitions.clone(),
            metastable_decay: self.metastable_decay.clone(),
            tensors: OnceLock::new(),
        }
    }
}

impl PartialEq for SpeciesData {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.mass_amu == other.mass_amu
            && self.levels == other.levels
            && self.dipole_transitions == other.dipole_transitions
            && self.metastable_decay == other.metastable_decay
    }
}

/// A Zeeman sublevel of a level of a particular species.
///
/// `level` indexes [`SpeciesData::levels`]; `two_m` is twice m_J.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SublevelRef {
    pub level: usize,
    pub two_m: i32,
}

/// The two qubit states of one ion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QubitSpec {
    pub down: SublevelRef,
    pub up: SublevelRef,
}

/// Label-based form of a qubit choice, as used in config files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitLabels {
    /// (level label, 2·m_J)
    pub down: (String, i32),
    pub up: (String, i32),
}

impl Default for QubitLabels {
    fn default() -> Self {
        QubitLabels {
            down: ("S1/2".into(), 1),
            up: ("D5/2".into(), 3),
        }
    }
}

impl SpeciesData {
    pub fn from_json_str(text: &str) -> Result<Self, SpeciesError> {
        let raw: SpeciesFile = serde_json::from_str(text)?;
        Self::from_file(raw)
    }

    fn from_file(raw: SpeciesFile) -> Result<Self, SpeciesError> {
        let species = SpeciesData {
            name: raw.name,
            mass_amu: raw.mass_amu,
            provenance: raw.provenance,
            levels: raw.levels,
            dipole_transitions: raw.transitions,
            metastable_decay: raw.metastable_decay,
            tensors: OnceLock::new(),
        };
        species.validate()?;
        Ok(species)
    }

    /// Serializes back to the species-file schema.
    pub fn to_json(&self) -> String {
        let raw = SpeciesFile {
            name: self.name.clone(),
            mass_amu: self.mass_amu,
            provenance: self.provenance.clone(),
            levels: self.levels.clone(),
            transitions: self.dipole_transitions.clone(),
            metastable_decay: self.metastable_decay.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("species data always serializes")
    }

    /// One of the four bundled species: `ca40`, `sr88`, `ba138`, `ra226`.
    /// Element symbols and ion names (`Ca`, `Ca+`, `40Ca+`) are accepted too.
    pub fn bundled(name: &str) -> Result<Self, SpeciesError> {
        let key = name.trim().trim_end_matches('+').to_ascii_lowercase();
        let text = match key.as_str() {
            "ca40" | "ca" | "40ca" => include_str!("../data/ca40.json"),
            "sr88" | "sr" | "88sr" => include_str!("../data/sr88.json"),
            "ba138" | "ba" | "138ba" => include_str!("../data/ba138.json"),
            "ra226" | "ra" | "226ra" => include_str!("../data/ra226.json"),
            _ => return Err(SpeciesError::UnknownBundled(name.to_string())),
        };
        Self::from_json_str(text)
    }

    /// A bundled species name or a path to a species file.
    pub fn resolve(name_or_path: &str) -> Result<Self, SpeciesError> {
        match Self::bundled(name_or_path) {
            Ok(s) => Ok(s),
            Err(SpeciesError::UnknownBundled(_)) if Path::new(name_or_path).exists() => load_species(name_or_path),
            Err(e) => Err(e),
        }
    }

    fn validate(&self) -> Result<(), SpeciesError> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if !(self.mass_amu.is_finite() && self.mass_amu > 0.0) {
            return Err(invalid("mass_amu", "must be positive and finite"));
        }
        for (i, lv) in self.levels.iter().enumerate() {
            let field = format!("levels[{i}] ({})", lv.label);
            if self.levels[..i].iter().any(|o| o.label == lv.label) {
                return Err(invalid(field, "duplicate label"));
            }
            if lv.two_s != 1 {
                return Err(invalid(field, "electronic spin must be 1/2 (S2 = 1)"));
            }
            if lv.two_j == 0 {
                return Err(invalid(field, "J must be positive"));
            }
            let lo = (2 * lv.l as i64 - lv.two_s as i64).unsigned_abs() as u32;
            let hi = 2 * lv.l + lv.two_s;
            if lv.two_j < lo || lv.two_j > hi || (lv.two_j + lv.two_s) % 2 != 0 {
                return Err(invalid(field, format!("J = {}/2 violates |L-S| <= J <= L+S", lv.two_j)));
            }
            if !(lv.energy_cm.is_finite() && lv.energy_cm >= 0.0) {
                return Err(invalid(field, "energy must be finite and >= 0"));
            }
        }
        for label in REQUIRED_LEVELS {
            if !self.levels.iter().any(|l| l.label == label) {
                return Err(SpeciesError::MissingLevel(label.to_string()));
            }
        }
        let ground = &self.levels[self.level_index("S1/2")?];
        if ground.energy_cm != 0.0 {
            return Err(invalid("levels (S1/2)", "ground level must have energy 0"));
        }
        if let Some(lv) = self.levels.iter().find(|l| l.energy_cm < ground.energy_cm) {
            return Err(invalid(
                format!("levels ({})", lv.label),
                "lies below the S1/2 ground level",
            ));
        }

        for (i, t) in self.dipole_transitions.iter().enumerate() {
            let field = format!("transitions[{i}] ({} -> {})", t.upper, t.lower);
            let up = self
                .level_by_label(&t.upper)
                .ok_or_else(|| invalid(&field, format!("unknown upper level {}", t.upper)))?;
            let low = self
                .level_by_label(&t.lower)
                .ok_or_else(|| invalid(&field, format!("unknown lower level {}", t.lower)))?;
            if !(t.a_per_s.is_finite() && t.a_per_s > 0.0) {
                return Err(invalid(field, "A must be positive and finite"));
            }
            if up.energy_cm <= low.energy_cm {
                return Err(invalid(field, "upper level must lie above lower level"));
            }
            let dl = (up.l as i64 - low.l as i64).abs();
            if dl != 1 {
                return Err(invalid(
                    field,
                    format!("not electric-dipole allowed: |dL| = {dl}, need 1"),
                ));
            }
            let two_dj = (up.two_j as i64 - low.two_j as i64).abs();
            if two_dj > 2 {
                return Err(invalid(
                    field,
                    format!(
                        "not electric-dipole allowed: |dJ| <= 1 violated with dJ = {}",
                        two_dj / 2
                    ),
                ));
            }
            if self.dipole_transitions[..i]
                .iter()
                .any(|o| o.upper == t.upper && o.lower == t.lower)
            {
                return Err(invalid(field, "duplicate transition"));
            }
        }

        for lv in self.levels.iter().filter(|l| l.l == 2) {
            match self.metastable_decay.get(&lv.label) {
                Some(a) if a.is_finite() && *a >= 0.0 => {}
                Some(_) => {
                    return Err(invalid(
                        format!("metastable_decay ({})", lv.label),
                        "rate must be finite and >= 0",
                    ))
                }
                None => {
                    return Err(invalid(
                        "metastable_decay",
                        format!("missing entry for D level {}", lv.label),
                    ))
                }
            }
        }
        for key in self.metastable_decay.keys() {
            match self.level_by_label(key) {
                Some(lv) if lv.l == 2 => {}
                _ => {
                    return Err(invalid(
                        "metastable_decay",
                        format!("{key} is not a D level of this species"),
                    ))
                }
            }
        }
        Ok(())
    }

    fn level_by_label(&self, label: &str) -> Option<&Level> {
        self.levels.iter().find(|l| l.label == label)
    }

    pub fn level_index(&self, label: &str) -> Result<usize, SpeciesError> {
        self.levels
            .iter()
            .position(|l| l.label == label)
            .ok_or_else(|| SpeciesError::UnknownLevel(label.to_string()))
    }

    pub fn level(&self, label: &str) -> Result<&Level, SpeciesError> {
        self.level_index(label).map(|i| &self.levels[i])
    }

    /// Ion mass in kg.
    pub fn mass_kg(&self) -> f64 {
        self.mass_amu * AMU
    }

    /// Builds a sublevel reference, checking |m| <= J and m ≡ J (mod 1).
    pub fn sublevel(&self, label: &str, two_m: i32) -> Result<SublevelRef, SpeciesError> {
        let idx = self.level_index(label)?;
        let lv = &self.levels[idx];
        let two_j = lv.two_j as i32;
        if two_m.abs() > two_j || (two_j - two_m) % 2 != 0 {
            return Err(SpeciesError::BadSublevel {
                level: label.to_string(),
                two_j: lv.two_j,
                two_m,
            });
        }
        Ok(SublevelRef { level: idx, two_m })
    }

    /// All Zeeman sublevels of a level, m ascending.
    pub fn sublevels_of(&self, level: usize) -> impl Iterator<Item = SublevelRef> + '_ {
        let two_j = self.levels[level].two_j as i32;
        (-two_j..=two_j)
            .step_by(2)
            .map(move |two_m| SublevelRef { level, two_m })
    }

    /// Indices of the P (L = 1) levels, which act as the intermediate states.
    pub fn intermediate_levels(&self) -> impl Iterator<Item = usize> + '_ {
        self.levels.iter().enumerate().filter(|(_, l)| l.l == 1).map(|(i, _)| i)
    }

    /// Indices of the S and D levels, which can be initial or final scattering states.
    pub fn long_lived_levels(&self) -> impl Iterator<Item = usize> + '_ {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.l == 0 || l.l == 2)
            .map(|(i, _)| i)
    }

    /// A coefficient of the listed transition `upper → lower`, if any.
    pub fn einstein_a(&self, upper: usize, lower: usize) -> Option<f64> {
        let (u, l) = (&self.levels[upper].label, &self.levels[lower].label);
        self.dipole_transitions
            .iter()
            .find(|t| &t.upper == u && &t.lower == l)
            .map(|t| t.a_per_s)
    }

    /// Whether `upper → lower` is electric-dipole allowed by the selection rules.
    pub fn dipole_allowed(&self, upper: usize, lower: usize) -> bool {
        let (u, l) = (&self.levels[upper], &self.levels[lower]);
        (u.l as i64 - l.l as i64).abs() == 1 && (u.two_j as i64 - l.two_j as i64).abs() <= 2
    }

    /// Signed angular transition frequency ω_ab = ω_a − ω_b by level index.
    pub fn omega(&self, a: usize, b: usize) -> f64 {
        wavenumber_to_angular(self.levels[a].energy_cm - self.levels[b].energy_cm)
    }

    /// Total decay rate A_D of a D level.
    pub fn metastable_rate(&self, level: usize) -> Option<f64> {
        self.metastable_decay.get(&self.levels[level].label).copied()
    }

    pub fn label(&self, s: SublevelRef) -> SublevelLabel<'_> {
        SublevelLabel {
            level: &self.levels[s.level].label,
            two_m: s.two_m,
        }
    }

    /// The qubit used throughout: S1/2(m = +1/2) and D5/2(m = +3/2).
    pub fn standard_qubit(&self) -> QubitSpec {
        self.qubit(&QubitLabels::default())
            .expect("every validated species has S1/2 and D5/2")
    }

    /// Resolves a label-based qubit choice against this species.
    pub fn qubit(&self, labels: &QubitLabels) -> Result<QubitSpec, SpeciesError> {
        let down = self.sublevel(&labels.down.0, labels.down.1)?;
        let up = self.sublevel(&labels.up.0, labels.up.1)?;
        if self.levels[down.level].l != 0 {
            return Err(invalid("qubit.down", "must be an S1/2 sublevel"));
        }
        if self.levels[up.level].l != 2 {
            return Err(invalid("qubit.up", "must be a D-level sublevel"));
        }
        Ok(QubitSpec { down, up })
    }

    pub(crate) fn tensor_table(&self) -> &TensorTable {
        self.tensors.get_or_init(|| TensorTable::build(self))
    }
}

/// Display helper, e.g. `D5/2(+3/2)`.
pub struct SublevelLabel<'a> {
    level: &'a str,
    two_m: i32,
}

impl fmt::Display for SublevelLabel<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({:+}/2)", self.level, self.two_m)
    }
}

/// Reads and validates a species file.
pub fn load_species(path: impl AsRef<Path>) -> Result<SpeciesData, SpeciesError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SpeciesError::Io {
        path: path.display().to_string(),
        source,
    })?;
    SpeciesData::from_json_str(&text)
}

/// Signed transition angular frequency ω_ab = 2πc·(E_a − E_b)·100, rad/s.
pub fn transition_frequency(s: &SpeciesData, a: &str, b: &str) -> Result<f64, SpeciesError> {
    let (ia, ib) = (s.level_index(a)?, s.level_index(b)?);
    Ok(s.omega(ia, ib))
}
