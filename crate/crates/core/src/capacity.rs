//! Capacity estimates for silicon and neural systems.
//!
//! Logic contributes `bits_per_transistor / 8` bytes per transistor per clock;
//! memory contributes its capacity per clock. A synapse contributes its
//! descriptor size per firing. Rates are in bytes per second.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("no subsystems given")]
    Empty,
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("{0} must be non-negative")]
    Negative(&'static str),
    #[error("invalid case study: {0}")]
    Schema(String),
    #[error("unknown case study {0:?}")]
    Unknown(String),
    #[error("quantity {0:?} is not defined for this case study")]
    MissingQuantity(String),
}

/// Reference rate for the decibel scale.
pub const DB_REFERENCE: f64 = 1e12;

fn default_bits_per_transistor() -> f64 {
    8.0
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SiliconSubsystem {
    Logic {
        #[serde(default)]
        label: String,
        transistor_count: f64,
        #[serde(default = "default_bits_per_transistor")]
        bits_per_transistor: f64,
        #[serde(default = "one")]
        units: f64,
        clock_hz: f64,
    },
    Memory {
        #[serde(default)]
        label: String,
        capacity_bytes: f64,
        #[serde(default = "one")]
        units: f64,
        clock_hz: f64,
    },
}

impl SiliconSubsystem {
    pub fn is_logic(&self) -> bool {
        matches!(self, SiliconSubsystem::Logic { .. })
    }

    /// Bytes per second contributed by this subsystem.
    pub fn rate(&self) -> Result<f64, CapacityError> {
        let (bytes, units, clock) = match *self {
            SiliconSubsystem::Logic {
                transistor_count,
                bits_per_transistor,
                units,
                clock_hz,
                ..
            } => {
                if bits_per_transistor < 0.0 {
                    return Err(CapacityError::Negative("bits_per_transistor"));
                }
                (transistor_count * bits_per_transistor / 8.0, units, clock_hz)
            }
            SiliconSubsystem::Memory {
                capacity_bytes,
                units,
                clock_hz,
                ..
            } => (capacity_bytes, units, clock_hz),
        };
        if !(bytes > 0.0) {
            return Err(CapacityError::NotPositive("subsystem size"));
        }
        if !(units > 0.0) {
            return Err(CapacityError::NotPositive("units"));
        }
        if !(clock > 0.0) {
            return Err(CapacityError::NotPositive("clock_hz"));
        }
        Ok(bytes * units * clock)
    }
}

/// Total rate of a system.
pub fn silicon_capacity(subsystems: &[SiliconSubsystem]) -> Result<f64, CapacityError> {
    if subsystems.is_empty() {
        return Err(CapacityError::Empty);
    }
    subsystems.iter().map(SiliconSubsystem::rate).sum()
}

/// `10·log10(rate / 1e12)`.
pub fn db_scale(rate: f64) -> Result<f64, CapacityError> {
    if !(rate > 0.0) {
        return Err(CapacityError::NotPositive("rate"));
    }
    Ok(10.0 * (rate / DB_REFERENCE).log10())
}

pub fn rate_from_db(db: f64) -> f64 {
    DB_REFERENCE * 10f64.powf(db / 10.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynapsePopulation {
    pub synapse_count: f64,
    pub origin_bits: f64,
    pub position_bits: f64,
    pub pre_state_bits: f64,
    pub post_state_bits: f64,
    pub timing_bits: f64,
    /// Equivalent action-table bytes of a dynamic synapse; zero when static.
    #[serde(default)]
    pub dynamic_complexity_bytes: f64,
    pub rate_hz: f64,
    /// Byte count used in published arithmetic, when it differs from `bits/8`.
    #[serde(default)]
    pub rounded_descriptor_bytes: Option<f64>,
}

impl SynapsePopulation {
    fn validate(&self) -> Result<(), CapacityError> {
        for (v, name) in [
            (self.synapse_count, "synapse_count"),
            (self.origin_bits, "origin_bits"),
            (self.position_bits, "position_bits"),
            (self.pre_state_bits, "pre_state_bits"),
            (self.post_state_bits, "post_state_bits"),
            (self.timing_bits, "timing_bits"),
            (self.dynamic_complexity_bytes, "dynamic_complexity_bytes"),
        ] {
            if !(v >= 0.0) {
                return Err(CapacityError::Negative(name));
            }
        }
        if !(self.rate_hz > 0.0) {
            return Err(CapacityError::NotPositive("rate_hz"));
        }
        Ok(())
    }
}

/// Bits needed to describe one synapse.
pub fn synapse_descriptor_bits(p: &SynapsePopulation) -> f64 {
    p.origin_bits
        + p.position_bits
        + p.pre_state_bits
        + p.post_state_bits
        + p.timing_bits
        + 8.0 * p.dynamic_complexity_bytes
}

/// Bytes per synapse, exact or as rounded in published figures.
pub fn descriptor_bytes(p: &SynapsePopulation, published_rounding: bool) -> f64 {
    match (published_rounding, p.rounded_descriptor_bytes) {
        (true, Some(b)) => b,
        _ => synapse_descriptor_bits(p) / 8.0,
    }
}

pub fn neural_capacity(p: &SynapsePopulation, published_rounding: bool) -> Result<f64, CapacityError> {
    p.validate()?;
    Ok(p.synapse_count * descriptor_bytes(p, published_rounding) * p.rate_hz)
}

pub fn workload_total(rate: f64, duration_seconds: f64) -> Result<f64, CapacityError> {
    if !(rate >= 0.0) {
        return Err(CapacityError::Negative("rate"));
    }
    if !(duration_seconds >= 0.0) {
        return Err(CapacityError::Negative("duration"));
    }
    Ok(rate * duration_seconds)
}

pub fn keys_per_second(device_rate: f64, per_key_cost: f64) -> Result<f64, CapacityError> {
    if !(per_key_cost > 0.0) {
        return Err(CapacityError::NotPositive("per_key_cost"));
    }
    Ok(device_rate / per_key_cost)
}

/// A dedicated search circuit: `units` parallel units sharing `transistors`,
/// each testing a key every `cycles_per_key` clocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeySearch {
    pub cycles_per_key: f64,
    pub transistors: f64,
    pub units_per_chip: f64,
    #[serde(default = "default_bits_per_transistor")]
    pub bits_per_transistor: f64,
}

impl KeySearch {
    /// Bytes of work spent per key.
    pub fn per_key_bytes(&self) -> Result<f64, CapacityError> {
        if !(self.units_per_chip > 0.0) {
            return Err(CapacityError::NotPositive("units_per_chip"));
        }
        Ok(self.cycles_per_key * self.transistors * self.bits_per_transistor / 8.0 / self.units_per_chip)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Published {
    pub quantity: String,
    pub value: f64,
    /// Allowed relative error.
    #[serde(default)]
    pub relative: Option<f64>,
    /// Allowed absolute error.
    #[serde(default)]
    pub absolute: Option<f64>,
    /// Allowed error in powers of ten.
    #[serde(default)]
    pub decades: Option<f64>,
    /// Set when the published value does not follow from its stated inputs.
    #[serde(default)]
    pub discrepancy: Option<String>,
}

impl Published {
    pub fn matches(&self, computed: f64) -> bool {
        if let Some(a) = self.absolute {
            return (computed - self.value).abs() <= a;
        }
        if let Some(d) = self.decades {
            return computed > 0.0 && (computed / self.value).log10().abs() <= d;
        }
        let tol = self.relative.unwrap_or(0.10);
        ((computed - self.value) / self.value).abs() <= tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseStudy {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub subsystems: Vec<SiliconSubsystem>,
    #[serde(default)]
    pub population: Option<SynapsePopulation>,
    /// Number of identical systems running together.
    #[serde(default = "one")]
    pub machines: f64,
    #[serde(default)]
    pub duration_seconds: Option<f64>,
    /// Quantity whose rate feeds the workload; the total rate when absent.
    #[serde(default)]
    pub workload_source: Option<String>,
    #[serde(default)]
    pub key_search: Option<KeySearch>,
    #[serde(default)]
    pub published: Vec<Published>,
}

const FIXTURES: [(&str, &str); 9] = [
    ("amd64_x2", include_str!("../fixtures/capacity/amd64_x2.json")),
    ("ibm_pc", include_str!("../fixtures/capacity/ibm_pc.json")),
    (
        "geforce_8800gt",
        include_str!("../fixtures/capacity/geforce_8800gt.json"),
    ),
    (
        "pentium_ii_1998",
        include_str!("../fixtures/capacity/pentium_ii_1998.json"),
    ),
    (
        "eff_des_cracker",
        include_str!("../fixtures/capacity/eff_des_cracker.json"),
    ),
    (
        "human_brain_static",
        include_str!("../fixtures/capacity/human_brain_static.json"),
    ),
    (
        "human_brain_dynamic",
        include_str!("../fixtures/capacity/human_brain_dynamic.json"),
    ),
    ("c_elegans", include_str!("../fixtures/capacity/c_elegans.json")),
    ("human_neuron", include_str!("../fixtures/capacity/human_neuron.json")),
];

pub fn case_study_names() -> impl Iterator<Item = &'static str> {
    FIXTURES.iter().map(|(n, _)| *n)
}

/// A bundled case study by name.
pub fn case_study(name: &str) -> Result<CaseStudy, CapacityError> {
    let (_, text) = FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CapacityError::Unknown(name.to_string()))?;
    CaseStudy::from_json(text)
}

pub fn case_studies() -> Vec<CaseStudy> {
    FIXTURES
        .iter()
        .map(|(_, t)| CaseStudy::from_json(t).expect("bundled fixture parses"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub quantity: String,
    pub published: f64,
    pub computed: f64,
    pub matches: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityReport {
    pub name: String,
    pub quantities: BTreeMap<String, f64>,
    pub comparisons: Vec<Comparison>,
}

impl CaseStudy {
    pub fn from_json(text: &str) -> Result<Self, CapacityError> {
        serde_json::from_str(text).map_err(|e| CapacityError::Schema(e.to_string()))
    }

    /// Every quantity this case study defines.
    pub fn quantities(&self, published_rounding: bool) -> Result<BTreeMap<String, f64>, CapacityError> {
        let mut q = BTreeMap::new();
        if !self.subsystems.is_empty() {
            let sum = |logic: bool| -> Result<f64, CapacityError> {
                self.subsystems
                    .iter()
                    .filter(|s| s.is_logic() == logic)
                    .map(SiliconSubsystem::rate)
                    .sum()
            };
            let logic = sum(true)?;
            let memory = sum(false)?;
            let total = silicon_capacity(&self.subsystems)?;
            q.insert("logic_rate".into(), logic);
            q.insert("memory_rate".into(), memory);
            q.insert("total_rate".into(), total);
            q.insert("db".into(), db_scale(total)?);
        }
        if let Some(p) = &self.population {
            let rate = neural_capacity(p, published_rounding)?;
            q.insert("descriptor_bits".into(), synapse_descriptor_bits(p));
            q.insert("descriptor_bytes".into(), descriptor_bytes(p, published_rounding));
            q.insert(
                "state_bytes".into(),
                p.synapse_count * descriptor_bytes(p, published_rounding),
            );
            q.insert("rate".into(), rate);
            q.insert("db".into(), db_scale(rate)?);
        }
        if let Some(k) = &self.key_search {
            q.insert("per_key_bytes".into(), k.per_key_bytes()?);
        }
        if let Some(d) = self.duration_seconds {
            let source = self.workload_source.as_deref().unwrap_or("total_rate");
            let rate = *q
                .get(source)
                .ok_or_else(|| CapacityError::MissingQuantity(source.to_string()))?;
            if !(self.machines > 0.0) {
                return Err(CapacityError::NotPositive("machines"));
            }
            q.insert("fleet_rate".into(), rate * self.machines);
            q.insert("workload_bytes".into(), workload_total(rate * self.machines, d)?);
        }
        Ok(q)
    }

    pub fn report(&self, published_rounding: bool) -> Result<CapacityReport, CapacityError> {
        let quantities = self.quantities(published_rounding)?;
        let comparisons = self
            .published
            .iter()
            .map(|p| {
                let computed = *quantities
                    .get(&p.quantity)
                    .ok_or_else(|| CapacityError::MissingQuantity(p.quantity.clone()))?;
                Ok(Comparison {
                    quantity: p.quantity.clone(),
                    published: p.value,
                    computed,
                    matches: p.matches(computed),
                    discrepancy: p.discrepancy.clone(),
                })
            })
            .collect::<Result<Vec<_>, CapacityError>>()?;
        Ok(CapacityReport {
            name: self.name.clone(),
            quantities,
            comparisons,
        })
    }
}

impl CapacityReport {
    pub fn csv_header() -> &'static str {
        "case,quantity,published,computed,matches,discrepancy\n"
    }

    pub fn to_csv_rows(&self) -> String {
        let mut out = String::new();
        for c in &self.comparisons {
            out.push_str(&format!(
                "{},{},{:e},{:e},{},{}\n",
                self.name,
                c.quantity,
                c.published,
                c.computed,
                c.matches,
                c.discrepancy.is_some()
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.name);
        for (k, v) in &self.quantities {
            out.push_str(&format!("  {k:<16} {v:.4e}\n"));
        }
        for c in &self.comparisons {
            let mark = match (c.matches, c.discrepancy.is_some()) {
                (true, _) => "ok",
                (false, true) => "discrepancy",
                (false, false) => "MISMATCH",
            };
            out.push_str(&format!(
                "  published {:<16} {:.3e} computed {:.3e} {mark}\n",
                c.quantity, c.published, c.computed
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        ((a - b) / b).abs() <= tol
    }

    #[test]
    fn db_reference_points() {
        assert_eq!(db_scale(1e12).unwrap(), 0.0);
        assert!((db_scale(1e18).unwrap() - 60.0).abs() < 1e-12);
        assert!(db_scale(0.0).is_err());
        assert!(close(rate_from_db(db_scale(3.7e15).unwrap()), 3.7e15, 1e-12));
    }

    #[test]
    fn descriptor_sums() {
        let s = case_study("human_brain_static").unwrap().population.unwrap();
        assert_eq!(synapse_descriptor_bits(&s), 53.0);
        let c = case_study("c_elegans").unwrap().population.unwrap();
        assert_eq!(synapse_descriptor_bits(&c), 22.0);
        let zero = SynapsePopulation {
            origin_bits: 0.0,
            position_bits: 0.0,
            pre_state_bits: 0.0,
            post_state_bits: 0.0,
            timing_bits: 0.0,
            ..s
        };
        assert_eq!(synapse_descriptor_bits(&zero), 0.0);
    }

    #[test]
    fn silicon_examples() {
        let amd = case_study("amd64_x2").unwrap().quantities(false).unwrap();
        assert!(close(amd["logic_rate"], 3e17, 1e-12));
        assert!(close(amd["memory_rate"], 8e17, 1e-12));
        assert!(silicon_capacity(&[]).is_err());
    }

    #[test]
    fn keys_and_workload() {
        let eff = case_study("eff_des_cracker").unwrap().quantities(false).unwrap();
        assert!(close(eff["per_key_bytes"], 6.7e3, 0.01));
        assert!(keys_per_second(1.0, 0.0).is_err());
        assert_eq!(workload_total(5.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn all_fixtures_load() {
        assert_eq!(case_studies().len(), 9);
        for c in case_studies() {
            c.report(true).unwrap();
        }
        assert!(case_study("nope").is_err());
    }
}
