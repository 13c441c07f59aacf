//! Run configuration.
//!
//! A TOML document checked in three passes: the shipped JSON schema (types,
//! ranges, unknown keys), typed deserialization, then cross-field rules.
//! Every physical quantity carries its unit in the key name.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mergemon_core::design::JunctionDesign;
use mergemon_core::fields::{DeviceGeometry, MeshSpec, RegionRole, RegionSpec};
use mergemon_core::loss::{RadiusScaling, Scenario};

use crate::error::CliError;
use crate::schema;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub qubit: Option<QubitSection>,
    pub resonator: Option<ResonatorSection>,
    pub drive: Option<DriveSection>,
    pub dissipation: Option<DissipationSection>,
    pub geometry: Option<GeometrySection>,
    pub loss: Option<LossSection>,
    pub sweep: Option<SweepSection>,
    pub design: Option<DesignSection>,
    pub output: Option<OutputSection>,
}

/// Qubit source: `ej_ghz` + `ec_ghz`, `f01_ghz` + `anharmonicity_ghz`, or
/// neither, in which case the `[design]` section is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    pub ej_ghz: Option<f64>,
    pub ec_ghz: Option<f64>,
    pub f01_ghz: Option<f64>,
    pub anharmonicity_ghz: Option<f64>,
    #[serde(default)]
    pub ng: f64,
    #[serde(default = "default_levels")]
    pub n_levels: usize,
}

fn default_levels() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorSection {
    pub f_r_ghz: f64,
    pub g01_ghz: Option<f64>,
    /// Measured ground-state shift, used to infer `g01`.
    pub chi01_ghz: Option<f64>,
    #[serde(default = "default_fock")]
    pub n_fock: usize,
}

fn default_fock() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub f_start_ghz: f64,
    pub f_stop_ghz: f64,
    pub points: usize,
    pub powers_dbm: Vec<f64>,
    /// Pump amplitude at `ref_power_dbm`.
    pub ref_amplitude_ghz: f64,
    pub ref_power_dbm: f64,
    #[serde(default = "default_prominence")]
    pub min_prominence: f64,
}

fn default_prominence() -> f64 {
    0.005
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationSection {
    pub t1_ns: f64,
    #[serde(default)]
    pub dephasing_rate_per_ns: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub junction_radius_nm: Option<f64>,
    pub barrier_thickness_nm: Option<f64>,
    pub electrode_thickness_nm: Option<f64>,
    pub bottom_electrode_radius_nm: Option<f64>,
    pub barrier_faces: Option<u8>,
    pub domain_radius_nm: Option<f64>,
    pub domain_height_nm: Option<f64>,
    pub mesh: Option<MeshSection>,
    pub regions: Option<Vec<RegionSection>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub refinement: Option<f64>,
    pub growth: Option<f64>,
    pub max_cell_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    /// Region key: TB, TB-M, TB-V, MV, SV, MS, substrate or vacuum.
    pub role: String,
    pub epsilon: f64,
    pub thickness_nm: f64,
    pub tan_delta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    pub scenario: Option<String>,
    pub f_q_ghz: Option<f64>,
    /// Fixed participation ratios; skips the field solve.
    pub participation: Option<BTreeMap<String, f64>>,
    /// Per-region loss tangent overrides.
    pub tan_delta: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub thickness_nm: Vec<f64>,
    pub radius_nm: Vec<f64>,
    #[serde(default)]
    pub scaling: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub radius_nm: f64,
    pub barrier_thickness_nm: f64,
    pub barrier_epsilon: f64,
    pub critical_current_ua: f64,
    #[serde(default)]
    pub extra_capacitance_ff: f64,
    /// Solve for the radius giving this charging energy.
    pub target_ec_ghz: Option<f64>,
    /// Measured spectrum for the permittivity back-projection.
    pub measured_f01_ghz: Option<f64>,
    pub measured_anharmonicity_ghz: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
    #[serde(default)]
    pub field_map: bool,
}

fn invalid(key: &str, reason: &str) -> CliError {
    CliError::Config(format!("{key}: {reason}"))
}

fn missing(section: &str) -> CliError {
    CliError::Config(format!("[{section}] section is required for this command"))
}

impl RunConfig {
    /// Parse and validate a TOML document.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let value: toml::Value = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let json = serde_json::to_value(&value).map_err(|e| CliError::Config(e.to_string()))?;
        schema::check(schema::CONFIG, &json).map_err(CliError::Config)?;
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(q) = &self.qubit {
            let energies = q.ej_ghz.is_some() || q.ec_ghz.is_some();
            let observables = q.f01_ghz.is_some() || q.anharmonicity_ghz.is_some();
            if energies && observables {
                return Err(invalid(
                    "qubit",
                    "give either ej_ghz/ec_ghz or f01_ghz/anharmonicity_ghz, not both",
                ));
            }
            if energies && (q.ej_ghz.is_none() || q.ec_ghz.is_none()) {
                return Err(invalid("qubit", "ej_ghz and ec_ghz must be given together"));
            }
            if observables && (q.f01_ghz.is_none() || q.anharmonicity_ghz.is_none()) {
                return Err(invalid("qubit", "f01_ghz and anharmonicity_ghz must be given together"));
            }
            if !energies && !observables && self.design.is_none() {
                return Err(invalid(
                    "qubit",
                    "no qubit source: give energies, observables or a [design] section",
                ));
            }
            if let (Some(f01), Some(alpha)) = (q.f01_ghz, q.anharmonicity_ghz) {
                if alpha >= f01 {
                    return Err(invalid("qubit.anharmonicity_ghz", "must be below f01_ghz"));
                }
            }
        }
        if let Some(r) = &self.resonator {
            match (r.g01_ghz, r.chi01_ghz) {
                (Some(_), Some(_)) => return Err(invalid("resonator", "give g01_ghz or chi01_ghz, not both")),
                (None, None) => return Err(invalid("resonator", "one of g01_ghz or chi01_ghz is required")),
                _ => {}
            }
        }
        if let Some(d) = &self.drive {
            if d.f_stop_ghz <= d.f_start_ghz {
                return Err(invalid("drive.f_stop_ghz", "must exceed f_start_ghz"));
            }
            if d.powers_dbm.is_empty() {
                return Err(invalid("drive.powers_dbm", "must not be empty"));
            }
            let mut sorted = d.powers_dbm.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid("drive.powers_dbm", "powers must be distinct"));
            }
        }
        if let Some(g) = &self.geometry {
            if let Some(regions) = &g.regions {
                for r in regions {
                    if RegionRole::from_key(&r.role).is_none() {
                        return Err(invalid(
                            "geometry.regions.role",
                            &format!("unknown region `{}`", r.role),
                        ));
                    }
                }
            }
            self.device_geometry()?
                .validate()
                .map_err(|e| CliError::Config(format!("geometry: {e}")))?;
        }
        if let Some(l) = &self.loss {
            if let Some(s) = &l.scenario {
                parse_scenario(s)?;
            }
        }
        if let Some(s) = &self.sweep {
            if let Some(name) = &s.scaling {
                parse_scaling(name)?;
            }
        }
        Ok(())
    }

    pub fn resonator(&self) -> Result<&ResonatorSection, CliError> {
        self.resonator.as_ref().ok_or_else(|| missing("resonator"))
    }

    pub fn drive(&self) -> Result<&DriveSection, CliError> {
        self.drive.as_ref().ok_or_else(|| missing("drive"))
    }

    pub fn dissipation(&self) -> Result<&DissipationSection, CliError> {
        self.dissipation.as_ref().ok_or_else(|| missing("dissipation"))
    }

    pub fn design(&self) -> Result<&DesignSection, CliError> {
        self.design.as_ref().ok_or_else(|| missing("design"))
    }

    /// Device geometry: the published stack, overridden by `[geometry]`.
    pub fn device_geometry(&self) -> Result<DeviceGeometry, CliError> {
        let section = self.geometry.clone().unwrap_or_default();
        let regions = match &section.regions {
            Some(list) => list
                .iter()
                .map(|r| {
                    let role = RegionRole::from_key(&r.role)
                        .ok_or_else(|| invalid("geometry.regions.role", &format!("unknown region `{}`", r.role)))?;
                    Ok(RegionSpec::new(role, r.epsilon, r.thickness_nm, r.tan_delta))
                })
                .collect::<Result<Vec<_>, CliError>>()?,
            None => RegionSpec::table1(),
        };
        let radius = section
            .junction_radius_nm
            .unwrap_or(mergemon_core::fields::DEFAULT_JUNCTION_RADIUS);
        let mut g = DeviceGeometry::with_radius(radius, regions);
        if let Some(d) = section.barrier_thickness_nm {
            g = g.with_barrier(d);
        }
        if let Some(v) = section.electrode_thickness_nm {
            g.electrode_thickness = v;
        }
        if let Some(v) = section.bottom_electrode_radius_nm {
            g.bottom_electrode_radius = v;
        }
        if let Some(v) = section.barrier_faces {
            g.barrier_faces = v;
        }
        if let Some(v) = section.domain_radius_nm {
            g.domain_radius = v;
        }
        if let Some(v) = section.domain_height_nm {
            g.domain_height = v;
        }
        if let Some(m) = &section.mesh {
            let base = MeshSpec::default();
            g.mesh = MeshSpec {
                refinement: m.refinement.unwrap_or(base.refinement),
                growth: m.growth.unwrap_or(base.growth),
                max_cell_fraction: m.max_cell_fraction.unwrap_or(base.max_cell_fraction),
            };
        }
        Ok(g)
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        match self.loss.as_ref().and_then(|l| l.scenario.as_deref()) {
            Some(s) => parse_scenario(s),
            None => Ok(Scenario::Amorphous),
        }
    }

    pub fn junction_design(&self) -> Result<JunctionDesign, CliError> {
        let d = self.design()?;
        Ok(JunctionDesign {
            radius: d.radius_nm,
            barrier_thickness: d.barrier_thickness_nm,
            barrier_epsilon: d.barrier_epsilon,
            critical_current: d.critical_current_ua,
            extra_capacitance: d.extra_capacitance_ff,
        })
    }
}

pub fn parse_scenario(name: &str) -> Result<Scenario, CliError> {
    match name {
        "amorphous" => Ok(Scenario::Amorphous),
        "crystalline" => Ok(Scenario::Crystalline),
        other => Err(invalid(
            "loss.scenario",
            &format!("unknown scenario `{other}` (amorphous, crystalline)"),
        )),
    }
}

pub fn scenario_name(s: Scenario) -> &'static str {
    match s {
        Scenario::Amorphous => "amorphous",
        Scenario::Crystalline => "crystalline",
    }
}

pub fn parse_scaling(name: &str) -> Result<RadiusScaling, CliError> {
    match name {
        "independent" => Ok(RadiusScaling::Independent),
        "hold-capacitance" => Ok(RadiusScaling::HoldCapacitance),
        other => Err(invalid(
            "sweep.scaling",
            &format!("unknown scaling `{other}` (independent, hold-capacitance)"),
        )),
    }
}

pub fn scaling_name(s: RadiusScaling) -> &'static str {
    match s {
        RadiusScaling::Independent => "independent",
        RadiusScaling::HoldCapacitance => "hold-capacitance",
    }
}
