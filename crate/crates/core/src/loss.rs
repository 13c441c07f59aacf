//! Dielectric-loss lifetime budgets: `T1 = 1 / (2π f_q sum_n p_n tanδ_n)`.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::{self, DeviceGeometry, Participation, RegionRole, RegionSpec};
use crate::math;

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// Qubit frequency the published budget is evaluated at (GHz).
pub const DESIGN_FREQUENCY: f64 = 5.0;
/// Measured qubit frequency (GHz).
pub const MEASURED_FREQUENCY: f64 = 4.475;

/// Published participation ratios of the amorphous-silicon device.
pub const TABLE1_PARTICIPATION: [(&str, f64); 7] = [
    ("TB", 7.01e-1),
    ("TB-M", 2.94e-1),
    ("TB-V", 8.03e-5),
    ("MV", 2.66e-3),
    ("SV", 5.55e-7),
    ("MS", 5.73e-7),
    ("substrate", 1.28e-4),
];

/// Published per-region lifetimes (µs).
pub const TABLE1_T1_US: [(&str, f64); 7] = [
    ("TB", 9.08e-2),
    ("TB-M", 2.17e-2),
    ("TB-V", 7.93e-1),
    ("MV", 5.45e1),
    ("SV", 3.37e4),
    ("MS", 1.16e5),
    ("substrate", 9.56e5),
];

pub const CRYSTALLINE_TAN_DELTA: f64 = 1e-7;
/// `tanδ_TB-M / tanδ_TB`.
pub const METAL_INTERFACE_FACTOR: f64 = 10.0;
/// `tanδ_TB-V / tanδ_TB`.
pub const VACUUM_INTERFACE_FACTOR: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LossRow {
    pub name: String,
    pub participation: f64,
    pub tan_delta: f64,
    /// Lifetime if this region were the only loss (µs); infinite when lossless.
    pub t1_us: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossBudget {
    /// Qubit frequency (GHz).
    pub f_q: f64,
    pub rows: Vec<LossRow>,
    pub t1_total_us: f64,
}

impl LossBudget {
    /// `sum_n p_n tanδ_n`.
    pub fn loss_sum(&self) -> f64 {
        self.rows.iter().map(|r| r.participation * r.tan_delta).sum()
    }

    pub fn row(&self, name: &str) -> Option<&LossRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

fn lifetime_us(f_q: f64, loss: f64) -> f64 {
    if loss > 0.0 {
        1e-3 / (TWO_PI * f_q * loss)
    } else {
        f64::INFINITY
    }
}

/// Lifetime budget from participation ratios and loss tangents, both keyed
/// by region name. Vacuum is lossless and left out.
pub fn t1_budget(participation: &[(String, f64)], tan_deltas: &[(String, f64)], f_q: f64) -> Result<LossBudget> {
    if !(f_q.is_finite() && f_q > 0.0) {
        return Err(Error::invalid("f_q", "must be positive"));
    }
    let mut rows = Vec::with_capacity(participation.len());
    for (name, p) in participation {
        if name == RegionRole::Vacuum.key() {
            continue;
        }
        if !(p.is_finite() && *p >= 0.0) {
            return Err(Error::invalid("participation", "must be non-negative"));
        }
        let mut matches = tan_deltas.iter().filter(|(n, _)| n == name);
        let tan_delta = match (matches.next(), matches.next()) {
            (Some(_), Some(_)) => return Err(Error::invalid("tan_delta", "region listed twice")),
            (Some((_, t)), None) if t.is_finite() && *t >= 0.0 => *t,
            (Some(_), None) => return Err(Error::invalid("tan_delta", "must be non-negative")),
            (None, _) if *p > 0.0 => return Err(Error::MissingLossTangent(name.clone())),
            (None, _) => continue,
        };
        rows.push(LossRow {
            name: name.clone(),
            participation: *p,
            tan_delta,
            t1_us: lifetime_us(f_q, p * tan_delta),
        });
    }
    let mut budget = LossBudget {
        f_q,
        rows,
        t1_total_us: 0.0,
    };
    budget.t1_total_us = lifetime_us(f_q, budget.loss_sum());
    Ok(budget)
}

/// Published participation ratios as owned pairs.
pub fn table1_participation() -> Vec<(String, f64)> {
    TABLE1_PARTICIPATION
        .iter()
        .map(|&(n, p)| (String::from(n), p))
        .collect()
}

/// Loss tangents of a region list.
pub fn tangents_of(regions: &[RegionSpec]) -> Vec<(String, f64)> {
    regions.iter().map(|r| (r.name.clone(), r.tan_delta)).collect()
}

pub fn participation_pairs(list: &[Participation]) -> Vec<(String, f64)> {
    list.iter().map(|p| (p.name.clone(), p.ratio)).collect()
}

/// Barrier, barrier-metal and barrier-vacuum tangents replaced by the
/// crystalline values; the rest unchanged.
pub fn crystalline_tangents(base: &[(String, f64)]) -> Vec<(String, f64)> {
    base.iter()
        .map(|(name, t)| {
            let v = match RegionRole::from_key(name) {
                Some(RegionRole::Barrier) => CRYSTALLINE_TAN_DELTA,
                Some(RegionRole::BarrierMetal) => METAL_INTERFACE_FACTOR * CRYSTALLINE_TAN_DELTA,
                Some(RegionRole::BarrierVacuum) => VACUUM_INTERFACE_FACTOR * CRYSTALLINE_TAN_DELTA,
                _ => *t,
            };
            (name.clone(), v)
        })
        .collect()
}

/// Budget with crystalline barrier tangents.
pub fn crystalline_scenario(
    participation: &[(String, f64)],
    base_tangents: &[(String, f64)],
    f_q: f64,
) -> Result<LossBudget> {
    t1_budget(participation, &crystalline_tangents(base_tangents), f_q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Tangents as configured (amorphous barrier).
    Amorphous,
    Crystalline,
}

impl Scenario {
    pub fn tangents(self, base: &[(String, f64)]) -> Vec<(String, f64)> {
        match self {
            Scenario::Amorphous => base.to_vec(),
            Scenario::Crystalline => crystalline_tangents(base),
        }
    }
}

/// How the junction radius axis of a sweep is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusScaling {
    /// Radius and barrier thickness vary independently.
    Independent,
    /// The radius is the value at the base barrier thickness; at other
    /// thicknesses it is rescaled so the stack capacitance stays fixed.
    HoldCapacitance,
}

/// Default sweep axes (nm).
pub const DEFAULT_SWEEP_THICKNESS: [f64; 5] = [9.0, 20.0, 50.0, 100.0, 200.0];
pub const DEFAULT_SWEEP_RADIUS: [f64; 5] = [2_000.0, 5_000.0, 10_000.0, 20_000.0, 40_000.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub d_nm: f64,
    /// Radius actually simulated (nm).
    pub r_nm: f64,
    pub t1_us: f64,
}

fn stack_weight(g: &DeviceGeometry, d: f64) -> f64 {
    let eps_tb = g.region(RegionRole::Barrier).map_or(1.0, |r| r.epsilon);
    let face = g
        .region(RegionRole::BarrierMetal)
        .map_or(0.0, |r| r.thickness / r.epsilon);
    d / eps_tb + g.barrier_faces as f64 * face
}

/// Device simulated at grid point `(d, r)`.
pub fn sweep_geometry(base: &DeviceGeometry, d: f64, r: f64, scaling: RadiusScaling) -> DeviceGeometry {
    let radius = match scaling {
        RadiusScaling::Independent => r,
        RadiusScaling::HoldCapacitance => {
            r * math::sqrt(stack_weight(base, d) / stack_weight(base, base.barrier_thickness))
        }
    };
    base.rescaled(radius).with_barrier(d)
}

/// Solve one sweep point.
pub fn sweep_point(
    base: &DeviceGeometry,
    d: f64,
    r: f64,
    scaling: RadiusScaling,
    tangents: &[(String, f64)],
    f_q: f64,
) -> Result<SweepPoint> {
    let g = sweep_geometry(base, d, r, scaling);
    fields::simulate(&g)
        .and_then(|p| t1_budget(&participation_pairs(&p), tangents, f_q))
        .map(|b| SweepPoint {
            d_nm: d,
            r_nm: g.junction_radius,
            t1_us: b.t1_total_us,
        })
        .map_err(|e| Error::GeometryPoint {
            d_nm: d,
            r_nm: r,
            source: Box::new(e),
        })
}

/// Sequential sweep, barrier thickness outermost.
pub fn geometry_sweep(
    base: &DeviceGeometry,
    d_range: &[f64],
    r_range: &[f64],
    scaling: RadiusScaling,
    scenario: Scenario,
    f_q: f64,
) -> Result<Vec<SweepPoint>> {
    if d_range.is_empty() || r_range.is_empty() {
        return Err(Error::invalid("sweep", "ranges must not be empty"));
    }
    let tangents = scenario.tangents(&tangents_of(&base.regions));
    let mut out = Vec::with_capacity(d_range.len() * r_range.len());
    for &d in d_range {
        for &r in r_range {
            out.push(sweep_point(base, d, r, scaling, &tangents, f_q)?);
        }
    }
    Ok(out)
}
