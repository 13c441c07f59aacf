//! Junction geometry to circuit parameters.
//!
//! `C_J = ε0 ε_r π r^2 / d`, `E_C = e^2 / 2C`, `E_J = φ0 I_c` with
//! `φ0 = ħ/2e`. Energies are returned as frequencies (GHz).

use crate::consts::{ELEMENTARY_CHARGE, PLANCK, REDUCED_FLUX_QUANTUM, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};
use crate::math;
use crate::qubit::TransmonParams;

const PI: f64 = core::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionDesign {
    /// Junction radius (nm).
    pub radius: f64,
    /// Barrier thickness (nm).
    pub barrier_thickness: f64,
    pub barrier_epsilon: f64,
    /// Critical current (µA).
    pub critical_current: f64,
    /// Capacitance in parallel with the junction (fF).
    pub extra_capacitance: f64,
}

impl JunctionDesign {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.radius) {
            return Err(Error::invalid("radius", "must be positive"));
        }
        if !positive(self.barrier_thickness) {
            return Err(Error::invalid("barrier_thickness", "must be positive"));
        }
        if !positive(self.barrier_epsilon) {
            return Err(Error::invalid("barrier_epsilon", "must be positive"));
        }
        if !positive(self.critical_current) {
            return Err(Error::invalid("critical_current", "must be positive"));
        }
        if !(self.extra_capacitance.is_finite() && self.extra_capacitance >= 0.0) {
            return Err(Error::invalid("extra_capacitance", "must be non-negative"));
        }
        Ok(())
    }

    pub fn total_capacitance(&self) -> Result<f64> {
        Ok(junction_capacitance(self)? + self.extra_capacitance)
    }
}

fn plate_capacitance(radius: f64, thickness: f64, epsilon: f64) -> f64 {
    // nm^2 / nm = 1e-9 m, F -> fF
    VACUUM_PERMITTIVITY * epsilon * PI * radius * radius / thickness * 1e-9 * 1e15
}

/// Parallel-plate junction capacitance (fF).
pub fn junction_capacitance(design: &JunctionDesign) -> Result<f64> {
    design.validate()?;
    Ok(plate_capacitance(
        design.radius,
        design.barrier_thickness,
        design.barrier_epsilon,
    ))
}

/// `E_C/h` (GHz) of a capacitance in fF.
pub fn charging_energy(capacitance_ff: f64) -> f64 {
    let c = capacitance_ff * 1e-15;
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * c * PLANCK) * 1e-9
}

/// Capacitance (fF) with charging energy `ec` (GHz).
pub fn capacitance_for(ec: f64) -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * ec * 1e9 * PLANCK) * 1e15
}

/// `E_J/h = φ0 I_c / h` (GHz) of a critical current in µA.
pub fn josephson_energy(critical_current_ua: f64) -> f64 {
    REDUCED_FLUX_QUANTUM * critical_current_ua * 1e-6 / PLANCK * 1e-9
}

/// Critical current (µA) with Josephson energy `ej` (GHz).
pub fn critical_current_for(ej: f64) -> f64 {
    ej * 1e9 * PLANCK / REDUCED_FLUX_QUANTUM * 1e6
}

/// Zero-bias Josephson inductance `φ0 / I_c` (nH).
pub fn josephson_inductance(critical_current_ua: f64) -> f64 {
    REDUCED_FLUX_QUANTUM / (critical_current_ua * 1e-6) * 1e9
}

/// Transmon parameters of a junction design, at zero offset charge.
pub fn circuit_parameters(design: &JunctionDesign) -> Result<TransmonParams> {
    let c = design.total_capacitance()?;
    TransmonParams::new(josephson_energy(design.critical_current), charging_energy(c))
}

/// Junction radius (nm) giving charging energy `ec`, with the remaining
/// design fields held fixed.
pub fn radius_for_charging_energy(ec: f64, design: &JunctionDesign) -> Result<f64> {
    if !(ec.is_finite() && ec > 0.0) {
        return Err(Error::invalid("ec", "must be positive"));
    }
    let junction = capacitance_for(ec) - design.extra_capacitance;
    if !(junction > 0.0) {
        return Err(Error::Domain("extra capacitance alone exceeds the target".into()));
    }
    let unit = plate_capacitance(1.0, design.barrier_thickness, design.barrier_epsilon);
    Ok(math::sqrt(junction / unit))
}

/// Barrier permittivity that reproduces charging energy `ec` at the
/// design's geometry.
pub fn permittivity_for_charging_energy(ec: f64, design: &JunctionDesign) -> Result<f64> {
    if !(ec.is_finite() && ec > 0.0) {
        return Err(Error::invalid("ec", "must be positive"));
    }
    let junction = capacitance_for(ec) - design.extra_capacitance;
    if !(junction > 0.0) {
        return Err(Error::Domain("extra capacitance alone exceeds the target".into()));
    }
    Ok(junction / plate_capacitance(design.radius, design.barrier_thickness, 1.0))
}
