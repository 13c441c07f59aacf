//! Driven-dissipative steady states and two-tone spectroscopy.
//!
//! The pump `A cos(2π f_p t) sum_ij g_ij/g01 |i><j|` is treated in the frame
//! rotating at `f_p` with the rotating-wave approximation, which makes the
//! Hamiltonian time independent:
//!
//! ```text
//! H = sum_j (f_j - j f_p) |j><j| + (f_r - f_p) a^† a
//!   + g01 sum_j g_{j,j+1} (|j><j+1| a^† + h.c.)
//!   + A/2 sum_j g_{j,j+1} (|j+1><j| + h.c.)
//! ```
//!
//! The Lindblad equation is `dρ/dt = -2πi [H, ρ] + sum_k γ_k D[L_k] ρ` with
//! `H` in GHz, time in ns and rates in 1/ns.

use alloc::boxed::Box;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::cqed::{basis_index, jc_hamiltonian, CouplingForm, CqedSystem};
use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::qubit::Ladder;
use crate::C64;

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;
/// Relative LU pivot below which the Liouvillian is declared degenerate.
pub const DEGENERACY_PIVOT: f64 = 1e-13;

/// Pump tone and dissipation for one steady-state solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    /// Pump frequency (GHz).
    pub f_pump: f64,
    /// Pump amplitude A (GHz).
    pub amplitude: f64,
    /// Power label, reporting only.
    pub power_dbm: Option<f64>,
    /// Qubit lifetime (ns).
    pub t1: f64,
    /// Pure dephasing rate (1/ns) of the collapse operator `n_q`.
    pub dephasing_rate: f64,
}

impl DriveSpec {
    pub fn new(f_pump: f64, amplitude: f64, t1: f64) -> Result<Self> {
        let d = DriveSpec {
            f_pump,
            amplitude,
            power_dbm: None,
            t1,
            dephasing_rate: 0.0,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.f_pump.is_finite() {
            return Err(Error::invalid("f_pump", "must be finite"));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::invalid("amplitude", "must be non-negative"));
        }
        if !(self.t1.is_finite() && self.t1 > 0.0) {
            return Err(Error::invalid("t1", "must be positive"));
        }
        if !(self.dephasing_rate.is_finite() && self.dephasing_rate >= 0.0) {
            return Err(Error::invalid("dephasing_rate", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Frame rotating at the pump frequency, RWA applied.
    Rotating,
    /// Laboratory frame; the drive stays explicitly time dependent.
    Lab,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DrivenHamiltonian {
    Static(DMatrix<C64>),
    /// `H(t) = static_part + drive_operator * cos(2π f_pump t)`.
    Periodic {
        static_part: DMatrix<C64>,
        drive_operator: DMatrix<C64>,
        f_pump: f64,
    },
}

/// Rotating-frame, RWA Hamiltonian for an arbitrary ladder.
pub fn ladder_drive_hamiltonian(
    ladder: &Ladder,
    f_r: f64,
    g01: f64,
    n_fock: usize,
    f_pump: f64,
    amplitude: f64,
) -> DMatrix<C64> {
    let n = ladder.len();
    let mut h = jc_hamiltonian(ladder, f_r, g01, n_fock, CouplingForm::RotatingWave);
    for j in 0..n {
        for m in 0..n_fock {
            let idx = basis_index(j, m, n_fock);
            h[(idx, idx)] -= C64::new((j + m) as f64 * f_pump, 0.0);
        }
    }
    for j in 0..n - 1 {
        let v = 0.5 * amplitude * ladder.g_norm[(j, j + 1)];
        if v == 0.0 {
            continue;
        }
        for m in 0..n_fock {
            let lo = basis_index(j, m, n_fock);
            let hi = basis_index(j + 1, m, n_fock);
            h[(hi, lo)] += C64::new(v, 0.0);
            h[(lo, hi)] += C64::new(v, 0.0);
        }
    }
    h
}

/// Drive Hamiltonian of `sys` in the requested frame.
pub fn build_drive_hamiltonian(sys: &CqedSystem, drive: &DriveSpec, frame: Frame) -> DrivenHamiltonian {
    let ladder = sys.qubit.ladder();
    match frame {
        Frame::Rotating => DrivenHamiltonian::Static(ladder_drive_hamiltonian(
            &ladder,
            sys.f_r,
            sys.g01,
            sys.n_fock,
            drive.f_pump,
            drive.amplitude,
        )),
        Frame::Lab => {
            let static_part = jc_hamiltonian(&ladder, sys.f_r, sys.g01, sys.n_fock, CouplingForm::Full);
            let qubit = ladder.g_norm.map(|g| C64::new(drive.amplitude * g, 0.0));
            let drive_operator = linalg::kron(&qubit, &DMatrix::identity(sys.n_fock, sys.n_fock));
            DrivenHamiltonian::Periodic {
                static_part,
                drive_operator,
                f_pump: drive.f_pump,
            }
        }
    }
}

/// Collapse operator `L` with rate `γ`, entering as `γ D[L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOp {
    pub operator: DMatrix<C64>,
    pub rate: f64,
}

/// `sum_j g_{j,j+1} |j><j+1| ⊗ 1`, so that the 1 -> 0 rate is the bare rate.
pub fn relaxation_operator(ladder: &Ladder, n_fock: usize) -> DMatrix<C64> {
    let n = ladder.len();
    let mut q = DMatrix::<C64>::zeros(n, n);
    for j in 0..n - 1 {
        q[(j, j + 1)] = C64::new(ladder.g_norm[(j, j + 1)], 0.0);
    }
    linalg::kron(&q, &DMatrix::identity(n_fock, n_fock))
}

/// Qubit excitation number `sum_j j |j><j| ⊗ 1`.
pub fn excitation_operator(n_levels: usize, n_fock: usize) -> DMatrix<C64> {
    let q = DMatrix::from_diagonal(&DVector::from_fn(n_levels, |j, _| C64::new(j as f64, 0.0)));
    linalg::kron(&q, &DMatrix::identity(n_fock, n_fock))
}

/// Relaxation at `1/T1` plus optional dephasing.
pub fn collapse_operators(ladder: &Ladder, n_fock: usize, drive: &DriveSpec) -> Vec<CollapseOp> {
    let mut ops = alloc::vec![CollapseOp {
        operator: relaxation_operator(ladder, n_fock),
        rate: 1.0 / drive.t1,
    }];
    if drive.dephasing_rate > 0.0 {
        ops.push(CollapseOp {
            operator: excitation_operator(ladder.len(), n_fock),
            rate: drive.dephasing_rate,
        });
    }
    ops
}

/// `L(ρ)` evaluated directly.
pub fn lindblad_rhs(h: &DMatrix<C64>, ops: &[CollapseOp], rho: &DMatrix<C64>) -> DMatrix<C64> {
    let i2pi = C64::new(0.0, TWO_PI);
    let mut out = (h * rho - rho * h) * (-i2pi);
    for op in ops {
        let l = &op.operator;
        let ld = l.adjoint();
        let ldl = &ld * l;
        let gamma = C64::new(op.rate, 0.0);
        out += (l * rho * &ld - (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0)) * gamma;
    }
    out
}

/// Liouvillian superoperator acting on column-stacked `vec(ρ)`, where
/// `vec(ρ)[i + D j] = ρ_ij`.
pub fn liouvillian(h: &DMatrix<C64>, ops: &[CollapseOp]) -> DMatrix<C64> {
    let d = h.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    let i2pi = C64::new(0.0, TWO_PI);
    let mut sup = (linalg::kron(&id, h) - linalg::kron(&h.transpose(), &id)) * (-i2pi);
    for op in ops {
        let l = &op.operator;
        let ldl = l.adjoint() * l;
        let gamma = C64::new(op.rate, 0.0);
        let jump = linalg::kron(&l.conjugate(), l);
        let anti = linalg::kron(&id, &ldl) + linalg::kron(&ldl.transpose(), &id);
        sup += (jump - anti * C64::new(0.5, 0.0)) * gamma;
    }
    sup
}

/// Steady state together with its contract diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub rho: DMatrix<C64>,
    /// Frobenius norm of `L(ρ)` (1/ns).
    pub residual_norm: f64,
    /// `|tr ρ - 1|`.
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

/// Unique steady state of the Lindblad equation.
///
/// Solved densely: the equation for `ρ_00` is replaced by `tr ρ = 1` and the
/// resulting system is LU factorized, followed by one step of iterative
/// refinement.
pub fn steady_state(h: &DMatrix<C64>, ops: &[CollapseOp]) -> Result<SteadyState> {
    let d = h.nrows();
    if h.ncols() != d || d == 0 {
        return Err(Error::invalid("hamiltonian", "must be square and non-empty"));
    }
    if ops
        .iter()
        .any(|op| op.operator.nrows() != d || op.operator.ncols() != d)
    {
        return Err(Error::invalid("collapse_ops", "dimension mismatch"));
    }
    if ops.iter().any(|op| !(op.rate.is_finite() && op.rate >= 0.0)) {
        return Err(Error::invalid("collapse_ops", "rates must be non-negative"));
    }
    let dissipative = ops
        .iter()
        .any(|op| op.rate > 0.0 && op.operator.iter().any(|z| *z != C64::new(0.0, 0.0)));
    if !dissipative {
        return Err(Error::NoDissipation);
    }

    let n = d * d;
    let mut system = liouvillian(h, ops);
    for c in 0..n {
        system[(0, c)] = C64::new(0.0, 0.0);
    }
    for k in 0..d {
        system[(0, k + d * k)] = C64::new(1.0, 0.0);
    }
    let mut rhs = DVector::<C64>::zeros(n);
    rhs[0] = C64::new(1.0, 0.0);

    let lu = system.clone().lu();
    let u = lu.u();
    let (mut pmin, mut pmax) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let p = u[(i, i)].modulus();
        pmin = pmin.min(p);
        pmax = pmax.max(p);
    }
    let pivot = if pmax > 0.0 { pmin / pmax } else { 0.0 };
    if !(pivot > DEGENERACY_PIVOT) {
        return Err(Error::Degenerate { pivot });
    }
    let mut x = lu.solve(&rhs).ok_or(Error::Degenerate { pivot })?;
    let correction = lu.solve(&(&rhs - &system * &x)).ok_or(Error::Degenerate { pivot })?;
    x += correction;

    let raw = DMatrix::from_column_slice(d, d, x.as_slice());
    let mut rho = (&raw + raw.adjoint()) * C64::new(0.5, 0.0);
    let trace: C64 = rho.trace();
    rho /= C64::new(trace.re, 0.0);

    let residual_norm = lindblad_rhs(h, ops, &rho).norm();
    let trace_error = (rho.trace() - C64::new(1.0, 0.0)).modulus();
    let min_eigenvalue = linalg::hermitian_eigenvalues(&rho)[0];
    if rho.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Numeric("steady state is not finite".into()));
    }
    Ok(SteadyState {
        rho,
        residual_norm,
        trace_error,
        min_eigenvalue,
    })
}

/// Qubit level populations `P_j = sum_m ρ_(j,m),(j,m)`.
pub fn level_populations(rho: &DMatrix<C64>, n_levels: usize, n_fock: usize) -> Vec<f64> {
    (0..n_levels)
        .map(|j| {
            (0..n_fock)
                .map(|m| rho[(basis_index(j, m, n_fock), basis_index(j, m, n_fock))].re)
                .sum()
        })
        .collect()
}

/// One solved pump setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint {
    pub f_pump: f64,
    pub amplitude: f64,
    /// `<n> = sum_j j P_j`.
    pub n_avg: f64,
    pub populations: Vec<f64>,
    pub residual_norm: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

/// Steady state of `sys` under `drive`.
pub fn spectrum_point(sys: &CqedSystem, drive: &DriveSpec) -> Result<SpectrumPoint> {
    drive.validate()?;
    let ladder = sys.qubit.ladder();
    let h = ladder_drive_hamiltonian(&ladder, sys.f_r, sys.g01, sys.n_fock, drive.f_pump, drive.amplitude);
    let ops = collapse_operators(&ladder, sys.n_fock, drive);
    let ss = steady_state(&h, &ops)?;
    let populations = level_populations(&ss.rho, ladder.len(), sys.n_fock);
    let n_avg = populations.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
    Ok(SpectrumPoint {
        f_pump: drive.f_pump,
        amplitude: drive.amplitude,
        n_avg,
        populations,
        residual_norm: ss.residual_norm,
        trace_error: ss.trace_error,
        min_eigenvalue: ss.min_eigenvalue,
    })
}

/// Parameters a trace was computed with.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMetadata {
    pub f01: f64,
    pub anharmonicity: f64,
    pub f_r: f64,
    pub g01: f64,
    pub n_levels: usize,
    pub n_fock: usize,
    pub t1: f64,
}

impl TraceMetadata {
    pub fn of(sys: &CqedSystem, t1: f64) -> Self {
        TraceMetadata {
            f01: sys.qubit.f01,
            anharmonicity: sys.qubit.anharmonicity,
            f_r: sys.f_r,
            g01: sys.g01,
            n_levels: sys.n_levels(),
            n_fock: sys.n_fock,
            t1,
        }
    }
}

/// `<n>` against pump frequency at one amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    pub amplitude: f64,
    pub points: Vec<SpectrumPoint>,
    pub metadata: TraceMetadata,
}

impl SpectrumTrace {
    /// `(f_pump, <n>)` pairs.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.f_pump, p.n_avg)).collect()
    }
}

/// Solve one grid point, annotating failures with the point.
pub fn solve_grid_point(sys: &CqedSystem, f_pump: f64, amplitude: f64, t1: f64) -> Result<SpectrumPoint> {
    DriveSpec::new(f_pump, amplitude, t1)
        .and_then(|drive| spectrum_point(sys, &drive))
        .map_err(|e| Error::SpectrumPoint {
            f_pump,
            amplitude,
            source: Box::new(e),
        })
}

/// Group solved points into one trace per amplitude, in order of first
/// appearance, keeping grid order within each trace.
pub fn assemble_traces(sys: &CqedSystem, t1: f64, points: Vec<SpectrumPoint>) -> Vec<SpectrumTrace> {
    let mut traces: Vec<SpectrumTrace> = Vec::new();
    for p in points {
        match traces
            .iter_mut()
            .find(|t| t.amplitude.to_bits() == p.amplitude.to_bits())
        {
            Some(t) => t.points.push(p),
            None => traces.push(SpectrumTrace {
                amplitude: p.amplitude,
                points: alloc::vec![p],
                metadata: TraceMetadata::of(sys, t1),
            }),
        }
    }
    traces
}

/// Sequential two-tone sweep over `(f_pump, amplitude)` pairs.
pub fn two_tone_sweep(sys: &CqedSystem, drive_grid: &[(f64, f64)], t1: f64) -> Result<Vec<SpectrumTrace>> {
    if drive_grid.is_empty() {
        return Err(Error::invalid("drive_grid", "must not be empty"));
    }
    let points = drive_grid
        .iter()
        .map(|&(f, a)| solve_grid_point(sys, f, a, t1))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_traces(sys, t1, points))
}

/// `A = A_ref 10^((P - P_ref)/20)`.
pub fn dbm_to_amplitude(power_dbm: f64, ref_amplitude: f64, ref_dbm: f64) -> Result<f64> {
    if !(ref_amplitude.is_finite() && ref_amplitude > 0.0) {
        return Err(Error::invalid("ref_amplitude", "must be positive"));
    }
    if !(power_dbm.is_finite() && ref_dbm.is_finite()) {
        return Err(Error::invalid("power_dbm", "must be finite"));
    }
    Ok(ref_amplitude * math::powf(10.0, (power_dbm - ref_dbm) / 20.0))
}

/// Local maximum of a sampled curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Grid index of the sample maximum.
    pub index: usize,
    /// Center refined by a parabola through the three top samples.
    pub center: f64,
    pub height: f64,
    pub prominence: f64,
}

/// Interior local maxima whose topographic prominence reaches
/// `min_prominence`, ordered by position.
pub fn find_peaks(curve: &[(f64, f64)], min_prominence: f64) -> Vec<Peak> {
    let n = curve.len();
    let y = |i: usize| curve[i].1;
    let mut peaks = Vec::new();
    if n < 3 {
        return peaks;
    }
    for i in 1..n - 1 {
        if !(y(i) > y(i - 1) && y(i) >= y(i + 1)) {
            continue;
        }
        let mut left_min = y(i);
        for k in (0..i).rev() {
            if y(k) > y(i) {
                break;
            }
            left_min = left_min.min(y(k));
        }
        let mut right_min = y(i);
        for k in i + 1..n {
            if y(k) > y(i) {
                break;
            }
            right_min = right_min.min(y(k));
        }
        let prominence = y(i) - left_min.max(right_min);
        if prominence < min_prominence {
            continue;
        }
        let (x0, x1, x2) = (curve[i - 1].0, curve[i].0, curve[i + 1].0);
        let (y0, y1, y2) = (y(i - 1), y(i), y(i + 1));
        let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
        let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
        let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
        let center = if a < 0.0 { -b / (2.0 * a) } else { x1 };
        peaks.push(Peak {
            index: i,
            center: center.clamp(x0, x2),
            height: y1,
            prominence,
        });
    }
    peaks
}

/// Width at half the peak value, with linear interpolation between samples.
/// Assumes the curve decays to zero away from the peak.
pub fn full_width_half_max(curve: &[(f64, f64)], peak_index: usize) -> Option<f64> {
    let half = 0.5 * curve[peak_index].1;
    let crossing = |a: (f64, f64), b: (f64, f64)| a.0 + (half - a.1) * (b.0 - a.0) / (b.1 - a.1);
    let left = (1..=peak_index)
        .rev()
        .find(|&k| curve[k - 1].1 < half)
        .map(|k| crossing(curve[k - 1], curve[k]))?;
    let right = (peak_index..curve.len() - 1)
        .find(|&k| curve[k + 1].1 < half)
        .map(|k| crossing(curve[k], curve[k + 1]))?;
    Some(right - left)
}

/// Lorentzian `height * w^2 / ((f - center)^2 + w^2)` with `fwhm = 2w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorentzian {
    pub center: f64,
    pub fwhm: f64,
    pub height: f64,
}

/// Least-squares Lorentzian fit: `1/y` is quadratic in `f`, fitted with
/// weights `y^4` over samples above `min_fraction` of the maximum.
pub fn fit_lorentzian(curve: &[(f64, f64)], min_fraction: f64) -> Option<Lorentzian> {
    let ymax = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if !(ymax > 0.0) {
        return None;
    }
    let xmax = curve.iter().find(|p| p.1 == ymax)?.0;
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    let mut used = 0;
    for &(x, y) in curve {
        if y < min_fraction * ymax {
            continue;
        }
        used += 1;
        let w = y * y * y * y;
        let u = x - xmax;
        let basis = [u * u, u, 1.0];
        for r in 0..3 {
            for c in 0..3 {
                ata[r][c] += w * basis[r] * basis[c];
            }
            atb[r] += w * basis[r] / y;
        }
    }
    if used < 3 {
        return None;
    }
    let m = nalgebra::Matrix3::from_fn(|r, c| ata[r][c]);
    let coef = m.lu().solve(&nalgebra::Vector3::from(atb))?;
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    if !(a > 0.0) {
        return None;
    }
    let shift = -b / (2.0 * a);
    let w2 = c / a - shift * shift;
    if !(w2 > 0.0) {
        return None;
    }
    Some(Lorentzian {
        center: xmax + shift,
        fwhm: 2.0 * math::sqrt(w2),
        height: 1.0 / (a * w2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{diagonalize, TransmonParams};

    fn fitted_system() -> CqedSystem {
        let params = TransmonParams::new(17.2301, 0.155973).unwrap();
        CqedSystem::new(diagonalize(&params, 5).unwrap(), 6.876331, 0.0334, 3).unwrap()
    }

    #[test]
    fn zero_drive_is_frame_shifted_jc() {
        let sys = fitted_system();
        let DrivenHamiltonian::Static(h) =
            build_drive_hamiltonian(&sys, &DriveSpec::new(4.4, 0.0, 55.0).unwrap(), Frame::Rotating)
        else {
            panic!("rotating frame must be static")
        };
        let mut expected = build_hamiltonian_rwa(&sys);
        for j in 0..5 {
            for m in 0..3 {
                let i = basis_index(j, m, 3);
                expected[(i, i)] -= C64::new((j + m) as f64 * 4.4, 0.0);
            }
        }
        assert!((h - expected).norm() < 1e-14);
    }

    fn build_hamiltonian_rwa(sys: &CqedSystem) -> DMatrix<C64> {
        crate::cqed::build_hamiltonian_with(sys, CouplingForm::RotatingWave)
    }

    #[test]
    fn drive_structure() {
        let sys = fitted_system();
        let drive = DriveSpec::new(4.47, 0.01, 55.0).unwrap();
        let DrivenHamiltonian::Static(h) = build_drive_hamiltonian(&sys, &drive, Frame::Rotating) else {
            panic!()
        };
        assert!(linalg::hermiticity_error(&h) < 1e-14);
        // The drive never changes photon number.
        let no_coupling = CqedSystem {
            g01: 0.0,
            ..sys.clone()
        };
        let DrivenHamiltonian::Static(h0) = build_drive_hamiltonian(&no_coupling, &drive, Frame::Rotating) else {
            panic!()
        };
        for a in 0..h0.nrows() {
            for b in 0..h0.ncols() {
                if a % 3 != b % 3 {
                    assert_eq!(h0[(a, b)], C64::new(0.0, 0.0));
                }
            }
        }
        let i0 = basis_index(0, 1, 3);
        let i1 = basis_index(1, 1, 3);
        assert!((h0[(i1, i0)].re - 0.005).abs() < 1e-15);
    }

    #[test]
    fn lab_frame_keeps_time_dependence() {
        let sys = fitted_system();
        let drive = DriveSpec::new(4.47, 0.02, 55.0).unwrap();
        match build_drive_hamiltonian(&sys, &drive, Frame::Lab) {
            DrivenHamiltonian::Periodic {
                static_part,
                drive_operator,
                f_pump,
            } => {
                assert_eq!(f_pump, 4.47);
                assert!((static_part - crate::cqed::build_hamiltonian(&sys)).norm() < 1e-15);
                let i0 = basis_index(0, 0, 3);
                let i1 = basis_index(1, 0, 3);
                assert!((drive_operator[(i0, i1)].re - 0.02).abs() < 1e-15);
            }
            DrivenHamiltonian::Static(_) => panic!("lab frame must be periodic"),
        }
    }

    #[test]
    fn superoperator_matches_direct_application() {
        let ladder = Ladder::two_level(5.0);
        let h = ladder_drive_hamiltonian(&ladder, 7.0, 0.05, 2, 4.99, 0.01);
        let drive = DriveSpec {
            dephasing_rate: 0.003,
            ..DriveSpec::new(4.99, 0.01, 40.0).unwrap()
        };
        let ops = collapse_operators(&ladder, 2, &drive);
        let rho = DMatrix::from_fn(4, 4, |i, j| C64::new((i + 2 * j) as f64 * 0.1, i as f64 - j as f64));
        let direct = lindblad_rhs(&h, &ops, &rho);
        let vec_rho = DVector::from_column_slice(rho.as_slice());
        let via_super = liouvillian(&h, &ops) * vec_rho;
        let back = DMatrix::from_column_slice(4, 4, via_super.as_slice());
        assert!((direct - back).norm() < 1e-12);
    }

    #[test]
    fn undriven_relaxes_to_ground() {
        let sys = fitted_system();
        let p = spectrum_point(&sys, &DriveSpec::new(4.4, 0.0, 55.0).unwrap()).unwrap();
        assert!((p.populations[0] - 1.0).abs() < 1e-9);
        assert!(p.n_avg.abs() < 1e-9);
    }

    #[test]
    fn missing_dissipation_rejected() {
        let h = DMatrix::<C64>::identity(3, 3);
        assert_eq!(steady_state(&h, &[]), Err(Error::NoDissipation));
        let zero = CollapseOp {
            operator: DMatrix::zeros(3, 3),
            rate: 1.0,
        };
        assert_eq!(steady_state(&h, &[zero]), Err(Error::NoDissipation));
    }

    #[test]
    fn degenerate_liouvillian_rejected() {
        // Level 2 is isolated and undamped: every mixture of the ground
        // state and |2> is stationary.
        let h = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![
            C64::new(0.0, 0.0),
            C64::new(5.0, 0.0),
            C64::new(9.0, 0.0)
        ]));
        let mut l = DMatrix::<C64>::zeros(3, 3);
        l[(0, 1)] = C64::new(1.0, 0.0);
        let err = steady_state(&h, &[CollapseOp { operator: l, rate: 0.1 }]).unwrap_err();
        assert!(matches!(err, Error::Degenerate { .. }), "{err:?}");
    }

    #[test]
    fn db_conversion() {
        assert_eq!(dbm_to_amplitude(-5.0, 0.002, -5.0).unwrap(), 0.002);
        assert!((dbm_to_amplitude(15.0, 0.002, -5.0).unwrap() - 0.02).abs() < 1e-15);
        assert!(dbm_to_amplitude(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(two_tone_sweep(&fitted_system(), &[], 55.0).is_err());
    }

    #[test]
    fn peak_finder_and_lorentzian_fit() {
        let curve: Vec<(f64, f64)> = (0..401)
            .map(|i| {
                let f = 4.0 + i as f64 * 0.001;
                let l1 = 0.3 * 0.01f64.powi(2) / ((f - 4.1).powi(2) + 0.01f64.powi(2));
                let l2 = 0.05 * 0.004f64.powi(2) / ((f - 4.3).powi(2) + 0.004f64.powi(2));
                (f, l1 + l2)
            })
            .collect();
        let peaks = find_peaks(&curve, 0.01);
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0].center - 4.1).abs() < 1e-4);
        assert!((peaks[1].center - 4.3).abs() < 1e-4);
        let single: Vec<(f64, f64)> = curve.iter().copied().filter(|p| p.0 < 4.2).collect();
        let fit = fit_lorentzian(&single, 0.3).unwrap();
        assert!((fit.fwhm - 0.02).abs() < 2e-4, "{fit:?}");
        let fwhm = full_width_half_max(&curve, peaks[0].index).unwrap();
        assert!((fwhm - 0.02).abs() < 5e-4);
    }
}
