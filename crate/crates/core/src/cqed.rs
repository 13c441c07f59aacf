//! Qubit coupled to a readout resonator: the generalized Jaynes-Cummings
//! Hamiltonian and the dispersive shifts derived from it.
//!
//! Basis states `|j, m>` (qubit level `j`, photon number `m`) are stored at
//! index `j * n_fock + m`. Matrices are in GHz (H/h).

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::qubit::{Ladder, QubitSpectrum};
use crate::C64;

/// Default resonator truncation.
pub const DEFAULT_FOCK: usize = 6;
/// `g01 / |f_r - f01|` above this marks the system non-dispersive.
pub const DISPERSIVE_LIMIT: f64 = 0.1;

/// Which coupling terms of `sum_ij g_ij |i><j| (a^† + a)` are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingForm {
    /// Every pair `(i, j)` with the full quadrature.
    Full,
    /// Only `|i - j| = 1`, full quadrature.
    NearestNeighbor,
    /// Only `|j><j+1| a^† + h.c.` (excitation conserving).
    RotatingWave,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CqedSystem {
    pub qubit: QubitSpectrum,
    /// Bare resonator frequency (GHz).
    pub f_r: f64,
    /// Coupling strength g01/2π (GHz).
    pub g01: f64,
    pub n_fock: usize,
}

impl CqedSystem {
    pub fn new(qubit: QubitSpectrum, f_r: f64, g01: f64, n_fock: usize) -> Result<Self> {
        if qubit.n_levels() < 3 {
            return Err(Error::invalid("n_levels", "must be at least 3"));
        }
        if n_fock < 2 {
            return Err(Error::invalid("n_fock", "must be at least 2"));
        }
        if !(f_r.is_finite() && f_r > 0.0) {
            return Err(Error::invalid("f_r", "must be positive"));
        }
        if !(g01.is_finite() && g01 >= 0.0) {
            return Err(Error::invalid("g01", "must be non-negative"));
        }
        Ok(CqedSystem {
            qubit,
            f_r,
            g01,
            n_fock,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.qubit.n_levels()
    }

    pub fn dimension(&self) -> usize {
        self.n_levels() * self.n_fock
    }

    pub fn dispersive_ratio(&self) -> f64 {
        self.g01 / (self.f_r - self.qubit.f01).abs()
    }

    pub fn is_dispersive(&self) -> bool {
        self.dispersive_ratio() < DISPERSIVE_LIMIT
    }

    /// Same system with a different resonator truncation.
    pub fn with_fock(&self, n_fock: usize) -> Result<Self> {
        CqedSystem::new(self.qubit.clone(), self.f_r, self.g01, n_fock)
    }
}

#[inline]
pub fn basis_index(level: usize, photons: usize, n_fock: usize) -> usize {
    level * n_fock + photons
}

/// Generalized Jaynes-Cummings Hamiltonian for an arbitrary ladder.
pub fn jc_hamiltonian(ladder: &Ladder, f_r: f64, g01: f64, n_fock: usize, form: CouplingForm) -> DMatrix<C64> {
    let n = ladder.len();
    let dim = n * n_fock;
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for j in 0..n {
        for m in 0..n_fock {
            let idx = basis_index(j, m, n_fock);
            h[(idx, idx)] = C64::new(ladder.levels[j] + m as f64 * f_r, 0.0);
        }
    }
    for i in 0..n {
        for j in 0..n {
            let g = g01 * ladder.g_norm[(i, j)];
            if g == 0.0 {
                continue;
            }
            let keep = match form {
                CouplingForm::Full => true,
                CouplingForm::NearestNeighbor | CouplingForm::RotatingWave => i.abs_diff(j) == 1,
            };
            if !keep {
                continue;
            }
            for m in 0..n_fock - 1 {
                let amp = g * math::sqrt((m + 1) as f64);
                // |i><j| a^†: |j, m> -> |i, m+1>
                let creation = form != CouplingForm::RotatingWave || i < j;
                // |i><j| a: |j, m+1> -> |i, m>
                let annihilation = form != CouplingForm::RotatingWave || i > j;
                if creation {
                    h[(basis_index(i, m + 1, n_fock), basis_index(j, m, n_fock))] += C64::new(amp, 0.0);
                }
                if annihilation {
                    h[(basis_index(i, m, n_fock), basis_index(j, m + 1, n_fock))] += C64::new(amp, 0.0);
                }
            }
        }
    }
    h
}

/// Full coupling Hamiltonian of `sys`.
pub fn build_hamiltonian(sys: &CqedSystem) -> DMatrix<C64> {
    build_hamiltonian_with(sys, CouplingForm::Full)
}

pub fn build_hamiltonian_with(sys: &CqedSystem, form: CouplingForm) -> DMatrix<C64> {
    jc_hamiltonian(&sys.qubit.ladder(), sys.f_r, sys.g01, sys.n_fock, form)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersiveReport {
    /// `chi[j]` is the shift `chi_{j,j+1}` (GHz); the last retained level has
    /// no partner and is omitted.
    pub chi: Vec<f64>,
    /// Dressed resonator frequency for each qubit level (GHz).
    pub dressed_freq: Vec<f64>,
}

/// Nearest-neighbor dispersive shifts for an arbitrary ladder:
/// `chi_{j,j+1} = g_{j,j+1}^2 / (f_{j,j+1} - f_r)`,
/// `f~_0 = f_r - chi_01`, `f~_j = f_r + chi_{j-1,j} - chi_{j,j+1}`.
///
/// The top retained level has no upper partner, so its `chi_{j,j+1}` is
/// taken as zero.
pub fn ladder_dispersive_shifts(ladder: &Ladder, f_r: f64, g01: f64) -> Result<DispersiveReport> {
    let n = ladder.len();
    let mut chi = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let detuning = ladder.transition(j, j + 1) - f_r;
        if detuning.abs() <= 1e-12 * f_r.abs().max(1.0) {
            return Err(Error::ResonantDivergence { level: j });
        }
        let g = g01 * ladder.g_norm[(j, j + 1)];
        chi.push(g * g / detuning);
    }
    let upper = |j: usize| if j < chi.len() { chi[j] } else { 0.0 };
    let dressed_freq = (0..n)
        .map(|j| {
            if j == 0 {
                f_r - chi[0]
            } else {
                f_r + chi[j - 1] - upper(j)
            }
        })
        .collect();
    Ok(DispersiveReport { chi, dressed_freq })
}

/// Dispersive shifts of `sys`; the system must be in the dispersive regime.
pub fn dispersive_shifts(sys: &CqedSystem) -> Result<DispersiveReport> {
    let report = ladder_dispersive_shifts(&sys.qubit.ladder(), sys.f_r, sys.g01)?;
    if !sys.is_dispersive() {
        return Err(Error::NotDispersive {
            ratio: sys.dispersive_ratio(),
        });
    }
    Ok(report)
}

/// Coupling inferred from a measured ground-state shift:
/// `g01 = sqrt(|chi01| (f_r - f_q))`.
pub fn g_from_measured_shift(chi01: f64, f_r: f64, f_q: f64) -> Result<f64> {
    if !(chi01.is_finite() && f_r.is_finite() && f_q.is_finite()) {
        return Err(Error::Domain("inputs must be finite".into()));
    }
    if f_r == f_q {
        return Err(Error::Domain("resonator and qubit frequencies coincide".into()));
    }
    let radicand = chi01.abs() * (f_r - f_q);
    if radicand < 0.0 {
        return Err(Error::Domain(alloc::format!(
            "negative radicand |chi01| (f_r - f_q) = {radicand}; expected f_r > f_q"
        )));
    }
    Ok(math::sqrt(radicand))
}

/// Photon-addition energy `E(|level, 1>) - E(|level, 0>)` from exact
/// diagonalization, with dressed states identified by largest overlap with
/// the bare states.
pub fn photon_addition_energy(sys: &CqedSystem, level: usize, form: CouplingForm) -> Result<f64> {
    if level >= sys.n_levels() {
        return Err(Error::invalid("level", "out of range"));
    }
    let h = build_hamiltonian_with(sys, form);
    let (values, vectors) = linalg::hermitian_eigen(&h)?;
    let dressed = |bare: usize| -> f64 {
        let mut best = (0usize, -1.0f64);
        for c in 0..values.len() {
            let w = vectors[(bare, c)].norm_sqr();
            if w > best.1 {
                best = (c, w);
            }
        }
        values[best.0]
    };
    let e0 = dressed(basis_index(level, 0, sys.n_fock));
    let e1 = dressed(basis_index(level, 1, sys.n_fock));
    Ok(e1 - e0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{diagonalize, TransmonParams};

    fn fitted_system(g01: f64, n_fock: usize) -> CqedSystem {
        let params = TransmonParams::new(17.2301, 0.155973).unwrap();
        let q = diagonalize(&params, 5).unwrap();
        CqedSystem::new(q, 6.876331, g01, n_fock).unwrap()
    }

    #[test]
    fn dimension_and_hermiticity() {
        let sys = fitted_system(0.05, 6);
        let h = build_hamiltonian(&sys);
        assert_eq!(h.nrows(), 30);
        assert_eq!(h.ncols(), 30);
        assert!(linalg::hermiticity_error(&h) < 1e-12);
        for form in [CouplingForm::NearestNeighbor, CouplingForm::RotatingWave] {
            assert!(linalg::hermiticity_error(&build_hamiltonian_with(&sys, form)) < 1e-12);
        }
    }

    #[test]
    fn decoupled_spectrum() {
        let sys = fitted_system(0.0, 4);
        let values = linalg::hermitian_eigenvalues(&build_hamiltonian(&sys));
        let mut expected: Vec<f64> = Vec::new();
        for j in 0..5 {
            for m in 0..4 {
                expected.push(sys.qubit.levels[j] + m as f64 * sys.f_r);
            }
        }
        expected.sort_by(f64::total_cmp);
        for (a, b) in values.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coupling_leaves_resonator_bare() {
        let sys = fitted_system(0.0, 6);
        let r = dispersive_shifts(&sys).unwrap();
        assert!(r.chi.iter().all(|&c| c == 0.0));
        assert!(r.dressed_freq.iter().all(|&f| f == sys.f_r));
    }

    #[test]
    fn resonance_is_an_error() {
        let mut sys = fitted_system(0.01, 6);
        sys.f_r = sys.qubit.f12;
        assert_eq!(
            ladder_dispersive_shifts(&sys.qubit.ladder(), sys.f_r, sys.g01),
            Err(Error::ResonantDivergence { level: 1 })
        );
    }

    #[test]
    fn non_dispersive_is_an_error() {
        let sys = fitted_system(0.5, 6);
        assert!(matches!(dispersive_shifts(&sys), Err(Error::NotDispersive { .. })));
    }

    #[test]
    fn measured_shift_domain() {
        assert!(g_from_measured_shift(0.001, 4.0, 6.0).is_err());
        assert!(g_from_measured_shift(0.001, 5.0, 5.0).is_err());
        assert_eq!(g_from_measured_shift(0.0, 6.0, 4.0).unwrap(), 0.0);
        let small = g_from_measured_shift(1e-14, 6.0, 4.0).unwrap();
        assert!(small < 1e-6);
    }

    #[test]
    fn chi_sign_follows_detuning() {
        let sys = fitted_system(0.03, 6);
        let r = dispersive_shifts(&sys).unwrap();
        for (j, c) in r.chi.iter().enumerate() {
            let sign = (sys.qubit.ladder().transition(j, j + 1) - sys.f_r).signum();
            assert_eq!(c.signum(), sign);
        }
    }
}
