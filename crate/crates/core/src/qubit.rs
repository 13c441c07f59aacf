//! Isolated mergemon in the charge basis.
//!
//! The Hamiltonian is `4 E_C (k - n_g)^2 - E_J/2 sum_k (|k><k+1| + |k+1><k|)`
//! on the charge states `k = -cutoff..=cutoff`. All energies are GHz (E/h).

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::math;

/// Default charge-basis half width.
pub const DEFAULT_CUTOFF: usize = 30;
/// Smallest cutoff accepted by [`TransmonParams`].
pub const MIN_CUTOFF: usize = 10;
/// Escalation stops here.
pub const MAX_CUTOFF: usize = 400;
/// Default number of retained levels.
pub const DEFAULT_LEVELS: usize = 5;
/// Largest relative drift of the lowest levels tolerated between cutoffs.
pub const CONVERGENCE_TOL: f64 = 1e-10;

const CONVERGENCE_LEVELS: usize = 5;
const CUTOFF_PROBE_STEP: usize = 5;
const CUTOFF_ESCALATION_STEP: usize = 10;
const NG_SCAN_POINTS: usize = 51;

/// Circuit parameters of the isolated qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmonParams {
    /// Josephson energy E_J/h (GHz).
    pub ej: f64,
    /// Charging energy E_C/h (GHz).
    pub ec: f64,
    /// Dimensionless offset charge.
    pub ng: f64,
    /// Charge basis spans `-cutoff..=cutoff`.
    pub cutoff: usize,
}

impl TransmonParams {
    /// Parameters at `ng = 0` with the default cutoff.
    pub fn new(ej: f64, ec: f64) -> Result<Self> {
        let params = TransmonParams {
            ej,
            ec,
            ng: 0.0,
            cutoff: DEFAULT_CUTOFF,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_ng(mut self, ng: f64) -> Result<Self> {
        self.ng = ng;
        self.validate()?;
        Ok(self)
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Result<Self> {
        self.cutoff = cutoff;
        self.validate()?;
        Ok(self)
    }

    /// `E_J = 0` is accepted as the free-rotor limit.
    pub fn validate(&self) -> Result<()> {
        if !(self.ej.is_finite() && self.ej >= 0.0) {
            return Err(Error::invalid("ej", "must be finite and non-negative"));
        }
        if !(self.ec.is_finite() && self.ec > 0.0) {
            return Err(Error::invalid("ec", "must be finite and positive"));
        }
        if !self.ng.is_finite() {
            return Err(Error::invalid("ng", "must be finite"));
        }
        if self.cutoff < MIN_CUTOFF {
            return Err(Error::invalid("cutoff", "must be at least 10"));
        }
        Ok(())
    }

    pub fn ej_over_ec(&self) -> f64 {
        self.ej / self.ec
    }
}

/// Raw charge-basis matrix without validation or convergence checks.
pub fn charge_hamiltonian(ej: f64, ec: f64, ng: f64, cutoff: usize) -> DMatrix<f64> {
    let dim = 2 * cutoff + 1;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let k = i as f64 - cutoff as f64;
        h[(i, i)] = 4.0 * ec * (k - ng) * (k - ng);
        if i + 1 < dim {
            h[(i, i + 1)] = -0.5 * ej;
            h[(i + 1, i)] = -0.5 * ej;
        }
    }
    h
}

/// Checked Hamiltonian for `params`; fails if `params.cutoff` is not converged.
pub fn build_charge_hamiltonian(params: &TransmonParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    let drift = cutoff_drift(params, params.cutoff)?;
    if drift >= CONVERGENCE_TOL {
        return Err(Error::Convergence {
            cutoff: params.cutoff,
            drift,
        });
    }
    Ok(charge_hamiltonian(params.ej, params.ec, params.ng, params.cutoff))
}

/// Eigenpairs sorted by ascending eigenvalue (eigenvectors as columns).
pub(crate) fn sorted_symmetric_eigen(h: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = h.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(h, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

fn lowest_energies(params: &TransmonParams, cutoff: usize) -> Result<Vec<f64>> {
    let h = charge_hamiltonian(params.ej, params.ec, params.ng, cutoff);
    let (mut values, _) = sorted_symmetric_eigen(h)?;
    values.truncate(CONVERGENCE_LEVELS);
    Ok(values)
}

/// Largest relative change of the five lowest eigenvalues between `cutoff`
/// and `cutoff + 5`.
pub fn cutoff_drift(params: &TransmonParams, cutoff: usize) -> Result<f64> {
    let base = lowest_energies(params, cutoff)?;
    let probe = lowest_energies(params, cutoff + CUTOFF_PROBE_STEP)?;
    let drift = base
        .iter()
        .zip(&probe)
        .map(|(a, b)| (a - b).abs() / a.abs().max(params.ec))
        .fold(0.0, f64::max);
    Ok(drift)
}

/// Smallest cutoff at or above `params.cutoff` whose drift is below tolerance.
pub fn converged_cutoff(params: &TransmonParams) -> Result<usize> {
    params.validate()?;
    let mut cutoff = params.cutoff;
    loop {
        let drift = cutoff_drift(params, cutoff)?;
        if drift < CONVERGENCE_TOL {
            return Ok(cutoff);
        }
        if cutoff + CUTOFF_ESCALATION_STEP > MAX_CUTOFF {
            return Err(Error::Convergence { cutoff, drift });
        }
        cutoff += CUTOFF_ESCALATION_STEP;
    }
}

/// Qubit levels and their normalized coupling matrix, independent of how
/// they were obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    /// Level frequencies in GHz, `levels[0]` is the reference.
    pub levels: Vec<f64>,
    /// Normalized coupling elements `g_ij / g_01`.
    pub g_norm: DMatrix<f64>,
}

impl Ladder {
    pub fn new(levels: Vec<f64>, g_norm: DMatrix<f64>) -> Result<Self> {
        let n = levels.len();
        if n < 2 {
            return Err(Error::invalid("levels", "need at least two levels"));
        }
        if g_norm.nrows() != n || g_norm.ncols() != n {
            return Err(Error::invalid("g_norm", "must be square with one row per level"));
        }
        if levels.iter().chain(g_norm.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("levels", "entries must be finite"));
        }
        Ok(Ladder { levels, g_norm })
    }

    /// Two-level system with unit coupling.
    pub fn two_level(f01: f64) -> Self {
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        Ladder {
            levels: alloc::vec![0.0, f01],
            g_norm: g,
        }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Transition frequency `f_ij = levels[j] - levels[i]`.
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.levels[j] - self.levels[i]
    }
}

/// Spectrum of the isolated qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitSpectrum {
    /// Parameters used, with the cutoff after escalation.
    pub params: TransmonParams,
    /// Absolute ground-state energy (GHz).
    pub ground_energy: f64,
    /// Level frequencies relative to the ground state (GHz).
    pub levels: Vec<f64>,
    pub f01: f64,
    pub f12: f64,
    /// `f01 + f12`.
    pub f02: f64,
    /// `f01 - f12`.
    pub anharmonicity: f64,
    /// Charge matrix elements normalized by the 0-1 element. All zeros when
    /// the 0-1 element vanishes (free rotor).
    pub g_norm: DMatrix<f64>,
    /// Unnormalized `<0|k - n_g|1>`.
    pub charge_element_01: f64,
}

impl QubitSpectrum {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn ladder(&self) -> Ladder {
        Ladder {
            levels: self.levels.clone(),
            g_norm: self.g_norm.clone(),
        }
    }

    /// Restrict to the lowest `n` levels.
    pub fn truncated(&self, n: usize) -> Result<QubitSpectrum> {
        if !(3..=self.n_levels()).contains(&n) {
            return Err(Error::invalid("n_levels", "must lie in 3..=available levels"));
        }
        let mut out = self.clone();
        out.levels.truncate(n);
        out.g_norm = self.g_norm.view((0, 0), (n, n)).into_owned();
        Ok(out)
    }
}

/// Diagonalize the isolated qubit and return its lowest `n_levels` states.
pub fn diagonalize(params: &TransmonParams, n_levels: usize) -> Result<QubitSpectrum> {
    params.validate()?;
    if n_levels < 3 {
        return Err(Error::invalid("n_levels", "must be at least 3"));
    }
    let cutoff = converged_cutoff(params)?;
    if n_levels > 2 * cutoff {
        return Err(Error::invalid("n_levels", "must not exceed 2 * cutoff"));
    }
    let h = charge_hamiltonian(params.ej, params.ec, params.ng, cutoff);
    let (values, vectors) = sorted_symmetric_eigen(h)?;
    let dim = values.len();

    let mut basis = vectors.columns(0, n_levels).into_owned();
    fix_gauge(&mut basis, params.ng, cutoff);

    let charges = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| {
        i as f64 - cutoff as f64 - params.ng
    }));
    let elements = basis.transpose() * charges * &basis;
    let g01 = elements[(0, 1)];
    let scale = elements.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let g_norm = if g01.abs() <= 1e-12 * scale.max(1.0) {
        DMatrix::zeros(n_levels, n_levels)
    } else {
        let mut g = elements.map(|x| x / g01);
        g[(0, 1)] = 1.0;
        g
    };

    let ground = values[0];
    let levels: Vec<f64> = values[..n_levels].iter().map(|e| e - ground).collect();
    let f01 = levels[1];
    let f12 = levels[2] - levels[1];
    Ok(QubitSpectrum {
        params: TransmonParams { cutoff, ..*params },
        ground_energy: ground,
        f02: f01 + f12,
        anharmonicity: f01 - f12,
        f01,
        f12,
        levels,
        g_norm,
        charge_element_01: g01,
    })
}

// Eigenvector signs are arbitrary; pick them so that the ground state's
// largest component is positive and each nearest-neighbor charge element
// <j-1|k|j> is non-negative.
fn fix_gauge(basis: &mut DMatrix<f64>, ng: f64, cutoff: usize) {
    let dim = basis.nrows();
    let charge = |i: usize| i as f64 - cutoff as f64 - ng;
    let largest_positive = |col: &mut nalgebra::DVectorViewMut<f64>| {
        let (mut best, mut idx) = (0.0f64, 0);
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best + 1e-12 {
                best = v.abs();
                idx = i;
            }
        }
        if col[idx] < 0.0 {
            col.neg_mut();
        }
    };
    largest_positive(&mut basis.column_mut(0));
    for j in 1..basis.ncols() {
        let mut element = 0.0;
        for i in 0..dim {
            element += basis[(i, j - 1)] * charge(i) * basis[(i, j)];
        }
        if element.abs() > 1e-12 {
            if element < 0.0 {
                basis.column_mut(j).neg_mut();
            }
        } else {
            largest_positive(&mut basis.column_mut(j));
        }
    }
}

fn ng_scan(params: &TransmonParams, n: usize) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    let cutoff = converged_cutoff(params)?;
    if n > 2 * cutoff + 1 {
        return Err(Error::invalid("level", "exceeds charge basis dimension"));
    }
    (0..NG_SCAN_POINTS)
        .map(|i| {
            let ng = 0.5 * i as f64 / (NG_SCAN_POINTS - 1) as f64;
            let h = charge_hamiltonian(params.ej, params.ec, ng, cutoff);
            let (mut values, _) = sorted_symmetric_eigen(h)?;
            values.truncate(n);
            Ok(values)
        })
        .collect()
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// Peak-to-peak variation of the absolute energy of `level` as `ng` scans
/// `[0, 0.5]`. `params.ng` is ignored.
pub fn charge_dispersion(params: &TransmonParams, level: usize) -> Result<f64> {
    let scan = ng_scan(params, level + 1)?;
    Ok(spread(scan.iter().map(|v| v[level])))
}

/// Peak-to-peak variation of the transition frequency `f_{0,level}` over
/// `ng` in `[0, 0.5]`.
pub fn transition_dispersion(params: &TransmonParams, level: usize) -> Result<f64> {
    if level == 0 {
        return Err(Error::invalid("level", "transition dispersion needs level >= 1"));
    }
    let scan = ng_scan(params, level + 1)?;
    Ok(spread(scan.iter().map(|v| v[level] - v[0])))
}

/// Leading perturbative level energy of a deep transmon,
/// `-E_J + sqrt(8 E_J E_C)(m + 1/2) - E_C (6m^2 + 6m + 3)/12`.
pub fn perturbative_level(ej: f64, ec: f64, m: usize) -> f64 {
    let m = m as f64;
    -ej + math::sqrt(8.0 * ej * ec) * (m + 0.5) - ec * (6.0 * m * m + 6.0 * m + 3.0) / 12.0
}

const FIT_MAX_ITERATIONS: usize = 60;
const FIT_TOL: f64 = 1e-10;
const FIT_ACCEPT: f64 = 1e-7;
const FIT_FD_STEP: f64 = 1e-6;

fn observables(log_ej: f64, log_ec: f64) -> Result<[f64; 2]> {
    let params = TransmonParams::new(math::exp(log_ej), math::exp(log_ec))?;
    let s = diagonalize(&params, 3)?;
    Ok([s.f01, s.anharmonicity])
}

/// Find `(E_J, E_C)` whose exact spectrum has the requested `f01` and
/// anharmonicity. Newton iteration in log space, started from the
/// perturbative inversion `E_C = alpha`, `E_J = (f01 + alpha)^2 / (8 alpha)`.
pub fn fit_params_to_observables(f01_target: f64, alpha_target: f64) -> Result<TransmonParams> {
    if !(f01_target.is_finite() && f01_target > 0.0) {
        return Err(Error::invalid("f01", "must be positive"));
    }
    if !(alpha_target.is_finite() && alpha_target > 0.0 && alpha_target < f01_target) {
        return Err(Error::invalid("alpha", "must satisfy 0 < alpha < f01"));
    }
    let target = [f01_target, alpha_target];
    let mut x = [
        math::ln((f01_target + alpha_target) * (f01_target + alpha_target) / (8.0 * alpha_target)),
        math::ln(alpha_target),
    ];
    let residual = |x: &[f64; 2]| -> Result<[f64; 2]> {
        let o = observables(x[0], x[1])?;
        Ok([o[0] - target[0], o[1] - target[1]])
    };
    let norm = |r: &[f64; 2]| r[0].abs().max(r[1].abs());

    let mut r = residual(&x)?;
    let mut iterations = 0;
    while norm(&r) > FIT_TOL && iterations < FIT_MAX_ITERATIONS {
        iterations += 1;
        let mut jac = [[0.0; 2]; 2];
        for col in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[col] += FIT_FD_STEP;
            xm[col] -= FIT_FD_STEP;
            let (rp, rm) = (residual(&xp)?, residual(&xm)?);
            for row in 0..2 {
                jac[row][col] = (rp[row] - rm[row]) / (2.0 * FIT_FD_STEP);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let step = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = [x[0] + damping * step[0], x[1] + damping * step[1]];
            if let Ok(rt) = residual(&trial) {
                if norm(&rt) < norm(&r) {
                    x = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm(&r) > FIT_ACCEPT {
        return Err(Error::FitFailed {
            iterations,
            f01_residual: r[0],
            alpha_residual: r[1],
        });
    }
    TransmonParams::new(math::exp(x[0]), math::exp(x[1]))
}
