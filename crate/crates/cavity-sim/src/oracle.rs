//! Independent reference answers the manifold integrator is checked against:
//! the closed-form resonant exchange, and brute-force propagation on the full
//! truncated product space {e,g} x {0..n_max}.
//!
//! The full-space propagation shares only the low-level stepping driver with
//! the production path — the generator is assembled on the whole space, the
//! method is forced to the adaptive pair at whatever tolerance the caller
//! sets, and the atom's motion is either pinned or replayed from a recorded
//! series rather than co-integrated. Agreement between the two paths is
//! therefore evidence, not tautology.

use num_complex::Complex64;

use crate::dynamics::{propagate, IntegratorConfig, Method, Trajectory};
use crate::error::{Result, SimError};
use crate::hamiltonian::{build_full_generator, full_index};
use crate::types::{
    norm_of, nrw_basis, rw_basis, AtomLevel, BasisLabel, ManifoldState, SystemParams,
    ZERO_NORM_EPS,
};

/// Fraction of the population sitting in the top Fock level above which a
/// full-space run reports its cutoff as too tight to trust.
pub const LEAK_WARN_THRESHOLD: f64 = 1e-6;

/// Boxed derivative `f(t, y, dy)` handed to the stepping driver.
type BoxedRhs<'a> = Box<dyn FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()> + 'a>;

/// State vector on the full truncated space, in the
/// [`full_basis`](crate::hamiltonian::full_basis) ordering.
#[derive(Debug, Clone)]
pub struct FullState {
    pub n_max: u32,
    pub amps: Vec<Complex64>,
}

impl FullState {
    pub fn zero(n_max: u32) -> Self {
        FullState {
            n_max,
            amps: vec![Complex64::new(0.0, 0.0); 2 * (n_max as usize + 1)],
        }
    }

    /// Embed a manifold state into the full space (all other slots zero).
    pub fn from_manifold(state: &ManifoldState, n_max: u32) -> Result<Self> {
        let mut full = FullState::zero(n_max);
        for (label, amp) in state.basis.iter().zip(state.amps.iter()) {
            if label.fock > n_max {
                return Err(SimError::config(format!(
                    "cannot embed {label} into a space cut off at n_max = {n_max}"
                )));
            }
            full.amps[full_index(label.atom, label.fock, n_max)] = *amp;
        }
        Ok(full)
    }

    pub fn amp(&self, atom: AtomLevel, m: u32) -> Complex64 {
        self.amps[full_index(atom, m, self.n_max)]
    }

    pub fn set_amp(&mut self, atom: AtomLevel, m: u32, value: Complex64) {
        self.amps[full_index(atom, m, self.n_max)] = value;
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amps)
    }

    /// Amplitudes at the given labels, in their order.
    pub fn project_onto(&self, basis: &[BasisLabel]) -> Vec<Complex64> {
        basis.iter().map(|l| self.amp(l.atom, l.fock)).collect()
    }

    /// Population in every slot *not* named by `basis`.
    pub fn population_outside(&self, basis: &[BasisLabel]) -> f64 {
        let total: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum();
        let inside: f64 = basis
            .iter()
            .map(|l| self.amp(l.atom, l.fock).norm_sqr())
            .sum();
        (total - inside).max(0.0)
    }
}

/// How the full-space propagation treats the atom's position.
#[derive(Debug, Clone, Copy)]
pub enum OracleMotion<'a> {
    /// Atom pinned at a fixed position phase; no kinetic contribution.
    Frozen { x_phase: f64 },
    /// Replay a recorded (t, x, p) series with linear interpolation between
    /// samples, adding the kinetic scalar -i omega_r p(t)^2 (1 - i Gamma_p).
    /// The series must cover the whole integration span. Motion is fed one
    /// way only: the full-space amplitudes never act back on it.
    Series(&'a [(f64, f64, f64)]),
}

/// Sampled full-space propagation result.
#[derive(Debug, Clone)]
pub struct FullTrajectory {
    pub n_max: u32,
    pub times: Vec<f64>,
    pub states: Vec<FullState>,
    /// Largest fraction of the population found in the top Fock level
    /// (either atomic branch) across all samples — the cutoff-quality gauge.
    pub max_top_fock_fraction: f64,
}

impl FullTrajectory {
    /// A human-readable complaint when the cutoff looks too tight, `None`
    /// when the top level stayed negligibly occupied.
    pub fn leak_warning(&self) -> Option<String> {
        if self.max_top_fock_fraction > LEAK_WARN_THRESHOLD {
            Some(format!(
                "top Fock level n = {} reached a population fraction of {:.3e} \
                 (threshold {:.0e}); raise n_max",
                self.n_max, self.max_top_fock_fraction, LEAK_WARN_THRESHOLD
            ))
        } else {
            None
        }
    }
}

/// Propagate on the full truncated space with the adaptive stepper,
/// regardless of `cfg.method`, sampling on the same output grid the manifold
/// integrator would use for this `cfg`.
pub fn propagate_full(
    params: &SystemParams,
    initial: &FullState,
    cfg: &IntegratorConfig,
    motion: OracleMotion<'_>,
) -> Result<FullTrajectory> {
    cfg.validate()?;
    let n_max = initial.n_max;
    if initial.amps.len() != 2 * (n_max as usize + 1) {
        return Err(SimError::config(format!(
            "full state for n_max = {} must have {} slots, got {}",
            n_max,
            2 * (n_max as usize + 1),
            initial.amps.len()
        )));
    }
    if let OracleMotion::Series(series) = motion {
        if params.prefactor_term != crate::types::PrefactorTerm::Off {
            return Err(SimError::config(
                "replayed-motion propagation does not support the amplitude-prefactor term"
                    .to_string(),
            ));
        }
        check_series_coverage(series, cfg.t_end)?;
    }

    let cfg_full = IntegratorConfig {
        method: Method::Rk45Adaptive,
        ..cfg.clone()
    };

    let mut rhs: BoxedRhs<'_> = match motion {
        OracleMotion::Frozen { x_phase } => {
            let gen0 = build_full_generator(params, x_phase, 0.0, n_max)?;
            let rebuild = gen0.time_dependent;
            Box::new(move |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
                if rebuild {
                    build_full_generator(params, x_phase, t, n_max)?.apply_into(y, dy);
                } else {
                    gen0.apply_into(y, dy);
                }
                Ok(())
            })
        }
        OracleMotion::Series(series) => {
            Box::new(move |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
                let (x, p) = interp_motion(series, t);
                let gen = build_full_generator(params, x, t, n_max)?;
                gen.apply_into(y, dy);
                let kinetic = Complex64::new(0.0, -params.omega_r * p * p)
                    * Complex64::new(1.0, -params.gamma_p);
                for (d, v) in dy.iter_mut().zip(y.iter()) {
                    *d += kinetic * v;
                }
                Ok(())
            })
        }
    };

    let mut times = Vec::new();
    let mut states: Vec<FullState> = Vec::new();
    let mut max_frac: f64 = 0.0;
    let top_e = full_index(AtomLevel::Excited, n_max, n_max);
    let top_g = full_index(AtomLevel::Ground, n_max, n_max);
    let emit = |t: f64, y: &[Complex64]| -> Result<()> {
        let total: f64 = y.iter().map(|a| a.norm_sqr()).sum();
        if total > ZERO_NORM_EPS {
            let top = y[top_e].norm_sqr() + y[top_g].norm_sqr();
            max_frac = max_frac.max(top / total);
        }
        times.push(t);
        states.push(FullState {
            n_max,
            amps: y.to_vec(),
        });
        Ok(())
    };
    propagate(&mut rhs, initial.amps.clone(), &cfg_full, emit)?;

    Ok(FullTrajectory {
        n_max,
        times,
        states,
        max_top_fock_fraction: max_frac,
    })
}

fn check_series_coverage(series: &[(f64, f64, f64)], t_end: f64) -> Result<()> {
    let first = match series.first() {
        Some(s) => s.0,
        None => return Err(SimError::validation("motion series is empty".to_string())),
    };
    let last = series.last().unwrap().0;
    if first > 1e-9 || last < t_end - 1e-9 {
        return Err(SimError::validation(format!(
            "motion series covers [{first}, {last}] but the run needs [0, {t_end}]"
        )));
    }
    for pair in series.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(SimError::validation(format!(
                "motion series times must increase strictly, got {} then {}",
                pair[0].0, pair[1].0
            )));
        }
    }
    Ok(())
}

/// Piecewise-linear (x, p) at time t; clamps to the end samples so stage
/// times a rounding error past the span stay defined.
fn interp_motion(series: &[(f64, f64, f64)], t: f64) -> (f64, f64) {
    let n = series.len();
    if t <= series[0].0 {
        return (series[0].1, series[0].2);
    }
    if t >= series[n - 1].0 {
        return (series[n - 1].1, series[n - 1].2);
    }
    // First sample strictly past t; its predecessor exists by the checks above.
    let hi = series.partition_point(|s| s.0 <= t);
    let (t0, x0, p0) = series[hi - 1];
    let (t1, x1, p1) = series[hi];
    let w = (t - t0) / (t1 - t0);
    (x0 + w * (x1 - x0), p0 + w * (p1 - p0))
}

/// Closed-form solution of the lossless, pump-free, resonant exchange
/// starting from |e,n> with the atom fixed at position phase `x_phase`:
///
/// C_e(t) = cos(kappa t), C_g(t) = -sin(kappa t),
/// kappa = g cos(x_phase) sqrt(n+1).
///
/// Refuses parameters outside its regime (any pump, any loss rate, or a
/// nonzero effective frequency) instead of returning a wrong answer.
pub fn analytic_rabi(params: &SystemParams, x_phase: f64, t: f64) -> Result<[Complex64; 2]> {
    let mut violations = Vec::new();
    if params.eta_l != 0.0 {
        violations.push("eta_L != 0");
    }
    if params.eta_t != 0.0 {
        violations.push("eta_T != 0");
    }
    if params.gamma_a != 0.0 {
        violations.push("gamma_a != 0");
    }
    if params.gamma_c != 0.0 {
        violations.push("gamma_c != 0");
    }
    if params.omega_c_eff() != 0.0 {
        violations.push("effective cavity frequency != 0");
    }
    if params.omega_a_eff() != 0.0 {
        violations.push("effective atom frequency != 0");
    }
    if !violations.is_empty() {
        return Err(SimError::config(format!(
            "closed-form exchange does not apply: {}",
            violations.join(", ")
        )));
    }
    let kappa = params.g * x_phase.cos() * ((params.n_photon as f64) + 1.0).sqrt();
    let angle = kappa * t;
    Ok([
        Complex64::new(angle.cos(), 0.0),
        Complex64::new(-angle.sin(), 0.0),
    ])
}

/// Row-by-row difference between a manifold trajectory and a full-space one
/// on the same output grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    /// Largest Euclidean distance between the manifold amplitudes and the
    /// matching slots of the full state.
    pub max_distance: f64,
    /// Largest population the full state carried outside the manifold span.
    pub max_leaked_population: f64,
}

/// Compare a manifold run against a full-space run sample by sample. The two
/// grids must agree (same length, times within 1e-9); anything else is a
/// grid mismatch, not a numerical disagreement.
pub fn compare_manifold_vs_full(
    traj: &Trajectory,
    full: &FullTrajectory,
) -> Result<ComparisonReport> {
    if traj.rows.len() != full.times.len() {
        return Err(SimError::GridMismatch(format!(
            "manifold run has {} samples, full run has {}",
            traj.rows.len(),
            full.times.len()
        )));
    }
    let n = traj.params_echo.n_photon;
    let mut max_distance: f64 = 0.0;
    let mut max_leak: f64 = 0.0;
    for (row, (t_full, state)) in traj
        .rows
        .iter()
        .zip(full.times.iter().zip(full.states.iter()))
    {
        if (row.t - t_full).abs() > 1e-9 {
            return Err(SimError::GridMismatch(format!(
                "sample times diverge: manifold t = {}, full t = {}",
                row.t, t_full
            )));
        }
        let basis = match row.amps.len() {
            2 => nrw_basis(n),
            4 => rw_basis(n),
            other => {
                return Err(SimError::config(format!(
                    "manifold rows must have 2 or 4 amplitudes, got {other}"
                )))
            }
        };
        let full_amps = state.project_onto(&basis);
        let dist_sqr: f64 = row
            .amps
            .iter()
            .zip(full_amps.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        max_distance = max_distance.max(dist_sqr.sqrt());
        max_leak = max_leak.max(state.population_outside(&basis));
    }
    Ok(ComparisonReport {
        max_distance,
        max_leaked_population: max_leak,
    })
}
