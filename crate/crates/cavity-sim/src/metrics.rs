//! Entanglement and distinguishability measures on manifold states.
//!
//! The atom and the two retained Fock levels form an effective two-qubit
//! system: |e> vs |g> on one side, |n> vs |n+1> on the other. For a pure
//! state with amplitudes C11, C12, C21, C22 the concurrence is
//! 2|C11 C22 - C12 C21|; the 2-slot layout is the special case with the
//! cross slots identically zero, giving 2|C1 C2|.
//!
//! The trace distance D(rho, sigma) = (1/2) tr|rho - sigma| is evaluated on
//! the atom's reduced density matrix (the field traced out), using the
//! closed-form eigenvalues of the Hermitian 2x2 difference.
//!
//! Both measures presuppose unit-norm states; callers renormalize the
//! non-Hermitian evolution's output first, and anything off by more than
//! 1e-9 is rejected rather than silently rescaled.

use num_complex::Complex64;

use crate::dynamics::Trajectory;
use crate::error::{Result, SimError};
use crate::types::ManifoldState;

/// Tolerated deviation of a state's norm from 1 before metrics refuse it.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Reduced 2x2 density matrix of the atom: populations on the diagonal and
/// the single independent off-diagonal element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedAtomMatrix {
    pub p_e: f64,
    pub p_g: f64,
    /// <e| rho |g>; its conjugate sits in the other corner.
    pub coherence: Complex64,
}

impl ReducedAtomMatrix {
    pub fn diagonal(p_e: f64, p_g: f64) -> Self {
        ReducedAtomMatrix {
            p_e,
            p_g,
            coherence: Complex64::new(0.0, 0.0),
        }
    }

    pub fn trace(&self) -> f64 {
        self.p_e + self.p_g
    }
}

fn check_normalized(state: &ManifoldState) -> Result<()> {
    let norm = state.norm();
    let deviation = (norm - 1.0).abs();
    if deviation > NORM_TOLERANCE {
        return Err(SimError::NotNormalized { norm, deviation });
    }
    Ok(())
}

/// Concurrence of a normalized manifold state, clamped to [0, 1].
pub fn concurrence(state: &ManifoldState) -> Result<f64> {
    check_normalized(state)?;
    let raw = match state.amps.as_slice() {
        [c1, c2] => 2.0 * (c1 * c2).norm(),
        [c11, c12, c21, c22] => 2.0 * (c11 * c22 - c12 * c21).norm(),
        other => {
            return Err(SimError::config(format!(
                "concurrence needs a 2- or 4-slot state, got {} slots",
                other.len()
            )))
        }
    };
    // For unit states the determinant form is bounded by 1/2 in magnitude;
    // only rounding can push the value past the ends of [0, 1].
    debug_assert!(raw <= 1.0 + 1e-12, "concurrence {raw} out of range");
    Ok(raw.clamp(0.0, 1.0))
}

/// Reduced atom matrix of a normalized manifold state (partial trace over
/// the Fock labels).
///
/// In the 2-slot layout the two kets carry different Fock labels, so the
/// off-diagonal term vanishes identically and the result is
/// diag(|C1|^2, |C2|^2). The 4-slot layout keeps the coherence
/// C11 C21* + C12 C22*.
pub fn reduced_atom(state: &ManifoldState) -> Result<ReducedAtomMatrix> {
    check_normalized(state)?;
    match state.amps.as_slice() {
        [c1, c2] => Ok(ReducedAtomMatrix::diagonal(c1.norm_sqr(), c2.norm_sqr())),
        [c11, c12, c21, c22] => Ok(ReducedAtomMatrix {
            p_e: c11.norm_sqr() + c12.norm_sqr(),
            p_g: c21.norm_sqr() + c22.norm_sqr(),
            coherence: c11 * c21.conj() + c12 * c22.conj(),
        }),
        other => Err(SimError::config(format!(
            "reduced atom matrix needs a 2- or 4-slot state, got {} slots",
            other.len()
        ))),
    }
}

/// Trace distance between two reduced atom matrices,
/// D = (|lambda_+| + |lambda_-|)/2 with lambda the eigenvalues of the
/// Hermitian difference. For trace-1 inputs the difference is traceless and
/// this collapses to sqrt(((a-d)/2)^2 + |c|^2), but the general eigenvalue
/// form is kept so slightly unnormalized inputs are still handled exactly.
/// Like [`concurrence`], the result is pinned to its codomain: rounding may
/// push an orthogonal pair an ulp past 1, never meaningfully beyond.
pub fn trace_distance(rho: &ReducedAtomMatrix, sigma: &ReducedAtomMatrix) -> f64 {
    let a = rho.p_e - sigma.p_e;
    let d = rho.p_g - sigma.p_g;
    let c = rho.coherence - sigma.coherence;
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + c.norm_sqr()).sqrt();
    (0.5 * ((mean + radius).abs() + (mean - radius).abs())).min(1.0)
}

/// Trace distance of every row's state to the t = 0 state of the same
/// trajectory. Rows store raw amplitudes, so each is renormalized before the
/// partial trace; the reference sigma is fixed from row 0.
pub fn trace_distance_series(traj: &Trajectory) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(traj.rows.len());
    let mut sigma: Option<ReducedAtomMatrix> = None;
    for row in &traj.rows {
        let state = ManifoldState {
            basis: basis_for_len(traj, row.amps.len())?,
            amps: row.amps.clone(),
            motion: None,
        };
        let rho = reduced_atom(&state.normalize()?)?;
        match &sigma {
            Some(s) => out.push(trace_distance(&rho, s)),
            None => {
                sigma = Some(rho);
                out.push(0.0);
            }
        }
    }
    Ok(out)
}

fn basis_for_len(traj: &Trajectory, len: usize) -> Result<Vec<crate::types::BasisLabel>> {
    let n = traj.params_echo.n_photon;
    match len {
        2 => Ok(crate::types::nrw_basis(n)),
        4 => Ok(crate::types::rw_basis(n)),
        other => Err(SimError::config(format!(
            "trajectory rows must have 2 or 4 amplitudes, got {other}"
        ))),
    }
}
