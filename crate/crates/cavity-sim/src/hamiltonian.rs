//! Builders for the complex generator G(t) of the amplitude equations
//! dC/dt = G(t)·C, where G = -iH_eff and H_eff is the non-Hermitian
//! effective Hamiltonian
//!
//! ```text
//! H_eff = omega_r p^2 (1 - i Gamma_p)            (kinetic, moving atom only)
//!       + (omega_a/2) sigma_z + omega_c a'a      (free atom + field)
//!       + i g f(x) (sigma+ a - a' sigma-)        (Jaynes-Cummings exchange)
//!       + i eta_L (a' e^{-i omega_L t} - a e^{+i omega_L t})
//!       + i eta_T (sigma+ e^{-i omega_T t} - sigma- e^{+i omega_T t})
//!       - i Gamma_c a'a - i Gamma_a sigma_z
//! ```
//!
//! with f(x) = cos(kx). Three bases are supported: the frozen-atom 2-state
//! manifold `[|e,n>, |g,n+1>]`, the moving-atom 4-state manifold
//! `[|e,n>, |e,n+1>, |g,n>, |g,n+1>]`, and the full truncated product space
//! {e,g} x {0..n_max} used by the brute-force oracle. Couplings whose far
//! endpoint falls outside the chosen basis are dropped and recorded in
//! [`Generator::dropped`] so manifold-truncation error stays observable.
//!
//! Note one faithful quirk: the decay term -i Gamma_a sigma_z *anti-damps*
//! the ground slots (their squared amplitude grows at rate 2 Gamma_a). A
//! conventional dissipator would use sigma+ sigma- instead; we implement the
//! sigma_z form exactly as the model states it.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::types::{AtomLevel, BasisLabel, Frame, Motion, PrefactorTerm, SystemParams};

/// Coupling profile f at position phase kx: cos(kx).
pub fn coupling_f(x_phase: f64) -> f64 {
    x_phase.cos()
}

/// Derivative of [`coupling_f`] with respect to the phase: -sin(kx).
pub fn coupling_f_prime(x_phase: f64) -> f64 {
    -x_phase.sin()
}

/// A coupling the basis truncation discarded: the in-span endpoint, the
/// out-of-span endpoint, and the magnitude of the discarded matrix element.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedCoupling {
    pub from: BasisLabel,
    pub to: BasisLabel,
    pub magnitude: f64,
}

/// Dense generator matrix G(t) on an ordered basis, so that dC/dt = G·C.
#[derive(Debug, Clone)]
pub struct Generator {
    pub dim: usize,
    pub entries: Array2<Complex64>,
    /// True when the entries depend explicitly on t (lab-frame pumps with a
    /// nonzero pump frequency acting inside the span). Position- and
    /// momentum-dependence through the motional state is not counted here.
    pub time_dependent: bool,
    /// Couplings that left the span, for leakage diagnostics.
    pub dropped: Vec<DroppedCoupling>,
}

impl Generator {
    /// dst = G · src. Plain dense mat-vec; dimensions are small enough that
    /// nothing fancier pays off.
    pub fn apply_into(&self, src: &[Complex64], dst: &mut [Complex64]) {
        debug_assert_eq!(src.len(), self.dim);
        debug_assert_eq!(dst.len(), self.dim);
        for (row, slot) in self.entries.rows().into_iter().zip(dst.iter_mut()) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (entry, amp) in row.iter().zip(src) {
                acc += entry * amp;
            }
            *slot = acc;
        }
    }
}

/// Basis of the full truncated space, atom-major:
/// `[|e,0>..|e,n_max>, |g,0>..|g,n_max>]`.
pub fn full_basis(n_max: u32) -> Vec<BasisLabel> {
    let mut labels = Vec::with_capacity(2 * (n_max as usize + 1));
    for m in 0..=n_max {
        labels.push(BasisLabel::excited(m));
    }
    for m in 0..=n_max {
        labels.push(BasisLabel::ground(m));
    }
    labels
}

/// Slot of |atom, m> in the [`full_basis`] ordering.
pub fn full_index(atom: AtomLevel, m: u32, n_max: u32) -> usize {
    let block = match atom {
        AtomLevel::Excited => 0,
        AtomLevel::Ground => 1,
    };
    block * (n_max as usize + 1) + m as usize
}

/// Frozen-atom generator on `[|e,n>, |g,n+1>]`.
///
/// Only the free/decay diagonal and the Jaynes-Cummings exchange survive the
/// projection onto this span; both pump terms connect to kets outside it and
/// are recorded as dropped. The atom sits at the fixed position phase
/// `x_phase` and there is no kinetic term.
pub fn build_nrw_generator(params: &SystemParams, x_phase: f64, t: f64) -> Result<Generator> {
    check_frame(params)?;
    let labels = crate::types::nrw_basis(params.n_photon);
    Ok(assemble(params, &labels, coupling_f(x_phase), t, None))
}

/// Moving-atom generator on `[|e,n>, |e,n+1>, |g,n>, |g,n+1>]` at the given
/// motional state.
///
/// Relative to the frozen case this adds the kinetic diagonal
/// -i omega_r p^2 (1 - i Gamma_p) and the pump couplings that stay inside
/// the span (longitudinal: |e,n>-|e,n+1> and |g,n>-|g,n+1>; transverse:
/// |e,n>-|g,n> and |e,n+1>-|g,n+1>). The optional amplitude-prefactor term
/// depends on the instantaneous amplitudes, so it lives in
/// [`prefactor_scalar`] and is added to the right-hand side by the
/// integrator rather than baked into the matrix here.
pub fn build_rw_generator(params: &SystemParams, motion: Motion, t: f64) -> Result<Generator> {
    check_frame(params)?;
    let labels = crate::types::rw_basis(params.n_photon);
    Ok(assemble(
        params,
        &labels,
        coupling_f(motion.x),
        t,
        Some(motion.p),
    ))
}

/// Oracle-grade generator on the full space {e,g} x {0..n_max}.
///
/// Every matrix element of the effective Hamiltonian is kept; the only
/// truncation is the Fock cutoff (whose discarded ladder couplings are
/// recorded). The kinetic term is *not* included — when the oracle replays
/// an externally supplied motion it adds the scalar
/// -i omega_r p(t)^2 (1 - i Gamma_p) itself, since that term is just a
/// multiple of the identity.
pub fn build_full_generator(
    params: &SystemParams,
    x_phase: f64,
    t: f64,
    n_max: u32,
) -> Result<Generator> {
    check_frame(params)?;
    if n_max < params.n_photon + 3 {
        return Err(SimError::config(format!(
            "full-space cutoff n_max = {} is too tight for manifold index n = {} (need n_max >= n + 3)",
            n_max, params.n_photon
        )));
    }
    let labels = full_basis(n_max);
    Ok(assemble(params, &labels, coupling_f(x_phase), t, None))
}

/// Momentum derivative of the semiclassical motion,
/// p_dot = -2 g f'(x) Im{alpha* beta}, with alpha and beta the amplitudes of
/// |e,n> and |g,n+1> — the first and last slots of either manifold layout.
///
/// By default the amplitudes are normalized before taking the product, so
/// the force reflects the state's direction rather than its decaying norm;
/// `force_unnormalized` switches to the raw product.
pub fn momentum_force(params: &SystemParams, x_phase: f64, amps: &[Complex64]) -> f64 {
    let alpha = amps[0];
    let beta = amps[amps.len() - 1];
    let mut cross = (alpha.conj() * beta).im;
    if !params.force_unnormalized {
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr > crate::types::ZERO_NORM_EPS {
            cross /= norm_sqr;
        }
    }
    -2.0 * params.g * coupling_f_prime(x_phase) * cross
}

/// Scalar the amplitude-prefactor term adds to the generator (times the
/// identity): 0 when off, -p_dot when literal, -p_dot/p in quotient form.
///
/// The quotient reading divides by the momentum and is refused near p = 0,
/// where that interpretation breaks down.
pub fn prefactor_scalar(
    params: &SystemParams,
    motion: Motion,
    amps: &[Complex64],
    t: f64,
) -> Result<Complex64> {
    match params.prefactor_term {
        PrefactorTerm::Off => Ok(Complex64::new(0.0, 0.0)),
        PrefactorTerm::Literal => {
            let p_dot = momentum_force(params, motion.x, amps);
            Ok(Complex64::new(-p_dot, 0.0))
        }
        PrefactorTerm::Quotient => {
            if motion.p.abs() <= 1e-9 {
                return Err(SimError::QuotientSingular {
                    t,
                    p_abs: motion.p.abs(),
                });
            }
            let p_dot = momentum_force(params, motion.x, amps);
            Ok(Complex64::new(-p_dot / motion.p, 0.0))
        }
    }
}

fn check_frame(params: &SystemParams) -> Result<()> {
    if params.frame == Frame::Rotating && params.omega_l != params.omega_t {
        return Err(SimError::config(format!(
            "rotating frame requires omega_L == omega_T, got {} and {}",
            params.omega_l, params.omega_t
        )));
    }
    Ok(())
}

/// Fill the generator on an arbitrary ordered basis.
///
/// Every undirected coupling is placed from one canonical endpoint (excited
/// side for exchange terms, lower Fock index for the ladder pump) so no pair
/// is written twice; couplings whose partner is absent from the basis are
/// recorded as dropped instead. `kinetic_p` adds the momentum-dependent
/// diagonal for the moving-atom case.
fn assemble(
    params: &SystemParams,
    labels: &[BasisLabel],
    f: f64,
    t: f64,
    kinetic_p: Option<f64>,
) -> Generator {
    let dim = labels.len();
    let mut entries = Array2::from_elem((dim, dim), Complex64::new(0.0, 0.0));
    let mut dropped = Vec::new();
    let slot = |label: BasisLabel| labels.iter().position(|l| *l == label);

    let big_omega_c = params.big_omega_c();
    let big_omega_a = params.big_omega_a();
    let minus_i = Complex64::new(0.0, -1.0);
    let kinetic = match kinetic_p {
        Some(p) => {
            minus_i * params.omega_r * p * p * Complex64::new(1.0, -params.gamma_p)
        }
        None => Complex64::new(0.0, 0.0),
    };

    for (i, label) in labels.iter().enumerate() {
        let m = f64::from(label.fock);
        entries[(i, i)] =
            minus_i * (big_omega_c * m + big_omega_a * label.atom.sigma_z()) + kinetic;
    }

    // Pump phases exp(-i omega t); in the rotating frame the transformation
    // has absorbed them and the entries are static.
    let (phase_l, phase_t) = match params.frame {
        Frame::Lab => (
            Complex64::from_polar(1.0, -params.omega_l * t),
            Complex64::from_polar(1.0, -params.omega_t * t),
        ),
        Frame::Rotating => (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)),
    };
    let mut lab_pump_l = false;
    let mut lab_pump_t = false;

    for (i, label) in labels.iter().enumerate() {
        let root_up = f64::from(label.fock + 1).sqrt();

        // Jaynes-Cummings exchange |e,m> <-> |g,m+1>, placed from the
        // excited side: G[e,m][g,m+1] = +g f sqrt(m+1), antisymmetric.
        let jc = params.g * f * root_up;
        match label.atom {
            AtomLevel::Excited => {
                let partner = BasisLabel::ground(label.fock + 1);
                match slot(partner) {
                    Some(j) => {
                        entries[(i, j)] += Complex64::new(jc, 0.0);
                        entries[(j, i)] -= Complex64::new(jc, 0.0);
                    }
                    None => record(&mut dropped, *label, partner, jc.abs()),
                }
            }
            AtomLevel::Ground => {
                // The partner |e,m-1> only needs attention when it is
                // missing; present partners were handled from their side.
                if label.fock > 0 {
                    let partner = BasisLabel::excited(label.fock - 1);
                    if slot(partner).is_none() {
                        let mag = (params.g * f * f64::from(label.fock).sqrt()).abs();
                        record(&mut dropped, *label, partner, mag);
                    }
                }
            }
        }

        // Longitudinal pump ladder |s,m> <-> |s,m+1>, placed from the lower
        // rung: G[s,m+1][s,m] = +eta_L sqrt(m+1) e^{-i omega_L t}.
        let up = BasisLabel {
            atom: label.atom,
            fock: label.fock + 1,
        };
        match slot(up) {
            Some(j) => {
                if params.eta_l != 0.0 {
                    let mag = params.eta_l * root_up;
                    entries[(j, i)] += mag * phase_l;
                    entries[(i, j)] -= mag * phase_l.conj();
                    lab_pump_l = true;
                }
            }
            None => record(&mut dropped, *label, up, params.eta_l * root_up),
        }
        if label.fock > 0 {
            let down = BasisLabel {
                atom: label.atom,
                fock: label.fock - 1,
            };
            if slot(down).is_none() {
                let mag = params.eta_l * f64::from(label.fock).sqrt();
                record(&mut dropped, *label, down, mag);
            }
        }

        // Transverse pump |e,m> <-> |g,m>, placed from the excited side:
        // G[e,m][g,m] = +eta_T e^{-i omega_T t}.
        match label.atom {
            AtomLevel::Excited => {
                let partner = BasisLabel::ground(label.fock);
                match slot(partner) {
                    Some(j) => {
                        if params.eta_t != 0.0 {
                            entries[(i, j)] += params.eta_t * phase_t;
                            entries[(j, i)] -= params.eta_t * phase_t.conj();
                            lab_pump_t = true;
                        }
                    }
                    None => record(&mut dropped, *label, partner, params.eta_t),
                }
            }
            AtomLevel::Ground => {
                let partner = BasisLabel::excited(label.fock);
                if slot(partner).is_none() {
                    record(&mut dropped, *label, partner, params.eta_t);
                }
            }
        }
    }

    let time_dependent = params.frame == Frame::Lab
        && ((lab_pump_l && params.omega_l != 0.0) || (lab_pump_t && params.omega_t != 0.0));

    Generator {
        dim,
        entries,
        time_dependent,
        dropped,
    }
}

fn record(dropped: &mut Vec<DroppedCoupling>, from: BasisLabel, to: BasisLabel, magnitude: f64) {
    if magnitude != 0.0 {
        dropped.push(DroppedCoupling {
            from,
            to,
            magnitude: magnitude.abs(),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Params with every rate zeroed, for closed-system checks. g stays 1.
    fn closed() -> SystemParams {
        SystemParams {
            eta_l: 0.0,
            eta_t: 0.0,
            gamma_a: 0.0,
            gamma_c: 0.0,
            gamma_p: 0.0,
            ..SystemParams::default()
        }
    }

    fn max_abs_entry(m: &Array2<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Entrywise max of |G + G^dagger|; zero iff iG is Hermitian.
    fn hermiticity_defect(gen: &Generator) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..gen.dim {
            for j in 0..gen.dim {
                let defect = gen.entries[(i, j)] + gen.entries[(j, i)].conj();
                worst = worst.max(defect.norm());
            }
        }
        worst
    }

    #[test]
    fn coupling_profile_endpoints() {
        assert_eq!(coupling_f(0.0), 1.0);
        assert_eq!(coupling_f(PI), -1.0);
        assert_abs_diff_eq!(coupling_f(FRAC_PI_2), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn coupling_slope_endpoints() {
        assert_eq!(coupling_f_prime(0.0), 0.0);
        assert_relative_eq!(coupling_f_prime(FRAC_PI_2), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn coupling_slope_matches_central_difference() {
        let theta = 0.7;
        let h = 1e-5;
        let fd = (coupling_f(theta + h) - coupling_f(theta - h)) / (2.0 * h);
        assert_abs_diff_eq!(coupling_f_prime(theta), fd, epsilon = 1e-8);
    }

    #[test]
    fn nrw_closed_resonant_generator_is_a_rotation() {
        let gen = build_nrw_generator(&closed(), 0.0, 0.0).unwrap();
        assert_eq!(gen.dim, 2);
        assert_abs_diff_eq!((gen.entries[(0, 0)]).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((gen.entries[(1, 1)]).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(gen.entries[(0, 1)], c(1.0, 0.0));
        assert_eq!(gen.entries[(1, 0)], c(-1.0, 0.0));
        assert!(!gen.time_dependent);
    }

    #[test]
    fn nrw_atomic_decay_antidamps_the_ground_slot() {
        // -i Gamma_a sigma_z gives the excited slot a -Gamma_a real part and
        // the ground slot +Gamma_a: the documented sign quirk of this model.
        let params = SystemParams {
            gamma_a: 0.5,
            ..closed()
        };
        let gen = build_nrw_generator(&params, 0.0, 0.0).unwrap();
        assert_relative_eq!(gen.entries[(0, 0)].re, -0.5, epsilon = 1e-15);
        assert_relative_eq!(gen.entries[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(gen.entries[(0, 0)].im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gen.entries[(1, 1)].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn nrw_exchange_scales_with_the_fock_ladder() {
        let params = SystemParams {
            n_photon: 3,
            ..closed()
        };
        let gen = build_nrw_generator(&params, 0.0, 0.0).unwrap();
        assert_relative_eq!(gen.entries[(0, 1)].re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn nrw_records_the_pump_couplings_it_drops() {
        let gen = build_nrw_generator(&SystemParams::default(), 0.0, 0.0).unwrap();
        // |e,n>: ladder up, transverse partner; |g,n+1>: ladder up and down,
        // transverse partner. Five couplings leave the 2-state span.
        assert_eq!(gen.dropped.len(), 5);
        assert!(gen.dropped.iter().all(|d| d.magnitude > 0.0));
    }

    #[test]
    fn rotating_frame_with_split_pump_frequencies_is_rejected() {
        let params = SystemParams {
            omega_l: 1.0,
            omega_t: 2.0,
            ..SystemParams::default()
        };
        assert!(build_nrw_generator(&params, 0.0, 0.0).is_err());
        assert!(build_rw_generator(&params, Motion::new(0.0, 0.0), 0.0).is_err());
        assert!(build_full_generator(&params, 0.0, 0.0, 8).is_err());
    }

    #[test]
    fn rw_without_pumps_reduces_to_the_frozen_block_plus_phases() {
        let params = closed();
        let x = 0.3;
        let gen = build_rw_generator(&params, Motion::new(x, 0.0), 0.0).unwrap();
        let nrw = build_nrw_generator(&params, x, 0.0).unwrap();
        // Slots 0 and 3 carry the frozen-atom block (p = 0 kills the
        // kinetic diagonal)...
        assert_eq!(gen.entries[(0, 0)], nrw.entries[(0, 0)]);
        assert_eq!(gen.entries[(0, 3)], nrw.entries[(0, 1)]);
        assert_eq!(gen.entries[(3, 0)], nrw.entries[(1, 0)]);
        assert_eq!(gen.entries[(3, 3)], nrw.entries[(1, 1)]);
        // ...and the bystander slots |e,n+1>, |g,n> evolve by phase only.
        for j in [0usize, 3] {
            assert_eq!(gen.entries[(1, j)], c(0.0, 0.0));
            assert_eq!(gen.entries[(2, j)], c(0.0, 0.0));
            assert_eq!(gen.entries[(j, 1)], c(0.0, 0.0));
            assert_eq!(gen.entries[(j, 2)], c(0.0, 0.0));
        }
    }

    #[test]
    fn rw_kinetic_term_shifts_every_diagonal_entry() {
        let params = SystemParams {
            omega_r: 0.1,
            gamma_p: 0.0,
            ..SystemParams::default()
        };
        let still = build_rw_generator(&params, Motion::new(0.4, 0.0), 0.0).unwrap();
        let moving = build_rw_generator(&params, Motion::new(0.4, 2.0), 0.0).unwrap();
        for i in 0..4 {
            let shift = moving.entries[(i, i)] - still.entries[(i, i)];
            assert_abs_diff_eq!(shift.re, 0.0, epsilon = 1e-15);
            assert_relative_eq!(shift.im, -0.4, epsilon = 1e-15);
        }
    }

    #[test]
    fn rw_transverse_pump_alone_gives_antisymmetric_blocks() {
        let params = SystemParams {
            g: 0.0,
            eta_l: 0.0,
            eta_t: 1.0,
            gamma_a: 0.0,
            gamma_c: 0.0,
            gamma_p: 0.0,
            omega_r: 0.0,
            ..SystemParams::default()
        };
        let gen = build_rw_generator(&params, Motion::new(0.0, 0.0), 0.0).unwrap();
        // Basis order (|e,n>, |e,n+1>, |g,n>, |g,n+1>): the only entries are
        // e,m <-> g,m with +1 on the excited row.
        let mut expected = Array2::from_elem((4, 4), c(0.0, 0.0));
        expected[(0, 2)] = c(1.0, 0.0);
        expected[(2, 0)] = c(-1.0, 0.0);
        expected[(1, 3)] = c(1.0, 0.0);
        expected[(3, 1)] = c(-1.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(
                    (gen.entries[(i, j)] - expected[(i, j)]).norm(),
                    0.0,
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn generators_without_decay_are_anti_hermitian() {
        let lab = SystemParams {
            frame: Frame::Lab,
            omega_a: 1.3,
            omega_c: 0.9,
            omega_l: 1.1,
            omega_t: 0.7,
            eta_l: 0.4,
            eta_t: 0.25,
            gamma_a: 0.0,
            gamma_c: 0.0,
            gamma_p: 0.0,
            omega_r: 0.15,
            ..SystemParams::default()
        };
        for t in [0.0, 0.37, 2.9] {
            let nrw = build_nrw_generator(&lab, 0.6, t).unwrap();
            assert!(hermiticity_defect(&nrw) < 1e-12);
            let rw = build_rw_generator(&lab, Motion::new(0.6, 1.4), t).unwrap();
            assert!(hermiticity_defect(&rw) < 1e-12);
            let full = build_full_generator(&lab, 0.6, t, 6).unwrap();
            assert!(hermiticity_defect(&full) < 1e-12);
        }
    }

    #[test]
    fn rw_restricted_to_the_exchange_slots_matches_nrw_plus_kinetic() {
        let params = SystemParams {
            eta_l: 0.0,
            eta_t: 0.0,
            ..SystemParams::default()
        };
        let motion = Motion::new(0.8, 1.7);
        let rw = build_rw_generator(&params, motion, 0.0).unwrap();
        let nrw = build_nrw_generator(&params, motion.x, 0.0).unwrap();
        let kinetic = c(0.0, -1.0)
            * params.omega_r
            * motion.p
            * motion.p
            * c(1.0, -params.gamma_p);
        let pick = [0usize, 3];
        for (a, &ia) in pick.iter().enumerate() {
            for (b, &ib) in pick.iter().enumerate() {
                let mut want = nrw.entries[(a, b)];
                if a == b {
                    want += kinetic;
                }
                assert!((rw.entries[(ia, ib)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn full_generator_contains_the_rw_entries_for_in_span_couplings() {
        let params = SystemParams::default();
        let x = 0.45;
        // p = 0: the full builder carries no kinetic term.
        let rw = build_rw_generator(&params, Motion::new(x, 0.0), 0.0).unwrap();
        let full = build_full_generator(&params, x, 0.0, 8).unwrap();
        let rw_labels = crate::types::rw_basis(params.n_photon);
        for (i, li) in rw_labels.iter().enumerate() {
            for (j, lj) in rw_labels.iter().enumerate() {
                let fi = full_index(li.atom, li.fock, 8);
                let fj = full_index(lj.atom, lj.fock, 8);
                assert!(
                    (full.entries[(fi, fj)] - rw.entries[(i, j)]).norm() < 1e-14,
                    "mismatch at ({li}, {lj})"
                );
            }
        }
    }

    #[test]
    fn full_generator_without_pumps_is_block_diagonal_in_doublets() {
        let params = SystemParams {
            eta_l: 0.0,
            eta_t: 0.0,
            ..SystemParams::default()
        };
        let n_max = 5;
        let gen = build_full_generator(&params, 0.0, 0.0, n_max).unwrap();
        // Excitation number (fock + 1 for excited, fock for ground) is
        // conserved: entries between different excitation sectors vanish.
        let labels = full_basis(n_max);
        let excitation = |l: &BasisLabel| match l.atom {
            AtomLevel::Excited => l.fock + 1,
            AtomLevel::Ground => l.fock,
        };
        for (i, li) in labels.iter().enumerate() {
            for (j, lj) in labels.iter().enumerate() {
                if excitation(li) != excitation(lj) {
                    assert_eq!(gen.entries[(i, j)], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn full_generator_free_evolution_is_diagonal() {
        let params = SystemParams {
            g: 0.0,
            eta_l: 0.0,
            eta_t: 0.0,
            gamma_a: 0.0,
            gamma_c: 0.0,
            gamma_p: 0.0,
            omega_a: 1.5,
            omega_c: 0.8,
            frame: Frame::Lab,
            ..SystemParams::default()
        };
        let n_max = 4;
        let gen = build_full_generator(&params, 0.0, 0.0, n_max).unwrap();
        for m in 0..=n_max {
            let e = full_index(AtomLevel::Excited, m, n_max);
            let g = full_index(AtomLevel::Ground, m, n_max);
            let me = f64::from(m);
            assert!((gen.entries[(e, e)] - c(0.0, -(0.8 * me + 0.75))).norm() < 1e-14);
            assert!((gen.entries[(g, g)] - c(0.0, -(0.8 * me - 0.75))).norm() < 1e-14);
        }
        let mut off_diag_mass = 0.0;
        for i in 0..gen.dim {
            for j in 0..gen.dim {
                if i != j {
                    off_diag_mass += gen.entries[(i, j)].norm();
                }
            }
        }
        assert_eq!(off_diag_mass, 0.0);
    }

    /// Cross-check every entry of a small full-space generator against a
    /// table written out element by element from the Hamiltonian, without
    /// going through the shared assembly code paths (no loops over
    /// couplings, no canonical-endpoint logic).
    #[test]
    fn full_generator_matches_a_hand_written_element_table() {
        let params = SystemParams {
            omega_a: 0.3,
            omega_c: 0.3,
            omega_l: 0.3,
            omega_t: 0.3,
            eta_l: 0.3,
            eta_t: 0.3,
            gamma_a: 0.3,
            gamma_c: 0.3,
            gamma_p: 0.3,
            frame: Frame::Lab,
            ..SystemParams::default()
        };
        let (t, x) = (0.7, 0.4);
        let n_max = 3; // smallest cutoff the builder accepts for n = 0
        let gen = build_full_generator(&params, x, t, n_max).unwrap();
        assert_eq!(gen.dim, 8);

        let mi = c(0.0, -1.0);
        let f = x.cos();
        let ph = Complex64::from_polar(1.0, -0.3 * t); // e^{-i omega t}, shared by both pumps here
        let oc = c(0.3, -0.3); // Omega_c
        let oa = c(0.15, -0.3); // Omega_a
        let s2 = 2.0_f64.sqrt();
        let s3 = 3.0_f64.sqrt();

        let mut want = Array2::from_elem((8, 8), c(0.0, 0.0));
        // Basis order: e0 e1 e2 e3 g0 g1 g2 g3.
        // Diagonal -i(Omega_c m + s Omega_a):
        want[(0, 0)] = mi * oa;
        want[(1, 1)] = mi * (oc + oa);
        want[(2, 2)] = mi * (oc * 2.0 + oa);
        want[(3, 3)] = mi * (oc * 3.0 + oa);
        want[(4, 4)] = mi * -oa;
        want[(5, 5)] = mi * (oc - oa);
        want[(6, 6)] = mi * (oc * 2.0 - oa);
        want[(7, 7)] = mi * (oc * 3.0 - oa);
        // Exchange +g f sqrt(m+1) from |g,m+1> into |e,m>:
        want[(0, 5)] = c(f, 0.0);
        want[(5, 0)] = c(-f, 0.0);
        want[(1, 6)] = c(f * s2, 0.0);
        want[(6, 1)] = c(-f * s2, 0.0);
        want[(2, 7)] = c(f * s3, 0.0);
        want[(7, 2)] = c(-f * s3, 0.0);
        // Longitudinal ladder +eta sqrt(m+1) e^{-i omega t} upward:
        want[(1, 0)] = 0.3 * ph;
        want[(0, 1)] = -0.3 * ph.conj();
        want[(2, 1)] = 0.3 * s2 * ph;
        want[(1, 2)] = -0.3 * s2 * ph.conj();
        want[(3, 2)] = 0.3 * s3 * ph;
        want[(2, 3)] = -0.3 * s3 * ph.conj();
        want[(5, 4)] = 0.3 * ph;
        want[(4, 5)] = -0.3 * ph.conj();
        want[(6, 5)] = 0.3 * s2 * ph;
        want[(5, 6)] = -0.3 * s2 * ph.conj();
        want[(7, 6)] = 0.3 * s3 * ph;
        want[(6, 7)] = -0.3 * s3 * ph.conj();
        // Transverse +eta e^{-i omega t} from |g,m> into |e,m>:
        want[(0, 4)] = 0.3 * ph;
        want[(4, 0)] = -0.3 * ph.conj();
        want[(1, 5)] = 0.3 * ph;
        want[(5, 1)] = -0.3 * ph.conj();
        want[(2, 6)] = 0.3 * ph;
        want[(6, 2)] = -0.3 * ph.conj();
        want[(3, 7)] = 0.3 * ph;
        want[(7, 3)] = -0.3 * ph.conj();

        let mut diff = gen.entries.clone();
        diff -= &want;
        assert!(
            max_abs_entry(&diff) < 1e-14,
            "largest deviation {}",
            max_abs_entry(&diff)
        );
        assert!(gen.time_dependent);
    }

    #[test]
    fn full_generator_rejects_tight_cutoffs() {
        let params = SystemParams {
            n_photon: 2,
            ..SystemParams::default()
        };
        assert!(build_full_generator(&params, 0.0, 0.0, 4).is_err());
        assert!(build_full_generator(&params, 0.0, 0.0, 5).is_ok());
    }

    #[test]
    fn momentum_force_hand_value() {
        // x = pi/4, alpha = 1/sqrt2, beta = i/sqrt2:
        // p_dot = -2 * (-sin pi/4) * Im{(1/sqrt2)(i/sqrt2)} = sqrt2/2.
        let params = closed();
        let v = std::f64::consts::FRAC_1_SQRT_2;
        let amps = [c(v, 0.0), c(0.0, v)];
        let force = momentum_force(&params, PI / 4.0, &amps);
        assert_relative_eq!(force, v, epsilon = 1e-15);
    }

    #[test]
    fn momentum_force_vanishes_at_the_standing_wave_antinode() {
        let params = closed();
        let amps = [c(0.5, 0.0), c(0.0, 0.5)];
        assert_eq!(momentum_force(&params, 0.0, &amps), 0.0);
    }

    #[test]
    fn momentum_force_ignores_overall_norm_by_default() {
        let params = closed();
        let amps = [c(0.7, 0.1), c(0.2, 0.6)];
        let shrunk: Vec<Complex64> = amps.iter().map(|a| a * 0.01).collect();
        let f1 = momentum_force(&params, 0.9, &amps);
        let f2 = momentum_force(&params, 0.9, &shrunk);
        assert_relative_eq!(f1, f2, max_relative = 1e-12);

        let literal = SystemParams {
            force_unnormalized: true,
            ..closed()
        };
        let f3 = momentum_force(&literal, 0.9, &shrunk);
        assert!((f3 / f2).abs() < 1e-3);
    }

    #[test]
    fn prefactor_quotient_rejects_vanishing_momentum() {
        let params = SystemParams {
            prefactor_term: PrefactorTerm::Quotient,
            ..SystemParams::default()
        };
        let amps = [c(1.0, 0.0), c(0.0, 0.0)];
        let err = prefactor_scalar(&params, Motion::new(0.4, 0.0), &amps, 1.5);
        assert!(matches!(err, Err(SimError::QuotientSingular { .. })));
        let ok = prefactor_scalar(&params, Motion::new(0.4, 2.0), &amps, 1.5);
        assert!(ok.is_ok());
    }

    #[test]
    fn prefactor_literal_is_minus_the_force() {
        let params = SystemParams {
            prefactor_term: PrefactorTerm::Literal,
            ..closed()
        };
        let v = std::f64::consts::FRAC_1_SQRT_2;
        let amps = [c(v, 0.0), c(0.0, v)];
        let motion = Motion::new(PI / 4.0, 1.0);
        let scalar = prefactor_scalar(&params, motion, &amps, 0.0).unwrap();
        let force = momentum_force(&params, motion.x, &amps);
        assert_relative_eq!(scalar.re, -force, epsilon = 1e-15);
        assert_eq!(scalar.im, 0.0);
    }
}
