//! Domain types shared by every other module: physical parameters, basis
//! labels, amplitude vectors and the rows of a sampled trajectory.
//!
//! Unit conventions (used consistently everywhere):
//! * hbar = 1 and the atom-field coupling g = 1 set the scales; every
//!   frequency and decay rate is expressed in units of g and time in 1/g.
//! * Position is stored as the dimensionless phase k*x, so the coupling
//!   profile is simply cos(x).
//! * Momentum is stored in photon-recoil units (hbar*k), which turns the
//!   kinetic energy p^2/2m into omega_r * p^2 with omega_r the recoil
//!   frequency. The atomic mass never appears on its own.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Magnitude below which a state counts as completely decayed and cannot be
/// normalized (compared against the largest amplitude component, which
/// brackets the norm to within a factor sqrt(2 dim)).
pub const ZERO_NORM_EPS: f64 = 1e-300;

/// Which frame the generator is expressed in.
///
/// `Lab` keeps the bare frequencies and the explicit exp(-i omega t) pump
/// phases. `Rotating` transforms at the pump frequency: the diagonal then
/// carries the detunings Delta_c = omega_c - omega_L and
/// Delta_a = omega_a - omega_T, and the pump entries become static. The
/// transformation only removes all time dependence when omega_L == omega_T,
/// so that equality is enforced for rotating-frame configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    Rotating,
}

/// Handling of the scalar term the amplitude equations acquire when the
/// wavefunction ansatz carries a time-dependent prefactor.
///
/// That prefactor shares its symbol with the momentum and the literature it
/// comes from never resolves the ambiguity, so both readings are available:
/// `Literal` adds -p_dot * identity to the generator, `Quotient` adds
/// -p_dot/p * identity (the only dimensionally rate-like reading, but
/// singular at p = 0). `Off` (the default) omits the term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrefactorTerm {
    Off,
    Literal,
    Quotient,
}

/// Atomic level of a basis ket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomLevel {
    Excited,
    Ground,
}

impl AtomLevel {
    /// Sign of this level under sigma_z (+1 excited, -1 ground).
    pub fn sigma_z(self) -> f64 {
        match self {
            AtomLevel::Excited => 1.0,
            AtomLevel::Ground => -1.0,
        }
    }
}

/// One atom (x) Fock basis ket, |atom, fock>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisLabel {
    pub atom: AtomLevel,
    pub fock: u32,
}

impl BasisLabel {
    pub fn excited(fock: u32) -> Self {
        BasisLabel {
            atom: AtomLevel::Excited,
            fock,
        }
    }

    pub fn ground(fock: u32) -> Self {
        BasisLabel {
            atom: AtomLevel::Ground,
            fock,
        }
    }
}

impl std::fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let atom = match self.atom {
            AtomLevel::Excited => 'e',
            AtomLevel::Ground => 'g',
        };
        write!(f, "|{},{}>", atom, self.fock)
    }
}

/// Semiclassical motional pair: position phase k*x and momentum in units of
/// hbar*k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Motion {
    pub x: f64,
    pub p: f64,
}

impl Motion {
    pub fn new(x: f64, p: f64) -> Self {
        Motion { x, p }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.p.is_finite()
    }
}

/// All physical rates and frequencies of one run, in units of the coupling g.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Atomic transition frequency omega_a.
    pub omega_a: f64,
    /// Cavity mode frequency omega_c.
    pub omega_c: f64,
    /// Longitudinal (cavity-axis) pump frequency omega_L.
    pub omega_l: f64,
    /// Transverse (atom-facing) pump frequency omega_T.
    pub omega_t: f64,
    /// Atom-field coupling amplitude; the unit of every other rate. Valid
    /// configs fix this to exactly 1.0 (see [`SystemParams::validate`]);
    /// generator builders accept other values so tests can exercise
    /// degenerate systems directly.
    pub g: f64,
    /// Longitudinal pump amplitude eta_L.
    pub eta_l: f64,
    /// Transverse pump amplitude eta_T.
    pub eta_t: f64,
    /// Atomic decay rate Gamma_a (multiplies sigma_z; see `hamiltonian`).
    pub gamma_a: f64,
    /// Cavity decay rate Gamma_c (multiplies the photon number).
    pub gamma_c: f64,
    /// Motional damping rate Gamma_p (multiplies the kinetic term).
    pub gamma_p: f64,
    /// Recoil frequency omega_r = hbar k^2 / 2m.
    pub omega_r: f64,
    /// Optical wave vector. Positions are already stored as the phase k*x,
    /// so this never enters the equations of motion; it is carried as
    /// metadata for converting back to laboratory lengths.
    pub k_wave: f64,
    /// Fock manifold index n: the retained kets are built around |e,n> and
    /// |g,n+1>.
    pub n_photon: u32,
    pub frame: Frame,
    pub prefactor_term: PrefactorTerm,
    /// Evaluate the motional force with raw (decaying) amplitudes instead of
    /// normalized ones. The normalized reading is the default so the force
    /// does not die out merely because the non-Hermitian norm shrinks.
    pub force_unnormalized: bool,
}

impl Default for SystemParams {
    /// Resonant rotating-frame defaults: both detunings zero, weak symmetric
    /// pumps and small decay rates.
    fn default() -> Self {
        SystemParams {
            omega_a: 0.0,
            omega_c: 0.0,
            omega_l: 0.0,
            omega_t: 0.0,
            g: 1.0,
            eta_l: 0.2,
            eta_t: 0.2,
            gamma_a: 0.02,
            gamma_c: 0.05,
            gamma_p: 0.01,
            omega_r: 0.1,
            k_wave: 1.0,
            n_photon: 0,
            frame: Frame::Rotating,
            prefactor_term: PrefactorTerm::Off,
            force_unnormalized: false,
        }
    }
}

impl SystemParams {
    /// Check every config-level invariant, returning the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.g != 1.0 {
            return Err(SimError::validation(format!(
                "g must be exactly 1.0 (all rates are in coupling units), got {}",
                self.g
            )));
        }
        for (name, value) in [
            ("eta_L", self.eta_l),
            ("eta_T", self.eta_t),
            ("gamma_a", self.gamma_a),
            ("gamma_c", self.gamma_c),
            ("gamma_p", self.gamma_p),
        ] {
            // NaN fails the comparison too, and must be rejected.
            if value.is_nan() || value < 0.0 {
                return Err(SimError::validation(format!(
                    "{name} must be >= 0, got {value}"
                )));
            }
        }
        for (name, value) in [
            ("omega_a", self.omega_a),
            ("omega_c", self.omega_c),
            ("omega_L", self.omega_l),
            ("omega_T", self.omega_t),
            ("omega_r", self.omega_r),
            ("k_wave", self.k_wave),
        ] {
            if !value.is_finite() {
                return Err(SimError::validation(format!(
                    "{name} must be finite, got {value}"
                )));
            }
        }
        if self.omega_r < 0.0 {
            return Err(SimError::validation(format!(
                "omega_r must be >= 0, got {}",
                self.omega_r
            )));
        }
        if self.frame == Frame::Rotating && self.omega_l != self.omega_t {
            return Err(SimError::validation(format!(
                "rotating frame requires omega_L == omega_T, got {} and {}",
                self.omega_l, self.omega_t
            )));
        }
        Ok(())
    }

    /// Cavity frequency as seen by the generator: bare in the lab frame,
    /// detuning Delta_c = omega_c - omega_L in the rotating frame.
    pub fn omega_c_eff(&self) -> f64 {
        match self.frame {
            Frame::Lab => self.omega_c,
            Frame::Rotating => self.omega_c - self.omega_l,
        }
    }

    /// Atomic frequency as seen by the generator: bare in the lab frame,
    /// detuning Delta_a = omega_a - omega_T in the rotating frame.
    pub fn omega_a_eff(&self) -> f64 {
        match self.frame {
            Frame::Lab => self.omega_a,
            Frame::Rotating => self.omega_a - self.omega_t,
        }
    }

    /// Complex cavity frequency Omega_c = omega_c - i Gamma_c (frame-adjusted).
    pub fn big_omega_c(&self) -> Complex64 {
        Complex64::new(self.omega_c_eff(), -self.gamma_c)
    }

    /// Complex atomic half-frequency Omega_a = omega_a/2 - i Gamma_a
    /// (frame-adjusted).
    pub fn big_omega_a(&self) -> Complex64 {
        Complex64::new(self.omega_a_eff() / 2.0, -self.gamma_a)
    }
}

/// Integration mode: whether the atom moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    /// Moving atom: four amplitudes plus the semiclassical pair (x, p).
    Rw,
    /// Frozen atom: kinetic term removed, atom pinned at a fixed position
    /// phase, two amplitudes.
    Nrw { x_phase: f64 },
}

impl Mode {
    pub fn is_rw(&self) -> bool {
        matches!(self, Mode::Rw)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Rw => "rw",
            Mode::Nrw { .. } => "nrw",
        }
    }
}

/// Complex amplitude vector over a labeled basis, plus the motional pair in
/// the moving-atom case.
///
/// The two layouts in use are
/// * 2 slots: `[|e,n>, |g,n+1>]`, no motion (frozen atom), and
/// * 4 slots: `[|e,n>, |e,n+1>, |g,n>, |g,n+1>]` with motion — the amplitude
///   order (C11, C12, C21, C22).
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldState {
    pub basis: Vec<BasisLabel>,
    pub amps: Vec<Complex64>,
    pub motion: Option<Motion>,
}

/// Basis of the 2-slot (frozen-atom) manifold around Fock index n.
pub fn nrw_basis(n: u32) -> Vec<BasisLabel> {
    vec![BasisLabel::excited(n), BasisLabel::ground(n + 1)]
}

/// Basis of the 4-slot (moving-atom) manifold around Fock index n, in
/// (C11, C12, C21, C22) order.
pub fn rw_basis(n: u32) -> Vec<BasisLabel> {
    vec![
        BasisLabel::excited(n),
        BasisLabel::excited(n + 1),
        BasisLabel::ground(n),
        BasisLabel::ground(n + 1),
    ]
}

impl ManifoldState {
    /// Two-amplitude state over `[|e,n>, |g,n+1>]`.
    pub fn nrw(n: u32, amps: [Complex64; 2]) -> Self {
        ManifoldState {
            basis: nrw_basis(n),
            amps: amps.to_vec(),
            motion: None,
        }
    }

    /// Four-amplitude state over `[|e,n>, |e,n+1>, |g,n>, |g,n+1>]` with the
    /// atom at position phase `x` and momentum `p`.
    pub fn rw(n: u32, amps: [Complex64; 4], x: f64, p: f64) -> Self {
        ManifoldState {
            basis: rw_basis(n),
            amps: amps.to_vec(),
            motion: Some(Motion::new(x, p)),
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Euclidean norm sqrt(sum |amp|^2).
    pub fn norm(&self) -> f64 {
        norm_of(&self.amps)
    }

    /// Same state scaled to unit norm; the direction (including every phase)
    /// is preserved because the divisor is a positive real.
    ///
    /// The scaling happens in two stages (largest component first, then the
    /// residual norm), so any finite state normalizes to a finite unit
    /// vector — including ones the non-Hermitian evolution has grown or
    /// shrunk past the range where |amp|^2 is representable.
    pub fn normalize(&self) -> Result<ManifoldState> {
        let m = self
            .amps
            .iter()
            .map(|a| a.re.abs().max(a.im.abs()))
            .fold(0.0, f64::max);
        // NaN fails the comparison too, and must be rejected.
        if m.is_nan() || m <= ZERO_NORM_EPS {
            return Err(SimError::ZeroState { norm: self.norm() });
        }
        let scaled: Vec<Complex64> = self.amps.iter().map(|a| a / m).collect();
        let r = norm_of(&scaled); // in [1, sqrt(2 dim)] for finite input
        let amps = scaled.iter().map(|a| a / r).collect();
        Ok(ManifoldState {
            basis: self.basis.clone(),
            amps,
            motion: self.motion,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
            && self.motion.is_none_or(|m| m.is_finite())
    }
}

/// Euclidean norm of a raw amplitude slice.
///
/// Computed in scaled form (divide by the largest component, sum squares,
/// rescale) so the result neither overflows for huge finite amplitudes nor
/// flushes to zero for denormal ones, both of which a long non-Hermitian
/// evolution can produce.
pub fn norm_of(amps: &[Complex64]) -> f64 {
    let m = amps
        .iter()
        .map(|a| a.re.abs().max(a.im.abs()))
        .fold(0.0, f64::max);
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    let sum: f64 = amps
        .iter()
        .map(|a| {
            let re = a.re / m;
            let im = a.im / m;
            re * re + im * im
        })
        .sum();
    m * sum.sqrt()
}

/// One sampled output record of a trajectory.
///
/// `amps` holds the raw (pre-normalization) amplitudes; `norm` is their
/// Euclidean norm at the same instant, so consumers can renormalize exactly.
/// The metrics are computed on the normalized state. `motion` is `None` in
/// the frozen-atom mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRow {
    pub t: f64,
    pub amps: Vec<Complex64>,
    pub norm: f64,
    pub concurrence: f64,
    pub trace_distance: f64,
    pub motion: Option<Motion>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norm_of_unit_vector() {
        let s = ManifoldState::nrw(0, [c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(s.norm(), 1.0);
    }

    #[test]
    fn norm_of_pythagorean_pair() {
        let s = ManifoldState::nrw(0, [c(0.6, 0.0), c(0.0, 0.8)]);
        assert_relative_eq!(s.norm(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn norm_scales_linearly() {
        let s = ManifoldState::rw(0, [c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 0.0, 0.0);
        assert_eq!(s.norm(), 2.0);
    }

    #[test]
    fn norm_is_absolutely_homogeneous() {
        let s = ManifoldState::nrw(0, [c(0.3, -0.4), c(-0.5, 0.2)]);
        let k = c(-1.2, 0.7);
        let scaled = ManifoldState {
            basis: s.basis.clone(),
            amps: s.amps.iter().map(|a| a * k).collect(),
            motion: None,
        };
        assert_relative_eq!(scaled.norm(), k.norm() * s.norm(), max_relative = 1e-14);
    }

    #[test]
    fn normalize_rescales_and_keeps_direction() {
        let s = ManifoldState::nrw(0, [c(2.0, 0.0), c(0.0, 0.0)]);
        let n = s.normalize().unwrap();
        assert_eq!(n.amps[0], c(1.0, 0.0));
        assert_eq!(n.amps[1], c(0.0, 0.0));
    }

    #[test]
    fn normalize_leaves_unit_states_alone() {
        let v = std::f64::consts::FRAC_1_SQRT_2;
        let s = ManifoldState::nrw(0, [c(v, 0.0), c(v, 0.0)]);
        let n = s.normalize().unwrap();
        for (a, b) in n.amps.iter().zip(s.amps.iter()) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-15);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-15);
        }
    }

    #[test]
    fn normalize_is_idempotent() {
        let s = ManifoldState::rw(0, [c(0.1, 0.9), c(-0.4, 0.2), c(0.0, -0.3), c(0.5, 0.5)], 0.4, 1.0);
        let once = s.normalize().unwrap();
        let twice = once.normalize().unwrap();
        for (a, b) in once.amps.iter().zip(twice.amps.iter()) {
            assert!((a - b).norm() <= 1e-15);
        }
        assert_relative_eq!(once.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn normalize_rejects_zero_state() {
        let s = ManifoldState::nrw(0, [c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(s.normalize(), Err(SimError::ZeroState { .. })));
    }

    #[test]
    fn norm_survives_amplitudes_whose_squares_overflow() {
        // |amp|^2 here exceeds f64::MAX, but the norm itself is representable.
        let s = ManifoldState::nrw(0, [c(3.0e170, 0.0), c(0.0, 4.0e170)]);
        assert_relative_eq!(s.norm(), 5.0e170, max_relative = 1e-15);
        let unit = s.normalize().unwrap();
        assert_relative_eq!(unit.amps[0].re, 0.6, max_relative = 1e-15);
        assert_relative_eq!(unit.amps[1].im, 0.8, max_relative = 1e-15);
    }

    #[test]
    fn norm_survives_amplitudes_whose_squares_underflow() {
        // |amp|^2 here flushes below the denormal range, the norm does not.
        let s = ManifoldState::nrw(0, [c(3.0e-170, 0.0), c(0.0, -4.0e-170)]);
        assert_relative_eq!(s.norm(), 5.0e-170, max_relative = 1e-15);
        let unit = s.normalize().unwrap();
        assert_relative_eq!(unit.amps[0].re, 0.6, max_relative = 1e-15);
        assert_relative_eq!(unit.amps[1].im, -0.8, max_relative = 1e-15);
    }

    #[test]
    fn default_params_are_valid() {
        SystemParams::default().validate().unwrap();
    }

    #[test]
    fn validate_rejects_non_unit_coupling() {
        let p = SystemParams {
            g: 2.0,
            ..SystemParams::default()
        };
        assert!(matches!(p.validate(), Err(SimError::Validation(_))));
    }

    #[test]
    fn validate_rejects_negative_rates() {
        let p = SystemParams {
            gamma_a: -1.0,
            ..SystemParams::default()
        };
        assert!(matches!(p.validate(), Err(SimError::Validation(_))));
    }

    #[test]
    fn validate_rejects_split_pump_frequencies_in_rotating_frame() {
        let p = SystemParams {
            omega_l: 1.0,
            omega_t: 2.0,
            ..SystemParams::default()
        };
        assert!(matches!(p.validate(), Err(SimError::Validation(_))));
        let lab = SystemParams {
            frame: Frame::Lab,
            omega_l: 1.0,
            omega_t: 2.0,
            ..SystemParams::default()
        };
        lab.validate().unwrap();
    }

    #[test]
    fn effective_frequencies_become_detunings_when_rotating() {
        let p = SystemParams {
            omega_a: 5.0,
            omega_c: 4.0,
            omega_l: 3.0,
            omega_t: 3.0,
            ..SystemParams::default()
        };
        assert_eq!(p.omega_c_eff(), 1.0);
        assert_eq!(p.omega_a_eff(), 2.0);
        let lab = SystemParams {
            frame: Frame::Lab,
            ..p
        };
        assert_eq!(lab.omega_c_eff(), 4.0);
        assert_eq!(lab.omega_a_eff(), 5.0);
    }
}
