//! The TOML run configuration: one flat document covering the physical
//! parameters, the integration settings, the initial state and the output
//! options. Every key is optional; an empty document is the default run.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorConfig, Method};
use crate::error::{Result, SimError};
use crate::types::{Frame, ManifoldState, Mode, PrefactorTerm, SystemParams};

/// Which manifold the run evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeChoice {
    /// Moving atom on the 4-slot manifold.
    Rw,
    /// Frozen atom on the 2-slot manifold.
    Nrw,
}

/// Initial amplitudes: a named preset or an explicit [re, im] list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Named(NamedInitial),
    Custom(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedInitial {
    /// All population in the first slot: |e,n> (times |x0, p0> when moving).
    Separable,
    /// Equal superposition of |e,n> and |g,n+1>.
    Bell,
}

/// One run, as read from a TOML file. Flat on purpose: every key is also a
/// sweep axis candidate and a CSV meta entry, and nesting would only add
/// ceremony.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Stem of the output files (`<name>.csv`, `<name>.meta`, `<name>.svg`).
    pub name: String,
    pub mode: ModeChoice,
    pub initial: InitialSpec,
    /// Initial position phase k*x (also the fixed position in `nrw` mode).
    pub x0: f64,
    /// Initial momentum in units of hbar*k (ignored in `nrw` mode).
    pub p0: f64,
    pub emit_svg: bool,

    pub omega_a: f64,
    pub omega_c: f64,
    #[serde(rename = "omega_L")]
    pub omega_l: f64,
    #[serde(rename = "omega_T")]
    pub omega_t: f64,
    pub g: f64,
    #[serde(rename = "eta_L")]
    pub eta_l: f64,
    #[serde(rename = "eta_T")]
    pub eta_t: f64,
    pub gamma_a: f64,
    pub gamma_c: f64,
    pub gamma_p: f64,
    pub omega_r: f64,
    pub k_wave: f64,
    pub n_photon: u32,
    pub frame: Frame,
    pub prefactor_term: PrefactorTerm,
    pub force_unnormalized: bool,

    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = SystemParams::default();
        let i = IntegratorConfig::default();
        RunConfig {
            name: "run".to_string(),
            mode: ModeChoice::Rw,
            initial: InitialSpec::Named(NamedInitial::Separable),
            x0: std::f64::consts::FRAC_PI_4,
            p0: 1.0,
            emit_svg: false,
            omega_a: p.omega_a,
            omega_c: p.omega_c,
            omega_l: p.omega_l,
            omega_t: p.omega_t,
            g: p.g,
            eta_l: p.eta_l,
            eta_t: p.eta_t,
            gamma_a: p.gamma_a,
            gamma_c: p.gamma_c,
            gamma_p: p.gamma_p,
            omega_r: p.omega_r,
            k_wave: p.k_wave,
            n_photon: p.n_photon,
            frame: p.frame,
            prefactor_term: p.prefactor_term,
            force_unnormalized: p.force_unnormalized,
            dt: i.dt,
            t_end: i.t_end,
            sample_every: i.sample_every,
            method: i.method,
            rel_tol: i.rel_tol,
            abs_tol: i.abs_tol,
        }
    }
}

/// Largest deviation from unit norm a custom initial state may have before
/// it is rejected instead of silently renormalized.
pub const CUSTOM_INITIAL_NORM_SLACK: f64 = 1e-6;

impl RunConfig {
    /// Parse a TOML document, falling back to defaults for absent keys, and
    /// validate the result. Unknown keys are errors (they are always typos).
    pub fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| SimError::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        RunConfig::parse(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| SimError::config(format!("config serialization: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
        {
            return Err(SimError::config(format!(
                "name must be a nonempty filename stem (ASCII letters, digits, '-', '_', '.'), \
                 got {:?}",
                self.name
            )));
        }
        self.system_params().validate()?;
        self.integrator_config().validate()?;
        self.initial_state()?;
        Ok(())
    }

    pub fn system_params(&self) -> SystemParams {
        SystemParams {
            omega_a: self.omega_a,
            omega_c: self.omega_c,
            omega_l: self.omega_l,
            omega_t: self.omega_t,
            g: self.g,
            eta_l: self.eta_l,
            eta_t: self.eta_t,
            gamma_a: self.gamma_a,
            gamma_c: self.gamma_c,
            gamma_p: self.gamma_p,
            omega_r: self.omega_r,
            k_wave: self.k_wave,
            n_photon: self.n_photon,
            frame: self.frame,
            prefactor_term: self.prefactor_term,
            force_unnormalized: self.force_unnormalized,
        }
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            t_end: self.t_end,
            sample_every: self.sample_every,
            method: self.method,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
        }
    }

    pub fn mode(&self) -> Mode {
        match self.mode {
            ModeChoice::Rw => Mode::Rw,
            ModeChoice::Nrw => Mode::Nrw { x_phase: self.x0 },
        }
    }

    /// Build the initial manifold state this config describes.
    ///
    /// Custom amplitude lists must have as many entries as the mode has
    /// slots and must be unit-norm to within [`CUSTOM_INITIAL_NORM_SLACK`];
    /// the residual rounding slack is then normalized away exactly.
    pub fn initial_state(&self) -> Result<ManifoldState> {
        let n = self.n_photon;
        let amps: Vec<Complex64> = match (&self.initial, self.mode) {
            (InitialSpec::Named(NamedInitial::Separable), ModeChoice::Nrw) => {
                vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
            }
            (InitialSpec::Named(NamedInitial::Bell), ModeChoice::Nrw) => {
                let v = std::f64::consts::FRAC_1_SQRT_2;
                vec![Complex64::new(v, 0.0), Complex64::new(v, 0.0)]
            }
            (InitialSpec::Named(NamedInitial::Separable), ModeChoice::Rw) => vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
            (InitialSpec::Named(NamedInitial::Bell), ModeChoice::Rw) => {
                let v = std::f64::consts::FRAC_1_SQRT_2;
                vec![
                    Complex64::new(v, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(v, 0.0),
                ]
            }
            (InitialSpec::Custom(list), mode) => {
                let want = match mode {
                    ModeChoice::Nrw => 2,
                    ModeChoice::Rw => 4,
                };
                if list.len() != want {
                    return Err(SimError::config(format!(
                        "custom initial state needs {want} amplitudes in {} mode, got {}",
                        match mode {
                            ModeChoice::Nrw => "nrw",
                            ModeChoice::Rw => "rw",
                        },
                        list.len()
                    )));
                }
                let amps: Vec<Complex64> =
                    list.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
                let norm = crate::types::norm_of(&amps);
                if !norm.is_finite() || (norm - 1.0).abs() > CUSTOM_INITIAL_NORM_SLACK {
                    return Err(SimError::config(format!(
                        "custom initial state must be unit-norm within {CUSTOM_INITIAL_NORM_SLACK:e}, \
                         got norm {norm}"
                    )));
                }
                amps
            }
        };
        let state = match self.mode {
            ModeChoice::Nrw => ManifoldState {
                basis: crate::types::nrw_basis(n),
                amps,
                motion: None,
            },
            ModeChoice::Rw => ManifoldState {
                basis: crate::types::rw_basis(n),
                amps,
                motion: Some(crate::types::Motion::new(self.x0, self.p0)),
            },
        };
        // Wash out the custom list's rounding slack so the integrator's
        // strict unit-norm gate sees an exact unit vector.
        state.normalize()
    }

    /// Set a sweep axis by key name. Only numeric keys are sweepable; the
    /// two integer-valued ones accept integral floats.
    pub fn set_axis(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "omega_a" => self.omega_a = value,
            "omega_c" => self.omega_c = value,
            "omega_L" => self.omega_l = value,
            "omega_T" => self.omega_t = value,
            "g" => self.g = value,
            "eta_L" => self.eta_l = value,
            "eta_T" => self.eta_t = value,
            "gamma_a" => self.gamma_a = value,
            "gamma_c" => self.gamma_c = value,
            "gamma_p" => self.gamma_p = value,
            "omega_r" => self.omega_r = value,
            "k_wave" => self.k_wave = value,
            "x0" => self.x0 = value,
            "p0" => self.p0 = value,
            "dt" => self.dt = value,
            "t_end" => self.t_end = value,
            "rel_tol" => self.rel_tol = value,
            "abs_tol" => self.abs_tol = value,
            "n_photon" => self.n_photon = int_axis(key, value)? as u32,
            "sample_every" => {
                let v = int_axis(key, value)?;
                if v == 0 {
                    return Err(SimError::config("sample_every must be >= 1".to_string()));
                }
                self.sample_every = v as usize;
            }
            other => {
                return Err(SimError::config(format!(
                    "unknown sweep axis {other:?}; numeric keys are omega_a, omega_c, omega_L, \
                     omega_T, g, eta_L, eta_T, gamma_a, gamma_c, gamma_p, omega_r, k_wave, x0, \
                     p0, dt, t_end, rel_tol, abs_tol, n_photon, sample_every"
                )))
            }
        }
        Ok(())
    }
}

fn int_axis(key: &str, value: f64) -> Result<u64> {
    if value.fract() != 0.0 || value < 0.0 || value > u32::MAX as f64 {
        return Err(SimError::config(format!(
            "{key} must be a nonnegative integer, got {value}"
        )));
    }
    Ok(value as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_document_is_the_default_run() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.mode, ModeChoice::Rw);
        assert_eq!(cfg.dt, 0.001);
        assert_eq!(cfg.t_end, 30.0);
        assert_eq!(cfg.sample_every, 10);
        assert_eq!(cfg.eta_l, 0.2);
        assert_eq!(cfg.gamma_c, 0.05);
    }

    #[test]
    fn keys_override_defaults() {
        let cfg = RunConfig::parse(
            r#"
name = "decay-scan"
mode = "nrw"
initial = "bell"
eta_L = 0.0
eta_T = 0.0
gamma_c = 0.1
t_end = 12.5
method = "rk45"
"#,
        )
        .unwrap();
        assert_eq!(cfg.name, "decay-scan");
        assert_eq!(cfg.mode, ModeChoice::Nrw);
        assert_eq!(cfg.initial, InitialSpec::Named(NamedInitial::Bell));
        assert_eq!(cfg.gamma_c, 0.1);
        assert_eq!(cfg.t_end, 12.5);
        assert_eq!(cfg.method, Method::Rk45Adaptive);
        assert_eq!(cfg.dt, 0.001, "untouched keys keep their defaults");
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_name() {
        let err = RunConfig::parse("gamma_x = 0.1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gamma_x"), "message was: {msg}");
    }

    #[test]
    fn type_errors_are_config_errors() {
        assert!(matches!(
            RunConfig::parse("dt = \"small\"\n"),
            Err(SimError::Config(_))
        ));
        assert!(matches!(
            RunConfig::parse("mode = \"sideways\"\n"),
            Err(SimError::Config(_))
        ));
    }

    #[test]
    fn coupling_other_than_one_is_rejected() {
        assert!(RunConfig::parse("g = 2.0\n").is_err());
    }

    #[test]
    fn negative_rates_are_rejected() {
        assert!(RunConfig::parse("gamma_c = -0.05\n").is_err());
    }

    #[test]
    fn rotating_frame_requires_matched_pump_frequencies() {
        let text = "omega_L = 1.0\nomega_T = 2.0\n";
        assert!(RunConfig::parse(text).is_err());
        let lab = format!("frame = \"lab\"\n{text}");
        assert!(RunConfig::parse(&lab).is_ok());
    }

    #[test]
    fn named_initial_states_have_the_advertised_amplitudes() {
        let mut cfg = RunConfig::default();
        let sep = cfg.initial_state().unwrap();
        assert_eq!(sep.amps.len(), 4);
        assert_eq!(sep.amps[0], Complex64::new(1.0, 0.0));
        assert_eq!(sep.motion, Some(crate::types::Motion::new(cfg.x0, cfg.p0)));

        cfg.initial = InitialSpec::Named(NamedInitial::Bell);
        cfg.mode = ModeChoice::Nrw;
        let bell = cfg.initial_state().unwrap();
        assert_eq!(bell.amps.len(), 2);
        assert_relative_eq!(bell.amps[0].re, std::f64::consts::FRAC_1_SQRT_2);
        assert_eq!(bell.motion, None);
        assert_relative_eq!(bell.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn custom_initial_state_is_parsed_checked_and_normalized() {
        let cfg = RunConfig::parse(
            r#"
mode = "nrw"
initial = [[0.6, 0.0], [0.0, 0.8]]
"#,
        )
        .unwrap();
        let state = cfg.initial_state().unwrap();
        assert_relative_eq!(state.amps[0].re, 0.6, max_relative = 1e-15);
        assert_eq!(state.amps[0].im, 0.0);
        assert_eq!(state.amps[1].re, 0.0);
        assert_relative_eq!(state.amps[1].im, 0.8, max_relative = 1e-15);

        // Wrong slot count for the mode.
        let err = RunConfig::parse("initial = [[1.0, 0.0], [0.0, 0.0]]\n");
        assert!(err.is_err(), "rw mode needs 4 amplitudes");

        // Off-norm by more than the slack.
        let err = RunConfig::parse(
            r#"
mode = "nrw"
initial = [[0.6, 0.0], [0.0, 0.7]]
"#,
        );
        assert!(err.is_err());
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let cfg = RunConfig {
            name: "roundtrip".to_string(),
            gamma_a: 0.125,
            initial: InitialSpec::Custom(vec![[0.6, 0.0], [0.0, 0.8]]),
            mode: ModeChoice::Nrw,
            ..RunConfig::default()
        };
        let text = cfg.to_toml_string().unwrap();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn sweep_axes_cover_the_numeric_keys() {
        let mut cfg = RunConfig::default();
        cfg.set_axis("gamma_c", 0.25).unwrap();
        assert_eq!(cfg.gamma_c, 0.25);
        cfg.set_axis("eta_T", 0.0).unwrap();
        assert_eq!(cfg.eta_t, 0.0);
        cfg.set_axis("n_photon", 2.0).unwrap();
        assert_eq!(cfg.n_photon, 2);
        assert!(cfg.set_axis("n_photon", 1.5).is_err());
        assert!(cfg.set_axis("sample_every", 0.0).is_err());
        assert!(cfg.set_axis("mode", 1.0).is_err());
        let msg = cfg.set_axis("nonsense", 1.0).unwrap_err().to_string();
        assert!(msg.contains("nonsense"));
    }

    #[test]
    fn bad_names_are_rejected() {
        for bad in ["", "a/b", "white space", "semi;colon"] {
            let cfg = RunConfig {
                name: bad.to_string(),
                ..RunConfig::default()
            };
            assert!(cfg.validate().is_err(), "accepted name {bad:?}");
        }
    }
}
