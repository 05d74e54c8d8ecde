//! System configuration: geometry, counts, powers, channel and algorithm
//! parameters.
//!
//! All dB/dBm quantities are converted to linear units at parse time; the
//! rest of the crate only ever sees watts and linear gains. The TOML schema
//! is documented field by field on [`RawConfig`]; every key is optional
//! except that operations which consume transmit power insist on
//! `pmax_dbm` being set somewhere (file, override, or sweep axis).

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// x dBm -> watts.
pub fn dbm_to_watts(x: f64) -> f64 {
    10f64.powf((x - 30.0) / 10.0)
}

/// x dB -> linear power ratio.
pub fn db_to_linear(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// watts -> dBm (used when echoing configs back out).
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// 2-D node positions in meters.
///
/// The surface plane passes through `ris` perpendicular to the BS-RIS
/// line; the reflection side is the BS side. User 1 and the eavesdropper
/// must sit on the reflection side, user 2 on the transmission side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub bs: [f64; 2],
    pub ris: [f64; 2],
    pub user1: [f64; 2],
    pub user2: [f64; 2],
    pub eve: [f64; 2],
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            bs: [0.0, 0.0],
            ris: [50.0, 0.0],
            user1: [45.0, 5.0],
            user2: [55.0, 5.0],
            eve: [48.0, 8.0],
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Geometry {
    pub fn d_bs_ris(&self) -> f64 {
        dist(self.bs, self.ris)
    }
    pub fn d_ris_user1(&self) -> f64 {
        dist(self.ris, self.user1)
    }
    pub fn d_ris_user2(&self) -> f64 {
        dist(self.ris, self.user2)
    }
    pub fn d_ris_eve(&self) -> f64 {
        dist(self.ris, self.eve)
    }
    pub fn d_bs_user1(&self) -> f64 {
        dist(self.bs, self.user1)
    }
    pub fn d_bs_eve(&self) -> f64 {
        dist(self.bs, self.eve)
    }

    /// Signed distance of `p` along the surface normal (the BS->RIS
    /// direction). Negative values are on the reflection side.
    pub fn side_of(&self, p: [f64; 2]) -> f64 {
        let nx = self.ris[0] - self.bs[0];
        let ny = self.ris[1] - self.bs[1];
        let norm = (nx * nx + ny * ny).sqrt();
        ((p[0] - self.ris[0]) * nx + (p[1] - self.ris[1]) * ny) / norm.max(1e-300)
    }

    /// Angle (radians, from the x-axis) of the ray `from -> to`.
    pub fn angle(from: [f64; 2], to: [f64; 2]) -> f64 {
        (to[1] - from[1]).atan2(to[0] - from[0])
    }
}

/// Path-loss and fading parameters, all linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Reference gain at 1 m (linear).
    pub lambda0: f64,
    /// Exponent for the BS-RIS link.
    pub alpha_los: f64,
    /// Exponent for RIS links toward the reflection side (user 1, eve).
    pub alpha_nlos_r: f64,
    /// Exponent for RIS links toward the transmission side (user 2).
    pub alpha_nlos_t: f64,
    /// Exponent for the direct BS-user / BS-eve links.
    pub alpha_direct: f64,
    /// Rician factor (linear) for the BS-RIS and RIS-side links.
    pub rician_k: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            lambda0: db_to_linear(-30.0),
            alpha_los: 2.0,
            alpha_nlos_r: 2.8,
            alpha_nlos_t: 3.0,
            alpha_direct: 3.0,
            rician_k: 1.0,
        }
    }
}

/// Knobs of the alternating optimization loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmParams {
    /// Convergence threshold on objective change.
    pub epsilon: f64,
    /// Initial binary-penalty coefficient.
    pub zeta0: f64,
    /// Initial rank-penalty coefficient.
    pub xi0: f64,
    /// Penalty scaling factor, > 1.
    pub omega: f64,
    /// Inner-loop iteration cap (per stage).
    pub max_inner: usize,
    /// Outer-loop iteration cap.
    pub max_outer: usize,
    /// Conic solver feasibility/optimality tolerance.
    pub solver_tol: f64,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        AlgorithmParams {
            epsilon: 0.01,
            zeta0: 1e-4,
            xi0: 1e-4,
            omega: 1.5,
            max_inner: 30,
            max_outer: 20,
            solver_tol: 1e-7,
        }
    }
}

/// Switches for the formulation variants that the printed derivation
/// leaves ambiguous. Defaults follow the main text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ModelOptions {
    /// Evaluate user-1 SINR denominators with the jamming leakage of both
    /// beams instead of only beam 1.
    pub jamming_full_leakage: bool,
    /// Literal multiplier update sqrt(r12/tau) instead of the
    /// equality-achieving sqrt(r12/Gamma).
    pub mu_update_literal_tau: bool,
    /// Keep the printed sign on the spectral-norm term of the rank
    /// penalty (the default uses the tight difference-of-convex form).
    pub rank_penalty_printed_sign: bool,
    /// Add the binary penalty to the objective instead of subtracting it.
    pub binary_penalty_added: bool,
    /// Scale the penalty coefficients once per outer iteration instead of
    /// once per passive inner iteration.
    pub penalty_scale_per_outer: bool,
    /// Drop the lifted trace ordering constraint between the two users'
    /// own-signal powers.
    pub disable_sic_trace: bool,
}

/// Fully resolved system configuration. Immutable once built; cheap to
/// clone and safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// BS antenna count N.
    pub antennas: usize,
    /// STAR-RIS element count K.
    pub elements: usize,
    /// Transmit power budget in watts; `None` until a power is chosen.
    pub pmax: Option<f64>,
    /// Noise power in watts.
    pub sigma2: f64,
    /// Leakage tolerance in bits/s/Hz.
    pub tau: f64,
    pub geometry: Geometry,
    pub channel: ChannelParams,
    pub algorithm: AlgorithmParams,
    pub model: ModelOptions,
    /// Base RNG seed.
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            antennas: 2,
            elements: 30,
            pmax: None,
            sigma2: dbm_to_watts(-90.0),
            tau: 1.0,
            geometry: Geometry::default(),
            channel: ChannelParams::default(),
            algorithm: AlgorithmParams::default(),
            model: ModelOptions::default(),
            seed: 0,
        }
    }
}

impl SystemConfig {
    /// Transmit power in watts, or an error asking for it explicitly.
    pub fn require_pmax(&self) -> Result<f64, ConfigError> {
        self.pmax.ok_or(ConfigError::MissingPower)
    }

    /// Copy with the transmit power set from a dBm value.
    pub fn with_power_dbm(&self, dbm: f64) -> SystemConfig {
        let mut c = self.clone();
        c.pmax = Some(dbm_to_watts(dbm));
        c
    }

    /// Copy with a different element count.
    pub fn with_elements(&self, k: usize) -> SystemConfig {
        let mut c = self.clone();
        c.elements = k;
        c
    }
}

/// On-disk schema. Every field is optional; absent fields take the
/// defaults listed below. dB/dBm fields are converted at resolution time.
///
/// ```toml
/// antennas = 2            # N, default 2
/// elements = 30           # K, default 30
/// pmax_dbm = 20.0         # no default; required by optimization runs
/// noise_dbm = -90.0       # default -90 dBm
/// tau = 1.0               # leakage tolerance, bits/s/Hz, default 1
/// seed = 0                # base RNG seed, default 0
///
/// [geometry]              # meters; defaults shown
/// bs = [0.0, 0.0]
/// ris = [50.0, 0.0]
/// user1 = [45.0, 5.0]     # reflection side
/// user2 = [55.0, 5.0]     # transmission side
/// eve = [48.0, 8.0]       # reflection side
///
/// [channel]
/// lambda0_db = -30.0      # reference gain at 1 m
/// alpha_los = 2.0         # BS-RIS exponent
/// alpha_nlos_r = 2.8      # RIS -> reflection-side exponent
/// alpha_nlos_t = 3.0      # RIS -> transmission-side exponent
/// alpha_direct = 3.0      # direct-link exponent
/// rician_k = 1.0          # Rician factor, linear
///
/// [algorithm]
/// epsilon = 0.01
/// zeta0 = 1e-4
/// xi0 = 1e-4
/// omega = 1.5
/// max_inner = 30
/// max_outer = 20
/// solver_tol = 1e-7
///
/// [model]                 # formulation variant switches, all false
/// jamming_full_leakage = false
/// mu_update_literal_tau = false
/// rank_penalty_printed_sign = false
/// binary_penalty_added = false
/// penalty_scale_per_outer = false
/// disable_sic_trace = false
/// ```
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub antennas: Option<usize>,
    pub elements: Option<usize>,
    pub pmax_dbm: Option<f64>,
    pub noise_dbm: Option<f64>,
    pub tau: Option<f64>,
    pub seed: Option<u64>,
    pub geometry: Option<Geometry>,
    pub channel: Option<RawChannel>,
    pub algorithm: Option<RawAlgorithm>,
    pub model: Option<ModelOptions>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChannel {
    pub lambda0_db: Option<f64>,
    pub alpha_los: Option<f64>,
    pub alpha_nlos_r: Option<f64>,
    pub alpha_nlos_t: Option<f64>,
    pub alpha_direct: Option<f64>,
    pub rician_k: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAlgorithm {
    pub epsilon: Option<f64>,
    pub zeta0: Option<f64>,
    pub xi0: Option<f64>,
    pub omega: Option<f64>,
    pub max_inner: Option<usize>,
    pub max_outer: Option<usize>,
    pub solver_tol: Option<f64>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid value for key `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("config violates invariants: {0}")]
    Invalid(ViolationList),
    #[error("explicit transmit power required: set `pmax_dbm` or pass a power override")]
    MissingPower,
}

/// A named invariant violation. `field` orders deterministically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ViolationList(pub Vec<Violation>);

impl fmt::Display for ViolationList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

/// Parse a TOML document into a resolved [`SystemConfig`].
///
/// Defaults are applied to absent fields and all dB/dBm quantities are
/// converted to linear units. Fails on schema errors (unknown or
/// ill-typed keys) and on invariant violations.
pub fn parse_config(text: &str) -> Result<SystemConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    resolve(&raw)
}

/// Resolve a raw document against the defaults and validate.
pub fn resolve(raw: &RawConfig) -> Result<SystemConfig, ConfigError> {
    let d = SystemConfig::default();
    let ch = raw.channel.clone().unwrap_or_default();
    let al = raw.algorithm.clone().unwrap_or_default();
    let cfg = SystemConfig {
        antennas: raw.antennas.unwrap_or(d.antennas),
        elements: raw.elements.unwrap_or(d.elements),
        pmax: raw.pmax_dbm.map(dbm_to_watts),
        sigma2: raw.noise_dbm.map(dbm_to_watts).unwrap_or(d.sigma2),
        tau: raw.tau.unwrap_or(d.tau),
        geometry: raw.geometry.unwrap_or(d.geometry),
        channel: ChannelParams {
            lambda0: ch.lambda0_db.map(db_to_linear).unwrap_or(d.channel.lambda0),
            alpha_los: ch.alpha_los.unwrap_or(d.channel.alpha_los),
            alpha_nlos_r: ch.alpha_nlos_r.unwrap_or(d.channel.alpha_nlos_r),
            alpha_nlos_t: ch.alpha_nlos_t.unwrap_or(d.channel.alpha_nlos_t),
            alpha_direct: ch.alpha_direct.unwrap_or(d.channel.alpha_direct),
            rician_k: ch.rician_k.unwrap_or(d.channel.rician_k),
        },
        algorithm: AlgorithmParams {
            epsilon: al.epsilon.unwrap_or(d.algorithm.epsilon),
            zeta0: al.zeta0.unwrap_or(d.algorithm.zeta0),
            xi0: al.xi0.unwrap_or(d.algorithm.xi0),
            omega: al.omega.unwrap_or(d.algorithm.omega),
            max_inner: al.max_inner.unwrap_or(d.algorithm.max_inner),
            max_outer: al.max_outer.unwrap_or(d.algorithm.max_outer),
            solver_tol: al.solver_tol.unwrap_or(d.algorithm.solver_tol),
        },
        model: raw.model.unwrap_or_default(),
        seed: raw.seed.unwrap_or(d.seed),
    };
    let violations = validate(&cfg);
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(ViolationList(violations)))
    }
}

/// Apply `key=value` overrides to a raw document. Keys use dotted paths
/// matching the TOML schema (`algorithm.epsilon=0.05`, `pmax_dbm=20`).
pub fn apply_override(raw: &mut RawConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    fn bad(key: &str, v: &str) -> ConfigError {
        ConfigError::BadValue {
            key: key.to_string(),
            message: format!("cannot parse `{v}`"),
        }
    }
    macro_rules! num {
        () => {
            value.parse().map_err(|_| bad(key, value))?
        };
    }
    match key {
        "antennas" => raw.antennas = Some(num!()),
        "elements" => raw.elements = Some(num!()),
        "pmax_dbm" => raw.pmax_dbm = Some(num!()),
        "noise_dbm" => raw.noise_dbm = Some(num!()),
        "tau" => raw.tau = Some(num!()),
        "seed" => raw.seed = Some(num!()),
        _ => {
            if let Some(field) = key.strip_prefix("channel.") {
                let ch = raw.channel.get_or_insert_with(Default::default);
                match field {
                    "lambda0_db" => ch.lambda0_db = Some(num!()),
                    "alpha_los" => ch.alpha_los = Some(num!()),
                    "alpha_nlos_r" => ch.alpha_nlos_r = Some(num!()),
                    "alpha_nlos_t" => ch.alpha_nlos_t = Some(num!()),
                    "alpha_direct" => ch.alpha_direct = Some(num!()),
                    "rician_k" => ch.rician_k = Some(num!()),
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.to_string(),
                            message: "unknown key".into(),
                        })
                    }
                }
            } else if let Some(field) = key.strip_prefix("algorithm.") {
                let al = raw.algorithm.get_or_insert_with(Default::default);
                match field {
                    "epsilon" => al.epsilon = Some(num!()),
                    "zeta0" => al.zeta0 = Some(num!()),
                    "xi0" => al.xi0 = Some(num!()),
                    "omega" => al.omega = Some(num!()),
                    "max_inner" => al.max_inner = Some(num!()),
                    "max_outer" => al.max_outer = Some(num!()),
                    "solver_tol" => al.solver_tol = Some(num!()),
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.to_string(),
                            message: "unknown key".into(),
                        })
                    }
                }
            } else if let Some(field) = key.strip_prefix("model.") {
                let m = raw.model.get_or_insert_with(Default::default);
                let b: bool = value.parse().map_err(|_| bad(key, value))?;
                match field {
                    "jamming_full_leakage" => m.jamming_full_leakage = b,
                    "mu_update_literal_tau" => m.mu_update_literal_tau = b,
                    "rank_penalty_printed_sign" => m.rank_penalty_printed_sign = b,
                    "binary_penalty_added" => m.binary_penalty_added = b,
                    "penalty_scale_per_outer" => m.penalty_scale_per_outer = b,
                    "disable_sic_trace" => m.disable_sic_trace = b,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.to_string(),
                            message: "unknown key".into(),
                        })
                    }
                }
            } else {
                return Err(ConfigError::BadValue {
                    key: key.to_string(),
                    message: "unknown key".into(),
                });
            }
        }
    }
    Ok(())
}

/// Check every invariant; returns the violations sorted by field name.
/// Violations are data, not failures.
pub fn validate(cfg: &SystemConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field: &str, message: String| {
        out.push(Violation {
            field: field.to_string(),
            message,
        })
    };
    if cfg.antennas < 1 {
        push("antennas", "antenna count must be at least 1".into());
    }
    if cfg.channel.alpha_direct < 0.0 {
        push("channel.alpha_direct", "exponent must be nonnegative".into());
    }
    if cfg.channel.alpha_los < 0.0 {
        push("channel.alpha_los", "exponent must be nonnegative".into());
    }
    if cfg.channel.alpha_nlos_r < 0.0 {
        push("channel.alpha_nlos_r", "exponent must be nonnegative".into());
    }
    if cfg.channel.alpha_nlos_t < 0.0 {
        push("channel.alpha_nlos_t", "exponent must be nonnegative".into());
    }
    if !(cfg.channel.lambda0 > 0.0) {
        push("channel.lambda0", "reference gain must be positive".into());
    }
    if cfg.channel.rician_k < 0.0 {
        push("channel.rician_k", "Rician factor must be nonnegative".into());
    }
    if cfg.elements < 1 {
        push("elements", "element count must be at least 1".into());
    }
    if cfg.geometry.side_of(cfg.geometry.eve) >= 0.0 {
        push("geometry.eve", "eavesdropper must be on the reflection side".into());
    }
    if cfg.geometry.side_of(cfg.geometry.user1) >= 0.0 {
        push("geometry.user1", "user 1 must be on the reflection side".into());
    }
    if cfg.geometry.side_of(cfg.geometry.user2) <= 0.0 {
        push("geometry.user2", "user 2 must be on the transmission side".into());
    }
    if let Some(p) = cfg.pmax {
        if !(p > 0.0) && p != 0.0 {
            push("pmax", "transmit power must be nonnegative".into());
        }
    }
    if !(cfg.sigma2 > 0.0) {
        push("sigma2", "noise power must be positive".into());
    }
    if !(cfg.tau > 0.0) {
        push("tau", "leakage tolerance must be positive".into());
    }
    if !(cfg.algorithm.epsilon > 0.0) {
        push("algorithm.epsilon", "convergence threshold must be positive".into());
    }
    if cfg.algorithm.max_inner < 1 {
        push("algorithm.max_inner", "iteration cap must be at least 1".into());
    }
    if cfg.algorithm.max_outer < 1 {
        push("algorithm.max_outer", "iteration cap must be at least 1".into());
    }
    if !(cfg.algorithm.omega > 1.0) {
        push("algorithm.omega", "scaling factor must exceed 1".into());
    }
    if !(cfg.algorithm.solver_tol > 0.0) {
        push("algorithm.solver_tol", "solver tolerance must be positive".into());
    }
    if !(cfg.algorithm.xi0 > 0.0) {
        push("algorithm.xi0", "rank penalty must be positive".into());
    }
    if !(cfg.algorithm.zeta0 > 0.0) {
        push("algorithm.zeta0", "binary penalty must be positive".into());
    }
    out.sort_by(|a, b| a.field.cmp(&b.field));
    out
}

/// Serialize a resolved config back to TOML (dB fields re-derived), so
/// that parse -> serialize -> parse round-trips.
pub fn to_toml(cfg: &SystemConfig) -> String {
    let raw = RawConfig {
        antennas: Some(cfg.antennas),
        elements: Some(cfg.elements),
        pmax_dbm: cfg.pmax.map(watts_to_dbm),
        noise_dbm: Some(watts_to_dbm(cfg.sigma2)),
        tau: Some(cfg.tau),
        seed: Some(cfg.seed),
        geometry: Some(cfg.geometry),
        channel: Some(RawChannel {
            lambda0_db: Some(10.0 * cfg.channel.lambda0.log10()),
            alpha_los: Some(cfg.channel.alpha_los),
            alpha_nlos_r: Some(cfg.channel.alpha_nlos_r),
            alpha_nlos_t: Some(cfg.channel.alpha_nlos_t),
            alpha_direct: Some(cfg.channel.alpha_direct),
            rician_k: Some(cfg.channel.rician_k),
        }),
        algorithm: Some(RawAlgorithm {
            epsilon: Some(cfg.algorithm.epsilon),
            zeta0: Some(cfg.algorithm.zeta0),
            xi0: Some(cfg.algorithm.xi0),
            omega: Some(cfg.algorithm.omega),
            max_inner: Some(cfg.algorithm.max_inner),
            max_outer: Some(cfg.algorithm.max_outer),
            solver_tol: Some(cfg.algorithm.solver_tol),
        }),
        model: Some(cfg.model),
    };
    toml::to_string_pretty(&raw).expect("config serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_sparse_document() {
        let cfg = parse_config("elements = 30\nantennas = 2\n").unwrap();
        assert_eq!(cfg.elements, 30);
        assert_eq!(cfg.antennas, 2);
        assert_eq!(cfg.tau, 1.0);
        assert_eq!(cfg.algorithm.epsilon, 0.01);
        assert_eq!(cfg.algorithm.omega, 1.5);
        assert_eq!(cfg.algorithm.zeta0, 1e-4);
        assert_eq!(cfg.algorithm.xi0, 1e-4);
        assert!((cfg.sigma2 - 1e-12).abs() < 1e-24);
        assert!(cfg.pmax.is_none());
    }

    #[test]
    fn missing_power_is_demanded_when_required() {
        let cfg = parse_config("").unwrap();
        let err = cfg.require_pmax().unwrap_err();
        assert!(matches!(err, ConfigError::MissingPower));
    }

    #[test]
    fn db_conversions() {
        let cfg = parse_config("[channel]\nlambda0_db = -30.0\n").unwrap();
        assert!((cfg.channel.lambda0 - 1e-3).abs() < 1e-15);
        assert!((dbm_to_watts(-90.0) - 1e-12).abs() < 1e-24);
        assert!((db_to_linear(-30.0) - 1e-3).abs() < 1e-15);
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_is_a_parse_error_naming_it() {
        let err = parse_config("elemnts = 30\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("elemnts"), "{msg}");
    }

    #[test]
    fn validate_default_is_clean() {
        assert!(validate(&SystemConfig::default()).is_empty());
    }

    #[test]
    fn validate_flags_omega() {
        let mut cfg = SystemConfig::default();
        cfg.algorithm.omega = 0.9;
        let v = validate(&cfg);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "algorithm.omega");
    }

    #[test]
    fn validate_flags_geometry_side() {
        let mut cfg = SystemConfig::default();
        cfg.geometry.user2 = [45.0, 5.0]; // reflection side
        let v = validate(&cfg);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "geometry.user2");
    }

    #[test]
    fn violations_sorted_by_field() {
        let mut cfg = SystemConfig::default();
        cfg.tau = -1.0;
        cfg.algorithm.omega = 0.5;
        cfg.elements = 0;
        let v = validate(&cfg);
        let fields: Vec<_> = v.iter().map(|x| x.field.clone()).collect();
        let mut sorted = fields.clone();
        sorted.sort();
        assert_eq!(fields, sorted);
        assert_eq!(fields, vec!["algorithm.omega", "elements", "tau"]);
    }

    #[test]
    fn parse_serialize_parse_round_trip() {
        let cfg = parse_config("pmax_dbm = 20.0\nseed = 7\n[channel]\nrician_k = 2.5\n").unwrap();
        let text = to_toml(&cfg);
        let cfg2 = parse_config(&text).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn overrides() {
        let mut raw = RawConfig::default();
        apply_override(&mut raw, "pmax_dbm", "20").unwrap();
        apply_override(&mut raw, "algorithm.epsilon", "0.05").unwrap();
        apply_override(&mut raw, "model.disable_sic_trace", "true").unwrap();
        let cfg = resolve(&raw).unwrap();
        assert!((cfg.pmax.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(cfg.algorithm.epsilon, 0.05);
        assert!(cfg.model.disable_sic_trace);
        let err = apply_override(&mut raw, "nope", "1").unwrap_err();
        assert!(err.to_string().contains("nope"));
    }
}
