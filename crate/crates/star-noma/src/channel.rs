//! Reproducible fading channel generation for every link of the system.
//!
//! Links and their models (defaults; exponents and the Rician factor live
//! in [`ChannelParams`](crate::config::ChannelParams)):
//!
//! | link            | symbol  | fading   | exponent       |
//! |-----------------|---------|----------|----------------|
//! | BS -> RIS       | `h_br`  | Rician   | `alpha_los`    |
//! | RIS -> user 1   | `h_r1`  | Rician   | `alpha_nlos_r` |
//! | RIS -> user 2   | `h_t2`  | Rician   | `alpha_nlos_t` |
//! | RIS -> eve      | `h_re`  | Rician   | `alpha_nlos_r` |
//! | BS -> user 1    | `h_b1`  | Rayleigh | `alpha_direct` |
//! | BS -> eve       | `h_be`  | Rayleigh | `alpha_direct` |
//!
//! The BS -> user 2 direct link is identically zero (blocked).
//!
//! Randomness comes from a single `ChaCha8` stream seeded with a `u64`;
//! links are drawn in the fixed order `h_br, h_r1, h_t2, h_re, h_b1,
//! h_be`, so a (config, seed) pair pins the realization bit for bit. The
//! deterministic line-of-sight component uses a far-field planar model:
//! arrays are uniform with half-wavelength spacing, laid along the
//! in-plane axis perpendicular to the BS-RIS line, and the per-element
//! phase toward a node at angle `psi` off that line's normal is
//! `exp(j*pi*k*sin(psi))`.

use crate::config::{ConfigError, Geometry, SystemConfig};
use crate::{C64, CMat, CVec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("path loss needs a positive distance, got {0}")]
    BadDistance(f64),
    #[error("config violates invariants: {0}")]
    BadConfig(#[from] ConfigError),
    #[error("channel dump is malformed: {0}")]
    BadDump(String),
}

/// One fading draw of every link, dimensions tied to `(K, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// BS -> RIS, `K x N`.
    pub h_br: CMat,
    /// RIS -> user 1, length `K`.
    pub h_r1: CVec,
    /// RIS -> user 2, length `K`.
    pub h_t2: CVec,
    /// RIS -> eve, length `K`.
    pub h_re: CVec,
    /// BS -> user 1 direct, length `N`.
    pub h_b1: CVec,
    /// BS -> eve direct, length `N`.
    pub h_be: CVec,
    /// Seed that produced this draw.
    pub seed_used: u64,
}

impl ChannelRealization {
    pub fn elements(&self) -> usize {
        self.h_br.nrows()
    }
    pub fn antennas(&self) -> usize {
        self.h_br.ncols()
    }
}

/// Linear power gain `lambda0 * d^(-alpha)`.
pub fn path_loss(distance: f64, exponent: f64, lambda0: f64) -> Result<f64, ChannelError> {
    if !(distance > 0.0) {
        return Err(ChannelError::BadDistance(distance));
    }
    Ok(lambda0 * distance.powf(-exponent))
}

/// One standard circularly-symmetric complex Gaussian sample (unit
/// second moment).
fn cn01<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Rayleigh matrix: independent CN(0,1) entries.
pub fn draw_rayleigh<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| cn01(rng))
}

/// Rician matrix around a unit-modulus line-of-sight component:
/// `sqrt(k/(1+k)) * los + sqrt(1/(1+k)) * G` with `G` iid CN(0,1).
/// Per-entry second moment is 1 for any `k >= 0`.
pub fn draw_rician<R: Rng>(los: &CMat, k_factor: f64, rng: &mut R) -> CMat {
    let w_los = (k_factor / (1.0 + k_factor)).sqrt();
    let w_sc = (1.0 / (1.0 + k_factor)).sqrt();
    CMat::from_fn(los.nrows(), los.ncols(), |i, j| {
        los[(i, j)] * w_los + cn01(rng) * w_sc
    })
}

/// Steering phases of a half-wavelength uniform array along direction
/// sine `s`: entry `k` is `exp(j*pi*k*s)`.
fn steering(n: usize, s: f64) -> CVec {
    CVec::from_fn(n, |k, _| (C64::i() * std::f64::consts::PI * k as f64 * s).exp())
}

/// Direction sine of the ray `from -> to` against the array axis at
/// `from`. The axis is the in-plane perpendicular of the BS-RIS line, so
/// the sine is the projection of the unit ray onto that axis.
fn direction_sine(geom: &Geometry, from: [f64; 2], to: [f64; 2]) -> f64 {
    let nx = geom.ris[0] - geom.bs[0];
    let ny = geom.ris[1] - geom.bs[1];
    let nn = (nx * nx + ny * ny).sqrt().max(1e-300);
    // in-plane axis perpendicular to the BS->RIS normal
    let (tx, ty) = (-ny / nn, nx / nn);
    let ux = to[0] - from[0];
    let uy = to[1] - from[1];
    let un = (ux * ux + uy * uy).sqrt().max(1e-300);
    (ux * tx + uy * ty) / un
}

/// Rank-one line-of-sight matrix for the BS -> RIS link.
fn los_bs_ris(geom: &Geometry, k: usize, n: usize) -> CMat {
    let arrive = steering(k, direction_sine(geom, geom.ris, geom.bs));
    let depart = steering(n, direction_sine(geom, geom.bs, geom.ris));
    &arrive * depart.transpose()
}

/// Line-of-sight vector for a RIS -> node link.
fn los_ris_to(geom: &Geometry, node: [f64; 2], k: usize) -> CMat {
    let v = steering(k, direction_sine(geom, geom.ris, node));
    CMat::from_fn(k, 1, |i, _| v[i])
}

/// Draw every link for one realization. Pure in `(cfg, seed)`.
pub fn generate_channels(cfg: &SystemConfig, seed: u64) -> Result<ChannelRealization, ChannelError> {
    let violations = crate::config::validate(cfg);
    if !violations.is_empty() {
        return Err(ChannelError::BadConfig(ConfigError::Invalid(
            crate::config::ViolationList(violations),
        )));
    }
    let k = cfg.elements;
    let n = cfg.antennas;
    let g = &cfg.geometry;
    let p = &cfg.channel;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let scale = |d: f64, a: f64| -> Result<f64, ChannelError> {
        Ok(path_loss(d, a, p.lambda0)?.sqrt())
    };

    let h_br = draw_rician(&los_bs_ris(g, k, n), p.rician_k, &mut rng)
        * C64::from(scale(g.d_bs_ris(), p.alpha_los)?);
    let h_r1 = draw_rician(&los_ris_to(g, g.user1, k), p.rician_k, &mut rng)
        * C64::from(scale(g.d_ris_user1(), p.alpha_nlos_r)?);
    let h_t2 = draw_rician(&los_ris_to(g, g.user2, k), p.rician_k, &mut rng)
        * C64::from(scale(g.d_ris_user2(), p.alpha_nlos_t)?);
    let h_re = draw_rician(&los_ris_to(g, g.eve, k), p.rician_k, &mut rng)
        * C64::from(scale(g.d_ris_eve(), p.alpha_nlos_r)?);
    let h_b1 = draw_rayleigh(n, 1, &mut rng) * C64::from(scale(g.d_bs_user1(), p.alpha_direct)?);
    let h_be = draw_rayleigh(n, 1, &mut rng) * C64::from(scale(g.d_bs_eve(), p.alpha_direct)?);

    let col = |m: CMat| CVec::from_column_slice(m.as_slice());
    Ok(ChannelRealization {
        h_br,
        h_r1: col(h_r1),
        h_t2: col(h_t2),
        h_re: col(h_re),
        h_b1: col(h_b1),
        h_be: col(h_be),
        seed_used: seed,
    })
}

/// Closed-form mean of `E[||h||^2]` for a RIS-side link: `K` entries of
/// unit second moment scaled by the link path loss.
pub fn expected_link_power(k: usize, d: f64, alpha: f64, lambda0: f64) -> f64 {
    k as f64 * lambda0 * d.powf(-alpha)
}

// ---------------------------------------------------------------------------
// Text dump format, one realization per file:
//
//   channels v1
//   seed <u64>
//   link <name> <rows> <cols>
//   <re> <im>            (one entry per line, column-major)
//   ...
//
// Floats are written with shortest round-trip precision.
// ---------------------------------------------------------------------------

fn write_link(out: &mut String, name: &str, rows: usize, cols: usize, data: &[C64]) {
    writeln!(out, "link {name} {rows} {cols}").unwrap();
    for v in data {
        writeln!(out, "{} {}", v.re, v.im).unwrap();
    }
}

/// Serialize a realization to the documented text layout.
pub fn dump_channels(ch: &ChannelRealization) -> String {
    let mut out = String::new();
    writeln!(out, "channels v1").unwrap();
    writeln!(out, "seed {}", ch.seed_used).unwrap();
    write_link(&mut out, "h_br", ch.h_br.nrows(), ch.h_br.ncols(), ch.h_br.as_slice());
    write_link(&mut out, "h_r1", ch.h_r1.len(), 1, ch.h_r1.as_slice());
    write_link(&mut out, "h_t2", ch.h_t2.len(), 1, ch.h_t2.as_slice());
    write_link(&mut out, "h_re", ch.h_re.len(), 1, ch.h_re.as_slice());
    write_link(&mut out, "h_b1", ch.h_b1.len(), 1, ch.h_b1.as_slice());
    write_link(&mut out, "h_be", ch.h_be.len(), 1, ch.h_be.as_slice());
    out
}

/// Parse a dump produced by [`dump_channels`].
pub fn parse_channels(text: &str) -> Result<ChannelRealization, ChannelError> {
    let mut lines = text.lines();
    let bad = |m: &str| ChannelError::BadDump(m.to_string());
    if lines.next() != Some("channels v1") {
        return Err(bad("missing `channels v1` header"));
    }
    let seed_line = lines.next().ok_or_else(|| bad("missing seed line"))?;
    let seed: u64 = seed_line
        .strip_prefix("seed ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("malformed seed line"))?;

    let mut read_link = |expect: &str| -> Result<CMat, ChannelError> {
        let header = lines.next().ok_or_else(|| bad("truncated dump"))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("link") {
            return Err(bad("expected `link` header"));
        }
        let name = parts.next().ok_or_else(|| bad("missing link name"))?;
        if name != expect {
            return Err(ChannelError::BadDump(format!(
                "expected link `{expect}`, found `{name}`"
            )));
        }
        let rows: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad row count"))?;
        let cols: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad column count"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let line = lines.next().ok_or_else(|| bad("truncated link data"))?;
            let mut it = line.split_whitespace();
            let re: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad entry"))?;
            let im: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad entry"))?;
            data.push(C64::new(re, im));
        }
        Ok(CMat::from_column_slice(rows, cols, &data))
    };

    let h_br = read_link("h_br")?;
    let to_vec = |m: CMat| CVec::from_column_slice(m.as_slice());
    let h_r1 = to_vec(read_link("h_r1")?);
    let h_t2 = to_vec(read_link("h_t2")?);
    let h_re = to_vec(read_link("h_re")?);
    let h_b1 = to_vec(read_link("h_b1")?);
    let h_be = to_vec(read_link("h_be")?);
    Ok(ChannelRealization {
        h_br,
        h_r1,
        h_t2,
        h_re,
        h_b1,
        h_be,
        seed_used: seed,
    })
}
