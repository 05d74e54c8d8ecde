//! Exact SINR/rate evaluation and the lifted trace forms both optimizers
//! are built on.
//!
//! # Lifting convention
//!
//! With the surface response matrix `Theta_z = diag(beta_z .* phi_z)`,
//! user 1's received amplitude for beam `w` is
//! `(h_r1^H Theta_r h_br + h_b1^H) w`. Writing `u = H1 w` with the
//! row-augmented effective channel `H1 = [diag(h_r1^H) h_br ; h_b1^H]`,
//! that amplitude equals `psi^H u` where `psi = [conj(beta .* phi); 1]`.
//! The lift of a surface vector therefore stores the *conjugated*
//! responses; with `M = psi psi^H`,
//!
//! ```text
//! Tr(H1 W H1^H M) = |(h_r1^H Theta_r h_br + h_b1^H) w|^2,   W = w w^H.
//! ```
//!
//! Jamming lifts carry a trailing 0 instead of the trailing 1 (no direct
//! path), and user 2 has no direct link, so its effective channel and
//! lift are unaugmented.

use crate::channel::ChannelRealization;
use crate::modes::Mode;
use crate::{C64, CMat, CVec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RateError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Per-element mode coefficients and responses.
///
/// `beta_*` live in `[0,1]` (binary after projection) and
/// `phi_*` are the per-element responses: unit modulus where the matching
/// beta is 1, zero otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct StarRisState {
    pub beta_r: Vec<f64>,
    pub beta_t: Vec<f64>,
    pub beta_j: Vec<f64>,
    pub phi_r: Vec<C64>,
    pub phi_t: Vec<C64>,
    pub phi_j: Vec<C64>,
}

impl StarRisState {
    pub fn elements(&self) -> usize {
        self.beta_r.len()
    }

    /// All elements off (absent surface).
    pub fn off(k: usize) -> Self {
        StarRisState {
            beta_r: vec![0.0; k],
            beta_t: vec![0.0; k],
            beta_j: vec![0.0; k],
            phi_r: vec![C64::new(0.0, 0.0); k],
            phi_t: vec![C64::new(0.0, 0.0); k],
            phi_j: vec![C64::new(0.0, 0.0); k],
        }
    }

    /// Every element pinned to one mode with the given phases.
    pub fn uniform(k: usize, mode: Mode, phases: &[f64]) -> Self {
        let mut s = StarRisState::off(k);
        for i in 0..k {
            let phi = (C64::i() * phases[i]).exp();
            match mode {
                Mode::Reflect => {
                    s.beta_r[i] = 1.0;
                    s.phi_r[i] = phi;
                }
                Mode::Transmit => {
                    s.beta_t[i] = 1.0;
                    s.phi_t[i] = phi;
                }
                Mode::Jam => {
                    s.beta_j[i] = 1.0;
                    s.phi_j[i] = phi;
                }
            }
        }
        s
    }

    pub fn beta(&self, mode: Mode) -> &[f64] {
        match mode {
            Mode::Reflect => &self.beta_r,
            Mode::Transmit => &self.beta_t,
            Mode::Jam => &self.beta_j,
        }
    }

    pub fn phi(&self, mode: Mode) -> &[C64] {
        match mode {
            Mode::Reflect => &self.phi_r,
            Mode::Transmit => &self.phi_t,
            Mode::Jam => &self.phi_j,
        }
    }

    /// Binary mode counts (reflect, transmit, jam); meaningful after
    /// projection.
    pub fn mode_counts(&self) -> (usize, usize, usize) {
        let count = |b: &[f64]| b.iter().filter(|&&x| x > 0.5).count();
        (count(&self.beta_r), count(&self.beta_t), count(&self.beta_j))
    }
}

/// Beamforming vectors with their lifted matrices and rank diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSolution {
    pub w1: CVec,
    pub w2: CVec,
    /// Lifted matrices as returned by the relaxation (not necessarily
    /// `w w^H` when the rank residual is large).
    pub w1_lifted: CMat,
    pub w2_lifted: CMat,
    /// Ratio of second-to-first eigenvalue of each lifted matrix.
    pub rank_residual_1: f64,
    pub rank_residual_2: f64,
    /// Which extraction produced `w1, w2`.
    pub path: ExtractionPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionPath {
    /// Dominant eigenpair of the lifted matrices.
    Eigenvector,
    /// Gaussian randomization repair.
    Randomized,
}

impl BeamformerSolution {
    pub fn zero(n: usize) -> Self {
        BeamformerSolution {
            w1: CVec::zeros(n),
            w2: CVec::zeros(n),
            w1_lifted: CMat::zeros(n, n),
            w2_lifted: CMat::zeros(n, n),
            rank_residual_1: 0.0,
            rank_residual_2: 0.0,
            path: ExtractionPath::Eigenvector,
        }
    }

    pub fn power(&self) -> f64 {
        self.w1.norm_squared() + self.w2.norm_squared()
    }
}

/// SINRs, rates, and feasibility flags of one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub sinr_11: f64,
    pub sinr_22: f64,
    pub sinr_12: f64,
    pub sinr_e1: f64,
    pub r_11: f64,
    pub r_22: f64,
    pub r_12: f64,
    pub r_e1: f64,
    pub sum_rate: f64,
    pub leakage_ok: bool,
    pub sic_ok: bool,
    pub power_used: f64,
}

impl RateReport {
    /// One documented text row:
    /// `sinr_11 sinr_22 sinr_12 sinr_e1 r_11 r_22 r_12 r_e1 sum_rate
    /// leakage_ok sic_ok power_used` (space separated, shortest
    /// round-trip floats, booleans as 0/1).
    pub fn to_row(&self) -> String {
        format!(
            "{} {} {} {} {} {} {} {} {} {} {} {}",
            self.sinr_11,
            self.sinr_22,
            self.sinr_12,
            self.sinr_e1,
            self.r_11,
            self.r_22,
            self.r_12,
            self.r_e1,
            self.sum_rate,
            self.leakage_ok as u8,
            self.sic_ok as u8,
            self.power_used
        )
    }
}

/// Row-augmented effective channels: `h1` and `he` carry the direct link
/// in their last row, `h2` has no direct component.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels {
    /// `(K+1) x N`.
    pub h1: CMat,
    /// `K x N`.
    pub h2: CMat,
    /// `(K+1) x N`.
    pub he: CMat,
}

/// `Theta_z = diag(beta_z .* phi_z)` for the requested mode.
pub fn assemble_theta(state: &StarRisState, mode: Mode) -> CMat {
    let k = state.elements();
    let beta = state.beta(mode);
    let phi = state.phi(mode);
    CMat::from_fn(k, k, |i, j| {
        if i == j {
            phi[i] * beta[i]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Augmented lift of a weighted response vector: `[conj(beta .* phi); anchor]`
/// when `anchor` is given, plain `conj(beta .* phi)` otherwise.
pub fn lift_vector(beta: &[f64], phi: &[C64], anchor: Option<f64>) -> CVec {
    let k = beta.len();
    let extra = anchor.is_some() as usize;
    CVec::from_fn(k + extra, |i, _| {
        if i < k {
            (phi[i] * beta[i]).conj()
        } else {
            C64::from(anchor.unwrap())
        }
    })
}

/// Build the effective channel matrices from one realization.
pub fn build_effective_channels(ch: &ChannelRealization) -> EffectiveChannels {
    let k = ch.elements();
    let n = ch.antennas();
    let cascade = |h: &CVec| -> CMat {
        // diag(h^H) * h_br: row k of h_br scaled by conj(h[k])
        let mut m = ch.h_br.clone();
        for i in 0..k {
            let c = h[i].conj();
            for j in 0..n {
                m[(i, j)] *= c;
            }
        }
        m
    };
    let stack = |top: CMat, bottom: &CVec| -> CMat {
        let mut m = CMat::zeros(k + 1, n);
        m.view_mut((0, 0), (k, n)).copy_from(&top);
        for j in 0..n {
            m[(k, j)] = bottom[j].conj();
        }
        m
    };
    EffectiveChannels {
        h1: stack(cascade(&ch.h_r1), &ch.h_b1),
        h2: cascade(&ch.h_t2),
        he: stack(cascade(&ch.h_re), &ch.h_be),
    }
}

/// `Tr(H W H^H M)`, returned as its real part.
///
/// For Hermitian `W`, `M` the trace is real up to rounding; the imaginary
/// part is asserted below `1e-10 * (1 + |Re|)`.
pub fn lifted_trace(h: &CMat, w: &CMat, m: &CMat) -> Result<f64, RateError> {
    let (rows, cols) = h.shape();
    if w.shape() != (cols, cols) || m.shape() != (rows, rows) {
        return Err(RateError::Dimension(format!(
            "H is {rows}x{cols}, W is {:?}, M is {:?}",
            w.shape(),
            m.shape()
        )));
    }
    let t = (h * w * h.adjoint() * m).trace();
    debug_assert!(
        t.im.abs() <= 1e-10 * (1.0 + t.re.abs()),
        "trace form has imaginary residue {:.3e}",
        t.im
    );
    Ok(t.re)
}

fn abs2(x: C64) -> f64 {
    x.norm_sqr()
}

/// Received amplitudes of the four relevant cascades for a beam `w`.
struct Cascades {
    /// `(h_r1^H Theta_r h_br + h_b1^H)`
    user1: nalgebra::Matrix1xX<C64>,
    /// `h_r1^H Theta_j h_br`
    user1_jam: nalgebra::Matrix1xX<C64>,
    /// `h_t2^H Theta_t h_br`
    user2: nalgebra::Matrix1xX<C64>,
    /// `(h_re^H Theta_r h_br + h_be^H)`
    eve: nalgebra::Matrix1xX<C64>,
    /// `h_re^H Theta_j h_br`
    eve_jam: nalgebra::Matrix1xX<C64>,
}

fn cascades(ch: &ChannelRealization, state: &StarRisState) -> Cascades {
    let th_r = assemble_theta(state, Mode::Reflect);
    let th_t = assemble_theta(state, Mode::Transmit);
    let th_j = assemble_theta(state, Mode::Jam);
    let user1 = ch.h_r1.adjoint() * &th_r * &ch.h_br + ch.h_b1.adjoint();
    let user1_jam = ch.h_r1.adjoint() * &th_j * &ch.h_br;
    let user2 = ch.h_t2.adjoint() * &th_t * &ch.h_br;
    let eve = ch.h_re.adjoint() * &th_r * &ch.h_br + ch.h_be.adjoint();
    let eve_jam = ch.h_re.adjoint() * &th_j * &ch.h_br;
    Cascades {
        user1: nalgebra::Matrix1xX::from_iterator(ch.antennas(), user1.iter().cloned()),
        user1_jam: nalgebra::Matrix1xX::from_iterator(ch.antennas(), user1_jam.iter().cloned()),
        user2: nalgebra::Matrix1xX::from_iterator(ch.antennas(), user2.iter().cloned()),
        eve: nalgebra::Matrix1xX::from_iterator(ch.antennas(), eve.iter().cloned()),
        eve_jam: nalgebra::Matrix1xX::from_iterator(ch.antennas(), eve_jam.iter().cloned()),
    }
}

/// Evaluate the four SINRs and rates exactly as modeled.
///
/// `full_leakage` additionally counts the jamming leakage of beam 2 in
/// user 1's denominators (the eavesdropper always sees both).
pub fn compute_rates_with(
    ch: &ChannelRealization,
    beams: &BeamformerSolution,
    state: &StarRisState,
    sigma2: f64,
    tau: f64,
    full_leakage: bool,
) -> Result<RateReport, RateError> {
    if beams.w1.len() != ch.antennas() || beams.w2.len() != ch.antennas() {
        return Err(RateError::Dimension(format!(
            "beamformers have lengths {}/{}, channels expect {}",
            beams.w1.len(),
            beams.w2.len(),
            ch.antennas()
        )));
    }
    if state.elements() != ch.elements() {
        return Err(RateError::Dimension(format!(
            "state has {} elements, channels expect {}",
            state.elements(),
            ch.elements()
        )));
    }
    let c = cascades(ch, state);
    let dot = |row: &nalgebra::Matrix1xX<C64>, w: &CVec| -> C64 { (row * w)[(0, 0)] };

    let s11_num = abs2(dot(&c.user1, &beams.w1));
    let s12_num = abs2(dot(&c.user1, &beams.w2));
    let j1_w1 = abs2(dot(&c.user1_jam, &beams.w1));
    let j1_w2 = abs2(dot(&c.user1_jam, &beams.w2));
    let s22_num = abs2(dot(&c.user2, &beams.w2));
    let s22_int = abs2(dot(&c.user2, &beams.w1));
    let se_num = abs2(dot(&c.eve, &beams.w1));
    let je_w1 = abs2(dot(&c.eve_jam, &beams.w1));
    let je_w2 = abs2(dot(&c.eve_jam, &beams.w2));

    let extra = if full_leakage { j1_w2 } else { 0.0 };
    let sinr_11 = s11_num / (s12_num + j1_w1 + extra + sigma2);
    let sinr_22 = s22_num / (s22_int + sigma2);
    let sinr_12 = s12_num / (s11_num + j1_w1 + extra + sigma2);
    let sinr_e1 = se_num / (je_w1 + je_w2 + sigma2);

    let rate = |s: f64| (1.0 + s).log2();
    let (r_11, r_22, r_12, r_e1) = (rate(sinr_11), rate(sinr_22), rate(sinr_12), rate(sinr_e1));
    Ok(RateReport {
        sinr_11,
        sinr_22,
        sinr_12,
        sinr_e1,
        r_11,
        r_22,
        r_12,
        r_e1,
        sum_rate: r_11 + r_22,
        leakage_ok: r_e1 <= tau + 1e-6,
        sic_ok: r_12 >= r_22 - 1e-6,
        power_used: beams.power(),
    })
}

/// [`compute_rates_with`] under the as-printed leakage model.
pub fn compute_rates(
    ch: &ChannelRealization,
    beams: &BeamformerSolution,
    state: &StarRisState,
    sigma2: f64,
    tau: f64,
) -> Result<RateReport, RateError> {
    compute_rates_with(ch, beams, state, sigma2, tau, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_channels;
    use crate::config::SystemConfig;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state<R: Rng>(k: usize, binary: bool, rng: &mut R) -> StarRisState {
        let mut s = StarRisState::off(k);
        for i in 0..k {
            let (br, bt, bj) = if binary {
                match rng.gen_range(0..3) {
                    0 => (1.0, 0.0, 0.0),
                    1 => (0.0, 1.0, 0.0),
                    _ => (0.0, 0.0, 1.0),
                }
            } else {
                let a: f64 = rng.gen_range(0.0..1.0);
                let b: f64 = rng.gen_range(0.0..(1.0 - a));
                (a, b, 1.0 - a - b)
            };
            s.beta_r[i] = br;
            s.beta_t[i] = bt;
            s.beta_j[i] = bj;
            s.phi_r[i] = (C64::i() * rng.gen_range(0.0..std::f64::consts::TAU)).exp();
            s.phi_t[i] = (C64::i() * rng.gen_range(0.0..std::f64::consts::TAU)).exp();
            s.phi_j[i] = (C64::i() * rng.gen_range(0.0..std::f64::consts::TAU)).exp();
        }
        s
    }

    fn random_beam<R: Rng>(n: usize, rng: &mut R) -> CVec {
        CVec::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn theta_assembly() {
        let k = 3;
        let state = StarRisState::uniform(k, Mode::Reflect, &[0.0; 3]);
        let th_r = assemble_theta(&state, Mode::Reflect);
        let th_t = assemble_theta(&state, Mode::Transmit);
        assert_eq!(th_r, CMat::identity(k, k));
        assert_eq!(th_t, CMat::zeros(k, k));

        let mut s = StarRisState::off(1);
        s.beta_j[0] = 1.0;
        s.phi_j[0] = (C64::i() * std::f64::consts::FRAC_PI_2).exp();
        let th_j = assemble_theta(&s, Mode::Jam);
        assert!((th_j[(0, 0)] - C64::i()).norm() < 1e-15);
        assert_eq!(assemble_theta(&s, Mode::Reflect)[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn theta_exclusive_after_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = random_state(6, true, &mut rng);
            for i in 0..6 {
                let total = s.beta_r[i] + s.beta_t[i] + s.beta_j[i];
                assert_eq!(total, 1.0);
                for m in Mode::ALL {
                    let d = assemble_theta(&s, m)[(i, i)];
                    assert!(d.norm() < 1e-12 || (d.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn effective_channel_shapes_and_rows() {
        let cfg = SystemConfig::default().with_elements(30);
        let ch = generate_channels(&cfg, 3).unwrap();
        let eff = build_effective_channels(&ch);
        assert_eq!(eff.h1.shape(), (31, 2));
        assert_eq!(eff.h2.shape(), (30, 2));
        assert_eq!(eff.he.shape(), (31, 2));
        for j in 0..2 {
            assert_eq!(eff.h1[(30, j)], ch.h_b1[j].conj());
            assert_eq!(eff.he[(30, j)], ch.h_be[j].conj());
            for i in 0..30 {
                let want = ch.h_r1[i].conj() * ch.h_br[(i, j)];
                assert!((eff.h1[(i, j)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn effective_channel_tiny_identity_case() {
        let one = C64::new(1.0, 0.0);
        let ch = ChannelRealization {
            h_br: CMat::from_element(1, 1, one),
            h_r1: CVec::from_element(1, one),
            h_t2: CVec::from_element(1, one),
            h_re: CVec::from_element(1, one),
            h_b1: CVec::from_element(1, one),
            h_be: CVec::from_element(1, one),
            seed_used: 0,
        };
        let eff = build_effective_channels(&ch);
        assert_eq!(eff.h1, CMat::from_element(2, 1, one));
    }

    #[test]
    fn zero_beams_zero_rates() {
        let cfg = SystemConfig::default().with_elements(4);
        let ch = generate_channels(&cfg, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let state = random_state(4, false, &mut rng);
        let report = compute_rates(&ch, &BeamformerSolution::zero(2), &state, 1e-12, 1.0).unwrap();
        assert_eq!(report.sum_rate, 0.0);
        assert_eq!(report.sinr_11, 0.0);
        assert!(report.leakage_ok);
        assert!(report.sic_ok);
    }

    #[test]
    fn deaf_eavesdropper_never_leaks() {
        let cfg = SystemConfig::default().with_elements(4);
        let mut ch = generate_channels(&cfg, 1).unwrap();
        ch.h_re = CVec::zeros(4);
        ch.h_be = CVec::zeros(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let state = random_state(4, true, &mut rng);
        let beams = BeamformerSolution {
            w1: random_beam(2, &mut rng),
            w2: random_beam(2, &mut rng),
            ..BeamformerSolution::zero(2)
        };
        let report = compute_rates(&ch, &beams, &state, 1e-12, 0.3).unwrap();
        assert_eq!(report.sinr_e1, 0.0);
        assert!(report.leakage_ok);
    }

    #[test]
    fn sinr22_invariant_under_common_scaling() {
        let cfg = SystemConfig::default().with_elements(5);
        let ch = generate_channels(&cfg, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let state = random_state(5, false, &mut rng);
        let w1 = random_beam(2, &mut rng);
        let w2 = random_beam(2, &mut rng);
        let beams = BeamformerSolution {
            w1: w1.clone(),
            w2: w2.clone(),
            ..BeamformerSolution::zero(2)
        };
        let c = 3.0;
        let scaled = BeamformerSolution {
            w1: w1 * C64::from(c),
            w2: w2 * C64::from(c),
            ..BeamformerSolution::zero(2)
        };
        let sigma2 = 1e-9;
        let a = compute_rates(&ch, &beams, &state, sigma2, 1.0).unwrap();
        let b = compute_rates(&ch, &scaled, &state, sigma2 * c * c, 1.0).unwrap();
        assert!((a.sinr_22 - b.sinr_22).abs() <= 1e-12 * a.sinr_22.max(1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lifting_identity(seed in 0u64..1_000_000, k in 1usize..6, n in 1usize..3) {
            let mut cfg = SystemConfig::default();
            cfg.elements = k;
            cfg.antennas = n;
            let ch = generate_channels(&cfg, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
            let state = random_state(k, rng.gen_bool(0.5), &mut rng);
            let w = random_beam(n, &mut rng);
            let beams = BeamformerSolution {
                w1: w.clone(),
                w2: w.clone(),
                ..BeamformerSolution::zero(n)
            };
            let eff = build_effective_channels(&ch);
            let big_w = &w * w.adjoint();

            // reflect + direct
            let psi = lift_vector(&state.beta_r, &state.phi_r, Some(1.0));
            let m = &psi * psi.adjoint();
            let lhs = lifted_trace(&eff.h1, &big_w, &m).unwrap();
            let report = compute_rates(&ch, &beams, &state, 1.0, 1.0).unwrap();
            let c = cascades(&ch, &state);
            let direct = abs2((&c.user1 * &w)[(0,0)]);
            prop_assert!((lhs - direct).abs() <= 1e-9 * direct.max(1e-15),
                "user1 lift {lhs} vs direct {direct}");
            // denominators agree with the report's own evaluation
            prop_assert!((report.sinr_11 * (abs2((&c.user1 * &beams.w2)[(0,0)]) + abs2((&c.user1_jam * &w)[(0,0)]) + 1.0) - direct).abs()
                <= 1e-6 * direct.max(1e-12));

            // jamming form: trailing zero
            let psi_j = lift_vector(&state.beta_j, &state.phi_j, Some(0.0));
            let mj = &psi_j * psi_j.adjoint();
            let lhs_j = lifted_trace(&eff.h1, &big_w, &mj).unwrap();
            let direct_j = abs2((&c.user1_jam * &w)[(0,0)]);
            prop_assert!((lhs_j - direct_j).abs() <= 1e-9 * direct_j.max(1e-15));

            // user 2: unaugmented
            let psi_t = lift_vector(&state.beta_t, &state.phi_t, None);
            let mt = &psi_t * psi_t.adjoint();
            let lhs_t = lifted_trace(&eff.h2, &big_w, &mt).unwrap();
            let direct_t = abs2((&c.user2 * &w)[(0,0)]);
            prop_assert!((lhs_t - direct_t).abs() <= 1e-9 * direct_t.max(1e-15));

            // eavesdropper
            let lhs_e = lifted_trace(&eff.he, &big_w, &m).unwrap();
            let direct_e = abs2((&c.eve * &w)[(0,0)]);
            prop_assert!((lhs_e - direct_e).abs() <= 1e-9 * direct_e.max(1e-15));
        }
    }

    #[test]
    fn lifted_trace_zero_matrix() {
        let h = CMat::from_element(3, 2, C64::new(1.0, 0.5));
        let w = CMat::zeros(2, 2);
        let m = CMat::identity(3, 3);
        assert_eq!(lifted_trace(&h, &w, &m).unwrap(), 0.0);
        assert!(lifted_trace(&h, &CMat::zeros(3, 3), &m).is_err());
    }
}
