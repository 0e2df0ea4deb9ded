//! Robustness of the swap-and-filter protocol when the free segment or the
//! node measurement is itself imperfect.
//!
//! Six scenarios are covered, all with one noisy link rho(p, delta) between
//! the left party and the node and one engineered free pair between the node
//! and the right party:
//!
//! - `white`: free pair psi(3/4) mixed with white noise, delta = 1/2;
//! - `photon_loss`: odd-parity free pair psi(3/4) decaying to vacuum,
//!   delta = 1/2;
//! - `me_vs_nme_white` / `me_vs_nme_loss`: Bell free pair versus psi(3/4)
//!   under the same two noise channels, delta = 3/5;
//! - `povm_white` / `povm_loss`: free pair psi(3/5) at p = 0.8 with a node
//!   whose classical outcome bits flip with probability eta.
//!
//! Each scenario evaluates the fidelity reached by the protocol that was
//! tuned for the noiseless setting: the node keeps its Bell basis, each
//! outcome keeps the local frame extracted at zero noise, and only the
//! strength of the one-sided filter is re-optimized against the actual
//! outcome state (failure falls back to the classical value 1/2). Where a
//! closed form for that quantity is available it is transcribed verbatim
//! into the catalog below and cross-checked against the engine; the
//! remaining scenarios are evaluated by the engine directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, DensityMatrix, Ket};
use crate::measures::fef;
use crate::protocols::{family_params_extract, measure_node, node_measurement, NodeMeasurement};
use crate::scenario::NodeSpec;
use crate::states;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    constraint: &'static str,
) -> Result<()> {
    if !(value >= lo && value <= hi) || value.is_nan() {
        return Err(Error::InvalidParameter {
            name,
            value,
            constraint,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Scenario catalog
// ---------------------------------------------------------------------------

/// The six analyzed noise scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessCase {
    White,
    PhotonLoss,
    PovmWhite,
    PovmLoss,
    MeVsNmeWhite,
    MeVsNmeLoss,
}

impl RobustnessCase {
    /// Parse the snake_case scenario name used in configs and on the CLI.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "white" => Ok(RobustnessCase::White),
            "photon_loss" => Ok(RobustnessCase::PhotonLoss),
            "povm_white" => Ok(RobustnessCase::PovmWhite),
            "povm_loss" => Ok(RobustnessCase::PovmLoss),
            "me_vs_nme_white" => Ok(RobustnessCase::MeVsNmeWhite),
            "me_vs_nme_loss" => Ok(RobustnessCase::MeVsNmeLoss),
            other => Err(Error::InvalidScenario(format!(
                "unknown robustness case `{other}`"
            ))),
        }
    }

    /// Whether the scenario models detector noise (and therefore uses eta).
    pub fn uses_eta(&self) -> bool {
        matches!(self, RobustnessCase::PovmWhite | RobustnessCase::PovmLoss)
    }
}

/// Noise weight of the detector scenarios' noisy link, fixed by the setup.
pub const POVM_CASE_P: f64 = 0.8;

/// One evaluated noise point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessPoint {
    pub case: RobustnessCase,
    /// Product weight of the noisy link.
    pub p: f64,
    /// Noise weight in the free segment.
    pub q: f64,
    /// Outcome-bit flip probability of the node (detector scenarios only).
    pub eta: Option<f64>,
    /// Fidelity of the noiseless protocol.
    pub f_opt: f64,
    /// Fidelity retained under noise.
    pub f_noisy: f64,
    /// Relative drop (f_opt - f_noisy)/f_opt in percent.
    pub pct_change: f64,
    /// Whether the point satisfies the scenario's validity conditions.
    pub in_validity_range: bool,
}

// ---------------------------------------------------------------------------
// Noiseless baselines
// ---------------------------------------------------------------------------

/// Feasible-protocol fidelity for a balanced entangled branch (delta = 1/2):
/// (p+1)^2 / (8p).
pub fn baseline_balanced(p: f64) -> f64 {
    (p + 1.0) * (p + 1.0) / (8.0 * p)
}

/// Feasible-protocol fidelity at delta = 3/5: (2p+3)(3p+2)/(50p).
pub fn baseline_tilted(p: f64) -> f64 {
    (2.0 * p + 3.0) * (3.0 * p + 2.0) / (50.0 * p)
}

// ---------------------------------------------------------------------------
// Closed-form catalog (transcribed expressions)
// ---------------------------------------------------------------------------

/// White noise on the psi(3/4) free pair, delta = 1/2.
fn cf_white_unbalanced(p: f64, q: f64) -> f64 {
    let w = 1.0 - q;
    let num = 2.0 * (p - 1.0) * (p - 1.0) * (2.0 * p - 1.0) * w * w * w
        + 2.0 * (p - 1.0) * (p * (p + 5.0) - 2.0) * w * w
        + (p + 1.0) * (p * (5.0 * p + 16.0) - 5.0) * w
        + (p + 1.0) * (p + 1.0) * (p + 3.0);
    let den = 8.0 * ((p - 1.0) * w + p + 1.0) * (5.0 * p * w + p + q);
    num / den
}

/// White noise on a Bell free pair, delta = 3/5.
fn cf_white_me(p: f64, q: f64) -> f64 {
    let w = 1.0 - q;
    let num = 2.0 * p * p * (2.0 - q) * (2.0 * w + 1.0)
        + p * ((28.0 - 13.0 * w) * w + 11.0)
        - 9.0 * q * w
        + 12.0;
    let den = 10.0 * (p * (8.0 * w + 2.0) - 3.0 * w + 3.0);
    num / den
}

/// White noise on the psi(3/4) free pair, delta = 3/5.
fn cf_white_nme(p: f64, q: f64) -> f64 {
    let w = 1.0 - q;
    let num = 3.0 * (p - 1.0) * (p - 1.0) * (11.0 * p - 6.0) * w * w * w
        + 5.0 * (p - 1.0) * (p * (5.0 * p + 24.0) - 9.0) * w * w
        + (2.0 * p + 3.0) * (p * (14.0 * p + 57.0) - 21.0) * w
        + (p + 4.0) * (2.0 * p + 3.0) * (2.0 * p + 3.0);
    let den = 10.0
        * (3.0 * (p - 1.0) * w + 2.0 * p + 3.0)
        * (p * (13.0 * w + 2.0) - 3.0 * w + 3.0);
    num / den
}

/// Vacuum decay of an odd-parity Bell free pair, delta = 3/5.
fn cf_loss_me(p: f64, q: f64) -> f64 {
    let w = 1.0 - q;
    let num = -2.0 * (p - 1.0) * (p * (31.0 * p + 3.0) - 9.0) * w * w
        + (8.0 * p - 3.0) * (p * (19.0 * p + 12.0) - 6.0) * w
        - 30.0 * (p - 1.0) * p * (2.0 * p + 3.0);
    let den = 50.0 * p * (p * (11.0 * w - 6.0) - 6.0 * w + 6.0);
    num / den
}

/// Vacuum decay of the odd-parity psi(3/4) free pair, delta = 3/5.
fn cf_loss_nme(p: f64, q: f64) -> f64 {
    let w = 1.0 - q;
    let num = -2.0 * (p - 1.0) * (p * (61.0 * p - 27.0) - 9.0) * w * w
        + (p * (17.0 * p * (16.0 * p - 3.0) - 114.0) + 18.0) * w
        - 60.0 * (p - 1.0) * p * (2.0 * p + 3.0);
    let den = 50.0 * p * (17.0 * p * w - 12.0 * p - 12.0 * w + 12.0);
    num / den
}

// ---------------------------------------------------------------------------
// Validity ranges (transcribed conditions)
// ---------------------------------------------------------------------------

fn valid_white(p: f64, q: f64) -> bool {
    let w = 1.0 - q;
    let s3 = 3f64.sqrt();
    if !(0.5..=1.0).contains(&w) {
        return false;
    }
    let lower = (s3 * w - q) / (s3 * w - q + 2.0);
    let upper = (-2.0 * w * w - 2.0 * w + 1.0) / (2.0 * w * w - 4.0 * w - 1.0);
    lower < p && p < upper
}

fn valid_photon_loss(p: f64, q: f64) -> bool {
    let w = 1.0 - q;
    let s3 = 3f64.sqrt();
    if q == 0.0 {
        return (s3 / (2.0 + s3)..1.0).contains(&p);
    }
    let upper = -w / (7.0 * w - 8.0);
    if 4.0 / (4.0 + s3) < w && w <= 6.0 / (6.0 + s3) {
        s3 / (6.0 + s3) < p && p < upper
    } else if 6.0 / (6.0 + s3) < w && w < 1.0 {
        (s3 * w + 4.0 * w - 4.0) / (s3 * w + 6.0 * w - 4.0) < p && p < upper
    } else {
        false
    }
}

fn valid_me_vs_nme_white(p: f64, q: f64) -> bool {
    let w = 1.0 - q;
    let s2 = SQRT2;
    let s6 = 6f64.sqrt();
    let crossover = (3.0 - 3.0 * s2 + 2.0 * s6) / (3.0 + 3.0 * s2);
    let upper = (-6.0 * w * w - 6.0 * w + 3.0) / (4.0 * w * w - 11.0 * w - 2.0);
    if (0.5..=crossover).contains(&w) {
        let lower = (2.0 * s6 * w + 3.0 * w - 3.0) / (2.0 * s6 * w + 8.0 * w + 2.0);
        lower < p && p < upper
    } else if crossover < w && w <= 1.0 {
        let lower = (3.0 * s2 * w + 3.0 * w - 3.0) / (3.0 * s2 * w + 3.0 * w + 2.0);
        lower < p && p < upper
    } else {
        false
    }
}

fn valid_me_vs_nme_loss(p: f64, q: f64) -> bool {
    let w = 1.0 - q;
    let s2 = SQRT2;
    let s6 = 6f64.sqrt();
    if q == 0.0 {
        return (3.0 * s2 / (5.0 + 3.0 * s2)..1.0).contains(&p);
    }
    let upper = -3.0 * w / (17.0 * w - 20.0);
    let lo_knee = 4.0 * s6 / (3.0 + 4.0 * s6);
    let hi_knee = -12.0 / (-12.0 - 3.0 * s2 + s6);
    if lo_knee < w && w <= hi_knee {
        s6 / (5.0 + s6) < p && p < upper
    } else if hi_knee < w && w < 1.0 {
        (3.0 * s2 * w + 12.0 * w - 12.0) / (3.0 * s2 * w + 17.0 * w - 12.0) < p && p < upper
    } else {
        false
    }
}

fn valid_povm_white(q: f64, eta: f64) -> bool {
    let w = 1.0 - q;
    let e = 1.0 - eta;
    if !(e > 0.919 && e <= 1.0) {
        return false;
    }
    let inner = e * (e * (-96.0 * eta * e + 193.0) - 130.0) + 25.0;
    if inner < 0.0 {
        return false;
    }
    let lower = 15.0 / (-2.0 * e + 2.0 * inner.sqrt() + 1.0);
    lower < w && w <= 1.0
}

fn valid_povm_loss(q: f64, eta: f64) -> bool {
    let w = 1.0 - q;
    let e = 1.0 - eta;
    if !(e > 0.919 && e <= 1.0) {
        return false;
    }
    let lower = 5.0 * e * (7.0 * e + 1.0) / (e * (e * (-8.0 * eta * e + 51.0) - 7.0) - 2.0);
    lower < w && w <= 1.0
}

// ---------------------------------------------------------------------------
// Frozen-frame protocol engine
// ---------------------------------------------------------------------------

/// Odd-parity pure pair sqrt(a)|01> + sqrt(1-a)|10>.
fn odd_nmes(alpha: f64) -> Result<DensityMatrix> {
    check_range("alpha", alpha, 0.0, 1.0, "(0, 1]")?;
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            constraint: "(0, 1]",
        });
    }
    let re = |x: f64| num_complex::Complex64::new(x, 0.0);
    let ket = Ket::new(vec![
        re(0.0),
        re(alpha.sqrt()),
        re((1.0 - alpha).sqrt()),
        re(0.0),
    ]);
    Ok(DensityMatrix::pure(&ket))
}

/// Four-qubit chain state: noisy link on qubits (0,1), free pair on (2,3).
fn chain_state(p: f64, delta: f64, chi: &DensityMatrix) -> Result<DensityMatrix> {
    let link = states::family_state(p, delta)?;
    DensityMatrix::new(kron(link.mat(), chi.mat()))
}

/// Fidelity of the frozen protocol: node frames and filter targets are fixed
/// by the `chi_ideal` run, then each outcome of the noisy run is filtered
/// one-sidedly with the strength that maximizes its own contribution
/// (filter failure keeps the classical value 1/2).
pub fn frozen_frame_fidelity(
    p: f64,
    delta: f64,
    chi_ideal: &DensityMatrix,
    chi_noisy: &DensityMatrix,
    ideal_node: &NodeMeasurement,
    noisy_node: &NodeMeasurement,
) -> Result<f64> {
    let reference = measure_node(&chain_state(p, delta, chi_ideal)?, (1, 2), ideal_node)?;
    let mut frames = Vec::with_capacity(4);
    for outcome in &reference.outcomes {
        let state = outcome.state.as_ref().ok_or_else(|| {
            Error::InvalidScenario(format!(
                "reference outcome {} has vanishing probability",
                outcome.label
            ))
        })?;
        frames.push(family_params_extract(state)?.frame);
    }

    let ensemble = measure_node(&chain_state(p, delta, chi_noisy)?, (1, 2), noisy_node)?;
    let mut fidelity = 0.0;
    for (outcome, frame) in ensemble.outcomes.iter().zip(&frames) {
        let state = match &outcome.state {
            Some(state) => state,
            None => {
                fidelity += outcome.probability * 0.5;
                continue;
            }
        };
        let canonical = frame.apply(state)?;
        let m = canonical.mat();
        let coherence = m[(0, 3)].re;
        let product = m[(1, 1)].re;
        let stray = m[(2, 2)].re;
        let b = if product <= 1e-15 {
            1.0
        } else {
            (coherence / product).clamp(0.0, 1.0)
        };
        fidelity += outcome.probability
            * 0.5
            * (1.0 - stray + 2.0 * b * coherence - b * b * product);
    }
    Ok(fidelity)
}

/// The free-pair states and node measurements of one scenario at noise (q, eta).
struct ScenarioStates {
    p: f64,
    delta: f64,
    chi_ideal: DensityMatrix,
    chi_noisy: DensityMatrix,
    ideal_node: NodeMeasurement,
    noisy_node: NodeMeasurement,
}

fn scenario_states(case: RobustnessCase, p: f64, q: f64, eta: f64) -> Result<ScenarioStates> {
    let bell_node = node_measurement(&NodeSpec::Pvm { beta: 0.5 })?;
    let (delta, chi_ideal) = match case {
        RobustnessCase::White => (0.5, states::nmes(0.75)?),
        RobustnessCase::PhotonLoss => (0.5, odd_nmes(0.75)?),
        RobustnessCase::PovmWhite => (0.5, states::nmes(0.6)?),
        RobustnessCase::PovmLoss => (0.5, odd_nmes(0.6)?),
        RobustnessCase::MeVsNmeWhite => (0.6, states::nmes(0.75)?),
        RobustnessCase::MeVsNmeLoss => (0.6, odd_nmes(0.75)?),
    };
    let chi_noisy = match case {
        RobustnessCase::White | RobustnessCase::PovmWhite | RobustnessCase::MeVsNmeWhite => {
            states::white_noise_mix(&chi_ideal, q)?
        }
        RobustnessCase::PhotonLoss | RobustnessCase::PovmLoss | RobustnessCase::MeVsNmeLoss => {
            states::photon_loss_mix(&chi_ideal, q)?
        }
    };
    let (ideal_node, noisy_node) = if case.uses_eta() {
        (
            node_measurement(&NodeSpec::NoisyBell { eta: 0.0 })?,
            node_measurement(&NodeSpec::NoisyBell { eta })?,
        )
    } else {
        (bell_node.clone(), bell_node)
    };
    Ok(ScenarioStates {
        p,
        delta,
        chi_ideal,
        chi_noisy,
        ideal_node,
        noisy_node,
    })
}

fn engine_fidelity(case: RobustnessCase, p: f64, q: f64, eta: f64) -> Result<f64> {
    let s = scenario_states(case, p, q, eta)?;
    frozen_frame_fidelity(
        s.p,
        s.delta,
        &s.chi_ideal,
        &s.chi_noisy,
        &s.ideal_node,
        &s.noisy_node,
    )
}

/// Plain probability-weighted Bell-overlap average over the noisy outcomes,
/// with no filtering step. A lower bound on every scenario fidelity, kept as
/// an independent engine cross-check.
pub fn engine_average_fef(case: RobustnessCase, p: f64, q: f64, eta: f64) -> Result<f64> {
    let s = scenario_states(case, p, q, eta)?;
    let ensemble = measure_node(&chain_state(s.p, s.delta, &s.chi_noisy)?, (1, 2), &s.noisy_node)?;
    ensemble.average(|state| fef(state))
}

// ---------------------------------------------------------------------------
// Scenario operations
// ---------------------------------------------------------------------------

/// White noise in the free segment (delta = 1/2, free pair psi(3/4)).
/// Returns the retained fidelity and the validity flag.
pub fn white_noise_fidelity(p: f64, q: f64) -> Result<(f64, bool)> {
    check_range("p", p, f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
    check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    Ok((cf_white_unbalanced(p, q), valid_white(p, q)))
}

/// Photon loss in the free segment (delta = 1/2, odd-parity free pair
/// psi(3/4) decaying to vacuum). Engine-evaluated.
pub fn photon_loss_fidelity(p: f64, q: f64) -> Result<(f64, bool)> {
    check_range("p", p, f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
    check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    Ok((
        engine_fidelity(RobustnessCase::PhotonLoss, p, q, 0.0)?,
        valid_photon_loss(p, q),
    ))
}

/// Bell versus psi(3/4) free pair under white noise at delta = 3/5.
/// Returns (f_me, f_nme, pct, joint validity).
pub fn me_vs_nme_white(p: f64, q: f64) -> Result<(f64, f64, f64, bool)> {
    check_range("p", p, f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
    check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    let f_me = cf_white_me(p, q);
    let f_nme = cf_white_nme(p, q);
    let pct = (f_me - f_nme) / f_me * 100.0;
    Ok((f_me, f_nme, pct, valid_me_vs_nme_white(p, q)))
}

/// Bell versus psi(3/4) free pair under photon loss at delta = 3/5.
pub fn me_vs_nme_photonloss(p: f64, q: f64) -> Result<(f64, f64, f64, bool)> {
    check_range("p", p, f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
    check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    let f_me = cf_loss_me(p, q);
    let f_nme = cf_loss_nme(p, q);
    let pct = (f_me - f_nme) / f_me * 100.0;
    Ok((f_me, f_nme, pct, valid_me_vs_nme_loss(p, q)))
}

/// Detector noise plus white noise, p pinned at 0.8, free pair psi(3/5).
/// Engine-evaluated.
pub fn povm_fidelity_white(q: f64, eta: f64) -> Result<(f64, bool)> {
    check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    check_range("eta", eta, 0.0, 0.5, "[0, 1/2]")?;
    Ok((
        engine_fidelity(RobustnessCase::PovmWhite, POVM_CASE_P, q, eta)?,
        valid_povm_white(q, eta),
    ))
}

/// Detector noise plus photon loss, p pinned at 0.8, odd-parity free pair
/// psi(3/5). Engine-evaluated.
pub fn povm_fidelity_loss(q: f64, eta: f64) -> Result<(f64, bool)> {
    check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    check_range("eta", eta, 0.0, 0.5, "[0, 1/2]")?;
    Ok((
        engine_fidelity(RobustnessCase::PovmLoss, POVM_CASE_P, q, eta)?,
        valid_povm_loss(q, eta),
    ))
}

/// Percentage fidelity drop of the white-noise scenario over a (p, q) grid.
/// Row i sweeps `ps[i]`, column j sweeps `qs[j]`.
pub fn table1(ps: &[f64], qs: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::with_capacity(ps.len());
    for &p in ps {
        let f_opt = baseline_balanced(p);
        let mut row = Vec::with_capacity(qs.len());
        for &q in qs {
            let (f_noisy, _) = white_noise_fidelity(p, q)?;
            row.push((f_opt - f_noisy) / f_opt * 100.0);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Default grid of the percentage-change table.
pub const TABLE1_P: [f64; 4] = [0.70, 0.75, 0.80, 0.85];
pub const TABLE1_Q: [f64; 4] = [0.02, 0.04, 0.06, 0.08];

/// Evaluate one scenario at one noise point. For the detector scenarios the
/// noisy-link weight is pinned at [`POVM_CASE_P`] and `eta` defaults to 0;
/// the other scenarios ignore `eta`.
pub fn robustness_point(
    case: RobustnessCase,
    p: f64,
    q: f64,
    eta: Option<f64>,
) -> Result<RobustnessPoint> {
    let (p, eta_field) = if case.uses_eta() {
        (POVM_CASE_P, Some(eta.unwrap_or(0.0)))
    } else {
        (p, None)
    };
    let (f_opt, f_noisy, valid) = match case {
        RobustnessCase::White => {
            let (f, valid) = white_noise_fidelity(p, q)?;
            (baseline_balanced(p), f, valid)
        }
        RobustnessCase::PhotonLoss => {
            let (f, valid) = photon_loss_fidelity(p, q)?;
            (baseline_balanced(p), f, valid)
        }
        RobustnessCase::PovmWhite => {
            let (f, valid) = povm_fidelity_white(q, eta_field.unwrap())?;
            (81.0 / 160.0, f, valid)
        }
        RobustnessCase::PovmLoss => {
            let (f, valid) = povm_fidelity_loss(q, eta_field.unwrap())?;
            (81.0 / 160.0, f, valid)
        }
        RobustnessCase::MeVsNmeWhite => {
            let (_, f_nme, _, valid) = me_vs_nme_white(p, q)?;
            (cf_white_me(p, 0.0), f_nme, valid)
        }
        RobustnessCase::MeVsNmeLoss => {
            let (_, f_nme, _, valid) = me_vs_nme_photonloss(p, q)?;
            (cf_loss_me(p, 0.0), f_nme, valid)
        }
    };
    let pct_change = if f_opt > 0.0 {
        (f_opt - f_noisy) / f_opt * 100.0
    } else {
        f64::NAN
    };
    Ok(RobustnessPoint {
        case,
        p,
        q,
        eta: eta_field,
        f_opt,
        f_noisy,
        pct_change,
        in_validity_range: valid,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
