//! Heralded preparation of `|t'_1⟩`: the dual-rail version from two NS
//! gates, then conversion to polarization with two encoders.
//!
//! The NS gate and the encoder are modeled as ideal post-selected maps with
//! a fixed success probability; their optical internals are not simulated.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use super::{build_t_prime_n, Encoding};
use crate::error::{invalid, Result};
use crate::fock::{FockState, OccupationKey, Polarization};
use crate::optics::{apply, ModeUnitary};

pub const DEFAULT_NS_PROBABILITY: f64 = 0.25;
pub const DEFAULT_ENCODER_PROBABILITY: f64 = 0.5;

/// A heralded state with the probability of the herald.
#[derive(Clone, Debug, PartialEq)]
pub struct PostSelected {
    pub state: FockState,
    pub probability: f64,
}

fn check_probability(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return invalid(format!("success probability must be in (0, 1], got {p}"));
    }
    Ok(())
}

/// Nonlinear sign shift on the H rail of `mode`:
/// `α₀|0⟩ + α₁|1⟩ + α₂|2⟩ ↦ α₀|0⟩ + α₁|1⟩ − α₂|2⟩`.
pub fn ns_gate(state: &FockState, mode: usize, probability: f64) -> Result<PostSelected> {
    check_probability(probability)?;
    if mode >= state.mode_count() {
        return invalid(format!("mode {mode} out of range"));
    }
    for (k, _) in state.terms() {
        if k.v(mode) != 0 || k.h(mode) > 2 {
            return invalid(format!(
                "NS gate needs at most two single-rail photons in mode {mode}, found {k}"
            ));
        }
    }
    let state =
        state.map_amplitudes(|k| Complex64::new(if k.h(mode) == 2 { -1.0 } else { 1.0 }, 0.0));
    Ok(PostSelected { state, probability })
}

/// `|t'_1⟩_KLM` from `|0101⟩`: balanced splitters on `(0,1)` and `(2,3)`,
/// then an interferometer between modes 0 and 2 with an NS gate in each arm
/// (a controlled sign on those two rails), then local phases.
pub fn build_t_prime_1_klm_via_ns(ns_probability: f64) -> Result<PostSelected> {
    let mut st = FockState::ket("0101")?;
    let bs = |theta: f64, a: usize, b: usize| ModeUnitary::beam_splitter(4, theta, a, b);
    st = apply(&st, &bs(FRAC_PI_4, 0, 1)?.then(&bs(FRAC_PI_4, 2, 3)?)?)?;
    st = apply(&st, &bs(FRAC_PI_4, 0, 2)?)?;
    let first = ns_gate(&st, 0, ns_probability)?;
    let second = ns_gate(&first.state, 2, ns_probability)?;
    st = apply(&second.state, &bs(-FRAC_PI_4, 0, 2)?)?;
    let phases = ModeUnitary::phase_shifter(4, PI, 0, Polarization::H)?
        .then(&ModeUnitary::phase_shifter(4, PI, 2, Polarization::H)?)?;
    st = apply(&st, &phases)?;
    Ok(PostSelected {
        state: st,
        probability: first.probability * second.probability,
    })
}

/// Moves a dual-rail qubit on rails `(a, b)` into the polarization of mode
/// `a`: a half-wave rotation turns rail `b` vertical, then a PBS merges it
/// into `a`. Rail `a` becomes `H`, rail `b` becomes `V`; mode `b` is left
/// empty.
pub fn dual_rail_to_polarization(state: &FockState, a: usize, b: usize) -> Result<FockState> {
    let m = state.mode_count();
    let u = ModeUnitary::polarization_rotator(m, FRAC_PI_2, b)?
        .then(&ModeUnitary::polarizing_beam_splitter(m, a, b)?)?;
    apply(state, &u)
}

/// Post-selected polarization encoder: copies the qubit in `mode` into
/// `ancilla` in the complementary basis, `α|H⟩+β|V⟩ ↦ α|VH⟩+β|HV⟩` on
/// `(mode, ancilla)`. The ancilla mode must start empty.
pub fn encoder(
    state: &FockState,
    mode: usize,
    ancilla: usize,
    probability: f64,
) -> Result<PostSelected> {
    check_probability(probability)?;
    let m = state.mode_count();
    if mode >= m || ancilla >= m || mode == ancilla {
        return invalid(format!("bad encoder modes ({mode}, {ancilla})"));
    }
    let mut terms = Vec::with_capacity(state.len());
    for (k, amp) in state.terms() {
        if k.mode_total(ancilla) != 0 || k.mode_total(mode) != 1 {
            return invalid(format!(
                "encoder needs one photon in mode {mode} and an empty mode {ancilla}, found {k}"
            ));
        }
        let mut pairs: Vec<(u8, u8)> = (0..m).map(|i| (k.h(i), k.v(i))).collect();
        let (pm, pa) = if k.h(mode) == 1 {
            ((0, 1), (1, 0))
        } else {
            ((1, 0), (0, 1))
        };
        pairs[mode] = pm;
        pairs[ancilla] = pa;
        terms.push((OccupationKey::from_pairs(&pairs), *amp));
    }
    Ok(PostSelected {
        state: FockState::from_terms(m, terms)?,
        probability,
    })
}

/// The full chain: `|t'_1⟩_KLM` from NS gates, each rail pair converted to
/// polarization and re-encoded into two polarization modes.
pub fn build_t_prime_1_pol_via_encoders(
    ns_probability: f64,
    encoder_probability: f64,
) -> Result<PostSelected> {
    let klm = build_t_prime_1_klm_via_ns(ns_probability)?;
    let mut st = klm.state;
    let mut probability = klm.probability;
    for (a, b) in [(0, 1), (2, 3)] {
        st = dual_rail_to_polarization(&st, a, b)?;
        let enc = encoder(&st, a, b, encoder_probability)?;
        st = enc.state;
        probability *= enc.probability;
    }
    Ok(PostSelected {
        state: st,
        probability,
    })
}

/// Fidelity of a prepared state with the ideal `|t'_1⟩` in `encoding`.
pub fn t_prime_1_fidelity(state: &FockState, encoding: Encoding) -> Result<f64> {
    state.fidelity(&build_t_prime_n(1, encoding)?)
}
