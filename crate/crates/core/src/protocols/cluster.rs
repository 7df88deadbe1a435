//! Building `|t'_1⟩` from Bell pairs: two GHZ states by fusing Bell pairs,
//! then a four-photon cluster by fusing the GHZ states.
//!
//! Photon loss in a fusion leaves an empty output mode; the later fusion
//! sees fewer photons and aborts, so loss alone never fakes a success. Only
//! dark counts can.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use super::{build_t_prime_n, Encoding, REPORTED_PRUNE_EPS};
use crate::error::{invalid, Result};
use crate::fock::{FockState, Polarization};
use crate::measurement::{
    enumerate_outcomes, reported_distribution, DetectionPattern, DetectorModel,
};
use crate::optics::{apply, ModeUnitary, PolarizationSelect};

/// A success below this fidelity counts as a false success.
const FALSE_SUCCESS_FIDELITY: f64 = 1.0 - 1e-9;

/// `(|HH⟩ + |VV⟩)/√2`.
pub fn bell_pair() -> FockState {
    FockState::superposition(&[(c(1.0), "HH"), (c(1.0), "VV")]).expect("valid kets")
}

/// `(|HHH⟩ + |VVV⟩)/√2`.
pub fn ghz_state() -> FockState {
    FockState::superposition(&[(c(1.0), "HHH"), (c(1.0), "VVV")]).expect("valid kets")
}

/// `½(e^{iπ/4}|HHHH⟩ + e^{-iπ/4}|HHVV⟩ + e^{-iπ/4}|VVHH⟩ + e^{iπ/4}|VVVV⟩)`.
pub fn phased_cluster_state() -> FockState {
    let p = Complex64::from_polar(1.0, FRAC_PI_4);
    let m = p.conj();
    FockState::superposition(&[(p, "HHHH"), (m, "HHVV"), (m, "VVHH"), (p, "VVVV")])
        .expect("valid kets")
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// One (true record, reported record) branch of a Bell-pair fusion.
#[derive(Clone, Debug)]
pub struct GhzBranch {
    /// Exactly one photon was reported at the measured port.
    pub heralded: bool,
    pub probability: f64,
    pub true_pattern: DetectionPattern,
    pub reported_pattern: DetectionPattern,
    /// Remaining three modes, corrected when heralded.
    pub output_state: FockState,
    /// Fidelity with `(|HHH⟩+|VVV⟩)/√2` when heralded.
    pub fidelity: Option<f64>,
}

/// Fuses two Bell pairs on a PBS. Modes are `[p1a, p1b, p2a, p2b]`; `p1b`
/// and `p2a` meet on the PBS, the `p2a` output is read in the diagonal
/// basis. One reported photon heralds a GHZ state on `[p1a, p1b, p2b]`.
/// The `p1b` output is the one that is empty when a photon was missed.
pub fn bell_to_ghz(
    pair_1: &FockState,
    pair_2: &FockState,
    detector: &DetectorModel,
) -> Result<Vec<GhzBranch>> {
    if pair_1.mode_count() != 2 || pair_2.mode_count() != 2 {
        return invalid("Bell-pair fusion needs two 2-mode states");
    }
    let joint = pair_1.normalized()?.tensor(&pair_2.normalized()?);
    let u = ModeUnitary::polarizing_beam_splitter(4, 1, 2)?
        .then(&ModeUnitary::polarization_rotator(4, FRAC_PI_4, 2)?)?;
    let mixed = apply(&joint, &u)?;
    let target = ghz_state();
    let mut out = Vec::new();
    for br in enumerate_outcomes(&mixed, &[2], true)? {
        let reported = reported_distribution(&br.pattern, detector, REPORTED_PRUNE_EPS)?;
        for (rp, q) in reported.branches {
            let heralded = rp.total() == 1;
            let mut branch = GhzBranch {
                heralded,
                probability: br.probability * q,
                true_pattern: br.pattern.clone(),
                reported_pattern: rp.clone(),
                output_state: br.conditional_state.clone(),
                fidelity: None,
            };
            if heralded {
                let mut st = br.conditional_state.clone();
                if rp.h(0) == 1 {
                    st = apply(&st, &ModeUnitary::phase_shifter(3, PI, 0, Polarization::V)?)?;
                }
                branch.fidelity = Some(st.fidelity(&target)?);
                branch.output_state = st;
            }
            out.push(branch);
        }
    }
    Ok(out)
}

/// How a GHZ fusion is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClusterClass {
    /// One photon at each detector pair.
    Success,
    /// Both photons at one detector pair: the inputs collapse to two Bell
    /// pairs, which can be reused.
    BellPairs,
    /// Any other count: some GHZ state was faulty.
    Abort,
}

#[derive(Clone, Debug)]
pub struct ClusterBranch {
    pub class: ClusterClass,
    pub probability: f64,
    pub true_pattern: DetectionPattern,
    pub reported_pattern: DetectionPattern,
    /// The four unmeasured modes, corrected on success.
    pub output_state: FockState,
    /// Fidelity with [`phased_cluster_state`] on success.
    pub fidelity: Option<f64>,
}

fn classify_cluster(p: &DetectionPattern) -> ClusterClass {
    match (p.mode_total(0), p.mode_total(1)) {
        (1, 1) => ClusterClass::Success,
        (2, 0) | (0, 2) => ClusterClass::BellPairs,
        _ => ClusterClass::Abort,
    }
}

/// Fuses two GHZ states into the four-photon cluster. Modes are
/// `[g1_0, g1_1, g1_2, g2_0, g2_1, g2_2]`; the error-prone modes `g1_1` and
/// `g2_1` are rotated to the diagonal basis, mixed on a PBS with a
/// quarter-wave phase in one arm, rotated again and read out. The output
/// lives on `[g1_0, g1_2, g2_0, g2_2]`.
pub fn ghz_to_cluster(
    ghz_1: &FockState,
    ghz_2: &FockState,
    detector: &DetectorModel,
) -> Result<Vec<ClusterBranch>> {
    if ghz_1.mode_count() != 3 || ghz_2.mode_count() != 3 {
        return invalid("GHZ fusion needs two 3-mode states");
    }
    let joint = ghz_1.normalized()?.tensor(&ghz_2.normalized()?);
    let rot = ModeUnitary::polarization_rotator(6, FRAC_PI_4, 1)?
        .then(&ModeUnitary::polarization_rotator(6, FRAC_PI_4, 4)?)?;
    let u = rot
        .then(&ModeUnitary::polarizing_beam_splitter(6, 1, 4)?)?
        .then(&ModeUnitary::phase_shifter(
            6,
            -FRAC_PI_2,
            1,
            Polarization::V,
        )?)?
        .then(&rot)?;
    let mixed = apply(&joint, &u)?;
    let target = phased_cluster_state();
    let mut out = Vec::new();
    for br in enumerate_outcomes(&mixed, &[1, 4], true)? {
        let reported = reported_distribution(&br.pattern, detector, REPORTED_PRUNE_EPS)?;
        for (rp, q) in reported.branches {
            let class = classify_cluster(&rp);
            let mut branch = ClusterBranch {
                class,
                probability: br.probability * q,
                true_pattern: br.pattern.clone(),
                reported_pattern: rp.clone(),
                output_state: br.conditional_state.clone(),
                fidelity: None,
            };
            if class == ClusterClass::Success {
                let mut st = br.conditional_state.clone();
                // photons leaving through different PBS ports need a Z on
                // the first photon of each GHZ state
                if (rp.v(0) == 1) != (rp.v(1) == 1) {
                    let z = ModeUnitary::phase_shifter(4, PI, 0, Polarization::V)?
                        .then(&ModeUnitary::phase_shifter(4, PI, 2, Polarization::V)?)?;
                    st = apply(&st, &z)?;
                }
                branch.fidelity = Some(st.fidelity(&target)?);
                branch.output_state = st;
            }
            out.push(branch);
        }
    }
    Ok(out)
}

/// Local wave plates turning [`phased_cluster_state`] into `|t'_1⟩`:
/// `e^{iπ/2}` on V of modes 0 and 2, then `H ↔ V` on the same modes.
pub fn cluster_to_t_prime(state: &FockState) -> Result<FockState> {
    if state.mode_count() != 4 {
        return invalid("cluster conversion needs a 4-mode state");
    }
    let mut u = ModeUnitary::identity(4);
    for mode in [0, 2] {
        u = u
            .then(&ModeUnitary::phase_shifter(
                4,
                FRAC_PI_2,
                mode,
                PolarizationSelect::V,
            )?)?
            .then(&ModeUnitary::polarization_rotator(4, FRAC_PI_2, mode)?)?
            .then(&ModeUnitary::phase_shifter(
                4,
                PI,
                mode,
                PolarizationSelect::H,
            )?)?;
    }
    apply(state, &u)
}

/// Outcome of the whole Bell pairs → GHZ → cluster → `|t'_1⟩` chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainReport {
    /// Probability that both fusions into GHZ states herald.
    pub ghz_herald_probability: f64,
    /// Probability that every stage reports success.
    pub p_success: f64,
    /// Probability that every stage reports success but the final state is
    /// not `|t'_1⟩`.
    pub p_false_success: f64,
    /// Fidelity of the ideal heralded output with `|t'_1⟩`.
    pub ideal_fidelity: f64,
}

impl ChainReport {
    /// False successes among all reported successes.
    pub fn false_success_rate(&self) -> f64 {
        if self.p_success > 0.0 {
            self.p_false_success / self.p_success
        } else {
            0.0
        }
    }
}

/// Runs the full chain from four Bell pairs with the given detectors on
/// every measured port.
pub fn cluster_chain(detector: &DetectorModel) -> Result<ChainReport> {
    let ghz: Vec<GhzBranch> = bell_to_ghz(&bell_pair(), &bell_pair(), detector)?
        .into_iter()
        .filter(|b| b.heralded)
        .collect();
    let ghz_herald: f64 = ghz.iter().map(|b| b.probability).sum();
    let target = build_t_prime_n(1, Encoding::Polarization)?;
    let mut p_success = 0.0;
    let mut p_false = 0.0;
    let mut ideal_fidelity: f64 = 1.0;
    for a in &ghz {
        for b in &ghz {
            for br in ghz_to_cluster(&a.output_state, &b.output_state, detector)? {
                if br.class != ClusterClass::Success {
                    continue;
                }
                let p = a.probability * b.probability * br.probability;
                let f = cluster_to_t_prime(&br.output_state)?.fidelity(&target)?;
                p_success += p;
                if f < FALSE_SUCCESS_FIDELITY {
                    p_false += p;
                }
                let clean = a.true_pattern == a.reported_pattern
                    && b.true_pattern == b.reported_pattern
                    && br.true_pattern == br.reported_pattern;
                if clean {
                    ideal_fidelity = ideal_fidelity.min(f);
                }
            }
        }
    }
    Ok(ChainReport {
        ghz_herald_probability: ghz_herald * ghz_herald,
        p_success,
        p_false_success: p_false,
        ideal_fidelity,
    })
}
