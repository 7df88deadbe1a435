//! Near-deterministic teleportation through `|t_n⟩`.
//!
//! The input sits in mode 0, the ancilla in modes `1..=2n`. A Fourier
//! transform mixes modes `0..=n`, which are then counted. Classification
//! always uses the *reported* counts; the *true* counts fix the actual
//! post-measurement state, so a misreported count shows up as a low-fidelity
//! "success".

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use rayon::prelude::*;

use super::{teleporting_state, Encoding};
use crate::error::{invalid, Result};
use crate::fock::{FockState, InputQubit};
use crate::measurement::{
    detector_confusion, enumerate_outcomes, ConfusionPmf, DetectionPattern, DetectorModel,
    OutcomeBranch,
};
use crate::optics::{apply, ModeUnitary};

/// Reported-count branches below this probability are dropped (and counted
/// in the truncation bound).
pub const REPORTED_PRUNE_EPS: f64 = 1e-16;

/// How the classifier reads one teleporter's measurement record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TeleportClass {
    /// `k` logical-1 photons seen (`0 < k < n+1`): output is mode `n+k`,
    /// to be corrected by `ω^correction` on its logical-1 component.
    Success { k: usize, correction: usize },
    /// All photons counted as logical 1: qubit projected onto `|1⟩`.
    FailureAllV,
    /// No logical-1 photon: qubit projected onto `|0⟩`.
    FailureAllH,
    /// The grand total is inconsistent with the `n+1` photons that entered.
    LossDetected,
}

impl TeleportClass {
    pub fn is_success(&self) -> bool {
        matches!(self, TeleportClass::Success { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            TeleportClass::Success { .. } => "success",
            TeleportClass::FailureAllV => "failure_all_v",
            TeleportClass::FailureAllH => "failure_all_h",
            TeleportClass::LossDetected => "loss_detected",
        }
    }
}

/// `Σ_j j·(r_j + h_j) mod (n+1)` over the `n+1` measured modes.
pub fn correction_exponent(pattern: &DetectionPattern) -> usize {
    let modes = pattern.mode_count();
    let sum: usize = (0..modes).map(|j| j * pattern.mode_total(j) as usize).sum();
    sum % modes
}

/// Classifies one reported pattern over the `n+1` Fourier output modes.
pub fn classify_reported(pattern: &DetectionPattern, encoding: Encoding) -> TeleportClass {
    let n1 = pattern.mode_count();
    let total = pattern.total() as usize;
    let ones = match encoding {
        Encoding::Polarization => {
            if total != n1 {
                return TeleportClass::LossDetected;
            }
            pattern.v_total() as usize
        }
        Encoding::DualRailKlm => {
            if total > n1 {
                return TeleportClass::LossDetected;
            }
            total
        }
    };
    if ones == 0 {
        TeleportClass::FailureAllH
    } else if ones == n1 {
        TeleportClass::FailureAllV
    } else {
        TeleportClass::Success {
            k: ones,
            correction: correction_exponent(pattern),
        }
    }
}

/// Classification statistics accumulated over detectors.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Tally {
    total: usize,
    ones: usize,
    exponent: usize,
}

/// Distribution of classes reported for one true pattern, computed by
/// convolving each detector's confusion pmf into the three statistics the
/// classifier reads (grand total, logical-1 total, exponent mod `n+1`).
/// Returns the classes and the pruned/truncated mass.
pub fn class_distribution(
    true_pattern: &DetectionPattern,
    encoding: Encoding,
    detector: &DetectorModel,
    prune_eps: f64,
) -> (Vec<(TeleportClass, f64)>, f64) {
    let n1 = true_pattern.mode_count();
    let cap = n1 + 1;
    let mut pmfs: HashMap<u32, ConfusionPmf> = HashMap::new();
    let mut states: BTreeMap<Tally, f64> = BTreeMap::new();
    states.insert(
        Tally {
            total: 0,
            ones: 0,
            exponent: 0,
        },
        1.0,
    );
    let mut dropped = 0.0;
    for (i, &l) in true_pattern.counts().iter().enumerate() {
        let pmf = pmfs
            .entry(l)
            .or_insert_with(|| detector_confusion(detector, l));
        let mode = true_pattern.detector_mode(i);
        let counts_ones = match encoding {
            Encoding::Polarization => true_pattern.is_v_port(i),
            Encoding::DualRailKlm => true,
        };
        let mut next: BTreeMap<Tally, f64> = BTreeMap::new();
        for (t, &p) in &states {
            dropped += p * pmf.tail;
            for (k, &pk) in pmf.probs.iter().enumerate() {
                let q = p * pk;
                if q == 0.0 {
                    continue;
                }
                if q < prune_eps {
                    dropped += q;
                    continue;
                }
                let total = t.total + k;
                let key = if total >= cap {
                    Tally {
                        total: cap,
                        ones: 0,
                        exponent: 0,
                    }
                } else {
                    Tally {
                        total,
                        ones: t.ones + if counts_ones { k } else { 0 },
                        exponent: (t.exponent + mode * k) % n1,
                    }
                };
                *next.entry(key).or_default() += q;
            }
        }
        states = next;
    }

    let mut classes: BTreeMap<TeleportClass, f64> = BTreeMap::new();
    for (t, p) in states {
        let class = if t.total >= cap || (encoding == Encoding::Polarization && t.total != n1) {
            TeleportClass::LossDetected
        } else if t.ones == 0 {
            TeleportClass::FailureAllH
        } else if t.ones == n1 {
            TeleportClass::FailureAllV
        } else {
            TeleportClass::Success {
                k: t.ones,
                correction: t.exponent,
            }
        };
        *classes.entry(class).or_default() += p;
    }
    (classes.into_iter().collect(), dropped)
}

/// Phase that undoes a teleportation exponent `m` on the logical-1 slot.
pub(crate) fn correction_phase(n: usize, m: usize) -> f64 {
    2.0 * PI * m as f64 / (n + 1) as f64
}

/// Applies `e^{iφ}` to the logical-1 slot of each listed mode.
pub(crate) fn apply_logical_phases(
    state: &FockState,
    encoding: Encoding,
    phases: &[(usize, f64)],
) -> Result<FockState> {
    let mut u = ModeUnitary::identity(state.mode_count());
    for &(mode, phi) in phases {
        let ps = ModeUnitary::phase_shifter(state.mode_count(), phi, mode, encoding.one_slot())?;
        u = ps.mul(&u)?;
    }
    apply(state, &u)
}

/// One branch of a teleportation: a true measurement record combined with
/// one reported classification.
#[derive(Clone, Debug)]
pub struct TeleportOutcome {
    pub class: TeleportClass,
    pub probability: f64,
    pub true_pattern: DetectionPattern,
    /// For a success, the (corrected) state of the selected output mode, or
    /// the corrected conditional state of all unmeasured modes if the
    /// selected mode does not factor out. For a failure, the collapsed
    /// state of the unmeasured modes.
    pub output_state: FockState,
    /// Selected mode before the phase correction (success only).
    pub raw_output: Option<FockState>,
    /// Fidelity of the corrected output with the input (success only).
    pub fidelity: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TeleportDistribution {
    pub encoding: Encoding,
    pub n: usize,
    pub input: InputQubit,
    pub outcomes: Vec<TeleportOutcome>,
    /// Probability mass discarded by pruning and dark-count truncation.
    pub truncation_bound: f64,
}

impl TeleportDistribution {
    pub fn probability_where(&self, pred: impl Fn(&TeleportClass) -> bool) -> f64 {
        self.outcomes
            .iter()
            .filter(|o| pred(&o.class))
            .map(|o| o.probability)
            .sum()
    }

    pub fn success_probability(&self) -> f64 {
        self.probability_where(TeleportClass::is_success)
    }

    pub fn failure_probability(&self) -> f64 {
        self.probability_where(|c| !c.is_success())
    }
}

/// The measured pre-detection state: input in mode 0, `|t_n⟩` after it,
/// Fourier transform on modes `0..=n`.
pub(crate) fn teleport_true_branches(
    input: &InputQubit,
    n: usize,
    encoding: Encoding,
) -> Result<Vec<OutcomeBranch>> {
    if n == 0 {
        return invalid("teleportation needs n >= 1");
    }
    let joint = encoding
        .encode(input)
        .tensor(&teleporting_state(n, encoding)?);
    let f = ModeUnitary::fourier(n)?.embed(2 * n + 1, &(0..=n).collect::<Vec<_>>())?;
    let mixed = apply(&joint, &f)?;
    enumerate_outcomes(
        &mixed,
        &(0..=n).collect::<Vec<_>>(),
        encoding.polarization_resolved(),
    )
}

/// Teleports `input` through `|t_n⟩` and returns every (true record, reported
/// class) branch with its probability and output fidelity.
pub fn teleport(
    input: &InputQubit,
    n: usize,
    encoding: Encoding,
    detector: &DetectorModel,
) -> Result<TeleportDistribution> {
    let branches = teleport_true_branches(input, n, encoding)?;
    let target = encoding.encode(input);

    let per_branch: Vec<Result<(Vec<TeleportOutcome>, f64)>> = branches
        .par_iter()
        .map(|br| {
            let (classes, dropped) =
                class_distribution(&br.pattern, encoding, detector, REPORTED_PRUNE_EPS);
            let mut outs = Vec::with_capacity(classes.len());
            for (class, q) in classes {
                outs.push(resolve_outcome(br, class, q, n, encoding, &target)?);
            }
            Ok((outs, br.probability * dropped))
        })
        .collect();

    let mut outcomes = Vec::new();
    let mut truncation_bound = 0.0;
    for r in per_branch {
        let (outs, dropped) = r?;
        outcomes.extend(outs);
        truncation_bound += dropped;
    }
    Ok(TeleportDistribution {
        encoding,
        n,
        input: *input,
        outcomes,
        truncation_bound,
    })
}

/// Fidelity of the corrected output of a reported success with the input.
pub(crate) fn success_fidelity(
    br: &OutcomeBranch,
    class: TeleportClass,
    n: usize,
    encoding: Encoding,
    target: &FockState,
) -> Result<f64> {
    let TeleportClass::Success { k, correction } = class else {
        return invalid("fidelity is only defined for a success");
    };
    let sel = k - 1;
    let corrected = apply_logical_phases(
        &br.conditional_state,
        encoding,
        &[(sel, correction_phase(n, correction))],
    )?;
    corrected.reduced_fidelity(&[sel], target)
}

fn resolve_outcome(
    br: &OutcomeBranch,
    class: TeleportClass,
    q: f64,
    n: usize,
    encoding: Encoding,
    target: &FockState,
) -> Result<TeleportOutcome> {
    let probability = br.probability * q;
    let cond = &br.conditional_state;
    let TeleportClass::Success { k, correction } = class else {
        return Ok(TeleportOutcome {
            class,
            probability,
            true_pattern: br.pattern.clone(),
            output_state: cond.clone(),
            raw_output: None,
            fidelity: None,
        });
    };
    debug_assert!(k >= 1 && k <= n);
    let sel = k - 1;
    let corrected =
        apply_logical_phases(cond, encoding, &[(sel, correction_phase(n, correction))])?;
    let fidelity = corrected.reduced_fidelity(&[sel], target)?;
    let output_state = corrected.extract_modes(&[sel])?.unwrap_or(corrected);
    let raw_output = cond.extract_modes(&[sel])?;
    Ok(TeleportOutcome {
        class,
        probability,
        true_pattern: br.pattern.clone(),
        output_state,
        raw_output,
        fidelity: Some(fidelity),
    })
}
