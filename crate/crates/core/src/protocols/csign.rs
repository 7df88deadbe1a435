//! CSIGN by double teleportation through `|t'_n⟩`, and the minimal
//! four-photon setup that uses `|t'_1⟩` directly.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::teleport::{apply_logical_phases, class_distribution, correction_phase};
use super::{build_t_prime_n, Encoding, TeleportClass, REPORTED_PRUNE_EPS};
use crate::error::{invalid, Result};
use crate::fock::FockState;
use crate::measurement::{
    enumerate_outcomes, reported_distribution, DetectionPattern, DetectorModel, OutcomeBranch,
};
use crate::optics::{apply, ModeUnitary};

/// One (true record, reported classes) branch of a two-qubit gate.
#[derive(Clone, Debug)]
pub struct CsignBranch {
    pub class_a: TeleportClass,
    pub class_b: TeleportClass,
    pub probability: f64,
    pub true_pattern: DetectionPattern,
    /// On double success, the corrected two-qubit output (or the corrected
    /// conditional state if it does not factor). Otherwise the collapsed
    /// state of the unmeasured modes.
    pub output_state: FockState,
    /// Fidelity with `CSIGN · input` (double success only).
    pub fidelity: Option<f64>,
}

impl CsignBranch {
    pub fn is_success(&self) -> bool {
        self.class_a.is_success() && self.class_b.is_success()
    }
}

#[derive(Clone, Debug)]
pub struct CsignReport {
    pub encoding: Encoding,
    pub n: usize,
    pub branches: Vec<CsignBranch>,
    pub truncation_bound: f64,
}

impl CsignReport {
    pub fn success_probability(&self) -> f64 {
        self.branches
            .iter()
            .filter(|b| b.is_success())
            .map(|b| b.probability)
            .sum()
    }

    /// Lowest fidelity over the success branches (1 if there are none).
    pub fn min_success_fidelity(&self) -> f64 {
        self.branches
            .iter()
            .filter_map(|b| b.fidelity)
            .fold(1.0, f64::min)
    }

    /// Probability of a reported double success with fidelity below `threshold`.
    pub fn false_success_probability(&self, threshold: f64) -> f64 {
        self.branches
            .iter()
            .filter(|b| b.fidelity.is_some_and(|f| f < threshold))
            .map(|b| b.probability)
            .sum()
    }
}

/// Ideal CSIGN: flips the sign of the `|11⟩` component of a two-mode
/// logical state.
pub fn csign_ideal(state: &FockState, encoding: Encoding) -> Result<FockState> {
    if state.mode_count() != 2 {
        return invalid("CSIGN acts on a two-mode state");
    }
    encoding.check_logical(state)?;
    Ok(state.map_amplitudes(|k| {
        let both =
            encoding.logical_bit(k, 0) == Some(true) && encoding.logical_bit(k, 1) == Some(true);
        Complex64::new(if both { -1.0 } else { 1.0 }, 0.0)
    }))
}

/// CSIGN on `input` (modes A, B) by teleporting A through the first and B
/// through the second half of `|t'_n⟩`.
pub fn csign(
    input: &FockState,
    n: usize,
    encoding: Encoding,
    detector: &DetectorModel,
) -> Result<CsignReport> {
    let target = csign_ideal(input, encoding)?;
    let ancilla = build_t_prime_n(n, encoding)?;
    // layout: A, first copy (2n), B, second copy (2n)
    let mut order = vec![0];
    order.extend(2..2 + 2 * n);
    order.push(1);
    order.extend(2 + 2 * n..2 + 4 * n);
    let joint = input.tensor(&ancilla).permute_modes(&order)?;

    let total = 4 * n + 2;
    let side_a: Vec<usize> = (0..=n).collect();
    let side_b: Vec<usize> = (2 * n + 1..=3 * n + 1).collect();
    let f = ModeUnitary::fourier(n)?;
    let u = f.embed(total, &side_a)?.then(&f.embed(total, &side_b)?)?;
    let mixed = apply(&joint, &u)?;
    let measured: Vec<usize> = side_a.iter().chain(&side_b).copied().collect();
    let branches = enumerate_outcomes(&mixed, &measured, encoding.polarization_resolved())?;

    let results: Vec<Result<(Vec<CsignBranch>, f64)>> = branches
        .par_iter()
        .map(|br| {
            let (pa, pb) = br.pattern.split_modes(n + 1);
            let (ca, da) = class_distribution(&pa, encoding, detector, REPORTED_PRUNE_EPS);
            let (cb, db) = class_distribution(&pb, encoding, detector, REPORTED_PRUNE_EPS);
            let mut out = Vec::new();
            for &(class_a, qa) in &ca {
                for &(class_b, qb) in &cb {
                    out.push(double_teleport_branch(
                        br,
                        class_a,
                        class_b,
                        qa * qb,
                        n,
                        encoding,
                        &target,
                    )?);
                }
            }
            Ok((out, br.probability * (da + db)))
        })
        .collect();
    collect_report(encoding, n, results)
}

fn collect_report(
    encoding: Encoding,
    n: usize,
    results: Vec<Result<(Vec<CsignBranch>, f64)>>,
) -> Result<CsignReport> {
    let mut branches = Vec::new();
    let mut truncation_bound = 0.0;
    for r in results {
        let (b, d) = r?;
        branches.extend(b);
        truncation_bound += d;
    }
    Ok(CsignReport {
        encoding,
        n,
        branches,
        truncation_bound,
    })
}

fn double_teleport_branch(
    br: &OutcomeBranch,
    class_a: TeleportClass,
    class_b: TeleportClass,
    q: f64,
    n: usize,
    encoding: Encoding,
    target: &FockState,
) -> Result<CsignBranch> {
    let mut branch = CsignBranch {
        class_a,
        class_b,
        probability: br.probability * q,
        true_pattern: br.pattern.clone(),
        output_state: br.conditional_state.clone(),
        fidelity: None,
    };
    let (
        TeleportClass::Success {
            k: ka,
            correction: ma,
        },
        TeleportClass::Success {
            k: kb,
            correction: mb,
        },
    ) = (class_a, class_b)
    else {
        return Ok(branch);
    };
    // the other ancilla modes of each half are in known states; the n-k of
    // them holding a logical 1 each leave a Z on the opposite output
    let (sa, sb) = (ka - 1, n + kb - 1);
    let phases = [
        (sa, correction_phase(n, ma) + PI * (n - kb) as f64),
        (sb, correction_phase(n, mb) + PI * (n - ka) as f64),
    ];
    let corrected = apply_logical_phases(&br.conditional_state, encoding, &phases)?;
    branch.fidelity = Some(corrected.reduced_fidelity(&[sa, sb], target)?);
    branch.output_state = corrected.extract_modes(&[sa, sb])?.unwrap_or(corrected);
    Ok(branch)
}

/// Reads one two-mode teleporter of the minimal setup with on/off
/// detectors: it succeeds when exactly one V-port and one H-port click.
fn classify_clicks(pattern: &DetectionPattern) -> TeleportClass {
    let modes = pattern.mode_count();
    let click = |c: u32| u32::from(c > 0);
    let v: u32 = (0..modes).map(|j| click(pattern.v(j))).sum();
    let h: u32 = (0..modes).map(|j| click(pattern.h(j))).sum();
    if v == 0 {
        TeleportClass::FailureAllH
    } else if h == 0 {
        TeleportClass::FailureAllV
    } else if v + h != 2 {
        TeleportClass::LossDetected
    } else {
        let m: usize = (0..modes)
            .map(|j| j * (click(pattern.v(j)) + click(pattern.h(j))) as usize)
            .sum();
        TeleportClass::Success {
            k: 1,
            correction: m % modes,
        }
    }
}

fn reported_classes(
    pattern: &DetectionPattern,
    detector: &DetectorModel,
    number_resolving: bool,
) -> Result<(Vec<(TeleportClass, f64)>, f64)> {
    if number_resolving {
        return Ok(class_distribution(
            pattern,
            Encoding::Polarization,
            detector,
            REPORTED_PRUNE_EPS,
        ));
    }
    let dist = reported_distribution(pattern, detector, REPORTED_PRUNE_EPS)?;
    let mut classes: BTreeMap<TeleportClass, f64> = BTreeMap::new();
    for (p, q) in &dist.branches {
        *classes.entry(classify_clicks(p)).or_default() += q;
    }
    Ok((classes.into_iter().collect(), dist.dropped_mass))
}

/// The minimal polarization CSIGN: A is mixed with ancilla mode 1 and B with
/// ancilla mode 4 on 50/50 splitters; both pairs are read out polarization
/// resolved. On success ancilla modes 2 and 3 carry `CSIGN(A, B)`.
///
/// `input` holds A and B; `ancilla` is the four-mode resource (ideally
/// `|t'_1⟩`). With `number_resolving = false` each detector only clicks.
pub fn csign_minimal(
    input: &FockState,
    ancilla: &FockState,
    detector: &DetectorModel,
    number_resolving: bool,
) -> Result<CsignReport> {
    if ancilla.mode_count() != 4 {
        return invalid(format!(
            "the ancilla must have 4 modes, got {}",
            ancilla.mode_count()
        ));
    }
    let target = csign_ideal(input, Encoding::Polarization)?;
    // layout: A, a1..a4, B
    let joint = input
        .tensor(&ancilla.normalized()?)
        .permute_modes(&[0, 2, 3, 4, 5, 1])?;
    let f = ModeUnitary::fourier(1)?;
    let u = f.embed(6, &[0, 1])?.then(&f.embed(6, &[5, 4])?)?;
    let mixed = apply(&joint, &u)?;
    let branches = enumerate_outcomes(&mixed, &[0, 1, 5, 4], true)?;

    let results: Vec<Result<(Vec<CsignBranch>, f64)>> = branches
        .par_iter()
        .map(|br| {
            let (pa, pb) = br.pattern.split_modes(2);
            let (ca, da) = reported_classes(&pa, detector, number_resolving)?;
            let (cb, db) = reported_classes(&pb, detector, number_resolving)?;
            let mut out = Vec::new();
            for &(class_a, qa) in &ca {
                for &(class_b, qb) in &cb {
                    out.push(minimal_branch(br, class_a, class_b, qa * qb, &target)?);
                }
            }
            Ok((out, br.probability * (da + db)))
        })
        .collect();
    collect_report(Encoding::Polarization, 1, results)
}

fn minimal_branch(
    br: &OutcomeBranch,
    class_a: TeleportClass,
    class_b: TeleportClass,
    q: f64,
    target: &FockState,
) -> Result<CsignBranch> {
    let mut branch = CsignBranch {
        class_a,
        class_b,
        probability: br.probability * q,
        true_pattern: br.pattern.clone(),
        output_state: br.conditional_state.clone(),
        fidelity: None,
    };
    let (
        TeleportClass::Success { correction: ma, .. },
        TeleportClass::Success { correction: mb, .. },
    ) = (class_a, class_b)
    else {
        return Ok(branch);
    };
    // B enters through the second half of its copy, which moves the
    // entangling phase onto the A output as a fixed Z
    let phases = [
        (0, correction_phase(1, ma) + PI),
        (1, correction_phase(1, mb)),
    ];
    let corrected = apply_logical_phases(&br.conditional_state, Encoding::Polarization, &phases)?;
    branch.fidelity = Some(corrected.reduced_fidelity(&[0, 1], target)?);
    branch.output_state = corrected.extract_modes(&[0, 1])?.unwrap_or(corrected);
    Ok(branch)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn plus_plus(enc: Encoding) -> FockState {
        enc.encode_two([c(1.0), c(1.0), c(1.0), c(1.0)]).unwrap()
    }

    #[test]
    fn ideal_csign_flips_only_11() {
        let enc = Encoding::Polarization;
        let out = csign_ideal(&plus_plus(enc), enc).unwrap();
        let key = enc.logical_key(&[true, true]);
        assert!((out.amplitude(&key) - c(-0.5)).norm() < 1e-15);
        assert!(csign_ideal(
            &FockState::ket("HH")
                .unwrap()
                .apply_creation(0, crate::fock::Polarization::V)
                .unwrap(),
            enc
        )
        .is_err());
    }

    #[test]
    fn double_teleport_n1_and_n2() {
        let amps = [
            c(0.3),
            Complex64::new(0.1, 0.5),
            c(-0.4),
            Complex64::new(0.2, -0.6),
        ];
        for enc in [Encoding::Polarization, Encoding::DualRailKlm] {
            let input = enc.encode_two(amps).unwrap();
            for n in 1..=2 {
                let r = csign(&input, n, enc, &DetectorModel::ideal()).unwrap();
                let want = (n as f64 / (n + 1) as f64).powi(2);
                assert!(
                    (r.success_probability() - want).abs() < 1e-12,
                    "{enc} n={n}"
                );
                assert!(r.min_success_fidelity() > 1.0 - 1e-10, "{enc} n={n}");
            }
        }
    }

    #[test]
    fn minimal_setup_is_a_quarter() {
        let anc = build_t_prime_n(1, Encoding::Polarization).unwrap();
        let input = plus_plus(Encoding::Polarization);
        for resolving in [true, false] {
            let r = csign_minimal(&input, &anc, &DetectorModel::ideal(), resolving).unwrap();
            assert!((r.success_probability() - 0.25).abs() < 1e-12);
            assert!(r.min_success_fidelity() > 1.0 - 1e-10);
        }
        assert!(csign_minimal(
            &input,
            &FockState::ket("HV").unwrap(),
            &DetectorModel::ideal(),
            true
        )
        .is_err());
    }

    #[test]
    fn perturbed_ancilla_degrades_linearly() {
        let anc = build_t_prime_n(1, Encoding::Polarization).unwrap();
        let bad = FockState::ket("HHHH").unwrap();
        let input = plus_plus(Encoding::Polarization);
        let mut infid = Vec::new();
        for eps in [1e-3f64, 1e-2] {
            let mixed = anc
                .scaled(c((1.0 - eps).sqrt()))
                .add(&bad.scaled(c(eps.sqrt())))
                .unwrap()
                .normalized()
                .unwrap();
            let r = csign_minimal(&input, &mixed, &DetectorModel::ideal(), true).unwrap();
            infid.push(1.0 - r.min_success_fidelity());
        }
        // O(ε): tenfold ε gives roughly tenfold infidelity
        let ratio = infid[1] / infid[0];
        assert!(infid[0] < 1e-2 && ratio > 5.0 && ratio < 20.0, "{infid:?}");
    }
}
