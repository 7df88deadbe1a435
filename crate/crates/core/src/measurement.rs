//! Photodetection: exact outcome enumeration and the detector confusion channel.
//!
//! A detector with quantum efficiency `η` and Poissonian dark counts of mean
//! `λτ` per gate window reports `k` photons when `l` arrive with probability
//!
//! ```text
//! P_D(k|l) = Σ_{d=0..k} D(k-d) · C(l,d) η^d (1-η)^(l-d),   D(j) = e^{-λτ} (λτ)^j / j!
//! ```
//!
//! The dark-count sum is truncated at `d_max` extra counts; the discarded
//! Poisson tail is reported alongside every distribution built from it.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fock::{FockState, OccupationKey};

/// Target bound on the Poisson tail beyond `d_max`.
pub const DARK_TAIL_TARGET: f64 = 1e-15;

/// Smallest dark-count truncation depth ever used.
pub const DEFAULT_D_MAX: u32 = 3;

/// Per-detector photon counts.
///
/// Polarization-resolved patterns carry two detectors per mode, stored as
/// `[r_0, h_0, r_1, h_1, ...]` (V port first, then H port). Unresolved
/// patterns carry one count per mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DetectionPattern {
    counts: Vec<u32>,
    polarization_resolved: bool,
}

impl DetectionPattern {
    pub fn new(counts: Vec<u32>, polarization_resolved: bool) -> Result<Self> {
        if polarization_resolved && counts.len() % 2 != 0 {
            return invalid("polarization-resolved pattern needs an even detector count");
        }
        Ok(DetectionPattern {
            counts,
            polarization_resolved,
        })
    }

    /// Resolved pattern from `(r_j, h_j)` pairs (V count, H count).
    pub fn resolved(pairs: &[(u32, u32)]) -> Self {
        DetectionPattern {
            counts: pairs.iter().flat_map(|&(r, h)| [r, h]).collect(),
            polarization_resolved: true,
        }
    }

    pub fn unresolved(counts: &[u32]) -> Self {
        DetectionPattern {
            counts: counts.to_vec(),
            polarization_resolved: false,
        }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn is_polarization_resolved(&self) -> bool {
        self.polarization_resolved
    }

    pub fn detector_count(&self) -> usize {
        self.counts.len()
    }

    pub fn mode_count(&self) -> usize {
        if self.polarization_resolved {
            self.counts.len() / 2
        } else {
            self.counts.len()
        }
    }

    /// Photons reported in mode `j`, both polarizations.
    pub fn mode_total(&self, j: usize) -> u32 {
        if self.polarization_resolved {
            self.counts[2 * j] + self.counts[2 * j + 1]
        } else {
            self.counts[j]
        }
    }

    /// V-port count of mode `j` (resolved patterns only).
    pub fn v(&self, j: usize) -> u32 {
        debug_assert!(self.polarization_resolved);
        self.counts[2 * j]
    }

    /// H-port count of mode `j` (resolved patterns only).
    pub fn h(&self, j: usize) -> u32 {
        debug_assert!(self.polarization_resolved);
        self.counts[2 * j + 1]
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Total V-port count (resolved patterns only).
    pub fn v_total(&self) -> u32 {
        (0..self.mode_count()).map(|j| self.v(j)).sum()
    }

    /// The mode a given detector index belongs to.
    pub fn detector_mode(&self, detector: usize) -> usize {
        if self.polarization_resolved {
            detector / 2
        } else {
            detector
        }
    }

    /// Whether detector `i` watches the V port (resolved patterns only).
    pub fn is_v_port(&self, detector: usize) -> bool {
        self.polarization_resolved && detector % 2 == 0
    }

    /// Splits a pattern into its first `modes` modes and the remainder.
    pub fn split_modes(&self, modes: usize) -> (DetectionPattern, DetectionPattern) {
        let at = if self.polarization_resolved {
            2 * modes
        } else {
            modes
        };
        let (a, b) = self.counts.split_at(at);
        (
            DetectionPattern {
                counts: a.to_vec(),
                polarization_resolved: self.polarization_resolved,
            },
            DetectionPattern {
                counts: b.to_vec(),
                polarization_resolved: self.polarization_resolved,
            },
        )
    }

    pub(crate) fn with_counts(&self, counts: Vec<u32>) -> Self {
        DetectionPattern {
            counts,
            polarization_resolved: self.polarization_resolved,
        }
    }
}

impl fmt::Display for DetectionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.polarization_resolved {
            let parts: Vec<String> = (0..self.mode_count())
                .map(|j| format!("{}V{}H", self.v(j), self.h(j)))
                .collect();
            write!(f, "{}", parts.join(" "))
        } else {
            let parts: Vec<String> = self.counts.iter().map(u32::to_string).collect();
            write!(f, "{}", parts.join(" "))
        }
    }
}

/// One exact measurement record with its post-measurement state.
#[derive(Clone, Debug)]
pub struct OutcomeBranch {
    pub pattern: DetectionPattern,
    pub probability: f64,
    /// Normalized state of the unmeasured modes, ascending mode order.
    pub conditional_state: FockState,
}

/// Enumerates every photon-counting outcome on `measured` modes.
///
/// Patterns list the measured modes in the order given. Unresolved counting
/// is only supported when each pattern leaves a pure conditional state
/// (e.g. when only one polarization is populated); otherwise the call fails.
pub fn enumerate_outcomes(
    state: &FockState,
    measured: &[usize],
    polarization_resolved: bool,
) -> Result<Vec<OutcomeBranch>> {
    if !state.is_normalized() {
        return invalid("outcome enumeration needs a normalized state");
    }
    let rest = state.complement(measured)?;
    if measured.is_empty() {
        return invalid("no modes to measure");
    }

    type Group = (BTreeMap<OccupationKey, Complex64>, Option<OccupationKey>);
    let mut groups: BTreeMap<DetectionPattern, Group> = BTreeMap::new();
    for (key, amp) in state.terms() {
        let sub = key.restrict(measured);
        let counts: Vec<u32> = if polarization_resolved {
            (0..measured.len())
                .flat_map(|j| [sub.v(j) as u32, sub.h(j) as u32])
                .collect()
        } else {
            (0..measured.len()).map(|j| sub.mode_total(j)).collect()
        };
        let pattern = DetectionPattern {
            counts,
            polarization_resolved,
        };
        let (terms, measured_key) = groups.entry(pattern).or_default();
        match measured_key {
            None => *measured_key = Some(sub),
            Some(k) if *k != sub => {
                return invalid(
                    "unresolved counting would leave a mixed conditional state; \
                     measure with polarization resolution",
                )
            }
            _ => {}
        }
        *terms.entry(key.restrict(&rest)).or_default() += *amp;
    }

    let mut out = Vec::with_capacity(groups.len());
    for (pattern, (terms, _)) in groups {
        let st = FockState::from_terms(rest.len(), terms)?;
        let probability = st.norm_sqr();
        if probability == 0.0 {
            continue;
        }
        out.push(OutcomeBranch {
            pattern,
            probability,
            conditional_state: st.normalized()?,
        });
    }
    Ok(out)
}

/// Quantum efficiency, dark-count mean and dark-count truncation depth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorModel {
    eta: f64,
    dark_mean: f64,
    d_max: u32,
}

impl DetectorModel {
    /// Picks the smallest `d_max ≥ 3` whose Poisson tail is below
    /// [`DARK_TAIL_TARGET`].
    pub fn new(eta: f64, dark_mean: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return invalid(format!("efficiency {eta} outside [0, 1]"));
        }
        if !(dark_mean >= 0.0) || !dark_mean.is_finite() {
            return invalid(format!(
                "dark-count mean {dark_mean} must be finite and >= 0"
            ));
        }
        let mut m = DetectorModel {
            eta,
            dark_mean,
            d_max: DEFAULT_D_MAX,
        };
        while m.dark_tail() >= DARK_TAIL_TARGET && m.d_max < 200 {
            m.d_max += 1;
        }
        Ok(m)
    }

    /// Unit efficiency, no dark counts.
    pub fn ideal() -> Self {
        DetectorModel {
            eta: 1.0,
            dark_mean: 0.0,
            d_max: DEFAULT_D_MAX,
        }
    }

    /// Overrides the truncation depth; the tail is still reported.
    pub fn with_d_max(mut self, d_max: u32) -> Self {
        self.d_max = d_max;
        self
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dark_mean(&self) -> f64 {
        self.dark_mean
    }

    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    pub fn is_ideal(&self) -> bool {
        self.eta == 1.0 && self.dark_mean == 0.0
    }

    /// Poisson mass beyond `d_max`, summed directly to avoid cancellation.
    pub fn dark_tail(&self) -> f64 {
        let lam = self.dark_mean;
        if lam == 0.0 {
            return 0.0;
        }
        let mut term = dark_count_pmf(self, self.d_max + 1);
        let mut sum = 0.0;
        let mut d = self.d_max + 1;
        while term > 0.0 && term > sum * 1e-18 {
            sum += term;
            d += 1;
            term *= lam / d as f64;
            if d > self.d_max + 10_000 {
                break;
            }
        }
        sum
    }
}

/// `D(d) = e^{-λτ} (λτ)^d / d!`.
pub fn dark_count_pmf(model: &DetectorModel, d: u32) -> f64 {
    let lam = model.dark_mean;
    if lam == 0.0 {
        return if d == 0 { 1.0 } else { 0.0 };
    }
    let mut p = (-lam).exp();
    for j in 1..=d {
        p *= lam / j as f64;
    }
    p
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `P_D(·|l)` for one detector, truncated at `d_max` dark counts.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfusionPmf {
    /// `probs[k]` is the probability of reporting `k` photons.
    pub probs: Vec<f64>,
    /// Mass lost to the dark-count truncation.
    pub tail: f64,
}

pub fn detector_confusion(model: &DetectorModel, true_count: u32) -> ConfusionPmf {
    let l = true_count;
    let max_k = l + model.d_max;
    let dark: Vec<f64> = (0..=model.d_max)
        .map(|d| dark_count_pmf(model, d))
        .collect();
    let detected: Vec<f64> = (0..=l)
        .map(|d| binomial(l, d) * model.eta.powi(d as i32) * (1.0 - model.eta).powi((l - d) as i32))
        .collect();
    let mut probs = vec![0.0; (max_k + 1) as usize];
    for (d, pd) in detected.iter().enumerate() {
        if *pd == 0.0 {
            continue;
        }
        for (j, pj) in dark.iter().enumerate() {
            probs[d + j] += pd * pj;
        }
    }
    while probs.len() > 1 && *probs.last().unwrap() == 0.0 {
        probs.pop();
    }
    ConfusionPmf {
        probs,
        tail: model.dark_tail(),
    }
}

/// Distribution of reported patterns for one true pattern.
#[derive(Clone, Debug)]
pub struct ReportedDistribution {
    pub branches: Vec<(DetectionPattern, f64)>,
    /// Mass discarded by branch pruning and dark-count truncation.
    pub dropped_mass: f64,
}

impl ReportedDistribution {
    pub fn kept_mass(&self) -> f64 {
        self.branches.iter().map(|(_, p)| p).sum()
    }
}

/// Product distribution over independent detectors. Partial branches whose
/// probability falls below `prune_eps` are discarded with their entire
/// subtree; the discarded mass is accumulated in `dropped_mass`.
pub fn reported_distribution(
    true_pattern: &DetectionPattern,
    model: &DetectorModel,
    prune_eps: f64,
) -> Result<ReportedDistribution> {
    if !(prune_eps >= 0.0) {
        return invalid("prune threshold must be >= 0");
    }
    let pmfs: Vec<ConfusionPmf> = true_pattern
        .counts()
        .iter()
        .map(|&l| detector_confusion(model, l))
        .collect();
    let mut partial: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), 1.0)];
    let mut dropped = 0.0;
    for pmf in &pmfs {
        let mut next = Vec::with_capacity(partial.len() * pmf.probs.len());
        for (counts, p) in &partial {
            dropped += p * pmf.tail;
            for (k, pk) in pmf.probs.iter().enumerate() {
                let q = p * pk;
                if q == 0.0 {
                    continue;
                }
                if q < prune_eps {
                    dropped += q;
                    continue;
                }
                let mut c = counts.clone();
                c.push(k as u32);
                next.push((c, q));
            }
        }
        partial = next;
    }
    let branches = partial
        .into_iter()
        .map(|(c, p)| (true_pattern.with_counts(c), p))
        .collect();
    Ok(ReportedDistribution {
        branches,
        dropped_mass: dropped,
    })
}
