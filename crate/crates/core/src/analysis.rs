//! Detected-failure and undetected-error rates of teleportation under
//! realistic detectors, by exact enumeration (with an optional Monte-Carlo
//! cross-check).

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Poisson};
use rayon::prelude::*;

use crate::error::{invalid, LoqcError, Result};
use crate::fock::InputQubit;
use crate::measurement::{DetectorModel, OutcomeBranch};
use crate::protocols::{classify_reported, teleport, Encoding, TeleportClass};

/// A success whose corrected output falls below this fidelity is an error.
pub const ERROR_FIDELITY: f64 = 1.0 - 1e-9;

/// Largest truncation bound an analysis will report.
pub const MAX_TRUNCATION: f64 = 1e-9;

pub const DEFAULT_ETA: f64 = 0.8;
pub const DEFAULT_DARK: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub encoding: Encoding,
    pub n: usize,
    pub eta: f64,
    pub dark_mean: f64,
    /// Probability the classifier reports success (correct or not).
    pub p_success: f64,
    /// Detected failure, including detected loss.
    pub p_f: f64,
    /// Reported success with a wrong output.
    pub p_nde: f64,
    /// `p_nde / (1 - p_f)`.
    pub p_e: f64,
    pub truncation_bound: f64,
    pub input: InputQubit,
}

impl ErrorReport {
    /// `|1 - p_success - p_f|`; should not exceed the truncation bound.
    pub fn accounting_gap(&self) -> f64 {
        (1.0 - self.p_success - self.p_f).abs()
    }
}

pub fn analyze_teleport(
    encoding: Encoding,
    n: usize,
    detector: &DetectorModel,
    input: &InputQubit,
) -> Result<ErrorReport> {
    if !(1..=6).contains(&n) {
        return invalid(format!("n must be in 1..=6, got {n}"));
    }
    let dist = teleport(input, n, encoding, detector)?;
    if dist.truncation_bound > MAX_TRUNCATION {
        return Err(LoqcError::Precision {
            bound: dist.truncation_bound,
            limit: MAX_TRUNCATION,
        });
    }
    let mut p_success = 0.0;
    let mut p_f = 0.0;
    let mut p_nde = 0.0;
    for o in &dist.outcomes {
        if o.class.is_success() {
            p_success += o.probability;
            if o.fidelity.unwrap_or(0.0) < ERROR_FIDELITY {
                p_nde += o.probability;
            }
        } else {
            p_f += o.probability;
        }
    }
    let p_e = if p_f < 1.0 {
        (p_nde / (1.0 - p_f)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(ErrorReport {
        encoding,
        n,
        eta: detector.eta(),
        dark_mean: detector.dark_mean(),
        p_success,
        p_f,
        p_nde,
        p_e,
        truncation_bound: dist.truncation_bound,
        input: *input,
    })
}

/// Parameter grid for [`sweep`].
#[derive(Clone, Debug)]
pub struct SweepGrid {
    pub encodings: Vec<Encoding>,
    pub ns: Vec<usize>,
    pub etas: Vec<f64>,
    pub darks: Vec<f64>,
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.encodings.len() * self.ns.len() * self.etas.len() * self.darks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in output order: encoding, then n, then η, then λτ.
    pub fn points(&self) -> Vec<(Encoding, usize, f64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for &e in &self.encodings {
            for &n in &self.ns {
                for &eta in &self.etas {
                    for &d in &self.darks {
                        out.push((e, n, eta, d));
                    }
                }
            }
        }
        out
    }
}

/// One report per grid point, in [`SweepGrid::points`] order.
pub fn sweep(grid: &SweepGrid, input: &InputQubit) -> Result<Vec<ErrorReport>> {
    if grid.is_empty() {
        return invalid("empty sweep grid");
    }
    let points = grid.points();
    // validate every detector before spending time on any point
    let detectors = points
        .iter()
        .map(|&(_, _, eta, d)| DetectorModel::new(eta, d))
        .collect::<Result<Vec<_>>>()?;
    points
        .par_iter()
        .zip(detectors.par_iter())
        .map(|(&(e, n, _, _), det)| analyze_teleport(e, n, det, input))
        .collect()
}

/// Summary of how `p_f` and `p_e` vary over a set of inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct InputSensitivity {
    pub reports: Vec<ErrorReport>,
    pub mean_p_f: f64,
    pub mean_p_e: f64,
    pub spread_p_f: f64,
    pub spread_p_e: f64,
}

/// Analyzes the same gate for several inputs and reports the mean and the
/// max-min spread of `p_f` and `p_e`.
pub fn input_sensitivity(
    encoding: Encoding,
    n: usize,
    detector: &DetectorModel,
    inputs: &[InputQubit],
) -> Result<InputSensitivity> {
    if inputs.is_empty() {
        return invalid("no inputs to average over");
    }
    let reports = inputs
        .par_iter()
        .map(|q| analyze_teleport(encoding, n, detector, q))
        .collect::<Result<Vec<_>>>()?;
    let stats = |f: fn(&ErrorReport) -> f64| {
        let vals: Vec<f64> = reports.iter().map(f).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (mean, hi - lo)
    };
    let (mean_p_f, spread_p_f) = stats(|r| r.p_f);
    let (mean_p_e, spread_p_e) = stats(|r| r.p_e);
    Ok(InputSensitivity {
        reports,
        mean_p_f,
        mean_p_e,
        spread_p_f,
        spread_p_e,
    })
}

/// Haar-random qubits from a seeded generator.
pub fn random_inputs(count: usize, seed: u64) -> Vec<InputQubit> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let z: [f64; 4] = std::array::from_fn(|_| {
                let normal: f64 = rng.sample(rand_distr::StandardNormal);
                normal
            });
            InputQubit::normalized(
                num_complex::Complex64::new(z[0], z[1]),
                num_complex::Complex64::new(z[2], z[3]),
            )
            .unwrap_or_else(|_| InputQubit::plus())
        })
        .collect()
}

/// Power-law fit of `p_e` against the dark-count mean.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub encoding: Encoding,
    pub n: usize,
    pub eta: f64,
    /// `(λτ, p_e)` for each probed dark-count mean.
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope of `log p_e` against `log λτ`.
    pub slope: f64,
    pub p_e_at_default_dark: f64,
}

pub fn dark_scaling_probe(
    encoding: Encoding,
    n: usize,
    eta: f64,
    darks: &[f64],
    input: &InputQubit,
) -> Result<ScalingReport> {
    if darks.len() < 2 || darks.iter().any(|&d| !(d > 0.0)) {
        return invalid("need at least two positive dark-count means");
    }
    let lo = darks.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = darks.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 10.0 - 1e-9 {
        return invalid("dark-count means must span at least one decade");
    }
    let grid = SweepGrid {
        encodings: vec![encoding],
        ns: vec![n],
        etas: vec![eta],
        darks: darks.to_vec(),
    };
    let reports = sweep(&grid, input)?;
    let points: Vec<(f64, f64)> = reports.iter().map(|r| (r.dark_mean, r.p_e)).collect();
    if points.iter().any(|&(_, p)| !(p > 0.0)) {
        return invalid("p_e vanishes at a probed point; no power law to fit");
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let at_default = analyze_teleport(encoding, n, &DetectorModel::new(eta, DEFAULT_DARK)?, input)?;
    Ok(ScalingReport {
        encoding,
        n,
        eta,
        points,
        slope: sxy / sxx,
        p_e_at_default_dark: at_default.p_e,
    })
}

/// Sampled estimates with one-sigma standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate {
    pub samples: u64,
    pub p_f: f64,
    pub p_f_sigma: f64,
    pub p_nde: f64,
    pub p_nde_sigma: f64,
}

/// Monte-Carlo estimate of `p_f` and `p_nde`: samples the true measurement
/// record, then each detector's binomial loss and Poisson dark counts.
pub fn mc_estimate(
    encoding: Encoding,
    n: usize,
    detector: &DetectorModel,
    input: &InputQubit,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let branches: Vec<OutcomeBranch> =
        crate::protocols::teleport_true_branches(input, n, encoding)?;
    let weights = WeightedIndex::new(branches.iter().map(|b| b.probability))
        .map_err(|e| LoqcError::InvalidArgument(e.to_string()))?;
    let dark = if detector.dark_mean() > 0.0 {
        Some(
            Poisson::new(detector.dark_mean())
                .map_err(|e| LoqcError::InvalidArgument(e.to_string()))?,
        )
    } else {
        None
    };
    let target = encoding.encode(input);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut verdicts: HashMap<(usize, TeleportClass), bool> = HashMap::new();
    let (mut fails, mut errors) = (0u64, 0u64);
    for _ in 0..samples {
        let i = weights.sample(&mut rng);
        let br = &branches[i];
        let mut counts = Vec::with_capacity(br.pattern.detector_count());
        for &l in br.pattern.counts() {
            let seen = if l == 0 {
                0
            } else {
                Binomial::new(l as u64, detector.eta())
                    .map_err(|e| LoqcError::InvalidArgument(e.to_string()))?
                    .sample(&mut rng)
            };
            let extra = dark.map(|d| d.sample(&mut rng) as u64).unwrap_or(0);
            counts.push((seen + extra) as u32);
        }
        let reported = crate::measurement::DetectionPattern::new(
            counts,
            br.pattern.is_polarization_resolved(),
        )?;
        let class = classify_reported(&reported, encoding);
        if !class.is_success() {
            fails += 1;
            continue;
        }
        let wrong = match verdicts.get(&(i, class)) {
            Some(&w) => w,
            None => {
                let f = crate::protocols::success_fidelity(br, class, n, encoding, &target)?;
                let w = f < ERROR_FIDELITY;
                verdicts.insert((i, class), w);
                w
            }
        };
        if wrong {
            errors += 1;
        }
    }
    let s = samples as f64;
    let est = |k: u64| {
        let p = k as f64 / s;
        (p, (p * (1.0 - p) / s).sqrt())
    };
    let (p_f, p_f_sigma) = est(fails);
    let (p_nde, p_nde_sigma) = est(errors);
    Ok(McEstimate {
        samples,
        p_f,
        p_f_sigma,
        p_nde,
        p_nde_sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_limit() {
        for enc in [Encoding::Polarization, Encoding::DualRailKlm] {
            for n in 1..=3 {
                let r =
                    analyze_teleport(enc, n, &DetectorModel::ideal(), &InputQubit::plus()).unwrap();
                assert!((r.p_f - 1.0 / (n + 1) as f64).abs() < 1e-12);
                assert_eq!(r.p_nde, 0.0);
                assert!(r.accounting_gap() <= r.truncation_bound + 1e-10);
            }
        }
    }

    #[test]
    fn rejects_out_of_range_n() {
        let d = DetectorModel::ideal();
        assert!(analyze_teleport(Encoding::Polarization, 0, &d, &InputQubit::plus()).is_err());
        assert!(analyze_teleport(Encoding::Polarization, 7, &d, &InputQubit::plus()).is_err());
    }

    #[test]
    fn klm_loss_is_silent_without_dark_counts() {
        let d = DetectorModel::new(0.8, 0.0).unwrap();
        let r = analyze_teleport(Encoding::DualRailKlm, 2, &d, &InputQubit::plus()).unwrap();
        assert!(r.p_nde > 0.01);
        let r = analyze_teleport(Encoding::Polarization, 2, &d, &InputQubit::plus()).unwrap();
        assert!(r.p_nde < 1e-14);
    }

    #[test]
    fn klm_failure_depends_on_input() {
        let d = DetectorModel::new(0.8, DEFAULT_DARK).unwrap();
        let a = analyze_teleport(Encoding::DualRailKlm, 2, &d, &InputQubit::zero()).unwrap();
        let b = analyze_teleport(Encoding::DualRailKlm, 2, &d, &InputQubit::one()).unwrap();
        assert!((a.p_f - b.p_f).abs() > 1e-3);
        let d0 = DetectorModel::new(0.8, 0.0).unwrap();
        let s = input_sensitivity(Encoding::Polarization, 2, &d0, &random_inputs(5, 7)).unwrap();
        assert!(s.spread_p_f < 1e-12);
    }

    #[test]
    fn sweep_order_and_size() {
        let grid = SweepGrid {
            encodings: vec![Encoding::DualRailKlm, Encoding::Polarization],
            ns: vec![1, 2],
            etas: vec![0.9],
            darks: vec![0.0, 1e-6],
        };
        let r = sweep(&grid, &InputQubit::plus()).unwrap();
        assert_eq!(r.len(), 8);
        for (rep, (e, n, eta, d)) in r.iter().zip(grid.points()) {
            assert_eq!(
                (rep.encoding, rep.n, rep.eta, rep.dark_mean),
                (e, n, eta, d)
            );
        }
    }

    #[test]
    fn scaling_probe_validation() {
        let q = InputQubit::plus();
        assert!(dark_scaling_probe(Encoding::Polarization, 1, 0.8, &[1e-7], &q).is_err());
        assert!(dark_scaling_probe(Encoding::Polarization, 1, 0.8, &[1e-7, 2e-7], &q).is_err());
    }
}
