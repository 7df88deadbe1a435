//! Acceptance suite: one check per release criterion, each printing a single
//! PASS/FAIL line. Runs as its own harness so the lines always show up.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use loqc::analysis::{
    analyze_teleport, dark_scaling_probe, mc_estimate, random_inputs, ErrorReport,
};
use loqc::measurement::{enumerate_outcomes, reported_distribution};
use loqc::protocols::{
    bell_pair, bell_to_ghz, build_t_prime_1_klm_via_ns, build_t_prime_1_pol_via_encoders,
    build_t_prime_n, classify_reported, cluster_chain, cluster_to_t_prime, csign, csign_minimal,
    ghz_state, ghz_to_cluster, phased_cluster_state, teleport, ClusterClass, TeleportClass,
    DEFAULT_ENCODER_PROBABILITY, DEFAULT_NS_PROBABILITY,
};
use loqc::{apply, DetectorModel, Encoding, FockState, InputQubit, ModeUnitary, Polarization};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

const ENCODINGS: [Encoding; 2] = [Encoding::Polarization, Encoding::DualRailKlm];

fn real_detector() -> DetectorModel {
    DetectorModel::new(0.8, 1e-7).unwrap()
}

fn report(enc: Encoding, n: usize, det: &DetectorModel) -> ErrorReport {
    analyze_teleport(enc, n, det, &InputQubit::plus()).unwrap()
}

fn c1_teleport_success_probability() -> Check {
    let ideal = DetectorModel::ideal();
    for enc in ENCODINGS {
        for n in 1..=4 {
            let want = n as f64 / (n + 1) as f64;
            for (i, q) in random_inputs(20, 100 + n as u64).iter().enumerate() {
                let d = teleport(q, n, enc, &ideal).map_err(|e| e.to_string())?;
                let ps = d.success_probability();
                ensure(
                    (ps - want).abs() < 1e-12,
                    format!("{enc} n={n} input {i}: P(success)={ps}"),
                )?;
                let all_v = d.probability_where(|c| *c == TeleportClass::FailureAllV);
                let all_h = d.probability_where(|c| *c == TeleportClass::FailureAllH);
                let (a2, b2) = (q.alpha().norm_sqr(), q.beta().norm_sqr());
                ensure(
                    (all_v - b2 / (n + 1) as f64).abs() < 1e-12
                        && (all_h - a2 / (n + 1) as f64).abs() < 1e-12,
                    format!("{enc} n={n} input {i}: failure split {all_h}/{all_v}"),
                )?;
            }
        }
    }
    Ok("P(success)=n/(n+1), failures |α|²/(n+1), |β|²/(n+1) for n=1..4, both encodings".into())
}

fn c2_phase_correction() -> Check {
    let ideal = DetectorModel::ideal();
    let mut worst: f64 = 1.0;
    let mut uncorrected_worst: f64 = 1.0;
    for enc in ENCODINGS {
        for n in 1..=4 {
            for q in random_inputs(100, 200 + n as u64) {
                let target = enc.encode(&q);
                let d = teleport(&q, n, enc, &ideal).map_err(|e| e.to_string())?;
                for o in d.outcomes.iter().filter(|o| o.class.is_success()) {
                    worst = worst.min(o.fidelity.unwrap());
                    let raw = o
                        .raw_output
                        .as_ref()
                        .ok_or("success without a factorized output")?;
                    uncorrected_worst = uncorrected_worst.min(raw.fidelity(&target).unwrap());
                }
            }
        }
    }
    ensure(worst >= 1.0 - 1e-10, format!("corrected fidelity {worst}"))?;
    ensure(
        uncorrected_worst < 1.0 - 1e-3,
        format!("uncorrected fidelity {uncorrected_worst}"),
    )?;
    Ok(format!(
        "min corrected fidelity {worst:.12}, min uncorrected {uncorrected_worst:.4}"
    ))
}

/// Brute-force 4×4 product `diag(1,1,1,-1) · amps` on basis `00,01,10,11`.
fn csign_oracle(amps: [Complex64; 4]) -> [Complex64; 4] {
    let m = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
    ];
    std::array::from_fn(|i| (0..4).map(|j| amps[j] * m[i][j]).sum())
}

fn two_qubit_inputs() -> Vec<[Complex64; 4]> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::default();
    let mut out: Vec<[Complex64; 4]> = (0..4)
        .map(|i| std::array::from_fn(|j| if i == j { one } else { zero }))
        .collect();
    out.push([one; 4]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..8 {
        out.push(std::array::from_fn(|_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        }));
    }
    out
}

fn c3_csign() -> Check {
    let ideal = DetectorModel::ideal();
    let anc = build_t_prime_n(1, Encoding::Polarization).unwrap();
    let mut worst: f64 = 1.0;
    for amps in two_qubit_inputs() {
        for enc in ENCODINGS {
            let input = enc.encode_two(amps).unwrap();
            let target = enc.encode_two(csign_oracle(amps)).unwrap();
            let r = csign(&input, 1, enc, &ideal).map_err(|e| e.to_string())?;
            ensure(
                (r.success_probability() - 0.25).abs() < 1e-12,
                format!("double teleport {enc}: {}", r.success_probability()),
            )?;
            for b in r.branches.iter().filter(|b| b.is_success()) {
                worst = worst.min(b.output_state.fidelity(&target).unwrap());
            }
        }
        let input = Encoding::Polarization.encode_two(amps).unwrap();
        let target = Encoding::Polarization
            .encode_two(csign_oracle(amps))
            .unwrap();
        let resolving = csign_minimal(&input, &anc, &ideal, true).map_err(|e| e.to_string())?;
        let clicks = csign_minimal(&input, &anc, &ideal, false).map_err(|e| e.to_string())?;
        for r in [&resolving, &clicks] {
            ensure(
                (r.success_probability() - 0.25).abs() < 1e-12,
                format!("minimal setup: {}", r.success_probability()),
            )?;
            for b in r.branches.iter().filter(|b| b.is_success()) {
                worst = worst.min(b.output_state.fidelity(&target).unwrap());
            }
        }
        let set = |r: &loqc::protocols::CsignReport| {
            let mut v: Vec<_> = r
                .branches
                .iter()
                .filter(|b| b.is_success())
                .map(|b| b.true_pattern.clone())
                .collect();
            v.sort();
            v
        };
        ensure(
            set(&resolving) == set(&clicks),
            "click-only readout changes the success set",
        )?;
    }
    ensure(
        worst >= 1.0 - 1e-10,
        format!("success-branch fidelity {worst}"),
    )?;
    Ok(format!(
        "P=1/4 in both setups and both readouts; min fidelity vs 4x4 oracle {worst:.12}"
    ))
}

fn c4_klm_figure() -> Check {
    let det = real_detector();
    let r: Vec<ErrorReport> = (2..=4)
        .map(|n| report(Encoding::DualRailKlm, n, &det))
        .collect();
    ensure(
        (0.24..=0.30).contains(&r[0].p_e),
        format!("p_e(2)={}", r[0].p_e),
    )?;
    ensure(r[2].p_e > 0.40, format!("p_e(4)={}", r[2].p_e))?;
    ensure(
        r[0].p_f > r[1].p_f && r[1].p_f > r[2].p_f,
        "p_f not decreasing in n",
    )?;
    ensure(
        r[0].p_e < r[1].p_e && r[1].p_e < r[2].p_e,
        "p_e not increasing in n",
    )?;
    Ok(format!(
        "p_e = {:.4}, {:.4}, {:.4}; p_f = {:.4}, {:.4}, {:.4} for n=2,3,4",
        r[0].p_e, r[1].p_e, r[2].p_e, r[0].p_f, r[1].p_f, r[2].p_f
    ))
}

fn c5_polarization_failure() -> Check {
    let det = real_detector();
    let pol: Vec<ErrorReport> = (2..=4)
        .map(|n| report(Encoding::Polarization, n, &det))
        .collect();
    let klm = report(Encoding::DualRailKlm, 2, &det);
    ensure(
        (0.62..=0.70).contains(&pol[0].p_f),
        format!("pol p_f(2)={}", pol[0].p_f),
    )?;
    ensure(
        (0.30..=0.36).contains(&klm.p_f),
        format!("klm p_f(2)={}", klm.p_f),
    )?;
    ensure(
        pol[0].p_f < pol[1].p_f && pol[1].p_f < pol[2].p_f,
        "polarization p_f not increasing in n",
    )?;
    Ok(format!(
        "pol p_f = {:.4}, {:.4}, {:.4} (n=2,3,4); klm p_f(2) = {:.4}",
        pol[0].p_f, pol[1].p_f, pol[2].p_f, klm.p_f
    ))
}

/// `p_e` for polarization, n=2, η=0.8, λτ=1e-7, recomputed through the full
/// reported-pattern enumeration rather than the class convolution.
fn pol_n2_p_e_by_full_enumeration() -> f64 {
    let (n, enc, det) = (2, Encoding::Polarization, real_detector());
    let q = InputQubit::plus();
    let joint = enc.encode(&q).tensor(&t2_by_hand());
    let f = ModeUnitary::fourier(n)
        .unwrap()
        .embed(2 * n + 1, &[0, 1, 2])
        .unwrap();
    let mixed = apply(&joint, &f).unwrap();
    let target = enc.encode(&q);
    let (mut p_f, mut p_nde) = (0.0, 0.0);
    for br in enumerate_outcomes(&mixed, &[0, 1, 2], true).unwrap() {
        let rep = reported_distribution(&br.pattern, &det, 0.0).unwrap();
        for (rp, w) in &rep.branches {
            let p = br.probability * w;
            match classify_reported(rp, enc) {
                TeleportClass::Success { k, correction } => {
                    let phase = 2.0 * std::f64::consts::PI * correction as f64 / 3.0;
                    let ps = ModeUnitary::phase_shifter(n, phase, k - 1, Polarization::V).unwrap();
                    let out = apply(&br.conditional_state, &ps).unwrap();
                    if out.reduced_fidelity(&[k - 1], &target).unwrap() < 1.0 - 1e-9 {
                        p_nde += p;
                    }
                }
                _ => p_f += p,
            }
        }
    }
    p_nde / (1.0 - p_f)
}

/// `|t_2⟩` written out by hand: `Σ_j |V^j H^(2-j)⟩|H^j V^(2-j)⟩ / √3`.
fn t2_by_hand() -> FockState {
    let s = Complex64::new(1.0, 0.0);
    FockState::superposition(&[(s, "HHVV"), (s, "VHHV"), (s, "VVHH")]).unwrap()
}

fn c6_polarization_errors() -> Check {
    let det = real_detector();
    let pol: Vec<ErrorReport> = (2..=4)
        .map(|n| report(Encoding::Polarization, n, &det))
        .collect();
    for (i, r) in pol.iter().enumerate() {
        let klm = report(Encoding::DualRailKlm, i + 2, &det);
        ensure(
            r.p_e / klm.p_e < 1e-3,
            format!("n={}: ratio {}", i + 2, r.p_e / klm.p_e),
        )?;
    }
    ensure(
        pol[0].p_e < pol[1].p_e && pol[1].p_e < pol[2].p_e,
        "pol p_e not increasing in n",
    )?;
    // band frozen from the exact value, confirmed by an independent route
    let oracle = pol_n2_p_e_by_full_enumeration();
    ensure(
        (pol[0].p_e - oracle).abs() < 1e-6 * oracle,
        format!("convolution {} vs full enumeration {oracle}", pol[0].p_e),
    )?;
    ensure(
        (4.0e-7..=4.25e-7).contains(&pol[0].p_e) && pol[0].p_e < 1e-5,
        format!("pol p_e(2)={}", pol[0].p_e),
    )?;
    let probe = dark_scaling_probe(
        Encoding::Polarization,
        2,
        0.8,
        &[1e-8, 1e-7, 1e-6],
        &InputQubit::plus(),
    )
    .map_err(|e| e.to_string())?;
    ensure(
        (0.8..=1.2).contains(&probe.slope),
        format!("slope {}", probe.slope),
    )?;
    let mut worst_nde: f64 = 0.0;
    for eta in [0.2, 0.5, 0.8] {
        for n in 1..=3 {
            let r = report(
                Encoding::Polarization,
                n,
                &DetectorModel::new(eta, 0.0).unwrap(),
            );
            worst_nde = worst_nde.max(r.p_nde);
        }
    }
    ensure(
        worst_nde < 1e-14,
        format!("p_nde at zero dark counts {worst_nde}"),
    )?;
    Ok(format!(
        "p_e(2,3,4) = {:.3e}, {:.3e}, {:.3e}; slope {:.4}; max p_nde(λτ=0) = {worst_nde:.1e}",
        pol[0].p_e, pol[1].p_e, pol[2].p_e, probe.slope
    ))
}

fn c7_preparation_chain() -> Check {
    let klm = build_t_prime_1_klm_via_ns(DEFAULT_NS_PROBABILITY).map_err(|e| e.to_string())?;
    let fk = klm
        .state
        .fidelity(&build_t_prime_n(1, Encoding::DualRailKlm).unwrap())
        .unwrap();
    ensure(
        (klm.probability - 1.0 / 16.0).abs() < 1e-15,
        format!("NS chain p={}", klm.probability),
    )?;
    ensure(fk > 1.0 - 1e-12, format!("NS chain fidelity {fk}"))?;
    let pol = build_t_prime_1_pol_via_encoders(DEFAULT_NS_PROBABILITY, DEFAULT_ENCODER_PROBABILITY)
        .map_err(|e| e.to_string())?;
    let fp = pol
        .state
        .fidelity(&build_t_prime_n(1, Encoding::Polarization).unwrap())
        .unwrap();
    ensure(
        (pol.probability - 1.0 / 64.0).abs() < 1e-15,
        format!("full chain p={}", pol.probability),
    )?;
    ensure(fp > 1.0 - 1e-12, format!("full chain fidelity {fp}"))?;
    Ok(format!("1/16 (F={fk:.12}) and 1/64 (F={fp:.12})"))
}

fn c8_cluster_construction() -> Check {
    let ideal = DetectorModel::ideal();
    let ghz = bell_to_ghz(&bell_pair(), &bell_pair(), &ideal).map_err(|e| e.to_string())?;
    let herald: f64 = ghz
        .iter()
        .filter(|b| b.heralded)
        .map(|b| b.probability)
        .sum();
    ensure(
        (herald - 0.5).abs() < 1e-12,
        format!("GHZ herald probability {herald}"),
    )?;
    for b in ghz.iter().filter(|b| b.heralded) {
        ensure(b.fidelity.unwrap() > 1.0 - 1e-10, "heralded GHZ fidelity")?;
    }

    let t = build_t_prime_n(1, Encoding::Polarization).unwrap();
    let cluster = ghz_to_cluster(&ghz_state(), &ghz_state(), &ideal).map_err(|e| e.to_string())?;
    let mut n_success = 0;
    for b in cluster.iter().filter(|b| b.class == ClusterClass::Success) {
        n_success += 1;
        let f = b.output_state.fidelity(&phased_cluster_state()).unwrap();
        ensure(f > 1.0 - 1e-10, format!("cluster fidelity {f}"))?;
        let ft = cluster_to_t_prime(&b.output_state)
            .unwrap()
            .fidelity(&t)
            .unwrap();
        ensure(ft > 1.0 - 1e-10, format!("converted fidelity {ft}"))?;
    }
    ensure(n_success > 0, "no ideal cluster success")?;

    // GHZ states carrying the missed-photon error, fed to the next fusion
    let lossy = DetectorModel::new(0.7, 0.0).unwrap();
    let faulty: Vec<FockState> = bell_to_ghz(&bell_pair(), &bell_pair(), &lossy)
        .unwrap()
        .into_iter()
        .filter(|b| b.heralded && b.true_pattern.total() == 2)
        .map(|b| b.output_state)
        .collect();
    ensure(!faulty.is_empty(), "no missed-photon branch found")?;
    for bad in &faulty {
        for (a, b) in [(bad, &ghz_state()), (&ghz_state(), bad), (bad, bad)] {
            for det in [ideal, lossy] {
                let out = ghz_to_cluster(a, b, &det).unwrap();
                ensure(
                    out.iter().all(|o| o.class != ClusterClass::Success),
                    "missed-photon error classified as success",
                )?;
            }
        }
    }

    let chain = cluster_chain(&real_detector()).map_err(|e| e.to_string())?;
    ensure(
        chain.p_false_success < 1e-6 && chain.false_success_rate() < 1e-6,
        format!(
            "false success {} (rate {})",
            chain.p_false_success,
            chain.false_success_rate()
        ),
    )?;
    Ok(format!(
        "GHZ herald 1/2; cluster and |t'_1> fidelity 1; false success {:.2e} joint, {:.2e} per heralded cluster",
        chain.p_false_success,
        chain.false_success_rate()
    ))
}

fn random_circuit(rng: &mut ChaCha8Rng, modes: usize, steps: usize) -> ModeUnitary {
    let mut u = ModeUnitary::identity(modes);
    for _ in 0..steps {
        let a = rng.random_range(0..modes);
        let b = (a + 1 + rng.random_range(0..modes - 1)) % modes;
        let x: f64 = rng.random_range(-3.0..3.0);
        let el = match rng.random_range(0..4) {
            0 => ModeUnitary::beam_splitter(modes, x, a, b),
            1 => ModeUnitary::phase_shifter(modes, x, a, Polarization::V),
            2 => ModeUnitary::polarization_rotator(modes, x, a),
            _ => ModeUnitary::polarizing_beam_splitter(modes, a, b),
        }
        .unwrap();
        u = u.then(&el).unwrap();
    }
    u
}

fn c9_engine_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let psi = FockState::superposition(&[
        (Complex64::new(0.3, 0.1), "HVH"),
        (Complex64::new(-0.5, 0.2), "2V0"),
        (Complex64::new(0.1, -0.7), "V02"),
    ])
    .unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let u = random_circuit(&mut rng, 3, 6);
        let w = random_circuit(&mut rng, 3, 6);
        worst = worst.max(u.unitarity_error());
        let one = apply(&psi, &u).unwrap();
        ensure(one.photon_number() == Some(3), "photon number changed")?;
        worst = worst.max((one.norm_sqr() - 1.0).abs());
        let seq = apply(&one, &w).unwrap();
        let composed = apply(&psi, &w.mul(&u).unwrap()).unwrap();
        worst = worst.max((1.0 - seq.inner_product(&composed).unwrap().re).abs());
    }
    ensure(worst < 1e-10, format!("engine error {worst}"))?;

    let det = real_detector();
    let mut gap: f64 = 0.0;
    for enc in ENCODINGS {
        for n in 1..=3 {
            let d = teleport(&InputQubit::plus(), n, enc, &det).unwrap();
            let total: f64 = d.outcomes.iter().map(|o| o.probability).sum();
            gap = gap.max((1.0 - total - d.truncation_bound).abs());
        }
    }
    ensure(gap < 1e-10, format!("enumeration does not close: {gap}"))?;

    let (enc, n, q) = (Encoding::DualRailKlm, 2, InputQubit::plus());
    let exact = analyze_teleport(enc, n, &det, &q).unwrap();
    let mc = mc_estimate(enc, n, &det, &q, 1_000_000, 2024).map_err(|e| e.to_string())?;
    let zf = (mc.p_f - exact.p_f).abs() / mc.p_f_sigma;
    let zn = (mc.p_nde - exact.p_nde).abs() / mc.p_nde_sigma;
    ensure(
        zf < 3.0 && zn < 3.0,
        format!("Monte-Carlo off by {zf:.2}σ / {zn:.2}σ"),
    )?;
    Ok(format!(
        "engine error {worst:.1e}; enumeration gap {gap:.1e}; MC within {zf:.2}σ (p_f), {zn:.2}σ (p_nde)"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 9] = [
        (
            "teleportation success probability",
            c1_teleport_success_probability,
        ),
        ("phase correction restores the input", c2_phase_correction),
        ("CSIGN through |t'_1>", c3_csign),
        ("dual-rail error rates vs n", c4_klm_figure),
        ("polarization detected failure", c5_polarization_failure),
        ("polarization undetected error", c6_polarization_errors),
        ("ancilla preparation chain", c7_preparation_chain),
        ("GHZ and cluster construction", c8_cluster_construction),
        ("engine properties and Monte-Carlo", c9_engine_properties),
    ];
    // keep the per-criterion lines clean of panic backtraces
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
