//! The HV beam splitter: a two-qubit gate that rotates only the `HV`/`VH`
//! subspace, written as single-qubit gates around CSIGNs.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::csign::csign_minimal;
use super::{build_t_prime_n, Encoding};
use crate::error::{invalid, LoqcError, Result};
use crate::fock::FockState;
use crate::measurement::DetectorModel;
use crate::optics::{apply, ModeUnitary};

/// Two-qubit matrix in basis `HH, HV, VH, VV` (first qubit most significant).
pub type Gate2 = [[Complex64; 4]; 4];

type Gate1 = [[Complex64; 2]; 2];

/// One step of a two-qubit circuit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CircuitOp {
    /// Single-qubit gate (basis `H, V`) on qubit 0 or 1.
    Single {
        qubit: usize,
        gate: Gate1,
    },
    Csign,
}

pub fn hv_beam_splitter_matrix(theta: f64) -> Gate2 {
    let (s, c) = theta.sin_cos();
    let z = Complex64::default();
    let one = Complex64::new(1.0, 0.0);
    let r = |x: f64| Complex64::new(x, 0.0);
    [
        [one, z, z, z],
        [z, r(c), r(s), z],
        [z, r(-s), r(c), z],
        [z, z, z, one],
    ]
}

fn g(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Gate1 {
    [[a, b], [c, d]]
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `e^{iφX}`.
fn exp_x(phi: f64) -> Gate1 {
    let (s, c) = phi.sin_cos();
    g(re(c), Complex64::new(0.0, s), Complex64::new(0.0, s), re(c))
}

/// `e^{iφZ}`.
fn exp_z(phi: f64) -> Gate1 {
    g(
        Complex64::from_polar(1.0, phi),
        re(0.0),
        re(0.0),
        Complex64::from_polar(1.0, -phi),
    )
}

fn hadamard() -> Gate1 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    g(re(h), re(h), re(h), re(-h))
}

fn phase_s(sign: f64) -> Gate1 {
    g(re(1.0), re(0.0), re(0.0), Complex64::new(0.0, sign))
}

/// The circuit, in time order. `e^{-iπ/4 X}` on both qubits takes the
/// rotation generator to `XZ`-type form, where two CNOTs (each a CSIGN
/// between Hadamards) and local `X`/`Z` rotations realize it.
pub fn hv_beam_splitter_circuit(theta: f64) -> Vec<CircuitOp> {
    let one = |qubit, gate| CircuitOp::Single { qubit, gate };
    let cnot = [one(1, hadamard()), CircuitOp::Csign, one(1, hadamard())];
    let v = exp_x(-FRAC_PI_2 / 2.0);
    let v_dag = exp_x(FRAC_PI_2 / 2.0);
    let mut ops = vec![one(1, phase_s(1.0)), one(0, v), one(1, v)];
    ops.extend(cnot);
    ops.push(one(0, exp_x(theta / 2.0)));
    ops.push(one(1, exp_z(theta / 2.0)));
    ops.extend(cnot);
    ops.extend([one(0, v_dag), one(1, v_dag), one(1, phase_s(-1.0))]);
    ops
}

fn mat_mul(a: &Gate2, b: &Gate2) -> Gate2 {
    let mut out = [[Complex64::default(); 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            for j in 0..4 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn op_matrix(op: &CircuitOp) -> Result<Gate2> {
    let z = Complex64::default();
    let mut m = [[z; 4]; 4];
    match *op {
        CircuitOp::Csign => {
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = re(if i == 3 { -1.0 } else { 1.0 });
            }
        }
        CircuitOp::Single { qubit, gate } => {
            if qubit > 1 {
                return invalid(format!("qubit {qubit} out of range"));
            }
            for (i, row) in m.iter_mut().enumerate() {
                for (j, e) in row.iter_mut().enumerate() {
                    let (ia, ib, ja, jb) = (i >> 1, i & 1, j >> 1, j & 1);
                    *e = if qubit == 0 {
                        if ib == jb {
                            gate[ia][ja]
                        } else {
                            z
                        }
                    } else if ia == ja {
                        gate[ib][jb]
                    } else {
                        z
                    };
                }
            }
        }
    }
    Ok(m)
}

/// Product of the circuit's gates (first op applied first).
pub fn compose_circuit(ops: &[CircuitOp]) -> Result<Gate2> {
    let mut acc = op_matrix(&CircuitOp::Single {
        qubit: 0,
        gate: g(re(1.0), re(0.0), re(0.0), re(1.0)),
    })?;
    for op in ops {
        acc = mat_mul(&op_matrix(op)?, &acc);
    }
    Ok(acc)
}

/// Result of running the circuit optically with post-selected CSIGNs.
#[derive(Clone, Debug)]
pub struct HvRealization {
    /// Joint probability that every CSIGN heralded success.
    pub probability: f64,
    pub output_state: FockState,
    /// Fidelity with the HV beam-splitter matrix applied to the input.
    pub fidelity: f64,
}

/// Runs [`hv_beam_splitter_circuit`] on a two-mode polarization state:
/// single-qubit gates as wave plates, each CSIGN through the minimal
/// `|t'_1⟩` setup with ideal detectors, keeping the heralded branch.
pub fn realize_via_csign(theta: f64, input: &FockState) -> Result<HvRealization> {
    let enc = Encoding::Polarization;
    if input.mode_count() != 2 {
        return invalid("the HV beam splitter acts on two modes");
    }
    enc.check_logical(input)?;
    let ancilla = build_t_prime_n(1, enc)?;
    let mut state = input.normalized()?;
    let mut probability = 1.0;
    for op in hv_beam_splitter_circuit(theta) {
        match op {
            CircuitOp::Single { qubit, gate } => {
                state = apply(&state, &ModeUnitary::single_mode(2, qubit, gate)?)?;
            }
            CircuitOp::Csign => {
                let report = csign_minimal(&state, &ancilla, &DetectorModel::ideal(), true)?;
                probability *= report.success_probability();
                let heralded = report
                    .branches
                    .iter()
                    .find(|b| b.is_success())
                    .ok_or_else(|| LoqcError::InvalidArgument("CSIGN never succeeds".into()))?;
                state = heralded.output_state.clone();
            }
        }
    }
    let target = apply_gate2(&hv_beam_splitter_matrix(theta), input, enc)?;
    let fidelity = state.fidelity(&target)?;
    Ok(HvRealization {
        probability,
        output_state: state,
        fidelity,
    })
}

/// Applies a 4×4 logical matrix to a two-mode encoded state.
pub(crate) fn apply_gate2(m: &Gate2, state: &FockState, enc: Encoding) -> Result<FockState> {
    enc.check_logical(state)?;
    let bits = [[false, false], [false, true], [true, false], [true, true]];
    let amps: Vec<Complex64> = bits
        .iter()
        .map(|b| state.amplitude(&enc.logical_key(b)))
        .collect();
    let mut out = [Complex64::default(); 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|j| m[i][j] * amps[j]).sum();
    }
    enc.encode_two(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::csign_ideal;

    fn csign_matrix_agrees(state: &FockState) -> Result<bool> {
        let m = op_matrix(&CircuitOp::Csign)?;
        let a = apply_gate2(&m, state, Encoding::Polarization)?;
        let b = csign_ideal(state, Encoding::Polarization)?;
        Ok(a.fidelity(&b)? > 1.0 - 1e-12)
    }

    fn max_diff(a: &Gate2, b: &Gate2) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((a[i][j] - b[i][j]).norm());
            }
        }
        d
    }

    #[test]
    fn identity_at_zero_and_unitary() {
        let m = hv_beam_splitter_matrix(0.0);
        let id = compose_circuit(&[]).unwrap();
        assert!(max_diff(&m, &id) < 1e-15);
        for theta in [0.1, 0.7, 2.0, -1.3] {
            let m = hv_beam_splitter_matrix(theta);
            let mut mdag = [[Complex64::default(); 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    mdag[i][j] = m[j][i].conj();
                }
            }
            assert!(max_diff(&mat_mul(&mdag, &m), &id) < 1e-14);
        }
    }

    #[test]
    fn circuit_reproduces_matrix() {
        for theta in [0.0, 0.37, 1.0, FRAC_PI_2, 3.0, -2.2] {
            let c = compose_circuit(&hv_beam_splitter_circuit(theta)).unwrap();
            assert!(
                max_diff(&c, &hv_beam_splitter_matrix(theta)) < 1e-10,
                "θ={theta}"
            );
        }
        let csigns = hv_beam_splitter_circuit(0.3)
            .iter()
            .filter(|op| matches!(op, CircuitOp::Csign))
            .count();
        assert_eq!(csigns, 2);
    }

    #[test]
    fn optical_realization() {
        let input = Encoding::Polarization
            .encode_two([
                re(0.2),
                Complex64::new(0.5, 0.1),
                re(-0.6),
                Complex64::new(0.0, 0.3),
            ])
            .unwrap();
        assert!(csign_matrix_agrees(&input).unwrap());
        let r = realize_via_csign(0.6, &input).unwrap();
        assert!((r.probability - 1.0 / 16.0).abs() < 1e-12);
        assert!(r.fidelity > 1.0 - 1e-10);
    }
}
