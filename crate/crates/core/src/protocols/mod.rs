//! Gate-teleportation protocols, ancilla preparation and the four-photon
//! cluster construction.

mod cluster;
mod csign;
mod hv;
mod prep;
mod teleport;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, LoqcError, Result};
use crate::fock::{FockState, InputQubit, OccupationKey, Polarization};

pub use cluster::{
    bell_pair, bell_to_ghz, cluster_chain, cluster_to_t_prime, ghz_state, ghz_to_cluster,
    phased_cluster_state, ChainReport, ClusterBranch, ClusterClass, GhzBranch,
};
pub use csign::{csign, csign_ideal, csign_minimal, CsignBranch, CsignReport};
pub use hv::{
    compose_circuit, hv_beam_splitter_circuit, hv_beam_splitter_matrix, realize_via_csign,
    CircuitOp, Gate2, HvRealization,
};
pub use prep::{
    build_t_prime_1_klm_via_ns, build_t_prime_1_pol_via_encoders, dual_rail_to_polarization,
    encoder, ns_gate, t_prime_1_fidelity, PostSelected, DEFAULT_ENCODER_PROBABILITY,
    DEFAULT_NS_PROBABILITY,
};
pub use teleport::{
    class_distribution, classify_reported, correction_exponent, teleport, TeleportClass,
    TeleportDistribution, TeleportOutcome, REPORTED_PRUNE_EPS,
};
pub(crate) use teleport::{success_fidelity, teleport_true_branches};

/// How a qubit is carried by photons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Encoding {
    /// One rail of a dual-rail qubit: `|0⟩` is vacuum, `|1⟩` one photon.
    DualRailKlm,
    /// One photon per mode: `|0⟩ = |H⟩`, `|1⟩ = |V⟩`.
    Polarization,
}

impl Encoding {
    /// The slot whose occupation marks logical `1`.
    pub fn one_slot(self) -> Polarization {
        match self {
            Encoding::DualRailKlm => Polarization::H,
            Encoding::Polarization => Polarization::V,
        }
    }

    /// Photodetection in this encoding resolves polarization.
    pub fn polarization_resolved(self) -> bool {
        matches!(self, Encoding::Polarization)
    }

    fn symbol(self, bit: bool) -> char {
        match (self, bit) {
            (Encoding::DualRailKlm, false) => '0',
            (Encoding::DualRailKlm, true) => '1',
            (Encoding::Polarization, false) => 'H',
            (Encoding::Polarization, true) => 'V',
        }
    }

    fn bit_pair(self, bit: bool) -> (u8, u8) {
        match (self, bit) {
            (Encoding::DualRailKlm, false) => (0, 0),
            (Encoding::DualRailKlm, true) => (1, 0),
            (Encoding::Polarization, false) => (1, 0),
            (Encoding::Polarization, true) => (0, 1),
        }
    }

    /// Basis key for a string of logical bits, one mode per bit.
    pub fn logical_key(self, bits: &[bool]) -> OccupationKey {
        let pairs: Vec<(u8, u8)> = bits.iter().map(|&b| self.bit_pair(b)).collect();
        OccupationKey::from_pairs(&pairs)
    }

    /// Logical value of `mode` in `key`, if it is a valid codeword.
    pub fn logical_bit(self, key: &OccupationKey, mode: usize) -> Option<bool> {
        match (key.h(mode), key.v(mode)) {
            p if p == self.bit_pair(false) => Some(false),
            p if p == self.bit_pair(true) => Some(true),
            _ => None,
        }
    }

    /// Product basis state for a bit pattern written with this encoding's symbols.
    pub fn pattern(self, bits: &[bool]) -> String {
        bits.iter().map(|&b| self.symbol(b)).collect()
    }

    /// `α|0⟩ + β|1⟩` on one mode.
    pub fn encode(self, q: &InputQubit) -> FockState {
        FockState::from_terms(
            1,
            [
                (self.logical_key(&[false]), q.alpha()),
                (self.logical_key(&[true]), q.beta()),
            ],
        )
        .expect("single-mode keys")
    }

    /// Two-qubit state `Σ c_{ab} |ab⟩` in basis order `00, 01, 10, 11`.
    pub fn encode_two(self, amps: [Complex64; 4]) -> Result<FockState> {
        let terms = (0..4).map(|i| (self.logical_key(&[i & 2 != 0, i & 1 != 0]), amps[i]));
        FockState::from_terms(2, terms)?.normalized()
    }

    /// Checks every term of `state` is a codeword on all modes.
    pub(crate) fn check_logical(self, state: &FockState) -> Result<()> {
        for (k, _) in state.terms() {
            for m in 0..state.mode_count() {
                if self.logical_bit(k, m).is_none() {
                    return invalid(format!("{k} is not a {self} codeword"));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::DualRailKlm => "klm",
            Encoding::Polarization => "pol",
        })
    }
}

impl FromStr for Encoding {
    type Err = LoqcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "klm" | "dual_rail_klm" | "dual-rail" => Ok(Encoding::DualRailKlm),
            "pol" | "polarization" => Ok(Encoding::Polarization),
            other => invalid(format!("unknown encoding {other:?} (expected klm or pol)")),
        }
    }
}

/// `|t_n⟩` in the given encoding over `2n` modes:
/// `Σ_j |1⟩^j |0⟩^(n-j) |0⟩^j |1⟩^(n-j) / √(n+1)`.
pub fn teleporting_state(n: usize, encoding: Encoding) -> Result<FockState> {
    if n == 0 {
        return invalid("teleporting state needs n >= 1");
    }
    let amp = Complex64::new(1.0 / ((n + 1) as f64).sqrt(), 0.0);
    let terms = (0..=n).map(|j| (encoding.logical_key(&t_n_bits(n, j)), amp));
    FockState::from_terms(2 * n, terms)
}

fn t_n_bits(n: usize, j: usize) -> Vec<bool> {
    (0..2 * n)
        .map(|i| if i < n { i < j } else { i - n >= j })
        .collect()
}

/// `|t_n⟩` with polarization encoding (one photon per mode, `2n` photons).
pub fn build_t_n(n: usize) -> Result<FockState> {
    teleporting_state(n, Encoding::Polarization)
}

/// `|t_n⟩_KLM` with dual-rail occupation (`n` photons in `2n` modes).
pub fn build_t_n_klm(n: usize) -> Result<FockState> {
    teleporting_state(n, Encoding::DualRailKlm)
}

/// `|t'_n⟩` over `4n` modes: two copies of `|t_n⟩` with CSIGN between every
/// pair `(n+k, 3n+l)`, i.e. sign `(-1)^((n-j)(n-i))` on term `(j, i)`.
pub fn build_t_prime_n(n: usize, encoding: Encoding) -> Result<FockState> {
    if n == 0 {
        return invalid("t'_n needs n >= 1");
    }
    let amp = 1.0 / (n + 1) as f64;
    let mut terms = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let sign = if ((n - j) * (n - i)) % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            let mut bits = t_n_bits(n, j);
            bits.extend(t_n_bits(n, i));
            terms.push((encoding.logical_key(&bits), Complex64::new(sign * amp, 0.0)));
        }
    }
    FockState::from_terms(4 * n, terms)
}
