//! Sparse multimode, dual-polarization bosonic states.
//!
//! Every path mode carries two bosonic slots, one per polarization. A basis
//! vector is an [`OccupationKey`] listing the photon count of each slot in the
//! order `(H of mode 0, V of mode 0, H of mode 1, V of mode 1, ...)`, which is
//! also the row/column order used by [`crate::optics::ModeUnitary`].
//!
//! Dual-rail (single-rail per mode) states use only the H slots.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Amplitudes with magnitude below this are dropped from a state.
pub const PRUNE_EPS: f64 = 1e-15;

/// Tolerance on `|norm² - 1|` for a state to count as normalized.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    #[inline]
    pub(crate) fn offset(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

/// Flat slot index of `(mode, pol)`.
#[inline]
pub fn slot(mode: usize, pol: Polarization) -> usize {
    2 * mode + pol.offset()
}

/// Photon counts of every slot of a fixed number of path modes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationKey(Vec<u8>);

impl OccupationKey {
    pub fn vacuum(mode_count: usize) -> Self {
        OccupationKey(vec![0; 2 * mode_count])
    }

    /// Builds a key from `(h, v)` pairs, one per mode.
    pub fn from_pairs(pairs: &[(u8, u8)]) -> Self {
        OccupationKey(pairs.iter().flat_map(|&(h, v)| [h, v]).collect())
    }

    pub(crate) fn from_slots(slots: Vec<u8>) -> Self {
        debug_assert!(slots.len() % 2 == 0);
        OccupationKey(slots)
    }

    pub fn mode_count(&self) -> usize {
        self.0.len() / 2
    }

    pub fn slots(&self) -> &[u8] {
        &self.0
    }

    pub fn count(&self, mode: usize, pol: Polarization) -> u8 {
        self.0[slot(mode, pol)]
    }

    pub fn h(&self, mode: usize) -> u8 {
        self.0[2 * mode]
    }

    pub fn v(&self, mode: usize) -> u8 {
        self.0[2 * mode + 1]
    }

    pub fn mode_total(&self, mode: usize) -> u32 {
        self.h(mode) as u32 + self.v(mode) as u32
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&c| c as u32).sum()
    }

    /// Keeps only the listed modes, in the listed order.
    pub fn restrict(&self, modes: &[usize]) -> OccupationKey {
        let mut out = Vec::with_capacity(2 * modes.len());
        for &m in modes {
            out.push(self.0[2 * m]);
            out.push(self.0[2 * m + 1]);
        }
        OccupationKey(out)
    }

    pub fn concat(&self, other: &OccupationKey) -> OccupationKey {
        let mut out = self.0.clone();
        out.extend_from_slice(&other.0);
        OccupationKey(out)
    }
}

impl fmt::Display for OccupationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for m in 0..self.mode_count() {
            if m > 0 {
                write!(f, ",")?;
            }
            write!(f, "({},{})", self.h(m), self.v(m))?;
        }
        write!(f, "]")
    }
}

/// A pure state: sparse map from occupation keys to complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    mode_count: usize,
    terms: BTreeMap<OccupationKey, Complex64>,
}

impl FockState {
    /// The vacuum of `mode_count` path modes.
    pub fn vacuum(mode_count: usize) -> Result<Self> {
        if mode_count == 0 {
            return invalid("vacuum needs at least one mode");
        }
        Ok(Self::basis(OccupationKey::vacuum(mode_count)))
    }

    /// The zero-mode state with unit amplitude, the identity of [`FockState::tensor`].
    pub fn unit() -> Self {
        Self::basis(OccupationKey::vacuum(0))
    }

    pub fn basis(key: OccupationKey) -> Self {
        let mode_count = key.mode_count();
        let mut terms = BTreeMap::new();
        terms.insert(key, Complex64::new(1.0, 0.0));
        FockState { mode_count, terms }
    }

    /// The zero vector; useful as an accumulator.
    pub fn zero(mode_count: usize) -> Self {
        FockState {
            mode_count,
            terms: BTreeMap::new(),
        }
    }

    /// Sums the given terms (duplicate keys are merged) and prunes negligible amplitudes.
    pub fn from_terms<I>(mode_count: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (OccupationKey, Complex64)>,
    {
        let mut map: BTreeMap<OccupationKey, Complex64> = BTreeMap::new();
        for (key, amp) in terms {
            if key.mode_count() != mode_count {
                return invalid(format!(
                    "key {key} has {} modes, expected {mode_count}",
                    key.mode_count()
                ));
            }
            *map.entry(key).or_default() += amp;
        }
        map.retain(|_, a| a.norm() >= PRUNE_EPS);
        Ok(FockState {
            mode_count,
            terms: map,
        })
    }

    /// Parses a product basis state, one character per mode:
    /// `H`/`V` for a single photon of that polarization, or a digit for that
    /// many H-slot photons (dual-rail / single-rail occupation).
    pub fn ket(pattern: &str) -> Result<Self> {
        let mut pairs = Vec::with_capacity(pattern.len());
        for c in pattern.chars() {
            let pair = match c {
                'H' | 'h' => (1, 0),
                'V' | 'v' => (0, 1),
                d if d.is_ascii_digit() => (d as u8 - b'0', 0),
                other => return invalid(format!("unknown mode symbol {other:?}")),
            };
            pairs.push(pair);
        }
        Ok(Self::basis(OccupationKey::from_pairs(&pairs)))
    }

    /// Normalized superposition of `ket` patterns with the given amplitudes.
    pub fn superposition(parts: &[(Complex64, &str)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return invalid("empty superposition");
        };
        let modes = first.chars().count();
        let mut terms = Vec::with_capacity(parts.len());
        for (amp, pat) in parts {
            let k = Self::ket(pat)?;
            if k.mode_count != modes {
                return invalid("superposition patterns differ in mode count");
            }
            let key = k.terms.into_keys().next().expect("basis state");
            terms.push((key, *amp));
        }
        Self::from_terms(modes, terms)?.normalized()
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical (sorted key) order.
    pub fn terms(&self) -> impl Iterator<Item = (&OccupationKey, &Complex64)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, key: &OccupationKey) -> Complex64 {
        self.terms.get(key).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if !(n2 > 0.0) || !n2.is_finite() {
            return invalid("cannot normalize a zero or non-finite state");
        }
        Ok(self.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, a)| (k.clone(), a * factor))
            .filter(|(_, a)| a.norm() >= PRUNE_EPS)
            .collect();
        FockState {
            mode_count: self.mode_count,
            terms,
        }
    }

    /// Vector sum `self + other`.
    pub fn add(&self, other: &FockState) -> Result<Self> {
        if self.mode_count != other.mode_count {
            return invalid("cannot add states with different mode counts");
        }
        Self::from_terms(
            self.mode_count,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(k, a)| (k.clone(), *a)),
        )
    }

    /// Multiplies each term's amplitude by `f(key)`.
    pub fn map_amplitudes(&self, f: impl Fn(&OccupationKey) -> Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, a)| (k.clone(), a * f(k)))
            .filter(|(_, a)| a.norm() >= PRUNE_EPS)
            .collect();
        FockState {
            mode_count: self.mode_count,
            terms,
        }
    }

    /// Applies `a†` for `(mode, pol)`: `a†|n⟩ = √(n+1)|n+1⟩`.
    pub fn apply_creation(&self, mode: usize, pol: Polarization) -> Result<Self> {
        if mode >= self.mode_count {
            return invalid(format!(
                "mode {mode} out of range for a {}-mode state",
                self.mode_count
            ));
        }
        let s = slot(mode, pol);
        let terms = self.terms.iter().map(|(k, a)| {
            let mut slots = k.0.clone();
            slots[s] += 1;
            let factor = (slots[s] as f64).sqrt();
            (OccupationKey(slots), a * factor)
        });
        Self::from_terms(self.mode_count, terms)
    }

    /// Tensor product; modes of `other` follow the modes of `self`.
    pub fn tensor(&self, other: &FockState) -> Self {
        let mut terms = BTreeMap::new();
        for (ka, aa) in &self.terms {
            for (kb, ab) in &other.terms {
                let amp = aa * ab;
                if amp.norm() >= PRUNE_EPS {
                    terms.insert(ka.concat(kb), amp);
                }
            }
        }
        FockState {
            mode_count: self.mode_count + other.mode_count,
            terms,
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner_product(&self, other: &FockState) -> Result<Complex64> {
        if self.mode_count != other.mode_count {
            return invalid(format!(
                "inner product of {}-mode and {}-mode states",
                self.mode_count, other.mode_count
            ));
        }
        let (small, large, conj_small) = if self.terms.len() <= other.terms.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Complex64::default();
        for (k, a) in &small.terms {
            if let Some(b) = large.terms.get(k) {
                acc += if conj_small {
                    a.conj() * b
                } else {
                    b.conj() * a
                };
            }
        }
        Ok(acc)
    }

    /// `|⟨self|other⟩|²` for normalized states.
    pub fn fidelity(&self, other: &FockState) -> Result<f64> {
        if !self.is_normalized() || !other.is_normalized() {
            return invalid("fidelity requires normalized states");
        }
        Ok(self.inner_product(other)?.norm_sqr().min(1.0))
    }

    /// Reorders modes: mode `i` of the result is mode `order[i]` of `self`.
    pub fn permute_modes(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.mode_count];
        if order.len() != self.mode_count {
            return invalid("permutation length differs from mode count");
        }
        for &m in order {
            if m >= self.mode_count || std::mem::replace(&mut seen[m], true) {
                return invalid(format!("{order:?} is not a permutation"));
            }
        }
        let terms = self
            .terms
            .iter()
            .map(|(k, a)| (k.restrict(order), *a))
            .collect();
        Ok(FockState {
            mode_count: self.mode_count,
            terms,
        })
    }

    /// If the state factorizes as `(state on modes) ⊗ (basis state on the rest)`,
    /// returns the normalized factor on `modes` (in the given order).
    pub fn extract_modes(&self, modes: &[usize]) -> Result<Option<FockState>> {
        let rest = self.complement(modes)?;
        let mut rest_key: Option<OccupationKey> = None;
        let mut terms = Vec::with_capacity(self.terms.len());
        for (k, a) in &self.terms {
            let rk = k.restrict(&rest);
            match &rest_key {
                None => rest_key = Some(rk),
                Some(existing) if *existing != rk => return Ok(None),
                _ => {}
            }
            terms.push((k.restrict(modes), *a));
        }
        let st = Self::from_terms(modes.len(), terms)?;
        if st.is_empty() {
            return Ok(None);
        }
        Ok(Some(st.normalized()?))
    }

    /// `⟨target| ρ |target⟩` where `ρ` is the reduced state of this
    /// (normalized) state on `modes`.
    pub fn reduced_fidelity(&self, modes: &[usize], target: &FockState) -> Result<f64> {
        if target.mode_count != modes.len() {
            return invalid("target mode count differs from the selected modes");
        }
        if !self.is_normalized() || !target.is_normalized() {
            return invalid("fidelity requires normalized states");
        }
        let rest = self.complement(modes)?;
        let mut per_rest: BTreeMap<OccupationKey, Complex64> = BTreeMap::new();
        for (k, a) in &self.terms {
            let sub = k.restrict(modes);
            if let Some(t) = target.terms.get(&sub) {
                *per_rest.entry(k.restrict(&rest)).or_default() += t.conj() * a;
            }
        }
        let f: f64 = per_rest.values().map(|c| c.norm_sqr()).sum();
        Ok(f.min(1.0))
    }

    /// Modes not listed in `modes`, ascending.
    pub(crate) fn complement(&self, modes: &[usize]) -> Result<Vec<usize>> {
        let mut mask = vec![false; self.mode_count];
        for &m in modes {
            if m >= self.mode_count {
                return invalid(format!(
                    "mode {m} out of range for a {}-mode state",
                    self.mode_count
                ));
            }
            if std::mem::replace(&mut mask[m], true) {
                return invalid(format!("mode {m} listed twice"));
            }
        }
        Ok((0..self.mode_count).filter(|&m| !mask[m]).collect())
    }

    /// True if every term has the same total photon number.
    pub fn photon_number(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(OccupationKey::total);
        let first = it.next()?;
        it.all(|t| t == first).then_some(first)
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, a)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i){}", a.re, a.im, k)?;
        }
        Ok(())
    }
}

/// Normalized single-qubit amplitudes `α|0⟩ + β|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputQubit {
    alpha: Complex64,
    beta: Complex64,
}

impl InputQubit {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n2 = alpha.norm_sqr() + beta.norm_sqr();
        if !n2.is_finite() || (n2 - 1.0).abs() > NORM_TOL {
            return invalid(format!("|α|²+|β|² = {n2}, expected 1"));
        }
        Ok(InputQubit { alpha, beta })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return invalid("qubit amplitudes must not both vanish");
        }
        Ok(InputQubit {
            alpha: alpha / n,
            beta: beta / n,
        })
    }

    /// `(|0⟩ + |1⟩)/√2`.
    pub fn plus() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        InputQubit {
            alpha: Complex64::new(r, 0.0),
            beta: Complex64::new(r, 0.0),
        }
    }

    pub fn zero() -> Self {
        InputQubit {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::default(),
        }
    }

    pub fn one() -> Self {
        InputQubit {
            alpha: Complex64::default(),
            beta: Complex64::new(1.0, 0.0),
        }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn vacuum_is_single_unit_term() {
        let v = FockState::vacuum(2).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(
            v.amplitude(&OccupationKey::from_pairs(&[(0, 0), (0, 0)])),
            c(1.0)
        );
        assert_eq!(FockState::vacuum(5).unwrap().norm_sqr(), 1.0);
        assert_eq!(v.inner_product(&v).unwrap(), c(1.0));
        assert!(FockState::vacuum(0).is_err());
    }

    #[test]
    fn creation_follows_bosonic_normalization() {
        let v = FockState::vacuum(1).unwrap();
        let one = v.apply_creation(0, Polarization::V).unwrap();
        assert_eq!(one, FockState::ket("V").unwrap());
        let two = one.apply_creation(0, Polarization::V).unwrap();
        let amp = two.amplitude(&OccupationKey::from_pairs(&[(0, 2)]));
        assert!((amp - c(2f64.sqrt())).norm() < 1e-15);
        let v2 = FockState::vacuum(2).unwrap();
        assert!(v2.apply_creation(3, Polarization::H).is_err());
    }

    #[test]
    fn creation_matrix_element() {
        // ⟨n+1|a†|n⟩ = √(n+1)
        let mut st = FockState::vacuum(1).unwrap();
        for n in 0..6u8 {
            let basis_n = FockState::basis(OccupationKey::from_pairs(&[(n, 0)]));
            let next = FockState::basis(OccupationKey::from_pairs(&[(n + 1, 0)]));
            let raised = basis_n.apply_creation(0, Polarization::H).unwrap();
            let elem = next.inner_product(&raised).unwrap();
            assert!((elem.re - ((n + 1) as f64).sqrt()).abs() < 1e-12);
            st = st.apply_creation(0, Polarization::H).unwrap();
        }
        assert_eq!(st.len(), 1);
    }

    #[test]
    fn tensor_identities() {
        let h = FockState::ket("H").unwrap();
        let v = FockState::ket("V").unwrap();
        assert_eq!(h.tensor(&v), FockState::ket("HV").unwrap());
        assert_eq!(h.tensor(&FockState::unit()), h);
        let plus = FockState::superposition(&[(c(1.0), "H"), (c(1.0), "V")]).unwrap();
        let s = plus.scaled(c(2.0));
        assert!((s.tensor(&plus).norm_sqr() - s.norm_sqr() * plus.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn inner_product_and_fidelity() {
        let h = FockState::ket("H").unwrap();
        let v = FockState::ket("V").unwrap();
        let plus = FockState::superposition(&[(c(1.0), "H"), (c(1.0), "V")]).unwrap();
        assert_eq!(h.inner_product(&v).unwrap(), c(0.0));
        assert!((plus.inner_product(&plus).unwrap() - c(1.0)).norm() < 1e-15);
        assert_eq!(h.fidelity(&h).unwrap(), 1.0);
        assert_eq!(h.fidelity(&v).unwrap(), 0.0);
        assert!((h.fidelity(&plus).unwrap() - 0.5).abs() < 1e-15);
        assert!(h.scaled(c(2.0)).fidelity(&h).is_err());
        assert!(h.inner_product(&FockState::ket("HH").unwrap()).is_err());
    }

    #[test]
    fn t1_norm_from_expansion() {
        // |t_1⟩ = (|HHV⟩-free form) (|HV⟩ + |VH⟩)/√2 over two modes
        let t1 = FockState::superposition(&[(c(1.0), "HV"), (c(1.0), "VH")]).unwrap();
        assert!((t1.inner_product(&t1).unwrap() - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn extract_and_reduce() {
        let plus = FockState::superposition(&[(c(1.0), "H"), (c(1.0), "V")]).unwrap();
        let st = FockState::ket("H")
            .unwrap()
            .tensor(&plus)
            .tensor(&FockState::ket("V").unwrap());
        let got = st.extract_modes(&[1]).unwrap().unwrap();
        assert!((got.fidelity(&plus).unwrap() - 1.0).abs() < 1e-15);
        assert!((st.reduced_fidelity(&[1], &plus).unwrap() - 1.0).abs() < 1e-15);
        let bell = FockState::superposition(&[(c(1.0), "HH"), (c(1.0), "VV")]).unwrap();
        assert!(bell.extract_modes(&[0]).unwrap().is_none());
        let h = FockState::ket("H").unwrap();
        assert!((bell.reduced_fidelity(&[0], &h).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn permute_rejects_non_permutations() {
        let st = FockState::ket("HV0").unwrap();
        assert_eq!(
            st.permute_modes(&[1, 0, 2]).unwrap(),
            FockState::ket("VH0").unwrap()
        );
        assert!(st.permute_modes(&[0, 0, 1]).is_err());
        assert!(st.permute_modes(&[0, 1]).is_err());
    }

    #[test]
    fn input_qubit_validation() {
        assert!(InputQubit::new(c(1.0), c(1.0)).is_err());
        assert!(InputQubit::new(c(0.6), c(0.8)).is_ok());
        assert!(InputQubit::normalized(c(0.0), c(0.0)).is_err());
    }
}
