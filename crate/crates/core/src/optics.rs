//! Linear-optical elements as unitaries on creation operators.
//!
//! A [`ModeUnitary`] over `M` path modes is a `2M × 2M` matrix `U` whose
//! column `s` is the image of slot `s`: `c_s† ↦ Σ_t U[t][s] c_t†`. Slots are
//! ordered `(H0, V0, H1, V1, ...)`. With this convention a single photon's
//! amplitude vector transforms as `ψ ↦ Uψ`, and applying `U` then `W` is the
//! same as applying `W·U`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fock::{slot, FockState, OccupationKey, Polarization};

/// Which polarization slot(s) of a mode an element acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolarizationSelect {
    H,
    V,
    Both,
}

impl From<Polarization> for PolarizationSelect {
    fn from(p: Polarization) -> Self {
        match p {
            Polarization::H => PolarizationSelect::H,
            Polarization::V => PolarizationSelect::V,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary {
    modes: usize,
    data: Vec<Complex64>,
}

impl ModeUnitary {
    pub fn identity(modes: usize) -> Self {
        let dim = 2 * modes;
        let mut data = vec![Complex64::default(); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        ModeUnitary { modes, data }
    }

    /// Wraps a row-major `2M × 2M` matrix.
    pub fn from_matrix(modes: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != 4 * modes * modes {
            return invalid(format!(
                "matrix has {} entries, expected {}",
                data.len(),
                4 * modes * modes
            ));
        }
        Ok(ModeUnitary { modes, data })
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        2 * self.modes
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    #[inline]
    fn set(&mut self, row: usize, col: usize, v: Complex64) {
        let d = self.dim();
        self.data[row * d + col] = v;
    }

    /// Discrete Fourier transform over modes `0..=n`, identical on both
    /// polarizations: `F[l][k] = ω^{kl}/√(n+1)`, `ω = e^{2πi/(n+1)}`.
    pub fn fourier(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("fourier(n) needs n >= 1");
        }
        let size = n + 1;
        let norm = 1.0 / (size as f64).sqrt();
        let mut u = ModeUnitary::identity(size);
        for l in 0..size {
            for k in 0..size {
                // reduce the exponent first so the phase is exact for small n
                let e = (k * l) % size;
                let w = Complex64::from_polar(norm, 2.0 * PI * e as f64 / size as f64);
                for pol in [Polarization::H, Polarization::V] {
                    u.set(slot(l, pol), slot(k, pol), w);
                }
            }
        }
        Ok(u)
    }

    /// Rotation `[[cos θ, sin θ], [-sin θ, cos θ]]` between two path modes,
    /// applied to both polarizations.
    pub fn beam_splitter(modes: usize, theta: f64, a: usize, b: usize) -> Result<Self> {
        check_pair(modes, a, b)?;
        let (s, c) = theta.sin_cos();
        let mut u = ModeUnitary::identity(modes);
        for pol in [Polarization::H, Polarization::V] {
            let (sa, sb) = (slot(a, pol), slot(b, pol));
            u.set(sa, sa, Complex64::new(c, 0.0));
            u.set(sa, sb, Complex64::new(s, 0.0));
            u.set(sb, sa, Complex64::new(-s, 0.0));
            u.set(sb, sb, Complex64::new(c, 0.0));
        }
        Ok(u)
    }

    /// Multiplies the selected creation operator(s) of `mode` by `e^{iφ}`.
    pub fn phase_shifter(
        modes: usize,
        phi: f64,
        mode: usize,
        which: impl Into<PolarizationSelect>,
    ) -> Result<Self> {
        check_mode(modes, mode)?;
        let mut u = ModeUnitary::identity(modes);
        let w = Complex64::from_polar(1.0, phi);
        let pols: &[Polarization] = match which.into() {
            PolarizationSelect::H => &[Polarization::H],
            PolarizationSelect::V => &[Polarization::V],
            PolarizationSelect::Both => &[Polarization::H, Polarization::V],
        };
        for &p in pols {
            let s = slot(mode, p);
            u.set(s, s, w);
        }
        Ok(u)
    }

    /// Rotates the polarization of `mode`: `H ↦ cos θ H + sin θ V`,
    /// `V ↦ -sin θ H + cos θ V`.
    pub fn polarization_rotator(modes: usize, theta: f64, mode: usize) -> Result<Self> {
        check_mode(modes, mode)?;
        let (s, c) = theta.sin_cos();
        Self::single_mode(
            modes,
            mode,
            [
                [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
            ],
        )
    }

    /// Arbitrary 2×2 polarization transform `m` (rows/cols `H, V`) on one mode.
    pub fn single_mode(modes: usize, mode: usize, m: [[Complex64; 2]; 2]) -> Result<Self> {
        check_mode(modes, mode)?;
        let mut u = ModeUnitary::identity(modes);
        let (h, v) = (slot(mode, Polarization::H), slot(mode, Polarization::V));
        u.set(h, h, m[0][0]);
        u.set(h, v, m[0][1]);
        u.set(v, h, m[1][0]);
        u.set(v, v, m[1][1]);
        Ok(u)
    }

    /// Polarizing beam splitter: H transmits, V is exchanged between the two
    /// modes, no reflection phase.
    pub fn polarizing_beam_splitter(modes: usize, a: usize, b: usize) -> Result<Self> {
        check_pair(modes, a, b)?;
        let mut u = ModeUnitary::identity(modes);
        let (va, vb) = (slot(a, Polarization::V), slot(b, Polarization::V));
        let zero = Complex64::default();
        let one = Complex64::new(1.0, 0.0);
        u.set(va, va, zero);
        u.set(vb, vb, zero);
        u.set(vb, va, one);
        u.set(va, vb, one);
        Ok(u)
    }

    /// Embeds this unitary into `total` modes, with local mode `i` placed on
    /// global mode `targets[i]`. Everything else is left untouched.
    pub fn embed(&self, total: usize, targets: &[usize]) -> Result<Self> {
        if targets.len() != self.modes {
            return invalid("embedding target list has the wrong length");
        }
        let mut seen = vec![false; total];
        for &t in targets {
            if t >= total || std::mem::replace(&mut seen[t], true) {
                return invalid(format!(
                    "bad embedding targets {targets:?} for {total} modes"
                ));
            }
        }
        let mut u = ModeUnitary::identity(total);
        let gslot = |s: usize| 2 * targets[s / 2] + s % 2;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                u.set(gslot(r), gslot(c), self.entry(r, c));
            }
        }
        Ok(u)
    }

    /// Matrix product `self · other` (apply `other` first).
    pub fn mul(&self, other: &ModeUnitary) -> Result<Self> {
        if self.modes != other.modes {
            return invalid("cannot multiply unitaries of different size");
        }
        let d = self.dim();
        let mut data = vec![Complex64::default(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == Complex64::default() {
                    continue;
                }
                for j in 0..d {
                    data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        Ok(ModeUnitary {
            modes: self.modes,
            data,
        })
    }

    /// Composition in application order: `self` first, then `next`.
    pub fn then(&self, next: &ModeUnitary) -> Result<Self> {
        next.mul(self)
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim();
        let mut data = vec![Complex64::default(); d * d];
        for i in 0..d {
            for j in 0..d {
                data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        ModeUnitary {
            modes: self.modes,
            data,
        }
    }

    /// Max-entry deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint().mul(self).expect("same size");
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p.data[i * d + j] - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    /// True if no entry couples an H slot to a V slot.
    pub fn is_polarization_preserving(&self) -> bool {
        let d = self.dim();
        (0..d).all(|r| (0..d).all(|c| r % 2 == c % 2 || self.entry(r, c) == Complex64::default()))
    }

    /// True if column `s` is exactly the unit vector `e_s`.
    fn passes_through(&self, s: usize) -> bool {
        let d = self.dim();
        (0..d).all(|r| {
            let e = self.data[r * d + s];
            if r == s {
                e == Complex64::new(1.0, 0.0)
            } else {
                e == Complex64::default()
            }
        })
    }
}

fn check_mode(modes: usize, mode: usize) -> Result<()> {
    if mode >= modes {
        return invalid(format!("mode {mode} out of range for {modes} modes"));
    }
    Ok(())
}

fn check_pair(modes: usize, a: usize, b: usize) -> Result<()> {
    check_mode(modes, a)?;
    check_mode(modes, b)?;
    if a == b {
        return invalid("two-mode element needs distinct modes");
    }
    Ok(())
}

fn factorial_sqrt(n: u8) -> f64 {
    (1..=n as u32).map(|k| k as f64).product::<f64>().sqrt()
}

/// Applies `u` to `state` by substituting every creation operator with its
/// image and expanding the resulting monomials.
pub fn apply(state: &FockState, u: &ModeUnitary) -> Result<FockState> {
    if u.mode_count() != state.mode_count() {
        return invalid(format!(
            "unitary acts on {} modes, state has {}",
            u.mode_count(),
            state.mode_count()
        ));
    }
    let d = u.dim();
    let active: Vec<usize> = (0..d).filter(|&s| !u.passes_through(s)).collect();
    // sparse columns of the active slots
    let columns: HashMap<usize, Vec<(usize, Complex64)>> = active
        .iter()
        .map(|&s| {
            let col = (0..d)
                .filter_map(|t| {
                    let e = u.entry(t, s);
                    (e != Complex64::default()).then_some((t, e))
                })
                .collect();
            (s, col)
        })
        .collect();

    let mut out: HashMap<Vec<u8>, Complex64> = HashMap::new();
    for (key, amp) in state.terms() {
        let slots = key.slots();
        let norm_in: f64 = slots.iter().map(|&n| factorial_sqrt(n)).product();
        let mut start = slots.to_vec();
        for &s in &active {
            start[s] = 0;
        }
        let mut monomials: HashMap<Vec<u8>, Complex64> = HashMap::new();
        monomials.insert(start, amp / norm_in);
        for &s in &active {
            let col = &columns[&s];
            for _ in 0..slots[s] {
                let mut next: HashMap<Vec<u8>, Complex64> =
                    HashMap::with_capacity(monomials.len() * col.len());
                for (m, c) in &monomials {
                    for &(t, e) in col {
                        let mut k = m.clone();
                        k[t] += 1;
                        *next.entry(k).or_default() += c * e;
                    }
                }
                monomials = next;
            }
        }
        for (m, c) in monomials {
            let norm_out: f64 = m.iter().map(|&n| factorial_sqrt(n)).product();
            *out.entry(m).or_default() += c * norm_out;
        }
    }
    FockState::from_terms(
        state.mode_count(),
        out.into_iter()
            .map(|(k, a)| (OccupationKey::from_slots(k), a)),
    )
}
