//! Ring constellations synthesised by a binary-amplitude, phase-programmable
//! reflecting surface, plus a PSK baseline.
//!
//! A ring constellation of order `M = 4R²` has `R` amplitude rings. Ring `r`
//! (1-based) carries `l_r = 4(2r − 1)` phase states offset by `π / (2 l_r)`,
//! and an effective number of ON elements `K_r`. With `K` elements each
//! reflecting `α₀/√K`, the coherent sum over `K_r` ON elements gives a symbol
//! amplitude of `K_r · α₀ / √K`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// One amplitude ring of a ring constellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingLayout {
    /// 1-based ring index.
    pub ring: usize,
    /// Number of phase states on this ring.
    pub phase_count: usize,
    /// Phase of the first state on the ring, in radians.
    pub initial_offset: f64,
    /// Effective ON level `K_r` expressed as a fraction of `K`.
    pub on_fraction: f64,
}

impl RingLayout {
    /// Phase of the 1-based slot `k` on this ring.
    pub fn phase(&self, k: usize) -> f64 {
        self.initial_offset + 2.0 * PI * (k as f64 - 1.0) / self.phase_count as f64
    }
}

/// Which family a constellation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modulation {
    Ris,
    Psk,
}

/// Position of a symbol inside its constellation (both 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SymbolSlot {
    pub ring: usize,
    pub phase_slot: usize,
}

/// An ordered set of coherent-state amplitudes, ring-major and phase-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    symbols: Vec<Complex64>,
    slots: Vec<SymbolSlot>,
    rings: Vec<RingLayout>,
    element_count: Option<u64>,
    source_amplitude: f64,
}

impl Constellation {
    /// Builds a constellation from explicit amplitudes, one ring holding all of
    /// them. Useful for ad-hoc alphabets in tests and custom studies.
    pub fn from_symbols(symbols: Vec<Complex64>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyInput("constellation symbols"));
        }
        if symbols.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(invalid("symbols", "amplitudes must be finite"));
        }
        let slots = (1..=symbols.len()).map(|k| SymbolSlot { ring: 1, phase_slot: k }).collect();
        let source_amplitude = symbols.iter().map(|s| s.norm()).fold(0.0, f64::max);
        Ok(Self {
            modulation: Modulation::Psk,
            symbols,
            slots,
            rings: Vec::new(),
            element_count: None,
            source_amplitude,
        })
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    /// Modulation order `M`.
    pub fn order(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    /// Amplitude of the 0-based symbol `index`.
    pub fn symbol(&self, index: usize) -> Complex64 {
        self.symbols[index]
    }

    pub fn slots(&self) -> &[SymbolSlot] {
        &self.slots
    }

    /// Ring metadata; empty for PSK and ad-hoc constellations.
    pub fn rings(&self) -> &[RingLayout] {
        &self.rings
    }

    /// Number of reflecting elements `K`, for surface-synthesised alphabets.
    pub fn element_count(&self) -> Option<u64> {
        self.element_count
    }

    /// Per-element source amplitude `α₀` (PSK: the common symbol amplitude).
    pub fn source_amplitude(&self) -> f64 {
        self.source_amplitude
    }

    /// Mean photon number of the brightest symbol.
    pub fn peak_photon_number(&self) -> f64 {
        self.symbols.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max)
    }
}

/// Number of rings for a ring constellation of order `m`.
fn ring_count(m: usize) -> Result<usize> {
    if m < 4 || !m.is_multiple_of(4) {
        return Err(Error::UnsupportedOrder(m));
    }
    let quarter = m / 4;
    let r = (quarter as f64).sqrt().round() as usize;
    if r == 0 || r * r != quarter {
        return Err(Error::UnsupportedOrder(m));
    }
    Ok(r)
}

/// Ring layout for a ring constellation of order `m = 4R²`.
///
/// The ON levels follow `K_r / K = ((2R − 1) r − R) / (2R(R − 1))`, which
/// reproduces `{1/4, 1}` for `M = 16`, `(7r − 4)/24` for `M = 64` and
/// `(15r − 8)/112` for `M = 256`. A single ring (`M = 4`) is fully ON.
pub fn ring_layout(m: usize) -> Result<Vec<RingLayout>> {
    let rings = ring_count(m)?;
    let big_r = rings as f64;
    Ok((1..=rings)
        .map(|r| {
            let phase_count = 4 * (2 * r - 1);
            let on_fraction = if rings == 1 {
                1.0
            } else {
                ((2.0 * big_r - 1.0) * r as f64 - big_r) / (2.0 * big_r * (big_r - 1.0))
            };
            RingLayout { ring: r, phase_count, initial_offset: PI / (2.0 * phase_count as f64), on_fraction }
        })
        .collect())
}

/// Ring constellation of order `m` for `k` elements lit with source amplitude
/// `alpha0` (√photons per mode).
pub fn ris_constellation(m: usize, k: u64, alpha0: f64) -> Result<Constellation> {
    let rings = ring_layout(m)?;
    if k == 0 {
        return Err(invalid("k", "element count must be positive"));
    }
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(invalid("alpha0", format!("must be positive, got {alpha0}")));
    }
    let k_f = k as f64;
    let mut symbols = Vec::with_capacity(m);
    let mut slots = Vec::with_capacity(m);
    for ring in &rings {
        let on_level = ring.on_fraction * k_f;
        let magnitude = on_level / k_f.sqrt() * alpha0;
        for slot in 1..=ring.phase_count {
            symbols.push(Complex64::from_polar(magnitude, ring.phase(slot)));
            slots.push(SymbolSlot { ring: ring.ring, phase_slot: slot });
        }
    }
    debug_assert_eq!(symbols.len(), m);
    Ok(Constellation {
        modulation: Modulation::Ris,
        symbols,
        slots,
        rings,
        element_count: Some(k),
        source_amplitude: alpha0,
    })
}

/// `m` equal-amplitude symbols at phases `2πj/m`, `j = 0..m`.
pub fn psk_constellation(m: usize, amplitude: f64) -> Result<Constellation> {
    if m < 2 {
        return Err(invalid("m", format!("PSK needs at least 2 symbols, got {m}")));
    }
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(invalid("amplitude", format!("must be non-negative, got {amplitude}")));
    }
    let symbols = (0..m)
        .map(|j| {
            // Exact axis points keep BPSK/QPSK free of 1e-16 residues.
            if (4 * j) % m == 0 {
                axis_point(amplitude, 4 * j / m)
            } else {
                Complex64::from_polar(amplitude, 2.0 * PI * j as f64 / m as f64)
            }
        })
        .collect();
    let slots = (1..=m).map(|k| SymbolSlot { ring: 1, phase_slot: k }).collect();
    Ok(Constellation {
        modulation: Modulation::Psk,
        symbols,
        slots,
        rings: Vec::new(),
        element_count: None,
        source_amplitude: amplitude,
    })
}

fn axis_point(amplitude: f64, quadrant: usize) -> Complex64 {
    match quadrant {
        0 => Complex64::new(amplitude, 0.0),
        1 => Complex64::new(0.0, amplitude),
        2 => Complex64::new(-amplitude, 0.0),
        _ => Complex64::new(0.0, -amplitude),
    }
}
