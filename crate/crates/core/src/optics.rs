//! Probe modes, geometric channel efficiency and the displaced photon rate
//! seen by the single-photon detector.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Combined channel × detection efficiency of the central probe mode.
pub const CENTRAL_EFFICIENCY: f64 = 0.66;
/// Combined efficiency of every other probe mode.
pub const OTHER_EFFICIENCY: f64 = 0.46;

/// One spectral probe mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSpec {
    /// 1-based mode index; mode 1 is the central, high-efficiency mode.
    pub index: usize,
    /// Wavelength in meters, when known.
    pub wavelength: Option<f64>,
    /// Per-mode source amplitude `α₀ = √(n₀/S)`.
    pub source_amplitude: f64,
    /// Product of channel efficiency and detection efficiency, in (0, 1].
    pub efficiency: f64,
}

impl ModeSpec {
    /// Mean photon number launched into this mode.
    pub fn photon_number(&self) -> f64 {
        self.source_amplitude * self.source_amplitude
    }
}

/// Far-field geometry between source, surface and receiver. Lengths in
/// meters, areas in m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelGeometry {
    /// Effective lateral aperture of the reflecting surface.
    pub l_ris: f64,
    pub a_tx: f64,
    pub a_rx: f64,
    /// Source to surface distance.
    pub z0: f64,
    /// Surface to receiver distance.
    pub z1: f64,
}

impl ChannelGeometry {
    fn validate(&self) -> Result<()> {
        let fields = [
            ("l_ris", self.l_ris),
            ("a_tx", self.a_tx),
            ("a_rx", self.a_rx),
            ("z0", self.z0),
            ("z1", self.z1),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {value}")));
            }
        }
        Ok(())
    }
}

/// Beam-spreading efficiency before clamping:
/// `L⁴ · A_Tx · A_Rx / (λ⁴ · z0² · z1²)`.
pub fn geometric_efficiency_unclamped(geom: &ChannelGeometry, wavelength: f64) -> Result<f64> {
    geom.validate()?;
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(invalid("wavelength", format!("must be positive, got {wavelength}")));
    }
    let l2 = geom.l_ris * geom.l_ris;
    let lam2 = wavelength * wavelength;
    // Grouped as two captured-power fractions to stay in range for tiny λ.
    let capture = l2 * geom.a_tx / (lam2 * geom.z0 * geom.z0);
    let collect = l2 * geom.a_rx / (lam2 * geom.z1 * geom.z1);
    Ok(capture * collect)
}

/// Channel efficiency ξ for one wavelength, clamped to 1.
pub fn geometric_efficiency(geom: &ChannelGeometry, wavelength: f64) -> Result<f64> {
    Ok(geometric_efficiency_unclamped(geom, wavelength)?.min(1.0))
}

/// Default efficiency table: the central mode first, every other mode after.
pub fn default_efficiencies(modes: usize) -> Vec<f64> {
    (0..modes).map(|s| if s == 0 { CENTRAL_EFFICIENCY } else { OTHER_EFFICIENCY }).collect()
}

/// Splits a total probe intensity `n0` evenly over `modes` mutually incoherent
/// modes, taking per-mode efficiencies from `efficiencies`.
pub fn mode_set(modes: usize, n0: f64, efficiencies: &[f64]) -> Result<Vec<ModeSpec>> {
    if modes == 0 {
        return Err(invalid("modes", "need at least one mode"));
    }
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(invalid("n0", format!("total intensity must be positive, got {n0}")));
    }
    if efficiencies.len() < modes {
        return Err(invalid(
            "efficiencies",
            format!("table has {} entries for {modes} modes", efficiencies.len()),
        ));
    }
    let alpha0 = (n0 / modes as f64).sqrt();
    efficiencies[..modes]
        .iter()
        .enumerate()
        .map(|(s, &efficiency)| {
            check_efficiency(efficiency)?;
            Ok(ModeSpec { index: s + 1, wavelength: None, source_amplitude: alpha0, efficiency })
        })
        .collect()
}

pub(crate) fn check_efficiency(efficiency: f64) -> Result<()> {
    if efficiency > 0.0 && efficiency <= 1.0 {
        Ok(())
    } else {
        Err(invalid("efficiency", format!("must lie in (0, 1], got {efficiency}")))
    }
}

fn check_visibility(visibility: f64) -> Result<()> {
    if (0.0..=1.0).contains(&visibility) {
        Ok(())
    } else {
        Err(invalid("visibility", format!("must lie in [0, 1], got {visibility}")))
    }
}

fn check_duration(duration: f64) -> Result<()> {
    if duration > 0.0 && duration.is_finite() {
        Ok(())
    } else {
        Err(invalid("symbol_duration", format!("must be positive, got {duration}")))
    }
}

/// Interference bracket `|α|² + |β|² − 2V|α||β|cos(∠α − ∠β)`, floored at 0.
///
/// Uses `|α||β|cos(∠α − ∠β) = Re(α β*)`, so a matched LO at `V = 1` cancels
/// to exactly zero.
#[inline]
pub fn interference_bracket(alpha: Complex64, beta: Complex64, visibility: f64) -> f64 {
    let cross = alpha.re * beta.re + alpha.im * beta.im;
    (alpha.norm_sqr() + beta.norm_sqr() - 2.0 * visibility * cross).max(0.0)
}

/// Photon arrival rate (photons per second) at the detector after displacing
/// `alpha` by the LO `beta`, for a symbol of duration `duration` seconds.
pub fn displaced_rate(
    alpha: Complex64,
    beta: Complex64,
    visibility: f64,
    efficiency: f64,
    duration: f64,
) -> Result<f64> {
    check_visibility(visibility)?;
    check_efficiency(efficiency)?;
    check_duration(duration)?;
    Ok(efficiency / duration * interference_bracket(alpha, beta, visibility))
}

/// Efficiency-free LO mismatch `(S/T)·bracket`, comparable across mode counts.
pub fn deviation_metric(
    alpha: Complex64,
    beta: Complex64,
    visibility: f64,
    modes: usize,
    duration: f64,
) -> Result<f64> {
    check_visibility(visibility)?;
    check_duration(duration)?;
    if modes == 0 {
        return Err(Error::EmptyInput("modes"));
    }
    Ok(modes as f64 / duration * interference_bracket(alpha, beta, visibility))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference_geometry() -> ChannelGeometry {
        ChannelGeometry { l_ris: 0.1, a_tx: 1e-2, a_rx: 1e-2, z0: 1e5, z1: 1e5 }
    }

    #[test]
    fn geometric_efficiency_hand_value() {
        // L⁴ = 1e-4, A_Tx·A_Rx = 1e-4, λ⁴ = 1.55⁴·1e-24, z0²z1² = 1e20
        let expected = 1e-8 / (1.55f64.powi(4) * 1e-24 * 1e20);
        let xi = geometric_efficiency(&reference_geometry(), 1.55e-6).unwrap();
        assert!((xi - expected).abs() / expected < 1e-12);
        assert!((xi - 1.73e-5).abs() < 0.01e-5);
    }

    #[test]
    fn geometric_efficiency_scaling() {
        let g = reference_geometry();
        let base = geometric_efficiency_unclamped(&g, 1.55e-6).unwrap();
        let far = ChannelGeometry { z1: 2e5, ..g };
        let far_v = geometric_efficiency_unclamped(&far, 1.55e-6).unwrap();
        assert!((base / far_v - 4.0).abs() < 1e-12);
        let red = geometric_efficiency_unclamped(&g, 3.1e-6).unwrap();
        assert!((base / red - 16.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_efficiency_clamps_at_short_range() {
        let near = ChannelGeometry { z0: 1.0, z1: 1.0, ..reference_geometry() };
        assert_eq!(geometric_efficiency(&near, 1.55e-6).unwrap(), 1.0);
        assert!(geometric_efficiency_unclamped(&near, 1.55e-6).unwrap() > 1.0);
    }

    #[test]
    fn geometric_efficiency_rejects_non_positive() {
        let bad = ChannelGeometry { z0: 0.0, ..reference_geometry() };
        assert!(geometric_efficiency(&bad, 1.55e-6).is_err());
        assert!(geometric_efficiency(&reference_geometry(), -1.0).is_err());
    }

    #[test]
    fn mode_set_defaults() {
        let one = mode_set(1, 1.5, &default_efficiencies(1)).unwrap();
        assert_eq!(one.len(), 1);
        assert!((one[0].source_amplitude - 1.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(one[0].efficiency, 0.66);

        let three = mode_set(3, 1.5, &default_efficiencies(3)).unwrap();
        let effs: Vec<f64> = three.iter().map(|m| m.efficiency).collect();
        assert_eq!(effs, vec![0.66, 0.46, 0.46]);
        for m in &three {
            assert!((m.source_amplitude - 0.5f64.sqrt()).abs() < 1e-15);
        }
        assert_eq!(three[0].index, 1);
    }

    #[test]
    fn mode_set_errors() {
        assert!(mode_set(3, 1.5, &[0.66, 0.46]).is_err());
        assert!(mode_set(0, 1.5, &[0.66]).is_err());
        assert!(mode_set(1, 0.0, &[0.66]).is_err());
        assert!(mode_set(1, 1.0, &[1.5]).is_err());
    }

    #[test]
    fn displaced_rate_examples() {
        let a = c(1.3, -0.4);
        assert_eq!(displaced_rate(a, a, 1.0, 0.7, 3.0).unwrap(), 0.0);
        let undisplaced = displaced_rate(a, c(0.0, 0.0), 0.8, 0.7, 3.0).unwrap();
        assert!((undisplaced - 0.7 * a.norm_sqr() / 3.0).abs() < 1e-15);
        let r = displaced_rate(c(2.0, 0.0), c(1.0, 0.0), 0.9, 0.5, 2.0).unwrap();
        assert!((r - 0.35).abs() < 1e-12);
    }

    #[test]
    fn displaced_rate_rejects_domain() {
        let a = c(1.0, 0.0);
        assert!(displaced_rate(a, a, 1.2, 0.5, 1.0).is_err());
        assert!(displaced_rate(a, a, -0.1, 0.5, 1.0).is_err());
        assert!(displaced_rate(a, a, 0.9, 0.5, 0.0).is_err());
        assert!(displaced_rate(a, a, 0.9, 0.0, 1.0).is_err());
    }

    #[test]
    fn deviation_examples() {
        let a = c(0.3, 2.0);
        assert_eq!(deviation_metric(a, a, 1.0, 3, 1.0).unwrap(), 0.0);
        let one = deviation_metric(c(2.0, 0.0), c(1.0, 0.0), 0.9, 1, 2.0).unwrap();
        assert!((one - 0.7).abs() < 1e-12);
        let two = deviation_metric(c(2.0, 0.0), c(1.0, 0.0), 0.9, 2, 2.0).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn rate_is_non_negative(
            ar in -20.0..20.0f64, ai in -20.0..20.0f64,
            br in -20.0..20.0f64, bi in -20.0..20.0f64,
            v in 0.0..=1.0f64, eff in 0.01..=1.0f64, t in 1e-6..10.0f64,
        ) {
            prop_assert!(displaced_rate(c(ar, ai), c(br, bi), v, eff, t).unwrap() >= 0.0);
        }

        #[test]
        fn rate_is_global_phase_covariant(
            ar in -5.0..5.0f64, ai in -5.0..5.0f64,
            br in -5.0..5.0f64, bi in -5.0..5.0f64,
            v in 0.0..=1.0f64, phi in 0.0..std::f64::consts::TAU,
        ) {
            let rot = Complex64::from_polar(1.0, phi);
            let base = displaced_rate(c(ar, ai), c(br, bi), v, 0.5, 1.0).unwrap();
            let turned = displaced_rate(c(ar, ai) * rot, c(br, bi) * rot, v, 0.5, 1.0).unwrap();
            prop_assert!((base - turned).abs() <= 1e-12 * (1.0 + base));
        }

        #[test]
        fn efficiency_is_homothetic_in_range(scale in 0.01..100.0f64) {
            let g = reference_geometry();
            let base = geometric_efficiency_unclamped(&g, 1.55e-6).unwrap();
            let scaled = ChannelGeometry { z0: g.z0 * scale, z1: g.z1 * scale, ..g };
            let v = geometric_efficiency_unclamped(&scaled, 1.55e-6).unwrap();
            prop_assert!((v * scale.powi(4) - base).abs() <= 1e-12 * base);
        }

        #[test]
        fn energy_split_is_conserved(modes in 1usize..10, n0 in 0.01..100.0f64) {
            let set = mode_set(modes, n0, &default_efficiencies(modes)).unwrap();
            let total: f64 = set.iter().map(ModeSpec::photon_number).sum();
            prop_assert!((total - n0).abs() <= 1e-12 * n0);
        }
    }
}
