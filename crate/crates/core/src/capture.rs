//! Out-of-plane coverage correction.
//!
//! The simulation itself runs in the vertical plane through the bowl center,
//! so it knows nothing about how much of the bowl's width the blade edge
//! spans. This module supplies that as an analytic factor: the pressed edge
//! widens elliptically, the bowl presents a chord-width at sweep depth, and
//! the covered fraction of that chord scales the in-plane outcome. Material
//! in the uncovered slice never leaves the bowl.

use serde::{Deserialize, Serialize};

use crate::cone::ConeConfig;
use crate::scene::ContainerSpec;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CoverageModel {
    /// Extra bottom-edge width per unit press depth (elliptical flattening
    /// of the bottom circle under contact).
    pub widening_gain: f64,
    /// Shaping exponent applied to the chord-width ratio in the undersized
    /// regime. Small values make modest width deficits cheap, which matches
    /// how forgiving a bowl is to a slightly narrow edge.
    pub coverage_exponent: f64,
    /// Penalty exponent for edges wider than the bowl: coverage is scaled by
    /// (D/d)^oversize_exponent once d exceeds D. An edge forced in by
    /// deformation only meets the wall over a partial arc.
    pub oversize_exponent: f64,
}

impl Default for CoverageModel {
    fn default() -> Self {
        Self {
            widening_gain: 2.0,
            coverage_exponent: 0.10,
            oversize_exponent: 1.0,
        }
    }
}

/// Width of the bottom edge once pressed against the bowl.
///
/// Grows linearly with press depth from the undeformed diameter, but the
/// edge is a fixed loop of sheet material: laid as flat as it can be it
/// spans at most half its own circumference, and never more than the
/// flattened sheet's diameter.
pub fn effective_width(cone: &ConeConfig, press_depth: f64, model: &CoverageModel) -> f64 {
    debug_assert!(press_depth >= 0.0);
    let d = cone.bottom_diameter;
    let widened = d + model.widening_gain * press_depth;
    let cap = (0.5 * std::f64::consts::PI * d).min(2.0 * cone.sheet_radius);
    widened.min(cap)
}

/// Chord width the bowl presents at the given depth below its rim plane.
pub fn capture_width(container: &ContainerSpec, sweep_depth: f64) -> f64 {
    let r = 0.5 * container.inner_diameter;
    let inset = r - sweep_depth;
    2.0 * (r * r - inset * inset).max(0.0).sqrt()
}

/// Fraction of the bowl's cross-width the blade edge effectively serves.
///
/// `bottom_diameter` is the undeformed edge diameter; it decides whether the
/// oversized-arc penalty applies, independently of how much the press has
/// widened the working width.
pub fn lateral_coverage(
    effective_width: f64,
    bottom_diameter: f64,
    container: &ContainerSpec,
    sweep_depth: f64,
    model: &CoverageModel,
) -> f64 {
    let wc = capture_width(container, sweep_depth);
    if wc <= 0.0 {
        return 0.0;
    }
    let ratio = (effective_width / wc).clamp(0.0, 1.0);
    let mut coverage = ratio.powf(model.coverage_exponent);
    let over = bottom_diameter / container.inner_diameter;
    if over > 1.0 {
        coverage *= over.powf(-model.oversize_exponent);
    }
    coverage.clamp(0.0, 1.0)
}

/// Combine the in-plane retained fraction with lateral coverage.
pub fn scoop_fraction(in_plane_retained: f64, coverage: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&in_plane_retained));
    debug_assert!((0.0..=1.0).contains(&coverage));
    in_plane_retained * coverage
}

/// Mass split of one trial, as fractions of the initial fill.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ScoopOutcome {
    pub delivered: f64,
    pub residue: f64,
    pub spilled: f64,
    pub carried_end: f64,
}

/// Scale an in-plane outcome by lateral coverage. The uncovered slice of
/// the bowl never interacts with the blade, so it stays as residue; all
/// other outcomes happen only to the covered slice. Fractions that summed
/// to one still do.
pub fn apply_coverage(in_plane: ScoopOutcome, coverage: f64) -> ScoopOutcome {
    ScoopOutcome {
        delivered: in_plane.delivered * coverage,
        residue: in_plane.residue * coverage + (1.0 - coverage),
        spilled: in_plane.spilled * coverage,
        carried_end: in_plane.carried_end * coverage,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model() -> CoverageModel {
        CoverageModel::default()
    }

    fn cone(d: f64) -> ConeConfig {
        ConeConfig::from_bottom_diameter(50.0, d).unwrap()
    }

    #[test]
    fn zero_press_keeps_the_circular_diameter() {
        for d in [70.71, 80.0, 90.0, 100.0] {
            assert!((effective_width(&cone(d), 0.0, &model()) - d).abs() < 1e-12);
        }
    }

    #[test]
    fn two_mm_press_widens_eighty_to_eighty_four() {
        let w = effective_width(&cone(80.0), 2.0, &model());
        assert!((w - 84.0).abs() < 1e-12);
    }

    #[test]
    fn width_saturates_at_the_material_bound() {
        let c = cone(90.0);
        let w = effective_width(&c, 100.0, &model());
        assert!((w - 100.0).abs() < 1e-12, "cap should be 2R, got {w}");
    }

    #[test]
    fn full_chord_at_rim_depth_of_a_hemisphere() {
        let c = ContainerSpec::hemisphere(110.0, 45.0);
        assert!((capture_width(&c, c.rim_depth) - 110.0).abs() < 1e-9);
        // Shallower sweeps see a narrower chord.
        assert!(capture_width(&c, 10.0) < 70.0);
        let wc = capture_width(&c, 10.0);
        assert!((wc - 2.0 * (55.0f64.powi(2) - 45.0f64.powi(2)).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn coverage_hits_the_spec_points() {
        let c = ContainerSpec::hemisphere(100.0, 45.0);
        let wc = capture_width(&c, c.rim_depth);
        let m = model();
        assert!((lateral_coverage(wc, 80.0, &c, c.rim_depth, &m) - 1.0).abs() < 1e-12);
        assert_eq!(lateral_coverage(0.0, 80.0, &c, c.rim_depth, &m), 0.0);
        let unit = CoverageModel {
            coverage_exponent: 1.0,
            ..m
        };
        let half = lateral_coverage(wc / 2.0, 80.0, &c, c.rim_depth, &unit);
        assert!((half - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oversized_edges_pay_an_arc_penalty() {
        let c = ContainerSpec::hemisphere(67.0, 45.0);
        let m = model();
        let matched = lateral_coverage(75.0, 70.71, &c, c.rim_depth, &m);
        let big = lateral_coverage(85.0, 80.0, &c, c.rim_depth, &m);
        let bigger = lateral_coverage(95.0, 90.0, &c, c.rim_depth, &m);
        assert!(matched < 1.0);
        assert!(big < matched);
        assert!(bigger < big);
        assert!((matched - (67.0 / 70.71f64).powf(m.oversize_exponent)).abs() < 1e-12);
    }

    #[test]
    fn product_rule_and_absorbing_zero() {
        assert_eq!(scoop_fraction(1.0, 1.0), 1.0);
        assert!((scoop_fraction(0.98, 0.97) - 0.9506).abs() < 1e-12);
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(scoop_fraction(x, 0.0), 0.0);
        }
    }

    #[test]
    fn coverage_scaling_preserves_total_mass() {
        let in_plane = ScoopOutcome {
            delivered: 0.82,
            residue: 0.11,
            spilled: 0.04,
            carried_end: 0.03,
        };
        for cov in [0.0, 0.37, 0.9, 1.0] {
            let out = apply_coverage(in_plane, cov);
            let sum = out.delivered + out.residue + out.spilled + out.carried_end;
            assert!((sum - 1.0).abs() < 1e-12, "cov {cov}: sum {sum}");
            assert!(out.delivered <= in_plane.delivered + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn coverage_always_a_fraction(
            w in 0.0f64..200.0,
            d in 40.0f64..100.0,
            bowl in 50.0f64..150.0,
            depth_frac in 0.05f64..1.0,
            gamma in 0.01f64..2.0,
            p in 0.1f64..3.0,
        ) {
            let c = ContainerSpec::hemisphere(bowl, 45.0);
            let m = CoverageModel { widening_gain: 2.0, coverage_exponent: gamma, oversize_exponent: p };
            let cov = lateral_coverage(w, d, &c, depth_frac * c.rim_depth, &m);
            prop_assert!((0.0..=1.0).contains(&cov));
        }

        #[test]
        fn width_monotone_in_press(d in 60.0f64..100.0, p1 in 0.0f64..5.0, p2 in 0.0f64..5.0) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let c = cone(d);
            let m = model();
            prop_assert!(effective_width(&c, hi, &m) >= effective_width(&c, lo, &m) - 1e-12);
        }

        #[test]
        fn full_coverage_needs_full_width(
            w_frac in 0.05f64..0.999,
            bowl in 50.0f64..150.0,
        ) {
            let c = ContainerSpec::hemisphere(bowl, 45.0);
            let wc = capture_width(&c, c.rim_depth);
            let cov = lateral_coverage(w_frac * wc, 0.8 * bowl, &c, c.rim_depth, &model());
            prop_assert!(cov < 1.0);
        }
    }
}
