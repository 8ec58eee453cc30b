//! Static scene definition: tilted spherical-cap container, granular
//! material, sheet material, plus the initial fill-and-settle procedure.
//!
//! The container is the 2D cross-section of a spherical cap: a circular arc
//! of radius `D/2` spanning `rim_depth` of cap depth, thickened by a few
//! millimetres of wall material. The bowl is mounted tilted; with tilt `t`
//! the cap axis (centre toward the deepest wall point) is `(sin t, -cos t)`,
//! so the mouth faces up and to the left and powder pools near the
//! gravitationally lowest point of the arc.

use crate::engine::{Boundary, ContactTable, ParticleWorld, SimParams};
use crate::math::{closest_point_on_segment, vec2, Vec2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Wall material thickness of the bowl cross-section, mm.
pub const WALL_THICKNESS: f64 = 4.0;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("container: {0}")]
    BadContainer(String),
    #[error("granular spec: {0}")]
    BadGranular(String),
    #[error("sheet spec: {0}")]
    BadSheet(String),
    #[error("fill would need {needed} particles, above the {max} cap")]
    TooManyParticles { needed: usize, max: usize },
    #[error("settling did not converge within {0} steps")]
    SettleDidNotConverge(usize),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ContainerSpec {
    /// Sphere (and rim, for a hemisphere) inner diameter D, mm.
    pub inner_diameter: f64,
    /// Mounting tilt, radians.
    pub tilt_angle: f64,
    /// Cap depth along the axis, mm; D/2 for a hemisphere.
    pub rim_depth: f64,
    /// Sphere centre in world coordinates.
    pub world_pose: Vec2,
}

impl ContainerSpec {
    pub fn hemisphere(inner_diameter: f64, tilt_deg: f64) -> ContainerSpec {
        ContainerSpec {
            inner_diameter,
            tilt_angle: tilt_deg.to_radians(),
            rim_depth: inner_diameter / 2.0,
            world_pose: Vec2::ZERO,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let d = self.inner_diameter;
        if d <= 0.0 {
            return Err(SceneError::BadContainer(format!("D = {d} mm")));
        }
        if !(0.0..90f64.to_radians()).contains(&self.tilt_angle) {
            return Err(SceneError::BadContainer(format!(
                "tilt {} rad outside [0, pi/2)",
                self.tilt_angle
            )));
        }
        if self.rim_depth <= 0.0 || self.rim_depth > d / 2.0 {
            return Err(SceneError::BadContainer(format!(
                "rim depth {} mm outside (0, D/2]",
                self.rim_depth
            )));
        }
        Ok(())
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_diameter / 2.0
    }

    /// Unit vector from the sphere centre toward the deepest wall point.
    pub fn axis(&self) -> Vec2 {
        vec2(self.tilt_angle.sin(), -self.tilt_angle.cos())
    }

    /// cos of the cap's angular half-width around the axis.
    fn cos_cap(&self) -> f64 {
        (self.inner_radius() - self.rim_depth) / self.inner_radius()
    }

    /// Inner-surface rim endpoints. `.0` is the gravitationally lower one.
    pub fn rim_points(&self) -> (Vec2, Vec2) {
        let alpha = self.cos_cap().clamp(-1.0, 1.0).acos();
        let a = self.world_pose + self.axis().rotated(alpha) * self.inner_radius();
        let b = self.world_pose + self.axis().rotated(-alpha) * self.inner_radius();
        if a.y <= b.y {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn cap_segment(&self, side: f64) -> (Vec2, Vec2) {
        let alpha = self.cos_cap().clamp(-1.0, 1.0).acos();
        let dir = self.axis().rotated(side * alpha);
        (
            self.world_pose + dir * self.inner_radius(),
            self.world_pose + dir * (self.inner_radius() + WALL_THICKNESS),
        )
    }

    /// Signed distance to the wall solid and the gradient direction.
    ///
    /// Positive in free space (bowl interior and outside the shell), zero on
    /// the wall surface, negative inside the material. The returned unit
    /// vector is the distance gradient: in the bowl interior it points away
    /// from the wall, i.e. into the bowl.
    pub fn sdf(&self, p: Vec2) -> (f64, Vec2) {
        let rho = self.inner_radius();
        let u = p - self.world_pose;
        let r = u.norm();
        if r < 1e-9 {
            return (rho, -self.axis());
        }
        let uhat = u / r;
        if uhat.dot(self.axis()) >= self.cos_cap() - 1e-12 {
            if r <= rho {
                (rho - r, -uhat)
            } else if r >= rho + WALL_THICKNESS {
                (r - rho - WALL_THICKNESS, uhat)
            } else {
                // Inside the material: nearest exit through either face or an
                // end cap.
                let d_in = r - rho;
                let d_out = rho + WALL_THICKNESS - r;
                let (qa, da) = seg_closest(p, self.cap_segment(1.0));
                let (qb, db) = seg_closest(p, self.cap_segment(-1.0));
                let (qc, dc) = if da <= db { (qa, da) } else { (qb, db) };
                if d_in <= d_out && d_in <= dc {
                    (-d_in, -uhat)
                } else if d_out <= dc {
                    (-d_out, uhat)
                } else {
                    (-dc, (qc - p).normalized())
                }
            }
        } else {
            let (qa, da) = seg_closest(p, self.cap_segment(1.0));
            let (qb, db) = seg_closest(p, self.cap_segment(-1.0));
            let (q, d) = if da <= db { (qa, da) } else { (qb, db) };
            if d < 1e-12 {
                (0.0, -uhat)
            } else {
                (d, (p - q) / d)
            }
        }
    }
}

fn seg_closest(p: Vec2, (a, b): (Vec2, Vec2)) -> (Vec2, f64) {
    let q = closest_point_on_segment(p, a, b);
    (q, p.distance(q))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GranularSpec {
    pub material_name: String,
    /// Mean particle radius, mm (simulation scale, not true granulometry).
    pub particle_radius_mean: f64,
    /// Relative half-spread of the radius distribution.
    pub particle_radius_spread: f64,
    /// Effective solid density for grain mass, g/mm^3.
    pub particle_density: f64,
    pub friction_coefficient: f64,
    /// Normal-contact damping ratio in [0, 1]; 1 is critical.
    pub restitution_damping: f64,
    pub total_mass: f64,
}

/// Grain mass from solid density and radius.
fn sphere_mass(density: f64, r: f64) -> f64 {
    density * (4.0 / 3.0) * std::f64::consts::PI * r.powi(3)
}

impl GranularSpec {
    /// Named material presets. Radii keep the real grain-size ordering,
    /// densities are chosen for desk-scale particle counts.
    pub fn preset(name: &str) -> Option<GranularSpec> {
        let (r, spread, density, mu, beta) = match name {
            "flour" => (0.55, 0.18, 0.0433, 0.62, 0.90),
            "coffee" => (1.15, 0.20, 0.0140, 0.55, 0.82),
            "rice" => (2.90, 0.10, 0.00343, 0.45, 0.72),
            _ => return None,
        };
        Some(GranularSpec {
            material_name: name.to_string(),
            particle_radius_mean: r,
            particle_radius_spread: spread,
            particle_density: density,
            friction_coefficient: mu,
            restitution_damping: beta,
            total_mass: 10.0,
        })
    }

    pub const PRESET_NAMES: [&'static str; 3] = ["flour", "coffee", "rice"];

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.particle_radius_mean <= 0.0 {
            return Err(SceneError::BadGranular("radius mean must be > 0".into()));
        }
        if !(0.0..0.5).contains(&self.particle_radius_spread) {
            return Err(SceneError::BadGranular("spread outside [0, 0.5)".into()));
        }
        if self.friction_coefficient < 0.0 {
            return Err(SceneError::BadGranular("negative friction".into()));
        }
        // Exactly zero is a legal degenerate fill (empty container).
        if self.total_mass < 0.0 {
            return Err(SceneError::BadGranular("total mass must be >= 0".into()));
        }
        if self.particle_density <= 0.0 {
            return Err(SceneError::BadGranular("density must be > 0".into()));
        }
        Ok(())
    }

    pub fn max_radius(&self) -> f64 {
        self.particle_radius_mean * (1.0 + self.particle_radius_spread)
    }

    pub fn mean_particle_mass(&self) -> f64 {
        sphere_mass(self.particle_density, self.particle_radius_mean)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SheetSpec {
    pub material_name: String,
    /// Sheet thickness, mm.
    pub thickness: f64,
    /// Elastic modulus in uN/mm^2 (1 MPa = 1e6 uN/mm^2... n.b. 1 N/mm^2 =
    /// 1e6 uN/mm^2).
    pub elastic_modulus: f64,
    /// Bending stiffness per unit width, E t^3 / 12, uN*mm^2/mm.
    pub base_bending_stiffness_ei: f64,
    /// Metal / ladle mode: bending solver still runs, EI gets a rigid floor.
    pub rigid: bool,
    pub friction_coefficient: f64,
    /// Scale on elastic bottom-edge widening used by the coverage model;
    /// 1 for the compliant PP sheet, near zero for metal.
    pub widening_scale: f64,
}

impl SheetSpec {
    pub fn new(name: &str, thickness: f64, elastic_modulus: f64, rigid: bool, mu: f64) -> SheetSpec {
        SheetSpec {
            material_name: name.to_string(),
            thickness,
            elastic_modulus,
            base_bending_stiffness_ei: elastic_modulus * thickness.powi(3) / 12.0,
            rigid,
            friction_coefficient: mu,
            widening_scale: if rigid { 0.05 } else { 1.0 },
        }
    }

    /// Named end-effector material presets.
    ///
    /// PP: 0.2 mm at 750 MPa. SUS304: 0.1 mm at 193 GPa, which is ~32x the
    /// PP bending stiffness from material constants alone; the rigid floor in
    /// sheet construction lifts it past 100x. Silicone ladle: rubber modulus,
    /// handled mostly through its rigid-arc profile.
    pub fn preset(name: &str) -> Option<SheetSpec> {
        match name {
            "pp_sheet" => Some(SheetSpec::new("pp_sheet", 0.2, 7.5e8, false, 0.25)),
            "sus304_sheet" => {
                let mut s = SheetSpec::new("sus304_sheet", 0.1, 1.93e11, true, 0.40);
                s.widening_scale = 0.05;
                Some(s)
            }
            "silicone_ladle" => {
                let mut s = SheetSpec::new("silicone_ladle", 1.5, 5.0e6, true, 0.45);
                s.widening_scale = 0.25;
                Some(s)
            }
            _ => None,
        }
    }

    pub const PRESET_NAMES: [&'static str; 3] = ["pp_sheet", "sus304_sheet", "silicone_ladle"];

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.thickness <= 0.0 || self.base_bending_stiffness_ei <= 0.0 {
            return Err(SceneError::BadSheet(
                "thickness and bending stiffness must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Deterministically deposit `granular.total_mass` of particles into the bowl
/// and step until they settle flat.
///
/// Particle radii and deposit jitter come from a counter-seeded stream, so the
/// same seed always produces bit-identical worlds. Deposit rows start above
/// the rim and fall in under gravity with a strong air-drag term (powder falls
/// slowly), then a brief horizontal shake flattens the pile, then free
/// settling runs until the fastest particle drops below the settle threshold.
pub fn fill_and_settle(
    container: &ContainerSpec,
    granular: &GranularSpec,
    seed: u64,
) -> Result<ParticleWorld, SceneError> {
    fill_and_settle_with(container, granular, seed, &SimParams::default())
}

pub fn fill_and_settle_with(
    container: &ContainerSpec,
    granular: &GranularSpec,
    seed: u64,
    params: &SimParams,
) -> Result<ParticleWorld, SceneError> {
    container.validate()?;
    granular.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Draw radii until the mass budget is met to within one particle.
    let mut radii: Vec<f64> = Vec::new();
    let mut masses: Vec<f64> = Vec::new();
    let mut total = 0.0;
    while total < granular.total_mass {
        let u: f64 = rng.gen_range(-1.0..1.0);
        let r = granular.particle_radius_mean * (1.0 + granular.particle_radius_spread * u);
        let m = sphere_mass(granular.particle_density, r);
        radii.push(r);
        masses.push(m);
        total += m;
        if radii.len() > params.max_particles {
            return Err(SceneError::TooManyParticles {
                needed: radii.len(),
                max: params.max_particles,
            });
        }
    }
    // Drop the last one if that lands closer to the target.
    if radii.len() > 1 {
        let m_last = *masses.last().unwrap();
        if total - granular.total_mass > granular.total_mass - (total - m_last) {
            radii.pop();
            masses.pop();
        }
    }

    // Deposit rows above the rim, spanning the mouth horizontally.
    let (lo, hi) = container.rim_points();
    let r_max = granular.max_radius();
    let spacing = 2.3 * r_max;
    // Inset well clear of the rim edges so no deposit bounces over the lip.
    let x_min = lo.x.min(hi.x) + 4.0 * r_max;
    let x_max = lo.x.max(hi.x) - 4.0 * r_max;
    let y_start = lo.y.max(hi.y) + 2.0 * r_max;
    let per_row = (((x_max - x_min) / spacing).floor() as usize).max(1);

    let mut world = ParticleWorld::new(params.clone(), ContactTable::for_granular(granular));
    world.boundaries.push(Boundary::Bowl(*container));
    world.rng_seed = seed;

    for (i, (&r, &m)) in radii.iter().zip(masses.iter()).enumerate() {
        let row = i / per_row;
        let col = i % per_row;
        let jitter: f64 = rng.gen_range(-0.25..0.25);
        let x = x_min + (col as f64 + 0.5 + jitter) * ((x_max - x_min) / per_row as f64);
        let y = y_start + row as f64 * spacing;
        world.push_particle(vec2(x.min(x_max).max(x_min), y), Vec2::ZERO, r, m);
    }
    world.rebuild_grid();

    // Phase 1: drag-limited rain-in.
    world.global_drag = 60.0;
    let fill_steps = (0.45 / world.params.dt).round() as usize;
    for step in 0..fill_steps {
        world.step().map_err(|e| SceneError::BadGranular(e.to_string()))?;
        if step % 400 == 0 && step > fill_steps / 2 && world.max_speed() < 30.0 {
            break;
        }
    }

    // Containment lid over the mouth for the remaining phases: anything the
    // shake sloshes past the mouth plane is pushed back in with its outward
    // velocity killed. The plane projection alone can walk a grain around a
    // rim tip to the outside of the wall, where it falls forever (there is
    // no floor here) and the settle check never goes quiet, so grains far
    // past the wall shell get projected back too. Removed with the other
    // fill-time aids at the end.
    let axis = container.axis();
    let center = container.world_pose;
    let shell = container.inner_radius();
    let lid = move |world: &mut ParticleWorld| {
        for i in 0..world.pos.len() {
            let s = (world.pos[i] - center).dot(axis);
            let need = world.radius[i] - s;
            if need > 0.0 {
                world.pos[i] += axis * need;
                let vn = world.vel[i].dot(axis);
                if vn < 0.0 {
                    world.vel[i] -= axis * vn;
                }
            }
            let q = world.pos[i] - center;
            let dist = q.norm();
            let lim = shell - world.radius[i];
            // Half a radius of slack: far beyond any legitimate spring
            // penetration, so the wall contact physics is untouched and only
            // genuine breakouts (rim-lip hops) get projected back.
            if dist > lim + 0.5 * world.radius[i] {
                let n = q / dist;
                world.pos[i] = center + n * lim;
                let vr = world.vel[i].dot(n);
                if vr > 0.0 {
                    world.vel[i] -= n * vr;
                }
            }
        }
    };

    // Phase 2: a brief horizontal shake levels the rained-in pile.
    let shake_steps = (0.24 / world.params.dt).round() as usize;
    let omega = 2.0 * std::f64::consts::PI * 25.0;
    for step in 0..shake_steps {
        let t = step as f64 * world.params.dt;
        world.extra_accel = vec2(0.35 * crate::GRAVITY * (omega * t).sin(), 0.0);
        world.step().map_err(|e| SceneError::BadGranular(e.to_string()))?;
        lid(&mut world);
    }
    world.extra_accel = Vec2::ZERO;

    // Phase 3: settle until quiet.
    let max_settle = (params.max_settle_s / world.params.dt).round() as usize;
    let mut settled = false;
    for step in 0..max_settle {
        world.step().map_err(|e| SceneError::BadGranular(e.to_string()))?;
        lid(&mut world);
        if step % 200 == 199 && world.max_speed() < params.settle_threshold {
            settled = true;
            break;
        }
    }
    if !settled && world.max_speed() >= params.settle_threshold {
        return Err(SceneError::SettleDidNotConverge(
            fill_steps + shake_steps + max_settle,
        ));
    }
    world.global_drag = 0.0;
    // Fill impacts are not part of the scooping run proper; reset the
    // penetration monitor so trials report scooping-phase penetration.
    world.max_penetration_ratio = 0.0;
    Ok(world)
}

/// Standard deviation of binned free-surface heights; a flatness measure.
/// The outer 15% of the x-extent is ignored on each side, where the top of
/// the column is the wall shoulder rather than the free surface.
pub fn surface_roughness(world: &ParticleWorld, bins: usize) -> f64 {
    if world.pos.is_empty() {
        return 0.0;
    }
    let x_lo = world.pos.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let x_hi = world
        .pos
        .iter()
        .map(|p| p.x)
        .fold(f64::NEG_INFINITY, f64::max);
    let span = x_hi - x_lo;
    if span < 1e-9 {
        return 0.0;
    }
    let lo = x_lo + 0.15 * span;
    let hi = x_hi - 0.15 * span;
    let mut top = vec![f64::NEG_INFINITY; bins];
    for p in &world.pos {
        if p.x < lo || p.x > hi {
            continue;
        }
        let b = (((p.x - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1);
        top[b] = top[b].max(p.y);
    }
    let tops: Vec<f64> = top.into_iter().filter(|t| t.is_finite()).collect();
    if tops.is_empty() {
        return 0.0;
    }
    let mean = tops.iter().sum::<f64>() / tops.len() as f64;
    (tops.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / tops.len() as f64).sqrt()
}

/// Powder pool depth: maximum radial fill thickness against the bowl wall.
pub fn pool_depth(world: &ParticleWorld, container: &ContainerSpec) -> f64 {
    world
        .pos
        .iter()
        .zip(&world.radius)
        .map(|(p, r)| container.inner_radius() - p.distance(container.world_pose) + r)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bowl67() -> ContainerSpec {
        ContainerSpec::hemisphere(67.0, 45.0)
    }

    #[test]
    fn sdf_center_and_surface() {
        let c = ContainerSpec::hemisphere(110.0, 45.0);
        let (d, _) = c.sdf(c.world_pose);
        assert!((d - 55.0).abs() < 1e-12);

        // Point on the inner surface along the axis.
        let p = c.world_pose + c.axis() * 55.0;
        let (d, n) = c.sdf(p);
        assert!(d.abs() < 1e-9);
        assert!((n + c.axis()).norm() < 1e-9, "normal points into the bowl");
    }

    #[test]
    fn sdf_outside_shell_and_out_of_sector() {
        let c = bowl67();
        // Straight below the centre, beyond the shell.
        let p = c.world_pose + c.axis() * (33.5 + WALL_THICKNESS + 10.0);
        let (d, n) = c.sdf(p);
        assert!((d - 10.0).abs() < 1e-9);
        assert!((n - c.axis()).norm() < 1e-9);

        // Above the mouth, out of the cap sector: distance to the nearer rim.
        let (lo, _hi) = c.rim_points();
        let p = lo + vec2(-5.0, 5.0);
        let (d, _) = c.sdf(p);
        assert!(d > 0.0 && d <= vec2(-5.0, 5.0).norm() + 1e-9);
    }

    #[test]
    fn sdf_gradient_matches_finite_differences() {
        let c = ContainerSpec::hemisphere(93.0, 45.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-4;
        let mut checked = 0;
        while checked < 100 {
            let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            // Stay 2 mm off the centre: the field is radial there and the
            // second-order FD term blows up as h^2/r^2.
            let rad: f64 = rng.gen_range(2.0..40.0);
            let p = c.world_pose + Vec2::from_angle(ang) * rad;
            // Keep away from the sector edge where the gradient kinks.
            let u = (p - c.world_pose).normalized();
            if u.dot(c.axis()) < 0.12 {
                continue;
            }
            let (_, n) = c.sdf(p);
            let gx = (c.sdf(p + vec2(h, 0.0)).0 - c.sdf(p - vec2(h, 0.0)).0) / (2.0 * h);
            let gy = (c.sdf(p + vec2(0.0, h)).0 - c.sdf(p - vec2(0.0, h)).0) / (2.0 * h);
            assert!(
                (n - vec2(gx, gy)).norm() < 1e-6,
                "at {p:?}: normal {n:?} vs fd ({gx}, {gy})"
            );
            checked += 1;
        }
    }

    proptest! {
        #[test]
        fn sdf_is_lipschitz(ax in -80.0..80.0f64, ay in -80.0..80.0f64,
                            bx in -80.0..80.0f64, by in -80.0..80.0f64) {
            let c = bowl67();
            let a = vec2(ax, ay);
            let b = vec2(bx, by);
            let da = c.sdf(a).0;
            let db = c.sdf(b).0;
            prop_assert!((da - db).abs() <= a.distance(b) + 1e-9);
        }
    }

    #[test]
    fn presets_resolve() {
        for name in GranularSpec::PRESET_NAMES {
            let g = GranularSpec::preset(name).unwrap();
            g.validate().unwrap();
        }
        for name in SheetSpec::PRESET_NAMES {
            let s = SheetSpec::preset(name).unwrap();
            s.validate().unwrap();
        }
        assert!(GranularSpec::preset("sand").is_none());
        // SUS304 vs PP stiffness ratio from material constants alone.
        let pp = SheetSpec::preset("pp_sheet").unwrap();
        let sus = SheetSpec::preset("sus304_sheet").unwrap();
        let ratio = sus.base_bending_stiffness_ei / pp.base_bending_stiffness_ei;
        assert!((ratio - 32.2).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn fill_settles_flat_inside_bowl() {
        let c = bowl67();
        let g = GranularSpec::preset("flour").unwrap();
        let world = fill_and_settle(&c, &g, 7).unwrap();

        let total: f64 = world.mass.iter().sum();
        assert!((total - g.total_mass).abs() <= g.mean_particle_mass() * 1.5);

        for (i, p) in world.pos.iter().enumerate() {
            let (d, _) = c.sdf(*p);
            assert!(
                d > 0.0 && p.distance(c.world_pose) < c.inner_radius(),
                "particle {i} at {p:?} escaped (sdf {d})"
            );
        }
        let rough = surface_roughness(&world, 12);
        assert!(
            rough < 2.5 * g.particle_radius_mean,
            "surface roughness {rough}"
        );
        assert!(pool_depth(&world, &c) > 3.0 * g.particle_radius_mean);
    }

    #[test]
    fn fill_is_deterministic() {
        let c = bowl67();
        let g = GranularSpec::preset("flour").unwrap();
        let a = fill_and_settle(&c, &g, 7).unwrap();
        let b = fill_and_settle(&c, &g, 7).unwrap();
        assert_eq!(a.pos.len(), b.pos.len());
        for i in 0..a.pos.len() {
            assert_eq!(a.pos[i].x.to_bits(), b.pos[i].x.to_bits());
            assert_eq!(a.pos[i].y.to_bits(), b.pos[i].y.to_bits());
            assert_eq!(a.vel[i].x.to_bits(), b.vel[i].x.to_bits());
            assert_eq!(a.vel[i].y.to_bits(), b.vel[i].y.to_bits());
        }
    }

    #[test]
    fn single_particle_rests_with_weight_on_floor() {
        // One particle on a flat floor: settled spring compression carries
        // exactly the weight.
        let g = GranularSpec::preset("rice").unwrap();
        let mut world = ParticleWorld::new(SimParams::default(), ContactTable::for_granular(&g));
        world.boundaries.push(Boundary::half_plane(
            vec2(0.0, 0.0),
            vec2(0.0, 1.0),
            g.friction_coefficient,
        ));
        world.push_particle(vec2(0.0, 3.4), Vec2::ZERO, 3.0, 0.1);
        world.rebuild_grid();
        for _ in 0..40_000 {
            world.step().unwrap();
        }
        assert!(world.max_speed() < 0.5, "still moving: {}", world.max_speed());
        let pen = 3.0 - world.pos[0].y;
        let f_n = world.contacts.boundary_stiffness * pen;
        let weight = 0.1 * crate::GRAVITY;
        assert!(
            (f_n - weight).abs() / weight < 0.01,
            "contact force {f_n} vs weight {weight}"
        );
    }
}
