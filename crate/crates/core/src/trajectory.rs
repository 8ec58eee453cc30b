//! Scoop motion planning.
//!
//! A plan is a pure function of the container, the effector geometry and the
//! motion parameters: a list of timestamped base poses (position of the
//! driven blade end plus blade direction) passed through linear/shortest-arc
//! interpolation. Simulation feedback never alters a plan.
//!
//! The sweep keeps the blade tip on the container wall at a fixed attack
//! angle, entering near the lower rim, passing the bottom and climbing the
//! far wall; the attack angle steepens beyond the 45 degree mount when the
//! blade chord would not otherwise fit the bowl. Oversized effectors that
//! cannot ride tip-first fall back to a pestle-style sweep (pivoting through
//! the mouth) when the geometry allows it at all.

use crate::cone::ConeConfig;
use crate::math::{vec2, wrap_angle, Pose2, Vec2};
use crate::scene::ContainerSpec;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error(
        "effector (chord {chord:.1} mm) cannot ride the wall of a {diameter:.0} mm container \
         without fouling the mouth frame"
    )]
    FrameCollision { chord: f64, diameter: f64 },
    #[error("time {t:.4} s outside plan range [0, {duration:.4}] s")]
    TimeOutOfRange { t: f64, duration: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Approach,
    Insert,
    Sweep,
    Lift,
    Carry,
    Dump,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Approach => "approach",
            Phase::Insert => "insert",
            Phase::Sweep => "sweep",
            Phase::Lift => "lift",
            Phase::Carry => "carry",
            Phase::Dump => "dump",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Waypoint {
    pub t: f64,
    pub pose: Pose2,
    pub phase: Phase,
}

/// Effector section geometry as seen by the planner.
#[derive(Clone, Debug)]
pub enum EffectorShape {
    Cone(ConeConfig),
    /// Undeformed ladle section in its base frame (node 0 at the origin).
    Ladle { shape: Vec<Vec2> },
}

impl EffectorShape {
    /// Chord from the base to the working tip: (length, angle of the chord
    /// in the effector's base frame).
    pub fn chord(&self) -> (f64, f64) {
        match self {
            EffectorShape::Cone(c) => (c.sheet_radius, 0.0),
            EffectorShape::Ladle { shape } => {
                let tip = *shape.last().unwrap();
                (tip.norm(), tip.angle())
            }
        }
    }

    /// Extra wall clearance (mm) so no part of the shape between base and
    /// tip crosses a wall of curvature radius `rho` when the tip rides it
    /// at the given attack angle (radians off the tangent). Puts the shape
    /// in its riding pose and measures how far any point stands proud of
    /// the tip's own radius.
    fn belly_clearance(&self, rho: f64, attack: f64) -> f64 {
        match self {
            EffectorShape::Cone(_) => 0.0,
            EffectorShape::Ladle { shape } => {
                let tip = *shape.last().unwrap();
                let (_, chord_offset) = self.chord();
                let chord_world = 2.0 * std::f64::consts::PI - attack;
                let pose_angle = chord_world - chord_offset;
                let center_off = crate::math::vec2(0.0, rho); // tip at the bowl bottom
                let mut need = 0.0f64;
                for p in shape {
                    let v = (*p - tip).rotated(pose_angle);
                    need = need.max((center_off - v).norm() - rho);
                }
                need
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryParams {
    /// Wall press depth for the undeformed tip, mm. Positive presses into
    /// the wall (flexible blades absorb it); use <= 0 for rigid effectors.
    pub press_depth: f64,
    /// Tip speed along the wall, mm/s.
    pub sweep_speed: f64,
    /// Transit speed outside the bowl, mm/s.
    pub approach_speed: f64,
    /// Transit speed while loaded, mm/s. Kept below `approach_speed` so the
    /// heap on the blade stays put.
    pub carry_speed: f64,
    /// Blade mount attack angle, degrees from the wall tangent.
    pub mount_attack_deg: f64,
    /// Blade elevation while carrying, degrees.
    pub carry_attitude_deg: f64,
    /// Final blade elevation over the plate, degrees (negative = tip down).
    pub dump_angle_deg: f64,
    pub dump_duration_s: f64,
    pub wiggle_amp_deg: f64,
    pub wiggle_freq_hz: f64,
    /// Centre of the plate surface and its height.
    pub plate_center: Vec2,
    pub plate_top: f64,
}

impl Default for TrajectoryParams {
    fn default() -> TrajectoryParams {
        TrajectoryParams {
            press_depth: 0.8,
            sweep_speed: 85.0,
            approach_speed: 160.0,
            carry_speed: 110.0,
            mount_attack_deg: 45.0,
            carry_attitude_deg: 15.0,
            dump_angle_deg: -65.0,
            dump_duration_s: 1.1,
            wiggle_amp_deg: 2.0,
            wiggle_freq_hz: 8.0,
            plate_center: vec2(105.0, 0.0),
            plate_top: 0.0,
        }
    }
}

/// Kinematic guard wall: the cone's second slant, rigid for planning.
#[derive(Clone, Copy, Debug)]
pub struct GuardPlan {
    /// Angle from the blade direction to the guard direction, radians (the
    /// cone vertex angle).
    pub angle_offset: f64,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct TrajectoryPlan {
    pub waypoints: Vec<Waypoint>,
    /// Chord length base-to-tip, mm.
    pub blade_chord: f64,
    /// Angle of the chord in the effector base frame (nonzero for curved
    /// sections), radians.
    pub chord_offset: f64,
    /// Attack angle actually used, radians.
    pub attack: f64,
    pub press_depth: f64,
    pub guard: Option<GuardPlan>,
    /// True when the effector pivots through the mouth instead of riding
    /// tip-first.
    pub pestle: bool,
}

impl TrajectoryPlan {
    pub fn duration(&self) -> f64 {
        self.waypoints.last().map(|w| w.t).unwrap_or(0.0)
    }

    /// Interpolated base pose at time `t`.
    pub fn pose_at(&self, t: f64) -> Result<Pose2, TrajectoryError> {
        let dur = self.duration();
        if t < -1e-9 || t > dur + 1e-9 {
            return Err(TrajectoryError::TimeOutOfRange { t, duration: dur });
        }
        let t = t.clamp(0.0, dur);
        let idx = self.waypoints.partition_point(|w| w.t <= t);
        if idx == 0 {
            return Ok(self.waypoints[0].pose);
        }
        if idx >= self.waypoints.len() {
            return Ok(self.waypoints.last().unwrap().pose);
        }
        let a = &self.waypoints[idx - 1];
        let b = &self.waypoints[idx];
        let span = (b.t - a.t).max(1e-12);
        Ok(a.pose.lerp(b.pose, (t - a.t) / span))
    }

    /// Phase owning time `t` (the segment being traversed).
    pub fn phase_at(&self, t: f64) -> Phase {
        let idx = self.waypoints.partition_point(|w| w.t <= t);
        self.waypoints[idx.min(self.waypoints.len() - 1)].phase
    }

    /// Undeformed chord-tip position at time `t` (diagnostics/tests).
    pub fn tip_at(&self, t: f64) -> Result<Vec2, TrajectoryError> {
        let pose = self.pose_at(t)?;
        Ok(pose.pos + Vec2::from_angle(pose.angle + self.chord_offset) * self.blade_chord)
    }
}

struct PlanBuilder {
    waypoints: Vec<Waypoint>,
    t: f64,
}

impl PlanBuilder {
    fn new() -> PlanBuilder {
        PlanBuilder {
            waypoints: Vec::new(),
            t: 0.0,
        }
    }

    fn start(&mut self, pose: Pose2, phase: Phase) {
        self.waypoints.push(Waypoint {
            t: 0.0,
            pose,
            phase,
        });
    }

    /// Append a waypoint reached at `speed` (of the base position).
    fn goto(&mut self, pose: Pose2, phase: Phase, speed: f64) {
        let prev = self.waypoints.last().expect("start() first").pose;
        let dist = prev.pos.distance(pose.pos);
        let dt = (dist / speed).max(1e-4);
        self.t += dt;
        self.waypoints.push(Waypoint {
            t: self.t,
            pose,
            phase,
        });
    }

    /// Append a waypoint reached after an explicit duration.
    fn goto_timed(&mut self, pose: Pose2, phase: Phase, dt: f64) {
        self.t += dt.max(1e-6);
        self.waypoints.push(Waypoint {
            t: self.t,
            pose,
            phase,
        });
    }
}

const ENTRY_PSI_DEG: f64 = 228.0;
const INSERT_ARC_DEG: f64 = 6.0;
const EXIT_RIM_MARGIN_DEG: f64 = 40.0;
const APPROACH_CLEARANCE: f64 = 4.0;
/// Attack angles beyond this cannot ride tip-first.
const MAX_ATTACK_DEG: f64 = 70.0;

/// Plan a full scoop-and-deliver cycle.
pub fn plan_scoop(
    container: &ContainerSpec,
    effector: &EffectorShape,
    params: &TrajectoryParams,
) -> Result<TrajectoryPlan, TrajectoryError> {
    let rho = container.inner_radius();
    let center = container.world_pose;
    let (chord, chord_offset) = effector.chord();

    let sin_crit = chord / (2.0 * rho);
    let attack_needed_deg = if sin_crit >= 1.0 {
        f64::INFINITY
    } else {
        sin_crit.asin().to_degrees() + 3.0
    };
    let attack_deg = params.mount_attack_deg.max(attack_needed_deg);

    let guard = match effector {
        EffectorShape::Cone(c) => Some(GuardPlan {
            angle_offset: c.vertex_angle,
            length: 0.85 * c.sheet_radius,
        }),
        EffectorShape::Ladle { .. } => None,
    };

    if attack_deg > MAX_ATTACK_DEG {
        if matches!(effector, EffectorShape::Ladle { .. }) && chord < 2.0 * rho + 20.0 {
            // The pestle stroke holds the blade roughly radial.
            let delta = params.press_depth
                - effector.belly_clearance(rho, std::f64::consts::FRAC_PI_2);
            return plan_pestle(container, effector, params, delta, guard);
        }
        return Err(TrajectoryError::FrameCollision {
            chord,
            diameter: 2.0 * rho,
        });
    }

    let attack = attack_deg.to_radians();
    // Clearance demanded by curved effectors plus the commanded press.
    let delta = params.press_depth - effector.belly_clearance(rho, attack);
    let tip_radius = rho + delta;
    // Base pose for the tip riding the wall at polar angle psi (radians).
    let pose_at_psi = |psi: f64, d: f64| -> Pose2 {
        let tip = center + Vec2::from_angle(psi) * (rho + d);
        let chord_world = psi + std::f64::consts::FRAC_PI_2 - attack;
        Pose2::new(
            tip - Vec2::from_angle(chord_world) * chord,
            chord_world - chord_offset,
        )
    };

    let psi_entry = ENTRY_PSI_DEG.to_radians();
    let psi_sweep0 = (ENTRY_PSI_DEG + INSERT_ARC_DEG).to_radians();
    let psi_exit = (attack_deg - EXIT_RIM_MARGIN_DEG + 360.0).to_radians();

    let mut b = PlanBuilder::new();

    // Approach: pure translation down through the mouth to the entry pose.
    let entry = pose_at_psi(psi_entry, -APPROACH_CLEARANCE);
    let mouth_dir = -container.axis();
    let entry_tip = center + Vec2::from_angle(psi_entry) * (rho - APPROACH_CLEARANCE);
    let (cap_lo, cap_hi) = container.rim_points();
    let half_span = 0.5 * cap_lo.distance(cap_hi);
    let cap_d = (rho * rho - half_span * half_span).max(0.0).sqrt();
    let height_out = (entry_tip - center).dot(mouth_dir).abs() + cap_d + chord + 18.0;
    let start = Pose2::new(entry.pos + mouth_dir * height_out, entry.angle);
    b.start(start, Phase::Approach);
    b.goto(entry, Phase::Approach, params.approach_speed);

    // Insert: press onto the wall over a short arc.
    let steps = 3;
    for k in 1..=steps {
        let f = k as f64 / steps as f64;
        let psi = psi_entry + (psi_sweep0 - psi_entry) * f;
        let d = -APPROACH_CLEARANCE + (delta + APPROACH_CLEARANCE) * f;
        let arc = (psi_sweep0 - psi_entry) / steps as f64 * tip_radius;
        b.goto_timed(pose_at_psi(psi, d), Phase::Insert, arc / params.sweep_speed);
    }

    // Sweep: constant tip speed along the wall.
    let step = 2.0f64.to_radians();
    let mut psi = psi_sweep0;
    while psi < psi_exit - 1e-9 {
        let next = (psi + step).min(psi_exit);
        let arc = (next - psi) * tip_radius;
        b.goto_timed(
            pose_at_psi(next, delta),
            Phase::Sweep,
            arc / params.sweep_speed,
        );
        psi = next;
    }

    // Lift: pull off the wall, ride to the mouth near the upper rim, then
    // climb out to the carry attitude.
    let carry_angle = params.carry_attitude_deg.to_radians() - chord_offset;
    let off_wall = pose_at_psi(psi_exit, delta - 7.0);
    b.goto(off_wall, Phase::Lift, params.sweep_speed);
    let (rim_lo, rim_hi) = container.rim_points();
    let rim_t = (rim_hi - rim_lo).normalized();
    let mouth_tip = rim_hi - rim_t * 12.0 + mouth_dir * 3.0;
    let lift_angle = off_wall.angle + 0.5 * wrap_angle(carry_angle - off_wall.angle);
    b.goto(
        Pose2::new(
            mouth_tip - Vec2::from_angle(lift_angle + chord_offset) * chord,
            lift_angle,
        ),
        Phase::Lift,
        params.approach_speed * 0.6,
    );
    let clear_tip = rim_hi + vec2(6.0, 0.0) + vec2(0.0, 20.0);
    b.goto(
        Pose2::new(
            clear_tip - Vec2::from_angle(carry_angle + chord_offset) * chord,
            carry_angle,
        ),
        Phase::Lift,
        params.approach_speed * 0.6,
    );

    // Carry: straight to the dump stance over the plate, then hold still so
    // the heap settles back onto the blade before tipping.
    let dump_mag = params.dump_angle_deg.to_radians().abs();
    let dump_base = vec2(
        params.plate_center.x - 25.0,
        params.plate_top + chord * dump_mag.sin() + 6.0,
    );
    b.goto(
        Pose2::new(dump_base, carry_angle),
        Phase::Carry,
        params.carry_speed,
    );
    b.goto_timed(Pose2::new(dump_base, carry_angle), Phase::Carry, 0.18);

    // Dump: rotate in place with a small shake; position never moves.
    push_dump(
        &mut b,
        params,
        dump_base,
        carry_angle,
        params.dump_angle_deg.to_radians() - chord_offset,
    );

    Ok(TrajectoryPlan {
        waypoints: b.waypoints,
        blade_chord: chord,
        attack,
        press_depth: params.press_depth,
        guard,
        pestle: false,
        chord_offset,
    })
}

/// Pestle fallback for effectors longer than the mouth: the tip wipes the
/// bottom sector while the shaft pivots through a point above the mouth.
fn plan_pestle(
    container: &ContainerSpec,
    effector: &EffectorShape,
    params: &TrajectoryParams,
    delta: f64,
    guard: Option<GuardPlan>,
) -> Result<TrajectoryPlan, TrajectoryError> {
    let rho = container.inner_radius();
    let center = container.world_pose;
    let (chord, chord_offset) = effector.chord();
    let mouth_dir = -container.axis();
    let pivot = center + mouth_dir * (rho + 25.0);

    let pose_for_tip = |tip: Vec2| -> Pose2 {
        let dir = (tip - pivot).normalized();
        Pose2::new(tip - dir * chord, dir.angle() - chord_offset)
    };

    let mut b = PlanBuilder::new();
    let psi0 = 233.0f64.to_radians();
    let psi1 = 317.0f64.to_radians();

    let entry_tip = center + mouth_dir * (rho * 0.2);
    b.start(
        Pose2::new(
            pose_for_tip(entry_tip).pos + mouth_dir * 30.0,
            pose_for_tip(entry_tip).angle,
        ),
        Phase::Approach,
    );
    b.goto(pose_for_tip(entry_tip), Phase::Approach, params.approach_speed);
    b.goto(
        pose_for_tip(center + Vec2::from_angle(psi0) * (rho + delta)),
        Phase::Insert,
        params.sweep_speed,
    );

    let step = 2.0f64.to_radians();
    let mut psi = psi0;
    while psi < psi1 - 1e-9 {
        let next = (psi + step).min(psi1);
        let arc = (next - psi) * (rho + delta);
        b.goto_timed(
            pose_for_tip(center + Vec2::from_angle(next) * (rho + delta)),
            Phase::Sweep,
            arc / params.sweep_speed,
        );
        psi = next;
    }

    // Lift: pull the tip inward, then out through the mouth.
    b.goto(
        pose_for_tip(center + Vec2::from_angle(psi1) * (rho - 10.0)),
        Phase::Lift,
        params.sweep_speed,
    );
    let (rim_lo, rim_hi) = container.rim_points();
    let rim_t = (rim_hi - rim_lo).normalized();
    let mouth_tip = rim_hi - rim_t * 14.0 + mouth_dir * 3.0;
    b.goto(pose_for_tip(mouth_tip), Phase::Lift, params.approach_speed * 0.6);
    let carry_angle = params.carry_attitude_deg.to_radians() - chord_offset;
    let clear_tip = rim_hi + vec2(6.0, 20.0);
    b.goto(
        Pose2::new(
            clear_tip - Vec2::from_angle(carry_angle + chord_offset) * chord,
            carry_angle,
        ),
        Phase::Lift,
        params.approach_speed * 0.6,
    );

    let dump_mag = params.dump_angle_deg.to_radians().abs();
    let dump_base = vec2(
        params.plate_center.x - 25.0,
        params.plate_top + chord * dump_mag.sin() + 6.0,
    );
    b.goto(
        Pose2::new(dump_base, carry_angle),
        Phase::Carry,
        params.carry_speed,
    );
    b.goto_timed(Pose2::new(dump_base, carry_angle), Phase::Carry, 0.18);
    push_dump(
        &mut b,
        params,
        dump_base,
        carry_angle,
        params.dump_angle_deg.to_radians() - chord_offset,
    );

    Ok(TrajectoryPlan {
        waypoints: b.waypoints,
        blade_chord: chord,
        attack: std::f64::consts::FRAC_PI_2,
        press_depth: params.press_depth,
        guard,
        pestle: true,
        chord_offset,
    })
}

/// Fixed-duration tip-over at a fixed base point. The swing eases in and
/// out, and the shake is windowed to vanish at both ends so the final pose
/// lands exactly on the commanded angle.
fn push_dump(b: &mut PlanBuilder, params: &TrajectoryParams, base: Vec2, a0: f64, a1: f64) {
    let n_dump = (params.dump_duration_s / 0.005).round().max(2.0) as usize;
    let amp = params.wiggle_amp_deg.to_radians();
    let om = std::f64::consts::TAU * params.wiggle_freq_hz;
    for k in 1..=n_dump {
        let f = k as f64 / n_dump as f64;
        let ease = f * f * (3.0 - 2.0 * f);
        let window = (std::f64::consts::PI * f).sin().powi(2);
        let ang = a0 + (a1 - a0) * ease + amp * window * (om * f * params.dump_duration_s).sin();
        b.goto_timed(
            Pose2::new(base, ang),
            Phase::Dump,
            params.dump_duration_s / n_dump as f64,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::SheetSpec;

    fn bowl(d: f64) -> ContainerSpec {
        ContainerSpec::hemisphere(d, 45.0)
    }

    fn cone_shape(d: f64) -> EffectorShape {
        EffectorShape::Cone(ConeConfig::from_bottom_diameter(50.0, d).unwrap())
    }

    fn ladle_shape() -> EffectorShape {
        let spec = SheetSpec::preset("silicone_ladle").unwrap();
        let blade = crate::sheet::ladle_blade(&spec, 73.0, 34);
        EffectorShape::Ladle {
            shape: blade.rest_shape,
        }
    }

    /// Signed clearance of the mouth plane: positive is outside the bowl.
    fn mouth_side(c: &ContainerSpec, p: Vec2) -> f64 {
        let (lo, hi) = c.rim_points();
        let mid = (lo + hi) * 0.5;
        (p - mid).dot(-c.axis())
    }

    #[test]
    fn sweep_keeps_tip_at_press_depth() {
        for d_bowl in [67.0, 83.0, 110.0] {
            let c = bowl(d_bowl);
            let plan = plan_scoop(&c, &cone_shape(80.0), &TrajectoryParams::default()).unwrap();
            let mut in_sweep = 0;
            let dur = plan.duration();
            let n = 400;
            for k in 0..n {
                let t = dur * k as f64 / n as f64;
                if plan.phase_at(t) != Phase::Sweep {
                    continue;
                }
                in_sweep += 1;
                let tip = plan.tip_at(t).unwrap();
                let (sd, _) = c.sdf(tip);
                assert!(
                    (sd + plan.press_depth).abs() < 0.25,
                    "bowl {d_bowl}: tip sdf {sd} at t={t}"
                );
            }
            assert!(in_sweep > 50, "sweep phase too short: {in_sweep}");
        }
    }

    #[test]
    fn blade_body_never_enters_wall_material() {
        for d_bowl in [67.0, 83.0, 110.0] {
            let c = bowl(d_bowl);
            let plan = plan_scoop(&c, &cone_shape(70.71), &TrajectoryParams::default()).unwrap();
            let dur = plan.duration();
            for k in 0..=600 {
                let t = dur * k as f64 / 600.0;
                let pose = plan.pose_at(t).unwrap();
                let tip = plan.tip_at(t).unwrap();
                for j in 0..=12 {
                    let p = pose.pos.lerp(tip, j as f64 / 12.0);
                    let (sd, _) = c.sdf(p);
                    assert!(
                        sd > -(plan.press_depth + 0.4),
                        "bowl {d_bowl} t={t:.3} s point {j}: sdf {sd:.3}"
                    );
                }
            }
        }
    }

    #[test]
    fn starts_and_ends_clear_of_the_mouth() {
        let c = bowl(83.0);
        let plan = plan_scoop(&c, &cone_shape(80.0), &TrajectoryParams::default()).unwrap();
        let first = plan.pose_at(0.0).unwrap();
        let tip0 = plan.tip_at(0.0).unwrap();
        assert!(mouth_side(&c, first.pos) > 10.0);
        assert!(mouth_side(&c, tip0) > 10.0);
        let dur = plan.duration();
        let last = plan.pose_at(dur).unwrap();
        // Final pose hovers over the plate, outside the bowl entirely.
        assert!(last.pos.x > c.rim_points().1.x);
        let end_angle = last.angle.to_degrees();
        assert!(
            (end_angle - TrajectoryParams::default().dump_angle_deg).abs() < 0.5,
            "end angle {end_angle}"
        );
    }

    #[test]
    fn dump_rotates_without_translating() {
        let c = bowl(110.0);
        let plan = plan_scoop(&c, &cone_shape(90.0), &TrajectoryParams::default()).unwrap();
        let dur = plan.duration();
        let mut dump_poses = Vec::new();
        for k in 0..=800 {
            let t = dur * k as f64 / 800.0;
            if plan.phase_at(t) == Phase::Dump {
                dump_poses.push(plan.pose_at(t).unwrap());
            }
        }
        assert!(dump_poses.len() > 50);
        let p0 = dump_poses[0].pos;
        for p in &dump_poses {
            assert!(p.pos.distance(p0) < 1e-9, "dump base moved");
        }
        let swing = dump_poses.last().unwrap().angle - dump_poses[0].angle;
        assert!(swing < -0.8, "dump swing {swing}");
    }

    #[test]
    fn attack_steepens_for_small_bowls() {
        let p = TrajectoryParams::default();
        let wide = plan_scoop(&bowl(110.0), &cone_shape(80.0), &p).unwrap();
        let tight = plan_scoop(&bowl(67.0), &cone_shape(80.0), &p).unwrap();
        assert!((wide.attack.to_degrees() - 45.0).abs() < 1e-9);
        assert!(tight.attack.to_degrees() > 48.0);
    }

    #[test]
    fn base_speed_stays_bounded() {
        let c = bowl(93.0);
        let plan = plan_scoop(&c, &cone_shape(90.0), &TrajectoryParams::default()).unwrap();
        let p = TrajectoryParams::default();
        for w in plan.waypoints.windows(2) {
            let dist = w[0].pose.pos.distance(w[1].pose.pos);
            let speed = dist / (w[1].t - w[0].t);
            assert!(
                speed <= p.approach_speed * 1.01 + 1e-9,
                "segment into {:?} at {speed} mm/s",
                w[1].phase
            );
        }
    }

    #[test]
    fn ladle_pivots_in_small_bowl_and_rides_in_large() {
        let p = TrajectoryParams {
            press_depth: -0.5,
            ..TrajectoryParams::default()
        };
        let big = plan_scoop(&bowl(83.0), &ladle_shape(), &p).unwrap();
        assert!(!big.pestle);
        let small = plan_scoop(&bowl(67.0), &ladle_shape(), &p).unwrap();
        assert!(small.pestle);
    }

    #[test]
    fn oversized_cone_is_rejected() {
        let err = plan_scoop(&bowl(40.0), &cone_shape(80.0), &TrajectoryParams::default());
        assert!(matches!(err, Err(TrajectoryError::FrameCollision { .. })));
    }

    #[test]
    fn ladle_shape_clears_wall_during_sweep() {
        let p = TrajectoryParams {
            press_depth: -0.5,
            ..TrajectoryParams::default()
        };
        let c = bowl(83.0);
        let shape = ladle_shape();
        let plan = plan_scoop(&c, &shape, &p).unwrap();
        let EffectorShape::Ladle { shape } = &shape else {
            unreachable!()
        };
        let dur = plan.duration();
        for k in 0..=500 {
            let t = dur * k as f64 / 500.0;
            if plan.phase_at(t) != Phase::Sweep {
                continue;
            }
            let pose = plan.pose_at(t).unwrap();
            for q in shape {
                let world = pose.pos + q.rotated(pose.angle);
                let (sd, _) = c.sdf(world);
                assert!(sd > -0.05, "ladle point enters wall: sdf {sd:.3} at t={t:.3}");
            }
        }
    }

    #[test]
    fn planning_is_pure_and_deterministic() {
        let c = bowl(83.0);
        let a = plan_scoop(&c, &cone_shape(80.0), &TrajectoryParams::default()).unwrap();
        let b = plan_scoop(&c, &cone_shape(80.0), &TrajectoryParams::default()).unwrap();
        assert_eq!(a.waypoints.len(), b.waypoints.len());
        for (wa, wb) in a.waypoints.iter().zip(&b.waypoints) {
            assert_eq!(wa.t.to_bits(), wb.t.to_bits());
            assert_eq!(wa.pose.pos.x.to_bits(), wb.pose.pos.x.to_bits());
            assert_eq!(wa.pose.angle.to_bits(), wb.pose.angle.to_bits());
        }
    }

    #[test]
    fn monotone_time_and_phase_order() {
        let plan =
            plan_scoop(&bowl(110.0), &cone_shape(90.0), &TrajectoryParams::default()).unwrap();
        let mut last_t = -1.0;
        let mut last_phase = 0usize;
        let rank = |ph: Phase| match ph {
            Phase::Approach => 0,
            Phase::Insert => 1,
            Phase::Sweep => 2,
            Phase::Lift => 3,
            Phase::Carry => 4,
            Phase::Dump => 5,
        };
        for w in &plan.waypoints {
            assert!(w.t > last_t || (w.t == 0.0 && last_t < 0.0));
            last_t = w.t;
            assert!(rank(w.phase) >= last_phase, "phase went backwards");
            last_phase = rank(w.phase);
        }
        assert!(plan.pose_at(plan.duration() + 1.0).is_err());
        assert!(plan.pose_at(-0.5).is_err());
    }
}
