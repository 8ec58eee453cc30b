//! Bending model for the scooping blade.
//!
//! A blade is the 2D section of the working surface: a chain of nodes joined
//! by inextensible segments with rotational springs at the joints. Flexible
//! blades integrate hinge-torque dynamics with substepping and a
//! position-based length projection; rigid effectors (steel sheet, molded
//! ladle) skip the dynamics and follow the driven base pose exactly.
//!
//! Rolling a flat sheet into a cone stiffens the section that fights
//! in-plane bending, because curvature across the roll axis braces the
//! surface. That shows up here as a multiplier on the flat-sheet EI that
//! grows as the cone closes (bottom diameter shrinks).

use crate::cone::ConeConfig;
use crate::engine::{Boundary, ContactTable};
use crate::math::{vec2, wrap_angle, Vec2};
use crate::scene::SheetSpec;

/// Out-of-plane width of the blade strip, mm. The 2D model resolves forces
/// per section; total bending stiffness scales with width.
pub const BLADE_WIDTH: f64 = 30.0;

/// How strongly rolling amplifies in-plane stiffness per unit of curvature
/// ratio (2R/d - 1). Rolling locks the section the way a curled tape measure
/// does, so the gain is large: a working cone must hold the full charge with
/// millimetre-scale sag, while the flat sheet (ratio 1) keeps only the bare
/// strip stiffness and folds under load.
pub const CONE_STIFFNESS_GAIN: f64 = 350.0;

/// Contact radius of a blade node against container walls, mm.
const NODE_CONTACT_RADIUS: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct SheetState {
    /// World-space node positions; node 0 is the driven base.
    pub nodes: Vec<Vec2>,
    pub node_vel: Vec<Vec2>,
    /// Rest length of every segment, mm.
    pub rest_len: f64,
    /// Rotational spring per hinge, uN mm/rad. Index 0 is the virtual clamp
    /// against the driven base direction.
    pub hinge_k: Vec<f64>,
    pub rest_angle: Vec<f64>,
    pub node_mass: f64,
    /// Absolute velocity damping relative to the base, 1/s.
    pub damping: f64,
    /// Friction coefficient against particles and walls.
    pub friction: f64,
    pub rigid: bool,
    pub gravity: Vec2,
    pub base_pos: Vec2,
    /// Direction of the blade at the base (base toward tip), radians.
    pub base_angle: f64,
    pub base_vel: Vec2,
    pub base_ang_vel: f64,
    /// Undeformed shape in the base frame: node 0 at origin, +x along the
    /// blade.
    pub rest_shape: Vec<Vec2>,
}

impl SheetState {
    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn length(&self) -> f64 {
        self.rest_len * self.segments() as f64
    }

    pub fn tip(&self) -> Vec2 {
        *self.nodes.last().unwrap()
    }

    /// Update the driven base. Call before each world step.
    pub fn set_base(&mut self, pos: Vec2, angle: f64, vel: Vec2, ang_vel: f64) {
        self.base_pos = pos;
        self.base_angle = angle;
        self.base_vel = vel;
        self.base_ang_vel = ang_vel;
        self.nodes[0] = pos;
        self.node_vel[0] = vel;
    }

    /// Place every node on the undeformed shape at the current base pose and
    /// zero all deformation velocity.
    pub fn snap_to_base(&mut self) {
        for (i, r) in self.rest_shape.iter().enumerate() {
            self.nodes[i] = self.base_pos + r.rotated(self.base_angle);
            self.node_vel[i] =
                self.base_vel + (self.nodes[i] - self.base_pos).perp() * self.base_ang_vel;
        }
    }

    /// Fraction of nodes lying within `tol` of the container surface.
    pub fn conformity(&self, container: &crate::scene::ContainerSpec, tol: f64) -> f64 {
        let n = self.nodes.len();
        let near = self
            .nodes
            .iter()
            .filter(|p| {
                let (d, _) = container.sdf(**p);
                d.abs() <= tol
            })
            .count();
        near as f64 / n as f64
    }
}

/// In-plane bending stiffness multiplier for a sheet rolled to bottom
/// diameter `d`: 1 for the flat sheet, growing as the cone closes.
pub fn cone_stiffness_multiplier(cone: &ConeConfig, gain: f64) -> f64 {
    let ratio = 2.0 * cone.sheet_radius / cone.bottom_diameter;
    1.0 + gain * (ratio - 1.0).max(0.0)
}

fn blade_from_shape(
    spec: &SheetSpec,
    rest_shape: Vec<Vec2>,
    rest_len: f64,
    stiffness_multiplier: f64,
    rest_angle: Vec<f64>,
) -> SheetState {
    let n_nodes = rest_shape.len();
    let ei = spec.base_bending_stiffness_ei * BLADE_WIDTH * stiffness_multiplier;
    let mut hinge_k = vec![ei / rest_len; n_nodes - 1];
    // Half-length end correction: the clamp hinge owns only half a segment
    // of material, which makes the discrete cantilever match beam theory to
    // O(1/N^2).
    hinge_k[0] = 2.0 * ei / rest_len;
    SheetState {
        nodes: rest_shape.clone(),
        node_vel: vec![Vec2::ZERO; n_nodes],
        rest_len,
        hinge_k,
        rest_angle,
        // Heavier than the strip's share of real mass: mass scaling buys a
        // larger stable substep, and blade inertia is negligible at these
        // speeds either way.
        node_mass: 0.06,
        damping: 90.0,
        friction: spec.friction_coefficient,
        rigid: spec.rigid,
        gravity: vec2(0.0, -crate::GRAVITY),
        base_pos: Vec2::ZERO,
        base_angle: 0.0,
        base_vel: Vec2::ZERO,
        base_ang_vel: 0.0,
        rest_shape,
    }
}

/// Straight blade of the given length (a cone slant seen side-on).
pub fn straight_blade(
    spec: &SheetSpec,
    length: f64,
    segments: usize,
    stiffness_multiplier: f64,
) -> SheetState {
    assert!(segments >= 4, "blade needs at least 4 segments");
    let rest_len = length / segments as f64;
    let shape = (0..=segments)
        .map(|i| vec2(i as f64 * rest_len, 0.0))
        .collect::<Vec<_>>();
    blade_from_shape(spec, shape, rest_len, stiffness_multiplier, vec![0.0; segments])
}

/// Blade for a sheet rolled to the given cone setting.
pub fn cone_blade(spec: &SheetSpec, cone: &ConeConfig, segments: usize) -> SheetState {
    straight_blade(
        spec,
        cone.sheet_radius,
        segments,
        cone_stiffness_multiplier(cone, CONE_STIFFNESS_GAIN),
    )
}

/// Ladle section: straight handle ending in a curved cup.
pub fn ladle_blade(spec: &SheetSpec, length: f64, segments: usize) -> SheetState {
    assert!(segments >= 8);
    let rest_len = length / segments as f64;
    // Cup occupies the distal 30% with a 14 mm bend radius.
    let cup_from = (segments as f64 * 0.7).round() as usize;
    let mut rest_angle = vec![0.0; segments];
    for a in rest_angle.iter_mut().skip(cup_from) {
        *a = rest_len / 14.0;
    }
    let mut shape = Vec::with_capacity(segments + 1);
    let mut p = Vec2::ZERO;
    let mut dir = 0.0f64;
    shape.push(p);
    for &turn in &rest_angle {
        dir += turn;
        p += Vec2::from_angle(dir) * rest_len;
        shape.push(p);
    }
    blade_from_shape(spec, shape, rest_len, 1.0, rest_angle)
}

/// Accumulate -dE/dx of the bending energy into `force`.
fn accumulate_bending(state: &SheetState, nodes: &[Vec2], force: &mut [Vec2]) {
    // d(angle of e)/dx_head = perp(e)/|e|^2; tail gets the opposite sign.
    let grad = |e: Vec2| e.perp() / e.norm_sq().max(1e-12);
    {
        let e0 = nodes[1] - nodes[0];
        let theta = wrap_angle(e0.angle() - state.base_angle);
        let m = -state.hinge_k[0] * (theta - state.rest_angle[0]);
        force[1] += grad(e0) * m;
        // Full gradient for completeness; node 0 is kinematic so this only
        // matters to the finite-difference check.
        force[0] -= grad(e0) * m;
    }
    for h in 1..state.hinge_k.len() {
        let ea = nodes[h] - nodes[h - 1];
        let eb = nodes[h + 1] - nodes[h];
        let theta = wrap_angle(eb.angle() - ea.angle());
        let m = -state.hinge_k[h] * (theta - state.rest_angle[h]);
        let ga = grad(ea);
        let gb = grad(eb);
        // theta = angle(eb) - angle(ea); chain rule over both segments.
        force[h - 1] += ga * m;
        force[h] -= (ga + gb) * m;
        force[h + 1] += gb * m;
    }
}

/// Advance the blade by `dt`, holding the given per-node external forces
/// constant. Rigid blades snap to the driven pose. Returns Err((node,
/// speed)) if the deformation solve blows up.
pub fn step_sheet(
    state: &mut SheetState,
    boundaries: &[Boundary],
    contacts: &ContactTable,
    external: &[Vec2],
    dt: f64,
) -> Result<(), (usize, f64)> {
    if state.rigid {
        let old = state.nodes.clone();
        state.snap_to_base();
        if dt > 0.0 {
            for i in 0..state.nodes.len() {
                state.node_vel[i] = (state.nodes[i] - old[i]) / dt;
            }
        }
        return Ok(());
    }

    let n = state.nodes.len();
    let k_max = state.hinge_k.iter().copied().fold(1.0, f64::max);
    // Critical explicit step for the bending chain is ~0.5*L*sqrt(m/k).
    let dt_stable = 0.25 * state.rest_len * (state.node_mass / k_max).sqrt();
    let n_sub = (dt / dt_stable).ceil().max(1.0) as usize;
    let h = dt / n_sub as f64;
    let c_wall = 2.0
        * contacts.sheet_wall_beta
        * (contacts.sheet_wall_stiffness * state.node_mass).sqrt();

    let mut force = vec![Vec2::ZERO; n];
    let mut prev = vec![Vec2::ZERO; n];
    for _ in 0..n_sub {
        state.nodes[0] = state.base_pos;
        state.node_vel[0] = state.base_vel;

        for i in 0..n {
            force[i] = external[i]
                + state.gravity * state.node_mass
                - (state.node_vel[i] - state.base_vel) * (state.damping * state.node_mass);
        }
        accumulate_bending(state, &state.nodes, &mut force);

        for i in 1..n {
            for b in boundaries {
                let (d, nhat, mu_b) = b.sdf(state.nodes[i]);
                let overlap = NODE_CONTACT_RADIUS - d;
                if overlap <= 0.0 {
                    continue;
                }
                let that = nhat.perp();
                let v_n = state.node_vel[i].dot(nhat);
                let v_t = state.node_vel[i].dot(that);
                let (f_n, f_t) = crate::engine::contact_force(
                    overlap,
                    v_n,
                    v_t,
                    contacts.sheet_wall_stiffness,
                    c_wall,
                    mu_b.unwrap_or(state.friction).min(state.friction),
                    contacts.friction_reg_speed,
                );
                force[i] += nhat * f_n + that * f_t;
            }
        }

        prev.copy_from_slice(&state.nodes);
        for i in 1..n {
            state.node_vel[i] += force[i] * (h / state.node_mass);
            state.nodes[i] += state.node_vel[i] * h;
        }

        // Length projection (node 0 pinned).
        for _ in 0..6 {
            for s in 0..n - 1 {
                let d = state.nodes[s + 1] - state.nodes[s];
                let len = d.norm();
                if len < 1e-12 {
                    continue;
                }
                let err = (len - state.rest_len) / len;
                if s == 0 {
                    state.nodes[1] -= d * err;
                } else {
                    state.nodes[s] += d * (0.5 * err);
                    state.nodes[s + 1] -= d * (0.5 * err);
                }
            }
        }

        for i in 1..n {
            state.node_vel[i] = (state.nodes[i] - prev[i]) / h;
            let sp = state.node_vel[i].norm();
            if sp > 5.0e4 {
                return Err((i, sp));
            }
        }
    }
    Ok(())
}
