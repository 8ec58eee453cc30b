//! Deterministic 2D discrete-element core.
//!
//! Linear spring-dashpot normal contacts with velocity-regularized Coulomb
//! friction, semi-implicit Euler at a fixed timestep, sweep-and-prune
//! broadphase. All force accumulation runs in a state-determined order, so a
//! given state and timestep always produce bit-identical trajectories; trial
//! parallelism lives above this module, never inside a world.

use crate::math::{closest_point_on_segment, vec2, Vec2};
use crate::scene::{ContainerSpec, GranularSpec};
use crate::sheet::SheetState;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("instability: particle {index} at {speed:.1} mm/s at t = {time:.4} s")]
    Instability { index: usize, speed: f64, time: f64 },
    #[error("instability: sheet node {index} at {speed:.1} mm/s at t = {time:.4} s")]
    SheetInstability { index: usize, speed: f64, time: f64 },
}

#[derive(Clone, Debug)]
pub struct SimParams {
    /// Timestep, seconds. Must satisfy dt <= 0.2 sqrt(m_min / k_n).
    pub dt: f64,
    pub max_settle_s: f64,
    /// Settle criterion: max particle speed, mm/s.
    pub settle_threshold: f64,
    pub max_particles: usize,
    /// Instability abort threshold, mm/s.
    pub max_speed_abort: f64,
}

impl Default for SimParams {
    fn default() -> SimParams {
        SimParams {
            dt: 2e-5,
            max_settle_s: 1.4,
            settle_threshold: 8.0,
            max_particles: 5000,
            max_speed_abort: 2.5e4,
        }
    }
}

/// Contact-law constants. Units: stiffness uN/mm, damping ratios
/// dimensionless (1 = critical).
#[derive(Clone, Debug)]
pub struct ContactTable {
    pub particle_stiffness: f64,
    pub particle_beta: f64,
    pub particle_mu: f64,
    pub boundary_stiffness: f64,
    pub boundary_beta: f64,
    pub sheet_stiffness: f64,
    pub sheet_beta: f64,
    pub sheet_mu: f64,
    pub sheet_wall_stiffness: f64,
    pub sheet_wall_beta: f64,
    /// Friction regularization velocity, mm/s: |F_t| ramps linearly up to
    /// mu |F_n| over this sliding speed.
    pub friction_reg_speed: f64,
}

impl ContactTable {
    pub fn for_granular(g: &GranularSpec) -> ContactTable {
        ContactTable {
            particle_stiffness: 2.0e5,
            particle_beta: g.restitution_damping,
            particle_mu: g.friction_coefficient,
            boundary_stiffness: 5.0e5,
            boundary_beta: 0.9,
            sheet_stiffness: 1.2e5,
            sheet_beta: 0.8,
            sheet_mu: 0.3,
            sheet_wall_stiffness: 3.0e4,
            sheet_wall_beta: 1.0,
            friction_reg_speed: 1.0,
        }
    }

    /// Elastic, frictionless variant for conservation tests.
    pub fn conservative(&self) -> ContactTable {
        ContactTable {
            particle_beta: 0.0,
            particle_mu: 0.0,
            boundary_beta: 0.0,
            ..self.clone()
        }
    }
}

/// Normal/tangential contact force magnitudes for one contact.
///
/// `overlap` > 0 is geometric interpenetration; `v_n` is the relative normal
/// velocity, positive when separating; `v_t` is the sliding speed. Returns
/// (f_n, f_t) with f_n >= 0 and |f_t| <= mu f_n by construction; f_t carries
/// the sign opposing `v_t`.
pub fn contact_force(
    overlap: f64,
    v_n: f64,
    v_t: f64,
    stiffness: f64,
    damping_c: f64,
    mu: f64,
    reg_speed: f64,
) -> (f64, f64) {
    let f_n = (stiffness * overlap - damping_c * v_n).max(0.0);
    let sat = (v_t.abs() / reg_speed).min(1.0);
    let f_t = -v_t.signum() * mu * f_n * sat;
    (f_n, f_t)
}

fn damping_coeff(beta: f64, stiffness: f64, mass: f64) -> f64 {
    2.0 * beta * (stiffness * mass).sqrt()
}

/// Contact inflation around the sheet centerline, mm. Contacts engage this
/// far out; only penetration past `SHEET_TRUE_HALF_T` counts as material
/// penetration.
const SHEET_CONTACT_HALF_T: f64 = 0.5;
const SHEET_TRUE_HALF_T: f64 = 0.1;

#[derive(Clone, Debug)]
pub enum Boundary {
    Bowl(ContainerSpec),
    HalfPlane { point: Vec2, normal: Vec2, mu: f64 },
    /// Thick rounded segment (slabs, plate platforms).
    Capsule { a: Vec2, b: Vec2, radius: f64, mu: f64 },
}

impl Boundary {
    pub fn half_plane(point: Vec2, normal: Vec2, mu: f64) -> Boundary {
        Boundary::HalfPlane {
            point,
            normal: normal.normalized(),
            mu,
        }
    }

    /// Signed distance, outward normal, and friction coefficient at `p`.
    /// A bowl's friction is decided by the caller's contact table.
    pub fn sdf(&self, p: Vec2) -> (f64, Vec2, Option<f64>) {
        match self {
            Boundary::Bowl(c) => {
                let (d, n) = c.sdf(p);
                (d, n, None)
            }
            Boundary::HalfPlane { point, normal, mu } => {
                ((p - *point).dot(*normal), *normal, Some(*mu))
            }
            Boundary::Capsule { a, b, radius, mu } => {
                let q = closest_point_on_segment(p, *a, *b);
                let d = p.distance(q);
                if d < 1e-12 {
                    (-*radius, vec2(0.0, 1.0), Some(*mu))
                } else {
                    (d - radius, (p - q) / d, Some(*mu))
                }
            }
        }
    }
}

/// Kinematically driven rigid segment (the cone's second slant wall).
#[derive(Clone, Copy, Debug)]
pub struct Guard {
    pub a: Vec2,
    pub b: Vec2,
    pub vel_a: Vec2,
    pub vel_b: Vec2,
}

pub struct ParticleWorld {
    pub pos: Vec<Vec2>,
    pub vel: Vec<Vec2>,
    pub radius: Vec<f64>,
    pub mass: Vec<f64>,
    pub sheet: Option<SheetState>,
    pub guard: Option<Guard>,
    pub boundaries: Vec<Boundary>,
    pub sim_time: f64,
    pub gravity: Vec2,
    pub params: SimParams,
    pub contacts: ContactTable,
    pub rng_seed: u64,
    /// Linear air-drag coefficient, 1/s; nonzero only during fill.
    pub global_drag: f64,
    /// Extra body acceleration (shake phases), mm/s^2.
    pub extra_accel: Vec2,
    /// Running max of boundary penetration / particle radius.
    pub max_penetration_ratio: f64,
    force: Vec<Vec2>,
    sheet_force: Vec<Vec2>,
    /// Particle indices sorted by x (sweep-and-prune scratch).
    order: Vec<u32>,
    r_max: f64,
}

impl ParticleWorld {
    pub fn new(params: SimParams, contacts: ContactTable) -> ParticleWorld {
        ParticleWorld {
            pos: Vec::new(),
            vel: Vec::new(),
            radius: Vec::new(),
            mass: Vec::new(),
            sheet: None,
            guard: None,
            boundaries: Vec::new(),
            sim_time: 0.0,
            gravity: vec2(0.0, -crate::GRAVITY),
            params,
            contacts,
            rng_seed: 0,
            global_drag: 0.0,
            extra_accel: Vec2::ZERO,
            max_penetration_ratio: 0.0,
            force: Vec::new(),
            sheet_force: Vec::new(),
            order: Vec::new(),
            r_max: 0.0,
        }
    }

    pub fn push_particle(&mut self, pos: Vec2, vel: Vec2, radius: f64, mass: f64) {
        assert!(radius > 0.0 && mass > 0.0);
        self.pos.push(pos);
        self.vel.push(vel);
        self.radius.push(radius);
        self.mass.push(mass);
        self.force.push(Vec2::ZERO);
    }

    /// Refresh broadphase bookkeeping after the particle set changes.
    pub fn rebuild_grid(&mut self) {
        self.r_max = self.radius.iter().copied().fold(0.0, f64::max);
        self.order = (0..self.pos.len() as u32).collect();
    }

    pub fn max_speed(&self) -> f64 {
        self.vel.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.vel
            .iter()
            .zip(&self.mass)
            .map(|(v, m)| 0.5 * m * v.norm_sq())
            .sum()
    }

    /// Elastic energy stored in particle-particle and particle-boundary
    /// spring compression (for conservation tests).
    pub fn elastic_energy(&self) -> f64 {
        let mut e = 0.0;
        let k = self.contacts.particle_stiffness;
        for i in 0..self.pos.len() {
            for j in (i + 1)..self.pos.len() {
                let d = self.pos[i].distance(self.pos[j]);
                let overlap = self.radius[i] + self.radius[j] - d;
                if overlap > 0.0 {
                    e += 0.5 * k * overlap * overlap;
                }
            }
            for b in &self.boundaries {
                let (d, _, _) = b.sdf(self.pos[i]);
                let overlap = self.radius[i] - d;
                if overlap > 0.0 {
                    e += 0.5 * self.contacts.boundary_stiffness * overlap * overlap;
                }
            }
        }
        e
    }

    /// Range of `order` whose x lies in `[x_lo, x_hi]` (order must be sorted).
    fn x_window(&self, x_lo: f64, x_hi: f64) -> (usize, usize) {
        let lo = self
            .order
            .partition_point(|&o| self.pos[o as usize].x < x_lo);
        let hi = self
            .order
            .partition_point(|&o| self.pos[o as usize].x <= x_hi);
        (lo, hi)
    }

    fn sort_sweep(&mut self) {
        let pos = &self.pos;
        // Nearly sorted between steps, so this is close to O(n).
        self.order.sort_unstable_by(|&a, &b| {
            pos[a as usize]
                .x
                .partial_cmp(&pos[b as usize].x)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
    }

    /// All overlapping particle pairs (debug/tests), sorted by index.
    pub fn contact_pairs(&mut self) -> Vec<(usize, usize)> {
        self.sort_sweep();
        let mut out = Vec::new();
        for oi in 0..self.order.len() {
            let i = self.order[oi] as usize;
            let band = self.radius[i] + self.r_max;
            for &jo in &self.order[oi + 1..] {
                let j = jo as usize;
                if self.pos[j].x - self.pos[i].x > band {
                    break;
                }
                if self.pos[i].distance(self.pos[j]) < self.radius[i] + self.radius[j] {
                    out.push((i.min(j), i.max(j)));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// One fixed-dt step: broadphase, contacts, integration, sheet co-step.
    pub fn step(&mut self) -> Result<(), EngineError> {
        let dt = self.params.dt;
        let ct = self.contacts.clone();
        let n = self.pos.len();

        self.sort_sweep();

        for i in 0..n {
            self.force[i] = self.gravity * self.mass[i] + self.extra_accel * self.mass[i]
                - self.vel[i] * (self.global_drag * self.mass[i]);
        }

        // Particle-particle sweep along x.
        for oi in 0..n {
            let i = self.order[oi] as usize;
            let pi = self.pos[i];
            let ri = self.radius[i];
            let band = ri + self.r_max;
            for oj in (oi + 1)..n {
                let j = self.order[oj] as usize;
                let delta = self.pos[j] - pi;
                if delta.x > band {
                    break;
                }
                let dist = delta.norm();
                let overlap = ri + self.radius[j] - dist;
                if overlap <= 0.0 || dist < 1e-9 {
                    continue;
                }
                let nhat = delta / dist;
                let that = nhat.perp();
                let vrel = self.vel[j] - self.vel[i];
                let v_n = vrel.dot(nhat);
                let v_t = vrel.dot(that);
                let m_eff = self.mass[i] * self.mass[j] / (self.mass[i] + self.mass[j]);
                let c = damping_coeff(ct.particle_beta, ct.particle_stiffness, m_eff);
                let (f_n, f_t) = contact_force(
                    overlap,
                    v_n,
                    v_t,
                    ct.particle_stiffness,
                    c,
                    ct.particle_mu,
                    ct.friction_reg_speed,
                );
                let f = nhat * f_n + that * f_t;
                self.force[i] -= f;
                self.force[j] += f;
            }
        }

        // Boundaries.
        for i in 0..n {
            let ri = self.radius[i];
            let mut acc = Vec2::ZERO;
            for b in &self.boundaries {
                let (d, nhat, mu_b) = b.sdf(self.pos[i]);
                let overlap = ri - d;
                if overlap <= 0.0 {
                    continue;
                }
                self.max_penetration_ratio = self.max_penetration_ratio.max(overlap / ri);
                let that = nhat.perp();
                let v_n = self.vel[i].dot(nhat);
                let v_t = self.vel[i].dot(that);
                let c = damping_coeff(ct.boundary_beta, ct.boundary_stiffness, self.mass[i]);
                let (f_n, f_t) = contact_force(
                    overlap,
                    v_n,
                    v_t,
                    ct.boundary_stiffness,
                    c,
                    mu_b.unwrap_or(ct.particle_mu),
                    ct.friction_reg_speed,
                );
                acc += nhat * f_n + that * f_t;
            }
            self.force[i] += acc;
        }

        // Kinematic guard segment. Candidates come from the x-sorted order, so
        // only particles inside the segment's x-window pay for a distance test.
        let reach = self.r_max + SHEET_CONTACT_HALF_T + 1e-6;
        if let Some(g) = self.guard {
            let (w0, w1) = self.x_window(g.a.x.min(g.b.x) - reach, g.a.x.max(g.b.x) + reach);
            let y_lo = g.a.y.min(g.b.y) - reach;
            let y_hi = g.a.y.max(g.b.y) + reach;
            for oi in w0..w1 {
                let i = self.order[oi] as usize;
                let py = self.pos[i].y;
                if py < y_lo || py > y_hi {
                    continue;
                }
                if let Some((f, _)) =
                    self.segment_contact(i, g.a, g.b, g.vel_a, g.vel_b, ct.sheet_mu, &ct)
                {
                    self.force[i] += f;
                }
            }
        }

        // Sheet segments; equal-and-opposite load onto sheet nodes.
        let sheet_opt = self.sheet.take();
        if let Some(sheet) = &sheet_opt {
            let m = sheet.nodes.len();
            let mu = sheet.friction;
            if self.sheet_force.len() != m {
                self.sheet_force.resize(m, Vec2::ZERO);
            }
            self.sheet_force.iter_mut().for_each(|f| *f = Vec2::ZERO);
            for s in 0..m - 1 {
                let (a, b) = (sheet.nodes[s], sheet.nodes[s + 1]);
                let (w0, w1) = self.x_window(a.x.min(b.x) - reach, a.x.max(b.x) + reach);
                let y_lo = a.y.min(b.y) - reach;
                let y_hi = a.y.max(b.y) + reach;
                for oi in w0..w1 {
                    let i = self.order[oi] as usize;
                    let py = self.pos[i].y;
                    if py < y_lo || py > y_hi {
                        continue;
                    }
                    if let Some((f, w)) = self.segment_contact(
                        i,
                        a,
                        b,
                        sheet.node_vel[s],
                        sheet.node_vel[s + 1],
                        mu,
                        &ct,
                    ) {
                        self.force[i] += f;
                        self.sheet_force[s] -= f * (1.0 - w);
                        self.sheet_force[s + 1] -= f * w;
                    }
                }
            }
        }
        self.sheet = sheet_opt;

        // Integrate (semi-implicit Euler).
        let max_v2 = self.params.max_speed_abort * self.params.max_speed_abort;
        for i in 0..n {
            self.vel[i] += self.force[i] * (dt / self.mass[i]);
            if self.vel[i].norm_sq() > max_v2 {
                return Err(EngineError::Instability {
                    index: i,
                    speed: self.vel[i].norm(),
                    time: self.sim_time,
                });
            }
            self.pos[i] += self.vel[i] * dt;
        }

        if let Some(sheet) = self.sheet.as_mut() {
            if self.sheet_force.len() != sheet.nodes.len() {
                self.sheet_force.resize(sheet.nodes.len(), Vec2::ZERO);
            }
            crate::sheet::step_sheet(sheet, &self.boundaries, &ct, &self.sheet_force, dt).map_err(
                |(index, speed)| EngineError::SheetInstability {
                    index,
                    speed,
                    time: self.sim_time,
                },
            )?;
        }

        self.sim_time += dt;
        Ok(())
    }

    /// Contact of particle `i` against a moving segment; returns the force on
    /// the particle and the barycentric weight of endpoint b.
    fn segment_contact(
        &mut self,
        i: usize,
        a: Vec2,
        b: Vec2,
        va: Vec2,
        vb: Vec2,
        mu: f64,
        ct: &ContactTable,
    ) -> Option<(Vec2, f64)> {
        let p = self.pos[i];
        let q = closest_point_on_segment(p, a, b);
        let delta = p - q;
        let dist = delta.norm();
        let overlap = self.radius[i] + SHEET_CONTACT_HALF_T - dist;
        if overlap <= 0.0 || dist < 1e-9 {
            return None;
        }
        let material_pen = overlap - (SHEET_CONTACT_HALF_T - SHEET_TRUE_HALF_T);
        if material_pen > 0.0 {
            self.max_penetration_ratio = self
                .max_penetration_ratio
                .max(material_pen / self.radius[i]);
        }
        let seg_len2 = (b - a).norm_sq();
        let w = if seg_len2 < 1e-12 {
            0.0
        } else {
            ((q - a).dot(b - a) / seg_len2).clamp(0.0, 1.0)
        };
        let nhat = delta / dist;
        let that = nhat.perp();
        let vq = va * (1.0 - w) + vb * w;
        let vrel = self.vel[i] - vq;
        let v_n = vrel.dot(nhat);
        let v_t = vrel.dot(that);
        let c = damping_coeff(ct.sheet_beta, ct.sheet_stiffness, self.mass[i]);
        let (f_n, f_t) = contact_force(
            overlap,
            v_n,
            v_t,
            ct.sheet_stiffness,
            c,
            mu,
            ct.friction_reg_speed,
        );
        Some((nhat * f_n + that * f_t, w))
    }
}

/// Measurement regions for end-of-trial mass accounting.
#[derive(Clone, Debug)]
pub struct Regions {
    pub bowl: ContainerSpec,
    /// Plate platform x-span and top surface height.
    pub plate_x: (f64, f64),
    pub plate_top_y: f64,
    /// Vertical capture band above the plate surface.
    pub plate_capture_height: f64,
    /// Particles within this clearance of the sheet or guard count as
    /// carried.
    pub carry_capture: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MassAccounting {
    pub delivered: f64,
    pub residue: f64,
    pub spilled: f64,
    pub carried: f64,
    pub total_mass: f64,
}

impl MassAccounting {
    pub fn fractions(&self) -> (f64, f64, f64, f64) {
        if self.total_mass <= 0.0 {
            return (0.0, 0.0, 0.0, 0.0);
        }
        (
            self.delivered / self.total_mass,
            self.residue / self.total_mass,
            self.spilled / self.total_mass,
            self.carried / self.total_mass,
        )
    }
}

/// Partition all particle mass into delivered / carried / residue / spilled.
/// Precedence: plate, then sheet-carried, then bowl, then lost.
pub fn measure(world: &ParticleWorld, regions: &Regions) -> MassAccounting {
    let mut acc = MassAccounting::default();
    let rho = regions.bowl.inner_radius();
    for i in 0..world.pos.len() {
        let p = world.pos[i];
        let m = world.mass[i];
        let r = world.radius[i];
        acc.total_mass += m;

        let on_plate = p.x >= regions.plate_x.0
            && p.x <= regions.plate_x.1
            && p.y >= regions.plate_top_y - 2.0
            && p.y <= regions.plate_top_y + regions.plate_capture_height;
        if on_plate {
            acc.delivered += m;
            continue;
        }

        let mut carried = false;
        if let Some(sheet) = &world.sheet {
            for s in 0..sheet.nodes.len() - 1 {
                let q = closest_point_on_segment(p, sheet.nodes[s], sheet.nodes[s + 1]);
                if p.distance(q) <= r + regions.carry_capture {
                    carried = true;
                    break;
                }
            }
        }
        if !carried {
            if let Some(g) = &world.guard {
                let q = closest_point_on_segment(p, g.a, g.b);
                if p.distance(q) <= r + regions.carry_capture {
                    carried = true;
                }
            }
        }
        if carried {
            acc.carried += m;
            continue;
        }

        let u = p - regions.bowl.world_pose;
        let in_sector = u.norm() > 1e-9
            && (u / u.norm()).dot(regions.bowl.axis())
                >= (rho - regions.bowl.rim_depth) / rho - 1e-9;
        if in_sector && u.norm() <= rho + 0.5 * r {
            acc.residue += m;
            continue;
        }

        acc.spilled += m;
    }
    acc
}
