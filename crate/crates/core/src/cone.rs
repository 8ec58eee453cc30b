//! Reconfigurable cone-sheet geometry.
//!
//! A circular sheet of radius `R` is curled into a cone by sliding one edge
//! over the other by an angle `theta`. The bottom-circle diameter shrinks
//! linearly with the slide angle,
//!
//! ```text
//!     d = 2R (1 - theta / 2pi)
//! ```
//!
//! and the full vertex angle follows from the slant geometry,
//!
//! ```text
//!     phi = 2 asin(d / 2R)
//! ```
//!
//! so a flat sheet (`theta = 0`) has `d = 2R` and `phi = 180 deg`. The slant
//! length stays `R` for every configuration, which is why the tool can never
//! shrink below `R`: insertion into a container of inner diameter `D`
//! requires `d < D` and `R < D`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConeError {
    #[error("sheet radius must be positive, got {0} mm")]
    NonPositiveRadius(f64),
    #[error("slide angle {0} rad outside [0, 2pi)")]
    SlideAngleOutOfRange(f64),
    #[error("bottom diameter {d} mm outside (0, {max}] mm for R = {r} mm")]
    DiameterOutOfRange { d: f64, max: f64, r: f64 },
    #[error("container diameter must be positive, got {0} mm")]
    NonPositiveContainer(f64),
    #[error(
        "container diameter {d_container} mm does not exceed sheet radius {r} mm; \
         no slide angle admits this container"
    )]
    ContainerTooSmall { d_container: f64, r: f64 },
    #[error("minimum vertex angle {0} rad outside (0, pi]")]
    PhiMinOutOfRange(f64),
}

/// Geometry state of one cone configuration. All four quantities are stored
/// and kept mutually consistent; angles are radians, lengths millimetres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeConfig {
    pub sheet_radius: f64,
    pub slide_angle: f64,
    pub bottom_diameter: f64,
    pub vertex_angle: f64,
}

impl ConeConfig {
    /// Build a configuration from sheet radius and slide angle.
    pub fn from_slide_angle(sheet_radius: f64, slide_angle: f64) -> Result<ConeConfig, ConeError> {
        let d = bottom_diameter(sheet_radius, slide_angle)?;
        Ok(ConeConfig {
            sheet_radius,
            slide_angle,
            bottom_diameter: d,
            vertex_angle: vertex_angle(sheet_radius, d)?,
        })
    }

    /// Build a configuration from sheet radius and target bottom diameter.
    pub fn from_bottom_diameter(sheet_radius: f64, d: f64) -> Result<ConeConfig, ConeError> {
        let theta = slide_angle_for_diameter(sheet_radius, d)?;
        Ok(ConeConfig {
            sheet_radius,
            slide_angle: theta,
            bottom_diameter: d,
            vertex_angle: vertex_angle(sheet_radius, d)?,
        })
    }
}

/// Bottom-circle diameter for a slide angle: `d = 2R (1 - theta/2pi)`.
pub fn bottom_diameter(sheet_radius: f64, slide_angle: f64) -> Result<f64, ConeError> {
    if sheet_radius <= 0.0 {
        return Err(ConeError::NonPositiveRadius(sheet_radius));
    }
    if !(0.0..TAU).contains(&slide_angle) {
        return Err(ConeError::SlideAngleOutOfRange(slide_angle));
    }
    Ok(2.0 * sheet_radius * (1.0 - slide_angle / TAU))
}

/// Inverse of [`bottom_diameter`]: the slide angle producing diameter `d`.
pub fn slide_angle_for_diameter(sheet_radius: f64, d: f64) -> Result<f64, ConeError> {
    if sheet_radius <= 0.0 {
        return Err(ConeError::NonPositiveRadius(sheet_radius));
    }
    if d <= 0.0 || d > 2.0 * sheet_radius {
        return Err(ConeError::DiameterOutOfRange {
            d,
            max: 2.0 * sheet_radius,
            r: sheet_radius,
        });
    }
    Ok(TAU * (1.0 - d / (2.0 * sheet_radius)))
}

/// Full vertex angle of the cone, `phi = 2 asin(d/2R)`, in (0, pi].
/// A flat sheet (`d = 2R`) gives exactly pi.
pub fn vertex_angle(sheet_radius: f64, d: f64) -> Result<f64, ConeError> {
    if sheet_radius <= 0.0 {
        return Err(ConeError::NonPositiveRadius(sheet_radius));
    }
    if d <= 0.0 || d > 2.0 * sheet_radius {
        return Err(ConeError::DiameterOutOfRange {
            d,
            max: 2.0 * sheet_radius,
            r: sheet_radius,
        });
    }
    Ok(2.0 * (d / (2.0 * sheet_radius)).asin())
}

/// Smallest slide angle that lets the cone enter a container of inner
/// diameter `D`, clamped at zero: `max(0, 2pi (1 - D/2R))`.
///
/// Containers with `D <= R` are rejected: the slant length never shrinks, so
/// no configuration fits.
pub fn min_insertion_angle(sheet_radius: f64, container_diameter: f64) -> Result<f64, ConeError> {
    if sheet_radius <= 0.0 {
        return Err(ConeError::NonPositiveRadius(sheet_radius));
    }
    if container_diameter <= 0.0 {
        return Err(ConeError::NonPositiveContainer(container_diameter));
    }
    if container_diameter <= sheet_radius {
        return Err(ConeError::ContainerTooSmall {
            d_container: container_diameter,
            r: sheet_radius,
        });
    }
    Ok((TAU * (1.0 - container_diameter / (2.0 * sheet_radius))).max(0.0))
}

/// Smallest practical bottom diameter given a floor on the vertex angle:
/// `2R sin(phi_min/2)`. With the default 90 deg floor this is `R sqrt(2)`.
pub fn min_practical_diameter(sheet_radius: f64, phi_min: f64) -> Result<f64, ConeError> {
    if sheet_radius <= 0.0 {
        return Err(ConeError::NonPositiveRadius(sheet_radius));
    }
    if phi_min <= 0.0 || phi_min > PI {
        return Err(ConeError::PhiMinOutOfRange(phi_min));
    }
    Ok(2.0 * sheet_radius * (phi_min / 2.0).sin())
}

/// Whether a configuration fits a container without deforming.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InsertabilityVerdict {
    /// True iff `d < D` strictly.
    pub rigid_insertable: bool,
    /// Smallest slide angle that admits this container (0 if any angle does).
    pub min_slide_angle: f64,
    /// True iff entering this container needs elastic deformation (`d >= D`).
    pub deformation_required: bool,
}

/// Evaluate the insertion condition `d < D` for a configuration.
pub fn insertability(
    config: &ConeConfig,
    container_diameter: f64,
) -> Result<InsertabilityVerdict, ConeError> {
    if container_diameter <= 0.0 {
        return Err(ConeError::NonPositiveContainer(container_diameter));
    }
    let rigid = config.bottom_diameter < container_diameter;
    let min_angle = (TAU * (1.0 - container_diameter / (2.0 * config.sheet_radius))).max(0.0);
    Ok(InsertabilityVerdict {
        rigid_insertable: rigid,
        min_slide_angle: min_angle,
        deformation_required: !rigid,
    })
}
