pub mod capture;
pub mod cli;
pub mod cone;
pub mod config;
pub mod engine;
pub mod harness;
pub mod math;
pub mod scene;
pub mod sheet;
pub mod trajectory;

/// Gravitational acceleration in mm/s^2 (length mm, mass g, time s; forces
/// come out in uN).
pub const GRAVITY: f64 = 9810.0;
