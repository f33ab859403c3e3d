//! Geometry for turning a semantic height field into temporally consistent
//! street-level panorama videos.
//!
//! The pipeline extrudes the height field into a semantic occupancy grid
//! ([`voxelizer`]), renders equirectangular depth maps from it
//! ([`panorama`]), grows a shared point cloud frame by frame while recording
//! which point every pixel sees ([`extraction`]), and colors that cloud either
//! from a captured center frame ([`colorize`]) or procedurally
//! ([`stylize`]). [`metrics`] scores the resulting videos, including the
//! out-and-back self-consistency check.

pub mod colorize;
pub mod config;
pub mod error;
pub mod extraction;
pub mod io;
pub mod knn;
pub mod metrics;
pub mod panorama;
pub mod sample;
pub mod scene;
pub mod stylize;
pub mod voxelizer;

pub use error::{Error, Result};
