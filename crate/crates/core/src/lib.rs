//! Core library for comparing fixed-partition and flexible-footprint
//! ("amorphous") dynamic partial reconfiguration on a shared FPGA fabric.
//!
//! The fabric is a grid of column × clock-region cells ([`fabric`]). AFUs
//! occupy footprints ([`footprint`]) and are compiled into bitstream
//! versions ([`afu`]). Standard DPR fixes a [`layouts::Layout`] of
//! partitions up front; amorphous DPR packs any non-overlapping selection of
//! versions at runtime ([`packing`]). [`experiments`] measures placement
//! rate and reconfiguration overhead over synthetic [`workloads`].

pub mod afu;
pub mod bundled;
pub mod cellset;
pub mod error;
pub mod experiments;
pub mod fabric;
pub mod footprint;
pub mod layouts;
pub mod packing;
pub mod rng;
pub mod workloads;

pub use cellset::CellSet;
pub use error::{Error, Result};
pub use fabric::{build_device, place_interfaces_peripheral, Cell, Device, DeviceConfig, InterfaceKind, ResourceKind};
pub use footprint::{bitstream_bytes, overlaps, validate_footprint, Footprint, ResourceVector, SizeModel, Validity};
