//! Device description and per-block footprint derivation.
//!
//! Per-SM register, shared-memory, and thread capacities are normalized to
//! 1.0 each, so profile fractions compare directly against headroom. Block
//! residency is the one quantized resource: `max_blocks_per_sm` slots.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{Algorithm, KernelProfile};

/// GPU description: SM count, block slots per SM, global memory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub num_sms: u32,
    pub max_blocks_per_sm: u32,
    pub global_mem_bytes: u64,
}

impl DeviceSpec {
    pub fn validate(&self, path: &str) -> Result<()> {
        let positive = |field: &str, value: u64| -> Result<()> {
            if value == 0 {
                Err(Error::NonPositiveField {
                    path: path.to_string(),
                    field: field.to_string(),
                    value: value.to_string(),
                })
            } else {
                Ok(())
            }
        };
        positive("num_sms", self.num_sms as u64)?;
        positive("max_blocks_per_sm", self.max_blocks_per_sm as u64)?;
        positive("global_mem_bytes", self.global_mem_bytes)?;
        Ok(())
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or("device")
    }
}

/// Load and validate a device spec from a JSON reader.
pub fn load_device<R: Read>(reader: R, path: &str) -> Result<DeviceSpec> {
    let spec: DeviceSpec = serde_json::from_reader(reader).map_err(|source| Error::Json {
        path: path.to_string(),
        source,
    })?;
    spec.validate(path)?;
    Ok(spec)
}

/// Resident blocks per SM at solo occupancy: `block_frac` of the device's
/// block slots, rounded to nearest and floored at one block.
pub fn solo_blocks(profile: &KernelProfile, device: &DeviceSpec) -> u32 {
    let blocks = (profile.block_frac * device.max_blocks_per_sm as f64).round() as u32;
    blocks.max(1).min(device.max_blocks_per_sm)
}

/// Per-block shares of one kernel, disaggregated from solo-occupancy totals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockFootprint {
    pub op_id: String,
    pub algorithm: Algorithm,
    pub reg_pb: f64,
    pub shm_pb: f64,
    pub thr_pb: f64,
    pub solo_blocks_per_sm: u32,
}

/// Divide a profile's aggregate SM fractions by its solo block count.
pub fn per_block_footprint(profile: &KernelProfile, device: &DeviceSpec) -> BlockFootprint {
    let blocks = solo_blocks(profile, device);
    let per = blocks as f64;
    BlockFootprint {
        op_id: profile.op_id.clone(),
        algorithm: profile.algorithm,
        reg_pb: profile.reg_frac / per,
        shm_pb: profile.shm_frac / per,
        thr_pb: profile.thread_frac / per,
        solo_blocks_per_sm: blocks,
    }
}
