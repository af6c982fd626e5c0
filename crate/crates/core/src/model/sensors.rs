//! Splitting a cell's CPEs into in-band and out-of-band sensing duties.

use super::{CellId, ChannelId, ModelError, SensorId};

/// Sensors of one cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CellAssignment {
    /// Per operating channel: sensor slots, BS first.
    pub in_band: Vec<(ChannelId, Vec<SensorId>)>,
    /// CPEs additionally sensing out-of-band channels (the BS always does).
    pub obs: Vec<SensorId>,
}

impl CellAssignment {
    pub fn sensors_for(&self, ch: ChannelId) -> Option<&[SensorId]> {
        self.in_band
            .iter()
            .find(|(c, _)| *c == ch)
            .map(|(_, s)| s.as_slice())
    }

    /// `m_{j,k}`: CPE sensors on `ch`, excluding the BS.
    pub fn cpe_count(&self, ch: ChannelId) -> usize {
        self.sensors_for(ch).map_or(0, |s| s.len() - 1)
    }

    pub fn is_inactive(&self) -> bool {
        self.in_band.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SensorAssignment {
    pub cells: Vec<CellAssignment>,
}

/// Round-robin split of `num_cpes` CPEs over the operating channels `ocl`.
///
/// With fewer CPEs than operating channels the assignment wraps so every
/// operating channel still gets at least one CPE. OBS duty goes to CPEs at
/// evenly spread indices.
pub fn assign_cell(
    cell: CellId,
    num_cpes: usize,
    ocl: &[ChannelId],
    obs_fraction: f64,
) -> Result<CellAssignment, ModelError> {
    if ocl.is_empty() {
        return Ok(CellAssignment::default());
    }
    if num_cpes == 0 {
        return Err(ModelError::NoSensors { cell });
    }
    let mut in_band: Vec<(ChannelId, Vec<SensorId>)> =
        ocl.iter().map(|&c| (c, vec![SensorId::BASE_STATION])).collect();
    let slots = num_cpes.max(ocl.len());
    for s in 0..slots {
        in_band[s % ocl.len()].1.push(SensorId::cpe(s % num_cpes));
    }
    let obs_count = ((num_cpes as f64) * obs_fraction).round() as usize;
    let obs = (0..obs_count.min(num_cpes))
        .map(|i| SensorId::cpe(i * num_cpes / obs_count))
        .collect();
    Ok(CellAssignment { in_band, obs })
}

pub fn assign_sensors(
    cpes_per_cell: &[usize],
    ocls: &[Vec<ChannelId>],
    obs_fraction: f64,
) -> Result<SensorAssignment, ModelError> {
    let cells = cpes_per_cell
        .iter()
        .zip(ocls)
        .enumerate()
        .map(|(j, (&n, ocl))| assign_cell(CellId(j), n, ocl, obs_fraction))
        .collect::<Result<_, _>>()?;
    Ok(SensorAssignment { cells })
}
