//! Channel availability, carrier sensing and collision resolution.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::ParameterSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub id: usize,
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
}

/// Transmission-index interval `[start, end]` (1-based, inclusive) and the
/// channels that are unusable during it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub start: u32,
    pub end: u32,
    pub disabled: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSchedule {
    phases: Vec<Phase>,
}

impl PhaseSchedule {
    /// Phases must be contiguous, in order and cover `[1, horizon]`.
    pub fn new(phases: Vec<Phase>, horizon: u32) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::validation(
                "phases",
                "at least one phase is required",
            ));
        }
        let mut next = 1;
        for (i, p) in phases.iter().enumerate() {
            if p.start != next {
                return Err(Error::validation(
                    format!("phases[{i}].start"),
                    format!("expected {next}, got {}", p.start),
                ));
            }
            if p.end < p.start {
                return Err(Error::validation(
                    format!("phases[{i}].end"),
                    "end precedes start",
                ));
            }
            next = p.end + 1;
        }
        if next != horizon + 1 {
            return Err(Error::validation(
                "phases",
                format!("phases end at {} but the horizon is {horizon}", next - 1),
            ));
        }
        Ok(Self { phases })
    }

    /// Every channel available for the whole horizon.
    pub fn always_available(horizon: u32) -> Self {
        Self {
            phases: vec![Phase {
                start: 1,
                end: horizon,
                disabled: BTreeSet::new(),
            }],
        }
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn horizon(&self) -> u32 {
        self.phases.last().map_or(0, |p| p.end)
    }

    pub fn phase_at(&self, transmission_index: u32) -> Result<&Phase> {
        self.phases
            .iter()
            .find(|p| (p.start..=p.end).contains(&transmission_index))
            .ok_or_else(|| {
                Error::Domain(format!(
                    "transmission index {transmission_index} outside [1, {}]",
                    self.horizon()
                ))
            })
    }
}

pub fn channel_available(
    schedule: &PhaseSchedule,
    channel_id: usize,
    transmission_index: u32,
) -> Result<bool> {
    Ok(!schedule
        .phase_at(transmission_index)?
        .disabled
        .contains(&channel_id))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionAttempt {
    pub device_id: usize,
    pub arm: ParameterSet,
    pub start_time: f64,
    pub airtime: f64,
    pub transmission_index: u32,
}

impl TransmissionAttempt {
    pub fn end_time(&self) -> f64 {
        self.start_time + self.airtime
    }

    fn same_attempt(&self, other: &Self) -> bool {
        self.device_id == other.device_id && self.transmission_index == other.transmission_index
    }

    /// Airtime intervals are half-open, so back-to-back frames do not overlap.
    pub fn overlaps(&self, other: &Self) -> bool {
        self.arm.channel_id == other.arm.channel_id
            && self.start_time < other.end_time()
            && other.start_time < self.end_time()
    }

    fn occupies(&self, channel_id: usize, t: f64) -> bool {
        self.arm.channel_id == channel_id && self.start_time <= t && t < self.end_time()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    None,
    Jammed,
    Collision,
    CarrierBusy,
}

impl FailureCause {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureCause::None => "none",
            FailureCause::Jammed => "jammed",
            FailureCause::Collision => "collision",
            FailureCause::CarrierBusy => "carrier_busy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AckOutcome {
    pub success: bool,
    pub failure_cause: FailureCause,
}

impl AckOutcome {
    pub const SUCCESS: Self = Self {
        success: true,
        failure_cause: FailureCause::None,
    };

    pub fn failed(cause: FailureCause) -> Self {
        debug_assert_ne!(cause, FailureCause::None);
        Self {
            success: false,
            failure_cause: cause,
        }
    }
}

/// True when the channel is clear at the attempt's start time.
pub fn carrier_sense<'a>(
    attempt: &TransmissionAttempt,
    in_flight: impl IntoIterator<Item = &'a TransmissionAttempt>,
) -> bool {
    !in_flight
        .into_iter()
        .any(|o| !o.same_attempt(attempt) && o.occupies(attempt.arm.channel_id, attempt.start_time))
}

/// Outcome of an attempt that went on air. A disabled channel fails with
/// probability `jam_rate`; otherwise any same-channel overlap is a collision
/// for every party involved.
pub fn resolve_outcome<'a, R: Rng + ?Sized>(
    attempt: &TransmissionAttempt,
    schedule: &PhaseSchedule,
    concurrent: impl IntoIterator<Item = &'a TransmissionAttempt>,
    jam_rate: f64,
    rng: &mut R,
) -> Result<AckOutcome> {
    if !channel_available(schedule, attempt.arm.channel_id, attempt.transmission_index)? {
        // no draw at the default rate keeps the random stream independent of it
        let jammed = jam_rate >= 1.0 || (jam_rate > 0.0 && rng.random::<f64>() < jam_rate);
        if jammed {
            return Ok(AckOutcome::failed(FailureCause::Jammed));
        }
    }
    let collided = concurrent
        .into_iter()
        .any(|o| !o.same_attempt(attempt) && o.overlaps(attempt));
    Ok(if collided {
        AckOutcome::failed(FailureCause::Collision)
    } else {
        AckOutcome::SUCCESS
    })
}

/// First-transmission offsets, uniform on `[0, interval)`, one per device.
pub fn device_offsets<R: Rng + ?Sized>(
    num_devices: usize,
    interval_s: f64,
    rng: &mut R,
) -> Vec<f64> {
    (0..num_devices)
        .map(|_| rng.random::<f64>() * interval_s)
        .collect()
}

/// Start times for every device: `offset_g + (n - 1) * interval` for `n = 1..=horizon`.
pub fn schedule_transmissions<R: Rng + ?Sized>(
    num_devices: usize,
    interval_s: f64,
    horizon: u32,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if num_devices < 1 {
        return Err(Error::Domain("at least one device is required".into()));
    }
    if !(interval_s.is_finite() && interval_s > 0.0) {
        return Err(Error::Domain(format!(
            "interval {interval_s} must be positive"
        )));
    }
    Ok(device_offsets(num_devices, interval_s, rng)
        .into_iter()
        .map(|offset| {
            (0..horizon)
                .map(|n| offset + f64::from(n) * interval_s)
                .collect()
        })
        .collect())
}

/// The channel plan, phase schedule and timing shared by all devices of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub channels: Vec<Channel>,
    pub schedule: PhaseSchedule,
    pub interval_s: f64,
    pub jam_rate: f64,
    pub carrier_sense: bool,
}

impl Environment {
    pub fn horizon(&self) -> u32 {
        self.schedule.horizon()
    }
}
