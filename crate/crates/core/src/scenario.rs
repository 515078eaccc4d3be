//! Scenario files.
//!
//! A scenario is a TOML document. Every field is optional; omitted fields
//! take the values of the reference experiment (30 devices, 15 s interval,
//! 1000 transmissions, 50-byte payload, SF7, 8 preamble symbols, W=10, F=5,
//! theta=20, five channels with a two-phase jammer). See
//! `scenarios/paper.scenario` for the fully spelled-out version.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentConfig, HistoryMode};
use crate::bandit::{ParameterSet, VarianceMode};
use crate::energy::{EnergyProfile, RadioParams};
use crate::environment::{Channel, Environment, Phase, PhaseSchedule};
use crate::error::{Error, Result};

/// The bundled reference scenario.
pub const BUNDLED_SCENARIO: &str = include_str!("../scenarios/paper.scenario");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmMode {
    /// Each channel keeps its own bandwidth: channels x powers.
    #[default]
    ChannelBoundBw,
    /// Every channel with every listed bandwidth: channels x bandwidths x powers.
    CrossProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// UCB1-tuned with SIC resets.
    Proposed,
    /// UCB1-tuned alone.
    Baseline,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub num_devices: usize,
    pub transmission_interval_s: f64,
    pub horizon: u32,
    pub carrier_sense: bool,
    /// Probability that a transmission on a disabled channel fails.
    pub jam_rate: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            num_devices: 30,
            transmission_interval_s: 15.0,
            horizon: 1000,
            carrier_sense: true,
            jam_rate: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub spreading_factor: u8,
    pub payload_bytes: u32,
    pub preamble_symbols: u32,
    pub coding_rate: u8,
    pub crc_enabled: bool,
    pub explicit_header: bool,
    pub low_data_rate_optimize: bool,
}

impl Default for RadioConfig {
    fn default() -> Self {
        let r = RadioParams::new(7, 125e3, 8, 50);
        Self {
            spreading_factor: r.spreading_factor,
            payload_bytes: r.payload_bytes,
            preamble_symbols: r.preamble_symbols,
            coding_rate: r.coding_rate,
            crc_enabled: r.crc_enabled,
            explicit_header: r.explicit_header,
            low_data_rate_optimize: r.low_data_rate_optimize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxDraw {
    pub dbm: i32,
    pub watts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub wakeup_power_w: f64,
    pub wakeup_time_s: f64,
    pub processing_power_w: f64,
    pub processing_time_s: f64,
    pub receive_power_w: f64,
    pub receive_time_s: f64,
    pub mcu_power_w: f64,
    pub tx_power_draw: Vec<TxDraw>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        let p = EnergyProfile::default();
        Self {
            wakeup_power_w: p.wakeup_power_w,
            wakeup_time_s: p.wakeup_time_s,
            processing_power_w: p.processing_power_w,
            processing_time_s: p.processing_time_s,
            receive_power_w: p.receive_power_w,
            receive_time_s: p.receive_time_s,
            mcu_power_w: p.mcu_power_w,
            tx_power_draw: p
                .tx_power_draw_w
                .iter()
                .map(|(&dbm, &watts)| TxDraw { dbm, watts })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningConfig {
    pub window: usize,
    pub shift: usize,
    pub theta: f64,
    pub history_mode: HistoryMode,
    pub variance_mode: VarianceMode,
}

impl Default for LearningConfig {
    fn default() -> Self {
        let a = AgentConfig::default();
        Self {
            window: a.window,
            shift: a.shift,
            theta: a.theta,
            history_mode: a.history_mode,
            variance_mode: a.variance_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub start: u32,
    pub end: u32,
    /// Indices into the channel list.
    #[serde(default)]
    pub disabled_channels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub replications: u32,
    pub base_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            replications: 10,
            base_seed: 2026,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub tx_powers_dbm: Vec<i32>,
    pub arm_mode: ArmMode,
    /// Bandwidth options for `cross_product`; ignored otherwise.
    pub bandwidths_hz: Vec<f64>,
    pub network: NetworkConfig,
    pub radio: RadioConfig,
    pub energy: EnergyConfig,
    pub learning: LearningConfig,
    pub run: RunConfig,
    pub channels: Vec<ChannelSpec>,
    /// Omitted: the reference jammer schedule when the horizon is 1000,
    /// otherwise every channel is available throughout.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<PhaseSpec>>,
}

impl Default for Scenario {
    fn default() -> Self {
        let ch = |mhz: f64, khz: f64| ChannelSpec {
            center_frequency_hz: mhz * 1e6,
            bandwidth_hz: khz * 1e3,
        };
        Self {
            tx_powers_dbm: vec![-3, 1, 5, 9, 13],
            arm_mode: ArmMode::ChannelBoundBw,
            bandwidths_hz: vec![125e3, 250e3],
            network: NetworkConfig::default(),
            radio: RadioConfig::default(),
            energy: EnergyConfig::default(),
            learning: LearningConfig::default(),
            run: RunConfig::default(),
            channels: vec![
                ch(920.7, 250.0),
                ch(921.1, 250.0),
                ch(921.4, 125.0),
                ch(921.6, 125.0),
                ch(921.8, 125.0),
            ],
            phases: None,
        }
    }
}

/// Phases of the reference experiment: 250 kHz channels down for 201-400,
/// two of the 125 kHz channels down for 601-800.
pub fn reference_phases() -> Vec<PhaseSpec> {
    let p = |start, end, disabled: &[usize]| PhaseSpec {
        start,
        end,
        disabled_channels: disabled.to_vec(),
    };
    vec![
        p(1, 200, &[]),
        p(201, 400, &[0, 1]),
        p(401, 600, &[]),
        p(601, 800, &[2, 3]),
        p(801, 1000, &[]),
    ]
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_SCENARIO).expect("bundled scenario is valid")
    }

    pub fn effective_phases(&self) -> Vec<PhaseSpec> {
        match &self.phases {
            Some(p) => p.clone(),
            None if self.network.horizon == 1000 => reference_phases(),
            None => vec![PhaseSpec {
                start: 1,
                end: self.network.horizon,
                disabled_channels: Vec::new(),
            }],
        }
    }

    pub fn channel_list(&self) -> Vec<Channel> {
        self.channels
            .iter()
            .enumerate()
            .map(|(id, c)| Channel {
                id,
                center_frequency_hz: c.center_frequency_hz,
                bandwidth_hz: c.bandwidth_hz,
            })
            .collect()
    }

    pub fn arms(&self) -> Vec<ParameterSet> {
        let mut arms = Vec::new();
        for c in self.channel_list() {
            let bandwidths = match self.arm_mode {
                ArmMode::ChannelBoundBw => vec![c.bandwidth_hz],
                ArmMode::CrossProduct => self.bandwidths_hz.clone(),
            };
            for bw in bandwidths {
                for &p in &self.tx_powers_dbm {
                    arms.push(ParameterSet {
                        channel_id: c.id,
                        center_frequency_hz: c.center_frequency_hz,
                        bandwidth_hz: bw,
                        tx_power_dbm: p,
                    });
                }
            }
        }
        arms
    }

    /// Radio settings; the bandwidth is filled in per arm.
    pub fn radio_params(&self) -> RadioParams {
        RadioParams {
            spreading_factor: self.radio.spreading_factor,
            bandwidth_hz: self.channels.first().map_or(125e3, |c| c.bandwidth_hz),
            preamble_symbols: self.radio.preamble_symbols,
            payload_bytes: self.radio.payload_bytes,
            coding_rate: self.radio.coding_rate,
            crc_enabled: self.radio.crc_enabled,
            explicit_header: self.radio.explicit_header,
            low_data_rate_optimize: self.radio.low_data_rate_optimize,
        }
    }

    pub fn energy_profile(&self) -> EnergyProfile {
        let e = &self.energy;
        EnergyProfile {
            wakeup_power_w: e.wakeup_power_w,
            wakeup_time_s: e.wakeup_time_s,
            processing_power_w: e.processing_power_w,
            processing_time_s: e.processing_time_s,
            receive_power_w: e.receive_power_w,
            receive_time_s: e.receive_time_s,
            mcu_power_w: e.mcu_power_w,
            tx_power_draw_w: e.tx_power_draw.iter().map(|d| (d.dbm, d.watts)).collect(),
        }
    }

    pub fn agent_config(&self, method: Method) -> AgentConfig {
        let l = &self.learning;
        AgentConfig {
            sic_enabled: method == Method::Proposed,
            theta: l.theta,
            window: l.window,
            shift: l.shift,
            history_mode: l.history_mode,
            variance_mode: l.variance_mode,
        }
    }

    pub fn schedule(&self) -> Result<PhaseSchedule> {
        let phases = self
            .effective_phases()
            .into_iter()
            .map(|p| Phase {
                start: p.start,
                end: p.end,
                disabled: p.disabled_channels.into_iter().collect::<BTreeSet<_>>(),
            })
            .collect();
        PhaseSchedule::new(phases, self.network.horizon)
    }

    pub fn environment(&self) -> Result<Environment> {
        Ok(Environment {
            channels: self.channel_list(),
            schedule: self.schedule()?,
            interval_s: self.network.transmission_interval_s,
            jam_rate: self.network.jam_rate,
            carrier_sense: self.network.carrier_sense,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.network;
        if n.num_devices < 1 {
            return Err(Error::validation("network.num_devices", "must be >= 1"));
        }
        if !(n.transmission_interval_s.is_finite() && n.transmission_interval_s > 0.0) {
            return Err(Error::validation(
                "network.transmission_interval_s",
                "must be positive",
            ));
        }
        if !(0.0..=1.0).contains(&n.jam_rate) {
            return Err(Error::validation("network.jam_rate", "must lie in [0, 1]"));
        }
        if self.channels.is_empty() {
            return Err(Error::validation(
                "channels",
                "at least one channel is required",
            ));
        }
        for (i, c) in self.channels.iter().enumerate() {
            if !(c.bandwidth_hz.is_finite() && c.bandwidth_hz > 0.0) {
                return Err(Error::validation(
                    format!("channels[{i}].bandwidth_hz"),
                    "must be positive",
                ));
            }
            if self.channels[..i]
                .iter()
                .any(|o| o.center_frequency_hz == c.center_frequency_hz)
            {
                return Err(Error::validation(
                    format!("channels[{i}].center_frequency_hz"),
                    "duplicate center frequency",
                ));
            }
        }
        if self.tx_powers_dbm.is_empty() {
            return Err(Error::validation(
                "tx_powers_dbm",
                "at least one power level is required",
            ));
        }
        let mut seen = BTreeSet::new();
        if let Some(p) = self.tx_powers_dbm.iter().find(|p| !seen.insert(**p)) {
            return Err(Error::validation(
                "tx_powers_dbm",
                format!("duplicate level {p}"),
            ));
        }
        if self.arm_mode == ArmMode::CrossProduct
            && (self.bandwidths_hz.is_empty()
                || self
                    .bandwidths_hz
                    .iter()
                    .any(|b| !(b.is_finite() && *b > 0.0)))
        {
            return Err(Error::validation(
                "bandwidths_hz",
                "need at least one positive bandwidth",
            ));
        }

        let radio = self.radio_params();
        radio
            .validate()
            .map_err(|e| Error::validation("radio", e.to_string()))?;

        let profile = self.energy_profile();
        profile.validate()?;
        if profile.tx_power_draw_w.len() != self.energy.tx_power_draw.len() {
            return Err(Error::validation(
                "energy.tx_power_draw",
                "duplicate dBm entry",
            ));
        }
        for p in &self.tx_powers_dbm {
            if !profile.tx_power_draw_w.contains_key(p) {
                return Err(Error::validation(
                    "energy.tx_power_draw",
                    format!("no entry for {p} dBm"),
                ));
            }
        }

        let l = &self.learning;
        if l.window < 1 {
            return Err(Error::validation("learning.window", "must be >= 1"));
        }
        if l.shift < 1 || l.shift > l.window {
            return Err(Error::validation(
                "learning.shift",
                "must lie in [1, window]",
            ));
        }
        if !(l.theta.is_finite() && l.theta > 0.0) {
            return Err(Error::validation("learning.theta", "must be positive"));
        }

        let arms = self.arms().len();
        if (n.horizon as usize) < arms {
            return Err(Error::validation(
                "network.horizon",
                format!("{} is shorter than the {arms}-arm initial sweep", n.horizon),
            ));
        }
        if self.run.replications < 1 {
            return Err(Error::validation("run.replications", "must be >= 1"));
        }

        for (i, p) in self.effective_phases().iter().enumerate() {
            if let Some(c) = p
                .disabled_channels
                .iter()
                .find(|&&c| c >= self.channels.len())
            {
                return Err(Error::validation(
                    format!("phases[{i}].disabled_channels"),
                    format!("channel index {c} out of range"),
                ));
            }
        }
        self.schedule()?;
        Ok(())
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_toml_str(&text)
}
