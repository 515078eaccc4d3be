//! Decentralized LoRa transmission parameter selection.
//!
//! Each end device learns which (channel, bandwidth, transmit power)
//! combination to use with UCB1-tuned, rewarding delivered bits per joule of
//! transmit energy. A Schwarz information criterion test on the device's ACK
//! history detects shifts in channel conditions and resets learning.
//!
//! The crate also contains a discrete-event network simulator with a
//! phase-scheduled jammer, used to compare the resetting policy against
//! plain UCB1-tuned.

pub mod agent;
pub mod bandit;
pub mod change_detect;
pub mod energy;
pub mod environment;
pub mod error;
pub mod report;
pub mod scenario;

pub use agent::{run_episode, Agent, AgentConfig, HistoryMode, Mode, TransmissionRecord};
pub use bandit::{ucb1_tuned_score, ArmStats, BanditState, ParameterSet, VarianceMode};
pub use change_detect::{
    detect, detect_windows, sic_h0, sic_h1, windowize, AckHistory, SicResult, WindowStats,
};
pub use energy::{
    energy_efficiency, payload_symbol_count, preamble_duration, reward, symbol_duration,
    transmission_cost, EnergyProfile, RadioParams, RewardScale, TransmissionCost,
};
pub use environment::{
    carrier_sense, channel_available, resolve_outcome, schedule_transmissions, AckOutcome, Channel,
    Environment, FailureCause, Phase, PhaseSchedule, TransmissionAttempt,
};
pub use error::{Error, Result};
pub use report::{emit_csv, run, MetricsReport, ReplicationMetrics};
pub use scenario::{load_scenario, ArmMode, Method, Scenario};
