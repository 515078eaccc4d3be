//! One end device: initial sweep, UCB1-tuned selection, energy-based reward,
//! and SIC-triggered resets. Also hosts the discrete-event loop that drives a
//! population of devices through an [`Environment`].

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{BanditState, ParameterSet, VarianceMode};
use crate::change_detect::{detect, AckHistory};
use crate::energy::{
    reward, transmission_cost, EnergyProfile, RadioParams, RewardScale, TransmissionCost,
};
use crate::environment::{
    carrier_sense, resolve_outcome, schedule_transmissions, AckOutcome, Environment, FailureCause,
    TransmissionAttempt,
};
use crate::error::{Error, Result};

/// Which ACK sequence the change detector watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryMode {
    /// One sequence per device, fed by every transmission.
    #[default]
    Global,
    /// One sequence per arm; only the arm just used is tested.
    PerArm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub sic_enabled: bool,
    pub theta: f64,
    pub window: usize,
    pub shift: usize,
    pub history_mode: HistoryMode,
    pub variance_mode: VarianceMode,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            sic_enabled: true,
            theta: 20.0,
            window: 10,
            shift: 5,
            history_mode: HistoryMode::Global,
            variance_mode: VarianceMode::Empirical,
        }
    }
}

impl AgentConfig {
    pub fn baseline(self) -> Self {
        Self {
            sic_enabled: false,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    InitialSweep,
    Learning,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionRecord {
    /// 1-based count of this device's transmissions.
    pub transmission_index: u32,
    pub arm: usize,
    pub success: bool,
    pub failure_cause: FailureCause,
    /// bit/J
    pub raw_reward: f64,
    pub normalized_reward: f64,
    pub e_active: f64,
    pub sic_statistic: Option<f64>,
    pub reset_triggered: bool,
}

#[derive(Debug, Clone)]
pub struct Agent {
    bandit: BanditState,
    histories: Vec<AckHistory>,
    costs: Vec<TransmissionCost>,
    /// Energy spent when carrier sensing aborts the transmission.
    idle_energy: f64,
    payload_bits: f64,
    scale: RewardScale,
    config: AgentConfig,
    mode: Mode,
    sweep_cursor: usize,
    transmissions: u32,
    records: Vec<TransmissionRecord>,
}

impl Agent {
    pub fn new(
        arms: Vec<ParameterSet>,
        radio: &RadioParams,
        profile: &EnergyProfile,
        config: AgentConfig,
    ) -> Result<Self> {
        if config.sic_enabled && !(config.theta.is_finite() && config.theta > 0.0) {
            return Err(Error::Config(format!(
                "threshold {} must be positive",
                config.theta
            )));
        }
        let costs = arms
            .iter()
            .map(|a| {
                transmission_cost(
                    &radio.with_bandwidth(a.bandwidth_hz),
                    profile,
                    a.tx_power_dbm,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let payload_bits = radio.payload_bits();
        let scale = RewardScale::from_costs(payload_bits, &costs)?;
        let bandit = BanditState::new(arms, config.variance_mode)?;
        let n_hist = match config.history_mode {
            HistoryMode::Global => 1,
            HistoryMode::PerArm => bandit.len(),
        };
        let histories = vec![AckHistory::new(config.window, config.shift)?; n_hist];
        Ok(Self {
            bandit,
            histories,
            costs,
            idle_energy: profile.e_wakeup() + profile.e_processing(),
            payload_bits,
            scale,
            config,
            mode: Mode::InitialSweep,
            sweep_cursor: 0,
            transmissions: 0,
            records: Vec::new(),
        })
    }

    pub fn bandit(&self) -> &BanditState {
        &self.bandit
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn sweep_cursor(&self) -> usize {
        self.sweep_cursor
    }

    pub fn arm_count(&self) -> usize {
        self.bandit.len()
    }

    pub fn arm(&self, index: usize) -> &ParameterSet {
        self.bandit.arm(index)
    }

    pub fn cost(&self, index: usize) -> &TransmissionCost {
        &self.costs[index]
    }

    pub fn reward_scale(&self) -> RewardScale {
        self.scale
    }

    pub fn payload_bits(&self) -> f64 {
        self.payload_bits
    }

    /// The device-wide history in global mode, or the history of `arm` in per-arm mode.
    pub fn history(&self, arm: usize) -> &AckHistory {
        match self.config.history_mode {
            HistoryMode::Global => &self.histories[0],
            HistoryMode::PerArm => &self.histories[arm],
        }
    }

    pub fn transmissions(&self) -> u32 {
        self.transmissions
    }

    pub fn records(&self) -> &[TransmissionRecord] {
        &self.records
    }

    pub fn take_records(&mut self) -> Vec<TransmissionRecord> {
        std::mem::take(&mut self.records)
    }

    pub fn next_arm(&mut self) -> usize {
        match self.mode {
            Mode::InitialSweep => {
                let arm = self.sweep_cursor;
                self.sweep_cursor += 1;
                if self.sweep_cursor == self.bandit.len() {
                    self.mode = Mode::Learning;
                    self.sweep_cursor = 0;
                }
                arm
            }
            Mode::Learning => self.bandit.select_arm(),
        }
    }

    /// Feeds back the ACK outcome of a transmission on `arm`.
    pub fn observe(&mut self, arm: usize, outcome: AckOutcome) -> Result<&TransmissionRecord> {
        let cost = *self
            .costs
            .get(arm)
            .ok_or_else(|| Error::Contract(format!("arm index {arm} out of range")))?;
        let raw_reward = reward(outcome.success, self.payload_bits, cost.e_toa)?;
        let normalized_reward = self.scale.normalize(raw_reward);
        let e_active = if outcome.failure_cause == FailureCause::CarrierBusy {
            self.idle_energy
        } else {
            cost.e_active
        };

        let slot = match self.config.history_mode {
            HistoryMode::Global => 0,
            HistoryMode::PerArm => arm,
        };
        self.histories[slot].push(outcome.success);
        self.bandit.update(arm, normalized_reward)?;
        self.transmissions += 1;

        let mut sic_statistic = None;
        let mut reset_triggered = false;
        if self.config.sic_enabled && self.histories[slot].len() >= 2 * self.config.window {
            let result = detect(&self.histories[slot], self.config.theta);
            sic_statistic = Some(result.statistic);
            if result.detected {
                self.reset();
                reset_triggered = true;
            }
        }

        self.records.push(TransmissionRecord {
            transmission_index: self.transmissions,
            arm,
            success: outcome.success,
            failure_cause: outcome.failure_cause,
            raw_reward,
            normalized_reward,
            e_active,
            sic_statistic,
            reset_triggered,
        });
        Ok(self.records.last().unwrap())
    }

    /// Drops all learned statistics and ACK history and restarts the sweep.
    pub fn reset(&mut self) {
        self.bandit.reset();
        for h in &mut self.histories {
            h.clear();
        }
        self.mode = Mode::InitialSweep;
        self.sweep_cursor = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    // ends sort first so a frame ending at t never blocks one starting at t
    End,
    Start,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: EventKind,
    device: usize,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        let rank = |k: EventKind| k as u8;
        self.time
            .total_cmp(&other.time)
            .then(rank(self.kind).cmp(&rank(other.kind)))
            .then(self.device.cmp(&other.device))
    }
}

/// Runs every agent for `env.horizon()` transmissions. Device start offsets
/// come from `seed` alone, so two policies run with the same seed see the
/// same event stream. Returns the records produced during this episode.
pub fn run_episode(
    agents: &mut [Agent],
    env: &Environment,
    seed: u64,
) -> Result<Vec<Vec<TransmissionRecord>>> {
    let horizon = env.horizon();
    if let Some(a) = agents.iter().find(|a| (horizon as usize) < a.arm_count()) {
        return Err(Error::Config(format!(
            "horizon {horizon} is shorter than the {}-arm initial sweep",
            a.arm_count()
        )));
    }
    let mut offset_rng = ChaCha8Rng::seed_from_u64(seed);
    offset_rng.set_stream(0);
    let mut jam_rng = ChaCha8Rng::seed_from_u64(seed);
    jam_rng.set_stream(1);

    let starts = if agents.is_empty() {
        Vec::new()
    } else {
        schedule_transmissions(agents.len(), env.interval_s, horizon, &mut offset_rng)?
    };
    let first_record: Vec<usize> = agents.iter().map(|a| a.records().len()).collect();
    let max_airtime = agents
        .iter()
        .flat_map(|a| (0..a.arm_count()).map(|i| a.cost(i).t_toa))
        .fold(0.0, f64::max);

    let mut queue = BinaryHeap::new();
    for (device, s) in starts.iter().enumerate() {
        if let Some(&time) = s.first() {
            queue.push(Reverse(Event {
                time,
                kind: EventKind::Start,
                device,
            }));
        }
    }
    let mut next_index = vec![0usize; agents.len()];
    let mut pending: Vec<Option<(TransmissionAttempt, usize)>> = vec![None; agents.len()];
    let mut on_air: Vec<TransmissionAttempt> = Vec::new();

    let schedule_next = |queue: &mut BinaryHeap<Reverse<Event>>, device: usize, n: usize| {
        if let Some(&time) = starts[device].get(n) {
            queue.push(Reverse(Event {
                time,
                kind: EventKind::Start,
                device,
            }));
        }
    };

    while let Some(Reverse(ev)) = queue.pop() {
        on_air.retain(|a| a.end_time() + max_airtime >= ev.time);
        let agent = &mut agents[ev.device];
        match ev.kind {
            EventKind::Start => {
                let n = next_index[ev.device];
                let arm = agent.next_arm();
                let attempt = TransmissionAttempt {
                    device_id: ev.device,
                    arm: *agent.arm(arm),
                    start_time: ev.time,
                    airtime: agent.cost(arm).t_toa,
                    transmission_index: n as u32 + 1,
                };
                if env.carrier_sense && !carrier_sense(&attempt, &on_air) {
                    agent.observe(arm, AckOutcome::failed(FailureCause::CarrierBusy))?;
                    next_index[ev.device] += 1;
                    schedule_next(&mut queue, ev.device, n + 1);
                } else {
                    on_air.push(attempt);
                    pending[ev.device] = Some((attempt, arm));
                    queue.push(Reverse(Event {
                        time: attempt.end_time(),
                        kind: EventKind::End,
                        device: ev.device,
                    }));
                }
            }
            EventKind::End => {
                let (attempt, arm) = pending[ev.device]
                    .take()
                    .expect("end event without a pending transmission");
                let outcome =
                    resolve_outcome(&attempt, &env.schedule, &on_air, env.jam_rate, &mut jam_rng)?;
                agent.observe(arm, outcome)?;
                let n = next_index[ev.device];
                next_index[ev.device] += 1;
                schedule_next(&mut queue, ev.device, n + 1);
            }
        }
    }

    Ok(agents
        .iter()
        .zip(first_record)
        .map(|(a, from)| a.records()[from..].to_vec())
        .collect())
}
