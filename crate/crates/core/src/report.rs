//! Seeded replications and the metrics derived from them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::agent::{run_episode, Agent, TransmissionRecord};
use crate::bandit::ParameterSet;
use crate::energy::energy_efficiency;
use crate::error::Result;
use crate::scenario::{Method, Scenario};

/// Width of the selection-ratio bins and of the trailing success-rate window.
pub const BIN_WIDTH: u32 = 40;

pub fn replication_seed(base_seed: u64, replication: u32) -> u64 {
    base_seed.wrapping_add(u64::from(replication))
}

/// Runs one replication and returns every device's records.
pub fn run_replication(
    scenario: &Scenario,
    method: Method,
    replication: u32,
) -> Result<Vec<Vec<TransmissionRecord>>> {
    let env = scenario.environment()?;
    let radio = scenario.radio_params();
    let profile = scenario.energy_profile();
    let config = scenario.agent_config(method);
    let arms = scenario.arms();
    let mut agents = (0..scenario.network.num_devices)
        .map(|_| Agent::new(arms.clone(), &radio, &profile, config))
        .collect::<Result<Vec<_>>>()?;
    run_episode(
        &mut agents,
        &env,
        replication_seed(scenario.run.base_seed, replication),
    )
}

/// Mean instantaneous energy efficiency over a device's record log.
pub fn device_energy_efficiency(records: &[TransmissionRecord], payload_bits: f64) -> Result<f64> {
    if records.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for r in records {
        sum += energy_efficiency(payload_bits, f64::from(u8::from(r.success)), r.e_active)?;
    }
    Ok(sum / records.len() as f64)
}

/// Metrics of one replication, averaged over its devices.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationMetrics {
    pub seed: u64,
    /// Fraction of devices whose n-th transmission succeeded.
    pub success_by_index: Vec<f64>,
    /// Mean instantaneous energy efficiency of the n-th transmission, bit/J.
    pub ee_by_index: Vec<f64>,
    /// Selection counts, one row per bin, one column per arm.
    pub selections: Vec<Vec<u32>>,
    /// Transmission indices at which each device reset.
    pub reset_indices: Vec<Vec<u32>>,
    pub overall_success_rate: f64,
    pub overall_ee: f64,
}

impl ReplicationMetrics {
    pub fn from_records(
        seed: u64,
        records: &[Vec<TransmissionRecord>],
        horizon: u32,
        arm_count: usize,
        payload_bits: f64,
    ) -> Result<Self> {
        let t = horizon as usize;
        let bins = t.div_ceil(BIN_WIDTH as usize);
        let mut success = vec![0.0; t];
        let mut ee = vec![0.0; t];
        let mut count = vec![0u32; t];
        let mut selections = vec![vec![0u32; arm_count]; bins];
        for device in records {
            for r in device {
                let i = r.transmission_index as usize - 1;
                let s = f64::from(u8::from(r.success));
                success[i] += s;
                ee[i] += energy_efficiency(payload_bits, s, r.e_active)?;
                count[i] += 1;
                selections[i / BIN_WIDTH as usize][r.arm] += 1;
            }
        }
        for i in 0..t {
            if count[i] > 0 {
                success[i] /= f64::from(count[i]);
                ee[i] /= f64::from(count[i]);
            }
        }
        let total: u32 = count.iter().sum();
        let (mut ok, mut ee_sum) = (0.0, 0.0);
        for i in 0..t {
            ok += success[i] * f64::from(count[i]);
            ee_sum += ee[i] * f64::from(count[i]);
        }
        let denom = f64::from(total.max(1));
        Ok(Self {
            seed,
            success_by_index: success,
            ee_by_index: ee,
            selections,
            reset_indices: records
                .iter()
                .map(|d| {
                    d.iter()
                        .filter(|r| r.reset_triggered)
                        .map(|r| r.transmission_index)
                        .collect()
                })
                .collect(),
            overall_success_rate: ok / denom,
            overall_ee: ee_sum / denom,
        })
    }

    /// Success rate over transmission indices `start..=end` (1-based).
    pub fn interval_success_rate(&self, start: u32, end: u32) -> f64 {
        let s = &self.success_by_index[start as usize - 1..end as usize];
        s.iter().sum::<f64>() / s.len() as f64
    }

    /// Share of the selections in `bin` that went to arms matching `pred`.
    pub fn selection_share(&self, bin: usize, pred: impl Fn(usize) -> bool) -> f64 {
        let row = &self.selections[bin];
        let total: u32 = row.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let hit: u32 = row
            .iter()
            .enumerate()
            .filter(|(a, _)| pred(*a))
            .map(|(_, c)| c)
            .sum();
        f64::from(hit) / f64::from(total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub method: Method,
    pub horizon: u32,
    pub arms: Vec<ParameterSet>,
    pub arm_labels: Vec<String>,
    /// Mean success over a trailing window of [`BIN_WIDTH`] transmission indices.
    pub rolling_success_rate: Vec<f64>,
    pub success_by_index: Vec<f64>,
    /// One row per bin; each row sums to one.
    pub selection_ratios: Vec<Vec<f64>>,
    pub energy_efficiency: Vec<f64>,
    pub overall_success_rate: f64,
    pub overall_ee: f64,
    pub mean_detection_latency: Option<f64>,
    pub replications: Vec<ReplicationMetrics>,
}

fn mean_columns(rows: impl Iterator<Item = Vec<f64>>) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    let mut n = 0.0;
    for row in rows {
        if acc.is_empty() {
            acc = vec![0.0; row.len()];
        }
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
        n += 1.0;
    }
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Transmissions from the start of each newly jamming phase up to and
/// including the first reset within that phase, averaged over every device
/// that reset in time. `None` when no such reset occurred.
fn detection_latency(scenario: &Scenario, reps: &[ReplicationMetrics]) -> Result<Option<f64>> {
    let schedule = scenario.schedule()?;
    let phases = schedule.phases();
    let onsets: Vec<(u32, u32)> = phases
        .windows(2)
        .filter(|w| !w[1].disabled.is_subset(&w[0].disabled))
        .map(|w| (w[1].start, w[1].end))
        .collect();
    let mut total = 0.0;
    let mut n = 0usize;
    for rep in reps {
        for resets in &rep.reset_indices {
            for &(start, end) in &onsets {
                if let Some(r) = resets.iter().find(|&&r| (start..=end).contains(&r)) {
                    total += f64::from(r - start + 1);
                    n += 1;
                }
            }
        }
    }
    Ok((n > 0).then(|| total / n as f64))
}

/// Runs `scenario.run.replications` seeded replications in parallel and
/// averages their metrics. Results are merged in replication order.
pub fn run(scenario: &Scenario, method: Method) -> Result<MetricsReport> {
    scenario.validate()?;
    let horizon = scenario.network.horizon;
    let arms = scenario.arms();
    let payload_bits = scenario.radio_params().payload_bits();
    let replications = (0..scenario.run.replications)
        .into_par_iter()
        .map(|r| {
            let records = run_replication(scenario, method, r)?;
            ReplicationMetrics::from_records(
                replication_seed(scenario.run.base_seed, r),
                &records,
                horizon,
                arms.len(),
                payload_bits,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let success_by_index = mean_columns(replications.iter().map(|r| r.success_by_index.clone()));
    let energy_efficiency = mean_columns(replications.iter().map(|r| r.ee_by_index.clone()));
    let w = BIN_WIDTH as usize;
    let rolling_success_rate = (0..success_by_index.len())
        .map(|i| {
            let s = &success_by_index[(i + 1).saturating_sub(w)..=i];
            s.iter().sum::<f64>() / s.len() as f64
        })
        .collect();
    let bins = replications.first().map_or(0, |r| r.selections.len());
    let selection_ratios = (0..bins)
        .map(|b| {
            let mut counts = vec![0u64; arms.len()];
            for rep in &replications {
                for (c, &v) in counts.iter_mut().zip(&rep.selections[b]) {
                    *c += u64::from(v);
                }
            }
            let total: u64 = counts.iter().sum();
            counts
                .iter()
                .map(|&c| {
                    if total == 0 {
                        0.0
                    } else {
                        c as f64 / total as f64
                    }
                })
                .collect()
        })
        .collect();
    let n = replications.len() as f64;
    Ok(MetricsReport {
        method,
        horizon,
        arm_labels: arms.iter().map(ParameterSet::label).collect(),
        arms,
        rolling_success_rate,
        success_by_index,
        selection_ratios,
        energy_efficiency,
        overall_success_rate: replications
            .iter()
            .map(|r| r.overall_success_rate)
            .sum::<f64>()
            / n,
        overall_ee: replications.iter().map(|r| r.overall_ee).sum::<f64>() / n,
        mean_detection_latency: detection_latency(scenario, &replications)?,
        replications,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes `success_rate.csv`, `selection_ratio.csv`, `energy_efficiency.csv`
/// and `summary.csv` with one block of rows per report.
pub fn emit_csv(reports: &[MetricsReport], out_dir: impl AsRef<Path>) -> Result<()> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let mut f = create(dir, "success_rate.csv")?;
    writeln!(f, "transmission_index,method,rolling_success_rate")?;
    for r in reports {
        for (i, v) in r.rolling_success_rate.iter().enumerate() {
            writeln!(f, "{},{},{}", i + 1, r.method.as_str(), v)?;
        }
    }
    f.flush()?;

    let mut f = create(dir, "selection_ratio.csv")?;
    writeln!(f, "bin_start,method,arm_label,ratio")?;
    for r in reports {
        for (b, row) in r.selection_ratios.iter().enumerate() {
            let bin_start = b as u32 * BIN_WIDTH + 1;
            for (label, v) in r.arm_labels.iter().zip(row) {
                writeln!(f, "{bin_start},{},{label},{v}", r.method.as_str())?;
            }
        }
    }
    f.flush()?;

    let mut f = create(dir, "energy_efficiency.csv")?;
    writeln!(f, "transmission_index,method,ee_bit_per_joule")?;
    for r in reports {
        for (i, v) in r.energy_efficiency.iter().enumerate() {
            writeln!(f, "{},{},{}", i + 1, r.method.as_str(), v)?;
        }
    }
    f.flush()?;

    let mut f = create(dir, "summary.csv")?;
    writeln!(
        f,
        "method,overall_success_rate,overall_ee,mean_detection_latency"
    )?;
    for r in reports {
        let latency = r
            .mean_detection_latency
            .map_or_else(|| "nan".to_string(), |v| v.to_string());
        writeln!(
            f,
            "{},{},{},{}",
            r.method.as_str(),
            r.overall_success_rate,
            r.overall_ee,
            latency
        )?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::FailureCause;

    fn rec(index: u32, arm: usize, success: bool) -> TransmissionRecord {
        TransmissionRecord {
            transmission_index: index,
            arm,
            success,
            failure_cause: if success {
                FailureCause::None
            } else {
                FailureCause::Jammed
            },
            raw_reward: 0.0,
            normalized_reward: 0.0,
            e_active: 0.02,
            sic_statistic: None,
            reset_triggered: index == 3,
        }
    }

    #[test]
    fn replication_metrics_from_records() {
        let records = vec![
            (1..=80).map(|i| rec(i, 0, i % 2 == 0)).collect::<Vec<_>>(),
            (1..=80)
                .map(|i| rec(i, (i % 3) as usize, true))
                .collect::<Vec<_>>(),
        ];
        let m = ReplicationMetrics::from_records(1, &records, 80, 3, 400.0).unwrap();
        assert_eq!(m.success_by_index[0], 0.5);
        assert_eq!(m.success_by_index[1], 1.0);
        assert_eq!(m.overall_success_rate, 0.75);
        assert!((m.overall_ee - 0.75 * 400.0 / 0.02).abs() < 1e-9);
        assert_eq!(m.selections.len(), 2);
        assert_eq!(m.selections[0].iter().sum::<u32>(), 80);
        assert_eq!(m.reset_indices, vec![vec![3], vec![3]]);
        assert_eq!(m.interval_success_rate(1, 2), 0.75);
        assert!((m.selection_share(0, |a| a == 0) - (40.0 + 13.0) / 80.0).abs() < 1e-12);
    }

    #[test]
    fn small_run_is_consistent() {
        let s = Scenario::from_toml_str(
            "[network]\nnum_devices = 4\nhorizon = 120\n[run]\nreplications = 2\n",
        )
        .unwrap();
        let report = run(&s, Method::Proposed).unwrap();
        assert_eq!(report.rolling_success_rate.len(), 120);
        assert_eq!(report.selection_ratios.len(), 3);
        for row in &report.selection_ratios {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!((0.0..=1.0).contains(&report.overall_success_rate));
        assert_eq!(report.replications.len(), 2);
    }
}
