//! LoRa airtime and energy accounting.
//!
//! Everything here works in SI units: seconds, hertz, watts and joules.
//! Time on air is preamble plus payload, both measured in symbols of
//! duration `2^SF / BW`. The energy of one active cycle is
//!
//! ```text
//! E_active = E_wakeup + E_processing + E_toa + E_receive
//! E_toa    = (P_mcu + P_tx(dBm)) * T_toa
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Modem settings that determine the time on air of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub spreading_factor: u8,
    pub bandwidth_hz: f64,
    pub preamble_symbols: u32,
    pub payload_bytes: u32,
    /// Coding rate index `CR` in 1..=4 (4/5 .. 4/8).
    pub coding_rate: u8,
    pub crc_enabled: bool,
    pub explicit_header: bool,
    pub low_data_rate_optimize: bool,
}

impl RadioParams {
    /// Settings with CR 4/5, CRC on, explicit header and no low data rate optimization.
    pub fn new(
        spreading_factor: u8,
        bandwidth_hz: f64,
        preamble_symbols: u32,
        payload_bytes: u32,
    ) -> Self {
        Self {
            spreading_factor,
            bandwidth_hz,
            preamble_symbols,
            payload_bytes,
            coding_rate: 1,
            crc_enabled: true,
            explicit_header: true,
            low_data_rate_optimize: false,
        }
    }

    pub fn with_bandwidth(mut self, bandwidth_hz: f64) -> Self {
        self.bandwidth_hz = bandwidth_hz;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(6..=12).contains(&self.spreading_factor) {
            return Err(Error::Domain(format!(
                "spreading factor {} outside [6, 12]",
                self.spreading_factor
            )));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::Domain(format!(
                "bandwidth {} must be positive",
                self.bandwidth_hz
            )));
        }
        if self.payload_bytes < 1 {
            return Err(Error::Domain("payload must be at least one byte".into()));
        }
        if self.preamble_symbols < 1 {
            return Err(Error::Domain("preamble must be at least one symbol".into()));
        }
        if !(1..=4).contains(&self.coding_rate) {
            return Err(Error::Domain(format!(
                "coding rate index {} outside [1, 4]",
                self.coding_rate
            )));
        }
        Ok(())
    }

    pub fn payload_bits(&self) -> f64 {
        f64::from(self.payload_bytes) * 8.0
    }
}

/// Device power figures. Wake-up, processing and receive energies are
/// modelled as a constant power draw held for a configurable duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub wakeup_power_w: f64,
    pub wakeup_time_s: f64,
    pub processing_power_w: f64,
    pub processing_time_s: f64,
    pub receive_power_w: f64,
    pub receive_time_s: f64,
    pub mcu_power_w: f64,
    /// Radio draw while transmitting, keyed by transmit power setting in dBm.
    pub tx_power_draw_w: BTreeMap<i32, f64>,
}

impl Default for EnergyProfile {
    fn default() -> Self {
        // 3.3 V supply, transmit currents of 15/18/21/24/29 mA.
        let tx_power_draw_w = [
            (-3, 0.0495),
            (1, 0.0594),
            (5, 0.0693),
            (9, 0.0792),
            (13, 0.0957),
        ]
        .into_iter()
        .collect();
        Self {
            wakeup_power_w: 0.0561,
            wakeup_time_s: 0.010,
            processing_power_w: 0.0858,
            processing_time_s: 0.010,
            receive_power_w: 0.066,
            receive_time_s: 0.100,
            mcu_power_w: 0.0297,
            tx_power_draw_w,
        }
    }
}

impl EnergyProfile {
    pub fn e_wakeup(&self) -> f64 {
        self.wakeup_power_w * self.wakeup_time_s
    }

    pub fn e_processing(&self) -> f64 {
        self.processing_power_w * self.processing_time_s
    }

    pub fn e_receive(&self) -> f64 {
        self.receive_power_w * self.receive_time_s
    }

    pub fn tx_draw(&self, tx_dbm: i32) -> Result<f64> {
        self.tx_power_draw_w.get(&tx_dbm).copied().ok_or_else(|| {
            Error::Config(format!("no radio power draw configured for {tx_dbm} dBm"))
        })
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = [
            ("wakeup_power_w", self.wakeup_power_w),
            ("wakeup_time_s", self.wakeup_time_s),
            ("processing_power_w", self.processing_power_w),
            ("processing_time_s", self.processing_time_s),
            ("receive_power_w", self.receive_power_w),
            ("receive_time_s", self.receive_time_s),
            ("mcu_power_w", self.mcu_power_w),
        ];
        for (name, v) in scalars {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(
                    format!("energy.{name}"),
                    "must be finite and >= 0",
                ));
            }
        }
        for (dbm, w) in &self.tx_power_draw_w {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::validation(
                    "energy.tx_power_draw",
                    format!("draw for {dbm} dBm must be finite and >= 0"),
                ));
            }
        }
        Ok(())
    }
}

/// Airtime breakdown and energy of one transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionCost {
    pub t_symbol: f64,
    pub t_preamble: f64,
    pub t_payload: f64,
    pub t_toa: f64,
    pub e_toa: f64,
    pub e_active: f64,
}

/// `2^sf / bw` seconds.
pub fn symbol_duration(sf: u8, bw_hz: f64) -> Result<f64> {
    if !(6..=12).contains(&sf) {
        return Err(Error::Domain(format!(
            "spreading factor {sf} outside [6, 12]"
        )));
    }
    if !(bw_hz.is_finite() && bw_hz > 0.0) {
        return Err(Error::Domain(format!("bandwidth {bw_hz} must be positive")));
    }
    Ok(f64::from(1u32 << sf) / bw_hz)
}

pub fn preamble_duration(n_preamble: u32, t_symbol: f64) -> Result<f64> {
    if n_preamble < 1 {
        return Err(Error::Domain("preamble must be at least one symbol".into()));
    }
    if !(t_symbol.is_finite() && t_symbol > 0.0) {
        return Err(Error::Domain(format!(
            "symbol duration {t_symbol} must be positive"
        )));
    }
    Ok((4.25 + f64::from(n_preamble)) * t_symbol)
}

/// Number of payload symbols per the SX127x modem formula:
///
/// ```text
/// 8 + max(ceil((8PL - 4SF + 28 + 16CRC - 20IH) / (4(SF - 2DE))) * (CR + 4), 0)
/// ```
pub fn payload_symbol_count(params: &RadioParams) -> Result<u32> {
    let sf = i64::from(params.spreading_factor);
    let de = i64::from(params.low_data_rate_optimize);
    let ih = i64::from(!params.explicit_header);
    let crc = i64::from(params.crc_enabled);
    let denom = 4 * (sf - 2 * de);
    if denom <= 0 {
        return Err(Error::Domain(format!(
            "SF - 2*DE must be positive (SF={sf}, DE={de})"
        )));
    }
    let numer = 8 * i64::from(params.payload_bytes) - 4 * sf + 28 + 16 * crc - 20 * ih;
    // integer ceiling; only used when numer > 0
    let blocks = if numer > 0 {
        (numer + denom - 1) / denom
    } else {
        0
    };
    let extra = blocks * (i64::from(params.coding_rate) + 4);
    Ok(8 + extra.max(0) as u32)
}

pub fn transmission_cost(
    params: &RadioParams,
    profile: &EnergyProfile,
    tx_dbm: i32,
) -> Result<TransmissionCost> {
    params.validate()?;
    let p_tx = profile.tx_draw(tx_dbm)?;
    let t_symbol = symbol_duration(params.spreading_factor, params.bandwidth_hz)?;
    let t_preamble = preamble_duration(params.preamble_symbols, t_symbol)?;
    let t_payload = f64::from(payload_symbol_count(params)?) * t_symbol;
    let t_toa = t_preamble + t_payload;
    let e_toa = (profile.mcu_power_w + p_tx) * t_toa;
    let e_active = profile.e_wakeup() + profile.e_processing() + e_toa + profile.e_receive();
    Ok(TransmissionCost {
        t_symbol,
        t_preamble,
        t_payload,
        t_toa,
        e_toa,
        e_active,
    })
}

/// Delivered bits per joule of active energy.
pub fn energy_efficiency(payload_bits: f64, success_rate: f64, e_active: f64) -> Result<f64> {
    if !(e_active.is_finite() && e_active > 0.0) {
        return Err(Error::Domain(format!(
            "active energy {e_active} must be positive"
        )));
    }
    if !(0.0..=1.0).contains(&success_rate) {
        return Err(Error::Domain(format!(
            "success rate {success_rate} outside [0, 1]"
        )));
    }
    Ok(payload_bits * success_rate / e_active)
}

/// Raw bandit reward in bit/J: payload over transmit energy on success, zero otherwise.
pub fn reward(success: bool, payload_bits: f64, e_toa: f64) -> Result<f64> {
    if !(e_toa.is_finite() && e_toa > 0.0) {
        return Err(Error::Domain(format!(
            "transmit energy {e_toa} must be positive"
        )));
    }
    Ok(if success { payload_bits / e_toa } else { 0.0 })
}

/// Maps raw rewards onto [0, 1] by dividing by the best raw reward of an arm set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardScale {
    max_raw: f64,
}

impl RewardScale {
    pub fn new(max_raw: f64) -> Result<Self> {
        if !(max_raw.is_finite() && max_raw > 0.0) {
            return Err(Error::Domain(format!(
                "maximum raw reward {max_raw} must be positive"
            )));
        }
        Ok(Self { max_raw })
    }

    /// Scale from the costs of every arm: the largest achievable raw reward is
    /// a success on the arm with the smallest transmit energy.
    pub fn from_costs<'a>(
        payload_bits: f64,
        costs: impl IntoIterator<Item = &'a TransmissionCost>,
    ) -> Result<Self> {
        let min_e = costs
            .into_iter()
            .map(|c| c.e_toa)
            .fold(f64::INFINITY, f64::min);
        Self::new(reward(true, payload_bits, min_e)?)
    }

    pub fn max_raw(&self) -> f64 {
        self.max_raw
    }

    pub fn normalize(&self, raw: f64) -> f64 {
        (raw / self.max_raw).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    /// Independent evaluation of the payload symbol formula in floating point.
    fn payload_symbols_oracle(pl: u32, sf: u32, crc: u32, ih: u32, cr: u32, de: u32) -> u32 {
        let numer = 8.0 * pl as f64 - 4.0 * sf as f64 + 28.0 + 16.0 * crc as f64 - 20.0 * ih as f64;
        let denom = 4.0 * (sf as f64 - 2.0 * de as f64);
        let blocks = (numer / denom).ceil() * (cr as f64 + 4.0);
        8 + blocks.max(0.0) as u32
    }

    #[test]
    fn symbol_duration_values() {
        assert_relative_eq!(
            symbol_duration(7, 125_000.0).unwrap(),
            0.001024,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            symbol_duration(7, 250_000.0).unwrap(),
            0.000512,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            symbol_duration(12, 125_000.0).unwrap(),
            0.032768,
            max_relative = 1e-12
        );
    }

    #[test]
    fn symbol_duration_rejects_bad_inputs() {
        assert!(matches!(symbol_duration(7, 0.0), Err(Error::Domain(_))));
        assert!(matches!(symbol_duration(7, -1.0), Err(Error::Domain(_))));
        assert!(matches!(symbol_duration(5, 125e3), Err(Error::Domain(_))));
        assert!(matches!(symbol_duration(13, 125e3), Err(Error::Domain(_))));
    }

    #[test]
    fn preamble_duration_values() {
        assert_relative_eq!(
            preamble_duration(8, 0.001024).unwrap(),
            0.012544,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            preamble_duration(8, 0.000512).unwrap(),
            0.006272,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            preamble_duration(12, 0.001024).unwrap(),
            0.016640,
            max_relative = 1e-12
        );
        assert!(preamble_duration(8, 0.0).is_err());
        assert!(preamble_duration(0, 0.001).is_err());
    }

    #[test]
    fn payload_symbols_match_oracle() {
        let base = RadioParams::new(7, 125e3, 8, 50);
        assert_eq!(payload_symbols_oracle(50, 7, 1, 0, 1, 0), 83);
        assert_eq!(payload_symbol_count(&base).unwrap(), 83);

        let no_crc = RadioParams {
            crc_enabled: false,
            ..base
        };
        // (400 - 28 + 28) / 28 = 14.29 -> 15 blocks of 5 symbols
        assert_eq!(payload_symbols_oracle(50, 7, 0, 0, 1, 0), 83);
        assert_eq!(payload_symbol_count(&no_crc).unwrap(), 83);

        // numerator clamps at zero
        let tiny = RadioParams {
            payload_bytes: 0,
            crc_enabled: false,
            explicit_header: false,
            ..base
        };
        assert_eq!(payload_symbol_count(&tiny).unwrap(), 8);

        for pl in 1..=64 {
            for sf in 7..=12u8 {
                for cr in 1..=4u8 {
                    for de in [false, true] {
                        let p = RadioParams {
                            payload_bytes: pl,
                            spreading_factor: sf,
                            coding_rate: cr,
                            low_data_rate_optimize: de,
                            ..base
                        };
                        assert_eq!(
                            payload_symbol_count(&p).unwrap(),
                            payload_symbols_oracle(pl, sf.into(), 1, 0, cr.into(), de.into())
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn payload_symbols_domain_error() {
        let p = RadioParams {
            spreading_factor: 2,
            low_data_rate_optimize: true,
            ..RadioParams::new(7, 125e3, 8, 50)
        };
        assert!(matches!(payload_symbol_count(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn transmission_cost_chain() {
        let mut profile = EnergyProfile::default();
        profile.tx_power_draw_w.insert(0, 0.05);
        let params = RadioParams::new(7, 125e3, 8, 50);
        let cost = transmission_cost(&params, &profile, 0).unwrap();
        assert_relative_eq!(cost.t_toa, 0.097536, max_relative = 1e-12);
        assert_eq!(cost.t_toa, cost.t_preamble + cost.t_payload);
        assert_relative_eq!(cost.e_toa, 0.0797 * 0.097536, max_relative = 1e-12);
        assert_relative_eq!(cost.e_toa, 7.774e-3, max_relative = 1e-3);
        let expected_active = 0.0561 * 0.01 + 0.0858 * 0.01 + cost.e_toa + 0.066 * 0.1;
        assert_relative_eq!(cost.e_active, expected_active, max_relative = 1e-12);
        assert!(cost.e_active >= cost.e_toa);

        let wide = transmission_cost(&params.with_bandwidth(250e3), &profile, 0).unwrap();
        assert_relative_eq!(wide.t_toa * 2.0, cost.t_toa, max_relative = 1e-12);
        assert_relative_eq!(wide.t_preamble * 2.0, cost.t_preamble, max_relative = 1e-12);
    }

    #[test]
    fn minimum_payload_symbols_give_eight_symbol_payload() {
        let params = RadioParams {
            payload_bytes: 1,
            explicit_header: false,
            crc_enabled: false,
            ..RadioParams::new(12, 125e3, 8, 1)
        };
        // 8 - 48 + 28 - 20 < 0
        let cost = transmission_cost(&params, &EnergyProfile::default(), -3).unwrap();
        assert_relative_eq!(cost.t_payload, 8.0 * cost.t_symbol, max_relative = 1e-12);
    }

    #[test]
    fn unknown_power_level_is_config_error() {
        let params = RadioParams::new(7, 125e3, 8, 50);
        let err = transmission_cost(&params, &EnergyProfile::default(), 20).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn energy_efficiency_values() {
        assert_eq!(energy_efficiency(400.0, 1.0, 2.0).unwrap(), 200.0);
        assert_eq!(energy_efficiency(400.0, 0.0, 2.0).unwrap(), 0.0);
        assert_eq!(energy_efficiency(400.0, 0.5, 1.0).unwrap(), 200.0);
        assert!(energy_efficiency(400.0, 0.5, 0.0).is_err());
        assert!(energy_efficiency(400.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn reward_values() {
        let r = reward(true, 400.0, 0.0077736).unwrap();
        assert_relative_eq!(r, 51456.2, max_relative = 1e-4);
        assert_eq!(reward(false, 400.0, 0.0077736).unwrap(), 0.0);
        assert!(reward(true, 400.0, 0.0).is_err());
    }

    #[test]
    fn normalization_lands_in_unit_interval() {
        let profile = EnergyProfile::default();
        let params = RadioParams::new(7, 125e3, 8, 50);
        let costs: Vec<_> = profile
            .tx_power_draw_w
            .keys()
            .flat_map(|&dbm| {
                [125e3, 250e3]
                    .map(|bw| transmission_cost(&params.with_bandwidth(bw), &profile, dbm).unwrap())
            })
            .collect();
        let scale = RewardScale::from_costs(params.payload_bits(), &costs).unwrap();
        for c in &costs {
            let v = scale.normalize(reward(true, params.payload_bits(), c.e_toa).unwrap());
            assert!(v > 0.0 && v <= 1.0);
        }
        let best = costs.iter().map(|c| c.e_toa).fold(f64::INFINITY, f64::min);
        assert_eq!(
            scale.normalize(reward(true, params.payload_bits(), best).unwrap()),
            1.0
        );
    }

    mod props {
        use proptest::prelude::*;

        use super::super::*;

        proptest! {
            #[test]
            fn symbol_duration_monotone(sf in 6u8..12, bw in 1_000.0f64..1e6, dbw in 1.0f64..1e5) {
                let t = symbol_duration(sf, bw).unwrap();
                prop_assert!(symbol_duration(sf, bw + dbw).unwrap() < t);
                prop_assert!(symbol_duration(sf + 1, bw).unwrap() > t);
            }

            #[test]
            fn e_toa_increases_with_draw(a in 0.0f64..1.0, d in 1e-6f64..1.0) {
                let params = RadioParams::new(7, 125e3, 8, 50);
                let mut profile = EnergyProfile::default();
                profile.tx_power_draw_w.insert(0, a);
                profile.tx_power_draw_w.insert(1, a + d);
                let lo = transmission_cost(&params, &profile, 0).unwrap();
                let hi = transmission_cost(&params, &profile, 1).unwrap();
                prop_assert!(hi.e_toa > lo.e_toa);
                prop_assert_eq!(hi.t_toa, lo.t_toa);
            }

            #[test]
            fn efficiency_linear_and_homogeneous(bits in 1.0f64..1e4, s in 0.0f64..1.0, e in 1e-4f64..10.0, k in 0.1f64..10.0) {
                let base = energy_efficiency(bits, s, e).unwrap();
                let half = energy_efficiency(bits, s / 2.0, e).unwrap();
                prop_assert!((half * 2.0 - base).abs() <= 1e-9 * base.abs().max(1e-12));
                let scaled = energy_efficiency(bits, s, e * k).unwrap();
                prop_assert!((scaled * k - base).abs() <= 1e-9 * base.abs().max(1e-12));
            }

            #[test]
            fn failed_reward_is_zero(bits in 0.0f64..1e5, e in 1e-6f64..10.0) {
                prop_assert_eq!(reward(false, bits, e).unwrap(), 0.0);
            }
        }
    }
}
