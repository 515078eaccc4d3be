use std::ffi::{CStr, CString};
use std::ptr;

use sicmab_ffi::*;

fn last_error() -> String {
    let p = sicmab_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn airtime_kernels() {
    let mut ts = 0.0;
    assert_eq!(
        unsafe { sicmab_symbol_duration(7, 125_000.0, &mut ts) },
        SicmabStatus::Ok
    );
    assert!((ts - 1.024e-3).abs() < 1e-15);
    let mut tp = 0.0;
    assert_eq!(
        unsafe { sicmab_preamble_duration(8, ts, &mut tp) },
        SicmabStatus::Ok
    );
    assert!((tp - 12.544e-3).abs() < 1e-15);

    let params = sicmab_radio_params_default(7, 125_000.0, 8, 50);
    let mut cost = SicmabTransmissionCost::default();
    assert_eq!(
        unsafe { sicmab_transmission_cost(&params, 13, &mut cost) },
        SicmabStatus::Ok
    );
    assert!((cost.t_toa - (cost.t_preamble + cost.t_payload)).abs() < 1e-15);
    assert!(cost.e_active > cost.e_toa);
}

#[test]
fn error_codes_and_messages() {
    let mut ts = 0.0;
    assert_eq!(
        unsafe { sicmab_symbol_duration(7, 0.0, &mut ts) },
        SicmabStatus::Domain
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { sicmab_symbol_duration(7, 125e3, ptr::null_mut()) },
        SicmabStatus::NullPointer
    );
    assert!(last_error().contains("out"));

    let params = sicmab_radio_params_default(7, 125_000.0, 8, 50);
    let mut cost = SicmabTransmissionCost::default();
    assert_eq!(
        unsafe { sicmab_transmission_cost(&params, 2, &mut cost) },
        SicmabStatus::Config
    );
}

#[test]
fn detect_over_byte_array() {
    let mut bits = vec![1u8; 30];
    bits.extend(vec![0u8; 30]);
    let mut r = SicmabSicResult::default();
    assert_eq!(
        unsafe { sicmab_detect(bits.as_ptr(), bits.len(), 10, 5, 20.0, &mut r) },
        SicmabStatus::Ok
    );
    assert!(r.detected);
    assert_eq!(r.window_count, 11);

    let short = [1u8; 5];
    assert_eq!(
        unsafe { sicmab_detect(short.as_ptr(), short.len(), 10, 5, 20.0, &mut r) },
        SicmabStatus::Ok
    );
    assert!(!r.detected && r.sic_h0.is_nan());

    assert_eq!(
        unsafe { sicmab_detect(bits.as_ptr(), bits.len(), 10, 11, 20.0, &mut r) },
        SicmabStatus::Config
    );
    assert_eq!(
        unsafe { sicmab_detect(ptr::null(), 3, 10, 5, 20.0, &mut r) },
        SicmabStatus::NullPointer
    );
}

#[test]
fn bandit_lifecycle() {
    let arms: Vec<SicmabParameterSet> = (0..3)
        .map(|i| SicmabParameterSet {
            channel_id: i,
            center_frequency_hz: 921e6 + i as f64 * 2e5,
            bandwidth_hz: 125e3,
            tx_power_dbm: 13,
        })
        .collect();
    let mut b = ptr::null_mut();
    unsafe {
        assert_eq!(
            sicmab_bandit_new(
                arms.as_ptr(),
                arms.len(),
                SicmabVarianceMode::Empirical,
                &mut b
            ),
            SicmabStatus::Ok
        );
        let mut n = 0usize;
        assert_eq!(sicmab_bandit_arm_count(b, &mut n), SicmabStatus::Ok);
        assert_eq!(n, 3);

        let rewards = [0.2, 0.9, 0.4];
        for _ in 0..200 {
            let mut arm = usize::MAX;
            assert_eq!(sicmab_bandit_select(b, &mut arm), SicmabStatus::Ok);
            assert_eq!(sicmab_bandit_update(b, arm, rewards[arm]), SicmabStatus::Ok);
        }
        let mut best = SicmabArmStats::default();
        assert_eq!(sicmab_bandit_arm_stats(b, 1, &mut best), SicmabStatus::Ok);
        assert!(best.selection_count > 150);
        assert_eq!(best.variance, 0.0);

        assert_eq!(sicmab_bandit_update(b, 0, 1.5), SicmabStatus::Contract);
        assert_eq!(sicmab_bandit_update(b, 7, 0.5), SicmabStatus::Contract);
        assert_eq!(
            sicmab_bandit_arm_stats(b, 3, &mut best),
            SicmabStatus::Contract
        );

        assert_eq!(sicmab_bandit_reset(b), SicmabStatus::Ok);
        let mut steps = 1u64;
        assert_eq!(sicmab_bandit_total_steps(b, &mut steps), SicmabStatus::Ok);
        assert_eq!(steps, 0);
        sicmab_bandit_free(b);
        sicmab_bandit_free(ptr::null_mut());

        let mut none = ptr::null_mut();
        assert_eq!(
            sicmab_bandit_new(arms.as_ptr(), 0, SicmabVarianceMode::Padded, &mut none),
            SicmabStatus::Config
        );
        assert!(none.is_null());
    }
}

#[test]
fn scenario_run_and_csv() {
    let text = CString::new(
        "[network]\nnum_devices = 3\nhorizon = 120\n[run]\nreplications = 2\nbase_seed = 9\n",
    )
    .unwrap();
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(
            sicmab_scenario_from_toml(text.as_ptr(), &mut s),
            SicmabStatus::Ok
        );
        assert_eq!(
            sicmab_scenario_set_replications(s, 0),
            SicmabStatus::Validation
        );
        assert!(last_error().contains("replications"));
        assert_eq!(sicmab_scenario_set_seed(s, 11), SicmabStatus::Ok);

        let mut reports = [ptr::null_mut(); 2];
        assert_eq!(
            sicmab_run(s, SicmabMethod::Proposed, &mut reports[0]),
            SicmabStatus::Ok
        );
        assert_eq!(
            sicmab_run(s, SicmabMethod::Baseline, &mut reports[1]),
            SicmabStatus::Ok
        );

        let mut summary = SicmabSummary::default();
        assert_eq!(
            sicmab_report_summary(reports[1], &mut summary),
            SicmabStatus::Ok
        );
        assert_eq!(summary.horizon, 120);
        assert_eq!(summary.arm_count, 25);
        assert_eq!(summary.bin_count, 3);
        assert_eq!(summary.replications, 2);
        assert!((0.0..=1.0).contains(&summary.overall_success_rate));
        assert!(summary.mean_detection_latency.is_nan());

        let mut len = 0usize;
        assert_eq!(
            sicmab_report_series(
                reports[0],
                SicmabSeries::RollingSuccessRate,
                ptr::null_mut(),
                0,
                &mut len
            ),
            SicmabStatus::Ok
        );
        assert_eq!(len, 120);
        let mut buf = vec![f64::NAN; len];
        assert_eq!(
            sicmab_report_series(
                reports[0],
                SicmabSeries::EnergyEfficiency,
                buf.as_mut_ptr(),
                buf.len(),
                &mut len
            ),
            SicmabStatus::Ok
        );
        assert!(buf.iter().all(|v| v.is_finite()));

        let mut ratios = vec![0.0; 25];
        assert_eq!(
            sicmab_report_selection_ratios(
                reports[0],
                1,
                ratios.as_mut_ptr(),
                ratios.len(),
                &mut len
            ),
            SicmabStatus::Ok
        );
        assert!((ratios.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(
            sicmab_report_selection_ratios(
                reports[0],
                3,
                ratios.as_mut_ptr(),
                ratios.len(),
                &mut len
            ),
            SicmabStatus::Contract
        );

        let dir = tempfile::tempdir().unwrap();
        let dir_c = CString::new(dir.path().to_str().unwrap()).unwrap();
        let handles = [reports[0].cast_const(), reports[1].cast_const()];
        assert_eq!(
            sicmab_write_csv(handles.as_ptr(), 2, dir_c.as_ptr()),
            SicmabStatus::Ok
        );
        let summary_csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary_csv
            .starts_with("method,overall_success_rate,overall_ee,mean_detection_latency\n"));
        assert!(summary_csv.contains("\nbaseline,"));

        for r in reports {
            sicmab_report_free(r);
        }
        sicmab_scenario_free(s);
    }
}

#[test]
fn scenario_load_errors() {
    let mut s = ptr::null_mut();
    let missing = CString::new("/nonexistent/dir/x.scenario").unwrap();
    unsafe {
        assert_eq!(
            sicmab_scenario_load(missing.as_ptr(), &mut s),
            SicmabStatus::Io
        );
        let bad = CString::new("[network]\nhorizon = 3\n").unwrap();
        assert_eq!(
            sicmab_scenario_from_toml(bad.as_ptr(), &mut s),
            SicmabStatus::Validation
        );
        let junk = CString::new("[network\n").unwrap();
        assert_eq!(
            sicmab_scenario_from_toml(junk.as_ptr(), &mut s),
            SicmabStatus::Parse
        );
        assert_eq!(
            sicmab_scenario_load(ptr::null(), &mut s),
            SicmabStatus::NullPointer
        );
        assert!(s.is_null());

        assert_eq!(sicmab_scenario_bundled(&mut s), SicmabStatus::Ok);
        sicmab_scenario_free(s);
    }
    let v = unsafe { CStr::from_ptr(sicmab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sicmab.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() > 20);
    for name in exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
}
