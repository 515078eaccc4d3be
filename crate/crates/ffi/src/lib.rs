//! C ABI over `sicmab`.
//!
//! Every fallible function returns a [`SicmabStatus`] and writes its result
//! through an out-pointer. On failure a human-readable message is kept per
//! thread and can be fetched with [`sicmab_last_error_message`].
//!
//! Objects that own Rust state (bandits, scenarios, reports) are handed out
//! as opaque pointers and must be released with the matching `_free`
//! function. Passing null to a `_free` function is a no-op.
//!
//! The header `include/sicmab.h` is regenerated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use sicmab::change_detect::AckHistory;
use sicmab::{
    BanditState, EnergyProfile, Error, Method, MetricsReport, ParameterSet, RadioParams, Scenario,
    VarianceMode,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SicmabStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Config = 3,
    Contract = 4,
    InsufficientData = 5,
    Parse = 6,
    Validation = 7,
    Io = 8,
    InvalidUtf8 = 9,
    Panic = 10,
}

impl From<&Error> for SicmabStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => Self::Domain,
            Error::Config(_) => Self::Config,
            Error::Contract(_) => Self::Contract,
            Error::InsufficientData { .. } => Self::InsufficientData,
            Error::Parse(_) => Self::Parse,
            Error::Validation { .. } => Self::Validation,
            Error::Io(_) => Self::Io,
        }
    }
}

struct Failure(SicmabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(SicmabStatus::from(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> SicmabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SicmabStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SicmabStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SicmabStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            SicmabStatus::InvalidUtf8,
            format!("`{what}` is not valid UTF-8"),
        )
    })
}

/// Message of the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sicmab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sicmab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------------------
// Airtime and energy

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SicmabRadioParams {
    pub spreading_factor: u8,
    pub bandwidth_hz: f64,
    pub preamble_symbols: u32,
    pub payload_bytes: u32,
    /// 1..=4 for coding rates 4/5..4/8.
    pub coding_rate: u8,
    pub crc_enabled: bool,
    pub explicit_header: bool,
    pub low_data_rate_optimize: bool,
}

impl From<SicmabRadioParams> for RadioParams {
    fn from(p: SicmabRadioParams) -> Self {
        RadioParams {
            spreading_factor: p.spreading_factor,
            bandwidth_hz: p.bandwidth_hz,
            preamble_symbols: p.preamble_symbols,
            payload_bytes: p.payload_bytes,
            coding_rate: p.coding_rate,
            crc_enabled: p.crc_enabled,
            explicit_header: p.explicit_header,
            low_data_rate_optimize: p.low_data_rate_optimize,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SicmabTransmissionCost {
    pub t_symbol: f64,
    pub t_preamble: f64,
    pub t_payload: f64,
    pub t_toa: f64,
    pub e_toa: f64,
    pub e_active: f64,
}

/// Radio settings with coding rate 4/5, CRC on, explicit header and no
/// low-data-rate optimization.
#[no_mangle]
pub extern "C" fn sicmab_radio_params_default(
    spreading_factor: u8,
    bandwidth_hz: f64,
    preamble_symbols: u32,
    payload_bytes: u32,
) -> SicmabRadioParams {
    let p = RadioParams::new(
        spreading_factor,
        bandwidth_hz,
        preamble_symbols,
        payload_bytes,
    );
    SicmabRadioParams {
        spreading_factor: p.spreading_factor,
        bandwidth_hz: p.bandwidth_hz,
        preamble_symbols: p.preamble_symbols,
        payload_bytes: p.payload_bytes,
        coding_rate: p.coding_rate,
        crc_enabled: p.crc_enabled,
        explicit_header: p.explicit_header,
        low_data_rate_optimize: p.low_data_rate_optimize,
    }
}

/// Symbol duration `2^sf / bw` in seconds.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn sicmab_symbol_duration(
    spreading_factor: u8,
    bandwidth_hz: f64,
    out: *mut f64,
) -> SicmabStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = sicmab::symbol_duration(spreading_factor, bandwidth_hz)?;
        Ok(())
    })
}

/// Preamble duration in seconds for `n_preamble` programmed symbols.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn sicmab_preamble_duration(
    n_preamble: u32,
    t_symbol: f64,
    out: *mut f64,
) -> SicmabStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = sicmab::preamble_duration(n_preamble, t_symbol)?;
        Ok(())
    })
}

/// Airtime and energy of one transmission at `tx_dbm`, using the default
/// energy profile.
///
/// # Safety
/// `params` and `out` must be null or valid for reading/writing one struct.
#[no_mangle]
pub unsafe extern "C" fn sicmab_transmission_cost(
    params: *const SicmabRadioParams,
    tx_dbm: i32,
    out: *mut SicmabTransmissionCost,
) -> SicmabStatus {
    guard(|| {
        let params = RadioParams::from(*in_ref(params, "params")?);
        let out = out_ref(out, "out")?;
        let c = sicmab::transmission_cost(&params, &EnergyProfile::default(), tx_dbm)?;
        *out = SicmabTransmissionCost {
            t_symbol: c.t_symbol,
            t_preamble: c.t_preamble,
            t_payload: c.t_payload,
            t_toa: c.t_toa,
            e_toa: c.e_toa,
            e_active: c.e_active,
        };
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Change detection

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SicmabSicResult {
    /// NaN when fewer than two windows were available.
    pub sic_h0: f64,
    pub sic_h1_min: f64,
    pub best_split: usize,
    pub statistic: f64,
    pub detected: bool,
    pub window_count: usize,
}

/// Runs the change detector over `len` ACK bits (nonzero = success).
///
/// # Safety
/// `bits` must point to `len` readable bytes (may be null when `len` is 0);
/// `out` must be valid for writing one struct.
#[no_mangle]
pub unsafe extern "C" fn sicmab_detect(
    bits: *const u8,
    len: usize,
    window: usize,
    shift: usize,
    theta: f64,
    out: *mut SicmabSicResult,
) -> SicmabStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let bits: &[u8] = match len {
            0 => &[],
            _ if bits.is_null() => return Err(null("bits")),
            _ => std::slice::from_raw_parts(bits, len),
        };
        let history = AckHistory::from_bits(bits.iter().map(|&b| b != 0), window, shift)?;
        let r = sicmab::detect(&history, theta);
        *out = SicmabSicResult {
            sic_h0: r.sic_h0,
            sic_h1_min: r.sic_h1_min,
            best_split: r.best_split,
            statistic: r.statistic,
            detected: r.detected,
            window_count: r.window_count,
        };
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Bandit

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SicmabParameterSet {
    pub channel_id: usize,
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: i32,
}

impl From<SicmabParameterSet> for ParameterSet {
    fn from(p: SicmabParameterSet) -> Self {
        ParameterSet {
            channel_id: p.channel_id,
            center_frequency_hz: p.center_frequency_hz,
            bandwidth_hz: p.bandwidth_hz,
            tx_power_dbm: p.tx_power_dbm,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SicmabArmStats {
    pub cumulative_reward: f64,
    pub selection_count: u64,
    pub mean: f64,
    pub variance: f64,
    /// Score from the most recent selection; +inf for unplayed arms.
    pub last_score: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SicmabVarianceMode {
    Empirical = 0,
    Padded = 1,
}

/// Opaque UCB1-tuned state.
pub struct SicmabBandit(BanditState);

/// Creates a bandit over `n` arms. Release with [`sicmab_bandit_free`].
///
/// # Safety
/// `arms` must point to `n` readable structs; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sicmab_bandit_new(
    arms: *const SicmabParameterSet,
    n: usize,
    mode: SicmabVarianceMode,
    out: *mut *mut SicmabBandit,
) -> SicmabStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let arms: &[SicmabParameterSet] = match n {
            0 => &[],
            _ if arms.is_null() => return Err(null("arms")),
            _ => std::slice::from_raw_parts(arms, n),
        };
        let mode = match mode {
            SicmabVarianceMode::Empirical => VarianceMode::Empirical,
            SicmabVarianceMode::Padded => VarianceMode::Padded,
        };
        let state = BanditState::new(arms.iter().copied().map(ParameterSet::from).collect(), mode)?;
        *out = Box::into_raw(Box::new(SicmabBandit(state)));
        Ok(())
    })
}

/// # Safety
/// `bandit` must be null or a pointer from [`sicmab_bandit_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sicmab_bandit_free(bandit: *mut SicmabBandit) {
    if !bandit.is_null() {
        drop(Box::from_raw(bandit));
    }
}

/// Index of the arm with the highest score; unplayed arms come first.
///
/// # Safety
/// `bandit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sicmab_bandit_select(
    bandit: *mut SicmabBandit,
    out: *mut usize,
) -> SicmabStatus {
    guard(|| {
        let b = out_ref(bandit, "bandit")?;
        let out = out_ref(out, "out")?;
        *out = b.0.select_arm();
        Ok(())
    })
}

/// Records a normalized reward in [0, 1] for `arm`.
///
/// # Safety
/// `bandit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sicmab_bandit_update(
    bandit: *mut SicmabBandit,
    arm: usize,
    reward: f64,
) -> SicmabStatus {
    guard(|| {
        let b = out_ref(bandit, "bandit")?;
        b.0.update(arm, reward)?;
        Ok(())
    })
}

/// Clears all statistics and the step counter.
///
/// # Safety
/// `bandit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sicmab_bandit_reset(bandit: *mut SicmabBandit) -> SicmabStatus {
    guard(|| {
        out_ref(bandit, "bandit")?.0.reset();
        Ok(())
    })
}

/// # Safety
/// `bandit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sicmab_bandit_arm_count(
    bandit: *const SicmabBandit,
    out: *mut usize,
) -> SicmabStatus {
    guard(|| {
        let b = in_ref(bandit, "bandit")?;
        *out_ref(out, "out")? = b.0.len();
        Ok(())
    })
}

/// Number of updates since creation or the last reset.
///
/// # Safety
/// `bandit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sicmab_bandit_total_steps(
    bandit: *const SicmabBandit,
    out: *mut u64,
) -> SicmabStatus {
    guard(|| {
        let b = in_ref(bandit, "bandit")?;
        *out_ref(out, "out")? = b.0.total_steps();
        Ok(())
    })
}

/// # Safety
/// `bandit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sicmab_bandit_arm_stats(
    bandit: *const SicmabBandit,
    arm: usize,
    out: *mut SicmabArmStats,
) -> SicmabStatus {
    guard(|| {
        let b = in_ref(bandit, "bandit")?;
        let out = out_ref(out, "out")?;
        if arm >= b.0.len() {
            return Err(Error::Contract(format!("arm index {arm} out of range")).into());
        }
        let s = b.0.stats(arm);
        *out = SicmabArmStats {
            cumulative_reward: s.cumulative_reward,
            selection_count: s.selection_count,
            mean: s.mean,
            variance: s.variance(),
            last_score: s.last_score,
        };
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Scenarios and simulation

/// Opaque scenario configuration.
pub struct SicmabScenario(Scenario);

/// Opaque result of one simulated method.
pub struct SicmabReport(MetricsReport);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SicmabMethod {
    Proposed = 0,
    Baseline = 1,
}

/// Per-transmission series held by a report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SicmabSeries {
    /// Trailing 40-transmission success rate.
    RollingSuccessRate = 0,
    SuccessByIndex = 1,
    /// Energy efficiency in bit/J.
    EnergyEfficiency = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SicmabSummary {
    pub overall_success_rate: f64,
    pub overall_ee: f64,
    /// NaN when no reset followed a jamming onset (always for the baseline).
    pub mean_detection_latency: f64,
    pub horizon: u32,
    pub arm_count: usize,
    pub bin_count: usize,
    pub replications: usize,
}

fn boxed_scenario(s: Scenario, out: &mut *mut SicmabScenario) -> FfiResult<()> {
    s.validate()?;
    *out = Box::into_raw(Box::new(SicmabScenario(s)));
    Ok(())
}

/// The bundled reference scenario.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sicmab_scenario_bundled(out: *mut *mut SicmabScenario) -> SicmabStatus {
    guard(|| boxed_scenario(Scenario::bundled(), out_ref(out, "out")?))
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sicmab_scenario_load(
    path: *const c_char,
    out: *mut *mut SicmabScenario,
) -> SicmabStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        boxed_scenario(sicmab::load_scenario(path)?, out_ref(out, "out")?)
    })
}

/// Parses a scenario from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sicmab_scenario_from_toml(
    text: *const c_char,
    out: *mut *mut SicmabScenario,
) -> SicmabStatus {
    guard(|| {
        let text = c_str(text, "text")?;
        boxed_scenario(Scenario::from_toml_str(text)?, out_ref(out, "out")?)
    })
}

/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sicmab_scenario_free(scenario: *mut SicmabScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sicmab_scenario_set_seed(
    scenario: *mut SicmabScenario,
    base_seed: u64,
) -> SicmabStatus {
    guard(|| {
        out_ref(scenario, "scenario")?.0.run.base_seed = base_seed;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sicmab_scenario_set_replications(
    scenario: *mut SicmabScenario,
    replications: u32,
) -> SicmabStatus {
    guard(|| {
        let s = out_ref(scenario, "scenario")?;
        let mut next = s.0.clone();
        next.run.replications = replications;
        next.validate()?;
        s.0 = next;
        Ok(())
    })
}

/// Simulates every replication of `scenario` with `method`.
/// Release the report with [`sicmab_report_free`].
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sicmab_run(
    scenario: *const SicmabScenario,
    method: SicmabMethod,
    out: *mut *mut SicmabReport,
) -> SicmabStatus {
    guard(|| {
        let s = in_ref(scenario, "scenario")?;
        let out = out_ref(out, "out")?;
        let method = match method {
            SicmabMethod::Proposed => Method::Proposed,
            SicmabMethod::Baseline => Method::Baseline,
        };
        let report = sicmab::run(&s.0, method)?;
        *out = Box::into_raw(Box::new(SicmabReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sicmab_report_free(report: *mut SicmabReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sicmab_report_summary(
    report: *const SicmabReport,
    out: *mut SicmabSummary,
) -> SicmabStatus {
    guard(|| {
        let r = &in_ref(report, "report")?.0;
        *out_ref(out, "out")? = SicmabSummary {
            overall_success_rate: r.overall_success_rate,
            overall_ee: r.overall_ee,
            mean_detection_latency: r.mean_detection_latency.unwrap_or(f64::NAN),
            horizon: r.horizon,
            arm_count: r.arms.len(),
            bin_count: r.selection_ratios.len(),
            replications: r.replications.len(),
        };
        Ok(())
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, cap: usize, out_len: *mut usize) -> FfiResult<()> {
    *out_ref(out_len, "out_len")? = src.len();
    let n = cap.min(src.len());
    if n > 0 {
        if buf.is_null() {
            return Err(null("buf"));
        }
        std::ptr::copy_nonoverlapping(src.as_ptr(), buf, n);
    }
    Ok(())
}

/// Copies up to `cap` values of a per-transmission series into `buf` and
/// stores the full series length in `out_len`. Call with `cap = 0` to size
/// the buffer first.
///
/// # Safety
/// `report` must be a live handle; `buf` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn sicmab_report_series(
    report: *const SicmabReport,
    series: SicmabSeries,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> SicmabStatus {
    guard(|| {
        let r = &in_ref(report, "report")?.0;
        let src = match series {
            SicmabSeries::RollingSuccessRate => &r.rolling_success_rate,
            SicmabSeries::SuccessByIndex => &r.success_by_index,
            SicmabSeries::EnergyEfficiency => &r.energy_efficiency,
        };
        copy_out(src, buf, cap, out_len)
    })
}

/// Selection ratio of every arm within 40-transmission bin `bin`, in arm
/// order. Same buffer protocol as [`sicmab_report_series`].
///
/// # Safety
/// `report` must be a live handle; `buf` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn sicmab_report_selection_ratios(
    report: *const SicmabReport,
    bin: usize,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> SicmabStatus {
    guard(|| {
        let r = &in_ref(report, "report")?.0;
        let row = r
            .selection_ratios
            .get(bin)
            .ok_or_else(|| Failure::from(Error::Contract(format!("bin {bin} out of range"))))?;
        copy_out(row, buf, cap, out_len)
    })
}

/// Writes the four metric CSVs for `n` reports into directory `dir`.
///
/// # Safety
/// `reports` must point to `n` live handles; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sicmab_write_csv(
    reports: *const *const SicmabReport,
    n: usize,
    dir: *const c_char,
) -> SicmabStatus {
    guard(|| {
        let dir = c_str(dir, "dir")?;
        if n > 0 && reports.is_null() {
            return Err(null("reports"));
        }
        let handles = if n == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(reports, n)
        };
        let owned = handles
            .iter()
            .map(|&p| in_ref(p, "reports[i]").map(|r| r.0.clone()))
            .collect::<FfiResult<Vec<_>>>()?;
        sicmab::emit_csv(&owned, Path::new(dir))?;
        Ok(())
    })
}
