use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sicmab::change_detect::parse_bits;
use sicmab::{
    detect, emit_csv, load_scenario, run, transmission_cost, AckHistory, EnergyProfile, Method,
    RadioParams, Scenario,
};

#[derive(Parser)]
#[command(
    name = "sicmab",
    version,
    about = "LoRa parameter selection with change-point resets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Proposed,
    Baseline,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write CSV metrics.
    Run {
        /// Scenario file; the bundled reference scenario when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        method: MethodArg,
        /// Base seed, overriding the scenario's.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replications: Option<u32>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the change detector over a file of 0/1 ACK bits.
    Detect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        shift: usize,
        #[arg(long, default_value_t = 20.0)]
        theta: f64,
    },
    /// Print time on air and energy of one transmission.
    Toa {
        #[arg(long, default_value_t = 7)]
        sf: u8,
        #[arg(long, default_value_t = 125_000.0)]
        bw: f64,
        #[arg(long, default_value_t = 50)]
        payload: u32,
        #[arg(long, default_value_t = 8)]
        preamble: u32,
        #[arg(long, default_value_t = 13, allow_hyphen_values = true)]
        tx_dbm: i32,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> sicmab::Result<()> {
    match command {
        Command::Run {
            scenario,
            method,
            seed,
            replications,
            out,
        } => {
            let mut s = match scenario {
                Some(path) => load_scenario(path)?,
                None => Scenario::bundled(),
            };
            if let Some(seed) = seed {
                s.run.base_seed = seed;
            }
            if let Some(n) = replications {
                s.run.replications = n;
            }
            let methods: &[Method] = match method {
                MethodArg::Proposed => &[Method::Proposed],
                MethodArg::Baseline => &[Method::Baseline],
                MethodArg::Both => &[Method::Proposed, Method::Baseline],
            };
            let reports = methods
                .iter()
                .map(|&m| run(&s, m))
                .collect::<sicmab::Result<Vec<_>>>()?;
            emit_csv(&reports, &out)?;
            for r in &reports {
                let latency = r
                    .mean_detection_latency
                    .map_or("nan".to_string(), |v| format!("{v:.1}"));
                println!(
                    "{:<9} success {:.4}  ee {:.1} bit/J  detection latency {latency}",
                    r.method.as_str(),
                    r.overall_success_rate,
                    r.overall_ee
                );
            }
            println!("wrote CSVs to {}", out.display());
        }
        Command::Detect {
            input,
            window,
            shift,
            theta,
        } => {
            let bits = parse_bits(&std::fs::read_to_string(input)?)?;
            let history = AckHistory::from_bits(bits, window, shift)?;
            let r = detect(&history, theta);
            println!("windows     {}", r.window_count);
            println!("sic_h0      {:.6}", r.sic_h0);
            println!("sic_h1_min  {:.6}", r.sic_h1_min);
            println!("best_split  {}", r.best_split);
            println!("statistic   {:.6}", r.statistic);
            println!("detected    {}", r.detected);
        }
        Command::Toa {
            sf,
            bw,
            payload,
            preamble,
            tx_dbm,
        } => {
            let params = RadioParams::new(sf, bw, preamble, payload);
            let c = transmission_cost(&params, &EnergyProfile::default(), tx_dbm)?;
            println!("t_symbol    {:.9} s", c.t_symbol);
            println!("t_preamble  {:.9} s", c.t_preamble);
            println!("t_payload   {:.9} s", c.t_payload);
            println!("t_toa       {:.9} s", c.t_toa);
            println!("e_toa       {:.9} J", c.e_toa);
            println!("e_active    {:.9} J", c.e_active);
        }
    }
    Ok(())
}
