//! `twftt`: simulate two-way time transfer, detect asymmetric delay attacks,
//! compute stability metrics, and run the UDP testbed roles.
//!
//! All delays and thresholds on the command line are integer picoseconds;
//! intervals are in seconds.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use twftt_core::detector::{detect_step, DetectorConfig, DetectorState};
use twftt_core::harness::trace::{ps_to_s, round_ps};
use twftt_core::harness::{
    preset, read_trace, run_scenario, write_trace, write_trace_to, ScenarioConfig, PRESET_NAMES,
};
use twftt_core::metrics::{
    precision_recall, stability_curve, StabilityMetric, TimeErrorSeries,
};
use twftt_core::netlab::proxy::{read_truth_log, write_truth_log};
use twftt_core::netlab::{run_node, run_proxy, NodeConfig, ProxyConfig, Role};

#[derive(Parser)]
#[command(
    name = "twftt",
    about = "Two-way fiber-optic time transfer: simulation, attack detection, stability metrics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop scenario and emit a trace CSV
    Sim(SimArgs),
    /// Compute TDEV/MTIE curves or precision/recall from a trace CSV
    Metrics(MetricsArgs),
    /// Run the detector offline over a measurement CSV
    Detect(DetectArgs),
    /// Run one testbed node (local carries the simulated clock and detector)
    NetlabNode(NetlabNodeArgs),
    /// Run the adversary proxy between the two testbed nodes
    NetlabProxy(NetlabProxyArgs),
    /// List the built-in scenario presets
    Presets,
}

#[derive(Args)]
struct SimArgs {
    /// Scenario config JSON (searched in $TWFTT_CONFIG_DIR if not found)
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario name (see `twftt presets`)
    #[arg(long)]
    preset: Option<String>,
    /// Override the scenario seed
    #[arg(long)]
    seed: Option<u64>,
    /// Trace CSV output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum MetricName {
    Tdev,
    Mtie,
}

#[derive(Args)]
struct MetricsArgs {
    /// Trace CSV produced by `sim` or `netlab-node`
    #[arg(long = "in")]
    input: PathBuf,
    /// Stability metric to evaluate
    #[arg(long, value_enum, required_unless_present = "precision_recall")]
    metric: Option<MetricName>,
    /// Averaging factors n (in samples), comma-separated, strictly increasing
    #[arg(long, value_delimiter = ',')]
    taus: Vec<usize>,
    /// Score the trace's verdicts against a ground-truth log instead
    #[arg(long, conflicts_with = "metric")]
    precision_recall: bool,
    /// Ground-truth CSV (epoch_index, delay_ps, direction), e.g. the proxy log
    #[arg(long, requires = "precision_recall")]
    truth: Option<PathBuf>,
    /// Curve CSV output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    /// Measurement CSV: columns epoch_index and theta_m_ps (a full trace
    /// CSV works too)
    #[arg(long = "in")]
    input: PathBuf,
    /// Attack index threshold, picoseconds
    #[arg(long = "threshold-ps", default_value_t = 100)]
    threshold_ps: i64,
    /// Skew blend weight w in [0, 1]
    #[arg(long, default_value_t = 0.15)]
    w: f64,
    /// Attack-free warm-up epochs
    #[arg(long, default_value_t = 20)]
    warmup: u64,
    /// Synchronization interval between rows, seconds
    #[arg(long = "tau-s", default_value_t = 1.0)]
    tau_s: f64,
    /// Decision CSV output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NetlabNodeArgs {
    /// Node role
    #[arg(long, value_enum)]
    role: RoleArg,
    /// Node config JSON (searched in $TWFTT_CONFIG_DIR if not found)
    #[arg(long)]
    config: PathBuf,
    /// Trace CSV output path, local role only (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum RoleArg {
    Local,
    Remote,
}

#[derive(Args)]
struct NetlabProxyArgs {
    /// Proxy config JSON with endpoints and attack policy
    #[arg(long)]
    policy: PathBuf,
    /// Ground-truth log CSV output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    /// Bad invocation: wrong flag combinations or values. Exit code 2,
    /// matching the parser's own usage errors.
    Usage(String),
    /// Everything that goes wrong while executing. Exit code 1.
    Runtime(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn rt(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

/// Resolves a config path, falling back to $TWFTT_CONFIG_DIR for relative
/// paths that do not exist as given.
fn resolve_config(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("TWFTT_CONFIG_DIR") {
        Some(dir) => Path::new(&dir).join(path),
        None => path.to_path_buf(),
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Sim(args) => cmd_sim(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Detect(args) => cmd_detect(args),
        Command::NetlabNode(args) => cmd_netlab_node(args),
        Command::NetlabProxy(args) => cmd_netlab_proxy(args),
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn cmd_sim(args: SimArgs) -> Result<(), CliError> {
    let mut cfg: ScenarioConfig = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let path = resolve_config(path);
            ScenarioConfig::from_json(&read_to_string(&path)?)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => preset(name).map_err(rt)?,
        _ => return Err(usage("exactly one of --config or --preset is required")),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let trace = run_scenario(&cfg).map_err(rt)?;
    match &args.out {
        Some(path) => write_trace(&trace, path).map_err(rt),
        None => write_trace_to(&trace, std::io::stdout().lock()).map_err(rt),
    }
}

fn cmd_metrics(args: MetricsArgs) -> Result<(), CliError> {
    let trace = read_trace(&args.input).map_err(rt)?;

    if args.precision_recall {
        let truth_path = args
            .truth
            .as_ref()
            .ok_or_else(|| usage("--precision-recall requires --truth"))?;
        let truth = read_truth_log(truth_path).map_err(rt)?;
        if truth.len() != trace.len() {
            return Err(rt(format!(
                "truth log has {} epochs, trace has {}",
                truth.len(),
                trace.len()
            )));
        }
        let actual: Vec<bool> = truth.iter().map(|r| r.delay_ps != 0).collect();
        let detected: Vec<bool> = trace.iter().map(|r| r.attack_detected).collect();
        let tally = precision_recall(&actual, &detected).map_err(rt)?;
        let fmt = |v: Option<f64>| v.map_or("/".to_string(), |x| format!("{x:.6}"));
        let text = format!(
            "tp,fp,fn,tn,precision,recall\n{},{},{},{},{},{}\n",
            tally.true_positives,
            tally.false_positives,
            tally.false_negatives,
            tally.true_negatives,
            fmt(tally.precision),
            fmt(tally.recall),
        );
        return emit(&text, args.out.as_deref());
    }

    let metric = match args.metric.ok_or_else(|| usage("--metric is required"))? {
        MetricName::Tdev => StabilityMetric::Tdev,
        MetricName::Mtie => StabilityMetric::Mtie,
    };
    if args.taus.is_empty() {
        return Err(usage("--taus is required for stability metrics"));
    }
    let samples: Vec<f64> = trace.iter().map(|r| ps_to_s(r.theta_true_ps)).collect();
    let tau0 = if trace.len() >= 2 {
        ps_to_s(trace[1].time_ps - trace[0].time_ps)
    } else {
        1.0
    };
    let series = TimeErrorSeries::new(samples, tau0).map_err(rt)?;
    let curve = stability_curve(&series, metric, &args.taus).map_err(rt)?;
    let mut text = String::from("tau_s,value_s\n");
    for (tau, value) in &curve.points {
        text.push_str(&format!("{tau},{value:e}\n"));
    }
    emit(&text, args.out.as_deref())
}

fn cmd_detect(args: DetectArgs) -> Result<(), CliError> {
    if args.threshold_ps <= 0 {
        return Err(usage("--threshold-ps must be > 0"));
    }
    let cfg = DetectorConfig {
        threshold: ps_to_s(args.threshold_ps),
        weight: args.w,
        warmup_epochs: args.warmup,
        use_gamma_e_for_prediction: false,
    };

    let mut rdr = csv::Reader::from_path(&args.input)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.input.display())))?;
    let headers = rdr
        .headers()
        .map_err(rt)?
        .clone();
    let theta_col = headers
        .iter()
        .position(|h| h == "theta_m_ps")
        .ok_or_else(|| rt("input must have a theta_m_ps column"))?;
    let epoch_col = headers.iter().position(|h| h == "epoch_index");

    let mut text = String::from(
        "epoch_index,theta_m_ps,u_theta_ps,offset_f_ps,i_attack_ps,gamma_e,attack_detected\n",
    );
    let mut state = DetectorState::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| CliError::Runtime(format!("{}: line {}: {e}", args.input.display(), i + 2)))?;
        let parse = |col: usize| -> Result<i64, CliError> {
            row.get(col)
                .ok_or_else(|| rt(format!("line {}: missing column {col}", i + 2)))?
                .parse::<i64>()
                .map_err(|e| CliError::Runtime(format!("{}: line {}: {e}", args.input.display(), i + 2)))
        };
        let theta_m = ps_to_s(parse(theta_col)?);
        let epoch = match epoch_col {
            Some(c) => parse(c)? as u64,
            None => i as u64,
        };
        let (d, next) = detect_step(&state, theta_m, args.tau_s, &cfg).map_err(rt)?;
        state = next;
        text.push_str(&format!(
            "{},{},{},{},{},{:e},{}\n",
            epoch,
            round_ps(theta_m),
            round_ps(d.u_theta),
            round_ps(d.offset_f),
            round_ps(d.i_attack),
            d.gamma_e,
            d.attack_detected,
        ));
    }
    emit(&text, args.out.as_deref())
}

fn cmd_netlab_node(args: NetlabNodeArgs) -> Result<(), CliError> {
    let path = resolve_config(&args.config);
    let mut cfg: NodeConfig = serde_json::from_str(&read_to_string(&path)?)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    cfg.role = match args.role {
        RoleArg::Local => Role::Local,
        RoleArg::Remote => Role::Remote,
    };
    let run = run_node(&cfg).map_err(rt)?;
    eprintln!(
        "netlab-node: {} epochs traced, {} missing, {} malformed datagrams",
        run.trace.len(),
        run.missing_epochs.len(),
        run.malformed
    );
    if cfg.role == Role::Local {
        match &args.out {
            Some(path) => write_trace(&run.trace, path).map_err(rt)?,
            None => {
                write_trace_to(&run.trace, std::io::stdout().lock()).map_err(rt)?
            }
        }
    }
    Ok(())
}

fn cmd_netlab_proxy(args: NetlabProxyArgs) -> Result<(), CliError> {
    let path = resolve_config(&args.policy);
    let cfg: ProxyConfig = serde_json::from_str(&read_to_string(&path)?)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let stats = run_proxy(&cfg).map_err(rt)?;
    eprintln!(
        "netlab-proxy: {} datagrams forwarded, {} malformed",
        stats.forwarded, stats.malformed
    );
    match &args.out {
        Some(path) => write_truth_log(&stats.truth, path).map_err(rt),
        None => {
            let mut text = String::from("epoch_index,delay_ps,direction\n");
            for r in &stats.truth {
                let dir = match r.direction {
                    Some(twftt_core::AttackDirection::BToA) => "b_to_a",
                    Some(twftt_core::AttackDirection::AToB) => "a_to_b",
                    None => "",
                };
                text.push_str(&format!("{},{},{dir}\n", r.epoch_index, r.delay_ps));
            }
            print!("{text}");
            Ok(())
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
