use std::fs::{self, File};
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use netsound_core::capture::{generate_scenario, LinkType, PcapWriter, ScenarioSpec};
use netsound_core::service::{self, ServiceConfig};
use netsound_core::soundscape::load_theme;
use netsound_core::ServiceError;

#[derive(Parser)]
#[command(name = "netsound", version, about = "Listen to network traffic as a soundscape")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sonify a pcap capture file.
    Replay {
        #[arg(long)]
        pcap: PathBuf,
        #[command(flatten)]
        pace: PaceArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sonify a seeded synthetic traffic scenario.
    Synth {
        /// Scenario spec (JSON).
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        pace: PaceArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sonify packets from a live capture adapter.
    Live {
        /// Adapter name; `pcap-stdin` reads a pcap stream from standard input.
        #[arg(long)]
        adapter: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check a theme file and report problems.
    ValidateTheme { file: PathBuf },
    /// Write a scenario's packets to a pcap file.
    WritePcap {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Link::Ethernet)]
        link: Link,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Link {
    Ethernet,
    Raw,
}

#[derive(Args)]
struct PaceArgs {
    /// Replay speed factor (2 = twice real time).
    #[arg(long, conflicts_with = "offline")]
    speed: Option<f64>,
    /// Process as fast as possible.
    #[arg(long)]
    offline: bool,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    wav: Option<PathBuf>,
    /// Console WebSocket endpoint, e.g. 127.0.0.1:8765.
    #[arg(long)]
    listen: Option<String>,
    /// Built-in theme name or theme file path.
    #[arg(long)]
    theme: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write each telemetry frame as a JSON line.
    #[arg(long)]
    telemetry_log: Option<PathBuf>,
    /// Home network prefix (repeatable).
    #[arg(long = "home-net")]
    home_net: Vec<String>,
    /// Window length in seconds.
    #[arg(long)]
    window: Option<f64>,
    /// Render threads.
    #[arg(long)]
    workers: Option<usize>,
}

fn config_error(msg: impl Into<String>) -> ServiceError {
    ServiceError::Config(msg.into())
}

fn read_scenario(path: &Path) -> Result<ScenarioSpec, ServiceError> {
    let text = fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    ScenarioSpec::from_json(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn apply_common(cfg: &mut ServiceConfig, c: &CommonArgs) -> Result<(), ServiceError> {
    if let Some(wav) = &c.wav {
        cfg.outputs.wav = Some(wav.clone());
    }
    if let Some(listen) = &c.listen {
        cfg.outputs.listen = Some(listen.clone());
    }
    if let Some(log) = &c.telemetry_log {
        cfg.outputs.telemetry_log = Some(log.clone());
    }
    if let Some(theme) = &c.theme {
        cfg.theme = theme.clone();
    }
    if let Some(seed) = c.seed {
        cfg.render.seed = seed;
    }
    if !c.home_net.is_empty() {
        cfg.home_networks = c
            .home_net
            .iter()
            .map(|p| p.parse().map_err(|_| config_error(format!("invalid home network {p:?}"))))
            .collect::<Result<_, _>>()?;
    }
    if let Some(w) = c.window {
        cfg.analysis.window_len = w;
    }
    if let Some(n) = c.workers {
        cfg.render.workers = n;
    }
    Ok(())
}

fn apply_pace(cfg: &mut ServiceConfig, p: &PaceArgs) {
    if let Some(s) = p.speed {
        cfg.speed = s;
        cfg.offline = false;
    }
    if p.offline {
        cfg.offline = true;
    }
}

fn base_config(c: &CommonArgs) -> Result<ServiceConfig, ServiceError> {
    match &c.config {
        Some(path) => ServiceConfig::from_file(path),
        None => Ok(ServiceConfig::default()),
    }
}

fn build_config(cmd: &Command) -> Result<ServiceConfig, ServiceError> {
    let mut cfg;
    match cmd {
        Command::Replay { pcap, pace, common } => {
            cfg = base_config(common)?;
            cfg.pcap = Some(pcap.clone());
            apply_pace(&mut cfg, pace);
            apply_common(&mut cfg, common)?;
        }
        Command::Synth { scenario, pace, common } => {
            cfg = base_config(common)?;
            let mut spec = read_scenario(scenario)?;
            if let Some(seed) = common.seed {
                spec.seed = seed;
            }
            cfg.scenario = Some(spec);
            apply_pace(&mut cfg, pace);
            apply_common(&mut cfg, common)?;
        }
        Command::Live { adapter, common } => {
            cfg = base_config(common)?;
            cfg.live = Some(adapter.clone());
            apply_common(&mut cfg, common)?;
        }
        Command::ValidateTheme { .. } | Command::WritePcap { .. } => unreachable!("not a service command"),
    }
    Ok(cfg)
}

fn run_service(cfg: ServiceConfig) -> Result<(), ServiceError> {
    let handle = service::start(cfg, Vec::new())?;
    if let Some(addr) = handle.local_addr() {
        announce(addr);
    }
    let stop = handle.stop_flag();
    if let Err(e) = ctrlc::set_handler(move || stop.store(true, std::sync::atomic::Ordering::SeqCst)) {
        log::warn!("cannot install signal handler: {e}");
    }
    let summary = handle.wait()?;
    println!("{summary}");
    Ok(())
}

fn announce(addr: SocketAddr) {
    eprintln!("listening on ws://{addr}");
}

fn validate_theme(file: &Path) -> Result<(), ServiceError> {
    let text = fs::read_to_string(file).map_err(|e| config_error(format!("cannot read {}: {e}", file.display())))?;
    let loaded = load_theme(&text, file.parent())?;
    for w in &loaded.warnings {
        println!("warning: {w}");
    }
    let t = &loaded.theme;
    println!("ok: theme {:?} with {} voices ({})", t.name, t.voices.len(), t.voice_ids().collect::<Vec<_>>().join(", "));
    Ok(())
}

fn write_pcap(scenario: &Path, out: &Path, seed: Option<u64>, link: Link) -> Result<(), ServiceError> {
    let mut spec = read_scenario(scenario)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let link = match link {
        Link::Ethernet => LinkType::Ethernet,
        Link::Raw => LinkType::RawIp,
    };
    let file = File::create(out).map_err(|e| config_error(format!("cannot create {}: {e}", out.display())))?;
    let mut w = PcapWriter::with_link(BufWriter::new(file), link)?;
    for rec in generate_scenario(&spec)? {
        w.write_packet(&rec)?;
    }
    let n = w.records_written();
    w.flush()?;
    println!("wrote {n} packets to {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::ValidateTheme { file } => validate_theme(file),
        Command::WritePcap {
            scenario,
            out,
            seed,
            link,
        } => write_pcap(scenario, out, *seed, *link),
        cmd => build_config(cmd).and_then(run_service),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("netsound: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
