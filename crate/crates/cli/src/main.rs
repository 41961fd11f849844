use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fields_core::service::Session;
use fields_core::simulator::{apply_param, load_scenario, run_scenario, EventTrace, ScenarioConfig};
use fields_service::{serve, ServerOptions};
use serde_json::Value;

/// Exit status for an invalid scenario or parameter.
const EXIT_INVALID: u8 = 2;

#[derive(Parser)]
#[command(name = "fields", version, about = "Proxemic engagement engine: replay, sweep and host scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a scenario and write its event trace as JSON lines.
    Run {
        scenario: PathBuf,
        /// Trace destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Noise seed. Noise itself is switched on by the scenario or `--noise`.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario's tick rate, Hz.
        #[arg(long = "ticks-hz")]
        ticks_hz: Option<f64>,
        /// Enable sensor noise.
        #[arg(long)]
        noise: bool,
    },
    /// Check a scenario file and report every problem found.
    Validate { scenario: PathBuf },
    /// Re-run a scenario once per value of one parameter.
    Sweep {
        scenario: PathBuf,
        /// Parameter path, e.g. `actors[0].k` or `bindings[0].greeting.t1`.
        #[arg(long)]
        param: String,
        /// Comma-separated JSON values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Directory for the per-value traces.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Host a live session over TCP and WebSocket.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

/// An error that maps to [`EXIT_INVALID`].
#[derive(Debug)]
struct Invalid(Vec<String>);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0.join("\n"))
    }
}

impl std::error::Error for Invalid {}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => match err.downcast_ref::<Invalid>() {
            Some(invalid) => {
                for line in &invalid.0 {
                    eprintln!("error: {line}");
                }
                ExitCode::from(EXIT_INVALID)
            }
            None => {
                eprintln!("error: {err:#}");
                ExitCode::FAILURE
            }
        },
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            scenario,
            out,
            seed,
            ticks_hz,
            noise,
        } => {
            let mut config = load(&scenario)?;
            if let Some(seed) = seed {
                config.noise.seed = seed;
            }
            if noise {
                config.noise.enabled = true;
            }
            if let Some(rate) = ticks_hz {
                config.tick_rate = rate;
            }
            config.validate().map_err(|e| Invalid(e.messages()))?;
            let trace = run_scenario(&config).map_err(|e| Invalid(vec![e.to_string()]))?;
            match out {
                Some(path) => {
                    write_trace(&path, &trace)?;
                    print_summary(&path.display().to_string(), &trace);
                }
                None => print!("{}", trace.to_jsonl()),
            }
            Ok(())
        }
        Command::Validate { scenario } => {
            let config = load(&scenario)?;
            println!(
                "ok: {} ({} actors, {} devices, {} bindings, {} ticks, config {})",
                config.name,
                config.actors.len(),
                config.devices.len(),
                config.bindings.len(),
                config.tick_count(),
                &config.config_hash()[..12]
            );
            Ok(())
        }
        Command::Sweep {
            scenario,
            param,
            values,
            out_dir,
        } => sweep(&scenario, &param, &values, &out_dir),
        Command::Serve { port, scenario, host } => {
            let config = load(&scenario)?;
            let session = Session::new(config).map_err(|e| Invalid(e.messages()))?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let server = serve((host.as_str(), port), session, ServerOptions::default()).await?;
                println!("listening on {}", server.local_addr());
                tokio::select! {
                    result = tokio::signal::ctrl_c() => result?,
                    _ = server.stopped() => {}
                }
                server.shutdown().await;
                Ok(())
            })
        }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_scenario(&text).map_err(|e| Invalid(e.messages()).into())
}

fn write_trace(path: &Path, trace: &EventTrace) -> Result<()> {
    std::fs::write(path, trace.to_jsonl()).with_context(|| format!("writing {}", path.display()))
}

fn print_summary(label: &str, trace: &EventTrace) {
    let events: Vec<String> = trace
        .events()
        .iter()
        .map(|e| format!("{:.2}s {}/{} {:?}", e.event.t, e.actor, e.device, e.event.kind))
        .collect();
    println!("{label}: {} records, {} events", trace.records.len(), events.len());
    for line in events {
        println!("  {line}");
    }
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()))
}

fn sweep(scenario: &Path, param: &str, values: &[String], out_dir: &Path) -> Result<()> {
    let base = load(scenario)?;
    let configs = values
        .iter()
        .map(|raw| apply_param(&base, param, &parse_value(raw)).map_err(|e| e.to_string()))
        .collect::<Vec<_>>();
    let problems: Vec<String> = configs.iter().filter_map(|c| c.as_ref().err().cloned()).collect();
    if !problems.is_empty() {
        return Err(Invalid(problems).into());
    }
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let stem = scenario.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    let traces = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| {
                let config = c.as_ref().expect("checked above");
                scope.spawn(move || run_scenario(config))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect::<Vec<_>>()
    });
    for (i, (raw, trace)) in values.iter().zip(traces).enumerate() {
        let trace = trace.map_err(|e| Invalid(vec![e.to_string()]))?;
        let path = out_dir.join(format!("{stem}.{i}.jsonl"));
        write_trace(&path, &trace)?;
        print_summary(&format!("{param} = {} -> {}", raw.trim(), path.display()), &trace);
    }
    Ok(())
}
