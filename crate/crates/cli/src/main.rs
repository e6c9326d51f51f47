//! `kprobe` command-line tool.

mod cache;
mod svg;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use kprobe_core::behavior::{self, ClassEstimate, ClassifyParams, CURVE_CSV_HEADER};
use kprobe_core::envelope::{self, AgentKind, AgentSpec, StimulusSpec};
use kprobe_core::lattice::{self, CodingTable, Lattice};
use kprobe_core::{eca, programmability, CompressorId, Configuration, Rule};

use cache::RunCache;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] kprobe_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(kprobe_core::Error::Domain(_)) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "kprobe", version, about = "Compression-based complexity probes for cellular automata, lattices and agents")]
struct Cli {
    /// Skip the run cache for this invocation.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitMode {
    Single,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagramFormat {
    Ascii,
    Packed,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum StimulusArg {
    Constant,
    Periodic,
    Random,
}

#[derive(clap::Args)]
struct InitArgs {
    #[arg(long, value_enum, default_value = "random")]
    init: InitMode,
    #[arg(long, default_value_t = behavior::DEFAULT_SEED)]
    seed: u64,
    /// Density of ones in a random initial condition.
    #[arg(long, default_value_t = 0.5)]
    density: f64,
}

impl InitArgs {
    fn config(&self, width: usize) -> CliResult<Configuration> {
        Ok(match self.init {
            InitMode::Single => eca::single_cell_config(width)?,
            InitMode::Random => eca::random_config(width, self.density, self.seed)?,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one rule and write its space-time diagram.
    Simulate {
        #[arg(long)]
        rule: u8,
        #[arg(long, default_value_t = 101)]
        width: usize,
        #[arg(long, default_value_t = 100)]
        t: usize,
        #[command(flatten)]
        init: InitArgs,
        #[arg(long, value_enum, default_value = "ascii")]
        format: DiagramFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compressed size of the growing evolution prefix, as CSV.
    Curve {
        #[arg(long)]
        rule: u8,
        #[arg(long, default_value_t = 101)]
        width: usize,
        #[arg(long, default_value_t = 100)]
        t_max: usize,
        #[arg(long, default_value_t = 10)]
        t_step: usize,
        #[command(flatten)]
        init: InitArgs,
        #[arg(long, default_value = "builtin-lzss")]
        compressor: CompressorId,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Class estimate of one rule, as JSON.
    Classify {
        #[arg(long)]
        rule: u8,
        #[command(flatten)]
        params: ClassifyArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Class estimates of all 256 rules, as CSV in rule order.
    Scan {
        #[command(flatten)]
        params: ClassifyArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Programmability report of one rule, as JSON.
    Programmability {
        #[arg(long)]
        rule: u8,
        #[arg(long, default_value_t = 12)]
        width: usize,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        t_max: usize,
        #[arg(long, default_value_t = 20)]
        t_step: usize,
        #[arg(long, default_value = "builtin-lzss")]
        compressor: CompressorId,
        /// Also write the `t,d` points as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a coding-theorem table from the rule ensemble.
    Table {
        #[arg(long, default_value_t = lattice::DEFAULT_BLOCK_SIZE)]
        block_size: usize,
        #[arg(long, default_value_t = lattice::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = lattice::DEFAULT_TABLE_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Block-decomposition complexity of a lattice file, as JSON.
    Lattice {
        /// Lattice as rows of `0`/`1`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value = "builtin-lzss")]
        compressor: CompressorId,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Variability, controllability and label of a reference agent, as JSON.
    Agent {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Comma-separated stimulus seeds.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        #[arg(long, default_value = "builtin-lzss")]
        compressor: CompressorId,
        /// Coding table; adds the summed plane complexity per stream.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trajectory of a reference agent under one stimulus stream, as CSV.
    Trajectory {
        #[arg(long)]
        kind: String,
        #[arg(long, value_enum, default_value = "random")]
        stimulus: StimulusArg,
        #[arg(long, default_value_t = envelope::ASSESS_STIMULUS_PERIOD)]
        period: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Phase-space complexity of a reference agent across environments of
    /// increasing stimulus entropy, as JSON.
    Sweep {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "builtin-lzss")]
        compressor: CompressorId,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct ClassifyArgs {
    #[arg(long, default_value_t = 100)]
    width: usize,
    #[arg(long, default_value_t = 100)]
    t: usize,
    #[arg(long, default_value_t = 10)]
    n_inputs: usize,
    #[arg(long, default_value_t = behavior::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "builtin-lzss")]
    compressor: CompressorId,
}

impl ClassifyArgs {
    fn params(&self) -> ClassifyParams {
        ClassifyParams {
            width: self.width,
            t_max: self.t,
            n_inputs: self.n_inputs,
            seed: self.seed,
            compressor: self.compressor,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kprobe: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => {
            let mut stdout = io::stdout().lock();
            match stdout.write_all(bytes).and_then(|_| stdout.flush()) {
                // a closed downstream pipe is not a failure of the run
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    Ok(())
}

fn json_line(value: &impl Serialize) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Reads an input file; a missing file is a usage error.
fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => CliError::Usage(format!("{}: no such file", path.display())),
        _ => CliError::Io(e),
    })
}

fn load_table(path: &Path) -> CliResult<CodingTable> {
    Ok(CodingTable::parse(&read_input(path)?)?)
}

fn agent_kind(name: &str) -> CliResult<AgentKind> {
    name.parse()
        .map_err(|_| CliError::Usage(format!("unknown agent kind {name:?} (periodic, random, reactive)")))
}

/// Payload from the cache when present, otherwise computed and stored.
fn cached(
    cache: Option<&RunCache>,
    command: &str,
    params: Value,
    compressor: CompressorId,
    compute: impl FnOnce() -> CliResult<Value>,
) -> CliResult<(Value, bool)> {
    let key = cache::run_key(command, &params, compressor.name());
    if let Some(hit) = cache.and_then(|c| c.lookup(&key)) {
        return Ok((hit, true));
    }
    let payload = compute()?;
    if let Some(c) = cache {
        if let Err(e) = c.store(&key, &payload) {
            eprintln!("kprobe: run cache not updated: {e}");
        }
    }
    Ok((payload, false))
}

fn with_cached_flag(mut payload: Value, hit: bool) -> Value {
    if let Value::Object(map) = &mut payload {
        map.insert("cached".into(), Value::Bool(hit));
    }
    payload
}

fn classification_json(rule: u8, est: &ClassEstimate, params: &ClassifyParams) -> Value {
    json!({
        "rule": rule,
        "label": est.label,
        "terminal_ratio": est.terminal_ratio,
        "attractor_ratio": est.attractor_ratio,
        "slope": est.slope_bits_per_step,
        "input_variability": est.input_variability,
        "params": params,
    })
}

const SCAN_CSV_HEADER: &str = "rule,label,terminal_ratio,attractor_ratio,slope,input_variability\n";

fn scan_csv(params: &ClassifyParams) -> CliResult<String> {
    let th = &kprobe_core::calibration::frozen().classification;
    let rows = (0..=255u8)
        .into_par_iter()
        .map(|r| behavior::classify_with(&Rule::from_u8(r), params, th).map(|e| (r, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::from(SCAN_CSV_HEADER);
    for (r, e) in rows {
        out.push_str(&format!(
            "{r},{},{:.6},{:.6},{:.6},{:.6}\n",
            e.label.as_str(),
            e.terminal_ratio,
            e.attractor_ratio,
            e.slope_bits_per_step,
            e.input_variability
        ));
    }
    Ok(out)
}

fn run(cli: Cli) -> CliResult<()> {
    let cache = if cli.no_cache { None } else { RunCache::from_env() };
    let cache = cache.as_ref();
    match cli.command {
        Command::Simulate {
            rule,
            width,
            t,
            init,
            format,
            out,
        } => {
            let diagram = eca::evolve(&Rule::from_u8(rule), &init.config(width)?, t);
            let bytes = match format {
                DiagramFormat::Ascii => diagram.to_ascii(),
                DiagramFormat::Packed => diagram.to_packed(),
                DiagramFormat::Svg => svg::render(&diagram).into_bytes(),
            };
            emit(&out, &bytes)
        }
        Command::Curve {
            rule,
            width,
            t_max,
            t_step,
            init,
            compressor,
            out,
        } => {
            let curve = behavior::compression_curve(
                &Rule::from_u8(rule),
                &init.config(width)?,
                t_max,
                t_step,
                compressor,
            )?;
            let text = format!("{CURVE_CSV_HEADER}{}", curve.csv_rows(init.seed));
            emit(&out, text.as_bytes())
        }
        Command::Classify { rule, params, out } => {
            let p = params.params();
            let (payload, hit) = cached(cache, "classify", json!({"rule": rule, "params": p}), p.compressor, || {
                let est = behavior::classify_with(
                    &Rule::from_u8(rule),
                    &p,
                    &kprobe_core::calibration::frozen().classification,
                )?;
                Ok(classification_json(rule, &est, &p))
            })?;
            emit(&out, &json_line(&with_cached_flag(payload, hit))?)
        }
        Command::Scan { params, out } => {
            let p = params.params();
            let (payload, hit) = cached(cache, "scan", json!(p), p.compressor, || Ok(Value::String(scan_csv(&p)?)))?;
            if hit {
                eprintln!("kprobe: scan served from run cache");
            }
            let text = payload
                .as_str()
                .ok_or_else(|| CliError::Usage("corrupt cached scan record".into()))?
                .to_string();
            emit(&out, text.as_bytes())
        }
        Command::Programmability {
            rule,
            width,
            n,
            t_max,
            t_step,
            compressor,
            csv,
            out,
        } => {
            let params = json!({"rule": rule, "width": width, "n": n, "t_max": t_max, "t_step": t_step});
            let (payload, hit) = cached(cache, "programmability", params, compressor, || {
                let report =
                    programmability::programmability_coefficient(&Rule::from_u8(rule), width, n, t_max, t_step, compressor)?;
                Ok(serde_json::to_value(report.to_record())?)
            })?;
            if let Some(path) = csv {
                let record: programmability::ReportRecord = serde_json::from_value(payload.clone())?;
                let mut text = String::from("t,d\n");
                for p in &record.points {
                    text.push_str(&format!("{},{}\n", p.t, p.d));
                }
                fs::write(path, text)?;
            }
            emit(&out, &json_line(&with_cached_flag(payload, hit))?)
        }
        Command::Table {
            block_size,
            samples,
            seed,
            out,
        } => {
            let table = lattice::build_coding_table(block_size, samples, seed)?;
            emit(&out, table.to_text().as_bytes())
        }
        Command::Lattice {
            input,
            table,
            compressor,
            out,
        } => {
            let table = load_table(&table)?;
            let grid = Lattice::parse_text(&read_input(&input)?)?;
            emit(&out, &json_line(&lattice::bdm_with(&grid, &table, compressor))?)
        }
        Command::Agent {
            kind,
            steps,
            seeds,
            compressor,
            table,
            out,
        } => {
            let spec = AgentSpec::reference(agent_kind(&kind)?);
            let table = table.as_deref().map(load_table).transpose()?;
            let params = json!({"kind": kind, "steps": steps, "seeds": seeds, "table": table.as_ref().map(|t| t.to_text())});
            let (payload, hit) = cached(cache, "agent", params, compressor, || {
                let assessment = envelope::assess(&spec, steps, &seeds, compressor)?;
                let mut value = serde_json::to_value(&assessment)?;
                if let Some(table) = &table {
                    let bdm3 = envelope::assessment_streams(&seeds)
                        .iter()
                        .map(|s| {
                            let t = envelope::simulate_agent(&spec, &s.generate(steps)?, steps)?;
                            Ok(envelope::behavioral_complexity(&t, compressor, table)?.bdm3)
                        })
                        .collect::<CliResult<Vec<f64>>>()?;
                    value["per_stream_bdm3"] = json!(bdm3);
                }
                Ok(value)
            })?;
            emit(&out, &json_line(&with_cached_flag(payload, hit))?)
        }
        Command::Trajectory {
            kind,
            stimulus,
            period,
            seed,
            steps,
            out,
        } => {
            let spec = AgentSpec::reference(agent_kind(&kind)?);
            let stream = match stimulus {
                StimulusArg::Constant => StimulusSpec::constant(seed),
                StimulusArg::Periodic => StimulusSpec::periodic(period, seed),
                StimulusArg::Random => StimulusSpec::random(seed),
            };
            let trajectory = envelope::simulate_agent(&spec, &stream.generate(steps)?, steps)?;
            emit(&out, trajectory.to_csv().as_bytes())
        }
        Command::Sweep {
            kind,
            steps,
            seed,
            compressor,
            out,
        } => {
            let spec = AgentSpec::reference(agent_kind(&kind)?);
            let envs = envelope::entropy_ordered_environments(seed);
            let c_bits = envelope::environment_sweep_with(&spec, &envs, steps, compressor)?;
            let value = json!({"agent": spec.kind, "environments": envs, "c_bits": c_bits});
            emit(&out, &json_line(&value)?)
        }
    }
}
