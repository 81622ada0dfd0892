//! `qudesign`: seeded experiment runner for qudit designs.

mod report;
mod specs;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qudit_designs::constructions::WelchRow;
use qudit_designs::linalg::RandomSource;
use qudit_designs::metrics::{
    haar_trace_moments_mc, parse_grid, spacing_density_test, FramePotentialReport, McEstimate,
};
use qudit_designs::rb::{
    clifford_blocks, compare_with_oracle, rb_simulate, su2_blocks, su2_rb_simulate, BlockFit, NoiseModel,
    OracleComparison, RBConfig, RbData,
};
use qudit_designs::spin::{loglog_slope, welch_ratio_experiment, WelchPoint};
use qudit_designs::DesignError;

use report::{ExperimentReport, RunManifest, SCHEMA};
use specs::{parse_lengths, EnsembleSpec, GroupSpec};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Design(DesignError),
    Io(std::io::Error),
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        CliError::Design(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Design(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Design(e) => match e {
                DesignError::InvalidArgument(_) | DesignError::InvalidInput(_) | DesignError::InvalidDimension(_) => 2,
                DesignError::ResourceBound(_) | DesignError::GroupOverflow { .. } => 3,
                DesignError::FitFailure(_) => 4,
                _ => 1,
            },
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Design(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "qudesign", version, about = "Frame potentials, Welch tests, character RB and native-gate circuits for qudits")]
struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; stdout when absent. A manifest is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (all cores when absent).
    #[arg(long, global = true, env = "QUDESIGN_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Welch test of a state ensemble.
    Welch(WelchArgs),
    /// Frame-potential sweep over a real t grid.
    Frame(FrameArgs),
    /// Character randomized benchmarking.
    Rb(RbArgs),
    /// Welch ratio of SNAP/displacement circuit outputs.
    Circuit(CircuitArgs),
    /// Monte Carlo Haar trace moments against Γ(t+1).
    HaarMc(HaarMcArgs),
    /// Kolmogorov–Smirnov test of qubit eigenvalue spacings.
    Spacing(SpacingArgs),
    /// Rerun the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

#[derive(Args, Debug)]
struct WelchArgs {
    /// wf:p, phase:d:p, sic2, mub:p, stab:n, project:<ensemble>:d or file:path
    #[arg(long)]
    ensemble: String,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args, Debug)]
struct FrameArgs {
    /// clifford:d, cyclic:d, pauli:d, sl2f5 or su2mc:S
    #[arg(long)]
    group: String,
    /// start:stop:step
    #[arg(long = "t-grid")]
    t_grid: String,
    /// Samples per t for Monte Carlo groups.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RbMode {
    Exact,
    Shots,
}

#[derive(Args, Debug)]
struct RbArgs {
    /// clifford:d or su2:S
    #[arg(long)]
    group: String,
    /// none, depol:p, over:delta or damp:gamma
    #[arg(long, default_value = "none")]
    noise: String,
    #[arg(long, default_value = "1,2,4,8,16,32")]
    lengths: String,
    #[arg(long, value_enum, default_value_t = RbMode::Exact)]
    mode: RbMode,
    #[arg(long, default_value_t = 1000)]
    shots: u64,
    #[arg(long, default_value_t = 200)]
    sequences: usize,
}

#[derive(Args, Debug)]
struct CircuitArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    t: usize,
    #[arg(long)]
    depth: usize,
    #[arg(long, default_value_t = 4096)]
    samples: usize,
}

#[derive(Args, Debug)]
struct HaarMcArgs {
    #[arg(long)]
    d: usize,
    #[arg(long = "t-grid")]
    t_grid: String,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
}

#[derive(Args, Debug)]
struct SpacingArgs {
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

/// Text written to the main output plus optional side files.
struct Output {
    body: String,
    side: Vec<(&'static str, String)>,
    /// Error to report after all outputs are written.
    deferred: Option<CliError>,
}

impl Output {
    fn body(body: String) -> Self {
        Self { body, side: Vec::new(), deferred: None }
    }
}

fn json<T: Serialize>(manifest: &RunManifest, data: T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(&ExperimentReport { schema: SCHEMA, manifest, data })?)
}

fn grid(spec: &str) -> Result<Vec<f64>, CliError> {
    parse_grid(spec).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_welch(a: &WelchArgs, fmt: Format, m: &mut RunManifest) -> Result<Output, CliError> {
    m.param("ensemble", &a.ensemble);
    m.param("t", a.t);
    m.param("tol", a.tol);
    let spec = EnsembleSpec::parse(&a.ensemble)?;
    if !(a.t > 0.0) {
        return Err(CliError::Usage("t must be positive".into()));
    }
    let needs_integer = matches!(spec, EnsembleSpec::Project { .. });
    if needs_integer && a.t.fract() != 0.0 {
        return Err(CliError::Usage("projected ensembles need an integer t".into()));
    }
    let ens = spec.build(a.t as usize)?;
    let row = WelchRow::evaluate(&a.ensemble, &ens, a.t, a.tol)?;
    Ok(Output::body(match fmt {
        Format::Csv => format!("{}\n{}\n", WelchRow::CSV_HEADER, row.csv_line()),
        Format::Json => json(m, &row)?,
    }))
}

fn cmd_frame(a: &FrameArgs, fmt: Format, m: &mut RunManifest) -> Result<Output, CliError> {
    m.param("group", &a.group);
    m.param("t_grid", &a.t_grid);
    let spec = GroupSpec::parse(&a.group)?;
    let ts = grid(&a.t_grid)?;
    let report = match (&spec, spec.finite()?) {
        (_, Some(g)) => FramePotentialReport::for_group(&a.group, &g, &ts)?,
        (GroupSpec::Su2Mc(spin), None) => {
            m.param("samples", a.samples);
            let source = RandomSource::new(m.seed);
            let est = ts
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    qudit_designs::rb::su2_frame_potential_mc(*spin, t, a.samples, source.split(i as u64))
                })
                .collect::<Result<Vec<_>, _>>()?;
            FramePotentialReport::from_estimates(&a.group, spin.dim(), &est)?
        }
        _ => return Err(CliError::Usage(format!("`{}` is not a frame-potential group", a.group))),
    };
    Ok(Output::body(match fmt {
        Format::Csv => report.to_csv(),
        Format::Json => json(m, &report)?,
    }))
}

#[derive(Serialize)]
struct RbSummary<'a> {
    data: &'a RbData,
    fits: &'a [BlockFit],
    oracle: &'a [OracleComparison],
}

fn cmd_rb(a: &RbArgs, fmt: Format, m: &mut RunManifest) -> Result<Output, CliError> {
    m.param("group", &a.group);
    m.param("noise", &a.noise);
    m.param("lengths", &a.lengths);
    m.param("mode", a.mode);
    m.param("sequences", a.sequences);
    if a.mode == RbMode::Shots {
        m.param("shots", a.shots);
    }
    let lengths = parse_lengths(&a.lengths)?;
    let source = RandomSource::new(m.seed);
    let spec = GroupSpec::parse(&a.group)?;
    let (data, blocks, noise) = match spec {
        GroupSpec::Clifford(d) => {
            let g = qudit_designs::groups::clifford_group(d)?;
            let blocks = clifford_blocks(d)?;
            let noise = NoiseModel::parse(&a.noise, d)?;
            let mut cfg = RBConfig::ground_state(&a.group, d, lengths, a.sequences, source);
            if a.mode == RbMode::Shots {
                cfg.shots = Some(a.shots);
            }
            (rb_simulate(&g, &blocks, &cfg, &noise)?, blocks, noise)
        }
        GroupSpec::Su2(spin) => {
            if a.mode == RbMode::Shots {
                return Err(CliError::Usage("SU(2) RB supports exact mode only".into()));
            }
            let noise = NoiseModel::parse(&a.noise, spin.dim())?;
            let cfg = RBConfig::spin_highest_weight(spin, lengths, a.sequences, source);
            (su2_rb_simulate(spin, &noise, &cfg)?, su2_blocks(spin)?, noise)
        }
        _ => return Err(CliError::Usage(format!("`{}` is not an RB group (use clifford:d or su2:S)", a.group))),
    };
    let (fits, deferred) = match data.fit() {
        Ok(f) => (f, None),
        Err(e) => (Vec::new(), Some(CliError::from(e))),
    };
    let oracle = compare_with_oracle(&fits, &blocks, &noise);
    for c in &oracle {
        eprintln!("block {:>2}: fitted f = {:.6}  oracle f = {:.6}  |diff| = {:.2e}", c.label, c.fitted, c.oracle, c.abs_error);
    }
    let summary = RbSummary { data: &data, fits: &fits, oracle: &oracle };
    let mut out = match fmt {
        Format::Csv => {
            let mut o = Output::body(data.to_csv());
            o.side.push(("fit.json", serde_json::to_string_pretty(&summary.fits_only())?));
            o
        }
        Format::Json => Output::body(json(m, &summary)?),
    };
    out.deferred = deferred;
    Ok(out)
}

impl RbSummary<'_> {
    fn fits_only(&self) -> serde_json::Value {
        serde_json::json!({ "schema": SCHEMA, "fits": self.fits, "oracle": self.oracle })
    }
}

#[derive(Serialize)]
struct CircuitResult {
    points: Vec<WelchPoint>,
    slope: Option<f64>,
}

fn cmd_circuit(a: &CircuitArgs, fmt: Format, m: &mut RunManifest) -> Result<Output, CliError> {
    m.param("d", a.d);
    m.param("t", a.t);
    m.param("depth", a.depth);
    m.param("samples", a.samples);
    let points = welch_ratio_experiment(a.d, a.t, a.depth, a.samples, RandomSource::new(m.seed))?;
    let slope = if a.samples >= 64 { loglog_slope(&points, 32, a.samples).ok() } else { None };
    let res = CircuitResult { points, slope };
    Ok(Output::body(match fmt {
        Format::Csv => {
            let mut s = String::from("N,R_w,t,d,depth,seed\n");
            for p in &res.points {
                s.push_str(&format!("{},{:.17e},{},{},{},{}\n", p.n, p.ratio, a.t, a.d, a.depth, m.seed));
            }
            if let Some(v) = res.slope {
                s.push_str(&format!("slope,{v:.17e},{},{},{},{}\n", a.t, a.d, a.depth, m.seed));
            }
            s
        }
        Format::Json => json(m, &res)?,
    }))
}

#[derive(Serialize)]
struct HaarRow {
    #[serde(flatten)]
    estimate: McEstimate,
    gamma_reference: f64,
    deviation: f64,
}

fn cmd_haar_mc(a: &HaarMcArgs, fmt: Format, m: &mut RunManifest) -> Result<Output, CliError> {
    m.param("d", a.d);
    m.param("t_grid", &a.t_grid);
    m.param("samples", a.samples);
    let ts = grid(&a.t_grid)?;
    let est = haar_trace_moments_mc(a.d, &ts, a.samples, RandomSource::new(m.seed))?;
    let rows: Vec<HaarRow> = est
        .into_iter()
        .map(|e| {
            let g = statrs::function::gamma::gamma(e.t + 1.0);
            HaarRow { estimate: e, gamma_reference: g, deviation: e.mean / g - 1.0 }
        })
        .collect();
    Ok(Output::body(match fmt {
        Format::Csv => {
            let mut s = String::from("t,estimate,stderr,gamma_reference,deviation,samples\n");
            for r in &rows {
                let e = &r.estimate;
                s.push_str(&format!(
                    "{},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                    e.t, e.mean, e.stderr, r.gamma_reference, r.deviation, e.samples
                ));
            }
            s
        }
        Format::Json => json(m, &rows)?,
    }))
}

fn cmd_spacing(a: &SpacingArgs, fmt: Format, m: &mut RunManifest) -> Result<Output, CliError> {
    m.param("samples", a.samples);
    let ks = spacing_density_test(a.samples, RandomSource::new(m.seed))?;
    Ok(Output::body(match fmt {
        Format::Csv => format!(
            "statistic,critical,samples,pass\n{:.17e},{:.17e},{},{}\n",
            ks.statistic,
            ks.critical,
            ks.samples,
            ks.passes()
        ),
        Format::Json => json(m, serde_json::json!({ "ks": ks, "pass": ks.passes() }))?,
    }))
}

fn side_path(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    out.with_file_name(name)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Welch(_) => "welch",
        Command::Frame(_) => "frame",
        Command::Rb(_) => "rb",
        Command::Circuit(_) => "circuit",
        Command::HaarMc(_) => "haar-mc",
        Command::Spacing(_) => "spacing",
        Command::Replay { .. } => "replay",
    }
}

fn run(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    if let Command::Replay { manifest } = &cli.command {
        let text = std::fs::read_to_string(manifest)?;
        let recorded: RunManifest = serde_json::from_str(&text)?;
        let args = std::iter::once("qudesign".to_string()).chain(recorded.argv.iter().cloned());
        let again = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
        if matches!(again.command, Command::Replay { .. }) {
            return Err(CliError::Usage("a manifest cannot replay another replay".into()));
        }
        return run(again, recorded.argv);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        // the global pool can be configured once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut manifest = RunManifest::start(command_name(&cli.command), argv, cli.seed);
    manifest.param("format", cli.format);
    let fmt = cli.format;
    let output = match &cli.command {
        Command::Welch(a) => cmd_welch(a, fmt, &mut manifest)?,
        Command::Frame(a) => cmd_frame(a, fmt, &mut manifest)?,
        Command::Rb(a) => cmd_rb(a, fmt, &mut manifest)?,
        Command::Circuit(a) => cmd_circuit(a, fmt, &mut manifest)?,
        Command::HaarMc(a) => cmd_haar_mc(a, fmt, &mut manifest)?,
        Command::Spacing(a) => cmd_spacing(a, fmt, &mut manifest)?,
        Command::Replay { .. } => unreachable!("handled above"),
    };
    match &cli.out {
        Some(path) => {
            std::fs::write(path, &output.body)?;
            manifest.outputs.push(path.display().to_string());
            for (suffix, text) in &output.side {
                let p = side_path(path, suffix);
                std::fs::write(&p, text)?;
                manifest.outputs.push(p.display().to_string());
            }
            manifest.finish();
            std::fs::write(side_path(path, "manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(output.body.as_bytes())?;
            stdout.flush()?;
        }
    }
    match output.deferred {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qudesign: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
