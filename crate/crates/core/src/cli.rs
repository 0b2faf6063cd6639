//! Command-line runner: argument and config parsing, dispatch to the
//! analysis pipelines, and write-once CSV/JSON artifacts.
//!
//! Exit codes: 0 on success, 1 on invalid input (including usage and I/O
//! errors), 2 on a numerical tolerance failure or a failed certificate.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::chessboard::{
    conditional_gaussian_stats, duality_pt, gaussian_domination_bruteforce, gaussian_ratio_table,
    gradient_bad_pattern_excess, gradient_block_determinant, gradient_default_quadrature, gradient_pattern_log_z,
    peierls_certificate, seeded_h_samples, DominationQuadrature, GradientPattern,
};
use crate::error::{Error, Result};
use crate::kernels::{
    mean_field_error_integral, periodize, periodize_to_tolerance, simulate_walk_returns, transience_integral,
    CouplingMatrix, Integral, KernelSpec, TorusGreens, DEFAULT_TAIL_TOLERANCE,
};
use crate::mc::{
    check_infrared_bound, check_key_estimate, condensation_sample, estimate_two_point, key_estimate_sample,
    run_chains_with, spin_wave_condensation_stat, SamplerSpec, TwoPointObserver, UpdateRule,
};
use crate::mean_field::{
    admissible_band, bifurcation_beta, default_starts, forced_discontinuity_check, locate_transition, potts_axis_grid,
    potts_on_axis_profile, solve_mean_field, SingleSpinMeasure,
};
use crate::models::{ModelFamily, ModelSpec};
use crate::oracle;
use crate::quadrature::QuadratureSpec;
use crate::spin_wave::{minimize_over_theta, sw_free_energy, SpinWaveFamily, SpinWaveIntegrand};
use crate::torus::TorusSpec;

pub const TOOL: &str = "rplab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "RP_TOOLKIT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "rplab",
    version,
    about = "Numerical laboratory for reflection-positive lattice spin models"
)]
pub struct Cli {
    /// JSON file with default values for the subcommand's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the `<subcommand>.json` and `<subcommand>.csv` outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Do not echo the JSON document on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Periodize a kernel on a torus and tabulate J and 1 - Ĵ.
    Kernel(KernelCmd),
    /// Transience integral and I_d of a kernel.
    Walk(WalkCmd),
    /// Torus Green's function at the origin against the transience integral.
    Greens(GreensCmd),
    /// Monte Carlo check of the infrared bound or the key estimate.
    McIrb(McIrbCmd),
    /// Monte Carlo spin-wave condensation statistic.
    McCondense(McCondenseCmd),
    /// Mean-field equations, Potts profiles and the admissibility band.
    Meanfield(MeanfieldCmd),
    /// Spin-wave free energies and their minimizers.
    Spinwave(SpinwaveCmd),
    /// Double-well chessboard and Peierls certificates.
    Chessboard(ChessboardCmd),
    /// Two-kappa gradient model pattern free energies and duality.
    Gradient(GradientCmd),
    /// Independent closed forms and brute-force values.
    Oracle(OracleCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum KindArg {
    Nn,
    Yukawa,
    PowerLaw,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
struct KernelArgs {
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    #[arg(long)]
    dim: Option<usize>,
    /// Yukawa decay rate.
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Power-law exponent.
    #[arg(long, allow_negative_numbers = true)]
    s: Option<f64>,
}

impl KernelArgs {
    fn resolve(&mut self, dim: usize) {
        self.kind.get_or_insert(KindArg::Nn);
        self.dim.get_or_insert(dim);
        match self.kind {
            Some(KindArg::Yukawa) => {
                self.mu.get_or_insert(1.0);
            }
            Some(KindArg::PowerLaw) => {
                self.s.get_or_insert(1.5);
            }
            _ => {}
        }
    }

    fn build(&self) -> Result<KernelSpec> {
        let d = self.dim.unwrap_or(3);
        match self.kind.unwrap_or(KindArg::Nn) {
            KindArg::Nn => KernelSpec::nearest_neighbor(d),
            KindArg::Yukawa => KernelSpec::yukawa(d, self.mu.unwrap_or(1.0)),
            KindArg::PowerLaw => KernelSpec::power_law(d, self.s.unwrap_or(1.5)),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
struct KernelCmd {
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    side: Option<usize>,
    /// Image cutoff; by default the smallest one meeting `tail_tol`.
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    tail_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
struct WalkCmd {
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
    /// Relative tolerance of the quadrature ladder.
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
    /// Starting grid points per axis.
    #[arg(long)]
    points: Option<usize>,
    /// Also run this many simulated walks.
    #[arg(long)]
    walks: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
struct GreensCmd {
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
    #[arg(long, value_delimiter = ',')]
    sides: Option<Vec<usize>>,
    #[arg(long, allow_negative_numbers = true)]
    tail_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ModelArg {
    Ising,
    Potts,
    On,
    LiquidCrystal,
    Gff,
    DoubleWell,
    Compass,
    OneTwenty,
    Afm,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Potts states.
    #[arg(long)]
    q: Option<usize>,
    /// Spin dimension for O(n) and liquid-crystal models.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    kappa: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
}

impl ModelArgs {
    fn resolve(&mut self, model: ModelArg) {
        let m = *self.model.get_or_insert(model);
        match m {
            ModelArg::Potts => {
                self.q.get_or_insert(3);
            }
            ModelArg::On | ModelArg::LiquidCrystal => {
                self.n.get_or_insert(if m == ModelArg::On { 2 } else { 3 });
            }
            ModelArg::Gff | ModelArg::DoubleWell => {
                self.kappa.get_or_insert(1.0);
            }
            ModelArg::Afm => {
                self.gamma.get_or_insert(1.0);
            }
            _ => {}
        }
    }

    fn build(&self, dim: usize) -> Result<ModelSpec> {
        let family = match self.model.unwrap_or(ModelArg::Ising) {
            ModelArg::Ising => ModelFamily::Ising,
            ModelArg::Potts => ModelFamily::Potts { q: self.q.unwrap_or(3) },
            ModelArg::On => ModelFamily::On { n: self.n.unwrap_or(2) },
            ModelArg::LiquidCrystal => ModelFamily::LiquidCrystal { n: self.n.unwrap_or(3) },
            ModelArg::Gff => ModelFamily::Gff {
                kappa: self.kappa.unwrap_or(1.0),
            },
            ModelArg::DoubleWell => ModelFamily::GaussianDoubleWell {
                kappa: self.kappa.unwrap_or(1.0),
            },
            ModelArg::Compass => ModelFamily::OrbitalCompass { d: dim },
            ModelArg::OneTwenty => ModelFamily::OneTwenty,
            ModelArg::Afm => ModelFamily::NnnAntiferromagnet {
                gamma: self.gamma.unwrap_or(1.0),
            },
        };
        ModelSpec::new(family)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
struct SamplerArgs {
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thinning: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long, value_enum)]
    update: Option<UpdateArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum UpdateArg {
    Metropolis,
    HeatBath,
}

impl SamplerArgs {
    fn resolve(&mut self, beta: f64, update: UpdateArg) {
        self.beta.get_or_insert(beta);
        let sweeps = *self.sweeps.get_or_insert(20_000);
        self.burn_in.get_or_insert(sweeps / 10);
        self.thinning.get_or_insert(1);
        self.chains.get_or_insert(4);
        self.update.get_or_insert(update);
    }

    fn build(&self, seed: u64) -> SamplerSpec {
        SamplerSpec {
            beta: self.beta.unwrap_or(1.0),
            sweeps: self.sweeps.unwrap_or(20_000),
            burn_in: self.burn_in.unwrap_or(2_000),
            thinning: self.thinning.unwrap_or(1),
            seed,
            update: match self.update.unwrap_or(UpdateArg::Metropolis) {
                UpdateArg::Metropolis => UpdateRule::Metropolis,
                UpdateArg::HeatBath => UpdateRule::HeatBath,
            },
            chains: self.chains.unwrap_or(4),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum IrbCheck {
    Irb,
    KeyEstimate,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
struct McIrbCmd {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    sampler: SamplerArgs,
    #[arg(long)]
    side: Option<usize>,
    #[arg(long, value_enum)]
    check: Option<IrbCheck>,
    /// Infinite-volume I_d for the key estimate; computed from the kernel
    /// when omitted.
    #[arg(long, allow_negative_numbers = true)]
    i_d: Option<f64>,
    /// Negative control: replace every ĉ(k) by twice its bound before
    /// checking.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    corrupt: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
struct McCondenseCmd {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    sampler: SamplerArgs,
    #[arg(long)]
    side: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum MeanfieldTask {
    Solve,
    Bifurcation,
    Profile,
    Transition,
    Band,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
struct MeanfieldCmd {
    #[arg(long, value_enum)]
    task: Option<MeanfieldTask>,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    /// Coupling in the dot-product normalization.
    #[arg(long, allow_negative_numbers = true)]
    beta_dot: Option<f64>,
    /// Potts coupling in the δ-normalization.
    #[arg(long, allow_negative_numbers = true)]
    beta_delta: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    i_d: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum FamilyArg {
    Compass,
    OneTwenty,
    Afm,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
struct SpinwaveCmd {
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Evaluate F at this angle instead of scanning.
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ChessboardTask {
    Peierls,
    Ratio,
    Domination,
    Conditional,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
struct ChessboardCmd {
    #[arg(long, value_enum)]
    task: Option<ChessboardTask>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    kappa: Option<f64>,
    /// Circuit-counting constant.
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    side: Option<usize>,
    /// Number of random perturbations for the domination check.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Sign configuration for the conditional statistics, e.g. `+-+-`.
    #[arg(long)]
    sigma: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
struct GradientCmd {
    #[arg(long, allow_negative_numbers = true)]
    kappa_o: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    kappa_d: Option<f64>,
    /// A priori weight of the `κ_O` bonds.
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum OracleName {
    Watson,
    Riemann,
    IsingRing,
    PottsTransition,
    TanhRoot,
    CompassQuarterPi,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
struct OracleCmd {
    #[arg(long, value_enum)]
    name: Option<OracleName>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long)]
    side: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
}

/// A CSV table with a declared column order.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        CsvTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Renders a table with `# key=value` metadata lines, a header row and LF
/// line endings; floats carry 17 significant digits.
pub fn render_csv(table: &CsvTable, metadata: &[(String, String)]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for (k, v) in metadata {
        buf.extend_from_slice(format!("# {k}={v}\n").as_bytes());
    }
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        let csv_err = |e: csv::Error| Error::Numerical(format!("csv encoding failed: {e}"));
        w.write_record(&table.columns).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv buffer>", e))?;
    }
    Ok(buf)
}

/// Writes `bytes` to a new file; an existing file is never overwritten.
pub fn write_once(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn emit_csv(path: &Path, table: &CsvTable, metadata: &[(String, String)]) -> Result<()> {
    write_once(path, &render_csv(table, metadata)?)
}

/// Reads a file written by [`emit_csv`], skipping metadata lines.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    let header = r
        .headers()
        .map_err(|e| Error::Validation(format!("bad csv header in {}: {e}", path.display())))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Validation(format!("bad csv row in {}: {e}", path.display())))?;
        rows.push(rec.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

struct Outcome {
    result: Value,
    csv: Option<CsvTable>,
    /// A certificate or check failed; reported with exit code 2.
    failed: bool,
}

impl Outcome {
    fn ok(result: impl Serialize) -> Result<Self> {
        Ok(Outcome {
            result: serde_json::to_value(result)?,
            csv: None,
            failed: false,
        })
    }

    fn with_csv(mut self, table: CsvTable) -> Self {
        self.csv = Some(table);
        self
    }

    fn failed_if(mut self, failed: bool) -> Self {
        self.failed = failed;
        self
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() || matches!(e, Error::Io { .. }) {
        1
    } else {
        2
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;

    let mut file_config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            match serde_json::from_str::<Value>(&text)? {
                Value::Object(m) => m,
                _ => return Err(Error::Usage("config file must hold a JSON object".into())),
            }
        }
        None => Map::new(),
    };
    let seed = match (cli.seed, file_config.remove("seed")) {
        (Some(s), _) => s,
        (None, Some(v)) => v
            .as_u64()
            .ok_or_else(|| Error::Usage("config seed must be a non-negative integer".into()))?,
        (None, None) => 0,
    };

    macro_rules! dispatch {
        ($name:literal, $args:expr, $resolve:expr, $run:expr) => {{
            let mut args = merge($args, file_config)?;
            #[allow(clippy::redundant_closure_call)]
            ($resolve)(&mut args);
            let config = serde_json::to_value(&args)?;
            let outcome = pool.install(|| ($run)(&args, seed))?;
            (String::from($name), config, outcome)
        }};
    }

    let (name, config, outcome) = match cli.command {
        Command::Kernel(a) => dispatch!("kernel", a, resolve_kernel, run_kernel),
        Command::Walk(a) => dispatch!("walk", a, resolve_walk, run_walk),
        Command::Greens(a) => dispatch!("greens", a, resolve_greens, run_greens),
        Command::McIrb(a) => dispatch!("mc-irb", a, resolve_mc_irb, run_mc_irb),
        Command::McCondense(a) => dispatch!("mc-condense", a, resolve_mc_condense, run_mc_condense),
        Command::Meanfield(a) => dispatch!("meanfield", a, resolve_meanfield, run_meanfield),
        Command::Spinwave(a) => dispatch!("spinwave", a, resolve_spinwave, run_spinwave),
        Command::Chessboard(a) => dispatch!("chessboard", a, resolve_chessboard, run_chessboard),
        Command::Gradient(a) => dispatch!("gradient", a, resolve_gradient, run_gradient),
        Command::Oracle(a) => dispatch!("oracle", a, resolve_oracle, run_oracle),
    };

    let document = json!({
        "tool": TOOL,
        "version": VERSION,
        "subcommand": name,
        "seed": seed,
        "config": config,
        "result": outcome.result,
        "status": if outcome.failed { "FAIL" } else { "OK" },
    });
    let text = serde_json::to_string_pretty(&document)? + "\n";
    if let Some(dir) = &cli.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_once(&dir.join(format!("{name}.json")), text.as_bytes())?;
        if let Some(table) = &outcome.csv {
            let meta = vec![
                ("tool".to_string(), format!("{TOOL} {VERSION}")),
                ("subcommand".to_string(), name.clone()),
                ("seed".to_string(), seed.to_string()),
                ("config".to_string(), serde_json::to_string(&config)?),
            ];
            emit_csv(&dir.join(format!("{name}.csv")), table, &meta)?;
        }
    }
    if !cli.quiet {
        print!("{text}");
    }
    Ok(if outcome.failed { 2 } else { 0 })
}

/// Overlays the flags that were given on the config-file values. Keys the
/// subcommand does not know are rejected.
fn merge<T: Serialize + DeserializeOwned>(flags: T, mut config: Map<String, Value>) -> Result<T> {
    let known = match serde_json::to_value(T::deserialize(Value::Object(Map::new()))?)? {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    if let Some(bad) = config.keys().find(|k| !known.contains_key(*k)) {
        return Err(Error::Usage(format!("unknown config key {bad:?}")));
    }
    if let Value::Object(given) = serde_json::to_value(flags)? {
        for (k, v) in given {
            if !v.is_null() {
                config.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(config)).map_err(|e| Error::Usage(format!("bad config: {e}")))
}

fn torus_couplings(kernel: &KernelSpec, side: usize, tail_tol: f64) -> Result<CouplingMatrix> {
    let torus = TorusSpec::new(kernel.dim(), side)?;
    periodize_to_tolerance(kernel, torus, tail_tol)
}

fn resolve_kernel(a: &mut KernelCmd) {
    a.kernel.resolve(3);
    a.side.get_or_insert(8);
    a.tail_tol.get_or_insert(DEFAULT_TAIL_TOLERANCE);
}

fn run_kernel(a: &KernelCmd, _seed: u64) -> Result<Outcome> {
    let kernel = a.kernel.build()?;
    let torus = TorusSpec::new(kernel.dim(), a.side.unwrap_or(8))?;
    let j = match a.cutoff {
        Some(c) => periodize(&kernel, torus, c)?,
        None => periodize_to_tolerance(&kernel, torus, a.tail_tol.unwrap_or(DEFAULT_TAIL_TOLERANCE))?,
    };
    let gaps = j.one_minus_hat_grid();
    let mut table = CsvTable::new(&["index", "displacement", "coupling", "mode", "one_minus_hat"]);
    for (i, k) in torus.reciprocal_grid().iter().enumerate() {
        let site = torus.site(i);
        let join = |v: &[usize]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
        table.push(vec![
            Cell::Int(i as i64),
            Cell::Text(join(&site.0)),
            Cell::Float(j.values()[i]),
            Cell::Text(join(&k.modes)),
            Cell::Float(gaps[i]),
        ]);
    }
    Ok(Outcome::ok(json!({
        "kernel": kernel,
        "side": torus.side(),
        "cutoff": j.cutoff(),
        "tail_mass": j.tail_mass(),
        "coupling_sum": j.values().iter().sum::<f64>(),
    }))?
    .with_csv(table))
}

fn resolve_walk(a: &mut WalkCmd) {
    a.kernel.resolve(3);
    a.tol.get_or_insert(1e-3);
    let d = a.kernel.dim.unwrap_or(3);
    a.points.get_or_insert(QuadratureSpec::for_dim(d).points_per_axis);
    if a.walks.is_some() {
        a.steps.get_or_insert(10_000);
    }
}

fn run_walk(a: &WalkCmd, seed: u64) -> Result<Outcome> {
    let kernel = a.kernel.build()?;
    let quad = QuadratureSpec::for_dim(kernel.dim())
        .with_points(a.points.unwrap_or(64))
        .with_tolerance(a.tol.unwrap_or(1e-3));
    let t = transience_integral(&kernel, &quad)?;
    let mut result = json!({
        "transient": t.is_finite(),
        "integral": t.value(),
        "error": t.ladder().error,
        "ladder": &t,
    });
    if let Integral::Finite(te) = &t {
        let i_d = mean_field_error_integral(&kernel, &quad)?;
        result["i_d"] = json!(i_d.estimate);
        result["identity_residual"] = json!(i_d.estimate - (te.estimate - 1.0));
    }
    if let Some(walks) = a.walks {
        let est = simulate_walk_returns(&kernel, a.steps.unwrap_or(10_000), walks, seed)?;
        result["simulation"] = serde_json::to_value(est)?;
    }
    Outcome::ok(result)
}

fn resolve_greens(a: &mut GreensCmd) {
    a.kernel.resolve(3);
    a.sides.get_or_insert_with(|| vec![4, 8, 16, 32]);
    a.tail_tol.get_or_insert(DEFAULT_TAIL_TOLERANCE);
    a.tol.get_or_insert(1e-3);
}

fn run_greens(a: &GreensCmd, _seed: u64) -> Result<Outcome> {
    let kernel = a.kernel.build()?;
    let quad = QuadratureSpec::for_dim(kernel.dim()).with_tolerance(a.tol.unwrap_or(1e-3));
    let t = transience_integral(&kernel, &quad)?.value();
    let sides = a.sides.clone().unwrap_or_default();
    if sides.is_empty() {
        return Err(Error::Usage("--sides needs at least one value".into()));
    }
    let mut table = CsvTable::new(&["side", "greens_diagonal", "gap", "relative_gap"]);
    let mut rows = Vec::new();
    for &l in &sides {
        let j = torus_couplings(&kernel, l, a.tail_tol.unwrap_or(DEFAULT_TAIL_TOLERANCE))?;
        let g = TorusGreens::new(&j)?.diagonal();
        let gap = t.map(|t| (g - t).abs());
        table.push(vec![
            Cell::Int(l as i64),
            Cell::Float(g),
            Cell::Float(gap.unwrap_or(f64::NAN)),
            Cell::Float(gap.zip(t).map(|(gap, t)| gap / t).unwrap_or(f64::NAN)),
        ]);
        rows.push(json!({"side": l, "greens_diagonal": g, "gap": gap}));
    }
    let gaps: Vec<f64> = rows.iter().filter_map(|r| r["gap"].as_f64()).collect();
    let decreasing = gaps.len() == sides.len() && gaps.windows(2).all(|w| w[1] < w[0]);
    Ok(Outcome::ok(json!({
        "transience_integral": t,
        "rows": rows,
        "gap_strictly_decreasing": decreasing,
    }))?
    .with_csv(table))
}

fn resolve_mc_common(
    model: &mut ModelArgs,
    kernel: &mut KernelArgs,
    sampler: &mut SamplerArgs,
    side: &mut Option<usize>,
    m: ModelArg,
) {
    model.resolve(m);
    let d = match model.model {
        Some(ModelArg::OneTwenty) => 3,
        Some(ModelArg::Afm) => 2,
        _ => 3,
    };
    kernel.resolve(d);
    // exact conditional sampling where it exists
    let update = match model.model {
        Some(ModelArg::Ising | ModelArg::Potts | ModelArg::DoubleWell | ModelArg::Gff) => UpdateArg::HeatBath,
        _ => UpdateArg::Metropolis,
    };
    sampler.resolve(1.0, update);
    side.get_or_insert(6);
}

fn resolve_mc_irb(a: &mut McIrbCmd) {
    resolve_mc_common(
        &mut a.model,
        &mut a.kernel,
        &mut a.sampler,
        &mut a.side,
        ModelArg::Ising,
    );
    a.check.get_or_insert(IrbCheck::Irb);
    a.corrupt.get_or_insert(false);
}

fn run_mc_irb(a: &McIrbCmd, seed: u64) -> Result<Outcome> {
    let kernel = a.kernel.build()?;
    let model = a.model.build(kernel.dim())?;
    let j = torus_couplings(&kernel, a.side.unwrap_or(6), DEFAULT_TAIL_TOLERANCE)?;
    let sampler = a.sampler.build(seed);
    let nu = model.nu();
    match a.check.unwrap_or(IrbCheck::Irb) {
        IrbCheck::Irb => {
            let observer = TwoPointObserver::new(&model, j.torus());
            let runs = run_chains_with(&model, &j, &sampler, |c| observer.observe(c))?;
            let acceptance: Vec<f64> = runs.iter().map(|r| r.acceptance).collect();
            let samples: Vec<Vec<f64>> = runs.into_iter().flat_map(|r| r.samples).collect();
            let mut est = estimate_two_point(j.torus(), &samples)?;
            let grid = j.torus().reciprocal_grid();
            let bound = |i: usize| nu as f64 / (2.0 * sampler.beta) / j.one_minus_hat(&grid[i]);
            if a.corrupt.unwrap_or(false) {
                for i in 1..est.c_hat.len() {
                    est.c_hat[i] = 2.0 * bound(i) + 10.0 * est.c_hat_se[i];
                }
            }
            let cert = check_infrared_bound(&est, &j, sampler.beta, nu)?;
            let mut table = CsvTable::new(&["mode", "c_hat", "c_hat_se", "bound"]);
            for (i, k) in grid.iter().enumerate().skip(1) {
                table.push(vec![
                    Cell::Text(k.modes.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")),
                    Cell::Float(est.c_hat[i]),
                    Cell::Float(est.c_hat_se[i]),
                    Cell::Float(bound(i)),
                ]);
            }
            let failed = !cert.passed();
            Ok(Outcome::ok(json!({"certificate": cert, "acceptance": acceptance}))?
                .with_csv(table)
                .failed_if(failed))
        }
        IrbCheck::KeyEstimate => {
            let runs = run_chains_with(&model, &j, &sampler, |c| key_estimate_sample(&model, &j, c))?;
            let samples: Vec<f64> = runs.into_iter().flat_map(|r| r.samples).collect();
            let i_d = match a.i_d {
                Some(v) => Some(v),
                None => {
                    let quad = QuadratureSpec::for_dim(kernel.dim());
                    match mean_field_error_integral(&kernel, &quad) {
                        Ok(e) => Some(e.estimate),
                        Err(Error::Divergent(_)) => None,
                        Err(e) => return Err(e),
                    }
                }
            };
            let cert = check_key_estimate(&samples, &j, sampler.beta, nu, i_d)?;
            let failed = !cert.passed();
            Ok(Outcome::ok(json!({"certificate": cert}))?.failed_if(failed))
        }
    }
}

fn resolve_mc_condense(a: &mut McCondenseCmd) {
    a.sampler.beta.get_or_insert(5.0);
    resolve_mc_common(&mut a.model, &mut a.kernel, &mut a.sampler, &mut a.side, ModelArg::On);
}

/// Largest Parseval residual accepted per sample.
const PARSEVAL_TOLERANCE: f64 = 1e-8;

fn run_mc_condense(a: &McCondenseCmd, seed: u64) -> Result<Outcome> {
    let kernel = a.kernel.build()?;
    let model = a.model.build(kernel.dim())?;
    let j = torus_couplings(&kernel, a.side.unwrap_or(6), DEFAULT_TAIL_TOLERANCE)?;
    let sampler = a.sampler.build(seed);
    let runs = run_chains_with(&model, &j, &sampler, |c| condensation_sample(&model, c))?;
    let samples = runs
        .into_iter()
        .flat_map(|r| r.samples)
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let stat = spin_wave_condensation_stat(&samples, &j, sampler.beta, model.nu())?;
    let ok = stat.respects_bound() && stat.parseval_max_residual <= PARSEVAL_TOLERANCE;
    Ok(Outcome::ok(json!({
        "condensation": stat,
        "lower_bound_positive": stat.lower_bound > 0.0,
        "verdict": if ok { "PASS" } else { "FAIL" },
    }))?
    .failed_if(!ok))
}

fn resolve_meanfield(a: &mut MeanfieldCmd) {
    let task = *a.task.get_or_insert(MeanfieldTask::Solve);
    let default_model = match task {
        MeanfieldTask::Solve | MeanfieldTask::Bifurcation => ModelArg::Ising,
        _ => ModelArg::Potts,
    };
    a.model.resolve(default_model);
    match task {
        MeanfieldTask::Solve => {
            a.beta_dot.get_or_insert(2.0);
        }
        MeanfieldTask::Profile => {
            a.beta_delta.get_or_insert(4.0 * 2f64.ln());
            a.points.get_or_insert(401);
            if a.i_d.is_none() {
                a.kernel.resolve(3);
            }
        }
        MeanfieldTask::Band if a.i_d.is_none() => a.kernel.resolve(3),
        _ => {}
    }
}

fn potts_q(a: &MeanfieldCmd) -> Result<usize> {
    match a.model.model {
        Some(ModelArg::Potts) => Ok(a.model.q.unwrap_or(3)),
        other => Err(Error::Usage(format!("this task needs --model potts, got {other:?}"))),
    }
}

/// Both couplings, as mandatory labels on mean-field outputs.
fn normalization(q: Option<usize>, beta_dot: Option<f64>, beta_delta: Option<f64>) -> Value {
    let f = q.map(|q| (q as f64 - 1.0) / q as f64);
    let dot = beta_dot.or_else(|| beta_delta.zip(f).map(|(b, f)| b * f));
    let delta = beta_delta.or_else(|| beta_dot.zip(f).map(|(b, f)| b / f));
    json!({"beta_dot": dot, "beta_delta": delta})
}

/// `--i-d` if given, else `I_d` of the configured kernel.
fn meanfield_i_d(a: &MeanfieldCmd) -> Result<f64> {
    match a.i_d {
        Some(v) => Ok(v),
        None => {
            let kernel = a.kernel.build()?;
            Ok(mean_field_error_integral(&kernel, &QuadratureSpec::for_dim(kernel.dim()))?.estimate)
        }
    }
}

fn run_meanfield(a: &MeanfieldCmd, _seed: u64) -> Result<Outcome> {
    let q = match a.model.model {
        Some(ModelArg::Potts) => Some(a.model.q.unwrap_or(3)),
        _ => None,
    };
    match a.task.unwrap_or(MeanfieldTask::Solve) {
        MeanfieldTask::Solve => {
            let model = a.model.build(1)?;
            let measure = SingleSpinMeasure::for_model(&model)?;
            let beta = a.beta_dot.unwrap_or(2.0);
            let sol = solve_mean_field(&measure, beta, &default_starts(&measure))?;
            Outcome::ok(json!({"normalization": normalization(q, Some(beta), None), "solutions": sol}))
        }
        MeanfieldTask::Bifurcation => {
            let model = a.model.build(1)?;
            let measure = SingleSpinMeasure::for_model(&model)?;
            let b = bifurcation_beta(&measure)?;
            Outcome::ok(json!({"normalization": normalization(q, Some(b), None), "beta_bifurcation_dot": b}))
        }
        MeanfieldTask::Profile => {
            let q = potts_q(a)?;
            let bd = a.beta_delta.unwrap_or(4.0 * 2f64.ln());
            let points = a.points.unwrap_or(401);
            if points < 3 {
                return Err(Error::Usage("--points must be at least 3".into()));
            }
            let profile = potts_on_axis_profile(q, bd, &potts_axis_grid(q, points))?;
            let i_d = meanfield_i_d(a)?;
            let band = admissible_band(&profile, i_d)?;
            let flag = |b: bool| Cell::Int(b as i64);
            let mut table = CsvTable::new(&["m", "Phi", "is_min", "is_max", "in_band"]);
            for (i, (m, p)) in profile.grid.iter().zip(&profile.phi).enumerate() {
                table.push(vec![
                    Cell::Float(*m),
                    Cell::Float(*p),
                    flag(profile.minima.contains(&i)),
                    flag(profile.maxima.contains(&i)),
                    flag(band.in_band[i]),
                ]);
            }
            let minima: Vec<f64> = profile.minima.iter().map(|&i| profile.grid[i]).collect();
            Ok(Outcome::ok(json!({
                "normalization": normalization(Some(q), None, Some(bd)),
                "minima": minima,
                "global_min": profile.grid[profile.global_min],
                "i_d": i_d,
                "band": band.band,
                "admissible_intervals": band.intervals,
            }))?
            .with_csv(table))
        }
        MeanfieldTask::Transition => {
            let q = potts_q(a)?;
            let tr = locate_transition(q)?;
            let (spin_dot, t_dot) = tr.to_dot();
            Outcome::ok(json!({
                "normalization": normalization(Some(q), Some(t_dot), Some(tr.beta_transition)),
                "transition": tr,
                "beta_spinodal_dot": spin_dot,
                "beta_transition_dot": t_dot,
            }))
        }
        MeanfieldTask::Band => {
            let q = potts_q(a)?;
            let i_d = meanfield_i_d(a)?;
            let cert = forced_discontinuity_check(q, i_d)?;
            let failed = !cert.passed();
            Ok(
                Outcome::ok(json!({"normalization": normalization(Some(q), None, None), "certificate": cert}))?
                    .failed_if(failed),
            )
        }
    }
}

fn spin_wave_family(a: &SpinwaveCmd) -> SpinWaveFamily {
    match a.family.unwrap_or(FamilyArg::Compass) {
        FamilyArg::Compass => SpinWaveFamily::Compass,
        FamilyArg::OneTwenty => SpinWaveFamily::OneTwenty,
        FamilyArg::Afm => SpinWaveFamily::Afm {
            gamma: a.gamma.unwrap_or(1.0),
        },
    }
}

fn resolve_spinwave(a: &mut SpinwaveCmd) {
    let f = *a.family.get_or_insert(FamilyArg::Compass);
    if f == FamilyArg::Afm {
        a.gamma.get_or_insert(1.0);
    }
    let quad = spin_wave_family(a).default_quadrature();
    a.points.get_or_insert(quad.points_per_axis);
    a.tol.get_or_insert(quad.tolerance);
    if a.theta.is_none() {
        a.resolution.get_or_insert(720);
    }
}

fn run_spinwave(a: &SpinwaveCmd, _seed: u64) -> Result<Outcome> {
    let family = spin_wave_family(a);
    family.validate()?;
    let mut quad = family.default_quadrature();
    if let Some(p) = a.points {
        quad = quad.with_points(p);
    }
    if let Some(t) = a.tol {
        quad = quad.with_tolerance(t);
    }
    if let Some(theta) = a.theta {
        let f = sw_free_energy(&SpinWaveIntegrand::new(family, theta)?, &quad)?;
        return Outcome::ok(json!({"family": family, "theta": theta, "free_energy": f}));
    }
    let scan = minimize_over_theta(family, a.resolution.unwrap_or(720), &quad)?;
    let mut table = CsvTable::new(&["theta", "free_energy", "error"]);
    for i in 0..scan.thetas.len() {
        table.push(vec![
            Cell::Float(scan.thetas[i]),
            Cell::Float(scan.values[i]),
            Cell::Float(scan.errors[i]),
        ]);
    }
    Ok(Outcome::ok(json!({
        "family": family,
        "minima": scan.minima,
        "gap": scan.gap,
        "degenerate": scan.degenerate,
    }))?
    .with_csv(table))
}

fn resolve_chessboard(a: &mut ChessboardCmd) {
    let task = *a.task.get_or_insert(ChessboardTask::Peierls);
    match task {
        ChessboardTask::Peierls => {
            a.beta.get_or_insert(100.0);
            a.kappa.get_or_insert(100.0);
            a.c.get_or_insert(crate::chessboard::DEFAULT_PEIERLS_C);
        }
        ChessboardTask::Ratio => {
            a.beta.get_or_insert(1.0);
            a.kappa.get_or_insert(1.0);
            a.side.get_or_insert(4);
        }
        ChessboardTask::Domination => {
            a.beta.get_or_insert(1.0);
            a.kappa.get_or_insert(4.0);
            a.dim.get_or_insert(1);
            a.side.get_or_insert(4);
            a.samples.get_or_insert(20);
            a.nodes.get_or_insert(DominationQuadrature::default().nodes);
        }
        ChessboardTask::Conditional => {
            a.beta.get_or_insert(0.1);
            a.kappa.get_or_insert(10.0);
            a.dim.get_or_insert(1);
            a.side.get_or_insert(4);
            a.sigma.get_or_insert_with(|| "+-+-".into());
        }
    }
}

fn run_chessboard(a: &ChessboardCmd, seed: u64) -> Result<Outcome> {
    let beta = a.beta.unwrap_or(1.0);
    let kappa = a.kappa.unwrap_or(1.0);
    match a.task.unwrap_or(ChessboardTask::Peierls) {
        ChessboardTask::Peierls => {
            let cert = peierls_certificate(beta, kappa, a.c.unwrap_or(crate::chessboard::DEFAULT_PEIERLS_C))?;
            let failed = !cert.passed();
            Ok(Outcome::ok(cert)?.failed_if(failed))
        }
        ChessboardTask::Ratio => {
            let table_rows = gaussian_ratio_table(beta, kappa, a.side.unwrap_or(4))?;
            let mut table = CsvTable::new(&["class", "finite_torus_ratio", "closed_form"]);
            let mut rows = Vec::new();
            for (class, ratio, closed) in table_rows {
                table.push(vec![
                    Cell::Text(class.name().into()),
                    Cell::Float(ratio),
                    Cell::Float(closed),
                ]);
                rows.push(json!({"class": class, "ratio": ratio, "closed_form": closed}));
            }
            Ok(Outcome::ok(json!({"rows": rows}))?.with_csv(table))
        }
        ChessboardTask::Domination => {
            let model = ModelSpec::new(ModelFamily::GaussianDoubleWell { kappa })?;
            let torus = TorusSpec::new(a.dim.unwrap_or(1), a.side.unwrap_or(4))?;
            let hs = seeded_h_samples(&torus, a.samples.unwrap_or(20), seed);
            let quad = DominationQuadrature {
                nodes: a.nodes.unwrap_or(64),
                ..DominationQuadrature::default()
            };
            let cert = gaussian_domination_bruteforce(&model, beta, &torus, &hs, &quad)?;
            let failed = !cert.passed();
            Ok(Outcome::ok(cert)?.failed_if(failed))
        }
        ChessboardTask::Conditional => {
            let torus = TorusSpec::new(a.dim.unwrap_or(1), a.side.unwrap_or(4))?;
            let sigma: Vec<f64> = a
                .sigma
                .as_deref()
                .unwrap_or("")
                .chars()
                .map(|c| match c {
                    '+' => Ok(1.0),
                    '-' => Ok(-1.0),
                    _ => Err(Error::validation(format!("bad sign {c:?} in --sigma"))),
                })
                .collect::<Result<_>>()?;
            let stats = conditional_gaussian_stats(&sigma, beta, kappa, &torus)?;
            let mut table = CsvTable::new(&["site", "sigma", "mean", "variance"]);
            for (i, &s) in sigma.iter().enumerate() {
                table.push(vec![
                    Cell::Int(i as i64),
                    Cell::Float(s),
                    Cell::Float(stats.mean[i]),
                    Cell::Float(stats.variance[i]),
                ]);
            }
            let dev = stats
                .mean
                .iter()
                .zip(&sigma)
                .map(|(m, s)| (m - s).abs())
                .fold(0.0, f64::max);
            Ok(Outcome::ok(json!({"max_mean_deviation": dev, "stats": stats}))?.with_csv(table))
        }
    }
}

fn resolve_gradient(a: &mut GradientCmd) {
    a.kappa_o.get_or_insert(100.0);
    a.kappa_d.get_or_insert(1.0);
    let q = gradient_default_quadrature();
    a.points.get_or_insert(q.points_per_axis);
    a.tol.get_or_insert(q.tolerance);
}

fn run_gradient(a: &GradientCmd, _seed: u64) -> Result<Outcome> {
    let (ko, kd) = (a.kappa_o.unwrap_or(100.0), a.kappa_d.unwrap_or(1.0));
    let mut quad = gradient_default_quadrature();
    if let Some(p) = a.points {
        quad = quad.with_points(p);
    }
    if let Some(t) = a.tol {
        quad = quad.with_tolerance(t);
    }
    let excess = gradient_bad_pattern_excess(ko, kd, &quad)?;
    let mut result = json!({
        "excess": excess,
        "p_t": duality_pt(ko, kd)?,
        "det_at_pi_pi": gradient_block_determinant([std::f64::consts::PI; 2], ko, kd)?,
    });
    if let Some(p) = a.p {
        let mut lz = Map::new();
        for (name, pat) in [
            ("all-o", GradientPattern::AllO),
            ("all-d", GradientPattern::AllD),
            ("three-one", GradientPattern::ThreeOne),
        ] {
            lz.insert(name.into(), json!(gradient_pattern_log_z(pat, ko, kd, p, &quad)?));
        }
        result["log_z"] = Value::Object(lz);
    }
    Outcome::ok(result)
}

fn resolve_oracle(a: &mut OracleCmd) {
    match *a.name.get_or_insert(OracleName::Watson) {
        OracleName::Riemann => {
            a.dim.get_or_insert(3);
            a.points.get_or_insert(128);
        }
        OracleName::IsingRing => {
            a.beta.get_or_insert(0.7);
            a.side.get_or_insert(4);
        }
        OracleName::PottsTransition => {
            a.q.get_or_insert(3);
        }
        OracleName::TanhRoot => {
            a.beta.get_or_insert(2.0);
        }
        _ => {}
    }
}

fn run_oracle(a: &OracleCmd, _seed: u64) -> Result<Outcome> {
    match a.name.unwrap_or(OracleName::Watson) {
        OracleName::Watson => Outcome::ok(json!({"value": oracle::watson_integral()})),
        OracleName::Riemann => Outcome::ok(json!({
            "value": oracle::riemann_transience(a.dim.unwrap_or(3), a.points.unwrap_or(128))?
        })),
        OracleName::IsingRing => {
            let (b, l) = (a.beta.unwrap_or(0.7), a.side.unwrap_or(4));
            let mut table = CsvTable::new(&["distance", "correlation"]);
            let mut values = Vec::new();
            for r in 0..l {
                let c = oracle::ising_ring_two_point(b, l, r)?;
                table.push(vec![Cell::Int(r as i64), Cell::Float(c)]);
                values.push(c);
            }
            Ok(Outcome::ok(json!({"correlations": values}))?.with_csv(table))
        }
        OracleName::PottsTransition => Outcome::ok(json!({
            "beta_delta": oracle::potts_transition_closed_form(a.q.unwrap_or(3))?
        })),
        OracleName::TanhRoot => Outcome::ok(json!({"value": oracle::tanh_fixed_point(a.beta.unwrap_or(2.0))?})),
        OracleName::CompassQuarterPi => Outcome::ok(json!({"value": oracle::compass_quarter_pi()})),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = CsvTable::new(&["a", "b"]);
        let bytes = render_csv(&t, &[]).unwrap();
        assert_eq!(bytes, b"a,b\n");
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = CsvTable::new(&["x", "label", "n"]);
        let x = 0.1f64 + 0.2;
        t.push(vec![Cell::Float(x), Cell::Text("a b".into()), Cell::Int(-3)]);
        emit_csv(&path, &t, &[("seed".into(), "5".into())]).unwrap();
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(header, vec!["x", "label", "n"]);
        assert_eq!(rows[0][0].parse::<f64>().unwrap().to_bits(), x.to_bits());
        assert_eq!(rows[0][1], "a b");
        assert!(emit_csv(&path, &t, &[]).is_err(), "outputs are write-once");
    }

    #[test]
    fn merge_prefers_flags_and_rejects_unknown_keys() {
        let flags = GradientCmd {
            kappa_o: Some(5.0),
            ..Default::default()
        };
        let cfg = serde_json::from_str::<Map<String, Value>>(r#"{"kappa_o": 1.0, "kappa_d": 2.0}"#).unwrap();
        let m = merge(flags.clone(), cfg).unwrap();
        assert_eq!(m.kappa_o, Some(5.0));
        assert_eq!(m.kappa_d, Some(2.0));
        let bad = serde_json::from_str::<Map<String, Value>>(r#"{"kapa": 1.0}"#).unwrap();
        assert!(merge(flags, bad).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["rplab", "oracle", "--name", "watson"]), 0);
        assert_eq!(run(["rplab", "no-such-command"]), 1);
        assert_eq!(run(["rplab", "gradient", "--kappa-o", "-1"]), 1);
        assert_eq!(run(["rplab", "chessboard", "--beta", "1", "--kappa", "1"]), 2);
        assert_eq!(run(["rplab", "chessboard", "--beta", "100", "--kappa", "100"]), 0);
    }
}
