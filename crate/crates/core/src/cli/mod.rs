//! `kfringe` command-line front end.
//!
//! Exit codes: 0 success, 1 computation or I/O failure, 2 usage/validation error.

pub mod output;
mod repro;

use std::f64::consts::PI;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::fringe::{sample_curve, FringeParams, PhaseGrid};
use crate::kpower::{kth_power, snl_reference, sweep_fwhm, KPowerSpec};
use crate::noise::{ensemble_fringe, NoiseConfig};
use crate::resolve::{dip_resolvable, resolvable, SpectralPair};
use output::{fmt_sig9, manifest_path, to_json, write_atomic, CsvTable, Manifest};

pub use repro::{FigureId, OUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "kfringe", version, about = "N-slit Kth-power fringe simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kth-powered normalized fringe on a phase grid (columns phase,intensity)
    Fringe(FringeArgs),
    /// Exact FWHM over N and K lists (columns n,k,fwhm_rad,fwhm_over_snl)
    Sweep(SweepArgs),
    /// Two-frequency resolvability report
    Resolve(ResolveArgs),
    /// Poisson photon-counting ensemble of the K-port product
    Noise(NoiseArgs),
    /// Regenerate a figure dataset bundle
    Repro(ReproArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted (no manifest is written then)
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    #[arg(long, default_value_t = -PI / 2.0, allow_negative_numbers = true)]
    pub start: f64,
    #[arg(long, default_value_t = PI / 2.0, allow_negative_numbers = true)]
    pub end: f64,
    #[arg(long)]
    pub points: Option<usize>,
}

impl GridArgs {
    fn grid(&self, default_points: usize) -> Result<PhaseGrid, CliError> {
        Ok(PhaseGrid::new(
            self.start,
            self.end,
            self.points.unwrap_or(default_points),
        )?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct FringeArgs {
    #[arg(long)]
    pub n: u32,
    /// Envelope ratio b/a (0 = interference term only)
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Slit counts: `2,10,100`, `1..100` or `2..200:2`
    #[arg(long, value_parser = parse_list)]
    pub n: UintList,
    /// Orders K, same syntax as --n
    #[arg(long, value_parser = parse_list)]
    pub k: UintList,
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ResolveArgs {
    /// Second frequency as a multiple of f0
    #[arg(long)]
    pub f1_ratio: f64,
    #[arg(long, default_value_t = 1.0)]
    pub f0_hz: f64,
    /// Interferometer delay in seconds (default 1/f0)
    #[arg(long)]
    pub delta_t: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    /// Mean photon number per undivided sample
    #[arg(long, default_value_t = 1e5)]
    pub mean: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReproArgs {
    /// Figure id: fig3a, fig3b, fig3c, fig3d, fig4, fig5
    pub figure: String,
    /// Bundle directory (default: $KFRINGE_OUT_DIR or ./repro)
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UintList(pub Vec<u32>);

/// Parse `a,b,c`, `a..b` and `a..b:step` terms (inclusive ranges), comma-joined.
pub fn parse_list(s: &str) -> Result<UintList, String> {
    let mut out = Vec::new();
    for term in s.split(',').map(str::trim) {
        if term.is_empty() {
            return Err(format!("empty term in list '{s}'"));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|e| format!("bad integer '{t}': {e}"))
        };
        match term.split_once("..") {
            None => out.push(num(term)?),
            Some((a, rest)) => {
                let (b, step) = match rest.split_once(':') {
                    Some((b, st)) => (num(b)?, num(st)?),
                    None => (num(rest)?, 1),
                };
                let a = num(a)?;
                if step == 0 || b < a {
                    return Err(format!("bad range '{term}'"));
                }
                out.extend((a..=b).step_by(step as usize));
            }
        }
    }
    Ok(UintList(out))
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Compute(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Compute(format!("i/o: {e}"))
    }
}

/// Mark errors raised after validation as computation failures.
fn computed<T>(r: Result<T, Error>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Compute(e.to_string()))
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fringe(a) => cmd_fringe(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Resolve(a) => cmd_resolve(&a),
        Command::Noise(a) => cmd_noise(&a),
        Command::Repro(a) => cmd_repro(&a),
    }
}

/// Write the payload to `--out` (atomically, plus manifest) or stdout.
fn emit(output: &OutputArgs, payload: &str, mut manifest: Manifest) -> Result<(), CliError> {
    match &output.out {
        Some(path) => {
            manifest.outputs.push(file_name(path));
            write_atomic(path, payload)?;
            write_atomic(&manifest_path(path), &to_json(&manifest))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(payload.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Serialize)]
struct PhaseRow {
    phase: f64,
    intensity: f64,
}

fn cmd_fringe(a: &FringeArgs) -> Result<(), CliError> {
    let params = FringeParams::new(a.n, a.r)?;
    let spec = KPowerSpec::new(a.k)?;
    let grid = a.grid.grid(PhaseGrid::FIGURE_POINTS)?;

    let curve = computed(kth_power(&sample_curve(&params, &grid, true), spec))?;
    let payload = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut t = CsvTable::new(["phase", "intensity"]);
            for (x, v) in curve.iter() {
                t.push_numbers(&[x, v]);
            }
            t.render()
        }
        Format::Json => to_json(
            &curve
                .iter()
                .map(|(phase, intensity)| PhaseRow { phase, intensity })
                .collect::<Vec<_>>(),
        ),
    };
    let manifest = Manifest::new(
        "fringe",
        json!({ "n": a.n, "r": a.r, "k": a.k, "grid": grid }),
    );
    emit(&a.output, &payload, manifest)
}

#[derive(Debug, Serialize)]
pub struct SweepRecord {
    pub n: u32,
    pub k: u32,
    pub fwhm_rad: f64,
    pub fwhm_over_snl: f64,
}

/// Exact widths plus the ratio to the `Δ(N,1)/√K` reference line.
pub fn sweep_records(n_list: &[u32], k_list: &[u32], r: f64) -> Result<Vec<SweepRecord>, Error> {
    let rows = sweep_fwhm(n_list, k_list, r)?;
    let base = sweep_fwhm(n_list, &[1], r)?;
    Ok(rows
        .iter()
        .map(|row| {
            let w1 = base.iter().find(|b| b.n == row.n).expect("same N list").fwhm;
            SweepRecord {
                n: row.n,
                k: row.k,
                fwhm_rad: row.fwhm,
                fwhm_over_snl: row.fwhm / snl_reference(w1, row.k),
            }
        })
        .collect())
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut t = CsvTable::new(["n", "k", "fwhm_rad", "fwhm_over_snl"]);
    for r in records {
        t.push_row(&[
            r.n.to_string(),
            r.k.to_string(),
            fmt_sig9(r.fwhm_rad),
            fmt_sig9(r.fwhm_over_snl),
        ]);
    }
    t.render()
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    for &n in &a.n.0 {
        FringeParams::new(n, a.r)?;
    }
    for &k in &a.k.0 {
        KPowerSpec::new(k)?;
    }
    if a.n.0.is_empty() || a.k.0.is_empty() {
        return Err(CliError::Usage("N and K lists must be non-empty".into()));
    }
    let records = computed(sweep_records(&a.n.0, &a.k.0, a.r))?;
    let payload = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => sweep_csv(&records),
        Format::Json => to_json(&records),
    };
    let manifest = Manifest::new("sweep", json!({ "n": a.n.0, "k": a.k.0, "r": a.r }));
    emit(&a.output, &payload, manifest)
}

#[derive(Debug, Serialize)]
pub struct ResolveRecord {
    pub n: u32,
    pub k: u32,
    pub r: f64,
    pub f0_hz: f64,
    pub f1_hz: f64,
    pub delta_t_s: f64,
    pub peak_separation_rad: f64,
    pub fwhm_rad: f64,
    pub margin: f64,
    pub resolvable: bool,
    pub min_resolvable_df_hz: f64,
    /// `null` when the default grid cannot place both lines
    pub dip_resolvable: Option<bool>,
}

pub fn resolve_record(pair: &SpectralPair, params: &FringeParams, spec: KPowerSpec) -> Result<ResolveRecord, Error> {
    let rep = resolvable(pair, params, spec)?;
    let dip = dip_resolvable(pair, params, spec, &PhaseGrid::figure_default()).ok();
    Ok(ResolveRecord {
        n: params.n_slits(),
        k: spec.order(),
        r: params.envelope_ratio(),
        f0_hz: pair.f0(),
        f1_hz: pair.f1(),
        delta_t_s: pair.delta_t(),
        peak_separation_rad: rep.peak_separation,
        fwhm_rad: rep.fwhm,
        margin: rep.margin,
        resolvable: rep.resolvable,
        min_resolvable_df_hz: rep.min_resolvable_df,
        dip_resolvable: dip,
    })
}

fn cmd_resolve(a: &ResolveArgs) -> Result<(), CliError> {
    let params = FringeParams::new(a.n, a.r)?;
    let spec = KPowerSpec::new(a.k)?;
    let delta_t = a.delta_t.unwrap_or(1.0 / a.f0_hz);
    let pair = SpectralPair::new(a.f0_hz, a.f1_ratio * a.f0_hz, delta_t)?;

    let rec = computed(resolve_record(&pair, &params, spec))?;
    let payload = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&rec),
        Format::Csv => {
            let mut t = CsvTable::new([
                "n", "k", "f0_hz", "f1_hz", "delta_t_s", "peak_separation_rad", "fwhm_rad",
                "margin", "resolvable", "min_resolvable_df_hz",
            ]);
            t.push_row(&[
                rec.n.to_string(),
                rec.k.to_string(),
                fmt_sig9(rec.f0_hz),
                fmt_sig9(rec.f1_hz),
                fmt_sig9(rec.delta_t_s),
                fmt_sig9(rec.peak_separation_rad),
                fmt_sig9(rec.fwhm_rad),
                fmt_sig9(rec.margin),
                rec.resolvable.to_string(),
                fmt_sig9(rec.min_resolvable_df_hz),
            ]);
            t.render()
        }
    };
    let manifest = Manifest::new(
        "resolve",
        json!({ "n": a.n, "k": a.k, "r": a.r, "f0_hz": a.f0_hz,
                "f1_ratio": a.f1_ratio, "delta_t_s": delta_t }),
    );
    emit(&a.output, &payload, manifest)
}

#[derive(Serialize)]
struct NoiseRow {
    phase: f64,
    mean: f64,
    stderr: f64,
    deterministic: f64,
}

/// Default noise grid; 2001 points keep 10³ trials per point tractable.
pub const NOISE_POINTS: usize = 2001;

fn cmd_noise(a: &NoiseArgs) -> Result<(), CliError> {
    let params = FringeParams::new(a.n, a.r)?;
    let spec = KPowerSpec::new(a.k)?;
    let grid = a.grid.grid(NOISE_POINTS)?;
    let cfg = NoiseConfig::new(a.mean, a.trials, a.seed, a.k)?;
    if a.mean == 0.0 {
        return Err(CliError::Usage("--mean must be > 0".into()));
    }

    let ens = computed(ensemble_fringe(&params, &grid, &cfg))?;
    let det = computed(kth_power(&sample_curve(&params, &grid, true), spec))?;
    let rows: Vec<NoiseRow> = grid
        .points()
        .enumerate()
        .map(|(i, phase)| NoiseRow {
            phase,
            mean: ens.mean_curve[i],
            stderr: ens.stderr_curve[i],
            deterministic: det.values()[i],
        })
        .collect();
    let payload = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut t = CsvTable::new(["phase", "mean", "stderr", "deterministic"]);
            for r in &rows {
                t.push_numbers(&[r.phase, r.mean, r.stderr, r.deterministic]);
            }
            t.render()
        }
        Format::Json => to_json(&rows),
    };
    let mut manifest = Manifest::new(
        "noise",
        json!({ "n": a.n, "r": a.r, "k": a.k, "mean_photons": a.mean,
                "trials": a.trials, "grid": grid }),
    );
    manifest.seed = Some(a.seed);
    emit(&a.output, &payload, manifest)
}

fn cmd_repro(a: &ReproArgs) -> Result<(), CliError> {
    let fig: FigureId = a
        .figure
        .parse()
        .map_err(|e: String| CliError::Usage(e))?;
    let dir = a
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("repro"));
    let bundle = computed(repro::build(fig))?;
    for (name, contents) in &bundle {
        write_atomic(&dir.join(name), contents)?;
    }
    Ok(())
}
