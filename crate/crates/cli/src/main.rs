//! `qchan`: family files in, JSON or CSV out.
//!
//! Exit codes: 0 success, 2 invariant violation or failed acceptance run,
//! 3 malformed family file or invalid command line, 1 anything else.

mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use qchan::acceptance::run_full;
use qchan::bounds::{classify_beta, program_rate, simulation_rate};
use qchan::channels::ChannelFamily;
use qchan::divergences::{d2_channels_closed, d2_channels_variational, DivergenceReport, DEFAULT_RESTARTS};
use qchan::family_file::FamilyFile;
use qchan::fisher::{check_conditions, rld_norm_channel, FisherReport, SphereOptions};
use qchan::metrology::{estimation_experiment, ExperimentOptions, ProductStrategy};
use qchan::protocol::{protocol_sweep, SweepOptions};
use qchan::sampling::DEFAULT_SEED;

use output::{to_json, Cell, Table};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0} acceptance criteria failed")]
    AcceptanceFailed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "qchan", version, about = "Information quantities of parametric quantum channel families")]
struct Cli {
    /// Family file (`key = value` lines).
    #[arg(long, global = true)]
    family: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every random stream (decimal or 0x-prefixed hex).
    #[arg(long, global = true, value_parser = parse_seed, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Discretization exponent.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Comma-separated numbers of channel uses.
    #[arg(long, global = true, value_delimiter = ',')]
    n: Option<Vec<u64>>,
    #[arg(long, global = true)]
    restarts: Option<usize>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Confidence level `p` of the inaccuracy.
    #[arg(long, global = true)]
    confidence: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// RLD Fisher information norm at `t`, or along a grid with `--sweep`.
    Fisher {
        #[arg(long)]
        sweep: bool,
        /// Number of sweep points (about, for more than one parameter).
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Channel 2-Rényi divergence between `t` and `t_ref`.
    D2,
    /// Discretization protocol over a list of `n`.
    ProtocolSweep,
    /// Monte-Carlo estimation on the bit-flip family.
    MetrologySim,
    /// Rate statements from `v`, `beta` and `eps`, or from the family.
    Bounds {
        #[arg(long)]
        v: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Regularity conditions of the family.
    Validate,
    /// Full acceptance suite, run twice for the determinism check.
    Acceptance,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fisher { .. } => "fisher",
            Command::D2 => "d2",
            Command::ProtocolSweep => "protocol-sweep",
            Command::MetrologySim => "metrology-sim",
            Command::Bounds { .. } => "bounds",
            Command::Validate => "validate",
            Command::Acceptance => "acceptance",
        }
    }
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed `{s}`: {e}"))
}

struct Loaded {
    file: FamilyFile,
    family: ChannelFamily,
    line_count: usize,
}

impl Cli {
    fn load_family(&self) -> anyhow::Result<Loaded> {
        let path = self
            .family
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("`{}` needs --family <path>", self.command.name())))?;
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let located = || format!("in family file {}", path.display());
        let file = FamilyFile::parse(&text).with_context(located)?;
        let family = file.build().with_context(located)?;
        Ok(Loaded { file, family, line_count: text.lines().count().max(1) })
    }

    fn context(&self, loaded: Option<&Loaded>, settings: Value) -> Value {
        let mut config = json!({
            "seed": self.seed,
            "format": self.format,
        });
        if let Some(l) = loaded {
            config["family_path"] = json!(self.family.as_ref().map(|p| p.display().to_string()));
            config["family"] = json!(l.file);
        }
        if let (Value::Object(c), Value::Object(s)) = (&mut config, settings) {
            c.extend(s);
        }
        json!({
            "qchan_version": qchan::VERSION,
            "command": self.command.name(),
            "config": config,
        })
    }

    fn emit(&self, text: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    /// Writes a report in the requested format; CSV lists its top-level
    /// fields as `field,value` rows.
    fn emit_report(&self, context: &Value, result: &impl Serialize) -> anyhow::Result<()> {
        let text = match self.format_or(Format::Json) {
            Format::Json => to_json(context, result)?,
            Format::Csv => Table::from_fields(&serde_json::to_value(result)?).to_csv(context),
        };
        self.emit(&text)
    }

    fn emit_table(&self, context: &Value, table: &Table, result: &impl Serialize) -> anyhow::Result<()> {
        let text = match self.format_or(Format::Csv) {
            Format::Csv => table.to_csv(context),
            Format::Json => to_json(context, result)?,
        };
        self.emit(&text)
    }
}

/// A report that may be `+∞`; `value` fields are then absent.
#[derive(Serialize)]
struct MaybeInfinite<T: Serialize> {
    infinite: bool,
    reason: Option<String>,
    #[serde(flatten)]
    report: Option<T>,
}

fn finite_or_signal<T: Serialize>(r: qchan::Result<T>) -> anyhow::Result<MaybeInfinite<T>> {
    match r {
        Ok(report) => Ok(MaybeInfinite { infinite: false, reason: None, report: Some(report) }),
        Err(e) if e.is_infinite_signal() => Ok(MaybeInfinite { infinite: true, reason: Some(e.to_string()), report: None }),
        Err(e) => Err(e.into()),
    }
}

fn axis_points(a: f64, b: f64, m: usize) -> Vec<f64> {
    if m <= 1 || a == b {
        return vec![0.5 * (a + b)];
    }
    (0..m).map(|k| a + (b - a) * k as f64 / (m - 1) as f64).collect()
}

fn sweep_points(bounds: &[(f64, f64)], total: usize) -> Vec<Vec<f64>> {
    let m = ((total.max(1) as f64).powf(1.0 / bounds.len() as f64).round() as usize).max(1);
    bounds.iter().fold(vec![vec![]], |acc, &(a, b)| {
        acc.into_iter()
            .flat_map(|prefix: Vec<f64>| {
                axis_points(a, b, m).into_iter().map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect()
    })
}

fn coordinate_names(prefix: &str, v: usize) -> Vec<String> {
    if v == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=v).map(|k| format!("{prefix}_{k}")).collect()
    }
}

fn cmd_fisher(cli: &Cli, sweep: bool, points: usize) -> anyhow::Result<()> {
    let loaded = cli.load_family()?;
    let family = &loaded.family;
    if !sweep {
        let t = loaded.file.point();
        let context = cli.context(Some(&loaded), json!({ "t": t }));
        let report = finite_or_signal(rld_norm_channel(family, &t, SphereOptions::default()))?;
        return cli.emit_report(&context, &report);
    }
    let v = family.v();
    let opts = if v == 1 { SphereOptions::default() } else { SphereOptions::coarse() };
    let grid = sweep_points(family.bounds(), points);
    let rows: Vec<(Vec<f64>, Option<FisherReport>)> = grid
        .par_iter()
        .map(|t| match rld_norm_channel(family, t, opts) {
            Ok(r) => Ok((t.clone(), Some(r))),
            Err(e) if e.is_infinite_signal() => Ok((t.clone(), None)),
            Err(e) => Err(e),
        })
        .collect::<qchan::Result<_>>()?;
    let mut header = coordinate_names("t", v);
    header.push("J_R".into());
    header.extend(coordinate_names("direction", v));
    let mut table = Table::new(header);
    for (t, r) in &rows {
        let mut row: Vec<Cell> = t.iter().map(|&x| x.into()).collect();
        match r {
            Some(r) => {
                row.push(r.value.into());
                row.extend(r.direction.iter().map(|&x| Cell::from(x)));
            }
            None => {
                row.push(f64::INFINITY.into());
                row.extend((0..v).map(|_| Cell::Empty));
            }
        }
        table.push(row);
    }
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|(t, r)| json!({ "t": t, "infinite": r.is_none(), "value": r.as_ref().map(|r| r.value), "direction": r.as_ref().map(|r| &r.direction) }))
        .collect();
    let context = cli.context(Some(&loaded), json!({ "sweep": true, "points": grid.len() }));
    cli.emit_table(&context, &table, &json_rows)
}

#[derive(Serialize)]
struct D2Output {
    t: Vec<f64>,
    t_ref: Vec<f64>,
    infinite: bool,
    reason: Option<String>,
    closed_form: Option<DivergenceReport>,
    variational: Option<DivergenceReport>,
    /// `closed_form − variational`.
    gap: Option<f64>,
}

fn cmd_d2(cli: &Cli) -> anyhow::Result<()> {
    let loaded = cli.load_family()?;
    let t = loaded.file.point();
    let t_ref = loaded.file.t_ref.clone().ok_or_else(|| qchan::Error::FamilyFile {
        line: loaded.line_count,
        message: "`d2` needs `t_ref` in the family file".into(),
    })?;
    let restarts = cli.restarts.unwrap_or(DEFAULT_RESTARTS);
    let a = loaded.family.eval(&t)?;
    let b = loaded.family.eval(&t_ref)?;
    let out = match d2_channels_closed(&a, &b) {
        Ok(closed) => {
            let var = d2_channels_variational(&a, &b, restarts, cli.seed)?;
            let gap = closed.value_bits - var.value_bits;
            D2Output { t, t_ref, infinite: false, reason: None, closed_form: Some(closed), variational: Some(var), gap: Some(gap) }
        }
        Err(e) if e.is_infinite_signal() => {
            D2Output { t, t_ref, infinite: true, reason: Some(e.to_string()), closed_form: None, variational: None, gap: None }
        }
        Err(e) => return Err(e.into()),
    };
    let context = cli.context(Some(&loaded), json!({ "restarts": restarts }));
    cli.emit_report(&context, &out)
}

const DEFAULT_N: [u64; 3] = [100, 1000, 10_000];

fn cmd_protocol_sweep(cli: &Cli) -> anyhow::Result<()> {
    let loaded = cli.load_family()?;
    let alpha = cli.alpha.unwrap_or(0.5);
    let n_list = cli.n.clone().unwrap_or(DEFAULT_N.to_vec());
    let mut options = SweepOptions { seed: cli.seed, ..SweepOptions::default() };
    if let Some(r) = cli.restarts {
        options.restarts = r;
    }
    let t = loaded.file.point();
    let runs = protocol_sweep(&loaded.family, alpha, &t, &n_list, &options)?;
    let mut table = Table::new([
        "n", "alpha", "v", "spacing", "num_points", "cost_bits", "err_upper", "err_exact", "err_lower", "thm1_rate",
    ]);
    for r in &runs {
        table.push(vec![
            r.n.into(),
            r.alpha.into(),
            r.v.into(),
            r.spacing.into(),
            r.num_points.into(),
            r.cost_bits.into(),
            r.err_upper.into(),
            r.err_exact.into(),
            r.err_lower.into(),
            r.rate_bound.into(),
        ]);
    }
    let context = cli.context(Some(&loaded), json!({ "t": t, "alpha": alpha, "n": n_list, "restarts": options.restarts }));
    cli.emit_table(&context, &table, &runs)
}

fn cmd_metrology_sim(cli: &Cli) -> anyhow::Result<()> {
    let loaded = cli.load_family()?;
    if loaded.file.family != "bitflip" {
        return Err(qchan::Error::FamilyFile {
            line: loaded.file.line_of("family"),
            message: format!("`metrology-sim` supports family = bitflip, got `{}`", loaded.file.family),
        }
        .into());
    }
    let defaults = ExperimentOptions::default();
    let options = ExperimentOptions {
        trials: cli.trials.unwrap_or(defaults.trials),
        confidence: cli.confidence.unwrap_or(defaults.confidence),
        seed: cli.seed,
        ..defaults
    };
    let n_list = cli.n.clone().unwrap_or(DEFAULT_N.to_vec());
    let t = loaded.file.point();
    let strategy = ProductStrategy::bitflip_z();
    let reports = n_list
        .par_iter()
        .map(|&n| estimation_experiment(&loaded.family, &strategy, &t, n, &options))
        .collect::<qchan::Result<Vec<_>>>()?;
    let mut table = Table::new([
        "n", "trials", "mse_empirical", "mse_stderr", "inaccuracy_p", "mi_empirical", "bound1", "bound2", "condition_ok",
    ]);
    for r in &reports {
        table.push(vec![
            r.n.into(),
            r.trials.into(),
            r.mse_empirical.into(),
            r.mse_stderr.into(),
            r.inaccuracy_p.into(),
            r.mi_empirical.into(),
            r.bound1.into(),
            r.bound2.into(),
            r.condition_ok.into(),
        ]);
    }
    let context = cli.context(
        Some(&loaded),
        json!({
            "t": t,
            "n": n_list,
            "trials": options.trials,
            "confidence": options.confidence,
            "prior_points": options.prior_points,
            "strategy": "z measurement on |0>, frequency estimate",
        }),
    );
    cli.emit_table(&context, &table, &reports)
}

fn cmd_bounds(cli: &Cli, v: Option<usize>, beta: Option<f64>, eps: f64) -> anyhow::Result<()> {
    let loaded = match (v, beta, &cli.family) {
        (Some(_), Some(_), _) => None,
        (_, _, Some(_)) => Some(cli.load_family()?),
        _ => return Err(CliError::Config("`bounds` needs --v and --beta, or --family".into()).into()),
    };
    let v = match (v, &loaded) {
        (Some(v), _) => v,
        (None, Some(l)) => l.family.v(),
        (None, None) => unreachable!("checked above"),
    };
    let beta = match (beta, &loaded) {
        (Some(b), _) => b,
        (None, Some(l)) => classify_beta(&l.family)?.value().ok_or_else(|| {
            CliError::Config("the scaling exponent of this family is not classified; pass --beta".into())
        })?,
        (None, None) => unreachable!("checked above"),
    };
    let result = json!({
        "simulation": simulation_rate(v, beta, eps)?,
        "communication": program_rate(v, beta, eps)?,
    });
    let context = cli.context(loaded.as_ref(), json!({ "v": v, "beta": beta, "eps": eps }));
    cli.emit_report(&context, &result)
}

fn cmd_validate(cli: &Cli) -> anyhow::Result<()> {
    let loaded = cli.load_family()?;
    let report = check_conditions(&loaded.family)?;
    let beta = classify_beta(&loaded.family)?;
    let result = json!({
        "condition1": report.condition1,
        "condition2": report.condition2,
        "condition3": report.condition3,
        "jr_max": report.jr_max,
        "sample_points": report.sample_points,
        "scaling": beta,
    });
    let context = cli.context(Some(&loaded), json!({}));
    cli.emit_report(&context, &result)
}

fn cmd_acceptance(cli: &Cli) -> anyhow::Result<()> {
    let report = run_full(cli.seed);
    let context = cli.context(None, json!({}));
    let text = match cli.format {
        Some(Format::Json) => to_json(&context, &report)?,
        Some(Format::Csv) => {
            let mut table = Table::new(["id", "title", "passed", "detail"]);
            for o in &report.outcomes {
                table.push(vec![o.id.into(), Cell::Text(o.title.to_string()), o.passed.into(), Cell::Text(format!("\"{}\"", o.detail.replace('"', "\"\"")))]);
            }
            table.to_csv(&context)
        }
        None => report.table(),
    };
    if cli.out.is_some() {
        print!("{}", report.table());
    }
    cli.emit(&text)?;
    let failed = report.outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(CliError::AcceptanceFailed(failed).into());
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Fisher { sweep, points } => cmd_fisher(cli, *sweep, *points),
        Command::D2 => cmd_d2(cli),
        Command::ProtocolSweep => cmd_protocol_sweep(cli),
        Command::MetrologySim => cmd_metrology_sim(cli),
        Command::Bounds { v, beta, eps } => cmd_bounds(cli, *v, *beta, *eps),
        Command::Validate => cmd_validate(cli),
        Command::Acceptance => cmd_acceptance(cli),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(err) = e.downcast_ref::<qchan::Error>() {
        return match err {
            qchan::Error::InvariantViolation(_) => 2,
            qchan::Error::FamilyFile { .. } => 3,
            _ => 1,
        };
    }
    match e.downcast_ref::<CliError>() {
        Some(CliError::Config(_)) => 3,
        Some(CliError::AcceptanceFailed(_)) => 2,
        None => 1,
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var("QCHAN_THREADS") {
        let k: usize = raw
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("QCHAN_THREADS must be a positive integer, got `{raw}`")))?;
        rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|()| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
