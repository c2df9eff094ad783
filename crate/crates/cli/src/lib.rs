//! Command-line front end: configuration files, analytic queries, window
//! design, Monte Carlo runs and figure reproduction.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use twi_core::analytic::{design_twi, Approximation, ClosedFormDist, PsvCurve, PsvMode};
use twi_core::exec::ExecPolicy;
use twi_core::experiments::{
    default_w_grid, fmt_sig, ks_distance, psv_table, reproduce_figure, run_monte_carlo, write_file,
    FigureName, McOptions, SweepSpec, Table,
};
use twi_core::params::Setup;
use twi_core::sim::{ChannelMode, SeedSpec, Simulator};
use twi_core::{Error, Result};

pub use config::{echo_config, load_config, parse_config};

#[derive(Debug, Parser)]
#[command(
    name = "twi",
    version,
    about = "Temporal window of integration analysis and simulation"
)]
pub struct Cli {
    /// Configuration file (`key = value` lines); defaults apply when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for Monte Carlo replications (0 = all cores).
    #[arg(long, global = true, env = "TWI_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the closed-form PDV distribution or PSV curve.
    Analytic(AnalyticArgs),
    /// Design the window duration for a target violation probability.
    DesignTwi(DesignArgs),
    /// Run a Monte Carlo simulation of the configured scenario.
    Simulate(SimulateArgs),
    /// Reproduce one of the named studies.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Comp,
    Prop,
}

impl From<DistArg> for Approximation {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Comp => Approximation::Comp,
            DistArg::Prop => Approximation::Prop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Query {
    Cdf,
    Pdf,
    Psv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Statistical,
    #[value(name = "signal_level")]
    SignalLevel,
}

impl From<ModeArg> for ChannelMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Statistical => ChannelMode::Statistical,
            ModeArg::SignalLevel => ChannelMode::SignalLevel,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    #[arg(long, value_enum, default_value = "comp")]
    pub dist: DistArg,
    #[arg(long, value_enum, default_value = "cdf")]
    pub query: Query,
    /// Single evaluation point (s).
    #[arg(long, conflicts_with = "grid", allow_hyphen_values = true)]
    pub at: Option<f64>,
    /// Evaluation grid `start:stop:step` (s), stop included.
    #[arg(long)]
    pub grid: Option<String>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub target_sigma: f64,
    #[arg(long, value_enum, default_value = "comp")]
    pub dist: DistArg,
    /// Also write the design as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub replications: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "statistical")]
    pub mode: ModeArg,
    /// Window durations (s); defaults to half-frame steps over the PDV support.
    #[arg(long = "w", value_delimiter = ',', allow_hyphen_values = true)]
    pub w: Vec<f64>,
    /// Approximation used for the analytic columns.
    #[arg(long, value_enum, default_value = "comp")]
    pub dist: DistArg,
    #[arg(long, env = "TWI_OUT_DIR", default_value = "twi-out")]
    pub out_dir: PathBuf,
    /// Also write the frame-level protocol trace of the first replications.
    #[arg(long)]
    pub trace: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// fig3a, fig3b, fig4a, fig4b, fig5a, fig5b or custom.
    pub name: String,
    #[arg(long, env = "TWI_OUT_DIR", default_value = "twi-out")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub replications: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Approximation of a custom study.
    #[arg(long, value_enum, default_value = "comp")]
    pub dist: DistArg,
}

/// Runs a parsed command line, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn std::io::Write) -> Result<()> {
    let threads = cli.threads.unwrap_or(0);
    let mut buf: Vec<u8> = Vec::new();
    let result = with_threads(threads, || dispatch(cli, &mut buf));
    out.write_all(&buf).map_err(|e| Error::io("<stdout>", e))?;
    result
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    f()
}

fn dispatch(cli: &Cli, out: &mut dyn std::io::Write) -> Result<()> {
    match &cli.command {
        Command::Analytic(a) => cmd_analytic(&load_config(cli.config.as_deref())?, a, out),
        Command::DesignTwi(a) => cmd_design(&load_config(cli.config.as_deref())?, a, out),
        Command::Simulate(a) => cmd_simulate(&load_config(cli.config.as_deref())?, a, out),
        Command::Reproduce(a) => cmd_reproduce(cli.config.as_deref(), a, out),
    }
}

fn emit(out: &mut dyn std::io::Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

/// Parses `start:stop:step`, including `stop` up to rounding.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Config(format!("grid must read start:stop:step, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, stop, step) = (v[0], v[1], v[2]);
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::Config(format!(
            "grid needs finite start <= stop and step > 0, got `{text}`"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

fn analytic_dist(setup: &Setup, dist: DistArg) -> Result<ClosedFormDist> {
    Approximation::from(dist).dist(&setup.scenario)
}

fn psv_mode(dist: DistArg) -> PsvMode {
    match dist {
        DistArg::Comp => PsvMode::Comp,
        DistArg::Prop => PsvMode::Prop,
    }
}

fn cmd_analytic(setup: &Setup, a: &AnalyticArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let points = match (&a.at, &a.grid) {
        (Some(x), _) => vec![*x],
        (None, Some(g)) => parse_grid(g)?,
        (None, None) => return Err(Error::Config("one of --at or --grid is required".into())),
    };
    if let Some(x) = points.iter().find(|x| !x.is_finite()) {
        return Err(Error::Domain(format!(
            "evaluation point must be finite, got {x}"
        )));
    }
    let dist = analytic_dist(setup, a.dist)?;
    let table = match a.query {
        Query::Cdf | Query::Pdf => {
            let name = if a.query == Query::Cdf { "cdf" } else { "pdf" };
            let mut t = Table::new(&["t_s", name]);
            for &x in &points {
                let y = if a.query == Query::Cdf {
                    dist.cdf(x)
                } else {
                    dist.pdf(x)
                };
                t.push_values(&[x, y]);
            }
            t
        }
        Query::Psv => {
            if let Some(x) = points.iter().find(|x| **x < 0.0) {
                return Err(Error::Domain(format!(
                    "window duration must be non-negative, got {x}"
                )));
            }
            let curve = PsvCurve::new(psv_mode(a.dist), setup.rho2()?, dist);
            let mut t = Table::new(&["W_s", "sigma", "sigma_frame_sampled"]);
            for &w in &points {
                t.push_values(&[w, curve.at(w), curve.frame_sampled(w, setup.comm.frame)]);
            }
            t
        }
    };
    match &a.out {
        Some(path) => write_file(path, &table.to_csv()),
        None => emit(out, &table.to_csv()),
    }
}

fn cmd_design(setup: &Setup, a: &DesignArgs, out: &mut dyn std::io::Write) -> Result<()> {
    if !(a.target_sigma > 0.0 && a.target_sigma < 1.0) {
        return Err(Error::Domain(format!(
            "target sigma must lie in (0, 1), got {}",
            a.target_sigma
        )));
    }
    let dist = analytic_dist(setup, a.dist)?;
    let rho2 = setup.rho2()?;
    let d = design_twi(a.target_sigma, rho2, &dist, setup.comm.frame)?;
    let rows = [
        ("target_sigma", d.target),
        ("rho2", d.rho2),
        ("W_star_s", d.w_star),
        ("W_frame_s", d.w_frame),
        ("sigma_W_star", d.sigma_star),
        ("sigma_W_frame", d.sigma_frame),
    ];
    let text: String = rows
        .iter()
        .map(|(k, v)| format!("{k} = {}\n", fmt_sig(*v)))
        .collect();
    emit(out, &text)?;
    if let Some(path) = &a.out {
        let mut t = Table::new(&rows.map(|(k, _)| k));
        t.push_values(&rows.map(|(_, v)| v));
        write_file(path, &t.to_csv())?;
    }
    Ok(())
}

fn cmd_simulate(setup: &Setup, a: &SimulateArgs, out: &mut dyn std::io::Write) -> Result<()> {
    if a.replications < 1 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    let dist = analytic_dist(setup, a.dist)?;
    let w_grid = if a.w.is_empty() {
        default_w_grid(dist.support().1, setup.comm.frame)
    } else {
        a.w.clone()
    };
    let opts = McOptions {
        replications: a.replications,
        master_seed: a.seed,
        w_grid,
        mode: a.mode.into(),
        policy: ExecPolicy::Parallel,
    };
    let mc = run_monte_carlo(setup, &opts)?;
    let dir = &a.out_dir;
    let mut files: Vec<PathBuf> = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &text)?;
        files.push(path);
        Ok(())
    };

    put("config_resolved.txt", echo_config(setup))?;

    let mut pdv = Table::new(&["pdv_s"]);
    mc.pdv.samples().iter().for_each(|&x| pdv.push_values(&[x]));
    put("pdv_samples.csv", pdv.to_csv())?;

    let rho2 = setup.rho2()?;
    put(
        "psv.csv",
        psv_table(&mc, &dist, rho2, setup.comm.frame, psv_mode(a.dist)).to_csv(),
    )?;

    let mut lat = Table::new(&[
        "W_s",
        "mean_latency_s",
        "std_latency_s",
        "deliveries",
        "violation_frequency",
    ]);
    for ((w, stats), freq) in mc
        .w_grid
        .iter()
        .zip(&mc.latency)
        .zip(mc.violation_frequency())
    {
        lat.push_row(vec![
            fmt_sig(*w),
            fmt_sig(stats.mean().unwrap_or(f64::NAN)),
            fmt_sig(stats.std_dev().unwrap_or(f64::NAN)),
            stats.count().to_string(),
            fmt_sig(freq),
        ]);
    }
    put("latency.csv", lat.to_csv())?;

    let links = setup.derived_links()?;
    let mut drops = Table::new(&[
        "sensor_id",
        "sr_attempts",
        "sr_failures",
        "pt_attempts",
        "pt_failures",
        "drops",
        "drop_fraction",
        "zeta_hat",
        "epsilon_hat",
        "zeta",
        "epsilon",
        "rho",
    ]);
    for (i, (c, l)) in mc.links.iter().zip(&links).enumerate() {
        drops.push_row(vec![
            (i + 1).to_string(),
            c.sr_attempts.to_string(),
            c.sr_failures.to_string(),
            c.pt_attempts.to_string(),
            c.pt_failures.to_string(),
            c.drops.to_string(),
            fmt_sig(mc.drop_fraction(i + 1)),
            fmt_sig(c.zeta_hat()),
            fmt_sig(c.epsilon_hat()),
            fmt_sig(l.zeta),
            fmt_sig(l.epsilon),
            fmt_sig(l.rho),
        ]);
    }
    put("drops.csv", drops.to_csv())?;

    let ks = (!mc.pdv.is_empty()).then(|| ks_distance(&mc.pdv, &dist));
    let mut summary = Table::new(&["key", "value"]);
    for (k, v) in [
        ("replications", mc.replications.to_string()),
        ("seed", a.seed.to_string()),
        ("mode", ChannelMode::from(a.mode).name().to_string()),
        (
            "approximation",
            Approximation::from(a.dist).name().to_string(),
        ),
        ("pdv_samples", mc.pdv.len().to_string()),
        ("none_received", mc.none_received.to_string()),
        ("rho2", fmt_sig(rho2)),
        ("ks_distance", ks.map_or("nan".to_string(), fmt_sig)),
    ] {
        summary.push_row(vec![k.to_string(), v]);
    }
    put("summary.csv", summary.to_csv())?;

    if let Some(count) = a.trace {
        let sim = Simulator::new(setup.clone(), a.mode.into())?;
        let mut events = Vec::new();
        for r in 0..count.min(a.replications) {
            sim.run_replication_traced(SeedSpec::new(a.seed, r), &mut events);
        }
        let mut t = Table::new(&["replication", "sensor_id", "frame", "event"]);
        for e in &events {
            t.push_row(vec![
                e.replication.to_string(),
                e.sensor_id.to_string(),
                e.frame.to_string(),
                e.kind.name().to_string(),
            ]);
        }
        put("trace.csv", t.to_csv())?;
    }

    let mut text = format!(
        "replications = {}\nrho2 = {}\nks_distance = {}\n",
        mc.replications,
        fmt_sig(rho2),
        ks.map_or("nan".to_string(), fmt_sig)
    );
    for f in &files {
        text.push_str(&format!("wrote {}\n", f.display()));
    }
    emit(out, &text)
}

fn cmd_reproduce(
    config: Option<&Path>,
    a: &ReproduceArgs,
    out: &mut dyn std::io::Write,
) -> Result<()> {
    let figure: FigureName = a.name.parse()?;
    let mut spec = if figure == FigureName::Custom {
        let path = config.ok_or_else(|| Error::Config("the custom study needs --config".into()))?;
        SweepSpec::custom(load_config(Some(path))?, a.dist.into())
    } else {
        SweepSpec::new(figure)
    };
    spec.master_seed = a.seed;
    if let Some(r) = a.replications {
        spec.replications = r;
    }
    let report = reproduce_figure(&spec, &a.out_dir)?;
    if figure == FigureName::Custom {
        write_file(
            &a.out_dir.join("config_resolved.txt"),
            &echo_config(&spec.base_setup()?),
        )?;
    }
    let mut text = String::new();
    for n in &report.notes {
        text.push_str(n);
        text.push('\n');
    }
    for f in &report.files {
        text.push_str(&format!("wrote {}\n", f.display()));
    }
    emit(out, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:0.4:0.1").unwrap().len(), 5);
        assert_eq!(parse_grid("0:0.4:0.01").unwrap().len(), 41);
        assert_eq!(parse_grid("1:1:0.5").unwrap(), vec![1.0]);
        for bad in ["0:1", "0:1:0", "1:0:0.1", "a:1:0.1"] {
            assert!(matches!(parse_grid(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn analytic_cdf_at_support_end() {
        let cli = Cli::parse_from([
            "twi", "analytic", "--dist", "comp", "--query", "cdf", "--at", "0.49",
        ]);
        let mut buf = Vec::new();
        run(&cli, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t_s,cdf\n0.49,1\n");
    }

    #[test]
    fn design_rejects_out_of_range_target() {
        let cli = Cli::parse_from(["twi", "design-twi", "--target-sigma", "1.5"]);
        let e = run(&cli, &mut Vec::new()).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }
}
