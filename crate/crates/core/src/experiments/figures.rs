//! Recipes reproducing the PDV, PSV and window-design studies.
//!
//! | name  | study                                    | approximation |
//! |-------|------------------------------------------|---------------|
//! | fig3a | PDV CDF, computation-dominated           | comp          |
//! | fig3b | PDV CDF, propagation-dominated           | prop          |
//! | fig4a | PSV vs W over protocol settings          | comp          |
//! | fig4b | PSV vs W over protocol settings          | prop          |
//! | fig5a | designed W and latency over C ranges     | comp          |
//! | fig5b | designed W and latency over (D_max, v)   | prop          |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::ecdf::{ks_distance, wilson_interval, Z_95};
use super::monte_carlo::{run_monte_carlo, McOptions, MonteCarloResult};
use super::report::{fmt_sig, write_file, Table};
use crate::analytic::{design_twi, Approximation, PsvCurve, PsvMode};
use crate::exec::ExecPolicy;
use crate::params::{CommConfig, ScenarioConfig, Setup};
use crate::sim::ChannelMode;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureName {
    Fig3a,
    Fig3b,
    Fig4a,
    Fig4b,
    Fig5a,
    Fig5b,
    Custom,
}

impl FigureName {
    pub const ALL: [FigureName; 7] = [
        FigureName::Fig3a,
        FigureName::Fig3b,
        FigureName::Fig4a,
        FigureName::Fig4b,
        FigureName::Fig5a,
        FigureName::Fig5b,
        FigureName::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureName::Fig3a => "fig3a",
            FigureName::Fig3b => "fig3b",
            FigureName::Fig4a => "fig4a",
            FigureName::Fig4b => "fig4b",
            FigureName::Fig5a => "fig5a",
            FigureName::Fig5b => "fig5b",
            FigureName::Custom => "custom",
        }
    }

    pub fn approximation(self) -> Approximation {
        match self {
            FigureName::Fig3a | FigureName::Fig4a | FigureName::Fig5a | FigureName::Custom => {
                Approximation::Comp
            }
            FigureName::Fig3b | FigureName::Fig4b | FigureName::Fig5b => Approximation::Prop,
        }
    }
}

impl std::str::FromStr for FigureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureName::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = FigureName::ALL.iter().map(|f| f.name()).collect();
                Error::Config(format!(
                    "unknown figure '{s}'; valid names: {}",
                    names.join(", ")
                ))
            })
    }
}

/// Protocol setting of one PSV curve: retry limits and sensor count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommSetting {
    pub max_sr_attempts: u32,
    pub max_pt_attempts: u32,
    pub sensors: usize,
}

/// A named study with its sweep lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub figure: FigureName,
    pub replications: u64,
    pub master_seed: u64,
    /// Target violation probability for the design studies.
    pub target_sigma: f64,
    /// Window grid for PSV curves; derived from the support when absent.
    pub w_grid: Option<Vec<f64>>,
    /// Curves of fig4a/fig4b.
    pub comm_sweep: Vec<CommSetting>,
    /// `(C_min, C_max)` setups of fig5a, in seconds.
    pub comp_sweep: Vec<(f64, f64)>,
    /// `(D_max, v)` setups of fig5b.
    pub prop_sweep: Vec<(f64, f64)>,
    /// Setup and approximation of a custom study.
    pub custom: Option<(Setup, Approximation)>,
    pub mode: ChannelMode,
    pub policy: ExecPolicy,
}

const FRAME: f64 = 0.01;

fn scenario(speed: f64, max_distance: f64, comp: (f64, f64)) -> ScenarioConfig {
    ScenarioConfig {
        t0: 0.0,
        speed,
        max_distance,
        sensors: 2,
        comp_min: comp.0,
        comp_max: comp.1,
        allow_degenerate_comp: false,
    }
}

fn comm(max_sr: u32, max_pt: u32) -> CommConfig {
    CommConfig {
        gamma_th_override: Some(1.0),
        ..CommConfig::new(FRAME, max_sr, max_pt)
    }
}

impl SweepSpec {
    /// The study with its default sweep lists, 10^6 replications per setup.
    pub fn new(figure: FigureName) -> Self {
        SweepSpec {
            figure,
            replications: 1_000_000,
            master_seed: 1,
            target_sigma: 1e-3,
            w_grid: None,
            comm_sweep: [(1, 1, 2), (3, 3, 2), (5, 5, 2), (9, 7, 2), (5, 5, 4)]
                .into_iter()
                .map(|(m, n, i)| CommSetting {
                    max_sr_attempts: m,
                    max_pt_attempts: n,
                    sensors: i,
                })
                .collect(),
            comp_sweep: vec![
                (0.01, 0.1),
                (0.01, 0.25),
                (0.01, 0.5),
                (0.05, 0.5),
                (0.1, 1.0),
            ],
            prop_sweep: vec![
                (50.0, 300.0),
                (100.0, 300.0),
                (200.0, 300.0),
                (100.0, 150.0),
                (500.0, 343.0),
            ],
            custom: None,
            mode: ChannelMode::Statistical,
            policy: ExecPolicy::Parallel,
        }
    }

    pub fn custom(setup: Setup, approximation: Approximation) -> Self {
        SweepSpec {
            custom: Some((setup, approximation)),
            ..SweepSpec::new(FigureName::Custom)
        }
    }

    /// Setup of the study with the first entry of its sweep list.
    pub fn base_setup(&self) -> Result<Setup> {
        let setup = match self.figure {
            FigureName::Fig3a => {
                Setup::with_uniform_gamma(scenario(3e8, 100.0, (0.01, 0.5)), comm(5, 5), 1.0)
            }
            FigureName::Fig3b => {
                Setup::with_uniform_gamma(scenario(300.0, 100.0, (0.01, 0.1)), comm(5, 5), 1.0)
            }
            FigureName::Fig4a | FigureName::Fig4b => {
                let c = self
                    .comm_sweep
                    .first()
                    .ok_or_else(|| Error::Config("empty protocol sweep".into()))?;
                self.fig4_setup(c)
            }
            FigureName::Fig5a => {
                let c = *self
                    .comp_sweep
                    .first()
                    .ok_or_else(|| Error::Config("empty computation sweep".into()))?;
                Setup::with_uniform_gamma(scenario(3e8, 100.0, c), comm(9, 7), 4.0)
            }
            FigureName::Fig5b => {
                let (d, v) = *self
                    .prop_sweep
                    .first()
                    .ok_or_else(|| Error::Config("empty propagation sweep".into()))?;
                Setup::with_uniform_gamma(scenario(v, d, (0.0, 0.01)), comm(9, 7), 4.0)
            }
            FigureName::Custom => self
                .custom
                .as_ref()
                .map(|(s, _)| s.clone())
                .ok_or_else(|| Error::Config("custom study needs a configuration".into()))?,
        };
        setup.validate()?;
        Ok(setup)
    }

    fn fig4_setup(&self, c: &CommSetting) -> Setup {
        let sc = if self.figure == FigureName::Fig4a {
            scenario(3e8, 100.0, (0.01, 0.5))
        } else {
            scenario(300.0, 100.0, (0.0, 0.01))
        };
        Setup::with_uniform_gamma(
            ScenarioConfig {
                sensors: c.sensors,
                ..sc
            },
            comm(c.max_sr_attempts, c.max_pt_attempts),
            4.0,
        )
    }

    fn approximation(&self) -> Approximation {
        match &self.custom {
            Some((_, a)) if self.figure == FigureName::Custom => *a,
            _ => self.figure.approximation(),
        }
    }

    fn mc_options(&self, w_grid: Vec<f64>) -> McOptions {
        McOptions {
            replications: self.replications,
            master_seed: self.master_seed,
            w_grid,
            mode: self.mode,
            policy: self.policy,
        }
    }
}

/// Files written by a recipe, plus one-line findings (KS distances,
/// designed windows) for the console.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FigureReport {
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

/// Window grid `W = k T_f / 2` up to 1.25 times the support top.
pub fn default_w_grid(top: f64, frame: f64) -> Vec<f64> {
    let step = frame / 2.0;
    let count = ((1.25 * top) / step).ceil().max(2.0) as usize;
    (1..=count).map(|k| k as f64 * step).collect()
}

/// PDV CDF table: analytic against empirical on a uniform grid.
pub fn pdv_table(mc: &MonteCarloResult, dist: &crate::analytic::ClosedFormDist) -> Table {
    let (_, top) = dist.support();
    let span = if top > 0.0 {
        1.25 * top
    } else {
        mc.pdv.samples().last().copied().unwrap_or(1.0)
    };
    let mut table = Table::new(&["t_s", "cdf_analytic", "cdf_empirical"]);
    for i in 0..=500 {
        let t = span * i as f64 / 500.0;
        table.push_values(&[t, dist.cdf(t), mc.pdv.eval(t)]);
    }
    table
}

/// PSV table in the `W_s, sigma_analytic, sigma_frame_sampled,
/// sigma_empirical, ci_low, ci_high` schema.
pub fn psv_table(
    mc: &MonteCarloResult,
    dist: &crate::analytic::ClosedFormDist,
    rho2: f64,
    frame: f64,
    mode: PsvMode,
) -> Table {
    let curve = PsvCurve::new(mode, rho2, dist.clone());
    let sigma_hat = mc.empirical_psv();
    let delivered = mc.reference_received();
    let mut table = Table::new(&[
        "W_s",
        "sigma_analytic",
        "sigma_frame_sampled",
        "sigma_empirical",
        "ci_low",
        "ci_high",
    ]);
    for (&w, &s) in mc.w_grid.iter().zip(&sigma_hat) {
        let (lo, hi) = wilson_interval((s * delivered as f64).round() as u64, delivered, Z_95);
        table.push_values(&[w, curve.at(w), curve.frame_sampled(w, frame), s, lo, hi]);
    }
    table
}

fn psv_mode(a: Approximation) -> PsvMode {
    match a {
        Approximation::Comp => PsvMode::Comp,
        Approximation::Prop => PsvMode::Prop,
    }
}

/// Runs the study and writes its CSV files and a gnuplot script to `out_dir`.
pub fn reproduce_figure(spec: &SweepSpec, out_dir: &Path) -> Result<FigureReport> {
    match spec.figure {
        FigureName::Fig3a | FigureName::Fig3b => reproduce_pdv(spec, out_dir),
        FigureName::Fig4a | FigureName::Fig4b => reproduce_psv(spec, out_dir),
        FigureName::Fig5a | FigureName::Fig5b => reproduce_design(spec, out_dir),
        FigureName::Custom => {
            let mut report = reproduce_pdv(spec, out_dir)?;
            let psv = reproduce_psv(spec, out_dir)?;
            report.files.extend(psv.files);
            report.notes.extend(psv.notes);
            Ok(report)
        }
    }
}

fn reproduce_pdv(spec: &SweepSpec, out_dir: &Path) -> Result<FigureReport> {
    let name = spec.figure.name();
    let setup = spec.base_setup()?;
    let approx = spec.approximation();
    let dist = approx.dist(&setup.scenario)?;
    let mc = run_monte_carlo(&setup, &spec.mc_options(Vec::new()))?;
    let ks = ks_distance(&mc.pdv, &dist);

    let mut report = FigureReport::default();
    let csv = out_dir.join(format!("pdv_{name}.csv"));
    write_file(&csv, &pdv_table(&mc, &dist).to_csv())?;
    report.files.push(csv.clone());

    let mut summary = Table::new(&["key", "value"]);
    for (k, v) in [
        ("approximation", approx.name().to_string()),
        ("replications", mc.replications.to_string()),
        ("master_seed", spec.master_seed.to_string()),
        ("pdv_samples", mc.pdv.len().to_string()),
        ("ks_distance", fmt_sig(ks)),
        ("rho2", fmt_sig(setup.rho2()?)),
    ] {
        summary.push_row(vec![k.to_string(), v]);
    }
    let summary_path = out_dir.join(format!("summary_{name}.csv"));
    write_file(&summary_path, &summary.to_csv())?;
    report.files.push(summary_path);

    let mut gp = plot_header(name, "PDV t (s)", "CDF");
    let file = file_name(&csv);
    let _ = writeln!(
        gp,
        "plot '{file}' using 1:2 with lines title 'analytic ({})', \\\n     '{file}' using 1:3 with steps title 'Monte Carlo'",
        approx.name()
    );
    let gp_path = out_dir.join(format!("plot_{name}.gp"));
    write_file(&gp_path, &gp)?;
    report.files.push(gp_path);
    report.notes.push(format!(
        "{name}: KS distance empirical PDV vs {} = {}",
        approx.name(),
        fmt_sig(ks)
    ));
    Ok(report)
}

fn reproduce_psv(spec: &SweepSpec, out_dir: &Path) -> Result<FigureReport> {
    let name = spec.figure.name();
    let approx = spec.approximation();
    let setups: Vec<(String, Setup)> = if spec.figure == FigureName::Custom {
        vec![("custom".to_string(), spec.base_setup()?)]
    } else {
        spec.comm_sweep
            .iter()
            .map(|c| {
                let label = format!(
                    "{name}_m{}_n{}_i{}",
                    c.max_sr_attempts, c.max_pt_attempts, c.sensors
                );
                (label, spec.fig4_setup(c))
            })
            .collect()
    };

    let mut report = FigureReport::default();
    let mut gp = plot_header(name, "W (s)", "PSV");
    let _ = writeln!(gp, "set logscale y");
    let mut plots = Vec::new();
    for (label, setup) in setups {
        setup.validate()?;
        let dist = approx.dist(&setup.scenario)?;
        let rho2 = setup.rho2()?;
        let grid = spec
            .w_grid
            .clone()
            .unwrap_or_else(|| default_w_grid(dist.support().1, setup.comm.frame));
        let mc = run_monte_carlo(&setup, &spec.mc_options(grid))?;
        let table = psv_table(&mc, &dist, rho2, setup.comm.frame, psv_mode(approx));
        let path = out_dir.join(format!("psv_{label}.csv"));
        write_file(&path, &table.to_csv())?;
        let file = file_name(&path);
        plots.push(format!(
            "'{file}' using 1:2 with lines title '{label} analytic'"
        ));
        plots.push(format!(
            "'{file}' using 1:3 with steps title '{label} frame-sampled'"
        ));
        plots.push(format!(
            "'{file}' using 1:4 with points title '{label} Monte Carlo'"
        ));
        report.files.push(path);
        report.notes.push(format!(
            "{label}: rho2 = {}, reference deliveries = {}",
            fmt_sig(rho2),
            mc.reference_received()
        ));
    }
    let _ = writeln!(gp, "plot {}", plots.join(", \\\n     "));
    let gp_path = out_dir.join(format!("plot_{name}_psv.gp"));
    write_file(&gp_path, &gp)?;
    report.files.push(gp_path);
    Ok(report)
}

fn reproduce_design(spec: &SweepSpec, out_dir: &Path) -> Result<FigureReport> {
    let name = spec.figure.name();
    let approx = spec.approximation();
    let setups: Vec<(Setup, Vec<(&str, f64)>)> = match spec.figure {
        FigureName::Fig5a => spec
            .comp_sweep
            .iter()
            .map(|&c| {
                let setup = Setup::with_uniform_gamma(scenario(3e8, 100.0, c), comm(9, 7), 4.0);
                (setup, vec![("c_min_s", c.0), ("c_max_s", c.1)])
            })
            .collect(),
        _ => spec
            .prop_sweep
            .iter()
            .map(|&(d, v)| {
                let setup = Setup::with_uniform_gamma(scenario(v, d, (0.0, 0.01)), comm(9, 7), 4.0);
                (setup, vec![("d_max_m", d), ("v_mps", v)])
            })
            .collect(),
    };
    let prefix = if approx == Approximation::Comp {
        "C"
    } else {
        "P"
    };

    let mut design_table = Table::new(&[
        "setup_id",
        "W_star_s",
        "W_frame_s",
        "mean_latency_s",
        "std_latency_s",
    ]);
    let param_names: Vec<&str> = setups
        .first()
        .map(|(_, p)| p.iter().map(|(k, _)| *k).collect())
        .unwrap_or_default();
    let mut header = vec!["setup_id"];
    header.extend(&param_names);
    header.extend([
        "rho2",
        "sigma_W_star",
        "sigma_empirical_W_star",
        "mean_first_arrival_s",
    ]);
    let mut setup_table = Table::new(&header);
    let mut report = FigureReport::default();

    for (k, (setup, params)) in setups.into_iter().enumerate() {
        setup.validate()?;
        let id = format!("{prefix}{}", k + 1);
        let dist = approx.dist(&setup.scenario)?;
        let rho2 = setup.rho2()?;
        let design = design_twi(spec.target_sigma, rho2, &dist, setup.comm.frame)?;
        let mc = run_monte_carlo(&setup, &spec.mc_options(vec![design.w_star]))?;
        let lat = &mc.latency[0];
        let nan = f64::NAN;
        design_table.push_row(vec![
            id.clone(),
            fmt_sig(design.w_star),
            fmt_sig(design.w_frame),
            fmt_sig(lat.mean().unwrap_or(nan)),
            fmt_sig(lat.std_dev().unwrap_or(nan)),
        ]);
        let mut row = vec![id.clone()];
        row.extend(params.iter().map(|(_, v)| fmt_sig(*v)));
        row.extend([
            fmt_sig(rho2),
            fmt_sig(design.sigma_star),
            fmt_sig(mc.empirical_psv()[0]),
            fmt_sig(mc.first_arrival.mean().unwrap_or(nan)),
        ]);
        setup_table.push_row(row);
        report.notes.push(format!(
            "{id}: W* = {} s, frame-aligned W = {} s",
            fmt_sig(design.w_star),
            fmt_sig(design.w_frame)
        ));
    }

    let design_path = out_dir.join(format!("design_{name}.csv"));
    write_file(&design_path, &design_table.to_csv())?;
    let setups_path = out_dir.join(format!("setups_{name}.csv"));
    write_file(&setups_path, &setup_table.to_csv())?;

    let mut gp = plot_header(name, "setup", "time (s)");
    let file = file_name(&design_path);
    let _ = writeln!(gp, "set style data histograms\nset style fill solid 0.5");
    let _ = writeln!(
        gp,
        "plot '{file}' using 2:xtic(1) title 'W*', '' using 3 title 'frame-aligned W', '' using 4 title 'mean latency'"
    );
    let gp_path = out_dir.join(format!("plot_{name}.gp"));
    write_file(&gp_path, &gp)?;
    report.files.extend([design_path, setups_path, gp_path]);
    Ok(report)
}

fn plot_header(name: &str, xlabel: &str, ylabel: &str) -> String {
    format!(
        "# gnuplot script for {name}\nset datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 800,600\nset output '{name}.png'\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\n"
    )
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default()
}
