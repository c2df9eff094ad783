//! Monte Carlo harness, empirical statistics and figure recipes.

mod ecdf;
mod figures;
mod monte_carlo;
mod report;

pub use ecdf::{
    binomial_sd, ks_distance, total_variation, wilson_interval, EmpiricalCdf, RunningStats, Z_95,
    Z_99,
};
pub use figures::{
    default_w_grid, pdv_table, psv_table, reproduce_figure, CommSetting, FigureName, FigureReport,
    SweepSpec,
};
pub use monte_carlo::{empirical_psv, run_monte_carlo, LinkCounts, McOptions, MonteCarloResult};
pub use report::{fmt_sig, write_file, Table};
