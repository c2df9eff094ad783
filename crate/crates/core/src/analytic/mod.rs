//! Closed-form delay distributions, the probability of simultaneity
//! violation (PSV) and its inversion into a window duration.

mod access;
mod dist;
mod oracle;
mod psv;

pub use access::{access_delay_pmf, trunc_geom_pmf, FramePmf, TruncGeomPmf};
pub use dist::{
    action_time_pdf, comp_pdv_dist, distance_pdf, prop_pdv_dist, Cdf, ClosedFormDist, DistKind,
};
pub use oracle::abs_diff_oracle;
pub use psv::{design_twi, invert_psv, psv, Inversion, PsvCurve, PsvMode, TwiDesign};

/// Which closed-form approximation of the two-sensor PDV to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approximation {
    /// Computation delay dominates: `|C1 - C2|`.
    Comp,
    /// Propagation delay dominates: `|D1 - D2| / v`.
    Prop,
}

impl Approximation {
    pub fn name(self) -> &'static str {
        match self {
            Approximation::Comp => "comp",
            Approximation::Prop => "prop",
        }
    }

    /// The PDV distribution of this approximation for `scenario`.
    pub fn dist(self, scenario: &crate::params::ScenarioConfig) -> crate::Result<ClosedFormDist> {
        match self {
            Approximation::Comp => ClosedFormDist::comp_pdv_for(scenario),
            Approximation::Prop => prop_pdv_dist(scenario.max_distance, scenario.speed),
        }
    }
}

impl std::str::FromStr for Approximation {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "comp" => Ok(Approximation::Comp),
            "prop" => Ok(Approximation::Prop),
            other => Err(crate::Error::Config(format!(
                "unknown approximation '{other}' (expected comp or prop)"
            ))),
        }
    }
}
