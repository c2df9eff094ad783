use crate::params::ScenarioConfig;
use crate::{Error, Result};

/// Anything that can be evaluated as a cumulative distribution function.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Cdf for F {
    fn cdf(&self, x: f64) -> f64 {
        self(x)
    }
}

/// The concrete law behind a [`ClosedFormDist`].
#[derive(Debug, Clone, PartialEq)]
pub enum DistKind {
    /// Sensor distance to the event, `f(d) = 2d / D_max^2`.
    Distance { max_distance: f64 },
    /// Event action time `t0 + D / v`.
    ActionTime {
        t0: f64,
        speed: f64,
        max_distance: f64,
    },
    /// Uniform density, used for computation delays.
    Uniform,
    /// `|C1 - C2|` for uniform computation delays of width `span`.
    CompPdv { span: f64 },
    /// `|D1 - D2| / v` for two sensors uniform on the disc.
    PropPdv { max_distance: f64, speed: f64 },
    /// Unit mass at the lower end of the support.
    PointMass,
    /// Values on a uniform grid over the support, linearly interpolated.
    Tabulated { pdf: Vec<f64>, cdf: Vec<f64> },
}

/// A distribution on a bounded support `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormDist {
    lo: f64,
    hi: f64,
    kind: DistKind,
    label: String,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// Density of the sensor distance, zero outside `[0, D_max]`.
pub fn distance_pdf(d: f64, max_distance: f64) -> f64 {
    if (0.0..=max_distance).contains(&d) {
        2.0 * d / (max_distance * max_distance)
    } else {
        0.0
    }
}

/// Density of the event action time, zero outside `[t0, t0 + D_max / v]`.
pub fn action_time_pdf(t: f64, t0: f64, speed: f64, max_distance: f64) -> f64 {
    let dt = t - t0;
    if dt >= 0.0 && dt <= max_distance / speed {
        2.0 * speed * speed * dt / (max_distance * max_distance)
    } else {
        0.0
    }
}

/// PDV distribution when the computation delay dominates.
pub fn comp_pdv_dist(comp_min: f64, comp_max: f64) -> Result<ClosedFormDist> {
    if !(comp_max > comp_min) || !comp_min.is_finite() || !comp_max.is_finite() {
        return Err(Error::Domain(format!(
            "degenerate computation delay range ({comp_min}, {comp_max}): need C_max > C_min"
        )));
    }
    let span = comp_max - comp_min;
    Ok(ClosedFormDist {
        lo: 0.0,
        hi: span,
        kind: DistKind::CompPdv { span },
        label: "comp".into(),
    })
}

/// PDV distribution when the propagation delay dominates.
pub fn prop_pdv_dist(max_distance: f64, speed: f64) -> Result<ClosedFormDist> {
    positive("D_max", max_distance)?;
    positive("v", speed)?;
    Ok(ClosedFormDist {
        lo: 0.0,
        hi: max_distance / speed,
        kind: DistKind::PropPdv {
            max_distance,
            speed,
        },
        label: "prop".into(),
    })
}

impl ClosedFormDist {
    pub fn distance(max_distance: f64) -> Result<Self> {
        positive("D_max", max_distance)?;
        Ok(ClosedFormDist {
            lo: 0.0,
            hi: max_distance,
            kind: DistKind::Distance { max_distance },
            label: "distance".into(),
        })
    }

    pub fn action_time(t0: f64, speed: f64, max_distance: f64) -> Result<Self> {
        positive("D_max", max_distance)?;
        positive("v", speed)?;
        Ok(ClosedFormDist {
            lo: t0,
            hi: t0 + max_distance / speed,
            kind: DistKind::ActionTime {
                t0,
                speed,
                max_distance,
            },
            label: "action time".into(),
        })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!(
                "uniform needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(ClosedFormDist {
            lo,
            hi,
            kind: DistKind::Uniform,
            label: "uniform".into(),
        })
    }

    /// Unit mass at `at`.
    pub fn point_mass(at: f64) -> Self {
        ClosedFormDist {
            lo: at,
            hi: at,
            kind: DistKind::PointMass,
            label: "point mass".into(),
        }
    }

    /// Comp PDV for a scenario; a point mass at zero when the scenario
    /// explicitly allows `C_min == C_max`.
    pub fn comp_pdv_for(scenario: &ScenarioConfig) -> Result<Self> {
        if scenario.comp_min == scenario.comp_max && scenario.allow_degenerate_comp {
            let mut d = Self::point_mass(0.0);
            d.label = "comp".into();
            return Ok(d);
        }
        comp_pdv_dist(scenario.comp_min, scenario.comp_max)
    }

    /// Builds a distribution from pdf and cdf values on a uniform grid
    /// spanning `[lo, hi]`.
    pub fn tabulated(lo: f64, hi: f64, pdf: Vec<f64>, cdf: Vec<f64>, label: &str) -> Result<Self> {
        if pdf.len() != cdf.len() || pdf.len() < 2 || !(hi > lo) {
            return Err(Error::Domain(
                "tabulated distribution needs matching grids of at least two points".into(),
            ));
        }
        Ok(ClosedFormDist {
            lo,
            hi,
            kind: DistKind::Tabulated { pdf, cdf },
            label: label.into(),
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn kind(&self) -> &DistKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Density at `t`. A point mass reports zero everywhere.
    pub fn pdf(&self, t: f64) -> f64 {
        if t < self.lo || t > self.hi {
            return 0.0;
        }
        match self.kind {
            DistKind::Distance { max_distance } => distance_pdf(t, max_distance),
            DistKind::ActionTime {
                t0,
                speed,
                max_distance,
            } => action_time_pdf(t, t0, speed, max_distance),
            DistKind::Uniform => 1.0 / (self.hi - self.lo),
            DistKind::CompPdv { span } => 2.0 * (span - t) / (span * span),
            DistKind::PropPdv {
                max_distance,
                speed,
            } => {
                let s = max_distance / speed;
                let scale = 2.0 / (3.0 * s.powi(4));
                scale * (2.0 * t.powi(3) - 6.0 * s * s * t + 4.0 * s.powi(3))
            }
            DistKind::PointMass => 0.0,
            DistKind::Tabulated { ref pdf, .. } => self.interpolate(pdf, t),
        }
    }

    /// Cumulative probability `P(X <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t < self.lo {
            return 0.0;
        }
        if t >= self.hi {
            return 1.0;
        }
        let x = t - self.lo;
        let width = self.hi - self.lo;
        match self.kind {
            DistKind::Distance { .. } | DistKind::ActionTime { .. } => (x / width).powi(2),
            DistKind::Uniform => x / width,
            DistKind::CompPdv { span } => (2.0 * span * x - x * x) / (span * span),
            DistKind::PropPdv { .. } => {
                let s = width;
                let scale = 2.0 / (3.0 * s.powi(4));
                scale * (0.5 * x.powi(4) - 3.0 * s * s * x * x + 4.0 * s.powi(3) * x)
            }
            DistKind::PointMass => 1.0,
            DistKind::Tabulated { ref cdf, .. } => self.interpolate(cdf, t),
        }
    }

    fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        let last = values.len() - 1;
        let pos = (t - self.lo) / (self.hi - self.lo) * last as f64;
        let i = (pos.floor() as usize).min(last - 1);
        let frac = pos - i as f64;
        values[i] + frac * (values[i + 1] - values[i])
    }

    /// Smallest `t` in the support with `cdf(t) >= p`, found by bisection
    /// down to a relative bracket width of 1e-12.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!(
                "quantile level must lie in [0, 1], got {p}"
            )));
        }
        let (mut a, mut b) = (self.lo, self.hi);
        if p <= 0.0 || a == b {
            return Ok(a);
        }
        let tol = 1e-12 * (b - a);
        for _ in 0..200 {
            if b - a <= tol {
                break;
            }
            let mid = 0.5 * (a + b);
            if self.cdf(mid) < p {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Mean by composite Simpson quadrature of `t f(t)`.
    pub fn mean(&self) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        let n = 2000;
        let h = (self.hi - self.lo) / n as f64;
        let g = |i: usize| {
            let t = self.lo + i as f64 * h;
            t * self.pdf(t)
        };
        let mut acc = g(0) + g(n);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i);
        }
        acc * h / 3.0
    }
}

impl Cdf for ClosedFormDist {
    fn cdf(&self, x: f64) -> f64 {
        ClosedFormDist::cdf(self, x)
    }
}
