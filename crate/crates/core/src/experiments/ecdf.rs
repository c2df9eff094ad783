use crate::analytic::Cdf;

/// Empirical distribution of a sample: `F(x) = #{samples <= x} / n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
}

impl EmpiricalCdf {
    /// Sorts `samples`; NaNs are discarded.
    pub fn new(mut samples: Vec<f64>) -> Self {
        samples.retain(|x| !x.is_nan());
        samples.sort_by(f64::total_cmp);
        EmpiricalCdf { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `#{samples <= x}`.
    pub fn count_le(&self, x: f64) -> usize {
        self.samples.partition_point(|&s| s <= x)
    }

    /// Right-continuous step function; zero for an empty sample.
    pub fn eval(&self, x: f64) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.count_le(x) as f64 / self.samples.len() as f64
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.samples.is_empty())
            .then(|| self.samples.iter().sum::<f64>() / self.samples.len() as f64)
    }
}

impl Cdf for EmpiricalCdf {
    fn cdf(&self, x: f64) -> f64 {
        self.eval(x)
    }
}

/// Kolmogorov–Smirnov distance `sup_x |F_n(x) - F(x)|`, checking both sides
/// of every step. Returns 0 for an empty sample.
pub fn ks_distance<C: Cdf + ?Sized>(emp: &EmpiricalCdf, cdf: &C) -> f64 {
    let s = emp.samples();
    let n = s.len() as f64;
    let mut sup: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let mut j = i + 1;
        while j < s.len() && s[j] == x {
            j += 1;
        }
        let f = cdf.cdf(x);
        let below = i as f64 / n;
        let at = j as f64 / n;
        sup = sup.max((f - below).abs()).max((at - f).abs());
        i = j;
    }
    sup
}

/// Total variation distance between two probability vectors; missing
/// entries count as zero.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    (0..n)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
        / 2.0
}

/// Standard error of a binomial proportion with success probability `p`.
pub fn binomial_sd(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Standard normal quantiles for two-sided 95% and 99% intervals.
pub const Z_95: f64 = 1.959_963_984_540_054;
pub const Z_99: f64 = 2.575_829_303_548_901;

/// Count, mean and spread accumulated in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combines two partial accumulations.
    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 +=
            other.m2 + delta * delta * (self.count as f64 * other.count as f64) / total as f64;
        self.count = total;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then_some(self.mean)
    }

    /// Sample standard deviation.
    pub fn std_dev(&self) -> Option<f64> {
        (self.count > 1).then(|| (self.m2 / (self.count - 1) as f64).sqrt())
    }
}
