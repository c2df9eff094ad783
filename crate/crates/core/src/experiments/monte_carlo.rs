//! Monte Carlo aggregation over seed-indexed replications.
//!
//! Replications are grouped in fixed-size batches; batches may run in
//! parallel, and their partial results are merged in batch order, so every
//! statistic is a deterministic function of the master seed and the
//! replication count.

use super::ecdf::{binomial_sd, wilson_interval, EmpiricalCdf, RunningStats};
use crate::exec::{map_range, ExecPolicy};
use crate::params::Setup;
use crate::sim::{ChannelMode, PacketOutcome, SeedSpec, Simulator};
use crate::twi::{ingest, TIME_TOLERANCE};
use crate::{Error, Result};

const BATCH_SIZE: u64 = 4096;

/// What to run.
#[derive(Debug, Clone, PartialEq)]
pub struct McOptions {
    pub replications: u64,
    pub master_seed: u64,
    /// Window durations at which violations and latencies are measured.
    pub w_grid: Vec<f64>,
    pub mode: ChannelMode,
    pub policy: ExecPolicy,
}

impl McOptions {
    pub fn new(replications: u64, master_seed: u64, w_grid: Vec<f64>) -> Self {
        McOptions {
            replications,
            master_seed,
            w_grid,
            mode: ChannelMode::Statistical,
            policy: ExecPolicy::Parallel,
        }
    }
}

/// Attempt and drop counters of one sensor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkCounts {
    pub sr_attempts: u64,
    pub sr_failures: u64,
    pub pt_attempts: u64,
    pub pt_failures: u64,
    pub drops: u64,
}

impl LinkCounts {
    fn add(&mut self, o: &PacketOutcome) {
        let sr = o.sr_attempts.made() as u64;
        let pt = o.pt_attempts.made() as u64;
        self.sr_attempts += sr;
        self.sr_failures += sr - o.sr_attempts.succeeded().is_some() as u64;
        self.pt_attempts += pt;
        self.pt_failures += pt - o.pt_attempts.succeeded().is_some() as u64;
        self.drops += o.dropped as u64;
    }

    fn merge(&mut self, other: &LinkCounts) {
        self.sr_attempts += other.sr_attempts;
        self.sr_failures += other.sr_failures;
        self.pt_attempts += other.pt_attempts;
        self.pt_failures += other.pt_failures;
        self.drops += other.drops;
    }

    /// Empirical scheduling-request miss probability.
    pub fn zeta_hat(&self) -> f64 {
        self.sr_failures as f64 / self.sr_attempts as f64
    }

    /// Empirical outage probability.
    pub fn epsilon_hat(&self) -> f64 {
        self.pt_failures as f64 / self.pt_attempts as f64
    }
}

/// Aggregated statistics of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub replications: u64,
    pub sensors: usize,
    pub w_grid: Vec<f64>,
    /// Range of the received arrival times, over replications with at least
    /// two received packets.
    pub pdv: EmpiricalCdf,
    /// Gap between the first two received packets, over replications in
    /// which sensor 1's packet and at least one other were received.
    pub pair_gaps: EmpiricalCdf,
    /// Replications in which sensor 1's packet was the only one received.
    pub reference_alone: u64,
    /// Replications where every packet was dropped.
    pub none_received: u64,
    pub links: Vec<LinkCounts>,
    /// Violating replications per window, from the window buffer.
    pub violations: Vec<u64>,
    /// Latency of the first delivery per window.
    pub latency: Vec<RunningStats>,
    /// First arrival time minus `t0`.
    pub first_arrival: RunningStats,
    /// Histogram of `m + n` over received packets, indexed by frame count.
    pub access_frames: Vec<u64>,
}

impl MonteCarloResult {
    /// Replications that produced at least one delivery.
    pub fn delivered(&self) -> u64 {
        self.replications - self.none_received
    }

    /// Replications in which sensor 1's packet was received.
    pub fn reference_received(&self) -> u64 {
        self.pair_gaps.len() as u64 + self.reference_alone
    }

    /// Empirical PSV per window of `w_grid`, taking sensor 1 as the
    /// reference: among replications where its packet is received, the
    /// fraction where no second packet arrives or the first two are more
    /// than `W` apart.
    pub fn empirical_psv(&self) -> Vec<f64> {
        empirical_psv(&self.pair_gaps, self.reference_alone, &self.w_grid)
    }

    /// Violation frequency per window, from the window buffer.
    pub fn violation_frequency(&self) -> Vec<f64> {
        let d = self.delivered().max(1) as f64;
        self.violations.iter().map(|&v| v as f64 / d).collect()
    }

    /// 95% Wilson interval of the empirical PSV per window.
    pub fn violation_ci(&self) -> Vec<(f64, f64)> {
        let sigma = self.empirical_psv();
        let d = self.reference_received();
        sigma
            .iter()
            .map(|&s| wilson_interval((s * d as f64).round() as u64, d, super::ecdf::Z_95))
            .collect()
    }

    /// Fraction of replications in which `sensor` (1-based) dropped.
    pub fn drop_fraction(&self, sensor: usize) -> f64 {
        self.links[sensor - 1].drops as f64 / self.replications as f64
    }

    /// Binomial standard deviation of the drop fraction around `rho`.
    pub fn drop_sd(&self, rho: f64) -> f64 {
        binomial_sd(rho, self.replications)
    }

    /// Counters summed over sensors.
    pub fn total_link_counts(&self) -> LinkCounts {
        let mut total = LinkCounts::default();
        self.links.iter().for_each(|l| total.merge(l));
        total
    }

    /// Empirical law of `m + n` over frame counts `2, 3, ...`.
    pub fn access_pmf(&self) -> Vec<f64> {
        let total: u64 = self.access_frames.iter().sum();
        self.access_frames
            .iter()
            .skip(2)
            .map(|&c| c as f64 / total.max(1) as f64)
            .collect()
    }
}

/// Fraction of replications whose first two updates are split by a window
/// of each duration in `w_grid`. `alone` replications, with no second
/// packet, violate at every window.
pub fn empirical_psv(pair_gaps: &EmpiricalCdf, alone: u64, w_grid: &[f64]) -> Vec<f64> {
    let delivered = pair_gaps.len() as u64 + alone;
    if delivered == 0 {
        return vec![0.0; w_grid.len()];
    }
    w_grid
        .iter()
        .map(|&w| {
            let split = pair_gaps.len() - pair_gaps.count_le(w + TIME_TOLERANCE);
            (alone + split as u64) as f64 / delivered as f64
        })
        .collect()
}

struct Partial {
    pdv: Vec<f64>,
    pair_gaps: Vec<f64>,
    reference_alone: u64,
    none_received: u64,
    links: Vec<LinkCounts>,
    violations: Vec<u64>,
    latency: Vec<RunningStats>,
    first_arrival: RunningStats,
    access_frames: Vec<u64>,
}

impl Partial {
    fn new(sensors: usize, windows: usize, max_access: usize) -> Self {
        Partial {
            pdv: Vec::new(),
            pair_gaps: Vec::new(),
            reference_alone: 0,
            none_received: 0,
            links: vec![LinkCounts::default(); sensors],
            violations: vec![0; windows],
            latency: vec![RunningStats::default(); windows],
            first_arrival: RunningStats::default(),
            access_frames: vec![0; max_access + 1],
        }
    }

    fn merge(&mut self, other: Partial) {
        self.pdv.extend(other.pdv);
        self.pair_gaps.extend(other.pair_gaps);
        self.reference_alone += other.reference_alone;
        self.none_received += other.none_received;
        for (a, b) in self.links.iter_mut().zip(&other.links) {
            a.merge(b);
        }
        for (a, b) in self.violations.iter_mut().zip(&other.violations) {
            *a += b;
        }
        for (a, b) in self.latency.iter_mut().zip(&other.latency) {
            a.merge(b);
        }
        self.first_arrival.merge(&other.first_arrival);
        for (a, b) in self.access_frames.iter_mut().zip(&other.access_frames) {
            *a += b;
        }
    }
}

/// Runs `opts.replications` replications of `setup`.
pub fn run_monte_carlo(setup: &Setup, opts: &McOptions) -> Result<MonteCarloResult> {
    if opts.replications < 1 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    if let Some(&w) = opts.w_grid.iter().find(|&&w| !(w > 0.0)) {
        return Err(Error::Config(format!(
            "window durations must be positive, got {w}"
        )));
    }
    let sim = Simulator::new(setup.clone(), opts.mode)?;
    let sensors = setup.scenario.sensors;
    let t0 = setup.scenario.t0;
    let max_access = (setup.comm.max_sr_attempts + setup.comm.max_pt_attempts) as usize;
    let batches = opts.replications.div_ceil(BATCH_SIZE) as usize;

    let partials = map_range(opts.policy, batches, |b| {
        let start = b as u64 * BATCH_SIZE;
        let end = (start + BATCH_SIZE).min(opts.replications);
        let mut part = Partial::new(sensors, opts.w_grid.len(), max_access);
        let mut received = Vec::with_capacity(sensors);
        for r in start..end {
            let outcomes = sim.run_replication(SeedSpec::new(opts.master_seed, r));
            received.clear();
            let reference = !outcomes[0].dropped;
            for (o, counts) in outcomes.iter().zip(part.links.iter_mut()) {
                counts.add(o);
                if let Some(access) = o.access_frames().filter(|_| !o.dropped) {
                    part.access_frames[access as usize] += 1;
                    received.push(o.arrival_time);
                }
            }
            received.sort_by(f64::total_cmp);
            match received.len() {
                0 => part.none_received += 1,
                1 => part.reference_alone += reference as u64,
                k => {
                    part.pdv.push(received[k - 1] - received[0]);
                    if reference {
                        part.pair_gaps.push(received[1] - received[0]);
                    }
                }
            }
            if let Some(&first) = received.first() {
                part.first_arrival.push(first - t0);
            }
            for (i, &w) in opts.w_grid.iter().enumerate() {
                let result = ingest(&outcomes, w, sensors, t0).expect("validated window");
                part.violations[i] += result.violation as u64;
                if let Some(l) = result.latency() {
                    part.latency[i].push(l);
                }
            }
        }
        part
    });

    let mut total = Partial::new(sensors, opts.w_grid.len(), max_access);
    for p in partials {
        total.merge(p);
    }
    Ok(MonteCarloResult {
        replications: opts.replications,
        sensors,
        w_grid: opts.w_grid.clone(),
        pdv: EmpiricalCdf::new(total.pdv),
        pair_gaps: EmpiricalCdf::new(total.pair_gaps),
        reference_alone: total.reference_alone,
        none_received: total.none_received,
        links: total.links,
        violations: total.violations,
        latency: total.latency,
        first_arrival: total.first_arrival,
        access_frames: total.access_frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{access_delay_pmf, comp_pdv_dist, psv};
    use crate::experiments::ecdf::total_variation;
    use crate::params::{CommConfig, ScenarioConfig, SensorLink};

    fn setup(sensors: usize, gamma: f64, m: u32, n: u32) -> Setup {
        Setup::with_uniform_gamma(
            ScenarioConfig {
                t0: 0.0,
                speed: 3e8,
                max_distance: 100.0,
                sensors,
                comp_min: 0.01,
                comp_max: 0.5,
                allow_degenerate_comp: false,
            },
            CommConfig {
                gamma_th_override: Some(1.0),
                ..CommConfig::new(0.01, m, n)
            },
            gamma,
        )
    }

    fn grid() -> Vec<f64> {
        (1..=120).map(|k| k as f64 * 0.005).collect()
    }

    #[test]
    fn single_replication_aggregates() {
        let s = setup(2, 1.0, 5, 5);
        let opts = McOptions::new(1, 3, vec![0.05]);
        let r = run_monte_carlo(&s, &opts).unwrap();
        let sim = Simulator::new(s, ChannelMode::Statistical).unwrap();
        let outcomes = sim.run_replication(SeedSpec::new(3, 0));
        let times: Vec<f64> = outcomes.iter().map(|o| o.arrival_time).collect();
        assert_eq!(r.pdv.samples().first().copied(), crate::twi::pdv(&times));
        let v = ingest(&outcomes, 0.05, 2, 0.0).unwrap();
        assert_eq!(r.violations[0], v.violation as u64);
        assert_eq!(r.latency[0].mean(), v.latency());
        assert_eq!(
            r.links.iter().map(|l| l.drops).sum::<u64>(),
            outcomes.iter().filter(|o| o.dropped).count() as u64
        );
    }

    #[test]
    fn policies_agree_bitwise() {
        let s = setup(3, 1.0, 3, 3);
        let mut opts = McOptions::new(20_000, 17, grid());
        let par = run_monte_carlo(&s, &opts).unwrap();
        opts.policy = ExecPolicy::Sequential;
        let seq = run_monte_carlo(&s, &opts).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn buffer_and_gap_estimates_agree_with_reliable_reference() {
        let mut s = setup(2, 1.0, 3, 3);
        s.links[0] = SensorLink::perfect();
        let r = run_monte_carlo(&s, &McOptions::new(100_000, 5, grid())).unwrap();
        let from_gaps = r.empirical_psv();
        let from_buffer = r.violation_frequency();
        assert_eq!(from_gaps, from_buffer);
    }

    #[test]
    fn empirical_psv_properties() {
        let s = setup(2, 4.0, 3, 2);
        let r = run_monte_carlo(&s, &McOptions::new(200_000, 9, grid())).unwrap();
        let sigma = r.empirical_psv();
        let drop2 = r.reference_alone as f64 / r.reference_received() as f64;
        for w in sigma.windows(2) {
            assert!(w[1] <= w[0]);
        }
        for &s in &sigma {
            assert!(s >= drop2 - 1e-12);
        }
        // Large windows converge to the drop floor.
        let rho2 = s.rho2().unwrap();
        let tail = *sigma.last().unwrap();
        let sd = binomial_sd(rho2, r.reference_received());
        assert!((tail - rho2).abs() < 4.0 * sd + 2e-3, "{tail} vs {rho2}");
    }

    #[test]
    fn empirical_psv_edges() {
        let gaps = EmpiricalCdf::new(vec![0.01, 0.02, 0.03]);
        assert_eq!(empirical_psv(&gaps, 0, &[0.0]), vec![1.0]);
        assert_eq!(empirical_psv(&gaps, 1, &[1.0]), vec![0.25]);
        assert_eq!(empirical_psv(&gaps, 0, &[0.03]), vec![0.0]);
    }

    #[test]
    fn mean_latency_below_window_bound() {
        let s = setup(2, 4.0, 9, 7);
        let r = run_monte_carlo(&s, &McOptions::new(50_000, 1, vec![0.1, 0.3])).unwrap();
        let t1 = r.first_arrival.mean().unwrap();
        for (w, l) in r.w_grid.iter().zip(&r.latency) {
            let mean = l.mean().unwrap();
            assert!(mean <= t1 + w + 1e-12);
            assert!(mean - t1 < *w, "mean(min(pdv, W)) should be below W");
        }
        // Comp approximation shape check on the analytic side.
        let d = comp_pdv_dist(0.01, 0.5).unwrap();
        assert!(psv(0.3, s.rho2().unwrap(), &d) < 1.0);
    }

    #[test]
    fn access_histogram_matches_convolution() {
        let s = Setup {
            links: vec![SensorLink::with_gamma(4.0); 2],
            ..setup(2, 4.0, 4, 3)
        };
        let r = run_monte_carlo(&s, &McOptions::new(200_000, 2, vec![])).unwrap();
        let l = s.derived_links().unwrap()[0];
        let exact = access_delay_pmf(l.zeta, l.epsilon, 4, 3, 0.01).unwrap();
        let tv = total_variation(&r.access_pmf(), exact.probs());
        assert!(tv < 0.01, "TV = {tv}");
    }

    #[test]
    fn rejects_bad_options() {
        let s = setup(2, 1.0, 5, 5);
        assert!(run_monte_carlo(&s, &McOptions::new(0, 1, vec![])).is_err());
        assert!(run_monte_carlo(&s, &McOptions::new(10, 1, vec![0.0])).is_err());
    }
}
