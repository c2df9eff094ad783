use crate::{Error, Result};

fn check_fail(fail: f64) -> Result<()> {
    if (0.0..1.0).contains(&fail) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "failure probability must lie in [0, 1), got {fail}"
        )))
    }
}

/// Probability that the first success happens on attempt `k`, given that it
/// happens within `max` attempts.
pub fn trunc_geom_pmf(fail: f64, k: u32, max: u32) -> Result<f64> {
    check_fail(fail)?;
    if k < 1 || k > max {
        return Err(Error::Domain(format!("attempt {k} outside 1..={max}")));
    }
    Ok(fail.powi(k as i32 - 1) * (1.0 - fail) / (1.0 - fail.powi(max as i32)))
}

/// Attempt-count law of scheduling requests or packet transmissions that
/// eventually succeed; each attempt occupies one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncGeomPmf {
    fail: f64,
    max_attempts: u32,
    frame: f64,
}

impl TruncGeomPmf {
    pub fn new(fail: f64, max_attempts: u32, frame: f64) -> Result<Self> {
        check_fail(fail)?;
        if max_attempts < 1 {
            return Err(Error::Domain("attempt limit must be at least 1".into()));
        }
        Ok(TruncGeomPmf {
            fail,
            max_attempts,
            frame,
        })
    }

    pub fn success_prob(&self) -> f64 {
        1.0 - self.fail
    }

    pub fn max_attempts(&self) -> u32 {
        self.max_attempts
    }

    /// `P(attempts = k)`, zero outside `1..=max_attempts`.
    pub fn pmf(&self, k: u32) -> f64 {
        trunc_geom_pmf(self.fail, k, self.max_attempts).unwrap_or(0.0)
    }

    /// Probabilities for `k = 1..=max_attempts`.
    pub fn probs(&self) -> Vec<f64> {
        (1..=self.max_attempts).map(|k| self.pmf(k)).collect()
    }

    /// Probability that the delay is `k * T_f`.
    pub fn delay_pmf(&self, delay: f64) -> f64 {
        let k = (delay / self.frame).round();
        if k < 1.0 || (delay - k * self.frame).abs() > 1e-9 * self.frame.max(delay) {
            return 0.0;
        }
        self.pmf(k as u32)
    }
}

/// Distribution over frame multiples `k * T_f`, `k = offset, offset + 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePmf {
    frame: f64,
    offset: u32,
    probs: Vec<f64>,
}

impl FramePmf {
    pub fn frame(&self) -> f64 {
        self.frame
    }

    /// Frame count of the first entry of [`probs`](Self::probs).
    pub fn offset(&self) -> u32 {
        self.offset
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `P(delay = frames * T_f)`.
    pub fn prob_frames(&self, frames: u32) -> f64 {
        frames
            .checked_sub(self.offset)
            .and_then(|i| self.probs.get(i as usize))
            .copied()
            .unwrap_or(0.0)
    }

    /// `(delay in seconds, probability)` pairs.
    pub fn delays(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| ((self.offset + i as u32) as f64 * self.frame, p))
    }
}

/// Exact law of the access delay `T_SR + T_PT` of a packet that is not
/// dropped: the convolution of the two truncated geometric laws.
pub fn access_delay_pmf(
    zeta: f64,
    epsilon: f64,
    max_sr: u32,
    max_pt: u32,
    frame: f64,
) -> Result<FramePmf> {
    if !(frame > 0.0) {
        return Err(Error::Domain(format!("T_f must be positive, got {frame}")));
    }
    let sr = TruncGeomPmf::new(zeta, max_sr, frame)?.probs();
    let pt = TruncGeomPmf::new(epsilon, max_pt, frame)?.probs();
    let mut probs = vec![0.0; sr.len() + pt.len() - 1];
    for (i, a) in sr.iter().enumerate() {
        for (j, b) in pt.iter().enumerate() {
            probs[i + j] += a * b;
        }
    }
    Ok(FramePmf {
        frame,
        offset: 2,
        probs,
    })
}
