//! Centre-of-mass statistics.
//!
//! The interaction drifts cancel in the mean, so within epoch `m` the centre
//! of mass is a Brownian motion running at speed `2^{-m}`. Summing the
//! epochs gives a deterministic clock that converges to 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParticleCloud;
use crate::stats::{self, TestReport};

/// Largest mesh spacing [`estimate_qv`] accepts.
pub const QV_MAX_SPACING: f64 = 1.0 / 64.0;
pub const MIN_LIMIT_REPLICATES: usize = 1000;

pub fn com(cloud: &ParticleCloud) -> Vec<f64> {
    cloud.center_of_mass()
}

/// Per-coordinate variance of the centre of mass at time `t`:
/// `sum_{k<m} 2^{-k} + tau 2^{-m}` with `m = floor(t)`, `tau = t - m`.
pub fn theoretical_com_variance(t: f64) -> f64 {
    assert!(t >= 0.0, "time must be nonnegative");
    if t.is_infinite() {
        return 2.0;
    }
    let m = t.floor();
    let tau = t - m;
    // sum_{k<m} 2^{-k} = 2 - 2^{1-m}
    2.0 - (1.0 - m).exp2() + tau * (-m).exp2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComRecord {
    pub t: f64,
    pub com: Vec<f64>,
    pub replicate_id: u64,
}

impl ComRecord {
    pub fn from_cloud(cloud: &ParticleCloud, replicate_id: u64) -> Self {
        Self { t: cloud.time(), com: cloud.center_of_mass(), replicate_id }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalityTest {
    #[default]
    Ks,
    AndersonDarling,
}

/// Tests each coordinate of the ensemble against `Normal(0, v(t))` where
/// `v` is [`theoretical_com_variance`] at the records' common time.
///
/// Passes when every coordinate passes at `level`.
pub fn com_limit_test(records: &[ComRecord], level: f64, test: NormalityTest) -> Result<Vec<TestReport>> {
    if records.len() < MIN_LIMIT_REPLICATES {
        return Err(Error::TooFewSamples { need: MIN_LIMIT_REPLICATES, got: records.len() });
    }
    let t = records[0].t;
    if records.iter().any(|r| (r.t - t).abs() > 1e-9) {
        return Err(Error::InvalidParameter("records must share one time".into()));
    }
    let d = records[0].com.len();
    let var = theoretical_com_variance(t);
    (0..d)
        .map(|k| {
            let xs: Vec<f64> = records.iter().map(|r| r.com[k]).collect();
            let report = match test {
                NormalityTest::Ks => stats::ks_one_sample(&xs, |x| stats::normal_cdf(x, 0.0, var), level)?,
                NormalityTest::AndersonDarling => {
                    stats::anderson_darling(&xs, |x| stats::normal_cdf(x, 0.0, var), level)?
                }
            };
            Ok(report
                .named(format!("com_limit[{k}]"))
                .with_param("t", t)
                .with_param("variance", var))
        })
        .collect()
}

/// Cumulative sums of squared increments along a sampled path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticVariationSeries {
    pub grid: Vec<f64>,
    /// `qv[i][k]`: accumulated clock of coordinate `k` up to `grid[i]`.
    pub qv: Vec<Vec<f64>>,
}

impl QuadraticVariationSeries {
    pub fn total(&self) -> &[f64] {
        self.qv.last().map_or(&[], Vec::as_slice)
    }

    /// Clock accumulated over `[a, b]`, per coordinate, using the closest
    /// grid points at or inside the window.
    pub fn increment(&self, a: f64, b: f64) -> Vec<f64> {
        let lo = self.grid.partition_point(|&t| t < a - 1e-12);
        let hi = self.grid.partition_point(|&t| t <= b + 1e-12).saturating_sub(1);
        if lo >= self.grid.len() || hi < lo {
            return vec![0.0; self.qv.first().map_or(0, Vec::len)];
        }
        self.qv[hi].iter().zip(&self.qv[lo]).map(|(h, l)| h - l).collect()
    }
}

/// `times` must be strictly increasing with spacing at most
/// [`QV_MAX_SPACING`]; `path[i]` is the d-vector observed at `times[i]`.
pub fn estimate_qv(times: &[f64], path: &[Vec<f64>]) -> Result<QuadraticVariationSeries> {
    if times.len() != path.len() {
        return Err(Error::InvalidParameter("times and path differ in length".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::UnsortedMesh);
    }
    if let Some(w) = times.windows(2).find(|w| w[1] - w[0] > QV_MAX_SPACING * (1.0 + 1e-9)) {
        return Err(Error::InvalidParameter(format!(
            "mesh spacing {} exceeds 2^-6",
            w[1] - w[0]
        )));
    }
    let d = path.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; d];
    let mut qv = Vec::with_capacity(path.len());
    qv.push(acc.clone());
    for w in path.windows(2) {
        for (a, (x1, x0)) in acc.iter_mut().zip(w[1].iter().zip(&w[0])) {
            *a += (x1 - x0).powi(2);
        }
        qv.push(acc.clone());
    }
    Ok(QuadraticVariationSeries { grid: times.to_vec(), qv })
}
