//! Statistical machinery for the verification suites: moment estimates with
//! standard errors, Kolmogorov–Smirnov and Anderson–Darling tests, and
//! covariance estimation.
//!
//! All acceptance thresholds are phrased either as a nominal test level or
//! as "within `z` standard errors", with [`DEFAULT_Z`] as the default.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub const DEFAULT_Z: f64 = 4.0;
pub const DEFAULT_LEVEL: f64 = 0.01;
pub const MIN_KS_SAMPLES: usize = 30;

/// Outcome of a single hypothesis test or tolerance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    #[serde(rename = "test")]
    pub name: String,
    #[serde(rename = "n_samples")]
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub pass: bool,
    pub level: f64,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl TestReport {
    pub fn new(name: impl Into<String>, n: usize, statistic: f64, p_value: f64, level: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            name: name.into(),
            n,
            statistic,
            p_value,
            pass: p_value >= level,
            level,
            params: Map::new(),
        }
    }

    /// A tolerance check expressed as `|estimate - target| <= z * se`.
    ///
    /// `statistic` holds the standardized deviation; `p_value` is its
    /// two-sided normal tail probability.
    pub fn z_check(name: impl Into<String>, n: usize, estimate: f64, se: f64, target: f64, z: f64) -> Self {
        let dev = estimate - target;
        let score = if se > 0.0 {
            dev / se
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(dev)
        };
        let p = two_sided_normal_p(score);
        let mut report = Self {
            name: name.into(),
            n,
            statistic: score,
            p_value: p,
            pass: score.abs() <= z,
            level: two_sided_normal_p(z),
            params: Map::new(),
        };
        report.params.insert("estimate".into(), json_f64(estimate));
        report.params.insert("se".into(), json_f64(se));
        report.params.insert("target".into(), json_f64(target));
        report.params.insert("z".into(), json_f64(z));
        report
    }

    /// A deterministic assertion with no sampling error.
    pub fn exact(name: impl Into<String>, n: usize, deviation: f64, tolerance: f64) -> Self {
        let pass = deviation.abs() <= tolerance;
        let mut report = Self {
            name: name.into(),
            n,
            statistic: deviation,
            p_value: if pass { 1.0 } else { 0.0 },
            pass,
            level: 0.0,
            params: Map::new(),
        };
        report.params.insert("tolerance".into(), json_f64(tolerance));
        report
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

/// JSON has no NaN/inf; non-finite values are written as strings.
pub fn json_f64(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(x.to_string()))
}

/// `k` replicates of `p` summary coordinates, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    samples: Vec<f64>,
    p: usize,
    pub labels: Vec<String>,
}

impl Ensemble {
    pub fn new(samples: Vec<f64>, p: usize, labels: Vec<String>) -> Result<Self> {
        if p == 0 || samples.len() % p != 0 {
            return Err(Error::ShapeMismatch { len: samples.len(), dim: p });
        }
        let k = samples.len() / p;
        if k < 2 {
            return Err(Error::TooFewSamples { need: 2, got: k });
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("ensemble entries must be finite".into()));
        }
        if !labels.is_empty() && labels.len() != p {
            return Err(Error::InvalidParameter(format!("{} labels for {p} columns", labels.len())));
        }
        Ok(Self { samples, p, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidParameter("ragged ensemble rows".into()));
        }
        Self::new(rows.concat(), p, Vec::new())
    }

    pub fn from_columns(cols: &[&[f64]]) -> Result<Self> {
        let k = cols.first().map_or(0, |c| c.len());
        if cols.iter().any(|c| c.len() != k) {
            return Err(Error::InvalidParameter("columns of unequal length".into()));
        }
        let p = cols.len();
        let mut samples = Vec::with_capacity(k * p);
        for i in 0..k {
            samples.extend(cols.iter().map(|c| c[i]));
        }
        Self::new(samples, p, Vec::new())
    }

    pub fn replicates(&self) -> usize {
        self.samples.len() / self.p
    }

    pub fn width(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.samples[i * self.p..(i + 1) * self.p]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().skip(j).step_by(self.p).copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.value - target).abs() <= z * self.se
    }

    pub fn check(&self, name: &str, target: f64, z: f64) -> TestReport {
        TestReport::z_check(name, self.n, self.value, self.se, target, z)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean with its standard error.
pub fn mean_se(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let m = mean(xs);
    let var = sample_variance_about(xs, m);
    Estimate { value: m, se: (var / n as f64).sqrt(), n }
}

fn sample_variance_about(xs: &[f64], m: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    sample_variance_about(xs, mean(xs))
}

/// Unbiased variance with the delta-method standard error
/// `sqrt((m4 - s^4) / n)`.
pub fn variance_se(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let m = mean(xs);
    let s2 = sample_variance_about(xs, m);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n as f64;
    let se = ((m4 - s2 * s2).max(0.0) / n as f64).sqrt();
    Estimate { value: s2, se, n }
}

/// Pearson correlation, tested on the Fisher scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub r: f64,
    pub n: usize,
}

impl Correlation {
    pub fn fisher_se(&self) -> f64 {
        1.0 / ((self.n as f64) - 3.0).sqrt()
    }

    /// Standardized distance between `r` and `rho` in Fisher-z units.
    pub fn z_score(&self, rho: f64) -> f64 {
        let clamp = |x: f64| x.clamp(-1.0 + 1e-15, 1.0 - 1e-15);
        (clamp(self.r).atanh() - clamp(rho).atanh()) / self.fisher_se()
    }

    pub fn interval(&self, z: f64) -> (f64, f64) {
        let centre = self.r.clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh();
        let half = z * self.fisher_se();
        ((centre - half).tanh(), (centre + half).tanh())
    }

    pub fn check(&self, name: &str, rho: f64, z: f64) -> TestReport {
        let score = self.z_score(rho);
        let mut report = TestReport::new(name, self.n, score, two_sided_normal_p(score), two_sided_normal_p(z));
        report.pass = score.abs() <= z;
        report
            .with_param("r", json_f64(self.r))
            .with_param("target", json_f64(rho))
            .with_param("z", json_f64(z))
    }
}

pub fn correlation(x: &[f64], y: &[f64]) -> Correlation {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let r = if sxx > 0.0 && syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 0.0 };
    Correlation { r, n: x.len() }
}

/// Sample covariance matrix with per-entry standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceEstimate {
    pub p: usize,
    pub n: usize,
    pub cov: Vec<f64>,
    pub se: Vec<f64>,
}

impl CovarianceEstimate {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.p + j]
    }

    pub fn se(&self, i: usize, j: usize) -> f64 {
        self.se[i * self.p + j]
    }

    pub fn entry(&self, i: usize, j: usize) -> Estimate {
        Estimate { value: self.get(i, j), se: self.se(i, j), n: self.n }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.p {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = DMatrix::from_row_slice(self.p, self.p, &self.cov);
        m.symmetric_eigenvalues().min()
    }
}

/// Unbiased covariance; the standard error of each entry comes from the
/// empirical variance of the centred cross products.
pub fn empirical_cov(ensemble: &Ensemble) -> CovarianceEstimate {
    let (k, p) = (ensemble.replicates(), ensemble.width());
    let means: Vec<f64> = (0..p).map(|j| mean(&ensemble.column(j))).collect();
    let mut cov = vec![0.0; p * p];
    let mut sq = vec![0.0; p * p];
    for r in 0..k {
        let row = ensemble.row(r);
        for i in 0..p {
            let di = row[i] - means[i];
            for j in i..p {
                let prod = di * (row[j] - means[j]);
                cov[i * p + j] += prod;
                sq[i * p + j] += prod * prod;
            }
        }
    }
    let kf = k as f64;
    let mut se = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            let raw_mean = cov[i * p + j] / kf;
            let prod_var = (sq[i * p + j] / kf - raw_mean * raw_mean).max(0.0);
            let c = cov[i * p + j] / (kf - 1.0);
            let s = (prod_var / kf).sqrt();
            cov[i * p + j] = c;
            cov[j * p + i] = c;
            se[i * p + j] = s;
            se[j * p + i] = s;
        }
    }
    CovarianceEstimate { p, n: k, cov, se }
}

pub fn normal_cdf(x: f64, mean: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return if x < mean { 0.0 } else { 1.0 };
    }
    0.5 * erfc(-(x - mean) / (2.0 * variance).sqrt())
}

fn two_sided_normal_p(z: f64) -> f64 {
    if z.is_nan() {
        return 0.0;
    }
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges fast for small lambda
        let pi2 = std::f64::consts::PI.powi(2);
        let mut cdf = 0.0;
        for j in 1..=20 {
            let odd = (2 * j - 1) as f64;
            cdf += (-(odd * odd) * pi2 / (8.0 * lambda * lambda)).exp();
        }
        (1.0 - cdf * (2.0 * std::f64::consts::PI).sqrt() / lambda).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            sf += if j % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value with the Stephens small-sample correction.
fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let sqrt_n = effective_n.sqrt();
    kolmogorov_sf((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("NaN in samples".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov–Smirnov test against a continuous cdf.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> Result<TestReport> {
    let n = samples.len();
    if n < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples { need: MIN_KS_SAMPLES, got: n });
    }
    let sorted = sorted_finite(samples)?;
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    Ok(TestReport::new("ks_one_sample", n, d, ks_p_value(d, nf), level))
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<TestReport> {
    let (na, nb) = (a.len(), b.len());
    let smaller = na.min(nb);
    if smaller < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples { need: MIN_KS_SAMPLES, got: smaller });
    }
    let (sa, sb) = (sorted_finite(a)?, sorted_finite(b)?);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < na && j < nb {
        let x = sa[i].min(sb[j]);
        while i < na && sa[i] <= x {
            i += 1;
        }
        while j < nb && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    Ok(TestReport::new("ks_two_sample", na + nb, d, ks_p_value(d, ne), level))
}

/// Anderson–Darling test against a fully specified continuous cdf, with
/// the Marsaglia approximation to the limiting distribution.
pub fn anderson_darling(samples: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> Result<TestReport> {
    let n = samples.len();
    if n < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples { need: MIN_KS_SAMPLES, got: n });
    }
    let sorted = sorted_finite(samples)?;
    let u: Vec<f64> = sorted.iter().map(|&x| cdf(x).clamp(1e-300, 1.0 - 1e-16)).collect();
    let a2 = ad_statistic(&u);
    Ok(TestReport::new("anderson_darling", n, a2, 1.0 - ad_limit_cdf(a2), level))
}

/// `A^2` from sorted probability-integral transforms.
fn ad_statistic(u: &[f64]) -> f64 {
    let n = u.len();
    let acc: f64 = (0..n)
        .map(|i| (2 * i + 1) as f64 * (u[i].ln() + (1.0 - u[n - 1 - i]).ln()))
        .sum();
    -(n as f64) - acc / n as f64
}

fn ad_limit_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z < 2.0 {
        (-1.2337141 / z).exp() / z.sqrt()
            * (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z)
    } else {
        (-(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z).exp()).exp()
    }
}

/// Anderson–Darling normality test with mean and variance estimated from
/// the data (D'Agostino–Stephens modified statistic and p-value table).
pub fn anderson_darling_normal(samples: &[f64], level: f64) -> Result<TestReport> {
    let n = samples.len();
    if n < 8 {
        return Err(Error::TooFewSamples { need: 8, got: n });
    }
    let sorted = sorted_finite(samples)?;
    let m = mean(&sorted);
    let s = variance(&sorted).sqrt();
    if s == 0.0 {
        return Ok(TestReport::new("anderson_darling_normal", n, f64::INFINITY, 0.0, level));
    }
    let nf = n as f64;
    let log_cdf = |z: f64| (0.5 * erfc(-z / std::f64::consts::SQRT_2)).ln();
    let mut acc = 0.0;
    for i in 0..n {
        let zi = (sorted[i] - m) / s;
        let zr = (sorted[n - 1 - i] - m) / s;
        // ln(1 - Phi(z)) = ln Phi(-z)
        acc += (2 * i + 1) as f64 * (log_cdf(zi) + log_cdf(-zr));
    }
    let a2 = -nf - acc / nf;
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    Ok(TestReport::new("anderson_darling_normal", n, a, p, level))
}

/// Linear-interpolation quantile (type 7) of unsorted data.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Location/spread summary used in exploratory reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Summary {
        n: v.len(),
        mean: mean(&v),
        sd: variance(&v).sqrt(),
        min: v.first().copied().unwrap_or(f64::NAN),
        q25: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q75: quantile_sorted(&v, 0.75),
        max: v.last().copied().unwrap_or(f64::NAN),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(seed: u64, n: usize, sd: f64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0, rng::AUX_LANE_BASE);
        (0..n).map(|_| sd * r.sample::<f64, _>(StandardNormal)).collect()
    }

    #[test]
    fn kolmogorov_branches_agree_at_switch() {
        // both series evaluated on either side of the branch point
        let below = kolmogorov_sf(1.18 - 1e-9);
        let above = kolmogorov_sf(1.18 + 1e-9);
        assert!((below - above).abs() < 1e-7, "{below} vs {above}");
        // reference: P(K > 1.36) ~= 0.0494, P(K > 1.63) ~= 0.0098
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_sf(1.628) - 0.0100).abs() < 3e-4);
        assert!((kolmogorov_sf(0.5) - 0.9639).abs() < 1e-3);
    }

    #[test]
    fn ks_statistic_shrinks_on_exact_quantiles() {
        let cdf = |x: f64| normal_cdf(x, 0.0, 1.0);
        let stat = |k: usize| {
            // midpoint quantiles of N(0,1) via bisection on the cdf
            let xs: Vec<f64> = (0..k)
                .map(|i| {
                    let target = (i as f64 + 0.5) / k as f64;
                    let (mut lo, mut hi) = (-10.0, 10.0);
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        if cdf(mid) < target {
                            lo = mid
                        } else {
                            hi = mid
                        }
                    }
                    0.5 * (lo + hi)
                })
                .collect();
            ks_one_sample(&xs, cdf, 0.01).unwrap().statistic
        };
        let (s100, s1000) = (stat(100), stat(1000));
        assert!(s1000 < s100);
        assert!((s1000 - 0.5 / 1000.0).abs() < 1e-9);
    }

    #[test]
    fn ks_one_sample_power() {
        let xs = normals(1, 10_000, 2f64.sqrt());
        let report = ks_one_sample(&xs, |x| normal_cdf(x, 0.0, 1.0), 0.01).unwrap();
        assert!(report.p_value < 1e-6, "{report:?}");
        assert!(!report.pass);
    }

    #[test]
    fn ks_rejects_tiny_samples() {
        assert!(matches!(
            ks_one_sample(&[0.0; 10], |x| x, 0.01),
            Err(Error::TooFewSamples { need: 30, got: 10 })
        ));
        assert!(ks_two_sample(&[0.0; 40], &[0.0; 29], 0.01).is_err());
    }

    #[test]
    fn ks_two_sample_detects_shift_and_accepts_same_law() {
        let a = normals(2, 5000, 1.0);
        let b = normals(3, 5000, 1.0);
        assert!(ks_two_sample(&a, &b, 0.01).unwrap().pass);
        let shifted: Vec<f64> = b.iter().map(|x| x + 0.2).collect();
        assert!(!ks_two_sample(&a, &shifted, 0.01).unwrap().pass);
    }

    #[test]
    fn ks_two_sample_statistic_by_hand() {
        // a = 1..=30, b = 16..=45: sup distance is 15/30
        let a: Vec<f64> = (1..=30).map(f64::from).collect();
        let b: Vec<f64> = (16..=45).map(f64::from).collect();
        let r = ks_two_sample(&a, &b, 0.01).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-12);
    }

    #[test]
    fn anderson_darling_flags_non_normal() {
        let mut r = rng::stream(4, 0, rng::AUX_LANE_BASE);
        let expo: Vec<f64> = (0..2000).map(|_| -r.random::<f64>().ln()).collect();
        assert!(!anderson_darling_normal(&expo, 0.01).unwrap().pass);
        let gauss = normals(5, 2000, 3.0);
        assert!(anderson_darling_normal(&gauss, 0.01).unwrap().pass);
    }

    #[test]
    fn anderson_darling_limit_quantiles() {
        // classical critical values of the case-0 statistic
        assert!((1.0 - ad_limit_cdf(2.492) - 0.05).abs() < 1e-3);
        assert!((1.0 - ad_limit_cdf(3.857) - 0.01).abs() < 5e-4);
        let xs = normals(12, 5000, 1.0);
        assert!(anderson_darling(&xs, |x| normal_cdf(x, 0.0, 1.0), 0.01).unwrap().pass);
        assert!(!anderson_darling(&xs, |x| normal_cdf(x, 0.0, 1.5), 0.01).unwrap().pass);
    }

    #[test]
    fn covariance_constant_column_is_zero() {
        let xs = normals(6, 100, 1.0);
        let ones = vec![1.5; 100];
        let est = empirical_cov(&Ensemble::from_columns(&[&xs, &ones]).unwrap());
        assert_eq!(est.get(1, 1), 0.0);
        assert_eq!(est.get(0, 1), 0.0);
        assert_eq!(est.get(1, 0), 0.0);
        assert!(est.get(0, 0) > 0.0);
    }

    #[test]
    fn covariance_of_independent_normals_is_identity() {
        let x = normals(7, 1_000_000, 1.0);
        let y = normals(8, 1_000_000, 1.0);
        let est = empirical_cov(&Ensemble::from_columns(&[&x, &y]).unwrap());
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!(est.entry(i, j).within(target, DEFAULT_Z), "({i},{j}) {:?}", est.entry(i, j));
            }
        }
        assert!(est.max_asymmetry() == 0.0);
        assert!(est.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn variance_and_mean_standard_errors() {
        let xs = normals(9, 40_000, 2.0);
        let m = mean_se(&xs);
        assert!((m.se - 0.01).abs() < 1e-3);
        let v = variance_se(&xs);
        assert!(v.within(4.0, DEFAULT_Z), "{v:?}");
        // normal data: se(s^2) ~ sigma^2 sqrt(2/n)
        assert!((v.se - 4.0 * (2.0f64 / 40_000.0).sqrt()).abs() < 0.005);
    }

    #[test]
    fn correlation_fisher_interval_contains_truth() {
        let x = normals(10, 10_000, 1.0);
        let noise = normals(11, 10_000, 1.0);
        let rho: f64 = 0.6;
        let y: Vec<f64> = x.iter().zip(&noise).map(|(a, b)| rho * a + (1.0 - rho * rho).sqrt() * b).collect();
        let c = correlation(&x, &y);
        let (lo, hi) = c.interval(DEFAULT_Z);
        assert!(lo < rho && rho < hi);
        assert!(c.check("corr", rho, DEFAULT_Z).pass);
        assert!(!c.check("corr", 0.0, DEFAULT_Z).pass);
    }

    #[test]
    fn z_check_degenerate_se() {
        assert!(TestReport::z_check("zero", 10, 0.0, 0.0, 0.0, 4.0).pass);
        assert!(!TestReport::z_check("off", 10, 1.0, 0.0, 0.0, 4.0).pass);
    }

    #[test]
    fn report_json_shape() {
        let r = TestReport::new("x", 5, 0.1, 0.5, 0.01).with_param("gamma", 1.0);
        let v = serde_json::to_value(&r).unwrap();
        for key in ["test", "n_samples", "statistic", "p_value", "pass", "params"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["params"]["gamma"], 1.0);
    }

    #[test]
    fn summary_quantiles() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0, 5.0]);
        assert_eq!((s.min, s.median, s.max), (1.0, 3.0, 5.0));
        assert_eq!(s.q25, 2.0);
    }
}
