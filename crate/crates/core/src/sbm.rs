//! Branching-particle approximation of supercritical super-Brownian motion.
//!
//! At level `n` every particle carries mass `1/n`, dies at rate `2 alpha n`
//! and is replaced by two offspring with probability `1/2 + beta/(4 alpha n)`
//! (otherwise none). Per unit mass this gives drift `beta` and variance flux
//! `2 alpha`, the coefficients of the Feller diffusion
//! `x (alpha d^2/dx^2 + beta d/dx)`.
//!
//! Events are simulated by superposing the per-particle exponential clocks
//! and picking the firing particle uniformly. Brownian displacements are
//! drawn lazily: each particle remembers when it was last moved and is
//! brought forward only when it branches or a record time is reached.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::com::estimate_qv;
use crate::error::{Error, Result};
use crate::rng;
use crate::simulate::try_replicate_map;
use crate::stats::{self, Estimate, Summary, TestReport};

pub const DEFAULT_POPULATION_CAP: usize = 1_000_000;
pub const MIN_MARTINGALE_REPLICATES: usize = 1000;
const GRID_TOL: f64 = 1e-9;
/// Above this mean the Poisson draw is replaced by its normal limit.
const POISSON_NORMAL_CUTOFF: f64 = 1e15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub alpha: f64,
    pub beta: f64,
    /// Approximation level; each particle has mass `1/n`.
    pub n: u64,
    pub dim: usize,
    pub horizon: f64,
    /// Times in `[0, horizon]` at which the state is recorded; `0` and the
    /// horizon are always added.
    pub record_mesh: Vec<f64>,
    pub population_cap: usize,
}

impl Default for SbmParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            n: 200,
            dim: 1,
            horizon: 20.0,
            record_mesh: Vec::new(),
            population_cap: DEFAULT_POPULATION_CAP,
        }
    }
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter("alpha > 0 violated".into()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter("beta > 0 violated".into()));
        }
        if self.n == 0 || self.n as f64 <= self.beta / (2.0 * self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "n > beta/(2 alpha) violated (n = {}, beta/(2 alpha) = {})",
                self.n,
                self.beta / (2.0 * self.alpha)
            )));
        }
        if self.dim < 1 {
            return Err(Error::InvalidParameter("dim ≥ 1 violated".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter("horizon > 0 violated".into()));
        }
        if self.record_mesh.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::UnsortedMesh);
        }
        if self.record_mesh.iter().any(|&t| !(0.0..=self.horizon).contains(&t)) {
            return Err(Error::InvalidParameter("record mesh must lie in [0, horizon]".into()));
        }
        if self.population_cap == 0 {
            return Err(Error::InvalidParameter("population cap ≥ 1 violated".into()));
        }
        Ok(())
    }

    pub fn rates(&self) -> SbmRates {
        let rate = 2.0 * self.alpha * self.n as f64;
        SbmRates { event_rate: rate, split_prob: 0.5 + self.beta / (4.0 * self.alpha * self.n as f64) }
    }

    /// Record times: the mesh with `0` and the horizon added.
    pub fn grid(&self) -> Vec<f64> {
        let mut g: Vec<f64> = std::iter::once(0.0)
            .chain(self.record_mesh.iter().copied())
            .chain(std::iter::once(self.horizon))
            .collect();
        g.dedup_by(|a, b| (*a - *b).abs() < GRID_TOL);
        g
    }

    /// Extinction probability of the limiting superprocess, `e^{-beta/alpha}`.
    pub fn limit_extinction(&self) -> f64 {
        (-self.beta / self.alpha).exp()
    }
}

/// `0, spacing, 2 spacing, ..., horizon`.
pub fn uniform_grid(horizon: f64, spacing: f64) -> Vec<f64> {
    let k = (horizon / spacing).round() as usize;
    (0..=k).map(|i| (i as f64 * spacing).min(horizon)).collect()
}

/// Per-particle event rate and binary split probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmRates {
    pub event_rate: f64,
    pub split_prob: f64,
}

impl SbmRates {
    pub fn new(event_rate: f64, split_prob: f64) -> Result<Self> {
        if !(event_rate > 0.0 && event_rate.is_finite()) || !(0.0..=1.0).contains(&split_prob) {
            return Err(Error::InvalidParameter(format!("rates ({event_rate}, {split_prob}) out of range")));
        }
        Ok(Self { event_rate, split_prob })
    }

    pub fn birth_rate(&self) -> f64 {
        self.event_rate * self.split_prob
    }

    pub fn death_rate(&self) -> f64 {
        self.event_rate * (1.0 - self.split_prob)
    }

    /// Net growth rate of the expected particle count.
    pub fn growth(&self) -> f64 {
        self.birth_rate() - self.death_rate()
    }

    /// Probability that one particle has no descendants alive after time `s`.
    pub fn line_extinction(&self, s: f64) -> f64 {
        self.generating_coefficients(s).0
    }

    /// `(a_s, b_s, 1 - b_s)` with `P(0) = a_s` and
    /// `P(j) = (1 - a_s)(1 - b_s) b_s^{j-1}` for the count started from one
    /// particle.
    fn generating_coefficients(&self, s: f64) -> (f64, f64, f64) {
        let (lam, mu) = (self.birth_rate(), self.death_rate());
        if s <= 0.0 {
            return (0.0, 0.0, 1.0);
        }
        if (lam - mu).abs() < 1e-12 * lam.max(mu) {
            let x = lam * s / (1.0 + lam * s);
            return (x, x, 1.0 / (1.0 + lam * s));
        }
        // x = e^{-(lam - mu) s}
        let g = lam - mu;
        let one_minus_x = -(-g * s).exp_m1();
        let x = (-g * s).exp();
        let denom = lam - mu * x;
        ((mu * one_minus_x / denom).min(1.0), (lam * one_minus_x / denom).min(1.0), g * x / denom)
    }
}

/// Samples the particle count after time `s` given `k` particles now, using
/// the closed-form law of the linear birth–death process. Counts beyond
/// `u64::MAX` saturate.
pub fn sample_count<R: Rng + ?Sized>(k: u64, rates: &SbmRates, s: f64, rng: &mut R) -> u64 {
    if k == 0 || s <= 0.0 {
        return k;
    }
    let (a, b, one_minus_b) = rates.generating_coefficients(s);
    let survivors = Binomial::new(k, 1.0 - a).expect("valid binomial").sample(rng);
    if survivors == 0 || b <= 0.0 {
        return survivors;
    }
    // sum of `survivors` geometrics on {1, 2, ...} with ratio b
    let odds = b / one_minus_b;
    let lambda = Gamma::new(survivors as f64, odds).expect("valid gamma").sample(rng);
    if lambda <= 0.0 {
        return survivors;
    }
    let extra = if lambda < POISSON_NORMAL_CUTOFF {
        Poisson::new(lambda).expect("valid poisson").sample(rng)
    } else {
        (lambda + lambda.sqrt() * rng.sample::<f64, _>(StandardNormal)).round()
    };
    survivors.saturating_add(extra as u64)
}

/// Particle state of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmCloud {
    t: f64,
    dim: usize,
    n: u64,
    positions: Vec<f64>,
    /// Time each particle's position refers to.
    updated: Vec<f64>,
    pub replicate_id: u64,
    pub capped: bool,
}

impl SbmCloud {
    /// `n` particles at `x0`: unit mass concentrated at one point.
    pub fn unit_mass_at(x0: &[f64], n: u64, replicate_id: u64) -> Self {
        let k = n as usize;
        Self {
            t: 0.0,
            dim: x0.len(),
            n,
            positions: x0.repeat(k),
            updated: vec![0.0; k],
            replicate_id,
            capped: false,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.updated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updated.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.len() as f64 / self.n as f64
    }

    pub fn survived_so_far(&self) -> bool {
        !self.is_empty()
    }

    /// Brings every particle to the current time.
    pub fn sync<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let d = self.dim;
        for (i, last) in self.updated.iter_mut().enumerate() {
            let gap = self.t - *last;
            if gap > 0.0 {
                let sd = gap.sqrt();
                for x in &mut self.positions[i * d..(i + 1) * d] {
                    *x += sd * rng.sample::<f64, _>(StandardNormal);
                }
                *last = self.t;
            }
        }
    }

    /// Positions, valid only right after [`SbmCloud::sync`].
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// `<x, X_t>` per coordinate; call after [`SbmCloud::sync`].
    pub fn first_moment(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for row in self.positions.chunks_exact(self.dim) {
            for (a, x) in m.iter_mut().zip(row) {
                *a += x;
            }
        }
        let w = 1.0 / self.n as f64;
        m.iter_mut().for_each(|a| *a *= w);
        m
    }
}

/// Runs the event queue up to `until`, leaving all particles synced there.
/// If the population exceeds `cap` the replicate is flagged and frozen.
pub fn sbm_step<R: Rng + ?Sized>(cloud: &mut SbmCloud, rates: &SbmRates, until: f64, cap: usize, rng: &mut R) -> Result<()> {
    if until < cloud.t {
        return Err(Error::InvalidParameter(format!("cannot step back from {} to {until}", cloud.t)));
    }
    let d = cloud.dim;
    while !cloud.capped && !cloud.is_empty() {
        let k = cloud.len();
        let wait: f64 = rng.sample::<f64, _>(Exp1) / (rates.event_rate * k as f64);
        if cloud.t + wait >= until {
            break;
        }
        cloud.t += wait;
        let i = rng.random_range(0..k);
        let gap = cloud.t - cloud.updated[i];
        let sd = gap.sqrt();
        for x in &mut cloud.positions[i * d..(i + 1) * d] {
            *x += sd * rng.sample::<f64, _>(StandardNormal);
        }
        cloud.updated[i] = cloud.t;
        if rng.random::<f64>() < rates.split_prob {
            cloud.positions.extend_from_within(i * d..(i + 1) * d);
            cloud.updated.push(cloud.t);
            if cloud.len() > cap {
                cloud.capped = true;
            }
        } else {
            let last = k - 1;
            cloud.positions.copy_within(last * d..(last + 1) * d, i * d);
            cloud.positions.truncate(last * d);
            cloud.updated.swap_remove(i);
        }
    }
    if !cloud.capped {
        cloud.t = until;
        cloud.sync(rng);
    }
    Ok(())
}

/// Recorded path of one replicate: total mass and first moment on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleSeries {
    pub replicate_id: u64,
    pub beta: f64,
    pub grid: Vec<f64>,
    /// `||X_t||`.
    pub mass: Vec<f64>,
    /// `<x, X_t>` per coordinate.
    pub moment: Vec<Vec<f64>>,
    pub capped: bool,
}

impl MartingaleSeries {
    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.grid
            .iter()
            .position(|&g| (g - t).abs() < GRID_TOL)
            .ok_or_else(|| Error::InvalidParameter(format!("time {t} is not on the record grid")))
    }

    /// `N_t = e^{-beta t} ||X_t||`.
    pub fn n_t(&self) -> Vec<f64> {
        self.discounted_mass(self.beta)
    }

    pub fn discounted_mass(&self, beta: f64) -> Vec<f64> {
        self.grid.iter().zip(&self.mass).map(|(t, m)| (-beta * t).exp() * m).collect()
    }

    /// `V_t = e^{-beta t} <x, X_t>`.
    pub fn v_t(&self) -> Vec<Vec<f64>> {
        self.discounted_moment(self.beta)
    }

    pub fn discounted_moment(&self, beta: f64) -> Vec<Vec<f64>> {
        self.grid
            .iter()
            .zip(&self.moment)
            .map(|(t, m)| m.iter().map(|x| (-beta * t).exp() * x).collect())
            .collect()
    }

    /// Centre of mass `<x, X_t>/||X_t||`, undefined once extinct.
    pub fn com(&self, i: usize) -> Option<Vec<f64>> {
        (self.mass[i] > 0.0).then(|| self.moment[i].iter().map(|x| x / self.mass[i]).collect())
    }

    pub fn survived(&self) -> bool {
        self.mass.last().is_some_and(|&m| m > 0.0)
    }
}

/// Simulates one replicate from unit mass at the origin, recording on
/// [`SbmParams::grid`].
pub fn sbm_series(params: &SbmParams, seed: u64, replicate: u64) -> Result<MartingaleSeries> {
    params.validate()?;
    let rates = params.rates();
    let grid = params.grid();
    let mut rng = rng::stream(seed, replicate, rng::SBM_LANE);
    let mut cloud = SbmCloud::unit_mass_at(&vec![0.0; params.dim], params.n, replicate);
    let mut mass = Vec::with_capacity(grid.len());
    let mut moment = Vec::with_capacity(grid.len());
    for &t in &grid {
        sbm_step(&mut cloud, &rates, t, params.population_cap, &mut rng)?;
        if cloud.capped {
            break;
        }
        mass.push(cloud.mass());
        moment.push(cloud.first_moment());
    }
    Ok(MartingaleSeries { replicate_id: replicate, beta: params.beta, grid, mass, moment, capped: cloud.capped })
}

/// Replicates `0..replicates` in parallel, capped ones included (flagged).
pub fn sbm_ensemble(params: &SbmParams, seed: u64, replicates: u64) -> Result<Vec<MartingaleSeries>> {
    try_replicate_map(replicates, |r| sbm_series(params, seed, r))
}

/// Splits off replicates that hit the population cap.
pub fn exclude_capped(series: &[MartingaleSeries]) -> (Vec<&MartingaleSeries>, usize) {
    let kept: Vec<_> = series.iter().filter(|s| !s.capped).collect();
    let dropped = series.len() - kept.len();
    (kept, dropped)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtinctionReport {
    pub n: u64,
    pub horizon: f64,
    pub replicates: usize,
    pub estimate: Estimate,
    /// Exact extinction probability of the particle scheme by the horizon.
    pub scheme_probability: f64,
    pub limit: f64,
    /// Fraction alive at the horizon with mass below `small_mass`.
    pub small_mass_fraction: f64,
    pub small_mass: f64,
}

impl ExtinctionReport {
    /// `|estimate - limit| <= z SE + allowance`.
    pub fn check(&self, z: f64, allowance: f64) -> TestReport {
        let tol = z * self.estimate.se + allowance;
        TestReport::exact("extinction_vs_limit", self.replicates, self.estimate.value - self.limit, tol)
            .with_param("estimate", self.estimate.value)
            .with_param("se", self.estimate.se)
            .with_param("limit", self.limit)
            .with_param("allowance", allowance)
            .with_param("n", self.n)
            .with_param("horizon", self.horizon)
    }

    /// Agreement with the scheme's own extinction probability.
    pub fn check_scheme(&self, z: f64) -> TestReport {
        TestReport::z_check(
            "extinction_vs_scheme",
            self.replicates,
            self.estimate.value,
            (self.scheme_probability * (1.0 - self.scheme_probability) / self.replicates as f64).sqrt(),
            self.scheme_probability,
            z,
        )
        .with_param("n", self.n)
    }
}

/// Fraction of replicates whose particle count is 0 at the horizon. Only
/// the count matters, so it is advanced with [`sample_count`] in one jump.
pub fn extinction_probability(params: &SbmParams, replicates: u64, seed: u64) -> Result<ExtinctionReport> {
    params.validate()?;
    if replicates < 2 {
        return Err(Error::TooFewSamples { need: 2, got: replicates as usize });
    }
    let rates = params.rates();
    let small_mass = 1e-2;
    let counts = crate::simulate::replicate_map(replicates, |r| {
        let mut rng = rng::stream(seed, r, rng::SBM_MASS_LANE);
        sample_count(params.n, &rates, params.horizon, &mut rng)
    });
    let extinct: Vec<f64> = counts.iter().map(|&c| f64::from(u8::from(c == 0))).collect();
    let small = counts.iter().filter(|&&c| c > 0 && (c as f64 / params.n as f64) < small_mass).count();
    Ok(ExtinctionReport {
        n: params.n,
        horizon: params.horizon,
        replicates: counts.len(),
        estimate: stats::mean_se(&extinct),
        scheme_probability: rates.line_extinction(params.horizon).powf(params.n as f64),
        limit: params.limit_extinction(),
        small_mass_fraction: small as f64 / counts.len() as f64,
        small_mass,
    })
}

fn martingale_values(series: &MartingaleSeries, beta: f64) -> Vec<(String, Vec<f64>)> {
    let mut out = vec![("N".to_string(), series.discounted_mass(beta))];
    let v = series.discounted_moment(beta);
    for k in 0..v.first().map_or(0, Vec::len) {
        out.push((format!("V[{k}]"), v.iter().map(|row| row[k]).collect()));
    }
    out
}

/// Checks `E[M_{t+s} - M_t] = 0` and `corr(M_{t+s} - M_t, M_t) = 0` within
/// `z` SE for `M = N` and each coordinate of `V`, discounting at `beta`.
pub fn martingale_check(series: &[MartingaleSeries], t: f64, s: f64, beta: f64, z: f64) -> Result<Vec<TestReport>> {
    let (kept, _) = exclude_capped(series);
    if kept.len() < MIN_MARTINGALE_REPLICATES {
        return Err(Error::TooFewSamples { need: MIN_MARTINGALE_REPLICATES, got: kept.len() });
    }
    let i0 = kept[0].index_of(t)?;
    let i1 = kept[0].index_of(t + s)?;
    let per_rep: Vec<Vec<(String, Vec<f64>)>> = kept.iter().map(|s| martingale_values(s, beta)).collect();
    let mut reports = Vec::new();
    for (j, (label, _)) in per_rep[0].iter().enumerate() {
        let start: Vec<f64> = per_rep.iter().map(|v| v[j].1[i0]).collect();
        let inc: Vec<f64> = per_rep.iter().map(|v| v[j].1[i1] - v[j].1[i0]).collect();
        let tag = format!("{label}@(t={t},s={s})");
        let est = stats::mean_se(&inc);
        reports.push(est.check(&format!("mean_increment {tag}"), 0.0, z));
        if s == 0.0 {
            let dev = inc.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            reports.push(TestReport::exact(format!("zero_increment {tag}"), inc.len(), dev, 0.0));
        } else {
            reports.push(stats::correlation(&inc, &start).check(&format!("orthogonal_increment {tag}"), 0.0, z));
        }
    }
    Ok(reports)
}

/// `2 alpha int_0^t s e^{-beta s} ds` for the superprocess.
pub fn second_moment_reference(alpha: f64, beta: f64, t: f64) -> f64 {
    let bt = beta * t;
    // 1 - e^{-x}(1 + x), written to avoid cancellation for small x
    let tail = -(-bt).exp_m1() - bt * (-bt).exp();
    2.0 * alpha / (beta * beta) * tail
}

/// The same second moment for the level-`n` particle scheme, which adds
/// the Brownian noise of finitely many particles: `(1 - e^{-beta t})/(beta n)`.
pub fn second_moment_scheme(alpha: f64, beta: f64, n: u64, t: f64) -> f64 {
    second_moment_reference(alpha, beta, t) - (-beta * t).exp_m1() / (beta * n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondMomentPoint {
    pub t: f64,
    pub coordinate: usize,
    pub estimate: Estimate,
    pub reference: f64,
    pub scheme: f64,
}

/// Empirical `E <x, X^H_t>^2` with SE at every grid time and coordinate.
pub fn second_moment_profile(series: &[MartingaleSeries], alpha: f64, n: u64) -> Vec<SecondMomentPoint> {
    let (kept, _) = exclude_capped(series);
    let Some(first) = kept.first() else { return Vec::new() };
    let beta = first.beta;
    let values: Vec<Vec<Vec<f64>>> = kept.iter().map(|s| s.v_t()).collect();
    let d = first.moment.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    for (i, &t) in first.grid.iter().enumerate() {
        for k in 0..d {
            let sq: Vec<f64> = values.iter().map(|v| v[i][k].powi(2)).collect();
            out.push(SecondMomentPoint {
                t,
                coordinate: k,
                estimate: stats::mean_se(&sq),
                reference: second_moment_reference(alpha, beta, t),
                scheme: second_moment_scheme(alpha, beta, n, t),
            });
        }
    }
    out
}

/// The value `1 + beta/alpha` printed as the L^2 bound; reported next to
/// the derived plateau for comparison only.
pub fn printed_second_moment_bound(alpha: f64, beta: f64) -> f64 {
    1.0 + beta / alpha
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSummary {
    pub from: f64,
    pub to: f64,
    /// Median over survivors of `sup_{t in [from, to]} |X̄_t - X̄_to|`.
    pub median_tail: f64,
    /// Median clock increment over the window.
    pub median_clock: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComStabilizationReport {
    pub survivors: usize,
    pub excluded_capped: usize,
    pub windows: Vec<WindowSummary>,
    pub clock: Summary,
}

impl ComStabilizationReport {
    /// Strict ordering of the median tail movement between two windows.
    pub fn tail_order_check(&self, early: usize, late: usize) -> TestReport {
        let (e, l) = (self.windows[early].median_tail, self.windows[late].median_tail);
        TestReport::exact("tail_displacement_order", self.survivors, f64::from(u8::from(l >= e)), 0.0)
            .with_param("early", e)
            .with_param("late", l)
    }

    /// Median clock increment of a window below `fraction` of the median
    /// total clock.
    pub fn clock_tail_check(&self, window: usize, fraction: f64) -> TestReport {
        let inc = self.windows[window].median_clock;
        let bound = fraction * self.clock.median;
        TestReport::exact("clock_tail_fraction", self.survivors, f64::from(u8::from(inc >= bound)), 0.0)
            .with_param("median_clock_increment", inc)
            .with_param("bound", bound)
    }
}

/// Centre-of-mass diagnostics over surviving replicates: tail displacement
/// per window and the quadratic-variation clock of `X̄`, averaged over
/// coordinates.
pub fn com_stabilization(series: &[MartingaleSeries], windows: &[(f64, f64)]) -> Result<ComStabilizationReport> {
    let (kept, excluded_capped) = exclude_capped(series);
    let survivors: Vec<&MartingaleSeries> = kept.into_iter().filter(|s| s.survived()).collect();
    if survivors.is_empty() {
        return Err(Error::NoSurvivors);
    }
    let mut tails = vec![Vec::with_capacity(survivors.len()); windows.len()];
    let mut clocks = vec![Vec::with_capacity(survivors.len()); windows.len()];
    let mut totals = Vec::with_capacity(survivors.len());
    for s in &survivors {
        let path: Vec<Vec<f64>> = (0..s.grid.len()).map(|i| s.com(i).expect("survivor")).collect();
        let qv = estimate_qv(&s.grid, &path)?;
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        totals.push(avg(qv.total()));
        for (w, &(a, b)) in windows.iter().enumerate() {
            let end = &path[s.index_of(b)?];
            let sup = s
                .grid
                .iter()
                .zip(&path)
                .filter(|(t, _)| **t >= a - GRID_TOL && **t <= b + GRID_TOL)
                .map(|(_, x)| x.iter().zip(end).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            tails[w].push(sup);
            clocks[w].push(avg(&qv.increment(a, b)));
        }
    }
    Ok(ComStabilizationReport {
        survivors: survivors.len(),
        excluded_capped,
        windows: windows
            .iter()
            .zip(tails.iter().zip(&clocks))
            .map(|(&(from, to), (t, c))| WindowSummary {
                from,
                to,
                median_tail: stats::median(t),
                median_clock: stats::median(c),
            })
            .collect(),
        clock: stats::summarize(&totals),
    })
}

/// Mean and variance of the Feller diffusion started at `m0`, from
/// `m' = beta m`, `v' = 2 beta v + 2 alpha m` integrated by RK4.
pub fn feller_moments(alpha: f64, beta: f64, m0: f64, t: f64) -> (f64, f64) {
    let steps = ((t.abs() * 1000.0).ceil() as usize).max(1);
    let h = t / steps as f64;
    let f = |m: f64, v: f64| (beta * m, 2.0 * beta * v + 2.0 * alpha * m);
    let (mut m, mut v) = (m0, 0.0);
    for _ in 0..steps {
        let k1 = f(m, v);
        let k2 = f(m + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = f(m + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = f(m + h * k3.0, v + h * k3.1);
        m += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (m, v)
}
