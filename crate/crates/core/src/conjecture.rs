//! Exploratory experiments on the normalized local mass `2^{-n} <Z_n, g>`.
//!
//! Under attraction the mass is predicted to settle around a Gaussian
//! profile centred at the limiting centre of mass; under repulsion it is
//! compared with the Lebesgue integral of `g`. Nothing here asserts the
//! prediction: reports carry an `exploratory` flag.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, ParticleCloud};
use crate::quadrature::integrate_nested;
use crate::rng;
use crate::simulate::{simulate, try_replicate_map, NullSink};
use crate::stats::{self, Estimate, Summary};

/// Number of scales at which a bump is cut off.
pub const BUMP_TRUNCATION: f64 = 8.0;
const QUAD_ABS_TOL: f64 = 1e-12;
const QUAD_REL_TOL: f64 = 1e-10;
pub const MIN_OBSERVATION_TIME: u32 = 10;
pub const MIN_REPLICATES: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Indicator of `center + prod [-h_k, h_k]`.
    Box { half_widths: Vec<f64> },
    /// Indicator of the closed ball.
    Ball { radius: f64 },
    /// `exp(-|x - center|^2 / (2 s^2))`, zero beyond `8 s`.
    Bump { scale: f64 },
}

/// A nonnegative, compactly supported test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: Vec<f64>,
    pub shape: Shape,
}

impl TestFunction {
    pub fn indicator_box(center: Vec<f64>, half_widths: Vec<f64>) -> Result<Self> {
        Self::checked(center, Shape::Box { half_widths })
    }

    /// `1[lo, hi]` in one dimension.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::indicator_box(vec![0.5 * (lo + hi)], vec![0.5 * (hi - lo)])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::checked(center, Shape::Ball { radius })
    }

    pub fn bump(center: Vec<f64>, scale: f64) -> Result<Self> {
        Self::checked(center, Shape::Bump { scale })
    }

    fn checked(center: Vec<f64>, shape: Shape) -> Result<Self> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("test function needs a finite center".into()));
        }
        let ok = match &shape {
            Shape::Box { half_widths } => {
                half_widths.len() == center.len() && half_widths.iter().all(|h| h.is_finite() && *h >= 0.0)
            }
            Shape::Ball { radius } => radius.is_finite() && *radius >= 0.0,
            Shape::Bump { scale } => scale.is_finite() && *scale > 0.0,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("bad test function shape {shape:?}")));
        }
        Ok(Self { center, shape })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// The same function recentred at `c`.
    pub fn centered_at(&self, c: &[f64]) -> Self {
        assert_eq!(c.len(), self.dim());
        Self { center: c.to_vec(), shape: self.shape.clone() }
    }

    fn radius(&self) -> f64 {
        match &self.shape {
            Shape::Box { .. } => unreachable!(),
            Shape::Ball { radius } => *radius,
            Shape::Bump { scale } => BUMP_TRUNCATION * scale,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Box { half_widths } => {
                let inside = x.iter().zip(&self.center).zip(half_widths).all(|((xi, c), h)| (xi - c).abs() <= *h);
                f64::from(u8::from(inside))
            }
            Shape::Ball { radius } => f64::from(u8::from(self.dist2(x) <= radius * radius)),
            Shape::Bump { scale } => {
                let r2 = self.dist2(x);
                if r2 > (BUMP_TRUNCATION * scale).powi(2) {
                    0.0
                } else {
                    (-r2 / (2.0 * scale * scale)).exp()
                }
            }
        }
    }

    fn dist2(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum()
    }

    /// Support of coordinate `k` given the first `k` coordinates.
    pub fn section(&self, k: usize, prefix: &[f64]) -> (f64, f64) {
        let c = self.center[k];
        match &self.shape {
            Shape::Box { half_widths } => (c - half_widths[k], c + half_widths[k]),
            _ => {
                let used: f64 = prefix.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum();
                let r = (self.radius().powi(2) - used).max(0.0).sqrt();
                (c - r, c + r)
            }
        }
    }
}

/// `<Z, g> = sum_i g(Z^i)`.
pub fn local_mass(cloud: &ParticleCloud, g: &TestFunction) -> f64 {
    cloud.rows().map(|x| g.eval(x)).sum()
}

/// `<(gamma/pi)^{d/2} exp(-gamma |. - x0|^2), g>` for `gamma > 0`, or the
/// plain integral `<1, g>` for `gamma < 0`.
pub fn predicted_limit(g: &TestFunction, gamma: f64, x0: &[f64]) -> Result<f64> {
    if gamma == 0.0 || !gamma.is_finite() {
        return Err(Error::InvalidParameter("predicted limit needs gamma ≠ 0".into()));
    }
    let d = g.dim();
    if x0.len() != d {
        return Err(Error::ShapeMismatch { len: x0.len(), dim: d });
    }
    if gamma < 0.0 {
        return Ok(integrate_nested(d, &|k, p| g.section(k, p), &|x| g.eval(x), QUAD_ABS_TOL, QUAD_REL_TOL));
    }
    let reach = BUMP_TRUNCATION / (2.0 * gamma).sqrt();
    let norm = (gamma / std::f64::consts::PI).powf(d as f64 / 2.0);
    let bounds = |k: usize, p: &[f64]| {
        let (lo, hi) = g.section(k, p);
        (lo.max(x0[k] - reach), hi.min(x0[k] + reach))
    };
    let integrand = |x: &[f64]| {
        let r2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum();
        norm * (-gamma * r2).exp() * g.eval(x)
    };
    Ok(integrate_nested(d, &bounds, &integrand, QUAD_ABS_TOL, QUAD_REL_TOL))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureRow {
    pub replicate_id: u64,
    pub com: Vec<f64>,
    pub observed: f64,
    pub predicted: f64,
    pub ratio: f64,
    /// Position of one uniformly chosen particle.
    pub sampled: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceCandidates {
    /// `2 + 1/(2 gamma)`: centre-of-mass variance plus the OU stationary
    /// variance of the attractor density.
    pub ou_stationary: f64,
    /// `2 + 1/(4 gamma^2)`.
    pub convolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub exploratory: bool,
    pub gamma: f64,
    pub observation_time: u32,
    pub shift_to_com: bool,
    pub test_function: TestFunction,
    pub rows: Vec<ConjectureRow>,
    pub ratio: Summary,
    pub observed: Summary,
    pub predicted: Summary,
    /// Per-coordinate variance of the sampled particle.
    pub sampled_variance: Vec<Estimate>,
    pub variance_candidates: Option<VarianceCandidates>,
    pub notes: Vec<String>,
}

/// Runs `replicates` simulations up to `t = max_epoch + 1` and compares the
/// normalized local mass with [`predicted_limit`] evaluated at the observed
/// centre of mass. With `shift_to_com`, `g` is recentred at that centre of
/// mass in each replicate.
pub fn conjecture_experiment(
    params: &ModelParams,
    g: &TestFunction,
    shift_to_com: bool,
    replicates: u64,
    seed: u64,
) -> Result<ConjectureReport> {
    params.validate()?;
    let t_obs = params.max_epoch + 1;
    if t_obs < MIN_OBSERVATION_TIME {
        return Err(Error::InvalidParameter(format!("observation time M ≥ {MIN_OBSERVATION_TIME} violated")));
    }
    if replicates < MIN_REPLICATES {
        return Err(Error::TooFewSamples { need: MIN_REPLICATES as usize, got: replicates as usize });
    }
    if params.gamma == 0.0 {
        return Err(Error::InvalidParameter("conjecture needs gamma ≠ 0".into()));
    }
    if g.dim() != params.dim {
        return Err(Error::ShapeMismatch { len: g.dim(), dim: params.dim });
    }
    let run_params = ModelParams { record_mesh: Vec::new(), ..params.clone() };

    let rows = try_replicate_map(replicates, |r| {
        let cloud = simulate(&run_params, seed, r, &mut NullSink)?;
        let com = cloud.center_of_mass();
        let gg = if shift_to_com { g.centered_at(&com) } else { g.clone() };
        let observed = local_mass(&cloud, &gg) / cloud.len() as f64;
        let predicted = predicted_limit(&gg, params.gamma, &com)?;
        let pick = rng::stream(seed, r, rng::SAMPLING_LANE).random_range(0..cloud.len());
        Ok(ConjectureRow {
            replicate_id: r,
            com,
            observed,
            predicted,
            ratio: observed / predicted,
            sampled: cloud.particle(pick).to_vec(),
        })
    })?;

    let col = |f: &dyn Fn(&ConjectureRow) -> f64| rows.iter().map(f).filter(|x| x.is_finite()).collect::<Vec<_>>();
    let sampled_variance = (0..params.dim)
        .map(|k| stats::variance_se(&rows.iter().map(|row| row.sampled[k]).collect::<Vec<_>>()))
        .collect();
    let gamma = params.gamma;
    let variance_candidates = (gamma > 0.0).then(|| VarianceCandidates {
        ou_stationary: 2.0 + 1.0 / (2.0 * gamma),
        convolution: 2.0 + 1.0 / (4.0 * gamma * gamma),
    });
    Ok(ConjectureReport {
        exploratory: true,
        gamma,
        observation_time: t_obs,
        shift_to_com,
        test_function: g.clone(),
        ratio: stats::summarize(&col(&|r| r.ratio)),
        observed: stats::summarize(&col(&|r| r.observed)),
        predicted: stats::summarize(&col(&|r| r.predicted)),
        rows,
        sampled_variance,
        variance_candidates,
        notes: vec![
            "exploratory: the prediction is not asserted".into(),
            format!("conditioning uses the centre of mass at t = {t_obs} in place of its limit; error O(2^(-M/2))"),
            "normalized mass is the pre-branch particle average, equal to 2^-M <Z_M, g> after the split".into(),
        ],
    })
}
