//! State and one-epoch dynamics of the self-interacting branching Brownian
//! motion.
//!
//! During epoch `m` (times `[m, m+1)`) there are exactly `n = 2^m` particles
//! in `R^d`, each driven by an independent Brownian motion plus the mean-field
//! drift `gamma * (com - Z^i)`. At every integer time each particle is replaced
//! by two children at its position.
//!
//! Positions are stored row-major: particle `i` occupies
//! `positions[i*d .. (i+1)*d]`. That layout is the same stacking as the
//! `2^m d`-dimensional drift vector, so [`assemble_drift_flat`] works on the
//! raw buffer.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when checking that a step lands on (or before) `tau = 1`.
pub const TAU_EPS: f64 = 1e-12;

/// Below this `|gamma h|` the OU variance uses its Taylor series.
const SERIES_CUTOFF: f64 = 1e-6;

pub const DEFAULT_MAX_EPOCH_CAP: u32 = 16;
pub const DEFAULT_MAX_COORDINATES: usize = 1 << 18;

/// Number of particles alive at time `t`: `2^floor(t)`.
pub fn n_of_t(t: f64) -> u64 {
    assert!(t >= 0.0 && t.is_finite(), "n_of_t needs t >= 0, got {t}");
    let m = t.floor();
    assert!(m < 64.0, "2^{m} overflows");
    1u64 << (m as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    #[default]
    Exact,
    Euler,
}

impl std::str::FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Sampler::Exact),
            "euler" => Ok(Sampler::Euler),
            other => Err(Error::InvalidParameter(format!("unknown sampler `{other}` (exact | euler)"))),
        }
    }
}

/// Upper bounds on what a single simulation may allocate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceLimits {
    pub max_epoch: u32,
    /// Bound on `2^m * d`, the number of stored coordinates.
    pub max_coordinates: usize,
}

impl Default for ResourceLimits {
    fn default() -> Self {
        Self { max_epoch: DEFAULT_MAX_EPOCH_CAP, max_coordinates: DEFAULT_MAX_COORDINATES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Interaction strength; positive attracts, negative repels, zero is
    /// plain BBM.
    pub gamma: f64,
    pub dim: usize,
    /// Last epoch that is run; the simulation ends at `t = max_epoch + 1`.
    pub max_epoch: u32,
    pub sampler: Sampler,
    /// Euler step, ignored by the exact sampler.
    pub dt: f64,
    /// Intra-epoch times in `[0, 1)` at which snapshots are taken.
    pub record_mesh: Vec<f64>,
    #[serde(default)]
    pub limits: ResourceLimits,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            dim: 1,
            max_epoch: 0,
            sampler: Sampler::Exact,
            dt: 1e-3,
            record_mesh: Vec::new(),
            limits: ResourceLimits::default(),
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() {
            return Err(Error::InvalidParameter("gamma must be finite".into()));
        }
        if self.dim < 1 {
            return Err(Error::InvalidParameter("dim ≥ 1 violated".into()));
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(Error::InvalidParameter(format!("dt ∈ (0, 1] violated (dt = {})", self.dt)));
        }
        validate_mesh(&self.record_mesh)?;
        Ok(())
    }

    /// Checks the allocation the run would need against `limits`.
    pub fn check_resources(&self) -> Result<()> {
        if self.max_epoch > self.limits.max_epoch {
            return Err(Error::ResourceCap(format!(
                "max_epoch {} exceeds cap {}",
                self.max_epoch, self.limits.max_epoch
            )));
        }
        let coords = (1usize << self.max_epoch).saturating_mul(self.dim);
        if coords > self.limits.max_coordinates {
            return Err(Error::ResourceCap(format!(
                "2^{} particles x {} dims = {coords} coordinates exceeds budget {}",
                self.max_epoch, self.dim, self.limits.max_coordinates
            )));
        }
        Ok(())
    }
}

/// Record meshes must be strictly increasing inside `[0, 1)`.
pub fn validate_mesh(mesh: &[f64]) -> Result<()> {
    if mesh.iter().any(|&x| !(0.0..1.0).contains(&x)) {
        return Err(Error::InvalidParameter("record_mesh must lie within [0, 1)".into()));
    }
    if mesh.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::UnsortedMesh);
    }
    Ok(())
}

/// `{0, 1/k, ..., (k-1)/k}`.
pub fn uniform_mesh(k: usize) -> Vec<f64> {
    (0..k).map(|i| i as f64 / k as f64).collect()
}

/// Full interacting-BBM state at one instant.
///
/// `tau` runs over `[0, 1]`; `tau == 1` is the pre-branch state at the end
/// of the epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleCloud {
    epoch: u32,
    tau: f64,
    dim: usize,
    positions: Vec<f64>,
}

impl ParticleCloud {
    /// Single particle at the origin at `t = 0`.
    pub fn initial(dim: usize) -> Self {
        Self { epoch: 0, tau: 0.0, dim, positions: vec![0.0; dim] }
    }

    pub fn new(epoch: u32, tau: f64, dim: usize, positions: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim ≥ 1 violated".into()));
        }
        if epoch >= 48 {
            return Err(Error::ResourceCap(format!("epoch {epoch}")));
        }
        let n = 1usize << epoch;
        if positions.len() != n * dim {
            return Err(Error::InvalidParameter(format!(
                "epoch {epoch} needs {n} x {dim} coordinates, got {}",
                positions.len()
            )));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParameter(format!("tau {tau} outside [0, 1]")));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        Ok(Self { epoch, tau, dim, positions })
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Absolute time `epoch + tau`.
    pub fn time(&self) -> f64 {
        f64::from(self.epoch) + self.tau
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.positions.chunks_exact(self.dim)
    }

    /// Coordinate-wise mean of the particle positions.
    pub fn center_of_mass(&self) -> Vec<f64> {
        let mut com = vec![0.0; self.dim];
        for row in self.rows() {
            for (c, x) in com.iter_mut().zip(row) {
                *c += x;
            }
        }
        let n = self.len() as f64;
        com.iter_mut().for_each(|c| *c /= n);
        com
    }

    /// Removes accumulated rounding in `tau` after a chain of sub-steps.
    pub(crate) fn snap_tau(&mut self, target: f64) {
        debug_assert!((self.tau - target).abs() < 1e-9);
        self.tau = target;
    }

    /// Shifts every particle by `offset`.
    pub fn translate(&mut self, offset: &[f64]) {
        assert_eq!(offset.len(), self.dim);
        for row in self.positions.chunks_exact_mut(self.dim) {
            for (x, o) in row.iter_mut().zip(offset) {
                *x += o;
            }
        }
    }
}

/// Block of i.i.d. centred normal draws driving one step of a cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianIncrement {
    dim: usize,
    variance: f64,
    block: Vec<f64>,
}

impl GaussianIncrement {
    /// `n x d` standard normals.
    pub fn standard<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Self {
        Self::with_variance(n, dim, 1.0, rng)
    }

    pub fn with_variance<R: Rng + ?Sized>(n: usize, dim: usize, variance: f64, rng: &mut R) -> Self {
        let sd = variance.sqrt();
        let block = (0..n * dim).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        Self { dim, variance, block }
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Self { dim, variance: 1.0, block: vec![0.0; n * dim] }
    }

    pub fn from_block(block: Vec<f64>, dim: usize, variance: f64) -> Result<Self> {
        if dim == 0 || block.len() % dim != 0 {
            return Err(Error::ShapeMismatch { len: block.len(), dim });
        }
        Ok(Self { dim, variance, block })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn block(&self) -> &[f64] {
        &self.block
    }

    pub fn matches(&self, cloud: &ParticleCloud) -> bool {
        self.dim == cloud.dim && self.block.len() == cloud.positions.len()
    }
}

/// Mean-field drift `gamma * (com - Z^i)` for every particle, as an `n x d`
/// row-major grid. One pass for the mean, one for the differences.
pub fn net_drift(cloud: &ParticleCloud, gamma: f64) -> Vec<f64> {
    let com = cloud.center_of_mass();
    let mut out = Vec::with_capacity(cloud.positions.len());
    for row in cloud.rows() {
        out.extend(row.iter().zip(&com).map(|(x, c)| gamma * (c - x)));
    }
    out
}

/// The drift of the whole system seen as one `2^m d`-dimensional diffusion:
/// component `j*d + k` is `gamma * (2^{-m} sum_i x_{i*d+k} - x_{j*d+k})`.
///
/// Unlike [`net_drift`] this works on a bare stacked vector and checks the
/// stacking itself.
pub fn assemble_drift_flat(positions: &[f64], dim: usize, gamma: f64) -> Result<Vec<f64>> {
    if dim == 0 || positions.len() % dim != 0 {
        return Err(Error::ShapeMismatch { len: positions.len(), dim });
    }
    let n = positions.len() / dim;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut coordinate_sums = vec![0.0; dim];
    for (idx, x) in positions.iter().enumerate() {
        coordinate_sums[idx % dim] += x;
    }
    let scale = 1.0 / n as f64;
    Ok(positions
        .iter()
        .enumerate()
        .map(|(idx, x)| gamma * (scale * coordinate_sums[idx % dim] - x))
        .collect())
}

/// One Euler–Maruyama step `Z <- Z + gamma (com - Z) dt + sqrt(dt) xi`.
pub fn euler_step(cloud: &ParticleCloud, gamma: f64, noise: &GaussianIncrement, dt: f64) -> Result<ParticleCloud> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if cloud.tau + dt > 1.0 + TAU_EPS {
        return Err(Error::CrossesBranchTime { tau: cloud.tau, dt });
    }
    if !noise.matches(cloud) {
        return Err(Error::ShapeMismatch { len: noise.block.len(), dim: cloud.dim });
    }
    let drift = net_drift(cloud, gamma);
    let sd = dt.sqrt();
    let positions = cloud
        .positions
        .iter()
        .zip(&drift)
        .zip(&noise.block)
        .map(|((x, b), xi)| x + b * dt + sd * xi)
        .collect();
    Ok(ParticleCloud {
        epoch: cloud.epoch,
        tau: (cloud.tau + dt).min(1.0),
        dim: cloud.dim,
        positions,
    })
}

/// Variance `(1 - e^{-2 gamma h}) / (2 gamma)` accumulated by a unit-noise
/// OU component over time `h`; tends to `h` as `gamma -> 0` and is positive
/// for either sign of `gamma`.
pub fn ou_variance(gamma: f64, h: f64) -> f64 {
    let x = gamma * h;
    if x.abs() < SERIES_CUTOFF {
        h * (1.0 - x + 2.0 / 3.0 * x * x)
    } else {
        -(-2.0 * x).exp_m1() / (2.0 * gamma)
    }
}

/// Samples the exact Gaussian transition of the epoch's linear SDE from
/// `tau` to `tau_target`, in `O(n d)`.
///
/// With `P` the averaging projector and `h = tau_target - tau`, each
/// coordinate column moves to
/// `P Z + e^{-gamma h} (I - P) Z + (common normal, var h/n) + (centred
/// normals, var v(gamma, h))`.
/// The centred part carries covariance `v (I - P)` and the common part
/// `h P`, which together are the transition covariance of
/// `dZ = gamma (P - I) Z dt + dB`.
///
/// Draw order is fixed (the `n x d` block, then the `d` common normals) and
/// independent of `gamma`, so runs with different `gamma` and the same
/// stream share their centre-of-mass path.
pub fn exact_epoch_step<R: Rng + ?Sized>(
    cloud: &ParticleCloud,
    gamma: f64,
    tau_target: f64,
    rng: &mut R,
) -> Result<ParticleCloud> {
    if !(tau_target > cloud.tau && tau_target <= 1.0 + TAU_EPS) {
        return Err(Error::TargetOutOfRange { tau: cloud.tau, target: tau_target });
    }
    let tau_target = tau_target.min(1.0);
    let h = tau_target - cloud.tau;
    let (n, d) = (cloud.len(), cloud.dim);
    let decay = (-gamma * h).exp();
    let sd_resid = ou_variance(gamma, h).sqrt();
    let sd_common = (h / n as f64).sqrt();

    let mut noise: Vec<f64> = (0..n * d).map(|_| sd_resid * rng.sample::<f64, _>(StandardNormal)).collect();
    let common: Vec<f64> = (0..d).map(|_| sd_common * rng.sample::<f64, _>(StandardNormal)).collect();

    let mut noise_mean = vec![0.0; d];
    for row in noise.chunks_exact(d) {
        for (m, g) in noise_mean.iter_mut().zip(row) {
            *m += g;
        }
    }
    noise_mean.iter_mut().for_each(|m| *m /= n as f64);

    let com = cloud.center_of_mass();
    for (row, pos) in noise.chunks_exact_mut(d).zip(cloud.positions.chunks_exact(d)) {
        for k in 0..d {
            let centred = row[k] - noise_mean[k];
            row[k] = com[k] + common[k] + decay * (pos[k] - com[k]) + centred;
        }
    }
    Ok(ParticleCloud { epoch: cloud.epoch, tau: tau_target, dim: d, positions: noise })
}

/// Replaces every particle by two children at its position. Children of
/// parent `i` are `2i` and `2i + 1` (zero-based).
pub fn branch(cloud: &ParticleCloud) -> Result<ParticleCloud> {
    if (cloud.tau - 1.0).abs() > 1e-9 {
        return Err(Error::MidEpochBranch(cloud.tau));
    }
    let d = cloud.dim;
    let mut positions = Vec::with_capacity(2 * cloud.positions.len());
    for row in cloud.rows() {
        positions.extend_from_slice(row);
        positions.extend_from_slice(row);
    }
    debug_assert_eq!(positions.len(), (2usize << cloud.epoch) * d);
    Ok(ParticleCloud { epoch: cloud.epoch + 1, tau: 0.0, dim: d, positions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn cloud_1d(epoch: u32, xs: &[f64]) -> ParticleCloud {
        ParticleCloud::new(epoch, 0.0, 1, xs.to_vec()).unwrap()
    }

    #[test]
    fn particle_counts() {
        assert_eq!(n_of_t(0.0), 1);
        assert_eq!(n_of_t(2.5), 4);
        assert_eq!(n_of_t(10.0), 1024);
        assert_eq!(n_of_t(0.999), 1);
    }

    #[test]
    fn drift_of_two_particles() {
        let c = cloud_1d(1, &[0.0, 2.0]);
        assert_eq!(net_drift(&c, 1.0), vec![1.0, -1.0]);
        assert_eq!(assemble_drift_flat(c.positions(), 1, 1.0).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn drift_vanishes_for_coincident_particles() {
        let c = ParticleCloud::new(2, 0.0, 2, [1.5, -0.5].repeat(4)).unwrap();
        assert!(net_drift(&c, 3.7).iter().all(|&b| b == 0.0));
    }

    #[test]
    fn flat_drift_rejects_ragged_length() {
        assert!(matches!(
            assemble_drift_flat(&[1.0, 2.0, 3.0], 2, 1.0),
            Err(Error::ShapeMismatch { len: 3, dim: 2 })
        ));
        assert!(assemble_drift_flat(&[1.0, -4.0], 1, 0.0).unwrap().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn deterministic_euler_map() {
        let c = cloud_1d(1, &[0.0, 2.0]);
        let next = euler_step(&c, 1.0, &GaussianIncrement::zeros(2, 1), 0.5).unwrap();
        assert_eq!(next.positions(), &[0.5, 1.5]);
        assert_eq!(next.tau(), 0.5);
    }

    #[test]
    fn euler_without_interaction_is_brownian_increment() {
        let c = cloud_1d(1, &[0.0, 2.0]);
        let noise = GaussianIncrement::from_block(vec![1.0, -2.0], 1, 1.0).unwrap();
        let next = euler_step(&c, 0.0, &noise, 0.25).unwrap();
        assert_eq!(next.positions(), &[0.5, 1.0]);
    }

    #[test]
    fn euler_refuses_to_cross_branch_time() {
        let c = ParticleCloud::new(0, 0.75, 1, vec![0.0]).unwrap();
        let err = euler_step(&c, 1.0, &GaussianIncrement::zeros(1, 1), 0.5).unwrap_err();
        assert!(matches!(err, Error::CrossesBranchTime { .. }));
    }

    #[test]
    fn exact_step_rejects_bad_targets() {
        let c = ParticleCloud::new(0, 0.5, 1, vec![0.0]).unwrap();
        let mut r = rng::stream(0, 0, 0);
        assert!(exact_epoch_step(&c, 1.0, 0.5, &mut r).is_err());
        assert!(exact_epoch_step(&c, 1.0, 0.25, &mut r).is_err());
        assert!(exact_epoch_step(&c, 1.0, 1.5, &mut r).is_err());
        assert!(exact_epoch_step(&c, 1.0, 1.0, &mut r).is_ok());
    }

    #[test]
    fn single_particle_exact_step_is_brownian() {
        // one particle: decay and centring drop out, only the common draw moves it
        let c = ParticleCloud::initial(1);
        let mut r = rng::stream(3, 0, 0);
        let xs: Vec<f64> = (0..20_000)
            .map(|_| exact_epoch_step(&c, 5.0, 0.5, &mut r).unwrap().positions()[0])
            .collect();
        let v = crate::stats::variance_se(&xs);
        assert!(v.within(0.5, 4.0), "{v:?}");
    }

    #[test]
    fn ou_variance_limits() {
        assert_eq!(ou_variance(0.0, 0.3), 0.3);
        let x = ou_variance(1e-9, 0.5);
        assert!((x - 0.5).abs() < 1e-9);
        // series and closed form agree on both sides of the cutoff
        for g in [0.999e-6f64, 1.001e-6, -0.999e-6] {
            let closed = -(-2.0 * g).exp_m1() / (2.0 * g);
            assert!((ou_variance(g, 1.0) - closed).abs() < 1e-15);
        }
        assert!((ou_variance(1.0, 1.0) - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
        let rep = ou_variance(-1.0, 1.0);
        assert!((rep - ((2.0f64).exp() - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn branch_duplicates_rows() {
        let c = ParticleCloud::new(0, 1.0, 2, vec![0.5, -1.0]).unwrap();
        let b = branch(&c).unwrap();
        assert_eq!(b.epoch(), 1);
        assert_eq!(b.tau(), 0.0);
        assert_eq!(b.positions(), &[0.5, -1.0, 0.5, -1.0]);
        assert!(matches!(branch(&b), Err(Error::MidEpochBranch(_))));
    }

    #[test]
    fn branch_epoch_three_to_four() {
        let xs: Vec<f64> = (0..8).map(f64::from).collect();
        let c = ParticleCloud::new(3, 1.0, 1, xs).unwrap();
        let b = branch(&c).unwrap();
        assert_eq!(b.len(), 16);
        assert_eq!(b.particle(5), c.particle(2));
        assert_eq!(b.center_of_mass(), c.center_of_mass());
    }

    #[test]
    fn params_validation_messages() {
        let mut p = ModelParams { dim: 0, ..ModelParams::default() };
        assert!(p.validate().unwrap_err().to_string().contains("dim ≥ 1"));
        p.dim = 1;
        p.dt = 0.0;
        assert!(p.validate().is_err());
        p.dt = 0.01;
        p.record_mesh = vec![0.5, 0.25];
        assert!(matches!(p.validate(), Err(Error::UnsortedMesh)));
        p.record_mesh = vec![0.0, 1.0];
        assert!(p.validate().is_err());
        p.record_mesh = uniform_mesh(4);
        p.validate().unwrap();
        p.max_epoch = 17;
        assert!(matches!(p.check_resources(), Err(Error::ResourceCap(_))));
    }

    fn arb_cloud() -> impl Strategy<Value = ParticleCloud> {
        (0u32..6, 1usize..4).prop_flat_map(|(m, d)| {
            prop::collection::vec(-50.0f64..50.0, (1 << m) * d)
                .prop_map(move |xs| ParticleCloud::new(m, 0.0, d, xs).unwrap())
        })
    }

    proptest! {
        #[test]
        fn drift_rows_sum_to_zero(cloud in arb_cloud(), gamma in -5.0f64..5.0) {
            let drift = net_drift(&cloud, gamma);
            let d = cloud.dim();
            for k in 0..d {
                let s: f64 = drift.iter().skip(k).step_by(d).sum();
                prop_assert!(s.abs() < 1e-9 * (1.0 + gamma.abs()) * cloud.len() as f64);
            }
        }

        #[test]
        fn flat_drift_matches_row_drift(cloud in arb_cloud(), gamma in -5.0f64..5.0) {
            let flat = assemble_drift_flat(cloud.positions(), cloud.dim(), gamma).unwrap();
            let rows = net_drift(&cloud, gamma);
            for (a, b) in flat.iter().zip(&rows) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn euler_moves_com_by_noise_only(cloud in arb_cloud(), gamma in -5.0f64..5.0, seed in 0u64..1000) {
            let mut r = rng::stream(seed, 0, 0);
            let noise = GaussianIncrement::standard(cloud.len(), cloud.dim(), &mut r);
            let dt = 0.01;
            let next = euler_step(&cloud, gamma, &noise, dt).unwrap();
            let before = cloud.center_of_mass();
            let after = next.center_of_mass();
            let d = cloud.dim();
            for k in 0..d {
                let noise_mean: f64 = noise.block().iter().skip(k).step_by(d).sum::<f64>() / cloud.len() as f64;
                prop_assert!((after[k] - before[k] - dt.sqrt() * noise_mean).abs() < 1e-10);
            }
        }

        #[test]
        fn branch_preserves_com(cloud in arb_cloud()) {
            let end = ParticleCloud::new(cloud.epoch(), 1.0, cloud.dim(), cloud.positions().to_vec()).unwrap();
            let b = branch(&end).unwrap();
            prop_assert_eq!(b.len(), 2 * end.len());
            for (a, c) in b.center_of_mass().iter().zip(end.center_of_mass()) {
                prop_assert!((a - c).abs() < 1e-12 * (1.0 + c.abs()));
            }
        }
    }
}
