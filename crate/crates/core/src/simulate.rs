//! Epoch-by-epoch driver for the interacting BBM.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::model::{branch, euler_step, exact_epoch_step, GaussianIncrement, ModelParams, ParticleCloud, Sampler};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotKind {
    /// `tau = 0`; for epochs after the first this is the post-branch state.
    EpochStart,
    /// An interior point of the record mesh.
    Mesh,
    /// `tau = 1`, just before the particles split.
    PreBranch,
}

#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub replicate: u64,
    pub kind: SnapshotKind,
    pub cloud: &'a ParticleCloud,
}

impl Snapshot<'_> {
    pub fn t(&self) -> f64 {
        self.cloud.time()
    }
}

pub trait SnapshotSink {
    fn record(&mut self, snap: &Snapshot<'_>) -> Result<()>;
}

impl<F> SnapshotSink for F
where
    F: FnMut(&Snapshot<'_>) -> Result<()>,
{
    fn record(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        self(snap)
    }
}

/// Discards everything.
pub struct NullSink;

impl SnapshotSink for NullSink {
    fn record(&mut self, _: &Snapshot<'_>) -> Result<()> {
        Ok(())
    }
}

/// Runs epochs `0..=max_epoch` from a single particle at the origin and
/// returns the pre-branch cloud at `t = max_epoch + 1`.
///
/// The noise for epoch `m` of replicate `r` comes from the stream
/// `(seed, r, m)` alone, so the output depends only on
/// `(params, seed, replicate)`.
pub fn simulate(params: &ModelParams, seed: u64, replicate: u64, sink: &mut dyn SnapshotSink) -> Result<ParticleCloud> {
    params.validate()?;
    params.check_resources()?;

    let interior: Vec<f64> = params.record_mesh.iter().copied().filter(|&x| x > 0.0).collect();
    let mut cloud = ParticleCloud::initial(params.dim);
    for epoch in 0..=params.max_epoch {
        if epoch > 0 {
            cloud = branch(&cloud)?;
        }
        sink.record(&Snapshot { replicate, kind: SnapshotKind::EpochStart, cloud: &cloud })?;
        let mut stream = rng::epoch_stream(seed, replicate, epoch);
        for target in interior.iter().copied().chain(std::iter::once(1.0)) {
            cloud = advance(&cloud, params, target, &mut stream)?;
            let kind = if target < 1.0 { SnapshotKind::Mesh } else { SnapshotKind::PreBranch };
            sink.record(&Snapshot { replicate, kind, cloud: &cloud })?;
        }
    }
    Ok(cloud)
}

/// Moves `cloud` to intra-epoch time `target` with the configured sampler.
pub fn advance(cloud: &ParticleCloud, params: &ModelParams, target: f64, rng: &mut rng::StreamRng) -> Result<ParticleCloud> {
    match params.sampler {
        Sampler::Exact => exact_epoch_step(cloud, params.gamma, target, rng),
        Sampler::Euler => {
            let span = target - cloud.tau();
            let steps = ((span / params.dt) - 1e-9).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            let mut current = cloud.clone();
            for _ in 0..steps {
                let noise = GaussianIncrement::standard(current.len(), current.dim(), rng);
                current = euler_step(&current, params.gamma, &noise, h)?;
            }
            current.snap_tau(target);
            Ok(current)
        }
    }
}

/// Runs `f` for replicates `0..count` on the current rayon pool and returns
/// the results in replicate order.
pub fn replicate_map<T, F>(count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Fallible variant of [`replicate_map`]; the first error in replicate
/// order wins.
pub fn try_replicate_map<T, F>(count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    replicate_map(count, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::uniform_mesh;

    fn collect_times(params: &ModelParams) -> Vec<(SnapshotKind, f64, usize)> {
        let mut seen = Vec::new();
        let mut sink = |s: &Snapshot<'_>| {
            seen.push((s.kind, s.t(), s.cloud.len()));
            Ok(())
        };
        simulate(params, 1, 0, &mut sink).unwrap();
        seen
    }

    #[test]
    fn zero_epochs_is_one_brownian_particle() {
        let params = ModelParams { max_epoch: 0, ..ModelParams::default() };
        let seen = collect_times(&params);
        assert_eq!(seen, vec![(SnapshotKind::EpochStart, 0.0, 1), (SnapshotKind::PreBranch, 1.0, 1)]);
    }

    #[test]
    fn snapshot_schedule() {
        let params = ModelParams { max_epoch: 2, record_mesh: uniform_mesh(2), ..ModelParams::default() };
        let seen = collect_times(&params);
        let times: Vec<f64> = seen.iter().map(|s| s.1).collect();
        assert_eq!(times, vec![0.0, 0.5, 1.0, 1.0, 1.5, 2.0, 2.0, 2.5, 3.0]);
        assert_eq!(seen[3], (SnapshotKind::EpochStart, 1.0, 2));
        assert_eq!(seen.last().unwrap().2, 4);
    }

    #[test]
    fn deterministic_given_seed() {
        for sampler in [Sampler::Exact, Sampler::Euler] {
            let params = ModelParams { max_epoch: 3, sampler, dt: 0.05, gamma: -0.7, dim: 2, ..ModelParams::default() };
            let a = simulate(&params, 11, 4, &mut NullSink).unwrap();
            let b = simulate(&params, 11, 4, &mut NullSink).unwrap();
            assert_eq!(a.positions(), b.positions());
            let c = simulate(&params, 11, 5, &mut NullSink).unwrap();
            assert_ne!(a.positions(), c.positions());
        }
    }

    #[test]
    fn resource_cap_is_enforced() {
        let params = ModelParams { max_epoch: 20, ..ModelParams::default() };
        assert!(matches!(simulate(&params, 0, 0, &mut NullSink), Err(crate::Error::ResourceCap(_))));
    }

    #[test]
    fn opposite_gamma_share_com_path_under_exact_sampler() {
        let mut paths = Vec::new();
        for gamma in [1.3, -1.3] {
            let params = ModelParams { gamma, max_epoch: 5, record_mesh: uniform_mesh(4), ..ModelParams::default() };
            let mut path = Vec::new();
            let mut sink = |s: &Snapshot<'_>| {
                path.push(s.cloud.center_of_mass()[0]);
                Ok(())
            };
            simulate(&params, 2, 0, &mut sink).unwrap();
            paths.push(path);
        }
        for (a, b) in paths[0].iter().zip(&paths[1]) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn replicate_map_keeps_order() {
        assert_eq!(replicate_map(5, |r| r * 2), vec![0, 2, 4, 6, 8]);
    }
}
