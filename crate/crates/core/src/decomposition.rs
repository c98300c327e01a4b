//! The centring projector `A = I - J/n` and the functionals built on it.
//!
//! `A` maps a vector onto the orthogonal complement of `v = (1, ..., 1)`.
//! Viewed from the centre of mass, the driving noises of an epoch are
//! `A B`, so they live on an `(n - 1)`-dimensional subspace.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::ParticleCloud;

/// Largest `n` for which [`CenteringOperator::materialize`] builds a matrix.
pub const MAX_MATERIALIZED: usize = 64;
pub const RANK_THRESHOLD: f64 = 1e-9;
const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CenteringOperator {
    n: usize,
}

impl CenteringOperator {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("centring needs n ≥ 1".into()));
        }
        Ok(Self { n })
    }

    pub fn for_epoch(m: u32) -> Result<Self> {
        if m >= 48 {
            return Err(Error::ResourceCap(format!("epoch {m}")));
        }
        Self::new(1 << m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `x - mean(x) v`, without forming the matrix.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "vector length must match operator size");
        let m = x.iter().sum::<f64>() / self.n as f64;
        x.iter().map(|xi| xi - m).collect()
    }

    pub fn materialize(&self) -> Result<DMatrix<f64>> {
        if self.n > MAX_MATERIALIZED {
            return Err(Error::TooLargeToMaterialize(self.n.trailing_zeros()));
        }
        let off = 1.0 / self.n as f64;
        Ok(DMatrix::from_fn(self.n, self.n, |i, j| if i == j { 1.0 - off } else { -off }))
    }
}

/// Numerical rank of the materialized `A^(m)`: the number of singular values
/// above `RANK_THRESHOLD` times the largest one.
pub fn centering_rank(m: u32) -> Result<usize> {
    if m > 6 {
        return Err(Error::TooLargeToMaterialize(m));
    }
    let a = CenteringOperator::for_epoch(m)?.materialize()?;
    Ok(numerical_rank(&a, RANK_THRESHOLD))
}

pub fn numerical_rank(a: &DMatrix<f64>, relative: f64) -> usize {
    let sv = a.singular_values();
    let top = sv.max();
    if top <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > relative * top).count()
}

/// Covariance of the centred driving increments `(A B(tau))` obtained by
/// expanding the bilinear form: `Cov(W^i, W^j) = tau * sum_r A_ir A_jr`.
///
/// Off-diagonal entries come out as `-2^{-m} tau` and diagonal entries as
/// `(1 - 2^{-m}) tau`.
pub fn centered_increment_covariance(m: u32, tau: f64) -> Result<DMatrix<f64>> {
    let a = CenteringOperator::for_epoch(m)?.materialize()?;
    Ok(&a * a.transpose() * tau)
}

/// Coefficients `c_1..c_k` with `sum c = 0` and `sum c^2 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemWeights {
    c: Vec<f64>,
}

impl SubsystemWeights {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::InvalidParameter("subsystem needs k ≥ 1 weights".into()));
        }
        let sum: f64 = c.iter().sum();
        let norm: f64 = c.iter().map(|x| x * x).sum();
        if sum.abs() > WEIGHT_TOL || (norm - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidParameter(format!(
                "weights need Σc = 0 and Σc² = 1 (got {sum:e}, {norm})"
            )));
        }
        Ok(Self { c })
    }

    /// `(1/√2, -1/√2)`: the scaled separation of two tagged particles.
    pub fn pair() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { c: vec![h, -h] }
    }

    pub fn k(&self) -> usize {
        self.c.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineagePolicy {
    /// Always follow child `2i`.
    #[default]
    FirstChild,
    /// Pick one of the two children uniformly.
    Random,
}

/// Current particle index of each tagged line of descent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lineage {
    indices: Vec<usize>,
}

impl Lineage {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Follows every tagged line through one branching event.
    pub fn on_branch<R: Rng + ?Sized>(&mut self, policy: LineagePolicy, rng: &mut R) {
        for i in &mut self.indices {
            let child = match policy {
                LineagePolicy::FirstChild => 0,
                LineagePolicy::Random => usize::from(rng.random::<bool>()),
            };
            *i = 2 * *i + child;
        }
    }
}

/// `sum_i c_i Z^{lineage(i)}`, one value per coordinate.
pub fn psi_functional(cloud: &ParticleCloud, w: &SubsystemWeights, lineage: &Lineage) -> Result<Vec<f64>> {
    if lineage.indices.len() != w.k() {
        return Err(Error::InvalidParameter(format!(
            "{} tagged lines for {} weights",
            lineage.indices.len(),
            w.k()
        )));
    }
    let n = cloud.len();
    let mut out = vec![0.0; cloud.dim()];
    for (&idx, &c) in lineage.indices.iter().zip(&w.c) {
        if idx >= n {
            return Err(Error::LineageOutOfRange { index: idx, n });
        }
        for (o, x) in out.iter_mut().zip(cloud.particle(idx)) {
            *o += c * x;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn constant_vector_is_annihilated() {
        let a = CenteringOperator::new(4).unwrap();
        assert_eq!(a.apply(&[1.0; 4]), vec![0.0; 4]);
    }

    #[test]
    fn mean_zero_pair_is_fixed() {
        let a = CenteringOperator::new(2).unwrap();
        assert_eq!(a.apply(&[1.0, -1.0]), vec![1.0, -1.0]);
    }

    #[test]
    fn ranks_of_small_epochs() {
        assert_eq!(centering_rank(0).unwrap(), 0);
        assert_eq!(centering_rank(1).unwrap(), 1);
        assert_eq!(centering_rank(3).unwrap(), 7);
        assert!(matches!(centering_rank(7), Err(Error::TooLargeToMaterialize(7))));
        assert!(CenteringOperator::for_epoch(7).unwrap().materialize().is_err());
    }

    #[test]
    fn bilinear_covariance_entries() {
        for m in 1..=4u32 {
            let tau = 0.7;
            let cov = centered_increment_covariance(m, tau).unwrap();
            let n = 1usize << m;
            let off = -tau / n as f64;
            let diag = (1.0 - 1.0 / n as f64) * tau;
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { diag } else { off };
                    assert!((cov[(i, j)] - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn weights_validation() {
        assert!(SubsystemWeights::new(vec![1.0, -1.0]).is_err());
        assert!(SubsystemWeights::new(vec![0.6, 0.8]).is_err());
        let s3 = 1.0 / 6f64.sqrt();
        SubsystemWeights::new(vec![s3, s3, -2.0 * s3]).unwrap();
        assert_eq!(SubsystemWeights::pair().k(), 2);
    }

    #[test]
    fn psi_of_pair_is_scaled_difference() {
        let cloud = ParticleCloud::new(2, 0.0, 1, vec![3.0, 1.0, -2.0, 5.0]).unwrap();
        let lineage = Lineage::new(vec![0, 2]);
        let psi = psi_functional(&cloud, &SubsystemWeights::pair(), &lineage).unwrap();
        assert!((psi[0] - 5.0 / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn psi_vanishes_on_coincident_particles() {
        let cloud = ParticleCloud::new(2, 0.0, 2, [4.0, -1.0].repeat(4)).unwrap();
        let psi = psi_functional(&cloud, &SubsystemWeights::pair(), &Lineage::new(vec![1, 3])).unwrap();
        assert!(psi.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn psi_rejects_out_of_range_lineage() {
        let cloud = ParticleCloud::new(1, 0.0, 1, vec![0.0, 1.0]).unwrap();
        let err = psi_functional(&cloud, &SubsystemWeights::pair(), &Lineage::new(vec![0, 2])).unwrap_err();
        assert!(matches!(err, Error::LineageOutOfRange { index: 2, n: 2 }));
    }

    #[test]
    fn lineage_follows_children() {
        let mut lin = Lineage::new(vec![0, 1]);
        let mut r = rng::stream(0, 0, rng::LINEAGE_LANE);
        lin.on_branch(LineagePolicy::FirstChild, &mut r);
        assert_eq!(lin.indices(), &[0, 2]);
        for _ in 0..5 {
            lin.on_branch(LineagePolicy::Random, &mut r);
        }
        // each line stays inside its own subtree
        assert_eq!(lin.indices()[0] >> 5, 0);
        assert_eq!(lin.indices()[1] >> 5, 2);
    }

    proptest! {
        #[test]
        fn apply_matches_matrix_and_is_idempotent(m in 0u32..=6, seed in 0u64..500) {
            use rand_distr::StandardNormal;
            let n = 1usize << m;
            let mut r = rng::stream(seed, 0, rng::AUX_LANE_BASE);
            let x: Vec<f64> = (0..n).map(|_| 10.0 * r.sample::<f64, _>(StandardNormal)).collect();
            let op = CenteringOperator::new(n).unwrap();
            let once = op.apply(&x);
            let twice = op.apply(&once);
            let dense = op.materialize().unwrap() * nalgebra::DVector::from_vec(x.clone());
            for i in 0..n {
                prop_assert!((once[i] - twice[i]).abs() < 1e-12);
                prop_assert!((once[i] - dense[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn psi_is_translation_invariant(shift in -100.0f64..100.0, seed in 0u64..500) {
            use rand_distr::StandardNormal;
            let mut r = rng::stream(seed, 0, rng::AUX_LANE_BASE);
            let xs: Vec<f64> = (0..16).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
            let cloud = ParticleCloud::new(3, 0.0, 2, xs).unwrap();
            let mut moved = cloud.clone();
            moved.translate(&[shift, -shift]);
            let s = 1.0 / 6f64.sqrt();
            let w = SubsystemWeights::new(vec![s, s, -2.0 * s]).unwrap();
            let lin = Lineage::new(vec![0, 3, 7]);
            let a = psi_functional(&cloud, &w, &lin).unwrap();
            let b = psi_functional(&moved, &w, &lin).unwrap();
            for k in 0..2 {
                prop_assert!((a[k] - b[k]).abs() < 1e-10);
            }
        }
    }
}
