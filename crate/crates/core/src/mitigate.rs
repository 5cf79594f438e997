//! Error mitigation: readout-confusion inversion, parity postselection and
//! McWeeny purification, plus bootstrap resampling for error bars.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::measure::CorrelationMatrix;
use crate::simulate::{bitstring, parse_bitstring, NoiseModel, ShotCounts};
use crate::CMatrix;

/// Default Hamming radius around observed bitstrings kept by the readout
/// inversion.
pub const DEFAULT_RADIUS: usize = 2;

/// Signed weights over bitstrings summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "QuasiRecord", try_from = "QuasiRecord")]
pub struct QuasiDistribution {
    n: usize,
    weights: BTreeMap<usize, f64>,
    shots: u64,
    overhead: f64,
}

#[derive(Serialize, Deserialize)]
struct QuasiRecord {
    n: usize,
    shots: u64,
    overhead: f64,
    weights: BTreeMap<String, f64>,
}

impl From<QuasiDistribution> for QuasiRecord {
    fn from(q: QuasiDistribution) -> Self {
        let weights = q.weights.iter().map(|(&x, &w)| (bitstring(x, q.n), w)).collect();
        Self { n: q.n, shots: q.shots, overhead: q.overhead, weights }
    }
}

impl TryFrom<QuasiRecord> for QuasiDistribution {
    type Error = Error;

    fn try_from(r: QuasiRecord) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (s, w) in r.weights {
            weights.insert(parse_bitstring(&s)?, w);
        }
        Ok(Self { n: r.n, weights, shots: r.shots, overhead: r.overhead })
    }
}

impl QuasiDistribution {
    /// Normalize `weights` to unit sum.
    pub fn new(n: usize, weights: BTreeMap<usize, f64>, shots: u64) -> Result<Self> {
        let total: f64 = weights.values().sum();
        if weights.is_empty() || total.abs() < 1e-300 {
            return Err(Error::EmptyCounts);
        }
        let weights: BTreeMap<usize, f64> = weights.into_iter().map(|(x, w)| (x, w / total)).collect();
        let overhead = weights.values().map(|w| w.abs()).sum();
        Ok(Self { n, weights, shots, overhead })
    }

    /// Empirical frequencies.
    pub fn from_counts(counts: &ShotCounts) -> Self {
        let shots = counts.shots().max(1) as f64;
        let weights = counts.counts().iter().map(|(&x, &k)| (x, k as f64 / shots)).collect();
        Self { n: counts.n(), weights, shots: counts.shots(), overhead: 1.0 }
    }

    /// Exact distribution, indexed by basis state.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        let n = probs.len().trailing_zeros() as usize;
        let weights = probs.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(x, &p)| (x, p)).collect();
        Self::new(n, weights, 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &BTreeMap<usize, f64> {
        &self.weights
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// Sum of absolute weights.
    pub fn overhead(&self) -> f64 {
        self.overhead
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn get(&self, bits: &str) -> f64 {
        parse_bitstring(bits).ok().and_then(|x| self.weights.get(&x).copied()).unwrap_or(0.0)
    }

    /// `sum_x w(x) f(x)`
    pub fn expectation(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.weights.iter().map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Independent per-qubit readout channels `A_q` with `A_q[1][0] = p01` and
/// `A_q[0][1] = p10`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionModel {
    matrices: Vec<[[f64; 2]; 2]>,
}

impl ConfusionModel {
    pub fn new(errors: &[(f64, f64)]) -> Result<Self> {
        let mut matrices = Vec::with_capacity(errors.len());
        for (q, &(p01, p10)) in errors.iter().enumerate() {
            if !(0.0..=1.0).contains(&p01) || !(0.0..=1.0).contains(&p10) {
                return Err(Error::InvalidParameter(format!("qubit {q}: flip probabilities out of range")));
            }
            if p01 + p10 >= 1.0 {
                return Err(Error::SingularConfusion(q));
            }
            matrices.push([[1.0 - p01, p10], [p01, 1.0 - p10]]);
        }
        Ok(Self { matrices })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrices: vec![[[1.0, 0.0], [0.0, 1.0]]; n] }
    }

    /// The readout part of a noise model.
    pub fn from_noise(noise: &NoiseModel, n: usize) -> Result<Self> {
        let errors: Vec<_> = (0..n)
            .map(|q| {
                let r = noise.readout_for(q);
                (r.p01, r.p10)
            })
            .collect();
        Self::new(&errors)
    }

    pub fn n(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, q: usize) -> [[f64; 2]; 2] {
        self.matrices[q]
    }

    fn inverses(&self) -> Vec<[[f64; 2]; 2]> {
        self.matrices
            .iter()
            .map(|a| {
                let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
            })
            .collect()
    }

    /// Push an exact distribution through the channel.
    pub fn apply(&self, probs: &[f64]) -> Vec<f64> {
        tensor_apply(&self.matrices, probs)
    }
}

/// `(A_{n-1} (x) ... (x) A_0) v` over the full 2^n space.
fn tensor_apply(mats: &[[[f64; 2]; 2]], v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    for (q, a) in mats.iter().enumerate() {
        let bit = 1 << q;
        for x in 0..out.len() {
            if x & bit == 0 {
                let (u0, u1) = (out[x], out[x | bit]);
                out[x] = a[0][0] * u0 + a[0][1] * u1;
                out[x | bit] = a[1][0] * u0 + a[1][1] * u1;
            }
        }
    }
    out
}

fn hamming_ball(observed: impl Iterator<Item = usize>, n: usize, radius: usize) -> Vec<usize> {
    let mut support: std::collections::BTreeSet<usize> = observed.collect();
    let mut frontier: Vec<usize> = support.iter().copied().collect();
    for _ in 0..radius {
        let mut next = Vec::new();
        for x in frontier {
            for q in 0..n {
                let y = x ^ (1 << q);
                if support.insert(y) {
                    next.push(y);
                }
            }
        }
        frontier = next;
    }
    support.into_iter().collect()
}

pub fn readout_mitigate(counts: &ShotCounts, model: &ConfusionModel) -> Result<QuasiDistribution> {
    readout_mitigate_with_radius(counts, model, DEFAULT_RADIUS)
}

/// Apply `(x)_q A_q^{-1}` to the empirical distribution, keeping only
/// bitstrings within `radius` flips of an observed one, then renormalize.
pub fn readout_mitigate_with_radius(
    counts: &ShotCounts,
    model: &ConfusionModel,
    radius: usize,
) -> Result<QuasiDistribution> {
    let n = counts.n();
    if model.n() != n {
        return Err(Error::InvalidParameter(format!(
            "confusion model has {} qubits, counts have {n}",
            model.n()
        )));
    }
    if counts.shots() == 0 {
        return Err(Error::EmptyCounts);
    }
    let inv = model.inverses();
    let freq = QuasiDistribution::from_counts(counts);
    let weights: BTreeMap<usize, f64> = if radius >= n && n <= 20 {
        let mut dense = vec![0.0; 1 << n];
        for (&x, &w) in freq.weights() {
            dense[x] = w;
        }
        tensor_apply(&inv, &dense).into_iter().enumerate().filter(|(_, w)| *w != 0.0).collect()
    } else {
        hamming_ball(freq.weights().keys().copied(), n, radius)
            .into_iter()
            .map(|x| {
                let w = freq
                    .weights()
                    .iter()
                    .map(|(&y, &f)| f * (0..n).map(|q| inv[q][x >> q & 1][y >> q & 1]).product::<f64>())
                    .sum();
                (x, w)
            })
            .collect()
    };
    QuasiDistribution::new(n, weights, counts.shots())
}

/// Mass removed by postselection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscardedMass {
    pub signed: f64,
    pub absolute: f64,
}

/// Keep only bitstrings of the given parity and renormalize.
pub fn parity_postselect(quasi: &QuasiDistribution, parity: u8) -> Result<(QuasiDistribution, DiscardedMass)> {
    let mut kept = BTreeMap::new();
    let mut discarded = DiscardedMass { signed: 0.0, absolute: 0.0 };
    for (&x, &w) in quasi.weights() {
        if (x.count_ones() % 2) as u8 == parity % 2 {
            kept.insert(x, w);
        } else {
            discarded.signed += w;
            discarded.absolute += w.abs();
        }
    }
    let total: f64 = kept.values().sum();
    if kept.is_empty() || total <= 1e-12 {
        return Err(Error::DegeneratePostselection);
    }
    let out = QuasiDistribution::new(quasi.n(), kept, quasi.shots())?;
    Ok((out, discarded))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurificationReport {
    pub iterations: usize,
    pub residual: f64,
    /// An eigenvalue of the input sat within 0.01 of 1/2, where the map has
    /// an unstable fixed point.
    pub near_half_warning: bool,
}

/// Iterate `Gamma <- Gamma^2 (3 I - 2 Gamma)` until `|| Gamma^2 - Gamma ||_F <
/// tol`. The iteration count is the number of map applications.
pub fn mcweeny_purify(
    gamma: &CorrelationMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(CorrelationMatrix, PurificationReport)> {
    let mut g = linalg::hermitize(&gamma.gamma());
    let dim = g.nrows();
    let near_half_warning = linalg::eigvalsh(&g).iter().any(|e| (e - 0.5).abs() <= 0.01);
    let three = CMatrix::identity(dim, dim).scale(3.0);
    let mut residual = f64::INFINITY;
    for k in 1..=max_iter {
        let sq = &g * &g;
        g = linalg::hermitize(&(&sq * (&three - g.scale(2.0))));
        residual = linalg::frobenius(&(&g * &g - &g));
        if residual < tol {
            let out = CorrelationMatrix::from_gamma(&g)?.symmetrized();
            let residual = out.idempotency_residual();
            return Ok((out, PurificationReport { iterations: k, residual, near_half_warning }));
        }
    }
    Err(Error::NonConvergence { iterations: max_iter, residual })
}

/// Multinomial resample of the shots.
pub fn resample_counts(counts: &ShotCounts, seed: u64, stream: u64) -> Result<ShotCounts> {
    if counts.shots() == 0 {
        return Err(Error::EmptyCounts);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let outcomes: Vec<(usize, u64)> = counts.counts().iter().map(|(&x, &k)| (x, k)).collect();
    let mut cdf = Vec::with_capacity(outcomes.len());
    let mut acc = 0u64;
    for &(_, k) in &outcomes {
        acc += k;
        cdf.push(acc);
    }
    let mut out = BTreeMap::new();
    for _ in 0..counts.shots() {
        let r = rng.random_range(0..acc);
        let i = cdf.partition_point(|&c| c <= r);
        *out.entry(outcomes[i].0).or_default() += 1;
    }
    ShotCounts::new(counts.n(), out, counts.seed())
}

/// Mean with a two-standard-deviation band from bootstrap replicates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let k = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / k;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        let sigma = var.sqrt();
        Some(Self { mean, sigma, lower: mean - 2.0 * sigma, upper: mean + 2.0 * sigma })
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lower..=self.upper).contains(&x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bogoliubov::{diagonalize, Occupation};
    use crate::hamiltonian::{kitaev_chain, KitaevParams};
    use crate::linalg::c;
    use crate::simulate::{correlation_from_statevector, StateVector};
    use crate::synthesis::prepare_eigenstate_circuit;

    fn counts(n: usize, pairs: &[(&str, u64)]) -> ShotCounts {
        let map = pairs.iter().map(|(s, k)| (parse_bitstring(s).unwrap(), *k)).collect();
        ShotCounts::new(n, map, 0).unwrap()
    }

    #[test]
    fn identity_confusion_keeps_frequencies() {
        let c = counts(2, &[("00", 30), ("11", 70)]);
        let q = readout_mitigate(&c, &ConfusionModel::identity(2)).unwrap();
        assert!((q.get("00") - 0.3).abs() < 1e-12);
        assert!((q.get("11") - 0.7).abs() < 1e-12);
        assert!((q.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_inversion() {
        let model = ConfusionModel::new(&[(0.02, 0.02)]).unwrap();
        let q = readout_mitigate(&counts(1, &[("0", 9800), ("1", 200)]), &model).unwrap();
        assert!((q.get("0") - 1.0).abs() < 0.01);
    }

    #[test]
    fn forward_then_inverse_recovers_distribution() {
        let model = ConfusionModel::new(&[(0.03, 0.05), (0.01, 0.07)]).unwrap();
        let p = [0.1, 0.2, 0.3, 0.4];
        let noisy = model.apply(&p);
        let scale = 1e9;
        let map = noisy.iter().enumerate().map(|(x, &w)| (x, (w * scale).round() as u64)).collect();
        let q = readout_mitigate(&ShotCounts::new(2, map, 0).unwrap(), &model).unwrap();
        let tv: f64 = (0..4).map(|x| (q.weights().get(&x).unwrap_or(&0.0) - p[x]).abs()).sum::<f64>() / 2.0;
        assert!(tv < 1e-6);
    }

    #[test]
    fn restricted_inversion_is_normalized() {
        let model = ConfusionModel::new(&[(0.02, 0.03); 6]).unwrap();
        let c = counts(6, &[("000000", 900), ("110000", 80), ("101101", 20)]);
        let q = readout_mitigate_with_radius(&c, &model, 1).unwrap();
        assert!((q.total() - 1.0).abs() < 1e-9);
        assert!(q.overhead() >= 1.0);
    }

    #[test]
    fn linear_in_diagonal_observables() {
        let model = ConfusionModel::new(&[(0.02, 0.05), (0.04, 0.01), (0.03, 0.03)]).unwrap();
        let c = counts(3, &[("000", 500), ("010", 200), ("111", 250), ("100", 50)]);
        let q = readout_mitigate_with_radius(&c, &model, 3).unwrap();
        // Z on qubit 1 corrected directly: <Z>_true = (<Z>_meas - (p10 - p01)) / (1 - p01 - p10)
        // for a single qubit channel.
        let z = |x: usize| if x >> 1 & 1 == 1 { -1.0 } else { 1.0 };
        let measured = QuasiDistribution::from_counts(&c).expectation(z);
        let (p01, p10) = (0.04, 0.01);
        let corrected = (measured - (p10 - p01)) / (1.0 - p01 - p10);
        assert!((q.expectation(z) - corrected).abs() < 1e-9);
    }

    #[test]
    fn singular_and_empty_inputs() {
        assert!(matches!(ConfusionModel::new(&[(0.5, 0.5)]), Err(Error::SingularConfusion(0))));
        let empty = ShotCounts::new(1, BTreeMap::new(), 0).unwrap();
        assert!(matches!(readout_mitigate(&empty, &ConfusionModel::identity(1)), Err(Error::EmptyCounts)));
    }

    #[test]
    fn postselection_on_uniform_pair() {
        let q = QuasiDistribution::from_counts(&counts(2, &[("00", 1), ("01", 1), ("10", 1), ("11", 1)]));
        let (kept, discarded) = parity_postselect(&q, 0).unwrap();
        assert!((kept.get("00") - 0.5).abs() < 1e-15 && (kept.get("11") - 0.5).abs() < 1e-15);
        assert!((discarded.signed - 0.5).abs() < 1e-15);
        let (again, d2) = parity_postselect(&kept, 0).unwrap();
        assert_eq!(again, kept);
        assert_eq!(d2.absolute, 0.0);
        assert!(matches!(
            parity_postselect(&QuasiDistribution::from_counts(&counts(1, &[("1", 5)])), 0),
            Err(Error::DegeneratePostselection)
        ));
    }

    fn ground_gamma(n: usize) -> CorrelationMatrix {
        let bt = diagonalize(&kitaev_chain(&KitaevParams::new(n, -1.0, 1.0, 0.8)).unwrap()).unwrap();
        let circuit = prepare_eigenstate_circuit(&bt, &Occupation::vacuum(n)).unwrap();
        correlation_from_statevector(&StateVector::zero(n).evolved(&circuit).unwrap()).unwrap()
    }

    #[test]
    fn projector_is_fixed_point() {
        let g = ground_gamma(4);
        let (p, report) = mcweeny_purify(&g, 1e-10, 100).unwrap();
        assert_eq!(report.iterations, 1);
        assert!(linalg::max_abs(&(p.gamma() - g.gamma())) < 1e-12);
    }

    #[test]
    fn perturbed_projector_converges() {
        let g = ground_gamma(4).gamma();
        let dim = g.nrows();
        let e = CMatrix::from_fn(dim, dim, |i, j| c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0));
        let e = linalg::hermitize(&e);
        let e = e.scale(0.05 / linalg::frobenius(&e));
        let noisy = CorrelationMatrix::from_gamma(&(g + e)).unwrap();
        let (p, report) = mcweeny_purify(&noisy, 1e-10, 100).unwrap();
        assert!(report.iterations <= 20);
        assert!(p.idempotency_residual() < 1e-10);
        assert!(p.structure_residual() < 1e-12);
    }

    #[test]
    fn half_identity_does_not_converge() {
        let g = CorrelationMatrix::from_gamma(&CMatrix::identity(4, 4).scale(0.5)).unwrap();
        assert!(matches!(mcweeny_purify(&g, 1e-10, 100), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn scalar_map_moves_eigenvalues_toward_nearest_projector() {
        let f = |x: f64| x * x * (3.0 - 2.0 * x);
        for &x in &[0.52, 0.7, 0.9, 0.99] {
            assert!(f(x) > x && f(x) < 1.0, "{x}");
        }
        for &x in &[0.01, 0.2, 0.48] {
            assert!(f(x) < x && f(x) > 0.0, "{x}");
        }
        for &(x, limit) in &[(0.52, 1.0), (1.25, 1.0), (0.48, 0.0), (-0.25, 0.0)] {
            let y = (0..60).fold(x, |y, _| f(y));
            assert!((y - limit).abs() < 1e-12, "{x}");
        }
        // Far above 1 the map overshoots past 1/2.
        assert!(f(1.45) < 0.5);
    }

    #[test]
    fn resampling_keeps_shot_total() {
        let c = counts(2, &[("00", 600), ("11", 400)]);
        let r = resample_counts(&c, 1, 0).unwrap();
        assert_eq!(r.shots(), 1000);
        assert_eq!(r, resample_counts(&c, 1, 0).unwrap());
        let iv = Interval::from_samples(&[1.0, 2.0, 3.0]).unwrap();
        assert!((iv.mean - 2.0).abs() < 1e-15 && (iv.sigma - 1.0).abs() < 1e-15);
        assert!(iv.contains(3.9) && !iv.contains(4.1));
    }
}
