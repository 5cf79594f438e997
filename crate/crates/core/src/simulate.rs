//! Statevector simulation, shot sampling and stochastic Pauli noise.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, MAX_DENSE_MODES};
use crate::linalg::c;
use crate::measure::CorrelationMatrix;
use crate::synthesis::{Circuit, GateMatrix};
use crate::CMatrix;

/// Shots per independently seeded block when sampling.
const SHOT_BLOCK: usize = 8192;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`
    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, x: usize) -> Self {
        let mut amps = vec![c(0.0, 0.0); 1 << n];
        amps[x] = c(1.0, 0.0);
        Self { n, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidParameter(format!("{} amplitudes is not a power of two", amps.len())));
        }
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("state has norm {norm}")));
        }
        Ok(Self { n: amps.len().trailing_zeros() as usize, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Apply the circuit in place.
    pub fn apply(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n() != self.n {
            return Err(Error::InvalidParameter(format!(
                "{}-qubit circuit on a {}-qubit state",
                circuit.n(),
                self.n
            )));
        }
        for g in circuit.gates() {
            self.apply_matrix(&g.matrix());
        }
        Ok(())
    }

    pub fn evolved(mut self, circuit: &Circuit) -> Result<Self> {
        self.apply(circuit)?;
        Ok(self)
    }

    fn apply_matrix(&mut self, m: &GateMatrix) {
        match *m {
            GateMatrix::Single(q, u) => {
                let bit = 1 << q;
                for x in 0..self.amps.len() {
                    if x & bit == 0 {
                        let (a, b) = (self.amps[x], self.amps[x | bit]);
                        self.amps[x] = u[0][0] * a + u[0][1] * b;
                        self.amps[x | bit] = u[1][0] * a + u[1][1] * b;
                    }
                }
            }
            GateMatrix::Pair(q, u) => {
                let mask = 3 << q;
                for x in 0..self.amps.len() {
                    if x & mask == 0 {
                        let idx = [x, x | 1 << q, x | 2 << q, x | mask];
                        let v = idx.map(|i| self.amps[i]);
                        for (r, &i) in idx.iter().enumerate() {
                            self.amps[i] = (0..4).map(|k| u[r][k] * v[k]).sum();
                        }
                    }
                }
            }
        }
    }

    /// Pauli `p` (1 = X, 2 = Y, 3 = Z) on qubit `q`.
    fn apply_pauli(&mut self, q: usize, p: u8) {
        let bit = 1 << q;
        for x in 0..self.amps.len() {
            if x & bit != 0 {
                continue;
            }
            let (a, b) = (self.amps[x], self.amps[x | bit]);
            let (na, nb) = match p {
                1 => (b, a),
                2 => (c(0.0, -1.0) * b, c(0.0, 1.0) * a),
                3 => (a, -b),
                _ => (a, b),
            };
            self.amps[x] = na;
            self.amps[x | bit] = nb;
        }
    }
}

pub fn apply_circuit(state: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    state.clone().evolved(circuit)
}

/// Independent readout flip probabilities of one qubit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReadoutError {
    /// P(read 1 | state 0)
    pub p01: f64,
    /// P(read 0 | state 1)
    pub p10: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub p1q: f64,
    pub p2q: f64,
    pub p_idle: f64,
    /// One entry per qubit, or a single entry shared by all qubits. Empty
    /// means perfect readout.
    pub readout: Vec<ReadoutError>,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn with_uniform_readout(mut self, p01: f64, p10: f64) -> Self {
        self.readout = vec![ReadoutError { p01, p10 }];
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut probs = vec![("p1q", self.p1q), ("p2q", self.p2q), ("p_idle", self.p_idle)];
        for r in &self.readout {
            probs.push(("p01", r.p01));
            probs.push(("p10", r.p10));
        }
        if let Some((name, p)) = probs.iter().find(|(_, p)| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter(format!("{name} = {p} is not a probability")));
        }
        if self.readout.len() > 1 && self.readout.len() != n {
            return Err(Error::InvalidParameter(format!(
                "{} readout entries for {n} qubits",
                self.readout.len()
            )));
        }
        Ok(())
    }

    pub fn readout_for(&self, q: usize) -> ReadoutError {
        match self.readout.len() {
            0 => ReadoutError::default(),
            1 => self.readout[0],
            _ => self.readout[q],
        }
    }

    fn gate_noise_free(&self) -> bool {
        self.p1q == 0.0 && self.p2q == 0.0 && self.p_idle == 0.0
    }
}

/// Measured bitstring histogram. Character `j` of a bitstring is qubit `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ShotCountsRecord", try_from = "ShotCountsRecord")]
pub struct ShotCounts {
    n: usize,
    shots: u64,
    seed: u64,
    counts: BTreeMap<usize, u64>,
}

#[derive(Serialize, Deserialize)]
struct ShotCountsRecord {
    n: usize,
    shots: u64,
    seed: u64,
    counts: BTreeMap<String, u64>,
}

pub fn bitstring(x: usize, n: usize) -> String {
    (0..n).map(|j| if x >> j & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bitstring(s: &str) -> Result<usize> {
    s.chars().rev().try_fold(0usize, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok(acc << 1 | 1),
        _ => Err(Error::InvalidParameter(format!("invalid bitstring {s:?}"))),
    })
}

impl From<ShotCounts> for ShotCountsRecord {
    fn from(c: ShotCounts) -> Self {
        let counts = c.counts.iter().map(|(&x, &k)| (bitstring(x, c.n), k)).collect();
        Self { n: c.n, shots: c.shots, seed: c.seed, counts }
    }
}

impl TryFrom<ShotCountsRecord> for ShotCounts {
    type Error = Error;

    fn try_from(r: ShotCountsRecord) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for (s, k) in r.counts {
            if s.len() != r.n {
                return Err(Error::InvalidParameter(format!("bitstring {s:?} has wrong length")));
            }
            counts.insert(parse_bitstring(&s)?, k);
        }
        ShotCounts::new(r.n, counts, r.seed).and_then(|c| {
            if c.shots == r.shots {
                Ok(c)
            } else {
                Err(Error::InvalidParameter("counts do not sum to shots".into()))
            }
        })
    }
}

impl ShotCounts {
    pub fn new(n: usize, counts: BTreeMap<usize, u64>, seed: u64) -> Result<Self> {
        if let Some(&x) = counts.keys().find(|&&x| x >> n != 0) {
            return Err(Error::InvalidParameter(format!("outcome {x} does not fit {n} bits")));
        }
        let shots = counts.values().sum();
        Ok(Self { n, shots, seed, counts })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Outcome index to count, with bit `j` of the index being qubit `j`.
    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn get(&self, bits: &str) -> u64 {
        parse_bitstring(bits).ok().and_then(|x| self.counts.get(&x).copied()).unwrap_or(0)
    }
}

fn stream_rng(seed: u64, stream: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ block);
    rng
}

/// Cumulative distribution for inverse-transform sampling.
struct Sampler(Vec<f64>);

impl Sampler {
    fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self(cdf)
    }

    fn draw(&self, rng: &mut impl Rng) -> usize {
        let total = *self.0.last().unwrap();
        let u = rng.random::<f64>() * total;
        self.0.partition_point(|&c| c <= u).min(self.0.len() - 1)
    }
}

fn flip_readout(x: usize, n: usize, noise: &NoiseModel, rng: &mut impl Rng) -> usize {
    if noise.readout.is_empty() {
        return x;
    }
    let mut y = x;
    for q in 0..n {
        let r = noise.readout_for(q);
        let p = if x >> q & 1 == 1 { r.p10 } else { r.p01 };
        if p > 0.0 && rng.random::<f64>() < p {
            y ^= 1 << q;
        }
    }
    y
}

fn merge(mut a: BTreeMap<usize, u64>, b: BTreeMap<usize, u64>) -> BTreeMap<usize, u64> {
    for (k, v) in b {
        *a.entry(k).or_default() += v;
    }
    a
}

fn block_sizes(shots: usize) -> Vec<(u64, usize)> {
    (0..shots.div_ceil(SHOT_BLOCK))
        .map(|b| (b as u64, SHOT_BLOCK.min(shots - b * SHOT_BLOCK)))
        .collect()
}

/// Sample measurement outcomes of `state`, applying only the readout part of
/// `noise`.
pub fn sample_counts(state: &StateVector, shots: usize, noise: &NoiseModel, seed: u64) -> Result<ShotCounts> {
    sample_counts_stream(state, shots, noise, seed, 0)
}

pub fn sample_counts_stream(
    state: &StateVector,
    shots: usize,
    noise: &NoiseModel,
    seed: u64,
    stream: u64,
) -> Result<ShotCounts> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be positive".into()));
    }
    noise.validate(state.n)?;
    let sampler = Sampler::new(&state.probabilities());
    let counts = block_sizes(shots)
        .into_par_iter()
        .map(|(block, size)| {
            let mut rng = stream_rng(seed, stream, block);
            let mut counts = BTreeMap::new();
            for _ in 0..size {
                let x = flip_readout(sampler.draw(&mut rng), state.n, noise, &mut rng);
                *counts.entry(x).or_default() += 1;
            }
            counts
        })
        .reduce(BTreeMap::new, merge);
    ShotCounts::new(state.n, counts, seed)
}

/// A Pauli fault inserted after the gates of a layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Fault {
    layer: u32,
    qubit: u8,
    pauli: u8,
}

/// Where faults can occur, grouped by probability.
struct FaultSites {
    /// (layer, qubits) of each gate of the given arity.
    one: Vec<(u32, usize)>,
    two: Vec<(u32, usize)>,
    idle: Vec<(u32, usize)>,
}

impl FaultSites {
    fn new(circuit: &Circuit, layers: &[Vec<usize>]) -> Self {
        let mut sites = FaultSites { one: Vec::new(), two: Vec::new(), idle: Vec::new() };
        for (l, layer) in layers.iter().enumerate() {
            let mut busy = vec![false; circuit.n()];
            for &i in layer {
                let g = circuit.gates()[i];
                for q in g.qubits() {
                    busy[q] = true;
                }
                if g.is_two_qubit() {
                    sites.two.push((l as u32, g.qubit()));
                } else {
                    sites.one.push((l as u32, g.qubit()));
                }
            }
            for (q, _) in busy.iter().enumerate().filter(|(_, b)| !**b) {
                sites.idle.push((l as u32, q));
            }
        }
        sites
    }
}

/// Indices of the sites hit by independent faults of probability `p`, found
/// by geometric skipping.
fn hits(len: usize, p: f64, rng: &mut impl Rng, mut f: impl FnMut(usize)) {
    if p <= 0.0 || len == 0 {
        return;
    }
    if p >= 1.0 {
        (0..len).for_each(f);
        return;
    }
    let log_q = (-p).ln_1p();
    let mut i = 0usize;
    loop {
        let u: f64 = 1.0 - rng.random::<f64>();
        let skip = (u.ln() / log_q).floor();
        if skip >= (len - i) as f64 {
            return;
        }
        i += skip as usize;
        f(i);
        i += 1;
    }
}

fn sample_faults(sites: &FaultSites, noise: &NoiseModel, rng: &mut impl Rng) -> Vec<Fault> {
    let mut faults = Vec::new();
    let mut picked = Vec::new();
    hits(sites.one.len(), noise.p1q, rng, |i| picked.push(i));
    for i in picked.drain(..) {
        let (layer, q) = sites.one[i];
        faults.push(Fault { layer, qubit: q as u8, pauli: rng.random_range(1..4u8) });
    }
    hits(sites.two.len(), noise.p2q, rng, |i| picked.push(i));
    for i in picked.drain(..) {
        let (layer, q) = sites.two[i];
        let k = rng.random_range(1..16u8);
        for (offset, pauli) in [(0, k & 3), (1, k >> 2)] {
            if pauli != 0 {
                faults.push(Fault { layer, qubit: (q + offset) as u8, pauli });
            }
        }
    }
    hits(sites.idle.len(), noise.p_idle, rng, |i| picked.push(i));
    for i in picked {
        let (layer, q) = sites.idle[i];
        faults.push(Fault { layer, qubit: q as u8, pauli: 3 });
    }
    faults.sort_unstable();
    faults
}

/// Trajectory simulation with Pauli faults after gates and on idle qubits,
/// followed by readout flips.
pub fn run_noisy(circuit: &Circuit, shots: usize, noise: &NoiseModel, seed: u64) -> Result<ShotCounts> {
    run_noisy_stream(circuit, shots, noise, seed, 0)
}

pub fn run_noisy_stream(
    circuit: &Circuit,
    shots: usize,
    noise: &NoiseModel,
    seed: u64,
    stream: u64,
) -> Result<ShotCounts> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be positive".into()));
    }
    let n = circuit.n();
    noise.validate(n)?;
    if noise.gate_noise_free() {
        let state = StateVector::zero(n).evolved(circuit)?;
        return sample_counts_stream(&state, shots, noise, seed, stream);
    }

    let layers = circuit.layers();
    let mut prefix = Vec::with_capacity(layers.len());
    let mut state = StateVector::zero(n);
    for layer in &layers {
        for &i in layer {
            state.apply_matrix(&circuit.gates()[i].matrix());
        }
        prefix.push(state.clone());
    }
    let ideal = Sampler::new(&state.probabilities());
    let sites = FaultSites::new(circuit, &layers);

    let counts = block_sizes(shots)
        .into_par_iter()
        .map(|(block, size)| {
            let mut rng = stream_rng(seed, stream, block);
            let mut patterns: HashMap<Vec<Fault>, usize> = HashMap::new();
            let mut clean = 0usize;
            for _ in 0..size {
                let faults = sample_faults(&sites, noise, &mut rng);
                if faults.is_empty() {
                    clean += 1;
                } else {
                    *patterns.entry(faults).or_default() += 1;
                }
            }
            let mut patterns: Vec<_> = patterns.into_iter().collect();
            patterns.sort_unstable();
            let mut counts = BTreeMap::new();
            for _ in 0..clean {
                let x = flip_readout(ideal.draw(&mut rng), n, noise, &mut rng);
                *counts.entry(x).or_default() += 1;
            }
            for (faults, k) in patterns {
                let end = faulty_state(circuit, &layers, &prefix, &faults);
                let sampler = Sampler::new(&end.probabilities());
                for _ in 0..k {
                    let x = flip_readout(sampler.draw(&mut rng), n, noise, &mut rng);
                    *counts.entry(x).or_default() += 1;
                }
            }
            counts
        })
        .reduce(BTreeMap::new, merge);
    ShotCounts::new(n, counts, seed)
}

fn faulty_state(circuit: &Circuit, layers: &[Vec<usize>], prefix: &[StateVector], faults: &[Fault]) -> StateVector {
    let first = faults[0].layer as usize;
    let mut state = prefix[first].clone();
    let mut next = 0;
    for (l, layer) in layers.iter().enumerate().skip(first) {
        if l > first {
            for &i in layer {
                state.apply_matrix(&circuit.gates()[i].matrix());
            }
        }
        while next < faults.len() && faults[next].layer as usize == l {
            state.apply_pauli(faults[next].qubit as usize, faults[next].pauli);
            next += 1;
        }
    }
    state
}

/// Exact `T_jk = <a+_j a_k>` and `S_jk = <a+_j a+_k>` of a statevector.
pub fn correlation_from_statevector(state: &StateVector) -> Result<CorrelationMatrix> {
    let n = state.n;
    if n > MAX_DENSE_MODES {
        return Err(Error::ResourceLimit(format!("{n} modes exceeds the dense limit")));
    }
    let mut t = CMatrix::zeros(n, n);
    let mut s = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            t[(j, k)] = fock::expectation(&state.amps, &[(j, true), (k, false)]);
            if j != k {
                s[(j, k)] = fock::expectation(&state.amps, &[(j, true), (k, true)]);
            }
        }
    }
    CorrelationMatrix::new(t, s)
}
