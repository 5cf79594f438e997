//! Brute-force validation of the free-fermion pipeline against dense
//! Fock-space linear algebra.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{energy_from_correlation, fidelity_witness};
use crate::bogoliubov::{diagonalize, BogoliubovTransform, Occupation};
use crate::error::Result;
use crate::hamiltonian::{dense_operator, kitaev_chain, KitaevParams, QuadraticHamiltonian};
use crate::linalg;
use crate::measure::{assemble_correlation_matrix, exact_distribution, measurement_settings};
use crate::simulate::{correlation_from_statevector, StateVector};
use crate::synthesis::prepare_eigenstate_circuit;

/// Outcome of one family of checks: the largest deviation seen against its
/// tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

struct Tally {
    name: &'static str,
    cases: usize,
    worst: f64,
    tolerance: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, cases: 0, worst: 0.0, tolerance }
    }

    fn record(&mut self, deviation: f64) {
        self.cases += 1;
        self.worst = if deviation.is_nan() { f64::INFINITY } else { self.worst.max(deviation) };
    }

    fn finish(self) -> OracleCheck {
        OracleCheck {
            name: self.name.to_string(),
            cases: self.cases,
            worst: self.worst,
            passed: self.worst <= self.tolerance,
            tolerance: self.tolerance,
        }
    }
}

fn occupation(n: usize, x: usize) -> Occupation {
    Occupation::new((0..n).map(|j| x >> j & 1 == 1).collect())
}

/// Every `sum_p x_p e_p + constant`, sorted.
pub fn free_spectrum(bt: &BogoliubovTransform) -> Vec<f64> {
    let n = bt.n();
    let mut out: Vec<f64> = (0..1usize << n)
        .map(|x| bt.eigenstate_energy(&occupation(n, x)).expect("occupation length matches"))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

fn eigenstate(bt: &BogoliubovTransform, occ: &Occupation) -> Result<StateVector> {
    StateVector::zero(bt.n()).evolved(&prepare_eigenstate_circuit(bt, occ)?)
}

/// `|| H psi - E psi ||`
fn eigen_residual(h: &QuadraticHamiltonian, psi: &StateVector, e: f64) -> Result<f64> {
    let hpsi = h.apply(psi.amplitudes())?;
    Ok(hpsi.iter().zip(psi.amplitudes()).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt())
}

/// Run all checks on random Hamiltonians and Kitaev chains with 2 to
/// `max_n` modes.
pub fn oracle_check(max_n: usize, seed: u64) -> Result<Vec<OracleCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spectrum = Tally::new("spectrum", 1e-9);
    let mut eigen = Tally::new("eigenstate circuits", 1e-8);
    let mut corr = Tally::new("correlation assembly", 1e-10);
    let mut energy = Tally::new("energy from correlation", 1e-10);
    let mut witness = Tally::new("witness below fidelity", 1e-8);

    for n in 2..=max_n.max(2) {
        let mut hams = vec![kitaev_chain(&KitaevParams::new(n, -1.0, 1.0, rng.random_range(0.0..3.0)))?];
        for _ in 0..10 {
            let constant = rng.random_range(-1.0..1.0);
            hams.push(QuadraticHamiltonian::random(n, &mut rng, constant)?);
        }
        for (k, h) in hams.iter().enumerate() {
            let bt = diagonalize(h)?;
            let dense = linalg::eigvalsh(&dense_operator(h)?);
            let free = free_spectrum(&bt);
            spectrum.record(dense.iter().zip(&free).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));

            // Eigenstate and witness checks on the chain and two random draws.
            if k > 2 {
                continue;
            }
            let mut states = Vec::new();
            for x in 0..1usize << n {
                let occ = occupation(n, x);
                let psi = eigenstate(&bt, &occ)?;
                eigen.record(eigen_residual(h, &psi, bt.eigenstate_energy(&occ)?)?);
                let g = correlation_from_statevector(&psi)?;
                energy.record((energy_from_correlation(h, &g)? - h.expectation(psi.amplitudes())?).abs());
                states.push((psi, g));
            }
            for _ in 0..4 {
                let (a, b) = (rng.random_range(0..states.len()), rng.random_range(0..states.len()));
                let fidelity = states[a].0.inner(&states[b].0).norm_sqr();
                witness.record((fidelity_witness(&states[a].1, &states[b].1)? - fidelity).max(0.0));
            }

            for occ in [Occupation::vacuum(n), occupation(n, rng.random_range(0..1usize << n))] {
                let settings = measurement_settings(&bt, &occ, false)?;
                let dists = settings.iter().map(exact_distribution).collect::<Result<Vec<_>>>()?;
                let assembled = assemble_correlation_matrix(&settings, &dists)?;
                let exact = correlation_from_statevector(&eigenstate(&bt, &occ)?)?;
                corr.record(linalg::max_abs(&(assembled.gamma() - exact.gamma())));
            }
        }
    }
    Ok([spectrum, eigen, corr, energy, witness].into_iter().map(Tally::finish).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let checks = oracle_check(4, 1).unwrap();
        assert_eq!(checks.len(), 5);
        for c in &checks {
            assert!(c.passed, "{c:?}");
            assert!(c.cases > 0);
        }
    }

    #[test]
    fn nan_counts_as_failure() {
        let mut t = Tally::new("x", 1.0);
        t.record(f64::NAN);
        assert!(!t.finish().passed);
    }
}
