//! Correlation-matrix measurement with parity-preserving pair basis changes.
//!
//! Every off-diagonal entry `T_jk`, `S_jk` is read from a pair of modes that
//! sit on neighbouring qubits, where the Jordan-Wigner string is trivial:
//!
//! ```text
//! T_{q,q+1} = <O1>/2 + i <O2>/2,   O1 = (XX + YY)/2,  O2 = (XY - YX)/2
//! S_{q,q+1} = <O3>/2 - i <O4>/2,   O3 = (XX - YY)/2,  O4 = (XY + YX)/2
//! ```
//!
//! The mode orderings produced by a parallel bubble sort make every pair of
//! modes adjacent at least once.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bogoliubov::{BogoliubovTransform, Occupation};
use crate::error::{Error, Result};
use crate::linalg::{self, c};
use crate::mitigate::QuasiDistribution;
use crate::simulate::StateVector;
use crate::synthesis::{is_real_circuit, prepare_permuted_circuit, Circuit, Gate, PairBasis};
use crate::CMatrix;

/// `Gamma = [[T, S], [-S*, I - T^T]]` with `T_jk = <a+_j a_k>` and
/// `S_jk = <a+_j a+_k>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "CorrelationRecord", try_from = "CorrelationRecord")]
pub struct CorrelationMatrix {
    n: usize,
    t: CMatrix,
    s: CMatrix,
}

/// Row-major `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct CorrelationRecord {
    n: usize,
    t: Vec<[f64; 2]>,
    s: Vec<[f64; 2]>,
}

fn row_major(m: &CMatrix) -> Vec<[f64; 2]> {
    m.transpose().iter().map(|z| [z.re, z.im]).collect()
}

impl From<CorrelationMatrix> for CorrelationRecord {
    fn from(g: CorrelationMatrix) -> Self {
        Self { n: g.n, t: row_major(&g.t), s: row_major(&g.s) }
    }
}

impl TryFrom<CorrelationRecord> for CorrelationMatrix {
    type Error = Error;

    fn try_from(r: CorrelationRecord) -> Result<Self> {
        let n = r.n;
        if r.t.len() != n * n || r.s.len() != n * n {
            return Err(Error::InvalidParameter("correlation blocks have the wrong size".into()));
        }
        let build = |v: &[[f64; 2]]| CMatrix::from_row_iterator(n, n, v.iter().map(|p| c(p[0], p[1])));
        CorrelationMatrix::new(build(&r.t), build(&r.s))
    }
}

impl CorrelationMatrix {
    pub fn new(t: CMatrix, s: CMatrix) -> Result<Self> {
        let n = t.nrows();
        if t.shape() != (n, n) || s.shape() != (n, n) {
            return Err(Error::InvalidParameter(format!(
                "T is {:?} and S is {:?}",
                t.shape(),
                s.shape()
            )));
        }
        Ok(Self { n, t, s })
    }

    /// Read `T` and `S` off the top blocks of a 2n x 2n matrix.
    pub fn from_gamma(gamma: &CMatrix) -> Result<Self> {
        let dim = gamma.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || gamma.ncols() != dim {
            return Err(Error::InvalidParameter(format!("Gamma has shape {:?}", gamma.shape())));
        }
        let n = dim / 2;
        Self::new(gamma.view((0, 0), (n, n)).into_owned(), gamma.view((0, n), (n, n)).into_owned())
    }

    /// Vacuum: `T = 0`, `S = 0`.
    pub fn vacuum(n: usize) -> Self {
        Self { n, t: CMatrix::zeros(n, n), s: CMatrix::zeros(n, n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> &CMatrix {
        &self.t
    }

    pub fn s(&self) -> &CMatrix {
        &self.s
    }

    pub fn gamma(&self) -> CMatrix {
        let n = self.n;
        let mut g = CMatrix::zeros(2 * n, 2 * n);
        g.view_mut((0, 0), (n, n)).copy_from(&self.t);
        g.view_mut((0, n), (n, n)).copy_from(&self.s);
        g.view_mut((n, 0), (n, n)).copy_from(&(-self.s.conjugate()));
        g.view_mut((n, n), (n, n)).copy_from(&(CMatrix::identity(n, n) - self.t.transpose()));
        g
    }

    /// `|| Gamma^2 - Gamma ||_F`
    pub fn idempotency_residual(&self) -> f64 {
        let g = self.gamma();
        linalg::frobenius(&(&g * &g - &g))
    }

    /// Largest violation of `T = T+` and `S = -S^T`.
    pub fn structure_residual(&self) -> f64 {
        linalg::hermiticity_error(&self.t).max(linalg::antisymmetry_error(&self.s))
    }

    /// Project onto hermitian `T` and antisymmetric `S`.
    pub fn symmetrized(&self) -> Self {
        Self { n: self.n, t: linalg::hermitize(&self.t), s: linalg::antisymmetrize(&self.s) }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.gamma())
    }

    /// Check the invariants of a correlation matrix computed from a state.
    pub fn validate_exact(&self) -> Result<()> {
        let structure = self.structure_residual();
        if structure > 1e-10 {
            return Err(Error::InconsistentInput(format!("block structure violated by {structure:.3e}")));
        }
        let ev = self.eigenvalues();
        if ev.first().is_some_and(|&e| e < -1e-8) || ev.last().is_some_and(|&e| e > 1.0 + 1e-8) {
            return Err(Error::InconsistentInput("Gamma eigenvalues outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Mode orderings after each round of a parallel bubble sort: even-indexed
/// swaps followed by odd-indexed swaps.
pub fn bubble_sort_permutations(n: usize) -> Result<Vec<Vec<usize>>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least two modes, got {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut out = vec![order.clone()];
    for _ in 1..n.div_ceil(2) {
        for start in [0, 1] {
            for i in (start..n - 1).step_by(2) {
                order.swap(i, i + 1);
            }
        }
        out.push(order.clone());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    Even,
    Odd,
}

impl Alignment {
    fn first(self) -> usize {
        match self {
            Alignment::Even => 0,
            Alignment::Odd => 1,
        }
    }

    /// Lower qubits of the measured pairs.
    pub fn pairs(self, n: usize) -> impl Iterator<Item = usize> {
        (self.first()..n.saturating_sub(1)).step_by(2)
    }
}

/// One measured circuit. `basis == None` is the computational-basis setting
/// used for the diagonal of `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub permutation: Vec<usize>,
    pub basis: Option<PairBasis>,
    pub alignment: Alignment,
    pub circuit: Circuit,
}

impl MeasurementSetting {
    /// Bitstring parity of every outcome in the absence of noise.
    pub fn expected_parity(&self) -> u8 {
        self.circuit.parity()
    }

    /// Pair operator expectations `(qubit, mode a, mode b, <O>)` for each
    /// measured adjacent pair.
    fn pair_values<'a>(&'a self, dist: &'a QuasiDistribution) -> impl Iterator<Item = (usize, usize, f64)> + 'a {
        let kind = self.basis;
        let n = self.permutation.len();
        self.alignment.pairs(n).filter_map(move |q| {
            let kind = kind?;
            let d = kind.eigenvalues();
            let value = dist.expectation(|x| d[(x >> q) & 3]);
            Some((self.permutation[q], self.permutation[q + 1], value))
        })
    }
}

pub fn basis_change_gate(kind: PairBasis) -> [[num_complex::Complex64; 4]; 4] {
    kind.matrix()
}

/// All settings needed to measure the correlation matrix of the eigenstate
/// `occupation` of `bt`.
pub fn measurement_settings(
    bt: &BogoliubovTransform,
    occupation: &Occupation,
    real_only: bool,
) -> Result<Vec<MeasurementSetting>> {
    let n = bt.n();
    let perms = bubble_sort_permutations(n)?;
    let identity: Vec<usize> = (0..n).collect();
    let base = prepare_permuted_circuit(bt, occupation, &identity)?;
    let bases: Vec<PairBasis> = PairBasis::ALL.into_iter().filter(|b| !real_only || b.is_real()).collect();

    let mut settings = vec![MeasurementSetting {
        permutation: identity,
        basis: None,
        alignment: Alignment::Even,
        circuit: base,
    }];
    for perm in perms {
        let prep = prepare_permuted_circuit(bt, occupation, &perm)?;
        if real_only && !is_real_circuit(&prep) {
            return Err(Error::InvalidParameter(
                "real-only measurement requested for a circuit with complex gates".into(),
            ));
        }
        for &kind in &bases {
            for alignment in [Alignment::Even, Alignment::Odd] {
                let mut circuit = prep.clone();
                circuit.extend(alignment.pairs(n).map(|qubit| Gate::BasisChange { qubit, kind }))?;
                settings.push(MeasurementSetting { permutation: perm.clone(), basis: Some(kind), alignment, circuit });
            }
        }
    }
    Ok(settings)
}

/// Infinite-shot outcome distribution of a setting's circuit.
pub fn exact_distribution(setting: &MeasurementSetting) -> Result<QuasiDistribution> {
    let state = StateVector::zero(setting.circuit.n()).evolved(&setting.circuit)?;
    QuasiDistribution::from_probabilities(&state.probabilities())
}

/// Assemble `Gamma` from one (quasi)distribution per setting. Entries covered
/// by several settings are averaged. Without any complex basis among the
/// settings the imaginary parts are set to zero.
pub fn assemble_correlation_matrix(
    settings: &[MeasurementSetting],
    results: &[QuasiDistribution],
) -> Result<CorrelationMatrix> {
    if settings.len() != results.len() || settings.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "{} settings but {} results",
            settings.len(),
            results.len()
        )));
    }
    let n = settings[0].permutation.len();
    let mut t = CMatrix::zeros(n, n);
    let mut s = CMatrix::zeros(n, n);

    let diagonal = settings
        .iter()
        .zip(results)
        .find(|(st, _)| st.basis.is_none())
        .ok_or(Error::IncompleteData(0, 0))?;
    for (q, &mode) in diagonal.0.permutation.iter().enumerate() {
        t[(mode, mode)] = c(diagonal.1.expectation(|x| ((x >> q) & 1) as f64), 0.0);
    }

    let complex = settings.iter().any(|st| st.basis.is_some_and(|b| !b.is_real()));
    // (lo, hi) -> per-basis (sum, count), oriented so that lo < hi.
    let mut acc: BTreeMap<(usize, usize), [(f64, usize); 4]> = BTreeMap::new();
    for (setting, dist) in settings.iter().zip(results) {
        let Some(kind) = setting.basis else { continue };
        let k = PairBasis::ALL.iter().position(|&b| b == kind).unwrap();
        for (a, b, value) in setting.pair_values(dist) {
            // O1 is symmetric in the pair, the other three change sign.
            let sign = if a > b && k != 0 { -1.0 } else { 1.0 };
            let slot = &mut acc.entry((a.min(b), a.max(b))).or_default()[k];
            slot.0 += sign * value;
            slot.1 += 1;
        }
    }

    let needed: &[usize] = if complex { &[0, 1, 2, 3] } else { &[0, 2] };
    for lo in 0..n {
        for hi in lo + 1..n {
            let slots = acc.get(&(lo, hi)).ok_or(Error::IncompleteData(lo, hi))?;
            if needed.iter().any(|&k| slots[k].1 == 0) {
                return Err(Error::IncompleteData(lo, hi));
            }
            let mean = |k: usize| if slots[k].1 == 0 { 0.0 } else { slots[k].0 / slots[k].1 as f64 };
            let tv = c(mean(0) / 2.0, if complex { mean(1) / 2.0 } else { 0.0 });
            let sv = c(mean(2) / 2.0, if complex { -mean(3) / 2.0 } else { 0.0 });
            t[(lo, hi)] = tv;
            t[(hi, lo)] = tv.conj();
            s[(lo, hi)] = sv;
            s[(hi, lo)] = -sv;
        }
    }
    CorrelationMatrix::new(t, s)
}
