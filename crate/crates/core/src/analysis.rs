//! Observables computed from correlation matrices.
//!
//! Covariance matrices use the split Majorana ordering
//! `g_j = a_j + a+_j`, `g_{j+n} = -i (a_j - a+_j)` (0-indexed here). Site
//! correlations take the interleaved 1-based labels `1..=2n`, where labels
//! `2k - 1` and `2k` are the two Majoranas of mode `k`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hamiltonian::QuadraticHamiltonian;
use crate::linalg::{self, c, I};
use crate::measure::CorrelationMatrix;
use crate::{CMatrix, RMatrix};

const IMAG_TOL: f64 = 1e-6;
const IDEMPOTENT_TOL: f64 = 1e-8;

/// `<H>` from the correlation matrix:
/// `Re sum M_pq T_pq + Re sum D_pq S_pq + constant`.
pub fn energy_from_correlation(h: &QuadraticHamiltonian, gamma: &CorrelationMatrix) -> Result<f64> {
    let n = h.n();
    if gamma.n() != n {
        return Err(Error::InvalidParameter(format!(
            "Hamiltonian has {n} modes, correlation matrix {}",
            gamma.n()
        )));
    }
    let hopping: num_complex::Complex64 = h.hermitian_part().component_mul(gamma.t()).sum();
    if hopping.im.abs() > 1e-9 * (1.0 + hopping.re.abs()) {
        return Err(Error::InconsistentInput(format!(
            "hopping energy has imaginary part {:.3e}",
            hopping.im
        )));
    }
    let pairing = h.pairing_part().component_mul(gamma.s()).sum();
    Ok(hopping.re + pairing.re + h.constant())
}

/// `E_k - E_ground` for each entry of `excited`.
pub fn excitation_energies(ground: f64, excited: &[f64]) -> Vec<f64> {
    excited.iter().map(|e| e - ground).collect()
}

/// Real antisymmetric `M_jk = (i/2) <[g_j, g_k]>` in the split ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    m: RMatrix,
}

/// `(1/sqrt 2) [[I, I], [iI, -iI]]`
fn omega(n: usize) -> CMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut o = CMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        o[(j, j)] = c(r, 0.0);
        o[(j, j + n)] = c(r, 0.0);
        o[(j + n, j)] = c(0.0, r);
        o[(j + n, j + n)] = c(0.0, -r);
    }
    o
}

impl CovarianceMatrix {
    pub fn new(m: RMatrix) -> Result<Self> {
        let dim = m.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || m.ncols() != dim {
            return Err(Error::InvalidParameter(format!("covariance matrix has shape {:?}", m.shape())));
        }
        let asym = (&m + m.transpose()).abs().max();
        if asym > 1e-9 {
            return Err(Error::InconsistentInput(format!("covariance matrix not antisymmetric ({asym:.3e})")));
        }
        Ok(Self { m })
    }

    pub fn n(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.m
    }

    /// Invert `M = i Omega (2 Gamma - I) Omega+`.
    pub fn to_correlation(&self) -> Result<CorrelationMatrix> {
        let n = self.n();
        let o = omega(n);
        let mc = linalg::to_complex(&self.m);
        let g = (CMatrix::identity(2 * n, 2 * n) - o.adjoint() * mc * &o * I) * c(0.5, 0.0);
        CorrelationMatrix::from_gamma(&g)
    }
}

pub fn covariance_from_correlation(gamma: &CorrelationMatrix) -> Result<CovarianceMatrix> {
    covariance_from_gamma(&gamma.gamma())
}

/// `M = i Omega (2 Gamma - I) Omega+` for a full 2n x 2n matrix, which need
/// not have the particle-hole block structure.
pub fn covariance_from_gamma(gamma: &CMatrix) -> Result<CovarianceMatrix> {
    let dim = gamma.nrows();
    if dim == 0 || !dim.is_multiple_of(2) || gamma.ncols() != dim {
        return Err(Error::InvalidParameter(format!("Gamma has shape {:?}", gamma.shape())));
    }
    let n = dim / 2;
    let g = linalg::hermitize(gamma);
    let o = omega(n);
    let two_g = g * c(2.0, 0.0) - CMatrix::identity(2 * n, 2 * n);
    let m = &o * two_g * o.adjoint() * I;
    let imag = m.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    if imag > IMAG_TOL {
        return Err(Error::InconsistentInput(format!("covariance matrix has imaginary part {imag:.3e}")));
    }
    let re = m.map(|z| z.re);
    CovarianceMatrix::new((&re - re.transpose()) * 0.5)
}

/// Split-ordering index (0-based) of the interleaved 1-based Majorana label.
pub fn majorana_index(label: usize, n: usize) -> Result<usize> {
    if label == 0 || label > 2 * n {
        return Err(Error::InvalidParameter(format!("Majorana label {label} outside 1..={}", 2 * n)));
    }
    Ok(if label % 2 == 1 { label.div_ceil(2) - 1 } else { label / 2 + n - 1 })
}

/// `<i g_1 g_j>` for interleaved label `j` in `2..=2n`.
pub fn majorana_site_correlation(gamma: &CorrelationMatrix, j: usize) -> Result<f64> {
    let n = gamma.n();
    if j < 2 {
        return Err(Error::InvalidParameter(format!("site correlation label {j} must be at least 2")));
    }
    let k = majorana_index(j, n)?;
    Ok(covariance_from_correlation(gamma)?.m[(0, k)])
}

/// `<i g_1 g_j>` for `j = 2..=2n`.
pub fn site_correlation_profile(gamma: &CorrelationMatrix) -> Result<Vec<f64>> {
    let n = gamma.n();
    let cov = covariance_from_correlation(gamma)?;
    (2..=2 * n).map(|j| Ok(cov.m[(0, majorana_index(j, n)?)])).collect()
}

/// Lower bound `1 - tr[(Gt - Gp)(Gt - I/2)]` on the fidelity with a pure
/// Gaussian target. Can be negative.
pub fn fidelity_witness(target: &CorrelationMatrix, prepared: &CorrelationMatrix) -> Result<f64> {
    if target.n() != prepared.n() {
        return Err(Error::InvalidParameter(format!(
            "target has {} modes, prepared state {}",
            target.n(),
            prepared.n()
        )));
    }
    let residual = target.idempotency_residual();
    if residual > IDEMPOTENT_TOL {
        return Err(Error::InconsistentInput(format!(
            "target correlation matrix is not idempotent (residual {residual:.3e})"
        )));
    }
    let gt = target.gamma();
    let gp = prepared.gamma();
    let dim = gt.nrows();
    let half = DMatrix::identity(dim, dim) * c(0.5, 0.0);
    let tr = ((&gt - gp) * (&gt - half)).trace();
    Ok(1.0 - tr.re)
}

/// Localization length of the edge modes of the open chain.
///
/// Returns 0 for perfect localization and infinity when the pairing vanishes.
pub fn mzm_decay_length(t: f64, delta: f64) -> Result<f64> {
    let (num, den) = if t.abs() >= delta.abs() { (t - delta, t + delta) } else { (delta - t, delta + t) };
    if den == 0.0 {
        return Err(Error::Undefined(format!("decay length at t = {t}, delta = {delta}")));
    }
    let ratio = num / den;
    if ratio == 0.0 {
        return Ok(0.0);
    }
    let log = ratio.abs().ln().abs();
    if log == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 / log)
}
