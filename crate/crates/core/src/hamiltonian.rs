//! Quadratic fermionic Hamiltonians, the Kitaev chain, their Majorana
//! form, and the dense Fock-space operator used as a brute-force oracle.
//!
//! A quadratic Hamiltonian is stored as
//!
//! ```text
//! H = sum_pq M_pq a+_p a_q + 1/2 sum_pq (D_pq a+_p a+_q - D*_pq a_p a_q) + constant
//! ```
//!
//! with `M` hermitian and `D` antisymmetric.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock;
use crate::linalg::{self, c, I};
use crate::{CMatrix, RMatrix};

const STRUCTURE_TOL: f64 = 1e-12;

/// Parameters of an open Kitaev chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KitaevParams {
    pub n: usize,
    /// Tunneling amplitude.
    pub t: f64,
    /// Superconducting pairing.
    pub delta: Complex64,
    /// Chemical potential.
    pub mu: f64,
}

impl KitaevParams {
    pub fn new(n: usize, t: f64, delta: f64, mu: f64) -> Self {
        Self { n, t, delta: c(delta, 0.0), mu }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticHamiltonian {
    n: usize,
    hermitian: CMatrix,
    pairing: CMatrix,
    constant: f64,
}

impl QuadraticHamiltonian {
    /// Validate and symmetrize the coefficient matrices.
    pub fn new(hermitian: CMatrix, pairing: CMatrix, constant: f64) -> Result<Self> {
        let n = hermitian.nrows();
        if n == 0 || hermitian.ncols() != n || pairing.shape() != (n, n) {
            return Err(Error::InvalidParameter(format!(
                "coefficient matrices must both be n x n, got {:?} and {:?}",
                hermitian.shape(),
                pairing.shape()
            )));
        }
        let herr = linalg::hermiticity_error(&hermitian);
        if herr > STRUCTURE_TOL {
            return Err(Error::InvalidParameter(format!("M is not hermitian (error {herr:.3e})")));
        }
        let aerr = linalg::antisymmetry_error(&pairing);
        if aerr > STRUCTURE_TOL {
            return Err(Error::InvalidParameter(format!(
                "pairing matrix is not antisymmetric (error {aerr:.3e})"
            )));
        }
        if !constant.is_finite() {
            return Err(Error::InvalidParameter("constant must be finite".into()));
        }
        Ok(Self {
            n,
            hermitian: linalg::hermitize(&hermitian),
            pairing: linalg::antisymmetrize(&pairing),
            constant,
        })
    }

    /// Hamiltonian with entries of `M` and `D` drawn uniformly from the unit
    /// square before symmetrization.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R, constant: f64) -> Result<Self> {
        let mut draw = || CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let m = draw();
        let d = draw();
        Self::new(linalg::hermitize(&m), linalg::antisymmetrize(&d), constant)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The hermitian (number-conserving) coefficient matrix `M`.
    pub fn hermitian_part(&self) -> &CMatrix {
        &self.hermitian
    }

    /// The antisymmetric pairing matrix.
    pub fn pairing_part(&self) -> &CMatrix {
        &self.pairing
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// True when all coefficients are real.
    pub fn is_real(&self) -> bool {
        self.hermitian.iter().chain(self.pairing.iter()).all(|z| z.im.abs() < 1e-14)
    }

    /// The 2n x 2n Bogoliubov-de Gennes matrix acting on `(a; a+)`:
    /// `H = 1/2 (a+, a) H_bdg (a; a+) + 1/2 tr M + constant`.
    pub fn bdg_matrix(&self) -> CMatrix {
        let n = self.n;
        let mut h = CMatrix::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(&self.hermitian);
        h.view_mut((0, n), (n, n)).copy_from(&self.pairing);
        h.view_mut((n, 0), (n, n)).copy_from(&(-self.pairing.conjugate()));
        h.view_mut((n, n), (n, n)).copy_from(&(-self.hermitian.conjugate()));
        h
    }

    /// `H |psi>` computed directly on the amplitude vector.
    pub fn apply(&self, amps: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n;
        if amps.len() != 1usize << n {
            return Err(Error::InvalidParameter(format!(
                "state has {} amplitudes, expected 2^{n}",
                amps.len()
            )));
        }
        let mut out: Vec<Complex64> = amps.iter().map(|a| a * self.constant).collect();
        for (x, &ax) in amps.iter().enumerate() {
            if ax.norm_sqr() == 0.0 {
                continue;
            }
            for p in 0..n {
                for q in 0..n {
                    let m = self.hermitian[(p, q)];
                    if m.norm_sqr() != 0.0 {
                        if let Some((s, y)) = fock::apply_word(&[(p, true), (q, false)], x) {
                            out[y] += m * ax * s;
                        }
                    }
                    let d = self.pairing[(p, q)];
                    if d.norm_sqr() != 0.0 {
                        if let Some((s, y)) = fock::apply_word(&[(p, true), (q, true)], x) {
                            out[y] += d * ax * (0.5 * s);
                        }
                        if let Some((s, y)) = fock::apply_word(&[(p, false), (q, false)], x) {
                            out[y] -= d.conj() * ax * (0.5 * s);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `<psi| H |psi>` for a normalized state.
    pub fn expectation(&self, amps: &[Complex64]) -> Result<f64> {
        let h = self.apply(amps)?;
        Ok(amps.iter().zip(&h).map(|(a, b)| (a.conj() * b).re).sum())
    }
}

/// Open-boundary Kitaev chain with bonds `(j, j + 1)` for `j < n - 1`.
pub fn kitaev_chain(params: &KitaevParams) -> Result<QuadraticHamiltonian> {
    let KitaevParams { n, t, delta, mu } = *params;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("Kitaev chain needs n >= 2, got {n}")));
    }
    if !(t.is_finite() && mu.is_finite() && delta.re.is_finite() && delta.im.is_finite()) {
        return Err(Error::InvalidParameter("Kitaev parameters must be finite".into()));
    }
    let mut m = CMatrix::zeros(n, n);
    let mut d = CMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = c(mu, 0.0);
    }
    for j in 0..n - 1 {
        m[(j, j + 1)] = c(-t, 0.0);
        m[(j + 1, j)] = c(-t, 0.0);
        d[(j, j + 1)] = delta;
        d[(j + 1, j)] = -delta;
    }
    QuadraticHamiltonian::new(m, d, -(n as f64) * mu / 2.0)
}

/// `H = (i/4) sum_jk A_jk g_j g_k + constant` with interleaved Majorana
/// operators `g_{2j} = a_j + a+_j`, `g_{2j+1} = -i (a_j - a+_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MajoranaForm {
    pub coefficients: RMatrix,
    pub constant: f64,
}

/// Columns express `(a; a+)` in terms of the interleaved Majoranas.
fn ladder_from_majorana(n: usize) -> CMatrix {
    let mut v = CMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        v[(j, 2 * j)] = c(0.5, 0.0);
        v[(j, 2 * j + 1)] = c(0.0, 0.5);
        v[(n + j, 2 * j)] = c(0.5, 0.0);
        v[(n + j, 2 * j + 1)] = c(0.0, -0.5);
    }
    v
}

pub fn majorana_form(h: &QuadraticHamiltonian) -> MajoranaForm {
    let n = h.n();
    let v = ladder_from_majorana(n);
    let g = v.adjoint() * h.bdg_matrix() * &v;
    let mut a = g.map(|z| 2.0 * z.im);
    a = (&a - a.transpose()) * 0.5;
    let trace_m: f64 = (0..n).map(|j| h.hermitian_part()[(j, j)].re).sum();
    MajoranaForm { coefficients: a, constant: h.constant() + 0.5 * trace_m }
}

impl MajoranaForm {
    pub fn n(&self) -> usize {
        self.coefficients.nrows() / 2
    }

    /// Convert back to creation/annihilation form.
    pub fn to_quadratic(&self) -> Result<QuadraticHamiltonian> {
        let dim = self.coefficients.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || self.coefficients.ncols() != dim {
            return Err(Error::InvalidParameter("Majorana matrix must be 2n x 2n".into()));
        }
        let n = dim / 2;
        let v = ladder_from_majorana(n);
        let bdg = (&v * linalg::to_complex(&self.coefficients) * v.adjoint()) * (I * 2.0);
        let m = bdg.view((0, 0), (n, n)).into_owned();
        let d = bdg.view((0, n), (n, n)).into_owned();
        let trace_m: f64 = (0..n).map(|j| m[(j, j)].re).sum();
        QuadraticHamiltonian::new(m, d, self.constant - 0.5 * trace_m)
    }
}

/// Dense hermitian 2^n x 2^n matrix of `h` under the Jordan-Wigner
/// transform.
pub fn dense_operator(h: &QuadraticHamiltonian) -> Result<CMatrix> {
    let n = h.n();
    fock::check_dense(n)?;
    let dim = 1usize << n;
    let mut out = CMatrix::zeros(dim, dim);
    let mut e = vec![Complex64::new(0.0, 0.0); dim];
    for x in 0..dim {
        e[x] = c(1.0, 0.0);
        let col = h.apply(&e)?;
        e[x] = c(0.0, 0.0);
        for (y, v) in col.into_iter().enumerate() {
            out[(y, x)] = v;
        }
    }
    Ok(out)
}
