//! Bogoliubov diagonalization of quadratic Hamiltonians.
//!
//! The Hamiltonian is brought to `H = sum_p e_p b+_p b_p + constant` with
//! `0 <= e_1 <= ... <= e_n`, where the quasiparticle operators are
//!
//! ```text
//! (b+; b) = W (a+; a),   W = [[W1*, W2*], [W2, W1]]
//! ```
//!
//! so that `b_p = sum_q (W2)_pq a+_q + (W1)_pq a_q`.
//!
//! The transform is computed from the real antisymmetric Majorana
//! coefficient matrix: its hermitian companion `iA` has eigenvalues in
//! `+-e` pairs, each positive pair yields one quasiparticle, and the kernel
//! (the zero modes) is split into real orthonormal Majorana pairs so that
//! exactly degenerate zero-energy modes are handled without relying on the
//! eigensolver's choice of basis.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{majorana_form, QuadraticHamiltonian};
use crate::linalg::{self, c, I};
use crate::CMatrix;

/// Tolerance on the unitarity and block-structure invariants of `W`.
pub const INVARIANT_TOL: f64 = 1e-10;
/// Energies closer than this are considered degenerate when ordering modes.
const TIE_TOL: f64 = 1e-10;

/// Which quasiparticle modes are excited, one flag per mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Occupation(Vec<bool>);

impl Occupation {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn vacuum(n: usize) -> Self {
        Self(vec![false; n])
    }

    /// Only mode `k` excited.
    pub fn single(n: usize, k: usize) -> Self {
        let mut bits = vec![false; n];
        bits[k] = true;
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Number of excited quasiparticles.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn occupied(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k).collect()
    }

    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|b| !b).collect())
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Occupation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!("bad occupation character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl From<Occupation> for String {
    fn from(o: Occupation) -> String {
        o.to_string()
    }
}

impl TryFrom<String> for Occupation {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BogoliubovTransform {
    n: usize,
    w: CMatrix,
    energies: Vec<f64>,
    constant: f64,
}

/// Deviations of a transform from its defining invariants.
#[derive(Clone, Copy, Debug)]
pub struct InvariantResiduals {
    pub unitarity: f64,
    pub anticommutation: f64,
    pub normalization: f64,
    pub block_form: f64,
}

impl InvariantResiduals {
    pub fn max(&self) -> f64 {
        self.unitarity.max(self.anticommutation).max(self.normalization).max(self.block_form)
    }
}

impl BogoliubovTransform {
    /// Build from the lower half `W_L = (W2 W1)`, validating all invariants.
    pub fn from_lower(w_lower: &CMatrix, energies: Vec<f64>, constant: f64) -> Result<Self> {
        let n = w_lower.nrows();
        if n == 0 || w_lower.ncols() != 2 * n {
            return Err(Error::InvalidParameter(format!(
                "W_L must be n x 2n, got {:?}",
                w_lower.shape()
            )));
        }
        if energies.len() != n {
            return Err(Error::InvalidParameter(format!(
                "expected {n} energies, got {}",
                energies.len()
            )));
        }
        let bt = Self { n, w: full_from_lower(w_lower), energies, constant };
        let res = bt.residuals();
        if res.max() > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "W_L does not define a Bogoliubov transform (residual {:.3e})",
                res.max()
            )));
        }
        Ok(bt)
    }

    /// The trivial transform `b_p = a_p` with the given energies.
    pub fn identity(energies: Vec<f64>, constant: f64) -> Self {
        let n = energies.len();
        let mut wl = CMatrix::zeros(n, 2 * n);
        for p in 0..n {
            wl[(p, n + p)] = c(1.0, 0.0);
        }
        Self { n, w: full_from_lower(&wl), energies, constant }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The full 2n x 2n block unitary.
    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// The bottom n rows `(W2 W1)` of `W`.
    pub fn w_lower(&self) -> CMatrix {
        self.w.rows(self.n, self.n).into_owned()
    }

    pub fn w1(&self) -> CMatrix {
        self.w.view((self.n, self.n), (self.n, self.n)).into_owned()
    }

    pub fn w2(&self) -> CMatrix {
        self.w.view((self.n, 0), (self.n, self.n)).into_owned()
    }

    pub fn residuals(&self) -> InvariantResiduals {
        let n = self.n;
        let w1 = self.w1();
        let w2 = self.w2();
        let id2 = CMatrix::identity(2 * n, 2 * n);
        let id = CMatrix::identity(n, n);
        let top_left = self.w.view((0, 0), (n, n)).into_owned();
        let top_right = self.w.view((0, n), (n, n)).into_owned();
        InvariantResiduals {
            unitarity: linalg::max_abs(&(&self.w * self.w.adjoint() - id2)),
            anticommutation: linalg::max_abs(&(&w1 * w2.transpose() + &w2 * w1.transpose())),
            normalization: linalg::max_abs(&(&w1 * w1.adjoint() + &w2 * w2.adjoint() - id)),
            block_form: linalg::max_abs(&(top_left - w1.conjugate()))
                .max(linalg::max_abs(&(top_right - w2.conjugate()))),
        }
    }

    /// Energy of `prod_p (b+_p)^{x_p} |ground>`.
    pub fn eigenstate_energy(&self, occupation: &Occupation) -> Result<f64> {
        if occupation.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "occupation has length {}, expected {}",
                occupation.len(),
                self.n
            )));
        }
        Ok(self.constant
            + occupation
                .bits()
                .iter()
                .zip(&self.energies)
                .filter(|(&b, _)| b)
                .map(|(_, e)| e)
                .sum::<f64>())
    }

    /// Relabel the modes: qubit `i` holds original mode `perm[i]`. Columns of
    /// both halves of `W` are permuted identically.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        validate_permutation(perm, self.n)?;
        let n = self.n;
        let wl = self.w_lower();
        let mut out = CMatrix::zeros(n, 2 * n);
        for (i, &p) in perm.iter().enumerate() {
            out.set_column(i, &wl.column(p));
            out.set_column(n + i, &wl.column(n + p));
        }
        Ok(Self { n, w: full_from_lower(&out), energies: self.energies.clone(), constant: self.constant })
    }

    /// Quasiparticle annihilator coefficients of mode `p` as a function of
    /// the ladder operators, for applying `b+_p` to a Fock-space vector.
    pub fn mode_row(&self, p: usize) -> DVector<Complex64> {
        self.w.row(self.n + p).transpose()
    }
}

pub fn validate_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidParameter(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

fn full_from_lower(wl: &CMatrix) -> CMatrix {
    let n = wl.nrows();
    let mut w = CMatrix::zeros(2 * n, 2 * n);
    w.view_mut((n, 0), (n, 2 * n)).copy_from(wl);
    w.view_mut((0, 0), (n, n)).copy_from(&wl.view((0, n), (n, n)).conjugate());
    w.view_mut((0, n), (n, n)).copy_from(&wl.view((0, 0), (n, n)).conjugate());
    w
}

/// Orthonormal basis of the span of `vectors`, dropping directions whose
/// residual norm falls below `cutoff`.
fn orthonormal_basis(vectors: &[DVector<f64>], cutoff: f64) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&r);
                r -= b * proj;
            }
        }
        let norm = r.norm();
        if norm > cutoff {
            basis.push(r / norm);
        }
    }
    basis
}

/// Quasiparticle annihilator `b = (d0 + i d1) / 2` for real orthonormal
/// Majorana directions `d0`, `d1`, expressed as the W_L row `(coef a+, coef a)`.
fn mode_from_majorana_pair(r0: &DVector<f64>, r1: &DVector<f64>, n: usize) -> Vec<Complex64> {
    let mut row = vec![c(0.0, 0.0); 2 * n];
    for j in 0..n {
        let (x0, x1) = (r0[2 * j], r0[2 * j + 1]);
        let (y0, y1) = (r1[2 * j], r1[2 * j + 1]);
        row[j] = c(0.5 * (x0 - y1), 0.5 * (y0 + x1));
        row[n + j] = c(0.5 * (x0 + y1), 0.5 * (y0 - x1));
    }
    row
}

/// Fix the free phase of a mode: its largest-magnitude entry becomes real
/// and positive.
fn canonicalize_phase(row: &mut [Complex64]) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (k, z) in row.iter().enumerate() {
        let m = z.norm();
        if m > best_mag + 1e-12 {
            best = k;
            best_mag = m;
        }
    }
    if best_mag > 0.0 {
        let phase = row[best].conj() / best_mag;
        for z in row.iter_mut() {
            *z *= phase;
        }
        row[best] = c(best_mag, 0.0);
    }
}

fn lex_cmp(a: &[Complex64], b: &[Complex64]) -> Ordering {
    let key = |z: &Complex64| ((z.re * 1e12).round(), (z.im * 1e12).round());
    for (x, y) in a.iter().zip(b) {
        let (kx, ky) = (key(x), key(y));
        match kx.0.total_cmp(&ky.0).then(kx.1.total_cmp(&ky.1)) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Diagonalize `h` into free quasiparticles.
pub fn diagonalize(h: &QuadraticHamiltonian) -> Result<BogoliubovTransform> {
    let n = h.n();
    let form = majorana_form(h);
    let a = &form.coefficients;
    let scale = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let zero_tol = 1e-9 * scale;

    let (values, vectors) = linalg::eigh(&(linalg::to_complex(a) * I));

    let mut modes: Vec<(f64, Vec<Complex64>)> = Vec::with_capacity(n);
    let mut kernel: Vec<DVector<f64>> = Vec::new();
    let mut zero_count = 0;
    for (k, &lambda) in values.iter().enumerate() {
        let w = vectors.column(k);
        if lambda > zero_tol {
            // iA w = lambda w with w = (u + i v)/sqrt2 gives A u = lambda v,
            // A v = -lambda u, so (d0, d1) = (v, u) has d0^T A d1 = lambda.
            let u = DVector::from_iterator(2 * n, w.iter().map(|z| z.re * std::f64::consts::SQRT_2));
            let v = DVector::from_iterator(2 * n, w.iter().map(|z| z.im * std::f64::consts::SQRT_2));
            modes.push((lambda, mode_from_majorana_pair(&v, &u, n)));
        } else if lambda.abs() <= zero_tol {
            zero_count += 1;
            kernel.push(DVector::from_iterator(2 * n, w.iter().map(|z| z.re)));
            kernel.push(DVector::from_iterator(2 * n, w.iter().map(|z| z.im)));
        }
    }
    if zero_count % 2 != 0 || modes.len() + zero_count / 2 != n {
        return Err(Error::NumericalDegeneracy {
            message: format!(
                "spectrum of the Majorana matrix is not paired: {} positive, {} near zero",
                modes.len(),
                zero_count
            ),
            residual: zero_tol,
        });
    }
    let basis = orthonormal_basis(&kernel, 1e-6);
    if basis.len() != zero_count {
        return Err(Error::NumericalDegeneracy {
            message: format!(
                "zero-mode subspace has real dimension {} but {} zero eigenvalues",
                basis.len(),
                zero_count
            ),
            residual: zero_tol,
        });
    }
    for pair in basis.chunks(2) {
        modes.push((0.0, mode_from_majorana_pair(&pair[0], &pair[1], n)));
    }

    for (_, row) in modes.iter_mut() {
        canonicalize_phase(row);
    }
    modes.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut start = 0;
    while start < modes.len() {
        let mut end = start + 1;
        while end < modes.len() && modes[end].0 - modes[end - 1].0 <= TIE_TOL {
            end += 1;
        }
        modes[start..end].sort_by(|x, y| lex_cmp(&x.1, &y.1));
        start = end;
    }

    let mut wl = CMatrix::zeros(n, 2 * n);
    for (p, (_, row)) in modes.iter().enumerate() {
        for (k, z) in row.iter().enumerate() {
            wl[(p, k)] = *z;
        }
    }
    let energies: Vec<f64> = modes.iter().map(|m| m.0).collect();
    let constant = form.constant - 0.5 * energies.iter().sum::<f64>();
    let bt = BogoliubovTransform { n, w: full_from_lower(&wl), energies, constant };
    let res = bt.residuals();
    if res.max() > INVARIANT_TOL {
        return Err(Error::NumericalDegeneracy {
            message: "Bogoliubov transform violates its invariants".into(),
            residual: res.max(),
        });
    }
    Ok(bt)
}
