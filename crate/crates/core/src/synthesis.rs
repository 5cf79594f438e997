//! Circuit synthesis for eigenstates of quadratic Hamiltonians.
//!
//! The lower half `W_L` of a Bogoliubov transform is reduced to `(0 Y)` by a
//! unitary row mixing (which does not change the prepared state) followed by
//! Givens rotations and particle-hole transformations acting on the columns.
//! Every column operation is the Heisenberg action of a gate:
//!
//! * a Givens gate with single-particle matrix `g` on `(j, j + 1)` maps the
//!   coefficient row of an operator by `conj(g)` on the creation half and by
//!   `g` on the annihilation half,
//! * a Pauli X on the last qubit exchanges `a_{n-1}` and `a+_{n-1}`.
//!
//! Excited states additionally need the Slater determinant of the occupied
//! rows of `Y`, which is prepared from a computational-basis state with
//! `eta (n - eta)` number-conserving Givens rotations. The occupied reference
//! qubits sit at the top of the register so that the Slater rotations drift
//! towards qubit 0 while the Bogoliubov sweep starts at qubit `n - 1`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bogoliubov::{BogoliubovTransform, Occupation};
use crate::error::{Error, Result};
use crate::linalg::{self, c};
use crate::CMatrix;

/// Entries below this are treated as already zero.
const ZERO_TOL: f64 = 1e-12;
/// Post-rotation residual above which the decomposition is rejected.
const CHECK_TOL: f64 = 1e-10;

/// Two-qubit measurement basis changes. Each diagonalizes one of the four
/// hermitian pair operators built from `XX`, `YY`, `XY` and `YX`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairBasis {
    /// `(XX + YY) / 2`
    XxPlusYy,
    /// `(XY - YX) / 2`
    XyMinusYx,
    /// `(XX - YY) / 2`
    XxMinusYy,
    /// `(XY + YX) / 2`
    XyPlusYx,
}

impl PairBasis {
    pub const ALL: [PairBasis; 4] =
        [PairBasis::XxPlusYy, PairBasis::XyMinusYx, PairBasis::XxMinusYy, PairBasis::XyPlusYx];

    /// Whether the basis change has a real matrix.
    pub fn is_real(self) -> bool {
        matches!(self, PairBasis::XxPlusYy | PairBasis::XxMinusYy)
    }

    /// The two basis indices the gate mixes.
    pub fn block(self) -> (usize, usize) {
        match self {
            PairBasis::XxPlusYy | PairBasis::XyMinusYx => (1, 2),
            PairBasis::XxMinusYy | PairBasis::XyPlusYx => (0, 3),
        }
    }

    /// Eigenvalue of the diagonalized pair operator on each basis index
    /// after the basis change.
    pub fn eigenvalues(self) -> [f64; 4] {
        match self {
            PairBasis::XxPlusYy | PairBasis::XyMinusYx => [0.0, 1.0, -1.0, 0.0],
            PairBasis::XxMinusYy => [1.0, 0.0, 0.0, -1.0],
            PairBasis::XyPlusYx => [-1.0, 0.0, 0.0, 1.0],
        }
    }

    pub fn matrix(self) -> [[Complex64; 4]; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = c(0.0, 0.0);
        let (a, b) = self.block();
        let u = match self {
            PairBasis::XxPlusYy | PairBasis::XxMinusYy => [[c(h, 0.0), c(h, 0.0)], [c(-h, 0.0), c(h, 0.0)]],
            PairBasis::XyMinusYx => [[c(h, 0.0), c(0.0, -h)], [c(h, 0.0), c(0.0, h)]],
            PairBasis::XyPlusYx => [[c(h, 0.0), c(0.0, h)], [c(h, 0.0), c(0.0, -h)]],
        };
        let mut m = [[z; 4]; 4];
        for k in 0..4 {
            if k != a && k != b {
                m[k][k] = c(1.0, 0.0);
            }
        }
        m[a][a] = u[0][0];
        m[a][b] = u[0][1];
        m[b][a] = u[1][0];
        m[b][b] = u[1][1];
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Gate {
    PauliX { qubit: usize },
    /// `diag(1, e^{i phi})`
    ZRotation { qubit: usize, phi: f64 },
    /// Givens rotation on `(qubit, qubit + 1)`.
    Givens { qubit: usize, theta: f64, phi: f64 },
    BasisChange { qubit: usize, kind: PairBasis },
}

/// Matrix of a gate together with the qubits it acts on.
#[derive(Clone, Copy, Debug)]
pub enum GateMatrix {
    Single(usize, [[Complex64; 2]; 2]),
    Pair(usize, [[Complex64; 4]; 4]),
}

impl GateMatrix {
    fn entries(&self) -> Vec<Complex64> {
        match self {
            GateMatrix::Single(_, m) => m.iter().flatten().copied().collect(),
            GateMatrix::Pair(_, m) => m.iter().flatten().copied().collect(),
        }
    }
}

/// Single-particle matrix of the Givens gate: it sends `a+_{q+k}` to
/// `sum_l g[l][k] a+_{q+l}`.
pub fn givens_single_particle(theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
    let e = Complex64::from_polar(1.0, phi);
    let (s, co) = theta.sin_cos();
    [[e * co, -e * s], [c(s, 0.0), c(co, 0.0)]]
}

pub fn givens_matrix(theta: f64, phi: f64) -> [[Complex64; 4]; 4] {
    let g = givens_single_particle(theta, phi);
    let z = c(0.0, 0.0);
    let mut m = [[z; 4]; 4];
    m[0][0] = c(1.0, 0.0);
    m[1][1] = g[0][0];
    m[1][2] = g[0][1];
    m[2][1] = g[1][0];
    m[2][2] = g[1][1];
    m[3][3] = Complex64::from_polar(1.0, phi);
    m
}

impl Gate {
    /// Lowest qubit index the gate touches.
    pub fn qubit(&self) -> usize {
        match *self {
            Gate::PauliX { qubit }
            | Gate::ZRotation { qubit, .. }
            | Gate::Givens { qubit, .. }
            | Gate::BasisChange { qubit, .. } => qubit,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        let q = self.qubit();
        match self {
            Gate::PauliX { .. } | Gate::ZRotation { .. } => vec![q],
            Gate::Givens { .. } | Gate::BasisChange { .. } => vec![q, q + 1],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Givens { .. } | Gate::BasisChange { .. })
    }

    pub fn matrix(&self) -> GateMatrix {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        match *self {
            Gate::PauliX { qubit } => GateMatrix::Single(qubit, [[zero, one], [one, zero]]),
            Gate::ZRotation { qubit, phi } => {
                GateMatrix::Single(qubit, [[one, zero], [zero, Complex64::from_polar(1.0, phi)]])
            }
            Gate::Givens { qubit, theta, phi } => GateMatrix::Pair(qubit, givens_matrix(theta, phi)),
            Gate::BasisChange { qubit, kind } => GateMatrix::Pair(qubit, kind.matrix()),
        }
    }

    /// True if the matrix is real after removing a global phase.
    pub fn is_real(&self) -> bool {
        let entries = self.matrix().entries();
        let pivot = entries.iter().copied().fold(c(0.0, 0.0), |a, b| if b.norm() > a.norm() { b } else { a });
        let phase = pivot.conj() / pivot.norm();
        entries.iter().all(|z| (z * phase).im.abs() < 1e-12)
    }

    fn name(&self) -> &'static str {
        match self {
            Gate::PauliX { .. } => "x",
            Gate::ZRotation { .. } => "z_rotation",
            Gate::Givens { .. } => "givens",
            Gate::BasisChange { .. } => "basis_change",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
    occupation: Option<Occupation>,
    permutation: Option<Vec<usize>>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Self { n, gates: Vec::new(), occupation: None, permutation: None }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn occupation(&self) -> Option<&Occupation> {
        self.occupation.as_ref()
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.permutation.as_deref()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if let Some(&q) = gate.qubits().iter().max() {
            if q >= self.n {
                return Err(Error::InvalidParameter(format!(
                    "gate {gate:?} touches qubit {q} on a {}-qubit circuit",
                    self.n
                )));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    pub fn x_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::PauliX { .. })).count()
    }

    /// Fermion parity of the state prepared from `|0...0>`.
    pub fn parity(&self) -> u8 {
        (self.x_count() % 2) as u8
    }

    pub fn givens_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Givens { .. })).count()
    }

    /// Greedy as-soon-as-possible packing into layers of disjoint gates.
    /// Returns the gate indices of each layer.
    pub fn layers(&self) -> Vec<Vec<usize>> {
        let mut free_at = vec![0usize; self.n];
        let mut layers: Vec<Vec<usize>> = Vec::new();
        for (i, g) in self.gates.iter().enumerate() {
            let qs = g.qubits();
            let layer = qs.iter().map(|&q| free_at[q]).max().unwrap_or(0);
            if layer == layers.len() {
                layers.push(Vec::new());
            }
            layers[layer].push(i);
            for q in qs {
                free_at[q] = layer + 1;
            }
        }
        layers
    }

    pub fn depth(&self) -> usize {
        self.layers().len()
    }

    /// Depth without the leading X gates that set up the computational-basis
    /// input state.
    pub fn unitary_depth(&self) -> usize {
        let skip = self.gates.iter().take_while(|g| matches!(g, Gate::PauliX { .. })).count();
        let rest = Circuit { n: self.n, gates: self.gates[skip..].to_vec(), occupation: None, permutation: None };
        rest.depth()
    }

    /// Portable gate list: one record per gate with name, qubits and params.
    pub fn to_json(&self) -> serde_json::Value {
        let gates: Vec<_> = self
            .gates
            .iter()
            .map(|g| {
                let params = match *g {
                    Gate::PauliX { .. } => json!({}),
                    Gate::ZRotation { phi, .. } => json!({ "phi": phi }),
                    Gate::Givens { theta, phi, .. } => json!({ "theta": theta, "phi": phi }),
                    Gate::BasisChange { kind, .. } => json!({ "kind": kind }),
                };
                json!({ "name": g.name(), "qubits": g.qubits(), "params": params })
            })
            .collect();
        json!({
            "n": self.n,
            "occupation": self.occupation.as_ref().map(|o| o.to_string()),
            "permutation": self.permutation,
            "gates": gates,
        })
    }
}

/// True iff every gate matrix is real up to a global phase.
pub fn is_real_circuit(circuit: &Circuit) -> bool {
    circuit.gates.iter().all(Gate::is_real)
}

/// One column operation found while reducing `W_L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReductionOp {
    /// Particle-hole transformation on the last mode.
    ParticleHole,
    Givens { qubit: usize, theta: f64, phi: f64 },
}

impl ReductionOp {
    fn gate(self, n: usize) -> Gate {
        match self {
            ReductionOp::ParticleHole => Gate::PauliX { qubit: n - 1 },
            ReductionOp::Givens { qubit, theta, phi } => Gate::Givens { qubit, theta, phi },
        }
    }
}

/// Result of reducing `W_L` to `(0 Y)`.
#[derive(Clone, Debug)]
pub struct GaussianDecomposition {
    n: usize,
    /// Column operations grouped by sweep step, in discovery order.
    pub steps: Vec<Vec<ReductionOp>>,
    /// Row mixing applied from the left.
    pub left: CMatrix,
    /// Right block of the reduced matrix.
    pub right: CMatrix,
}

impl GaussianDecomposition {
    /// The matrix `V` with `U+ b_p U = sum_q V_pq a_q`, where `U` is the
    /// unitary realized by [`Self::gates`].
    pub fn v(&self) -> CMatrix {
        self.left.adjoint() * &self.right
    }

    pub fn ops(&self) -> impl Iterator<Item = ReductionOp> + '_ {
        self.steps.iter().flatten().copied()
    }

    pub fn givens_count(&self) -> usize {
        self.ops().filter(|op| matches!(op, ReductionOp::Givens { .. })).count()
    }

    /// Gates in time order.
    pub fn gates(&self) -> Vec<Gate> {
        let ops: Vec<_> = self.ops().collect();
        ops.into_iter().rev().map(|op| op.gate(self.n)).collect()
    }

    /// `|| left * wl * ops - (0 Y) ||_F`, replaying the recorded operations.
    pub fn residual(&self, wl: &CMatrix) -> f64 {
        let n = self.n;
        let mut cur = &self.left * wl;
        for op in self.ops() {
            apply_op(&mut cur, op);
        }
        let mut target = CMatrix::zeros(n, 2 * n);
        target.view_mut((0, n), (n, n)).copy_from(&self.right);
        linalg::frobenius(&(cur - target))
    }
}

fn apply_op(cur: &mut CMatrix, op: ReductionOp) {
    let n = cur.nrows();
    match op {
        ReductionOp::ParticleHole => cur.swap_columns(n - 1, 2 * n - 1),
        ReductionOp::Givens { qubit, theta, phi } => {
            let g = givens_single_particle(theta, phi);
            let gc = [[g[0][0].conj(), g[0][1].conj()], [g[1][0].conj(), g[1][1].conj()]];
            mix_columns(cur, qubit, &gc);
            mix_columns(cur, n + qubit, &g);
        }
    }
}

/// `cur[:, (j, j+1)] <- cur[:, (j, j+1)] * g`
fn mix_columns(cur: &mut CMatrix, j: usize, g: &[[Complex64; 2]; 2]) {
    for r in 0..cur.nrows() {
        let x = cur[(r, j)];
        let y = cur[(r, j + 1)];
        cur[(r, j)] = g[0][0] * x + g[1][0] * y;
        cur[(r, j + 1)] = g[0][1] * x + g[1][1] * y;
    }
}

/// Zero `m[(l, k)]` by mixing rows `l` and `l + 1` with a unitary, also
/// applied to `acc` when given.
fn zero_by_rows(m: &mut CMatrix, l: usize, k: usize, acc: Option<&mut CMatrix>) {
    let x = m[(l, k)];
    let y = m[(l + 1, k)];
    let rho = x.norm().hypot(y.norm());
    if x.norm() <= ZERO_TOL || rho == 0.0 {
        return;
    }
    let r = [[y / rho, -x / rho], [x.conj() / rho, y.conj() / rho]];
    let rotate = |m: &mut CMatrix| {
        for col in 0..m.ncols() {
            let a = m[(l, col)];
            let b = m[(l + 1, col)];
            m[(l, col)] = r[0][0] * a + r[0][1] * b;
            m[(l + 1, col)] = r[1][0] * a + r[1][1] * b;
        }
    };
    rotate(m);
    if let Some(acc) = acc {
        rotate(acc);
    }
}

/// Reduce `phi0` by a multiple of pi into `(-pi/2, pi/2]`, returning the
/// reduced angle and `(-1)^k`.
fn reduce_phase(phi0: f64) -> (f64, f64) {
    let mut phi = linalg::wrap_angle(phi0);
    let mut sigma = 1.0;
    if phi > FRAC_PI_2 {
        phi -= PI;
        sigma = -1.0;
    } else if phi <= -FRAC_PI_2 {
        phi += PI;
        sigma = -1.0;
    }
    (phi, sigma)
}

/// Givens angles with `e^{-i phi} cos(theta) x + sin(theta) y = 0`.
fn angles_zeroing_first(x: Complex64, y: Complex64) -> (f64, f64) {
    let rho = x.norm().hypot(y.norm());
    let (phi, sigma) = reduce_phase(x.arg() - y.arg());
    let (co, s) = (y.norm() / rho, -sigma * x.norm() / rho);
    (s.atan2(co), phi)
}

/// Givens angles with `-e^{-i phi} sin(theta) x + cos(theta) y = 0`.
fn angles_zeroing_second(x: Complex64, y: Complex64) -> (f64, f64) {
    let rho = x.norm().hypot(y.norm());
    let (phi, sigma) = reduce_phase(x.arg() - y.arg());
    let (co, s) = (x.norm() / rho, sigma * y.norm() / rho);
    (s.atan2(co), phi)
}

fn check_orthonormal_rows(wl: &CMatrix) -> Result<usize> {
    let n = wl.nrows();
    if n == 0 || wl.ncols() != 2 * n {
        return Err(Error::InvalidParameter(format!("W_L must be n x 2n, got {:?}", wl.shape())));
    }
    let gram = wl * wl.adjoint() - CMatrix::identity(n, n);
    let w2 = wl.columns(0, n);
    let w1 = wl.columns(n, n);
    let anti = w1 * w2.transpose() + w2 * w1.transpose();
    let err = linalg::max_abs(&gram).max(linalg::max_abs(&anti));
    if err > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "W_L rows are not orthonormal quasiparticle modes (residual {err:.3e})"
        )));
    }
    Ok(n)
}

/// Reduce `W_L` to `(0 Y)` with adjacent Givens rotations and particle-hole
/// transformations on the last mode, in `2n - 1` parallel sweep steps.
pub fn decompose_w_lower(wl: &CMatrix) -> Result<GaussianDecomposition> {
    let n = check_orthonormal_rows(wl)?;
    let mut cur = wl.clone();
    let mut left = CMatrix::identity(n, n);

    // Clear the upper-left triangle of the left block by mixing rows.
    for k in 0..n.saturating_sub(1) {
        for l in 0..n - 1 - k {
            zero_by_rows(&mut cur, l, k, Some(&mut left));
        }
    }

    let mut steps = Vec::new();
    for k in 0..2 * n - 1 {
        let mut step = Vec::new();
        if k % 2 == 0 && cur[(k / 2, n - 1)].norm() > ZERO_TOL {
            step.push(ReductionOp::ParticleHole);
            apply_op(&mut cur, ReductionOp::ParticleHole);
        }
        let (end_row, end_col) = if k < n { (k, n - 1 - k) } else { (n - 1, k + 1 - n) };
        for (t, j) in (end_col..n - 1).step_by(2).enumerate() {
            let i = end_row - t;
            let x = cur[(i, j)];
            if x.norm() <= ZERO_TOL {
                continue;
            }
            let (theta, phi) = angles_zeroing_first(x, cur[(i, j + 1)]);
            let op = ReductionOp::Givens { qubit: j, theta, phi };
            apply_op(&mut cur, op);
            if cur[(i, j)].norm() > CHECK_TOL {
                return Err(Error::DecompositionFailure(format!(
                    "entry ({i}, {j}) left at {:.3e}",
                    cur[(i, j)].norm()
                )));
            }
            cur[(i, j)] = c(0.0, 0.0);
            step.push(op);
        }
        if !step.is_empty() {
            steps.push(step);
        }
    }

    let leftover = linalg::max_abs(&cur.columns(0, n).into_owned());
    if leftover > 1e-8 {
        return Err(Error::DecompositionFailure(format!(
            "left block not cleared (max entry {leftover:.3e})"
        )));
    }
    let right = cur.columns(n, n).into_owned();
    Ok(GaussianDecomposition { n, steps, left, right })
}

/// Zero `m[(target, k)]` by a unitary mixing of rows `target` and `pivot`.
fn zero_row_entry(m: &mut CMatrix, target: usize, pivot: usize, k: usize) {
    let x = m[(target, k)];
    let y = m[(pivot, k)];
    let rho = x.norm().hypot(y.norm());
    if x.norm() <= ZERO_TOL {
        return;
    }
    let r = [[y / rho, -x / rho], [x.conj() / rho, y.conj() / rho]];
    for col in 0..m.ncols() {
        let a = m[(target, col)];
        let b = m[(pivot, col)];
        m[(target, col)] = r[0][0] * a + r[0][1] * b;
        m[(pivot, col)] = r[1][0] * a + r[1][1] * b;
    }
}

/// Givens rotations (discovery order) turning the orbitals in the rows of
/// `phi` into `e_{n-eta}, ..., e_{n-1}` up to a row mixing. The gates in
/// reverse order prepare their Slater determinant from the state with the
/// last `eta` qubits set.
fn slater_rotations_high(mut phi: CMatrix) -> Result<Vec<ReductionOp>> {
    let (eta, n) = phi.shape();
    if eta == 0 {
        return Ok(Vec::new());
    }
    // Staircase form: row i is supported on columns i..n.
    for k in 0..eta - 1 {
        for i in (k + 1..eta).rev() {
            zero_row_entry(&mut phi, i, i - 1, k);
        }
    }
    let mut ops = Vec::new();
    for i in (0..eta).rev() {
        for j in i..n - eta + i {
            let x = phi[(i, j)];
            if x.norm() <= ZERO_TOL {
                continue;
            }
            let (theta, ph) = angles_zeroing_first(x, phi[(i, j + 1)]);
            let g = givens_single_particle(theta, ph);
            let gc = [[g[0][0].conj(), g[0][1].conj()], [g[1][0].conj(), g[1][1].conj()]];
            mix_columns(&mut phi, j, &gc);
            if phi[(i, j)].norm() > CHECK_TOL {
                return Err(Error::DecompositionFailure(format!(
                    "orbital entry ({i}, {j}) left at {:.3e}",
                    phi[(i, j)].norm()
                )));
            }
            phi[(i, j)] = c(0.0, 0.0);
            ops.push(ReductionOp::Givens { qubit: j, theta, phi: ph });
        }
    }
    let head = linalg::max_abs(&phi.columns(0, n - eta).into_owned());
    if head > 1e-8 {
        return Err(Error::DecompositionFailure(format!(
            "orbitals not reduced (max residual {head:.3e})"
        )));
    }
    Ok(ops)
}

/// As [`slater_rotations_high`], with the reference state occupying the
/// first `eta` qubits.
fn slater_rotations_low(mut phi: CMatrix) -> Result<Vec<ReductionOp>> {
    let (eta, n) = phi.shape();
    if eta == 0 {
        return Ok(Vec::new());
    }
    // Staircase form: row i is supported on columns 0..=n-eta+i.
    for j in (n - eta + 1..n).rev() {
        for i in 0..j - (n - eta) {
            zero_row_entry(&mut phi, i, i + 1, j);
        }
    }
    let mut ops = Vec::new();
    for i in 0..eta {
        for j in (i + 1..=n - eta + i).rev() {
            let y = phi[(i, j)];
            if y.norm() <= ZERO_TOL {
                continue;
            }
            let (theta, ph) = angles_zeroing_second(phi[(i, j - 1)], y);
            let g = givens_single_particle(theta, ph);
            let gc = [[g[0][0].conj(), g[0][1].conj()], [g[1][0].conj(), g[1][1].conj()]];
            mix_columns(&mut phi, j - 1, &gc);
            if phi[(i, j)].norm() > CHECK_TOL {
                return Err(Error::DecompositionFailure(format!(
                    "orbital entry ({i}, {j}) left at {:.3e}",
                    phi[(i, j)].norm()
                )));
            }
            phi[(i, j)] = c(0.0, 0.0);
            ops.push(ReductionOp::Givens { qubit: j - 1, theta, phi: ph });
        }
    }
    let tail = linalg::max_abs(&phi.columns(eta, n - eta).into_owned());
    if tail > 1e-8 {
        return Err(Error::DecompositionFailure(format!(
            "orbitals not reduced (max residual {tail:.3e})"
        )));
    }
    Ok(ops)
}

/// Drop pairs of X gates on one qubit with nothing in between on that qubit.
fn cancel_x_pairs(gates: Vec<Gate>) -> Vec<Gate> {
    let mut out: Vec<Gate> = Vec::with_capacity(gates.len());
    for g in gates {
        if let Gate::PauliX { qubit } = g {
            let last = out.iter().rposition(|h| h.qubits().contains(&qubit));
            if let Some(i) = last.filter(|&i| out[i] == g) {
                out.remove(i);
                continue;
            }
        }
        out.push(g);
    }
    out
}

/// Circuit preparing `prod_p (b+_p)^{x_p} |ground>` from `|0...0>`.
///
/// The Slater part is synthesized with the reference excitations at either
/// end of the register and the shallower circuit is kept.
pub fn prepare_eigenstate_circuit(bt: &BogoliubovTransform, occupation: &Occupation) -> Result<Circuit> {
    let n = bt.n();
    if occupation.len() != n {
        return Err(Error::InvalidParameter(format!(
            "occupation has length {}, expected {n}",
            occupation.len()
        )));
    }
    let dec = decompose_w_lower(&bt.w_lower())?;
    let occupied = occupation.occupied();
    let eta = occupied.len();
    let build = |reference: std::ops::Range<usize>, slater: Vec<ReductionOp>| -> Result<Circuit> {
        let mut gates: Vec<Gate> = reference.map(|qubit| Gate::PauliX { qubit }).collect();
        gates.extend(slater.into_iter().rev().map(|op| op.gate(n)));
        gates.extend(dec.gates());
        let mut circuit = Circuit::new(n);
        circuit.occupation = Some(occupation.clone());
        circuit.extend(cancel_x_pairs(gates))?;
        Ok(circuit)
    };
    if eta == 0 {
        return build(0..0, Vec::new());
    }
    let v = dec.v();
    let orbitals = CMatrix::from_fn(eta, n, |i, q| v[(occupied[i], q)].conj());
    let low = build(0..eta, slater_rotations_low(orbitals.clone())?)?;
    let high = build(n - eta..n, slater_rotations_high(orbitals)?)?;
    let cost = |c: &Circuit| (c.unitary_depth(), c.gates().len());
    Ok(if cost(&high) < cost(&low) { high } else { low })
}

/// Apply `perm` to the modes of `bt`: qubit `i` then holds mode `perm[i]`.
pub fn permuted_transform(bt: &BogoliubovTransform, perm: &[usize]) -> Result<BogoliubovTransform> {
    bt.permuted(perm)
}

/// Eigenstate circuit in a permuted mode ordering, tagged with the ordering.
pub fn prepare_permuted_circuit(
    bt: &BogoliubovTransform,
    occupation: &Occupation,
    perm: &[usize],
) -> Result<Circuit> {
    let mut circuit = prepare_eigenstate_circuit(&permuted_transform(bt, perm)?, occupation)?;
    circuit.permutation = Some(perm.to_vec());
    Ok(circuit)
}

/// Number of Givens rotations for an eigenstate with `eta` quasiparticles.
pub fn givens_count(n: usize, eta: usize) -> Result<usize> {
    if eta > n {
        return Err(Error::InvalidParameter(format!("eta = {eta} exceeds n = {n}")));
    }
    Ok(n * n.saturating_sub(1) / 2 + eta * (n - eta))
}

pub fn circuit_depth_bound(n: usize) -> usize {
    (3 * n).saturating_sub(2)
}

/// Gates of the native set used for the two-CNOT Givens decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum NativeGate {
    Cx { control: usize, target: usize },
    /// `exp(-i angle Y / 2)`
    Ry { qubit: usize, angle: f64 },
    /// `diag(1, e^{i angle})`
    Phase { qubit: usize, angle: f64 },
}

/// Two-CNOT realization of a Givens gate, in time order. Other gates are
/// returned as `None`.
pub fn decompose_givens_to_cnots(gate: &Gate) -> Option<Vec<NativeGate>> {
    let Gate::Givens { qubit: q, theta, phi } = *gate else {
        return None;
    };
    let cx = NativeGate::Cx { control: q, target: q + 1 };
    let mut out = vec![
        NativeGate::Ry { qubit: q, angle: -FRAC_PI_2 },
        cx,
        NativeGate::Ry { qubit: q, angle: -theta },
        NativeGate::Ry { qubit: q + 1, angle: theta },
        cx,
        NativeGate::Ry { qubit: q, angle: FRAC_PI_2 },
    ];
    if phi != 0.0 {
        out.push(NativeGate::Phase { qubit: q, angle: phi });
    }
    Some(out)
}
