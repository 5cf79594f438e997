//! Jordan-Wigner action of fermionic ladder operators on computational
//! basis states, and the dense operators built from it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::CMatrix;

/// Largest mode count for which dense 2^n x 2^n operators are built.
pub const MAX_DENSE_MODES: usize = 14;

#[inline]
fn string_sign(x: usize, p: usize) -> f64 {
    if (x & ((1usize << p) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `a_p |x>` as `(sign, index)`, or `None` when mode `p` is empty.
#[inline]
pub fn annihilate(p: usize, x: usize) -> Option<(f64, usize)> {
    if x >> p & 1 == 1 {
        Some((string_sign(x, p), x ^ (1 << p)))
    } else {
        None
    }
}

/// `a^dagger_p |x>` as `(sign, index)`, or `None` when mode `p` is full.
#[inline]
pub fn create(p: usize, x: usize) -> Option<(f64, usize)> {
    if x >> p & 1 == 0 {
        Some((string_sign(x, p), x | (1 << p)))
    } else {
        None
    }
}

/// A ladder operator: `(mode, dagger)`.
pub type Ladder = (usize, bool);

/// Apply a product of ladder operators (rightmost acts first) to `|x>`.
pub fn apply_word(word: &[Ladder], x: usize) -> Option<(f64, usize)> {
    let mut sign = 1.0;
    let mut state = x;
    for &(p, dag) in word.iter().rev() {
        let (s, y) = if dag { create(p, state)? } else { annihilate(p, state)? };
        sign *= s;
        state = y;
    }
    Some((sign, state))
}

/// Expectation `<psi| word |psi>` of a ladder-operator product.
pub fn expectation(amps: &[Complex64], word: &[Ladder]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, &a) in amps.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        if let Some((s, y)) = apply_word(word, x) {
            acc += amps[y].conj() * a * s;
        }
    }
    acc
}

/// Dense matrix of a ladder-operator product on `n` modes.
pub fn dense_word(n: usize, word: &[Ladder]) -> Result<CMatrix> {
    check_dense(n)?;
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    for x in 0..dim {
        if let Some((s, y)) = apply_word(word, x) {
            m[(y, x)] += Complex64::new(s, 0.0);
        }
    }
    Ok(m)
}

pub(crate) fn check_dense(n: usize) -> Result<()> {
    if n > MAX_DENSE_MODES {
        return Err(Error::ResourceLimit(format!(
            "dense operators need n <= {MAX_DENSE_MODES}, got {n}"
        )));
    }
    Ok(())
}

/// Parity (number of set bits mod 2) of a basis index.
#[inline]
pub fn parity(x: usize) -> u8 {
    (x.count_ones() % 2) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_operators_anticommute() {
        let n = 4;
        for p in 0..n {
            for q in 0..n {
                let ab = dense_word(n, &[(p, false), (q, true)]).unwrap();
                let ba = dense_word(n, &[(q, true), (p, false)]).unwrap();
                let sum = ab + ba;
                let expected = if p == q { CMatrix::identity(16, 16) } else { CMatrix::zeros(16, 16) };
                assert!((sum - expected).norm() < 1e-14, "p={p} q={q}");
                let aa = dense_word(n, &[(p, false), (q, false)]).unwrap()
                    + dense_word(n, &[(q, false), (p, false)]).unwrap();
                assert!(aa.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn number_operator_reads_bits() {
        let m = dense_word(3, &[(1, true), (1, false)]).unwrap();
        for x in 0..8 {
            assert_eq!(m[(x, x)].re, ((x >> 1) & 1) as f64);
        }
    }

    #[test]
    fn dense_refuses_large_systems() {
        assert!(matches!(check_dense(15), Err(Error::ResourceLimit(_))));
    }
}
