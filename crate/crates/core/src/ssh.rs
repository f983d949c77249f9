//! Seven-state SSH attack model observed by noisy monitors.
//!
//! The published transition matrix has two rows that do not sum to one
//! (rows 3 and 5, 1-based, sum to 0.999 and 0.959); [`transition_matrix`]
//! returns the row-normalised version used as a model and
//! [`transition_matrix_printed`] the values as published. The published
//! observation matrix has a row summing to `2 - 3ε`; its third entry is set
//! to `ε` here, which keeps every other row and the equal-row pairs intact.

use crate::error::{Error, Result};
use crate::hmm::{HmmParams, MultiHmmParams};
use crate::matrix::{Matrix, Tolerance};

pub const STATES: usize = 7;
pub const LETTERS: usize = 3;

const A_PRINTED: [[f64; STATES]; STATES] = [
    [0.6170, 0.3780, 0.0040, 0.0, 0.0, 0.0, 0.0010],
    [0.1860, 0.8130, 0.0010, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.7230, 0.2350, 0.0400, 0.0, 0.0010],
    [0.0, 0.0, 0.2140, 0.7570, 0.0290, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0220, 0.6670, 0.2670, 0.0030],
    [0.0, 0.0, 0.0, 0.0, 0.1520, 0.8480, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0000],
];

/// Row pattern per state: `H` is `1 - 2ε`, `L` is `ε`.
#[derive(Clone, Copy)]
enum P {
    H,
    L,
}

const B_PATTERN: [[P; LETTERS]; STATES] = [
    [P::L, P::H, P::L],
    [P::H, P::L, P::L],
    [P::L, P::L, P::H],
    [P::H, P::L, P::L],
    [P::L, P::H, P::L],
    [P::H, P::L, P::L],
    [P::H, P::L, P::L],
];

pub fn transition_matrix_printed() -> Matrix {
    Matrix::from_rows(&A_PRINTED).expect("static matrix")
}

pub fn transition_matrix() -> Matrix {
    let rows: Vec<Vec<f64>> = A_PRINTED
        .iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|v| v / s).collect()
        })
        .collect();
    Matrix::from_rows(&rows).expect("static matrix")
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::InvalidInput(format!(
            "measurement error must lie in [0, 0.5], got {eps}"
        )));
    }
    Ok(())
}

/// Observation matrix `B(ε)` (7 states x 3 letters).
pub fn observation_matrix(eps: f64) -> Result<Matrix> {
    check_eps(eps)?;
    let rows: Vec<Vec<f64>> = B_PATTERN
        .iter()
        .map(|r| {
            r.iter()
                .map(|p| match p {
                    P::H => 1.0 - 2.0 * eps,
                    P::L => eps,
                })
                .collect()
        })
        .collect();
    Matrix::from_rows(&rows)
}

/// Observation matrix with the published row 4, which is not stochastic.
pub fn observation_matrix_printed(eps: f64) -> Result<Matrix> {
    let mut b = observation_matrix(eps)?;
    b.set(3, 2, 1.0 - 2.0 * eps);
    Ok(b)
}

/// Single monitor with error `eps`, started from the stationary distribution.
pub fn single(eps: f64) -> Result<HmmParams> {
    HmmParams::with_stationary(
        transition_matrix(),
        observation_matrix(eps)?,
        &Tolerance::default(),
    )
}

/// One monitor per entry of `eps`; identical entries give a homogeneous model.
pub fn multi(eps: &[f64]) -> Result<MultiHmmParams> {
    let bs = eps
        .iter()
        .map(|&e| observation_matrix(e))
        .collect::<Result<Vec<_>>>()?;
    let homogeneous = eps.windows(2).all(|w| w[0] == w[1]);
    MultiHmmParams::with_stationary(transition_matrix(), bs, homogeneous, &Tolerance::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krank::krank;

    #[test]
    fn printed_row_sums() {
        let sums = transition_matrix_printed().row_sums();
        assert!((sums[2] - 0.999).abs() < 1e-12);
        assert!((sums[4] - 0.959).abs() < 1e-12);
        assert!(transition_matrix()
            .row_sums()
            .iter()
            .all(|s| (s - 1.0).abs() < 1e-15));
        let printed_b = observation_matrix_printed(0.1).unwrap();
        assert!((printed_b.row_sums()[3] - 1.7).abs() < 1e-12);
    }

    #[test]
    fn kranks() {
        let tol = Tolerance::default();
        assert_eq!(krank(&transition_matrix(), &tol).value, 7);
        assert_eq!(krank(&transition_matrix_printed(), &tol).value, 7);
        let kb = krank(&observation_matrix(0.1).unwrap(), &tol);
        assert_eq!(kb.value, 1);
        assert_eq!(kb.dependent_rows(), Some(&[0, 4][..]));
    }

    #[test]
    fn stationary_is_absorbing_state() {
        let h = single(0.1).unwrap();
        assert!((h.pi()[6] - 1.0).abs() < 1e-12);
        assert!(h.validate(&Tolerance::default()).is_empty());
        assert!(single(0.6).is_err());
    }

    #[test]
    fn multi_flags() {
        assert!(multi(&[0.1, 0.1]).unwrap().homogeneous());
        assert!(!multi(&[0.05, 0.1]).unwrap().homogeneous());
    }
}
