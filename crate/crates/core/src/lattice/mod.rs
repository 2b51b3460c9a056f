//! Integer lattices: exact Gram–Schmidt, LLL reduction, brute-force shortest
//! vectors and generation of unique-SVP instances with certified gaps.
//!
//! Bases are stored as rows of `i64`. Everything that needs division
//! (orthogonalisation, coefficient recovery, reduction) runs over
//! arbitrary-precision rationals so the reduction inequalities can be checked
//! with zero tolerance.

mod enumerate;
mod gram_schmidt;
mod instance;
mod lll;

pub use enumerate::{
    lattice_points_in_ball, shortest_vector_bruteforce, BallEnumerator, ShortVector, ENUMERATION_BUDGET,
};
pub use gram_schmidt::{gram_schmidt, GramSchmidt};
pub use instance::{certify_gap, check_coeff_bound, gen_unique_lattice, GapCertificate, GenConfig, LatticeInstance};
pub use lll::{is_lll_reduced, lll_reduce, LllReduction};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LatticeError {
    #[error("basis must be a non-empty square matrix, got {rows} rows of lengths {cols:?}")]
    Shape { rows: usize, cols: Vec<usize> },
    #[error("basis rows are linearly dependent")]
    Degenerate,
    #[error("enumeration of {needed} points exceeds the budget of {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("instance generation failed after {attempts} attempts: {reason}")]
    RetriesExhausted { attempts: usize, reason: String },
    #[error("integer overflow in lattice arithmetic")]
    Overflow,
    #[error("basis is not LLL-reduced")]
    NotLllReduced,
    #[error("vector is not a member of the lattice")]
    NotInLattice,
    #[error("instance has no planted vector")]
    NoPlantedVector,
    #[error("invalid instance: {0}")]
    Invalid(String),
}

/// A square integer basis; row `i` is the basis vector b_{i+1}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct Basis {
    rows: Vec<Vec<i64>>,
}

impl TryFrom<Vec<Vec<i64>>> for Basis {
    type Error = LatticeError;

    fn try_from(rows: Vec<Vec<i64>>) -> Result<Self, Self::Error> {
        Basis::new(rows)
    }
}

impl From<Basis> for Vec<Vec<i64>> {
    fn from(b: Basis) -> Self {
        b.rows
    }
}

impl Basis {
    /// Checks the shape only; independence is checked by the operations that need it.
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self, LatticeError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(LatticeError::Shape {
                rows: n,
                cols: rows.iter().map(Vec::len).collect(),
            });
        }
        Ok(Basis { rows })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        Basis { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.rows[i]
    }

    /// Lattice vector Σ c_i b_i.
    pub fn combine(&self, coeffs: &[i64]) -> Result<Vec<i64>, LatticeError> {
        let n = self.dim();
        let mut out = vec![0i64; n];
        for (c, row) in coeffs.iter().zip(&self.rows) {
            if *c == 0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(row) {
                *o = c
                    .checked_mul(*x)
                    .and_then(|p| o.checked_add(p))
                    .ok_or(LatticeError::Overflow)?;
            }
        }
        Ok(out)
    }

    /// Exact determinant (fraction-free Bareiss elimination).
    pub fn determinant(&self) -> BigInt {
        let n = self.dim();
        let mut m: Vec<Vec<BigInt>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if m[k][k].is_zero() {
                match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                    Some(i) => {
                        m.swap(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = v / &prev;
                }
            }
            prev = m[k][k].clone();
        }
        sign * &m[n - 1][n - 1]
    }

    /// Integer coefficients c with Σ c_i b_i = `vector`.
    pub fn coefficients_of(&self, vector: &[i64]) -> Result<Vec<i64>, LatticeError> {
        let n = self.dim();
        if vector.len() != n {
            return Err(LatticeError::Invalid(format!(
                "vector of length {} in dimension {n}",
                vector.len()
            )));
        }
        // Solve c · B = v, i.e. Bᵀ cᵀ = vᵀ, by Gauss–Jordan over the rationals.
        let mut aug: Vec<Vec<BigRational>> = (0..n)
            .map(|col| {
                let mut row: Vec<BigRational> = (0..n).map(|i| rational(self.rows[i][col])).collect();
                row.push(rational(vector[col]));
                row
            })
            .collect();
        for k in 0..n {
            let pivot = (k..n).find(|&i| !aug[i][k].is_zero()).ok_or(LatticeError::Degenerate)?;
            aug.swap(k, pivot);
            let inv = aug[k][k].recip();
            for x in aug[k].iter_mut() {
                *x = &*x * &inv;
            }
            for i in 0..n {
                if i != k && !aug[i][k].is_zero() {
                    let f = aug[i][k].clone();
                    for j in k..=n {
                        let sub = &f * &aug[k][j];
                        aug[i][j] -= sub;
                    }
                }
            }
        }
        aug.iter()
            .map(|row| {
                let c = &row[n];
                if !c.is_integer() {
                    return Err(LatticeError::NotInLattice);
                }
                c.to_integer().to_i64().ok_or(LatticeError::Overflow)
            })
            .collect()
    }

    /// Applies an integer row transform: result row i = Σ_j t_ij b_j.
    pub fn transformed(&self, transform: &[Vec<i64>]) -> Result<Basis, LatticeError> {
        let rows = transform
            .iter()
            .map(|t| self.combine(t))
            .collect::<Result<Vec<_>, _>>()?;
        Basis::new(rows)
    }
}

pub(crate) fn rational(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

pub(crate) fn norm_sq(v: &[i64]) -> i128 {
    v.iter().map(|&x| i128::from(x) * i128::from(x)).sum()
}

pub(crate) fn dot_rational(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
}

/// Rounds to the nearest integer, halves upward.
pub(crate) fn round_rational(x: &BigRational) -> BigInt {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    (x + half).floor().to_integer()
}

/// True when `a` and `b` are linearly dependent (all 2×2 minors vanish).
pub(crate) fn parallel(a: &[i64], b: &[i64]) -> bool {
    let n = a.len();
    for i in 0..n {
        for j in i + 1..n {
            let m = i128::from(a[i]) * i128::from(b[j]) - i128::from(a[j]) * i128::from(b[i]);
            if m != 0 {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_and_coefficients() {
        let b = Basis::new(vec![vec![2, 0], vec![1, 2]]).unwrap();
        assert_eq!(b.determinant(), BigInt::from(4));
        assert_eq!(b.coefficients_of(&[3, 2]).unwrap(), vec![1, 1]);
        assert_eq!(b.coefficients_of(&[1, 0]), Err(LatticeError::NotInLattice));
        let dep = Basis::new(vec![vec![1, 1], vec![2, 2]]).unwrap();
        assert!(dep.determinant().is_zero());
    }

    #[test]
    fn shape_is_checked() {
        assert!(Basis::new(vec![]).is_err());
        assert!(Basis::new(vec![vec![1, 2]]).is_err());
    }

    #[test]
    fn parallel_detection() {
        assert!(parallel(&[2, -4, 6], &[-1, 2, -3]));
        assert!(!parallel(&[1, 0], &[1, 1]));
        assert!(parallel(&[0, 0], &[3, 1]));
    }
}
