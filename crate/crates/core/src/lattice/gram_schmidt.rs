use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{dot_rational, rational, Basis, LatticeError};

/// Exact Gram–Schmidt data for a basis.
///
/// `mu[i][j]` is ⟨b_i, b*_j⟩ / ‖b*_j‖² for j < i, one on the diagonal and
/// zero above it.
#[derive(Clone, Debug, PartialEq)]
pub struct GramSchmidt {
    pub bstar: Vec<Vec<BigRational>>,
    pub mu: Vec<Vec<BigRational>>,
    pub norms_sq: Vec<BigRational>,
}

pub fn gram_schmidt(basis: &Basis) -> Result<GramSchmidt, LatticeError> {
    let n = basis.dim();
    let rows: Vec<Vec<BigRational>> = basis
        .rows()
        .iter()
        .map(|r| r.iter().map(|&x| rational(x)).collect())
        .collect();
    let mut bstar: Vec<Vec<BigRational>> = Vec::with_capacity(n);
    let mut norms_sq: Vec<BigRational> = Vec::with_capacity(n);
    let mut mu = vec![vec![BigRational::zero(); n]; n];
    for i in 0..n {
        let mut v = rows[i].clone();
        for j in 0..i {
            let m = dot_rational(&rows[i], &bstar[j]) / &norms_sq[j];
            for (vk, bk) in v.iter_mut().zip(&bstar[j]) {
                *vk -= &m * bk;
            }
            mu[i][j] = m;
        }
        mu[i][i] = BigRational::one();
        let ns = dot_rational(&v, &v);
        if ns.is_zero() {
            return Err(LatticeError::Degenerate);
        }
        bstar.push(v);
        norms_sq.push(ns);
    }
    Ok(GramSchmidt { bstar, mu, norms_sq })
}

impl GramSchmidt {
    pub fn dim(&self) -> usize {
        self.bstar.len()
    }

    /// Checks pairwise orthogonality of the b*_i exactly.
    pub fn is_orthogonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..i).all(|j| dot_rational(&self.bstar[i], &self.bstar[j]).is_zero()))
    }

    /// Checks b_i = b*_i + Σ_{j<i} μ_ij b*_j exactly.
    pub fn reconstructs(&self, basis: &Basis) -> bool {
        let n = self.dim();
        (0..n).all(|i| {
            (0..n).all(|k| {
                let mut acc = self.bstar[i][k].clone();
                for j in 0..i {
                    acc += &self.mu[i][j] * &self.bstar[j][k];
                }
                acc == rational(basis.row(i)[k])
            })
        })
    }

    pub fn norms_sq_f64(&self) -> Vec<f64> {
        use num_traits::ToPrimitive;
        self.norms_sq
            .iter()
            .map(|x| x.to_f64().unwrap_or(f64::INFINITY))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn identity_is_fixed() {
        let gs = gram_schmidt(&Basis::identity(2)).unwrap();
        assert_eq!(gs.bstar, vec![vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(1, 1)]]);
        assert_eq!(gs.mu[1][0], q(0, 1));
        assert_eq!(gs.mu[0][0], q(1, 1));
    }

    #[test]
    fn projection_example() {
        let b = Basis::new(vec![vec![2, 0], vec![1, 2]]).unwrap();
        let gs = gram_schmidt(&b).unwrap();
        assert_eq!(gs.bstar[1], vec![q(0, 1), q(2, 1)]);
        assert_eq!(gs.mu[1][0], q(1, 2));
        assert!(gs.is_orthogonal());
        assert!(gs.reconstructs(&b));
    }

    #[test]
    fn dependent_rows_rejected() {
        let b = Basis::new(vec![vec![1, 1], vec![2, 2]]).unwrap();
        assert_eq!(gram_schmidt(&b), Err(LatticeError::Degenerate));
    }
}
