use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{dot_rational, gram_schmidt, round_rational, Basis, GramSchmidt, LatticeError};

/// Output of [`lll_reduce`]: `basis.row(i) = Σ_j transform[i][j] · original.row(j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LllReduction {
    pub basis: Basis,
    pub transform: Vec<Vec<i64>>,
}

impl LllReduction {
    /// Re-expresses coefficients `c` w.r.t. the original basis in the reduced one.
    pub fn coefficients_in_reduced(&self, original_coeffs: &[i64]) -> Result<Vec<i64>, LatticeError> {
        // c_orig · B = c_red · T · B, so c_orig = c_red · T; solve by treating T as a basis.
        let t = Basis::new(self.transform.clone())?;
        t.coefficients_of(original_coeffs)
    }

    pub fn transform_determinant(&self) -> BigInt {
        Basis::new(self.transform.clone())
            .map(|t| t.determinant())
            .unwrap_or_else(|_| BigInt::zero())
    }
}

fn delta() -> BigRational {
    BigRational::new(BigInt::from(3), BigInt::from(4))
}

fn to_i64_rows(rows: &[Vec<BigInt>]) -> Result<Vec<Vec<i64>>, LatticeError> {
    rows.iter()
        .map(|r| r.iter().map(|x| x.to_i64().ok_or(LatticeError::Overflow)).collect())
        .collect()
}

fn gs_big(rows: &[Vec<BigInt>]) -> (Vec<Vec<BigRational>>, Vec<Vec<BigRational>>, Vec<BigRational>) {
    let n = rows.len();
    let rat: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().cloned().map(BigRational::from_integer).collect())
        .collect();
    let mut bstar: Vec<Vec<BigRational>> = Vec::with_capacity(n);
    let mut norms = Vec::with_capacity(n);
    let mut mu = vec![vec![BigRational::zero(); n]; n];
    for i in 0..n {
        let mut v = rat[i].clone();
        for j in 0..i {
            let m = dot_rational(&rat[i], &bstar[j]) / &norms[j];
            for (vk, bk) in v.iter_mut().zip(&bstar[j]) {
                *vk -= &m * bk;
            }
            mu[i][j] = m;
        }
        mu[i][i] = BigRational::one();
        norms.push(dot_rational(&v, &v));
        bstar.push(v);
    }
    (bstar, mu, norms)
}

/// LLL reduction with δ = 3/4 in exact rational arithmetic.
pub fn lll_reduce(basis: &Basis) -> Result<LllReduction, LatticeError> {
    // Rejects dependent input up front.
    gram_schmidt(basis)?;
    let n = basis.dim();
    let mut b: Vec<Vec<BigInt>> = basis
        .rows()
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut t: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..n).map(|j| BigInt::from(i64::from(i == j))).collect())
        .collect();
    let (_, mut mu, mut norms) = gs_big(&b);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut k = 1;
    while k < n {
        for j in (0..k).rev() {
            if mu[k][j].abs() > half {
                let r = round_rational(&mu[k][j]);
                let rr = BigRational::from_integer(r.clone());
                let (bj, tj) = (b[j].clone(), t[j].clone());
                for (x, y) in b[k].iter_mut().zip(&bj) {
                    *x -= &r * y;
                }
                for (x, y) in t[k].iter_mut().zip(&tj) {
                    *x -= &r * y;
                }
                for l in 0..=j {
                    let sub = &rr * &mu[j][l];
                    mu[k][l] -= sub;
                }
            }
        }
        let lhs = &norms[k];
        let rhs = (delta() - &mu[k][k - 1] * &mu[k][k - 1]) * &norms[k - 1];
        if *lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            t.swap(k, k - 1);
            let g = gs_big(&b);
            mu = g.1;
            norms = g.2;
            k = (k - 1).max(1);
        }
    }
    Ok(LllReduction {
        basis: Basis::new(to_i64_rows(&b)?)?,
        transform: to_i64_rows(&t)?,
    })
}

/// Checks |μ_ij| ≤ ½ for j < i and ‖b*_i‖² ≤ 2‖b*_{i+1}‖².
pub fn is_lll_reduced(basis: &Basis) -> Result<bool, LatticeError> {
    let gs = gram_schmidt(basis)?;
    Ok(satisfies_conditions(&gs))
}

pub(crate) fn satisfies_conditions(gs: &GramSchmidt) -> bool {
    let n = gs.dim();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let two = BigRational::from_integer(BigInt::from(2));
    let size_reduced = (0..n).all(|i| (0..i).all(|j| gs.mu[i][j].abs() <= half));
    let decay = (0..n.saturating_sub(1)).all(|i| gs.norms_sq[i] <= &two * &gs.norms_sq[i + 1]);
    size_reduced && decay
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_unchanged() {
        let r = lll_reduce(&Basis::identity(3)).unwrap();
        assert_eq!(r.basis, Basis::identity(3));
    }

    #[test]
    fn single_size_reduction() {
        let b = Basis::new(vec![vec![1, 0], vec![4, 1]]).unwrap();
        let r = lll_reduce(&b).unwrap();
        for row in r.basis.rows() {
            assert!(row == &vec![1, 0] || row == &vec![-1, 0] || row == &vec![0, 1] || row == &vec![0, -1]);
        }
        assert!(is_lll_reduced(&r.basis).unwrap());
        assert_eq!(r.transform_determinant().abs(), BigInt::one());
    }

    #[test]
    fn swaps_short_vector_first() {
        let b = Basis::new(vec![vec![5, 0], vec![0, 1]]).unwrap();
        let r = lll_reduce(&b).unwrap();
        assert_eq!(r.basis.row(0)[0], 0);
        assert_eq!(r.basis.row(0)[1].abs(), 1);
    }

    #[test]
    fn transform_maps_original_to_reduced() {
        let b = Basis::new(vec![vec![7, 3, 1], vec![12, 5, 2], vec![3, 9, 8]]).unwrap();
        let r = lll_reduce(&b).unwrap();
        assert_eq!(b.transformed(&r.transform).unwrap(), r.basis);
        assert!(is_lll_reduced(&r.basis).unwrap());
        assert_eq!(r.transform_determinant().abs(), BigInt::one());
    }

    #[test]
    fn degenerate_rejected() {
        let b = Basis::new(vec![vec![1, 1], vec![2, 2]]).unwrap();
        assert_eq!(lll_reduce(&b), Err(LatticeError::Degenerate));
    }
}
