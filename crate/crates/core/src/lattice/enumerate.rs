use num_traits::ToPrimitive;

use super::{gram_schmidt, norm_sq, Basis, LatticeError};

/// Maximum number of coefficient vectors or points any enumeration may visit.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortVector {
    pub coeffs: Vec<i64>,
    pub vector: Vec<i64>,
    pub norm_sq: i128,
}

impl ShortVector {
    pub fn norm(&self) -> f64 {
        (self.norm_sq as f64).sqrt()
    }
}

fn box_size(n: usize, bound: i64) -> u128 {
    let side = 2 * bound.unsigned_abs() as u128 + 1;
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.saturating_mul(side);
    }
    total
}

/// Calls `visit` on every nonzero c ∈ [−bound, bound]ⁿ whose first nonzero entry is
/// positive, in increasing lexicographic order, together with Σ c_i b_i.
pub(crate) fn for_each_half_box<F>(basis: &Basis, bound: i64, mut visit: F) -> Result<(), LatticeError>
where
    F: FnMut(&[i64], &[i64]),
{
    let n = basis.dim();
    let needed = box_size(n, bound);
    if needed > ENUMERATION_BUDGET {
        return Err(LatticeError::BudgetExceeded {
            needed,
            budget: ENUMERATION_BUDGET,
        });
    }
    let mut c = vec![-bound; n];
    let mut v = basis.combine(&c)?;
    loop {
        let first = c.iter().find(|&&x| x != 0);
        if matches!(first, Some(&x) if x > 0) {
            visit(&c, &v);
        }
        // Odometer step on the last coordinate, updating v incrementally.
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            if c[i] < bound {
                c[i] += 1;
                for (vk, bk) in v.iter_mut().zip(basis.row(i)) {
                    *vk = vk.checked_add(*bk).ok_or(LatticeError::Overflow)?;
                }
                break;
            }
            let span = 2 * bound;
            for (vk, bk) in v.iter_mut().zip(basis.row(i)) {
                *vk = bk
                    .checked_mul(span)
                    .and_then(|d| vk.checked_sub(d))
                    .ok_or(LatticeError::Overflow)?;
            }
            c[i] = -bound;
        }
    }
}

/// Shortest nonzero Σ c_i b_i over |c_i| ≤ `coeff_bound`.
///
/// Ties go to the lexicographically smallest c among those whose first nonzero
/// entry is positive.
pub fn shortest_vector_bruteforce(basis: &Basis, coeff_bound: i64) -> Result<ShortVector, LatticeError> {
    if coeff_bound < 1 {
        return Err(LatticeError::Invalid("coefficient bound must be at least 1".into()));
    }
    gram_schmidt(basis)?;
    let mut best: Option<ShortVector> = None;
    for_each_half_box(basis, coeff_bound, |c, v| {
        let ns = norm_sq(v);
        // Enumeration order is lexicographic, so strict improvement keeps the first tie.
        if best.as_ref().is_none_or(|b| ns < b.norm_sq) {
            best = Some(ShortVector {
                coeffs: c.to_vec(),
                vector: v.to_vec(),
                norm_sq: ns,
            });
        }
    })?;
    best.ok_or(LatticeError::Degenerate)
}

/// All lattice points v with ‖v − center‖ ≤ radius, as (coefficients, vector) pairs.
pub fn lattice_points_in_ball(
    basis: &Basis,
    center: &[f64],
    radius: f64,
) -> Result<Vec<(Vec<i64>, Vec<i64>)>, LatticeError> {
    BallEnumerator::new(basis)?.points(center, radius)
}

/// Fincke–Pohst enumeration on a floating Gram–Schmidt decomposition with a
/// small slack, followed by a norm filter on the integer points. The
/// decomposition is computed once, for repeated queries on one basis.
#[derive(Clone, Debug)]
pub struct BallEnumerator {
    basis: Basis,
    mu: Vec<Vec<f64>>,
    bn: Vec<f64>,
    bstar: Vec<Vec<f64>>,
}

impl BallEnumerator {
    pub fn new(basis: &Basis) -> Result<Self, LatticeError> {
        let gs = gram_schmidt(basis)?;
        let to_f64 = |rows: &[Vec<num_rational::BigRational>]| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|r| r.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect())
                .collect()
        };
        Ok(BallEnumerator {
            basis: basis.clone(),
            mu: to_f64(&gs.mu),
            bn: gs.norms_sq_f64(),
            bstar: to_f64(&gs.bstar),
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn points(&self, center: &[f64], radius: f64) -> Result<Vec<(Vec<i64>, Vec<i64>)>, LatticeError> {
        let basis = &self.basis;
        let n = basis.dim();
        if center.len() != n {
            return Err(LatticeError::Invalid(format!(
                "centre of length {} in dimension {n}",
                center.len()
            )));
        }
        let (mu, bn, bstar) = (&self.mu, &self.bn, &self.bstar);
        // Coordinates of the centre in the basis: y with Σ y_i b_i = center, via b*_j.
        let mut y = vec![0.0; n];
        for j in (0..n).rev() {
            let proj: f64 = center.iter().zip(&bstar[j]).map(|(a, b)| a * b).sum::<f64>() / bn[j];
            let tail: f64 = (j + 1..n).map(|i| y[i] * mu[i][j]).sum();
            y[j] = proj - tail;
        }
        self.search(center, radius, &y)
    }

    fn search(&self, center: &[f64], radius: f64, y: &[f64]) -> Result<Vec<(Vec<i64>, Vec<i64>)>, LatticeError> {
        let basis = &self.basis;
        let n = basis.dim();
        let (mu, bn) = (&self.mu, &self.bn);
        let r2 = radius * radius;
        let slack = 1e-9 * (1.0 + r2);
        let mut out = Vec::new();
        let mut c = vec![0i64; n];
        let mut visited: u128 = 0;

        #[allow(clippy::too_many_arguments)]
        fn recurse(
            j: usize,
            partial: f64,
            c: &mut Vec<i64>,
            y: &[f64],
            mu: &[Vec<f64>],
            bn: &[f64],
            r2: f64,
            slack: f64,
            basis: &Basis,
            center: &[f64],
            out: &mut Vec<(Vec<i64>, Vec<i64>)>,
            visited: &mut u128,
        ) -> Result<(), LatticeError> {
            let n = c.len();
            let shift: f64 = (j + 1..n).map(|i| (c[i] as f64 - y[i]) * mu[i][j]).sum();
            let centre_j = y[j] - shift;
            let rem = r2 + slack - partial;
            if rem < 0.0 {
                return Ok(());
            }
            let w = (rem / bn[j]).sqrt();
            let lo = (centre_j - w).ceil() as i64;
            let hi = (centre_j + w).floor() as i64;
            for cj in lo..=hi {
                *visited += 1;
                if *visited > ENUMERATION_BUDGET {
                    return Err(LatticeError::BudgetExceeded {
                        needed: *visited,
                        budget: ENUMERATION_BUDGET,
                    });
                }
                c[j] = cj;
                let d = cj as f64 - centre_j;
                let p = partial + d * d * bn[j];
                if p > r2 + slack {
                    continue;
                }
                if j == 0 {
                    let v = basis.combine(c)?;
                    let dist: f64 = v.iter().zip(center).map(|(a, b)| (*a as f64 - b).powi(2)).sum();
                    if dist <= r2 * (1.0 + 1e-12) {
                        out.push((c.clone(), v));
                    }
                } else {
                    recurse(j - 1, p, c, y, mu, bn, r2, slack, basis, center, out, visited)?;
                }
            }
            c[j] = 0;
            Ok(())
        }

        recurse(
            n - 1,
            0.0,
            &mut c,
            &y,
            &mu,
            &bn,
            r2,
            slack,
            basis,
            center,
            &mut out,
            &mut visited,
        )?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bruteforce_examples() {
        let b = Basis::new(vec![vec![5, 0], vec![0, 1]]).unwrap();
        let s = shortest_vector_bruteforce(&b, 3).unwrap();
        assert_eq!(s.coeffs, vec![0, 1]);
        assert_eq!(s.norm_sq, 1);

        let s = shortest_vector_bruteforce(&Basis::identity(3), 2).unwrap();
        assert_eq!(s.coeffs, vec![0, 0, 1]);

        let b = Basis::new(vec![vec![2, 0], vec![1, 2]]).unwrap();
        let s = shortest_vector_bruteforce(&b, 3).unwrap();
        assert_eq!(s.coeffs, vec![1, 0]);
        assert_eq!(s.norm(), 2.0);
    }

    #[test]
    fn budget_enforced() {
        let err = shortest_vector_bruteforce(&Basis::identity(6), 20).unwrap_err();
        assert!(matches!(err, LatticeError::BudgetExceeded { .. }));
    }

    #[test]
    fn ball_enumeration_matches_box_scan() {
        let b = Basis::new(vec![vec![3, 1], vec![1, 4]]).unwrap();
        let center = [2.3, -1.7];
        let radius = 6.5;
        let mut got: Vec<Vec<i64>> = lattice_points_in_ball(&b, &center, radius)
            .unwrap()
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        got.sort();
        let mut want = Vec::new();
        for c0 in -10..=10 {
            for c1 in -10..=10 {
                let v = b.combine(&[c0, c1]).unwrap();
                let d: f64 = v.iter().zip(&center).map(|(a, c)| (*a as f64 - c).powi(2)).sum();
                if d <= radius * radius {
                    want.push(v);
                }
            }
        }
        want.sort();
        assert_eq!(got, want);
    }
}
