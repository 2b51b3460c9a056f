//! Arithmetic q-matchings on {0, …, N−1} and their intersections with target sets.

use serde::{Deserialize, Serialize};

use crate::subsetsum::TargetSet;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MatchingError {
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatchingKind {
    First,
    Second,
}

impl MatchingKind {
    pub fn index(self) -> u8 {
        match self {
            MatchingKind::First => 1,
            MatchingKind::Second => 2,
        }
    }
}

/// f¹_q or f²_q on Z_N.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatchingDesc {
    pub kind: MatchingKind,
    pub step: u64,
    pub modulus: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// f(t) > t.
    Lower,
    /// f(t) < t.
    Upper,
}

impl MatchingDesc {
    pub fn new(kind: MatchingKind, step: u64, modulus: u64) -> Self {
        MatchingDesc { kind, step, modulus }
    }

    pub fn eval(&self, t: u64) -> Option<u64> {
        let (q, n) = (self.step, self.modulus);
        if q == 0 || t >= n {
            return None;
        }
        let low_half = t % (2 * q) < q;
        let up = match self.kind {
            MatchingKind::First => low_half,
            MatchingKind::Second => !low_half,
        };
        if up {
            (t + q < n).then_some(t + q)
        } else {
            t.checked_sub(q)
        }
    }

    /// Which part of the domain partition t belongs to, if f(t) is defined.
    pub fn side(&self, t: u64) -> Option<Side> {
        self.eval(t).map(|u| if u > t { Side::Lower } else { Side::Upper })
    }

    /// (A₁(f), A₂(f)).
    pub fn partition(&self) -> (Vec<u64>, Vec<u64>) {
        let mut a1 = Vec::new();
        let mut a2 = Vec::new();
        for t in 0..self.modulus {
            match self.side(t) {
                Some(Side::Lower) => a1.push(t),
                Some(Side::Upper) => a2.push(t),
                None => {}
            }
        }
        (a1, a2)
    }

    pub fn domain_size(&self) -> usize {
        (0..self.modulus).filter(|&t| self.eval(t).is_some()).count()
    }

    /// #{t ∈ T : f(t) ∈ T}.
    pub fn intersection_size(&self, set: &TargetSet) -> usize {
        set.iter()
            .filter(|&t| self.eval(t).is_some_and(|u| set.contains(u)))
            .count()
    }
}

/// f¹ and f² at steps q, 2q, …, k_max·q, ordered by multiple and then kind.
pub fn candidate_matchings(q: u64, k_max: u64, modulus: u64) -> Vec<MatchingDesc> {
    (1..=k_max)
        .flat_map(|k| {
            [MatchingKind::First, MatchingKind::Second]
                .into_iter()
                .map(move |kind| MatchingDesc::new(kind, k * q, modulus))
        })
        .collect()
}

/// The first candidate matching whose intersection with `set` reaches `threshold`.
pub fn find_good_matching(
    set: &TargetSet,
    q: u64,
    k_max: u64,
    threshold: usize,
) -> Result<Option<MatchingDesc>, MatchingError> {
    let n = set.modulus();
    if q == 0 || q.saturating_mul(k_max) >= n {
        return Err(MatchingError::Precondition(format!(
            "need 0 < q·k_max < N, got q={q}, k_max={k_max}, N={n}"
        )));
    }
    Ok(candidate_matchings(q, k_max, n)
        .into_iter()
        .find(|f| f.intersection_size(set) >= threshold))
}

/// Default good-matching threshold, |S(A)|/8.
pub fn default_threshold(set: &TargetSet) -> usize {
    set.len() / 8
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PairDensity {
    pub step: u64,
    pub pairs: usize,
}

/// Best q′ ∈ {q, 2q, …, 4sq} by #{t ∈ T : t + q′ ∈ T}; ties go to the smaller q′.
///
/// Requires |T|·s ≥ N and 8sq < N.
pub fn check_pair_density(set: &TargetSet, q: u64, s: u64) -> Result<PairDensity, MatchingError> {
    let n = set.modulus();
    if s == 0 || q == 0 {
        return Err(MatchingError::Precondition("q and s must be positive".into()));
    }
    if (set.len() as u64) * s < n {
        return Err(MatchingError::Precondition(format!(
            "|T| = {} is below N/s = {}/{}",
            set.len(),
            n,
            s
        )));
    }
    if 8 * s * q >= n {
        return Err(MatchingError::Precondition(format!("q = {q} is not below N/(8s)")));
    }
    let members: Vec<u64> = set.iter().collect();
    let mut best = PairDensity { step: q, pairs: 0 };
    for k in 1..=4 * s {
        let step = k * q;
        let pairs = members
            .iter()
            .filter(|&&t| t + step < n && set.contains(t + step))
            .count();
        if pairs > best.pairs {
            best = PairDensity { step, pairs };
        }
    }
    Ok(best)
}

/// N/(32 s³).
pub fn pair_density_bound(n: u64, s: u64) -> f64 {
    n as f64 / (32.0 * (s as f64).powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f1(q: u64, n: u64) -> MatchingDesc {
        MatchingDesc::new(MatchingKind::First, q, n)
    }

    fn f2(q: u64, n: u64) -> MatchingDesc {
        MatchingDesc::new(MatchingKind::Second, q, n)
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(f1(2, 16).eval(1), Some(3));
        assert_eq!(f1(2, 16).eval(3), Some(1));
        assert_eq!(f2(2, 16).eval(1), None);
        assert_eq!(f1(20, 16).eval(3), None);
    }

    #[test]
    fn partition_examples() {
        assert_eq!(f1(1, 4).partition(), (vec![0, 2], vec![1, 3]));
        assert_eq!(f1(4, 4).partition(), (vec![], vec![]));
        for q in 1..10 {
            for f in [f1(q, 37), f2(q, 37)] {
                let (a1, a2) = f.partition();
                assert_eq!(a1.len(), a2.len());
                let mut image: Vec<u64> = a1.iter().map(|&t| f.eval(t).unwrap()).collect();
                image.sort();
                assert_eq!(image, a2);
            }
        }
    }

    #[test]
    fn intersection_examples() {
        let n = 8;
        assert_eq!(f1(1, n).intersection_size(&TargetSet::full(n)), f1(1, n).domain_size());
        let evens = TargetSet::from_iter(n, (0..n).filter(|t| t % 2 == 0));
        assert_eq!(f1(1, n).intersection_size(&evens), 0);
        let t = TargetSet::from_iter(n, [0, 1, 4, 5]);
        assert_eq!(f1(1, n).intersection_size(&t), 4);
    }

    #[test]
    fn good_matching_search() {
        let n = 64;
        let full = TargetSet::full(n);
        assert_eq!(find_good_matching(&full, 1, 16, 8).unwrap(), Some(f1(1, n)));
        let blocks = TargetSet::from_iter(n, (0..n).filter(|t| t % 4 < 2));
        let got = find_good_matching(&blocks, 1, 16, default_threshold(&blocks))
            .unwrap()
            .unwrap();
        assert!(got.intersection_size(&blocks) >= default_threshold(&blocks));
        assert_eq!(find_good_matching(&full, 1, 16, 65).unwrap(), None);
        assert!(find_good_matching(&full, 4, 16, 1).is_err());
    }

    #[test]
    fn pair_density_examples() {
        let n = 64;
        let d = check_pair_density(&TargetSet::full(n), 1, 2).unwrap();
        assert_eq!(d, PairDensity { step: 1, pairs: 63 });
        let n = 243;
        let ap = TargetSet::from_iter(n, (0..n).step_by(3));
        let d = check_pair_density(&ap, 1, 3).unwrap();
        assert_eq!(d.step % 3, 0);
        assert!(d.pairs as f64 >= pair_density_bound(n, 3));
        assert!(check_pair_density(&TargetSet::from_iter(n, [1]), 1, 3).is_err());
    }
}
