//! Deterministic subset-sum oracles modulo N.
//!
//! An oracle maps (A, t, N) to the lexicographically smallest subset of A
//! summing to t mod N, or to "error". Subsets are bitmasks with bit i set when
//! element i is chosen, and lexicographic order is the integer order of the
//! mask, so the empty subset is the answer for t = 0.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{indexed_stream, mix64};

pub const EXHAUSTIVE_MAX_R: usize = 30;
pub const MITM_MAX_R: usize = 40;
/// Largest 2^r for which the full set S(A) is materialized.
pub const SET_BUDGET_LOG2: usize = 26;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SubsetSumError {
    #[error("r = {r} exceeds the limit {limit} for the {strategy} strategy")]
    TooLarge {
        r: usize,
        limit: usize,
        strategy: &'static str,
    },
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("answer fraction must lie in (0, 1], got {0}")]
    BadFraction(f64),
    #[error("unknown oracle strategy '{0}'")]
    UnknownStrategy(String),
    #[error("csv: {0}")]
    Csv(String),
}

/// ⌈log₂ n⌉, with ⌈log₂ 1⌉ = 0.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// r = ⌈log₂ N⌉ + 4.
pub fn default_r(n: u64) -> usize {
    ceil_log2(n) as usize + 4
}

pub fn random_sequence<R: Rng + ?Sized>(r: usize, n: u64, rng: &mut R) -> Vec<u64> {
    (0..r).map(|_| rng.random_range(0..n)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Subset(pub u64);

impl Subset {
    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn indices(self) -> Vec<usize> {
        (0..64).filter(|&i| self.contains(i)).collect()
    }

    pub fn sum(self, a: &[u64], n: u64) -> u64 {
        a.iter()
            .enumerate()
            .filter(|(i, _)| self.contains(*i))
            .fold(0u64, |acc, (_, &x)| ((acc as u128 + x as u128) % n as u128) as u64)
    }

    /// α₁…α_r as a string of 0/1 characters, element 1 first.
    pub fn bitstring(self, r: usize) -> String {
        (0..r).map(|i| if self.contains(i) { '1' } else { '0' }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetSumInstance {
    pub a: Vec<u64>,
    pub t: u64,
    pub n: u64,
}

impl SubsetSumInstance {
    pub fn new(a: Vec<u64>, t: u64, n: u64) -> Result<Self, SubsetSumError> {
        if n == 0 {
            return Err(SubsetSumError::ZeroModulus);
        }
        let a = a.into_iter().map(|x| x % n).collect();
        Ok(SubsetSumInstance { a, t: t % n, n })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum SubsetSumOracle {
    Exhaustive,
    MeetInMiddle,
    /// Answers only targets t selected by a seed-keyed hash, a fraction ≈ `fraction` of Z_N.
    Unreliable {
        base: Box<SubsetSumOracle>,
        fraction: f64,
        seed: u64,
    },
}

pub fn wrap_unreliable(base: SubsetSumOracle, fraction: f64, seed: u64) -> Result<SubsetSumOracle, SubsetSumError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(SubsetSumError::BadFraction(fraction));
    }
    Ok(SubsetSumOracle::Unreliable {
        base: Box::new(base),
        fraction,
        seed,
    })
}

fn selected(seed: u64, fraction: f64, t: u64) -> bool {
    if fraction >= 1.0 {
        return true;
    }
    let h = mix64(mix64(seed) ^ t);
    (h as f64) < fraction * 18_446_744_073_709_551_616.0
}

impl SubsetSumOracle {
    /// Parses `exhaustive`, `mitm` / `meet-in-middle`, or `unreliable:P` (over exhaustive).
    pub fn parse(spec: &str, seed: u64) -> Result<Self, SubsetSumError> {
        let s = spec.trim().to_ascii_lowercase();
        match s.as_str() {
            "exhaustive" => Ok(SubsetSumOracle::Exhaustive),
            "mitm" | "meet-in-middle" | "meet_in_middle" => Ok(SubsetSumOracle::MeetInMiddle),
            _ => {
                let p = s
                    .strip_prefix("unreliable:")
                    .ok_or_else(|| SubsetSumError::UnknownStrategy(spec.to_string()))?;
                let p: f64 = p
                    .parse()
                    .map_err(|_| SubsetSumError::UnknownStrategy(spec.to_string()))?;
                wrap_unreliable(SubsetSumOracle::Exhaustive, p, seed)
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            SubsetSumOracle::Exhaustive => "exhaustive".into(),
            SubsetSumOracle::MeetInMiddle => "mitm".into(),
            SubsetSumOracle::Unreliable { base, fraction, .. } => format!("unreliable:{fraction}/{}", base.name()),
        }
    }

    fn base_and_filter(&self) -> (&SubsetSumOracle, Option<(u64, f64)>) {
        match self {
            SubsetSumOracle::Unreliable { base, fraction, seed } => {
                let (b, inner) = base.base_and_filter();
                // Nested wrappers: keep the innermost base and compose the filters by
                // mixing seeds; in practice there is at most one level.
                match inner {
                    None => (b, Some((*seed, *fraction))),
                    Some((s2, f2)) => (b, Some((mix64(seed ^ s2), fraction * f2))),
                }
            }
            other => (other, None),
        }
    }

    /// Precomputes per-sequence data for repeated queries on the same A.
    pub fn prepare(&self, a: &[u64], n: u64) -> Result<PreparedOracle, SubsetSumError> {
        if n == 0 {
            return Err(SubsetSumError::ZeroModulus);
        }
        let a: Vec<u64> = a.iter().map(|x| x % n).collect();
        let r = a.len();
        let (base, filter) = self.base_and_filter();
        let kind = match base {
            SubsetSumOracle::Exhaustive => {
                if r > EXHAUSTIVE_MAX_R {
                    return Err(SubsetSumError::TooLarge {
                        r,
                        limit: EXHAUSTIVE_MAX_R,
                        strategy: "exhaustive",
                    });
                }
                let mut prefix = vec![0u64; r + 1];
                for i in 0..r {
                    prefix[i + 1] = (prefix[i] + a[i]) % n;
                }
                Kind::Exhaustive { prefix }
            }
            SubsetSumOracle::MeetInMiddle => {
                if r > MITM_MAX_R {
                    return Err(SubsetSumError::TooLarge {
                        r,
                        limit: MITM_MAX_R,
                        strategy: "meet-in-middle",
                    });
                }
                Kind::Mitm(Mitm::build(&a, n))
            }
            SubsetSumOracle::Unreliable { .. } => unreachable!("filters are unwrapped above"),
        };
        Ok(PreparedOracle { a, n, kind, filter })
    }

    pub fn solve(&self, a: &[u64], t: u64, n: u64) -> Result<Option<Subset>, SubsetSumError> {
        Ok(self.prepare(a, n)?.solve(t))
    }

    /// S(A): the targets this oracle answers.
    pub fn solvable_targets(&self, a: &[u64], n: u64) -> Result<TargetSet, SubsetSumError> {
        let prepared = self.prepare(a, n)?;
        prepared.solvable_targets()
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Exhaustive { prefix: Vec<u64> },
    Mitm(Mitm),
}

#[derive(Clone, Debug)]
struct Mitm {
    low_bits: usize,
    /// Minimal low mask per residue, for small moduli.
    table: Option<Vec<u32>>,
    /// Fallback for large moduli.
    map: Option<HashMap<u64, u32>>,
    high_sums: Vec<u64>,
}

impl Mitm {
    fn build(a: &[u64], n: u64) -> Self {
        let r = a.len();
        let low_bits = r.div_ceil(2);
        let low_sums = all_sums(&a[..low_bits], n);
        let high_sums = all_sums(&a[low_bits..], n);
        let (table, map) = if n <= 1 << 20 {
            let mut t = vec![u32::MAX; n as usize];
            for (mask, &s) in low_sums.iter().enumerate() {
                let slot = &mut t[s as usize];
                if *slot == u32::MAX {
                    *slot = mask as u32;
                }
            }
            (Some(t), None)
        } else {
            let mut m = HashMap::with_capacity(low_sums.len());
            for (mask, &s) in low_sums.iter().enumerate() {
                m.entry(s).or_insert(mask as u32);
            }
            (None, Some(m))
        };
        Mitm {
            low_bits,
            table,
            map,
            high_sums,
        }
    }

    fn lookup(&self, s: u64) -> Option<u32> {
        match (&self.table, &self.map) {
            (Some(t), _) => match t[s as usize] {
                u32::MAX => None,
                m => Some(m),
            },
            (None, Some(m)) => m.get(&s).copied(),
            _ => None,
        }
    }

    fn solve(&self, t: u64, n: u64) -> Option<Subset> {
        // High masks in increasing order; the first that admits a low completion
        // gives the smallest full mask, completed by the smallest low mask.
        for (high, &hs) in self.high_sums.iter().enumerate() {
            let need = (t + n - hs) % n;
            if let Some(low) = self.lookup(need) {
                return Some(Subset(((high as u64) << self.low_bits) | low as u64));
            }
        }
        None
    }
}

/// Subset sums of `a` indexed by mask.
fn all_sums(a: &[u64], n: u64) -> Vec<u64> {
    let mut sums = vec![0u64; 1 << a.len()];
    for (i, &x) in a.iter().enumerate() {
        let half = 1usize << i;
        for m in 0..half {
            let s = sums[m] + x;
            sums[m + half] = if s >= n { s - n } else { s };
        }
    }
    sums
}

/// An oracle specialized to one sequence A.
#[derive(Clone, Debug)]
pub struct PreparedOracle {
    a: Vec<u64>,
    n: u64,
    kind: Kind,
    filter: Option<(u64, f64)>,
}

impl PreparedOracle {
    pub fn sequence(&self) -> &[u64] {
        &self.a
    }

    pub fn modulus(&self) -> u64 {
        self.n
    }

    pub fn solve(&self, t: u64) -> Option<Subset> {
        let t = t % self.n;
        if let Some((seed, p)) = self.filter {
            if !selected(seed, p, t) {
                return None;
            }
        }
        match &self.kind {
            Kind::Exhaustive { prefix } => exhaustive_scan(&self.a, prefix, t, self.n),
            Kind::Mitm(m) => m.solve(t, self.n),
        }
    }

    pub fn solvable_targets(&self) -> Result<TargetSet, SubsetSumError> {
        let r = self.a.len();
        if r > SET_BUDGET_LOG2 {
            return Err(SubsetSumError::TooLarge {
                r,
                limit: SET_BUDGET_LOG2,
                strategy: "target-set enumeration",
            });
        }
        let mut set = TargetSet::empty(self.n);
        for s in all_sums(&self.a, self.n) {
            set.insert(s);
        }
        if let Some((seed, p)) = self.filter {
            set.retain(|t| selected(seed, p, t));
        }
        Ok(set)
    }
}

fn exhaustive_scan(a: &[u64], prefix: &[u64], t: u64, n: u64) -> Option<Subset> {
    let r = a.len();
    let mut sum = 0u64;
    let last = if r == 64 { u64::MAX } else { (1u64 << r) - 1 };
    let mut mask = 0u64;
    loop {
        if sum == t {
            return Some(Subset(mask));
        }
        if mask == last {
            return None;
        }
        // mask → mask+1 clears the k trailing ones and sets bit k.
        let k = mask.trailing_ones() as usize;
        let mut s = sum + (n - prefix[k]);
        if s >= n {
            s -= n;
        }
        s += a[k];
        if s >= n {
            s -= n;
        }
        sum = s;
        mask += 1;
    }
}

/// A subset of Z_N stored as a bitset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetSet {
    n: u64,
    words: Vec<u64>,
}

impl TargetSet {
    pub fn empty(n: u64) -> Self {
        TargetSet {
            n,
            words: vec![0; (n as usize).div_ceil(64)],
        }
    }

    pub fn full(n: u64) -> Self {
        let mut s = Self::empty(n);
        for t in 0..n {
            s.insert(t);
        }
        s
    }

    pub fn from_iter<I: IntoIterator<Item = u64>>(n: u64, items: I) -> Self {
        let mut s = Self::empty(n);
        for t in items {
            s.insert(t % n);
        }
        s
    }

    pub fn modulus(&self) -> u64 {
        self.n
    }

    pub fn insert(&mut self, t: u64) {
        self.words[(t / 64) as usize] |= 1 << (t % 64);
    }

    pub fn contains(&self, t: u64) -> bool {
        t < self.n && self.words[(t / 64) as usize] >> (t % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.n).filter(move |&t| self.contains(t))
    }

    fn retain<F: Fn(u64) -> bool>(&mut self, keep: F) {
        for t in 0..self.n {
            if self.contains(t) && !keep(t) {
                self.words[(t / 64) as usize] &= !(1 << (t % 64));
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LegalFraction {
    pub r: usize,
    pub n: u64,
    pub trials: usize,
    /// Fraction of uniformly random (A, t) with no solution.
    pub fraction: f64,
    /// Half-width of the 95% Wilson score interval.
    pub half_width_95: f64,
}

pub fn wilson_half_width(successes: usize, trials: usize) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    z * ((p * (1.0 - p) / n) + z * z / (4.0 * n * n)).sqrt() / denom
}

/// Monte Carlo estimate of Pr_{A,t}[no subset of A sums to t mod N].
pub fn estimate_legal_fraction(r: usize, n: u64, trials: usize, seed: u64) -> Result<LegalFraction, SubsetSumError> {
    if n == 0 {
        return Err(SubsetSumError::ZeroModulus);
    }
    let oracle = SubsetSumOracle::Exhaustive;
    let mut misses = 0;
    for i in 0..trials {
        let mut rng = indexed_stream(seed, "legal-fraction", i as u64);
        let a = random_sequence(r, n, &mut rng);
        let t = rng.random_range(0..n);
        if oracle.solve(&a, t, n)?.is_none() {
            misses += 1;
        }
    }
    Ok(LegalFraction {
        r,
        n,
        trials,
        fraction: if trials == 0 {
            0.0
        } else {
            misses as f64 / trials as f64
        },
        half_width_95: wilson_half_width(misses, trials),
    })
}

/// Writes `A,t,N,answer` rows with A joined by ';' and the answer as α₁…α_r or `ERROR`.
pub fn write_csv<W: Write>(out: W, rows: &[(SubsetSumInstance, Option<Subset>)]) -> Result<(), SubsetSumError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| SubsetSumError::Csv(e.to_string());
    w.write_record(["A", "t", "N", "answer"]).map_err(err)?;
    for (inst, ans) in rows {
        let a = inst.a.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
        let answer = match ans {
            Some(s) => s.bitstring(inst.a.len()),
            None => "ERROR".into(),
        };
        w.write_record([a, inst.t.to_string(), inst.n.to_string(), answer])
            .map_err(err)?;
    }
    w.flush().map_err(|e| SubsetSumError::Csv(e.to_string()))
}
