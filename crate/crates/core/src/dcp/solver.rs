//! Phase estimation of d from TwoPointRoutine measurements.
//!
//! Everything here works from what a [`DcpWorld`] hands out publicly: register
//! outcomes, routine success flags and single measured bits.

use std::f64::consts::PI;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::world::{DcpWorld, QubitBasis, RoutineOutcome};
use super::DcpError;
use crate::matching::{candidate_matchings, MatchingDesc};
use crate::subsetsum::{default_r, SubsetSumOracle};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DcpConfig {
    /// Successful routine calls collected for each of R1 and R2.
    pub samples_per_arm: usize,
    /// Calls per arm before a candidate matching is abandoned.
    pub max_calls_per_arm: usize,
    pub k_max: u64,
    /// Stages continue until q_i reaches 4N/window.
    pub window: u64,
    pub hoeffding_delta: f64,
    /// Registers per routine call; ⌈log₂ N⌉ + 4 when unset.
    pub registers_per_call: Option<usize>,
    /// Run a fresh q = 1 estimate to pick among the final candidates.
    pub verify: bool,
}

impl Default for DcpConfig {
    fn default() -> Self {
        DcpConfig {
            samples_per_arm: 512,
            max_calls_per_arm: 512 * 64,
            k_max: 16,
            window: 64,
            hoeffding_delta: 1e-3,
            registers_per_call: None,
            verify: true,
        }
    }
}

impl DcpConfig {
    pub fn validate(&self) -> Result<(), DcpError> {
        if self.samples_per_arm == 0 || self.max_calls_per_arm < self.samples_per_arm {
            return Err(DcpError::Precondition(
                "need 0 < samples_per_arm ≤ max_calls_per_arm".into(),
            ));
        }
        if self.k_max == 0 || self.window == 0 {
            return Err(DcpError::Precondition("k_max and window must be positive".into()));
        }
        if !(self.hoeffding_delta > 0.0 && self.hoeffding_delta < 1.0) {
            return Err(DcpError::Precondition("hoeffding_delta must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmStats {
    pub calls: usize,
    pub successes: usize,
    pub ones: usize,
}

impl ArmStats {
    fn mean(&self) -> f64 {
        self.ones as f64 / self.successes as f64
    }
}

/// An estimate x of q′·d mod N for the matching step q′ that was used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub multiplier: u64,
    pub estimate: f64,
    pub modulus: u64,
    /// Hoeffding bound on |x − q′d mod N| (circular), at confidence 1 − δ.
    pub half_width: f64,
    pub matching: MatchingDesc,
    pub r1: ArmStats,
    pub r2: ArmStats,
    /// Candidate matchings abandoned before this one.
    pub abandoned: usize,
}

/// The angle θ ∈ [0, 2π) with (sin θ, cos θ) = (x, y), for a unit vector (x, y).
pub fn estimate_angle(x: f64, y: f64) -> f64 {
    let theta = if y >= 0.0 {
        2.0 * (x / (1.0 + y)).atan()
    } else {
        2.0 * 1f64.atan2(x / (1.0 - y))
    };
    theta.rem_euclid(2.0 * PI)
}

/// Lifts x ≈ q_next·d mod N onto the branch closest to (q_next/q_i)·x_i, giving
/// an estimate of q_next·d modulo q_next·N.
pub fn combine_estimates(x_i: f64, q_i: u64, x: f64, q_next: u64, n: u64) -> f64 {
    let n_f = n as f64;
    let predicted = q_next as f64 / q_i as f64 * x_i;
    let lifted = x + n_f * ((predicted - x) / n_f).round();
    lifted.rem_euclid(q_next as f64 * n_f)
}

/// All d ∈ Z_N with d·a ≡ b (mod N).
pub fn solve_congruence(a: u64, b: u64, n: u64) -> Vec<u64> {
    let (a, b) = ((a % n) as i128, (b % n) as i128);
    let n = n as i128;
    let g = a.gcd(&n);
    if b % g != 0 {
        return Vec::new();
    }
    let step = n / g;
    let e = (a / g).extended_gcd(&step);
    let d0 = ((b / g) * e.x).rem_euclid(step);
    (0..g).map(|k| (d0 + k * step) as u64).collect()
}

fn circular_distance(x: f64, y: f64, n: f64) -> f64 {
    let d = (x - y).rem_euclid(n);
    d.min(n - d)
}

fn routine_call(
    world: &mut DcpWorld,
    oracle: &SubsetSumOracle,
    r: usize,
    f: &MatchingDesc,
    basis: QubitBasis,
) -> Result<Option<u8>, DcpError> {
    let registers = world.sample_phase_registers(r)?;
    let a: Vec<u64> = registers.iter().map(|p| p.outcome()).collect();
    let prepared = oracle.prepare(&a, world.modulus())?;
    match world.two_point_routine(&registers, &prepared, f)? {
        RoutineOutcome::Failure => Ok(None),
        RoutineOutcome::Success { qubit, .. } => Ok(Some(world.measure_qubit(qubit, basis)?)),
    }
}

/// Estimates q′·d mod N for some q′ ∈ {q, 2q, …, k_max·q}.
///
/// Candidate matchings are tried in order; each gathers `samples_per_arm`
/// successful R1 and R2 calls, and is abandoned once that quota can no longer
/// be met within `max_calls_per_arm`.
pub fn routine_r3(
    world: &mut DcpWorld,
    oracle: &SubsetSumOracle,
    q: u64,
    config: &DcpConfig,
) -> Result<PhaseEstimate, DcpError> {
    config.validate()?;
    let n = world.modulus();
    if q == 0 || q >= n {
        return Err(DcpError::Precondition(format!("need 0 < q < N, got q = {q}")));
    }
    let r = config.registers_per_call.unwrap_or_else(|| default_r(n));
    let k_max = config.k_max.min((n - 1) / q);
    let quota = config.samples_per_arm;
    let cap = config.max_calls_per_arm;
    let mut abandoned = 0;
    for f in candidate_matchings(q, k_max, n) {
        let mut arms = [ArmStats::default(); 2];
        let mut starved = false;
        while arms.iter().any(|a| a.successes < quota) {
            let i = if arms[0].successes <= arms[1].successes && arms[0].successes < quota {
                0
            } else {
                1
            };
            let basis = if i == 0 { QubitBasis::R1 } else { QubitBasis::R2 };
            arms[i].calls += 1;
            if let Some(bit) = routine_call(world, oracle, r, &f, basis)? {
                arms[i].successes += 1;
                arms[i].ones += bit as usize;
            }
            if arms[i].successes + (cap - arms[i].calls) < quota {
                starved = true;
                break;
            }
        }
        if starved {
            abandoned += 1;
            continue;
        }
        let cos = 1.0 - 2.0 * arms[0].mean();
        let sin = 2.0 * arms[1].mean() - 1.0;
        let len = sin.hypot(cos);
        let (sin, cos) = if len > 0.0 { (sin / len, cos / len) } else { (0.0, 1.0) };
        let theta = estimate_angle(sin, cos);
        let n_f = n as f64;
        let eps = ((2.0 / config.hoeffding_delta).ln() / (2.0 * quota as f64)).sqrt();
        let angle_err = (16.0 * eps).min(PI);
        return Ok(PhaseEstimate {
            multiplier: f.step,
            estimate: (theta * n_f / (2.0 * PI)).rem_euclid(n_f),
            modulus: n,
            half_width: n_f * angle_err / (2.0 * PI),
            matching: f,
            r1: arms[0],
            r2: arms[1],
            abandoned,
        });
    }
    Err(DcpError::EstimationFailed {
        q,
        reason: format!("all {abandoned} candidate matchings ran out of calls"),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    /// q_i entering the stage (1 for the first).
    pub q_i: u64,
    /// Step actually used by the matching.
    pub q_prime: u64,
    /// Raw estimate of q′·d mod N.
    pub x: f64,
    /// q_{i+1} after the stage.
    pub q_next: u64,
    /// Estimate of q_{i+1}·d modulo q_{i+1}·N.
    pub x_combined: f64,
    pub successes: usize,
    pub calls: usize,
    pub half_width: f64,
    pub matching: MatchingDesc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub multiplier: u64,
    pub estimate: f64,
    pub half_width: f64,
    pub chosen: Option<u64>,
    /// The estimate lies within its half-width of the chosen candidate.
    pub consistent: bool,
    /// Another candidate predicts the same value.
    pub ambiguous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcpTranscript {
    pub n: u64,
    pub r: usize,
    pub q_hat: u64,
    pub stages: Vec<StageRecord>,
    pub d_prime: u64,
    /// All d with d·q̂ ≡ d′ (mod N).
    pub candidates: Vec<u64>,
    pub verification: Option<Verification>,
    pub termination: String,
    pub routine_calls: usize,
    pub registers_used: usize,
}

impl DcpTranscript {
    /// The verified candidate, or the only one.
    pub fn answer(&self) -> Option<u64> {
        match (&self.verification, self.candidates.as_slice()) {
            (Some(v), _) if v.consistent && !v.ambiguous => v.chosen,
            (_, [d]) => Some(*d),
            _ => None,
        }
    }
}

/// Recovers d through a cascade of R3 estimates at growing multipliers.
pub fn solve_dcp(
    world: &mut DcpWorld,
    oracle: &SubsetSumOracle,
    config: &DcpConfig,
) -> Result<DcpTranscript, DcpError> {
    config.validate()?;
    let n = world.modulus();
    let r = config.registers_per_call.unwrap_or_else(|| default_r(n));
    let mut calls = 0;
    let mut record = |est: &PhaseEstimate, stage: usize, q_i: u64, q_next: u64, x_combined: f64| {
        let used = est.r1.calls + est.r2.calls;
        calls += used;
        StageRecord {
            stage,
            q_i,
            q_prime: est.multiplier,
            x: est.estimate,
            q_next,
            x_combined,
            successes: est.r1.successes + est.r2.successes,
            calls: used,
            half_width: est.half_width,
            matching: est.matching,
        }
    };

    let first = routine_r3(world, oracle, 1, config)?;
    let q_hat = first.multiplier;
    let mut q_i = 1u64;
    let mut x_i = first.estimate;
    let mut stages = vec![record(&first, 1, 1, 1, x_i)];
    let limit = 4.0 * n as f64 / config.window as f64;
    let mut termination = format!("q_i reached 4N/window = {limit}");
    while (q_i as f64) < limit {
        let request = 2 * q_i * q_hat;
        if request >= n {
            termination = format!("next multiplier 2·q_i·q̂ = {request} is not below N");
            break;
        }
        let est = routine_r3(world, oracle, request, config)?;
        let q_next = est.multiplier / q_hat;
        let x_next = combine_estimates(x_i, q_i, est.estimate, q_next, n);
        let stage = stages.len() + 1;
        stages.push(record(&est, stage, q_i, q_next, x_next));
        q_i = q_next;
        x_i = x_next;
    }
    let d_prime = ((x_i / q_i as f64).round() as u64) % n;
    let candidates = solve_congruence(q_hat, d_prime, n);
    let verification = if config.verify && candidates.len() > 1 {
        let v = verify_candidates(world, oracle, &candidates, config)?;
        calls += v.1;
        Some(v.0)
    } else {
        None
    };
    Ok(DcpTranscript {
        n,
        r,
        q_hat,
        stages,
        d_prime,
        candidates,
        verification,
        termination,
        routine_calls: calls,
        registers_used: calls * r,
    })
}

/// Picks the candidate that best matches a fresh q = 1 estimate. Also returns
/// the number of routine calls spent.
pub fn verify_candidates(
    world: &mut DcpWorld,
    oracle: &SubsetSumOracle,
    candidates: &[u64],
    config: &DcpConfig,
) -> Result<(Verification, usize), DcpError> {
    let est = routine_r3(world, oracle, 1, config)?;
    let n = world.modulus();
    let n_f = n as f64;
    let k = est.multiplier;
    let predicted: Vec<u64> = candidates
        .iter()
        .map(|&c| ((k as u128 * c as u128) % n as u128) as u64)
        .collect();
    let best = predicted
        .iter()
        .enumerate()
        .map(|(i, &p)| (i, circular_distance(p as f64, est.estimate, n_f)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let (chosen, consistent, ambiguous) = match best {
        Some((i, dist)) => (
            Some(candidates[i]),
            dist <= est.half_width.max(0.5),
            predicted.iter().filter(|&&p| p == predicted[i]).count() > 1,
        ),
        None => (None, false, false),
    };
    Ok((
        Verification {
            multiplier: k,
            estimate: est.estimate,
            half_width: est.half_width,
            chosen,
            consistent,
            ambiguous,
        },
        est.r1.calls + est.r2.calls,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_examples() {
        assert!(estimate_angle(0.0, 1.0).abs() < 1e-12);
        assert!((estimate_angle(1.0, 0.0) - PI / 2.0).abs() < 1e-12);
        assert!((estimate_angle(0.0, -1.0) - PI).abs() < 1e-12);
        assert!((estimate_angle(-1.0, 0.0) - 3.0 * PI / 2.0).abs() < 1e-12);
        for i in 0..100 {
            let t = 2.0 * PI * i as f64 / 100.0;
            let got = estimate_angle(t.sin(), t.cos());
            assert!(circular_distance(got, t, 2.0 * PI) < 1e-9, "{t} -> {got}");
        }
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine_estimates(5.0, 1, 10.0, 2, 16), 10.0);
        assert_eq!(((41.0f64 / 8.0).round() as u64) % 16, 5);
        // Noise in x is absorbed as long as the lift is unambiguous.
        assert_eq!(combine_estimates(5.2, 1, 9.0, 2, 16), 9.0);
        assert_eq!(combine_estimates(15.0, 1, 13.5, 2, 16), 29.5);
    }

    #[test]
    fn congruence_solutions() {
        assert_eq!(solve_congruence(3, 9, 16), vec![3]);
        assert_eq!(solve_congruence(2, 6, 16), vec![3, 11]);
        assert!(solve_congruence(2, 5, 16).is_empty());
        for a in 1..32u64 {
            for b in 0..32u64 {
                let sols = solve_congruence(a, b, 32);
                let brute: Vec<u64> = (0..32).filter(|d| d * a % 32 == b).collect();
                assert_eq!(sols, brute);
            }
        }
    }

    #[test]
    fn recovers_small_shift() {
        let n = 64;
        for (seed, d) in [(1u64, 0u64), (2, 1), (3, 37), (4, 63)] {
            let mut world = DcpWorld::new(n, Some(d), None, seed).unwrap();
            let config = DcpConfig {
                samples_per_arm: 256,
                ..DcpConfig::default()
            };
            let t = solve_dcp(&mut world, &SubsetSumOracle::MeetInMiddle, &config).unwrap();
            assert_eq!(t.answer(), Some(d), "{t:?}");
        }
    }

    #[test]
    fn degenerate_modulus_two() {
        for d in 0..2 {
            let mut world = DcpWorld::new(2, Some(d), None, 9).unwrap();
            let t = solve_dcp(&mut world, &SubsetSumOracle::Exhaustive, &DcpConfig::default()).unwrap();
            assert_eq!(t.answer(), Some(d));
        }
    }
}
