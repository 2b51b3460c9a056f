//! The outer search over (l, i0, m) and candidate extraction.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::encode::{dcp_modulus, decode_difference};
use super::sampler::{
    smallest_prime_above, LatticeCosetSource, ReductionParams, SamplerKind, SamplerMode, TwoPointSampler,
};
use super::SvpError;
use crate::dcp::{solve_dcp, DcpConfig, DcpError, DcpWorld};
use crate::lattice::{norm_sq, LatticeInstance};
use crate::rng::{indexed_stream, mix64};
use crate::subsetsum::SubsetSumOracle;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvpConfig {
    /// Prime p; the smallest prime above n⁴ when unset.
    pub p: Option<u64>,
    /// Permit p ≤ n⁴.
    pub allow_small_p: bool,
    /// Coefficient range M; see [`default_range`].
    pub range: Option<u64>,
    pub mode: SamplerMode,
    pub sampler: SamplerKind,
    /// Cube side = cube_factor · l.
    pub cube_factor: f64,
    /// Ball radius = ball_factor · √n · l.
    pub ball_factor: f64,
    pub grid_scale: u64,
    pub dcp: DcpConfig,
    pub oracle: SubsetSumOracle,
    /// With `false` the LLL vector is returned without any DCP run.
    pub run_dcp: bool,
    /// Number of halvings of ‖b̄₁‖ tried; ⌈(n−1)/2⌉ when unset.
    pub length_steps: Option<usize>,
    /// Restricts the residues m tried; all of 1..p when unset.
    pub residues: Option<Vec<u64>>,
}

impl Default for SvpConfig {
    fn default() -> Self {
        SvpConfig {
            p: None,
            allow_small_p: false,
            range: None,
            mode: SamplerMode::Cube,
            sampler: SamplerKind::Exhaustive,
            cube_factor: 16.0,
            ball_factor: 4.0,
            grid_scale: 16,
            dcp: DcpConfig::default(),
            oracle: SubsetSumOracle::MeetInMiddle,
            run_dcp: true,
            length_steps: None,
            residues: None,
        }
    }
}

/// Smallest power of two ≥ 64·u_max, with u_max the largest planted
/// coefficient in the reduced basis (1 when nothing is planted).
pub fn default_range(reduced: &LatticeInstance) -> u64 {
    let u_max = reduced
        .planted_u
        .as_ref()
        .and_then(|u| u.iter().map(|x| x.unsigned_abs()).max())
        .unwrap_or(1)
        .max(1);
    (64 * u_max).next_power_of_two()
}

/// ‖b̄₁‖/2^k for k = 0, …, steps.
pub fn length_guesses(b1_norm: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| b1_norm / f64::from(1u32 << k)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateSource {
    Lll,
    Dcp { cell: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub vector: Vec<i64>,
    pub norm_sq: i128,
    /// Coefficients in the input basis.
    pub coeffs: Vec<i64>,
    pub source: CandidateSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub index: usize,
    pub length: f64,
    pub i0: usize,
    pub m: u64,
    pub registers: u64,
    pub bad_registers: u64,
    pub routine_calls: usize,
    pub d_candidates: Vec<u64>,
    /// Decoded lattice vectors no longer than ‖b̄₁‖.
    pub vectors: Vec<Vec<i64>>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvpStatus {
    /// DCP runs produced a vector no longer than ‖b̄₁‖.
    Found,
    /// No DCP run produced such a vector.
    NotFound,
    /// DCP disabled; the LLL vector is returned.
    LllOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvpReport {
    pub n: usize,
    pub p: u64,
    pub range: u64,
    pub modulus: u64,
    pub lll_vector: Vec<i64>,
    pub lll_norm_sq: i128,
    pub cells: Vec<CellOutcome>,
    pub candidates: Vec<Candidate>,
    pub status: SvpStatus,
    pub winner: Option<Candidate>,
    /// Whether the winner is ± the planted vector, when one is known.
    pub planted_match: Option<bool>,
}

struct Context<'a> {
    instance: &'a LatticeInstance,
    reduced: &'a LatticeInstance,
    config: &'a SvpConfig,
    p: u64,
    range: u64,
    lll_norm_sq: i128,
    seed: u64,
}

/// LLL-reduces, then runs the DCP pipeline for every (l, i0, m) and keeps the
/// shortest verified lattice vector.
pub fn solve_unique_svp(instance: &LatticeInstance, config: &SvpConfig, seed: u64) -> Result<SvpReport, SvpError> {
    instance.validate()?;
    let n = instance.n;
    let (reduced, _) = instance.reduced()?;
    let b1 = reduced.basis.row(0).to_vec();
    let lll_norm_sq = norm_sq(&b1);
    let lll = Candidate {
        vector: b1.clone(),
        norm_sq: lll_norm_sq,
        coeffs: instance.basis.coefficients_of(&b1)?,
        source: CandidateSource::Lll,
    };

    let floor = (n as u64).pow(4);
    let p = config.p.unwrap_or_else(|| smallest_prime_above(floor));
    if p <= floor && !config.allow_small_p {
        return Err(SvpError::Invalid(format!(
            "p = {p} is not above n⁴ = {floor}; set allow_small_p to override"
        )));
    }
    if let Some(bad) = config.residues.iter().flatten().find(|&&m| m == 0 || m >= p) {
        return Err(SvpError::Invalid(format!(
            "residue m = {bad} is outside [1, {}]",
            p - 1
        )));
    }
    let range = config.range.unwrap_or_else(|| default_range(&reduced));
    let modulus = dcp_modulus(range, n)?;
    let planted = instance.planted_vector();
    let matches_planted = |v: &[i64]| {
        planted
            .as_ref()
            .map(|u| u.as_slice() == v || u.iter().zip(v).all(|(a, b)| *a == -b))
    };

    let mut report = SvpReport {
        n,
        p,
        range,
        modulus,
        lll_vector: b1.clone(),
        lll_norm_sq,
        cells: Vec::new(),
        candidates: vec![lll.clone()],
        status: SvpStatus::LllOnly,
        winner: None,
        planted_match: None,
    };
    if !config.run_dcp {
        report.planted_match = matches_planted(&b1);
        report.winner = Some(lll);
        return Ok(report);
    }

    let steps = config.length_steps.unwrap_or((n - 1).div_ceil(2));
    let b1_norm = (lll_norm_sq as f64).sqrt();
    let mut grid = Vec::new();
    for length in length_guesses(b1_norm, steps) {
        for i0 in 0..n {
            for m in 1..p {
                if config.residues.as_ref().is_none_or(|r| r.contains(&m)) {
                    grid.push((length, i0, m));
                }
            }
        }
    }
    let ctx = Context {
        instance,
        reduced: &reduced,
        config,
        p,
        range,
        lll_norm_sq,
        seed,
    };
    let cells: Vec<CellOutcome> = grid
        .par_iter()
        .enumerate()
        .map(|(index, &(length, i0, m))| run_cell(&ctx, index, length, i0, m))
        .collect::<Result<_, _>>()?;

    let mut found = Vec::new();
    for cell in &cells {
        for v in &cell.vectors {
            found.push(Candidate {
                vector: v.clone(),
                norm_sq: norm_sq(v),
                coeffs: instance.basis.coefficients_of(v)?,
                source: CandidateSource::Dcp { cell: cell.index },
            });
        }
    }
    report.status = if found.is_empty() {
        SvpStatus::NotFound
    } else {
        SvpStatus::Found
    };
    // Shortest wins; the first DCP candidate wins ties.
    report.winner = found.iter().min_by_key(|c| c.norm_sq).cloned();
    report.planted_match = report.winner.as_ref().and_then(|w| matches_planted(&w.vector));
    report.candidates.extend(found);
    report.cells = cells;
    Ok(report)
}

fn run_cell(ctx: &Context<'_>, index: usize, length: f64, i0: usize, m: u64) -> Result<CellOutcome, SvpError> {
    let config = ctx.config;
    let n = ctx.instance.n;
    let mut rng = indexed_stream(ctx.seed, "svp-cell", index as u64);
    let shifts: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let cell = match config.mode {
        SamplerMode::Cube => config.cube_factor * length,
        SamplerMode::Ball => config.ball_factor * (n as f64).sqrt() * length,
    };
    let params = ReductionParams {
        p: ctx.p,
        m,
        i0,
        length,
        range: ctx.range,
        cell,
        shifts,
        mode: config.mode,
        sampler: config.sampler,
        grid_scale: config.grid_scale,
    };
    let mut outcome = CellOutcome {
        index,
        length,
        i0,
        m,
        registers: 0,
        bad_registers: 0,
        routine_calls: 0,
        d_candidates: Vec::new(),
        vectors: Vec::new(),
        error: None,
    };
    let planted = match config.sampler {
        SamplerKind::Planted => ctx.reduced.planted_u.as_deref(),
        SamplerKind::Exhaustive => None,
    };
    let source =
        TwoPointSampler::new(&ctx.reduced.basis, params, planted).and_then(|s| LatticeCosetSource::new(s, planted));
    let source = match source {
        Ok(s) => s,
        Err(e) => {
            outcome.error = Some(e.to_string());
            return Ok(outcome);
        }
    };
    let mut world = DcpWorld::from_source(Box::new(source), mix64(rng.random::<u64>()));
    let result = solve_dcp(&mut world, &config.oracle, &config.dcp);
    let stats = world.audit().stats();
    outcome.registers = stats.registers;
    outcome.bad_registers = stats.bad_registers;
    let transcript = match result {
        Ok(t) => t,
        Err(e @ DcpError::Contract(_)) => return Err(e.into()),
        Err(e) => {
            outcome.error = Some(e.to_string());
            return Ok(outcome);
        }
    };
    outcome.routine_calls = transcript.routine_calls;
    outcome.d_candidates = transcript.candidates.clone();
    for &d in &transcript.candidates {
        let Ok(mut c) = decode_difference(d, ctx.range, n) else {
            continue;
        };
        c[i0] = c[i0] * ctx.p as i64 + m as i64;
        let v = ctx.reduced.basis.combine(&c)?;
        let ns = norm_sq(&v);
        // Longer vectors and non-members are discarded.
        if ns == 0 || ns > ctx.lll_norm_sq || ctx.instance.basis.coefficients_of(&v).is_err() {
            continue;
        }
        outcome.vectors.push(v);
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{gen_unique_lattice, GenConfig};
    use crate::rng::stream;

    #[test]
    fn guesses_and_range() {
        assert_eq!(length_guesses(8.0, 2), vec![8.0, 4.0, 2.0]);
        let inst = gen_unique_lattice(&GenConfig::new(2, 24.0), &mut stream(1, "g")).unwrap();
        let (red, _) = inst.reduced().unwrap();
        assert_eq!(default_range(&red), 64);
    }

    #[test]
    fn lll_only_returns_b1() {
        let inst = gen_unique_lattice(&GenConfig::new(2, 24.0), &mut stream(2, "g")).unwrap();
        let config = SvpConfig {
            run_dcp: false,
            ..SvpConfig::default()
        };
        let r = solve_unique_svp(&inst, &config, 0).unwrap();
        assert_eq!(r.status, SvpStatus::LllOnly);
        assert_eq!(r.planted_match, Some(true));
        assert!(r.cells.is_empty());
    }

    #[test]
    fn small_p_needs_override() {
        let inst = gen_unique_lattice(&GenConfig::new(2, 24.0), &mut stream(3, "g")).unwrap();
        let config = SvpConfig {
            p: Some(5),
            ..SvpConfig::default()
        };
        assert!(solve_unique_svp(&inst, &config, 0).is_err());
    }
}
