//! Two-point registers from a lattice, by the cube and ball constructions.
//!
//! A measurement of F(t, ā) is simulated by drawing (t, ā) uniformly and
//! collecting every preimage of the observed value; the register is the
//! uniform superposition over those preimages.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::encode::{dcp_modulus, encode, encode_difference};
use super::SvpError;
use crate::dcp::{CosetRegister, CosetSource, DcpError};
use crate::geometry::BallGridSampler;
use crate::lattice::{BallEnumerator, Basis};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    Cube,
    Ball,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Finds all preimages by search; never looks at the planted vector.
    Exhaustive,
    /// Checks only the partner predicted by the planted vector.
    Planted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionParams {
    pub p: u64,
    /// Residue m ∈ [1, p−1].
    pub m: u64,
    /// Coordinate index i0, zero-based.
    pub i0: usize,
    /// Length guess l.
    pub length: f64,
    /// Coefficient range M: ā ∈ {0, …, M−1}ⁿ.
    pub range: u64,
    /// Cube side (cube mode) or ball radius (ball mode).
    pub cell: f64,
    /// Random shifts w̄ ∈ [0, 1)ⁿ for the cube labels.
    pub shifts: Vec<f64>,
    pub mode: SamplerMode,
    pub sampler: SamplerKind,
    /// Grid denominator L for the ball mode.
    pub grid_scale: u64,
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest prime strictly above `x`.
pub fn smallest_prime_above(x: u64) -> u64 {
    (x + 1..).find(|&p| is_prime(p)).unwrap_or(2)
}

impl ReductionParams {
    pub fn validate(&self, n: usize) -> Result<(), SvpError> {
        if !is_prime(self.p) {
            return Err(SvpError::Invalid(format!("p = {} is not prime", self.p)));
        }
        if self.m == 0 || self.m >= self.p {
            return Err(SvpError::Invalid(format!("m = {} not in [1, p−1]", self.m)));
        }
        if self.i0 >= n {
            return Err(SvpError::Invalid(format!("i0 = {} not below n = {n}", self.i0)));
        }
        if self.range == 0 || !(self.cell > 0.0) || !(self.length > 0.0) {
            return Err(SvpError::Invalid("M, cell and l must be positive".into()));
        }
        if self.shifts.len() != n || self.shifts.iter().any(|w| !(0.0..1.0).contains(w)) {
            return Err(SvpError::Invalid("shifts must be n values in [0, 1)".into()));
        }
        if self.mode == SamplerMode::Ball && self.grid_scale == 0 {
            return Err(SvpError::Invalid("grid scale must be positive".into()));
        }
        Ok(())
    }
}

/// f(t, ā) = (a_{i0}·p + t·m)·b_{i0} + Σ_{i≠i0} a_i·b_i.
pub fn f_embed(t: u8, a: &[i64], basis: &Basis, p: u64, m: u64, i0: usize) -> Result<Vec<i64>, SvpError> {
    Ok(basis.combine(&embed_coeffs(t, a, p, m, i0))?)
}

fn embed_coeffs(t: u8, a: &[i64], p: u64, m: u64, i0: usize) -> Vec<i64> {
    let mut c = a.to_vec();
    c[i0] = a[i0] * p as i64 + i64::from(t) * m as i64;
    c
}

/// ⌊v_i/cell − w_i⌋ componentwise.
pub fn g_cell(v: &[f64], cell: f64, shifts: &[f64]) -> Vec<i64> {
    v.iter()
        .zip(shifts)
        .map(|(x, w)| (x / cell - w).floor() as i64)
        .collect()
}

/// ā′ − ā for a good register: u with its i0 entry replaced by (u_{i0} − m)/p.
/// `None` when p ∤ u_{i0} − m.
pub fn hidden_difference(u: &[i64], p: u64, m: u64, i0: usize) -> Option<Vec<i64>> {
    let top = u[i0] - m as i64;
    if top.rem_euclid(p as i64) != 0 {
        return None;
    }
    let mut d = u.to_vec();
    d[i0] = top / p as i64;
    Some(d)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegisterStatus {
    Good { a: Vec<i64>, a_prime: Vec<i64> },
    Bad { b: u8, a: Vec<i64> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Measured cube label r̄.
    Cell(Vec<i64>),
    /// Measured point x̄′, scaled by L.
    Point(Vec<i64>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoPointRegister {
    pub status: RegisterStatus,
    pub provenance: Provenance,
}

impl TwoPointRegister {
    pub fn is_good(&self) -> bool {
        matches!(self.status, RegisterStatus::Good { .. })
    }

    /// ā′ − ā for a good register.
    pub fn difference(&self) -> Option<Vec<i64>> {
        match &self.status {
            RegisterStatus::Good { a, a_prime } => Some(a_prime.iter().zip(a).map(|(x, y)| x - y).collect()),
            RegisterStatus::Bad { .. } => None,
        }
    }
}

/// Largest 2Mⁿ the exhaustive cube table may hold.
pub const PREIMAGE_BUDGET: u64 = 10_000_000;

enum Engine {
    CubeTable(HashMap<Vec<i64>, Vec<u32>>),
    CubePlanted(Vec<i64>),
    BallExhaustive(BallGridSampler, BallEnumerator),
    BallPlanted(BallGridSampler, Vec<i64>),
}

/// Draws [`TwoPointRegister`]s for one parameter setting.
pub struct TwoPointSampler {
    basis: Basis,
    params: ReductionParams,
    n: usize,
    /// Mⁿ.
    half_space: u64,
    engine: Engine,
}

impl std::fmt::Debug for TwoPointSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TwoPointSampler")
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl TwoPointSampler {
    /// `planted` is the shortest vector's coefficient vector in `basis`; it is
    /// required by, and only used by, the planted sampler.
    pub fn new(basis: &Basis, params: ReductionParams, planted: Option<&[i64]>) -> Result<Self, SvpError> {
        let n = basis.dim();
        params.validate(n)?;
        let half_space = params
            .range
            .checked_pow(n as u32)
            .filter(|&s| s.saturating_mul(2) <= PREIMAGE_BUDGET || params.sampler == SamplerKind::Planted)
            .ok_or_else(|| SvpError::Invalid(format!("2Mⁿ exceeds the budget of {PREIMAGE_BUDGET}")))?;
        if half_space > u32::MAX as u64 / 2 {
            return Err(SvpError::Invalid("Mⁿ too large".into()));
        }
        let planted_diff = || -> Result<Vec<i64>, SvpError> {
            let u = planted.ok_or_else(|| SvpError::Invalid("planted sampler needs the planted vector".into()))?;
            hidden_difference(u, params.p, params.m, params.i0)
                .ok_or_else(|| SvpError::Invalid("m is not u_{i0} mod p; planted partner undefined".into()))
        };
        let engine = match (params.mode, params.sampler) {
            (SamplerMode::Cube, SamplerKind::Exhaustive) => {
                let mut table: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
                for idx in 0..2 * half_space {
                    let (t, a) = split_index(idx, half_space, params.range, n);
                    let label = cube_label(basis, &params, t, &a)?;
                    table.entry(label).or_default().push(idx as u32);
                }
                Engine::CubeTable(table)
            }
            (SamplerMode::Cube, SamplerKind::Planted) => Engine::CubePlanted(planted_diff()?),
            (SamplerMode::Ball, kind) => {
                let grid = BallGridSampler::new(n, params.cell, params.grid_scale)
                    .map_err(|e| SvpError::Invalid(e.to_string()))?;
                match kind {
                    SamplerKind::Exhaustive => Engine::BallExhaustive(grid, BallEnumerator::new(basis)?),
                    SamplerKind::Planted => Engine::BallPlanted(grid, planted_diff()?),
                }
            }
        };
        Ok(TwoPointSampler {
            basis: basis.clone(),
            params,
            n,
            half_space,
            engine,
        })
    }

    pub fn params(&self) -> &ReductionParams {
        &self.params
    }

    pub fn sample(&self, rng: &mut SimRng) -> Result<TwoPointRegister, SvpError> {
        let idx = rng.random_range(0..2 * self.half_space);
        let (t, a) = split_index(idx, self.half_space, self.params.range, self.n);
        match &self.engine {
            Engine::CubeTable(table) => {
                let label = cube_label(&self.basis, &self.params, t, &a)?;
                let pre: Vec<(u8, Vec<i64>)> = table[&label]
                    .iter()
                    .map(|&i| split_index(i as u64, self.half_space, self.params.range, self.n))
                    .collect();
                let status = classify(t, &a, pre, || format!("cell {label:?}"))?;
                Ok(TwoPointRegister {
                    status,
                    provenance: Provenance::Cell(label),
                })
            }
            Engine::CubePlanted(diff) => {
                let label = cube_label(&self.basis, &self.params, t, &a)?;
                let partner = self.partner(t, &a, diff);
                let status = match partner {
                    Some(b) if cube_label(&self.basis, &self.params, 1 - t, &b)? == label => pair(t, a, b),
                    _ => RegisterStatus::Bad { b: t, a },
                };
                Ok(TwoPointRegister {
                    status,
                    provenance: Provenance::Cell(label),
                })
            }
            Engine::BallExhaustive(grid, enumerator) => {
                let point = self.ball_point(grid, t, &a, rng)?;
                let l = self.params.grid_scale as f64;
                let centre: Vec<f64> = point.iter().map(|&x| x as f64 / l).collect();
                let mut pre = Vec::new();
                for (c, v) in enumerator.points(&centre, self.params.cell * (1.0 + 1e-9))? {
                    if !within(&v, &point, self.params.grid_scale, grid.radius_sq()) {
                        continue;
                    }
                    if let Some(x) = self.unembed(&c) {
                        pre.push(x);
                    }
                }
                let status = classify(t, &a, pre, || format!("point {point:?}/L"))?;
                Ok(TwoPointRegister {
                    status,
                    provenance: Provenance::Point(point),
                })
            }
            Engine::BallPlanted(grid, diff) => {
                let point = self.ball_point(grid, t, &a, rng)?;
                let status = match self.partner(t, &a, diff) {
                    Some(b) => {
                        let v = f_embed(1 - t, &b, &self.basis, self.params.p, self.params.m, self.params.i0)?;
                        if within(&v, &point, self.params.grid_scale, grid.radius_sq()) {
                            pair(t, a, b)
                        } else {
                            RegisterStatus::Bad { b: t, a }
                        }
                    }
                    None => RegisterStatus::Bad { b: t, a },
                };
                Ok(TwoPointRegister {
                    status,
                    provenance: Provenance::Point(point),
                })
            }
        }
    }

    fn ball_point(&self, grid: &BallGridSampler, t: u8, a: &[i64], rng: &mut SimRng) -> Result<Vec<i64>, SvpError> {
        let v = f_embed(t, a, &self.basis, self.params.p, self.params.m, self.params.i0)?;
        let l = self.params.grid_scale as i64;
        let y = grid.sample(rng);
        Ok(v.iter().zip(&y).map(|(x, dy)| x * l + dy).collect())
    }

    /// ā ± diff when inside the coefficient range.
    fn partner(&self, t: u8, a: &[i64], diff: &[i64]) -> Option<Vec<i64>> {
        let b: Vec<i64> = if t == 0 {
            a.iter().zip(diff).map(|(x, d)| x + d).collect()
        } else {
            a.iter().zip(diff).map(|(x, d)| x - d).collect()
        };
        let m = self.params.range as i64;
        b.iter().all(|&x| (0..m).contains(&x)).then_some(b)
    }

    /// (t, ā) with f(t, ā) having coefficients c, if any.
    fn unembed(&self, c: &[i64]) -> Option<(u8, Vec<i64>)> {
        let p = self.params.p as i64;
        let m = self.params.m as i64;
        let ci = c[self.params.i0];
        let t = match ci.rem_euclid(p) {
            0 => 0u8,
            r if r == m => 1u8,
            _ => return None,
        };
        let mut a = c.to_vec();
        a[self.params.i0] = (ci - i64::from(t) * m) / p;
        let range = self.params.range as i64;
        a.iter().all(|&x| (0..range).contains(&x)).then_some((t, a))
    }
}

fn pair(t: u8, a: Vec<i64>, b: Vec<i64>) -> RegisterStatus {
    if t == 0 {
        RegisterStatus::Good { a, a_prime: b }
    } else {
        RegisterStatus::Good { a: b, a_prime: a }
    }
}

fn within(v: &[i64], point: &[i64], l: u64, radius_sq: i128) -> bool {
    let l = l as i128;
    v.iter()
        .zip(point)
        .map(|(&x, &y)| {
            let d = x as i128 * l - y as i128;
            d * d
        })
        .sum::<i128>()
        <= radius_sq
}

fn classify<F: Fn() -> String>(
    t: u8,
    a: &[i64],
    preimages: Vec<(u8, Vec<i64>)>,
    describe: F,
) -> Result<RegisterStatus, SvpError> {
    let zeros: Vec<&Vec<i64>> = preimages.iter().filter(|(s, _)| *s == 0).map(|(_, x)| x).collect();
    let ones: Vec<&Vec<i64>> = preimages.iter().filter(|(s, _)| *s == 1).map(|(_, x)| x).collect();
    let drawn_present = preimages.iter().any(|(s, x)| *s == t && x == a);
    match (zeros.len(), ones.len()) {
        (1, 1) if drawn_present => Ok(RegisterStatus::Good {
            a: zeros[0].clone(),
            a_prime: ones[0].clone(),
        }),
        (1, 0) | (0, 1) if drawn_present => Ok(RegisterStatus::Bad { b: t, a: a.to_vec() }),
        (z, o) => Err(SvpError::StructuralViolation {
            location: describe(),
            zeros: z,
            ones: o,
        }),
    }
}

fn split_index(idx: u64, half_space: u64, range: u64, n: usize) -> (u8, Vec<i64>) {
    let t = (idx / half_space) as u8;
    let mut rest = idx % half_space;
    let mut a = Vec::with_capacity(n);
    for _ in 0..n {
        a.push((rest % range) as i64);
        rest /= range;
    }
    (t, a)
}

fn cube_label(basis: &Basis, params: &ReductionParams, t: u8, a: &[i64]) -> Result<Vec<i64>, SvpError> {
    let v = f_embed(t, a, basis, params.p, params.m, params.i0)?;
    let vf: Vec<f64> = v.iter().map(|&x| x as f64).collect();
    Ok(g_cell(&vf, params.cell, &params.shifts))
}

/// Running counts of a [`LatticeCosetSource`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SourceCounts {
    pub good: u64,
    pub bad: u64,
}

/// DCP registers over Z_{(2M)ⁿ} built from two-point registers.
pub struct LatticeCosetSource {
    sampler: TwoPointSampler,
    modulus: u64,
    planted_shift: Option<u64>,
    counts: std::sync::Arc<std::sync::Mutex<SourceCounts>>,
}

impl LatticeCosetSource {
    /// `planted` is used only to report the expected shift to audits.
    pub fn new(sampler: TwoPointSampler, planted: Option<&[i64]>) -> Result<Self, SvpError> {
        let p = sampler.params();
        let modulus = dcp_modulus(p.range, sampler.n)?;
        let planted_shift = match planted.and_then(|u| hidden_difference(u, p.p, p.m, p.i0)) {
            Some(d) if d.iter().all(|x| x.unsigned_abs() < p.range) => Some(encode_difference(&d, p.range)?),
            _ => None,
        };
        Ok(LatticeCosetSource {
            sampler,
            modulus,
            planted_shift,
            counts: Default::default(),
        })
    }

    /// Shared handle to the good/bad tallies.
    pub fn counts(&self) -> std::sync::Arc<std::sync::Mutex<SourceCounts>> {
        self.counts.clone()
    }
}

impl CosetSource for LatticeCosetSource {
    fn modulus(&self) -> u64 {
        self.modulus
    }

    fn next_register(&mut self, rng: &mut SimRng) -> Result<CosetRegister, DcpError> {
        let reg = self.sampler.sample(rng).map_err(|e| DcpError::Source(e.to_string()))?;
        let range = self.sampler.params().range;
        let enc = |a: &[i64]| encode(a, range).map_err(|e| DcpError::Source(e.to_string()));
        let mut counts = self.counts.lock().unwrap_or_else(|e| e.into_inner());
        match &reg.status {
            RegisterStatus::Good { a, .. } => {
                counts.good += 1;
                let diff = reg.difference().unwrap_or_default();
                let shift = encode_difference(&diff, range).map_err(|e| DcpError::Source(e.to_string()))?;
                Ok(CosetRegister::Good { x: enc(a)?, shift })
            }
            RegisterStatus::Bad { b, a } => {
                counts.bad += 1;
                Ok(CosetRegister::Bad { bit: *b, x: enc(a)? })
            }
        }
    }

    fn planted_shift(&self) -> Option<u64> {
        self.planted_shift
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn embedding_and_labels() {
        let id = Basis::identity(2);
        assert_eq!(f_embed(0, &[0, 0], &id, 5, 2, 0).unwrap(), vec![0, 0]);
        assert_eq!(f_embed(1, &[1, 3], &id, 5, 2, 0).unwrap(), vec![7, 3]);
        assert_eq!(g_cell(&[2.5, -1.2], 2.0, &[0.0, 0.0]), vec![1, -1]);
        assert_eq!(g_cell(&[2.5, -1.2], 2.0, &[0.3, 0.3]), vec![0, -1]);
        assert_eq!(g_cell(&[4.5, -1.2], 2.0, &[0.0, 0.0]), vec![2, -1]);
        // f(1, ā′) − f(0, ā) = u when ā′ − ā is the hidden difference.
        let b = Basis::new(vec![vec![3, 1], vec![1, 4]]).unwrap();
        let u = [6, -1];
        let (p, m) = (5, 1);
        let diff = hidden_difference(&u, p, m, 0).unwrap();
        assert_eq!(diff, vec![1, -1]);
        let a = [2, 3];
        let a2: Vec<i64> = a.iter().zip(&diff).map(|(x, d)| x + d).collect();
        let lhs: Vec<i64> = f_embed(1, &a2, &b, p, m, 0)
            .unwrap()
            .iter()
            .zip(f_embed(0, &a, &b, p, m, 0).unwrap())
            .map(|(x, y)| x - y)
            .collect();
        assert_eq!(lhs, b.combine(&u).unwrap());
        assert_eq!(hidden_difference(&u, p, 2, 0), None);
    }

    #[test]
    fn primes() {
        assert_eq!(smallest_prime_above(16), 17);
        assert_eq!(smallest_prime_above(2), 3);
        assert!(is_prime(5) && !is_prime(1) && !is_prime(9));
    }

    fn params(mode: SamplerMode, sampler: SamplerKind, cell: f64) -> ReductionParams {
        ReductionParams {
            p: 5,
            m: 1,
            i0: 0,
            length: 1.0,
            range: 16,
            cell,
            shifts: vec![0.25, 0.5],
            mode,
            sampler,
            grid_scale: 4,
        }
    }

    #[test]
    fn identity_like_cube() {
        // Lattice with u = (1, 0) and every other vector of length ≥ 20.
        let basis = Basis::new(vec![vec![1, 0], vec![0, 20]]).unwrap();
        let u = [1, 0];
        let mut rng = stream(3, "t");
        let s = TwoPointSampler::new(&basis, params(SamplerMode::Cube, SamplerKind::Exhaustive, 4.0), None).unwrap();
        let mut good = 0;
        for _ in 0..2000 {
            let r = s.sample(&mut rng).unwrap();
            if let Some(d) = r.difference() {
                assert_eq!(d, hidden_difference(&u, 5, 1, 0).unwrap());
                good += 1;
            }
        }
        assert!(good > 1300, "{good}");
        // Too large a cell lets distinct ā share it.
        let s = TwoPointSampler::new(&basis, params(SamplerMode::Cube, SamplerKind::Exhaustive, 64.0), None).unwrap();
        assert!((0..50).any(|_| matches!(s.sample(&mut rng), Err(SvpError::StructuralViolation { .. }))));
    }

    #[test]
    fn ball_modes_agree() {
        let basis = Basis::new(vec![vec![1, 0], vec![0, 20]]).unwrap();
        let u = [1i64, 0];
        let ex = TwoPointSampler::new(&basis, params(SamplerMode::Ball, SamplerKind::Exhaustive, 1.5), None).unwrap();
        let pl = TwoPointSampler::new(&basis, params(SamplerMode::Ball, SamplerKind::Planted, 1.5), Some(&u)).unwrap();
        let mut r1 = stream(4, "t");
        let mut r2 = stream(4, "t");
        for _ in 0..500 {
            assert_eq!(ex.sample(&mut r1).unwrap(), pl.sample(&mut r2).unwrap());
        }
        let tiny = TwoPointSampler::new(&basis, params(SamplerMode::Ball, SamplerKind::Exhaustive, 0.4), None).unwrap();
        assert!((0..200).all(|_| !tiny.sample(&mut r1).unwrap().is_good()));
    }
}
