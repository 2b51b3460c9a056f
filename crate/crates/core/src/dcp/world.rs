//! The simulated environment of a dihedral coset problem instance.
//!
//! The world owns the coset registers and everything hidden in them. Solvers
//! receive measurement outcomes only: a register's Fourier outcome, the
//! measured β̄ of a TwoPointRoutine call, and single bits from the residual
//! qubit. Ground truth for tests and reports goes through [`DcpWorld::audit`].

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::DcpError;
use crate::matching::{MatchingDesc, Side};
use crate::qsim::{e_frac, QState};
use crate::rng::{stream, SimRng};
use crate::subsetsum::{ceil_log2, PreparedOracle, Subset};

/// A register before the Fourier step: (|0,x⟩ + |1,x+shift⟩)/√2, or the basis state |bit, x⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CosetRegister {
    Good { x: u64, shift: u64 },
    Bad { bit: u8, x: u64 },
}

/// Anything that can hand out coset registers over Z_N.
pub trait CosetSource: Send {
    fn modulus(&self) -> u64;
    fn next_register(&mut self, rng: &mut SimRng) -> Result<CosetRegister, DcpError>;
    /// The shift shared by all good registers, when the source knows it up front.
    fn planted_shift(&self) -> Option<u64>;
}

/// Registers with a planted d; each is bad independently with probability `bad_prob`.
#[derive(Clone, Debug)]
pub struct PlantedCosets {
    pub n: u64,
    pub d: u64,
    pub bad_prob: f64,
}

impl CosetSource for PlantedCosets {
    fn modulus(&self) -> u64 {
        self.n
    }

    fn next_register(&mut self, rng: &mut SimRng) -> Result<CosetRegister, DcpError> {
        let x = rng.random_range(0..self.n);
        if self.bad_prob > 0.0 && rng.random_bool(self.bad_prob) {
            let bit = rng.random_range(0..2u8);
            Ok(CosetRegister::Bad { bit, x })
        } else {
            Ok(CosetRegister::Good { x, shift: self.d })
        }
    }

    fn planted_shift(&self) -> Option<u64> {
        Some(self.d)
    }
}

/// 1/⌈log₂ N⌉, or ½ when N ≤ 2.
pub fn default_bad_prob(n: u64) -> f64 {
    1.0 / f64::from(ceil_log2(n).max(2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Good { shift: u64 },
    Bad { bit: u8 },
}

/// A register after the Fourier transform and the measurement of its Z_N part.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseRegister {
    outcome: u64,
    status: Status,
}

impl PhaseRegister {
    /// The measured value a ∈ Z_N.
    pub fn outcome(&self) -> u64 {
        self.outcome
    }
}

/// Measurement applied to the residual qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum QubitBasis {
    /// Hadamard, then measure.
    R1,
    /// diag(1, i), Hadamard, then measure.
    R2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Residual {
    /// |0⟩ + e(k/N)|1⟩ after relabelling β̄ → 0 and its partner → 1.
    TwoTerm { k: u64, n: u64 },
    /// Only one of β̄ and its partner survived the bad-register constraint.
    Basis { bit: u8 },
}

/// The α-register left behind by a successful routine call; consumed by measurement.
#[derive(Debug)]
pub struct ResidualQubit {
    residual: Residual,
}

#[derive(Debug)]
pub enum RoutineOutcome {
    Failure,
    Success {
        beta: Subset,
        partner: Subset,
        qubit: ResidualQubit,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WorldStats {
    pub registers: u64,
    pub bad_registers: u64,
    pub routine_calls: u64,
    pub routine_successes: u64,
}

pub struct DcpWorld {
    n: u64,
    source: Box<dyn CosetSource>,
    rng: SimRng,
    stats: WorldStats,
}

impl std::fmt::Debug for DcpWorld {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DcpWorld")
            .field("n", &self.n)
            .field("stats", &self.stats)
            .finish_non_exhaustive()
    }
}

impl DcpWorld {
    /// A world with a planted d (drawn from the seed when `d` is `None`).
    pub fn new(n: u64, d: Option<u64>, bad_prob: Option<f64>, seed: u64) -> Result<Self, DcpError> {
        if n < 2 {
            return Err(DcpError::Precondition(format!("N must be at least 2, got {n}")));
        }
        let bad_prob = bad_prob.unwrap_or_else(|| default_bad_prob(n));
        if !(0.0..1.0).contains(&bad_prob) {
            return Err(DcpError::Precondition(format!(
                "bad_prob must lie in [0, 1), got {bad_prob}"
            )));
        }
        let mut secret_rng = stream(seed, "dcp-secret");
        let d = match d {
            Some(d) if d < n => d,
            Some(d) => return Err(DcpError::Precondition(format!("d = {d} is not in Z_{n}"))),
            None => secret_rng.random_range(0..n),
        };
        Ok(Self::from_source(Box::new(PlantedCosets { n, d, bad_prob }), seed))
    }

    pub fn from_source(source: Box<dyn CosetSource>, seed: u64) -> Self {
        DcpWorld {
            n: source.modulus(),
            source,
            rng: stream(seed, "dcp-world"),
            stats: WorldStats::default(),
        }
    }

    pub fn modulus(&self) -> u64 {
        self.n
    }

    /// Fourier-transforms a fresh register and measures its Z_N part.
    ///
    /// The outcome is uniform for good and bad registers alike, and a good
    /// register is left as |0⟩ + e(a·shift/N)|1⟩; both facts are what the full
    /// state simulation in [`Audit::sample_phase_register_full`] produces.
    pub fn sample_phase_register(&mut self) -> Result<PhaseRegister, DcpError> {
        let reg = self.source.next_register(&mut self.rng)?;
        let outcome = self.rng.random_range(0..self.n);
        Ok(self.record(reg, outcome))
    }

    fn record(&mut self, reg: CosetRegister, outcome: u64) -> PhaseRegister {
        self.stats.registers += 1;
        let status = match reg {
            CosetRegister::Good { shift, .. } => Status::Good { shift },
            CosetRegister::Bad { bit, .. } => {
                self.stats.bad_registers += 1;
                Status::Bad { bit }
            }
        };
        PhaseRegister { outcome, status }
    }

    pub fn sample_phase_registers(&mut self, count: usize) -> Result<Vec<PhaseRegister>, DcpError> {
        (0..count).map(|_| self.sample_phase_register()).collect()
    }

    /// Runs TwoPointRoutine(f) on the product of the registers' residual qubits
    /// and measures β̄ and γ.
    ///
    /// `oracle` must be prepared on the registers' outcomes. The measurement is
    /// sampled exactly: the α-branch is uniform over the strings M consistent
    /// with the bad registers, γ = 1 on L ∪ R, and β̄ is the L-member of the
    /// branch's pair.
    pub fn two_point_routine(
        &mut self,
        registers: &[PhaseRegister],
        oracle: &PreparedOracle,
        f: &MatchingDesc,
    ) -> Result<RoutineOutcome, DcpError> {
        let ctx = RoutineContext::new(self.n, registers, oracle, f)?;
        self.stats.routine_calls += 1;
        let mut alpha = 0u64;
        for (i, reg) in registers.iter().enumerate() {
            let bit = match reg.status {
                Status::Good { .. } => self.rng.random_bool(0.5),
                Status::Bad { bit } => bit == 1,
            };
            alpha |= u64::from(bit) << i;
        }
        match ctx.classify(alpha)? {
            None => Ok(RoutineOutcome::Failure),
            Some(pair) => {
                self.stats.routine_successes += 1;
                let residual = ctx.residual(&pair)?;
                Ok(RoutineOutcome::Success {
                    beta: pair.beta,
                    partner: pair.partner,
                    qubit: ResidualQubit { residual },
                })
            }
        }
    }

    /// Maps the residual to one qubit, applies the R1 or R2 transform and measures.
    pub fn measure_qubit(&mut self, qubit: ResidualQubit, basis: QubitBasis) -> Result<u8, DcpError> {
        let one = Complex64::new(1.0, 0.0);
        let state = match qubit.residual {
            Residual::TwoTerm { k, n } => {
                QState::from_amplitudes(&[2], &[(vec![0], one), (vec![1], e_frac(k as i128, n))])?.normalize()?
            }
            Residual::Basis { bit } => QState::basis(&[2], &[bit as usize])?,
        };
        let state = match basis {
            QubitBasis::R1 => state.hadamard(0)?,
            QubitBasis::R2 => state.phase_i(0)?.hadamard(0)?,
        };
        let rec = state.measure(&[0], &mut self.rng)?;
        Ok(rec.outcome[0] as u8)
    }

    pub fn stats(&self) -> WorldStats {
        self.stats
    }

    /// Ground-truth access for tests, invariant checks and reports.
    pub fn audit(&mut self) -> Audit<'_> {
        Audit { world: self }
    }
}

/// The two strings of one matched pair: β̄ with t_β̄ ∈ A₁(f) and its partner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pair {
    beta: Subset,
    partner: Subset,
}

struct RoutineContext<'a> {
    n: u64,
    registers: &'a [PhaseRegister],
    oracle: &'a PreparedOracle,
    f: &'a MatchingDesc,
    bad_mask: u64,
    bad_bits: u64,
}

impl<'a> RoutineContext<'a> {
    fn new(
        n: u64,
        registers: &'a [PhaseRegister],
        oracle: &'a PreparedOracle,
        f: &'a MatchingDesc,
    ) -> Result<Self, DcpError> {
        if registers.is_empty() || registers.len() > 63 {
            return Err(DcpError::Precondition(format!(
                "need between 1 and 63 registers, got {}",
                registers.len()
            )));
        }
        if f.modulus != n || oracle.modulus() != n {
            return Err(DcpError::Precondition(
                "matching, oracle and world disagree on N".into(),
            ));
        }
        let seq = oracle.sequence();
        if seq.len() != registers.len() || seq.iter().zip(registers).any(|(a, r)| *a != r.outcome) {
            return Err(DcpError::Precondition(
                "oracle was not prepared on the registers' outcomes".into(),
            ));
        }
        let mut bad_mask = 0;
        let mut bad_bits = 0;
        for (i, r) in registers.iter().enumerate() {
            if let Status::Bad { bit } = r.status {
                bad_mask |= 1 << i;
                bad_bits |= u64::from(bit) << i;
            }
        }
        Ok(RoutineContext {
            n,
            registers,
            oracle,
            f,
            bad_mask,
            bad_bits,
        })
    }

    fn in_m(&self, s: Subset) -> bool {
        s.0 & self.bad_mask == self.bad_bits
    }

    fn sum(&self, s: Subset) -> u64 {
        s.sum(self.oracle.sequence(), self.n)
    }

    /// The pair reached from branch α when α ∈ L ∪ R; `None` when γ stays 0.
    fn classify(&self, alpha: u64) -> Result<Option<Pair>, DcpError> {
        let alpha = Subset(alpha);
        let t = self.sum(alpha);
        if self.oracle.solve(t) != Some(alpha) {
            return Ok(None);
        }
        let Some(ft) = self.f.eval(t) else {
            return Ok(None);
        };
        let Some(other) = self.oracle.solve(ft) else {
            return Ok(None);
        };
        if self.sum(other) != ft {
            return Err(DcpError::Contract(format!(
                "oracle returned {:?} for target {ft}, which sums to {}",
                other,
                self.sum(other)
            )));
        }
        Ok(Some(match self.f.side(t) {
            Some(Side::Lower) => Pair {
                beta: alpha,
                partner: other,
            },
            _ => Pair {
                beta: other,
                partner: alpha,
            },
        }))
    }

    /// Σ over good registers in s of a_i·shift_i, mod N.
    fn phase(&self, s: Subset) -> u64 {
        let mut acc: u128 = 0;
        for (i, r) in self.registers.iter().enumerate() {
            if let (true, Status::Good { shift }) = (s.contains(i), r.status) {
                acc += r.outcome as u128 * shift as u128;
            }
        }
        (acc % self.n as u128) as u64
    }

    fn residual(&self, pair: &Pair) -> Result<Residual, DcpError> {
        // β̄ ∈ L and its partner ∈ R exactly when each lies in M; the other
        // membership conditions hold by construction of the pair.
        match (self.in_m(pair.beta), self.in_m(pair.partner)) {
            (true, true) => {
                let k = (self.phase(pair.partner) + self.n - self.phase(pair.beta)) % self.n;
                if let Some(d) = self.common_shift() {
                    let want = ((self.f.step as u128 * d as u128) % self.n as u128) as u64;
                    if k != want {
                        return Err(DcpError::Contract(format!(
                            "residual phase {k}/N differs from q·d = {want}/N"
                        )));
                    }
                }
                Ok(Residual::TwoTerm { k, n: self.n })
            }
            (true, false) => Ok(Residual::Basis { bit: 0 }),
            (false, true) => Ok(Residual::Basis { bit: 1 }),
            (false, false) => Err(DcpError::Contract("sampled branch lies outside M".into())),
        }
    }

    fn common_shift(&self) -> Option<u64> {
        let mut shifts = self.registers.iter().filter_map(|r| match r.status {
            Status::Good { shift } => Some(shift),
            Status::Bad { .. } => None,
        });
        let first = shifts.next()?;
        shifts.all(|s| s == first).then_some(first)
    }

    fn branch_count(&self) -> u64 {
        1u64 << (self.registers.len() as u32 - self.bad_mask.count_ones())
    }
}

/// Exact description of one routine call's measurement statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoutineAnalysis {
    pub r: usize,
    pub bad_registers: usize,
    /// Pr[γ = 1] = |L ∪ R| / 2^{r−s}.
    pub success_probability: f64,
    pub l_size: usize,
    pub r_size: usize,
    /// Pr[β̄ = b ∧ γ = 1] by b.
    pub beta_distribution: BTreeMap<u64, f64>,
    /// Post-measurement α-register for each β̄ outcome.
    pub residuals: BTreeMap<u64, ResidualDescription>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualDescription {
    pub beta: u64,
    pub partner: u64,
    /// |amplitude|² on β̄ and on the partner.
    pub weights: (f64, f64),
    /// amp(partner)/amp(β̄) as (re, im), when both are present.
    pub relative_phase: Option<(f64, f64)>,
}

/// World-side view; nothing reachable from here is available to a solver.
pub struct Audit<'w> {
    world: &'w mut DcpWorld,
}

impl Audit<'_> {
    pub fn planted_shift(&self) -> Option<u64> {
        self.world.source.planted_shift()
    }

    pub fn stats(&self) -> WorldStats {
        self.world.stats
    }

    pub fn is_bad(&self, reg: &PhaseRegister) -> bool {
        matches!(reg.status, Status::Bad { .. })
    }

    /// Relative phase k/N of a good register's residual qubit, None for bad ones.
    pub fn register_phase(&self, reg: &PhaseRegister) -> Option<u64> {
        match reg.status {
            Status::Good { shift } => Some(((reg.outcome as u128 * shift as u128) % self.world.n as u128) as u64),
            Status::Bad { .. } => None,
        }
    }

    /// A register with chosen contents, for constructing test cases.
    pub fn make_register(&mut self, reg: CosetRegister, outcome: u64) -> PhaseRegister {
        self.world.record(reg, outcome % self.world.n)
    }

    /// Same as [`DcpWorld::sample_phase_register`] but by explicit state
    /// simulation: builds the two-component state, applies the mod-N Fourier
    /// transform and measures. Returns the register and, for a good register,
    /// the collapsed qubit's amplitude ratio amp(1)/amp(0).
    pub fn sample_phase_register_full(&mut self) -> Result<(PhaseRegister, Option<Complex64>), DcpError> {
        let n = self.world.n;
        let reg = self.world.source.next_register(&mut self.world.rng)?;
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let dims = [2usize, n as usize];
        let state = match reg {
            CosetRegister::Good { x, shift } => QState::from_amplitudes(
                &dims,
                &[(vec![0, x as usize], h), (vec![1, ((x + shift) % n) as usize], h)],
            )?,
            CosetRegister::Bad { bit, x } => QState::basis(&dims, &[bit as usize, x as usize])?,
        };
        let rec = state.fourier_mod(1)?.measure(&[1], &mut self.world.rng)?;
        let a = rec.outcome[0];
        let ratio = match reg {
            CosetRegister::Good { .. } => {
                let a0 = rec.collapsed.amplitude(&[0, a])?;
                let a1 = rec.collapsed.amplitude(&[1, a])?;
                Some(a1 / a0)
            }
            CosetRegister::Bad { .. } => None,
        };
        Ok((self.world.record(reg, a as u64), ratio))
    }

    /// Exact statistics of a routine call, by enumerating every branch in M.
    pub fn analyze_routine(
        &self,
        registers: &[PhaseRegister],
        oracle: &PreparedOracle,
        f: &MatchingDesc,
    ) -> Result<RoutineAnalysis, DcpError> {
        let ctx = RoutineContext::new(self.world.n, registers, oracle, f)?;
        let branches = ctx.branch_count();
        let weight = 1.0 / branches as f64;
        let free: Vec<usize> = (0..registers.len()).filter(|i| ctx.bad_mask >> i & 1 == 0).collect();
        let mut l_size = 0;
        let mut r_size = 0;
        let mut beta_distribution = BTreeMap::new();
        let mut residuals = BTreeMap::new();
        for idx in 0..branches {
            let mut alpha = ctx.bad_bits;
            for (j, &i) in free.iter().enumerate() {
                alpha |= (idx >> j & 1) << i;
            }
            let Some(pair) = ctx.classify(alpha)? else {
                continue;
            };
            if pair.beta.0 == alpha {
                l_size += 1;
            } else {
                r_size += 1;
            }
            *beta_distribution.entry(pair.beta.0).or_insert(0.0) += weight;
            if let std::collections::btree_map::Entry::Vacant(slot) = residuals.entry(pair.beta.0) {
                let desc = match ctx.residual(&pair)? {
                    Residual::TwoTerm { k, n } => {
                        let p = e_frac(k as i128, n);
                        ResidualDescription {
                            beta: pair.beta.0,
                            partner: pair.partner.0,
                            weights: (0.5, 0.5),
                            relative_phase: Some((p.re, p.im)),
                        }
                    }
                    Residual::Basis { bit } => ResidualDescription {
                        beta: pair.beta.0,
                        partner: pair.partner.0,
                        weights: if bit == 0 { (1.0, 0.0) } else { (0.0, 1.0) },
                        relative_phase: None,
                    },
                };
                slot.insert(desc);
            }
        }
        Ok(RoutineAnalysis {
            r: registers.len(),
            bad_registers: ctx.bad_mask.count_ones() as usize,
            success_probability: (l_size + r_size) as f64 * weight,
            l_size,
            r_size,
            beta_distribution,
            residuals,
        })
    }

    /// The same statistics from an explicit state-vector run of the routine:
    /// the α qubits (one per register), β̄ as one 2^r-dimensional component and
    /// γ, with the routine applied as the reversible map
    /// (α, β̄, γ) ↦ (α, β̄ ⊕ v(α), γ ⊕ g(α)).
    pub fn simulate_routine_qsim(
        &self,
        registers: &[PhaseRegister],
        oracle: &PreparedOracle,
        f: &MatchingDesc,
    ) -> Result<RoutineAnalysis, DcpError> {
        let ctx = RoutineContext::new(self.world.n, registers, oracle, f)?;
        let r = registers.len();
        if r > 16 {
            return Err(DcpError::Precondition(format!(
                "state simulation supports r ≤ 16, got {r}"
            )));
        }
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut state = QState::basis(&[], &[])?;
        for reg in registers {
            let q = match reg.status {
                Status::Good { .. } => {
                    let k = self.register_phase(reg).unwrap_or(0);
                    QState::from_amplitudes(&[2], &[(vec![0], h), (vec![1], e_frac(k as i128, ctx.n) * h)])?
                }
                Status::Bad { bit } => QState::basis(&[2], &[bit as usize])?,
            };
            state = state.tensor(&q)?;
        }
        let beta_dim = 1usize << r;
        state = state.tensor(&QState::basis(&[beta_dim, 2], &[0, 0])?)?;

        let failure: std::cell::RefCell<Option<DcpError>> = std::cell::RefCell::new(None);
        let mapped = state.apply_label_fn(|label| {
            let alpha = (0..r).fold(0u64, |acc, i| acc | (label[i] as u64) << i);
            let mut out = label.to_vec();
            match ctx.classify(alpha) {
                Ok(Some(pair)) => {
                    let v = if pair.beta.0 == alpha { alpha } else { pair.beta.0 };
                    out[r] ^= v as usize;
                    out[r + 1] ^= 1;
                }
                Ok(None) => {}
                Err(e) => *failure.borrow_mut() = Some(e),
            }
            out
        })?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }

        let beta_gamma = mapped.marginal(&[r, r + 1])?;
        let success_probability: f64 = beta_gamma.iter().filter(|(k, _)| k[1] == 1).map(|(_, p)| p).sum();
        let mut beta_distribution = BTreeMap::new();
        let mut residuals = BTreeMap::new();
        let mut l_size = 0;
        let mut r_size = 0;
        let support = mapped.support();
        for (key, p) in &beta_gamma {
            if key[1] != 1 {
                continue;
            }
            let beta = key[0] as u64;
            beta_distribution.insert(beta, *p);
            // Collapse onto (β̄, γ = 1) and read off the α amplitudes.
            let mut amps: Vec<(u64, Complex64)> = support
                .iter()
                .filter(|(l, _)| l[r] == key[0] && l[r + 1] == 1)
                .map(|(l, a)| ((0..r).fold(0u64, |acc, i| acc | (l[i] as u64) << i), *a))
                .collect();
            amps.sort_by_key(|(m, _)| *m);
            let norm: f64 = amps.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
            let amp_beta = amps.iter().find(|(m, _)| *m == beta).map(|(_, a)| a / norm);
            let other = amps.iter().find(|(m, _)| *m != beta);
            let amp_partner = other.map(|(_, a)| a / norm);
            let pair = ctx
                .classify(amps[0].0)?
                .ok_or_else(|| DcpError::Contract("γ = 1 branch failed classification".into()))?;
            if amp_beta.is_some() {
                l_size += 1;
            }
            if amp_partner.is_some() {
                r_size += 1;
            }
            let relative_phase = match (amp_beta, amp_partner) {
                (Some(b), Some(p)) => {
                    let z = p / b;
                    Some((z.re, z.im))
                }
                _ => None,
            };
            residuals.insert(
                beta,
                ResidualDescription {
                    beta,
                    partner: pair.partner.0,
                    weights: (
                        amp_beta.map_or(0.0, |a| a.norm_sqr()),
                        amp_partner.map_or(0.0, |a| a.norm_sqr()),
                    ),
                    relative_phase,
                },
            );
        }
        Ok(RoutineAnalysis {
            r,
            bad_registers: ctx.bad_mask.count_ones() as usize,
            success_probability,
            l_size,
            r_size,
            beta_distribution,
            residuals,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::MatchingKind;
    use crate::subsetsum::SubsetSumOracle;

    fn f1(q: u64, n: u64) -> MatchingDesc {
        MatchingDesc::new(MatchingKind::First, q, n)
    }

    #[test]
    fn world_guards() {
        assert!(DcpWorld::new(8, Some(3), Some(1.0), 0).is_err());
        assert!(DcpWorld::new(1, None, None, 0).is_err());
        assert!(DcpWorld::new(8, Some(9), None, 0).is_err());
        let mut w = DcpWorld::new(8, Some(3), Some(0.0), 0).unwrap();
        let regs = w.sample_phase_registers(100).unwrap();
        assert!(regs.iter().all(|r| !w.audit().is_bad(r)));
        assert_eq!(w.audit().planted_shift(), Some(3));
    }

    #[test]
    fn toy_routine_trace() {
        // A = (1, 2), N = 4, d = 1, f¹₁, both registers good.
        let n = 4;
        let mut w = DcpWorld::new(n, Some(1), Some(0.0), 1).unwrap();
        let regs: Vec<PhaseRegister> = [1, 2]
            .iter()
            .map(|&a| w.audit().make_register(CosetRegister::Good { x: 0, shift: 1 }, a))
            .collect();
        let oracle = SubsetSumOracle::Exhaustive.prepare(&[1, 2], n).unwrap();
        let f = f1(1, n);
        let an = w.audit().analyze_routine(&regs, &oracle, &f).unwrap();
        assert_eq!(an.success_probability, 1.0);
        let res = &an.residuals[&0];
        assert_eq!(res.partner, 0b01);
        let (re, im) = res.relative_phase.unwrap();
        assert!((re - 0.0).abs() < 1e-12 && (im - 1.0).abs() < 1e-12);
        let sim = w.audit().simulate_routine_qsim(&regs, &oracle, &f).unwrap();
        assert!((sim.success_probability - 1.0).abs() < 1e-12);
        // e(1/4): R1 gives ½ − ½cos(π/2) = ½.
        let mut ones = 0;
        let trials = 4000;
        for _ in 0..trials {
            match w.two_point_routine(&regs, &oracle, &f).unwrap() {
                RoutineOutcome::Success { beta, qubit, .. } => {
                    if beta == Subset(0) {
                        ones += w.measure_qubit(qubit, QubitBasis::R1).unwrap() as usize;
                    } else {
                        let _ = w.measure_qubit(qubit, QubitBasis::R1).unwrap();
                    }
                }
                RoutineOutcome::Failure => panic!("cannot fail"),
            }
        }
        assert!(ones > 0);
    }

    #[test]
    fn zero_shift_gives_zero_bits() {
        let n = 64;
        let mut w = DcpWorld::new(n, Some(0), Some(0.0), 2).unwrap();
        let f = f1(1, n);
        let mut seen = 0;
        while seen < 200 {
            let regs = w.sample_phase_registers(10).unwrap();
            let a: Vec<u64> = regs.iter().map(|r| r.outcome()).collect();
            let oracle = SubsetSumOracle::Exhaustive.prepare(&a, n).unwrap();
            if let RoutineOutcome::Success { qubit, .. } = w.two_point_routine(&regs, &oracle, &f).unwrap() {
                assert_eq!(w.measure_qubit(qubit, QubitBasis::R1).unwrap(), 0);
                seen += 1;
            }
        }
    }

    #[test]
    fn oracle_must_match_registers() {
        let n = 16;
        let mut w = DcpWorld::new(n, Some(3), Some(0.0), 3).unwrap();
        let regs = w.sample_phase_registers(4).unwrap();
        let oracle = SubsetSumOracle::Exhaustive.prepare(&[1, 2, 3, 4, 5], n).unwrap();
        assert!(w.two_point_routine(&regs, &oracle, &f1(1, n)).is_err());
    }

    #[test]
    fn shortcut_matches_full_simulation_marginals() {
        let n = 16;
        let mut w = DcpWorld::new(n, Some(5), Some(0.0), 4).unwrap();
        let trials = 4000;
        let mut counts = vec![0usize; n as usize];
        for _ in 0..trials {
            let (reg, ratio) = w.audit().sample_phase_register_full().unwrap();
            counts[reg.outcome() as usize] += 1;
            let want = e_frac((reg.outcome() * 5) as i128, n);
            assert!((ratio.unwrap() - want).norm() < 1e-10);
            assert_eq!(w.audit().register_phase(&reg), Some(reg.outcome() * 5 % n));
        }
        let p = 1.0 / n as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        for c in counts {
            assert!((c as f64 / trials as f64 - p).abs() < 4.0 * sigma);
        }
    }
}
