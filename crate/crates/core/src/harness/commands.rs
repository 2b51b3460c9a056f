use std::fs;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    to_value, GenLatticeArgs, GeometryArgs, HarnessError, MatchingArgs, Outcome, PrepareArgs, SolveDcpArgs,
    SolveSvpArgs, SubsetSumArgs,
};
use crate::dcp::{solve_dcp as run_dcp, DcpConfig, DcpError, DcpWorld, StageRecord};
use crate::geometry::{
    ball_intersection_ratio, boundary_layer, grid_intersection_ratio, grid_volume_check, grover_rudolph_prepare,
    write_ratio_csv, BallGridSpec, PrepareConfig, RatioRow,
};
use crate::lattice::{gen_unique_lattice, GenConfig, LatticeInstance};
use crate::matching::{check_pair_density, pair_density_bound, MatchingDesc, MatchingKind};
use crate::rng::{indexed_stream, mix64, stream};
use crate::subsetsum::{
    ceil_log2, estimate_legal_fraction, random_sequence, write_csv, SubsetSumInstance, SubsetSumOracle, TargetSet,
};
use crate::svp::{solve_unique_svp, SamplerMode, SvpConfig, SvpError, SvpReport, SvpStatus};

fn dcp_error(e: DcpError) -> HarnessError {
    match e {
        DcpError::Contract(m) => HarnessError::Contract(m),
        other => HarnessError::Usage(other.to_string()),
    }
}

fn svp_error(e: SvpError) -> HarnessError {
    match e {
        SvpError::Dcp(DcpError::Contract(m)) => HarnessError::Contract(m),
        other => HarnessError::Usage(other.to_string()),
    }
}

fn parse_oracle(spec: &str, seed: u64) -> Result<SubsetSumOracle, HarnessError> {
    SubsetSumOracle::parse(spec, seed).map_err(|e| HarnessError::Usage(e.to_string()))
}

fn rate(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

// ---------------------------------------------------------------- gen-lattice

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenLatticeConfig {
    pub n: usize,
    pub gap: f64,
    pub trials: usize,
}

impl Default for GenLatticeConfig {
    fn default() -> Self {
        GenLatticeConfig {
            n: 2,
            gap: 8.0,
            trials: 1,
        }
    }
}

impl GenLatticeConfig {
    pub(super) fn apply(&mut self, args: &GenLatticeArgs, trials: Option<usize>) {
        self.n = args.n.unwrap_or(self.n);
        self.gap = args.gap.unwrap_or(self.gap);
        self.trials = trials.unwrap_or(self.trials);
    }
}

#[derive(Serialize)]
struct GeneratedInstance {
    trial: usize,
    instance: LatticeInstance,
    shortest: Vec<i64>,
    shortest_norm_sq: i128,
    certified_gap: Option<f64>,
}

pub(super) fn gen_lattice(c: &GenLatticeConfig, seed: u64) -> Result<Outcome, HarnessError> {
    let cfg = GenConfig::new(c.n, c.gap);
    let instances = (0..c.trials)
        .into_par_iter()
        .map(|i| {
            let inst = gen_unique_lattice(&cfg, &mut indexed_stream(seed, "gen-lattice", i as u64))
                .map_err(|e| HarnessError::Usage(e.to_string()))?;
            let cert = inst.verify().map_err(|e| HarnessError::Contract(e.to_string()))?;
            Ok(GeneratedInstance {
                trial: i,
                instance: inst,
                shortest: cert.shortest.vector.clone(),
                shortest_norm_sq: cert.shortest.norm_sq,
                certified_gap: cert.gap(),
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(Outcome {
        passed: true,
        result: json!({ "instances": to_value(&instances)? }),
    })
}

// ------------------------------------------------------------------ solve-svp

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvpRunConfig {
    /// Load this instance instead of generating one per trial.
    pub instance: Option<PathBuf>,
    pub n: usize,
    pub gap: f64,
    pub trials: usize,
    /// Exit 1 when fewer trials than this recover ± the planted vector.
    pub min_success_rate: f64,
    pub svp: SvpConfig,
}

impl Default for SvpRunConfig {
    fn default() -> Self {
        SvpRunConfig {
            instance: None,
            n: 2,
            gap: 8.0,
            trials: 1,
            min_success_rate: 0.0,
            svp: SvpConfig::default(),
        }
    }
}

impl SvpRunConfig {
    pub(super) fn apply(&mut self, a: &SolveSvpArgs, trials: Option<usize>) -> Result<(), HarnessError> {
        if a.instance.is_some() {
            self.instance.clone_from(&a.instance);
        }
        self.n = a.n.unwrap_or(self.n);
        self.trials = trials.unwrap_or(self.trials);
        if a.p.is_some() {
            self.svp.p = a.p;
        }
        if let Some(m) = a.m {
            self.svp.residues = Some(vec![m]);
        }
        if a.range.is_some() {
            self.svp.range = a.range;
        }
        match a.mode.as_deref() {
            Some("cube") => self.svp.mode = SamplerMode::Cube,
            Some("ball") => self.svp.mode = SamplerMode::Ball,
            Some(other) => return Err(HarnessError::Usage(format!("unknown mode {other}"))),
            None => {}
        }
        if let Some(o) = &a.oracle {
            self.svp.oracle = parse_oracle(o, 0)?;
        }
        if a.no_dcp {
            self.svp.run_dcp = false;
        }
        Ok(())
    }
}

/// Accepts a bare instance or a gen-lattice report (first instance).
pub fn load_instance(path: &std::path::Path) -> Result<LatticeInstance, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    if let Ok(inst) = LatticeInstance::from_json(&text) {
        return Ok(inst);
    }
    let value: Value =
        serde_json::from_str(&text).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
    let inner = value
        .pointer("/result/instances/0/instance")
        .ok_or_else(|| HarnessError::Usage(format!("{}: not a lattice instance", path.display())))?;
    serde_json::from_value(inner.clone()).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct SvpTrial {
    trial: usize,
    instance: LatticeInstance,
    /// Every emitted candidate is a lattice member no longer than the LLL vector.
    candidates_verified: bool,
    report: SvpReport,
}

pub(super) fn solve_svp(c: &SvpRunConfig, seed: u64) -> Result<Outcome, HarnessError> {
    let loaded = c.instance.as_deref().map(load_instance).transpose()?;
    let trials = (0..c.trials)
        .into_par_iter()
        .map(|i| {
            let instance = match &loaded {
                Some(inst) => inst.clone(),
                None => gen_unique_lattice(
                    &GenConfig::new(c.n, c.gap),
                    &mut indexed_stream(seed, "svp-instance", i as u64),
                )
                .map_err(|e| HarnessError::Usage(e.to_string()))?,
            };
            let report = solve_unique_svp(&instance, &c.svp, mix64(seed ^ mix64(i as u64))).map_err(svp_error)?;
            let candidates_verified = report.candidates.iter().all(|cand| {
                cand.norm_sq > 0
                    && cand.norm_sq <= report.lll_norm_sq
                    && instance.basis.combine(&cand.coeffs).as_ref() == Ok(&cand.vector)
            });
            Ok(SvpTrial {
                trial: i,
                instance,
                candidates_verified,
                report,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let recovered = trials.iter().filter(|t| t.report.planted_match == Some(true)).count();
    let found = trials.iter().filter(|t| t.report.status == SvpStatus::Found).count();
    let verified = trials.iter().all(|t| t.candidates_verified);
    let success_rate = rate(recovered, trials.len());
    Ok(Outcome {
        passed: verified && success_rate >= c.min_success_rate,
        result: json!({
            "success_rate": success_rate,
            "found_rate": rate(found, trials.len()),
            "all_candidates_verified": verified,
            "trials": to_value(&trials)?,
        }),
    })
}

// ------------------------------------------------------------------ solve-dcp

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DcpRunConfig {
    #[serde(rename = "N")]
    pub modulus: u64,
    /// Planted shift; drawn per trial when unset.
    pub d: Option<u64>,
    /// Corruption probability; 1/log N when unset.
    pub bad_prob: Option<f64>,
    /// `exhaustive`, `mitm` or `unreliable:P`.
    pub oracle: String,
    pub trials: usize,
    /// Exit 1 when the planted d is in fewer candidate lists than this.
    pub min_success_rate: f64,
    pub solver: DcpConfig,
}

impl Default for DcpRunConfig {
    fn default() -> Self {
        DcpRunConfig {
            modulus: 4096,
            d: None,
            bad_prob: None,
            oracle: "mitm".into(),
            trials: 10,
            min_success_rate: 0.0,
            solver: DcpConfig::default(),
        }
    }
}

impl DcpRunConfig {
    pub(super) fn apply(&mut self, a: &SolveDcpArgs, trials: Option<usize>) {
        self.modulus = a.modulus.unwrap_or(self.modulus);
        if a.d.is_some() {
            self.d = a.d;
        }
        if a.bad_prob.is_some() {
            self.bad_prob = a.bad_prob;
        }
        if let Some(o) = &a.oracle {
            self.oracle.clone_from(o);
        }
        if let Some(s) = a.samples {
            self.solver.samples_per_arm = s;
            self.solver.max_calls_per_arm = self.solver.max_calls_per_arm.max(s);
        }
        self.trials = trials.unwrap_or(self.trials);
    }
}

#[derive(Serialize)]
struct DcpTrial {
    trial: usize,
    d: u64,
    candidates: Vec<u64>,
    answer: Option<u64>,
    in_candidates: bool,
    answer_correct: bool,
    q_hat: u64,
    r: usize,
    termination: String,
    routine_calls: usize,
    registers: u64,
    bad_registers: u64,
    stages: Vec<StageRecord>,
    error: Option<String>,
}

pub(super) fn solve_dcp(c: &DcpRunConfig, seed: u64) -> Result<Outcome, HarnessError> {
    // Validate once up front so bad parameters are a usage error, not per-trial noise.
    DcpWorld::new(c.modulus, c.d, c.bad_prob, seed).map_err(dcp_error)?;
    c.solver.validate().map_err(dcp_error)?;
    parse_oracle(&c.oracle, seed)?;
    let trials = (0..c.trials)
        .into_par_iter()
        .map(|i| {
            let trial_seed = indexed_stream(seed, "dcp-trial", i as u64).random::<u64>();
            let oracle = parse_oracle(&c.oracle, mix64(trial_seed))?;
            let mut world = DcpWorld::new(c.modulus, c.d, c.bad_prob, trial_seed).map_err(dcp_error)?;
            let result = run_dcp(&mut world, &oracle, &c.solver);
            let audit = world.audit();
            let d = audit.planted_shift().unwrap_or(0);
            let stats = audit.stats();
            let mut t = DcpTrial {
                trial: i,
                d,
                candidates: Vec::new(),
                answer: None,
                in_candidates: false,
                answer_correct: false,
                q_hat: 0,
                r: 0,
                termination: String::new(),
                routine_calls: stats.routine_calls as usize,
                registers: stats.registers,
                bad_registers: stats.bad_registers,
                stages: Vec::new(),
                error: None,
            };
            match result {
                Ok(tr) => {
                    t.answer = tr.answer();
                    t.in_candidates = tr.candidates.contains(&d);
                    t.answer_correct = t.answer == Some(d);
                    t.q_hat = tr.q_hat;
                    t.r = tr.r;
                    t.termination = tr.termination;
                    t.candidates = tr.candidates;
                    t.stages = tr.stages;
                }
                Err(DcpError::Contract(m)) => return Err(HarnessError::Contract(m)),
                Err(e) => t.error = Some(e.to_string()),
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let total = trials.len();
    let in_cand = trials.iter().filter(|t| t.in_candidates).count();
    let correct = trials.iter().filter(|t| t.answer_correct).count();
    let candidate_rate = rate(in_cand, total);
    Ok(Outcome {
        passed: candidate_rate >= c.min_success_rate,
        result: json!({
            "success_rate": candidate_rate,
            "answer_rate": rate(correct, total),
            "trials": to_value(&trials)?,
        }),
    })
}

// ------------------------------------------------------------ subsetsum-stats

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsetSumStatsConfig {
    pub moduli: Vec<u64>,
    /// r = ⌈log N⌉ + offset.
    pub r_offsets: Vec<usize>,
    pub trials: usize,
    /// Offset at which the failure fraction must be at most `max_failure`.
    pub checked_offset: usize,
    pub max_failure: f64,
    pub equivalence_instances: usize,
    pub csv: Option<PathBuf>,
    /// `A,t,N,answer` rows of the equivalence instances.
    pub instances_csv: Option<PathBuf>,
}

impl Default for SubsetSumStatsConfig {
    fn default() -> Self {
        SubsetSumStatsConfig {
            moduli: vec![256, 1024, 4096],
            r_offsets: (1..=6).collect(),
            trials: 1000,
            checked_offset: 4,
            max_failure: 0.5,
            equivalence_instances: 1000,
            csv: None,
            instances_csv: None,
        }
    }
}

impl SubsetSumStatsConfig {
    pub(super) fn apply(&mut self, a: &SubsetSumArgs, trials: Option<usize>) {
        if let Some(n) = a.modulus {
            self.moduli = vec![n];
        }
        if a.csv.is_some() {
            self.csv.clone_from(&a.csv);
        }
        self.trials = trials.unwrap_or(self.trials);
    }
}

#[derive(Serialize)]
struct LegalRow {
    n: u64,
    r: usize,
    offset: usize,
    trials: usize,
    failure_fraction: f64,
    half_width_95: f64,
}

/// Random (N, A, t) with N ≤ 4096 and r ≤ 16; returns the instance and both answers agree.
pub fn oracle_equivalence(instances: usize, seed: u64) -> Result<Vec<(SubsetSumInstance, bool, bool)>, HarnessError> {
    (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_stream(seed, "oracle-equivalence", i as u64);
            let n = rng.random_range(1..=4096u64);
            let r = rng.random_range(0..=16usize);
            let a = random_sequence(r, n, &mut rng);
            let t = rng.random_range(0..n);
            let inst = SubsetSumInstance::new(a, t, n).map_err(|e| HarnessError::Contract(e.to_string()))?;
            let solve = |o: SubsetSumOracle| {
                o.solve(&inst.a, inst.t, inst.n)
                    .map_err(|e| HarnessError::Contract(e.to_string()))
            };
            let ex = solve(SubsetSumOracle::Exhaustive)?;
            let mi = solve(SubsetSumOracle::MeetInMiddle)?;
            let valid = ex.is_none_or(|s| s.sum(&inst.a, inst.n) == inst.t);
            Ok((inst, ex == mi, valid))
        })
        .collect()
}

pub(super) fn subsetsum_stats(c: &SubsetSumStatsConfig, seed: u64) -> Result<Outcome, HarnessError> {
    let cells: Vec<(u64, usize)> = c
        .moduli
        .iter()
        .flat_map(|&n| c.r_offsets.iter().map(move |&o| (n, o)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(n, offset)| {
            let r = ceil_log2(n) as usize + offset;
            let lf = estimate_legal_fraction(r, n, c.trials, mix64(seed ^ n ^ ((offset as u64) << 48)))
                .map_err(|e| HarnessError::Usage(e.to_string()))?;
            Ok(LegalRow {
                n,
                r,
                offset,
                trials: lf.trials,
                failure_fraction: lf.fraction,
                half_width_95: lf.half_width_95,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    if let Some(path) = &c.csv {
        let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Io(e.to_string()))?;
        for row in &rows {
            w.serialize(row).map_err(|e| HarnessError::Io(e.to_string()))?;
        }
        w.flush()?;
    }
    let equivalence = oracle_equivalence(c.equivalence_instances, seed)?;
    let mismatches = equivalence.iter().filter(|(_, same, _)| !same).count();
    let invalid = equivalence.iter().filter(|(_, _, valid)| !valid).count();
    if let Some(path) = &c.instances_csv {
        let answered: Vec<_> = equivalence
            .iter()
            .map(|(inst, _, _)| {
                let ans = SubsetSumOracle::Exhaustive
                    .solve(&inst.a, inst.t, inst.n)
                    .ok()
                    .flatten();
                (inst.clone(), ans)
            })
            .collect();
        let file = fs::File::create(path)?;
        write_csv(file, &answered).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    let bound_holds = rows
        .iter()
        .filter(|r| r.offset == c.checked_offset)
        .all(|r| r.failure_fraction <= c.max_failure);
    Ok(Outcome {
        passed: bound_holds && mismatches == 0 && invalid == 0,
        result: json!({
            "legal_fraction": to_value(&rows)?,
            "bound_holds": bound_holds,
            "equivalence": { "instances": equivalence.len(), "mismatches": mismatches, "invalid_answers": invalid },
        }),
    })
}

// ------------------------------------------------------------- matching-stats

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingStatsConfig {
    #[serde(rename = "N")]
    pub modulus: u64,
    pub q_max: u64,
    pub density_modulus: u64,
    pub s_values: Vec<u64>,
    pub density_q: u64,
    pub trials: usize,
}

impl Default for MatchingStatsConfig {
    fn default() -> Self {
        MatchingStatsConfig {
            modulus: 4096,
            q_max: 64,
            density_modulus: 1024,
            s_values: vec![2, 4, 8],
            density_q: 1,
            trials: 100,
        }
    }
}

impl MatchingStatsConfig {
    pub(super) fn apply(&mut self, a: &MatchingArgs, trials: Option<usize>) {
        self.modulus = a.modulus.unwrap_or(self.modulus);
        self.trials = trials.unwrap_or(self.trials);
    }
}

/// Violations of f(f(t)) = t and |f(t) − t| = q over all of Z_N, and the domain size.
pub fn involution_violations(f: &MatchingDesc) -> (usize, usize) {
    let mut bad = 0;
    let mut domain = 0;
    for t in 0..f.modulus {
        if let Some(u) = f.eval(t) {
            domain += 1;
            if f.eval(u) != Some(t) || u.abs_diff(t) != f.step {
                bad += 1;
            }
        }
    }
    (bad, domain)
}

#[derive(Serialize)]
struct DensityRow {
    s: u64,
    q: u64,
    trials: usize,
    min_pairs: usize,
    bound: f64,
    met: usize,
}

pub(super) fn matching_stats(c: &MatchingStatsConfig, seed: u64) -> Result<Outcome, HarnessError> {
    if c.modulus < 2 || c.q_max >= c.modulus {
        return Err(HarnessError::Usage(format!(
            "need 1 ≤ q_max < N, got q_max={}, N={}",
            c.q_max, c.modulus
        )));
    }
    let checks: Vec<(MatchingKind, u64, usize, usize)> = [MatchingKind::First, MatchingKind::Second]
        .into_par_iter()
        .flat_map(|kind| {
            (1..=c.q_max).into_par_iter().map(move |q| {
                let (bad, domain) = involution_violations(&MatchingDesc::new(kind, q, c.modulus));
                (kind, q, bad, domain)
            })
        })
        .collect();
    let violations: usize = checks.iter().map(|x| x.2).sum();
    let empty_domains = checks.iter().filter(|x| x.3 == 0).count();

    let n = c.density_modulus;
    let rows = c
        .s_values
        .iter()
        .map(|&s| {
            let size = n.div_ceil(s.max(1)) as usize;
            let pairs = (0..c.trials)
                .into_par_iter()
                .map(|i| {
                    let mut rng = indexed_stream(seed, &format!("pair-density-{s}"), i as u64);
                    let mut all: Vec<u64> = (0..n).collect();
                    let (chosen, _) = all.partial_shuffle(&mut rng, size);
                    let set = TargetSet::from_iter(n, chosen.iter().copied());
                    check_pair_density(&set, c.density_q, s)
                        .map(|d| d.pairs)
                        .map_err(|e| HarnessError::Usage(e.to_string()))
                })
                .collect::<Result<Vec<_>, HarnessError>>()?;
            let bound = pair_density_bound(n, s);
            Ok(DensityRow {
                s,
                q: c.density_q,
                trials: pairs.len(),
                min_pairs: pairs.iter().copied().min().unwrap_or(0),
                bound,
                met: pairs.iter().filter(|&&p| p as f64 >= bound).count(),
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let density_ok = rows.iter().all(|r| r.met == r.trials);
    Ok(Outcome {
        passed: violations == 0 && empty_domains == 0 && density_ok,
        result: json!({
            "involution": {
                "N": c.modulus,
                "matchings": checks.len(),
                "violations": violations,
                "empty_domains": empty_domains,
            },
            "pair_density": to_value(&rows)?,
        }),
    })
}

// ------------------------------------------------------------- geometry-check

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryCheckConfig {
    pub n: usize,
    pub radii: Vec<f64>,
    pub l: u64,
    /// Integer shifts d̄ for the ratio table (padded or cut to n).
    pub shifts: Vec<Vec<i64>>,
    pub ratio_tolerance: f64,
    /// (n, R, L) cases for the volume tolerance.
    pub volume_cases: Vec<(usize, f64, u64)>,
    /// (n, R, L) cases for the fitted-constant check at n > 2.
    pub higher_cases: Vec<(usize, f64, u64)>,
    pub monte_carlo_samples: usize,
    pub csv: Option<PathBuf>,
}

impl Default for GeometryCheckConfig {
    fn default() -> Self {
        let mut volume_cases = Vec::new();
        for n in 1..=3 {
            for r in [2.0, 4.0, 8.0] {
                for l in [4, 8] {
                    volume_cases.push((n, r, l));
                }
            }
        }
        volume_cases.extend([(4, 2.0, 4), (4, 3.0, 4)]);
        GeometryCheckConfig {
            n: 2,
            radii: vec![2.0, 4.0, 8.0],
            l: 8,
            shifts: vec![vec![1, 0], vec![1, 1], vec![2, 0], vec![0, 3], vec![2, 2]],
            ratio_tolerance: 0.02,
            volume_cases,
            higher_cases: vec![(3, 4.0, 4), (3, 6.0, 4), (4, 3.0, 3), (4, 4.0, 3)],
            monte_carlo_samples: 100_000,
            csv: None,
        }
    }
}

impl GeometryCheckConfig {
    pub(super) fn apply(&mut self, a: &GeometryArgs) {
        self.n = a.n.unwrap_or(self.n);
        if a.csv.is_some() {
            self.csv.clone_from(&a.csv);
        }
    }
}

#[derive(Serialize)]
struct RatioCheck {
    row: RatioRow,
    shift: Vec<i64>,
    continuous: f64,
    continuous_std_err: Option<f64>,
    within_tolerance: bool,
}

fn fit_shift(shift: &[i64], n: usize) -> Vec<i64> {
    (0..n).map(|i| shift.get(i).copied().unwrap_or(0)).collect()
}

fn norm(d: &[i64]) -> f64 {
    d.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt()
}

pub(super) fn geometry_check(c: &GeometryCheckConfig, seed: u64) -> Result<Outcome, HarnessError> {
    let geo = |e: crate::geometry::GeometryError| HarnessError::Usage(e.to_string());
    let mut jobs = Vec::new();
    for &radius in &c.radii {
        for shift in &c.shifts {
            let d = fit_shift(shift, c.n);
            if d.iter().any(|&x| x != 0) && norm(&d) <= 2.0 * radius {
                jobs.push((radius, d));
            }
        }
    }
    let ratios = jobs
        .par_iter()
        .enumerate()
        .map(|(i, (radius, d))| {
            let spec = BallGridSpec::centered(c.n, *radius, c.l);
            let grid = grid_intersection_ratio(&spec, d).map_err(geo)?;
            let df: Vec<f64> = d.iter().map(|&x| x as f64).collect();
            let cont = ball_intersection_ratio(
                c.n,
                *radius,
                &df,
                c.monte_carlo_samples,
                &mut indexed_stream(seed, "geometry-ratio", i as u64),
            )
            .map_err(geo)?;
            let tol = c.ratio_tolerance + cont.std_err.map_or(0.0, |s| 4.0 * s);
            Ok(RatioCheck {
                row: RatioRow {
                    n: c.n,
                    radius: *radius,
                    l: c.l,
                    dist: cont.dist,
                    ratio: grid,
                    bound: cont.lower_bound,
                },
                shift: d.clone(),
                continuous: cont.value(),
                continuous_std_err: cont.std_err,
                within_tolerance: (grid - cont.value()).abs() <= tol,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    if let Some(path) = &c.csv {
        let rows: Vec<RatioRow> = ratios.iter().map(|r| r.row.clone()).collect();
        write_ratio_csv(fs::File::create(path)?, &rows).map_err(|e| HarnessError::Io(e.to_string()))?;
    }

    let volume = c
        .volume_cases
        .par_iter()
        .map(|&(n, r, l)| {
            let spec = BallGridSpec::centered(n, r, l);
            let v = grid_volume_check(&spec).map_err(geo)?;
            let b = boundary_layer(&spec).map_err(geo)?;
            Ok(json!({
                "n": n, "radius": r, "l": l,
                "volume": to_value(&v)?, "volume_holds": v.holds(),
                "boundary": to_value(&b)?, "boundary_holds": b.fraction <= b.bound,
            }))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let volume_ok = volume.iter().all(|v| v["volume_holds"] == true);
    let boundary_ok = volume.iter().all(|v| v["boundary_holds"] == true);

    // 1 − ratio ≤ c·√n·‖d̄‖/R, with c the smallest constant fitting every n = 2 row.
    let fitted = ratios
        .iter()
        .filter(|r| r.row.n == 2)
        .map(|r| (1.0 - r.row.ratio) * r.row.radius / (2f64.sqrt() * r.row.dist))
        .fold(0.0f64, f64::max);
    let higher = c
        .higher_cases
        .par_iter()
        .flat_map(|&(n, r, l)| {
            let spec = BallGridSpec::centered(n, r, l);
            [vec![1], vec![1, 1], vec![2]].into_par_iter().map(move |s| {
                let d = fit_shift(&s, n);
                let ratio = grid_intersection_ratio(&spec, &d).map_err(geo)?;
                let required = 1.0 - fitted * (n as f64).sqrt() * norm(&d) / r;
                Ok(json!({ "n": n, "radius": r, "l": l, "shift": d, "ratio": ratio, "required": required, "holds": ratio >= required }))
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let fitted_ok = c.n != 2 || higher.iter().all(|h| h["holds"] == true);
    let ratios_ok = ratios.iter().all(|r| r.within_tolerance);
    Ok(Outcome {
        passed: ratios_ok && volume_ok && boundary_ok && fitted_ok,
        result: json!({
            "ratios": to_value(&ratios)?,
            "ratios_within_tolerance": ratios_ok,
            "volume_cases": volume,
            "volume_tolerance_holds": volume_ok,
            "boundary_layer_holds": boundary_ok,
            "fitted_constant": fitted,
            "fitted_constant_checks": higher,
            "fitted_constant_holds": fitted_ok,
        }),
    })
}

// -------------------------------------------------------------- prepare-state

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepareStateConfig {
    pub n: usize,
    pub radius: f64,
    pub l: u64,
    pub target_accuracy: f64,
    pub sample_budget: u64,
    /// Exit 1 when the trace distance to the uniform grid state exceeds this.
    pub max_trace_distance: f64,
}

impl Default for PrepareStateConfig {
    fn default() -> Self {
        let p = PrepareConfig::default();
        PrepareStateConfig {
            n: 2,
            radius: 3.0,
            l: 8,
            target_accuracy: p.target_accuracy,
            sample_budget: p.sample_budget,
            max_trace_distance: 0.01,
        }
    }
}

impl PrepareStateConfig {
    pub(super) fn apply(&mut self, a: &PrepareArgs) {
        self.n = a.n.unwrap_or(self.n);
        self.radius = a.radius.unwrap_or(self.radius);
        self.l = a.l.unwrap_or(self.l);
    }
}

pub(super) fn prepare_state(c: &PrepareStateConfig, seed: u64) -> Result<Outcome, HarnessError> {
    let spec = BallGridSpec::centered(c.n, c.radius, c.l);
    let config = PrepareConfig {
        target_accuracy: c.target_accuracy,
        sample_budget: c.sample_budget,
        seed,
    };
    let state = grover_rudolph_prepare(&spec, &config).map_err(|e| HarnessError::Usage(e.to_string()))?;
    let cert = &state.certificate;
    Ok(Outcome {
        passed: cert.trace_distance_uniform_grid <= c.max_trace_distance,
        result: json!({
            "certificate": to_value(cert)?,
            "qubits": state.tree.qubits,
            "cube_exponent": state.tree.m,
            "bits_per_coordinate": state.tree.bits_per_coordinate,
            "max_relative_error": state.tree.max_relative_error,
            "first_split_exact_half": cert.first_split == (0.5, 0.5),
        }),
    })
}

// ------------------------------------------------------------------- selftest

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestConfig {}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String), String>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(detail) => Check {
            name,
            passed: false,
            detail,
        },
    }
}

pub(super) fn selftest(_c: &SelftestConfig, seed: u64) -> Result<Outcome, HarnessError> {
    let s = |e: &dyn std::fmt::Display| e.to_string();
    let checks = vec![
        check("lattice: planted instance and LLL", || {
            let inst = gen_unique_lattice(&GenConfig::new(2, 8.0), &mut stream(seed, "selftest-lattice"))
                .map_err(|e| s(&e))?;
            let cert = inst.verify().map_err(|e| s(&e))?;
            let (red, _) = inst.reduced().map_err(|e| s(&e))?;
            let b1 = red.basis.row(0);
            let u = inst.planted_vector().unwrap_or_default();
            let ok = b1 == u.as_slice() || b1.iter().zip(&u).all(|(a, b)| *a == -b);
            Ok((
                ok && cert.gap().unwrap_or(0.0) >= 8.0,
                format!("b1 = {b1:?}, planted = {u:?}"),
            ))
        }),
        check("subsetsum: small instance", || {
            let ans = SubsetSumOracle::MeetInMiddle
                .solve(&[3, 5, 7], 1, 7)
                .map_err(|e| s(&e))?;
            Ok((ans.map(|a| a.0) == Some(0b011), format!("{ans:?}")))
        }),
        check("matching: involution at N = 64", || {
            let bad: usize = (1..8)
                .flat_map(|q| [MatchingKind::First, MatchingKind::Second].map(|k| MatchingDesc::new(k, q, 64)))
                .map(|f| involution_violations(&f).0)
                .sum();
            Ok((bad == 0, format!("{bad} violations")))
        }),
        check("dcp: recovers a planted shift at N = 64", || {
            let mut world = DcpWorld::new(64, Some(37), Some(0.0), seed).map_err(|e| s(&e))?;
            let tr = run_dcp(&mut world, &SubsetSumOracle::MeetInMiddle, &DcpConfig::default()).map_err(|e| s(&e))?;
            Ok((tr.candidates.contains(&37), format!("candidates {:?}", tr.candidates)))
        }),
        check("svp: encode/decode roundtrip", || {
            use crate::svp::{decode_difference, encode_difference};
            let mut fails = 0;
            for x in -3..4i64 {
                for y in -3..4i64 {
                    let d = encode_difference(&[x, y], 4).map_err(|e| s(&e))?;
                    if decode_difference(d, 4, 2).map_err(|e| s(&e))? != vec![x, y] {
                        fails += 1;
                    }
                }
            }
            Ok((fails == 0, format!("{fails} mismatches")))
        }),
        check("geometry: lens ratio", || {
            let r = ball_intersection_ratio(2, 2.0, &[1.0, 0.0], 0, &mut stream(seed, "selftest-geo"))
                .map_err(|e| s(&e))?;
            Ok(((r.value() - 0.685).abs() < 1e-3, format!("{:.5}", r.value())))
        }),
    ];
    let passed = checks.iter().all(|c| c.passed);
    Ok(Outcome {
        passed,
        result: json!({ "checks": to_value(&checks)? }),
    })
}
