//! Acceptance battery: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//!
//! cargo test --release --test acceptance            # all criteria
//! cargo test --release --test acceptance -- 3 9     # a subset

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use dcp_svp::dcp::{solve_dcp, DcpConfig, DcpWorld, QubitBasis, RoutineAnalysis, RoutineOutcome};
use dcp_svp::geometry::{
    ball_intersection_ratio, grid_intersection_ratio, grid_volume_check, grover_rudolph_prepare, BallGridSpec,
    PrepareConfig,
};
use dcp_svp::harness::{involution_violations, oracle_equivalence};
use dcp_svp::lattice::{gen_unique_lattice, GenConfig};
use dcp_svp::matching::{check_pair_density, pair_density_bound, MatchingDesc, MatchingKind};
use dcp_svp::rng::{indexed_stream, stream};
use dcp_svp::subsetsum::{ceil_log2, default_r, estimate_legal_fraction, SubsetSumOracle, TargetSet};
use dcp_svp::svp::{
    decode_difference, encode_difference, hidden_difference, solve_unique_svp, ReductionParams, SamplerKind,
    SamplerMode, SvpConfig, SvpError, SvpStatus, TwoPointSampler,
};

type Check = Result<(bool, String), String>;

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed.as_secs_f64() < limit_secs as f64
}

/// Born statistics of R1/R2 on the residual qubit.
fn c1() -> Check {
    let start = Instant::now();
    let n = 4096u64;
    let target = 10_000usize;
    let mut lines = Vec::new();
    let mut ok = true;
    for (label, d) in [("1/3", 1365u64), ("1/4", 1024), ("1/8", 512)] {
        let q = 1;
        let f = MatchingDesc::new(MatchingKind::First, q, n);
        let mut world = DcpWorld::new(n, Some(d), Some(0.0), d).map_err(|e| e.to_string())?;
        let oracle = SubsetSumOracle::MeetInMiddle;
        let r = default_r(n);
        // [ones, successes] per basis.
        let mut tally = [[0usize; 2]; 2];
        let mut turn = 0;
        while tally[0][1] < target || tally[1][1] < target {
            let regs = world.sample_phase_registers(r).map_err(|e| e.to_string())?;
            let a: Vec<u64> = regs.iter().map(|x| x.outcome()).collect();
            let prepared = oracle.prepare(&a, n).map_err(|e| e.to_string())?;
            if let RoutineOutcome::Success { qubit, .. } = world
                .two_point_routine(&regs, &prepared, &f)
                .map_err(|e| e.to_string())?
            {
                let which = if tally[0][1] >= target {
                    1
                } else if tally[1][1] >= target {
                    0
                } else {
                    turn
                };
                turn ^= 1;
                let basis = [QubitBasis::R1, QubitBasis::R2][which];
                tally[which][0] += usize::from(world.measure_qubit(qubit, basis).map_err(|e| e.to_string())?);
                tally[which][1] += 1;
            }
        }
        let theta = 2.0 * PI * (q * d) as f64 / n as f64;
        let expect = [0.5 - 0.5 * theta.cos(), 0.5 + 0.5 * theta.sin()];
        for (i, name) in ["R1", "R2"].iter().enumerate() {
            let mean = tally[i][0] as f64 / tally[i][1] as f64;
            let sigma = (expect[i] * (1.0 - expect[i]) / tally[i][1] as f64).sqrt().max(1e-12);
            let z = (mean - expect[i]) / sigma;
            ok &= z.abs() <= 4.0;
            lines.push(format!("{label} {name} {mean:.4} vs {:.4} (z={z:+.2})", expect[i]));
        }
    }
    let t = start.elapsed();
    Ok((ok && within(t, 60), format!("{}; {t:.1?}", lines.join(", "))))
}

fn max_analysis_gap(a: &RoutineAnalysis, b: &RoutineAnalysis) -> Result<f64, String> {
    if (a.l_size, a.r_size) != (b.l_size, b.r_size) || a.beta_distribution.len() != b.beta_distribution.len() {
        return Err(format!(
            "set sizes differ: {:?} vs {:?}",
            (a.l_size, a.r_size),
            (b.l_size, b.r_size)
        ));
    }
    let mut gap = (a.success_probability - b.success_probability).abs();
    for (beta, p) in &a.beta_distribution {
        let q = b.beta_distribution.get(beta).ok_or("β̄ support differs")?;
        gap = gap.max((p - q).abs());
    }
    for (beta, ra) in &a.residuals {
        let rb = b.residuals.get(beta).ok_or("residual support differs")?;
        if ra.partner != rb.partner {
            return Err(format!("partner differs at β̄={beta}"));
        }
        gap = gap
            .max((ra.weights.0 - rb.weights.0).abs())
            .max((ra.weights.1 - rb.weights.1).abs());
        match (ra.relative_phase, rb.relative_phase) {
            (Some(x), Some(y)) => gap = gap.max((x.0 - y.0).abs()).max((x.1 - y.1).abs()),
            (None, None) => {}
            _ => return Err(format!("phase presence differs at β̄={beta}")),
        }
    }
    Ok(gap)
}

/// Set-based routine analysis against the state-vector simulation.
fn c2() -> Check {
    let start = Instant::now();
    let gaps = (0..100u64)
        .into_par_iter()
        .map(|case| {
            let mut rng = indexed_stream(2, "acceptance-c2", case);
            let n = 1u64 << rng.random_range(4..=12u32);
            let r = rng.random_range(2..=14usize);
            let q = rng.random_range(1..=(n / 4).min(64));
            let kind = if rng.random::<bool>() {
                MatchingKind::First
            } else {
                MatchingKind::Second
            };
            let bad = [0.0, 0.1, 0.3][rng.random_range(0..3)];
            let mut world = DcpWorld::new(n, None, Some(bad), rng.random()).map_err(|e| e.to_string())?;
            let regs = world.sample_phase_registers(r).map_err(|e| e.to_string())?;
            let a: Vec<u64> = regs.iter().map(|x| x.outcome()).collect();
            let oracle = SubsetSumOracle::Exhaustive.prepare(&a, n).map_err(|e| e.to_string())?;
            let f = MatchingDesc::new(kind, q, n);
            let audit = world.audit();
            let sets = audit.analyze_routine(&regs, &oracle, &f).map_err(|e| e.to_string())?;
            let dense = audit
                .simulate_routine_qsim(&regs, &oracle, &f)
                .map_err(|e| e.to_string())?;
            max_analysis_gap(&sets, &dense)
        })
        .collect::<Result<Vec<f64>, String>>()?;
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    let t = start.elapsed();
    Ok((
        worst <= 1e-10 && within(t, 300),
        format!("100 cases, max deviation {worst:.2e}; {t:.1?}"),
    ))
}

fn dcp_batch(oracle_spec: &str, bad_prob: f64, runs: u64, salt: &str) -> Result<usize, String> {
    let config = DcpConfig {
        registers_per_call: Some(16),
        ..DcpConfig::default()
    };
    let hits = (0..runs)
        .into_par_iter()
        .map(|i| {
            let seed = indexed_stream(3, salt, i).random::<u64>();
            let oracle = SubsetSumOracle::parse(oracle_spec, seed).map_err(|e| e.to_string())?;
            let mut world = DcpWorld::new(4096, None, Some(bad_prob), seed).map_err(|e| e.to_string())?;
            let t = solve_dcp(&mut world, &oracle, &config);
            let d = world.audit().planted_shift().ok_or("no planted shift")?;
            Ok(matches!(t, Ok(t) if t.candidates.contains(&d)))
        })
        .collect::<Result<Vec<bool>, String>>()?;
    Ok(hits.into_iter().filter(|&h| h).count())
}

/// DCP end to end at N = 4096.
fn c3() -> Check {
    let start = Instant::now();
    let noisy = dcp_batch("exhaustive", 1.0 / 12.0, 50, "acceptance-c3-noisy")?;
    let clean = dcp_batch("unreliable:1.0", 0.0, 50, "acceptance-c3-clean")?;
    let t = start.elapsed();
    Ok((
        noisy * 100 >= 80 * 50 && clean * 100 >= 95 * 50 && within(t, 600),
        format!("bad 1/12: {noisy}/50, bad 0: {clean}/50; {t:.1?}"),
    ))
}

/// Legal-input fraction and oracle equivalence.
fn c4() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for n in [256u64, 1024, 4096] {
        let r = ceil_log2(n) as usize + 4;
        let lf = estimate_legal_fraction(r, n, 1000, 4 ^ n).map_err(|e| e.to_string())?;
        ok &= lf.fraction <= 0.5;
        lines.push(format!("N={n} r={r}: {:.3}", lf.fraction));
    }
    let eq = oracle_equivalence(1000, 4).map_err(|e| e.to_string())?;
    let mismatches = eq.iter().filter(|(_, same, valid)| !same || !valid).count();
    ok &= mismatches == 0;
    Ok((
        ok,
        format!(
            "failure fractions {}; {mismatches}/1000 oracle mismatches",
            lines.join(", ")
        ),
    ))
}

/// Matching involutions and pair density.
fn c5() -> Check {
    let n = 4096;
    let mut violations = 0;
    let mut empty = 0;
    for kind in [MatchingKind::First, MatchingKind::Second] {
        for q in 1..=64 {
            let (bad, domain) = involution_violations(&MatchingDesc::new(kind, q, n));
            violations += bad;
            empty += usize::from(domain == 0);
        }
    }
    let m = 1024u64;
    let mut lines = Vec::new();
    let mut met_all = true;
    for s in [2u64, 4, 8] {
        let mut worst = usize::MAX;
        for i in 0..100 {
            let mut rng = indexed_stream(5, "acceptance-c5", s * 1000 + i);
            let chosen = rand::seq::index::sample(&mut rng, m as usize, m.div_ceil(s) as usize);
            let set = TargetSet::from_iter(m, chosen.iter().map(|x| x as u64));
            let best = check_pair_density(&set, 1, s).map_err(|e| e.to_string())?;
            worst = worst.min(best.pairs);
        }
        let bound = pair_density_bound(m, s);
        met_all &= worst as f64 >= bound;
        lines.push(format!("s={s}: min {worst} ≥ {bound:.3}"));
    }
    Ok((
        violations == 0 && empty == 0 && met_all,
        format!(
            "{violations} involution violations over 128 matchings; {}",
            lines.join(", ")
        ),
    ))
}

/// Register structure of the cube sampler.
fn c6() -> Check {
    let instance =
        gen_unique_lattice(&GenConfig::new(2, 8.0), &mut stream(6, "acceptance-c6")).map_err(|e| e.to_string())?;
    let cert = instance.verify().map_err(|e| e.to_string())?;
    let gap = cert.gap().unwrap_or(0.0);
    let (reduced, _) = instance.reduced().map_err(|e| e.to_string())?;
    let mut u = reduced.planted_u.clone().ok_or("no planted vector")?;
    let (p, range) = (17u64, 64u64);
    let i0 = u.iter().position(|&x| x != 0).ok_or("zero planted vector")?;
    if u[i0] < 0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    let m = u[i0].rem_euclid(p as i64) as u64;
    let expected = hidden_difference(&u, p, m, i0).ok_or("residue does not divide")?;
    let length = (reduced.basis.row(0).iter().map(|x| x * x).sum::<i64>() as f64).sqrt();
    let mut rng = stream(6, "acceptance-c6-shifts");
    let params = ReductionParams {
        p,
        m,
        i0,
        length,
        range,
        cell: 16.0 * length,
        shifts: (0..2).map(|_| rng.random::<f64>()).collect(),
        mode: SamplerMode::Cube,
        sampler: SamplerKind::Exhaustive,
        grid_scale: 16,
    };
    let sampler = TwoPointSampler::new(&reduced.basis, params, None).map_err(|e| e.to_string())?;
    let (mut good, mut violations, mut wrong) = (0usize, 0usize, 0usize);
    let draws = 10_000;
    for _ in 0..draws {
        match sampler.sample(&mut rng) {
            Ok(reg) => {
                if let Some(diff) = reg.difference() {
                    good += 1;
                    let round = encode_difference(&diff, range)
                        .and_then(|d| decode_difference(d, range, 2))
                        .map_err(|e| e.to_string())?;
                    wrong += usize::from(diff != expected || round != expected);
                }
            }
            Err(SvpError::StructuralViolation { .. }) => violations += 1,
            Err(e) => return Err(e.to_string()),
        }
    }
    let floor = 1.0 - 1.0 / (2.0 * (2.0 * range as f64).log2());
    let frac = good as f64 / draws as f64;
    Ok((
        gap >= 8.0 && violations == 0 && frac >= floor && wrong == 0,
        format!(
            "gap {gap:.2}, u={u:?}, i0={i0}, m={m}: {violations} violations, good {frac:.4} ≥ {floor:.4}, \
             {wrong} wrong differences (expected {expected:?})"
        ),
    ))
}

/// Grid ratios against lens ratios, and the grid volume tolerance.
fn c7() -> Check {
    let mut worst: f64 = 0.0;
    let mut rng = stream(7, "acceptance-c7");
    for radius in [2.0, 4.0, 8.0] {
        let spec = BallGridSpec::centered(2, radius, 8);
        for d in [[1i64, 0], [0, 1], [1, 1], [2, 0], [2, 1], [3, 0]] {
            let exact = ball_intersection_ratio(2, radius, &[d[0] as f64, d[1] as f64], 0, &mut rng)
                .map_err(|e| e.to_string())?;
            let grid = grid_intersection_ratio(&spec, &d).map_err(|e| e.to_string())?;
            worst = worst.max((grid - exact.value()).abs());
        }
    }
    let mut cases = 0;
    let mut failures = Vec::new();
    for n in 1..=3usize {
        for radius in [2.0, 4.0, 8.0] {
            for l in [2u64, 4, 8] {
                let v = grid_volume_check(&BallGridSpec::centered(n, radius, l)).map_err(|e| e.to_string())?;
                if v.applies {
                    cases += 1;
                    if !v.holds() {
                        failures.push(format!("n={n} R={radius} L={l}: {:+.4}", v.relative_error));
                    }
                }
            }
        }
    }
    Ok((
        worst <= 0.02 && failures.is_empty(),
        format!(
            "max |grid − lens| = {worst:.4}; volume tolerance held on {}/{cases} cases {failures:?}",
            cases - failures.len()
        ),
    ))
}

/// State-preparation certificate.
fn c8() -> Check {
    let state = grover_rudolph_prepare(&BallGridSpec::centered(2, 3.0, 8), &PrepareConfig::default())
        .map_err(|e| e.to_string())?;
    let c = &state.certificate;
    Ok((
        c.trace_distance_uniform_grid <= 0.01 && c.first_split == (0.5, 0.5),
        format!(
            "trace distance to uniform grid state {:.4} (bound 0.01), to volume-weighted state {:.1e}; first split {:?}",
            c.trace_distance_uniform_grid,
            c.trace_distance_volume_state.unwrap_or(f64::NAN),
            c.first_split
        ),
    ))
}

/// SVP end to end at n = 2.
fn c9() -> Check {
    let start = Instant::now();
    let config = SvpConfig {
        range: Some(8),
        oracle: SubsetSumOracle::Exhaustive,
        dcp: DcpConfig {
            samples_per_arm: 128,
            max_calls_per_arm: 128 * 64,
            window: 16,
            ..DcpConfig::default()
        },
        ..SvpConfig::default()
    };
    let mut recovered = 0;
    let mut unverified = 0;
    let mut emitted = 0;
    for seed in 0..20u64 {
        let instance = gen_unique_lattice(&GenConfig::new(2, 8.0), &mut stream(seed, "acceptance-c9"))
            .map_err(|e| e.to_string())?;
        instance.verify().map_err(|e| e.to_string())?;
        let report = solve_unique_svp(&instance, &config, seed).map_err(|e| e.to_string())?;
        for c in &report.candidates {
            emitted += 1;
            let member = instance
                .basis
                .combine(&c.coeffs)
                .map(|v| v == c.vector)
                .unwrap_or(false);
            if !member || c.norm_sq == 0 || c.norm_sq > report.lll_norm_sq {
                unverified += 1;
            }
        }
        if report.status == SvpStatus::Found && report.planted_match == Some(true) {
            recovered += 1;
        }
    }
    let t = start.elapsed();
    Ok((
        recovered * 100 >= 60 * 20 && unverified == 0 && within(t, 1800),
        format!("±u recovered in {recovered}/20 runs; {unverified}/{emitted} emitted candidates unverified; {t:.1?}"),
    ))
}

/// Exhaustive encode/decode roundtrip.
fn c10() -> Check {
    let mut total = 0usize;
    let mut bad = 0usize;
    for (n, m) in [(2usize, 4u64), (2, 8), (3, 4)] {
        let side = 2 * m as i64 - 1;
        for idx in 0..side.pow(n as u32) {
            let b: Vec<i64> = (0..n)
                .map(|k| (idx / side.pow(k as u32)) % side - (m as i64 - 1))
                .collect();
            let d = encode_difference(&b, m).map_err(|e| e.to_string())?;
            total += 1;
            bad += usize::from(decode_difference(d, m, n).map_err(|e| e.to_string())? != b);
        }
    }
    Ok((bad == 0, format!("{total} vectors, {bad} mismatches")))
}

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn() -> Check); 10] = [
        (1, "R1/R2 Born statistics", c1),
        (2, "routine exactness", c2),
        (3, "DCP end to end", c3),
        (4, "subset-sum statistics", c4),
        (5, "matching properties", c5),
        (6, "two-point register structure", c6),
        (7, "ball geometry", c7),
        (8, "state preparation", c8),
        (9, "SVP end to end", c9),
        (10, "encode/decode roundtrip", c10),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!ok);
        println!("{} {id:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
