use dcp_svp::dcp::{solve_dcp, DcpConfig, DcpWorld, RoutineAnalysis};
use dcp_svp::matching::{MatchingDesc, MatchingKind};
use dcp_svp::rng::indexed_stream;
use dcp_svp::subsetsum::SubsetSumOracle;
use rand::Rng;

const SOLVER_SOURCE: &str = include_str!("../src/dcp/solver.rs");

#[test]
fn solver_source_never_touches_world_secrets() {
    for word in ["audit", "secret", "reveal", "planted_shift", "is_bad", "register_phase"] {
        assert!(!SOLVER_SOURCE.contains(word), "solver mentions `{word}`");
    }
}

fn assert_close(a: &RoutineAnalysis, b: &RoutineAnalysis, tol: f64) {
    assert_eq!(
        (a.l_size, a.r_size, a.bad_registers),
        (b.l_size, b.r_size, b.bad_registers)
    );
    assert!((a.success_probability - b.success_probability).abs() <= tol);
    assert_eq!(a.beta_distribution.len(), b.beta_distribution.len());
    for (beta, p) in &a.beta_distribution {
        assert!((p - b.beta_distribution[beta]).abs() <= tol);
    }
    for (beta, ra) in &a.residuals {
        let rb = &b.residuals[beta];
        assert_eq!(ra.partner, rb.partner);
        assert!((ra.weights.0 - rb.weights.0).abs() <= tol && (ra.weights.1 - rb.weights.1).abs() <= tol);
        match (ra.relative_phase, rb.relative_phase) {
            (Some(x), Some(y)) => assert!((x.0 - y.0).abs() <= tol && (x.1 - y.1).abs() <= tol),
            (None, None) => {}
            other => panic!("phase presence differs: {other:?}"),
        }
    }
}

#[test]
fn set_analysis_matches_state_vector_with_bad_registers() {
    for case in 0..24u64 {
        let mut rng = indexed_stream(5, "routine-equivalence", case);
        let n = [16u64, 64, 256, 1024][rng.random_range(0..4)];
        let r = rng.random_range(2..=10usize);
        let q = rng.random_range(1..n.min(40));
        let kind = if rng.random::<bool>() {
            MatchingKind::First
        } else {
            MatchingKind::Second
        };
        let mut world = DcpWorld::new(n, None, Some(0.3), rng.random()).unwrap();
        let regs = world.sample_phase_registers(r).unwrap();
        let a: Vec<u64> = regs.iter().map(|x| x.outcome()).collect();
        let oracle = SubsetSumOracle::Exhaustive.prepare(&a, n).unwrap();
        let f = MatchingDesc::new(kind, q, n);
        let audit = world.audit();
        let sets = audit.analyze_routine(&regs, &oracle, &f).unwrap();
        let dense = audit.simulate_routine_qsim(&regs, &oracle, &f).unwrap();
        assert_close(&sets, &dense, 1e-10);
    }
}

#[test]
fn solver_recovers_planted_shift_with_corruption() {
    let config = DcpConfig {
        samples_per_arm: 256,
        max_calls_per_arm: 256 * 64,
        ..DcpConfig::default()
    };
    let mut hits = 0;
    for seed in 0..4 {
        let mut world = DcpWorld::new(1024, None, Some(1.0 / 10.0), seed).unwrap();
        let t = solve_dcp(&mut world, &SubsetSumOracle::MeetInMiddle, &config).unwrap();
        let d = world.audit().planted_shift().unwrap();
        hits += usize::from(t.candidates.contains(&d));
    }
    assert!(hits >= 3, "{hits}/4");
}

#[test]
fn degenerate_modulus_two() {
    for d in 0..2 {
        let mut world = DcpWorld::new(2, Some(d), Some(0.0), d).unwrap();
        let t = solve_dcp(&mut world, &SubsetSumOracle::Exhaustive, &DcpConfig::default()).unwrap();
        assert!(t.candidates.contains(&d));
    }
}
