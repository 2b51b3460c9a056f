//! One routine call analysed two ways: by set enumeration and by a state-vector run.
//!
//! cargo run --release --example two_point_routine -- [r] [seed]

use dcp_svp::dcp::DcpWorld;
use dcp_svp::matching::{MatchingDesc, MatchingKind};
use dcp_svp::subsetsum::SubsetSumOracle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let r: usize = args.first().map_or(Ok(8), |s| s.parse())?;
    let seed: u64 = args.get(1).map_or(Ok(3), |s| s.parse())?;
    let n = 256;

    let mut world = DcpWorld::new(n, Some(77), Some(0.2), seed)?;
    let regs = world.sample_phase_registers(r)?;
    let a: Vec<u64> = regs.iter().map(|x| x.outcome()).collect();
    let oracle = SubsetSumOracle::Exhaustive.prepare(&a, n)?;
    let f = MatchingDesc::new(MatchingKind::Second, 3, n);

    let audit = world.audit();
    let bad = regs.iter().filter(|x| audit.is_bad(x)).count();
    println!("A = {a:?}, {bad} bad registers, f = f²_3");
    let sets = audit.analyze_routine(&regs, &oracle, &f)?;
    let dense = audit.simulate_routine_qsim(&regs, &oracle, &f)?;
    println!(
        "Pr[γ = 1]: enumeration {:.6}, state vector {:.6} (|L| = {}, |R| = {})",
        sets.success_probability, dense.success_probability, sets.l_size, sets.r_size
    );
    for (beta, res) in sets.residuals.iter().take(5) {
        let other = &dense.residuals[beta];
        println!(
            "  β̄ = {beta:0w$b} ↔ {:0w$b}: weights {:.3?}, phase {:.6?} | {:.6?}",
            res.partner,
            res.weights,
            res.relative_phase,
            other.relative_phase,
            w = r
        );
    }
    let worst = sets
        .beta_distribution
        .iter()
        .map(|(b, p)| (p - dense.beta_distribution.get(b).copied().unwrap_or(0.0)).abs())
        .fold(0.0f64, f64::max);
    println!("max |ΔPr[β̄]| = {worst:.2e}");
    Ok(())
}
