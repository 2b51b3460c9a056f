//! Fourier-sampled DCP registers and the R1/R2 bit statistics of their phases.
//!
//! cargo run --release --example phase_register -- [N] [d] [samples]

use dcp_svp::dcp::{DcpWorld, QubitBasis, RoutineOutcome};
use dcp_svp::matching::{MatchingDesc, MatchingKind};
use dcp_svp::subsetsum::SubsetSumOracle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: u64 = args.first().map_or(Ok(4096), |s| s.parse())?;
    let d: u64 = args.get(1).map_or(Ok(n / 3), |s| s.parse())?;
    let samples: usize = args.get(2).map_or(Ok(4000), |s| s.parse())?;

    let mut world = DcpWorld::new(n, Some(d), Some(0.0), 1)?;
    let regs = world.sample_phase_registers(8)?;
    let outcomes: Vec<u64> = regs.iter().map(|r| r.outcome()).collect();
    println!("first outcomes a_i: {outcomes:?}");

    // Each routine success leaves |0⟩ + e(q·d/N)|1⟩ for the matching step q.
    let q = 1;
    let f = MatchingDesc::new(MatchingKind::First, q, n);
    let oracle = SubsetSumOracle::MeetInMiddle;
    let r = dcp_svp::subsetsum::default_r(n);
    let mut counts = [[0usize; 2]; 2];
    let mut calls = 0;
    while counts[0][1] + counts[1][1] < samples {
        let regs = world.sample_phase_registers(r)?;
        let a: Vec<u64> = regs.iter().map(|x| x.outcome()).collect();
        let prepared = oracle.prepare(&a, n)?;
        calls += 1;
        if let RoutineOutcome::Success { qubit, .. } = world.two_point_routine(&regs, &prepared, &f)? {
            let which = calls % 2;
            let basis = if which == 0 { QubitBasis::R1 } else { QubitBasis::R2 };
            counts[which][0] += usize::from(world.measure_qubit(qubit, basis)?);
            counts[which][1] += 1;
        }
    }
    let theta = 2.0 * std::f64::consts::PI * (q * d) as f64 / n as f64;
    let mean = |c: [usize; 2]| c[0] as f64 / c[1] as f64;
    println!("{calls} routine calls, {samples} successes");
    println!(
        "R1 mean {:.4}, expected {:.4}",
        mean(counts[0]),
        0.5 - 0.5 * theta.cos()
    );
    println!(
        "R2 mean {:.4}, expected {:.4}",
        mean(counts[1]),
        0.5 + 0.5 * theta.sin()
    );
    Ok(())
}
