//! Recover a planted d from simulated coset registers.
//!
//! cargo run --release --example dcp_solve -- [N] [d] [oracle] [samples_per_arm]

use std::time::Instant;

use dcp_svp::dcp::{solve_dcp, DcpConfig, DcpWorld};
use dcp_svp::subsetsum::SubsetSumOracle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: u64 = args.first().map_or(Ok(4096), |s| s.parse())?;
    let d: u64 = args.get(1).map_or(Ok(1234 % n), |s| s.parse())?;
    let oracle = SubsetSumOracle::parse(args.get(2).map_or("mitm", String::as_str), 7)?;
    let samples: usize = args.get(3).map_or(Ok(512), |s| s.parse())?;

    let mut world = DcpWorld::new(n, Some(d), None, 42)?;
    let config = DcpConfig {
        samples_per_arm: samples,
        ..DcpConfig::default()
    };
    let start = Instant::now();
    let transcript = solve_dcp(&mut world, &oracle, &config)?;
    let elapsed = start.elapsed();

    println!("N = {n}, oracle = {}, q̂ = {}", oracle.name(), transcript.q_hat);
    for s in &transcript.stages {
        println!(
            "  stage {:>2}: q_i = {:>4}  q' = {:>5}  x = {:>9.2}  q_next = {:>4}  x_combined = {:>11.2}  ({} successes / {} calls)",
            s.stage, s.q_i, s.q_prime, s.x, s.q_next, s.x_combined, s.successes, s.calls
        );
    }
    println!("d' = {}, candidates = {:?}", transcript.d_prime, transcript.candidates);
    println!("answer = {:?} (planted {d})", transcript.answer());
    println!("{} routine calls in {:.2?}", transcript.routine_calls, elapsed);
    Ok(())
}
