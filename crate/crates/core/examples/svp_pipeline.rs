//! End-to-end: planted 2-D lattice → LLL → two-point registers → DCP → shortest vector.
//!
//! cargo run --release --example svp_pipeline -- [seed] [M] [samples_per_arm]

use std::time::Instant;

use dcp_svp::dcp::DcpConfig;
use dcp_svp::lattice::{gen_unique_lattice, GenConfig};
use dcp_svp::rng::stream;
use dcp_svp::subsetsum::SubsetSumOracle;
use dcp_svp::svp::{solve_unique_svp, SvpConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().map_or(Ok(1), |s| s.parse())?;
    let range: u64 = args.get(1).map_or(Ok(8), |s| s.parse())?;
    let samples: usize = args.get(2).map_or(Ok(128), |s| s.parse())?;

    let instance = gen_unique_lattice(&GenConfig::new(2, 24.0), &mut stream(seed, "instance"))?;
    println!("basis {:?}, gap ≥ {}", instance.basis.rows(), instance.gap);
    let config = SvpConfig {
        range: Some(range),
        oracle: SubsetSumOracle::Exhaustive,
        dcp: DcpConfig {
            samples_per_arm: samples,
            max_calls_per_arm: samples * 64,
            window: 16,
            ..DcpConfig::default()
        },
        ..SvpConfig::default()
    };
    let start = Instant::now();
    let report = solve_unique_svp(&instance, &config, seed)?;
    println!(
        "p = {}, M = {}, N = {}, {} cells in {:.2?}",
        report.p,
        report.range,
        report.modulus,
        report.cells.len(),
        start.elapsed()
    );
    println!("LLL b1 = {:?} (‖·‖² = {})", report.lll_vector, report.lll_norm_sq);
    for cell in report.cells.iter().filter(|c| !c.vectors.is_empty()) {
        println!(
            "  l = {:.3}, i0 = {}, m = {:>2}: d = {:?} → {:?} ({} of {} registers bad)",
            cell.length, cell.i0, cell.m, cell.d_candidates, cell.vectors, cell.bad_registers, cell.registers
        );
    }
    let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
    println!("{failed} cells ended without an estimate");
    println!(
        "status {:?}, winner {:?}",
        report.status,
        report.winner.as_ref().map(|w| &w.vector)
    );
    println!("matches planted: {:?}", report.planted_match);
    Ok(())
}
