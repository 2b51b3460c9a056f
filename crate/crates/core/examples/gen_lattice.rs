//! Planted unique-SVP instance with a certified gap, round-tripped through JSON.
//!
//! cargo run --release --example gen_lattice -- [n] [gap] [seed]

use dcp_svp::lattice::{gen_unique_lattice, GenConfig, LatticeInstance};
use dcp_svp::rng::stream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(3), |s| s.parse())?;
    let gap: f64 = args.get(1).map_or(Ok(8.0), |s| s.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(7), |s| s.parse())?;

    let instance = gen_unique_lattice(&GenConfig::new(n, gap), &mut stream(seed, "instance"))?;
    let cert = instance.verify()?;
    println!("basis:");
    for row in instance.basis.rows() {
        println!("  {row:?}");
    }
    println!("planted u (coefficients) = {:?}", instance.planted_u);
    println!(
        "shortest vector {:?}, λ₁² = {}",
        cert.shortest.vector, cert.shortest.norm_sq
    );
    println!(
        "certified gap λ₂/λ₁ = {:.3} (stored lower bound {})",
        cert.gap().unwrap_or(f64::INFINITY),
        instance.gap
    );

    let json = instance.to_json();
    let back = LatticeInstance::from_json(&json)?;
    assert_eq!(back, instance);
    println!("JSON ({} bytes) round-trips", json.len());
    Ok(())
}
