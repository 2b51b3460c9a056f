//! Bit-by-bit amplitude preparation over the ball grid and its certificate.
//!
//! cargo run --release --example prepare_state -- [n] [R] [L]

use dcp_svp::geometry::{grover_rudolph_prepare, BallGridSpec, PrepareConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(2), |s| s.parse())?;
    let radius: f64 = args.get(1).map_or(Ok(3.0), |s| s.parse())?;
    let l: u64 = args.get(2).map_or(Ok(8), |s| s.parse())?;

    let state = grover_rudolph_prepare(&BallGridSpec::centered(n, radius, l), &PrepareConfig::default())?;
    let t = &state.tree;
    println!(
        "cube [−2^{}, 2^{}]^{n}, {} bits per coordinate, {} qubits",
        t.m, t.m, t.bits_per_coordinate, t.qubits
    );
    println!("first splits (heap order): {:.4?}", &t.split[1..t.split.len().min(8)]);
    let c = &state.certificate;
    println!("first split {:?}", c.first_split);
    println!(
        "trace distance to the uniform grid state   {:.4}",
        c.trace_distance_uniform_grid
    );
    println!(
        "trace distance to the volume-weighted state {:?}",
        c.trace_distance_volume_state
    );
    println!("inner-product bound (1 − ε)^K = {:.6}", c.inner_product_bound);
    Ok(())
}
