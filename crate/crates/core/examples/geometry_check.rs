//! Ball geometry: lens ratios against grid counts, volume tolerance, boundary layer.
//!
//! cargo run --release --example geometry_check

use dcp_svp::geometry::{
    ball_intersection_ratio, boundary_layer, grid_intersection_ratio, grid_volume_check, BallGridSpec,
};
use dcp_svp::rng::stream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = stream(1, "example");
    println!("{:>3} {:>6} {:>9} {:>9} {:>9}", "R", "‖d̄‖", "lens", "grid", "bound");
    for radius in [2.0, 4.0, 8.0] {
        let spec = BallGridSpec::centered(2, radius, 8);
        for d in [[1, 0], [1, 1], [2, 0]] {
            let exact = ball_intersection_ratio(2, radius, &[d[0] as f64, d[1] as f64], 0, &mut rng)?;
            let grid = grid_intersection_ratio(&spec, &d)?;
            println!(
                "{radius:>3} {:>6.3} {:>9.5} {:>9.5} {:>9.5}",
                exact.dist,
                exact.value(),
                grid,
                exact.lower_bound
            );
        }
    }
    let mc = ball_intersection_ratio(5, 4.0, &[1.0, 0.0, 0.0, 0.0, 0.0], 200_000, &mut rng)?;
    println!("n=5 Monte Carlo: {:.4} ± {:.4}", mc.value(), mc.std_err.unwrap_or(0.0));

    for (n, r, l) in [(2, 4.0, 8), (3, 4.0, 8), (4, 3.0, 4)] {
        let spec = BallGridSpec::centered(n, r, l);
        let v = grid_volume_check(&spec)?;
        let b = boundary_layer(&spec)?;
        println!(
            "n={n} R={r} L={l}: {} points, rel. error {:+.4} (tol {:.4}), boundary {:.3} ≤ {:.3}",
            v.count, v.relative_error, v.tolerance, b.fraction, b.bound
        );
    }
    Ok(())
}
