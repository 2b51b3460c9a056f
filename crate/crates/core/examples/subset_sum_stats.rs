//! Modular subset sum: both oracles, the legal-input fraction and CSV output.
//!
//! cargo run --release --example subset_sum_stats -- [N] [trials]

use dcp_svp::rng::stream;
use dcp_svp::subsetsum::{
    ceil_log2, estimate_legal_fraction, random_sequence, write_csv, SubsetSumInstance, SubsetSumOracle,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: u64 = args.first().map_or(Ok(1024), |s| s.parse())?;
    let trials: usize = args.get(1).map_or(Ok(1000), |s| s.parse())?;
    let log = ceil_log2(n) as usize;

    let mut rng = stream(5, "example");
    let a = random_sequence(log + 2, n, &mut rng);
    let exhaustive = SubsetSumOracle::Exhaustive.prepare(&a, n)?;
    let mitm = SubsetSumOracle::MeetInMiddle.prepare(&a, n)?;
    let agree = (0..n).all(|t| exhaustive.solve(t) == mitm.solve(t));
    println!(
        "A = {a:?}: |S(A)| = {}, oracles agree on all t: {agree}",
        exhaustive.solvable_targets()?.len()
    );

    println!("{:>4} {:>10} {:>8}", "r", "no-sol", "±95%");
    for offset in 1..=6 {
        let lf = estimate_legal_fraction(log + offset, n, trials, 9)?;
        println!("{:>4} {:>10.4} {:>8.4}", lf.r, lf.fraction, lf.half_width_95);
    }

    let rows: Vec<_> = (0..4)
        .map(|t| {
            let inst = SubsetSumInstance::new(a.clone(), t * 97, n)?;
            let ans = mitm.solve(inst.t);
            Ok((inst, ans))
        })
        .collect::<Result<_, dcp_svp::subsetsum::SubsetSumError>>()?;
    write_csv(std::io::stdout(), &rows)?;
    Ok(())
}
