//! q-matchings on Z_N: the two kinds, their involution property and pair density.
//!
//! cargo run --release --example matching_stats -- [N]

use dcp_svp::matching::{check_pair_density, find_good_matching, pair_density_bound, MatchingDesc, MatchingKind};
use dcp_svp::rng::stream;
use dcp_svp::subsetsum::{random_sequence, SubsetSumOracle, TargetSet};
use rand::seq::index::sample;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: u64 = args.first().map_or(Ok(16), |s| s.parse())?;

    for kind in [MatchingKind::First, MatchingKind::Second] {
        let f = MatchingDesc::new(kind, 3, n);
        let pairs: Vec<String> = (0..n)
            .filter_map(|t| f.eval(t).filter(|&u| u > t).map(|u| format!("{t}↔{u}")))
            .collect();
        let involution = (0..n).all(|t| f.eval(t).is_none_or(|u| f.eval(u) == Some(t) && u.abs_diff(t) == 3));
        println!("{kind:?} q=3: {} | involution: {involution}", pairs.join(" "));
    }

    let big = 1024;
    let mut rng = stream(2, "example");
    for s in [2u64, 4, 8] {
        let chosen = sample(&mut rng, big as usize, (big / s) as usize);
        let set = TargetSet::from_iter(big, chosen.iter().map(|x| x as u64));
        let best = check_pair_density(&set, 1, s)?;
        println!(
            "N={big}, |T|=N/{s}: best q′ = {} with {} pairs (bound {:.3})",
            best.step,
            best.pairs,
            pair_density_bound(big, s)
        );
    }

    let a = random_sequence(12, big, &mut rng);
    let set = SubsetSumOracle::MeetInMiddle.solvable_targets(&a, big)?;
    let good = find_good_matching(&set, 1, 16, set.len() / 8)?;
    println!("|S(A)| = {}, first good matching: {good:?}", set.len());
    Ok(())
}
