use std::f64::consts::PI;

use num_traits::Signed;
use proptest::prelude::*;

use dcp_svp::dcp::{combine_estimates, estimate_angle, solve_congruence};
use dcp_svp::geometry::{ball_intersection_ratio, grid_intersection_ratio, BallGridSpec};
use dcp_svp::lattice::{is_lll_reduced, lll_reduce, Basis};
use dcp_svp::matching::{MatchingDesc, MatchingKind, Side};
use dcp_svp::qsim::QState;
use dcp_svp::rng::stream;
use dcp_svp::subsetsum::{Subset, SubsetSumOracle};
use dcp_svp::svp::{decode_difference, encode, encode_difference};

fn basis_strategy(n: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    proptest::collection::vec(proptest::collection::vec(-30i64..30, n), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lll_output_is_reduced_and_unimodular(rows in basis_strategy(3)) {
        let Ok(basis) = Basis::new(rows) else { return Ok(()) };
        prop_assume!(basis.determinant() != 0.into());
        let red = lll_reduce(&basis).unwrap();
        prop_assert!(is_lll_reduced(&red.basis).unwrap());
        prop_assert_eq!(red.transform_determinant().abs(), 1.into());
        prop_assert_eq!(red.basis.determinant().abs(), basis.determinant().abs());
        prop_assert_eq!(basis.transformed(&red.transform).unwrap(), red.basis.clone());
        // Every reduced row is a lattice member of the input.
        for row in red.basis.rows() {
            prop_assert!(basis.coefficients_of(row).is_ok());
        }
    }

    #[test]
    fn encode_decode_roundtrip(n in 1usize..4, log_m in 1u32..5, seed in any::<u64>()) {
        let m = 1u64 << log_m;
        let mut rng = stream(seed, "prop-encode");
        use rand::Rng;
        let b: Vec<i64> = (0..n).map(|_| rng.random_range(-(m as i64) + 1..m as i64)).collect();
        let d = encode_difference(&b, m).unwrap();
        prop_assert_eq!(decode_difference(d, m, n).unwrap(), b.clone());
        // Differences of encodings are encodings of differences.
        let a: Vec<i64> = b.iter().map(|&x| if x < 0 { -x } else { 0 }).collect();
        let a2: Vec<i64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let modulus = (2 * m).pow(n as u32);
        let diff = (encode(&a2, m).unwrap() + modulus - encode(&a, m).unwrap()) % modulus;
        prop_assert_eq!(diff, d);
    }

    #[test]
    fn matchings_are_involutions(first in any::<bool>(), q in 1u64..40, n in 2u64..300) {
        prop_assume!(q < n);
        let kind = if first { MatchingKind::First } else { MatchingKind::Second };
        let f = MatchingDesc::new(kind, q, n);
        for t in 0..n {
            if let Some(u) = f.eval(t) {
                prop_assert_eq!(f.eval(u), Some(t));
                prop_assert_eq!(u.abs_diff(t), q);
                let side = f.side(t).unwrap();
                prop_assert_eq!(side == Side::Lower, u > t);
            } else {
                prop_assert!(f.side(t).is_none());
            }
        }
    }

    #[test]
    fn oracles_agree_and_answers_sum(n in 1u64..200, a in proptest::collection::vec(0u64..1000, 0..10)) {
        let a: Vec<u64> = a.into_iter().map(|x| x % n).collect();
        let ex = SubsetSumOracle::Exhaustive.prepare(&a, n).unwrap();
        let mi = SubsetSumOracle::MeetInMiddle.prepare(&a, n).unwrap();
        for t in 0..n {
            let s = ex.solve(t);
            prop_assert_eq!(s, mi.solve(t));
            if let Some(Subset(mask)) = s {
                prop_assert_eq!(Subset(mask).sum(&a, n), t);
            } else {
                prop_assert!((0..1u64 << a.len()).all(|m| Subset(m).sum(&a, n) != t));
            }
        }
    }

    #[test]
    fn congruence_solutions_are_complete(a in 0u64..200, b in 0u64..200, n in 1u64..200) {
        let got = solve_congruence(a, b, n);
        let brute: Vec<u64> = (0..n).filter(|d| (d * a) % n == b % n).collect();
        let mut sorted = got.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, brute);
    }

    #[test]
    fn angle_inverts_sin_cos(theta in 0.0f64..(2.0 * PI)) {
        let est = estimate_angle(theta.sin(), theta.cos());
        let diff = (est - theta).rem_euclid(2.0 * PI);
        prop_assert!(diff.min(2.0 * PI - diff) < 1e-9);
    }

    #[test]
    fn combination_picks_the_consistent_branch(
        d in 0u64..4096,
        k in 0u32..6,
        noise_i in -100.0f64..100.0,
        noise in -100.0f64..100.0,
    ) {
        // x_i ≈ q_i·d mod q_i·N and x ≈ 2q_i·d mod N lift to ≈ 2q_i·d mod 2q_i·N.
        let n = 4096u64;
        let q_i = 1u64 << k;
        let q_next = 2 * q_i;
        let x_i = ((q_i * d) as f64 + noise_i).rem_euclid((q_i * n) as f64);
        let x = ((q_next * d) as f64 + noise).rem_euclid(n as f64);
        let lifted = combine_estimates(x_i, q_i, x, q_next, n);
        let modulus = (q_next * n) as f64;
        let err = (lifted - (q_next * d) as f64).rem_euclid(modulus);
        prop_assert!(err.min(modulus - err) <= noise.abs() + 1e-6);
    }

    #[test]
    fn fourier_roundtrip_preserves_state(n in 2usize..40, x in 0usize..40) {
        let x = x % n;
        let s = QState::basis(&[n], &[x]).unwrap();
        let f = s.fourier_mod(0).unwrap();
        prop_assert!((f.norm_sq() - 1.0).abs() < 1e-12);
        let back = f.inverse_fourier_mod(0).unwrap();
        prop_assert!(back.l2_distance(&s).unwrap() < 1e-10);
    }

    #[test]
    fn grid_ratio_shrinks_with_shift(radius in 2.0f64..6.0, l in 2u64..6) {
        let spec = BallGridSpec::centered(2, radius, l);
        let mut last = 1.0;
        for k in 0..=(2.0 * radius) as i64 {
            let r = grid_intersection_ratio(&spec, &[k, 0]).unwrap();
            prop_assert!(r <= last + 1e-12);
            last = r;
        }
        let exact = ball_intersection_ratio(2, radius, &[1.0, 0.0], 0, &mut stream(0, "p")).unwrap();
        prop_assert!((0.0..=1.0).contains(&exact.value()));
        prop_assert!(exact.lower_bound <= exact.value() + 1e-12);
    }
}
