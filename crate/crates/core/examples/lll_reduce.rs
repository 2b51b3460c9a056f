//! LLL on a skewed basis: reduced rows, Gram–Schmidt norms and the transform.
//!
//! cargo run --release --example lll_reduce

use dcp_svp::lattice::{gram_schmidt, is_lll_reduced, lll_reduce, shortest_vector_bruteforce, Basis};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let basis = Basis::new(vec![vec![1, 1, 1], vec![-1, 0, 2], vec![3, 5, 6]])?;
    println!("input  {:?}, reduced: {}", basis.rows(), is_lll_reduced(&basis)?);
    let red = lll_reduce(&basis)?;
    println!(
        "output {:?}, reduced: {}",
        red.basis.rows(),
        is_lll_reduced(&red.basis)?
    );
    println!("transform {:?} (det {})", red.transform, red.transform_determinant());

    let gs = gram_schmidt(&red.basis)?;
    println!("‖b*_i‖² = {:?}", gs.norms_sq_f64());

    let sv = shortest_vector_bruteforce(&basis, 6)?;
    let b1: i128 = red.basis.row(0).iter().map(|&x| i128::from(x) * i128::from(x)).sum();
    println!(
        "λ₁² = {} via {:?}; ‖b̄₁‖² = {b1} ≤ 2^(n−1)·λ₁² = {}",
        sv.norm_sq,
        sv.vector,
        4 * sv.norm_sq
    );
    Ok(())
}
