//! The canonical template makes the observability Jacobian block diagonal.
//!
//! Run with: cargo run --example block_structure

use fnn_obs::input_design::{canonical_template, design_input, random_nonsingular_weights};
use fnn_obs::observability::jacobian;

fn main() -> fnn_obs::Result<()> {
    let n = 3;
    let state = random_nonsingular_weights(n, 21)?;
    let inputs = design_input(&state, &canonical_template(n))?;
    let bundle = jacobian(&state, &inputs)?;

    println!("Jacobian zero pattern (X = nonzero, . = exactly zero):");
    for i in 0..bundle.jacobian().nrows() {
        let row: String = bundle
            .jacobian()
            .row(i)
            .iter()
            .map(|&v| if v == 0.0 { '.' } else { 'X' })
            .collect();
        println!("  {row}");
    }

    println!("\ndiagonal blocks H_k = B_k W^-1 (each non-singular):");
    for k in 0..n {
        let block = bundle.jacobian().view((k * n, k * n), (n, n)).into_owned();
        println!("H_{} ={}", k + 1, block);
    }
    println!(
        "numerical rank {} of {} — the state is locally observable",
        bundle.numerical_rank(),
        n * n
    );
    Ok(())
}
