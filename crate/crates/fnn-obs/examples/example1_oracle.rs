//! Why single-input networks are never locally observable: construct
//! indistinguishable weight states and certify them by brute-force sweeps.
//!
//! Run with: cargo run --example example1_oracle

use nalgebra::DMatrix;

use fnn_obs::oracle::{example1_oracle, pattern_census, Example1Outcome, SweepGrid};
use fnn_obs::WeightState;

fn main() -> fnn_obs::Result<()> {
    let grid = SweepGrid::uniform(1, -2.0, 2.0, 1000)?;

    for (a, b, c) in [(1.0, 2.0, 3.0), (1.0, 2.0, -3.0), (-0.4, -1.1, -0.7)] {
        match example1_oracle(a, b, c, &grid)? {
            Example1Outcome::Indistinguishable {
                witness,
                certificate,
            } => println!(
                "weights ({a}, {b}, {c}) vs witness ({}, {}, {}): outputs identical \
                 (max |dy| = {:.2e}, conclusive: {})",
                witness.matrix()[(0, 0)],
                witness.matrix()[(0, 1)],
                witness.matrix()[(0, 2)],
                certificate.max_abs_diff,
                certificate.conclusive,
            ),
            Example1Outcome::Distinguishable { input, abs_diff } => println!(
                "weights ({a}, {b}, {c}): witness distinguished at u = {input} (|dy| = {abs_diff:.2e})"
            ),
        }
    }

    // The census explains the obstruction: same-signed weights attain only
    // two activation patterns, far too few for full rank.
    let state = WeightState::new(DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]))?;
    let census = pattern_census(&state, &grid)?;
    println!("\nactivation patterns attained by (1, 2, 3): {census:?}");
    Ok(())
}
