//! Decide local observability of a weight state via the rank condition.
//!
//! Run with: cargo run --example check_rank

use nalgebra::DMatrix;

use fnn_obs::config::ExperimentConfig;
use fnn_obs::input_design::design_input;
use fnn_obs::observability::rank_condition;
use fnn_obs::{InputSequence, WeightState};

fn main() -> fnn_obs::Result<()> {
    // The reference 3x3 state with a designed exciting sequence: rank holds.
    let cfg = ExperimentConfig::default();
    let state = cfg.weight_state()?;
    let inputs = design_input(&state, &cfg.template()?)?;
    let check = rank_condition(&state, &inputs)?;
    println!(
        "designed sequence (N = {}): rank condition {} — numerical rank {} of {}",
        inputs.len(),
        if check.holds { "holds" } else { "fails" },
        check.bundle.numerical_rank(),
        state.state_dim(),
    );
    println!("singular values of the Jacobian:");
    for (k, sigma) in check.bundle.singular_values().iter().enumerate() {
        println!("  sigma_{} = {sigma:.6e}", k + 1);
    }

    // A single-input network with same-signed weights can only switch all
    // hidden nodes together, so no sequence can excite it.
    let narrow = WeightState::new(DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]))?;
    let probes = InputSequence::new(DMatrix::from_row_slice(
        9,
        1,
        &[1.0, -1.0, 2.0, -2.0, 0.5, -0.5, 3.0, -3.0, 0.1],
    ))?;
    let check = rank_condition(&narrow, &probes)?;
    println!(
        "\nsame-sign single-input state: rank condition {} — numerical rank {} of {}",
        if check.holds { "holds" } else { "fails" },
        check.bundle.numerical_rank(),
        narrow.state_dim(),
    );
    Ok(())
}
