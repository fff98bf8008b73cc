//! Generate a verified excited neighborhood of a weight state.
//!
//! Run with: cargo run --example neighborhood

use fnn_obs::config::ExperimentConfig;
use fnn_obs::fnn::output_sequence;
use fnn_obs::input_design::design_input;
use fnn_obs::neighborhood::generate_neighborhood;

fn main() -> fnn_obs::Result<()> {
    let cfg = ExperimentConfig::default();
    let state = cfg.weight_state()?;
    let inputs = design_input(&state, &cfg.template()?)?;

    for spread in [2.0, 0.5, 0.01] {
        let nbhd = generate_neighborhood(&inputs, &state, 200, spread, cfg.master_seed)?;
        println!(
            "spread {spread:>4}: {} verified of {} attempts (acceptance rate {:.3})",
            nbhd.samples.len(),
            nbhd.attempts,
            nbhd.acceptance_rate(),
        );
    }

    // Every verified neighbor stays distinguishable under the same sequence.
    let nbhd = generate_neighborhood(&inputs, &state, 5, 2.0, cfg.master_seed)?;
    let y_base = output_sequence(&state, &inputs)?;
    println!("\nfirst verified neighbors:");
    for (i, sample) in nbhd.samples.iter().enumerate() {
        let y = output_sequence(&sample.neighbor, &inputs)?;
        let l1: f64 = (&y - &y_base).iter().map(|v| v.abs()).sum();
        println!(
            "  #{i}: |delta|_max = {:.4}, l1 output difference = {:.4}, rank holds: {}",
            sample.delta.amax(),
            l1,
            sample.rank_holds,
        );
    }
    Ok(())
}
