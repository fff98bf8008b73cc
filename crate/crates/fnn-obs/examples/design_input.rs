//! Construct persistently exciting input sequences from design templates.
//!
//! Run with: cargo run --example design_input

use fnn_obs::config::ExperimentConfig;
use fnn_obs::fnn::indicator_matrix;
use fnn_obs::input_design::{canonical_template, design_input, sample_blocks, sample_pattern};

fn main() -> fnn_obs::Result<()> {
    let state = ExperimentConfig::default().weight_state()?;
    println!("weight matrix W ={}", state.matrix());

    // Canonical template: T = I_n, the construction behind the basic
    // sufficiency result.
    let canonical = canonical_template(3);
    let u = design_input(&state, &canonical)?;
    println!("canonical template, U = BW^-1 ={}", u.matrix());

    // General template family: any non-singular 0/1 pattern T with
    // sign-matched full-rank blocks.
    let pattern = sample_pattern(3, 9)?;
    println!("sampled pattern T ={}", pattern);
    let template = sample_blocks(&pattern, (0.1, 1.0), 11)?;
    let u = design_input(&state, &template)?;
    println!("sampled template, U = BW^-1 ={}", u.matrix());

    // The designed sequence reproduces the template's activation pattern
    // exactly: chi(UW) = T kron 1_n.
    let realized = indicator_matrix(&(u.matrix() * state.matrix()));
    assert_eq!(realized, template.stacked_pattern());
    println!("indicator round trip: chi(UW) = T kron 1_n reproduced exactly");
    Ok(())
}
