//! Excited neighborhoods of a locally observable state.
//!
//! Given a persistently exciting input `U` designed for `W`, a perturbed
//! state `W′ = W + δ` is excited by the same `U` whenever some gain matrix
//! `K` with entries in `(-1, +∞)` satisfies `Uδ = K ∘ UW`. Candidates are
//! proposed by sampling a gain, solving the least-squares problem
//! `δ = U†(K ∘ UW)`, and then verifying the solved `δ`:
//!
//! - **gain admissibility** — some admissible gain reproduces `Uδ` exactly,
//!   i.e. the derived gain `(Uδ) ⊘ (UW)` stays strictly above `-1`
//!   (equivalently, the perturbation preserves every pre-activation sign);
//! - **indicator preservation** — `χ(UW′) = χ(UW)` with exact 0/1 equality;
//! - **rank condition** — the Jacobian at `W′` under `U` has full column rank.
//!
//! The least-squares residual against the *proposed* gain is recorded on
//! every sample; proposals whose projected perturbation leaves the admissible
//! region are discarded, not repaired.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fnn::{indicator_matrix, InputSequence, WeightState};
use crate::observability::{default_rel_tol, numerical_rank, rank_condition};

/// Gain entries are kept at least this far above the excluded value -1.
pub const GAIN_FLOOR_OFFSET: f64 = 0.01;
/// Attempts allowed per requested sample before the generator gives up.
const ATTEMPT_FACTOR: usize = 50;

/// Verification tolerance for consistency residuals: `1e-8 · max(1, ‖UW‖_max)`.
pub fn verify_tol(pre_activations: &DMatrix<f64>) -> f64 {
    1e-8 * pre_activations.amax().max(1.0)
}

/// Deterministic per-index seed derivation (splitmix64), so independent
/// attempts can be reproduced, reordered, or distributed without sharing
/// generator state.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Samples a gain matrix with entries uniform on the interval of width
/// `spread` centered at [`GAIN_FLOOR_OFFSET`], floor-clamped so every entry
/// stays strictly above `-1 + GAIN_FLOOR_OFFSET`. With the default
/// `spread = 2` this is the interval `(-0.99, 1.01)`.
pub fn sample_gain(rows: usize, cols: usize, spread: f64, seed: u64) -> Result<DMatrix<f64>> {
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::InvalidSpread(spread));
    }
    let lo = (GAIN_FLOOR_OFFSET - spread / 2.0).max(-1.0 + GAIN_FLOOR_OFFSET);
    let hi = GAIN_FLOOR_OFFSET + spread / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(lo..hi)))
}

fn check_gain(gain: &DMatrix<f64>) -> Result<()> {
    for i in 0..gain.nrows() {
        for j in 0..gain.ncols() {
            let value = gain[(i, j)];
            if !(value > -1.0) || !value.is_finite() {
                return Err(Error::GainOutOfRange {
                    row: i,
                    col: j,
                    value,
                });
            }
        }
    }
    Ok(())
}

/// Least-squares solution of `Uδ = K ∘ UW` via the SVD of `U`;
/// `U† = (U^⊤U)⁻¹U^⊤` is a left inverse because `U` has full column rank,
/// so a consistent system has this δ as its unique solution.
pub fn compute_delta(
    inputs: &InputSequence,
    state: &WeightState,
    gain: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if inputs.input_dim() != state.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "input sequence width",
            expected: state.input_dim(),
            actual: inputs.input_dim(),
        });
    }
    if gain.nrows() != inputs.len() || gain.ncols() != state.hidden_dim() {
        return Err(Error::DimensionMismatch {
            context: "gain shape",
            expected: inputs.len() * state.hidden_dim(),
            actual: gain.len(),
        });
    }
    check_gain(gain)?;

    let svd = inputs.matrix().clone().svd(true, true);
    let svals: Vec<f64> = svd.singular_values.iter().copied().collect();
    let rel_tol = default_rel_tol(inputs.len(), inputs.input_dim());
    let rank = numerical_rank(&svals, rel_tol);
    if rank < inputs.input_dim() {
        return Err(Error::RankDeficientInput {
            rank,
            cols: inputs.input_dim(),
        });
    }

    let rhs = gain.component_mul(&(inputs.matrix() * state.matrix()));
    let sigma_max = svals.iter().copied().fold(0.0f64, f64::max);
    let delta = svd
        .solve(&rhs, rel_tol * sigma_max)
        .expect("SVD solve on a full-column-rank system");
    Ok(delta)
}

/// One proposed neighbor together with all verification verdicts.
#[derive(Debug, Clone)]
pub struct NeighborSample {
    /// The proposed gain matrix.
    pub gain: DMatrix<f64>,
    /// The solved perturbation `δ`.
    pub delta: DMatrix<f64>,
    /// The perturbed state `W′ = W + δ`.
    pub neighbor: WeightState,
    /// `‖Uδ − K ∘ UW‖_max` for the proposed gain.
    pub residual: f64,
    /// Some admissible gain reproduces `Uδ` exactly.
    pub gain_admissible: bool,
    /// `χ(UW′) = χ(UW)` with exact 0/1 equality.
    pub indicator_preserved: bool,
    /// Rank condition holds at `W′` under `U`.
    pub rank_holds: bool,
    /// The proposed gain itself is consistent: `residual ≤ verify_tol`.
    pub proposal_consistent: bool,
    /// All three verification verdicts hold.
    pub verified: bool,
}

/// Verifies a candidate perturbation against the excitation conditions.
pub fn verify_neighbor(
    inputs: &InputSequence,
    state: &WeightState,
    gain: &DMatrix<f64>,
    delta: &DMatrix<f64>,
) -> Result<NeighborSample> {
    if delta.shape() != state.matrix().shape() {
        return Err(Error::DimensionMismatch {
            context: "delta shape",
            expected: state.state_dim(),
            actual: delta.len(),
        });
    }
    if gain.nrows() != inputs.len() || gain.ncols() != state.hidden_dim() {
        return Err(Error::DimensionMismatch {
            context: "gain shape",
            expected: inputs.len() * state.hidden_dim(),
            actual: gain.len(),
        });
    }
    check_gain(gain)?;

    let pre = inputs.matrix() * state.matrix();
    let shift = inputs.matrix() * delta;
    let tol = verify_tol(&pre);
    let residual = (&shift - gain.component_mul(&pre)).amax();

    let mut gain_admissible = true;
    'scan: for j in 0..pre.ncols() {
        for i in 0..pre.nrows() {
            let b = pre[(i, j)];
            let e = shift[(i, j)];
            let ok = if b != 0.0 {
                e / b > -1.0
            } else {
                // no gain can act on a zero pre-activation
                e.abs() <= tol
            };
            if !ok {
                gain_admissible = false;
                break 'scan;
            }
        }
    }

    let neighbor = state.perturbed(delta)?;
    let pre_neighbor = inputs.matrix() * neighbor.matrix();
    let indicator_preserved = indicator_matrix(&pre_neighbor) == indicator_matrix(&pre);
    let rank_holds = rank_condition(&neighbor, inputs)?.holds;
    let proposal_consistent = residual <= tol;
    let verified = gain_admissible && indicator_preserved && rank_holds;

    Ok(NeighborSample {
        gain: gain.clone(),
        delta: delta.clone(),
        neighbor,
        residual,
        gain_admissible,
        indicator_preserved,
        rank_holds,
        proposal_consistent,
        verified,
    })
}

/// A generated neighborhood with its sampling statistics.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    /// Verified samples, in acceptance order.
    pub samples: Vec<NeighborSample>,
    /// Number of verified samples that were requested.
    pub requested: usize,
    /// Proposals drawn.
    pub attempts: usize,
}

impl Neighborhood {
    pub fn is_complete(&self) -> bool {
        self.samples.len() >= self.requested
    }

    /// Verified fraction of all proposals; 1.0 when no proposal was needed.
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            1.0
        } else {
            self.samples.len() as f64 / self.attempts as f64
        }
    }
}

/// Draws gains, solves perturbations, and collects verified neighbors until
/// `count` samples are accepted or the attempt budget (50 per requested
/// sample) runs out. Partial results are returned, not discarded; callers
/// decide how to treat an incomplete neighborhood.
///
/// Requires the rank condition to hold at `state` under `inputs`.
pub fn generate_neighborhood(
    inputs: &InputSequence,
    state: &WeightState,
    count: usize,
    spread: f64,
    master_seed: u64,
) -> Result<Neighborhood> {
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::InvalidSpread(spread));
    }
    let base = rank_condition(state, inputs)?;
    if !base.holds {
        return Err(Error::RankConditionFailed {
            rank: base.bundle.numerical_rank(),
            expected: state.state_dim(),
        });
    }

    let budget = count.saturating_mul(ATTEMPT_FACTOR);
    let mut samples = Vec::with_capacity(count);
    let mut attempts = 0;
    while samples.len() < count && attempts < budget {
        let seed = derive_seed(master_seed, attempts as u64);
        let gain = sample_gain(inputs.len(), state.hidden_dim(), spread, seed)?;
        let delta = compute_delta(inputs, state, &gain)?;
        let sample = verify_neighbor(inputs, state, &gain, &delta)?;
        attempts += 1;
        if sample.verified {
            samples.push(sample);
        }
    }

    Ok(Neighborhood {
        samples,
        requested: count,
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnn::output_sequence;
    use crate::fnn::tests::demo_weights;
    use crate::input_design::tests::demo_pattern;
    use crate::input_design::{design_input, sample_blocks, DesignTemplate};
    use proptest::prelude::*;

    fn demo_setup() -> (WeightState, InputSequence) {
        let state = demo_weights();
        let tpl: DesignTemplate = sample_blocks(&demo_pattern(), (0.1, 1.0), 17).unwrap();
        let inputs = design_input(&state, &tpl).unwrap();
        (state, inputs)
    }

    #[test]
    fn default_spread_interval() {
        let gain = sample_gain(9, 3, 2.0, 42).unwrap();
        assert!(gain.iter().all(|&v| v > -0.99 && v < 1.01));
        let again = sample_gain(9, 3, 2.0, 42).unwrap();
        assert_eq!(gain, again);
    }

    #[test]
    fn spread_must_be_positive() {
        assert!(matches!(
            sample_gain(2, 2, 0.0, 1),
            Err(Error::InvalidSpread(_))
        ));
    }

    #[test]
    fn zero_gain_gives_zero_delta_and_verifies() {
        let (state, inputs) = demo_setup();
        let gain = DMatrix::zeros(inputs.len(), state.hidden_dim());
        let delta = compute_delta(&inputs, &state, &gain).unwrap();
        assert_eq!(delta, DMatrix::zeros(3, 3));
        let sample = verify_neighbor(&inputs, &state, &gain, &delta).unwrap();
        assert!(sample.verified);
        assert!(sample.gain_admissible);
        assert!(sample.indicator_preserved);
        assert!(sample.rank_holds);
        assert!(sample.proposal_consistent);
        assert_eq!(sample.neighbor, state);
    }

    #[test]
    fn boundary_gain_entry_is_rejected() {
        let (state, inputs) = demo_setup();
        let mut gain = DMatrix::zeros(inputs.len(), state.hidden_dim());
        gain[(4, 1)] = -1.0;
        assert!(matches!(
            compute_delta(&inputs, &state, &gain),
            Err(Error::GainOutOfRange { row: 4, col: 1, .. })
        ));
        let delta = DMatrix::zeros(3, 3);
        assert!(matches!(
            verify_neighbor(&inputs, &state, &gain, &delta),
            Err(Error::GainOutOfRange { .. })
        ));
    }

    #[test]
    fn uniform_gain_scales_weights() {
        let (state, inputs) = demo_setup();
        let c = 0.5;
        let gain = DMatrix::from_element(inputs.len(), state.hidden_dim(), c);
        let delta = compute_delta(&inputs, &state, &gain).unwrap();
        let expected = state.matrix() * c;
        let rel = (&delta - &expected).amax() / expected.amax();
        assert!(rel < 1e-10, "relative error {rel}");
        let sample = verify_neighbor(&inputs, &state, &gain, &delta).unwrap();
        assert!(sample.verified);
        assert!(sample.proposal_consistent);
    }

    #[test]
    fn random_proposals_split_into_both_outcomes() {
        // At the default spread most proposals are bent by the projection:
        // the solved delta may leave the admissible region (discarded) or
        // stay inside it (verified). Both outcomes occur.
        let (state, inputs) = demo_setup();
        let mut verified = 0;
        let mut rejected = 0;
        for attempt in 0..60 {
            let seed = derive_seed(2024, attempt);
            let gain = sample_gain(inputs.len(), state.hidden_dim(), 2.0, seed).unwrap();
            let delta = compute_delta(&inputs, &state, &gain).unwrap();
            let sample = verify_neighbor(&inputs, &state, &gain, &delta).unwrap();
            if sample.verified {
                verified += 1;
                // verified neighbors keep the indicator and the rank
                assert!(sample.indicator_preserved);
                assert!(sample.rank_holds);
            } else {
                rejected += 1;
            }
        }
        assert!(verified > 0, "no proposal verified");
        assert!(rejected > 0, "no proposal rejected");
    }

    #[test]
    fn count_zero_yields_empty_complete_neighborhood() {
        let (state, inputs) = demo_setup();
        let nbhd = generate_neighborhood(&inputs, &state, 0, 2.0, 7).unwrap();
        assert!(nbhd.samples.is_empty());
        assert!(nbhd.is_complete());
        assert_eq!(nbhd.attempts, 0);
        assert_eq!(nbhd.acceptance_rate(), 1.0);
    }

    #[test]
    fn tiny_spread_accepts_nearly_everything() {
        let (state, inputs) = demo_setup();
        let nbhd = generate_neighborhood(&inputs, &state, 50, 1e-3, 7).unwrap();
        assert!(nbhd.is_complete());
        assert!(
            nbhd.acceptance_rate() >= 0.99,
            "acceptance {}",
            nbhd.acceptance_rate()
        );
    }

    #[test]
    fn verified_neighbors_stay_distinguishable() {
        let (state, inputs) = demo_setup();
        let nbhd = generate_neighborhood(&inputs, &state, 100, 2.0, 11).unwrap();
        assert!(nbhd.is_complete());
        let y_base = output_sequence(&state, &inputs).unwrap();
        for sample in &nbhd.samples {
            if sample.delta.amax() > 1e-6 {
                let y = output_sequence(&sample.neighbor, &inputs).unwrap();
                let l1: f64 = (&y - &y_base).iter().map(|v| v.abs()).sum();
                assert!(l1 > 1e-12, "l1 = {l1}");
            }
        }
    }

    #[test]
    fn zero_pre_activations_exhaust_the_budget() {
        // u1 ⟂ w2 and u2 ⟂ w1: those entries of UW are exactly zero, and a
        // gain can only reproduce Uδ there if the perturbation vanishes on
        // them. The excited set has empty interior, so every proposal is
        // rejected and a partial (empty) neighborhood comes back.
        let state = WeightState::new(DMatrix::identity(2, 2)).unwrap();
        let inputs = InputSequence::new(DMatrix::from_row_slice(
            4,
            2,
            &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, -1.0],
        ))
        .unwrap();
        assert!(rank_condition(&state, &inputs).unwrap().holds);
        let nbhd = generate_neighborhood(&inputs, &state, 3, 2.0, 5).unwrap();
        assert!(!nbhd.is_complete());
        assert!(nbhd.samples.is_empty());
        assert_eq!(nbhd.attempts, 150);
        assert_eq!(nbhd.acceptance_rate(), 0.0);
    }

    #[test]
    fn generation_requires_excited_base_state() {
        // m = 1, all-same-sign weights are never excited.
        let state = WeightState::new(DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0])).unwrap();
        let inputs = InputSequence::new(DMatrix::from_row_slice(
            9,
            1,
            &[1.0, -1.0, 2.0, -2.0, 0.5, 3.0, -0.5, 1.5, 0.1],
        ))
        .unwrap();
        assert!(matches!(
            generate_neighborhood(&inputs, &state, 5, 2.0, 1),
            Err(Error::RankConditionFailed { .. })
        ));
    }

    proptest! {
        // K = c·1 always verifies and rescales the state: W′ = (1+c)W.
        #[test]
        fn uniform_gain_closure(c in -0.99f64..10.0) {
            let (state, inputs) = demo_setup();
            let gain = DMatrix::from_element(inputs.len(), state.hidden_dim(), c);
            let delta = compute_delta(&inputs, &state, &gain).unwrap();
            let sample = verify_neighbor(&inputs, &state, &gain, &delta).unwrap();
            prop_assert!(sample.verified);
            let expected = state.matrix() * (1.0 + c);
            let dev = (sample.neighbor.matrix() - &expected).amax();
            prop_assert!(dev <= 1e-9 * expected.amax().max(1.0));
        }
    }
}
