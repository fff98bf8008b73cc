//! Persistently exciting input design.
//!
//! An input sequence of length `N = n²` is built from a design template
//! `(T, B)`: a non-singular 0/1 pattern matrix `T ∈ {0,1}^{n×n}` and a
//! stacked block matrix `B ∈ ℝ^{n²×n}` whose blocks `B_k` all have full rank
//! and whose indicator satisfies `χ(B) = T ⊗ 1_n`. For any such template and
//! any non-singular weight matrix `W`, the sequence `U = BW⁻¹` excites the
//! state: the observability rank condition holds at `W` under `U`.
//!
//! The canonical template (`T = I_n`, `B_k` with all-ones `k`th column and
//! `-1` on the remaining diagonal) is the special case that makes the
//! Jacobian block diagonal.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::fnn::{indicator_matrix, InputSequence, WeightState};
use crate::observability::{default_rel_tol, numerical_rank, rank_condition};

/// Attempts allowed when rejection-sampling a non-singular 0/1 pattern.
const PATTERN_BUDGET: usize = 1000;
/// Attempts allowed per block when sampling sign-constrained full-rank blocks.
const BLOCK_BUDGET: usize = 100;
/// Relative bound on `‖UW − B‖_max` accepted from the linear solve.
const SOLVE_RESIDUAL_TOL: f64 = 1e-8;
/// Replacement for exact-zero entries of `B` when the solved sequence fails
/// to reproduce the indicator pattern: zero pre-activations cannot survive
/// the `U = BW⁻¹` round trip in floating point, but any value slightly below
/// zero leaves `χ(B)` and the block ranks unchanged.
const ZERO_NUDGE: f64 = 1e-4;

/// First violated template condition, in the order the conditions are checked.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateViolation {
    #[error("pattern entry ({row}, {col}) = {value} is not exactly 0 or 1")]
    PatternNotBinary { row: usize, col: usize, value: f64 },

    #[error("pattern matrix is singular: numerical rank {rank} < {n}")]
    PatternSingular { rank: usize, n: usize },

    #[error("block {block} is rank deficient: numerical rank {rank} < {n}")]
    BlockRankDeficient { block: usize, rank: usize, n: usize },

    #[error(
        "indicator of B disagrees with the pattern at stacked row {row}, column {col} \
         (block {block})"
    )]
    IndicatorMismatch { block: usize, row: usize, col: usize },
}

/// A design template `(T, B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignTemplate {
    pattern: DMatrix<f64>,
    blocks: DMatrix<f64>,
}

impl DesignTemplate {
    /// Wraps a pattern and stacked blocks, checking shapes only; use
    /// [`validate_template`] for the template conditions themselves.
    pub fn new(pattern: DMatrix<f64>, blocks: DMatrix<f64>) -> Result<Self> {
        let n = pattern.nrows();
        if n == 0 {
            return Err(Error::Empty { what: "pattern" });
        }
        if pattern.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "pattern columns",
                expected: n,
                actual: pattern.ncols(),
            });
        }
        if blocks.nrows() != n * n || blocks.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "stacked block rows",
                expected: n * n,
                actual: blocks.nrows(),
            });
        }
        Ok(Self { pattern, blocks })
    }

    pub fn n(&self) -> usize {
        self.pattern.nrows()
    }

    /// The 0/1 pattern matrix `T`.
    pub fn pattern(&self) -> &DMatrix<f64> {
        &self.pattern
    }

    /// The stacked blocks `B ∈ ℝ^{n²×n}`.
    pub fn stacked(&self) -> &DMatrix<f64> {
        &self.blocks
    }

    /// Block `B_k` (0-based), rows `kn..(k+1)n` of the stack.
    pub fn block(&self, k: usize) -> DMatrix<f64> {
        let n = self.n();
        self.blocks.rows(k * n, n).into_owned()
    }

    /// `T ⊗ 1_n`, the indicator pattern a valid `B` must realize.
    pub fn stacked_pattern(&self) -> DMatrix<f64> {
        let n = self.n();
        self.pattern.kronecker(&DMatrix::from_element(n, 1, 1.0))
    }
}

/// The canonical template: `T = I_n`; block `B_k` has its `k`th column all
/// ones, `-1` on the diagonal outside column `k`, and zeros elsewhere.
pub fn canonical_template(n: usize) -> DesignTemplate {
    assert!(n >= 1, "canonical template needs n >= 1");
    let mut blocks = DMatrix::zeros(n * n, n);
    for k in 0..n {
        for i in 0..n {
            blocks[(k * n + i, k)] = 1.0;
            if i != k {
                blocks[(k * n + i, i)] = -1.0;
            }
        }
    }
    DesignTemplate {
        pattern: DMatrix::identity(n, n),
        blocks,
    }
}

fn pattern_rank(pattern: &DMatrix<f64>) -> usize {
    let svd = pattern.clone().svd(false, false);
    let svals: Vec<f64> = svd.singular_values.iter().copied().collect();
    numerical_rank(&svals, default_rel_tol(pattern.nrows(), pattern.ncols()))
}

/// Rejection-samples a non-singular 0/1 matrix, deterministically per seed.
pub fn sample_pattern(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::Empty { what: "pattern" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..PATTERN_BUDGET {
        let pattern =
            DMatrix::from_fn(n, n, |_, _| if rng.gen_bool(0.5) { 1.0 } else { 0.0 });
        if pattern_rank(&pattern) == n {
            return Ok(pattern);
        }
    }
    Err(Error::SamplingBudget {
        what: "sampling a non-singular 0/1 pattern",
        attempts: PATTERN_BUDGET,
    })
}

/// Samples stacked blocks for a given pattern: entry magnitudes uniform in
/// `[lo, hi]`, signs positive where the pattern row has a 1 and strictly
/// negative where it has a 0, so every pre-activation stays away from the
/// ReLU kink. Blocks are resampled until they reach full rank.
pub fn sample_blocks(
    pattern: &DMatrix<f64>,
    magnitude_range: (f64, f64),
    seed: u64,
) -> Result<DesignTemplate> {
    let (lo, hi) = magnitude_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidMagnitudeRange { lo, hi });
    }
    let n = pattern.nrows();
    check_pattern(pattern).map_err(Error::InvalidTemplate)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = DMatrix::zeros(n * n, n);
    for k in 0..n {
        let mut accepted = false;
        let mut last_svals = Vec::new();
        for _ in 0..BLOCK_BUDGET {
            let candidate = DMatrix::from_fn(n, n, |_, j| {
                let magnitude = rng.gen_range(lo..=hi);
                if pattern[(k, j)] == 1.0 {
                    magnitude
                } else {
                    -magnitude
                }
            });
            let svd = candidate.clone().svd(false, false);
            last_svals = svd.singular_values.iter().copied().collect();
            last_svals.sort_by(|a, b| b.partial_cmp(a).unwrap());
            if numerical_rank(&last_svals, default_rel_tol(n, n)) == n {
                blocks.rows_mut(k * n, n).copy_from(&candidate);
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::BlockSamplingBudget {
                block: k,
                attempts: BLOCK_BUDGET,
                singular_values: last_svals,
            });
        }
    }

    let template = DesignTemplate {
        pattern: pattern.clone(),
        blocks,
    };
    validate_template(&template).map_err(Error::InvalidTemplate)?;
    Ok(template)
}

fn check_pattern(pattern: &DMatrix<f64>) -> std::result::Result<(), TemplateViolation> {
    let n = pattern.nrows();
    for i in 0..n {
        for j in 0..n {
            let value = pattern[(i, j)];
            if value != 0.0 && value != 1.0 {
                return Err(TemplateViolation::PatternNotBinary {
                    row: i,
                    col: j,
                    value,
                });
            }
        }
    }
    let rank = pattern_rank(pattern);
    if rank < n {
        return Err(TemplateViolation::PatternSingular { rank, n });
    }
    Ok(())
}

/// Checks the template conditions in order — pattern is binary, pattern is
/// non-singular, every block has full rank, `χ(B) = T ⊗ 1_n` exactly — and
/// reports the first violation.
pub fn validate_template(
    template: &DesignTemplate,
) -> std::result::Result<(), TemplateViolation> {
    let n = template.n();
    check_pattern(template.pattern())?;

    for k in 0..n {
        let block = template.block(k);
        let svd = block.svd(false, false);
        let mut svals: Vec<f64> = svd.singular_values.iter().copied().collect();
        svals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let rank = numerical_rank(&svals, default_rel_tol(n, n));
        if rank < n {
            return Err(TemplateViolation::BlockRankDeficient { block: k, rank, n });
        }
    }

    let realized = indicator_matrix(template.stacked());
    let target = template.stacked_pattern();
    for i in 0..n * n {
        for j in 0..n {
            if realized[(i, j)] != target[(i, j)] {
                return Err(TemplateViolation::IndicatorMismatch {
                    block: i / n,
                    row: i,
                    col: j,
                });
            }
        }
    }
    Ok(())
}

/// Solves `U = BW⁻¹` as `n²` linear systems against `W^⊤` and checks the
/// residual; never forms an explicit inverse.
fn solve_sequence(state: &WeightState, blocks: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = state.hidden_dim();
    let lu = state.matrix().transpose().lu();
    let solution = lu.solve(&blocks.transpose()).ok_or_else(|| {
        Error::SingularWeights {
            rank: 0,
            expected: n,
            condition: f64::INFINITY,
        }
    })?;
    let sequence = solution.transpose();
    let residual = (&sequence * state.matrix() - blocks).amax();
    let tol = SOLVE_RESIDUAL_TOL * blocks.amax();
    if residual > tol {
        return Err(Error::SolveResidual { residual, tol });
    }
    Ok(sequence)
}

fn indicator_mismatch(
    sequence: &DMatrix<f64>,
    state: &WeightState,
    target: &DMatrix<f64>,
) -> Option<(usize, usize)> {
    let realized = indicator_matrix(&(sequence * state.matrix()));
    for i in 0..realized.nrows() {
        for j in 0..realized.ncols() {
            if realized[(i, j)] != target[(i, j)] {
                return Some((i, j));
            }
        }
    }
    None
}

/// Designs a persistently exciting input sequence `U = BW⁻¹` of length `n²`
/// for a non-singular square weight matrix.
///
/// Postconditions are asserted before returning: `χ(UW) = T ⊗ 1_n` holds
/// with exact 0/1 equality, and the rank condition holds at `state` under
/// the returned sequence. If the template contains exact-zero entries (the
/// canonical template does), and the first solve fails to reproduce the
/// indicator pattern, those entries are replaced by `-1e-4` and the solve is
/// repeated; this leaves `χ(B)` unchanged.
pub fn design_input(state: &WeightState, template: &DesignTemplate) -> Result<InputSequence> {
    let m = state.input_dim();
    let n = state.hidden_dim();
    if m != n {
        return Err(Error::NonSquareWeights { m, n });
    }
    if template.n() != n {
        return Err(Error::DimensionMismatch {
            context: "template size",
            expected: n,
            actual: template.n(),
        });
    }
    validate_template(template).map_err(Error::InvalidTemplate)?;

    let svd = state.matrix().clone().svd(false, false);
    let mut svals: Vec<f64> = svd.singular_values.iter().copied().collect();
    svals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let rank = numerical_rank(&svals, default_rel_tol(n, n));
    if rank < n {
        let sigma_min = svals.last().copied().unwrap_or(0.0);
        let condition = if sigma_min > 0.0 {
            svals[0] / sigma_min
        } else {
            f64::INFINITY
        };
        return Err(Error::SingularWeights {
            rank,
            expected: n,
            condition,
        });
    }

    let target = template.stacked_pattern();
    let mut sequence = solve_sequence(state, template.stacked())?;
    if let Some((row, col)) = indicator_mismatch(&sequence, state, &target) {
        let has_zeros = template.stacked().iter().any(|&v| v == 0.0);
        if !has_zeros {
            return Err(Error::IndicatorPostcondition { row, col });
        }
        let nudged = template
            .stacked()
            .map(|v| if v == 0.0 { -ZERO_NUDGE } else { v });
        sequence = solve_sequence(state, &nudged)?;
        if let Some((row, col)) = indicator_mismatch(&sequence, state, &target) {
            return Err(Error::IndicatorPostcondition { row, col });
        }
    }

    let inputs = InputSequence::new(sequence)?;
    let check = rank_condition(state, &inputs)?;
    if !check.holds {
        return Err(Error::DesignRankPostcondition {
            rank: check.bundle.numerical_rank(),
            expected: n * n,
        });
    }
    Ok(inputs)
}

/// Samples a square weight state with entries uniform in (-1, 1), resampled
/// until numerically non-singular. Deterministic per seed.
pub fn random_nonsingular_weights(n: usize, seed: u64) -> Result<WeightState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..BLOCK_BUDGET {
        let candidate = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let svd = candidate.clone().svd(false, false);
        let svals: Vec<f64> = svd.singular_values.iter().copied().collect();
        if numerical_rank(&svals, default_rel_tol(n, n)) == n {
            return WeightState::new(candidate);
        }
    }
    Err(Error::SamplingBudget {
        what: "sampling a non-singular weight matrix",
        attempts: BLOCK_BUDGET,
    })
}
