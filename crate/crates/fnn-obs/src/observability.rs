//! Jacobian of the observability mapping and the rank condition.
//!
//! For a weight state `W` and an input sequence `U`, row `i` of the Jacobian
//! of the observability mapping is `[u_i^⊤χ_{i,1}, …, u_i^⊤χ_{i,n}]`, where
//! `χ_{i,j}` indicates whether hidden node `j` is active on input `u_i`. The
//! same matrix factors as `T_u · (T_χ ⊗ I_m)` with `T_u` the block diagonal
//! of input rows and `T_χ = χ(UW)` the activation pattern. Both routes are
//! assembled here and cross-checked on every call.
//!
//! The state is locally observable at `W` under `U` when the Jacobian has
//! full column rank `m·n`; rank decisions use a singular-value threshold
//! relative to the largest singular value.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fnn::{indicator_matrix, output_sequence, InputSequence, WeightState};

/// Maximum allowed relative deviation between the row-wise Jacobian assembly
/// and its `T_u(T_χ⊗I_m)` factorization. Exceeding it means the assembly
/// itself is broken, so it is enforced with a panic rather than an error.
const FACTORIZATION_TOL: f64 = 1e-12;

/// Default relative tolerance of the numerical-rank policy:
/// `max(rows, cols) · machine epsilon`, applied relative to `σ_max`.
pub fn default_rel_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

/// Number of singular values strictly above `rel_tol · σ_max`.
///
/// Returns 0 when the largest singular value is 0.
pub fn numerical_rank(singular_values: &[f64], rel_tol: f64) -> usize {
    let sigma_max = singular_values.iter().copied().fold(0.0f64, f64::max);
    if sigma_max == 0.0 {
        return 0;
    }
    let threshold = rel_tol * sigma_max;
    singular_values.iter().filter(|&&s| s > threshold).count()
}

/// Activation pattern `T_χ = χ(UW)`; entries are exactly 0.0 or 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMatrix(DMatrix<f64>);

impl IndicatorMatrix {
    /// Entrywise indicator of an arbitrary real matrix.
    pub fn of(m: &DMatrix<f64>) -> Self {
        Self(indicator_matrix(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `T_χ ⊗ I_m`, the right factor of the Jacobian factorization.
    pub fn kron_identity(&self, m: usize) -> DMatrix<f64> {
        self.0.kronecker(&DMatrix::identity(m, m))
    }
}

/// Jacobian of the observability mapping together with its factors and the
/// singular spectrum under the rank policy applied at assembly time.
#[derive(Debug, Clone)]
pub struct JacobianBundle {
    jacobian: DMatrix<f64>,
    input_blocks: DMatrix<f64>,
    indicators: IndicatorMatrix,
    singular_values: DVector<f64>,
    numerical_rank: usize,
    rel_tol: f64,
}

impl JacobianBundle {
    /// The Jacobian `dℋ_N(w) ∈ ℝ^{N×mn}`.
    pub fn jacobian(&self) -> &DMatrix<f64> {
        &self.jacobian
    }

    /// `T_u ∈ ℝ^{N×Nm}`: block diagonal of the input rows.
    pub fn input_blocks(&self) -> &DMatrix<f64> {
        &self.input_blocks
    }

    /// `T_χ = χ(UW)`.
    pub fn indicators(&self) -> &IndicatorMatrix {
        &self.indicators
    }

    /// Singular values of the Jacobian, nonincreasing.
    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    pub fn numerical_rank(&self) -> usize {
        self.numerical_rank
    }

    /// Relative tolerance the rank decision was made with.
    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    /// Max-norm deviation between the stored Jacobian and the
    /// freshly recomputed product `T_u(T_χ⊗I_m)`.
    pub fn factorization_deviation(&self) -> f64 {
        let m = self.input_blocks.ncols() / self.input_blocks.nrows();
        let product = &self.input_blocks * self.indicators.kron_identity(m);
        (&self.jacobian - product).amax()
    }
}

/// Assembles the Jacobian bundle under the default rank policy.
pub fn jacobian(state: &WeightState, inputs: &InputSequence) -> Result<JacobianBundle> {
    let rel_tol = default_rel_tol(inputs.len(), state.state_dim());
    jacobian_with_tol(state, inputs, rel_tol)
}

/// Assembles the Jacobian bundle with an explicit rank tolerance.
pub fn jacobian_with_tol(
    state: &WeightState,
    inputs: &InputSequence,
    rel_tol: f64,
) -> Result<JacobianBundle> {
    let m = state.input_dim();
    let n = state.hidden_dim();
    let len = inputs.len();
    if inputs.input_dim() != m {
        return Err(Error::DimensionMismatch {
            context: "input sequence width",
            expected: m,
            actual: inputs.input_dim(),
        });
    }

    let pre_activations = inputs.matrix() * state.matrix();
    let indicators = IndicatorMatrix::of(&pre_activations);

    // Row-wise assembly: row i, column block j is χ_{i,j}·u_i^⊤. Inactive
    // blocks stay exactly zero.
    let mut jac = DMatrix::zeros(len, m * n);
    for i in 0..len {
        for j in 0..n {
            if indicators.matrix()[(i, j)] == 1.0 {
                for k in 0..m {
                    jac[(i, j * m + k)] = inputs.matrix()[(i, k)];
                }
            }
        }
    }

    // Block diagonal of input rows.
    let mut input_blocks = DMatrix::zeros(len, len * m);
    for i in 0..len {
        for k in 0..m {
            input_blocks[(i, i * m + k)] = inputs.matrix()[(i, k)];
        }
    }

    // The factored form must reproduce the row-wise assembly.
    let product = &input_blocks * indicators.kron_identity(m);
    let deviation = (&jac - &product).amax();
    let scale = jac.amax();
    assert!(
        deviation <= FACTORIZATION_TOL * scale.max(f64::MIN_POSITIVE),
        "Jacobian assembly violated the factorization identity: \
         deviation {deviation:.3e} at scale {scale:.3e}"
    );

    let svd = jac.clone().svd(false, false);
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    singular_values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let rank = numerical_rank(&singular_values, rel_tol);

    Ok(JacobianBundle {
        jacobian: jac,
        input_blocks,
        indicators,
        singular_values: DVector::from_vec(singular_values),
        numerical_rank: rank,
        rel_tol,
    })
}

/// Verdict of the observability rank condition, carrying the full bundle so
/// near-deficient spectra remain inspectable.
#[derive(Debug, Clone)]
pub struct RankCheck {
    pub holds: bool,
    pub bundle: JacobianBundle,
}

/// Checks `rank dℋ_N(w) = m·n` under the default rank policy.
pub fn rank_condition(state: &WeightState, inputs: &InputSequence) -> Result<RankCheck> {
    let rel_tol = default_rel_tol(inputs.len(), state.state_dim());
    rank_condition_with_tol(state, inputs, rel_tol)
}

/// Checks the rank condition with an explicit rank tolerance.
pub fn rank_condition_with_tol(
    state: &WeightState,
    inputs: &InputSequence,
    rel_tol: f64,
) -> Result<RankCheck> {
    let bundle = jacobian_with_tol(state, inputs, rel_tol)?;
    Ok(RankCheck {
        holds: bundle.numerical_rank() == state.state_dim(),
        bundle,
    })
}

/// Compares the assembled Jacobian against central finite differences of the
/// output sequence with step `h`, returning the maximum absolute deviation.
///
/// Every pre-activation must satisfy `|w_j^⊤u_i| > 2h`, keeping the
/// difference stencil away from the ReLU kinks where the derivative jumps.
pub fn jacobian_fd_check(state: &WeightState, inputs: &InputSequence, h: f64) -> Result<f64> {
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::Config(format!("step h must be positive, got {h}")));
    }
    let pre_activations = inputs.matrix() * state.matrix();
    for i in 0..pre_activations.nrows() {
        for j in 0..pre_activations.ncols() {
            let value = pre_activations[(i, j)];
            if value.abs() <= 2.0 * h {
                return Err(Error::KinkProximity {
                    row: i,
                    col: j,
                    value,
                    bound: 2.0 * h,
                });
            }
        }
    }

    let bundle = jacobian(state, inputs)?;
    let m = state.input_dim();
    let n = state.hidden_dim();
    let mut max_dev = 0.0f64;
    for j in 0..n {
        for k in 0..m {
            let col = j * m + k;
            let mut plus = state.matrix().clone();
            plus[(k, j)] += h;
            let mut minus = state.matrix().clone();
            minus[(k, j)] -= h;
            let y_plus = output_sequence(&WeightState::new(plus)?, inputs)?;
            let y_minus = output_sequence(&WeightState::new(minus)?, inputs)?;
            for i in 0..inputs.len() {
                let fd = (y_plus[i] - y_minus[i]) / (2.0 * h);
                max_dev = max_dev.max((bundle.jacobian()[(i, col)] - fd).abs());
            }
        }
    }
    Ok(max_dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnn::{indicator, tests::demo_weights};
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn state(rows: usize, cols: usize, data: &[f64]) -> WeightState {
        WeightState::new(DMatrix::from_row_slice(rows, cols, data)).unwrap()
    }

    fn seq(rows: usize, cols: usize, data: &[f64]) -> InputSequence {
        InputSequence::new(DMatrix::from_row_slice(rows, cols, data)).unwrap()
    }

    #[test]
    fn scalar_jacobian_kills_inactive_row() {
        let s = state(1, 1, &[1.0]);
        let u = seq(2, 1, &[1.0, -1.0]);
        let bundle = jacobian(&s, &u).unwrap();
        assert_eq!(
            bundle.jacobian(),
            &DMatrix::from_row_slice(2, 1, &[1.0, 0.0])
        );
    }

    #[test]
    fn numerical_rank_policy() {
        assert_eq!(numerical_rank(&[5.0, 3.0, 1e-15], 1e-9), 2);
        assert_eq!(numerical_rank(&[0.0, 0.0], 1e-9), 0);
        assert_eq!(numerical_rank(&[1.0, 1.0, 1.0], 1e-9), 3);
        assert_eq!(numerical_rank(&[], 1e-9), 0);
    }

    #[test]
    fn indicator_rows_match_per_input_indicator() {
        let s = demo_weights();
        let u = seq(2, 3, &[1.0, 0.0, 0.0, -0.5, 2.0, -1.0]);
        let bundle = jacobian(&s, &u).unwrap();
        for i in 0..2 {
            let row = u.matrix().row(i) * s.matrix();
            for j in 0..3 {
                assert_eq!(bundle.indicators().matrix()[(i, j)], indicator(row[j]));
            }
        }
    }

    #[test]
    fn rank_condition_same_sign_single_input_fails() {
        // With m = 1 and all weights sharing a sign, the activation pattern
        // can only be all-on or all-off, so no sequence excites the state.
        let s = state(1, 3, &[1.0, 2.0, 3.0]);
        for rows in [
            vec![1.0, -1.0, 2.0, -2.0, 0.5],
            vec![3.0, 4.0, -0.1, 0.2, 7.0],
        ] {
            let u = seq(5, 1, &rows);
            let check = rank_condition(&s, &u).unwrap();
            assert!(!check.holds);
        }
    }

    #[test]
    fn fd_check_locally_linear() {
        let s = state(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let u = seq(1, 2, &[1.0, 1.0]);
        let dev = jacobian_fd_check(&s, &u, 1e-6).unwrap();
        assert!(dev < 1e-6, "deviation {dev}");
    }

    #[test]
    fn fd_check_rejects_kink_proximity() {
        // u ⟂ w makes the pre-activation exactly zero.
        let s = state(2, 1, &[1.0, 0.0]);
        let u = seq(1, 2, &[0.0, 1.0]);
        assert!(matches!(
            jacobian_fd_check(&s, &u, 1e-6),
            Err(Error::KinkProximity { row: 0, col: 0, .. })
        ));
    }

    #[test]
    fn wrong_input_width_rejected() {
        let s = demo_weights();
        let u = seq(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            jacobian(&s, &u),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        // Replacing U by cU (c > 0) leaves T_χ unchanged, scales J by c, and
        // cannot change the numerical rank.
        #[test]
        fn positive_scaling_of_inputs(
            w_entries in proptest::collection::vec(-2.0f64..2.0, 4),
            u_entries in proptest::collection::vec(-2.0f64..2.0, 6),
            c in 0.1f64..10.0,
        ) {
            let s = state(2, 2, &w_entries);
            let u = seq(3, 2, &u_entries);
            let scaled = InputSequence::new(u.matrix() * c).unwrap();
            let b1 = jacobian(&s, &u).unwrap();
            let b2 = jacobian(&s, &scaled).unwrap();
            prop_assert_eq!(b1.indicators(), b2.indicators());
            let rescaled = b1.jacobian() * c;
            let dev = (b2.jacobian() - rescaled).amax();
            prop_assert!(dev <= 1e-12 * (1.0 + b2.jacobian().amax()));
            prop_assert_eq!(b1.numerical_rank(), b2.numerical_rank());
        }

        // J has fewer rows than columns whenever N < m·n, so the rank
        // condition can never hold there.
        #[test]
        fn rank_condition_needs_enough_rows(
            w_entries in proptest::collection::vec(-2.0f64..2.0, 6),
            u_entries in proptest::collection::vec(-2.0f64..2.0, 4),
        ) {
            let s = state(2, 3, &w_entries);
            let u = seq(2, 2, &u_entries);
            let check = rank_condition(&s, &u).unwrap();
            prop_assert!(!check.holds);
        }

        #[test]
        fn factorization_identity_random(
            w_entries in proptest::collection::vec(-2.0f64..2.0, 6),
            u_entries in proptest::collection::vec(-2.0f64..2.0, 8),
        ) {
            let s = state(2, 3, &w_entries);
            let u = seq(4, 2, &u_entries);
            let bundle = jacobian(&s, &u).unwrap();
            let scale = bundle.jacobian().amax();
            prop_assert!(bundle.factorization_deviation() <= 1e-12 * scale.max(1e-300));
        }
    }
}
