//! Two-layer ReLU feedforward networks.
//!
//! The network has `m` input nodes, `n` hidden ReLU nodes, and a single
//! output node that sums the hidden activations with unit weights. The only
//! free parameters are the input-to-hidden weights `W ∈ ℝ^{m×n}`, treated
//! throughout the crate as the state of a static dynamical system. Column
//! `j` of `W` is the weight vector of hidden node `j`, and the flattened
//! state is the column-major concatenation `(w_1; w_2; …; w_n) ∈ ℝ^{mn}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// ReLU activation: `max(0, a)`.
#[inline]
pub fn relu(a: f64) -> f64 {
    a.max(0.0)
}

/// Derivative of the ReLU. The value at exactly zero is fixed to 0.
#[inline]
pub fn relu_derivative(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Indicator of strict positivity: 1 for `a > 0`, 0 for `a ≤ 0`.
///
/// Comparisons are exact; there is no epsilon anywhere in the indicator.
#[inline]
pub fn indicator(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Elementwise lift of [`indicator`] to matrices. Entries of the result are
/// exactly 0.0 or 1.0.
pub fn indicator_matrix(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(indicator)
}

fn ensure_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what })
    }
}

/// The weight state of a network: the matrix `W ∈ ℝ^{m×n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightState {
    weights: DMatrix<f64>,
}

impl WeightState {
    /// Wraps a weight matrix, rejecting empty or non-finite matrices.
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::Empty {
                what: "weight matrix",
            });
        }
        ensure_finite(&weights, "weight matrix")?;
        Ok(Self { weights })
    }

    /// Builds a state from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Empty {
                what: "weight matrix",
            });
        }
        let cols = rows[0].len();
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "weight matrix row length",
                    expected: cols,
                    actual: row.len(),
                });
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), cols, &flat))
    }

    /// Number of input nodes `m`.
    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    /// Number of hidden nodes `n`.
    pub fn hidden_dim(&self) -> usize {
        self.weights.ncols()
    }

    /// Dimension of the flattened state, `m·n`.
    pub fn state_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// The flattened state `(w_1; w_2; …; w_n)`, column of `W` after column.
    pub fn flattened(&self) -> DVector<f64> {
        DVector::from_iterator(self.weights.len(), self.weights.iter().copied())
    }

    /// The state `W + delta`.
    pub fn perturbed(&self, delta: &DMatrix<f64>) -> Result<Self> {
        if delta.shape() != self.weights.shape() {
            return Err(Error::DimensionMismatch {
                context: "perturbation shape",
                expected: self.weights.len(),
                actual: delta.len(),
            });
        }
        Self::new(&self.weights + delta)
    }
}

/// An ordered input sequence, stored as the stacked matrix `U ∈ ℝ^{N×m}`
/// whose row `i` is the input `u_i^⊤`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSequence {
    inputs: DMatrix<f64>,
}

impl InputSequence {
    pub fn new(inputs: DMatrix<f64>) -> Result<Self> {
        if inputs.nrows() == 0 || inputs.ncols() == 0 {
            return Err(Error::Empty {
                what: "input sequence",
            });
        }
        ensure_finite(&inputs, "input sequence")?;
        Ok(Self { inputs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Empty {
                what: "input sequence",
            });
        }
        let cols = rows[0].len();
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "input sequence row length",
                    expected: cols,
                    actual: row.len(),
                });
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), cols, &flat))
    }

    /// Sequence length `N`.
    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    /// Input dimension `m`.
    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    /// The `i`th input `u_i` as a column vector.
    pub fn input(&self, i: usize) -> DVector<f64> {
        self.inputs.row(i).transpose()
    }
}

/// Network output `h(W, u) = Σ_j σ(w_j^⊤ u)` for a single input.
pub fn forward(state: &WeightState, input: &DVector<f64>) -> Result<f64> {
    if input.len() != state.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "forward input length",
            expected: state.input_dim(),
            actual: input.len(),
        });
    }
    Ok(state
        .matrix()
        .column_iter()
        .map(|w_j| relu(w_j.dot(input)))
        .sum())
}

/// Output sequence `y_i = h(W, u_i)` for every input in the sequence.
///
/// Because the weight dynamics are static, this is exactly the
/// N-observability mapping of the state evaluated along the sequence.
pub fn output_sequence(state: &WeightState, inputs: &InputSequence) -> Result<DVector<f64>> {
    if inputs.input_dim() != state.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "input sequence width",
            expected: state.input_dim(),
            actual: inputs.input_dim(),
        });
    }
    let mut y = DVector::zeros(inputs.len());
    for i in 0..inputs.len() {
        y[i] = forward(state, &inputs.input(i))?;
    }
    Ok(y)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state(rows: usize, cols: usize, data: &[f64]) -> WeightState {
        WeightState::new(DMatrix::from_row_slice(rows, cols, data)).unwrap()
    }

    /// Weight matrix used by the numerical experiment.
    pub(crate) fn demo_weights() -> WeightState {
        state(
            3,
            3,
            &[0.67, 0.07, 0.15, 0.90, 0.42, 0.09, 0.72, 0.91, 0.51],
        )
    }

    #[test]
    fn relu_values() {
        assert_eq!(relu(0.0), 0.0);
        assert_eq!(relu(-2.5), 0.0);
        assert_eq!(relu(3.0), 3.0);
    }

    #[test]
    fn relu_derivative_zero_is_zero() {
        assert_eq!(relu_derivative(0.0), 0.0);
        assert_eq!(relu_derivative(1e-12), 1.0);
        assert_eq!(relu_derivative(-1.0), 0.0);
    }

    #[test]
    fn indicator_values_and_lift() {
        assert_eq!(indicator(0.0), 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 2.0]);
        let lifted = indicator_matrix(&m);
        assert_eq!(lifted, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn forward_identity_weights() {
        let s = state(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let u = DVector::from_vec(vec![1.0, -1.0]);
        assert_eq!(forward(&s, &u).unwrap(), 1.0);
    }

    #[test]
    fn forward_zero_weights() {
        let s = state(3, 2, &[0.0; 6]);
        let u = DVector::from_vec(vec![4.0, -7.0, 0.3]);
        assert_eq!(forward(&s, &u).unwrap(), 0.0);
    }

    #[test]
    fn forward_demo_weights_first_axis() {
        let s = demo_weights();
        let u = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let y = forward(&s, &u).unwrap();
        // independent scalar-loop oracle
        let mut oracle = 0.0;
        for j in 0..3 {
            let mut pre = 0.0;
            for i in 0..3 {
                pre += s.matrix()[(i, j)] * u[i];
            }
            oracle += if pre > 0.0 { pre } else { 0.0 };
        }
        assert!((y - 0.89).abs() < 1e-12);
        assert!((y - oracle).abs() < 1e-12);
    }

    #[test]
    fn forward_rejects_wrong_length() {
        let s = demo_weights();
        let u = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(
            forward(&s, &u),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn output_sequence_zero_weights() {
        let s = state(2, 3, &[0.0; 6]);
        let u = InputSequence::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        assert_eq!(output_sequence(&s, &u).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn output_sequence_scalar_line() {
        let s = state(1, 1, &[2.0]);
        let u = InputSequence::from_rows(&[vec![1.0], vec![-1.0], vec![3.0]]).unwrap();
        let y = output_sequence(&s, &u).unwrap();
        assert_eq!(y, DVector::from_vec(vec![2.0, 0.0, 6.0]));
    }

    #[test]
    fn output_sequence_matches_row_sum_oracle() {
        let s = demo_weights();
        let u = InputSequence::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.5, -2.0, 1.0],
            vec![-1.0, -1.0, -1.0],
        ])
        .unwrap();
        let y = output_sequence(&s, &u).unwrap();
        // oracle: elementwise relu of UW, then row sums
        let pre = u.matrix() * s.matrix();
        for i in 0..u.len() {
            let row_sum: f64 = pre.row(i).iter().map(|&a| relu(a)).sum();
            assert!((y[i] - row_sum).abs() < 1e-12);
        }
    }

    #[test]
    fn flattening_is_column_major() {
        let s = state(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            s.flattened(),
            DVector::from_vec(vec![1.0, 3.0, 2.0, 4.0]),
            "w must concatenate column w_1 then w_2"
        );
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(
            WeightState::new(m),
            Err(Error::NonFinite { .. })
        ));
    }

    proptest! {
        #[test]
        fn indicator_equals_relu_derivative(a in -1e6f64..1e6f64) {
            prop_assert_eq!(indicator(a), relu_derivative(a));
        }

        #[test]
        fn forward_is_positively_homogeneous(
            entries in proptest::collection::vec(-3.0f64..3.0, 6),
            input in proptest::collection::vec(-3.0f64..3.0, 2),
            c in 0.01f64..100.0,
        ) {
            let s = state(2, 3, &entries);
            let u = DVector::from_vec(input);
            let scaled = &u * c;
            let lhs = forward(&s, &scaled).unwrap();
            let rhs = c * forward(&s, &u).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn output_sequence_is_permutation_equivariant(
            entries in proptest::collection::vec(-3.0f64..3.0, 6),
            rows in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 2), 1..6),
        ) {
            let s = state(2, 3, &entries);
            let u = InputSequence::from_rows(&rows).unwrap();
            let y = output_sequence(&s, &u).unwrap();
            let mut reversed = rows.clone();
            reversed.reverse();
            let u_rev = InputSequence::from_rows(&reversed).unwrap();
            let y_rev = output_sequence(&s, &u_rev).unwrap();
            for i in 0..rows.len() {
                prop_assert_eq!(y[i], y_rev[rows.len() - 1 - i]);
            }
        }
    }
}
