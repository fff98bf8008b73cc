//! Brute-force ground truth at desk scale.
//!
//! These checks are independent of the Jacobian machinery: they compare
//! network outputs pointwise over dense input grids. A grid agreement is a
//! certificate, not a proof — except for single-input networks, where the
//! output is piecewise linear with its only breakpoint at `u = 0`, so
//! agreement on two points strictly on each side of zero pins both linear
//! pieces. The certificate reports whether the grid is conclusive in that
//! sense.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fnn::{forward, indicator, WeightState};

/// Hard cap on the number of grid points.
pub const GRID_POINT_CAP: u64 = 1_000_000;
/// Two outputs within this of each other everywhere on a grid count as
/// identical.
pub const SWEEP_IDENTICAL_TOL: f64 = 1e-12;

/// A dense rectangular sweep grid: `resolution` evenly spaced points per
/// dimension, endpoints included.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    ranges: Vec<(f64, f64)>,
    resolution: usize,
}

impl SweepGrid {
    pub fn new(ranges: Vec<(f64, f64)>, resolution: usize) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::Empty { what: "sweep grid" });
        }
        if resolution < 2 {
            return Err(Error::GridResolution(resolution));
        }
        for &(lo, hi) in &ranges {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::GridRange { lo, hi });
            }
        }
        let points = (resolution as u128).pow(ranges.len() as u32);
        if points > GRID_POINT_CAP as u128 {
            return Err(Error::GridCapExceeded {
                points,
                cap: GRID_POINT_CAP,
            });
        }
        Ok(Self { ranges, resolution })
    }

    /// Same range on every one of `dim` dimensions.
    pub fn uniform(dim: usize, lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        Self::new(vec![(lo, hi); dim], resolution)
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn point_count(&self) -> u64 {
        (self.resolution as u64).pow(self.ranges.len() as u32)
    }

    fn axis_value(&self, dim: usize, index: usize) -> f64 {
        let (lo, hi) = self.ranges[dim];
        lo + (hi - lo) * index as f64 / (self.resolution - 1) as f64
    }

    /// Grid points in a fixed row-major order (last dimension fastest).
    pub fn points(&self) -> impl Iterator<Item = DVector<f64>> + '_ {
        let dims = self.dim();
        let total = self.point_count();
        (0..total).map(move |flat| {
            let mut point = DVector::zeros(dims);
            let mut rem = flat;
            for d in (0..dims).rev() {
                let idx = (rem % self.resolution as u64) as usize;
                rem /= self.resolution as u64;
                point[d] = self.axis_value(d, idx);
            }
            point
        })
    }

    /// For one-dimensional grids: true when at least two points lie strictly
    /// on each side of zero, which pins both linear pieces of any
    /// single-input ReLU network.
    pub fn refines_scalar_breakpoint(&self) -> bool {
        if self.dim() != 1 {
            return false;
        }
        let negatives = (0..self.resolution)
            .filter(|&i| self.axis_value(0, i) < 0.0)
            .count();
        let positives = (0..self.resolution)
            .filter(|&i| self.axis_value(0, i) > 0.0)
            .count();
        negatives >= 2 && positives >= 2
    }
}

/// Verdict of a pointwise output comparison over a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepVerdict {
    /// `max |Δy| ≤ 1e-12` over the grid.
    Identical { max_abs_diff: f64 },
    /// Outputs differ; carries the grid point of largest difference.
    DifferAt { input: DVector<f64>, abs_diff: f64 },
}

/// Compares two states' outputs at every grid point.
pub fn sweep_distinguish(
    a: &WeightState,
    b: &WeightState,
    grid: &SweepGrid,
) -> Result<SweepVerdict> {
    if a.input_dim() != b.input_dim() || a.hidden_dim() != b.hidden_dim() {
        return Err(Error::DimensionMismatch {
            context: "state shapes under comparison",
            expected: a.state_dim(),
            actual: b.state_dim(),
        });
    }
    if grid.dim() != a.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "grid dimension",
            expected: a.input_dim(),
            actual: grid.dim(),
        });
    }
    let mut max_abs_diff = 0.0f64;
    let mut witness: Option<DVector<f64>> = None;
    for point in grid.points() {
        let diff = (forward(a, &point)? - forward(b, &point)?).abs();
        if diff > max_abs_diff {
            max_abs_diff = diff;
            witness = Some(point);
        }
    }
    if max_abs_diff <= SWEEP_IDENTICAL_TOL {
        Ok(SweepVerdict::Identical { max_abs_diff })
    } else {
        Ok(SweepVerdict::DifferAt {
            input: witness.expect("a strictly positive max has a witness"),
            abs_diff: max_abs_diff,
        })
    }
}

/// The set of distinct activation patterns `χ(u^⊤W)` attained over a grid,
/// each pattern a 0/1 row of length `n`.
pub fn pattern_census(state: &WeightState, grid: &SweepGrid) -> Result<BTreeSet<Vec<u8>>> {
    if grid.dim() != state.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "grid dimension",
            expected: state.input_dim(),
            actual: grid.dim(),
        });
    }
    let mut census = BTreeSet::new();
    for point in grid.points() {
        let pattern: Vec<u8> = state
            .matrix()
            .column_iter()
            .map(|w_j| indicator(w_j.dot(&point)) as u8)
            .collect();
        census.insert(pattern);
    }
    Ok(census)
}

/// Builds a reparameterized state with identical input-output behavior for a
/// single-input network: half of one weight is transferred to a same-signed
/// partner, preserving each sign group's sum. All weights must be nonzero.
pub fn indistinguishable_witness(state: &WeightState) -> Result<WeightState> {
    if state.input_dim() != 1 {
        return Err(Error::DimensionMismatch {
            context: "witness construction input dimension",
            expected: 1,
            actual: state.input_dim(),
        });
    }
    let weights: Vec<f64> = state.matrix().iter().copied().collect();
    for (index, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            return Err(Error::ZeroWeight { index });
        }
    }
    let pair = (0..weights.len())
        .flat_map(|i| ((i + 1)..weights.len()).map(move |j| (i, j)))
        .find(|&(i, j)| (weights[i] > 0.0) == (weights[j] > 0.0));
    let (i, j) = pair.ok_or(Error::Config(
        "no two weights share a sign; the transfer witness needs a same-signed pair".into(),
    ))?;
    let mut reparam = weights;
    reparam[i] += reparam[j] / 2.0;
    reparam[j] /= 2.0;
    WeightState::new(DMatrix::from_row_slice(1, reparam.len(), &reparam))
}

/// Grid-level evidence attached to a witness.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCertificate {
    pub max_abs_diff: f64,
    /// Whether the grid pins both linear pieces of a single-input network
    /// (see [`SweepGrid::refines_scalar_breakpoint`]). When true, agreement
    /// on the grid is conclusive, not merely sampled.
    pub conclusive: bool,
}

/// Outcome of the single-input, three-node indistinguishability check.
#[derive(Debug, Clone, PartialEq)]
pub enum Example1Outcome {
    /// A distinct state with grid-certified identical outputs.
    Indistinguishable {
        witness: WeightState,
        certificate: GridCertificate,
    },
    /// The constructed reparameterization was told apart by the sweep.
    Distinguishable { input: DVector<f64>, abs_diff: f64 },
}

/// For a single-input network with three nonzero hidden weights, constructs
/// a reparameterization with the same outputs everywhere and certifies it by
/// a sweep over the grid. Whatever the inputs, such weights are never
/// locally observable.
pub fn example1_oracle(a: f64, b: f64, c: f64, grid: &SweepGrid) -> Result<Example1Outcome> {
    let state = WeightState::new(DMatrix::from_row_slice(1, 3, &[a, b, c]))?;
    let witness = indistinguishable_witness(&state)?;
    match sweep_distinguish(&state, &witness, grid)? {
        SweepVerdict::Identical { max_abs_diff } => Ok(Example1Outcome::Indistinguishable {
            witness,
            certificate: GridCertificate {
                max_abs_diff,
                conclusive: grid.refines_scalar_breakpoint(),
            },
        }),
        SweepVerdict::DifferAt { input, abs_diff } => {
            Ok(Example1Outcome::Distinguishable { input, abs_diff })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnn::tests::demo_weights;
    use proptest::prelude::*;

    fn line_grid() -> SweepGrid {
        // even resolution avoids u = 0 and leaves plenty of points per side
        SweepGrid::uniform(1, -2.0, 2.0, 100).unwrap()
    }

    fn m1_state(weights: &[f64]) -> WeightState {
        WeightState::new(DMatrix::from_row_slice(1, weights.len(), weights)).unwrap()
    }

    #[test]
    fn same_state_is_identical() {
        let s = m1_state(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            sweep_distinguish(&s, &s, &line_grid()).unwrap(),
            SweepVerdict::Identical { .. }
        ));
    }

    #[test]
    fn witness_for_all_positive_triple() {
        let outcome = example1_oracle(1.0, 2.0, 3.0, &line_grid()).unwrap();
        match outcome {
            Example1Outcome::Indistinguishable {
                witness,
                certificate,
            } => {
                assert_ne!(witness, m1_state(&[1.0, 2.0, 3.0]));
                assert!(certificate.conclusive);
                assert!(certificate.max_abs_diff <= SWEEP_IDENTICAL_TOL);
                // the transfer moves half of the second weight to the first
                assert_eq!(
                    witness.matrix(),
                    &DMatrix::from_row_slice(1, 3, &[2.0, 1.0, 3.0])
                );
            }
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    #[test]
    fn stated_witnesses_check_out() {
        // (1,2,3) vs (2,1,3): same sum, same signs
        let v = sweep_distinguish(&m1_state(&[1.0, 2.0, 3.0]), &m1_state(&[2.0, 1.0, 3.0]),
            &line_grid()).unwrap();
        assert!(matches!(v, SweepVerdict::Identical { .. }));
        // (1,2,-3) vs (1.5,1.5,-3): positive-group sum preserved
        let v = sweep_distinguish(&m1_state(&[1.0, 2.0, -3.0]), &m1_state(&[1.5, 1.5, -3.0]),
            &line_grid()).unwrap();
        assert!(matches!(v, SweepVerdict::Identical { .. }));
    }

    #[test]
    fn mixed_sign_triple_gets_witness() {
        let outcome = example1_oracle(1.0, 2.0, -3.0, &line_grid()).unwrap();
        assert!(matches!(
            outcome,
            Example1Outcome::Indistinguishable { .. }
        ));
    }

    #[test]
    fn different_sums_are_distinguishable() {
        let v = sweep_distinguish(&m1_state(&[1.0, 2.0, 3.0]), &m1_state(&[1.0, 2.0, 4.0]),
            &line_grid()).unwrap();
        match v {
            SweepVerdict::DifferAt { input, abs_diff } => {
                assert!(input[0] > 0.0, "slopes differ only for u > 0");
                assert!(abs_diff > 0.1);
            }
            other => panic!("expected a difference, got {other:?}"),
        }
    }

    #[test]
    fn zero_weight_is_rejected() {
        assert!(matches!(
            example1_oracle(0.0, 1.0, 2.0, &line_grid()),
            Err(Error::ZeroWeight { index: 0 })
        ));
    }

    #[test]
    fn witness_generalizes_past_three_nodes() {
        for n in 4..=6 {
            let weights: Vec<f64> = (0..n)
                .map(|i| {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    sign * (0.5 + i as f64)
                })
                .collect();
            let state = m1_state(&weights);
            let witness = indistinguishable_witness(&state).unwrap();
            assert_ne!(witness, state);
            let v = sweep_distinguish(&state, &witness, &line_grid()).unwrap();
            assert!(matches!(v, SweepVerdict::Identical { .. }), "n = {n}");
        }
    }

    #[test]
    fn census_single_input_same_sign() {
        let grid = SweepGrid::uniform(1, -2.0, 2.0, 21).unwrap();
        let census = pattern_census(&m1_state(&[1.0, 2.0, 3.0]), &grid).unwrap();
        let expected: BTreeSet<Vec<u8>> =
            [vec![0, 0, 0], vec![1, 1, 1]].into_iter().collect();
        assert_eq!(census, expected);
    }

    #[test]
    fn census_identity_two_dim_covers_all_quadrants() {
        let s = WeightState::new(DMatrix::identity(2, 2)).unwrap();
        let grid = SweepGrid::uniform(2, -2.0, 2.0, 4).unwrap();
        let census = pattern_census(&s, &grid).unwrap();
        let expected: BTreeSet<Vec<u8>> =
            [vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
                .into_iter()
                .collect();
        assert_eq!(census, expected);
    }

    #[test]
    fn census_demo_weights_contains_pattern_rows() {
        let grid = SweepGrid::uniform(3, -2.0, 2.0, 21).unwrap();
        let census = pattern_census(&demo_weights(), &grid).unwrap();
        for row in [vec![0, 1, 0], vec![1, 1, 1], vec![0, 0, 1]] {
            assert!(census.contains(&row), "missing pattern {row:?}");
        }
    }

    #[test]
    fn grid_cap_and_resolution_guards() {
        assert!(matches!(
            SweepGrid::uniform(4, -1.0, 1.0, 100),
            Err(Error::GridCapExceeded { .. })
        ));
        assert!(matches!(
            SweepGrid::uniform(1, -1.0, 1.0, 1),
            Err(Error::GridResolution(1))
        ));
        assert!(matches!(
            SweepGrid::uniform(1, 1.0, -1.0, 5),
            Err(Error::GridRange { .. })
        ));
    }

    #[test]
    fn breakpoint_refinement_flag() {
        assert!(line_grid().refines_scalar_breakpoint());
        let one_sided = SweepGrid::uniform(1, 0.5, 2.0, 10).unwrap();
        assert!(!one_sided.refines_scalar_breakpoint());
        let too_coarse = SweepGrid::uniform(1, -1.0, 1.0, 2).unwrap();
        assert!(!too_coarse.refines_scalar_breakpoint());
    }

    proptest! {
        // each m = 1 network attains at most 1 + (#distinct weight signs)
        // patterns: one per input sign plus the all-off row at u = 0
        #[test]
        fn census_size_bound_single_input(
            weights in proptest::collection::vec(
                (-5.0f64..5.0).prop_filter("nonzero", |w| w.abs() > 1e-3), 1..5),
        ) {
            let grid = SweepGrid::uniform(1, -3.0, 3.0, 31).unwrap();
            let census = pattern_census(&m1_state(&weights), &grid).unwrap();
            let distinct_signs = {
                let pos = weights.iter().any(|&w| w > 0.0);
                let neg = weights.iter().any(|&w| w < 0.0);
                usize::from(pos) + usize::from(neg)
            };
            prop_assert!(census.len() <= 1 + distinct_signs);
        }

        #[test]
        fn sweep_is_symmetric(
            wa in proptest::collection::vec(-3.0f64..3.0, 3),
            wb in proptest::collection::vec(-3.0f64..3.0, 3),
        ) {
            let grid = SweepGrid::uniform(1, -2.0, 2.0, 17).unwrap();
            let a = m1_state(&wa);
            let b = m1_state(&wb);
            let ab = sweep_distinguish(&a, &b, &grid).unwrap();
            let ba = sweep_distinguish(&b, &a, &grid).unwrap();
            match (ab, ba) {
                (SweepVerdict::Identical { .. }, SweepVerdict::Identical { .. }) => {}
                (
                    SweepVerdict::DifferAt { input: ua, abs_diff: da },
                    SweepVerdict::DifferAt { input: ub, abs_diff: db },
                ) => {
                    prop_assert_eq!(ua, ub);
                    prop_assert_eq!(da, db);
                }
                other => prop_assert!(false, "asymmetric verdicts: {:?}", other),
            }
        }
    }
}
