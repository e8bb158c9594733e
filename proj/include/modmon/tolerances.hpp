#pragma once

namespace modmon::tol {

// Repo-wide tolerance constants. Tests and validation use these, never ad-hoc
// literals, so the contracts stay consistent across modules.

// Adjacency symmetry check at construction.
inline constexpr double kSymmetry = 1e-12;

// Row sums of a soft assignment must be 1 within this.
inline constexpr double kRowStochastic = 1e-9;

// Agreement between independent algebraic routes (pairwise vs. trace
// modularity, dense oracle vs. rank-1 form).
inline constexpr double kOracleEquality = 1e-10;

// Finite-difference gradient gate: max relative error.
inline constexpr double kGradientCheck = 1e-4;

// Per-community theta normalization.
inline constexpr double kThetaNormalization = 1e-9;

}  // namespace modmon::tol
