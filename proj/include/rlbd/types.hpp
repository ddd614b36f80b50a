#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rlbd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense : std::uint8_t { GreaterEqual, LessEqual, Equal };

// Every numeric knob of the LP/MIP layer lives here so tests and callers
// agree on one set of tolerances.
struct SolverTolerances {
  double feasibility = 1e-9;  // primal bound/row violation
  double duality = 1e-7;      // relative primal-dual agreement
  double pivot = 1e-10;       // smallest acceptable pivot element
  double integrality = 1e-6;  // distance from integer counted as integral
  int bland_after = 1000;     // degenerate pivots before Bland's rule kicks in
  int iteration_factor = 50;  // simplex cap = factor * (rows + cols)
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Simplex exceeded its pivot budget or met a singular basis.
struct NumericalFailure : SolverError {
  using SolverError::SolverError;
};

// LP/MIP has directions of unbounded descent.
struct UnboundedProblem : SolverError {
  using SolverError::SolverError;
};

// A recourse subproblem was infeasible: the model violates relatively
// complete recourse, so no valid optimality cut exists.
struct SubproblemInfeasible : SolverError {
  using SolverError::SolverError;
};

// Master became unbounded (theta lower bounds disabled with an empty pool).
struct MasterUnbounded : SolverError {
  using SolverError::SolverError;
};

inline double relative_gap(double upper, double lower, double eps = 1e-8) {
  return (upper - lower) / (std::abs(upper) + eps);
}

}  // namespace rlbd
