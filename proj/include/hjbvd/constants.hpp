#pragma once

#include <algorithm>
#include <cstddef>

// Default tolerances and sizes. None of these come from the analysis of the
// continuous problem; they are numerical choices sized for desk-scale runs.
namespace hjbvd::defaults {

inline constexpr std::size_t shape_1d = 401;
// 41 x 41 keeps the 2D measure LPs under the dense basis limit.
inline constexpr std::size_t shape_2d = 41;
inline constexpr std::size_t control_samples = 41;

// Value iteration stops when the max Bellman residual drops below this.
inline constexpr double value_iteration_tol = 1e-10;
inline constexpr std::size_t value_iteration_max_sweeps = 2'000'000;

inline constexpr double policy_iteration_tol = 1e-10;
inline constexpr std::size_t policy_iteration_max_iter = 2000;

// Feasibility / optimality tolerances for both simplex codes.
inline constexpr double lp_feasibility_tol = 1e-9;
inline constexpr double lp_optimality_tol = 1e-11;
// Dense basis inverses cost dim^2 doubles: 4096 -> 128 MiB.
inline constexpr std::size_t lp_max_dense_dim = 4096;

// Dual-cone sampling.
inline constexpr std::size_t membership_samples = 16;
inline constexpr double membership_violation_tol = 1e-8;
inline constexpr unsigned long long seed = 20161128ULL;

// Green-measure duality is exact at the discrete level.
inline constexpr double duality_gap_tol = 1e-8;

// Route agreement between the two LP routes (they are LP duals).
inline constexpr double lp_route_tol = 1e-6;

// Vanishing discount vs LP: max(5e-2, 10 h).
inline double vanishing_route_tol(double h) { return std::max(5e-2, 10.0 * h); }

// Dirichlet dichotomy threshold: max(10 h, 1e-3).
inline double dichotomy_tol(double h) { return std::max(10.0 * h, 1e-3); }

// Convergence of normalized deltas in studies: max(5 h, 1e-4).
inline double study_delta_tol(double h) { return std::max(5.0 * h, 1e-4); }

// Selection-principle tolerance: max(10 h, 10 lambda_min).
inline double selection_tol(double h, double lambda_min) {
    return std::max(10.0 * h, 10.0 * lambda_min);
}

inline constexpr double psd_floor = -1e-12;

}  // namespace hjbvd::defaults
