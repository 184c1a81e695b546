#pragma once

#include <vector>

#include "edgelab/potential.hpp"
#include "edgelab/tridiagonal.hpp"
#include "edgelab/types.hpp"

namespace edgelab {

/// Conditional minimization of tr V(T(a,b)) - sum_k alpha_k log b_k over a
/// chosen free index set, the remaining entries fixed as boundary data.
/// Indices are 0-based: a_0..a_{n-1}, b_0..b_{n-2}. alpha_k in [0,1].
struct MinimizerProblem {
    Potential V;
    Index n = 0;
    Scalar beta = kInfinity;
    VectorX alpha;               // n-1
    VectorX fixed_a;             // n, consulted where free_a is false
    VectorX fixed_b;             // n-1
    std::vector<char> free_a;    // n
    std::vector<char> free_b;    // n-1
    VectorX init_a;              // optional starting iterate (size 0 = default)
    VectorX init_b;

    void validate() const;
};

/// Fully free problem for the Dyson Hamiltonian: alpha_k = 1 - k/n - 1/(n beta)
/// (1-based k), or 1 - k/n at beta = infinity.
MinimizerProblem dyson_problem(const Potential& V, Index n, Scalar beta);

/// Free on [lo, hi] (0-based, inclusive, applied to both a and b slots that
/// fit), boundary entries taken from the given full vectors.
MinimizerProblem conditional_problem(const Potential& V, Index n, Scalar beta, Index lo, Index hi,
                                     const VectorX& boundary_a, const VectorX& boundary_b);

struct MinimizerSolution {
    VectorX a;          // full length n (fixed entries merged back)
    VectorX b;          // full length n-1
    Scalar grad_norm = 0;
    int iterations = 0;
    Scalar objective = 0;
};

/// Damped Newton with banded Hessian and backtracking line search; off-
/// diagonal coordinates are kept positive. Throws on non-convex
/// configurations (nonpositive pivot) and on line-search stall.
MinimizerSolution minimize_H(const MinimizerProblem& problem);

TridiagonalSym solution_matrix(const MinimizerSolution& sol);

/// Perturb the boundary of a conditional window by delta and fit
/// log |difference at k| against dist(k, boundary). slope < 0 measures the
/// exponential insensitivity to boundary data.
struct DecayFit {
    Scalar slope = 0;
    bool saturated = false;  // all differences below 1e-14
};
DecayFit boundary_decay_rate(const Potential& V, Index window_len, Scalar delta);

/// Top m x m minor of the limiting Jacobi operator: minimize with alpha == 1,
/// zero left boundary, local-minimizer right boundary at n_embed.
TridiagonalSym approx_J(const Potential& V, Index m, Index n_embed);

/// (lambda_max(J[1,m]), a(0) + b(0) (2 - (j00/m)^2)) with j00 the first
/// zero of the Bessel function J0.
std::pair<Scalar, Scalar> quadrature_bound_check(const Potential& V, Index m);

inline constexpr Scalar kBesselJ0FirstZero = 2.404825557695773;

/// Stationarity of the beta = infinity minimizer as a Fekete configuration:
/// max_i |n V'(l_i) - sum_{j != i} 1/(l_i - l_j)| / n, plus the spread of the
/// spectral weights around 1/n.
struct FeketeReport {
    Scalar max_stationarity_residual = 0;
    Scalar max_weight_deviation = 0;
    bool clustered = false;  // min eigenvalue gap below 1e-12
};
FeketeReport fekete_stationarity(const Potential& V, const TridiagonalSym& T);

/// Smallest eigenvalue of the m x m block of
///   (b0 - kappa/m^2) e_mm + T_|[m,n] + (edge - kappa/m^2) I_|[1,m-1] - T,
/// nonnegative with high probability for sampled ensembles (m 1-based).
Scalar truncation_bound_min_eig(const TridiagonalSym& T, Index m, Scalar edge, Scalar b0,
                                Scalar kappa);

} // namespace edgelab
