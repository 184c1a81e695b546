#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "edgelab/potential.hpp"
#include "edgelab/types.hpp"

namespace edgelab {

/// Minimizer (a(x), b(x)) of W(a, b) - (1 - x) log b together with the
/// x-derivatives of the solved curve.
struct LocalMinimizer {
    Scalar x = 0;
    Scalar a = 0;
    Scalar b = 0;
    Scalar a_prime = 0;
    Scalar b_prime = 0;
};

/// 2x2 inverse Hessian of W(a,b) - (1-x) log b at the minimizer,
/// Sigma(x) = -b [[4b', a'], [a', b']].
struct SigmaMatrix {
    Scalar s11 = 0;
    Scalar s12 = 0;
    Scalar s22 = 0;

    Matrix2 matrix() const {
        Matrix2 m;
        m << s11, s12, s12, s22;
        return m;
    }
};

/// Model constants assembled from the local minimizer at x = 0.
struct ScalingConstants {
    Scalar edge = 0;      // a(0) + 2 b(0)
    Scalar tau = 0;       // -(a'(0) + 2 b'(0)) > 0
    Scalar gamma = 0;     // b(0)^{-1/3} tau^{-2/3}
    Scalar vartheta = 0;  // b(0) / tau
    Scalar b0 = 0;        // b(0)
    Scalar a0 = 0;        // a(0)

    Scalar sigma2(Scalar beta) const { return 4.0 / beta * b0 * tau; }
    Scalar m_n(Scalar n) const { return std::cbrt(b0 * n / tau); }
};

/// Newton solve of W1 = 0, b W2 = 1 - x with derivatives from the linearized
/// system. Requires x < 1 and a uniformly convex potential.
LocalMinimizer solve_local_minimizer(const Potential& V, Scalar x);

/// Sigma(x) for x in [0, 1), cross-checkable against the direct Hessian
/// inverse.
SigmaMatrix sigma_matrix(const Potential& V, Scalar x);

ScalingConstants scaling_constants(const Potential& V);

/// Residuals of the two equilibrium-measure endpoint conditions for the
/// rescaled potential V/(1-x) on [L, R]:
///   (1/pi) integral s V'(s)/((1-x) sqrt((s-L)(R-s))) ds - 1
///   (1/pi) integral   V'(s)/((1-x) sqrt((s-L)(R-s))) ds
/// evaluated by Gauss-Chebyshev quadrature with order doubling.
std::pair<Scalar, Scalar> moment_conditions_residual(const Potential& V, Scalar x, Scalar L,
                                                     Scalar R);

/// E(x) = a(x) + 2 b(x) sampled pointwise.
std::vector<Scalar> edge_curve(const Potential& V, const std::vector<Scalar>& xs);

/// Log-log fit of E(0) - E(eps) against eps on [1e-4, 1e-2]; exponent is 1
/// for regular potentials and the prefactor then estimates tau.
struct EdgeExponentProbe {
    Scalar exponent = 0;
    Scalar prefactor = 0;
};
EdgeExponentProbe edge_exponent_probe(const Potential& V);

/// Continuation solve from x = 0.99 downward for potentials that need not be
/// convex. Stops and reports when the 2x2 Hessian loses positive
/// definiteness instead of returning a spurious point.
struct ContinuationResult {
    std::vector<LocalMinimizer> points;
    bool hessian_definite = true;
    Scalar failure_x = 0;
};
ContinuationResult solve_local_minimizer_continuation(const Potential& V,
                                                      const std::vector<Scalar>& xs_descending);

} // namespace edgelab
