#pragma once

#include <string>
#include <vector>

#include "edgelab/types.hpp"

namespace edgelab {

/// Values and partial derivatives of the circulant-trace function W(a, b),
/// the constant Laurent coefficient of V(a + b(z + 1/z)).
struct WDerivatives {
    Scalar w = 0;
    Scalar w1 = 0;  // d/da
    Scalar w2 = 0;  // d/db
    Scalar w11 = 0;
    Scalar w12 = 0;
    Scalar w22 = 0;
};

/// Polynomial potential V(s) = sum_m coeffs[m] s^m with even degree and
/// positive leading coefficient. The uniform-convexity constant
/// min_s V''(s) is computed once at construction; it may be zero or
/// negative, and sampling-side callers reject such potentials.
class Potential {
public:
    /// Maximum supported degree; the binomial table is exact up to here.
    static constexpr int kMaxDegree = 40;

    explicit Potential(std::vector<Scalar> coeffs);

    /// Parses the whitespace-separated ascending-power form "c0 c1 c2 ...".
    static Potential parse(const std::string& text);

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<Scalar>& coeffs() const { return coeffs_; }

    Scalar value(Scalar s) const;
    Scalar d1(Scalar s) const;
    Scalar d2(Scalar s) const;
    Scalar d3(Scalar s) const;

    /// min over the reals of V''; cached at construction.
    Scalar convexity_constant() const { return convexity_constant_; }

    /// Location of the global minimum of V (unique when convex).
    Scalar argmin() const { return argmin_; }

    /// The shifted potential s -> V(s - c), expanded in ascending powers.
    Potential shifted(Scalar c) const;

    bool operator==(const Potential& other) const { return coeffs_ == other.coeffs_; }

private:
    std::vector<Scalar> coeffs_;
    Scalar convexity_constant_ = 0;
    Scalar argmin_ = 0;
};

/// Exact binomial coefficient C(n, k) for n <= Potential::kMaxDegree.
Scalar binomial(int n, int k);

/// Real roots of the polynomial sum_m coeffs[m] s^m, found via the companion
/// matrix and polished by Newton to ~1e-12 residual. Returns an empty vector
/// for constants.
std::vector<Scalar> real_roots(const std::vector<Scalar>& coeffs);

/// min over the reals of V'' (equals Potential::convexity_constant).
Scalar convexity_constant(const Potential& V);

/// W(a, b) = [1] V(a + b(z + 1/z)), evaluated as the finite double-binomial
/// sum. Even in b; W(a, 0) = V(a).
Scalar w_value(const Potential& V, Scalar a, Scalar b);

/// W and its five partial derivatives, differentiated analytically.
WDerivatives w_partials(const Potential& V, Scalar a, Scalar b);

} // namespace edgelab
