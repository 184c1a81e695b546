#include "edgelab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace edgelab {

namespace {

// Pascal's triangle up to kMaxDegree; all entries below 2^53, so doubles hold
// them exactly.
const std::vector<std::vector<Scalar>>& binomial_table() {
    static const std::vector<std::vector<Scalar>> table = [] {
        std::vector<std::vector<Scalar>> t(Potential::kMaxDegree + 1);
        for (int n = 0; n <= Potential::kMaxDegree; ++n) {
            t[n].resize(n + 1);
            t[n][0] = t[n][n] = 1.0;
            for (int k = 1; k < n; ++k) t[n][k] = t[n - 1][k - 1] + t[n - 1][k];
        }
        return t;
    }();
    return table;
}

std::vector<Scalar> poly_derivative(const std::vector<Scalar>& c) {
    if (c.size() <= 1) return {0.0};
    std::vector<Scalar> d(c.size() - 1);
    for (std::size_t m = 1; m < c.size(); ++m) d[m - 1] = static_cast<Scalar>(m) * c[m];
    return d;
}

Scalar poly_eval(const std::vector<Scalar>& c, Scalar s) {
    Scalar v = 0;
    for (std::size_t m = c.size(); m-- > 0;) v = v * s + c[m];
    return v;
}

std::vector<Scalar> trim_leading_zeros(std::vector<Scalar> c) {
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    return c;
}

} // namespace

Scalar binomial(int n, int k) {
    if (n < 0 || k < 0 || k > n || n > Potential::kMaxDegree)
        throw std::invalid_argument("binomial: index out of the precomputed range");
    return binomial_table()[n][k];
}

std::vector<Scalar> real_roots(const std::vector<Scalar>& coeffs_in) {
    std::vector<Scalar> c = trim_leading_zeros(coeffs_in);
    int deg = static_cast<int>(c.size()) - 1;
    if (deg <= 0) return {};
    if (deg == 1) return {-c[0] / c[1]};

    MatrixX companion = MatrixX::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -c[i] / c[deg];

    Eigen::EigenSolver<MatrixX> solver(companion, /*computeEigenvectors=*/false);
    std::vector<Scalar> roots;
    const std::vector<Scalar> dc = poly_derivative(c);
    for (Index i = 0; i < deg; ++i) {
        std::complex<Scalar> z = solver.eigenvalues()(i);
        if (std::abs(z.imag()) > 1e-8 * (1.0 + std::abs(z.real()))) continue;
        Scalar x = z.real();
        // Newton polish toward ~1e-12 residual.
        for (int it = 0; it < 50; ++it) {
            Scalar f = poly_eval(c, x);
            Scalar df = poly_eval(dc, x);
            if (df == 0.0) break;
            Scalar step = f / df;
            x -= step;
            if (std::abs(step) < 1e-14 * (1.0 + std::abs(x))) break;
        }
        roots.push_back(x);
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

Potential::Potential(std::vector<Scalar> coeffs) : coeffs_(trim_leading_zeros(std::move(coeffs))) {
    if (coeffs_.empty() || (coeffs_.size() == 1 && coeffs_[0] == 0.0))
        throw std::invalid_argument("Potential: empty coefficient list");
    int deg = degree();
    if (deg < 2) throw std::invalid_argument("Potential: degree must be at least 2");
    if (deg % 2 != 0) throw std::invalid_argument("Potential: degree must be even");
    if (deg > kMaxDegree) throw std::invalid_argument("Potential: degree above 40 not supported");
    if (coeffs_.back() <= 0.0)
        throw std::invalid_argument("Potential: leading coefficient must be positive");

    // min of V'' over the critical points of V'' (roots of V''').
    const std::vector<Scalar> c2 = poly_derivative(poly_derivative(coeffs_));
    if (deg == 2) {
        convexity_constant_ = c2[0];
    } else {
        const std::vector<Scalar> c3 = poly_derivative(c2);
        Scalar best = kInfinity;
        for (Scalar r : real_roots(c3)) best = std::min(best, poly_eval(c2, r));
        convexity_constant_ = best;
    }

    // Global minimum of V: V' is odd-degree with positive leading coefficient,
    // so it always has a real root; among the critical points pick the lowest.
    Scalar best_arg = 0.0, best_val = kInfinity;
    for (Scalar r : real_roots(poly_derivative(coeffs_))) {
        Scalar v = value(r);
        if (v < best_val) {
            best_val = v;
            best_arg = r;
        }
    }
    argmin_ = best_arg;
}

Potential Potential::parse(const std::string& text) {
    std::istringstream in(text);
    std::vector<Scalar> c;
    Scalar v;
    while (in >> v) c.push_back(v);
    if (!in.eof()) throw std::invalid_argument("Potential::parse: malformed number in \"" + text + "\"");
    if (c.empty()) throw std::invalid_argument("Potential::parse: no coefficients in \"" + text + "\"");
    return Potential(std::move(c));
}

Scalar Potential::value(Scalar s) const { return poly_eval(coeffs_, s); }
Scalar Potential::d1(Scalar s) const { return poly_eval(poly_derivative(coeffs_), s); }
Scalar Potential::d2(Scalar s) const {
    return poly_eval(poly_derivative(poly_derivative(coeffs_)), s);
}
Scalar Potential::d3(Scalar s) const {
    return poly_eval(poly_derivative(poly_derivative(poly_derivative(coeffs_))), s);
}

Potential Potential::shifted(Scalar c) const {
    // V(s - c) = sum_m coeffs[m] sum_{j<=m} C(m,j) s^j (-c)^{m-j}
    std::vector<Scalar> out(coeffs_.size(), 0.0);
    for (std::size_t m = 0; m < coeffs_.size(); ++m) {
        Scalar pw = 1.0;
        for (int j = static_cast<int>(m); j >= 0; --j) {
            out[j] += coeffs_[m] * binomial(static_cast<int>(m), j) * pw;
            pw *= -c;
        }
    }
    return Potential(std::move(out));
}

Scalar convexity_constant(const Potential& V) { return V.convexity_constant(); }

namespace {

// powers x^0..x^deg by repeated multiplication; even powers of -x and x agree
// bitwise, which keeps W exactly even in b
void fill_powers(Scalar x, int deg, std::vector<Scalar>& pw) {
    pw.resize(deg + 1);
    pw[0] = 1.0;
    for (int i = 1; i <= deg; ++i) pw[i] = pw[i - 1] * x;
}

} // namespace

Scalar w_value(const Potential& V, Scalar a, Scalar b) {
    // [1] (a + b y)^m with y = z + 1/z contributes C(m,j) C(j,j/2) a^{m-j} b^j
    // over even j, since [1] y^j = C(j, j/2).
    const auto& c = V.coeffs();
    const int deg = V.degree();
    std::vector<Scalar> ap, bp;
    fill_powers(a, deg, ap);
    fill_powers(b, deg, bp);
    Scalar total = 0;
    for (int m = 0; m < static_cast<int>(c.size()); ++m) {
        if (c[m] == 0.0) continue;
        Scalar term = 0;
        for (int j = 0; j <= m; j += 2) term += binomial(m, j) * binomial(j, j / 2) * ap[m - j] * bp[j];
        total += c[m] * term;
    }
    return total;
}

WDerivatives w_partials(const Potential& V, Scalar a, Scalar b) {
    WDerivatives out;
    const auto& c = V.coeffs();
    const int deg = V.degree();
    std::vector<Scalar> ap, bp;
    fill_powers(a, deg, ap);
    fill_powers(b, deg, bp);
    for (int m = 0; m < static_cast<int>(c.size()); ++m) {
        if (c[m] == 0.0) continue;
        for (int j = 0; j <= m; j += 2) {
            const Scalar base = c[m] * binomial(m, j) * binomial(j, j / 2);
            const int p = m - j;  // power of a
            out.w += base * ap[p] * bp[j];
            if (p >= 1) out.w1 += base * p * ap[p - 1] * bp[j];
            if (j >= 1) out.w2 += base * j * ap[p] * bp[j - 1];
            if (p >= 2) out.w11 += base * p * (p - 1) * ap[p - 2] * bp[j];
            if (p >= 1 && j >= 1) out.w12 += base * p * j * ap[p - 1] * bp[j - 1];
            if (j >= 2) out.w22 += base * j * (j - 1) * ap[p] * bp[j - 2];
        }
    }
    return out;
}

} // namespace edgelab
