#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "edgelab/potential.hpp"
#include "edgelab/rng.hpp"

using namespace edgelab;

namespace {

Potential random_convex_potential(Philox& rng, int max_degree = 10) {
    // even degree, positive leading coefficient; convexity not guaranteed
    // unless the caller filters, but W identities hold regardless
    int deg = 2 * (1 + static_cast<int>(rng.uniform() * (max_degree / 2)));
    std::vector<Scalar> c(deg + 1);
    for (int m = 0; m < deg; ++m) c[m] = 2.0 * rng.uniform() - 1.0;
    c[deg] = 0.2 + rng.uniform();
    return Potential(std::move(c));
}

// brute-force circulant trace: tr V(C)/d with C the d x d symmetric
// circulant with diagonal a and first off-diagonal b (wrapping corners)
Scalar circulant_trace_oracle(const Potential& V, Scalar a, Scalar b, int d) {
    MatrixX C = MatrixX::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        C(i, i) = a;
        C(i, (i + 1) % d) += b;
        C((i + 1) % d, i) += b;
    }
    MatrixX P = MatrixX::Zero(d, d);
    const auto& coef = V.coeffs();
    for (int i = 0; i < d; ++i) P(i, i) = coef.back();
    for (int m = static_cast<int>(coef.size()) - 2; m >= 0; --m) {
        P = C * P;
        for (int i = 0; i < d; ++i) P(i, i) += coef[m];
    }
    return P.trace() / d;
}

} // namespace

TEST_CASE("convexity constant closed forms") {
    CHECK(Potential({0, 0, 0.25}).convexity_constant() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(Potential({0, 0, 0.5, 0, 0.25}).convexity_constant() ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(Potential({0, 0, 0, 0, 1}).convexity_constant() == doctest::Approx(0.0).epsilon(1e-10));
    // non-convex potentials are constructible; samplers must reject them
    CHECK(Potential({0, 0, -3, 0, 1}).convexity_constant() == doctest::Approx(-6.0).epsilon(1e-8));
}

TEST_CASE("potential validation") {
    CHECK_THROWS_AS(Potential(std::vector<Scalar>{}), std::invalid_argument);
    CHECK_THROWS_AS(Potential({1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Potential({0, 0, 0, 1.0}), std::invalid_argument);   // odd degree
    CHECK_THROWS_AS(Potential({0, 0, -1.0}), std::invalid_argument);     // negative leading
    std::vector<Scalar> too_long(43, 0.0);
    too_long[42] = 1.0;
    CHECK_THROWS_AS(Potential{too_long}, std::invalid_argument);
    CHECK_THROWS_AS(Potential::parse("0 0 x"), std::invalid_argument);
    CHECK(Potential::parse("0 0 0.25").degree() == 2);
}

TEST_CASE("w_value closed forms") {
    Potential s2({0, 0, 1});
    Philox rng(11);
    for (int i = 0; i < 20; ++i) {
        Scalar a = 4 * rng.uniform() - 2, b = 4 * rng.uniform() - 2;
        CHECK(w_value(s2, a, b) == doctest::Approx(a * a + 2 * b * b).epsilon(1e-14));
    }
    Potential s4({0, 0, 0, 0, 1});
    CHECK(w_value(s4, 0, 1) == doctest::Approx(6.0).epsilon(1e-14));
    // b = 0 reduces to V(a)
    Potential q({0.3, -0.2, 0.5, 0, 0.25});
    for (Scalar a : {-1.5, 0.0, 2.0}) CHECK(w_value(q, a, 0) == doctest::Approx(q.value(a)));
}

TEST_CASE("w_value is even in b") {
    Philox rng(12);
    for (int i = 0; i < 50; ++i) {
        Potential V = random_convex_potential(rng);
        Scalar a = 3 * rng.uniform() - 1.5, b = 3 * rng.uniform() - 1.5;
        CHECK(w_value(V, a, b) == w_value(V, a, -b));  // bitwise
    }
}

TEST_CASE("w_value matches the circulant trace") {
    Philox rng(13);
    for (int i = 0; i < 40; ++i) {
        Potential V = random_convex_potential(rng, 8);
        Scalar a = 2 * rng.uniform() - 1, b = 2 * rng.uniform() - 1;
        int d = V.degree() + 1 + static_cast<int>(rng.uniform() * (20 - V.degree() - 1));
        Scalar oracle = circulant_trace_oracle(V, a, b, d);
        Scalar w = w_value(V, a, b);
        CHECK(std::abs(w - oracle) <= 1e-10 * (1.0 + std::abs(oracle)));
    }
}

TEST_CASE("w_partials closed forms") {
    Potential s2({0, 0, 1});
    Philox rng(14);
    for (int i = 0; i < 10; ++i) {
        Scalar a = 3 * rng.uniform() - 1.5, b = 3 * rng.uniform() - 1.5;
        WDerivatives w = w_partials(s2, a, b);
        CHECK(w.w1 == doctest::Approx(2 * a).epsilon(1e-13));
        CHECK(w.w2 == doctest::Approx(4 * b).epsilon(1e-13));
        CHECK(w.w11 == doctest::Approx(2.0));
        CHECK(w.w12 == doctest::Approx(0.0));
        CHECK(w.w22 == doctest::Approx(4.0));
    }
    Potential s4({0, 0, 0, 0, 1});
    CHECK(w_partials(s4, 0, 1).w2 == doctest::Approx(24.0));
}

TEST_CASE("w_partials match finite differences of w_value") {
    Philox rng(15);
    for (int i = 0; i < 30; ++i) {
        Potential V = random_convex_potential(rng);
        Scalar a = 2 * rng.uniform() - 1;
        Scalar b = 2 * rng.uniform() - 1;
        WDerivatives w = w_partials(V, a, b);
        const Scalar h = 1e-5;
        Scalar fd1 = (w_value(V, a + h, b) - w_value(V, a - h, b)) / (2 * h);
        Scalar fd2 = (w_value(V, a, b + h) - w_value(V, a, b - h)) / (2 * h);
        Scalar fd11 = (w_value(V, a + h, b) - 2 * w_value(V, a, b) + w_value(V, a - h, b)) / (h * h);
        Scalar fd22 = (w_value(V, a, b + h) - 2 * w_value(V, a, b) + w_value(V, a, b - h)) / (h * h);
        Scalar fd12 = (w_value(V, a + h, b + h) - w_value(V, a + h, b - h) -
                       w_value(V, a - h, b + h) + w_value(V, a - h, b - h)) /
                      (4 * h * h);
        Scalar scale = 1.0 + std::abs(w.w) + std::abs(w.w2) + std::abs(w.w22);
        CHECK(std::abs(w.w1 - fd1) <= 1e-6 * scale);
        CHECK(std::abs(w.w2 - fd2) <= 1e-6 * scale);
        CHECK(std::abs(w.w11 - fd11) <= 2e-4 * scale);
        CHECK(std::abs(w.w22 - fd22) <= 2e-4 * scale);
        CHECK(std::abs(w.w12 - fd12) <= 2e-4 * scale);
    }
}

TEST_CASE("W satisfies 4b W11 = b W22 + W2") {
    Philox rng(16);
    for (int i = 0; i < 500; ++i) {
        Potential V = random_convex_potential(rng);
        Scalar a = 4 * rng.uniform() - 2;
        Scalar b = 2 * rng.uniform() + 1e-3;
        WDerivatives w = w_partials(V, a, b);
        Scalar lhs = 4 * b * w.w11, rhs = b * w.w22 + w.w2;
        CHECK(std::abs(lhs - rhs) <= 1e-9 * (1.0 + std::abs(b * w.w22)));
    }
}

TEST_CASE("shifted potential") {
    Potential V({0.1, -0.3, 0.5, 0, 0.25});
    Potential W = V.shifted(0.7);
    for (Scalar s : {-2.0, -0.5, 0.0, 1.3, 2.4})
        CHECK(W.value(s) == doctest::Approx(V.value(s - 0.7)).epsilon(1e-13));
}

TEST_CASE("binomial table") {
    CHECK(binomial(4, 2) == 6.0);
    CHECK(binomial(40, 20) == 137846528820.0);
    CHECK_THROWS_AS(binomial(41, 2), std::invalid_argument);
}
