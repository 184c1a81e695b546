#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "edgelab/ensemble.hpp"
#include "edgelab/matrix_poly.hpp"
#include "edgelab/minimizer.hpp"
#include "edgelab/stats.hpp"

using namespace edgelab;

namespace {

const Potential kHermite({0, 0, 0.25});
const Potential kQuartic({0, 0, 0.5, 0, 0.25});

// closed-form log density of the chi/Gaussian model, up to a constant
Scalar de_log_density(Index n, Scalar beta, const TridiagonalSym& T) {
    Scalar nb = static_cast<Scalar>(n) * beta;
    Scalar acc = 0;
    for (Index i = 0; i < n; ++i) acc += -nb * T.diag()(i) * T.diag()(i) / 4.0;
    for (Index k = 1; k < n; ++k) {
        Scalar b = T.offdiag()(k - 1);
        acc += ((n - k) * beta - 1.0) * std::log(b) - nb * b * b / 2.0;
    }
    return acc;
}

} // namespace

TEST_CASE("DE sampler moments") {
    const Index n = 300;
    const Scalar beta = 2.0;
    const int reps = 2000;
    Philox rng(51);
    Scalar sum_a = 0, sum_a2 = 0;
    std::vector<Index> ks = {0, 100, 250};
    std::map<Index, Scalar> sum_b2;
    for (int r = 0; r < reps; ++r) {
        TridiagonalSym T = sample_hermite_de(n, beta, rng);
        sum_a += T.diag()(7);
        sum_a2 += T.diag()(7) * T.diag()(7);
        for (Index k : ks) sum_b2[k] += T.offdiag()(k) * T.offdiag()(k);
    }
    Scalar mean_a = sum_a / reps;
    Scalar var_a = sum_a2 / reps - mean_a * mean_a;
    Scalar target_var = 2.0 / (n * beta);
    CHECK(std::abs(mean_a) <= 4.0 * std::sqrt(target_var / reps));
    CHECK(std::abs(var_a - target_var) <= 4.0 * target_var * std::sqrt(2.0 / reps));
    for (Index k : ks) {
        // E chi_nu^2 = nu, so E B_k^2 = (n-k)/n with k 1-based (here k+1)
        Scalar target = static_cast<Scalar>(n - (k + 1)) / n;
        Scalar got = sum_b2[k] / reps;
        Scalar se = target * std::sqrt(2.0 / ((n - (k + 1)) * beta)) / std::sqrt(Scalar(reps));
        CHECK(std::abs(got - target) <= 4.0 * se + 1e-4);
    }
}

TEST_CASE("DE spectrum approximates the semicircle on [-2,2]") {
    Philox rng(52);
    TridiagonalSym T = sample_hermite_de(2000, 2.0, rng);
    VectorX ev = all_eigenvalues(T);
    Index inside = 0;
    for (Index i = 0; i < ev.size(); ++i)
        if (std::abs(ev(i)) <= 2.0) ++inside;
    CHECK(static_cast<Scalar>(inside) / ev.size() > 0.99);
}

TEST_CASE("partial DE sampler matches the full prefix") {
    Philox rng_a(53), rng_b(53);
    TridiagonalSym full = sample_hermite_de(50, 1.5, rng_a);
    VectorX a, b;
    sample_hermite_de_top(50, 1.5, 20, rng_b, a, b);
    CHECK((full.diag().head(20) - a).cwiseAbs().maxCoeff() == 0.0);
    CHECK((full.offdiag().head(20) - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("log density matches the DE closed form up to a constant") {
    const Index n = 6;
    const Scalar beta = 1.7;
    ModelSpec spec{kHermite, beta, n};
    Philox rng(54);
    TridiagonalSym T1 = sample_hermite_de(n, beta, rng);
    TridiagonalSym T2 = sample_hermite_de(n, beta, rng);
    Scalar ours = log_density(spec, T1).log_value - log_density(spec, T2).log_value;
    Scalar closed = de_log_density(n, beta, T1) - de_log_density(n, beta, T2);
    CHECK(ours == doctest::Approx(closed).epsilon(1e-8));
}

TEST_CASE("log density b-exponent at n = 2") {
    const Scalar beta = 2.5;
    ModelSpec spec{kHermite, beta, 2};
    VectorX d = VectorX::Zero(2);
    TridiagonalSym Tb(d, VectorX::Constant(1, 0.8));
    TridiagonalSym Tb2(d, VectorX::Constant(1, 1.3));
    Scalar diff = log_density(spec, Tb2).log_value - log_density(spec, Tb).log_value;
    // -2 beta (b^2/2) difference plus (beta - 1) log-ratio
    Scalar expected = -2.0 * beta * (1.3 * 1.3 - 0.8 * 0.8) / 2.0 +
                      (beta - 1.0) * (std::log(1.3) - std::log(0.8));
    CHECK(diff == doctest::Approx(expected).epsilon(1e-12));

    TridiagonalSym zero_b(d, VectorX::Zero(1));
    DensityValue dv = log_density(spec, zero_b);
    CHECK_FALSE(dv.in_support);
    CHECK(dv.log_value == -kInfinity);
}

TEST_CASE("trace of V over a diagonal matrix") {
    VectorX d(4);
    d << -1.0, 0.3, 0.8, 2.0;
    TridiagonalSym T(d, VectorX::Zero(3));
    Scalar tr = tridiag_poly(T, kQuartic.coeffs()).trace();
    Scalar expected = 0;
    for (Index i = 0; i < 4; ++i) expected += kQuartic.value(d(i));
    CHECK(tr == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("gradient matches finite differences") {
    const Index n = 12;
    ModelSpec spec{kQuartic, 2.0, n};
    Philox rng(55);
    TridiagonalSym T = sample_hermite_de(n, 2.0, rng);
    auto [ga, gb] = grad_log_density(spec, T);
    const Scalar h = 1e-6;
    for (Index i = 0; i < n; ++i) {
        TridiagonalSym P = T, M = T;
        P.diag()(i) += h;
        M.diag()(i) -= h;
        Scalar fd = (log_density(spec, P).log_value - log_density(spec, M).log_value) / (2 * h);
        CHECK(std::abs(ga(i) - fd) <= 1e-6 * (1.0 + std::abs(fd)));
    }
    for (Index i = 0; i + 1 < n; ++i) {
        TridiagonalSym P = T, M = T;
        P.offdiag()(i) += h;
        M.offdiag()(i) -= h;
        Scalar fd = (log_density(spec, P).log_value - log_density(spec, M).log_value) / (2 * h);
        CHECK(std::abs(gb(i) - fd) <= 1e-6 * (1.0 + std::abs(fd)));
    }
}

TEST_CASE("gradient closed form for the Hermite potential") {
    const Index n = 9;
    const Scalar beta = 2.0;
    ModelSpec spec{kHermite, beta, n};
    Philox rng(56);
    TridiagonalSym T = sample_hermite_de(n, beta, rng);
    auto [ga, gb] = grad_log_density(spec, T);
    Scalar nb = n * beta;
    for (Index i = 0; i < n; ++i)
        CHECK(ga(i) == doctest::Approx(-nb * T.diag()(i) / 2.0).epsilon(1e-12));
    for (Index k = 1; k < n; ++k) {
        Scalar alpha = 1.0 - static_cast<Scalar>(k) / n - 1.0 / (n * beta);
        Scalar b = T.offdiag()(k - 1);
        CHECK(gb(k - 1) == doctest::Approx(-nb * (b - alpha / b)).epsilon(1e-12));
    }
}

TEST_CASE("gradient vanishes at the global minimizer") {
    const Index n = 20;
    ModelSpec spec{kQuartic, 2.0, n};
    MinimizerSolution sol = minimize_H(dyson_problem(kQuartic, n, 2.0));
    auto [ga, gb] = grad_log_density(spec, solution_matrix(sol));
    Scalar norm = std::sqrt(ga.squaredNorm() + gb.squaredNorm());
    CHECK(norm <= 1e-7);
}

TEST_CASE("dirichlet weights") {
    Philox rng(57);
    const Index n = 8;
    const Scalar beta = 1.3;
    VectorX w = sample_dirichlet_weights(n, beta, rng);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w.minCoeff() > 0.0);

    const int reps = 200000;
    Scalar s = 0, s2 = 0;
    for (int r = 0; r < reps; ++r) {
        Scalar x = sample_dirichlet_weights(n, beta, rng)(3);
        s += x;
        s2 += x * x;
    }
    Scalar m = s / reps, v = s2 / reps - m * m;
    // Dirichlet(beta/2,...): Var = (1/n)(1 - 1/n)/(n beta/2 + 1)
    Scalar target_var = (1.0 / n) * (1.0 - 1.0 / n) / (n * beta / 2.0 + 1.0);
    CHECK(std::abs(m - 1.0 / n) <= 4.0 * std::sqrt(target_var / reps));
    CHECK(std::abs(v - target_var) <= 5.0 * target_var * std::sqrt(2.0 / reps));
}

TEST_CASE("dense oracle: n = 2 off-diagonal is chi_1 distributed") {
    Philox rng(58);
    const int reps = 10000;
    std::vector<Scalar> dense_off(reps), de_off(reps);
    for (int r = 0; r < reps; ++r) {
        dense_off[r] = dense_gaussian_oracle(2, 1, rng).offdiag()(0);
        de_off[r] = sample_hermite_de(2, 1.0, rng).offdiag()(0);
    }
    KsResult ks = ks_two_sample(dense_off, de_off);
    CHECK(ks.statistic < ks.critical(0.01));
}

TEST_CASE("dense oracle preserves eigenvalues and weight law") {
    Philox rng(59);
    // eigenvalues: compare the tridiagonalized spectrum against a fresh dense solve
    for (int beta : {1, 2}) {
        Philox r1(60 + beta), r2(60 + beta);
        TridiagonalSym T = dense_gaussian_oracle(30, beta, r1);
        // rebuild the same dense matrix draw-for-draw
        if (beta == 1) {
            MatrixX M(30, 30);
            const Scalar off_sd = 1.0 / std::sqrt(30.0);
            const Scalar diag_sd = std::sqrt(2.0 / 30.0);
            for (Index i = 0; i < 30; ++i) {
                M(i, i) = diag_sd * r2.normal();
                for (Index j = i + 1; j < 30; ++j) M(i, j) = M(j, i) = off_sd * r2.normal();
            }
            Eigen::SelfAdjointEigenSolver<MatrixX> es(M, Eigen::EigenvaluesOnly);
            VectorX ours = all_eigenvalues(T);
            CHECK((ours - es.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }

    // first-row weights follow Dirichlet(beta/2, ...)
    const int reps = 4000;
    std::vector<Scalar> oracle_w(reps), dirichlet_w(reps);
    for (int r = 0; r < reps; ++r) {
        TridiagonalSym T = dense_gaussian_oracle(4, 2, rng);
        oracle_w[r] = spectral_measure(T).weights(0);
        dirichlet_w[r] = sample_dirichlet_weights(4, 2.0, rng)(0);
    }
    KsResult ks = ks_two_sample(oracle_w, dirichlet_w);
    CHECK(ks.statistic < ks.critical(0.01));
}

TEST_CASE("mala chain is deterministic given seed") {
    ModelSpec spec{kQuartic, 2.0, 10};
    McmcConfig cfg;
    cfg.seed = 99;
    cfg.burn_in = 200;
    MalaChain c1(spec, cfg), c2(spec, cfg);
    for (int i = 0; i < 300; ++i) {
        c1.step();
        c2.step();
    }
    CHECK((c1.state().a - c2.state().a).cwiseAbs().maxCoeff() == 0.0);
    CHECK((c1.state().b - c2.state().b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mala chain reproduces Hermite chi-square moments") {
    const Index n = 30;
    const Scalar beta = 2.0;
    ModelSpec spec{kHermite, beta, n};
    McmcConfig cfg;
    cfg.seed = 5;
    cfg.burn_in = 3000;
    MalaChain chain(spec, cfg);
    chain.run_burn_in();
    const int kept = 4000, thin = 5;
    std::vector<Scalar> b1sq;
    b1sq.reserve(kept);
    for (int i = 0; i < kept; ++i) {
        for (int s = 0; s < thin; ++s) chain.step();
        Scalar b = chain.state().b(0);
        b1sq.push_back(b * b);
    }
    CHECK(chain.acceptance_rate() > 0.3);
    Scalar target = static_cast<Scalar>(n - 1) / n;  // E B_1^2 exactly
    Scalar m = mean(b1sq);
    Scalar ess = effective_sample_size(b1sq);
    Scalar se = std::sqrt(variance(b1sq) / ess);
    CHECK(std::abs(m - target) <= 4.0 * se + 2e-3);
}

TEST_CASE("mala B_1 marginal matches the DE law (KS)") {
    const Index n = 16;
    const Scalar beta = 2.0;
    ModelSpec spec{kHermite, beta, n};
    McmcConfig cfg;
    cfg.seed = 6;
    cfg.burn_in = 3000;
    MalaChain chain(spec, cfg);
    chain.run_burn_in();
    const int kept = 2000, thin = 25;
    std::vector<Scalar> chain_b1(kept);
    for (int i = 0; i < kept; ++i) {
        for (int s = 0; s < thin; ++s) chain.step();
        chain_b1[i] = chain.state().b(0);
    }
    Philox rng(61);
    std::vector<Scalar> de_b1(5000);
    for (auto& v : de_b1) v = sample_hermite_de(n, beta, rng).offdiag()(0);
    KsResult ks = ks_two_sample(chain_b1, de_b1);
    CHECK(ks.statistic < ks.critical(0.01));
}

TEST_CASE("detailed balance smoke test on a 4-coordinate restriction") {
    ModelSpec spec{kQuartic, 2.0, 3};
    McmcConfig cfg;
    cfg.seed = 7;
    cfg.burn_in = 1000;
    cfg.active = {1, 1, 1, 1, 0};  // a1, a2, a3, b1 move; b2 frozen
    MalaChain chain(spec, cfg);
    chain.run_burn_in();

    // bin the b1 marginal, count transitions between bins
    const int bins = 6;
    std::vector<Scalar> samples;
    for (int i = 0; i < 40000; ++i) {
        chain.step();
        samples.push_back(chain.state().b(0));
    }
    std::vector<Scalar> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    auto bin_of = [&](Scalar v) {
        int b = 0;
        while (b + 1 < bins && v > sorted[(b + 1) * sorted.size() / bins]) ++b;
        return b;
    };
    MatrixX counts = MatrixX::Zero(bins, bins);
    for (std::size_t i = 1; i < samples.size(); ++i)
        counts(bin_of(samples[i - 1]), bin_of(samples[i])) += 1.0;
    for (int i = 0; i < bins; ++i)
        for (int j = i + 1; j < bins; ++j) {
            Scalar total = counts(i, j) + counts(j, i);
            if (total < 50) continue;
            // reversibility at stationarity: flows i->j and j->i balance
            CHECK(std::abs(counts(i, j) - counts(j, i)) <= 5.0 * std::sqrt(total));
        }
}

TEST_CASE("effective sample size estimator") {
    Philox rng(62);
    std::vector<Scalar> iid(20000);
    for (auto& v : iid) v = rng.normal();
    Scalar tau = integrated_autocorr_time(iid);
    CHECK(tau > 0.7);
    CHECK(tau < 1.4);

    std::vector<Scalar> blocks;
    for (int i = 0; i < 2000; ++i) {
        Scalar v = rng.normal();
        for (int r = 0; r < 10; ++r) blocks.push_back(v);
    }
    CHECK(effective_sample_size(blocks) < blocks.size() / 8.0);
}

TEST_CASE("chain checkpoint csv round trip") {
    ModelSpec spec{kQuartic, 2.0, 8};
    McmcConfig cfg;
    cfg.seed = 12;
    MalaChain chain(spec, cfg);
    for (int i = 0; i < 50; ++i) chain.step();
    ChainState st = chain.state();
    std::ostringstream out;
    write_chain_checkpoint(out, 50, st);
    std::string line = out.str();
    line.pop_back();  // strip newline
    long iter = 0;
    ChainState back = read_chain_checkpoint(line, iter);
    CHECK(iter == 50);
    CHECK((back.a - st.a).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.b - st.b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.log_density == st.log_density);
}

TEST_CASE("model validation") {
    ModelSpec bad_beta{kHermite, -1.0, 10};
    CHECK_THROWS_AS(bad_beta.validate(), std::invalid_argument);
    ModelSpec bad_n{kHermite, 2.0, 1};
    CHECK_THROWS_AS(bad_n.validate(), std::invalid_argument);
    McmcConfig cfg;
    cfg.seed = 1;
    ModelSpec low_beta{kQuartic, 0.5, 10};
    CHECK_THROWS_AS(MalaChain(low_beta, cfg), std::invalid_argument);
    Potential nonconvex({0, 0, -3.0, 0, 1.0});
    ModelSpec nonconvex_spec{nonconvex, 2.0, 10};
    CHECK_THROWS_AS(MalaChain(nonconvex_spec, cfg), std::invalid_argument);
}
