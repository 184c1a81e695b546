#include "edgelab/ensemble.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "edgelab/matrix_poly.hpp"
#include "edgelab/minimizer.hpp"

namespace edgelab {

namespace {

std::vector<Scalar> derivative_coeffs(const std::vector<Scalar>& c) {
    if (c.size() <= 1) return {0.0};
    std::vector<Scalar> d(c.size() - 1);
    for (std::size_t m = 1; m < c.size(); ++m) d[m - 1] = static_cast<Scalar>(m) * c[m];
    return d;
}

Scalar log_alpha(Index k, Index n, Scalar beta) {
    // 1-based k
    return 1.0 - static_cast<Scalar>(k) / n - 1.0 / (n * beta);
}

} // namespace

void ModelSpec::validate() const {
    if (n < 2) throw std::invalid_argument("ModelSpec: n must be >= 2");
    if (!(beta > 0.0)) throw std::invalid_argument("ModelSpec: beta must be positive");
}

TridiagonalSym sample_hermite_de(Index n, Scalar beta, Philox& rng) {
    VectorX a, b;
    sample_hermite_de_top(n, beta, n, rng, a, b);
    return TridiagonalSym::jacobi(std::move(a), std::move(b));
}

void sample_hermite_de_top(Index n, Scalar beta, Index k_entries, Philox& rng, VectorX& a,
                           VectorX& b) {
    if (n < 2) throw std::invalid_argument("sample_hermite_de: n must be >= 2");
    if (!(beta > 0.0)) throw std::invalid_argument("sample_hermite_de: beta must be positive");
    if (k_entries < 1 || k_entries > n)
        throw std::invalid_argument("sample_hermite_de: k_entries out of range");
    const Scalar root = std::sqrt(n * beta);
    a.resize(k_entries);
    b.resize(k_entries - (k_entries == n ? 1 : 0));
    for (Index k = 1; k <= k_entries; ++k) {
        a(k - 1) = rng.normal() * std::sqrt(2.0) / root;
        if (k < n && k - 1 < b.size()) b(k - 1) = rng.chi((n - k) * beta) / root;
    }
}

DensityValue log_density(const ModelSpec& spec, const TridiagonalSym& T) {
    spec.validate();
    if (T.size() != spec.n) throw std::invalid_argument("log_density: size mismatch");
    const Index n = spec.n;
    DensityValue out;
    for (Index k = 0; k + 1 < n; ++k) {
        if (!(T.offdiag()(k) > 0.0)) {
            out.in_support = false;
            out.log_value = -kInfinity;
            return out;
        }
    }
    Scalar trV = tridiag_poly(T, spec.V.coeffs()).trace();
    Scalar logs = 0;
    for (Index k = 1; k < n; ++k) logs += log_alpha(k, n, spec.beta) * std::log(T.offdiag()(k - 1));
    out.log_value = -static_cast<Scalar>(n) * spec.beta * (trV - logs);
    return out;
}

std::pair<VectorX, VectorX> grad_log_density(const ModelSpec& spec, const TridiagonalSym& T) {
    spec.validate();
    if (T.size() != spec.n) throw std::invalid_argument("grad_log_density: size mismatch");
    const Index n = spec.n;
    const Scalar nb = static_cast<Scalar>(n) * spec.beta;
    BandedSym VP = tridiag_poly(T, derivative_coeffs(spec.V.coeffs()));
    VectorX ga(n), gb(n - 1);
    for (Index i = 0; i < n; ++i) ga(i) = -nb * VP.entry(i, 0);
    for (Index i = 0; i + 1 < n; ++i) {
        if (!(T.offdiag()(i) > 0.0))
            throw std::invalid_argument("grad_log_density: off-diagonal must be positive");
        gb(i) = -nb * (2.0 * VP.at(i, i + 1) - log_alpha(i + 1, n, spec.beta) / T.offdiag()(i));
    }
    return {std::move(ga), std::move(gb)};
}

VectorX sample_dirichlet_weights(Index n, Scalar beta, Philox& rng) {
    if (n < 1) throw std::invalid_argument("sample_dirichlet_weights: n must be >= 1");
    if (!(beta > 0.0))
        throw std::invalid_argument("sample_dirichlet_weights: beta must be positive");
    VectorX w(n);
    for (Index i = 0; i < n; ++i) w(i) = rng.gamma(0.5 * beta);
    w /= w.sum();
    return w;
}

TridiagonalSym dense_gaussian_oracle(Index n, int beta, Philox& rng) {
    if (n < 2) throw std::invalid_argument("dense_gaussian_oracle: n must be >= 2");
    VectorX d, s;
    if (beta == 1) {
        MatrixX M(n, n);
        const Scalar off_sd = 1.0 / std::sqrt(static_cast<Scalar>(n));
        const Scalar diag_sd = std::sqrt(2.0 / static_cast<Scalar>(n));
        for (Index i = 0; i < n; ++i) {
            M(i, i) = diag_sd * rng.normal();
            for (Index j = i + 1; j < n; ++j) M(i, j) = M(j, i) = off_sd * rng.normal();
        }
        Eigen::Tridiagonalization<MatrixX> tri(M);
        d = tri.diagonal();
        s = tri.subDiagonal();
    } else if (beta == 2) {
        Eigen::MatrixXcd M(n, n);
        const Scalar off_sd = 1.0 / std::sqrt(2.0 * static_cast<Scalar>(n));
        const Scalar diag_sd = 1.0 / std::sqrt(static_cast<Scalar>(n));
        for (Index i = 0; i < n; ++i) {
            M(i, i) = diag_sd * rng.normal();
            for (Index j = i + 1; j < n; ++j) {
                std::complex<Scalar> z(off_sd * rng.normal(), off_sd * rng.normal());
                M(i, j) = z;
                M(j, i) = std::conj(z);
            }
        }
        Eigen::Tridiagonalization<Eigen::MatrixXcd> tri(M);
        d = tri.diagonal();
        s = tri.subDiagonal();
    } else {
        throw std::invalid_argument("dense_gaussian_oracle: beta must be 1 or 2");
    }
    // The sign of each subdiagonal entry is a diagonal similarity that fixes
    // e_1, so magnitudes preserve both spectrum and spectral measure.
    return TridiagonalSym(std::move(d), s.cwiseAbs());
}

MalaChain::MalaChain(ModelSpec spec, McmcConfig config)
    : spec_(std::move(spec)), cfg_(std::move(config)), rng_(cfg_.seed, cfg_.stream) {
    spec_.validate();
    if (!(spec_.beta >= 1.0))
        throw std::invalid_argument("MalaChain: general-V sampling requires beta >= 1");
    if (!(spec_.V.convexity_constant() > 0.0))
        throw std::invalid_argument("MalaChain: potential must be uniformly convex");

    const Index n = spec_.n;
    MinimizerProblem prob = dyson_problem(spec_.V, n, spec_.beta);
    MinimizerSolution sol = minimize_H(prob);
    x_.resize(2 * n - 1);
    x_.head(n) = sol.a;
    x_.tail(n - 1) = sol.b;

    // Per-coordinate scales from the curvature of the target at the
    // minimizer, via the exact Hessian diagonal of n beta (tr V - sum log).
    TridiagonalSym T0(sol.a, sol.b);
    const std::vector<Scalar> vp = derivative_coeffs(spec_.V.coeffs());
    const Index pmax = std::max<Index>(static_cast<Index>(vp.size()) - 1, 0);
    std::vector<BandedSym> P = tridiag_powers(T0, pmax);
    const Scalar nb = static_cast<Scalar>(n) * spec_.beta;
    scale_.resize(2 * n - 1);
    for (Index i = 0; i < n; ++i) {
        Scalar h = 0;
        for (std::size_t m = 1; m < vp.size(); ++m)
            for (Index p = 0; p + 1 <= static_cast<Index>(m); ++p)
                h += vp[m] * P[p].at(i, i) * P[static_cast<Index>(m) - 1 - p].at(i, i);
        scale_(i) = 1.0 / std::sqrt(std::max(nb * h, 1e-12));
    }
    for (Index i = 0; i + 1 < n; ++i) {
        Scalar h = 0;
        for (std::size_t m = 1; m < vp.size(); ++m)
            for (Index p = 0; p + 1 <= static_cast<Index>(m); ++p) {
                Index q = static_cast<Index>(m) - 1 - p;
                h += vp[m] * (P[p].at(i + 1, i) * P[q].at(i + 1, i) +
                              P[p].at(i + 1, i + 1) * P[q].at(i, i) +
                              P[p].at(i, i) * P[q].at(i + 1, i + 1) +
                              P[p].at(i, i + 1) * P[q].at(i, i + 1));
            }
        Scalar bk = sol.b(i);
        h += log_alpha(i + 1, n, spec_.beta) / (bk * bk);
        scale_(n + i) = 1.0 / std::sqrt(std::max(nb * h, 1e-12));
    }

    active_ = cfg_.active;
    if (active_.empty()) active_.assign(2 * n - 1, 1);
    if (static_cast<Index>(active_.size()) != 2 * n - 1)
        throw std::invalid_argument("MalaChain: active mask has wrong length");

    eps_ = cfg_.step_scale;
    log_pi_ = log_target(x_);
    grad_ = grad_log_target(x_);
}

Scalar MalaChain::log_target(const VectorX& x) const {
    const Index n = spec_.n;
    for (Index i = 0; i + 1 < n; ++i)
        if (!(x(n + i) > 0.0)) return -kInfinity;
    TridiagonalSym T(x.head(n), x.tail(n - 1));
    return log_density(spec_, T).log_value;
}

VectorX MalaChain::grad_log_target(const VectorX& x) const {
    const Index n = spec_.n;
    TridiagonalSym T(x.head(n), x.tail(n - 1));
    auto [ga, gb] = grad_log_density(spec_, T);
    VectorX g(2 * n - 1);
    g.head(n) = ga;
    g.tail(n - 1) = gb;
    return g;
}

bool MalaChain::step() {
    const Index n = spec_.n;
    const Index dim = 2 * n - 1;
    VectorX y(dim);
    VectorX mu(dim);
    for (Index i = 0; i < dim; ++i) {
        if (!active_[i]) {
            y(i) = x_(i);
            mu(i) = x_(i);
            continue;
        }
        Scalar s = eps_ * scale_(i);
        mu(i) = x_(i) + 0.5 * s * s * grad_(i);
        y(i) = mu(i) + s * rng_.normal();
        if (i >= n) y(i) = std::abs(y(i));  // reflect off-diagonals across zero
    }
    ++proposed_;

    Scalar log_pi_y = log_target(y);
    if (!std::isfinite(log_pi_y)) return false;
    VectorX grad_y = grad_log_target(y);

    auto log_q = [&](const VectorX& to, const VectorX& from_mu) {
        Scalar acc = 0;
        for (Index i = 0; i < dim; ++i) {
            if (!active_[i]) continue;
            Scalar s = eps_ * scale_(i);
            Scalar e1 = -0.5 * std::pow((to(i) - from_mu(i)) / s, 2);
            if (i >= n) {
                // folded density: the reflected point contributes too
                Scalar e2 = -0.5 * std::pow((-to(i) - from_mu(i)) / s, 2);
                Scalar m = std::max(e1, e2);
                acc += m + std::log(std::exp(e1 - m) + std::exp(e2 - m));
            } else {
                acc += e1;
            }
        }
        return acc;
    };

    VectorX mu_rev(dim);
    for (Index i = 0; i < dim; ++i) {
        Scalar s = eps_ * scale_(i);
        mu_rev(i) = active_[i] ? y(i) + 0.5 * s * s * grad_y(i) : y(i);
    }

    Scalar log_accept = (log_pi_y + log_q(x_, mu_rev)) - (log_pi_ + log_q(y, mu));
    if (std::log(rng_.uniform()) < log_accept) {
        x_ = y;
        log_pi_ = log_pi_y;
        grad_ = grad_y;
        ++accepted_;
        return true;
    }
    return false;
}

void MalaChain::run_burn_in() {
    const Index window = 100;
    Index windows = std::max<Index>(cfg_.burn_in / window, 1);
    for (Index wdx = 0; wdx < windows; ++wdx) {
        long acc0 = accepted_, prop0 = proposed_;
        for (Index s = 0; s < window; ++s) step();
        Scalar rate = static_cast<Scalar>(accepted_ - acc0) / static_cast<Scalar>(proposed_ - prop0);
        // decreasing gain so the step size settles inside the target band
        Scalar gain = 0.18 * static_cast<Scalar>(windows - wdx) / windows + 0.02;
        if (rate > 0.60)
            eps_ *= 1.0 + gain;
        else if (rate < 0.50)
            eps_ /= 1.0 + gain;
    }
    // fresh statistics for the sampling phase
    long acc0 = accepted_, prop0 = proposed_;
    for (Index s = 0; s < 200; ++s) step();
    Scalar rate = static_cast<Scalar>(accepted_ - acc0) / static_cast<Scalar>(proposed_ - prop0);
    accepted_ = 0;
    proposed_ = 0;
    if (rate < 0.05)
        throw std::runtime_error("MalaChain: acceptance below 0.05 after tuning");
}

ChainState MalaChain::state() const {
    const Index n = spec_.n;
    ChainState st;
    st.a = x_.head(n);
    st.b = x_.tail(n - 1);
    st.log_density = log_pi_;
    st.acceptance_rate = acceptance_rate();
    st.step_scale = eps_;
    return st;
}

TridiagonalSym MalaChain::matrix() const {
    const Index n = spec_.n;
    return TridiagonalSym(x_.head(n), x_.tail(n - 1));
}

Scalar MalaChain::acceptance_rate() const {
    return proposed_ > 0 ? static_cast<Scalar>(accepted_) / static_cast<Scalar>(proposed_) : 0.0;
}

Scalar integrated_autocorr_time(const std::vector<Scalar>& series) {
    const Index n = static_cast<Index>(series.size());
    if (n < 4) return static_cast<Scalar>(n);
    Scalar mean = 0;
    for (Scalar v : series) mean += v;
    mean /= n;
    Scalar var = 0;
    for (Scalar v : series) var += (v - mean) * (v - mean);
    var /= n;
    if (!(var > 0)) return 1.0;

    auto rho = [&](Index lag) {
        Scalar acc = 0;
        for (Index i = 0; i + lag < n; ++i) acc += (series[i] - mean) * (series[i + lag] - mean);
        return acc / (n * var);
    };

    // Geyer initial positive sequence over paired lags.
    Scalar tau = 1.0;
    for (Index m = 0; 2 * m + 2 < n / 2; ++m) {
        Scalar pair = rho(2 * m + 1) + rho(2 * m + 2);
        if (pair <= 0) break;
        tau += 2.0 * pair;
    }
    return tau;
}

Scalar effective_sample_size(const std::vector<Scalar>& series) {
    return static_cast<Scalar>(series.size()) / integrated_autocorr_time(series);
}

void write_chain_checkpoint(std::ostream& out, long iteration, const ChainState& state) {
    char buf[40];
    out << iteration;
    auto put = [&](Scalar v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
    };
    for (Index i = 0; i < state.a.size(); ++i) put(state.a(i));
    for (Index i = 0; i < state.b.size(); ++i) put(state.b(i));
    put(state.log_density);
    out << '\n';
}

ChainState read_chain_checkpoint(const std::string& line, long& iteration) {
    std::vector<Scalar> fields;
    std::size_t pos = 0;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos)
        throw std::invalid_argument("read_chain_checkpoint: malformed row");
    iteration = std::stol(line.substr(0, comma));
    pos = comma + 1;
    while (pos <= line.size()) {
        std::size_t next = line.find(',', pos);
        std::string cell =
            (next == std::string::npos) ? line.substr(pos) : line.substr(pos, next - pos);
        fields.push_back(std::stod(cell));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    // layout: n a-values, n-1 b-values, one log-density => 2n fields total
    if (fields.size() < 4 || fields.size() % 2 != 0)
        throw std::invalid_argument("read_chain_checkpoint: wrong field count");
    Index n = static_cast<Index>(fields.size()) / 2;
    ChainState st;
    st.a = Eigen::Map<VectorX>(fields.data(), n);
    st.b = Eigen::Map<VectorX>(fields.data() + n, n - 1);
    st.log_density = fields.back();
    return st;
}

} // namespace edgelab
