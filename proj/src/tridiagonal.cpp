#include "edgelab/tridiagonal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace edgelab {

namespace {

constexpr Scalar kEps = std::numeric_limits<Scalar>::epsilon();

Scalar spectral_radius_bound(const TridiagonalSym& T) {
    auto [lo, hi] = gershgorin_bounds(T);
    return std::max({std::abs(lo), std::abs(hi), Scalar(1e-300)});
}

// Solve (T - shift I) x = rhs by partial-pivot band LU (one extra
// superdiagonal of fill-in). Near-singular pivots are nudged, which is what
// inverse iteration wants.
VectorX solve_shifted(const TridiagonalSym& T, Scalar shift, VectorX rhs) {
    const Index n = T.size();
    const Scalar tiny = kEps * spectral_radius_bound(T);
    VectorX d(n), u1(n), u2(n);
    VectorX sub(n);
    for (Index i = 0; i < n; ++i) {
        d(i) = T.diag()(i) - shift;
        u1(i) = (i + 1 < n) ? T.offdiag()(i) : 0.0;
        u2(i) = 0.0;
        sub(i) = (i + 1 < n) ? T.offdiag()(i) : 0.0;
    }
    // Forward elimination with row swaps.
    for (Index i = 0; i + 1 < n; ++i) {
        if (std::abs(sub(i)) > std::abs(d(i))) {
            std::swap(d(i), sub(i));
            std::swap(u1(i), d(i + 1));
            std::swap(u2(i), u1(i + 1));
            std::swap(rhs(i), rhs(i + 1));
        }
        Scalar piv = d(i);
        if (std::abs(piv) < tiny) piv = (piv < 0 ? -tiny : tiny);
        Scalar m = sub(i) / piv;
        d(i + 1) -= m * u1(i);
        u1(i + 1) -= m * u2(i);
        rhs(i + 1) -= m * rhs(i);
        d(i) = piv;
    }
    // Back substitution.
    VectorX x(n);
    for (Index i = n - 1; i >= 0; --i) {
        Scalar piv = d(i);
        if (std::abs(piv) < tiny) piv = (piv < 0 ? -tiny : tiny);
        Scalar acc = rhs(i);
        if (i + 1 < n) acc -= u1(i) * x(i + 1);
        if (i + 2 < n) acc -= u2(i) * x(i + 2);
        x(i) = acc / piv;
    }
    return x;
}

void fix_sign(VectorX& v) {
    for (Index i = 0; i < v.size(); ++i) {
        if (v(i) != 0.0) {
            if (v(i) < 0.0) v = -v;
            return;
        }
    }
}

EigenPair eigenpair_for_value(const TridiagonalSym& T, Scalar lambda,
                              const std::vector<EigenPair>& computed, Scalar cluster_tol) {
    const Index n = T.size();
    VectorX v = VectorX::Ones(n);
    // A mildly uneven deterministic start avoids accidental orthogonality.
    for (Index i = 0; i < n; ++i) v(i) += 1e-3 * static_cast<Scalar>((i * 2654435761u) % 97) / 97.0;
    v.normalize();
    for (int it = 0; it < 5; ++it) {
        v = solve_shifted(T, lambda, v);
        for (const auto& prev : computed)
            if (std::abs(prev.value - lambda) < cluster_tol) v -= prev.vector.dot(v) * prev.vector;
        Scalar norm = v.norm();
        if (!(norm > 0) || !std::isfinite(norm)) {
            v = VectorX::Zero(n);
            v(it % n) = 1.0;
            continue;
        }
        v /= norm;
        Scalar resid = (T.apply(v) - lambda * v).norm();
        if (resid <= 64.0 * kEps * spectral_radius_bound(T) * std::sqrt(Scalar(n))) break;
    }
    fix_sign(v);
    return {lambda, v};
}

} // namespace

TridiagonalSym::TridiagonalSym(VectorX diag, VectorX offdiag)
    : diag_(std::move(diag)), off_(std::move(offdiag)) {
    if (diag_.size() < 1) throw std::invalid_argument("TridiagonalSym: empty diagonal");
    if (off_.size() != diag_.size() - 1)
        throw std::invalid_argument("TridiagonalSym: off-diagonal must have n-1 entries");
    for (Index i = 0; i < off_.size(); ++i)
        if (!(off_(i) >= 0.0))
            throw std::invalid_argument("TridiagonalSym: off-diagonal entries must be >= 0");
}

TridiagonalSym TridiagonalSym::jacobi(VectorX diag, VectorX offdiag) {
    TridiagonalSym T(std::move(diag), std::move(offdiag));
    if (!T.is_jacobi())
        throw std::invalid_argument("TridiagonalSym::jacobi: off-diagonal must be positive");
    return T;
}

bool TridiagonalSym::is_jacobi() const {
    for (Index i = 0; i < off_.size(); ++i)
        if (!(off_(i) > 0.0)) return false;
    return true;
}

TridiagonalSym TridiagonalSym::minor(Index lo, Index hi) const {
    if (lo < 0 || hi >= size() || lo > hi)
        throw std::invalid_argument("TridiagonalSym::minor: bad index range");
    return TridiagonalSym(diag_.segment(lo, hi - lo + 1),
                          off_.segment(lo, std::max<Index>(hi - lo, 0)));
}

MatrixX TridiagonalSym::dense() const {
    MatrixX m = MatrixX::Zero(size(), size());
    for (Index i = 0; i < size(); ++i) {
        m(i, i) = diag_(i);
        if (i + 1 < size()) m(i, i + 1) = m(i + 1, i) = off_(i);
    }
    return m;
}

VectorX TridiagonalSym::apply(const VectorX& x) const {
    const Index n = size();
    VectorX y(n);
    for (Index i = 0; i < n; ++i) {
        Scalar acc = diag_(i) * x(i);
        if (i > 0) acc += off_(i - 1) * x(i - 1);
        if (i + 1 < n) acc += off_(i) * x(i + 1);
        y(i) = acc;
    }
    return y;
}

SpectralMeasure SpectralMeasure::checked(VectorX lambdas, VectorX weights) {
    if (lambdas.size() != weights.size() || lambdas.size() == 0)
        throw std::invalid_argument("SpectralMeasure: size mismatch");
    for (Index i = 0; i < weights.size(); ++i)
        if (!(weights(i) >= 0.0)) throw std::invalid_argument("SpectralMeasure: negative weight");
    for (Index i = 0; i + 1 < lambdas.size(); ++i)
        if (!(lambdas(i) < lambdas(i + 1)))
            throw std::invalid_argument("SpectralMeasure: support must be strictly ascending");
    if (std::abs(weights.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("SpectralMeasure: weights must sum to 1");
    return {std::move(lambdas), std::move(weights)};
}

std::pair<Scalar, Scalar> gershgorin_bounds(const TridiagonalSym& T) {
    const Index n = T.size();
    Scalar lo = kInfinity, hi = -kInfinity;
    for (Index i = 0; i < n; ++i) {
        Scalar r = 0;
        if (i > 0) r += std::abs(T.offdiag()(i - 1));
        if (i + 1 < n) r += std::abs(T.offdiag()(i));
        lo = std::min(lo, T.diag()(i) - r);
        hi = std::max(hi, T.diag()(i) + r);
    }
    return {lo, hi};
}

Index sturm_count(const TridiagonalSym& T, Scalar x) {
    // LDL^T sign count in the dstebz convention: pivots at or below pivmin
    // count as negative and are clamped, so exact-zero pivots cannot split
    // the count.
    const Index n = T.size();
    Scalar e2max = 1.0;
    for (Index i = 0; i + 1 < n; ++i)
        e2max = std::max(e2max, T.offdiag()(i) * T.offdiag()(i));
    const Scalar pivmin = std::numeric_limits<Scalar>::min() * e2max;
    Index count = 0;
    Scalar q = T.diag()(0) - x;
    if (q <= pivmin) {
        ++count;
        q = std::min(q, -pivmin);
    }
    for (Index i = 1; i < n; ++i) {
        Scalar b = T.offdiag()(i - 1);
        q = (T.diag()(i) - x) - b * b / q;
        if (q <= pivmin) {
            ++count;
            q = std::min(q, -pivmin);
        }
    }
    return count;
}

namespace {

Scalar bisect_for_index(const TridiagonalSym& T, Index k, Scalar lo, Scalar hi) {
    const Scalar radius = spectral_radius_bound(T);
    const Scalar tol = std::max(1e-13 * radius, 4.0 * kEps * radius);
    while (hi - lo > tol) {
        Scalar mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (sturm_count(T, mid) <= k)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

Scalar eigenvalue_by_index(const TridiagonalSym& T, Index k) {
    if (k < 0 || k >= T.size()) throw std::invalid_argument("eigenvalue_by_index: k out of range");
    auto [lo, hi] = gershgorin_bounds(T);
    return bisect_for_index(T, k, lo, hi);
}

VectorX all_eigenvalues(const TridiagonalSym& T) {
    const Index n = T.size();
    auto [glo, ghi] = gershgorin_bounds(T);
    VectorX ev(n);
    Scalar lo = glo;
    for (Index k = 0; k < n; ++k) {
        ev(k) = bisect_for_index(T, k, lo, ghi);
        lo = ev(k) - 4.0 * kEps * spectral_radius_bound(T) - 1e-13 * spectral_radius_bound(T);
    }
    return ev;
}

std::vector<EigenPair> eigen_smallest(const TridiagonalSym& T, Index k) {
    if (k < 1 || k > T.size()) throw std::invalid_argument("eigen_smallest: k out of range");
    auto [glo, ghi] = gershgorin_bounds(T);
    const Scalar cluster_tol = 1e-8 * spectral_radius_bound(T);
    std::vector<EigenPair> out;
    Scalar lo = glo;
    for (Index j = 0; j < k; ++j) {
        Scalar lambda = bisect_for_index(T, j, lo, ghi);
        lo = lambda - 1e-12 * spectral_radius_bound(T);
        out.push_back(eigenpair_for_value(T, lambda, out, cluster_tol));
    }
    return out;
}

std::vector<EigenPair> eigen_largest(const TridiagonalSym& T, Index k) {
    if (k < 1 || k > T.size()) throw std::invalid_argument("eigen_largest: k out of range");
    const Index n = T.size();
    auto [glo, ghi] = gershgorin_bounds(T);
    const Scalar cluster_tol = 1e-8 * spectral_radius_bound(T);
    std::vector<EigenPair> out;
    Scalar hi = ghi;
    for (Index j = 0; j < k; ++j) {
        Scalar lambda = bisect_for_index(T, n - 1 - j, glo, hi);
        hi = lambda + 1e-12 * spectral_radius_bound(T);
        out.push_back(eigenpair_for_value(T, lambda, out, cluster_tol));
    }
    return out;
}

Scalar eigen_max(const TridiagonalSym& T) {
    auto [glo, ghi] = gershgorin_bounds(T);
    return bisect_for_index(T, T.size() - 1, glo, ghi);
}

SpectralMeasure spectral_measure(const TridiagonalSym& T) {
    if (!T.is_jacobi()) throw std::invalid_argument("spectral_measure: requires Jacobi input");
    const Index n = T.size();
    VectorX lambdas = all_eigenvalues(T);
    const Scalar cluster_tol = 1e-8 * spectral_radius_bound(T);
    VectorX weights(n);
    std::vector<EigenPair> computed;
    computed.reserve(n);
    for (Index j = 0; j < n; ++j) {
        computed.push_back(eigenpair_for_value(T, lambdas(j), computed, cluster_tol));
        Scalar q = computed.back().vector(0);
        weights(j) = q * q;
    }
    weights /= weights.sum();
    return {std::move(lambdas), std::move(weights)};
}

TridiagonalSym jacobi_from_measure(const SpectralMeasure& mu) {
    const Index n = mu.lambdas.size();
    for (Index i = 0; i + 1 < n; ++i)
        if (!(mu.lambdas(i + 1) - mu.lambdas(i) > 1e-14 * (1.0 + std::abs(mu.lambdas(i)))))
            throw std::invalid_argument("jacobi_from_measure: repeated atoms");
    for (Index i = 0; i < n; ++i)
        if (!(mu.weights(i) > 0.0))
            throw std::invalid_argument("jacobi_from_measure: weights must be positive");

    VectorX diag(n), off(std::max<Index>(n - 1, 0));
    MatrixX basis(n, n);
    VectorX v = mu.weights.cwiseSqrt();
    v.normalize();
    basis.col(0) = v;
    VectorX prev = VectorX::Zero(n);
    Scalar beta_prev = 0;
    for (Index j = 0; j < n; ++j) {
        VectorX w = mu.lambdas.cwiseProduct(basis.col(j));
        Scalar alpha = basis.col(j).dot(w);
        diag(j) = alpha;
        if (j + 1 == n) break;
        w -= alpha * basis.col(j);
        if (j > 0) w -= beta_prev * prev;
        // full reorthogonalization, twice
        for (int pass = 0; pass < 2; ++pass)
            for (Index i = 0; i <= j; ++i) w -= basis.col(i).dot(w) * basis.col(i);
        Scalar beta = w.norm();
        if (!(beta > 1e-13 * (1.0 + mu.lambdas.cwiseAbs().maxCoeff())))
            throw std::invalid_argument("jacobi_from_measure: degenerate measure");
        off(j) = beta;
        prev = basis.col(j);
        beta_prev = beta;
        basis.col(j + 1) = w / beta;
    }
    return TridiagonalSym::jacobi(std::move(diag), std::move(off));
}

namespace {

// log |u_k| along the forward (u_0 = 1) or backward (u_{n-1} = 1) solution
// of the three-term recurrence at the given lambda, with running rescaling.
VectorX recurrence_log_profile(const TridiagonalSym& T, Scalar lambda, bool forward) {
    const Index n = T.size();
    VectorX logu(n);
    Scalar prev = 0.0, cur = 1.0, log_scale = 0.0;
    auto record = [&](Index k) { logu(k) = std::log(std::abs(cur)) + log_scale; };
    if (forward) {
        record(0);
        for (Index k = 0; k + 1 < n; ++k) {
            Scalar sub = (k > 0) ? T.offdiag()(k - 1) * prev : 0.0;
            Scalar next = ((lambda - T.diag()(k)) * cur - sub) / T.offdiag()(k);
            prev = cur;
            cur = next;
            if (std::abs(cur) > 1e140) {
                prev *= 1e-140;
                cur *= 1e-140;
                log_scale += 140.0 * std::log(10.0);
            }
            record(k + 1);
        }
    } else {
        record(n - 1);
        for (Index k = n - 1; k-- > 0;) {
            Scalar sub = (k + 2 < n) ? T.offdiag()(k + 1) * prev : 0.0;
            Scalar next = ((lambda - T.diag()(k + 1)) * cur - sub) / T.offdiag()(k);
            prev = cur;
            cur = next;
            if (std::abs(cur) > 1e140) {
                prev *= 1e-140;
                cur *= 1e-140;
                log_scale += 140.0 * std::log(10.0);
            }
            record(k);
        }
    }
    return logu;
}

// log of the spectral weight w = phi_1^2 / ||phi||^2 at an eigenvalue, with
// phi assembled from forward and backward recurrences matched at the peak.
// Each recurrence is relatively accurate in its growth direction, so weights
// far below machine epsilon come out with near-full relative accuracy.
Scalar log_weight_two_sided(const TridiagonalSym& T, Scalar lambda) {
    const Index n = T.size();
    if (n == 1) return 0.0;
    VectorX logf = recurrence_log_profile(T, lambda, true);
    VectorX logg = recurrence_log_profile(T, lambda, false);
    Index p = 0;
    (logf + logg).maxCoeff(&p);

    // phi = f / f_0 on [0, p], phi = (f_p/g_p) g on [p, n-1]; f_0 = 1
    // log ||phi||^2 via log-sum-exp of the two pieces
    Scalar left_max = -kInfinity, right_max = -kInfinity;
    for (Index k = 0; k <= p; ++k) left_max = std::max(left_max, 2.0 * logf(k));
    for (Index k = p + 1; k < n; ++k)
        right_max = std::max(right_max, 2.0 * (logf(p) - logg(p) + logg(k)));
    Scalar mx = std::max(left_max, right_max);
    Scalar acc = 0;
    for (Index k = 0; k <= p; ++k) acc += std::exp(2.0 * logf(k) - mx);
    for (Index k = p + 1; k < n; ++k)
        acc += std::exp(2.0 * (logf(p) - logg(p) + logg(k)) - mx);
    return -(std::log(acc) + mx);
}

} // namespace

Scalar spectral_map_residual(const TridiagonalSym& T) {
    if (!T.is_jacobi())
        throw std::invalid_argument("spectral_map_residual: requires Jacobi input");
    const Index n = T.size();
    Scalar lhs = 0;
    for (Index k = 0; k < n - 1; ++k)
        lhs += 2.0 * static_cast<Scalar>(n - 1 - k) * std::log(T.offdiag()(k));
    VectorX lambdas = all_eigenvalues(T);
    Scalar rhs = 0;
    for (Index i = 0; i < n; ++i) rhs += log_weight_two_sided(T, lambdas(i));
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) rhs += 2.0 * std::log(lambdas(j) - lambdas(i));
    return std::abs(lhs - rhs);
}

std::array<Scalar, 3> split_maxeig_identity(const TridiagonalSym& T, Index m) {
    const Index n = T.size();
    if (m < 1 || m > n - 1) throw std::invalid_argument("split_maxeig_identity: m out of range");
    if (!T.is_jacobi())
        throw std::invalid_argument("split_maxeig_identity: requires positive off-diagonal");
    EigenPair top = eigen_largest(T, 1)[0];
    const Scalar lambda = top.value;

    // The Perron vector can decay exponentially away from its peak, so the
    // ratio phi_{m+1}/phi_m is taken from the three-term recurrence run in
    // its growth direction: forward left of the peak, backward right of it.
    Index peak = 0;
    top.vector.cwiseAbs().maxCoeff(&peak);
    Scalar r;
    if (m <= peak) {
        Scalar rho = (lambda - T.diag()(0)) / T.offdiag()(0);  // u_1/u_0
        for (Index k = 1; k <= m - 1; ++k)
            rho = ((lambda - T.diag()(k)) - T.offdiag()(k - 1) / rho) / T.offdiag()(k);
        r = rho;
    } else {
        Scalar sig = (lambda - T.diag()(n - 1)) / T.offdiag()(n - 2);  // v_{n-2}/v_{n-1}
        for (Index k = n - 3; k >= m - 1; --k)
            sig = ((lambda - T.diag()(k + 1)) - T.offdiag()(k + 1) / sig) / T.offdiag()(k);
        r = 1.0 / sig;
    }
    if (!(r > 0.0) || !std::isfinite(r))
        throw std::runtime_error("split_maxeig_identity: vanishing eigenvector coordinate");
    Scalar q = T.offdiag()(m - 1);

    TridiagonalSym left = T.minor(0, m - 1);
    left.diag()(m - 1) += q * r;
    TridiagonalSym right = T.minor(m, n - 1);
    right.diag()(0) += q / r;
    return {lambda, eigen_max(left), eigen_max(right)};
}

void write_csv(const TridiagonalSym& T, std::ostream& out) {
    out.precision(17);
    for (Index i = 0; i < T.size(); ++i) {
        out << T.diag()(i) << ",";
        if (i + 1 < T.size()) out << T.offdiag()(i);
        out << "\n";
    }
}

TridiagonalSym read_tridiagonal_csv(std::istream& in) {
    std::vector<Scalar> d, o;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("read_tridiagonal_csv: missing comma");
        d.push_back(std::stod(line.substr(0, comma)));
        std::string rest = line.substr(comma + 1);
        if (!rest.empty()) o.push_back(std::stod(rest));
    }
    if (d.empty()) throw std::invalid_argument("read_tridiagonal_csv: empty input");
    if (o.size() != d.size() - 1)
        throw std::invalid_argument("read_tridiagonal_csv: inconsistent column lengths");
    VectorX dv = Eigen::Map<VectorX>(d.data(), static_cast<Index>(d.size()));
    VectorX ov = o.empty() ? VectorX(0) : Eigen::Map<VectorX>(o.data(), static_cast<Index>(o.size()));
    return TridiagonalSym(std::move(dv), std::move(ov));
}

} // namespace edgelab
