#include "edgelab/local_equilibrium.hpp"

#include <cmath>
#include <stdexcept>

namespace edgelab {

namespace {

constexpr Scalar kGradTol = 1e-12;
constexpr int kMaxNewton = 200;

struct NewtonPoint {
    Scalar a, b;
};

// Newton iteration on (W1, W2 - (1-x)/b) with the Hessian of
// W - (1-x) log b as the Jacobian; steps are damped so b stays positive.
NewtonPoint newton_minimize(const Potential& V, Scalar x, Scalar a0, Scalar b0) {
    Scalar a = a0, b = b0;
    for (int it = 0; it < kMaxNewton; ++it) {
        WDerivatives w = w_partials(V, a, b);
        Scalar g1 = w.w1;
        Scalar g2 = w.w2 - (1.0 - x) / b;
        Scalar scale = 1.0 + std::abs(w.w2) + (1.0 - x) / b;
        if (std::abs(g1) + std::abs(g2) <= kGradTol * scale) return {a, b};

        Scalar h11 = w.w11;
        Scalar h12 = w.w12;
        Scalar h22 = w.w22 + (1.0 - x) / (b * b);
        Scalar det = h11 * h22 - h12 * h12;
        if (!(det > 0.0) || !(h11 > 0.0))
            throw std::runtime_error("solve_local_minimizer: Hessian not positive definite");
        Scalar da = -(h22 * g1 - h12 * g2) / det;
        Scalar db = -(-h12 * g1 + h11 * g2) / det;

        Scalar t = 1.0;
        while (b + t * db <= 0.25 * b) t *= 0.5;
        a += t * da;
        b += t * db;
    }
    throw std::runtime_error("solve_local_minimizer: Newton did not converge in 200 steps");
}

void curve_derivatives(const Potential& V, Scalar a, Scalar b, Scalar& a_prime, Scalar& b_prime) {
    // a' W11 + b' W12 = 0,  (a' W21 + b' W22) b + b' W2 = -1
    WDerivatives w = w_partials(V, a, b);
    Matrix2 m;
    m << w.w11, w.w12, b * w.w12, b * w.w22 + w.w2;
    Vector2 rhs(0.0, -1.0);
    Vector2 sol = m.fullPivLu().solve(rhs);
    a_prime = sol(0);
    b_prime = sol(1);
}

} // namespace

LocalMinimizer solve_local_minimizer(const Potential& V, Scalar x) {
    if (!(x < 1.0)) throw std::invalid_argument("solve_local_minimizer: requires x < 1");
    if (!(V.convexity_constant() > 0.0))
        throw std::invalid_argument("solve_local_minimizer: potential is not uniformly convex");

    NewtonPoint p = newton_minimize(V, x, V.argmin(), 1.0 - x);
    LocalMinimizer out;
    out.x = x;
    out.a = p.a;
    out.b = p.b;
    curve_derivatives(V, p.a, p.b, out.a_prime, out.b_prime);
    return out;
}

SigmaMatrix sigma_matrix(const Potential& V, Scalar x) {
    if (!(x >= 0.0 && x < 1.0)) throw std::invalid_argument("sigma_matrix: requires x in [0, 1)");
    LocalMinimizer m = solve_local_minimizer(V, x);
    SigmaMatrix s;
    s.s11 = -m.b * 4.0 * m.b_prime;
    s.s12 = -m.b * m.a_prime;
    s.s22 = -m.b * m.b_prime;
    return s;
}

ScalingConstants scaling_constants(const Potential& V) {
    LocalMinimizer m = solve_local_minimizer(V, 0.0);
    ScalingConstants c;
    c.a0 = m.a;
    c.b0 = m.b;
    c.edge = m.a + 2.0 * m.b;
    c.tau = -(m.a_prime + 2.0 * m.b_prime);
    if (!(c.tau > 0.0))
        throw std::runtime_error("scaling_constants: tau <= 0 signals a solver defect");
    c.gamma = std::pow(c.b0, -1.0 / 3.0) * std::pow(c.tau, -2.0 / 3.0);
    c.vartheta = c.b0 / c.tau;
    return c;
}

std::pair<Scalar, Scalar> moment_conditions_residual(const Potential& V, Scalar x, Scalar L,
                                                     Scalar R) {
    if (!(L < R)) throw std::invalid_argument("moment_conditions_residual: requires L < R");
    if (!(x < 1.0)) throw std::invalid_argument("moment_conditions_residual: requires x < 1");

    const Scalar mid = 0.5 * (L + R);
    const Scalar rad = 0.5 * (R - L);
    const Scalar scale = 1.0 / (1.0 - x);

    auto quad = [&](int order) {
        Scalar first = 0, second = 0;
        for (int i = 1; i <= order; ++i) {
            Scalar theta = (2.0 * i - 1.0) * 3.14159265358979323846 / (2.0 * order);
            Scalar s = mid + rad * std::cos(theta);
            Scalar vp = scale * V.d1(s);
            if (!std::isfinite(vp))
                throw std::runtime_error("moment_conditions_residual: non-finite integrand");
            first += s * vp;
            second += vp;
        }
        return std::pair<Scalar, Scalar>(first / order, second / order);
    };

    int order = 200;
    auto prev = quad(order);
    for (int round = 0; round < 6; ++round) {
        order *= 2;
        auto next = quad(order);
        if (std::abs(next.first - prev.first) <= 1e-9 * (1.0 + std::abs(next.first)) &&
            std::abs(next.second - prev.second) <= 1e-9 * (1.0 + std::abs(next.second))) {
            prev = next;
            break;
        }
        prev = next;
    }
    return {prev.first - 1.0, prev.second};
}

std::vector<Scalar> edge_curve(const Potential& V, const std::vector<Scalar>& xs) {
    std::vector<Scalar> out;
    out.reserve(xs.size());
    for (Scalar x : xs) {
        LocalMinimizer m = solve_local_minimizer(V, x);
        out.push_back(m.a + 2.0 * m.b);
    }
    return out;
}

EdgeExponentProbe edge_exponent_probe(const Potential& V) {
    const Scalar e0 = edge_curve(V, {0.0})[0];
    std::vector<Scalar> logs_eps, logs_gap;
    for (int i = 0; i <= 20; ++i) {
        Scalar eps = std::pow(10.0, -4.0 + 2.0 * i / 20.0);
        Scalar gap = e0 - edge_curve(V, {eps})[0];
        if (!(gap > 0)) continue;
        logs_eps.push_back(std::log(eps));
        logs_gap.push_back(std::log(gap));
    }
    if (logs_eps.size() < 3)
        throw std::runtime_error("edge_exponent_probe: degenerate edge curve");
    // least squares y = alpha t + c in log-log space
    Scalar n = static_cast<Scalar>(logs_eps.size());
    Scalar st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < logs_eps.size(); ++i) {
        st += logs_eps[i];
        sy += logs_gap[i];
        stt += logs_eps[i] * logs_eps[i];
        sty += logs_eps[i] * logs_gap[i];
    }
    Scalar alpha = (n * sty - st * sy) / (n * stt - st * st);
    Scalar c = (sy - alpha * st) / n;
    return {alpha, std::exp(c)};
}

ContinuationResult solve_local_minimizer_continuation(const Potential& V,
                                                      const std::vector<Scalar>& xs_descending) {
    ContinuationResult res;
    Scalar a = V.argmin();
    Scalar b = 0.01;
    Scalar x_prev = 0.99;

    auto advance = [&](Scalar x_target, bool record) -> bool {
        // March in small x-steps so the warm start stays in the Newton basin.
        int steps = std::max(1, static_cast<int>(std::ceil(std::abs(x_prev - x_target) / 0.02)));
        for (int s = 1; s <= steps; ++s) {
            Scalar x = x_prev + (x_target - x_prev) * s / steps;
            try {
                NewtonPoint p = newton_minimize(V, x, a, b);
                WDerivatives w = w_partials(V, p.a, p.b);
                Scalar h11 = w.w11;
                Scalar h22 = w.w22 + (1.0 - x) / (p.b * p.b);
                if (!(h11 > 0.0 && h11 * h22 - w.w12 * w.w12 > 0.0)) {
                    res.hessian_definite = false;
                    res.failure_x = x;
                    return false;
                }
                a = p.a;
                b = p.b;
            } catch (const std::runtime_error&) {
                res.hessian_definite = false;
                res.failure_x = x;
                return false;
            }
        }
        x_prev = x_target;
        if (record) {
            LocalMinimizer m;
            m.x = x_target;
            m.a = a;
            m.b = b;
            curve_derivatives(V, a, b, m.a_prime, m.b_prime);
            res.points.push_back(m);
        }
        return true;
    };

    if (!advance(0.99, false)) return res;
    for (Scalar x : xs_descending)
        if (!advance(x, true)) return res;
    return res;
}

} // namespace edgelab
