#include "edgelab/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <cstdio>
#include <cstdlib>

#include "edgelab/local_equilibrium.hpp"
#include "edgelab/matrix_poly.hpp"

namespace edgelab {

namespace {

std::vector<Scalar> derivative_coeffs(const std::vector<Scalar>& c) {
    if (c.size() <= 1) return {0.0};
    std::vector<Scalar> d(c.size() - 1);
    for (std::size_t m = 1; m < c.size(); ++m) d[m - 1] = static_cast<Scalar>(m) * c[m];
    return d;
}

// One variable of the packed Newton system.
struct Var {
    bool is_b;
    Index pos;  // window-local position
};

// The conditional problem restricted to the window that can influence the
// free variables. Everything outside contributes a constant.
struct Window {
    Index lo = 0, hi = 0;  // global index range of the minor, inclusive
    VectorX a, b;          // current iterate on the window
    VectorX alpha;         // log coefficients on window b-slots
    std::vector<Var> vars; // packed free variables
    std::vector<char> wfree_a, wfree_b;
};

Window build_window(const MinimizerProblem& p) {
    const Index n = p.n;
    const Index margin = p.V.degree();
    Index first = n, last = -1;
    for (Index i = 0; i < n; ++i)
        if (p.free_a[i]) {
            first = std::min(first, i);
            last = std::max(last, i);
        }
    for (Index i = 0; i + 1 < n; ++i)
        if (p.free_b[i]) {
            first = std::min(first, i);
            last = std::max(last, i + 1);
        }
    Window w;
    if (last < 0) {  // nothing free
        w.lo = 0;
        w.hi = -1;
        return w;
    }
    w.lo = std::max<Index>(0, first - margin);
    w.hi = std::min<Index>(n - 1, last + margin);
    const Index m = w.hi - w.lo + 1;
    w.a = p.fixed_a.segment(w.lo, m);
    w.b = (m > 1) ? VectorX(p.fixed_b.segment(w.lo, m - 1)) : VectorX(0);
    w.alpha = (m > 1) ? VectorX(p.alpha.segment(w.lo, m - 1)) : VectorX(0);
    w.wfree_a.assign(m, 0);
    w.wfree_b.assign(std::max<Index>(m - 1, 0), 0);
    for (Index i = 0; i < m; ++i) {
        Index g = w.lo + i;
        if (p.free_a[g]) {
            w.wfree_a[i] = 1;
            w.vars.push_back({false, i});
        }
        if (i + 1 < m && p.free_b[g]) {
            w.wfree_b[i] = 1;
            w.vars.push_back({true, i});
        }
    }
    return w;
}

Scalar objective(const Potential& V, const Window& w) {
    // Fixed-b log terms are constants; skipping them keeps line-search
    // differences exact and tolerates zero boundary entries.
    TridiagonalSym T(w.a, w.b);
    Scalar f = tridiag_poly(T, V.coeffs()).trace();
    for (Index i = 0; i < w.b.size(); ++i)
        if (w.wfree_b[i] && w.alpha(i) != 0.0) f -= w.alpha(i) * std::log(w.b(i));
    return f;
}

VectorX packed_gradient(const Potential& V, const Window& w) {
    TridiagonalSym T(w.a, w.b);
    BandedSym VP = tridiag_poly(T, derivative_coeffs(V.coeffs()));
    VectorX g(static_cast<Index>(w.vars.size()));
    for (std::size_t v = 0; v < w.vars.size(); ++v) {
        const Var& var = w.vars[v];
        if (!var.is_b)
            g(static_cast<Index>(v)) = VP.entry(var.pos, 0);
        else
            g(static_cast<Index>(v)) =
                2.0 * VP.at(var.pos, var.pos + 1) - w.alpha(var.pos) / w.b(var.pos);
    }
    return g;
}

// Banded lower-triangular storage for the packed Hessian: row i holds
// couplings to vars i-hb..i.
struct BandMatrix {
    Index n, hb;
    MatrixX data;  // data(i, hb - (i - j)) = H(i, j), j in [i-hb, i]
    BandMatrix(Index n_, Index hb_) : n(n_), hb(hb_), data(MatrixX::Zero(n_, hb_ + 1)) {}
    Scalar& at(Index i, Index j) { return data(i, hb - (i - j)); }
    Scalar at(Index i, Index j) const { return data(i, hb - (i - j)); }
};

BandMatrix packed_hessian(const Potential& V, const Window& w) {
    TridiagonalSym T(w.a, w.b);
    const std::vector<Scalar> vp = derivative_coeffs(V.coeffs());
    const Index pmax = std::max<Index>(static_cast<Index>(vp.size()) - 1, 0);
    std::vector<BandedSym> P = tridiag_powers(T, pmax);

    const Index nv = static_cast<Index>(w.vars.size());
    const Index hb = std::min<Index>(nv - 1, 2 * V.degree() + 1);
    BandMatrix H(nv, hb);

    auto second = [&](const Var& x, const Var& y) {
        Scalar acc = 0;
        for (std::size_t m = 1; m < vp.size(); ++m) {
            if (vp[m] == 0.0) continue;
            Scalar s = 0;
            for (Index p = 0; p <= static_cast<Index>(m) - 1; ++p) {
                Index q = static_cast<Index>(m) - 1 - p;
                Index i = x.pos, j = y.pos;
                if (!x.is_b && !y.is_b) {
                    s += P[p].at(i, j) * P[q].at(j, i);
                } else if (!x.is_b && y.is_b) {
                    s += P[p].at(i, j) * P[q].at(j + 1, i) + P[p].at(i, j + 1) * P[q].at(j, i);
                } else if (x.is_b && !y.is_b) {
                    s += P[p].at(j, i) * P[q].at(i + 1, j) + P[p].at(j, i + 1) * P[q].at(i, j);
                } else {
                    s += P[p].at(i + 1, j) * P[q].at(j + 1, i) +
                         P[p].at(i + 1, j + 1) * P[q].at(j, i) +
                         P[p].at(i, j) * P[q].at(j + 1, i + 1) +
                         P[p].at(i, j + 1) * P[q].at(j, i + 1);
                }
            }
            acc += vp[m] * s;
        }
        return acc;
    };

    for (Index i = 0; i < nv; ++i) {
        for (Index j = std::max<Index>(0, i - hb); j <= i; ++j) {
            Scalar v = second(w.vars[i], w.vars[j]);
            if (i == j && w.vars[i].is_b) {
                Scalar bk = w.b(w.vars[i].pos);
                v += w.alpha(w.vars[i].pos) / (bk * bk);
            }
            H.at(i, j) = v;
        }
    }
    return H;
}

// LDL^T without pivoting; the Hessian of a convex configuration is SPD.
VectorX band_ldlt_solve(BandMatrix H, VectorX rhs) {
    const Index n = H.n, hb = H.hb;
    VectorX d(n);
    for (Index j = 0; j < n; ++j) {
        Scalar dj = H.at(j, j);
        for (Index k = std::max<Index>(0, j - hb); k < j; ++k) dj -= H.at(j, k) * H.at(j, k) * d(k);
        if (!(dj > 0.0))
            throw std::runtime_error("minimize_H: non-convex configuration (indefinite Hessian)");
        d(j) = dj;
        for (Index i = j + 1; i <= std::min<Index>(n - 1, j + hb); ++i) {
            Scalar lij = H.at(i, j);
            for (Index k = std::max<Index>(0, i - hb); k < j; ++k)
                lij -= H.at(i, k) * H.at(j, k) * d(k);
            H.at(i, j) = lij / d(j);
        }
    }
    for (Index i = 0; i < n; ++i)
        for (Index k = std::max<Index>(0, i - hb); k < i; ++k) rhs(i) -= H.at(i, k) * rhs(k);
    for (Index i = 0; i < n; ++i) rhs(i) /= d(i);
    for (Index i = n - 1; i >= 0; --i)
        for (Index k = i + 1; k <= std::min<Index>(n - 1, i + hb); ++k)
            rhs(i) -= H.at(k, i) * rhs(k);
    return rhs;
}

void apply_step(Window& w, const VectorX& dx, Scalar t) {
    for (std::size_t v = 0; v < w.vars.size(); ++v) {
        const Var& var = w.vars[v];
        if (var.is_b)
            w.b(var.pos) += t * dx(static_cast<Index>(v));
        else
            w.a(var.pos) += t * dx(static_cast<Index>(v));
    }
}

// Initial iterate from the local-minimizer curve at the bulk position
// encoded by the log coefficient, x = 1 - alpha; exact for quadratic V and
// inside the Newton basin generally.
void local_curve_init(const Potential& V, Window& w) {
    for (const Var& var : w.vars) {
        Index slot = var.is_b ? var.pos : std::min<Index>(var.pos, w.alpha.size() - 1);
        slot = std::max<Index>(slot, 0);
        Scalar x = (w.alpha.size() > 0) ? (1.0 - w.alpha(slot)) : 0.0;
        x = std::min<Scalar>(std::max<Scalar>(x, -1.0), 1.0 - 1e-9);
        LocalMinimizer lm = solve_local_minimizer(V, x);
        if (var.is_b)
            w.b(var.pos) = lm.b;
        else
            w.a(var.pos) = lm.a;
    }
}

} // namespace

void MinimizerProblem::validate() const {
    if (n < 1) throw std::invalid_argument("MinimizerProblem: n must be >= 1");
    if (fixed_a.size() != n || static_cast<Index>(free_a.size()) != n)
        throw std::invalid_argument("MinimizerProblem: a-sized fields must have length n");
    if (fixed_b.size() != n - 1 || static_cast<Index>(free_b.size()) != n - 1 ||
        alpha.size() != n - 1)
        throw std::invalid_argument("MinimizerProblem: b-sized fields must have length n-1");
    for (Index i = 0; i + 1 < n; ++i) {
        if (!(alpha(i) >= 0.0 && alpha(i) <= 1.0))
            throw std::invalid_argument("MinimizerProblem: alpha entries must lie in [0,1]");
        if (!free_b[i] && !(fixed_b(i) >= 0.0))
            throw std::invalid_argument("MinimizerProblem: fixed b entries must be >= 0");
        if (!std::isfinite(fixed_b(i)))
            throw std::invalid_argument("MinimizerProblem: boundary values must be finite");
    }
    for (Index i = 0; i < n; ++i)
        if (!std::isfinite(fixed_a(i)))
            throw std::invalid_argument("MinimizerProblem: boundary values must be finite");
    if (!(std::isinf(beta) || beta > 0.0))
        throw std::invalid_argument("MinimizerProblem: beta must be positive or infinity");
}

MinimizerProblem dyson_problem(const Potential& V, Index n, Scalar beta) {
    if (!(V.convexity_constant() > 0.0))
        throw std::invalid_argument("dyson_problem: potential must be uniformly convex");
    if (!std::isinf(beta) && !(beta >= 1.0))
        throw std::invalid_argument("dyson_problem: finite beta must be >= 1 for convexity");
    MinimizerProblem p{V,       n,
                       beta,    VectorX(n - 1),
                       VectorX::Zero(n),        VectorX::Zero(n - 1),
                       std::vector<char>(n, 1), std::vector<char>(n - 1, 1),
                       VectorX(),               VectorX()};
    Scalar inv_nb = std::isinf(beta) ? 0.0 : 1.0 / (n * beta);
    for (Index k = 1; k < n; ++k) p.alpha(k - 1) = 1.0 - static_cast<Scalar>(k) / n - inv_nb;
    p.validate();
    return p;
}

MinimizerProblem conditional_problem(const Potential& V, Index n, Scalar beta, Index lo, Index hi,
                                     const VectorX& boundary_a, const VectorX& boundary_b) {
    MinimizerProblem p = dyson_problem(V, n, beta);
    p.fixed_a = boundary_a;
    p.fixed_b = boundary_b;
    std::fill(p.free_a.begin(), p.free_a.end(), 0);
    std::fill(p.free_b.begin(), p.free_b.end(), 0);
    for (Index i = lo; i <= hi && i < n; ++i) p.free_a[i] = 1;
    for (Index i = lo; i <= hi && i + 1 < n; ++i) p.free_b[i] = 1;
    p.validate();
    return p;
}

MinimizerSolution minimize_H(const MinimizerProblem& problem) {
    problem.validate();
    if (!(problem.V.convexity_constant() > 0.0))
        throw std::invalid_argument("minimize_H: potential must be uniformly convex");

    Window w = build_window(problem);
    MinimizerSolution sol;
    sol.a = problem.fixed_a;
    sol.b = problem.fixed_b;
    if (w.vars.empty()) {
        sol.grad_norm = 0;
        sol.objective = 0;
        return sol;  // empty free set: boundary returned unchanged
    }

    if (problem.init_a.size() == problem.n && problem.init_b.size() == problem.n - 1) {
        for (Index i = 0; i < w.a.size(); ++i)
            if (w.wfree_a[i]) w.a(i) = problem.init_a(w.lo + i);
        for (Index i = 0; i < w.b.size(); ++i)
            if (w.wfree_b[i]) w.b(i) = problem.init_b(w.lo + i);
    } else {
        local_curve_init(problem.V, w);
    }

    const Scalar grad_tol = 1e-11 * static_cast<Scalar>(problem.n);
    const bool trace = std::getenv("EDGELAB_NEWTON_TRACE") != nullptr;
    Scalar f = objective(problem.V, w);
    int it = 0;
    for (; it < 200; ++it) {
        VectorX g = packed_gradient(problem.V, w);
        sol.grad_norm = g.norm();
        if (trace)
            std::fprintf(stderr, "newton it=%d f=%.17g grad=%.3e\n", it, f, sol.grad_norm);
        if (sol.grad_norm <= grad_tol) break;

        BandMatrix H = packed_hessian(problem.V, w);
        VectorX dx = band_ldlt_solve(std::move(H), -g);

        // keep every free off-diagonal safely positive along the step
        Scalar t = 1.0;
        for (std::size_t v = 0; v < w.vars.size(); ++v) {
            if (!w.vars[v].is_b) continue;
            Scalar bk = w.b(w.vars[v].pos);
            Scalar step = dx(static_cast<Index>(v));
            if (bk + t * step < 0.2 * bk) t = std::min(t, -0.8 * bk / step);
        }
        Scalar slope = g.dot(dx);
        // Armijo cannot resolve decreases below the objective's rounding
        // floor; near convergence the full (positivity-capped) Newton step is
        // accepted within that noise.
        const Scalar noise = 16.0 * std::numeric_limits<Scalar>::epsilon() * (1.0 + std::abs(f));
        Scalar t_used = t;
        for (;;) {
            Window trial = w;
            apply_step(trial, dx, t_used);
            Scalar f_trial = objective(problem.V, trial);
            if (f_trial <= f + 1e-4 * t_used * slope + noise) {
                w = std::move(trial);
                f = f_trial;
                break;
            }
            t_used *= 0.5;
            if (t_used < 1e-14)
                throw std::runtime_error("minimize_H: line search stalled");
        }
    }
    if (it == 200) throw std::runtime_error("minimize_H: Newton did not converge");

    for (Index i = 0; i < w.a.size(); ++i) sol.a(w.lo + i) = w.a(i);
    for (Index i = 0; i < w.b.size(); ++i) sol.b(w.lo + i) = w.b(i);
    sol.iterations = it;
    sol.objective = f;
    return sol;
}

TridiagonalSym solution_matrix(const MinimizerSolution& sol) {
    return TridiagonalSym(sol.a, sol.b);
}

DecayFit boundary_decay_rate(const Potential& V, Index window_len, Scalar delta) {
    if (window_len < 40)
        throw std::invalid_argument("boundary_decay_rate: window length must be >= 40");
    const Index n = 4 * window_len;
    const Index lo = n / 2 - window_len / 2;
    const Index hi = lo + window_len - 1;

    // local-minimizer boundary data along the whole index range
    VectorX base_a(n), base_b(n - 1);
    for (Index k = 1; k <= n; ++k) {
        Scalar x = std::min<Scalar>(static_cast<Scalar>(k) / n, 1.0 - 1e-9);
        LocalMinimizer lm = solve_local_minimizer(V, x);
        base_a(k - 1) = lm.a;
        if (k < n) base_b(k - 1) = lm.b;
    }

    MinimizerProblem plain = conditional_problem(V, n, kInfinity, lo, hi, base_a, base_b);
    MinimizerSolution s0 = minimize_H(plain);

    VectorX pert_a = base_a, pert_b = base_b;
    for (Index i = 0; i < n; ++i)
        if (!plain.free_a[i]) pert_a(i) += delta;
    for (Index i = 0; i + 1 < n; ++i)
        if (!plain.free_b[i]) pert_b(i) += delta;
    MinimizerProblem perturbed = conditional_problem(V, n, kInfinity, lo, hi, pert_a, pert_b);
    MinimizerSolution s1 = minimize_H(perturbed);

    std::vector<Scalar> dist, logdiff;
    bool any_above = false;
    for (Index k = lo; k <= hi; ++k) {
        Scalar diff = std::abs(s0.a(k) - s1.a(k));
        if (k + 1 < n) diff += std::abs(s0.b(k) - s1.b(k));
        Scalar d = std::min(k - lo + 1, hi - k + 1);
        if (diff > 1e-14) {
            any_above = true;
            dist.push_back(d);
            logdiff.push_back(std::log(diff));
        }
    }
    DecayFit fit;
    if (!any_above || dist.size() < 3) {
        fit.saturated = true;
        return fit;
    }
    Scalar m = static_cast<Scalar>(dist.size());
    Scalar sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        sx += dist[i];
        sy += logdiff[i];
        sxx += dist[i] * dist[i];
        sxy += dist[i] * logdiff[i];
    }
    fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return fit;
}

TridiagonalSym approx_J(const Potential& V, Index m, Index n_embed) {
    if (m < 8) throw std::invalid_argument("approx_J: m must be >= 8");
    if (n_embed < 4 * m) throw std::invalid_argument("approx_J: n_embed must be >= 4m");
    LocalMinimizer lm = solve_local_minimizer(V, 0.0);

    const Index n = n_embed + V.degree();
    MinimizerProblem p{V,
                       n,
                       kInfinity,
                       VectorX::Ones(n - 1),
                       VectorX::Constant(n, lm.a),
                       VectorX::Constant(n - 1, lm.b),
                       std::vector<char>(n, 0),
                       std::vector<char>(n - 1, 0),
                       VectorX(),
                       VectorX()};
    for (Index i = 0; i < n_embed; ++i) {
        p.free_a[i] = 1;
        p.free_b[i] = 1;
    }
    p.validate();
    MinimizerSolution sol = minimize_H(p);
    return TridiagonalSym(sol.a.head(m), sol.b.head(m - 1));
}

std::pair<Scalar, Scalar> quadrature_bound_check(const Potential& V, Index m) {
    if (m < 16) throw std::invalid_argument("quadrature_bound_check: m must be >= 16");
    TridiagonalSym Jm = approx_J(V, m, 4 * m);
    LocalMinimizer lm = solve_local_minimizer(V, 0.0);
    Scalar ratio = kBesselJ0FirstZero / static_cast<Scalar>(m);
    Scalar bound = lm.a + lm.b * (2.0 - ratio * ratio);
    return {eigen_max(Jm), bound};
}

FeketeReport fekete_stationarity(const Potential& V, const TridiagonalSym& T) {
    const Index n = T.size();
    SpectralMeasure mu = spectral_measure(T);
    FeketeReport rep;
    for (Index i = 0; i + 1 < n; ++i)
        if (mu.lambdas(i + 1) - mu.lambdas(i) < 1e-12) rep.clustered = true;
    for (Index i = 0; i < n; ++i) {
        Scalar interaction = 0;
        for (Index j = 0; j < n; ++j)
            if (j != i) interaction += 1.0 / (mu.lambdas(i) - mu.lambdas(j));
        Scalar resid = std::abs(n * V.d1(mu.lambdas(i)) - interaction) / n;
        rep.max_stationarity_residual = std::max(rep.max_stationarity_residual, resid);
        rep.max_weight_deviation =
            std::max(rep.max_weight_deviation, std::abs(mu.weights(i) - 1.0 / n));
    }
    return rep;
}

Scalar truncation_bound_min_eig(const TridiagonalSym& T, Index m, Scalar edge, Scalar b0,
                                Scalar kappa) {
    if (m < 2 || m > T.size())
        throw std::invalid_argument("truncation_bound_min_eig: m out of range");
    // Only the leading m x m block of the difference is nonzero; the rest of
    // the spectrum sits at 0.
    const Scalar shift = kappa / static_cast<Scalar>(m * m);
    VectorX d(m), o(m - 1);
    for (Index i = 0; i + 1 < m; ++i) {
        d(i) = edge - shift - T.diag()(i);
        o(i) = T.offdiag()(i);
    }
    d(m - 1) = b0 - shift;
    TridiagonalSym block(std::move(d), std::move(o));
    Scalar lam = eigenvalue_by_index(block, 0);
    return std::min(lam, 0.0);
}

} // namespace edgelab
