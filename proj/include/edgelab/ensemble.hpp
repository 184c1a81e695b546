#pragma once

#include <vector>

#include "edgelab/potential.hpp"
#include "edgelab/rng.hpp"
#include "edgelab/tridiagonal.hpp"
#include "edgelab/types.hpp"

namespace edgelab {

/// The tridiagonal beta-ensemble model: potential V, inverse temperature
/// beta, matrix size n.
struct ModelSpec {
    Potential V;
    Scalar beta = 2.0;
    Index n = 2;

    void validate() const;
};

/// Exact chi/Gaussian sampler for V = s^2/4 at any beta > 0:
/// diagonal g_k / sqrt(n beta) with g_k ~ N(0,2), off-diagonal
/// chi_{(n-k) beta} / sqrt(n beta).
TridiagonalSym sample_hermite_de(Index n, Scalar beta, Philox& rng);

/// First k_entries rows of the same model, for partial-sum statistics at
/// sizes where the full matrix would never be materialized. Draw order
/// matches the full sampler (a_1, b_1, a_2, b_2, ...).
void sample_hermite_de_top(Index n, Scalar beta, Index k_entries, Philox& rng, VectorX& a,
                           VectorX& b);

struct DensityValue {
    Scalar log_value = 0;
    bool in_support = true;  // false when an off-diagonal entry is nonpositive
};

/// Unnormalized log density of (A, B):
/// -n beta [ tr V(T) - sum_k (1 - k/n - 1/(n beta)) log b_k ].
DensityValue log_density(const ModelSpec& spec, const TridiagonalSym& T);

/// Gradient of the log density in the diagonal and off-diagonal entries,
/// using d tr V(T) = tr(V'(T) dT) through a banded evaluation of V'(T).
std::pair<VectorX, VectorX> grad_log_density(const ModelSpec& spec, const TridiagonalSym& T);

/// n independent Gamma(beta/2, 1) draws normalized by their sum.
VectorX sample_dirichlet_weights(Index n, Scalar beta, Philox& rng);

/// GOE (beta = 1) / GUE (beta = 2) sample scaled so the eigenvalue density
/// is the Dyson law with V = s^2/4, Householder-tridiagonalized with
/// nonnegative off-diagonals.
TridiagonalSym dense_gaussian_oracle(Index n, int beta, Philox& rng);

struct McmcConfig {
    Scalar step_scale = 0.5;  // initial global multiplier on the preconditioned step
    Index burn_in = 4000;
    Index thin = 10;
    uint64_t seed = 1;
    uint64_t stream = 0;
    std::vector<char> active;  // optional mask over packed (a, b) coordinates
};

struct ChainState {
    VectorX a;
    VectorX b;
    Scalar log_density = 0;
    Scalar acceptance_rate = 0;
    Scalar step_scale = 0;
};

/// Metropolis-adjusted Langevin chain targeting exp(log_density), with
/// off-diagonal coordinates reflected across zero (the folded proposal
/// density enters the acceptance ratio). Per-coordinate scales come from the
/// Hessian diagonal at the global minimizer, where the chain starts.
class MalaChain {
public:
    MalaChain(ModelSpec spec, McmcConfig config);

    /// One proposal; returns whether it was accepted.
    bool step();

    /// Burn-in with step-size adaptation toward 0.5-0.6 acceptance. Throws
    /// when the tuned acceptance stays below 0.05.
    void run_burn_in();

    const ModelSpec& spec() const { return spec_; }
    ChainState state() const;
    TridiagonalSym matrix() const;
    Scalar acceptance_rate() const;
    Scalar step_scale() const { return eps_; }

private:
    Scalar log_target(const VectorX& x) const;
    VectorX grad_log_target(const VectorX& x) const;

    ModelSpec spec_;
    McmcConfig cfg_;
    Philox rng_;
    VectorX x_;       // packed (a_0..a_{n-1}, b_0..b_{n-2})
    VectorX scale_;   // per-coordinate proposal scale
    std::vector<char> active_;
    Scalar eps_;
    Scalar log_pi_;
    VectorX grad_;
    long accepted_ = 0;
    long proposed_ = 0;
};

/// Integrated autocorrelation time by Geyer's initial positive sequence.
Scalar integrated_autocorr_time(const std::vector<Scalar>& series);
Scalar effective_sample_size(const std::vector<Scalar>& series);

/// Checkpoint row: iteration, a-row, b-row, log-density.
void write_chain_checkpoint(std::ostream& out, long iteration, const ChainState& state);
ChainState read_chain_checkpoint(const std::string& line, long& iteration);

} // namespace edgelab
