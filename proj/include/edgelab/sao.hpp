#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgelab/rng.hpp"
#include "edgelab/tridiagonal.hpp"
#include "edgelab/types.hpp"

namespace edgelab {

/// Finite-difference discretization parameters for the stochastic Airy
/// operator family: -d^2/dx^2 + x^{1/(2k+1)} + (2/sqrt(beta)) x^{-k/(2k+1)} W'
/// on [0, L] with Dirichlet walls. k = 0 is SAO_beta; k >= 1 is the
/// conjectured nonregular family.
struct SAOConfig {
    Scalar beta = 2.0;  // > 0, or infinity for the noiseless operator
    int k = 0;
    Scalar h = 0.05;
    Scalar L = 12.0;
    Index num_eigs = 1;

    void validate() const;
    Index grid_size() const;  // L/h, must be an integer >= 10
};

/// Grid operator: diagonal 2/h^2 + p(x_j) + N_j/h with cell-integrated noise
/// N_j = (2/sqrt(beta)) int_cell x^{-k/(2k+1)} dW, off-diagonal 1/h^2 (the
/// sign is a diagonal similarity). beta = infinity draws no noise.
TridiagonalSym discretize_sao(const SAOConfig& config, Philox& rng);

/// Batch of edge samples. `values` holds the Tracy-Widom convention -Lambda_0
/// (or scaled matrix edges from the pipelines); `eigenvalues` keeps all
/// requested Lambda_j per realization in operator convention.
struct EdgeSampleBatch {
    std::vector<Scalar> values;
    MatrixX eigenvalues;  // N x num_eigs
    std::string model_id;
    Scalar param = 0;  // n for matrix models, h for discretizations
    Scalar beta = 0;
    uint64_t seed = 0;
};

/// N independent noise realizations; per realization the lowest num_eigs
/// eigenvalues of the discretization. Realization i uses RNG stream i, so
/// batches are reproducible and thread-count independent.
EdgeSampleBatch sample_tw_beta(const SAOConfig& config, Index N, uint64_t seed, int threads = 0);

/// Ground eigenvectors of selected realizations, for the eigenvector
/// convergence diagnostic.
std::vector<EigenPair> sao_ground_pairs(const SAOConfig& config, Index N, uint64_t seed,
                                        const std::vector<Index>& which);

/// | f^T (T f) - Lambda ||f||^2 | for a computed eigenpair.
Scalar rayleigh_residual(const TridiagonalSym& T, const EigenPair& pair);

} // namespace edgelab
