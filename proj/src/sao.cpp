#include "edgelab/sao.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace edgelab {

void SAOConfig::validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("SAOConfig: beta must be positive");
    if (k < 0) throw std::invalid_argument("SAOConfig: k must be >= 0");
    if (!(h > 0.0)) throw std::invalid_argument("SAOConfig: h must be positive");
    if (!(L > 0.0)) throw std::invalid_argument("SAOConfig: L must be positive");
    Scalar ratio = L / h;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
        throw std::invalid_argument("SAOConfig: L/h must be an integer");
    if (std::round(ratio) < 10) throw std::invalid_argument("SAOConfig: grid must have >= 10 points");
    if (num_eigs < 1) throw std::invalid_argument("SAOConfig: num_eigs must be >= 1");
}

Index SAOConfig::grid_size() const { return static_cast<Index>(std::round(L / h)); }

TridiagonalSym discretize_sao(const SAOConfig& config, Philox& rng) {
    config.validate();
    const Index n = config.grid_size();
    if (config.num_eigs > n) throw std::invalid_argument("discretize_sao: num_eigs exceeds grid");
    const Scalar h = config.h;
    const Scalar inv_h2 = 1.0 / (h * h);
    const Scalar p_exp = 1.0 / (2.0 * config.k + 1.0);
    const bool noiseless = std::isinf(config.beta);

    VectorX diag(n);
    for (Index j = 1; j <= n; ++j) {
        Scalar xj = j * h;
        Scalar potential = std::pow(xj, p_exp);
        Scalar noise = 0;
        if (!noiseless) {
            // cell-averaged noise weight; for k >= 1 the closed form of
            // int_{x_{j-1}}^{x_j} t^{-2k/(2k+1)} dt avoids the singular
            // midpoint at the first cell
            Scalar w;
            if (config.k == 0) {
                w = 1.0;
            } else {
                Scalar xprev = (j - 1) * h;
                w = (2.0 * config.k + 1.0) * (std::pow(xj, p_exp) - std::pow(xprev, p_exp)) / h;
            }
            Scalar sd = std::sqrt(4.0 / config.beta * h * w);
            noise = sd * rng.normal() / h;
        }
        diag(j - 1) = 2.0 * inv_h2 + potential + noise;
    }
    VectorX off = VectorX::Constant(n - 1, inv_h2);
    return TridiagonalSym(std::move(diag), std::move(off));
}

EdgeSampleBatch sample_tw_beta(const SAOConfig& config, Index N, uint64_t seed, int threads) {
    config.validate();
    if (std::isinf(config.beta))
        throw std::invalid_argument("sample_tw_beta: beta must be finite");
    if (N < 1) throw std::invalid_argument("sample_tw_beta: N must be >= 1");

    EdgeSampleBatch batch;
    batch.values.resize(N);
    batch.eigenvalues.resize(N, config.num_eigs);
    batch.model_id = (config.k == 0) ? "sao" : ("sao_k" + std::to_string(config.k));
    batch.param = config.h;
    batch.beta = config.beta;
    batch.seed = seed;

    int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    nthreads = std::max(1, std::min<int>(nthreads, static_cast<int>(N)));

    auto worker = [&](int tid) {
        for (Index i = tid; i < N; i += nthreads) {
            Philox rng(seed, static_cast<uint64_t>(i) + 1);
            TridiagonalSym T = discretize_sao(config, rng);
            std::vector<EigenPair> pairs = eigen_smallest(T, config.num_eigs);
            for (Index j = 0; j < config.num_eigs; ++j) batch.eigenvalues(i, j) = pairs[j].value;
            batch.values[i] = -pairs[0].value;
        }
    };
    if (nthreads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }
    return batch;
}

std::vector<EigenPair> sao_ground_pairs(const SAOConfig& config, Index N, uint64_t seed,
                                        const std::vector<Index>& which) {
    config.validate();
    std::vector<EigenPair> out;
    out.reserve(which.size());
    for (Index i : which) {
        if (i < 0 || i >= N) throw std::invalid_argument("sao_ground_pairs: index out of range");
        Philox rng(seed, static_cast<uint64_t>(i) + 1);
        TridiagonalSym T = discretize_sao(config, rng);
        out.push_back(eigen_smallest(T, 1)[0]);
    }
    return out;
}

Scalar rayleigh_residual(const TridiagonalSym& T, const EigenPair& pair) {
    return std::abs(pair.vector.dot(T.apply(pair.vector)) -
                    pair.value * pair.vector.squaredNorm());
}

} // namespace edgelab
