#pragma once

#include <iosfwd>
#include <vector>

#include "edgelab/types.hpp"

namespace edgelab {

/// Symmetric tridiagonal matrix with nonnegative off-diagonal. Strictly
/// positive off-diagonals (Jacobi matrices) are enforced by the jacobi()
/// factory; the plain constructor admits zeros for padded or truncated
/// matrices. Off-diagonal signs never matter for the spectrum (diagonal
/// similarity), so callers with signed data pass magnitudes.
class TridiagonalSym {
public:
    TridiagonalSym(VectorX diag, VectorX offdiag);

    static TridiagonalSym jacobi(VectorX diag, VectorX offdiag);

    Index size() const { return diag_.size(); }
    const VectorX& diag() const { return diag_; }
    const VectorX& offdiag() const { return off_; }
    VectorX& diag() { return diag_; }
    VectorX& offdiag() { return off_; }

    bool is_jacobi() const;

    /// Minor over rows/columns [lo, hi], 0-based inclusive.
    TridiagonalSym minor(Index lo, Index hi) const;

    MatrixX dense() const;

    VectorX apply(const VectorX& x) const;

private:
    VectorX diag_;
    VectorX off_;
};

/// Atomic measure sum w_j delta(lambda_j) with ascending support points and
/// weights summing to one.
struct SpectralMeasure {
    VectorX lambdas;
    VectorX weights;

    static SpectralMeasure checked(VectorX lambdas, VectorX weights);
};

struct EigenPair {
    Scalar value = 0;
    VectorX vector;
};

/// Gershgorin enclosure of the spectrum.
std::pair<Scalar, Scalar> gershgorin_bounds(const TridiagonalSym& T);

/// Number of eigenvalues strictly below x (Sturm / LDL^T sign count).
Index sturm_count(const TridiagonalSym& T, Scalar x);

/// k-th smallest eigenvalue (k 0-based) by bisection, to an absolute
/// tolerance of about 1e-13 times the spectral radius.
Scalar eigenvalue_by_index(const TridiagonalSym& T, Index k);

/// All eigenvalues, ascending.
VectorX all_eigenvalues(const TridiagonalSym& T);

/// k smallest eigenpairs, eigenvectors unit norm with the first nonzero
/// coordinate positive (inverse iteration).
std::vector<EigenPair> eigen_smallest(const TridiagonalSym& T, Index k);

/// k largest eigenpairs, ordered from the largest down.
std::vector<EigenPair> eigen_largest(const TridiagonalSym& T, Index k);

Scalar eigen_max(const TridiagonalSym& T);

/// Spectral measure at the first coordinate vector: eigenvalues plus squared
/// first components of the normalized eigenvectors.
SpectralMeasure spectral_measure(const TridiagonalSym& T);

/// Unique Jacobi matrix with the given spectral measure, by the Lanczos
/// three-term recurrence with full reorthogonalization.
TridiagonalSym jacobi_from_measure(const SpectralMeasure& mu);

/// | log prod b_k^{2(n-k)} - log( prod q_i^2 prod_{i<j} (l_i-l_j)^2 ) |,
/// both sides in the log domain.
Scalar spectral_map_residual(const TridiagonalSym& T);

/// (lambda_max(T), lambda_max(T[1,m] + q r e_mm), lambda_max(T[m+1,n] +
/// (q/r) e_11)) where q = T_{m,m+1} and r is the top-eigenvector ratio
/// phi_{m+1}/phi_m; all three agree for Jacobi input. m is 1-based.
std::array<Scalar, 3> split_maxeig_identity(const TridiagonalSym& T, Index m);

/// CSV round-trip: two columns (diag, offdiag), the final offdiag cell empty.
void write_csv(const TridiagonalSym& T, std::ostream& out);
TridiagonalSym read_tridiagonal_csv(std::istream& in);

} // namespace edgelab
