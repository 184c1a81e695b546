#pragma once

#include <vector>

#include "edgelab/tridiagonal.hpp"
#include "edgelab/types.hpp"

namespace edgelab {

/// Symmetric banded matrix stored by diagonals: entry(i, i+d) for
/// 0 <= d <= halfwidth. Products of polynomials of one tridiagonal matrix
/// stay symmetric, so the half band is enough.
class BandedSym {
public:
    BandedSym(Index n, Index halfwidth)
        : n_(n), w_(halfwidth), data_(MatrixX::Zero(n, halfwidth + 1)) {}

    Index size() const { return n_; }
    Index halfwidth() const { return w_; }

    Scalar at(Index i, Index j) const {
        Index d = j - i;
        if (d < 0) {
            i = j;
            d = -d;
        }
        if (d > w_ || i < 0 || i + d >= n_) return 0.0;
        return data_(i, d);
    }

    Scalar& entry(Index i, Index d) { return data_(i, d); }
    Scalar entry(Index i, Index d) const { return data_(i, d); }

    Scalar trace() const {
        Scalar t = 0;
        for (Index i = 0; i < n_; ++i) t += data_(i, 0);
        return t;
    }

    VectorX diagonal() const { return data_.col(0); }
    VectorX superdiagonal() const {
        if (w_ < 1) return VectorX::Zero(std::max<Index>(n_ - 1, 0));
        return data_.col(1).head(n_ - 1);
    }

private:
    Index n_, w_;
    MatrixX data_;  // data_(i, d) = entry (i, i+d)
};

/// p(T) for a polynomial p given by ascending coefficients, via banded
/// Horner; the result has halfwidth deg p and costs O(n deg^2).
BandedSym tridiag_poly(const TridiagonalSym& T, const std::vector<Scalar>& coeffs);

/// Powers T^0 .. T^pmax as banded matrices (used for Hessians of tr V(T)).
std::vector<BandedSym> tridiag_powers(const TridiagonalSym& T, Index pmax);

} // namespace edgelab
