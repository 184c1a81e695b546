#include "edgelab/matrix_poly.hpp"

namespace edgelab {

namespace {

// C = T * B, widening the band by one. T and B commute (B is a polynomial of
// T), so C is symmetric and the half band representation stays valid.
BandedSym tridiag_times(const TridiagonalSym& T, const BandedSym& B) {
    const Index n = T.size();
    BandedSym C(n, B.halfwidth() + 1);
    for (Index i = 0; i < n; ++i) {
        for (Index d = 0; d <= C.halfwidth(); ++d) {
            Index j = i + d;
            if (j >= n) break;
            Scalar acc = T.diag()(i) * B.at(i, j);
            if (i > 0) acc += T.offdiag()(i - 1) * B.at(i - 1, j);
            if (i + 1 < n) acc += T.offdiag()(i) * B.at(i + 1, j);
            C.entry(i, d) = acc;
        }
    }
    return C;
}

} // namespace

BandedSym tridiag_poly(const TridiagonalSym& T, const std::vector<Scalar>& coeffs) {
    const Index n = T.size();
    if (coeffs.empty()) return BandedSym(n, 0);
    Index m = static_cast<Index>(coeffs.size()) - 1;
    BandedSym B(n, 0);
    for (Index i = 0; i < n; ++i) B.entry(i, 0) = coeffs[m];
    for (Index j = m - 1; j >= 0; --j) {
        B = tridiag_times(T, B);
        for (Index i = 0; i < n; ++i) B.entry(i, 0) += coeffs[j];
    }
    return B;
}

std::vector<BandedSym> tridiag_powers(const TridiagonalSym& T, Index pmax) {
    std::vector<BandedSym> powers;
    powers.reserve(pmax + 1);
    BandedSym identity(T.size(), 0);
    for (Index i = 0; i < T.size(); ++i) identity.entry(i, 0) = 1.0;
    powers.push_back(std::move(identity));
    for (Index p = 1; p <= pmax; ++p) powers.push_back(tridiag_times(T, powers.back()));
    return powers;
}

} // namespace edgelab
