#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wassdep/linalg.hpp"
#include "wassdep/rng.hpp"

namespace wassdep {

/// A positive semi-definite matrix partitioned into a leading p x p block and
/// a trailing q x q block:
///   Sigma = [ Sigma1  Psi  ]
///           [ Psi^T  Sigma2 ].
class BlockPartition {
public:
    BlockPartition(SymMatrix sigma, Eigen::Index p, Eigen::Index q)
        : sigma_(std::move(sigma)), p_(p), q_(q) {
        if (p < 1 || q < 1 || p + q != sigma_.dim())
            throw DimensionMismatch("BlockPartition: p = " + std::to_string(p) + ", q = " +
                                    std::to_string(q) + " incompatible with dimension " +
                                    std::to_string(sigma_.dim()));
        detail::psd_eigenvalues(sigma_, "BlockPartition");
        if (sigma1().mat().cwiseAbs().maxCoeff() == 0.0 ||
            sigma2().mat().cwiseAbs().maxCoeff() == 0.0)
            throw DegenerateDenominator("BlockPartition: a diagonal block is zero");
    }

    const SymMatrix& sigma() const { return sigma_; }
    Eigen::Index p() const { return p_; }
    Eigen::Index q() const { return q_; }
    Eigen::Index dim() const { return sigma_.dim(); }

    SymMatrix sigma1() const { return SymMatrix(Matrix(sigma_.mat().topLeftCorner(p_, p_))); }
    SymMatrix sigma2() const { return SymMatrix(Matrix(sigma_.mat().bottomRightCorner(q_, q_))); }
    Matrix psi() const { return sigma_.mat().topRightCorner(p_, q_); }

    /// Block-diagonal matrix of an independent coupling with the same blocks.
    SymMatrix sigma0() const {
        Matrix out = Matrix::Zero(dim(), dim());
        out.topLeftCorner(p_, p_) = sigma_.mat().topLeftCorner(p_, p_);
        out.bottomRightCorner(q_, q_) = sigma_.mat().bottomRightCorner(q_, q_);
        return SymMatrix(out);
    }

private:
    SymMatrix sigma_;
    Eigen::Index p_;
    Eigen::Index q_;
};

namespace detail {

/// Sorted-descending vector (lambda_{j,1} + lambda_{j,2})_j with the shorter
/// spectrum zero-padded; these are the nonzero eigenvalues of Sigma_m.
inline Vector padded_eigenvalue_sums(const Vector& l1, const Vector& l2) {
    const Eigen::Index m = std::max(l1.size(), l2.size());
    Vector out = Vector::Zero(m);
    for (Eigen::Index j = 0; j < m; ++j)
        out(j) = (j < l1.size() ? l1(j) : 0.0) + (j < l2.size() ? l2(j) : 0.0);
    std::sort(out.data(), out.data() + m, std::greater<double>());
    return out;
}

} // namespace detail

/// True iff y majorizes x: every partial sum of the descending-sorted y
/// dominates the matching partial sum of x (slack 1e-10) and the totals
/// agree within 1e-10.
inline bool majorizes(Vector x, Vector y) {
    if (x.size() != y.size())
        throw DimensionMismatch("majorizes: vector lengths differ");
    std::sort(x.data(), x.data() + x.size(), std::greater<double>());
    std::sort(y.data(), y.data() + y.size(), std::greater<double>());
    constexpr double slack = 1e-10;
    double sx = 0.0, sy = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        sx += x(k);
        sy += y(k);
        if (k + 1 < x.size() && sx > sy + slack) return false;
    }
    return std::abs(sx - sy) <= slack;
}

/// The coupling of Sigma1 and Sigma2 whose eigenvalues majorize those of
/// every other coupling with the same diagonal blocks:
///   Psi_m = U_1 Lambda_1^{1/2} Pi Lambda_2^{1/2} U_2^T,
/// with Pi the p x q corner of the identity. Its sorted eigenvalues are
/// (lambda_{j,1} + lambda_{j,2})_j zero-padded, which is re-verified here
/// before returning.
inline SymMatrix sigma_m(const SymMatrix& sigma1, const SymMatrix& sigma2) {
    const Eigen::Index p = sigma1.dim();
    const Eigen::Index q = sigma2.dim();
    EigenSystem e1 = sym_eigen(sigma1);
    EigenSystem e2 = sym_eigen(sigma2);
    const Vector l1 = detail::validated_psd(e1.values, "sigma_m");
    const Vector l2 = detail::validated_psd(e2.values, "sigma_m");

    const Eigen::Index r = std::min(p, q);
    // Lambda_1^{1/2} Pi Lambda_2^{1/2} keeps only the first min(p, q) scores.
    Matrix core = Matrix::Zero(p, q);
    for (Eigen::Index j = 0; j < r; ++j)
        core(j, j) = std::sqrt(std::max(l1(j), 0.0)) * std::sqrt(std::max(l2(j), 0.0));
    const Matrix psi_m = e1.vectors * core * e2.vectors.transpose();

    Matrix out(p + q, p + q);
    out.topLeftCorner(p, p) = sigma1.mat();
    out.topRightCorner(p, q) = psi_m;
    out.bottomLeftCorner(q, p) = psi_m.transpose();
    out.bottomRightCorner(q, q) = sigma2.mat();
    SymMatrix result(out);

    const Vector expect = detail::padded_eigenvalue_sums(l1, l2);
    Vector got = sym_eigen(result).values;
    double dev = 0.0;
    for (Eigen::Index j = 0; j < got.size(); ++j)
        dev = std::max(dev, std::abs(got(j) - (j < expect.size() ? expect(j) : 0.0)));
    if (dev > 1e-9 * (1.0 + expect(0)))
        throw IterationFailure("sigma_m: eigenvalue self-check failed, deviation " +
                               std::to_string(dev));
    return result;
}

/// von Neumann entropy -trace(Sigma log Sigma) = -sum_j lambda_j log lambda_j,
/// with 0 log 0 taken as 0.
inline double von_neumann_entropy(const SymMatrix& sigma) {
    const Vector lam = detail::psd_eigenvalues(sigma, "von_neumann_entropy");
    double s = 0.0;
    for (Eigen::Index j = 0; j < lam.size(); ++j)
        if (lam(j) > 0.0) s -= lam(j) * std::log(lam(j));
    return s;
}

/// Random member of the coupling set Gamma(Sigma1, Sigma2): the cross block is
/// Sigma1^{1/2} C Sigma2^{1/2} with C a random p x q contraction (largest
/// singular value at most u, u uniform on [0,1]), which parameterizes exactly
/// the positive semi-definite couplings. Deterministic given the seed.
inline SymMatrix random_coupling(const SymMatrix& sigma1, const SymMatrix& sigma2,
                                 std::uint64_t seed) {
    const Eigen::Index p = sigma1.dim();
    const Eigen::Index q = sigma2.dim();
    const Matrix s1 = sqrt_psd(sigma1).mat();
    const Matrix s2 = sqrt_psd(sigma2).mat();

    Rng rng(seed);
    Matrix c(p, q);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < q; ++j) c(i, j) = rng.next_normal();
    const double u = rng.next_uniform();
    const double smax = c.jacobiSvd().singularValues()(0);
    if (smax > 0.0) c *= u / smax;

    const Matrix psi = s1 * c * s2;
    Matrix out(p + q, p + q);
    out.topLeftCorner(p, p) = sigma1.mat();
    out.topRightCorner(p, q) = psi;
    out.bottomLeftCorner(q, p) = psi.transpose();
    out.bottomRightCorner(q, q) = sigma2.mat();
    return SymMatrix(out);
}

} // namespace wassdep
