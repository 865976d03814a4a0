#pragma once

#include <cmath>
#include <string>

#include "wassdep/coefficients.hpp"

namespace wassdep {

/// Relative spacing below which consecutive block eigenvalues count as
/// repeated; the coefficient derivatives are not linear there.
inline constexpr double kEigenGapTol = 1e-8;

/// Frechet derivative of a dependence coefficient at Sigma, packaged as the
/// matrix M of the linear form H |-> trace(M H), together with the pieces it
/// is assembled from.
struct DerivativePack {
    SymMatrix m;        // derivative matrix M_r
    double c = 0.0;     // coefficient denominator c_r
    double value = 0.0; // D_r(Sigma)
    SymMatrix upsilon;  // derivative of the denominator trace term
    SymMatrix j;        // transport map from Sigma0 to Sigma (r = 2 only)
    SymMatrix j0;       // block-diagonal part of j (r = 2 only)
    Vector delta1;      // diagonal of Delta_1 (r=1) or Delta_1' (r=2)
    Vector delta2;      // diagonal of Delta_2 (r=1) or Delta_2' (r=2)
};

namespace detail {

/// Throws unless the descending spectrum has strictly separated entries.
inline void require_distinct(const Vector& lam, const char* which) {
    const double scale = 1.0 + (lam.size() > 0 ? std::abs(lam(0)) : 0.0);
    for (Eigen::Index j = 0; j + 1 < lam.size(); ++j)
        if (lam(j) - lam(j + 1) < kEigenGapTol * scale)
            throw DegenerateEigenvalues(std::string(which) +
                                        " has (nearly) repeated eigenvalues at index " +
                                        std::to_string(j));
}

inline void require_pd(const Vector& lam, const char* where) {
    const double tol = psd_tolerance(lam(0));
    if (lam(lam.size() - 1) <= tol)
        throw NotPositiveDefinite(std::string(where) + ": matrix is not positive definite");
}

inline Matrix block_diag(const Matrix& a, const Matrix& b) {
    Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

inline double padded(const Vector& v, Eigen::Index j) { return j < v.size() ? v(j) : 0.0; }

struct BlockEigen {
    EigenSystem es, e1, e2;
    Vector l;  // spectrum of Sigma, descending
    Vector l1; // spectrum of Sigma1
    Vector l2; // spectrum of Sigma2

    BlockEigen(const BlockPartition& part, const char* where) {
        es = sym_eigen(part.sigma());
        l = es.values;
        require_pd(l, where);
        e1 = sym_eigen(part.sigma1());
        e2 = sym_eigen(part.sigma2());
        l1 = e1.values;
        l2 = e2.values;
        require_distinct(l1, "first block");
        require_distinct(l2, "second block");
    }

    Matrix sigma_inv_sqrt() const {
        const Vector inv_rt = l.unaryExpr([](double v) { return 1.0 / std::sqrt(v); });
        return es.vectors * inv_rt.asDiagonal() * es.vectors.transpose();
    }
};

} // namespace detail

/// Derivative of D1 at the partitioned positive definite Sigma, requiring
/// distinct eigenvalues within each diagonal block:
///   M1 = (1 / 2 c1) ( -Sigma^{-1/2} + (1 - D1) Sigma0^{-1/2} + D1 Upsilon_1 ).
inline DerivativePack m1_matrix(const BlockPartition& part) {
    detail::BlockEigen be(part, "m1_matrix");
    const Eigen::Index p = part.p(), q = part.q();

    DerivativePack pack;
    pack.value = detail::d1_from_spectra(be.l, be.l1, be.l2, "m1_matrix");

    const double blocks = detail::sum_sqrt(be.l1) + detail::sum_sqrt(be.l2);
    pack.c = blocks - detail::sum_sqrt(detail::padded_eigenvalue_sums(be.l1, be.l2));
    if (pack.c < 1e-12) throw DegenerateDenominator("m1_matrix: zero denominator");

    pack.delta1 = Vector(p);
    for (Eigen::Index j = 0; j < p; ++j)
        pack.delta1(j) = 1.0 / std::sqrt(be.l1(j) + detail::padded(be.l2, j));
    pack.delta2 = Vector(q);
    for (Eigen::Index j = 0; j < q; ++j)
        pack.delta2(j) = 1.0 / std::sqrt(detail::padded(be.l1, j) + be.l2(j));

    const Matrix ups = detail::block_diag(
        be.e1.vectors * pack.delta1.asDiagonal() * be.e1.vectors.transpose(),
        be.e2.vectors * pack.delta2.asDiagonal() * be.e2.vectors.transpose());
    pack.upsilon = SymMatrix(ups);

    const Matrix sigma_isqrt = be.sigma_inv_sqrt();
    const Matrix sigma0_isqrt = detail::block_diag(
        inv_sqrt_pd(part.sigma1()).mat(), inv_sqrt_pd(part.sigma2()).mat());

    Matrix m = (-sigma_isqrt + (1.0 - pack.value) * sigma0_isqrt + pack.value * ups) /
               (2.0 * pack.c);
    pack.m = SymMatrix(m);
    return pack;
}

/// Derivative of D2 at the partitioned positive definite Sigma:
///   M2 = (1 / c2) ( -(J0 + J^{-1})/2 + (1 - D2) I + D2 Upsilon_2 ),
/// with J the transport map from Sigma0 to Sigma, J0 its block-diagonal part.
inline DerivativePack m2_matrix(const BlockPartition& part) {
    detail::BlockEigen be(part, "m2_matrix");
    const Eigen::Index p = part.p(), q = part.q(), d = part.dim();

    DerivativePack pack;
    const Vector kappa = detail::kappa_eigenvalues(part);
    pack.value = detail::d2_from_spectra(part.sigma().trace(), kappa, be.l1, be.l2, "m2_matrix");

    const Vector sq_sums = detail::padded_eigenvalue_sums(
        Vector(be.l1.cwiseProduct(be.l1)), Vector(be.l2.cwiseProduct(be.l2)));
    pack.c = part.sigma().trace() - detail::sum_sqrt(sq_sums);
    if (pack.c < 1e-12) throw DegenerateDenominator("m2_matrix: zero denominator");

    pack.delta1 = Vector(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double l2j = detail::padded(be.l2, j);
        pack.delta1(j) = be.l1(j) / std::sqrt(be.l1(j) * be.l1(j) + l2j * l2j);
    }
    pack.delta2 = Vector(q);
    for (Eigen::Index j = 0; j < q; ++j) {
        const double l1j = detail::padded(be.l1, j);
        pack.delta2(j) = be.l2(j) / std::sqrt(l1j * l1j + be.l2(j) * be.l2(j));
    }

    const Matrix ups = detail::block_diag(
        be.e1.vectors * pack.delta1.asDiagonal() * be.e1.vectors.transpose(),
        be.e2.vectors * pack.delta2.asDiagonal() * be.e2.vectors.transpose());
    pack.upsilon = SymMatrix(ups);

    // J = Sigma0^{-1/2} (Sigma0^{1/2} Sigma Sigma0^{1/2})^{1/2} Sigma0^{-1/2}
    const SymMatrix sigma0 = part.sigma0();
    const Matrix s0 = sqrt_psd(sigma0).mat();
    const Matrix s0i = detail::block_diag(
        inv_sqrt_pd(part.sigma1()).mat(), inv_sqrt_pd(part.sigma2()).mat());
    const SymMatrix inner(Matrix(s0 * part.sigma().mat() * s0));
    const Matrix j = s0i * sqrt_psd(inner).mat() * s0i;
    const Matrix j_inv = s0 * inv_sqrt_pd(inner).mat() * s0;
    pack.j = SymMatrix(j);

    const double scale = 1.0 + part.sigma().mat().cwiseAbs().maxCoeff();
    const double resid =
        (pack.j.mat() * sigma0.mat() * pack.j.mat() - part.sigma().mat()).cwiseAbs().maxCoeff();
    if (resid > 1e-8 * scale)
        throw IterationFailure("m2_matrix: transport map residual " + std::to_string(resid));

    Matrix j0 = Matrix::Zero(d, d);
    j0.topLeftCorner(p, p) = pack.j.mat().topLeftCorner(p, p);
    j0.bottomRightCorner(q, q) = pack.j.mat().bottomRightCorner(q, q);
    pack.j0 = SymMatrix(j0);

    Matrix m = (-0.5 * (j0 + j_inv) + (1.0 - pack.value) * Matrix::Identity(d, d) +
                pack.value * ups) /
               pack.c;
    pack.m = SymMatrix(m);
    return pack;
}

/// Derivative matrix of the composite map Sigma -> D_r(corr(Sigma)) at a
/// correlation matrix R: M - D_{MR}, where D_{MR} is the diagonal matrix
/// holding the diagonal of M R.
inline SymMatrix correlation_adjust(const SymMatrix& r, const SymMatrix& m) {
    if (r.dim() != m.dim())
        throw DimensionMismatch("correlation_adjust: dimensions differ");
    for (Eigen::Index j = 0; j < r.dim(); ++j)
        if (std::abs(r(j, j) - 1.0) > 1e-8)
            throw DomainError("correlation_adjust: R lacks a unit diagonal at index " +
                              std::to_string(j));
    const Vector diag_mr = (m.mat() * r.mat()).diagonal();
    return SymMatrix(Matrix(m.mat() - Matrix(diag_mr.asDiagonal())));
}

/// Asymptotic variance of the plug-in estimator sqrt(n) (D_r(R_n) - D_r(R)),
/// valid for both the Gaussian-data and the Gaussian-copula estimator:
///   zeta_r^2 = 2 trace( (R (M_R - D_{M_R R}))^2 ).
inline double asymptotic_variance(const SymMatrix& r, Eigen::Index p, Eigen::Index q,
                                  CoefficientKind kind) {
    if (kind != CoefficientKind::D1 && kind != CoefficientKind::D2)
        throw DomainError("asymptotic_variance: only d1 and d2 have asymptotic theory");
    const BlockPartition part(r, p, q);
    const DerivativePack pack =
        kind == CoefficientKind::D1 ? m1_matrix(part) : m2_matrix(part);
    const Matrix k = correlation_adjust(r, pack.m).mat();
    const Matrix rk = r.mat() * k;
    return std::max(2.0 * (rk * rk).trace(), 0.0);
}

} // namespace wassdep
