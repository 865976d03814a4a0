#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "wassdep/coupling.hpp"
#include "wassdep/linalg.hpp"

namespace wassdep {

enum class CoefficientKind { D1, D2, RV, RVADJ };

inline const char* to_string(CoefficientKind k) {
    switch (k) {
        case CoefficientKind::D1: return "d1";
        case CoefficientKind::D2: return "d2";
        case CoefficientKind::RV: return "rv";
        case CoefficientKind::RVADJ: return "rvadj";
    }
    return "?";
}

/// All four dependence coefficients plus the spectra they are built from.
struct CoefficientResult {
    double d1 = 0.0;
    double d2 = 0.0;
    double rv = 0.0;
    double rv_adj = 0.0;
    Vector eigen_sigma;   // eigenvalues of Sigma, descending
    Vector eigen_block1;  // eigenvalues of Sigma1
    Vector eigen_block2;  // eigenvalues of Sigma2
    Vector kappa;         // eigenvalues of Sigma0^{1/2} Sigma Sigma0^{1/2}
};

namespace detail {

inline double clamp01(double x) { return std::min(std::max(x, 0.0), 1.0); }

inline double ratio_or_throw(double num, double den, const char* where) {
    if (den < 1e-12)
        throw DegenerateDenominator(std::string(where) + ": denominator " + std::to_string(den) +
                                    " below 1e-12 (zero block)");
    return clamp01(num / den);
}

inline double sum_sqrt(const Vector& v) { return v.cwiseMax(0.0).cwiseSqrt().sum(); }

/// Eigenvalues of the symmetrized product Sigma0^{1/2} Sigma Sigma0^{1/2}.
inline Vector kappa_eigenvalues(const BlockPartition& part) {
    const Matrix s0 = sqrt_psd(part.sigma0()).mat();
    const SymMatrix prod(Matrix(s0 * part.sigma().mat() * s0));
    return validated_psd(sym_eigen(prod).values, "kappa");
}

inline double d1_from_spectra(const Vector& l, const Vector& l1, const Vector& l2,
                              const char* where) {
    const double blocks = sum_sqrt(l1) + sum_sqrt(l2);
    const double num = blocks - sum_sqrt(l);
    const double den = blocks - sum_sqrt(padded_eigenvalue_sums(l1, l2));
    return ratio_or_throw(num, den, where);
}

inline double d2_from_spectra(double trace_sigma, const Vector& kappa, const Vector& l1,
                              const Vector& l2, const char* where) {
    const Vector sq_sums = padded_eigenvalue_sums(
        Vector(l1.cwiseProduct(l1)), Vector(l2.cwiseProduct(l2)));
    const double num = trace_sigma - sum_sqrt(kappa);
    const double den = trace_sigma - sum_sqrt(sq_sums);
    return ratio_or_throw(num, den, where);
}

} // namespace detail

/// D1: excess Bures-Wasserstein cost of Sigma against the identity reference,
/// normalised by the maximally dependent coupling Sigma_m.
inline double d1(const BlockPartition& part) {
    const Vector l = detail::psd_eigenvalues(part.sigma(), "d1");
    const Vector l1 = detail::psd_eigenvalues(part.sigma1(), "d1");
    const Vector l2 = detail::psd_eigenvalues(part.sigma2(), "d1");
    return detail::d1_from_spectra(l, l1, l2, "d1");
}

/// D2: Bures-Wasserstein distance between Sigma and its independent coupling
/// Sigma0, normalised by the same distance at Sigma_m.
inline double d2(const BlockPartition& part) {
    const Vector l1 = detail::psd_eigenvalues(part.sigma1(), "d2");
    const Vector l2 = detail::psd_eigenvalues(part.sigma2(), "d2");
    const Vector kappa = detail::kappa_eigenvalues(part);
    return detail::d2_from_spectra(part.sigma().trace(), kappa, l1, l2, "d2");
}

/// Classical RV coefficient trace(Psi Psi^T) / sqrt(trace(Sigma1^2) trace(Sigma2^2)).
inline double rv(const BlockPartition& part) {
    const Matrix psi = part.psi();
    const double num = psi.squaredNorm();
    const double den = std::sqrt(part.sigma1().mat().squaredNorm() *
                                 part.sigma2().mat().squaredNorm());
    return detail::ratio_or_throw(num, den, "rv");
}

/// RV rescaled by its maximum over the coupling set,
/// trace(Psi_m Psi_m^T) = sum_{j <= min(p,q)} lambda_{j,1} lambda_{j,2},
/// so the range becomes exactly [0, 1].
inline double rv_adjusted(const BlockPartition& part) {
    const Vector l1 = detail::psd_eigenvalues(part.sigma1(), "rv_adjusted");
    const Vector l2 = detail::psd_eigenvalues(part.sigma2(), "rv_adjusted");
    const Eigen::Index r = std::min(l1.size(), l2.size());
    const double den = l1.head(r).dot(l2.head(r));
    return detail::ratio_or_throw(part.psi().squaredNorm(), den, "rv_adjusted");
}

/// Correlation matrix of a covariance matrix. The diagonal is set to one
/// exactly after rescaling.
inline SymMatrix cov_to_corr(const SymMatrix& sigma) {
    const Eigen::Index d = sigma.dim();
    Vector inv_sd(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double v = sigma(j, j);
        if (v <= 1e-12)
            throw ZeroVariance("cov_to_corr: diagonal entry " + std::to_string(j) +
                               " is " + std::to_string(v));
        inv_sd(j) = 1.0 / std::sqrt(v);
    }
    Matrix r = inv_sd.asDiagonal() * sigma.mat() * inv_sd.asDiagonal();
    for (Eigen::Index j = 0; j < d; ++j) r(j, j) = 1.0;
    return SymMatrix(r);
}

/// All four coefficients from one eigendecomposition pass per matrix.
inline CoefficientResult all_coefficients(const BlockPartition& part) {
    CoefficientResult res;
    res.eigen_sigma = detail::psd_eigenvalues(part.sigma(), "all_coefficients");
    res.eigen_block1 = detail::psd_eigenvalues(part.sigma1(), "all_coefficients");
    res.eigen_block2 = detail::psd_eigenvalues(part.sigma2(), "all_coefficients");
    res.kappa = detail::kappa_eigenvalues(part);

    res.d1 = detail::d1_from_spectra(res.eigen_sigma, res.eigen_block1, res.eigen_block2,
                                     "all_coefficients");
    res.d2 = detail::d2_from_spectra(part.sigma().trace(), res.kappa, res.eigen_block1,
                                     res.eigen_block2, "all_coefficients");

    const double cross = part.psi().squaredNorm();
    const double rv_den = std::sqrt(part.sigma1().mat().squaredNorm() *
                                    part.sigma2().mat().squaredNorm());
    res.rv = detail::ratio_or_throw(cross, rv_den, "all_coefficients");
    const Eigen::Index r = std::min(res.eigen_block1.size(), res.eigen_block2.size());
    res.rv_adj = detail::ratio_or_throw(
        cross, res.eigen_block1.head(r).dot(res.eigen_block2.head(r)), "all_coefficients");
    return res;
}

/// Single coefficient by kind.
inline double coefficient(const BlockPartition& part, CoefficientKind kind) {
    switch (kind) {
        case CoefficientKind::D1: return d1(part);
        case CoefficientKind::D2: return d2(part);
        case CoefficientKind::RV: return rv(part);
        case CoefficientKind::RVADJ: return rv_adjusted(part);
    }
    throw DomainError("coefficient: unknown kind");
}

} // namespace wassdep
