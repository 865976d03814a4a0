#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "wassdep/errors.hpp"

namespace wassdep {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Scale-relative tolerance for PSD admission: eigenvalues in
/// [-tol, 0) are treated as roundoff and clamped to zero.
inline double psd_tolerance(double lambda_max) {
    return 1e-10 * (1.0 + std::abs(lambda_max));
}

/// Dense real symmetric matrix. Symmetry is enforced at construction by
/// averaging A and A^T, so entry(i,j) == entry(j,i) holds exactly.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(const Matrix& a) {
        if (a.rows() != a.cols())
            throw DimensionMismatch("SymMatrix: input is " + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + ", expected square");
        if (!a.allFinite())
            throw DomainError("SymMatrix: input contains NaN or Inf");
        mat_ = 0.5 * (a + a.transpose());
    }

    static SymMatrix identity(Eigen::Index d) { return SymMatrix(Matrix::Identity(d, d)); }

    static SymMatrix diagonal(const Vector& v) {
        return SymMatrix(Matrix(v.asDiagonal()));
    }

    Eigen::Index dim() const { return mat_.rows(); }
    const Matrix& mat() const { return mat_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return mat_(i, j); }
    double trace() const { return mat_.trace(); }

private:
    Matrix mat_;
};

/// Eigendecomposition of a SymMatrix: values sorted descending, columns of
/// `vectors` are the matching orthonormal eigenvectors. Each eigenvector's
/// entry of largest magnitude is made positive so serialized output is
/// deterministic.
struct EigenSystem {
    Vector values;
    Matrix vectors;

    Matrix reconstruct() const { return vectors * values.asDiagonal() * vectors.transpose(); }
};

inline EigenSystem sym_eigen(const SymMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a.mat());
    if (solver.info() != Eigen::Success)
        throw IterationFailure("sym_eigen: eigensolver did not converge");

    const Eigen::Index d = a.dim();
    EigenSystem es;
    es.values = solver.eigenvalues().reverse();
    es.vectors = solver.eigenvectors().rowwise().reverse();
    for (Eigen::Index k = 0; k < d; ++k) {
        Eigen::Index imax = 0;
        es.vectors.col(k).cwiseAbs().maxCoeff(&imax);
        if (es.vectors(imax, k) < 0.0) es.vectors.col(k) = -es.vectors.col(k);
    }
    return es;
}

namespace detail {

/// Validates a descending spectrum against -psd_tolerance and returns it with
/// roundoff negatives clamped to zero.
inline Vector validated_psd(const Vector& lam, const char* where) {
    const double tol = psd_tolerance(lam.size() > 0 ? lam(0) : 0.0);
    if (lam.size() > 0 && lam(lam.size() - 1) < -tol)
        throw NotPositiveSemidefinite(std::string(where) + ": smallest eigenvalue " +
                                      std::to_string(lam(lam.size() - 1)) + " below -" +
                                      std::to_string(tol));
    return lam.cwiseMax(0.0);
}

/// Eigenvalues of `a`, descending, validated against -psd_tolerance and
/// clamped to be nonnegative.
inline Vector psd_eigenvalues(const SymMatrix& a, const char* where) {
    return validated_psd(sym_eigen(a).values, where);
}

/// Spectral function f applied through the eigendecomposition, with PSD
/// validation and clamping of roundoff-negative eigenvalues.
template <typename F>
Matrix apply_psd_spectral(const SymMatrix& a, F&& f, const char* where) {
    EigenSystem es = sym_eigen(a);
    const double tol = psd_tolerance(es.values.size() > 0 ? es.values(0) : 0.0);
    Vector lam = es.values;
    for (Eigen::Index j = 0; j < lam.size(); ++j) {
        if (lam(j) < -tol)
            throw NotPositiveSemidefinite(std::string(where) + ": smallest eigenvalue " +
                                          std::to_string(lam(j)) + " below -" + std::to_string(tol));
        lam(j) = f(std::max(lam(j), 0.0));
    }
    Matrix out = es.vectors * lam.asDiagonal() * es.vectors.transpose();
    return 0.5 * (out + out.transpose());
}

} // namespace detail

/// Positive semi-definite square root, eigen-route. Eigenvalues within the
/// PSD tolerance of zero are clamped to zero.
inline SymMatrix sqrt_psd(const SymMatrix& a) {
    return SymMatrix(detail::apply_psd_spectral(a, [](double l) { return std::sqrt(l); }, "sqrt_psd"));
}

/// Inverse square root of a positive definite matrix.
inline SymMatrix inv_sqrt_pd(const SymMatrix& a) {
    EigenSystem es = sym_eigen(a);
    const double tol = psd_tolerance(es.values(0));
    if (es.values(es.values.size() - 1) <= tol)
        throw NotPositiveDefinite("inv_sqrt_pd: smallest eigenvalue " +
                                  std::to_string(es.values(es.values.size() - 1)) +
                                  " not above " + std::to_string(tol));
    Vector lam = es.values.unaryExpr([](double l) { return 1.0 / std::sqrt(l); });
    Matrix out = es.vectors * lam.asDiagonal() * es.vectors.transpose();
    return SymMatrix(out);
}

/// trace(A^{1/2}) via the clamped eigenvalues.
inline double trace_sqrt_psd(const SymMatrix& a) {
    return detail::psd_eigenvalues(a, "trace_sqrt_psd").cwiseSqrt().sum();
}

/// Squared Bures-Wasserstein distance
///   d_W^2(A, B) = trace(A) + trace(B) - 2 trace((A^{1/2} B A^{1/2})^{1/2}),
/// clamped at zero from below so downstream ratios stay in [0, 1].
inline double bures_wasserstein_sq(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim())
        throw DimensionMismatch("bures_wasserstein_sq: dimensions " + std::to_string(a.dim()) +
                                " and " + std::to_string(b.dim()) + " differ");
    const Matrix s = sqrt_psd(a).mat();
    detail::psd_eigenvalues(b, "bures_wasserstein_sq");
    const SymMatrix cross(Matrix(s * b.mat() * s));
    const double t = a.trace() + b.trace() - 2.0 * trace_sqrt_psd(cross);
    return std::max(t, 0.0);
}

/// Derivative of B |-> B^{1/2} at positive definite B in direction H:
/// the solution X of the Sylvester equation B^{1/2} X + X B^{1/2} = H,
/// solved in the eigenbasis of B where X~_ij = H~_ij / (sqrt(l_i) + sqrt(l_j)).
inline SymMatrix frechet_sqrt(const SymMatrix& b, const SymMatrix& h) {
    if (b.dim() != h.dim())
        throw DimensionMismatch("frechet_sqrt: dimensions differ");
    EigenSystem es = sym_eigen(b);
    const double tol = psd_tolerance(es.values(0));
    if (es.values(es.values.size() - 1) <= tol)
        throw NotPositiveDefinite("frechet_sqrt: B must be positive definite");
    const Vector rt = es.values.cwiseSqrt();
    Matrix ht = es.vectors.transpose() * h.mat() * es.vectors;
    for (Eigen::Index i = 0; i < b.dim(); ++i)
        for (Eigen::Index j = 0; j < b.dim(); ++j) ht(i, j) /= rt(i) + rt(j);
    return SymMatrix(Matrix(es.vectors * ht * es.vectors.transpose()));
}

/// Optimal-transport map J = A^{-1/2} (A^{1/2} B A^{1/2})^{1/2} A^{-1/2},
/// the unique positive definite solution of J A J = B.
inline SymMatrix transport_map(const SymMatrix& a, const SymMatrix& b) {
    const Matrix ai = inv_sqrt_pd(a).mat();
    const Matrix as = sqrt_psd(a).mat();
    const SymMatrix inner(Matrix(as * b.mat() * as));
    const Matrix inner_sqrt = sqrt_psd(inner).mat();
    return SymMatrix(Matrix(ai * inner_sqrt * ai));
}

/// Directional derivative of d_W^2 at positive definite (A, B) in direction
/// (G, H): trace((I - J) G) + trace((I - J^{-1}) H) with J as above and
/// J^{-1} = A^{1/2} (A^{1/2} B A^{1/2})^{-1/2} A^{1/2}.
inline double frechet_bures(const SymMatrix& a, const SymMatrix& b,
                            const SymMatrix& g, const SymMatrix& h) {
    if (a.dim() != b.dim() || a.dim() != g.dim() || a.dim() != h.dim())
        throw DimensionMismatch("frechet_bures: dimensions differ");
    const Eigen::Index d = a.dim();
    const Matrix as = sqrt_psd(a).mat();
    const Matrix ai = inv_sqrt_pd(a).mat();
    const SymMatrix inner(Matrix(as * b.mat() * as));
    const Matrix inner_inv_sqrt = inv_sqrt_pd(inner).mat();
    const Matrix inner_sqrt = sqrt_psd(inner).mat();
    const Matrix j = ai * inner_sqrt * ai;
    const Matrix j_inv = as * inner_inv_sqrt * as;
    const Matrix id = Matrix::Identity(d, d);
    return ((id - j) * g.mat()).trace() + ((id - j_inv) * h.mat()).trace();
}

} // namespace wassdep
