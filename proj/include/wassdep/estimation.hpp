#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wassdep/derivatives.hpp"
#include "wassdep/normal.hpp"

namespace wassdep {

enum class EstimatorKind { GaussianData, GaussianCopula };
enum class ShrinkageKind { None, DS1, DS2 };

inline const char* to_string(EstimatorKind k) {
    return k == EstimatorKind::GaussianData ? "gaussian" : "rank";
}

inline const char* to_string(ShrinkageKind k) {
    switch (k) {
        case ShrinkageKind::None: return "none";
        case ShrinkageKind::DS1: return "ds1";
        case ShrinkageKind::DS2: return "ds2";
    }
    return "?";
}

/// Observation matrix: n samples (rows) of a d-vector.
class DataMatrix {
public:
    explicit DataMatrix(Matrix rows) : rows_(std::move(rows)) {
        if (rows_.rows() < 3)
            throw SampleTooSmall("DataMatrix: need at least 3 observations, got " +
                                 std::to_string(rows_.rows()));
        if (!rows_.allFinite()) throw DomainError("DataMatrix: data contain NaN or Inf");
    }

    Eigen::Index n() const { return rows_.rows(); }
    Eigen::Index dim() const { return rows_.cols(); }
    const Matrix& rows() const { return rows_; }

    /// Per column, the number of observations sharing their value with
    /// another observation. Nonzero counts break the continuity assumption
    /// behind the rank-based estimator.
    std::vector<Eigen::Index> tie_counts() const {
        std::vector<Eigen::Index> counts(dim(), 0);
        std::vector<double> col(static_cast<std::size_t>(n()));
        for (Eigen::Index j = 0; j < dim(); ++j) {
            for (Eigen::Index i = 0; i < n(); ++i) col[static_cast<std::size_t>(i)] = rows_(i, j);
            std::sort(col.begin(), col.end());
            Eigen::Index tied = 0;
            for (std::size_t i = 0; i < col.size();) {
                std::size_t k = i + 1;
                while (k < col.size() && col[k] == col[i]) ++k;
                if (k - i > 1) tied += static_cast<Eigen::Index>(k - i);
                i = k;
            }
            counts[static_cast<std::size_t>(j)] = tied;
        }
        return counts;
    }

private:
    Matrix rows_;
};

/// Empirical correlation matrix from the empirical covariance with divisor n-1.
inline SymMatrix empirical_correlation(const DataMatrix& data) {
    const Eigen::Index n = data.n();
    const Matrix centered = data.rows().rowwise() - data.rows().colwise().mean();
    const Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    return cov_to_corr(SymMatrix(cov));
}

namespace detail {

/// Midranks of a column (ties get the average of the ranks they span).
inline std::vector<double> midranks(const Vector& col) {
    const std::size_t n = static_cast<std::size_t>(col.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return col(static_cast<Eigen::Index>(a)) <
                                                         col(static_cast<Eigen::Index>(b)); });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t k = i + 1;
        while (k < n && col(static_cast<Eigen::Index>(order[k])) ==
                            col(static_cast<Eigen::Index>(order[i])))
            ++k;
        const double mid = 0.5 * static_cast<double>(i + k - 1) + 1.0;
        for (std::size_t t = i; t < k; ++t) rank[order[t]] = mid;
        i = k;
    }
    return rank;
}

} // namespace detail

/// Matrix of normal scores rank correlation coefficients,
///   rho_jk = (1/n) sum_i Z_ij Z_ik / (1/n) sum_i qnorm(i/(n+1))^2
/// with Z_ij = qnorm(rank_ij / (n+1)). Ties are resolved by midranks; the
/// diagonal is forced to one. Exactly invariant under strictly increasing
/// per-column transformations.
inline SymMatrix normal_scores_correlation(const DataMatrix& data) {
    const Eigen::Index n = data.n();
    const Eigen::Index d = data.dim();

    // Scores for integer ranks; midranks from ties fall between them.
    std::vector<double> score(static_cast<std::size_t>(n) + 1, 0.0);
    double denom = 0.0;
    for (Eigen::Index i = 1; i <= n; ++i) {
        score[static_cast<std::size_t>(i)] = qnorm(static_cast<double>(i) / (n + 1.0));
        denom += score[static_cast<std::size_t>(i)] * score[static_cast<std::size_t>(i)];
    }

    Matrix z(n, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const std::vector<double> rank = detail::midranks(data.rows().col(j));
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = rank[static_cast<std::size_t>(i)];
            const double integral = std::nearbyint(r);
            z(i, j) = (r == integral) ? score[static_cast<std::size_t>(integral)]
                                      : qnorm(r / (n + 1.0));
        }
    }

    Matrix rho = (z.transpose() * z) / denom;
    rho = rho.cwiseMax(-1.0).cwiseMin(1.0);
    for (Eigen::Index j = 0; j < d; ++j) rho(j, j) = 1.0;
    return SymMatrix(rho);
}

namespace detail {

inline std::pair<EigenSystem, Vector> shrink_prepare(const SymMatrix& sigma_hat,
                                                     Eigen::Index n, const char* where) {
    const Eigen::Index d = sigma_hat.dim();
    if (n <= d + 1)
        throw SampleTooSmall(std::string(where) + ": need n > d + 1, got n = " +
                             std::to_string(n) + ", d = " + std::to_string(d));
    EigenSystem es = sym_eigen(sigma_hat);
    Vector l = validated_psd(es.values, where);
    return {std::move(es), std::move(l)};
}

/// Dey-Srinivasan order-dependent multiplier with the Wishart degrees of
/// freedom taken as m = n - 1 (the empirical covariance uses divisor n - 1):
/// eigenvalue j (1-based, descending) is scaled by m / (m + d + 1 - 2j).
inline double ds_multiplier(Eigen::Index n, Eigen::Index d, Eigen::Index j1) {
    const double m = static_cast<double>(n - 1);
    return m / (m + static_cast<double>(d) + 1.0 - 2.0 * static_cast<double>(j1));
}

} // namespace detail

/// DS1 eigenvalue shrinkage: keeps the eigenvectors and rescales eigenvalue j
/// by (n-1)/((n-1) + d + 1 - 2j), so the top of the spectrum is shrunk and
/// the bottom inflated.
inline SymMatrix shrink_ds1(const SymMatrix& sigma_hat, Eigen::Index n) {
    auto [es, l] = detail::shrink_prepare(sigma_hat, n, "shrink_ds1");
    const Eigen::Index d = sigma_hat.dim();
    for (Eigen::Index j = 0; j < d; ++j) l(j) *= detail::ds_multiplier(n, d, j + 1);
    return SymMatrix(Matrix(es.vectors * l.asDiagonal() * es.vectors.transpose()));
}

/// DS2 shrinkage: DS1 plus the entropy-loss correction
///   - (l_j log l_j) tau / (b1 + u),
/// with u = sum_j (log l_j)^2, b1 = 5.8 (d-2)^2 / (m+d-1) and
/// tau = 1.2 (d-2) / (m+d-1)^2 at m = n - 1. Identical to DS1 when d = 2.
inline SymMatrix shrink_ds2(const SymMatrix& sigma_hat, Eigen::Index n) {
    auto [es, l] = detail::shrink_prepare(sigma_hat, n, "shrink_ds2");
    const Eigen::Index d = sigma_hat.dim();
    if (l(d - 1) <= 0.0)
        throw NotPositiveDefinite("shrink_ds2: zero eigenvalue, log-correction undefined");

    const double m = static_cast<double>(n - 1);
    const double dd = static_cast<double>(d);
    const double b1 = 5.8 * (dd - 2.0) * (dd - 2.0) / (m + dd - 1.0);
    const double tau = 1.2 * (dd - 2.0) / ((m + dd - 1.0) * (m + dd - 1.0));
    double u = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) u += std::log(l(j)) * std::log(l(j));

    Vector out(d);
    for (Eigen::Index j = 0; j < d; ++j)
        out(j) = detail::ds_multiplier(n, d, j + 1) * l(j) -
                 (l(j) * std::log(l(j))) * tau / (b1 + u);
    return SymMatrix(Matrix(es.vectors * out.asDiagonal() * es.vectors.transpose()));
}

/// Point estimate with a studentized confidence interval.
struct EstimateReport {
    CoefficientKind kind = CoefficientKind::D1;
    double estimate = 0.0;
    std::optional<double> zeta;  // estimated asymptotic standard deviation
    std::optional<double> lower; // CI bounds, clipped to [0, 1]
    std::optional<double> upper;
    Eigen::Index n = 0;
    double alpha = 0.05;
    EstimatorKind estimator = EstimatorKind::GaussianData;
    ShrinkageKind shrinkage = ShrinkageKind::None;
    bool degenerate = false; // repeated block eigenvalues: CI omitted
    std::vector<std::string> warnings;
};

inline SymMatrix estimate_correlation(const DataMatrix& data, EstimatorKind estimator,
                                      ShrinkageKind shrinkage,
                                      std::vector<std::string>* warnings = nullptr) {
    SymMatrix r = estimator == EstimatorKind::GaussianData ? empirical_correlation(data)
                                                           : normal_scores_correlation(data);
    if (estimator == EstimatorKind::GaussianCopula && warnings != nullptr) {
        const auto ties = data.tie_counts();
        for (std::size_t j = 0; j < ties.size(); ++j)
            if (ties[j] > 0)
                warnings->push_back("TiesWarning: column " + std::to_string(j + 1) + " has " +
                                    std::to_string(ties[j]) +
                                    " tied values; midranks were used");
    }
    if (shrinkage == ShrinkageKind::DS1) r = cov_to_corr(shrink_ds1(r, data.n()));
    if (shrinkage == ShrinkageKind::DS2) r = cov_to_corr(shrink_ds2(r, data.n()));
    return r;
}

/// Coefficient estimate with the asymptotic confidence interval
///   [ D_r(R_n) +- z_{1-alpha/2} zeta_n / sqrt(n) ]  intersected with [0, 1].
/// With shrinkage, both the estimate and zeta_n use the shrunk and
/// re-standardised matrix. For rv/rvadj, and whenever the derivative is
/// unavailable (repeated block eigenvalues), the point estimate is reported
/// with the interval omitted.
inline EstimateReport estimate_with_ci(const DataMatrix& data, Eigen::Index p, Eigen::Index q,
                                       CoefficientKind kind, EstimatorKind estimator,
                                       ShrinkageKind shrinkage, double alpha) {
    if (p + q != data.dim())
        throw DimensionMismatch("estimate_with_ci: p + q = " + std::to_string(p + q) +
                                " but data dimension is " + std::to_string(data.dim()));
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw DomainError("estimate_with_ci: alpha outside (0, 1]");

    EstimateReport report;
    report.kind = kind;
    report.n = data.n();
    report.alpha = alpha;
    report.estimator = estimator;
    report.shrinkage = shrinkage;

    const SymMatrix r = estimate_correlation(data, estimator, shrinkage, &report.warnings);
    const BlockPartition part(r, p, q);
    report.estimate = coefficient(part, kind);

    if (kind == CoefficientKind::D1 || kind == CoefficientKind::D2) {
        try {
            const double zeta = std::sqrt(asymptotic_variance(r, p, q, kind));
            const double z = alpha == 1.0 ? 0.0 : qnorm(1.0 - alpha / 2.0);
            const double half = z * zeta / std::sqrt(static_cast<double>(data.n()));
            report.zeta = zeta;
            report.lower = std::max(0.0, report.estimate - half);
            report.upper = std::min(1.0, report.estimate + half);
        } catch (const DegenerateEigenvalues&) {
            report.degenerate = true;
        }
    }
    return report;
}

/// Two-sample confidence interval for the difference of coefficients,
/// assuming independent samples:
///   (est_a - est_b) +- z_{1-alpha/2} sqrt(zeta_a^2/n_a + zeta_b^2/n_b).
/// Not clipped: the difference lives in [-1, 1].
inline std::pair<double, double> two_sample_difference_ci(const EstimateReport& a,
                                                          const EstimateReport& b,
                                                          double alpha) {
    if (a.kind != b.kind)
        throw KindMismatch("two_sample_difference_ci: reports estimate different coefficients");
    if (!a.zeta || !b.zeta)
        throw DomainError("two_sample_difference_ci: a report lacks a variance estimate");
    const double diff = a.estimate - b.estimate;
    const double z = alpha == 1.0 ? 0.0 : qnorm(1.0 - alpha / 2.0);
    const double half = z * std::sqrt(*a.zeta * *a.zeta / static_cast<double>(a.n) +
                                      *b.zeta * *b.zeta / static_cast<double>(b.n));
    return {diff - half, diff + half};
}

} // namespace wassdep
