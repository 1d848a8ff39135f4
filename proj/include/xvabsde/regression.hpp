#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace xvabsde {

struct FitResult {
    VectorXd coeffs;
    double residual_norm = 0.0;   // ||design * g - targets|| / sqrt(N)
    double condition = 0.0;       // eigenvalue ratio of the (ridged) Gram matrix
    double ridge = 0.0;           // lambda actually applied
};

inline constexpr std::size_t kReductionBlock = 4096;

// Ridge of -1 requests the default lambda = 1e-8 * trace(G)/B.
// Normal equations are accumulated over fixed-size path blocks combined in
// index order, so the result is bit-stable under any parallel schedule.
inline FitResult ols_fit(const Eigen::Ref<const MatrixXd>& design,
                         const Eigen::Ref<const VectorXd>& targets, double ridge = -1.0) {
    const std::size_t N = static_cast<std::size_t>(design.rows());
    const std::size_t B = static_cast<std::size_t>(design.cols());
    if (static_cast<std::size_t>(targets.size()) != N) {
        throw std::invalid_argument("ols_fit: target length does not match design rows");
    }
    if (N == 0 || B == 0) throw std::invalid_argument("ols_fit: empty system");

    const std::size_t blocks = (N + kReductionBlock - 1) / kReductionBlock;
    std::vector<MatrixXd> gram_parts(blocks);
    std::vector<VectorXd> rhs_parts(blocks);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
        const std::size_t hi = std::min(N, lo + kReductionBlock);
        const auto rows = design.middleRows(lo, hi - lo);
        gram_parts[b].noalias() = rows.transpose() * rows;
        rhs_parts[b].noalias() = rows.transpose() * targets.segment(lo, hi - lo);
    }
    MatrixXd gram = MatrixXd::Zero(B, B);
    VectorXd rhs = VectorXd::Zero(B);
    for (std::size_t b = 0; b < blocks; ++b) {
        gram += gram_parts[b];
        rhs += rhs_parts[b];
    }

    double lambda = ridge;
    if (lambda < 0.0) lambda = 1e-8 * gram.trace() / static_cast<double>(B);
    if (lambda > 0.0) gram.diagonal().array() += lambda;

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
    const double ev_min = eig.eigenvalues().minCoeff();
    const double ev_max = eig.eigenvalues().maxCoeff();
    if (lambda == 0.0 &&
        ev_min <= static_cast<double>(B) * std::numeric_limits<double>::epsilon() * ev_max) {
        throw IllConditionedError(
            "ols_fit: design matrix is numerically rank deficient with lambda = 0; "
            "supply a positive ridge parameter");
    }

    FitResult fit;
    fit.ridge = lambda;
    fit.condition = ev_max / std::max(ev_min, std::numeric_limits<double>::min());
    fit.coeffs = eig.eigenvectors() *
                 (eig.eigenvectors().transpose() * rhs).cwiseQuotient(eig.eigenvalues());
    fit.residual_norm =
        (design * fit.coeffs - targets).norm() / std::sqrt(static_cast<double>(N));
    return fit;
}

}  // namespace xvabsde
